"""
Cubic Bezier fitting of closed contours.

Contours are split at curvature extrema; each arc between two consecutive
split points is fitted greedily: fit the whole remaining arc, and while the
fit misses a point by more than the tolerance, pull the right end back to
the worst point.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Point = Tuple[float, float]

CURVE_SAMPLES = 64


@dataclass
class Contour:
    """Closed ordered loop of (x, y) points; the last point connects to the first."""
    points: np.ndarray
    pinned: Optional[np.ndarray] = None  # bool per point

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(self.points) < 3:
            raise ValueError(f"a contour needs at least 3 points, got {len(self.points)}")
        if self.pinned is not None:
            self.pinned = np.asarray(self.pinned, dtype=bool)
            if self.pinned.shape != (len(self.points),):
                raise ValueError("pinned flags must match the contour points")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class CubicBezier:
    p0: Point
    p1: Point
    p2: Point
    p3: Point

    def control_points(self) -> np.ndarray:
        return np.array([self.p0, self.p1, self.p2, self.p3], dtype=float)

    def evaluate(self, t) -> np.ndarray:
        """Curve points for parameter values t (scalar or 1-d array)."""
        t = np.atleast_1d(np.asarray(t, dtype=float)).reshape(-1, 1)
        s = 1.0 - t
        cp = self.control_points()
        return (s ** 3) * cp[0] + 3 * (s ** 2) * t * cp[1] + 3 * s * (t ** 2) * cp[2] + (t ** 3) * cp[3]


@dataclass
class VectorShape:
    """Filled shape made of closed Bezier loops."""
    layer_id: int
    loops: List[List[CubicBezier]]
    fill: Tuple[int, int, int]
    depth_rank: int
    source: str = "layer"  # "layer" or "noise"

    @property
    def segment_count(self) -> int:
        return sum(len(loop) for loop in self.loops)

    @property
    def fill_hex(self) -> str:
        return "#{:02x}{:02x}{:02x}".format(*self.fill)


def discrete_curvature(points: np.ndarray, h: int = 3) -> np.ndarray:
    """Three-point curvature with step h on a closed loop."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if h < 1 or 2 * h >= n:
        raise ValueError(f"step h={h} needs 1 <= h and 2h < {n}")

    a = np.roll(points, h, axis=0) - points    # p_{k-h} - p_k
    b = np.roll(points, -h, axis=0) - points   # p_{k+h} - p_k
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    denom = np.hypot(a[:, 0], a[:, 1]) * np.hypot(b[:, 0], b[:, 1]) * \
        np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1])
    kappa = np.zeros(n)
    nonzero = denom > 0
    kappa[nonzero] = -2.0 * det[nonzero] / denom[nonzero]
    return kappa


def find_extrema(kappa: np.ndarray, threshold: float = 1.25) -> List[int]:
    """Local maxima of |kappa| above the threshold, or [0] when there are none."""
    mag = np.abs(np.asarray(kappa, dtype=float))
    above = mag > threshold
    if not above.any():
        return [0]
    prev = np.roll(mag, 1)
    nxt = np.roll(mag, -1)
    peaks = np.flatnonzero(above & (mag >= prev) & (mag > nxt))
    if len(peaks) == 0:
        # constant plateau over the whole loop
        return [int(np.argmax(mag))]
    return [int(i) for i in peaks]


def chord_parameters(points: np.ndarray) -> np.ndarray:
    steps = np.hypot(*np.diff(points, axis=0).T)
    cumulative = np.concatenate([[0.0], np.cumsum(steps)])
    if cumulative[-1] == 0:
        return np.linspace(0.0, 1.0, len(points))
    return cumulative / cumulative[-1]


def _straight(p0: np.ndarray, p3: np.ndarray) -> CubicBezier:
    return CubicBezier(tuple(p0), tuple(p0 + (p3 - p0) / 3.0),
                       tuple(p0 + 2.0 * (p3 - p0) / 3.0), tuple(p3))


def fit_segment(points: np.ndarray, params: Optional[Sequence[float]] = None) -> CubicBezier:
    """Least-squares cubic through fixed end points."""
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        raise ValueError("fit_segment needs at least 2 points")
    p0, p3 = points[0], points[-1]
    if len(points) == 2:
        return _straight(p0, p3)

    t = chord_parameters(points) if params is None else np.asarray(params, dtype=float)
    s = 1.0 - t
    basis = np.column_stack([3 * s * s * t, 3 * s * t * t])
    rhs = points - np.outer(s ** 3, p0) - np.outer(t ** 3, p3)
    solution, _, rank, _ = np.linalg.lstsq(basis, rhs, rcond=None)
    if rank < 2:
        return _straight(p0, p3)
    return CubicBezier(tuple(p0), tuple(solution[0]), tuple(solution[1]), tuple(p3))


def point_distances(points: np.ndarray, segment: CubicBezier,
                    samples: int = CURVE_SAMPLES) -> np.ndarray:
    """Distance from each point to the flattened curve."""
    points = np.asarray(points, dtype=float)
    curve = segment.evaluate(np.linspace(0.0, 1.0, samples))
    start = curve[:-1]
    edge = curve[1:] - start
    length_sq = (edge * edge).sum(axis=1)
    length_sq[length_sq == 0] = 1.0

    rel = points[:, None, :] - start[None, :, :]
    t = np.clip((rel * edge[None]).sum(axis=2) / length_sq[None], 0.0, 1.0)
    nearest = start[None] + t[..., None] * edge[None]
    return np.hypot(*(points[:, None, :] - nearest).transpose(2, 0, 1)).min(axis=1)


def hausdorff_to_curve(points: np.ndarray, segment: CubicBezier,
                       samples: int = CURVE_SAMPLES) -> Tuple[float, int]:
    """Largest point-to-curve distance and the index of the worst point."""
    dist = point_distances(points, segment, samples)
    worst = int(np.argmax(dist))
    return float(dist[worst]), worst


def _fit_arc(arc: np.ndarray, tolerance: np.ndarray) -> List[CubicBezier]:
    """Greedy split of an arc; tolerance holds one bound per arc point."""
    segments = []
    last = len(arc) - 1
    s1, s2 = 0, last
    while s1 < last:
        segment = fit_segment(arc[s1:s2 + 1])
        excess = point_distances(arc[s1:s2 + 1], segment) - tolerance[s1:s2 + 1]
        worst = int(np.argmax(excess))
        if excess[worst] > 0 and s2 - s1 > 1:
            s2 = s1 + (worst if 0 < worst < s2 - s1 else (s2 - s1) // 2)
            continue
        segments.append(segment)
        s1, s2 = s2, last
    return segments


def fit_contour(contour: Contour, threshold: float = 1.25, tolerance: float = 1.0,
                h: int = 3, pixel_tol: Optional[float] = None) -> List[CubicBezier]:
    """Closed loop of cubic segments through the contour's curvature extrema.

    Pinned points (on a pixel edge between two fixed pixels) are held to
    pixel_tol when it is given; the rest to tolerance.
    """
    points = contour.points
    n = len(points)
    step = min(h, (n - 1) // 2)
    splits = sorted(find_extrema(discrete_curvature(points, step), threshold))

    bounds = np.full(n, float(tolerance))
    if pixel_tol is not None and contour.pinned is not None:
        bounds[contour.pinned] = min(pixel_tol, tolerance)

    segments: List[CubicBezier] = []
    for k, start in enumerate(splits):
        end = splits[(k + 1) % len(splits)]
        if end <= start:
            end += n
        index = np.arange(start, end + 1) % n
        segments.extend(_fit_arc(points[index], bounds[index]))
    return segments


def fit_shape(loops: List[np.ndarray], layer_id: int, fill: Tuple[int, int, int],
              depth_rank: int, threshold: float = 1.25, tolerance: float = 1.0,
              h: int = 3, source: str = "layer", pinned: Optional[List[np.ndarray]] = None,
              pixel_tol: Optional[float] = None) -> VectorShape:
    if pinned is None:
        pinned = [None] * len(loops)
    fitted = [fit_contour(Contour(loop, flags), threshold, tolerance, h, pixel_tol)
              for loop, flags in zip(loops, pinned) if len(loop) >= 3]
    shape = VectorShape(layer_id=layer_id, loops=fitted, fill=fill, depth_rank=depth_rank, source=source)
    logger.debug("layer %d: %d loops, %d segments", layer_id, len(fitted), shape.segment_count)
    return shape
