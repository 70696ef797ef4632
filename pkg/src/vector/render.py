"""
Scanline rasterizer for vector shapes, used to score the output.

Curves are flattened by adaptive de Casteljau subdivision; each shape is
filled with the nonzero winding rule, sampling at pixel centers.
"""

import math
from typing import List

import numpy as np

from .bezier import CubicBezier, VectorShape
from .svg import paint_order

FLATNESS = 0.1
MAX_DEPTH = 16
WHITE = (255, 255, 255)


def _flat_enough(cp: np.ndarray, tolerance: float) -> bool:
    chord = cp[3] - cp[0]
    length = math.hypot(chord[0], chord[1])
    if length == 0:
        return max(math.hypot(*(cp[1] - cp[0])), math.hypot(*(cp[2] - cp[0]))) <= tolerance
    d1 = abs(chord[0] * (cp[1][1] - cp[0][1]) - chord[1] * (cp[1][0] - cp[0][0])) / length
    d2 = abs(chord[0] * (cp[2][1] - cp[0][1]) - chord[1] * (cp[2][0] - cp[0][0])) / length
    return max(d1, d2) <= tolerance


def _subdivide(cp: np.ndarray, tolerance: float, depth: int, out: List[np.ndarray]):
    if depth >= MAX_DEPTH or _flat_enough(cp, tolerance):
        out.append(cp[3])
        return
    p01 = (cp[0] + cp[1]) / 2
    p12 = (cp[1] + cp[2]) / 2
    p23 = (cp[2] + cp[3]) / 2
    p012 = (p01 + p12) / 2
    p123 = (p12 + p23) / 2
    mid = (p012 + p123) / 2
    _subdivide(np.array([cp[0], p01, p012, mid]), tolerance, depth + 1, out)
    _subdivide(np.array([mid, p123, p23, cp[3]]), tolerance, depth + 1, out)


def flatten(loop: List[CubicBezier], tolerance: float = FLATNESS) -> np.ndarray:
    """Polyline (closed, first point not repeated) approximating a Bezier loop."""
    if not loop:
        return np.zeros((0, 2))
    points = [np.asarray(loop[0].p0, dtype=float)]
    for seg in loop:
        _subdivide(seg.control_points(), tolerance, 0, points)
    poly = np.array(points)
    if len(poly) > 1 and np.allclose(poly[0], poly[-1]):
        poly = poly[:-1]
    return poly


def fill_nonzero(polygons: List[np.ndarray], width: int, height: int) -> np.ndarray:
    """Pixels whose centers have nonzero winding number."""
    out = np.zeros((height, width), dtype=bool)
    starts, ends = [], []
    for poly in polygons:
        if len(poly) < 3:
            continue
        starts.append(poly)
        ends.append(np.roll(poly, -1, axis=0))
    if not starts:
        return out
    p0 = np.concatenate(starts)
    p1 = np.concatenate(ends)
    x0, y0, x1, y1 = p0[:, 0], p0[:, 1], p1[:, 0], p1[:, 1]
    sloped = y0 != y1
    x0, y0, x1, y1 = x0[sloped], y0[sloped], x1[sloped], y1[sloped]
    inv_slope = (x1 - x0) / (y1 - y0)
    centers_x = np.arange(width) + 0.5

    row_lo = max(int(math.floor(min(y0.min(), y1.min()))), 0)
    row_hi = min(int(math.ceil(max(y0.max(), y1.max()))), height)
    for r in range(row_lo, row_hi):
        yc = r + 0.5
        up = (y0 <= yc) & (yc < y1)
        down = (y1 <= yc) & (yc < y0)
        active = up | down
        if not active.any():
            continue
        xs = x0[active] + (yc - y0[active]) * inv_slope[active]
        dirs = np.where(up[active], 1, -1)
        order = np.argsort(xs, kind="stable")
        winding = np.concatenate([[0], np.cumsum(dirs[order])])
        count = np.searchsorted(xs[order], centers_x, side="left")
        out[r] = winding[count] != 0
    return out


def render_shapes(shapes: List[VectorShape], width: int, height: int) -> np.ndarray:
    """Paint shapes bottom first over a white canvas."""
    canvas = np.empty((height, width, 3), dtype=np.uint8)
    canvas[:] = WHITE
    for shape in paint_order(list(shapes)):
        polygons = [flatten(loop) for loop in shape.loops]
        canvas[fill_nonzero(polygons, width, height)] = shape.fill
    return canvas


def mse(rendered: np.ndarray, reference: np.ndarray) -> float:
    if rendered.shape != reference.shape:
        raise ValueError(f"shape mismatch {rendered.shape} vs {reference.shape}")
    diff = rendered.astype(np.float64) - reference.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(error: float) -> float:
    if error == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / error)
