"""
Shape-covered regions and inpainting corners.

O_i is where layer i may grow: itself, every layer ranked above it and the
noise layer. The corners are the endpoints of the boundary arcs of S_i that
border O_i \\ S_i; each carries a small phase disk telling the solver which
side to fill (+1) and which side to keep empty (-1).
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from skimage import measure

from ..depth.graph import DepthOrdering
from ..layers.extraction import LayerSet

# tangents this close to opposite count as a hairpin
ANTIPARALLEL_COS = -0.999


@dataclass
class CoveredRegion:
    mask: np.ndarray  # bool


@dataclass
class InpaintCorner:
    """Inpainting endpoint with its phase disk."""
    point: Tuple[int, int]        # (row, col) of the boundary pixel in S_i
    pre_normal: np.ndarray        # unit (x, y)
    post_normal: np.ndarray       # unit (x, y)
    radius: int
    phase: np.ndarray             # (2r+1, 2r+1) int8 in {-1, 0, 1}
    support: np.ndarray           # (2r+1, 2r+1) bool: disk pixels inside the image
    degenerate: bool = False

    def window(self, shape: Tuple[int, int]) -> Tuple[slice, slice, slice, slice]:
        """Slices mapping the disk grid onto an image of the given shape."""
        r0, c0 = self.point[0] - self.radius, self.point[1] - self.radius
        size = 2 * self.radius + 1
        top, left = max(r0, 0), max(c0, 0)
        bottom, right = min(r0 + size, shape[0]), min(c0 + size, shape[1])
        return (slice(top, bottom), slice(left, right),
                slice(top - r0, bottom - r0), slice(left - c0, right - c0))


def covered_region(layer_id: int, ordering: DepthOrdering, layer_set: LayerSet) -> CoveredRegion:
    """Union of every layer at or above layer_id, plus the noise layer."""
    own_rank = ordering.rank[layer_id]
    mask = layer_set.noise.mask.copy()
    for layer in layer_set.layers:
        if ordering.rank[layer.id] <= own_rank:
            mask |= layer.mask
    return CoveredRegion(mask=mask)


@dataclass
class BoundaryLoop:
    """Ordered boundary samples of a mask with the pixel pair each sample splits."""
    points: np.ndarray    # (n, 2) (row, col), half-pixel positions
    inside: np.ndarray    # (n, 2) int pixel in the mask
    outside: np.ndarray   # (n, 2) int 4-neighbor outside the mask (may be off-grid)


def trace_boundary(mask: np.ndarray) -> List[BoundaryLoop]:
    """Closed boundary loops of a mask from marching squares at 0.5."""
    padded = np.pad(mask.astype(float), 1, constant_values=0.0)
    loops = []
    for contour in measure.find_contours(padded, 0.5):
        pts = contour[:-1] - 1.0 if len(contour) > 1 and np.allclose(contour[0], contour[-1]) \
            else contour - 1.0
        if len(pts) < 2:
            continue
        inside = np.zeros((len(pts), 2), dtype=int)
        outside = np.zeros((len(pts), 2), dtype=int)
        for k, (r, c) in enumerate(pts):
            if abs(r - np.floor(r) - 0.5) < 0.25:
                a = (int(np.floor(r)), int(round(c)))
                b = (int(np.ceil(r)), int(round(c)))
            else:
                a = (int(round(r)), int(np.floor(c)))
                b = (int(round(r)), int(np.ceil(c)))
            if _get(mask, a):
                inside[k], outside[k] = a, b
            else:
                inside[k], outside[k] = b, a
        loops.append(BoundaryLoop(points=pts, inside=inside, outside=outside))
    return loops


def _get(mask: np.ndarray, rc: Tuple[int, int]) -> bool:
    r, c = rc
    return 0 <= r < mask.shape[0] and 0 <= c < mask.shape[1] and bool(mask[r, c])


def _runs(flags: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal cyclic runs of True as (first, last) index pairs."""
    n = len(flags)
    if flags.all() or not flags.any():
        return []
    start = int(np.argmin(flags))  # begin scanning at a False sample
    runs = []
    k = 0
    while k < n:
        idx = (start + k) % n
        if flags[idx]:
            first = idx
            while flags[(start + k) % n] and k < n:
                k += 1
            runs.append((first, (start + k - 1) % n))
        else:
            k += 1
    return runs


def _unit_normal(tangent: np.ndarray, outward: np.ndarray) -> np.ndarray:
    norm = np.hypot(*tangent)
    if norm == 0:
        return np.zeros(2)
    normal = np.array([tangent[1], -tangent[0]]) / norm
    if normal @ outward < 0:
        normal = -normal
    return normal


def corner_phase(point: Tuple[int, int], pre_normal: np.ndarray, post_normal: np.ndarray,
                 radius: int, shape_mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Phase disk: 0 on S_i, -1 in front of both normals, +1 elsewhere."""
    size = 2 * radius + 1
    dy, dx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    disk = dx * dx + dy * dy <= radius * radius

    rows = dy + point[0]
    cols = dx + point[1]
    on_grid = (rows >= 0) & (rows < shape_mask.shape[0]) & (cols >= 0) & (cols < shape_mask.shape[1])
    support = disk & on_grid
    in_shape = np.zeros((size, size), dtype=bool)
    in_shape[on_grid] = shape_mask[rows[on_grid], cols[on_grid]]

    degenerate = (not pre_normal.any() or not post_normal.any()
                  or float(pre_normal @ post_normal) <= ANTIPARALLEL_COS)

    phase = np.ones((size, size), dtype=np.int8)
    if not degenerate:
        front = (pre_normal[0] * dx + pre_normal[1] * dy >= 0) & \
                (post_normal[0] * dx + post_normal[1] * dy >= 0)
        phase[front] = -1
    phase[in_shape] = 0
    phase[~support] = 0
    return phase, support, degenerate


def find_corners(layer_id: int, region: CoveredRegion, layer_set: LayerSet,
                 radius: int = 5, window: int = 4) -> List[InpaintCorner]:
    """Endpoints of the boundary arcs of S_i that face O_i \\ S_i."""
    shape_mask = layer_set.layers[layer_id].mask
    free = region.mask & ~shape_mask
    corners: List[InpaintCorner] = []

    for loop in trace_boundary(shape_mask):
        n = len(loop.points)
        flags = np.array([_get(free, tuple(o)) for o in loop.outside])
        xy = loop.points[:, ::-1]  # (x, y)
        for first, last in _runs(flags):
            for k in (first, last):
                pre = xy[k] - xy[(k - window) % n]
                post = xy[(k + window) % n] - xy[k]
                inside = loop.inside[k]
                outward = (loop.outside[k] - inside)[::-1].astype(float)
                pre_n = _unit_normal(pre, outward)
                post_n = _unit_normal(post, outward)
                point = (int(inside[0]), int(inside[1]))
                phase, support, degenerate = corner_phase(point, pre_n, post_n, radius, shape_mask)
                corners.append(InpaintCorner(
                    point=point, pre_normal=pre_n, post_normal=post_n, radius=radius,
                    phase=phase, support=support, degenerate=degenerate,
                ))
    return corners
