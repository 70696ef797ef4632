"""
Convex hulls of binary masks by Graham scan.

Points are integer pixel coordinates (x = column, y = row). Vertex lists are
counterclockwise in that coordinate algebra, i.e. they have positive
shoelace area.
"""

from dataclasses import dataclass
from functools import cmp_to_key
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from ..errors import EmptyMaskError

Point = Tuple[int, int]


@dataclass
class HullPolygon:
    """Convex polygon plus its filled raster over the mask's grid."""
    vertices: List[Point]
    raster: np.ndarray  # bool, same shape as the source mask

    @property
    def area(self) -> int:
        return int(self.raster.sum())


def cross(o: Point, a: Point, b: Point) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def boundary_points(mask: np.ndarray) -> List[Point]:
    """Pixels of the mask with a 4-neighbor outside it (grid edge counts as outside)."""
    interior = ndimage.binary_erosion(mask, structure=ndimage.generate_binary_structure(2, 1),
                                      border_value=0)
    rows, cols = np.nonzero(mask & ~interior)
    return [(int(c), int(r)) for r, c in zip(rows, cols)]


def graham_scan(points: List[Point]) -> List[Point]:
    """Hull vertices; collinear points are dropped."""
    unique = sorted(set(points), key=lambda p: (p[1], p[0]))
    if len(unique) <= 2:
        return unique

    start = unique[0]  # lowest y, then leftmost

    def polar_order(a: Point, b: Point) -> int:
        turn = cross(start, a, b)
        if turn > 0:
            return -1
        if turn < 0:
            return 1
        da = (a[0] - start[0]) ** 2 + (a[1] - start[1]) ** 2
        db = (b[0] - start[0]) ** 2 + (b[1] - start[1]) ** 2
        return -1 if da < db else (1 if da > db else 0)

    ordered = sorted(unique[1:], key=cmp_to_key(polar_order))

    # keep only the farthest point on each ray from start
    rays: List[Point] = []
    for p in ordered:
        if rays and cross(start, rays[-1], p) == 0:
            rays[-1] = p
        else:
            rays.append(p)

    stack = [start]
    for p in rays:
        while len(stack) >= 2 and cross(stack[-2], stack[-1], p) <= 0:
            stack.pop()
        stack.append(p)
    while len(stack) >= 3 and cross(stack[-2], stack[-1], start) <= 0:
        stack.pop()
    return stack


def rasterize_polygon(vertices: List[Point], shape: Tuple[int, int]) -> np.ndarray:
    """Pixels whose centers lie inside or on the boundary of a convex polygon."""
    out = np.zeros(shape, dtype=bool)
    if not vertices:
        return out
    xs = [v[0] for v in vertices]
    ys = [v[1] for v in vertices]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    gy, gx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    gx = gx.astype(np.int64)
    gy = gy.astype(np.int64)

    if len(vertices) == 1:
        out[y0, x0] = True
        return out

    if len(vertices) == 2:
        (ax, ay), (bx, by) = vertices
        on_line = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax) == 0
        within = ((gx - ax) * (bx - ax) + (gy - ay) * (by - ay) >= 0) & \
                 ((gx - bx) * (ax - bx) + (gy - by) * (ay - by) >= 0)
        out[y0:y1 + 1, x0:x1 + 1] = on_line & within
        return out

    inside = np.ones(gx.shape, dtype=bool)
    n = len(vertices)
    for k in range(n):
        ax, ay = vertices[k]
        bx, by = vertices[(k + 1) % n]
        inside &= (bx - ax) * (gy - ay) - (by - ay) * (gx - ax) >= 0
    out[y0:y1 + 1, x0:x1 + 1] = inside
    return out


def convex_hull(mask: np.ndarray) -> HullPolygon:
    """Graham scan over the mask's boundary pixels plus the filled hull raster."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("convex hull of an empty mask")
    vertices = graham_scan(boundary_points(mask))
    raster = rasterize_polygon(vertices, mask.shape)
    raster |= mask  # mask ⊆ raster
    return HullPolygon(vertices=vertices, raster=raster)
