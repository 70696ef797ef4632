"""
Area-based depth energies between shape layers.

All measures are pixel counts on the discrete grid:

    A(i, j) = |Conv(S_j) ∩ S_i| / |S_i|        covered area
    D(i, j) = A(i, j) - A(j, i)                 depth energy, > 0 means S_i above S_j
    V(i, j) = |S_i| + |S_j| - |Conv(S_j) ∩ S_i| hull symmetric difference
"""

import math
from enum import Enum
from typing import Dict, Optional

import numpy as np

from .hull import HullPolygon, convex_hull
from ..layers.extraction import ShapeLayer
from ..errors import EmptyMaskError, DegenerateTriangleError


class OrderingRelation(Enum):
    ABOVE = "above"
    BELOW = "below"
    SAME_LEVEL = "same_level"


class HullCache:
    """Lazily computed hull per layer id."""

    def __init__(self):
        self._hulls: Dict[int, HullPolygon] = {}

    def get(self, layer: ShapeLayer) -> HullPolygon:
        if layer.id not in self._hulls:
            self._hulls[layer.id] = convex_hull(layer.mask)
        return self._hulls[layer.id]

    def clear(self):
        self._hulls.clear()


def _check(layer: ShapeLayer) -> int:
    area = layer.area
    if area == 0:
        raise EmptyMaskError(f"layer {layer.id} is empty")
    return area


def _hull_of(layer: ShapeLayer, cache: Optional[HullCache]) -> HullPolygon:
    return cache.get(layer) if cache is not None else convex_hull(layer.mask)


def hull_overlap(i: ShapeLayer, j: ShapeLayer, cache: Optional[HullCache] = None) -> int:
    """|Conv(S_j) ∩ S_i|."""
    return int((_hull_of(j, cache).raster & i.mask).sum())


def covered_area(i: ShapeLayer, j: ShapeLayer, cache: Optional[HullCache] = None) -> float:
    """Fraction of S_i inside the convex hull of S_j."""
    area_i = _check(i)
    _check(j)
    return hull_overlap(i, j, cache) / area_i


def depth_energy(i: ShapeLayer, j: ShapeLayer, cache: Optional[HullCache] = None) -> float:
    return covered_area(i, j, cache) - covered_area(j, i, cache)


def classify(D: float, delta: float = 0.05) -> OrderingRelation:
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    if D > delta:
        return OrderingRelation.ABOVE
    if D < -delta:
        return OrderingRelation.BELOW
    return OrderingRelation.SAME_LEVEL


def hull_symmetric_difference(i: ShapeLayer, j: ShapeLayer,
                              cache: Optional[HullCache] = None) -> int:
    """V(i, j) in pixels."""
    area_i = _check(i)
    area_j = _check(j)
    return area_i + area_j - hull_overlap(i, j, cache)


def subset_shortcut(i: ShapeLayer, j: ShapeLayer,
                    cache: Optional[HullCache] = None) -> Optional[OrderingRelation]:
    """ABOVE when every pixel of S_i lies in Conv(S_j), otherwise None."""
    if not (i.mask & ~_hull_of(j, cache).raster).any():
        return OrderingRelation.ABOVE
    return None


def bounding_triangle_area(L: float, theta0: float, thetaL: float) -> float:
    """Area of the triangle over a gap of length L with base angles theta0, thetaL."""
    total = theta0 + thetaL
    if theta0 < 0 or thetaL < 0 or theta0 > math.pi / 2 or thetaL > math.pi / 2:
        raise DegenerateTriangleError(
            f"angles must lie in [0, pi/2], got {theta0}, {thetaL}"
        )
    if total <= 0 or math.isclose(total, math.pi) or math.isclose(math.sin(total), 0.0, abs_tol=1e-15):
        raise DegenerateTriangleError(f"degenerate angle sum {total}")
    return (L * L / 2.0) * math.sin(theta0) * math.sin(thetaL) / math.sin(total)


def in_bounding_triangle(point: np.ndarray, start: np.ndarray, end: np.ndarray,
                         theta0: float, thetaL: float, side: float = 1.0,
                         tolerance: float = 0.0) -> bool:
    """Whether a point lies in the triangle on the given side of start->end.

    side=+1 puts the apex to the left of the chord direction (positive cross
    product in x/y coordinates), -1 to the right.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    chord = end - start
    L = float(np.hypot(*chord))
    u = chord / L
    n = side * np.array([-u[1], u[0]])
    # apex from the two base angles
    along = L * math.sin(thetaL) * math.cos(theta0) / math.sin(theta0 + thetaL)
    height = L * math.sin(theta0) * math.sin(thetaL) / math.sin(theta0 + thetaL)
    apex = start + along * u + height * n

    tri = [start, end, apex]
    p = np.asarray(point, dtype=float)
    signs = []
    for k in range(3):
        a, b = tri[k], tri[(k + 1) % 3]
        edge = b - a
        length = float(np.hypot(*edge)) or 1.0
        signs.append((edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])) / length)
    orientation = 1.0 if side > 0 else -1.0
    return all(orientation * s >= -tolerance for s in signs)
