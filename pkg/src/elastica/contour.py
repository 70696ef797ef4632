"""
Level-set extraction of inpainted shapes.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from skimage import measure

from .region import CoveredRegion
from .solver import PhaseField
from ..geometry.energy import HullCache
from ..geometry.hull import convex_hull
from ..layers.extraction import LayerSet
from ..errors import EmptyMaskError


@dataclass
class InpaintedShape:
    """Convexified mask C_i and its boundary loops in (x, y) pixel-edge coordinates."""
    layer_id: int
    mask: np.ndarray
    loops: List[np.ndarray] = field(default_factory=list)
    pinned: List[np.ndarray] = field(default_factory=list)  # per loop: point lies between fixed pixels
    shortcut: bool = False

    @property
    def area(self) -> int:
        return int(self.mask.sum())


def signed_area(loop: np.ndarray) -> float:
    """Shoelace area; positive means clockwise on screen (y pointing down)."""
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _pinned_flags(contour: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    """True where a padded-grid contour point splits two fixed pixels."""
    r, c = contour[:, 0], contour[:, 1]
    on_row = np.isclose(r, np.round(r))
    r0 = np.where(on_row, np.round(r), np.floor(r)).astype(int)
    r1 = np.where(on_row, np.round(r), np.ceil(r)).astype(int)
    c0 = np.where(on_row, np.floor(c), np.round(c)).astype(int)
    c1 = np.where(on_row, np.ceil(c), np.round(c)).astype(int)
    r0, r1 = np.clip(r0, 0, fixed.shape[0] - 1), np.clip(r1, 0, fixed.shape[0] - 1)
    c0, c1 = np.clip(c0, 0, fixed.shape[1] - 1), np.clip(c1, 0, fixed.shape[1] - 1)
    return fixed[r0, c0] & fixed[r1, c1]


def _loops(u: np.ndarray, level: float,
           fixed: Optional[np.ndarray] = None) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Boundary loops in (x, y) and, per loop, which points are pinned."""
    padded = np.pad(u, 1, constant_values=level - 1.0)
    if fixed is None:
        fixed = np.zeros(u.shape, dtype=bool)
    fixed = np.pad(fixed, 1, constant_values=True)
    loops, pinned = [], []
    for contour in measure.find_contours(padded, level, positive_orientation="high"):
        if len(contour) > 1 and np.allclose(contour[0], contour[-1]):
            contour = contour[:-1]
        if len(contour) < 3:
            continue
        # padded (row, col) -> (x, y) on pixel edges
        loops.append(np.column_stack([contour[:, 1] - 0.5, contour[:, 0] - 0.5]))
        pinned.append(_pinned_flags(contour, fixed))
    if loops:
        outer = max(loops, key=lambda lp: abs(signed_area(lp)))
        if signed_area(outer) < 0:
            loops = [lp[::-1].copy() for lp in loops]
            pinned = [flags[::-1].copy() for flags in pinned]
    return loops, pinned


def extract_contour(pf: PhaseField, level: float = 0.0) -> InpaintedShape:
    """Isocontour {u = level} and the superlevel mask {u > level}."""
    if not -1.0 < level < 1.0:
        raise ValueError(f"level must lie strictly inside (-1, 1), got {level}")
    mask = pf.u > level
    if not mask.any():
        raise EmptyMaskError(f"layer {pf.layer_id}: empty superlevel set at level {level}")
    loops, pinned = _loops(pf.u, level, pf.fixed)
    return InpaintedShape(layer_id=pf.layer_id, mask=mask, loops=loops, pinned=pinned)


def trace_mask(mask: np.ndarray, layer_id: int = -1) -> InpaintedShape:
    """Boundary loops of a binary mask without inpainting; every point is pinned."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError(f"layer {layer_id}: nothing to trace")
    u = np.where(mask, 1.0, -1.0)
    loops, pinned = _loops(u, 0.0, np.ones(mask.shape, dtype=bool))
    return InpaintedShape(layer_id=layer_id, mask=mask, loops=loops, pinned=pinned)


def small_shape_shortcut(layer_id: int, region: CoveredRegion, layer_set: LayerSet,
                         cache: Optional[HullCache] = None) -> InpaintedShape:
    """Conv(S_i) ∩ O_i, used in place of the solver for small layers."""
    layer = layer_set.layers[layer_id]
    hull = cache.get(layer) if cache is not None else convex_hull(layer.mask)
    mask = hull.raster & region.mask
    shape = trace_mask(mask, layer_id)
    shape.shortcut = True
    return shape
