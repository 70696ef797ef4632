"""
Shape layer extraction and noise layer detection.

A shape layer is a 4-connected component of one palette color (or, in
grouping mode, every pixel of one palette color). Small components wedged
between differently colored layers form the noise layer.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from scipy import ndimage

from ..raster.image import QuantizedImage
from ..errors import NoiseThresholdError

logger = logging.getLogger(__name__)

# 4-neighborhood structuring element
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass
class ShapeLayer:
    """One stackable region: mask, palette color and bookkeeping."""
    id: int
    mask: np.ndarray  # (height, width) bool
    color_index: int
    injected: bool = False  # added by grouping quantization

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    @property
    def bbox(self) -> Tuple[int, int, int, int]:
        """(min_row, max_row, min_col, max_col), inclusive."""
        rows = np.flatnonzero(self.mask.any(axis=1))
        cols = np.flatnonzero(self.mask.any(axis=0))
        return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])

    def first_pixel(self) -> int:
        """Flat index of the first set pixel in raster order."""
        return int(np.argmax(self.mask.reshape(-1)))


@dataclass
class NoiseLayer:
    """Union of the noisy components."""
    mask: np.ndarray
    components: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def empty(cls, shape: Tuple[int, int]) -> "NoiseLayer":
        return cls(mask=np.zeros(shape, dtype=bool), components=[])


@dataclass
class LayerSet:
    """Shape layers plus the noise layer over one quantized image."""
    layers: List[ShapeLayer]
    noise: NoiseLayer
    source: QuantizedImage

    @property
    def shape(self) -> Tuple[int, int]:
        return self.source.height, self.source.width

    def __len__(self) -> int:
        return len(self.layers)

    def renumber(self):
        """Make layer ids contiguous in list order."""
        for i, layer in enumerate(self.layers):
            layer.id = i

    def label_map(self) -> np.ndarray:
        """Layer id per pixel, -1 for noise; later layers win where masks overlap."""
        out = np.full(self.shape, -1, dtype=np.int32)
        for layer in self.layers:
            out[layer.mask] = layer.id
        return out

    def adjacent_pairs(self) -> Set[Tuple[int, int]]:
        """Unordered pairs (i < j) of layers sharing a 4-neighborhood boundary."""
        pairs: Set[Tuple[int, int]] = set()

        # Disjoint layers: read pairs straight off the label map.
        base = np.full(self.shape, -1, dtype=np.int32)
        for layer in self.layers:
            if not layer.injected:
                base[layer.mask] = layer.id
        for a, b in ((base[:, :-1], base[:, 1:]), (base[:-1, :], base[1:, :])):
            touching = (a != b) & (a >= 0) & (b >= 0)
            for i, j in np.unique(np.stack([a[touching], b[touching]], axis=1), axis=0):
                pairs.add((int(min(i, j)), int(max(i, j))))

        # Injected layers overlap others, so test them mask by mask.
        for layer in self.layers:
            if not layer.injected:
                continue
            grown = ndimage.binary_dilation(layer.mask, structure=FOUR_CONNECTED)
            for other in self.layers:
                if other.id != layer.id and (grown & other.mask).any():
                    pairs.add((min(layer.id, other.id), max(layer.id, other.id)))
        return pairs


def _components(mask: np.ndarray) -> List[np.ndarray]:
    labeled, count = ndimage.label(mask, structure=FOUR_CONNECTED)
    return [labeled == k for k in range(1, count + 1)]


def extract_layers(q: QuantizedImage, group_same_color: bool = False) -> LayerSet:
    """Split a quantized image into shape layers; ids follow raster scan order."""
    found: List[ShapeLayer] = []

    for color_index in range(len(q.palette)):
        color_mask = q.labels == color_index
        if not color_mask.any():
            continue
        if group_same_color:
            found.append(ShapeLayer(id=-1, mask=color_mask, color_index=color_index))
        else:
            for comp in _components(color_mask):
                found.append(ShapeLayer(id=-1, mask=comp, color_index=color_index))

    found.sort(key=lambda layer: layer.first_pixel())
    layer_set = LayerSet(layers=found, noise=NoiseLayer.empty((q.height, q.width)), source=q)
    layer_set.renumber()
    logger.info("extracted %d shape layers", len(found))
    return layer_set


def _neighbor_colors(layer: ShapeLayer, label_map: np.ndarray,
                     colors: Dict[int, int]) -> Set[int]:
    ring = ndimage.binary_dilation(layer.mask, structure=FOUR_CONNECTED) & ~layer.mask
    neighbor_ids = np.unique(label_map[ring])
    return {colors[int(n)] for n in neighbor_ids if n >= 0 and int(n) != layer.id}


def is_noise(layer: ShapeLayer, label_map: np.ndarray, colors: Dict[int, int],
             noise_area: int) -> bool:
    """Both noise conditions: small, and touching layers of two or more colors."""
    if layer.area > noise_area:
        return False
    return len(_neighbor_colors(layer, label_map, colors)) >= 2


def detect_noise(layer_set: LayerSet, noise_area: int = 10) -> LayerSet:
    """Move every noisy layer into the noise layer and renumber the rest."""
    label_map = layer_set.label_map()
    colors = {layer.id: layer.color_index for layer in layer_set.layers}

    # Classify against the original neighborhood so the result is order-independent.
    flags = [is_noise(layer, label_map, colors, noise_area) for layer in layer_set.layers]
    if layer_set.layers and all(flags):
        raise NoiseThresholdError(
            f"noise_area={noise_area} classifies all {len(flags)} layers as noise"
        )

    kept = [layer for layer, noisy in zip(layer_set.layers, flags) if not noisy]
    noisy = [layer.mask for layer, noisy in zip(layer_set.layers, flags) if noisy]

    noise_mask = layer_set.noise.mask.copy()
    for comp in noisy:
        noise_mask |= comp
    noise = NoiseLayer(mask=noise_mask, components=layer_set.noise.components + noisy)

    if noisy:
        logger.info("moved %d small components into the noise layer", len(noisy))

    result = LayerSet(layers=kept, noise=noise, source=layer_set.source)
    result.renumber()
    return result


def noise_component_color(component: np.ndarray, q: QuantizedImage) -> int:
    """Most frequent palette index inside a noise component (lowest index on ties)."""
    counts = np.bincount(q.labels[component], minlength=len(q.palette))
    return int(np.argmax(counts))


def layer_by_id(layer_set: LayerSet, layer_id: int) -> Optional[ShapeLayer]:
    for layer in layer_set.layers:
        if layer.id == layer_id:
            return layer
    return None
