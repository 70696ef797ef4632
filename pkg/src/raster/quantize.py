"""
K-means color quantization.

Clustering runs over the distinct colors of the image weighted by their pixel
counts, which gives the same centroids as clustering every pixel but touches
each color once.
"""

import logging
from typing import Tuple

import numpy as np
from sklearn.cluster import KMeans

from .image import RasterImage, QuantizedImage, Palette
from ..errors import QuantizationError

logger = logging.getLogger(__name__)


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def distinct_colors(img: RasterImage) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct colors, the inverse index of every pixel, and per-color counts."""
    flat = img.pixels.reshape(-1, 3)
    colors, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
    return colors, inverse.reshape(-1), counts


def kmeans_quantize(img: RasterImage, K: int = 16, seed: int = 0,
                    max_iters: int = 100) -> QuantizedImage:
    """Quantize img to K colors; deterministic for a given seed."""
    if K < 1:
        raise QuantizationError(f"K must be at least 1, got {K}")

    colors, inverse, counts = distinct_colors(img)
    if K > len(colors):
        raise QuantizationError(
            f"K={K} exceeds the {len(colors)} distinct colors in the image"
        )

    points = colors.astype(np.float64)
    kmeans = KMeans(n_clusters=K, init="k-means++", n_init=1, max_iter=max_iters,
                    random_state=seed)
    kmeans.fit(points, sample_weight=counts.astype(np.float64))
    logger.debug("k-means finished after %d iterations, inertia %.1f", kmeans.n_iter_, kmeans.inertia_)

    rounded = np.clip(np.rint(kmeans.cluster_centers_), 0, 255).astype(np.int64)
    palette_colors = []
    for c in rounded:
        t = tuple(int(v) for v in c)
        if t not in palette_colors:
            palette_colors.append(t)
    if len(palette_colors) < K:
        logger.warning("k-means palette collapsed from %d to %d colors after rounding",
                       K, len(palette_colors))

    palette = Palette(palette_colors)
    # Nearest rounded entry; argmin breaks ties toward the lowest index.
    color_labels = _squared_distances(points, palette.as_array().astype(np.float64)).argmin(axis=1)
    labels = color_labels[inverse].reshape(img.height, img.width)

    return QuantizedImage(width=img.width, height=img.height, labels=labels, palette=palette)
