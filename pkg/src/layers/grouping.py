"""
Grouping quantization.

Segments the quantized image into a few coarse phases by minimizing

    mu * (sum_i P_i / |phi_i|) * (sum_i P_i) + sum_i sum_{x in phi_i} |f(x) - c_i|^2

with raster-order pixel sweeps, then turns the connected pieces of every phase
into extra shape layers and drops the original layers they make redundant.
Colors are scaled to [0, 1]; P_i counts 4-neighbor edges between a pixel of
phase i and a pixel of another phase.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from .extraction import LayerSet, ShapeLayer, FOUR_CONNECTED
from ..raster.image import QuantizedImage

logger = logging.getLogger(__name__)

NEIGHBOR_OFFSETS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass
class PhaseStats:
    """Running sums for one phase."""
    count: int
    color_sum: List[float]
    square_sum: float
    perimeter: int

    def fidelity(self) -> float:
        if self.count == 0:
            return 0.0
        s = self.color_sum
        return self.square_sum - (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]) / self.count


def segmentation_energy(stats: List[PhaseStats], mu: float) -> float:
    """Energy of a phase configuration from its running sums."""
    ratio = 0.0
    total_perimeter = 0
    fidelity = 0.0
    for st in stats:
        if st.count == 0:
            continue
        ratio += st.perimeter / st.count
        total_perimeter += st.perimeter
        fidelity += st.fidelity()
    return mu * ratio * total_perimeter + fidelity


def labeling_energy(image: np.ndarray, phases: np.ndarray, mu: float) -> float:
    """Energy of an explicit labeling (reference evaluation, used by tests)."""
    return segmentation_energy(_collect_stats(image, phases), mu)


def _collect_stats(image: np.ndarray, phases: np.ndarray) -> List[PhaseStats]:
    k = int(phases.max()) + 1
    stats = []
    flat_img = image.reshape(-1, 3)
    flat_ph = phases.reshape(-1)
    for i in range(k):
        members = flat_ph == i
        px = flat_img[members]
        stats.append(PhaseStats(
            count=int(members.sum()),
            color_sum=[float(v) for v in px.sum(axis=0)] if len(px) else [0.0, 0.0, 0.0],
            square_sum=float((px ** 2).sum()),
            perimeter=0,
        ))
    for a, b in ((phases[:, :-1], phases[:, 1:]), (phases[:-1, :], phases[1:, :])):
        differ = a != b
        for i in range(k):
            stats[i].perimeter += int((differ & (a == i)).sum() + (differ & (b == i)).sum())
    return stats


def _edge_deltas(phases: np.ndarray, r: int, c: int, source: int, target: int,
                 k: int) -> List[int]:
    """Perimeter change per phase when pixel (r, c) moves from source to target."""
    height, width = phases.shape
    delta = [0] * k
    for dr, dc in NEIGHBOR_OFFSETS:
        nr, nc = r + dr, c + dc
        if nr < 0 or nr >= height or nc < 0 or nc >= width:
            continue
        other = int(phases[nr, nc])
        if other != source:
            delta[source] -= 1
            delta[other] -= 1
        if other != target:
            delta[target] += 1
            delta[other] += 1
    return delta


def _moved(stats: List[PhaseStats], source: int, target: int, pixel: np.ndarray,
           deltas: List[int]) -> List[PhaseStats]:
    out = []
    sq = float(pixel[0] ** 2 + pixel[1] ** 2 + pixel[2] ** 2)
    for i, st in enumerate(stats):
        count, cs, ss = st.count, st.color_sum, st.square_sum
        if i == source:
            count -= 1
            cs = [cs[0] - pixel[0], cs[1] - pixel[1], cs[2] - pixel[2]]
            ss -= sq
        if i == target:
            count += 1
            cs = [cs[0] + pixel[0], cs[1] + pixel[1], cs[2] + pixel[2]]
            ss += sq
        out.append(PhaseStats(count, cs, ss, st.perimeter + deltas[i]))
    return out


def _shared_edges(phases: np.ndarray, k: int) -> np.ndarray:
    """shared[i, j] = number of 4-neighbor edges between phases i and j."""
    shared = np.zeros((k, k), dtype=np.int64)
    for a, b in ((phases[:, :-1], phases[:, 1:]), (phases[:-1, :], phases[1:, :])):
        differ = a != b
        np.add.at(shared, (a[differ], b[differ]), 1)
    return shared + shared.T


def _merged(stats: List[PhaseStats], i: int, j: int, shared: int) -> List[PhaseStats]:
    a, b = stats[i], stats[j]
    union = PhaseStats(
        count=a.count + b.count,
        color_sum=[a.color_sum[n] + b.color_sum[n] for n in range(3)],
        square_sum=a.square_sum + b.square_sum,
        perimeter=a.perimeter + b.perimeter - 2 * shared,
    )
    return [union if n == i else st for n, st in enumerate(stats) if n != j]


def merge_phases(image: np.ndarray, phases: np.ndarray, mu: float,
                 max_phases: int) -> np.ndarray:
    """Greedy pairwise merging.

    Merges the pair with the lowest resulting energy while that lowers the
    energy, and unconditionally while more than max_phases phases remain.
    """
    phases = phases.copy()
    stats = _collect_stats(image, phases)
    energy = segmentation_energy(stats, mu)
    while len(stats) > 1:
        shared = _shared_edges(phases, len(stats))
        best = None
        for i in range(len(stats)):
            for j in range(i + 1, len(stats)):
                trial = _merged(stats, i, j, int(shared[i, j]))
                e = segmentation_energy(trial, mu)
                if best is None or e < best[0]:
                    best = (e, i, j, trial)
        e, i, j, trial = best
        if e >= energy - 1e-12 and len(stats) <= max_phases:
            break
        phases[phases == j] = i
        phases[phases > j] -= 1
        stats, energy = trial, e
        logger.debug("merged phases %d and %d, energy %.4f", i, j, energy)
    return phases


def segment_phases(q: QuantizedImage, mu: float = 0.75, max_phases: int = 6,
                   max_sweeps: int = 50) -> np.ndarray:
    """Returns a phase index per pixel.

    Phases start as the quantized colors, are merged down greedily, then
    refined by raster-order pixel sweeps.
    """
    image = q.to_rgb().astype(np.float64) / 255.0
    height, width = q.height, q.width
    _, seed = np.unique(q.labels, return_inverse=True)
    phases = merge_phases(image, seed.reshape(height, width).astype(np.int32), mu, max_phases)
    stats = _collect_stats(image, phases)
    energy = segmentation_energy(stats, mu)

    for sweep in range(max_sweeps):
        changed = 0
        for r in range(height):
            for c in range(width):
                source = int(phases[r, c])
                pixel = image[r, c]
                k = len(stats)
                candidates = [t for t in range(k) if t != source]
                if k < max_phases:
                    candidates.append(k)

                best_target, best_energy, best_stats = source, energy, None
                for target in candidates:
                    trial = stats
                    if target == k:
                        trial = stats + [PhaseStats(0, [0.0, 0.0, 0.0], 0.0, 0)]
                    deltas = _edge_deltas(phases, r, c, source, target, len(trial))
                    moved = _moved(trial, source, target, pixel, deltas)
                    e = segmentation_energy(moved, mu)
                    if e < best_energy - 1e-12:
                        best_target, best_energy, best_stats = target, e, moved

                if best_stats is None:
                    continue
                phases[r, c] = best_target
                stats, energy = best_stats, best_energy
                changed += 1
                if stats[source].count == 0:
                    # drop the emptied phase and close the index gap
                    del stats[source]
                    phases[phases > source] -= 1

        logger.debug("grouping sweep %d moved %d pixels, %d phases", sweep + 1, changed, len(stats))
        if changed == 0:
            break

    return phases


def _histogram_mode(q: QuantizedImage, region: np.ndarray) -> int:
    counts = np.bincount(q.labels[region], minlength=len(q.palette))
    return int(np.argmax(counts))


def phase_components(q: QuantizedImage, phases: np.ndarray) -> List[Tuple[np.ndarray, int]]:
    """Connected pieces of every phase with their histogram-mode colors."""
    pieces = []
    for i in range(int(phases.max()) + 1):
        labeled, count = ndimage.label(phases == i, structure=FOUR_CONNECTED)
        for k in range(1, count + 1):
            region = labeled == k
            pieces.append((region, _histogram_mode(q, region)))
    pieces.sort(key=lambda p: int(np.argmax(p[0].reshape(-1))))
    return pieces


def grouping_quantize(q: QuantizedImage, layer_set: LayerSet, mu: float = 0.75,
                      max_phases: int = 6) -> LayerSet:
    """Return (S | P) minus the layers of S made redundant by P."""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if max_phases < 1:
        raise ValueError(f"max_phases must be at least 1, got {max_phases}")

    phases = segment_phases(q, mu=mu, max_phases=max_phases)
    pieces = phase_components(q, phases)

    redundant = set()
    for layer in layer_set.layers:
        for region, color in pieces:
            # strict subset test: no stray pixel outside the piece
            if layer.color_index == color and not (layer.mask & ~region).any():
                redundant.add(layer.id)
                break

    kept = [layer for layer in layer_set.layers if layer.id not in redundant]
    injected = [ShapeLayer(id=-1, mask=region, color_index=color, injected=True)
                for region, color in pieces]

    logger.info("grouping quantization: %d phases, %d pieces added, %d layers removed",
                int(phases.max()) + 1, len(injected), len(redundant))

    result = LayerSet(layers=kept + injected, noise=layer_set.noise, source=layer_set.source)
    result.renumber()
    return result
