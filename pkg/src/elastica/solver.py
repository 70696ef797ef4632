"""
Phase-field elastica solver.

Minimizes the double-well approximation of the elastica energy over u with
u = 1 on S_i and u = -1 outside O_i, plus a quadratic pull towards the corner
phases on the corner disks. An auxiliary field v stands in for the
curvature term; v and u are updated alternately, each by one pointwise
division in Fourier space. Boundary conditions are periodic on the solve
window; a window side on the image border continues past it with the edge
pixels repeated.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.fft import fft2, ifft2

from .region import CoveredRegion, InpaintCorner
from ..layers.extraction import LayerSet

logger = logging.getLogger(__name__)

MIN_GRID = 4
# iterations before every accepted step must lower the energy
MONOTONE_AFTER = 10
BACKTRACK_STEPS = 12


def double_well(u: np.ndarray) -> np.ndarray:
    return (u * u - 1.0) ** 2


def double_well_prime(u: np.ndarray) -> np.ndarray:
    return 4.0 * u ** 3 - 4.0 * u


def double_well_second(u: np.ndarray) -> np.ndarray:
    return 12.0 * u * u - 4.0


@dataclass
class ElasticaParams:
    """Solver constants; c is the Tikhonov weight of the splitting."""
    a: float = 0.1
    b: float = 1.0
    epsilon: float = 5.0
    c: float = 3.0
    tol: float = 1e-4
    max_iters: int = 2000
    margin: Optional[int] = None  # window margin; None derives it from the corner radius

    def validate(self):
        if self.a < 0 or self.b < 0:
            raise ValueError(f"a and b must be non-negative, got a={self.a}, b={self.b}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.c < 0:
            raise ValueError(f"Tikhonov weight must be non-negative, got {self.c}")
        if self.tol <= 0 or self.max_iters < 1:
            raise ValueError("tol must be positive and max_iters at least 1")


@dataclass
class PhaseField:
    """Solved field over the full image grid."""
    layer_id: int
    u: np.ndarray
    v: np.ndarray
    params: ElasticaParams
    converged: bool = True
    iterations: int = 0
    energy: List[float] = field(default_factory=list)
    window: Tuple[slice, slice] = (slice(None), slice(None))
    fixed: Optional[np.ndarray] = None  # bool: pixels held at +1 or -1


def operator_symbol(shape: Tuple[int, int]) -> np.ndarray:
    """C = 2 - cos(2 pi i / H) - cos(2 pi j / W); -2C is the 5-point Laplacian symbol."""
    height, width = shape
    i = np.arange(height).reshape(-1, 1)
    j = np.arange(width).reshape(1, -1)
    return 2.0 - np.cos(2.0 * np.pi * i / height) - np.cos(2.0 * np.pi * j / width)


def periodic_laplacian(u: np.ndarray) -> np.ndarray:
    return (np.roll(u, 1, axis=0) + np.roll(u, -1, axis=0)
            + np.roll(u, 1, axis=1) + np.roll(u, -1, axis=1) - 4.0 * u)


def spectral_laplacian(u: np.ndarray) -> np.ndarray:
    return np.real(ifft2(fft2(u) * (-2.0 * operator_symbol(u.shape))))


def constrained_energy(u: np.ndarray, params: ElasticaParams,
                       corner_weight: np.ndarray, corner_target: np.ndarray) -> float:
    """Discrete double-well elastica energy plus the corner-disk penalty."""
    eps = params.epsilon
    gx = np.roll(u, -1, axis=1) - u
    gy = np.roll(u, -1, axis=0) - u
    length = params.a * (0.5 * eps * (gx * gx + gy * gy) + double_well(u) / (2.0 * eps))
    bending = (params.b / eps) * (eps * periodic_laplacian(u) - double_well_prime(u) / (2.0 * eps)) ** 2
    corners = corner_weight * (u * u) - 2.0 * corner_target * u
    return float(length.sum() + bending.sum() + corners.sum())


def energy_gradient(u: np.ndarray, params: ElasticaParams,
                    corner_weight: np.ndarray, corner_target: np.ndarray) -> np.ndarray:
    """Gradient of constrained_energy with respect to u."""
    eps = params.epsilon
    lap = periodic_laplacian(u)
    residual = eps * lap - double_well_prime(u) / (2.0 * eps)
    length = params.a * (-eps * lap + double_well_prime(u) / (2.0 * eps))
    bending = (2.0 * params.b / eps) * (eps * periodic_laplacian(residual)
                                        - double_well_second(u) * residual / (2.0 * eps))
    return length + bending + 2.0 * corner_weight * u - 2.0 * corner_target


def _project(u: np.ndarray, inside: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    u[inside] = 1.0
    u[~allowed] = -1.0
    np.clip(u, -1.0, 1.0, out=u)
    return u


def _descend(u: np.ndarray, u_next: np.ndarray, current: float, energy_of,
             gradient_of, inside: np.ndarray, allowed: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    """A feasible point with energy at most the current one, or None.

    Damped splitting steps are tried first; both ends are feasible so every
    blend is too. A projected gradient step with halving is the fallback.
    """
    step = u_next - u
    theta = 0.5
    for _ in range(BACKTRACK_STEPS):
        trial = u + theta * step
        value = energy_of(trial)
        if value <= current:
            return trial, value
        theta *= 0.5

    grad = gradient_of(u)
    scale = float(np.abs(grad).max())
    if scale == 0.0:
        return None
    size = 1.0 / scale
    for _ in range(2 * BACKTRACK_STEPS):
        trial = _project(u - size * grad, inside, allowed)
        value = energy_of(trial)
        if value <= current:
            return trial, value
        size *= 0.5
    return None


def solve_window(region: CoveredRegion, corners: List[InpaintCorner],
                 margin: int) -> Tuple[slice, slice]:
    """Bounding box of O_i grown by the margin, clipped to the image."""
    height, width = region.mask.shape
    rows = np.flatnonzero(region.mask.any(axis=1))
    cols = np.flatnonzero(region.mask.any(axis=0))
    top, bottom = int(rows[0]) - margin, int(rows[-1]) + margin + 1
    left, right = int(cols[0]) - margin, int(cols[-1]) + margin + 1
    for corner in corners:
        top = min(top, corner.point[0] - corner.radius)
        bottom = max(bottom, corner.point[0] + corner.radius + 1)
        left = min(left, corner.point[1] - corner.radius)
        right = max(right, corner.point[1] + corner.radius + 1)
    top, left = max(top, 0), max(left, 0)
    bottom, right = min(bottom, height), min(right, width)

    # grow undersized windows back towards the minimum grid
    while bottom - top < MIN_GRID:
        if top > 0:
            top -= 1
        elif bottom < height:
            bottom += 1
        else:
            break
    while right - left < MIN_GRID:
        if left > 0:
            left -= 1
        elif right < width:
            right += 1
        else:
            break
    return slice(top, bottom), slice(left, right)


def _border_padding(rows: slice, cols: slice, full_shape: Tuple[int, int],
                    margin: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    return ((margin if rows.start == 0 else 0, margin if rows.stop == full_shape[0] else 0),
            (margin if cols.start == 0 else 0, margin if cols.stop == full_shape[1] else 0))


def _corner_terms(corners: List[InpaintCorner], shape: Tuple[int, int],
                  free: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sum of disk indicators and sum of phase-weighted indicators over O_i \\ S_i."""
    weight = np.zeros(shape)
    target = np.zeros(shape)
    for corner in corners:
        img_r, img_c, disk_r, disk_c = corner.window(shape)
        support = corner.support[disk_r, disk_c] & free[img_r, img_c]
        weight[img_r, img_c] += support
        target[img_r, img_c] += support * corner.phase[disk_r, disk_c]
    return weight, target


def solve(layer_id: int, region: CoveredRegion, corners: List[InpaintCorner],
          params: ElasticaParams, layer_set: LayerSet) -> PhaseField:
    """Alternate spectral v- and u-updates until u stops moving."""
    params.validate()
    shape_mask = layer_set.layers[layer_id].mask
    full_shape = shape_mask.shape
    if min(full_shape) < MIN_GRID:
        raise ValueError(f"grid {full_shape} is smaller than {MIN_GRID} in some direction")

    eps, a, b, c = params.epsilon, params.a, params.b, params.c
    radius = max((corner.radius for corner in corners), default=0)
    margin = params.margin if params.margin is not None else max(int(np.ceil(radius + 2 * eps)), MIN_GRID)
    rows, cols = solve_window(region, corners, margin)

    inside = shape_mask[rows, cols]
    allowed = region.mask[rows, cols]
    free = allowed & ~inside
    weight, target = _corner_terms(corners, full_shape, region.mask & ~shape_mask)
    weight, target = weight[rows, cols], target[rows, cols]

    # sides on the image border continue past it with the edge pixels repeated
    pad = _border_padding(rows, cols, full_shape, margin)
    inside = np.pad(inside, pad, mode="edge")
    allowed = np.pad(allowed, pad, mode="edge")
    weight = np.pad(weight, pad)
    target = np.pad(target, pad)
    crop = (slice(pad[0][0], inside.shape[0] - pad[0][1]), slice(pad[1][0], inside.shape[1] - pad[1][1]))

    symbol = operator_symbol(inside.shape)
    v_denominator = a + c + 4.0 * b * symbol
    u_base = 2.0 * eps * eps * symbol + c

    # holes of S_i start filled
    u = np.where(ndimage.binary_fill_holes(inside) & allowed, 1.0, -1.0)
    v = np.zeros_like(u)

    def energy_of(field_u):
        return constrained_energy(field_u, params, weight, target)

    def gradient_of(field_u):
        return energy_gradient(field_u, params, weight, target)

    energy = [energy_of(u)]
    converged = False
    iterations = 0

    for iterations in range(1, params.max_iters + 1):
        rhs_v = 2.0 * (u * weight - target) - (b / (eps * eps)) * double_well_second(u) * v + c * v
        v = np.real(ifft2(fft2(rhs_v) / v_denominator))
        np.clip(v, -1.0, 1.0, out=v)

        coe = 2.0 * u * u
        stabilizer = float(coe.max())
        rhs_u = (stabilizer - coe + 2.0) * u - eps * v + c * u
        u_next = np.real(ifft2(fft2(rhs_u) / (u_base + stabilizer)))

        u_next = _project(u_next, inside, allowed)
        value = energy_of(u_next)

        if iterations > MONOTONE_AFTER and value > energy[-1]:
            accepted = _descend(u, u_next, energy[-1], energy_of, gradient_of, inside, allowed)
            if accepted is None:
                logger.debug("layer %d: no descent step at iteration %d, stopping", layer_id, iterations)
                energy.append(energy[-1])
                converged = True
                break
            u_next, value = accepted

        change = float(np.abs(u_next - u).max())
        u = u_next
        energy.append(value)
        if change < params.tol:
            converged = True
            break

    if not converged:
        logger.warning("layer %d: elastica solve stopped at max_iters=%d without converging",
                       layer_id, params.max_iters)
    else:
        logger.debug("layer %d: converged after %d iterations on a %dx%d window (%d free pixels)",
                     layer_id, iterations, inside.shape[0], inside.shape[1], int(free.sum()))

    full_u = np.full(full_shape, -1.0)
    full_v = np.zeros(full_shape)
    full_u[rows, cols] = u[crop]
    full_v[rows, cols] = v[crop]
    return PhaseField(layer_id=layer_id, u=full_u, v=full_v, params=params,
                      converged=converged, iterations=iterations, energy=energy,
                      window=(rows, cols), fixed=shape_mask | ~region.mask)
