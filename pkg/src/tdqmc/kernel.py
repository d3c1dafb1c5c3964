"""Gaussian kernel weighting and the walker-convolution effective potential.

Each walker of one electron feels its partners not at their literal walker
positions but through a kernel-weighted average over the partner ensemble.
The kernel width sigma is the nonlocal length: sigma -> infinity weights all
partner walkers equally and recovers the mean-field (Hartree) limit, which is
also available as a deterministic density convolution for converged
comparisons against self-consistent field solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid

__all__ = [
    "INFINITY",
    "SigmaParams",
    "gaussian_kernel",
    "kernel_weights",
    "effective_potential",
    "partner_field_matrix",
    "weighted_partner_fields",
    "mean_field_potential",
]

INFINITY = math.inf


@dataclass(frozen=True)
class SigmaParams:
    """Per-electron nonlocal lengths; INFINITY selects mean-field weighting."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        for v in vals:
            if not (v > 0 or math.isinf(v)):
                raise ValueError(f"sigma must be positive or INFINITY, got {v}")

    @classmethod
    def uniform(cls, sigma: float, n_electrons: int) -> "SigmaParams":
        return cls((float(sigma),) * n_electrons)

    @property
    def mean_field(self) -> bool:
        return all(math.isinf(v) for v in self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)


def _min_image(delta: np.ndarray, extent: float | None) -> np.ndarray:
    if extent is None:
        return delta
    return delta - extent * np.round(delta / extent)


def gaussian_kernel(r, r_k, sigma: float, extent: float | None = None):
    """exp(-|r - r_k|^2 / (2 sigma^2)); identically 1 at sigma = INFINITY."""
    delta = _min_image(np.asarray(r, dtype=float) - np.asarray(r_k, dtype=float), extent)
    d2 = np.sum(np.atleast_1d(delta) ** 2, axis=-1) if np.ndim(delta) > 0 else delta**2
    if math.isinf(sigma):
        out = np.ones_like(np.asarray(d2, dtype=float))
    else:
        out = np.exp(-d2 / (2.0 * sigma**2))
    return float(out) if np.ndim(out) == 0 else out


def kernel_weights(positions_j: np.ndarray, r_jk, sigma: float,
                   extent: float | None = None):
    """Kernel weight of every partner walker relative to walker k, and their sum.

    positions_j: (M, dim) walker positions of one electron; r_jk: the
    reference walker position. Returns (weights, Z) with Z >= 1 whenever
    r_jk is one of the positions (the self term contributes exactly 1).
    """
    positions_j = np.atleast_2d(np.asarray(positions_j, dtype=float))
    if positions_j.shape[0] < 1:
        raise ValueError("at least one walker position required")
    ref = np.atleast_1d(np.asarray(r_jk, dtype=float))
    weights = gaussian_kernel(positions_j, ref[None, :], sigma, extent)
    weights = np.atleast_1d(weights)
    return weights, float(weights.sum())


def kernel_matrix(positions_j: np.ndarray, sigma: float, extent: float | None):
    """All pairwise kernel values K[l, k] within one electron's walker cloud."""
    pos = np.asarray(positions_j, dtype=float)
    m = pos.shape[0]
    if math.isinf(sigma):
        return np.ones((m, m))
    # in-place accumulation; this matrix is rebuilt every step and dominates
    # the per-step cost at large M
    d2 = None
    for ax in range(pos.shape[1]):
        delta = pos[:, ax][:, None] - pos[:, ax][None, :]
        if extent is not None:
            shift = np.round(delta * (1.0 / extent))
            shift *= extent
            delta -= shift
        delta *= delta
        d2 = delta if d2 is None else np.add(d2, delta, out=d2)
    d2 *= -1.0 / (2.0 * sigma**2)
    return np.exp(d2, out=d2)


def partner_field_matrix(positions_j: np.ndarray, grid: Grid, a: float) -> np.ndarray:
    """Soft-core repulsion of every grid node against every partner walker.

    Returns (M, n_points): row l is V_ee(node, r_j^l) over the flattened grid.
    """
    pos = np.asarray(positions_j, dtype=float)
    nodes = grid.node_positions()
    d2 = None
    for ax in range(grid.dim):
        delta = pos[:, ax][:, None] - nodes[:, ax][None, :]
        shift = np.round(delta * (1.0 / grid.extent))
        shift *= grid.extent
        delta -= shift
        delta *= delta
        d2 = delta if d2 is None else np.add(d2, delta, out=d2)
    d2 += a**2
    np.sqrt(d2, out=d2)
    return np.divide(1.0, d2, out=d2)


def weighted_partner_fields(positions_j: np.ndarray, sigma_j: float,
                            grid: Grid, a: float) -> np.ndarray:
    """Kernel-weighted partner potential for every walker of the source electron.

    Returns (M, n_points): row k is the normalized convolution
    sum_l V_ee(node, r_j^l) K[r_j^l, r_j^k] / Z_j^k. The weights do not vary
    over grid nodes, so the pairwise kernel is evaluated once and applied to
    the precomputed per-walker field matrix.
    """
    vee = partner_field_matrix(positions_j, grid, a)
    kmat = kernel_matrix(positions_j, sigma_j, grid.extent)
    z = kmat.sum(axis=0)
    return (kmat.T @ vee) / z[:, None]


def effective_potential(i: int, k: int, walkers: list[np.ndarray], sigma: SigmaParams,
                        grid: Grid, a: float) -> Field:
    """Effective electron-electron potential field felt by walker k of electron i.

    walkers: per-electron (M, dim) position arrays for all electrons. The
    result sums, over every partner electron j != i, the kernel-weighted
    average of the soft-core repulsion against j's walker cloud.
    """
    n_electrons = len(walkers)
    total = np.zeros(grid.n_points)
    for j in range(n_electrons):
        if j == i:
            continue
        pos_j = np.asarray(walkers[j], dtype=float)
        weights, z = kernel_weights(pos_j, pos_j[k], sigma[j], grid.extent)
        vee = partner_field_matrix(pos_j, grid, a)
        total += (weights @ vee) / z
    return Field(grid, total.reshape(grid.shape))


def mean_field_potential(density: Field, a: float) -> Field:
    """Periodic convolution of a one-body density with the soft-core repulsion.

    This is the infinite-sigma limit of the walker convolution evaluated by
    quadrature instead of sampling: V(r) = int n(r') V_ee(r - r') dr'. The
    circular FFT convolution is exact for the minimum-image kernel on the
    periodic grid.
    """
    grid = density.grid
    n = grid.points_per_axis
    disp = grid.spacing * np.arange(n)
    disp = _min_image(disp, grid.extent)
    if grid.dim == 1:
        d2 = disp**2
    else:
        d2 = disp[:, None] ** 2 + disp[None, :] ** 2
    kernel = 1.0 / np.sqrt(d2 + a**2)
    axes = tuple(range(grid.dim))
    f = np.fft.rfftn(np.real(density.values) * grid.cell_measure, axes=axes)
    g = np.fft.rfftn(kernel, axes=axes)
    out = np.fft.irfftn(f * g, s=grid.shape, axes=axes)
    return Field(grid, out)
