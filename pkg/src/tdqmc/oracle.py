"""Exact few-body references: dense eigensolves, configuration-space
relaxation, partial traces, and a deterministic Hartree fixed point.

These solvers share the grid discretization with the stochastic ensemble
(spectral kinetic operator, identical split-step factors where imaginary time
is used) so that comparisons isolate method error rather than discretization
differences. The two-particle solver works on the full configuration space
grid and is the ground truth for densities, energies and entanglement maps;
the conditional-wave map mirrors the walker-zone estimator so the exact and
sampled maps are apples-to-apples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .grid import Field, Grid
from .potentials import LatticeSpec, sample_on_grid
from .quantum_info import (EntropyMap, ReducedDensityMatrix, ZonePartition,
                           entropy_map_from_ensemble)

__all__ = [
    "ConfigSpaceWave",
    "dense_hamiltonian",
    "exact_ground_state_1p",
    "exact_ground_state_2p",
    "exact_rdm",
    "exact_local_entropy_map",
    "hartree_ground_state",
]

DEFAULT_CONFIG_BUDGET = 3_000_000


def _axis_k2(n: int, spacing: float) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=spacing)
    return k**2


def _spectral_matrix(n: int, spacing: float, symbol: np.ndarray) -> np.ndarray:
    """Dense position-space matrix of a Fourier multiplier, real symmetric."""
    cols = np.fft.ifft(symbol[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real
    return 0.5 * (cols + cols.T)


def kinetic_matrix(grid: Grid) -> np.ndarray:
    """Dense -1/2 laplacian with the spectral periodic symbol."""
    n = grid.points_per_axis
    t1 = _spectral_matrix(n, grid.spacing, 0.5 * _axis_k2(n, grid.spacing))
    if grid.dim == 1:
        return t1
    eye = np.eye(n)
    return np.kron(t1, eye) + np.kron(eye, t1)


def kinetic_propagator_matrix(grid: Grid, dtau: float) -> np.ndarray:
    """Dense exp(dtau/2 * laplacian), the split-step kinetic factor."""
    n = grid.points_per_axis
    p1 = _spectral_matrix(n, grid.spacing, np.exp(-0.5 * dtau * _axis_k2(n, grid.spacing)))
    if grid.dim == 1:
        return p1
    return np.kron(p1, p1)


def dense_hamiltonian(potential: Field) -> np.ndarray:
    """Full discrete Hamiltonian -1/2 laplacian + diag(V) over grid nodes."""
    h = kinetic_matrix(potential.grid).copy()
    h[np.diag_indices_from(h)] += np.real(potential.values).ravel()
    return h


def _sign_fix(vec: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(vec))
    return vec if vec[pivot] > 0 else -vec


def exact_ground_state_1p(potential: Field, grid: Grid | None = None) -> tuple[Field, float]:
    """Lowest eigenpair of the one-particle Hamiltonian by dense solve.

    The wave is normalized with the grid measure and sign-fixed positive.
    """
    g = potential.grid if grid is None else grid
    try:
        energies, vectors = np.linalg.eigh(dense_hamiltonian(potential))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed to converge: {exc}") from None
    wave = _sign_fix(vectors[:, 0])
    wave = wave / np.sqrt(np.sum(wave**2) * g.cell_measure)
    return Field(g, wave.reshape(g.shape)), float(energies[0])


@dataclass
class ConfigSpaceWave:
    """Normalized two-particle wave on the (r1, r2) configuration grid."""

    grid: Grid                      # per-particle grid
    values: np.ndarray              # shape grid.shape + grid.shape
    energy: float
    converged: bool

    @property
    def measure(self) -> float:
        return self.grid.cell_measure**2

    def flat(self) -> np.ndarray:
        """View as (n_points, n_points): particle 1 rows, particle 2 columns."""
        p = self.grid.n_points
        return self.values.reshape(p, p)


def _config_vee(grid: Grid, a: float) -> np.ndarray:
    """Soft-core repulsion over the configuration grid, minimum-image."""
    ax = grid.axis_coordinates()
    delta = ax[:, None] - ax[None, :]
    delta -= grid.extent * np.round(delta / grid.extent)
    if grid.dim == 1:
        return 1.0 / np.sqrt(delta**2 + a**2)
    d2 = (delta**2)[:, None, :, None] + (delta**2)[None, :, None, :]
    return 1.0 / np.sqrt(d2 + a**2)


def exact_ground_state_2p(spec: LatticeSpec, grid: Grid, *,
                          dtau: float = 0.01, max_steps: int = 20000,
                          tol: float = 1e-10, check_every: int = 25,
                          ee_strength: float = 1.0,
                          budget: int = DEFAULT_CONFIG_BUDGET,
                          init_width: float = 1.0) -> ConfigSpaceWave:
    """Imaginary-time relaxation of the two-particle ground state.

    Uses the same symmetric split step as the ensemble propagator, lifted to
    2*dim dimensions. The start is the symmetrized product of Gaussians on
    the first two assigned sites, so the relaxed state is exchange-symmetric
    (spatial symmetrization only; spin is bookkeeping, not dynamics).
    ee_strength scales the repulsion; 0 gives the separable reference.
    """
    p = grid.n_points
    if p * p > budget:
        raise ValueError(
            f"configuration-space size {p * p} exceeds budget {budget};"
            " reduce the grid or raise the budget"
        )
    v_en = sample_on_grid(spec, grid).values
    if grid.dim == 1:
        v_total = v_en[:, None] + v_en[None, :]
    else:
        v_total = v_en[:, :, None, None] + v_en[None, None, :, :]
    if ee_strength != 0.0:
        v_total = v_total + ee_strength * _config_vee(grid, spec.a)

    n = grid.points_per_axis
    k2_axis = _axis_k2(n, grid.spacing)
    if grid.dim == 1:
        k2 = k2_axis[:, None] + k2_axis[None, :]
        k2_r = k2_axis[:, None] + _axis_k2_real(n, grid.spacing)[None, :]
    else:
        k2 = (k2_axis[:, None, None, None] + k2_axis[None, :, None, None]
              + k2_axis[None, None, :, None] + k2_axis[None, None, None, :])
        k2_r = (k2_axis[:, None, None, None] + k2_axis[None, :, None, None]
                + k2_axis[None, None, :, None]
                + _axis_k2_real(n, grid.spacing)[None, None, None, :])
    kin = np.exp(-0.5 * dtau * k2_r)

    centers = spec.site_positions()
    c1 = centers[0]
    c2 = centers[1] if len(centers) > 1 else centers[0]
    g1 = _wrapped_gaussian(grid, c1, init_width)
    g2 = _wrapped_gaussian(grid, c2, init_width)
    if grid.dim == 1:
        psi = g1[:, None] * g2[None, :] + g2[:, None] * g1[None, :]
    else:
        psi = (g1[:, :, None, None] * g2[None, None, :, :]
               + g2[:, :, None, None] * g1[None, None, :, :])
    measure = grid.cell_measure**2
    psi /= np.sqrt(np.sum(psi**2) * measure)

    half = np.exp(-0.5 * dtau * v_total)
    axes = tuple(range(psi.ndim))
    shape = psi.shape
    weight = measure / psi.size
    energy_prev = np.inf
    energy = np.inf
    converged = False
    steps_done = 0
    for step in range(max_steps):
        psi *= half
        psi = np.fft.irfftn(np.fft.rfftn(psi, axes=axes) * kin, s=shape, axes=axes)
        psi *= half
        if not np.all(np.isfinite(psi)):
            raise NumericalError(f"configuration-space relaxation diverged at step {step}")
        psi /= np.sqrt(np.sum(psi**2) * measure)
        steps_done = step + 1
        if steps_done % check_every == 0:
            ft = np.fft.fftn(psi, axes=axes)
            kinetic = 0.5 * np.sum(k2 * np.abs(ft) ** 2) * weight
            potential = np.sum(v_total * psi**2) * measure
            energy = float(kinetic + potential)
            if abs(energy - energy_prev) < tol * max(1.0, abs(energy)):
                converged = True
                break
            energy_prev = energy
    return ConfigSpaceWave(grid=grid, values=psi, energy=energy, converged=converged)


def _axis_k2_real(n: int, spacing: float) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=spacing)
    return k**2


def _wrapped_gaussian(grid: Grid, center, width: float) -> np.ndarray:
    delta = grid.node_positions() - np.asarray(center, dtype=float)
    delta -= grid.extent * np.round(delta / grid.extent)
    g = np.exp(-np.sum(delta**2, axis=1) / (4.0 * width**2)).reshape(grid.shape)
    return g / np.sqrt(np.sum(g**2) * grid.cell_measure)


def exact_rdm(psi: ConfigSpaceWave) -> ReducedDensityMatrix:
    """Partial trace over particle 2, trace-normalized with measure weights."""
    flat = psi.flat()
    entries = (flat.conj() @ flat.T) * psi.grid.cell_measure**2
    trace = float(np.real(np.trace(entries)))
    return ReducedDensityMatrix(psi.grid, entries / trace, trace_normalized=True)


def one_body_density(psi: ConfigSpaceWave) -> Field:
    """Diagonal of the partial trace: the exact one-body density."""
    flat = psi.flat()
    dens = np.sum(np.abs(flat) ** 2, axis=1) * psi.grid.cell_measure
    return Field(psi.grid, dens.reshape(psi.grid.shape))


def exact_local_entropy_map(psi: ConfigSpaceWave, partition: ZonePartition,
                            n_samples: int, seed: int = 0) -> EntropyMap:
    """Exact-solution analog of the walker-zone entropy map.

    Partner positions are drawn from the particle-2 marginal, each defining a
    normalized conditional wave of particle 1; one walker per conditional
    wave is drawn from its |phi|^2. The zone map machinery is then applied
    unchanged, so the construction matches the ensemble estimator exactly.
    """
    rng = np.random.default_rng(seed)
    grid = psi.grid
    flat = psi.flat()
    marginal = np.sum(np.abs(flat) ** 2, axis=0)
    marginal = marginal / marginal.sum()
    partner_idx = rng.choice(grid.n_points, size=n_samples, p=marginal)

    waves = flat[:, partner_idx].T.copy()
    norms = np.sqrt(np.sum(np.abs(waves) ** 2, axis=1) * grid.cell_measure)
    waves /= norms[:, None]

    probs = np.abs(waves) ** 2 * grid.cell_measure
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(n_samples) * cdf[:, -1]
    nodes = grid.node_positions()
    walker_nodes = np.empty(n_samples, dtype=np.int64)
    for k in range(n_samples):
        walker_nodes[k] = np.searchsorted(cdf[k], u[k])
    positions = nodes[np.minimum(walker_nodes, grid.n_points - 1)]

    stack = waves.reshape((n_samples,) + grid.shape)
    return entropy_map_from_ensemble(stack, positions, partition, grid)


def hartree_ground_state(v_en: Field, centers: np.ndarray, *, ee_a: float,
                         dtau: float = 0.01, init_width: float = 1.0,
                         mixing: float = 0.6, tol: float = 1e-13,
                         max_iter: int = 2000):
    """Deterministic self-consistent mean-field solver on the grid.

    Each electron's wave is the dominant eigenvector of the dense split-step
    propagator in the frozen partner potential; partner potentials are direct
    quadrature convolutions of the densities. Iterated with density mixing to
    a fixed point. Shares the kinetic factors (and therefore the Trotter
    bias) with the ensemble propagator, so an infinite-sigma ensemble run and
    this solver converge to the same discrete fixed point.

    Returns (waves, densities, info dict).
    """
    grid = v_en.grid
    p = grid.n_points
    n_electrons = len(centers)
    nodes = grid.node_positions()
    delta2 = np.zeros((p, p))
    for ax in range(grid.dim):
        d = nodes[:, ax][:, None] - nodes[:, ax][None, :]
        d -= grid.extent * np.round(d / grid.extent)
        delta2 += d**2
    vee_mat = 1.0 / np.sqrt(delta2 + ee_a**2)
    kprop = kinetic_propagator_matrix(grid, dtau)
    v_flat = np.real(v_en.values).ravel()

    waves = [_wrapped_gaussian(grid, c, init_width).ravel() for c in centers]
    densities = [w**2 for w in waves]
    converged = False
    iterations = 0
    for it in range(max_iter):
        new_waves = []
        for i in range(n_electrons):
            v_i = v_flat.copy()
            for j in range(n_electrons):
                if j != i:
                    v_i += (vee_mat @ densities[j]) * grid.cell_measure
            half = np.exp(-0.5 * dtau * v_i)
            prop = half[:, None] * kprop * half[None, :]
            prop = 0.5 * (prop + prop.T)
            evals, evecs = np.linalg.eigh(prop)
            w = _sign_fix(evecs[:, -1])
            new_waves.append(w / np.sqrt(np.sum(w**2) * grid.cell_measure))
        max_change = 0.0
        for i in range(n_electrons):
            n_new = new_waves[i] ** 2
            max_change = max(max_change, float(np.max(np.abs(n_new - densities[i]))))
            densities[i] = (1.0 - mixing) * densities[i] + mixing * n_new
            waves[i] = new_waves[i]
        iterations = it + 1
        if max_change < tol:
            converged = True
            break
    fields = [Field(grid, w.reshape(grid.shape)) for w in waves]
    density_fields = [Field(grid, (w**2).reshape(grid.shape)) for w in waves]
    info = {"converged": converged, "iterations": iterations}
    return fields, density_fields, info
