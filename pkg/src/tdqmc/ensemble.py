"""Full walker-ensemble state and the self-consistent imaginary-time driver.

The state couples N electrons x M walkers, each walker carrying its own guide
wave. One relaxation step snapshots all walker positions, builds every
walker's effective partner potential from that snapshot, steps all waves, and
then moves all walkers under their freshly stepped waves. Infinite-sigma
(mean-field) partners contribute a deterministic density convolution instead
of the sampled kernel average, which makes the mean-field mode reproduce a
Hartree fixed point exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .grid import Field, Grid, wrap_position
from .kernel import SigmaParams, mean_field_potential, weighted_partner_fields
from .potentials import LatticeSpec, coulomb_ee, sample_on_grid
from .propagator import SplitStepper, StepParams, step_walkers_batch

__all__ = ["TdqmcState", "RelaxationReport", "init_ensemble", "relax",
           "total_energy", "optimize_sigma"]


@dataclass
class TdqmcState:
    """N electrons x M walkers with paired guide waves and positions."""

    grid: Grid
    sigma: SigmaParams
    waves: list = field(repr=False)       # per electron: (M, *grid.shape)
    positions: list = field(repr=False)   # per electron: (M, dim)
    tau: float = 0.0
    rng: np.random.Generator | None = None

    @property
    def n_electrons(self) -> int:
        return len(self.waves)

    @property
    def n_walkers(self) -> int:
        return self.waves[0].shape[0]

    def wave(self, i: int, k: int) -> Field:
        return Field(self.grid, self.waves[i][k])

    def one_body_density(self) -> Field:
        """Electron- and walker-averaged |phi|^2, integrating to 1."""
        acc = np.zeros(self.grid.shape)
        for stack in self.waves:
            acc += np.mean(np.abs(stack) ** 2, axis=0)
        return Field(self.grid, acc / self.n_electrons)


@dataclass
class RelaxationReport:
    steps_taken: int
    energy_trace: np.ndarray
    converged: bool
    final_energy: float


def _resolve_potential(spec, grid: Grid, ee_a: float | None):
    """A LatticeSpec samples its own field; a Field is used directly."""
    if isinstance(spec, LatticeSpec):
        return sample_on_grid(spec, grid).values, spec.a if ee_a is None else ee_a
    if isinstance(spec, Field):
        return np.real(spec.values), 1.0 if ee_a is None else ee_a
    raise TypeError("spec must be a LatticeSpec or a precomputed potential Field")


def _coerce_sigma(sigma, n_electrons: int) -> SigmaParams:
    if isinstance(sigma, SigmaParams):
        if len(sigma) != n_electrons:
            raise ValueError("sigma has wrong number of electrons")
        return sigma
    return SigmaParams.uniform(float(sigma), n_electrons)


def init_ensemble(spec: LatticeSpec, grid: Grid, n_electrons: int, n_walkers: int,
                  sigma, seed: int, init_width: float = 1.0) -> TdqmcState:
    """Identical site-centered Gaussian waves per electron, walkers from |phi|^2.

    Electrons are assigned one per non-vacant site in sorted site order.
    Deterministic under the seed.
    """
    if n_electrons < 1 or n_walkers < 1:
        raise ValueError("need at least one electron and one walker")
    active = spec.site_positions()
    if n_electrons > len(active):
        raise ValueError(
            f"{n_electrons} electrons exceed the {len(active)} available lattice sites"
        )
    if grid.dim != spec.dim:
        raise ValueError("grid and lattice dimensions differ")
    rng = np.random.default_rng(seed)
    sig = _coerce_sigma(sigma, n_electrons)
    nodes = grid.node_positions()
    waves, positions = [], []
    for i in range(n_electrons):
        center = active[i]
        delta = nodes - center
        delta -= grid.extent * np.round(delta / grid.extent)
        gauss = np.exp(-np.sum(delta**2, axis=1) / (4.0 * init_width**2))
        gauss = gauss.reshape(grid.shape)
        gauss /= np.sqrt(np.sum(gauss**2) * grid.cell_measure)
        waves.append(np.repeat(gauss[None, ...], n_walkers, axis=0))
        draws = rng.normal(loc=center, scale=init_width, size=(n_walkers, grid.dim))
        positions.append(wrap_position(grid, draws))
    return TdqmcState(grid=grid, sigma=sig, waves=waves, positions=positions,
                      tau=0.0, rng=rng)


def _partner_fields(state: TdqmcState, grid: Grid, ee_a: float) -> list:
    """Per-electron weighted partner field matrix from the position snapshot.

    Row k of entry j is the potential that electron j's cloud exerts on any
    other electron's walker k; infinite sigma yields a single shared row.
    """
    out = []
    for j in range(state.n_electrons):
        if math.isinf(state.sigma[j]):
            density = Field(grid, np.mean(np.abs(state.waves[j]) ** 2, axis=0))
            out.append(mean_field_potential(density, ee_a).values.reshape(1, -1))
        else:
            out.append(weighted_partner_fields(state.positions[j], state.sigma[j],
                                               grid, ee_a))
    return out


def _pair_energy(state: TdqmcState, ee_a: float, ee_strength: float) -> float:
    """Walker-pair interaction, same-index pairing across electrons."""
    if ee_strength == 0.0:
        return 0.0
    total = 0.0
    for i in range(state.n_electrons):
        for j in range(i + 1, state.n_electrons):
            vee = coulomb_ee(state.positions[i], state.positions[j], ee_a,
                             extent=state.grid.extent)
            total += float(np.mean(vee))
    return ee_strength * total


def _one_body_energy(state: TdqmcState, v_en: np.ndarray, stepper: SplitStepper) -> float:
    total = 0.0
    axes = tuple(range(1, 1 + state.grid.dim))
    for stack in state.waves:
        kin = stepper.kinetic_energy_rows(stack)
        pot = np.sum(np.abs(stack) ** 2 * v_en[None, ...], axis=axes) * state.grid.cell_measure
        total += float(np.mean(kin + pot))
    return total


def total_energy(state: TdqmcState, spec, grid: Grid, ee_a: float | None = None,
                 ee_strength: float = 1.0) -> float:
    """Ensemble energy: per-wave kinetic + external, walker-paired repulsion."""
    v_en, a = _resolve_potential(spec, grid, ee_a)
    stepper = SplitStepper(grid, 1.0)  # dtau irrelevant for spectral <T>
    return _one_body_energy(state, v_en, stepper) + _pair_energy(state, a, ee_strength)


def relax(state: TdqmcState, spec, grid: Grid, step_params: StepParams,
          max_steps: int = 4000, energy_tol: float = 1e-6, *,
          ee_a: float | None = None, ee_strength: float = 1.0, window: int = 100,
          record_interval: int = 1) -> tuple[TdqmcState, RelaxationReport]:
    """Self-consistent imaginary-time relaxation toward the ground state.

    Converged when the mean recorded energy over the trailing `window`
    records changes by less than energy_tol (relative) against the preceding
    window. The state is advanced in place and also returned.
    """
    v_en, a = _resolve_potential(spec, grid, ee_a)
    stepper = SplitStepper(grid, step_params.dtau)
    if state.rng is None:
        state.rng = np.random.default_rng(0)
    trace: list[float] = []
    converged = False
    steps = 0
    interacting = ee_strength != 0.0 and state.n_electrons > 1
    for step in range(max_steps):
        if interacting:
            fields = _partner_fields(state, grid, a)
            totals = sum(fields)
        for i in range(state.n_electrons):
            if interacting:
                v_eff = ee_strength * (totals - fields[i])
                v_tot = v_en.reshape(1, -1) + v_eff
            else:
                v_tot = v_en.reshape(1, -1)
            try:
                state.waves[i] = stepper.step_stack(
                    state.waves[i], v_tot.reshape((-1,) + grid.shape),
                    renormalize=step_params.renormalize)
            except NumericalError as exc:
                raise NumericalError(f"{exc} (relaxation step {step})") from None
        for i in range(state.n_electrons):
            noise = state.rng.standard_normal((state.n_walkers, grid.dim))
            state.positions[i] = step_walkers_batch(
                grid, state.waves[i], state.positions[i], step_params, noise)
        state.tau += step_params.dtau
        steps = step + 1
        if steps % record_interval == 0:
            energy = (_one_body_energy(state, v_en, stepper)
                      + _pair_energy(state, a, ee_strength))
            trace.append(energy)
            if len(trace) >= 2 * window:
                recent = float(np.mean(trace[-window:]))
                previous = float(np.mean(trace[-2 * window:-window]))
                if abs(recent - previous) <= energy_tol * max(1.0, abs(recent)):
                    converged = True
                    break
    trace_arr = np.asarray(trace)
    final = float(trace_arr[-1]) if trace_arr.size else float("nan")
    return state, RelaxationReport(steps_taken=steps, energy_trace=trace_arr,
                                   converged=converged, final_energy=final)


def optimize_sigma(spec, grid: Grid, n_electrons: int, n_walkers: int,
                   sigma_candidates, *, seed: int, step_params: StepParams,
                   max_steps: int = 2000, energy_tol: float = 1e-6,
                   init_width: float = 1.0, avg_window: int = 200,
                   ee_a: float | None = None, ee_strength: float = 1.0):
    """Grid scan of the nonlocal length: relax at each candidate, keep the
    energy minimizer. Every candidate restarts from the same seeded state, so
    the scan is deterministic and the curve is directly comparable.

    Returns (sigma_best, curve) with curve a list of (sigma, energy) pairs
    in candidate order; energies are trailing-window averages of the trace.
    """
    candidates = list(sigma_candidates)
    if not candidates:
        raise ValueError("sigma candidate list is empty")
    curve = []
    for cand in candidates:
        st = init_ensemble(spec, grid, n_electrons, n_walkers, cand, seed=seed,
                           init_width=init_width)
        _, report = relax(st, spec, grid, step_params, max_steps=max_steps,
                          energy_tol=energy_tol, ee_a=ee_a, ee_strength=ee_strength)
        tail = report.energy_trace[-min(avg_window, len(report.energy_trace)):]
        curve.append((float(cand), float(np.mean(tail))))
    best_idx = int(np.argmin([e for _, e in curve]))
    return curve[best_idx][0], curve
