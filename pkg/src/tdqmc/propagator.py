"""Imaginary-time stepping of guide waves and stochastic walker updates.

Waves relax under a symmetric split-step propagator (half potential, full
spectral kinetic, half potential) that is exact for periodic boundaries and
unconditionally stable in imaginary time; every step renormalizes. Walkers
follow the drift of their own wave plus a Wiener increment of variance
dtau per axis (hbar = m = 1), whose stationary density is |phi|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .grid import Field, Grid, as_position_array, grad_stack, interpolate_batch, wrap_position

__all__ = [
    "StepParams",
    "SplitStepper",
    "step_guide_wave",
    "drift_velocity",
    "drift_batch",
    "step_walker",
    "step_walkers_batch",
]


@dataclass(frozen=True)
class StepParams:
    """Stepping controls: time step, renormalization and drift regularization.

    drift_epsilon is relative to max|phi| of each wave; drift_cap limits the
    drift displacement |v|*dtau per step and defaults to one grid spacing.
    """

    dtau: float = 0.01
    drift_epsilon: float = 1e-8
    drift_cap: float | None = None
    renormalize: bool = True

    def __post_init__(self):
        if not self.dtau > 0:
            raise ValueError(f"dtau must be positive, got {self.dtau}")
        if not self.drift_epsilon > 0:
            raise ValueError(f"drift_epsilon must be positive, got {self.drift_epsilon}")
        if self.drift_cap is not None and not self.drift_cap > 0:
            raise ValueError(f"drift_cap must be positive, got {self.drift_cap}")

    def cap_for(self, grid: Grid) -> float:
        return self.drift_cap if self.drift_cap is not None else grid.spacing


def _k_squared(grid: Grid) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(grid.points_per_axis, d=grid.spacing)
    if grid.dim == 1:
        return k**2
    return k[:, None] ** 2 + k[None, :] ** 2


def _k_squared_real(grid: Grid) -> np.ndarray:
    """k^2 on the rfftn output layout (last axis halved)."""
    n = grid.points_per_axis
    kfull = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
    kreal = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.spacing)
    if grid.dim == 1:
        return kreal**2
    return kfull[:, None] ** 2 + kreal[None, :] ** 2


class SplitStepper:
    """Caches the spectral kinetic factors for one (grid, dtau) pair."""

    def __init__(self, grid: Grid, dtau: float):
        self.grid = grid
        self.dtau = float(dtau)
        self.k2 = _k_squared(grid)
        self._kin = np.exp(-0.5 * self.dtau * self.k2)
        k2_real = _k_squared_real(grid)
        self._kin_real = np.exp(-0.5 * self.dtau * k2_real)
        # duplicate-bin weights so rfft spectra integrate like the full fft
        n = grid.points_per_axis
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        if n % 2 == 0:
            w[-1] = 1.0
        self._k2_real_weighted = k2_real * (w if grid.dim == 1 else w[None, :])
        self._axes = tuple(range(1, 1 + grid.dim))

    def step_stack(self, stack: np.ndarray, v: np.ndarray,
                   renormalize: bool = True) -> np.ndarray:
        """One imaginary-time step of a wave stack (M, *grid.shape).

        v: potential values, either one field (*grid.shape) shared by all
        rows or a per-row stack (M, *grid.shape). Real input stays real.
        """
        with np.errstate(over="ignore", invalid="ignore"):
            half = np.exp(-0.5 * self.dtau * v)
            if half.ndim == self.grid.dim:
                half = half[None, ...]
            out = stack * half
            if np.iscomplexobj(stack):
                out = np.fft.fftn(out, axes=self._axes)
                out *= self._kin[None, ...]
                out = np.fft.ifftn(out, axes=self._axes)
            else:
                out = np.fft.rfftn(out, axes=self._axes)
                out *= self._kin_real[None, ...]
                out = np.fft.irfftn(out, s=self.grid.shape, axes=self._axes)
            out *= half
        if not np.all(np.isfinite(out)):
            raise NumericalError(
                "non-finite wave after imaginary-time step; dtau is likely unstable"
            )
        if renormalize:
            norms = np.sqrt(np.sum(np.abs(out) ** 2, axis=self._axes) * self.grid.cell_measure)
            shape = (-1,) + (1,) * self.grid.dim
            out /= norms.reshape(shape)
        return out

    def kinetic_energy_rows(self, stack: np.ndarray) -> np.ndarray:
        """<phi| -1/2 laplacian |phi> per row, spectral and exact on the grid."""
        weight = self.grid.cell_measure / self.grid.n_points
        if np.iscomplexobj(stack):
            ft = np.fft.fftn(stack, axes=self._axes)
            return 0.5 * np.sum(self.k2[None, ...] * np.abs(ft) ** 2,
                                axis=self._axes) * weight
        ft = np.fft.rfftn(stack, axes=self._axes)
        return 0.5 * np.sum(self._k2_real_weighted[None, ...] * np.abs(ft) ** 2,
                            axis=self._axes) * weight


def step_guide_wave(wave: Field, v_total: Field, dtau: float) -> Field:
    """One renormalized imaginary-time split step of a single guide wave."""
    stepper = SplitStepper(wave.grid, dtau)
    out = stepper.step_stack(wave.values[None, ...], np.real(v_total.values))
    return Field(wave.grid, out[0])


def _real_waves(stack: np.ndarray) -> np.ndarray:
    """Real parts of relaxation waves, guarding against stray imaginary content."""
    if not np.iscomplexobj(stack):
        return stack
    scale = np.max(np.abs(stack))
    if scale > 0 and np.max(np.abs(stack.imag)) > 1e-10 * scale:
        raise ValueError("drift evaluation requires real-valued relaxation waves")
    return np.ascontiguousarray(stack.real)


def drift_batch(grid: Grid, stack: np.ndarray, positions: np.ndarray,
                params: StepParams) -> np.ndarray:
    """Drift velocity grad(phi)/phi of wave k at position k, regularized.

    Near wave nodes (|phi| below drift_epsilon * max|phi|) the drift is
    replaced by a capped push toward increasing |phi|; in all cases the
    displacement |v|*dtau is clamped to the drift cap.
    """
    st = _real_waves(stack)
    positions = np.atleast_2d(positions)
    cap_speed = params.cap_for(grid) / params.dtau

    phi = interpolate_batch(grid, st, positions)
    grads = grad_stack(grid, st)
    absgrads = grad_stack(grid, np.abs(st))
    g = np.stack([interpolate_batch(grid, gax, positions) for gax in grads], axis=1)
    ga = np.stack([interpolate_batch(grid, gax, positions) for gax in absgrads], axis=1)

    floor = params.drift_epsilon * np.max(np.abs(st), axis=tuple(range(1, st.ndim)))
    low = np.abs(phi) < floor  # floor broadcasts over positions for a shared wave

    with np.errstate(divide="ignore", invalid="ignore"):
        v = g / phi[:, None]
    # push toward increasing |phi|; exactly on a symmetric node that gradient
    # cancels, so fall back to the raw wave gradient (either sign increases |phi|)
    ga_norm = np.sqrt(np.sum(ga**2, axis=1))
    g_norm = np.sqrt(np.sum(g**2, axis=1))
    dir_abs = ga / np.maximum(ga_norm, 1e-300)[:, None]
    dir_raw = g / np.maximum(g_norm, 1e-300)[:, None]
    safe_dir = np.where(ga_norm[:, None] > 1e-300, dir_abs,
                        np.where(g_norm[:, None] > 1e-300, dir_raw, 0.0))
    v = np.where(low[:, None], safe_dir * cap_speed, v)
    v = np.nan_to_num(v, nan=0.0, posinf=cap_speed, neginf=-cap_speed)

    speed = np.sqrt(np.sum(v**2, axis=1))
    scale = np.where(speed > cap_speed, cap_speed / np.maximum(speed, 1e-300), 1.0)
    return v * scale[:, None]


def drift_velocity(wave: Field, r, params: StepParams):
    """Drift velocity of a single wave at one position (scalar in 1D)."""
    pos = as_position_array(r, wave.grid.dim)
    v = drift_batch(wave.grid, wave.values[None, ...], pos[None, :], params)[0]
    return float(v[0]) if wave.grid.dim == 1 else v


def step_walkers_batch(grid: Grid, stack: np.ndarray, positions: np.ndarray,
                       params: StepParams, noise: np.ndarray) -> np.ndarray:
    """Drift-diffusion update of all walkers, wrapped into the domain."""
    v = drift_batch(grid, stack, positions, params)
    moved = positions + v * params.dtau + noise * np.sqrt(params.dtau)
    return wrap_position(grid, moved)


def step_walker(r, wave: Field, params: StepParams, noise):
    """Single-walker drift-diffusion step (spec'd convenience over the batch)."""
    pos = as_position_array(r, wave.grid.dim)
    eta = as_position_array(noise, wave.grid.dim)
    out = step_walkers_batch(wave.grid, wave.values[None, ...], pos[None, :], params,
                             eta[None, :])[0]
    return float(out[0]) if wave.grid.dim == 1 else out
