import numpy as np
import pytest

from helpers import ks_two_sample
from tdqmc.errors import NumericalError
from tdqmc.grid import Field, make_grid, norm
from tdqmc.oracle import exact_ground_state_1p
from tdqmc.propagator import (SplitStepper, StepParams, drift_velocity, step_guide_wave,
                              step_walker, step_walkers_batch)


@pytest.fixture
def harmonic():
    g = make_grid(1, 20.0, 256)
    x = g.axis_coordinates()
    return g, Field(g, 0.5 * x**2)


def test_kinetic_eigenfunction_decays_then_renormalizes(harmonic):
    g, _ = harmonic
    x = g.axis_coordinates()
    k = 2.0 * np.pi * 3 / g.extent  # an exact grid mode
    phi = np.exp(1j * k * x) / np.sqrt(g.extent)
    wave = Field(g, phi)
    zero = Field(g, np.zeros(g.shape))
    out = step_guide_wave(wave, zero, dtau=0.05)
    # a kinetic eigenfunction only picks up a scalar decay, undone by renormalization
    assert out.values == pytest.approx(phi, abs=1e-12)
    # without renormalization the amplitude drops by exp(-k^2 dtau / 2)
    stepper = SplitStepper(g, 0.05)
    raw = stepper.step_stack(phi[None, :], zero.values, renormalize=False)[0]
    assert np.max(np.abs(raw)) == pytest.approx(
        np.exp(-0.5 * k**2 * 0.05) / np.sqrt(g.extent), rel=1e-12)


def test_oracle_ground_state_is_fixed_point(harmonic):
    g, v = harmonic
    wave, energy = exact_ground_state_1p(v)
    out = step_guide_wave(wave, v, dtau=0.01)
    # eigenstate of H differs from the split-step fixed point by O(dtau^2) terms
    assert np.max(np.abs(out.values - wave.values)) < 1e-5
    assert energy == pytest.approx(0.5, abs=1e-6)


def test_harmonic_relaxation_reaches_half_hartree(harmonic):
    g, v = harmonic
    rng = np.random.default_rng(0)
    phi = np.abs(rng.normal(size=g.shape)) + 0.1
    wave = Field(g, phi / np.sqrt(np.sum(phi**2) * g.cell_measure))
    stepper = SplitStepper(g, 0.01)
    stack = wave.values[None, :]
    for _ in range(1200):
        stack = stepper.step_stack(stack, v.values)
    kinetic = stepper.kinetic_energy_rows(stack)[0]
    potential = np.sum(stack[0] ** 2 * v.values) * g.cell_measure
    assert kinetic + potential == pytest.approx(0.5, abs=1e-4)


def test_step_preserves_unit_norm(harmonic):
    g, v = harmonic
    rng = np.random.default_rng(5)
    phi = rng.normal(size=g.shape) + 0.5
    wave = Field(g, phi / np.sqrt(np.sum(phi**2) * g.cell_measure))
    out = step_guide_wave(wave, v, dtau=0.02)
    assert norm(out) == pytest.approx(1.0, abs=1e-12)


def test_rayleigh_energy_monotone_for_fixed_potential(harmonic):
    g, v = harmonic
    rng = np.random.default_rng(11)
    phi = np.abs(rng.normal(size=g.shape)) + 0.2
    stack = (phi / np.sqrt(np.sum(phi**2) * g.cell_measure))[None, :]
    stepper = SplitStepper(g, 0.01)
    energies = []
    for _ in range(100):
        stack = stepper.step_stack(stack, v.values)
        kin = stepper.kinetic_energy_rows(stack)[0]
        pot = np.sum(stack[0] ** 2 * v.values) * g.cell_measure
        energies.append(kin + pot)
    diffs = np.diff(energies)
    assert np.all(diffs <= 1e-9)


def test_unstable_dtau_raises(harmonic):
    g, _ = harmonic
    x = g.axis_coordinates()
    wave = Field(g, np.exp(-x**2))
    hot = Field(g, np.full(g.shape, -1e8))
    with pytest.raises(NumericalError):
        step_guide_wave(wave, hot, dtau=10.0)


def test_drift_gaussian_log_derivative():
    g = make_grid(1, 20.0, 512)
    x = g.axis_coordinates()
    s = 1.3
    wave = Field(g, np.exp(-x**2 / (4 * s**2)))
    params = StepParams(dtau=0.01)
    for r in (-1.0, 0.4, 2.2):
        expected = -r / (2 * s**2)
        assert drift_velocity(wave, r, params) == pytest.approx(expected, rel=1e-3, abs=1e-6)


def test_drift_uniform_wave_is_zero():
    g = make_grid(1, 10.0, 64)
    wave = Field(g, np.full(g.shape, 1.0 / np.sqrt(10.0)))
    params = StepParams(dtau=0.01)
    assert drift_velocity(wave, 1.234, params) == pytest.approx(0.0, abs=1e-14)


def test_drift_cap_engaged_at_node():
    g = make_grid(1, 10.0, 128)
    x = g.axis_coordinates()
    wave = Field(g, np.sin(2 * np.pi * x / 10.0))  # node at x = 0 with finite slope
    params = StepParams(dtau=0.01)
    v = drift_velocity(wave, 0.0, params)
    assert abs(v) * params.dtau == pytest.approx(params.cap_for(g))


def test_drift_cap_limits_large_velocities():
    g = make_grid(1, 10.0, 128)
    x = g.axis_coordinates()
    wave = Field(g, np.exp(-x**2 / 0.02))  # razor-thin peak, huge log-derivative
    params = StepParams(dtau=0.1)
    v = drift_velocity(wave, 2.0, params)
    assert abs(v) * params.dtau <= params.cap_for(g) + 1e-12


def test_step_walker_fixed_point():
    g = make_grid(1, 10.0, 64)
    wave = Field(g, np.full(g.shape, 1.0 / np.sqrt(10.0)))
    params = StepParams(dtau=0.01)
    assert step_walker(1.5, wave, params, 0.0) == pytest.approx(1.5)


def test_step_walker_wraps_into_domain():
    g = make_grid(1, 10.0, 64)
    wave = Field(g, np.full(g.shape, 1.0 / np.sqrt(10.0)))
    params = StepParams(dtau=1.0)
    out = step_walker(4.9, wave, params, 3.0)  # diffusion kick beyond the edge
    assert -5.0 <= out < 5.0


def test_walker_stationary_distribution_matches_wave_density():
    g = make_grid(1, 20.0, 256)
    x = g.axis_coordinates()
    s2 = 0.5  # harmonic ground state variance
    wave = Field(g, np.exp(-x**2 / (4 * s2)))
    params = StepParams(dtau=0.01)
    rng = np.random.default_rng(42)
    m = 10_000
    pos = rng.normal(0.0, np.sqrt(s2), size=(m, 1))
    stack = wave.values[None, :]
    for _ in range(1500):
        pos = step_walkers_batch(g, stack, pos, params, rng.standard_normal((m, 1)))
    assert pos.var() == pytest.approx(s2, rel=0.05)
    reference = rng.normal(0.0, np.sqrt(s2), size=m)
    _, p_value = ks_two_sample(pos[:, 0], reference)
    assert p_value > 0.01


def test_step_params_validation():
    with pytest.raises(ValueError):
        StepParams(dtau=-0.1)
    with pytest.raises(ValueError):
        StepParams(dtau=0.01, drift_epsilon=0.0)
    with pytest.raises(ValueError):
        StepParams(dtau=0.01, drift_cap=-1.0)
