import math

import numpy as np
import pytest

from tdqmc.grid import Field, make_grid
from tdqmc.kernel import (INFINITY, SigmaParams, effective_potential, gaussian_kernel,
                          kernel_weights, mean_field_potential, partner_field_matrix,
                          weighted_partner_fields)
from tdqmc.potentials import coulomb_ee


def test_gaussian_kernel_values():
    assert gaussian_kernel(0.0, 0.0, 1.0) == pytest.approx(1.0)
    assert gaussian_kernel(1.0, 0.0, 1.0) == pytest.approx(math.exp(-0.5))
    assert gaussian_kernel(2.0, 0.0, 2.0) == pytest.approx(math.exp(-0.5))
    assert gaussian_kernel(3.7, -1.2, INFINITY) == pytest.approx(1.0)


def test_gaussian_kernel_min_image():
    # separation 9 on a ring of extent 10 is really separation 1
    assert gaussian_kernel(4.5, -4.5, 1.0, extent=10.0) == pytest.approx(math.exp(-0.5))


def test_kernel_weights_all_coincident():
    pos = np.zeros((7, 1))
    w, z = kernel_weights(pos, pos[0], 1.0)
    assert z == pytest.approx(7.0)
    assert w == pytest.approx(np.ones(7))


def test_kernel_weights_single_walker():
    pos = np.array([[0.3]])
    w, z = kernel_weights(pos, pos[0], 0.5)
    assert z == pytest.approx(1.0)


def test_kernel_weights_infinite_sigma():
    rng = np.random.default_rng(2)
    pos = rng.normal(size=(20, 2))
    w, z = kernel_weights(pos, pos[3], INFINITY)
    assert z == pytest.approx(20.0)
    assert w == pytest.approx(np.ones(20))


def test_self_term_keeps_z_above_one():
    rng = np.random.default_rng(4)
    pos = rng.uniform(-5, 5, size=(30, 1))
    for k in range(30):
        _, z = kernel_weights(pos, pos[k], 0.05)
        assert z >= 1.0


def test_effective_potential_single_electron_is_zero():
    g = make_grid(1, 10.0, 32)
    walkers = [np.zeros((5, 1))]
    f = effective_potential(0, 0, walkers, SigmaParams.uniform(1.0, 1), g, 1.0)
    assert f.values == pytest.approx(np.zeros(32))


def test_effective_potential_two_electrons_single_walker():
    g = make_grid(1, 10.0, 64)
    r2 = np.array([[1.5]])
    walkers = [np.array([[-1.0]]), r2]
    f = effective_potential(0, 0, walkers, SigmaParams.uniform(1.0, 2), g, 1.0)
    expected = coulomb_ee(g.node_positions(), r2[0], 1.0, extent=g.extent)
    assert f.values == pytest.approx(expected)


def test_effective_potential_mean_field_is_plain_average():
    g = make_grid(1, 10.0, 48)
    rng = np.random.default_rng(9)
    r2 = rng.uniform(-4, 4, size=(11, 1))
    walkers = [np.zeros((11, 1)), r2]
    sig = SigmaParams((1.0, INFINITY))
    nodes = g.node_positions()
    expected = np.mean(
        [coulomb_ee(nodes, r2[l], 1.0, extent=g.extent) for l in range(11)], axis=0)
    for k in (0, 5, 10):
        f = effective_potential(0, k, walkers, sig, g, 1.0)
        assert f.values == pytest.approx(expected)


def test_effective_potential_bounded_by_pointwise_extremes():
    g = make_grid(1, 12.0, 64)
    rng = np.random.default_rng(17)
    r2 = rng.uniform(-5, 5, size=(9, 1))
    walkers = [np.zeros((9, 1)), r2]
    f = effective_potential(0, 2, walkers, SigmaParams.uniform(0.8, 2), g, 1.0)
    nodes = g.node_positions()
    vee = np.stack([coulomb_ee(nodes, r2[l], 1.0, extent=g.extent) for l in range(9)])
    assert np.all(f.values >= 0.0)
    assert np.all(f.values <= vee.max(axis=0) + 1e-12)
    assert np.all(f.values >= vee.min(axis=0) - 1e-12)


def test_sigma_to_zero_approaches_self_walker_potential():
    g = make_grid(1, 12.0, 64)
    rng = np.random.default_rng(21)
    r2 = rng.uniform(-3, 3, size=(14, 1))
    walkers = [np.zeros((14, 1)), r2]
    k = 6
    f = effective_potential(0, k, walkers, SigmaParams((1.0, 1e-4)), g, 1.0)
    expected = coulomb_ee(g.node_positions(), r2[k], 1.0, extent=g.extent)
    assert f.values == pytest.approx(expected, abs=1e-8)


def test_weighted_partner_fields_matches_op_rows():
    g = make_grid(1, 10.0, 32)
    rng = np.random.default_rng(33)
    r2 = rng.uniform(-4, 4, size=(6, 1))
    walkers = [np.zeros((6, 1)), r2]
    sig = SigmaParams.uniform(0.9, 2)
    batch = weighted_partner_fields(r2, 0.9, g, 1.0)
    for k in range(6):
        f = effective_potential(0, k, walkers, sig, g, 1.0)
        assert batch[k] == pytest.approx(f.values, abs=1e-12)


def test_partner_field_matrix_shape():
    g = make_grid(2, 8.0, 8)
    pos = np.zeros((3, 2))
    mat = partner_field_matrix(pos, g, 1.0)
    assert mat.shape == (3, 64)
    assert mat[0, 0] == pytest.approx(coulomb_ee(np.zeros(2), g.node_positions()[0],
                                                 1.0, extent=8.0))


def test_mean_field_potential_matches_direct_quadrature():
    g = make_grid(1, 10.0, 64)
    x = g.axis_coordinates()
    density = np.exp(-x**2)
    density /= density.sum() * g.cell_measure
    f = mean_field_potential(Field(g, density), 1.0)
    nodes = g.node_positions()
    direct = np.array([
        np.sum(density * coulomb_ee(nodes, nodes[i], 1.0, extent=g.extent))
        for i in range(64)
    ]) * g.cell_measure
    assert f.values == pytest.approx(direct, abs=1e-12)


def test_sigma_params_validation():
    with pytest.raises(ValueError):
        SigmaParams((0.0,))
    with pytest.raises(ValueError):
        SigmaParams((-1.0, 2.0))
    assert SigmaParams((INFINITY, INFINITY)).mean_field
    assert not SigmaParams((INFINITY, 1.0)).mean_field
