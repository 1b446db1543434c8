"""Bridge potentials: analytic derivatives against finite differences, path force."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cayley.bridge import (
    BridgeProblem,
    bridge_force,
    bridge_hamiltonian,
    bridge_potential_sum,
    find_minimum,
    gaussian_well_potential,
    path_potential,
    polynomial_potential,
    psi_eval,
    three_well_potential,
)
from cayley.grid import GridSpec, PhaseState

H = 1e-5
POTENTIALS = {
    "three-well": three_well_potential(),
    "polynomial": polynomial_potential(2, 1.0, 0.5),
    "wells-3d": gaussian_well_potential([1.0, -2.0], [[0, 0, 0], [1, 0.5, -0.5]], quartic=[(2, 0.3, 0.1)]),
}


def _fd_grad(f, x):
    g = np.zeros(x.shape[-1])
    for j in range(x.shape[-1]):
        e = np.zeros_like(x)
        e[j] = H
        g[j] = (f(x + e) - f(x - e)) / (2 * H)
    return g


coords = st.floats(-1.5, 1.5)


@pytest.mark.parametrize("name", list(POTENTIALS))
@settings(max_examples=20, deadline=None)
@given(a=coords, b=coords, c=coords)
def test_potential_derivatives_match_finite_differences(name, a, b, c):
    V = POTENTIALS[name]
    x = np.array([a, b, c][: V.d])
    scale = 1.0 + np.abs(V.grad(x)).max()
    assert np.abs(_fd_grad(V.value, x) - V.grad(x)).max() < 1e-4 * scale
    fd_hess = np.array([_fd_grad(lambda y: V.grad(y)[i], x) for i in range(V.d)])
    assert np.abs(fd_hess - V.hess(x)).max() < 1e-4 * (1 + np.abs(V.hess(x)).max())
    assert V.laplacian(x) == pytest.approx(np.trace(V.hess(x)), rel=1e-10, abs=1e-10)
    assert np.abs(_fd_grad(V.laplacian, x) - V.grad_laplacian(x)).max() < 1e-4 * (1 + np.abs(V.grad_laplacian(x)).max())


@pytest.mark.parametrize("name", ["three-well", "wells-3d"])
def test_fused_bundle_matches_separate_derivatives(name):
    V = POTENTIALS[name]
    x = np.random.default_rng(0).normal(size=(10, V.d))
    g, lap, hg, gl = V.bundle(x)
    np.testing.assert_allclose(g, V.grad(x), atol=1e-13)
    np.testing.assert_allclose(lap, V.laplacian(x), atol=1e-12)
    np.testing.assert_allclose(hg, np.einsum("...ij,...j->...i", V.hess(x), V.grad(x)), atol=1e-12)
    np.testing.assert_allclose(gl, V.grad_laplacian(x), atol=1e-12)


def test_path_potential_gradient():
    V, beta = three_well_potential(), 2.0
    x = np.array([0.3, -0.4])
    G, dG = path_potential(V, beta, x)
    fd = _fd_grad(lambda y: path_potential(V, beta, y)[0], x)
    np.testing.assert_allclose(dG, fd, atol=1e-4 * (1 + np.abs(dG).max()))
    assert G == pytest.approx(0.5 * V.grad(x) @ V.grad(x) - V.laplacian(x) / beta)
    with pytest.raises(ValueError):
        path_potential(V, 0.0, x)


def test_three_well_minima():
    V = three_well_potential()
    for sign in (-1, 1):
        x = find_minimum(V, [sign * 1.0, 0.0])
        np.testing.assert_allclose(x, [sign * 1.048, -0.042], atol=1e-3)
        assert np.all(np.linalg.eigvalsh(V.hess(x)) > 0)


def _problem(n=8):
    V = three_well_potential()
    return BridgeProblem(V, [-1.048, -0.042], [1.048, -0.042], 2.0, GridSpec(1.0, n))


def test_psi_interpolates_endpoints():
    pb = _problem()
    np.testing.assert_allclose(psi_eval(pb, 0.0), pb.x_minus)
    np.testing.assert_allclose(psi_eval(pb, 1.0), pb.x_plus)
    np.testing.assert_allclose(psi_eval(pb, 0.5), 0.5 * (pb.x_minus + pb.x_plus))
    with pytest.raises(ValueError):
        psi_eval(pb, 1.5)
    assert pb.shift().shape == (7, 2)
    np.testing.assert_array_equal(pb.line_path(), 0.0)


def test_bridge_force_is_negative_gradient_of_potential_sum():
    pb = _problem()
    u = 0.2 * np.random.default_rng(1).normal(size=(7, 2))
    f = bridge_force(pb, u)
    fd = np.zeros_like(u)
    for idx in np.ndindex(u.shape):
        e = np.zeros_like(u)
        e[idx] = H
        fd[idx] = -(bridge_potential_sum(pb, u + e) - bridge_potential_sum(pb, u - e)) / (2 * H)
    np.testing.assert_allclose(f, fd, atol=1e-4 * (1 + np.abs(f).max()))


def test_bridge_hamiltonian_batches():
    pb = _problem()
    rng = np.random.default_rng(2)
    s = PhaseState(rng.normal(size=(3, 7, 2)), rng.normal(size=(3, 7, 2)))
    H_all = bridge_hamiltonian(pb, s)
    for i in range(3):
        assert H_all[i] == pytest.approx(bridge_hamiltonian(pb, PhaseState(s.u[i], s.p[i])))
    assert pb.scale == pytest.approx(0.5 * 2.0 * pb.grid.ds)


def test_bridge_problem_validation():
    with pytest.raises(ValueError):
        BridgeProblem(three_well_potential(), [0.0], [1.0, 0.0], 2.0, GridSpec(1.0, 4))
    with pytest.raises(ValueError):
        BridgeProblem(three_well_potential(), [0.0, 0.0], [1.0, 0.0], -1.0, GridSpec(1.0, 4))
    with pytest.raises(ValueError):
        bridge_force(_problem(), np.zeros((5, 2)))
