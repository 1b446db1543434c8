"""Splitting integrators: mode-wise oracles, geometric properties, noise flows."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from cayley.bridge import BridgeProblem, bridge_force_field, polynomial_potential
from cayley.grid import GridSpec, PhaseState, build_dirichlet_laplacian, dst_transform
from cayley.integrators import (
    ForceField,
    RngStream,
    SchemeConfig,
    flow_A,
    integrate,
    kick_B,
    ou_flow,
    respa_energy_scan,
    step,
)
from cayley.linear import LinearModel
from cayley.oscillator import splitting_matrix_1d

from conftest import symplectic_form


def _random_state(shape, seed):
    rng = np.random.default_rng(seed)
    return PhaseState(rng.normal(size=shape), rng.normal(size=shape))


def _one_step_matrix(config, force, m, d=1):
    cols = []
    for j in range(2 * m * d):
        e = np.zeros(2 * m * d)
        e[j] = 1.0
        s = PhaseState(e[: m * d].reshape(m, d), e[m * d:].reshape(m, d))
        cols.append(step(config, force, s).stacked())
    return np.array(cols).T


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(0.1, "RK4")
    with pytest.raises(ValueError):
        SchemeConfig(0.0)
    with pytest.raises(ValueError):
        SchemeConfig(0.1, "CayleyLangevin", gamma=-1.0)
    assert SchemeConfig(0.1, "ExactLangevin").a_method == "exact"
    assert SchemeConfig(0.1, "CayleyLangevin").langevin


def test_exact_flow_matches_matrix_exponential():
    L = build_dirichlet_laplacian(GridSpec(1.0, 7))
    s = _random_state((6, 1), 0)
    out = flow_A(s, 0.37, L, "exact", L.basis)
    A = np.block([[np.zeros((6, 6)), np.eye(6)], [L.dense(), np.zeros((6, 6))]])
    np.testing.assert_allclose(out.stacked(), expm(0.37 * A) @ s.stacked(), atol=1e-10)
    with pytest.raises(ValueError):
        flow_A(s, 0.1, L, "exact")
    with pytest.raises(ValueError):
        flow_A(s, 0.1, L, "magic")


@pytest.mark.parametrize("kind,label", [("CayleyHam", "cayley"), ("ExactHam", "exact")])
def test_linear_step_equals_modewise_matrix(kind, label):
    model = LinearModel(GridSpec(4.0, 12))
    s = _random_state((3, 11, 1), 1)
    out = step(SchemeConfig(0.3, kind), model.force, s)
    V = model.basis.V
    U, P = V.T @ s.u[..., 0].T, V.T @ s.p[..., 0].T
    M = splitting_matrix_1d(model.basis.omega, 0.3, label)
    U1 = M[:, 0, 0, None] * U + M[:, 0, 1, None] * P
    P1 = M[:, 1, 0, None] * U + M[:, 1, 1, None] * P
    np.testing.assert_allclose(out.u[..., 0], (V @ U1).T, atol=1e-12)
    np.testing.assert_allclose(out.p[..., 0], (V @ P1).T, atol=1e-11)


def _quartic_field(n=6, d=2):
    problem = BridgeProblem(polynomial_potential(d, 1.0, 0.5), [-1.0, 0.0], [1.0, 0.5], 2.0, GridSpec(1.0, n))
    return bridge_force_field(problem)


@pytest.mark.parametrize("kind", ["CayleyHam", "ExactHam", "Verlet"])
def test_linear_step_is_symplectic(kind):
    model = LinearModel(GridSpec(1.0, 6))
    dt = 0.05 if kind == "Verlet" else 0.4
    M = _one_step_matrix(SchemeConfig(dt, kind), model.force, 5)
    J = symplectic_form(5)
    assert np.max(np.abs(M.T @ J @ M - J)) < 1e-10
    assert abs(np.linalg.det(M) - 1.0) < 1e-6


@pytest.mark.parametrize("kind", ["CayleyHam", "ExactHam"])
def test_nonlinear_step_preserves_volume_and_is_reversible(kind):
    force = _quartic_field()
    config = SchemeConfig(0.05, kind)
    x = _random_state((5, 2), 2)
    x = PhaseState(0.3 * x.u, x.p)
    # central-difference Jacobian of one step
    h, dim = 1e-6, 20
    J = np.empty((dim, dim))
    base = x.stacked()
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        plus, minus = base + e, base - e
        fp = step(config, force, PhaseState(plus[:10].reshape(5, 2), plus[10:].reshape(5, 2))).stacked()
        fm = step(config, force, PhaseState(minus[:10].reshape(5, 2), minus[10:].reshape(5, 2))).stacked()
        J[:, j] = (fp - fm) / (2 * h)
    assert abs(np.linalg.det(J) - 1.0) < 1e-6
    y = step(config, force, x)
    back = step(config, force, y.flip()).flip()
    assert np.max(np.abs(back.u - x.u)) < 1e-10
    assert np.max(np.abs(back.p - x.p)) < 1e-10


def test_langevin_without_friction_is_hamiltonian():
    model = LinearModel(GridSpec(1.0, 8))
    s = _random_state((7, 1), 3)
    a = step(SchemeConfig(0.2, "CayleyLangevin", gamma=0.0), model.force, s)
    b = step(SchemeConfig(0.2, "CayleyHam"), model.force, s)
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.p, b.p)
    with pytest.raises(ValueError):
        step(SchemeConfig(0.2, "CayleyLangevin", gamma=1.0), model.force, s)


def test_ou_flow_preserves_its_gaussian():
    rng = RngStream(4)
    beta, ds = 2.0, 0.1
    shape = (200_000, 1, 1)
    s = PhaseState(np.zeros(shape), rng.normal(shape) / np.sqrt(beta * ds))
    for _ in range(3):
        s = ou_flow(s, 0.3, 1.5, beta, ds, rng)
    var = s.p.var()
    assert var == pytest.approx(1 / (beta * ds), rel=4 * np.sqrt(2 / shape[0]))


def test_kick_matches_force():
    model = LinearModel(GridSpec(1.0, 4))
    s = _random_state((3, 1), 5)
    k = kick_B(s, 0.5, model.force)
    np.testing.assert_allclose(k.p, s.p - 0.5 * s.u)
    np.testing.assert_array_equal(k.u, s.u)


def test_rng_streams_are_reproducible_and_distinct():
    a, b = RngStream(9, 0).normal(5), RngStream(9, 0).normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(RngStream(9, 1).normal(5), a)
    c1, c2 = RngStream(9).spawn(3).normal(4), RngStream(9).spawn(3).normal(4)
    np.testing.assert_array_equal(c1, c2)
    assert not np.allclose(RngStream(9).spawn(4).normal(4), c1)


def test_integrate_records_observations():
    model = LinearModel(GridSpec(1.0, 5))
    s = _random_state((4, 1), 6)
    final, rec = integrate(SchemeConfig(0.1, "CayleyHam"), model.force, s, 10, observe=model.hamiltonian, every=5)
    assert rec.shape == (3,)
    assert rec[0] == pytest.approx(model.hamiltonian(s))
    assert rec[-1] == pytest.approx(model.hamiltonian(final))


def test_zero_force_reduces_to_linear_flow():
    L = build_dirichlet_laplacian(GridSpec(1.0, 5))
    s = _random_state((4, 1), 7)
    out = step(SchemeConfig(0.3, "CayleyHam"), ForceField.zero(L), s)
    np.testing.assert_allclose(out.u, flow_A(s, 0.3, L).u)


@settings(max_examples=20, deadline=None)
@given(dt_omega=st.floats(0.01, 10.0))
def test_respa_cayley_error_within_modified_energy_bound(dt_omega):
    row = respa_energy_scan(10.0, [dt_omega / 10.0], periods=20)[0]
    assert row["rel_err_cayley"] <= 0.25 * row["dt"] ** 2 + 1e-10


def test_respa_exact_resonance_spike():
    rows = respa_energy_scan(10.0, [np.pi / 10.0 * 0.999, 0.25], periods=50)
    assert rows[0]["rel_err_exact"] > 10 * rows[1]["rel_err_exact"]
