"""Metropolis machinery and invariance of the five samplers."""

import math

import numpy as np
import pytest

from cayley.bridge import BridgeProblem, bridge_target, polynomial_potential
from cayley.grid import GridSpec, PhaseState, build_dirichlet_laplacian
from cayley.integrators import ForceField, RngStream
from cayley.linear import LinearModel, sample_equilibrium
from cayley.samplers import (
    ChainStats,
    HmcConfig,
    TargetModel,
    acceptance_probability,
    batch_means_stderr,
    chain_statistics,
    hmc_chain,
    hmc_step,
    mala_exponent,
    mala_hmc_equivalence_check,
    mala_propose,
    mala_step,
    metropolis_accept,
    metropolized_cayley_step,
    metropolized_langevin_step,
    rhmc_run,
)

CHAINS = 20_000


def _linear_target(n=4, S=1.0):
    model = LinearModel(GridSpec(S, n))
    return model, TargetModel(model.force, model.ds)


def _modes(model, x):
    return np.einsum("ik,bil->bk", model.basis.V, x)


def _assert_gaussian_modes(model, u, p=None):
    """Means within 5 SE of 0 and variances within 5 SE of the exact marginals."""
    vu, vp = model.stationary_mode_variances()
    pairs = [(_modes(model, u), vu)]
    if p is not None:
        pairs.append((_modes(model, p), vp))
    for X, v in pairs:
        n = X.shape[0]
        assert np.all(np.abs(X.mean(0)) < 5 * np.sqrt(v / n))
        # SE of the sample variance of a Gaussian: v sqrt(2 / (n - 1))
        assert np.all(np.abs(X.var(0, ddof=1) - v) < 5 * v * np.sqrt(2 / (n - 1)))


def _equilibrium(model, seed):
    return sample_equilibrium(model, RngStream(seed), size=(CHAINS,))


# --- acceptance machinery ---------------------------------------------------


def test_metropolis_accept_edge_cases():
    rng = RngStream(0)
    assert metropolis_accept(np.full(1000, -0.5), rng).all()
    assert not metropolis_accept(np.full(1000, np.inf), rng).any()
    with pytest.warns(RuntimeWarning):
        assert not metropolis_accept(np.array([np.nan]), rng).any()
    np.testing.assert_allclose(acceptance_probability([-1.0, 0.0, 1.0, np.nan]), [1.0, 1.0, np.exp(-1), 0.0])


def test_metropolis_accept_rate_at_unit_exponent():
    n = 1_000_000
    acc = metropolis_accept(np.ones(n), RngStream(1))
    p = math.exp(-1)
    assert abs(acc.mean() - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_rejection_flips_momentum_exactly():
    model, target = _linear_target()
    s = _equilibrium(model, 2)
    out, acc = metropolized_cayley_step(target, s, 1.5, RngStream(3))
    assert (~acc).any() and acc.any()
    np.testing.assert_array_equal(out.p[~acc], -s.p[~acc])
    np.testing.assert_array_equal(out.u[~acc], s.u[~acc])


def test_small_step_is_almost_always_accepted():
    model, target = _linear_target()
    s = _equilibrium(model, 4)
    _, acc = metropolized_cayley_step(target, s, 1e-3, RngStream(5))
    assert acc.mean() > 0.999


def test_acceptance_exponent_is_antisymmetric():
    model, target = _linear_target(6)
    s = sample_equilibrium(model, RngStream(6), size=(5,))
    from cayley.integrators import SchemeConfig, step

    y = step(SchemeConfig(0.7, "CayleyHam"), target.force, s)
    x_fwd = target.scale * (target.hamiltonian(y) - target.hamiltonian(s))
    back = step(SchemeConfig(0.7, "CayleyHam"), target.force, y.flip())
    x_back = target.scale * (target.hamiltonian(back) - target.hamiltonian(y.flip()))
    np.testing.assert_allclose(x_back, -x_fwd, atol=1e-10)


def test_langevin_without_friction_matches_metropolized_step():
    model, target = _linear_target()
    s = _equilibrium(model, 7)
    a, acc_a = metropolized_langevin_step(target, s, 1.2, 0.0, RngStream(8))
    b, acc_b = metropolized_cayley_step(target, s, 1.2, RngStream(8))
    np.testing.assert_array_equal(acc_a, acc_b)
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.p, b.p)


# --- stationarity of the five samplers ---------------------------------------


def test_metropolized_cayley_preserves_equilibrium():
    model, target = _linear_target()
    s, rng = _equilibrium(model, 10), RngStream(11)
    rates = []
    for _ in range(10):
        s, acc = metropolized_cayley_step(target, s, 0.8, rng)
        rates.append(acc.mean())
    assert 0.05 < np.mean(rates) < 0.95
    _assert_gaussian_modes(model, s.u, s.p)


def test_metropolized_langevin_preserves_equilibrium():
    model, target = _linear_target()
    s, rng = _equilibrium(model, 12), RngStream(13)
    for _ in range(10):
        s, _ = metropolized_langevin_step(target, s, 0.8, 1.0, rng)
    _assert_gaussian_modes(model, s.u, s.p)


def test_hmc_preserves_equilibrium():
    model, target = _linear_target()
    u, rng = _equilibrium(model, 14).u, RngStream(15)
    cfg = HmcConfig(0.8, m=3)
    for _ in range(10):
        res = hmc_step(target, u, cfg, rng)
        u = res.u
    assert 0.05 < res.accepted.mean() < 0.95
    _assert_gaussian_modes(model, u)


@pytest.mark.parametrize("phi", [math.pi / 2, math.pi / 4])
def test_rhmc_preserves_equilibrium(phi):
    model, target = _linear_target()
    u0 = _equilibrium(model, 16).u
    res = rhmc_run(target, u0, HmcConfig(0.8, phi=phi, lam=1.0), 5.0, RngStream(17))
    _assert_gaussian_modes(model, res.final.u, res.final.p)
    assert 0 <= res.stats.acceptance_rate <= 1


def test_mala_preserves_equilibrium():
    model, target = _linear_target()
    u, rng = _equilibrium(model, 18).u, RngStream(19)
    rates = []
    for _ in range(10):
        res = mala_step(target, u, 0.5, 0.5, rng)
        u = res.u
        rates.append(res.accepted.mean())
    assert np.mean(rates) < 0.99
    _assert_gaussian_modes(model, u)


def test_mala_generic_theta_preserves_equilibrium():
    model, target = _linear_target()
    u, rng = _equilibrium(model, 20).u, RngStream(21)
    for _ in range(10):
        u = mala_step(target, u, 0.05, 0.3, rng).u
    _assert_gaussian_modes(model, u)


def _quartic_two_point(beta=2.0):
    return BridgeProblem(polynomial_potential(1, 1.0, 0.5), [-0.5], [0.5], beta, GridSpec(1.0, 3))


def _quadrature_moments(problem):
    target = bridge_target(problem)
    g = np.linspace(-4, 4, 801)
    X, Y = np.meshgrid(g, g, indexing="ij")
    u = np.stack([X, Y], -1)[..., None]
    logw = target.log_density(u)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    m = np.array([np.sum(w * X), np.sum(w * Y)])
    v = np.array([np.sum(w * X**2), np.sum(w * Y**2)]) - m**2
    return m, v


@pytest.mark.parametrize("sampler", ["hmc", "mala"])
def test_nonlinear_bridge_target_is_preserved(sampler):
    problem = _quartic_two_point()
    target = bridge_target(problem)
    mean, var = _quadrature_moments(problem)
    rng = RngStream(22)
    u = np.zeros((CHAINS, 2, 1))
    # burn in from the line, then test the law of independent chains
    for _ in range(60):
        if sampler == "hmc":
            u = hmc_step(target, u, HmcConfig(0.4, m=2), rng).u
        else:
            u = mala_step(target, u, 0.1, 0.5, rng).u
    x = u[..., 0]
    n = x.shape[0]
    assert np.all(np.abs(x.mean(0) - mean) < 5 * np.sqrt(var / n))
    # fourth moments are finite; use the empirical SE of the squared deviation
    d2 = (x - mean) ** 2
    assert np.all(np.abs(d2.mean(0) - var) < 5 * d2.std(0) / np.sqrt(n))


# --- MALA specifics ------------------------------------------------------------


def test_mala_closed_form_equals_generic_ratio():
    problem = BridgeProblem(polynomial_potential(2, 1.0, 0.5), [-1.0, 0.0], [1.0, 0.5], 2.0, GridSpec(1.0, 6))
    target = bridge_target(problem)
    rng = RngStream(23)
    u = 0.3 * rng.normal((4, 5, 2))
    v = mala_propose(target, u, 0.02, 0.5, rng.normal(u.shape))
    a = mala_exponent(target, u, v, 0.02, 0.5, "closed")
    b = mala_exponent(target, u, v, 0.02, 0.5, "generic")
    np.testing.assert_allclose(a, b, atol=1e-9, rtol=1e-9)
    with pytest.raises(ValueError):
        mala_exponent(target, u, v, 0.02, 0.3, "closed")


def test_mala_on_gaussian_target_always_accepts():
    L = build_dirichlet_laplacian(GridSpec(1.0, 8))
    target = TargetModel(ForceField.zero(L), 0.125)
    res = mala_step(target, RngStream(24).normal((100, 7, 1)), 0.3, 0.5, RngStream(25))
    assert res.accepted.all()
    np.testing.assert_allclose(res.dh, 0.0, atol=1e-12)


def _no_laplacian(n=5):
    L = build_dirichlet_laplacian(GridSpec(1.0, n))
    L.diag = 0.0
    L.off = 0.0
    return L


def test_mala_without_laplacian_on_convex_quadratic_accepts_and_matches_hmc():
    L = _no_laplacian()
    force = ForceField(lambda u: -2.0 * u, L, lambda u: np.sum(u * u, axis=(-2, -1)))
    target = TargetModel(force, 0.7)
    u = RngStream(26).normal((4, 1))
    rep = mala_hmc_equivalence_check(target, u, 0.1, 27)
    assert rep["max_position_diff"] < 1e-12
    assert rep["max_exponent_diff"] < 1e-12


def test_mala_without_laplacian_reduces_to_classical_mala():
    L = _no_laplacian()
    force = ForceField(lambda u: -(u**3), L, lambda u: 0.25 * np.sum(u**4, axis=(-2, -1)))
    target = TargetModel(force, 1.3)
    rng = RngStream(28)
    u, xi, dt = rng.normal((4, 1)), rng.normal((4, 1)), 0.05
    v = mala_propose(target, u, dt, 0.5, xi)
    # classical MALA: v = u - dt grad U + sqrt(2 dt / scale) xi, with U = scale * G
    np.testing.assert_allclose(v, u - dt * u**3 + math.sqrt(2 * dt / 1.3) * xi, atol=1e-14)

    def log_q(x, y):
        return -1.3 / (4 * dt) * np.sum((y - x + dt * x**3) ** 2)

    G = lambda x: 0.25 * np.sum(x**4)  # noqa: E731
    classical = 1.3 * (G(v) - G(u)) - log_q(v, u) + log_q(u, v)
    assert mala_exponent(target, u, v, dt) == pytest.approx(classical, abs=1e-12)


@pytest.mark.parametrize("tau", [0.1, 0.5])
def test_mala_hmc_time_step_map(tau):
    model, target = _linear_target(5)
    u = sample_equilibrium(model, RngStream(29)).u
    rep = mala_hmc_equivalence_check(target, u, 0.5 * tau**2, 30)
    assert rep["dt_hmc"] == pytest.approx(tau)
    assert rep["max_position_diff"] < 1e-10
    assert rep["max_exponent_diff"] < 1e-10


# --- chain statistics -------------------------------------------------------------


def test_chain_statistics_examples():
    st = chain_statistics(np.array([0.0, 2.0]))
    assert st.mean == 1.0 and st.variance == 2.0
    assert chain_statistics(np.full(10, 3.0)).variance == 0.0
    with pytest.raises(ValueError):
        chain_statistics(np.array([]))


def test_streaming_statistics_match_two_pass():
    x = np.random.default_rng(31).normal(5.0, 2.0, size=(100_000, 3))
    st = ChainStats()
    for chunk in np.array_split(x, 37):
        st = st.update(chunk)
    np.testing.assert_allclose(st.mean, x.mean(0), rtol=1e-10)
    np.testing.assert_allclose(st.variance, x.var(0, ddof=1), rtol=1e-10)


def test_batch_means_stderr_on_iid_data():
    x = np.random.default_rng(32).normal(size=200_000)
    assert batch_means_stderr(x) == pytest.approx(1 / np.sqrt(x.size), rel=0.5)
    with pytest.raises(ValueError):
        batch_means_stderr(np.ones(5))


def test_rhmc_leg_durations_are_exponential():
    model, target = _linear_target()
    u0 = np.zeros((1, 3, 1))
    res = rhmc_run(target, u0, HmcConfig(0.5, lam=0.7), 7_000.0, RngStream(33))
    d = res.durations
    assert abs(d.mean() - 0.7) < 4 * d.std() / np.sqrt(d.size)


def test_hmc_chain_bookkeeping():
    model, target = _linear_target()
    out = hmc_chain(target, np.zeros((3, 1)), HmcConfig(0.5, m=2), 50, RngStream(34), burn_in=5)
    assert out.samples.shape == (50, 3, 1)
    assert out.stats.count == 50
    assert 0 <= out.stats.acceptance_rate <= 1
    assert out.stats.mean_alpha == pytest.approx(out.alpha.mean())


def test_hmc_config_validation():
    with pytest.raises(ValueError):
        HmcConfig(0.1, m=0)
    with pytest.raises(ValueError):
        HmcConfig(0.1, phi=2.0)
    with pytest.raises(ValueError):
        HmcConfig(0.1, kind="CayleyLangevin")
