"""Named experiments: each maps a parameter dict to CSV-ready tables and a summary.

Every experiment is a pure function of its parameters (including the seed), so
reruns reproduce identical tables. Replica-level work can fan out over worker
processes; each replica owns an ``RngStream`` keyed by its index and results are
reduced in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .bridge import (
    BridgeProblem,
    bridge_hamiltonian,
    bridge_target,
    find_minimum,
    path_potential,
    polynomial_potential,
    three_well_potential,
)
from .grid import GridSpec, PhaseState, dense_cayley, dst_transform
from .integrators import RngStream, SchemeConfig, integrate, respa_energy_scan
from .linear import (
    LinearModel,
    energy_report,
    exact_langevin_law,
    mean_dh_analytic,
    relative_energy_error,
    sample_equilibrium,
)
from .oscillator import (
    langevin_flow_matrix,
    modified_hamiltonian_1d,
    oco_matrices,
    power_and_noise,
    splitting_matrix_1d,
    strong_stability_check,
    theta_chi,
)
from .samplers import (
    HmcConfig,
    TargetModel,
    batch_means_stderr,
    hmc_chain,
    mala_hmc_equivalence_check,
    rhmc_run,
)

__all__ = ["Table", "ExperimentResult", "EXPERIMENTS", "DEFAULTS", "STOCHASTIC", "run_experiment", "resolved_params", "fit_slope", "steps_for", "leg_steps"]


@dataclass
class Table:
    columns: list[str]
    rows: list[list]


@dataclass
class ExperimentResult:
    tables: dict[str, Table]
    summary: dict = field(default_factory=dict)


def fit_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def steps_for(T: float, dt: float) -> int:
    """``floor(T / dt)`` robust to rounding when ``dt`` divides ``T``."""
    return int(math.floor(T / dt + 1e-9))


def leg_steps(T: float, dt: float) -> int:
    """Integrator steps of a fixed-duration HMC leg: ``floor(T / dt)``, at least one."""
    return max(1, steps_for(T, dt))


def _map(fn: Callable, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _as_list(v) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    return [float(v)]


# ---------------------------------------------------------------------------
# Linear Hamiltonian model: energy traces and spectral energies
# ---------------------------------------------------------------------------


def _linear_runs(p: dict):
    """Integrate equilibrium starts with both splittings; yields snapshots via callback."""
    model = LinearModel(GridSpec(p["S"], p["n"]))
    reps = int(p["replicas"])
    state0 = sample_equilibrium(model, RngStream(p["seed"], 0), size=(reps,))
    n_steps = steps_for(p["T"], p["dt"])
    return model, state0, n_steps


def energy_trace(p: dict) -> ExperimentResult:
    if p["model"] == "bridge":
        return _bridge_energy_trace(p)
    model, state0, n_steps = _linear_runs(p)
    every = int(p["every"])
    H0 = model.hamiltonian(state0)
    cols = {}
    for kind in ("CayleyHam", "ExactHam"):
        _, H = integrate(SchemeConfig(p["dt"], kind), model.force, state0, n_steps,
                         observe=model.hamiltonian, every=every)
        cols[kind] = relative_energy_error(H, H0).mean(axis=-1)
    t = np.arange(len(cols["CayleyHam"])) * every * p["dt"]
    rows = [[ti, c, e] for ti, c, e in zip(t, cols["CayleyHam"], cols["ExactHam"])]
    return ExperimentResult(
        {"energy_trace": Table(["t", "rel_err_cayley", "rel_err_exact"], rows)},
        _band_summary(t, cols["CayleyHam"], cols["ExactHam"]),
    )


def _band_summary(t, cay, ex) -> dict:
    early = t <= t[-1] / 10
    late = t >= t[-1] / 2
    return {
        "cayley_initial_band": float(cay[early].max()),
        "cayley_late_band": float(cay[late].max()),
        "exact_initial_band": float(ex[early].max()),
        "exact_final": float(ex[-1]),
        "exact_growth_factor": float(ex.max() / ex[early].max()),
    }


def _bridge_energy_trace(p: dict) -> ExperimentResult:
    V = three_well_potential()
    xm, xp = find_minimum(V, [-1.0, 0.0]), find_minimum(V, [1.0, 0.0])
    problem = BridgeProblem(V, xm, xp, p["beta"], GridSpec(p["S"], p["n"]))
    target = bridge_target(problem)
    rng = RngStream(p["seed"], 0)
    u0 = problem.line_path()
    state0 = PhaseState(u0, target.draw_momentum(u0.shape, rng))
    H0 = bridge_hamiltonian(problem, state0)
    n_steps = steps_for(p["T"], p["dt"])
    every = int(p["every"])
    cols = {}
    for kind in ("CayleyHam", "ExactHam"):
        _, H = integrate(SchemeConfig(p["dt"], kind), target.force, state0, n_steps,
                         observe=lambda s: bridge_hamiltonian(problem, s), every=every)
        cols[kind] = relative_energy_error(H, H0)
    t = np.arange(len(cols["CayleyHam"])) * every * p["dt"]
    rows = [[ti, c, e] for ti, c, e in zip(t, cols["CayleyHam"], cols["ExactHam"])]
    return ExperimentResult(
        {"energy_trace": Table(["t", "rel_err_cayley", "rel_err_exact"], rows)},
        _band_summary(t, cols["CayleyHam"], cols["ExactHam"]),
    )


def spectral_energy(p: dict) -> ExperimentResult:
    model, state0, n_steps = _linear_runs(p)
    times = _as_list(p["snapshots"])
    snap_steps = sorted({min(n_steps, int(round(t / p["dt"]))) for t in times})
    energies = {}
    for kind in ("CayleyHam", "ExactHam"):
        cfg = SchemeConfig(p["dt"], kind)
        state, done, per = state0, 0, []
        for s in snap_steps:
            state = integrate(cfg, model.force, state, s - done)
            done = s
            per.append(energy_report(model, state)["mode_energies"].mean(axis=0))
        energies[kind] = np.array(per)
    total0 = energy_report(model, state0)["mode_energies"].mean(axis=0).sum()
    omega = model.basis.omega
    rows = []
    for j, s in enumerate(snap_steps):
        for k in range(len(omega)):
            ec, ee = energies["CayleyHam"][j, k], energies["ExactHam"][j, k]
            rows.append([s * p["dt"], k + 1, omega[k], ec, ee, ec / total0, ee / total0])
    final_ex = energies["ExactHam"][-1]
    dominant = int(np.argmax(final_ex)) + 1
    M = splitting_matrix_1d(omega[dominant - 1], p["dt"], "exact")
    return ExperimentResult(
        {"spectral_energy": Table(
            ["t", "mode", "omega", "energy_cayley", "energy_exact", "normalized_cayley", "normalized_exact"], rows)},
        {
            "dominant_mode": dominant,
            "dominant_dt_omega": float(p["dt"] * omega[dominant - 1]),
            "dominant_trace_exact": float(np.trace(M)),
            "normalization": "energies divided by the t=0 total energy",
        },
    )


def respa_scan(p: dict) -> ExperimentResult:
    omega = p["omega"]
    x = np.linspace(p["dt_omega_min"], p["dt_omega_max"], int(p["points"]))
    rows_in = respa_energy_scan(omega, x / omega, int(p["periods"]))
    rows = [[r["dt_omega"], r["rel_err_exact"], r["rel_err_cayley"], 0.25 * r["dt"] ** 2] for r in rows_in]
    return ExperimentResult(
        {"respa_scan": Table(["dt_omega", "rel_err_exact", "rel_err_cayley", "cayley_bound"], rows)},
        # The bound is attained, so compare in absolute terms (roundoff ~1e-11).
        {"max_cayley_excess_over_bound": float(max(r[2] - r[3] for r in rows)),
         "max_exact_error": float(max(r[1] for r in rows))},
    )


# ---------------------------------------------------------------------------
# Linear model accuracy studies
# ---------------------------------------------------------------------------


def _mc_mean_dh(model: LinearModel, dt: float, m: int, samples: int, rng: RngStream, start: str):
    if start == "equilibrium":
        state0 = sample_equilibrium(model, rng, size=(samples,))
    else:
        shape = (samples, model.grid.n - 1, 1)
        state0 = PhaseState(np.zeros(shape), rng.normal(shape))
    final = integrate(SchemeConfig(dt, "CayleyHam"), model.force, state0, m)
    dh = model.hamiltonian(final) - model.hamiltonian(state0)
    return float(dh.mean()), float(dh.std(ddof=1) / math.sqrt(samples))


def mean_dh(p: dict) -> ExperimentResult:
    rows = []
    summary = {}
    for q in _as_list(p["dt_exponents"]):
        xs, ys = [], []
        for j, ds in enumerate(_as_list(p["ds_list"])):
            model = LinearModel(GridSpec.from_spacing(p["S"], ds))
            dt = ds**q
            m = steps_for(p["T"], dt)
            analytic = mean_dh_analytic(model, dt, m)
            theta, _ = theta_chi(model.basis.omega, dt)
            offeq = 0.5 * dt**2 / (4.0 - dt**2) * float(np.sum(np.sin(m * theta) ** 2))
            row = [q, ds, dt, m, analytic, offeq]
            if p["samples"] > 0:
                row += _mc_mean_dh(model, dt, m, int(p["samples"]), RngStream(p["seed"], j), "equilibrium")
            rows.append(row)
            xs.append(ds)
            ys.append(analytic)
        summary[f"slope_q{q:g}"] = fit_slope(xs, ys)
    return ExperimentResult(
        {"mean_dh": Table(["dt_exponent", "ds", "dt", "m", "mean_dh_analytic", "mean_dh_offeq_analytic"]
                          + (["mean_dh_mc", "mean_dh_mc_se"] if p["samples"] > 0 else []), rows)},
        summary,
    )


def modified_hamiltonian(p: dict) -> ExperimentResult:
    w, dt = p["omega"], p["dt"]
    C = splitting_matrix_1d(w, dt, "cayley")
    x = np.array([p["q0"], p["p0"]])
    rows = []
    for k in range(int(p["steps"]) + 1):
        H = 0.5 * x[1] ** 2 + 0.5 * (1 + w * w) * x[0] ** 2
        rows.append([k, x[0], x[1], H, modified_hamiltonian_1d(x[0], x[1], w, dt)])
        x = C @ x
    Ht = np.array([r[4] for r in rows])
    H = np.array([r[3] for r in rows])
    return ExperimentResult(
        {"modified_hamiltonian": Table(["step", "q", "p", "H", "H_modified"], rows)},
        {
            "max_rel_drift_modified": float(np.max(np.abs(Ht - Ht[0])) / abs(Ht[0])),
            "max_energy_error": float(np.max(np.abs(H - H[0]))),
            "energy_error_bound": 0.5 * dt**2 / (4 - dt**2) * float(np.max(np.array([r[2] for r in rows]) ** 2)),
        },
    )


def _strong_one(S, ds, q, T, samples, seed, index):
    model = LinearModel(GridSpec.from_spacing(S, ds))
    dt = ds**q
    m = steps_for(T, dt)
    state0 = sample_equilibrium(model, RngStream(seed, index), size=(samples,))
    final = integrate(SchemeConfig(dt, "CayleyHam"), model.force, state0, m)
    # Exact solution: per-mode rotation with frequency sqrt(1 + omega^2).
    b = model.basis
    U = dst_transform(state0.u, b, "forward")
    P = dst_transform(state0.p, b, "forward")
    nu = np.sqrt(1.0 + b.omega**2)[:, None]
    t = m * dt
    Ue = np.cos(nu * t) * U + np.sin(nu * t) / nu * P
    Pe = -nu * np.sin(nu * t) * U + np.cos(nu * t) * P
    eu = np.linalg.norm((final.u - dst_transform(Ue, b, "inverse")).reshape(samples, -1), axis=1)
    ep = np.linalg.norm((final.p - dst_transform(Pe, b, "inverse")).reshape(samples, -1), axis=1)
    rt = math.sqrt(samples)
    return [ds, dt, m, eu.mean(), eu.std(ddof=1) / rt, ep.mean(), ep.std(ddof=1) / rt]


def strong_accuracy(p: dict) -> ExperimentResult:
    tasks = [(p["S"], ds, p["dt_exponent"], p["T"], int(p["samples"]), p["seed"], j)
             for j, ds in enumerate(_as_list(p["ds_list"]))]
    rows = _map(_strong_one, tasks, int(p["workers"]))
    ds = [r[0] for r in rows]
    return ExperimentResult(
        {"strong_accuracy": Table(["ds", "dt", "m", "pos_err", "pos_err_se", "mom_err", "mom_err_se"], rows)},
        {"slope_position": fit_slope(ds, [r[3] for r in rows]), "slope_momentum": fit_slope(ds, [r[5] for r in rows])},
    )


def _matrix_norms(E: np.ndarray):
    """Norms of a block-diagonal matrix given its ``(modes, 2, 2)`` blocks."""
    per = np.linalg.norm(E, 2, axis=(-2, -1))
    return float(per.sum()), float(np.sqrt(np.sum(E**2))), float(per.max())


def weak_accuracy(p: dict) -> ExperimentResult:
    gamma, T = p["gamma"], p["T"]
    rows = []
    for ds in _as_list(p["ds_list"]):
        model = LinearModel(GridSpec.from_spacing(p["S"], ds), gamma)
        dt = ds ** p["dt_exponent"]
        m = steps_for(T, dt)
        w = model.basis.omega
        M, Q = oco_matrices(w, gamma, ds, dt)
        Mm, Sm = power_and_noise(M, Q, m)
        Phi = langevin_flow_matrix(w, gamma, m * dt)
        zero = PhaseState(np.zeros((len(w), 1)), np.zeros((len(w), 1)))
        Gamma = exact_langevin_law(model, zero, m * dt).cov
        mean_norms = _matrix_norms(Mm - Phi)
        cov_norms = _matrix_norms(Sm - Gamma)
        rows.append([ds, dt, m, *mean_norms, *cov_norms])
    ds = [r[0] for r in rows]
    names = ["modesum", "frobenius", "spectral"]
    summary = {f"slope_mean_{nm}": fit_slope(ds, [r[3 + i] for r in rows]) for i, nm in enumerate(names)}
    summary.update({f"slope_cov_{nm}": fit_slope(ds, [r[6 + i] for r in rows]) for i, nm in enumerate(names)})
    return ExperimentResult(
        {"weak_accuracy": Table(
            ["ds", "dt", "m", "mean_err_modesum", "mean_err_frobenius", "mean_err_spectral",
             "cov_err_modesum", "cov_err_frobenius", "cov_err_spectral"], rows)},
        summary,
    )


# ---------------------------------------------------------------------------
# HMC on the linear model
# ---------------------------------------------------------------------------


def _linear_target(model: LinearModel) -> TargetModel:
    return TargetModel(model.force, model.ds)


def _hmc_linear_chain(S, ds, dt, T, samples, burn_in, seed, index, keep):
    model = LinearModel(GridSpec.from_spacing(S, ds))
    target = _linear_target(model)
    rng = RngStream(seed, index)
    u0 = sample_equilibrium(model, rng).u
    cfg = HmcConfig(dt, leg_steps(T, dt))
    out = hmc_chain(target, u0, cfg, samples, rng, burn_in=burn_in, keep=keep)
    return out


def hmc_linear(p: dict) -> ExperimentResult:
    S, ds, T = p["S"], p["ds"], p["T"]
    model = LinearModel(GridSpec.from_spacing(S, ds))
    Vu, _ = model.stationary_mode_variances()
    exact_var = (model.basis.V**2) @ Vu
    rows_acc, summary = [], {}
    var_rows = []
    for j, dt in enumerate(_as_list(p["dt_list"])):
        out = _hmc_linear_chain(S, ds, dt, T, int(p["samples"]), int(p["burn_in"]), p["seed"], j, True)
        x = out.samples[..., 0]
        var = x.var(axis=0, ddof=1)
        # Standard error of a variance estimate from batch means of squared deviations.
        se = batch_means_stderr((x - x.mean(axis=0)) ** 2)
        z = (var - exact_var) / se
        alpha_se = float(batch_means_stderr(out.alpha))
        rows_acc.append([dt, leg_steps(T, dt), out.stats.mean_alpha, alpha_se, out.stats.acceptance_rate,
                         float(np.max(np.abs(z)))])
        for i in range(len(var)):
            var_rows.append([dt, i + 1, (i + 1) * ds, var[i], se[i], exact_var[i]])
        summary[f"mean_alpha_dt{dt:g}"] = out.stats.mean_alpha
        summary[f"max_abs_z_dt{dt:g}"] = float(np.max(np.abs(z)))
    return ExperimentResult(
        {
            "hmc_acceptance": Table(["dt", "m", "mean_alpha", "mean_alpha_se", "acceptance_rate", "max_abs_z_variance"], rows_acc),
            "hmc_variances": Table(["dt", "point", "s", "chain_variance", "variance_se", "exact_variance"], var_rows),
        },
        summary,
    )


def _scaling_one(S, ds, q, T, samples, burn_in, seed, index):
    dt = ds**q
    out = _hmc_linear_chain(S, ds, dt, T, samples, burn_in, seed, index, False)
    return [ds, dt, leg_steps(T, dt), out.stats.mean_alpha, float(batch_means_stderr(out.alpha)),
            out.stats.acceptance_rate]


def hmc_acceptance_scaling(p: dict) -> ExperimentResult:
    tasks = [(p["S"], ds, p["dt_exponent"], p["T"], int(p["samples"]), int(p["burn_in"]), p["seed"], j)
             for j, ds in enumerate(_as_list(p["ds_list"]))]
    rows = _map(_scaling_one, tasks, int(p["workers"]))
    return ExperimentResult(
        {"hmc_acceptance_scaling": Table(["ds", "dt", "m", "mean_alpha", "mean_alpha_se", "acceptance_rate"], rows)},
        {"mean_alpha": [r[3] for r in rows]},
    )


# ---------------------------------------------------------------------------
# Three-well bridge
# ---------------------------------------------------------------------------


def three_well_problem(ds: float, S: float = 1.0, beta: float = 2.0) -> BridgeProblem:
    V = three_well_potential()
    xm, xp = find_minimum(V, [-1.0, 0.0]), find_minimum(V, [1.0, 0.0])
    return BridgeProblem(V, xm, xp, beta, GridSpec.from_spacing(S, ds))


def _bridge_chain(S, ds, dt, T, beta, sampler, kind, chains, samples, burn_in, lam, phi, seed, index, keep):
    problem = three_well_problem(ds, S, beta)
    target = bridge_target(problem)
    rng = RngStream(seed, index)
    u0 = np.zeros((chains,) + problem.line_path().shape)
    if sampler == "hmc":
        cfg = HmcConfig(dt, leg_steps(T, dt), kind=kind)
        out = hmc_chain(target, u0, cfg, samples, rng, burn_in=burn_in, keep=keep)
        return out.stats.mean_alpha, out.stats.acceptance_rate, out.samples
    cfg = HmcConfig(dt, 1, phi=phi, lam=lam, kind=kind)
    warm = rhmc_run(target, u0, cfg, burn_in * lam, rng)
    res = rhmc_run(target, warm.final.u, cfg, samples * lam, rng)
    return res.stats.mean_alpha, res.stats.acceptance_rate, res.samples if keep else None


def bridge_acceptance(p: dict) -> ExperimentResult:
    tasks, keys = [], []
    idx = 0
    for ds in _as_list(p["ds_list"]):
        for dt in _as_list(p["dt_list"]):
            for kind in p["kinds"].split(","):
                tasks.append((p["S"], ds, dt, p["T"], p["beta"], p["sampler"], kind, int(p["chains"]),
                              int(p["samples"]) // int(p["chains"]), int(p["burn_in"]), p["lam"], p["phi"],
                              p["seed"], idx, False))
                keys.append((ds, dt, kind))
                idx += 1
    results = _map(_bridge_chain, tasks, int(p["workers"]))
    rows = [[ds, dt, kind, p["sampler"], a, r] for (ds, dt, kind), (a, r, _) in zip(keys, results)]
    summary = {f"{kind}_ds{ds:g}_dt{dt:g}": a for (ds, dt, kind), (a, _, _) in zip(keys, results)}
    return ExperimentResult(
        {"bridge_acceptance": Table(["ds", "dt", "integrator", "sampler", "mean_alpha", "acceptance_rate"], rows)},
        summary,
    )


def bridge_moments(p: dict) -> ExperimentResult:
    problem = three_well_problem(p["ds"], p["S"], p["beta"])
    chains = int(p["chains"])
    a, r, samples = _bridge_chain(p["S"], p["ds"], p["dt"], p["T"], p["beta"], p["sampler"], p["kind"], chains,
                                  int(p["samples"]) // chains, int(p["burn_in"]), p["lam"], p["phi"],
                                  p["seed"], 0, True)
    # samples: (draws, chains, n-1, d); pool chains, standard errors from per-chain means.
    shifted = samples + problem.shift()
    mean = shifted.mean(axis=(0, 1))
    var = shifted.var(axis=(0, 1), ddof=1)
    chain_means = shifted.mean(axis=0)
    se = chain_means.std(axis=0, ddof=1) / math.sqrt(chains) if chains > 1 else batch_means_stderr(shifted[:, 0])
    rows = []
    pts = problem.grid.points()
    for i in range(len(pts)):
        for c in range(problem.d):
            rows.append([i + 1, pts[i], c + 1, mean[i, c], se[i, c], var[i, c]])
    Gmin = path_potential(problem.potential, problem.beta, problem.x_plus)[0]
    return ExperimentResult(
        {"bridge_moments": Table(["point", "s", "component", "mean", "mean_se", "variance"], rows)},
        {
            "mean_alpha": a,
            "acceptance_rate": r,
            "sum_mean_se": float(se.sum()),
            "V_at_minimum": float(problem.potential.value(problem.x_plus)),
            "G_at_minimum": float(Gmin),
            "x_plus": problem.x_plus.tolist(),
        },
    )


# ---------------------------------------------------------------------------
# Identity checks and eigenvalue pictures
# ---------------------------------------------------------------------------


def mala_hmc_check(p: dict) -> ExperimentResult:
    rows = []
    rng = RngStream(p["seed"], 0)
    linear = LinearModel(GridSpec(p["S"], int(p["n"])))
    quartic = BridgeProblem(polynomial_potential(2, 1.0, 0.5), [-1.0, 0.0], [1.0, 0.5], p["beta"],
                            GridSpec(p["S"], int(p["n"])))
    targets = {"linear": _linear_target(linear), "quartic_bridge": bridge_target(quartic)}
    worst = 0.0
    for name, target in targets.items():
        for j, dt in enumerate(_as_list(p["dt_list"])):
            # Typical state: sine modes drawn with variance 1 / (scale (1 + omega_k^2)).
            basis = target.operator.basis
            sd = 1.0 / np.sqrt(target.scale * (1.0 + basis.omega**2))
            modes = rng.normal((target.operator.size, target.operator.d)) * sd[:, None]
            u = dst_transform(modes, basis, "inverse")
            rep = mala_hmc_equivalence_check(target, u, dt, int(p["seed"]) + j)
            rows.append([name, dt, rep["dt_hmc"], rep["max_position_diff"], rep["max_exponent_diff"],
                         float(rep["mala_exponent"])])
            worst = max(worst, rep["max_position_diff"], rep["max_exponent_diff"])
    return ExperimentResult(
        {"mala_hmc_check": Table(["target", "dt_mala", "dt_hmc", "max_position_diff", "max_exponent_diff",
                                  "mala_exponent"], rows)},
        {"max_difference": worst},
    )


def eigen_circle(p: dict) -> ExperimentResult:
    w = p["omega"]
    A = np.array([[0.0, 1.0], [-w * w, 0.0]])
    rows = []
    for t in np.linspace(p["t_min"], p["t_max"], int(p["snapshots"])):
        for name, M in (("cayley", dense_cayley(t * A)), ("exponential", expm(t * A))):
            chk = strong_stability_check(M)
            ev = np.sort_complex(chk["eigenvalues"].astype(complex))
            rows.append([t, name, ev[0].real, ev[0].imag, ev[1].real, ev[1].imag, int(chk["strongly_stable"])])
    return ExperimentResult(
        {"eigen_circle": Table(["t", "map", "re1", "im1", "re2", "im2", "strongly_stable"], rows)},
        {"cayley_always_strongly_stable": all(r[6] == 1 for r in rows if r[1] == "cayley")},
    )


EXPERIMENTS: dict[str, Callable[[dict], ExperimentResult]] = {
    "energy-trace": energy_trace,
    "spectral-energy": spectral_energy,
    "respa-scan": respa_scan,
    "mean-dh": mean_dh,
    "modified-hamiltonian": modified_hamiltonian,
    "strong-accuracy": strong_accuracy,
    "weak-accuracy": weak_accuracy,
    "hmc-linear": hmc_linear,
    "hmc-acceptance-scaling": hmc_acceptance_scaling,
    "bridge-acceptance": bridge_acceptance,
    "bridge-moments": bridge_moments,
    "mala-hmc-check": mala_hmc_check,
    "eigen-circle": eigen_circle,
}

_LINEAR = {"S": 10.0, "n": 1000, "dt": 0.2, "T": 200.0, "every": 1, "replicas": 1}
_BRIDGE = {"S": 1.0, "beta": 2.0, "T": 2.0, "samples": 10000, "burn_in": 50, "chains": 20,
           "lam": 2.0, "phi": math.pi / 2, "sampler": "hmc"}

DEFAULTS: dict[str, dict] = {
    "energy-trace": {**_LINEAR, "model": "linear", "beta": 2.0},
    "spectral-energy": {**_LINEAR, "snapshots": [0.0, 50.0, 100.0, 200.0]},
    "respa-scan": {"omega": 10.0, "periods": 100, "dt_omega_min": 0.01, "dt_omega_max": 10.0, "points": 1000},
    "mean-dh": {"S": 10.0, "T": 1.0, "ds_list": [2.0**-k for k in range(3, 8)], "dt_exponents": [0.75, 1.0],
                "samples": 0},
    "modified-hamiltonian": {"omega": 3.0, "dt": 1.85, "q0": 1.0, "p0": 0.0, "steps": 10000},
    "strong-accuracy": {"S": 10.0, "T": 1.0, "ds_list": [2.0**-k for k in range(2, 7)], "dt_exponent": 2.5,
                        "samples": 100},
    "weak-accuracy": {"S": 10.0, "T": 4.0, "gamma": 0.8, "ds_list": [2.0**-k for k in range(2, 6)],
                      "dt_exponent": 3.0},
    "hmc-linear": {"S": 10.0, "ds": 0.03125, "T": 5.0, "dt_list": [0.5, 0.25], "samples": 10000, "burn_in": 1000},
    "hmc-acceptance-scaling": {"S": 10.0, "T": 1.0, "ds_list": [1 / 8, 1 / 16, 1 / 32, 1 / 64], "dt_exponent": 0.25,
                               "samples": 10000, "burn_in": 1000},
    "bridge-acceptance": {**_BRIDGE, "ds_list": [0.02], "dt_list": [0.03], "kinds": "CayleyHam,ExactHam"},
    "bridge-moments": {**_BRIDGE, "ds": 0.02, "dt": 0.03, "kind": "CayleyHam"},
    "mala-hmc-check": {"S": 1.0, "n": 5, "beta": 2.0, "dt_list": [0.1, 0.005]},
    "eigen-circle": {"omega": 3.0, "t_min": 0.125, "t_max": 2.0, "snapshots": 16},
}
for _d in DEFAULTS.values():
    _d.setdefault("workers", 1)
    _d.setdefault("seed", None)

# Bridge energy traces default to the nonlinear figure setup when model=bridge.
BRIDGE_TRACE = {"S": 1.0, "n": 400, "dt": 0.00625, "T": 25.0, "every": 10}

STOCHASTIC = {
    "energy-trace", "spectral-energy", "mean-dh", "strong-accuracy", "hmc-linear", "hmc-acceptance-scaling",
    "bridge-acceptance", "bridge-moments", "mala-hmc-check",
}


def resolved_params(name: str, params: dict) -> dict:
    """``params`` merged over the experiment's defaults."""
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}")
    base = dict(DEFAULTS[name])
    if name == "energy-trace" and params.get("model") == "bridge":
        base.update(BRIDGE_TRACE)
    return {**base, **params}


def run_experiment(name: str, params: dict) -> ExperimentResult:
    """Run ``name`` with ``params`` merged over its defaults."""
    return EXPERIMENTS[name](resolved_params(name, params))
