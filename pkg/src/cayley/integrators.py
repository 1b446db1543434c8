"""Sub-flows (A), (B), (O) and the palindromic schemes built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import (
    LaplacianOperator,
    PhaseState,
    SpectralBasis,
    cayley_block_apply,
    dst_transform,
)
from .oscillator import splitting_matrix_1d

__all__ = [
    "SCHEME_KINDS",
    "SchemeConfig",
    "ForceField",
    "RngStream",
    "flow_A",
    "kick_B",
    "ou_flow",
    "step",
    "integrate",
    "respa_energy_scan",
]

SCHEME_KINDS = ("CayleyHam", "ExactHam", "CayleyLangevin", "ExactLangevin", "Verlet")


@dataclass(frozen=True)
class SchemeConfig:
    """Integrator choice plus physical parameters.

    ``beta`` sets the momentum noise level: the (O)-flow relaxes each momentum
    coordinate toward variance ``1 / (beta * ds)``.
    """

    dt: float
    kind: str = "CayleyHam"
    gamma: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}; expected one of {SCHEME_KINDS}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.gamma < 0:
            raise ValueError(f"friction must be non-negative, got {self.gamma}")
        if not self.beta > 0:
            raise ValueError(f"inverse temperature must be positive, got {self.beta}")

    @property
    def langevin(self) -> bool:
        return self.kind.endswith("Langevin")

    @property
    def a_method(self) -> str:
        return "exact" if self.kind.startswith("Exact") else "cayley"


@dataclass
class ForceField:
    """Nonlinear force ``F(u)`` next to the Laplacian, with an optional potential sum.

    ``potential(u)`` returns one value per batch entry and satisfies
    ``F = -grad potential`` when supplied.
    """

    force: Callable[[np.ndarray], np.ndarray]
    operator: LaplacianOperator
    potential: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.force(u)

    @classmethod
    def zero(cls, operator: LaplacianOperator) -> "ForceField":
        return cls(
            lambda u: np.zeros_like(u),
            operator,
            lambda u: np.zeros(np.shape(u)[:-2]),
        )


class RngStream:
    """Reproducible normal/uniform stream derived from ``(seed, index)``.

    Streams with distinct indices are independent Philox generators spawned from
    the same seed sequence, so results do not depend on how replicas are
    scheduled across workers.
    """

    def __init__(self, seed: int, index: int = 0):
        self.seed = int(seed)
        self.index = int(index)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.index,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def normal(self, shape=()) -> np.ndarray:
        return self.generator.standard_normal(shape)

    def uniform(self, shape=()) -> np.ndarray:
        return self.generator.random(shape)

    def exponential(self, mean: float, shape=()) -> np.ndarray:
        return self.generator.exponential(mean, shape)

    def spawn(self, index: int) -> "RngStream":
        """Child stream for sub-task ``index``; deterministic in (seed, self.index, index)."""
        child = RngStream.__new__(RngStream)
        child.seed, child.index = self.seed, self.index
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.index, int(index)))
        child.generator = np.random.Generator(np.random.Philox(ss))
        return child


def _exact_rotation(state: PhaseState, t: float, basis: SpectralBasis) -> PhaseState:
    U = dst_transform(state.u, basis, "forward")
    P = dst_transform(state.p, basis, "forward")
    w = basis.omega[:, None]
    c, s = np.cos(w * t), np.sin(w * t)
    s_over_w = np.where(w > 0, s / np.where(w > 0, w, 1.0), t)
    U1 = c * U + s_over_w * P
    P1 = -w * s * U + c * P
    return PhaseState(dst_transform(U1, basis, "inverse"), dst_transform(P1, basis, "inverse"))


def flow_A(
    state: PhaseState,
    t: float,
    L: LaplacianOperator,
    method: str = "cayley",
    basis: SpectralBasis | None = None,
) -> PhaseState:
    """Linear flow of ``u' = p, p' = L u`` over time ``t``, exact or Cayley."""
    if method == "cayley":
        return cayley_block_apply(L, t, state)
    if method == "exact":
        if basis is None:
            raise ValueError("exact (A)-flow needs a spectral basis")
        return _exact_rotation(state, t, basis)
    raise ValueError(f"method must be 'exact' or 'cayley', got {method!r}")


def kick_B(state: PhaseState, h: float, force: ForceField) -> PhaseState:
    """Momentum kick ``p <- p + h F(u)``."""
    if h == 0:
        return state.copy()
    return PhaseState(state.u, state.p + h * force(state.u))


def ou_flow(state: PhaseState, h: float, gamma: float, beta: float, ds: float, rng: RngStream) -> PhaseState:
    """Exact Ornstein-Uhlenbeck update of the momentum over time ``h``."""
    if gamma < 0 or h < 0:
        raise ValueError("need gamma >= 0 and h >= 0")
    if gamma == 0 or h == 0:
        return state.copy()
    decay = math.exp(-gamma * h)
    sigma = math.sqrt(1.0 / (beta * ds)) * math.sqrt(-math.expm1(-2.0 * gamma * h))
    return PhaseState(state.u, decay * state.p + sigma * rng.normal(state.p.shape))


def _hamiltonian_step(config: SchemeConfig, force: ForceField, state: PhaseState) -> PhaseState:
    L = force.operator
    h = 0.5 * config.dt
    if config.kind == "Verlet":
        p = state.p + h * (L.apply(state.u) + force(state.u))
        u = state.u + config.dt * p
        p = p + h * (L.apply(u) + force(u))
        return PhaseState(u, p)
    mid = kick_B(state, h, force)
    basis = L.basis if config.a_method == "exact" else None
    mid = flow_A(mid, config.dt, L, config.a_method, basis)
    return kick_B(mid, h, force)


def step(
    config: SchemeConfig,
    force: ForceField,
    state: PhaseState,
    rng: RngStream | None = None,
) -> PhaseState:
    """One step of the selected scheme.

    Langevin kinds wrap the Hamiltonian step between two (O) half-steps; with
    ``gamma = 0`` they coincide with the Hamiltonian kind pathwise.
    """
    if not config.langevin:
        return _hamiltonian_step(config, force, state)
    if config.gamma > 0 and rng is None:
        raise ValueError("Langevin schemes need an RngStream")
    ds = force.operator.grid.ds
    h = 0.5 * config.dt
    state = ou_flow(state, h, config.gamma, config.beta, ds, rng)
    state = _hamiltonian_step(config, force, state)
    return ou_flow(state, h, config.gamma, config.beta, ds, rng)


def integrate(
    config: SchemeConfig,
    force: ForceField,
    state: PhaseState,
    n_steps: int,
    rng: RngStream | None = None,
    observe: Callable[[PhaseState], np.ndarray] | None = None,
    every: int = 1,
):
    """Run ``n_steps`` steps; optionally record ``observe(state)`` every ``every`` steps.

    Returns the final state and, if ``observe`` is given, an array of observations
    at steps ``0, every, 2 every, ...``.
    """
    records = [] if observe is None else [observe(state)]
    for k in range(1, n_steps + 1):
        state = step(config, force, state, rng)
        if observe is not None and k % every == 0:
            records.append(observe(state))
    if observe is None:
        return state
    return state, np.array(records)


def respa_energy_scan(omega: float, dt_list, periods: int = 100) -> list[dict]:
    """Multiple-time-step scan on ``H = p^2/2 + q^2/2 + omega^2 q^2/2``.

    The fast part ``p^2/2 + omega^2 q^2/2`` is advanced exactly or by the Cayley
    map and the slow ``q^2/2`` part by half-kicks. Each row gives the maximum
    relative energy error from ``(q, p) = (1, 0)`` over ``periods`` fast periods.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    duration = periods * 2.0 * np.pi / omega
    H0 = 0.5 * (1.0 + omega**2)
    rows = []
    for dt in dt_list:
        n_steps = int(math.ceil(duration / dt))
        row = {"dt": float(dt), "dt_omega": float(dt * omega)}
        for kind in ("exact", "cayley"):
            M = splitting_matrix_1d(omega, dt, kind)
            err = _max_energy_error(M, n_steps, omega) / H0
            row[f"rel_err_{kind}"] = float(err)
        rows.append(row)
    return rows


def _max_energy_error(M: np.ndarray, n_steps: int, omega: float) -> float:
    # Iterate in chunks of precomputed powers to keep the Python loop short.
    chunk = 256
    powers = np.empty((chunk, 2, 2))
    powers[0] = np.eye(2)
    for k in range(1, chunk):
        powers[k] = M @ powers[k - 1]
    Mc = M @ powers[-1]
    x = np.array([1.0, 0.0])
    H0 = 0.5 * (1.0 + omega**2)
    worst = 0.0
    done = 0
    while done <= n_steps:
        traj = powers[: min(chunk, n_steps - done + 1)] @ x
        H = 0.5 * traj[:, 1] ** 2 + 0.5 * (1.0 + omega**2) * traj[:, 0] ** 2
        worst = max(worst, float(np.max(np.abs(H - H0))))
        if not np.isfinite(worst):
            return math.inf
        x = Mc @ x
        done += chunk
    return worst
