"""Metropolis-Hastings samplers built on the Cayley splitting, plus chain statistics.

Every sampler accepts batched states ``(..., n - 1, d)``; each leading index is an
independent chain sharing the same random stream.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import PhaseState, solve_shifted
from .integrators import ForceField, RngStream, SchemeConfig, ou_flow, step

__all__ = [
    "TargetModel",
    "HmcConfig",
    "ChainStats",
    "HmcResult",
    "MalaResult",
    "RhmcResult",
    "metropolis_accept",
    "acceptance_probability",
    "metropolized_cayley_step",
    "metropolized_langevin_step",
    "hmc_step",
    "hmc_chain",
    "rhmc_run",
    "mala_propose",
    "mala_exponent",
    "mala_step",
    "mala_hmc_equivalence_check",
    "chain_statistics",
    "batch_means_stderr",
]


@dataclass
class TargetModel:
    """Extended density ``exp(-scale * H(u, p))`` with ``H = |p|^2/2 - u.Lu/2 + G(u)``.

    ``force.potential`` is the sum ``G`` and ``force.force`` its negative gradient.
    Momenta carry variance ``1/scale`` per coordinate.
    """

    force: ForceField
    scale: float

    def __post_init__(self):
        if self.force.potential is None:
            raise ValueError("a sampling target needs a potential, not only a force")
        if not self.scale > 0:
            raise ValueError("acceptance scale must be positive")

    @property
    def operator(self):
        return self.force.operator

    @property
    def ds(self) -> float:
        return self.operator.grid.ds

    def potential_energy(self, u: np.ndarray) -> np.ndarray:
        """``G(u) - u.Lu/2`` per batch entry."""
        return self.force.potential(u) - 0.5 * np.sum(u * self.operator.apply(u), axis=(-2, -1))

    def hamiltonian(self, state: PhaseState) -> np.ndarray:
        return 0.5 * np.sum(state.p**2, axis=(-2, -1)) + self.potential_energy(state.u)

    def log_density(self, u: np.ndarray) -> np.ndarray:
        """Unnormalized log density of the position marginal."""
        return -self.scale * self.potential_energy(u)

    def grad_potential(self, u: np.ndarray) -> np.ndarray:
        return -self.force(u)

    def draw_momentum(self, shape, rng: RngStream) -> np.ndarray:
        return rng.normal(shape) / math.sqrt(self.scale)


@dataclass(frozen=True)
class HmcConfig:
    """HMC family settings.

    ``m`` integration steps per proposal, Horowitz angle ``phi`` and mean leg
    duration ``lam`` for randomized HMC, ``theta`` for the MALA proposal family,
    and ``kind`` naming the Hamiltonian integrator.
    """

    dt: float
    m: int = 1
    phi: float = math.pi / 2
    lam: float = 1.0
    theta: float = 0.5
    kind: str = "CayleyHam"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one integration step")
        if not 0 < self.phi <= math.pi / 2 + 1e-15:
            raise ValueError("Horowitz angle must lie in (0, pi/2]")
        if not self.lam > 0:
            raise ValueError("mean leg duration must be positive")
        if not 0 <= self.theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        if self.kind not in ("CayleyHam", "ExactHam", "Verlet"):
            raise ValueError("HMC needs a Hamiltonian integrator")

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(self.dt, self.kind)


def acceptance_probability(dh_scaled) -> np.ndarray:
    """``min(1, exp(-x))`` with NaN mapped to 0."""
    x = np.asarray(dh_scaled, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.exp(-np.maximum(x, 0.0))
    return np.where(np.isnan(x), 0.0, a)


def metropolis_accept(dh_scaled, rng: RngStream) -> np.ndarray:
    """Accept with probability ``min(1, exp(-dh_scaled))``.

    One uniform is drawn per entry regardless of the outcome, keeping streams
    aligned. NaN exponents are rejected and reported with a ``RuntimeWarning``.
    """
    x = np.asarray(dh_scaled, dtype=float)
    draw = rng.uniform(x.shape)
    if np.any(np.isnan(x)):
        warnings.warn("NaN acceptance exponent; proposal rejected", RuntimeWarning, stacklevel=2)
    with np.errstate(invalid="ignore"):
        return (x <= 0) | (np.log(draw) < -x)


def _select(accepted, new, old):
    return np.where(np.asarray(accepted)[..., None, None], new, old)


def _hamiltonian_move(target: TargetModel, state: PhaseState, scheme: SchemeConfig, m: int) -> PhaseState:
    for _ in range(m):
        state = step(scheme, target.force, state)
    return state


def metropolized_cayley_step(target: TargetModel, state: PhaseState, dt: float, rng: RngStream, kind: str = "CayleyHam"):
    """One Metropolized integrator step; rejection flips the momentum.

    Returns ``(new_state, accepted)``.
    """
    proposal = _hamiltonian_move(target, state, SchemeConfig(dt, kind), 1)
    with np.errstate(over="ignore", invalid="ignore"):
        x = target.scale * (target.hamiltonian(proposal) - target.hamiltonian(state))
    acc = metropolis_accept(x, rng)
    return PhaseState(_select(acc, proposal.u, state.u), _select(acc, proposal.p, -state.p)), acc


def metropolized_langevin_step(target: TargetModel, state: PhaseState, dt: float, gamma: float, rng: RngStream):
    """(O) half-step, Metropolized Cayley step, (O) half-step.

    The acceptance exponent compares the proposal against the state after the
    first (O) half-step. Returns ``(new_state, accepted)``.
    """
    beta = target.scale / target.ds
    state = ou_flow(state, 0.5 * dt, gamma, beta, target.ds, rng)
    state, acc = metropolized_cayley_step(target, state, dt, rng)
    return ou_flow(state, 0.5 * dt, gamma, beta, target.ds, rng), acc


@dataclass
class HmcResult:
    u: np.ndarray
    accepted: np.ndarray
    dh: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return acceptance_probability(self.dh)


def hmc_step(target: TargetModel, u: np.ndarray, config: HmcConfig, rng: RngStream) -> HmcResult:
    """Fresh momentum, ``m`` integrator steps, Metropolis test; momentum is discarded.

    ``dh`` holds the scaled exponent ``scale * (H(proposal) - H(start))``.
    """
    start = PhaseState(u, target.draw_momentum(np.shape(u), rng))
    proposal = _hamiltonian_move(target, start, config.scheme(), config.m)
    with np.errstate(over="ignore", invalid="ignore"):
        x = target.scale * (target.hamiltonian(proposal) - target.hamiltonian(start))
    acc = metropolis_accept(x, rng)
    return HmcResult(_select(acc, proposal.u, start.u), acc, x)


@dataclass
class ChainStats:
    """Streaming per-coordinate mean/variance and acceptance bookkeeping.

    Updates use the pairwise (Chan et al.) combination, so merging statistics of
    sub-chains is associative.
    """

    count: int = 0
    mean: np.ndarray | float = 0.0
    m2: np.ndarray | float = 0.0
    n_accepted: float = 0.0
    n_proposed: int = 0
    alpha_sum: float = 0.0

    def update(self, samples: np.ndarray) -> "ChainStats":
        """Add samples stacked along axis 0."""
        samples = np.asarray(samples, dtype=float)
        nb = samples.shape[0]
        if nb == 0:
            return self
        mb = samples.mean(axis=0)
        m2b = ((samples - mb) ** 2).sum(axis=0)
        return self.merge(ChainStats(nb, mb, m2b))

    def record(self, accepted, alpha=None) -> None:
        acc = np.asarray(accepted, dtype=float)
        self.n_accepted += float(acc.sum())
        self.n_proposed += acc.size
        if alpha is not None:
            self.alpha_sum += float(np.sum(alpha))

    def merge(self, other: "ChainStats") -> "ChainStats":
        n = self.count + other.count
        if other.count == 0:
            merged_mean, merged_m2 = self.mean, self.m2
        elif self.count == 0:
            merged_mean, merged_m2 = other.mean, other.m2
        else:
            delta = np.asarray(other.mean) - self.mean
            merged_mean = self.mean + delta * other.count / n
            merged_m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / n
        return ChainStats(
            n,
            merged_mean,
            merged_m2,
            self.n_accepted + other.n_accepted,
            self.n_proposed + other.n_proposed,
            self.alpha_sum + other.alpha_sum,
        )

    @property
    def variance(self):
        """Unbiased sample variance (zero for a single sample)."""
        if self.count < 2:
            return np.zeros_like(np.asarray(self.mean, dtype=float))
        return self.m2 / (self.count - 1)

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposed if self.n_proposed else float("nan")

    @property
    def mean_alpha(self) -> float:
        return self.alpha_sum / self.n_proposed if self.n_proposed else float("nan")


def chain_statistics(samples, accepted=None) -> ChainStats:
    """Statistics of samples stacked along axis 0."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 0 or samples.shape[0] == 0:
        raise ValueError("need at least one sample")
    stats = ChainStats().update(samples)
    if accepted is not None:
        stats.record(accepted)
    return stats


def batch_means_stderr(x: np.ndarray, n_batches: int = 20) -> np.ndarray:
    """Standard error of the mean along axis 0 from non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    size = x.shape[0] // n_batches
    if size < 1:
        raise ValueError("series shorter than the number of batches")
    b = x[: size * n_batches].reshape((n_batches, size) + x.shape[1:]).mean(axis=1)
    return b.std(axis=0, ddof=1) / math.sqrt(n_batches)


@dataclass
class ChainOutput:
    samples: np.ndarray | None
    stats: ChainStats
    alpha: np.ndarray = field(default_factory=lambda: np.empty(0))


def hmc_chain(
    target: TargetModel,
    u0: np.ndarray,
    config: HmcConfig,
    n_samples: int,
    rng: RngStream,
    burn_in: int = 0,
    keep: bool = True,
) -> ChainOutput:
    """Run ``burn_in + n_samples`` HMC transitions and collect the last ``n_samples``."""
    u = np.asarray(u0, dtype=float)
    stats = ChainStats()
    kept = [] if keep else None
    alphas = np.empty((n_samples,) + u.shape[:-2])
    for k in range(burn_in + n_samples):
        res = hmc_step(target, u, config, rng)
        u = res.u
        if k >= burn_in:
            j = k - burn_in
            alphas[j] = res.alpha
            stats.record(res.accepted, res.alpha)
            stats = _merge_keep(stats, u[None])
            if keep:
                kept.append(u)
    return ChainOutput(np.array(kept) if keep else None, stats, alphas)


def _merge_keep(stats: ChainStats, batch: np.ndarray) -> ChainStats:
    merged = stats.merge(ChainStats().update(batch))
    merged.n_accepted, merged.n_proposed, merged.alpha_sum = stats.n_accepted, stats.n_proposed, stats.alpha_sum
    return merged


@dataclass
class RhmcResult:
    samples: np.ndarray
    durations: np.ndarray
    stats: ChainStats
    final: PhaseState


def rhmc_run(target: TargetModel, u0: np.ndarray, config: HmcConfig, total_time: float, rng: RngStream) -> RhmcResult:
    """Randomized-duration HMC with partial momentum refresh.

    Each leg lasts ``dt_leg ~ Exp(mean lam)`` and uses ``max(1, round(dt_leg/dt))``
    integrator steps followed by a Metropolis test (momentum flip on rejection).
    At each leg end the momentum is refreshed to ``cos(phi) p + sin(phi) xi``.
    Legs share their duration across a batch of chains.
    """
    u = np.asarray(u0, dtype=float)
    state = PhaseState(u, target.draw_momentum(u.shape, rng))
    scheme = config.scheme()
    c, s = math.cos(config.phi), math.sin(config.phi)
    if config.phi == math.pi / 2:
        c = 0.0
    stats = ChainStats()
    samples, durations = [], []
    elapsed = 0.0
    while elapsed < total_time:
        leg = float(rng.exponential(config.lam))
        n_steps = max(1, int(round(leg / config.dt)))
        proposal = _hamiltonian_move(target, state, scheme, n_steps)
        with np.errstate(over="ignore", invalid="ignore"):
            x = target.scale * (target.hamiltonian(proposal) - target.hamiltonian(state))
        acc = metropolis_accept(x, rng)
        state = PhaseState(_select(acc, proposal.u, state.u), _select(acc, proposal.p, -state.p))
        stats.record(acc, acceptance_probability(x))
        state = PhaseState(state.u, c * state.p + s * target.draw_momentum(state.p.shape, rng))
        samples.append(state.u)
        durations.append(leg)
        elapsed += leg
    arr = np.array(samples)
    full = ChainStats().update(arr)
    full.n_accepted, full.n_proposed, full.alpha_sum = stats.n_accepted, stats.n_proposed, stats.alpha_sum
    return RhmcResult(arr, np.array(durations), full, state)


def mala_propose(target: TargetModel, u: np.ndarray, dt: float, theta: float, xi: np.ndarray) -> np.ndarray:
    """Theta-method proposal ``(I - theta dt L) u' = (I + (1-theta) dt L) u + dt F(u) + noise``."""
    L = target.operator
    rhs = u + (1.0 - theta) * dt * L.apply(u) + dt * target.force(u) + math.sqrt(2.0 * dt / target.scale) * xi
    return solve_shifted(L, theta * dt, rhs)


def _log_proposal(target: TargetModel, u, u_new, dt, theta):
    L = target.operator
    r = u_new - theta * dt * L.apply(u_new) - u - (1.0 - theta) * dt * L.apply(u) - dt * target.force(u)
    return -target.scale / (4.0 * dt) * np.sum(r * r, axis=(-2, -1))


def mala_exponent(target: TargetModel, u, u_new, dt: float, theta: float = 0.5, formula: str = "auto"):
    """Acceptance exponent ``x`` with ``alpha = min(1, exp(-x))``.

    ``formula="closed"`` uses the explicit Crank-Nicolson expression (theta = 1/2
    only); ``"generic"`` evaluates the Metropolis-Hastings ratio from the target
    and proposal densities. ``"auto"`` picks the closed form when theta = 1/2.
    """
    if formula == "auto":
        formula = "closed" if theta == 0.5 else "generic"
    if formula == "generic":
        log_ratio = (
            target.log_density(u_new) + _log_proposal(target, u_new, u, dt, theta)
            - target.log_density(u) - _log_proposal(target, u, u_new, dt, theta)
        )
        return -log_ratio
    if formula != "closed" or theta != 0.5:
        raise ValueError("the closed-form exponent exists only for theta = 1/2")
    g0, g1 = target.grad_potential(u), target.grad_potential(u_new)
    L = target.operator

    def dot(a, b):
        return np.sum(a * b, axis=(-2, -1))

    inner = (
        target.force.potential(u_new) - target.force.potential(u)
        - 0.5 * dot(u_new - u, g0 + g1)
        + 0.25 * dt * (dot(g1, g1) - dot(g0, g0))
        - 0.25 * dt * dot(L.apply(u_new + u), g1 - g0)
    )
    return target.scale * inner


@dataclass
class MalaResult:
    u: np.ndarray
    accepted: np.ndarray
    dh: np.ndarray
    proposal: np.ndarray


def mala_step(target: TargetModel, u: np.ndarray, dt: float, theta: float, rng: RngStream, formula: str = "auto") -> MalaResult:
    """One Metropolized theta-method step."""
    u = np.asarray(u, dtype=float)
    proposal = mala_propose(target, u, dt, theta, rng.normal(u.shape))
    with np.errstate(over="ignore", invalid="ignore"):
        x = mala_exponent(target, u, proposal, dt, theta, formula)
    acc = metropolis_accept(x, rng)
    return MalaResult(_select(acc, proposal, u), acc, x, proposal)


def mala_hmc_equivalence_check(target: TargetModel, u: np.ndarray, dt: float, rng_seed: int) -> dict:
    """Compare Crank-Nicolson MALA at ``dt`` with one Cayley HMC step at ``sqrt(2 dt)``.

    Both moves use the same normal vector ``xi``: MALA's noise term and the HMC
    momentum ``xi / sqrt(scale)`` coincide under this coupling.
    """
    u = np.asarray(u, dtype=float)
    xi = RngStream(rng_seed).normal(u.shape)
    mala_u = mala_propose(target, u, dt, 0.5, xi)
    mala_x = mala_exponent(target, u, mala_u, dt, 0.5, "closed")
    tau = math.sqrt(2.0 * dt)
    start = PhaseState(u, xi / math.sqrt(target.scale))
    hmc = _hamiltonian_move(target, start, SchemeConfig(tau, "CayleyHam"), 1)
    hmc_x = target.scale * (target.hamiltonian(hmc) - target.hamiltonian(start))
    return {
        "dt_mala": dt,
        "dt_hmc": tau,
        "max_position_diff": float(np.max(np.abs(mala_u - hmc.u))),
        "max_exponent_diff": float(np.max(np.abs(mala_x - hmc_x))),
        "mala_exponent": mala_x,
        "hmc_exponent": hmc_x,
    }
