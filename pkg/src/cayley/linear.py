"""Linear wave testbed: ``H = |p|^2/2 - u.Lu/2 + |u|^2/2`` and its Langevin version.

All laws and identities are computed mode by mode in sine coordinates, where
the model splits into independent oscillators with frequencies ``omega_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import GridSpec, PhaseState, build_dirichlet_laplacian, dst_transform
from .integrators import ForceField, RngStream
from .oscillator import (
    GaussianLaw,
    g_stability,
    langevin_exact_law_1d,
    oco_law_1d,
    theta_chi,
)

__all__ = [
    "LinearModel",
    "ModeLaw",
    "sample_equilibrium",
    "energy_report",
    "relative_energy_error",
    "exact_langevin_law",
    "numerical_langevin_law",
    "mean_dh_analytic",
    "langevin_stability_ok",
    "stability_boundary",
]


ModeLaw = GaussianLaw  # per-mode mean (n-1, 2) and covariance (n-1, 2, 2)


@dataclass
class LinearModel:
    """Semidiscrete linear wave equation with unit mass shift (force ``F(u) = -u``)."""

    grid: GridSpec
    gamma: float = 0.0

    @cached_property
    def operator(self):
        return build_dirichlet_laplacian(self.grid, 1)

    @property
    def basis(self):
        return self.operator.basis

    @property
    def ds(self) -> float:
        return self.grid.ds

    @cached_property
    def force(self) -> ForceField:
        return ForceField(
            lambda u: -u,
            self.operator,
            lambda u: 0.5 * np.sum(u * u, axis=(-2, -1)),
        )

    def hamiltonian(self, state: PhaseState) -> np.ndarray:
        """Energy per batch entry."""
        u, p = state.u, state.p
        Lu = self.operator.apply(u)
        return 0.5 * np.sum(p * p - u * Lu + u * u, axis=(-2, -1))

    def stationary_mode_variances(self) -> tuple[np.ndarray, np.ndarray]:
        """Equilibrium variances of the position and momentum mode coefficients."""
        w2 = self.basis.omega**2
        return 1.0 / (self.ds * (1.0 + w2)), np.full_like(w2, 1.0 / self.ds)


def sample_equilibrium(model: LinearModel, rng: RngStream, size: tuple = ()) -> PhaseState:
    """Draw from the density ``exp(-ds H)``; ``size`` adds leading batch axes."""
    m = model.grid.n - 1
    shape = tuple(size) + (m, 1)
    eta = rng.normal(shape)
    xi = rng.normal(shape)
    scale = 1.0 / np.sqrt(1.0 + model.basis.omega**2)
    U = scale[:, None] * eta / np.sqrt(model.ds)
    u = dst_transform(U, model.basis, "inverse")
    return PhaseState(u, xi / np.sqrt(model.ds))


def energy_report(model: LinearModel, state: PhaseState) -> dict:
    """Total energy and the energy ``P_k^2/2 + (1 + omega_k^2) U_k^2/2`` of every mode."""
    U = dst_transform(state.u, model.basis, "forward")[..., 0]
    P = dst_transform(state.p, model.basis, "forward")[..., 0]
    modes = 0.5 * P**2 + 0.5 * (1.0 + model.basis.omega**2) * U**2
    return {"H": model.hamiltonian(state), "mode_energies": modes}


def relative_energy_error(H: np.ndarray, H0) -> np.ndarray:
    """``|H - H0| / |H0|``."""
    return np.abs(np.asarray(H) - H0) / np.abs(H0)


def _modes_of(model: LinearModel, state0: PhaseState):
    U = dst_transform(state0.u, model.basis, "forward")[..., 0]
    P = dst_transform(state0.p, model.basis, "forward")[..., 0]
    return U, P


def exact_langevin_law(model: LinearModel, state0: PhaseState, T: float) -> ModeLaw:
    """Per-mode exact Gaussian law at time ``T`` (noise level ``1/ds`` per mode)."""
    if not model.gamma > 0:
        raise ValueError("the Langevin law needs gamma > 0")
    U, P = _modes_of(model, state0)
    return langevin_exact_law_1d(U, P, T, model.basis.omega, model.gamma, model.ds)


def numerical_langevin_law(model: LinearModel, state0: PhaseState, m: int, dt: float) -> ModeLaw:
    """Per-mode law after ``m`` steps of the Cayley Langevin splitting."""
    U, P = _modes_of(model, state0)
    return oco_law_1d(U, P, m, model.basis.omega, model.gamma, model.ds, dt)


def mean_dh_analytic(model: LinearModel, dt: float, m: int) -> float:
    """Expected energy error after ``m`` Cayley steps from equilibrium."""
    theta, _ = theta_chi(model.basis.omega, dt)
    total = np.sum(np.sin(m * theta) ** 2)
    return float(dt**4 / (4.0 - dt * dt) * total / (8.0 * model.ds))


def langevin_stability_ok(dt: float, ds: float, gamma: float) -> bool:
    """Sufficient stability test ``g(dt, 2/ds, gamma) > 0`` at the frequency cap.

    ``g`` decreases with frequency once the Cayley rotation angle exceeds pi/2,
    which holds for the top modes, so the check there bounds the fast modes.
    Slow modes with a smaller angle can have lower ``g`` when ``gamma`` is large;
    a negative ``g`` only rules out the complex-pair regime and does not by
    itself mean instability.
    """
    return bool(g_stability(dt, 2.0 / ds, gamma) > 0)


def stability_boundary(ds: float, gamma: float, tol: float = 1e-14) -> float:
    """Largest stable time step, located by bisection on ``langevin_stability_ok``."""
    lo, hi = 0.0, 2.0 - 1e-12
    if langevin_stability_ok(hi, ds, gamma):
        return hi
    while hi - lo > tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if mid > 0 and langevin_stability_ok(mid, ds, gamma):
            lo = mid
        else:
            hi = mid
    return lo
