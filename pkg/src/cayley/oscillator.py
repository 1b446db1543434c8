"""Closed-form analysis of one harmonic mode under the Cayley and exact splittings.

The model oscillator has ``H(q, p) = p^2/2 + (1 + omega^2) q^2/2``: the stiff part
``p^2/2 + omega^2 q^2/2`` goes through the (A)-flow and the ``q^2/2`` part is kicked.
Everything here is vectorized over ``omega`` where that is cheap, and 2x2
matrices are plain ``(..., 2, 2)`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

__all__ = [
    "ThetaChi",
    "GaussianLaw",
    "EnergyMoments",
    "splitting_matrix_1d",
    "theta_chi",
    "modified_hamiltonian_1d",
    "energy_error_moments",
    "langevin_generator",
    "langevin_flow_matrix",
    "langevin_exact_law_1d",
    "oco_matrices",
    "oco_law_1d",
    "power_and_noise",
    "g_stability",
    "strong_stability_check",
]


class ThetaChi(NamedTuple):
    theta: np.ndarray | float
    chi: np.ndarray | float


class EnergyMoments(NamedTuple):
    mean: float
    variance: float
    fourth_central: float


@dataclass
class GaussianLaw:
    """Mean ``(..., 2)`` and covariance ``(..., 2, 2)`` of a Gaussian in (q, p)."""

    mean: np.ndarray
    cov: np.ndarray


def _check_dt(dt):
    dt = np.asarray(dt, dtype=float)
    if np.any(dt >= 2) or np.any(dt <= 0):
        raise ValueError("time step must satisfy 0 < dt < 2")


def splitting_matrix_1d(omega, dt, kind: str = "cayley") -> np.ndarray:
    """One-step matrix of the palindromic splitting for a single mode.

    ``cayley`` uses the explicit entries of the half-kick / Cayley / half-kick
    product; ``exact`` conjugates the exact rotation by the same half-kicks.
    """
    w = np.asarray(omega, dtype=float)
    dt = float(dt)
    if kind == "cayley":
        den = 4.0 + dt**2 * w**2
        a = -1.0 + (8.0 - 2.0 * dt**2) / den
        b = 4.0 * dt / den
        c = dt * (-4.0 + dt**2) * (1.0 + w**2) / den
        return np.stack([np.stack([a, b], -1), np.stack([c, a], -1)], -2)
    if kind == "exact":
        cs, sn = np.cos(dt * w), np.sin(dt * w)
        with np.errstate(divide="ignore", invalid="ignore"):
            s_over_w = np.where(w > 0, sn / np.where(w > 0, w, 1.0), dt)
        a = cs - 0.5 * dt * s_over_w
        c = -dt * cs + 0.25 * dt * dt * s_over_w - w * sn
        return np.stack([np.stack([a, s_over_w], -1), np.stack([c, a], -1)], -2)
    raise ValueError(f"kind must be 'cayley' or 'exact', got {kind!r}")


def theta_chi(omega, dt) -> ThetaChi:
    """Rotation angle and ellipse aspect of the Cayley one-step matrix."""
    _check_dt(dt)
    w = np.asarray(omega, dtype=float)
    r = np.sqrt(4.0 - dt * dt)
    s = np.sqrt(1.0 + w * w)
    return ThetaChi(2.0 * np.arctan(dt * s / r), 2.0 / (r * s))


def modified_hamiltonian_1d(q, p, omega, dt):
    """Quadratic form conserved exactly by the Cayley splitting of one mode."""
    theta, chi = theta_chi(omega, dt)
    return chi / (2.0 * dt) * theta * (p * p + q * q / chi**2)


def energy_error_moments(omega, dt, beta, m) -> EnergyMoments:
    """Mean, variance and fourth central moment of the energy error after ``m`` steps.

    Initial conditions are drawn from the Gibbs law ``exp(-beta H)``.
    """
    theta, _ = theta_chi(omega, dt)
    s2 = np.sin(m * theta) ** 2
    d2 = dt * dt
    d4 = d2 * d2
    r = 4.0 - d2
    mean = s2 * d4 / (8.0 * r) / beta
    var = s2 / 64.0 * d4 / r**2 * ((8.0 - d2) ** 2 - d4 * np.cos(2 * m * theta)) / beta**2
    poly = (
        24576.0
        - 12288.0 * d2
        + 2816.0 * d4
        - 320.0 * d4 * d2
        + 15.0 * d4 * d4
        - 20.0 * (8.0 - d2) ** 2 * d4 * np.cos(2 * m * theta)
        + 5.0 * d4 * d4 * np.cos(4 * m * theta)
    )
    fourth = 3.0 * d4 * d4 * s2 * s2 / (8192.0 * r**4) * poly / beta**4
    return EnergyMoments(float(mean), float(var), float(fourth))


def langevin_generator(omega, gamma) -> np.ndarray:
    """Drift matrix ``K = [[0, 1], [-omega^2 - 1, -gamma]]`` (broadcast over omega)."""
    w = np.asarray(omega, dtype=float)
    z = np.zeros_like(w)
    return np.stack(
        [np.stack([z, z + 1.0], -1), np.stack([-(w * w) - 1.0, z - gamma], -1)], -2
    )


def langevin_flow_matrix(omega, gamma, t) -> np.ndarray:
    """Deterministic propagator ``exp(t K)``."""
    return expm(t * langevin_generator(omega, gamma))


def langevin_exact_law_1d(q, p, T, omega, gamma, beta, epsrel: float = 1e-10) -> GaussianLaw:
    """Exact Gaussian law at time ``T`` of the damped, noisy oscillator started at (q, p).

    The covariance ``2 gamma/beta * int_0^T Phi(s) e2 e2^T Phi(s)^T ds`` is
    integrated adaptively; ``omega`` may be an array, in which case all modes share
    one vector-valued quadrature.
    """
    if T < 0 or gamma < 0:
        raise ValueError("need T >= 0 and gamma >= 0")
    K = langevin_generator(omega, gamma)
    x0 = np.stack(np.broadcast_arrays(np.asarray(q, float), np.asarray(p, float)), -1)
    mean = (expm(T * K) @ x0[..., None])[..., 0]
    if gamma == 0 or T == 0:
        return GaussianLaw(mean, np.zeros(K.shape))

    def integrand(s):
        col = expm(s * K)[..., :, 1]
        return col[..., :, None] * col[..., None, :]

    integral, _ = quad_vec(integrand, 0.0, T, epsrel=epsrel, epsabs=0.0, limit=20000)
    cov = 2.0 * gamma / beta * integral
    return GaussianLaw(mean, 0.5 * (cov + np.swapaxes(cov, -1, -2)))


def oco_matrices(omega, gamma, beta, dt):
    """One-step matrix ``O C O`` and one-step noise covariance ``Q`` of the Langevin scheme."""
    C = splitting_matrix_1d(omega, dt, "cayley")
    O = np.diag([1.0, np.exp(-0.5 * gamma * dt)])
    M = O @ C @ O
    oc = (O @ C)[..., :, 1]
    e2 = np.array([[0.0, 0.0], [0.0, 1.0]])
    Q = (1.0 - np.exp(-gamma * dt)) / beta * (oc[..., :, None] * oc[..., None, :] + e2)
    return M, Q


def power_and_noise(M: np.ndarray, Q: np.ndarray, m: int):
    """Return ``M^m`` and ``sum_{k<m} M^k Q (M^k)^T`` by binary doubling."""
    if m < 0:
        raise ValueError("need m >= 0")
    eye = np.broadcast_to(np.eye(M.shape[-1]), M.shape).copy()
    P_res, S_res = eye, np.zeros(np.broadcast_shapes(M.shape, Q.shape))
    P_blk, S_blk = M.copy(), np.broadcast_to(Q, S_res.shape).copy()
    while m:
        if m & 1:
            # Append a block of length 2^j after the accumulated steps.
            S_res = S_blk + P_blk @ S_res @ np.swapaxes(P_blk, -1, -2)
            P_res = P_blk @ P_res
        m >>= 1
        if m:
            S_blk = S_blk + P_blk @ S_blk @ np.swapaxes(P_blk, -1, -2)
            P_blk = P_blk @ P_blk
    return P_res, S_res


def oco_law_1d(q, p, m, omega, gamma, beta, dt) -> GaussianLaw:
    """Law after ``m`` steps of the Cayley Langevin splitting from a fixed (q, p).

    The noise covariance sums ``k = 0 .. m-1``: ``m = 0`` gives the point mass at
    the start and ``m = 1`` gives exactly ``Q``.
    """
    M, Q = oco_matrices(omega, gamma, beta, dt)
    Mm, Sm = power_and_noise(M, Q, int(m))
    x0 = np.stack(np.broadcast_arrays(np.asarray(q, float), np.asarray(p, float)), -1)
    return GaussianLaw((Mm @ x0[..., None])[..., 0], Sm)


def g_stability(dt, omega, gamma):
    """Stability function ``1 - cos^2(theta) cosh^2(gamma dt / 2)``; positive means stable."""
    theta, _ = theta_chi(omega, dt)
    return 1.0 - np.cos(theta) ** 2 * np.cosh(0.5 * gamma * dt) ** 2


def strong_stability_check(M: np.ndarray) -> dict:
    """Krein test for a 2x2 unit-determinant matrix: simple spectrum on the unit circle."""
    M = np.asarray(M, dtype=float)
    det = np.linalg.det(M)
    if abs(det - 1.0) >= 1e-8:
        raise ValueError(f"matrix is not symplectic (det = {det})")
    return {
        "strongly_stable": bool(abs(np.trace(M)) < 2.0),
        "eigenvalues": np.linalg.eigvals(M),
    }
