"""Diffusion-bridge targets: path potential, boundary shift and semidiscrete force.

A bridge of ``dX = -grad V(X) ds + sqrt(2/beta) dW`` pinned at ``x-`` and ``x+``
is sampled through the shifted path ``u = X - psi`` on the interior grid, with
per-point potential ``G = |grad V|^2/2 - Lap V / beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import GridSpec, PhaseState, build_dirichlet_laplacian
from .integrators import ForceField
from .samplers import TargetModel

__all__ = [
    "BridgePotential",
    "BridgeProblem",
    "gaussian_well_potential",
    "three_well_potential",
    "polynomial_potential",
    "path_potential",
    "psi_eval",
    "bridge_force",
    "bridge_potential_sum",
    "bridge_hamiltonian",
    "bridge_target",
    "find_minimum",
]


@dataclass
class BridgePotential:
    """``V`` with analytic derivatives, all vectorized over leading axes of ``x (..., d)``.

    ``hess`` returns ``(..., d, d)``; ``laplacian`` returns ``(...)``;
    ``grad_laplacian`` returns ``(..., d)``.
    """

    d: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    grad_laplacian: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    # Optional fused evaluator x -> (grad V, Lap V, Hess V grad V, grad Lap V).
    bundle: Callable[[np.ndarray], tuple] | None = None

    def derivatives(self, x: np.ndarray) -> tuple:
        """``(grad V, Lap V, Hess V . grad V, grad Lap V)`` at ``x``."""
        if self.bundle is not None:
            return self.bundle(x)
        g = self.grad(x)
        hg = np.einsum("...ij,...j->...i", self.hess(x), g)
        return g, self.laplacian(x), hg, self.grad_laplacian(x)


def gaussian_well_potential(amps, centers, quartic=(), name="gaussian-wells") -> BridgePotential:
    """Sum of ``a exp(-|x - c|^2)`` bumps plus separable quartic walls ``k (x_j - z_j)^4``.

    ``quartic`` is a list of ``(axis, k, z)`` triples.
    """
    amps = np.asarray(amps, dtype=float)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d = centers.shape[1]
    walls = [(int(j), float(k), float(z)) for j, k, z in quartic]

    def _terms(x):
        r = x[..., None, :] - centers  # (..., wells, d)
        r2 = np.sum(r * r, axis=-1)
        return r, r2, amps * np.exp(-r2)

    def value(x):
        _, _, e = _terms(x)
        v = e.sum(-1)
        for j, k, z in walls:
            v = v + k * (x[..., j] - z) ** 4
        return v

    def grad(x):
        r, _, e = _terms(x)
        g = np.sum(-2.0 * e[..., None] * r, axis=-2)
        for j, k, z in walls:
            g[..., j] += 4.0 * k * (x[..., j] - z) ** 3
        return g

    def hess(x):
        r, _, e = _terms(x)
        outer = 4.0 * r[..., :, None] * r[..., None, :] - 2.0 * np.eye(d)
        h = np.sum(e[..., None, None] * outer, axis=-3)
        for j, k, z in walls:
            h[..., j, j] += 12.0 * k * (x[..., j] - z) ** 2
        return h

    def laplacian(x):
        _, r2, e = _terms(x)
        lap = np.sum(e * (4.0 * r2 - 2.0 * d), axis=-1)
        for j, k, z in walls:
            lap = lap + 12.0 * k * (x[..., j] - z) ** 2
        return lap

    def grad_laplacian(x):
        r, r2, e = _terms(x)
        # grad[e (4 r^2 - 2d)] = e r (8 + 4d - 8 r^2)
        coef = e * (8.0 + 4.0 * d - 8.0 * r2)
        gl = np.sum(coef[..., None] * r, axis=-2)
        for j, k, z in walls:
            gl[..., j] += 24.0 * k * (x[..., j] - z)
        return gl

    def bundle(x):
        r, r2, e = _terms(x)
        er = e[..., None] * r
        g = -2.0 * er.sum(-2)
        for j, k, z in walls:
            g[..., j] += 4.0 * k * (x[..., j] - z) ** 3
        lap = np.sum(e * (4.0 * r2 - 2.0 * d), axis=-1)
        # Hess g = sum_w e_w (4 r_w (r_w . g) - 2 g) plus the diagonal wall terms
        rg = np.einsum("...wj,...j->...w", r, g)
        hg = 4.0 * np.sum(er * rg[..., None], axis=-2) - 2.0 * e.sum(-1)[..., None] * g
        gl = np.sum((8.0 + 4.0 * d - 8.0 * r2)[..., None] * er, axis=-2)
        for j, k, z in walls:
            xj = x[..., j] - z
            lap = lap + 12.0 * k * xj**2
            hg[..., j] += 12.0 * k * xj**2 * g[..., j]
            gl[..., j] += 24.0 * k * xj
        return g, lap, hg, gl

    return BridgePotential(d, value, grad, hess, laplacian, grad_laplacian, name, bundle)


def three_well_potential() -> BridgePotential:
    """Planar three-hole potential with deep wells near ``(+-1.048, -0.042)``."""
    return gaussian_well_potential(
        amps=[3.0, -3.0, -5.0, -5.0],
        centers=[[0.0, 1.0 / 3.0], [0.0, 5.0 / 3.0], [1.0, 0.0], [-1.0, 0.0]],
        quartic=[(0, 0.2, 0.0), (1, 0.2, 1.0 / 3.0)],
        name="three-well",
    )


def polynomial_potential(d: int, quartic: float = 0.0, quadratic: float = 1.0) -> BridgePotential:
    """``V(x) = quartic/4 sum x_j^4 + quadratic/2 |x|^2``; harmonic when ``quartic = 0``."""
    a, b = float(quartic), float(quadratic)

    def value(x):
        return np.sum(0.25 * a * x**4 + 0.5 * b * x**2, axis=-1)

    def grad(x):
        return a * x**3 + b * x

    def hess(x):
        return (3.0 * a * x**2 + b)[..., :, None] * np.eye(d)

    def laplacian(x):
        return np.sum(3.0 * a * x**2 + b, axis=-1)

    def grad_laplacian(x):
        return 6.0 * a * x

    return BridgePotential(d, value, grad, hess, laplacian, grad_laplacian, "polynomial")


def path_potential(potential: BridgePotential, beta: float, x: np.ndarray):
    """Return ``(G, grad G)`` with ``G = |grad V|^2/2 - Lap V / beta``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    x = np.asarray(x, dtype=float)
    g, lap, hg, gl = potential.derivatives(x)
    G = 0.5 * np.sum(g * g, axis=-1) - lap / beta
    return G, hg - gl / beta


@dataclass
class BridgeProblem:
    """Bridge between ``x_minus`` and ``x_plus`` over ``[0, S]`` at inverse temperature ``beta``."""

    potential: BridgePotential
    x_minus: np.ndarray
    x_plus: np.ndarray
    beta: float
    grid: GridSpec
    operator: object = field(init=False, repr=False)

    def __post_init__(self):
        self.x_minus = np.asarray(self.x_minus, dtype=float)
        self.x_plus = np.asarray(self.x_plus, dtype=float)
        d = self.potential.d
        if self.x_minus.shape != (d,) or self.x_plus.shape != (d,):
            raise ValueError(f"endpoints must be {d}-vectors")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        self.operator = build_dirichlet_laplacian(self.grid, d)

    @property
    def S(self) -> float:
        return self.grid.S

    @property
    def d(self) -> int:
        return self.potential.d

    @property
    def scale(self) -> float:
        """Factor multiplying ``-H`` in the log density: ``beta ds / 2``."""
        return 0.5 * self.beta * self.grid.ds

    def shift(self) -> np.ndarray:
        """``psi`` on the interior grid, shape ``(n - 1, d)``."""
        return psi_eval(self, self.grid.points())

    def path(self, u: np.ndarray) -> np.ndarray:
        """Physical path ``u + psi`` at the interior points."""
        return u + self.shift()

    def line_path(self) -> np.ndarray:
        """Shifted coordinates of the straight line between the endpoints (all zeros)."""
        return np.zeros((self.grid.n - 1, self.d))


def psi_eval(problem: BridgeProblem, s) -> np.ndarray:
    """Linear interpolation ``x- (S - s)/S + x+ s/S``; ``s`` may be an array."""
    s = np.asarray(s, dtype=float)
    S = problem.S
    if np.any(s < 0) or np.any(s > S):
        raise ValueError("s must lie in [0, S]")
    w = (s / S)[..., None]
    return problem.x_minus * (1.0 - w) + problem.x_plus * w


def bridge_force(problem: BridgeProblem, u: np.ndarray) -> np.ndarray:
    """Rowwise ``-grad G(u_i + psi(s_i))``."""
    u = np.asarray(u, dtype=float)
    problem.operator.check_shape(u)
    _, dG = path_potential(problem.potential, problem.beta, problem.path(u))
    return -dG


def bridge_potential_sum(problem: BridgeProblem, u: np.ndarray) -> np.ndarray:
    """``sum_i G(u_i + psi(s_i))`` per batch entry."""
    u = np.asarray(u, dtype=float)
    G, _ = path_potential(problem.potential, problem.beta, problem.path(u))
    return G.sum(axis=-1)


def bridge_hamiltonian(problem: BridgeProblem, state: PhaseState) -> np.ndarray:
    """``|p|^2/2 + sum_i G(u_i + psi_i) - u.Lu/2``."""
    u, p = state.u, state.p
    Lu = problem.operator.apply(u)
    return 0.5 * np.sum(p * p, axis=(-2, -1)) + bridge_potential_sum(problem, u) - 0.5 * np.sum(u * Lu, axis=(-2, -1))


def bridge_force_field(problem: BridgeProblem) -> ForceField:
    return ForceField(
        lambda u: bridge_force(problem, u),
        problem.operator,
        lambda u: bridge_potential_sum(problem, u),
    )


def bridge_target(problem: BridgeProblem) -> TargetModel:
    """Sampling target ``exp(-(beta ds / 2) H)``."""
    return TargetModel(bridge_force_field(problem), problem.scale)


def find_minimum(potential: BridgePotential, x0, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Damped Newton descent on ``V`` from ``x0``."""
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(max_iter):
        g = potential.grad(x)
        if np.linalg.norm(g) < tol:
            break
        H = potential.hess(x)
        try:
            step = -np.linalg.solve(H, g)
            if g @ step >= 0:
                step = -g
        except np.linalg.LinAlgError:
            step = -g
        t, v0 = 1.0, potential.value(x)
        while potential.value(x + t * step) > v0 + 1e-4 * t * (g @ step) and t > 1e-12:
            t *= 0.5
        x = x + t * step
    return x
