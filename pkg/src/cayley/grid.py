"""Uniform Dirichlet grids, the discrete Laplacian, sine modes and the Cayley block map.

State arrays have shape ``(..., n - 1, d)``: any number of leading batch axes
(independent replicas), then the interior grid points, then the components per
point. The Laplacian always acts along axis ``-2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

__all__ = [
    "GridSpec",
    "LaplacianOperator",
    "PhaseState",
    "SpectralBasis",
    "build_dirichlet_laplacian",
    "solve_shifted",
    "dst_transform",
    "cayley_block_apply",
    "dense_cayley",
    "cayley_series_remainder",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[0, S]`` with ``n`` subintervals and Dirichlet endpoints."""

    S: float
    n: int

    def __post_init__(self):
        if not self.S > 0:
            raise ValueError(f"domain length must be positive, got S={self.S}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need n >= 2 subintervals, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_spacing(cls, S: float, ds: float) -> "GridSpec":
        """Build a grid from a spacing that divides ``S`` (up to rounding)."""
        n = int(round(S / ds))
        if n < 2 or abs(n * ds - S) > 1e-9 * S:
            raise ValueError(f"spacing {ds} does not divide S={S} into n >= 2 cells")
        return cls(S, n)

    @property
    def ds(self) -> float:
        return self.S / self.n

    @property
    def interior(self) -> int:
        return self.n - 1

    def points(self) -> np.ndarray:
        """Interior grid points ``s_1 .. s_{n-1}``."""
        return np.arange(1, self.n) * self.ds


@dataclass
class PhaseState:
    """Paired position and momentum arrays of shape ``(..., n - 1, d)``."""

    u: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.u.shape != self.p.shape:
            raise ValueError(f"position shape {self.u.shape} != momentum shape {self.p.shape}")

    def copy(self) -> "PhaseState":
        return PhaseState(self.u.copy(), self.p.copy())

    def flip(self) -> "PhaseState":
        """Same position with the momentum sign reversed."""
        return PhaseState(self.u, -self.p)

    def stacked(self) -> np.ndarray:
        """Flatten to ``[u; p]`` per batch entry (for dense-matrix oracles)."""
        lead = self.u.shape[:-2]
        return np.concatenate(
            [self.u.reshape(lead + (-1,)), self.p.reshape(lead + (-1,))], axis=-1
        )


class SpectralBasis:
    """Eigenpairs of the Dirichlet Laplacian: sine vectors and frequencies."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        n = grid.n
        k = np.arange(1, n)
        self.mu = -(4.0 / grid.ds**2) * np.sin(k * np.pi / (2 * n)) ** 2
        self.omega = np.sqrt(-self.mu)
        # V[i, k] = sqrt(2/n) sin(i k pi / n); symmetric and orthogonal.
        self.V = np.sqrt(2.0 / n) * np.sin(np.outer(k, k) * np.pi / n)

    def __len__(self):
        return self.grid.n - 1


class LaplacianOperator:
    """Tridiagonal Dirichlet Laplacian acting independently on ``d`` components."""

    def __init__(self, grid: GridSpec, d: int = 1):
        if int(d) != d or d < 1:
            raise ValueError(f"component count must be a positive integer, got d={d}")
        self.grid = grid
        self.d = int(d)
        self.diag = -2.0 / grid.ds**2
        self.off = 1.0 / grid.ds**2
        self._factors: dict[float, np.ndarray] = {}

    @property
    def size(self) -> int:
        return self.grid.n - 1

    def check_shape(self, x: np.ndarray) -> None:
        if x.ndim < 2 or x.shape[-2:] != (self.size, self.d):
            raise ValueError(f"expected trailing shape {(self.size, self.d)}, got {x.shape}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-vector product ``L x`` along axis -2 in O(n d)."""
        x = np.asarray(x, dtype=float)
        self.check_shape(x)
        y = self.diag * x
        y[..., 1:, :] += self.off * x[..., :-1, :]
        y[..., :-1, :] += self.off * x[..., 1:, :]
        return y

    __matmul__ = apply

    def dense(self) -> np.ndarray:
        """Dense ``(n-1) x (n-1)`` matrix of a single component."""
        m = self.size
        return (
            np.diag(np.full(m, self.diag))
            + np.diag(np.full(m - 1, self.off), 1)
            + np.diag(np.full(m - 1, self.off), -1)
        )

    def dense_full(self) -> np.ndarray:
        """Dense matrix on the flattened ``(n-1) d`` vector (row-major point/component)."""
        return np.kron(self.dense(), np.eye(self.d))

    @cached_property
    def basis(self) -> SpectralBasis:
        return SpectralBasis(self.grid)

    def shifted_factor(self, alpha: float) -> np.ndarray:
        """Banded Cholesky factor of ``I - alpha L`` (cached per alpha)."""
        alpha = float(alpha)
        fac = self._factors.get(alpha)
        if fac is None:
            m = self.size
            ab = np.empty((2, m))
            ab[0, 0] = 0.0
            ab[0, 1:] = -alpha * self.off
            ab[1, :] = 1.0 - alpha * self.diag
            fac = cholesky_banded(ab)
            if len(self._factors) > 64:
                self._factors.clear()
            self._factors[alpha] = fac
        return fac


def build_dirichlet_laplacian(grid: GridSpec, d: int = 1) -> LaplacianOperator:
    """Discrete Dirichlet Laplacian with diagonal ``-2/ds^2`` and off-diagonal ``1/ds^2``."""
    return LaplacianOperator(grid, d)


def solve_shifted(L: LaplacianOperator, alpha: float, b: np.ndarray) -> np.ndarray:
    """Solve ``(I - alpha L) x = b`` along axis -2.

    ``I - alpha L`` is symmetric positive definite for ``alpha >= 0``, so a banded
    Cholesky solve is used; batch and component axes are folded into columns.
    """
    if alpha < 0:
        raise ValueError(f"shift must be non-negative, got alpha={alpha}")
    b = np.asarray(b, dtype=float)
    if b.ndim < 2 or b.shape[-2] != L.size:
        raise ValueError(f"expected {L.size} rows along axis -2, got shape {b.shape}")
    if alpha == 0:
        return b.copy()
    m = L.size
    cols = np.moveaxis(b, -2, 0).reshape(m, -1)
    x = cho_solve_banded((L.shifted_factor(alpha), False), cols)
    return np.moveaxis(x.reshape((m,) + b.shape[:-2] + (b.shape[-1],)), 0, -2)


def dst_transform(vec: np.ndarray, basis: SpectralBasis, direction: str = "forward") -> np.ndarray:
    """Change to (``forward``) or from (``inverse``) sine-mode coordinates along axis -2."""
    vec = np.asarray(vec, dtype=float)
    if vec.ndim < 2 or vec.shape[-2] != len(basis):
        raise ValueError(f"expected {len(basis)} rows along axis -2, got shape {vec.shape}")
    if direction == "forward":
        return basis.V.T @ vec
    if direction == "inverse":
        return basis.V @ vec
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def cayley_block_apply(L: LaplacianOperator, dt: float, state: PhaseState) -> PhaseState:
    """Apply ``cay(dt A)`` with ``A = [[0, I], [L, 0]]`` using one stacked banded solve.

    With ``M = I - (dt^2/4) L``:
    ``u' = M^-1 ((I + dt^2/4 L) u + dt p)`` and ``p' = M^-1 (dt L u + (I + dt^2/4 L) p)``.
    """
    L.check_shape(state.u)
    if dt == 0:
        return state.copy()
    a = 0.25 * dt * dt
    Lu = L.apply(state.u)
    rhs_u = state.u + a * Lu + dt * state.p
    rhs_p = dt * Lu + state.p + a * L.apply(state.p)
    both = solve_shifted(L, a, np.concatenate([rhs_u, rhs_p], axis=-1))
    d = L.d
    return PhaseState(both[..., :d], both[..., d:])


def dense_cayley(X: np.ndarray) -> np.ndarray:
    """Dense Cayley transform ``(I - X/2)^-1 (I + X/2)``; small-instance oracle."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    eye = np.eye(X.shape[0])
    lhs = eye - 0.5 * X
    if np.linalg.cond(lhs) > 1e14:
        raise np.linalg.LinAlgError("I - X/2 is singular; Cayley transform undefined")
    return np.linalg.solve(lhs, eye + 0.5 * X)


def cayley_series_remainder(normA: float, M: int) -> float:
    """Tail bound ``|A|^(M+1) 2^(1-M) / (2 - |A|)`` of the Cayley power series."""
    if not 0 <= normA < 2:
        raise ValueError(f"series bound needs 0 <= |A| < 2, got {normA}")
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    return normA ** (M + 1) * 2.0 ** (1 - M) / (2.0 - normA)
