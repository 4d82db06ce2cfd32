"""Quadratic manifolds, graphs of (xi^T Q_j xi)_j over a ball, and their symmetry matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveScale, NonSymmetricForm
from .grassmann import Plane, gram_schmidt

SYMMETRY_REJECT = 1e-9
RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuadraticManifold:
    """Graph of F(xi) = (xi, xi^T Q_1 xi, ..., xi^T Q_{d-n} xi) over B(omega_center, omega_radius).

    Forms whose asymmetry is at most 1e-9 are replaced by their symmetric
    part; anything worse is rejected.
    """

    n: int
    d: int
    Q: np.ndarray
    omega_center: np.ndarray = None
    omega_radius: float = 1.0

    def __post_init__(self):
        n, d = int(self.n), int(self.d)
        if not 1 <= n < d:
            raise DimensionMismatch(f"need 1 <= n < d, got n={n}, d={d}")
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim == 2 and d - n == 1:
            Q = Q[None]
        if Q.shape != (d - n, n, n):
            raise DimensionMismatch(f"expected {d - n} forms of shape {n}x{n}, got {Q.shape}")
        asym = np.abs(Q - Q.transpose(0, 2, 1)).max()
        if asym > SYMMETRY_REJECT:
            raise NonSymmetricForm(f"quadratic form asymmetry {asym:.3g} exceeds {SYMMETRY_REJECT}")
        Q = 0.5 * (Q + Q.transpose(0, 2, 1))
        Q.setflags(write=False)
        c = np.zeros(n) if self.omega_center is None else np.atleast_1d(np.asarray(self.omega_center, float))
        if c.shape != (n,):
            raise DimensionMismatch("omega_center must lie in R^n")
        if not self.omega_radius > 0:
            raise NonPositiveScale("omega_radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "omega_center", c)
        object.__setattr__(self, "omega_radius", float(self.omega_radius))

    @property
    def codim(self) -> int:
        return self.d - self.n

    def F(self, xi) -> np.ndarray:
        """Lift parameter points to the manifold; accepts one point or a stack of rows."""
        x = np.asarray(xi, dtype=float)
        single = x.ndim <= 1
        x = np.atleast_2d(x.reshape(-1, self.n) if single else x)
        quad = np.einsum("pi,jik,pk->pj", x, self.Q, x)
        out = np.hstack([x, quad])
        return out[0] if single else out

    def gradient_block(self, eta) -> np.ndarray:
        """B(eta): row j is 2 Q_j eta, the gradient of F_j at eta."""
        e = np.asarray(eta, dtype=float).reshape(self.n)
        return 2.0 * self.Q @ e

    def shear_matrix(self, eta) -> np.ndarray:
        """A(eta) = [[I, 0], [B(eta), I]], so F(xi + eta) = F(eta) + A(eta) F(xi)."""
        A = np.eye(self.d)
        A[self.n:, : self.n] = self.gradient_block(eta)
        return A

    def dilation_matrix(self, alpha: float) -> np.ndarray:
        """D_alpha: alpha on the first n diagonal entries, alpha^2 on the rest."""
        if not alpha > 0:
            raise NonPositiveScale("dilation factor must be positive")
        return np.diag(np.r_[np.full(self.n, float(alpha)), np.full(self.codim, float(alpha) ** 2)])

    def tangent_plane(self, eta) -> Plane:
        cols = np.vstack([np.eye(self.n), self.gradient_block(eta)])
        return Plane(gram_schmidt(cols))

    def normal_plane(self, eta) -> Plane:
        """Orthogonal complement of the tangent plane: the span of (-B^T, I)."""
        cols = np.vstack([-self.gradient_block(eta).T, np.eye(self.codim)])
        return Plane(gram_schmidt(cols))

    def normal_rank(self, eta, step: float = 1e-5) -> int:
        """Numerical rank of the derivative of eta -> projection onto N_eta.

        Central differences on the projection matrix; singular values above
        1e-9 count. Rank n means the normal planes sweep an n-dimensional family.
        """
        e = np.asarray(eta, dtype=float).reshape(self.n)
        cols = []
        for i in range(self.n):
            h = np.zeros(self.n)
            h[i] = step
            dP = self.normal_plane(e + h).projection() - self.normal_plane(e - h).projection()
            cols.append(dP.ravel() / (2 * step))
        sv = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)
        return int((sv > RANK_TOL).sum())

    def to_config(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "Q": [q.tolist() for q in self.Q],
            "omega_center": self.omega_center.tolist(),
            "omega_radius": self.omega_radius,
        }

    @classmethod
    def from_config(cls, table: dict) -> "QuadraticManifold":
        try:
            return cls(
                int(table["n"]),
                int(table["d"]),
                np.asarray(table["Q"], dtype=float),
                table.get("omega_center"),
                float(table.get("omega_radius", 1.0)),
            )
        except KeyError as exc:
            raise DimensionMismatch(f"manifold table lacks {exc}") from None


def parabola() -> QuadraticManifold:
    """xi -> (xi, xi^2) over (-1, 1)."""
    return QuadraticManifold(1, 2, [[[1.0]]])


def codim2_example() -> QuadraticManifold:
    """Two-dimensional surface in R^4 with forms xi1^2 - xi2^2 and 2 xi1 xi2."""
    return QuadraticManifold(2, 4, [[[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [1.0, 0.0]]])


def flat(n: int, d: int) -> QuadraticManifold:
    return QuadraticManifold(n, d, np.zeros((d - n, n, n)))
