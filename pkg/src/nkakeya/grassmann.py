"""Planes in Gr(k, d), their sphere-slice Hausdorff metric, nets and covers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DimensionMismatch, DomainNotReduced

# Half the diameter of Gr(k, d) in the chord metric (diameter is 4 sin(pi/4)).
PROXIMITY_BOUND = math.sqrt(2.0)


def gram_schmidt(columns, tol: float = 1e-12) -> np.ndarray:
    """Orthonormalize columns left to right, dropping dependent ones.

    Two passes of modified Gram-Schmidt; the fixed column order makes the
    result reproducible.
    """
    A = np.array(columns, dtype=float, copy=True)
    if A.ndim == 1:
        A = A[:, None]
    out = []
    for j in range(A.shape[1]):
        v = A[:, j].copy()
        for _ in range(2):
            for q in out:
                v -= (q @ v) * q
        nrm = np.linalg.norm(v)
        if nrm > tol:
            out.append(v / nrm)
    if not out:
        return np.zeros((A.shape[0], 0))
    return np.stack(out, axis=1)


@dataclass(frozen=True, eq=False)
class Plane:
    """A k-dimensional linear subspace of R^d held as an orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2 or not 1 <= B.shape[1] <= B.shape[0]:
            raise DimensionMismatch(f"basis must be d x k with 1 <= k <= d, got {B.shape}")
        if np.abs(B.T @ B - np.eye(B.shape[1])).max() > 1e-12:
            raise ValueError("basis columns are not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @classmethod
    def span(cls, *vectors) -> "Plane":
        cols = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
        Q = gram_schmidt(cols)
        if Q.shape[1] != cols.shape[1]:
            raise ValueError("spanning vectors are linearly dependent")
        return cls(Q)

    @classmethod
    def coordinate(cls, d: int, axes) -> "Plane":
        """span(e_i for i in axes), zero-based."""
        B = np.zeros((d, len(axes)))
        for j, i in enumerate(axes):
            B[i, j] = 1.0
        return cls(B)

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def projection(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def complement(self) -> "Plane":
        """Orthogonal complement, completed deterministically from e_1..e_d."""
        full = gram_schmidt(np.hstack([self.basis, np.eye(self.d)]))
        return Plane(full[:, self.k:])

    def same_span(self, other: "Plane", tol: float = 1e-9) -> bool:
        return np.abs(self.projection() - other.projection()).max() <= tol


def _check_pair(V: Plane, W: Plane) -> None:
    if V.k != W.k or V.d != W.d:
        raise DimensionMismatch(f"Gr({V.k},{V.d}) vs Gr({W.k},{W.d})")


def principal_angles(V: Plane, W: Plane) -> np.ndarray:
    """Principal angles in ascending order.

    Cosines come from the SVD of V^T W; small angles are taken from the sines
    (SVD of the part of W orthogonal to V) where arccos loses precision.
    """
    _check_pair(V, W)
    cos = np.clip(np.linalg.svd(V.basis.T @ W.basis, compute_uv=False), 0.0, 1.0)
    resid = W.basis - V.basis @ (V.basis.T @ W.basis)
    sin = np.clip(np.linalg.svd(resid, compute_uv=False), 0.0, 1.0)
    cos = np.sort(cos)[::-1]
    sin = np.sort(sin)
    theta = np.where(sin**2 < 0.5, np.arcsin(sin), np.arccos(cos))
    return np.sort(theta)


def gr_distance(V: Plane, W: Plane) -> float:
    """Hausdorff distance between the unit-sphere slices of V and W.

    Each one-sided distance is the chord 2 sin(theta_max / 2), so the
    symmetric sum is 4 sin(theta_max / 2).
    """
    theta_max = principal_angles(V, W)[-1]
    return 4.0 * math.sin(theta_max / 2.0)


@dataclass(frozen=True)
class GrassmannBall:
    center: Plane
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def contains(self, W: Plane) -> bool:
        return gr_distance(self.center, W) < self.radius


@dataclass(frozen=True, eq=False)
class Box:
    """A closed ball (or axis-aligned cube) in parameter space R^n."""

    center: np.ndarray
    radius: float
    kind: str = "ball"

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("box radius must be positive")
        if self.kind not in ("ball", "cube"):
            raise ValueError(f"unknown box kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Box":
        return cls(np.array([(lo + hi) / 2.0]), (hi - lo) / 2.0, "cube")

    def contains(self, pts, tol: float = 1e-12) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float)) - self.center
        if self.kind == "ball":
            return np.linalg.norm(p, axis=1) <= self.radius + tol
        return np.abs(p).max(axis=1) <= self.radius + tol

    def lattice(self, step: float) -> np.ndarray:
        """Lattice points center + step * i inside the box, row-major order."""
        K = int(math.floor(self.radius / step + 1e-9))
        idx = np.arange(-K, K + 1)
        grids = np.meshgrid(*([idx] * self.n), indexing="ij")
        offsets = np.stack([g.ravel() for g in grids], axis=1) * step
        pts = self.center + offsets
        return pts[self.contains(pts)]

    def scaled(self, factor: float) -> "Box":
        return Box(self.center, self.radius * factor, self.kind)


def net_on_box(box: Box, delta: float) -> np.ndarray:
    """Greedy maximal delta-separated subset of the box's delta/4 lattice.

    Points are scanned in row-major lattice order and kept when they are at
    least ``delta`` from everything kept so far.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    cand = box.lattice(delta / 4.0)
    kept: list[np.ndarray] = []
    buckets: dict[tuple, list[int]] = {}
    tol = 1e-12 * max(1.0, delta)
    for p in cand:
        key = tuple(np.floor(p / delta).astype(int))
        ok = True
        for off in itertools.product((-1, 0, 1), repeat=len(key)):
            for j in buckets.get(tuple(k + o for k, o in zip(key, off)), ()):
                if np.linalg.norm(kept[j] - p) < delta - tol:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            buckets.setdefault(key, []).append(len(kept))
            kept.append(p)
    return np.array(kept).reshape(-1, box.n)


@dataclass(frozen=True, eq=False)
class NormalFamily:
    """The normal planes of a manifold over a parameter box."""

    manifold: object
    box: Box
    spacing: float | None = None

    def __post_init__(self):
        m = self.manifold
        if self.box.n != m.n:
            raise DimensionMismatch("box dimension differs from manifold n")
        far = np.linalg.norm(self.box.center - m.omega_center) + self.box.radius * (
            1.0 if self.box.kind == "ball" else math.sqrt(self.box.n)
        )
        if far > m.omega_radius + 1e-12:
            raise ValueError("box is not contained in the manifold's domain")

    def samples(self, spacing: float | None = None):
        h = spacing or self.spacing or self.box.radius / 8.0
        etas = self.box.lattice(h)
        return etas, [self.manifold.normal_plane(e) for e in etas]

    def reference_plane(self) -> Plane:
        m = self.manifold
        return Plane.coordinate(m.d, range(m.n, m.d))

    def reference_distance(self, spacing: float | None = None) -> float:
        """Largest distance from a sampled normal plane to span(e_{n+1},...,e_d)."""
        ref = self.reference_plane()
        _, planes = self.samples(spacing)
        return max(gr_distance(ref, P) for P in planes)

    def is_reduced(self, bound: float = PROXIMITY_BOUND) -> bool:
        return self.reference_distance() <= bound


def reduce_box(family: NormalFamily, bound: float = PROXIMITY_BOUND, max_halvings: int = 8) -> NormalFamily:
    """Halve the box until its normal family is within ``bound`` of the reference plane."""
    fam = family
    for _ in range(max_halvings + 1):
        if fam.is_reduced(bound):
            return fam
        fam = NormalFamily(fam.manifold, fam.box.scaled(0.5), fam.spacing)
    raise DomainNotReduced(
        f"normal family stays farther than {bound:.3f} from the reference plane after {max_halvings} halvings"
    )


def normal_net(family: NormalFamily, delta: float) -> list[tuple[np.ndarray, Plane]]:
    """Pairs (eta, N_eta) for eta running over the delta-net of the box."""
    return [(eta, family.manifold.normal_plane(eta)) for eta in net_on_box(family.box, delta)]


@dataclass
class BallCover:
    balls: list[GrassmannBall]
    exponent: float
    energy: float
    samples: int
    members: list[list[int]] = field(default_factory=list)

    @property
    def c_cover(self) -> float:
        return self.energy

    def __iter__(self) -> Iterator[GrassmannBall]:
        return iter(self.balls)

    def __len__(self) -> int:
        return len(self.balls)


def ball_cover(family: NormalFamily, delta: float, s: float) -> BallCover:
    """Greedy cover of the sampled normal family by balls of radius delta/2.

    Samples are taken on a lattice four times finer than ``delta`` and visited
    in lattice order; an uncovered sample opens a new ball. ``members[i]``
    lists the samples assigned to ball i (first covering ball wins).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 < s <= family.manifold.n:
        raise ValueError("cover exponent must lie in (0, n]")
    _, planes = family.samples(family.spacing or delta / 4.0)
    rho = delta / 2.0
    balls: list[GrassmannBall] = []
    members: list[list[int]] = []
    for i, P in enumerate(planes):
        for b, ball in enumerate(balls):
            if gr_distance(ball.center, P) < rho:
                members[b].append(i)
                break
        else:
            balls.append(GrassmannBall(P, rho))
            members.append([i])
    energy = float(sum(b.radius**s for b in balls))
    return BallCover(balls, s, energy, len(planes), members)
