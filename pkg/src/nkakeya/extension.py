"""The extension operator E f(x) = int e^{2 pi i x . F(xi)} f(xi) d xi, evaluated by quadrature.

Integrands are bumps chi_{eta,R,v}(xi) = a e^{-2 pi i v . F(xi)} bump(R(xi - eta)),
supported in B(eta, 1/R). Integration uses tensor Gauss-Legendre rules on the
bounding cube of the support; the bump is smooth across the sphere, so the
rule converges without a curved domain. Every value comes with the
difference between the N- and 2N-point rules as an error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_legendre

from .errors import DimensionMismatch, QuadratureUnresolved
from .plates import Plate

TWO_PI = 2.0 * math.pi
PHASE_CAP = 1.0 / 8.0
CHUNK = 1 << 22


def bump(xi, eta, R: float) -> np.ndarray | float:
    """exp(1 - 1/(1 - |R(xi - eta)|^2)) inside the unit ball of the rescaled variable, 0 outside.

    ``xi`` may be one point or a stack of rows; the last axis is the coordinate axis.
    """
    if R < 1:
        raise ValueError("bump scale R must be at least 1")
    x = np.asarray(xi, dtype=float)
    e = np.asarray(eta, dtype=float)
    if x.ndim == 0:
        x = x[None]
    r2 = np.sum((R * (x - e)) ** 2, axis=-1)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def bump_integral(n: int) -> float:
    """int_{R^n} bump(xi, 0, 1) d xi, by adaptive radial quadrature."""

    def radial(r):
        return math.exp(1.0 - 1.0 / (1.0 - r * r)) * r ** (n - 1) if r < 1.0 else 0.0

    val, _ = quad(radial, 0.0, 1.0, epsabs=1e-16, epsrel=1e-13, limit=200)
    return float(2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0) * val)


@dataclass(frozen=True)
class BumpSpec:
    """chi_{eta,R,v} with amplitude a."""

    eta: np.ndarray
    R: float = 1.0
    v: np.ndarray | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.eta, dtype=float))
        object.__setattr__(self, "eta", e)
        if self.R < 1:
            raise ValueError("bump scale R must be at least 1")
        if self.v is not None:
            object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))

    @property
    def n(self) -> int:
        return self.eta.size

    def modulation(self, d: int) -> np.ndarray:
        if self.v is None:
            return np.zeros(d)
        if self.v.size != d:
            raise DimensionMismatch("modulation must live in R^d")
        return self.v

    def l1_norm(self) -> float:
        return abs(self.amplitude) * bump_integral(self.n) * self.R ** (-self.n)

    def support_box(self):
        return self.eta - 1.0 / self.R, self.eta + 1.0 / self.R

    def check_support(self, manifold, tol: float = 1e-12) -> None:
        far = np.linalg.norm(self.eta - manifold.omega_center) + 1.0 / self.R
        if far > manifold.omega_radius + tol:
            raise ValueError("bump support leaves the closed domain")

    def integrand(self, manifold) -> Callable[[np.ndarray], np.ndarray]:
        v = self.modulation(manifold.d)
        amp, eta, R = self.amplitude, self.eta, self.R

        def f(xi):
            val = amp * bump(xi, eta, R)
            if np.any(v):
                val = val * np.exp(-1j * TWO_PI * (manifold.F(xi) @ v))
            return val

        return f


@lru_cache(maxsize=64)
def _gauss(N: int) -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(N)


def tensor_rule(lo, hi, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (N^n x n) and weights of the tensor Gauss-Legendre rule on the box [lo, hi]."""
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    t, w = _gauss(N)
    axes = [0.5 * (h - l) * t + 0.5 * (h + l) for l, h in zip(lo, hi)]
    wts = [0.5 * (h - l) * w for l, h in zip(lo, hi)]
    nodes = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    weights = np.ones(1)
    for wa in wts:
        weights = np.multiply.outer(weights, wa).ravel()
    return nodes, weights


def phase_variation(manifold, lo, hi, y) -> np.ndarray:
    """2 pi sum_k |y_k| (range of F_k on the box), per row of y."""
    lo = np.atleast_1d(lo)
    hi = np.atleast_1d(hi)
    g = [np.linspace(l, h, 17) for l, h in zip(lo, hi)]
    pts = np.stack([a.ravel() for a in np.meshgrid(*g, indexing="ij")], axis=1)
    Fv = manifold.F(pts)
    spread = Fv.max(axis=0) - Fv.min(axis=0)
    return TWO_PI * (np.abs(np.atleast_2d(y)) @ spread)


def _apply_rule(manifold, f: Callable, lo, hi, X: np.ndarray, N: int) -> np.ndarray:
    nodes, weights = tensor_rule(lo, hi, N)
    fw = f(nodes) * weights
    keep = fw != 0
    nodes, fw = nodes[keep], fw[keep]
    Fn = manifold.F(nodes)
    out = np.empty(len(X), dtype=complex)
    step = max(1, CHUNK // max(len(nodes), 1))
    for s in range(0, len(X), step):
        ph = X[s : s + step] @ Fn.T
        out[s : s + step] = np.exp(1j * TWO_PI * ph) @ fw
    return out


def integrate(
    manifold,
    f: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    x,
    quad_n: int,
    *,
    phase_shift=None,
    l1: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """int_box e^{2 pi i x . F(xi)} f(xi) d xi at each row of x, with N-vs-2N error.

    ``phase_shift`` (a point of R^d) is subtracted from x in the resolvability
    test only; it accounts for modulations folded into ``f``. Raises
    :class:`QuadratureUnresolved` when the phase varies by more than pi*N
    over the box.
    """
    if quad_n < 16:
        raise ValueError("quadrature needs at least 16 nodes per axis")
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != manifold.d:
        raise DimensionMismatch("evaluation points must lie in R^d")
    y = X if phase_shift is None else X - phase_shift
    var = phase_variation(manifold, lo, hi, y)
    if np.any(var > math.pi * quad_n):
        worst = int(np.argmax(var))
        raise QuadratureUnresolved(
            f"phase varies by {var[worst]:.1f} rad at x={X[worst].tolist()}, beyond pi*N = {math.pi * quad_n:.1f}"
        )
    coarse = _apply_rule(manifold, f, lo, hi, X, quad_n)
    fine = _apply_rule(manifold, f, lo, hi, X, 2 * quad_n)
    err = np.abs(fine - coarse)
    if l1 is not None and np.any(np.abs(fine) > l1 * (1 + 1e-9) + err):
        raise QuadratureUnresolved("quadrature exceeds the trivial L1 bound")
    return fine, err


def eval_extension(manifold, spec: BumpSpec, x, quad_n: int = 256, *, with_error: bool = False):
    """E chi(x) for one point (complex) or a stack of points (array)."""
    spec.check_support(manifold)
    if spec.n != manifold.n:
        raise DimensionMismatch("bump lives in the wrong parameter dimension")
    if spec.amplitude == 0:
        X = np.atleast_2d(x)
        vals, err = np.zeros(len(X), complex), np.zeros(len(X))
    else:
        lo, hi = spec.support_box()
        vals, err = integrate(
            manifold, spec.integrand(manifold), lo, hi, x, quad_n,
            phase_shift=spec.modulation(manifold.d), l1=spec.l1_norm(),
        )
    single = np.asarray(x).ndim == 1
    if single:
        vals, err = vals[0], float(err[0])
    return (vals, err) if with_error else vals


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a set of spatial points; cell_vol is the volume each sample stands for."""

    points: np.ndarray
    values: np.ndarray
    cell_vol: float
    shape: tuple | None = None

    def __post_init__(self):
        if len(self.points) != len(self.values):
            raise ValueError("one value per grid point")

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @classmethod
    def on_grid(cls, axes: Sequence[np.ndarray], values=None) -> "Field":
        axes = [np.asarray(a, float) for a in axes]
        pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        steps = [a[1] - a[0] if a.size > 1 else 1.0 for a in axes]
        vals = np.zeros(len(pts), complex) if values is None else np.asarray(values).ravel()
        return cls(pts, vals, float(np.prod(steps)), tuple(a.size for a in axes))

    def with_values(self, values) -> "Field":
        return Field(self.points, np.asarray(values), self.cell_vol, self.shape)

    def same_grid(self, other: "Field") -> bool:
        return (
            self.points.shape == other.points.shape
            and self.cell_vol == other.cell_vol
            and np.array_equal(self.points, other.points)
        )

    def to_csv(self, path) -> Path:
        from .report import write_rows

        cols = [f"x_{i + 1}" for i in range(self.d)] + ["re", "im"]
        rows = [list(p) + [complex(v).real, complex(v).imag] for p, v in zip(self.points, self.values)]
        return write_rows(path, cols, rows)


def cell_centered_axes(lo, hi, per_axis: int) -> list[np.ndarray]:
    out = []
    for l, h in zip(np.atleast_1d(lo), np.atleast_1d(hi)):
        step = (h - l) / per_axis
        out.append(l + (np.arange(per_axis) + 0.5) * step)
    return out


def eval_field(manifold, specs: BumpSpec | Sequence[BumpSpec], grid: Field, quad_n: int = 256) -> Field:
    """Sample E(sum of bumps) on a grid."""
    specs = [specs] if isinstance(specs, BumpSpec) else list(specs)
    total = np.zeros(len(grid.points), complex)
    for s in specs:
        total += eval_extension(manifold, s, grid.points, quad_n)
    return grid.with_values(total)


# --- symmetry checks -----------------------------------------------------------


def verify_dilation_symmetry(manifold, spec: BumpSpec, R: float, x, quad_n: int = 256) -> float:
    """|E(f_R)(x) - R^{-n} E(f)(D_{1/R} x)| with f_R(xi) = f(R xi); both sides integrated separately."""
    f = spec.integrand(manifold)
    n = manifold.n
    x = np.asarray(x, float)
    lo, hi = spec.support_box()

    def f_R(xi):
        return f(R * np.asarray(xi))

    v = spec.modulation(manifold.d)
    Dinv = manifold.dilation_matrix(1.0 / R)
    lhs, _ = integrate(manifold, f_R, lo / R, hi / R, x, quad_n, phase_shift=manifold.dilation_matrix(R) @ v)
    rhs, _ = integrate(manifold, f, lo, hi, Dinv @ x, quad_n, phase_shift=v)
    return float(abs(lhs[0] - R ** (-n) * rhs[0]))


def verify_translation_symmetry(manifold, eta, x, quad_n: int = 256, base: BumpSpec | None = None) -> float:
    """|E(f^eta)(x) - e^{2 pi i x.F(eta)} E(f)(A(eta)^T x)| with f^eta(xi) = f(xi - eta)."""
    eta = np.atleast_1d(np.asarray(eta, float))
    base = base or BumpSpec(np.zeros(manifold.n), 2.0)
    f = base.integrand(manifold)
    lo, hi = base.support_box()
    x = np.asarray(x, float)
    def f_eta(xi):
        return f(np.asarray(xi) - eta)

    A = manifold.shear_matrix(eta)
    lhs, _ = integrate(manifold, f_eta, lo + eta, hi + eta, x, quad_n)
    rhs, _ = integrate(manifold, f, lo, hi, A.T @ x, quad_n)
    phase = np.exp(1j * TWO_PI * (x @ manifold.F(eta)))
    return float(abs(lhs[0] - phase * rhs[0]))


def verify_modulation_symmetry(manifold, v, x, quad_n: int = 256, base: BumpSpec | None = None) -> float:
    """|E(e^{-2 pi i v.F} f)(x) - E(f)(x - v)|."""
    v = np.asarray(v, float)
    base = base or BumpSpec(np.zeros(manifold.n), 2.0)
    f = base.integrand(manifold)
    lo, hi = base.support_box()
    x = np.asarray(x, float)

    def g(xi):
        return np.exp(-1j * TWO_PI * (manifold.F(xi) @ v)) * f(xi)

    lhs, _ = integrate(manifold, g, lo, hi, x, quad_n, phase_shift=v)
    rhs, _ = integrate(manifold, f, lo, hi, x - v, quad_n)
    return float(abs(lhs[0] - rhs[0]))


# --- plates from the symmetries ------------------------------------------------


def delta0(manifold, samples: int = 401) -> float:
    """Largest dyadic delta with x . F(xi) <= 1/8 for |x|_inf <= delta and xi in the unit ball.

    The supremum of sum_i |F_i(xi)| is taken over a dense polar sample of the
    ball (its maximum sits on the sphere for the homogeneous parts).
    """
    n = manifold.n
    if n == 1:
        xi = np.linspace(-1.0, 1.0, samples)[:, None]
    else:
        g = np.linspace(-1.0, 1.0, max(41, int(round(samples ** (1.0 / n))) | 1))
        pts = np.stack([a.ravel() for a in np.meshgrid(*([g] * n), indexing="ij")], axis=1)
        pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
        rng = np.random.default_rng(0)
        sph = rng.normal(size=(samples * 8, n))
        sph /= np.linalg.norm(sph, axis=1, keepdims=True)
        xi = np.vstack([pts, sph])
    S = float(np.abs(manifold.F(xi)).sum(axis=1).max())
    j = 0
    while 2.0**-j * S > PHASE_CAP:
        j += 1
    return 2.0**-j


def shrink_factor(manifold, eta, frame: np.ndarray) -> float:
    """Largest s such that the right prism of half-sides s*(R^2 delta0, R delta0) fits the oblique one.

    With N = frame[:, :k] (normal) and T = frame[:, k:] (tangent), A^T N has
    no free-axis part, so containment of A^T(N c + T b) in D_R[-delta0, delta0]^d
    reduces to two row-sum conditions; they hold for every R >= 1 once they
    hold at R = 1.
    """
    k = manifold.codim
    n = manifold.n
    At = manifold.shear_matrix(eta).T
    AN = At @ frame[:, :k]
    AT = At @ frame[:, k:]
    row = lambda M: float(np.abs(M).sum(axis=1).max()) if M.size else 0.0
    return 1.0 / max(row(AT[:n]), row(AN[n:]) + row(AT[n:]))


def big_plate(manifold, eta, R: float, v=None) -> Plate:
    """T_{eta,R,v}: long axes span N_eta (side ~ R^2), short axes tangent (side ~ R), centered at v."""
    if R < 1:
        raise ValueError("R must be at least 1")
    eta = np.atleast_1d(np.asarray(eta, float))
    d, k = manifold.d, manifold.codim
    v = np.zeros(d) if v is None else np.asarray(v, float)
    N = manifold.normal_plane(eta)
    from .plates import make_plate

    frame = make_plate(np.zeros(d), N, 1.0, 1.0).frame
    s = shrink_factor(manifold, eta, frame)
    d0 = delta0(manifold)
    half_long = s * R * R * d0
    half_short = s * R * d0
    anchor = v - frame[:, :k] @ np.full(k, half_long) - frame[:, k:] @ np.full(d - k, half_short)
    return Plate(anchor, frame, np.full(k, 2 * half_long), 2 * half_short)


def small_plate(manifold, eta, R: float, w=None) -> Plate:
    """t_{eta,R,w} = R^{-2} T_{eta,R,R^2 w}."""
    d = manifold.d
    w = np.zeros(d) if w is None else np.asarray(w, float)
    return big_plate(manifold, eta, R, R * R * w).scaled(1.0 / (R * R))


def plate_samples(p: Plate, per_axis: int = 5) -> np.ndarray:
    """Tensor grid of per_axis points per axis spanning the closed plate."""
    t = np.linspace(0.0, 1.0, per_axis)
    grid = np.stack([g.ravel() for g in np.meshgrid(*([t] * p.d), indexing="ij")], axis=1)
    return p.anchor + (grid * p.lengths) @ p.frame.T


def verify_plate_lower_bound(manifold, eta, R: float, v=None, quad_n: int = 256, per_axis: int = 5) -> float:
    """c_min = min over a per_axis^d grid of T_{eta,R,v} of |E chi_{eta,R,v}(x)| R^n."""
    spec = BumpSpec(eta, R, v)
    T = big_plate(manifold, eta, R, v)
    vals = eval_extension(manifold, spec, plate_samples(T, per_axis), quad_n)
    return float(np.abs(vals).min() * R**manifold.n)


class SymmetryCase(dict):
    """One row of a symmetry battery."""


def symmetry_battery(manifold, cases: int, seed: int, quad_n: int, r_choices=(1.0, 2.0, 4.0)) -> list[SymmetryCase]:
    """Seeded random battery of dilation, translation and modulation checks.

    Base bumps have scale 2 centered at 0 so every translate with |eta| <= 0.3
    and every dilate stays inside the unit domain.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n, d = manifold.n, manifold.d
    base = BumpSpec(np.zeros(n), 2.0)
    rows: list[SymmetryCase] = []
    for i in range(cases):
        R = float(rng.choice(r_choices))
        x = rng.uniform(-1.0, 1.0, d)
        res = verify_dilation_symmetry(manifold, base, R, x, quad_n)
        rows.append(SymmetryCase(kind="dilation", case=i, param=R, x=x.tolist(), residual=res))
    for i in range(cases):
        eta = rng.uniform(-1.0, 1.0, n)
        eta *= 0.3 * rng.uniform() / max(np.linalg.norm(eta), 1e-12)
        x = rng.uniform(-1.0, 1.0, d)
        res = verify_translation_symmetry(manifold, eta, x, quad_n, base)
        rows.append(SymmetryCase(kind="translation", case=i, param=eta.tolist(), x=x.tolist(), residual=res))
    for i in range(cases):
        v = rng.uniform(-2.0, 2.0, d)
        x = rng.uniform(-1.0, 1.0, d)
        res = verify_modulation_symmetry(manifold, v, x, quad_n, base)
        rows.append(SymmetryCase(kind="modulation", case=i, param=v.tolist(), x=x.tolist(), residual=res))
    return rows
