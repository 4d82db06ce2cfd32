"""L^p and weak L^q functionals on sampled fields, square functions and the sign-randomization test."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import GridMismatch, SupportsOverlap
from .extension import BumpSpec, Field, eval_extension


def exponents(d: int, n: int) -> tuple[Fraction, Fraction]:
    """q = d/n and its conjugate q' = q/(q - 1), exactly."""
    q = Fraction(d, n)
    return q, q / (q - 1)


@dataclass(frozen=True)
class NormReport:
    exponent: float
    value: float
    method: str
    samples: int
    cell_vol: float
    conjugate: float | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("norms are non-negative")

    def __float__(self) -> float:
        return self.value


def _abs(f) -> np.ndarray:
    return np.abs(np.asarray(getattr(f, "values", f)))


def lp_norm(f: Field, p: float) -> NormReport:
    if p < 1:
        raise ValueError("p must be at least 1")
    a = _abs(f)
    val = float((np.sum(a ** float(p)) * f.cell_vol) ** (1.0 / float(p)))
    return NormReport(float(p), val, "sum", a.size, f.cell_vol)


def weak_lq_norm(f: Field, q: float, method: str = "order") -> NormReport:
    """sup_lambda lambda |{|f| > lambda}|^{1/q} on the sample grid.

    ``order`` uses the order statistics: the supremum is the max over k of
    |f|_(k) (k cell_vol)^{1/q}, |f|_(k) the k-th largest sample. ``sweep``
    evaluates the distribution function just below every distinct level and
    serves as a check.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    a = _abs(f)
    qf = float(q)
    if a.size == 0 or not a.any():
        return NormReport(qf, 0.0, method, a.size, f.cell_vol)
    if method == "order":
        s = np.sort(a)[::-1]
        k = np.arange(1, s.size + 1)
        val = float(np.max(s * (k * f.cell_vol) ** (1.0 / qf)))
    elif method == "sweep":
        s = np.sort(a)
        levels = np.unique(s[s > 0])
        below = np.nextafter(levels, 0.0)
        counts = s.size - np.searchsorted(s, below, side="right")
        val = float(np.max(levels * (counts * f.cell_vol) ** (1.0 / qf)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return NormReport(qf, val, "exact-order-statistics" if method == "order" else "lambda-sweep", a.size, f.cell_vol)


def weak_lq_from_histogram(hist: np.ndarray, cell_vol: float, q: float) -> float:
    """Weak L^q norm of a count function given hist[c] = number of cells with value c."""
    h = np.asarray(hist)
    c = np.nonzero(h)[0]
    c = c[c > 0]
    if c.size == 0:
        return 0.0
    # |{g >= c}| for every attained level, scanned from the top
    tail = np.cumsum(h[c][::-1])[::-1]
    return float(np.max(c * (tail * cell_vol) ** (1.0 / float(q))))


def holder_bound(hist: np.ndarray, cell_vol: float, q: Fraction | float) -> tuple[float, float]:
    """(int g, q' ||g||_{q,inf} |supp g|^{1/q'}) for a count function g.

    The constant q' is sharp: the layer-cake formula with |{g > t}| <=
    min(|supp g|, W^q t^{-q}) integrates to exactly q' W |supp g|^{1/q'}.
    """
    h = np.asarray(hist)
    q = Fraction(q) if not isinstance(q, Fraction) else q
    qc = q / (q - 1)
    integral = float((np.arange(h.size) * h).sum()) * cell_vol
    support = float(h[1:].sum()) * cell_vol
    W = weak_lq_from_histogram(h, cell_vol, float(q))
    return integral, float(qc) * W * support ** (1.0 / float(qc))


def square_function(fields: Sequence[Field]) -> Field:
    """(sum_i |f_i|^2)^{1/2} on the common grid."""
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one field")
    ref = fields[0]
    if len(fields) == 1:
        return ref.with_values(np.abs(ref.values))
    acc = np.zeros(len(ref.points))
    for f in fields:
        if not ref.same_grid(f):
            raise GridMismatch("fields live on different grids")
        acc += np.abs(f.values) ** 2
    return ref.with_values(np.sqrt(acc))


def check_disjoint(specs: Sequence[BumpSpec]) -> None:
    for i, a in enumerate(specs):
        for b in specs[i + 1 :]:
            if np.linalg.norm(a.eta - b.eta) < 1.0 / a.R + 1.0 / b.R - 1e-12:
                raise SupportsOverlap(f"supports around {a.eta.tolist()} and {b.eta.tolist()} overlap")


@dataclass
class RademacherReport:
    ratios: np.ndarray
    seed: int
    trials: int
    q: float
    generator: str = "Philox"
    square_norm: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def min(self) -> float:
        return float(self.ratios.min())

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))

    @property
    def max(self) -> float:
        return float(self.ratios.max())

    def within(self, K: float = 8.0) -> bool:
        return 1.0 / K <= self.median <= K


def default_grid(manifold, specs: Sequence[BumpSpec], per_axis: int = 64) -> Field:
    """Cell-centered grid over the cube holding every big plate of the specs (doubled)."""
    from .extension import big_plate, cell_centered_axes

    ext = 0.0
    for s in specs:
        T = big_plate(manifold, s.eta, s.R, s.modulation(manifold.d))
        ext = max(ext, float(np.abs(T.corners()).max()))
    ext *= 2.0
    axes = cell_centered_axes(-np.full(manifold.d, ext), np.full(manifold.d, ext), per_axis)
    return Field.on_grid(axes)


def rademacher_test(
    manifold,
    specs: Sequence[BumpSpec],
    trials: int,
    seed: int,
    quad_n: int = 256,
    grid: Field | None = None,
) -> RademacherReport:
    """Ratios ||E(sum eps_i chi_i)||_{2q,inf} / ||(sum |E chi_i|^2)^{1/2}||_{2q,inf} over random signs.

    Signs come from a Philox generator seeded with ``seed``; each trial draws
    one sign vector, in order.
    """
    specs = list(specs)
    check_disjoint(specs)
    q, _ = exponents(manifold.d, manifold.n)
    grid = grid or default_grid(manifold, specs)
    fields = [grid.with_values(eval_extension(manifold, s, grid.points, quad_n)) for s in specs]
    S = weak_lq_norm(square_function(fields), 2 * q).value
    stack = np.stack([f.values for f in fields])
    rng = np.random.Generator(np.random.Philox(seed))
    signs = rng.choice(np.array([-1.0, 1.0]), size=(trials, len(specs)))
    ratios = np.empty(trials)
    for t in range(trials):
        g = grid.with_values(signs[t] @ stack)
        ratios[t] = weak_lq_norm(g, 2 * q).value / S
    return RademacherReport(ratios, seed, trials, float(2 * q), square_norm=S)
