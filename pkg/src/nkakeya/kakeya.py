"""Finite-scale N-Kakeya constructions.

An :class:`Assignment` places one unit segment of every sampled normal plane
N_eta. Coordinates split into n *free* axes (the leading ones) and d - n
*normal* axes (the trailing ones, where N_eta is a graph over the reference
plane span(e_{n+1}, ..., e_d)). Segments keep their normal-axis anchor at 0;
a density step slides segments along the free axes only, so that every
direction in a Grassmannian ball passes through one point at a prescribed
normal height h. Repeating the step over dyadic clusters at increasing heights
is the Perron-tree scheme; in the plane it is the classical construction.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import AnchorInfeasible, BudgetExhausted, DomainNotReduced, EmptyNet
from .grassmann import (
    PROXIMITY_BOUND,
    GrassmannBall,
    NormalFamily,
    Plane,
    gr_distance,
    normal_net,
)
from .plates import (
    Plate,
    PlateFamily,
    RasterSet,
    coverage,
    fit_half_width,
    rasterize,
    widen_to_plates,
)

log = logging.getLogger(__name__)

CUBE = 2.0
HEIGHT_EXPONENT = 0.6
HEIGHT_EXPONENTS = (0.5, 0.55, 0.6, 0.7)


@dataclass(frozen=True)
class Slab:
    """A_h: free axes unrestricted in [-2, 2], normal axes within eps of h."""

    h: np.ndarray
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "h", np.atleast_1d(np.asarray(self.h, dtype=float)))
        if not self.eps > 0:
            raise ValueError("slab half-width must be positive")

    def bounds(self):
        return self.h - self.eps, self.h + self.eps

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(pts)
        k = self.h.size
        return np.all(np.abs(p[:, -k:] - self.h) <= self.eps, axis=1) & np.all(np.abs(p) <= CUBE, axis=1)


def module_constant(d: int, cover_energy: float) -> float:
    """C in |E cap A_h| < C eps^d."""
    return 4.0**d * cover_energy


@dataclass(frozen=True, eq=False)
class Assignment:
    """One translated unit segment per sampled direction, plus the stage log."""

    etas: np.ndarray
    planes: tuple
    anchors: np.ndarray
    R: float | None = None
    log: tuple = ()

    def __post_init__(self):
        etas = np.atleast_2d(np.asarray(self.etas, dtype=float))
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        if len(etas) != len(self.planes) or len(anchors) != len(self.planes):
            raise ValueError("etas, planes and anchors must have equal length")
        for arr in (etas, anchors):
            arr.setflags(write=False)
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "planes", tuple(self.planes))

    def __len__(self) -> int:
        return len(self.planes)

    @property
    def d(self) -> int:
        return self.anchors.shape[1]

    @property
    def k(self) -> int:
        return self.planes[0].k

    @property
    def n(self) -> int:
        return self.d - self.k

    @property
    def entries(self):
        return [(e, P, a) for e, P, a in zip(self.etas, self.planes, self.anchors)]

    def bases(self) -> np.ndarray:
        return np.stack([P.basis for P in self.planes])

    def segments(self) -> list[Plate]:
        return [_segment(P, a) for P, a in zip(self.planes, self.anchors)]

    def corners(self) -> np.ndarray:
        """All 2^k segment corners, shape (m, 2^k, d)."""
        B = self.bases()
        cube = np.array(np.meshgrid(*[[0.0, 1.0]] * self.k, indexing="ij")).reshape(self.k, -1)
        return self.anchors[:, None, :] + np.einsum("mdk,kc->mcd", B, cube)

    def crossings(self, h) -> np.ndarray:
        """Point of each segment's plane whose normal coordinates equal h."""
        B = self.bases()
        n = self.n
        t = np.linalg.solve(B[:, n:, :], (np.asarray(h, float) - self.anchors[:, n:])[..., None])[..., 0]
        return self.anchors + np.einsum("mdk,mk->md", B, t), t

    def reach(self) -> float:
        """Largest r with r*(1,...,1) reachable inside every segment."""
        B = self.bases()
        k = self.k
        t = np.linalg.solve(B[:, self.n:, :], np.ones((len(self), k, 1)))[..., 0]
        if np.any(t <= 0):
            return 0.0
        return float(1.0 / t.max())

    def with_anchors(self, anchors, entry: dict | None = None, R=None) -> "Assignment":
        logs = self.log + ((entry,) if entry else ())
        return replace(self, anchors=np.asarray(anchors, float), log=logs, R=self.R if R is None else R)

    def in_cube(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.corners()) <= CUBE + tol))

    def body_lines(self) -> list[str]:
        lines = []
        for e, P, a in self.entries:
            cols = [" ".join(repr(float(v)) for v in e), " ".join(repr(float(v)) for v in P.basis.ravel()),
                    " ".join(repr(float(v)) for v in a)]
            lines.append(" | ".join(cols))
        return lines

    def provenance_hash(self) -> str:
        return hashlib.sha256("\n".join(self.body_lines()).encode()).hexdigest()

    def to_text(self) -> str:
        body = self.body_lines()
        head = [
            f"# R = {None if self.R is None else float(self.R)!r}",
            f"# d = {self.d}, k = {self.k}, m = {len(self)}",
            f"# provenance = {self.provenance_hash()}",
        ]
        return "\n".join(head + body) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Assignment":
        R = None
        k = None
        etas, planes, anchors = [], [], []
        for line in text.splitlines():
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("R ="):
                    val = body.split("=", 1)[1].strip()
                    R = None if val == "None" else float(val)
                elif body.startswith("d ="):
                    k = int(body.split(",")[1].split("=")[1])
                continue
            if not line.strip():
                continue
            e, b, a = (np.array(part.split(), dtype=float) for part in line.split("|"))
            etas.append(e)
            planes.append(Plane(b.reshape(a.size, k)))
            anchors.append(a)
        if not planes:
            raise EmptyNet("assignment text has no entries")
        return cls(np.array(etas), planes, np.array(anchors), R)


def _segment(P: Plane, anchor) -> Plate:
    from .grassmann import gram_schmidt

    frame = gram_schmidt(np.hstack([P.basis, np.eye(P.d)]))
    return Plate(np.asarray(anchor, float), frame, np.ones(P.k), 0.0)


def init_assignment(net: Sequence[tuple[np.ndarray, Plane]], R: float | None = None) -> Assignment:
    """Every segment anchored at the origin: the bush."""
    if len(net) == 0:
        raise EmptyNet("cannot seed an assignment from an empty net")
    etas = np.array([np.atleast_1d(e) for e, _ in net], dtype=float)
    planes = [P for _, P in net]
    d = planes[0].d
    return Assignment(etas, planes, np.zeros((len(planes), d)), R, ({"stage": 0, "kind": "bush"},))


def recentre(a: Assignment) -> Assignment:
    """Translate along the free axes so the bounding box is centered; fail if it cannot fit."""
    c = a.corners().reshape(-1, a.d)
    n = a.n
    lo, hi = c[:, :n].min(axis=0), c[:, :n].max(axis=0)
    if np.any(hi - lo > 2 * CUBE + 1e-9) or np.any(np.abs(c[:, n:]) > CUBE + 1e-9):
        raise AnchorInfeasible(f"free extent {float((hi - lo).max()):.3f} exceeds the cube width {2 * CUBE}")
    shift = np.zeros(a.d)
    shift[:n] = -(lo + hi) / 2.0
    return replace(a, anchors=a.anchors + shift)


def _assign_members(a: Assignment, cover: Sequence[GrassmannBall]) -> list[list[int]]:
    members: list[list[int]] = [[] for _ in cover]
    for i, P in enumerate(a.planes):
        dists = [gr_distance(b.center, P) for b in cover]
        j = int(np.argmin(dists))
        if dists[j] > cover[j].radius + 1e-12:
            raise ValueError(f"direction {i} is not covered")
        members[j].append(i)
    return members


def density_step(
    a: Assignment,
    slab: Slab,
    cover: Sequence[GrassmannBall],
    members: Sequence[Sequence[int]] | None = None,
) -> Assignment:
    """Make every ball's directions concurrent at normal height slab.h.

    Inside each ball the direction closest to the center keeps its place and
    the others slide along the free axes to meet it at height h. ``members``
    may prescribe the ball membership; otherwise each plane joins the nearest
    covering ball. The step recentres the whole set when it leaves the cube.
    """
    if members is None:
        members = _assign_members(a, cover)
    h = np.broadcast_to(slab.h, (a.k,))
    cross, _ = a.crossings(h)
    anchors = a.anchors.copy()
    n = a.n
    moved = 0
    for ball, mem in zip(cover, members):
        if len(mem) < 2:
            continue
        mem = list(mem)
        dist = [gr_distance(ball.center, a.planes[i]) for i in mem]
        c = mem[int(np.argmin(dist))]
        delta = cross[c, :n] - cross[mem, :n]
        anchors[mem, :n] += delta
        moved += len(mem)
    entry = {"kind": "density", "h": h.tolist(), "eps": slab.eps, "balls": len(cover), "moved": moved}
    out = a.with_anchors(anchors, entry)
    if not out.in_cube():
        out = recentre(out)
    return out


def verification_res(L: float, R: float, d: int, per_thickness: int | None = None, cap: int | None = None) -> int:
    """Cells per axis: ``per_thickness`` cells across 1/R (8 in the plane, 4 above)."""
    c = per_thickness or (8 if d == 2 else 4)
    res = int(math.ceil(2 * L * c * R))
    if cap:
        res = min(res, cap)
    return max(res, 2)


def working_half_width(a: Assignment, margin: float = 0.0) -> float:
    ext = float(np.abs(a.corners()).max()) + margin
    for L in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0):
        if ext <= L:
            return L
    return float(math.ceil(ext))


def neighborhood_measure(a: Assignment, R: float, L: float | None = None, res: int | None = None) -> float:
    """Lebesgue measure of the 1/R-neighborhood of the segments (streaming scan)."""
    L = L or working_half_width(a, 1.0 / R)
    res = res or verification_res(L, R, a.d)
    return coverage(a.segments(), L, res, eps=1.0 / R).union_measure


def slab_raster(a: Assignment, slab: Slab, L: float = CUBE, res: int = 512) -> RasterSet:
    r = rasterize(a.segments(), L, res)
    k = a.k
    lo, hi = slab.bounds()
    return r.intersect_slab(lo, hi, range(a.d - k, a.d))


def slab_measure(a: Assignment, slab: Slab, L: float = CUBE, res: int = 512) -> float:
    """|E cap A_h| with segments drawn one cell thick."""
    return slab_raster(a, slab, L, res).measure()


def fiber_spread(a: Assignment, slab: Slab, members: Sequence[Sequence[int]], samples: int = 5) -> float:
    """max over clusters and fiber heights of spread / (eps * rho).

    The fiber P_x is the free-axis slice at normal height x; for a concurrent
    cluster of angular radius rho its points lie in a ball of radius ~ eps*rho.
    """
    worst = 0.0
    lo, hi = slab.bounds()
    k = a.k
    for mem in members:
        if len(mem) < 2:
            continue
        sub = Assignment(a.etas[mem], [a.planes[i] for i in mem], a.anchors[mem])
        center = sub.planes[0]
        rho = max(gr_distance(center, P) for P in sub.planes)
        if rho == 0:
            continue
        for s in np.linspace(0.0, 1.0, samples):
            x = lo + s * (hi - lo)
            pts, _ = sub.crossings(np.broadcast_to(x, (k,)))
            pts = pts[:, : a.n]
            spread = float(np.linalg.norm(pts - pts.mean(axis=0), axis=1).max())
            worst = max(worst, spread / (slab.eps * rho))
    return worst


def raster_hausdorff(A: RasterSet, B: RasterSet) -> float:
    """Symmetric Hausdorff distance between occupied cell centers."""
    pa, pb = A.occupied_points(), B.occupied_points()
    if len(pa) == 0 or len(pb) == 0:
        return 0.0 if len(pa) == len(pb) else math.inf
    da = cKDTree(pb).query(pa)[0].max()
    db = cKDTree(pa).query(pb)[0].max()
    return float(max(da, db))


def perron_levels(a: Assignment) -> list[list[list[int]]]:
    """Dyadic clusters of the parameter points, coarsest level first.

    Each level halves one parameter axis, cycling through the axes, so an
    n-parameter family gets n times as many levels (and heights) as a
    simultaneous split would give. Stops before the first all-singleton level.
    """
    etas = a.etas
    lo, hi = etas.min(axis=0), etas.max(axis=0)
    side = float((hi - lo).max())
    if len(a) < 2 or side == 0:
        return []
    n = etas.shape[1]
    cuts = np.zeros(n, dtype=int)
    levels = []
    axis = 0
    while True:
        cuts[axis] += 1
        width = side / 2.0**cuts
        idx = np.minimum(np.floor((etas - lo) / width + 1e-9).astype(int), 2**cuts - 1)
        groups: dict[tuple, list[int]] = {}
        for i, key in enumerate(map(tuple, idx)):
            groups.setdefault(key, []).append(i)
        clusters = [g for _, g in sorted(groups.items())]
        if all(len(g) == 1 for g in clusters):
            break
        levels.append(clusters)
        axis = (axis + 1) % n
    return levels


def _cluster_cover(a: Assignment, clusters) -> tuple[list[GrassmannBall], list[list[int]]]:
    balls = []
    mem_out = []
    for g in clusters:
        mean = a.etas[g].mean(axis=0)
        c = g[int(np.argmin(np.linalg.norm(a.etas[g] - mean, axis=1)))]
        rad = max(gr_distance(a.planes[c], a.planes[i]) for i in g)
        balls.append(GrassmannBall(a.planes[c], rad + 1e-9))
        # centre first so it is the one that stays put
        mem_out.append([c] + [i for i in g if i != c])
    return balls, mem_out


@dataclass
class Budget:
    """Caps on a construction: the R ladder and the total number of density steps."""

    r_min: int = 4
    r_max: int = 4096
    max_steps: int = 100_000
    max_seconds: float | None = None

    def ladder(self) -> list[int]:
        out = []
        R = self.r_min
        while R <= self.r_max:
            out.append(R)
            R *= 2
        return out


@dataclass
class StageRecord:
    stage: int
    eps: float
    h: float
    accepted: bool
    neighborhood: float
    anchors: np.ndarray | None = None


@dataclass
class Schedule:
    assignment: Assignment
    stages: list[StageRecord] = field(default_factory=list)
    steps: int = 0


def perron_schedule(
    a: Assignment,
    R: float,
    *,
    measure: Callable[[Assignment], float] | None = None,
    height_exponent: float = HEIGHT_EXPONENT,
    max_steps: int | None = None,
    keep_snapshots: bool = False,
) -> Schedule:
    """Run one sweep of density steps over the dyadic levels, coarsest first.

    Level j uses the slab at height ((j - 1/2)/K)^p times the common reach and
    half-width 2^-j. A level is kept only when the measured neighborhood does
    not grow; otherwise it is rolled back.
    """
    measure = measure or (lambda x: neighborhood_measure(x, R))
    levels = perron_levels(a)
    K = max(len(levels), 1)
    reach = a.reach()
    if reach <= 0:
        raise AnchorInfeasible("segments share no common normal height")
    cur = a
    best = measure(cur)
    sched = Schedule(cur)
    sched.stages.append(StageRecord(0, 1.0, 0.0, True, best, cur.anchors.copy() if keep_snapshots else None))
    for j, clusters in enumerate(levels, start=1):
        if max_steps is not None and sched.steps >= max_steps:
            break
        frac = ((j - 0.5) / K) ** height_exponent
        h = frac * reach * (1 - 1e-9)
        slab = Slab(np.full(a.k, h), 2.0**-j)
        balls, mem = _cluster_cover(cur, clusters)
        try:
            cand = density_step(cur, slab, balls, mem)
        except AnchorInfeasible:
            sched.stages.append(StageRecord(j, slab.eps, h, False, best))
            continue
        sched.steps += 1
        val = measure(cand)
        ok = val <= best
        if ok:
            cur, best = cand, val
        sched.stages.append(StageRecord(j, slab.eps, h, ok, val, cur.anchors.copy() if keep_snapshots and ok else None))
    cur = recentre(cur)
    sched.assignment = cur.with_anchors(cur.anchors, {"kind": "schedule", "levels": K, "steps": sched.steps}, R=R)
    return sched


def best_schedule(
    a: Assignment,
    R: float,
    measure: Callable[[Assignment], float],
    exponents: Sequence[float] = HEIGHT_EXPONENTS,
    max_steps: int | None = None,
    keep_snapshots: bool = False,
) -> Schedule:
    """Run the schedule once per height exponent and keep the smallest final measure."""
    best = None
    total = 0
    for p in exponents:
        s = perron_schedule(a, R, measure=measure, height_exponent=p, max_steps=max_steps,
                            keep_snapshots=keep_snapshots)
        final = [st.neighborhood for st in s.stages if st.accepted][-1]
        total += s.steps
        s.assignment = s.assignment.with_anchors(s.assignment.anchors, {"kind": "exponent", "p": p})
        if best is None or final < best[0]:
            best = (final, s)
    best[1].steps = total
    return best[1]


def _reduced(family: NormalFamily, bound: float = PROXIMITY_BOUND) -> None:
    dist = family.reference_distance()
    if dist > bound:
        raise DomainNotReduced(f"normal family lies {dist:.3f} from the reference plane (bound {bound:.3f})")


def build_small_union_assignment(
    family: NormalFamily,
    target: float,
    budget: Budget | None = None,
    *,
    res: int | None = None,
    keep_snapshots: bool = False,
) -> tuple[Assignment, Schedule]:
    """Climb the R ladder until the 1/R-neighborhood of the segments has measure <= target.

    At each rung the net Gamma_{1/R} of the box is seeded as a bush and run
    through :func:`perron_schedule`; the measure is verified by rasterization.
    """
    if not 0 < target <= 1:
        raise ValueError("target must lie in (0, 1]")
    budget = budget or Budget()
    t0 = time.perf_counter()
    best: tuple[float, Assignment, Schedule] | None = None
    steps = 0
    for R in budget.ladder():
        net = normal_net(family, 1.0 / R)
        a = init_assignment(net, R)
        meas = _nbhd_measure_fn(R, res)
        snap = a.anchors.copy() if keep_snapshots else None
        sched = Schedule(a, [StageRecord(0, 1.0, 0.0, True, meas(a), snap)])
        if sched.stages[0].neighborhood > target:
            sched = best_schedule(a, R, meas, max_steps=budget.max_steps - steps,
                                  keep_snapshots=keep_snapshots)
        steps += sched.steps
        val = min(s.neighborhood for s in sched.stages if s.accepted)
        log.info("R=%d m=%d neighborhood measure %.5f", R, len(a), val)
        if best is None or val < best[0]:
            best = (val, sched.assignment, sched)
        if val <= target:
            return sched.assignment, sched
        if steps >= budget.max_steps or (budget.max_seconds and time.perf_counter() - t0 > budget.max_seconds):
            break
    raise BudgetExhausted(
        f"neighborhood measure {best[0]:.4f} above target {target} at R={best[1].R}",
        partial=best[1],
        achieved=best[0],
    )


def _nbhd_measure_fn(R: float, res: int | None):
    def meas(x: Assignment) -> float:
        L = working_half_width(x, 1.0 / R)
        return neighborhood_measure(x, R, L, res)

    return meas


def family_ratio(fam: PlateFamily, res: int | None = None) -> tuple[float, int, float]:
    """(verified ratio, resolution, half-width) of a plate family."""
    L = fit_half_width(fam.plates)
    r = res or verification_res(L, fam.R, fam.plates[0].d)
    cov = coverage(fam.plates, L, r)
    return cov.union_measure / fam.sum_measure(), r, L


def build_prop_one_family(
    manifold,
    box,
    delta: float,
    budget: Budget | None = None,
    *,
    res: int | None = None,
) -> PlateFamily:
    """Plates t_{eta,R,v} over a 1/R-net of the box with verified union/sum ratio <= delta.

    The R ladder doubles from ``budget.r_min``; at each rung the Perron
    schedule is tuned against the plate-union measure itself and the ratio is
    re-measured at verification resolution before returning.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    budget = budget or Budget()
    family = NormalFamily(manifold, box)
    _reduced(family)
    t0 = time.perf_counter()
    best: tuple[float, PlateFamily] | None = None
    steps = 0
    for R in budget.ladder():
        net = normal_net(family, 1.0 / R)
        a = init_assignment(net, R)

        def plate_union(x: Assignment, R=R) -> float:
            return _widen(x, R, verify=False).ratio(res=res)

        first = plate_union(a)
        if first <= delta:
            sched = Schedule(a, [StageRecord(0, 1.0, 0.0, True, first)])
        else:
            sched = best_schedule(a, R, plate_union, max_steps=budget.max_steps - steps)
        steps += sched.steps
        fam = _widen(sched.assignment, R, verify=True)
        ratio, vres, L = family_ratio(fam, res)
        fam.provenance.update(
            R=R,
            m=len(fam),
            ratio=ratio,
            verification_res=vres,
            half_width=L,
            iterations=sched.steps,
            stages=len(sched.stages),
            assignment_hash=sched.assignment.provenance_hash(),
            seconds=time.perf_counter() - t0,
        )
        fam.provenance["assignment"] = sched.assignment
        log.info("R=%d m=%d verified ratio %.5f (res %d)", R, len(fam), ratio, vres)
        if best is None or ratio < best[0]:
            best = (ratio, fam)
        if ratio <= delta:
            return fam
        if steps >= budget.max_steps or (budget.max_seconds and time.perf_counter() - t0 > budget.max_seconds):
            break
    raise BudgetExhausted(
        f"verified ratio {best[0]:.4f} above target {delta} up to R={best[1].R:g}",
        partial=best[1],
        achieved=best[0],
    )


def _widen(a: Assignment, R: float, verify: bool) -> PlateFamily:
    return widen_to_plates(a.entries, R, verify=verify)
