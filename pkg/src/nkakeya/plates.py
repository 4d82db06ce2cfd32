"""delta-plates, voxel rasters of their unions, neighborhoods and covering energy.

Rasters live on the cube [-L, L]^d with ``res`` cells per axis; a cell counts
as occupied when its center lies in the set. Measures of unions are computed
by a line-scan kernel (compiled when available) that never materializes the
grid, so verification can run at resolutions far beyond what a boolean array
would allow; :func:`rasterize` materializes when the bits themselves are
needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from . import kernels
from ._scan import KIND_CAPSULE, KIND_PLATE
from .errors import EmptyFamily, NegativeLength, ResolutionTooLarge
from .grassmann import Plane, gram_schmidt

log = logging.getLogger(__name__)

DEFAULT_L = 2.0
MAX_CELLS = 2**34


@dataclass(frozen=True, eq=False)
class Plate:
    """{anchor + sum t_i frame[:, i]} with t_i in [0, long_len_i] (i < k) and [0, thick] (i >= k)."""

    anchor: np.ndarray
    frame: np.ndarray
    long_len: np.ndarray
    thick: float

    def __post_init__(self):
        a = np.asarray(self.anchor, dtype=float)
        F = np.asarray(self.frame, dtype=float)
        ll = np.atleast_1d(np.asarray(self.long_len, dtype=float))
        d = a.shape[0]
        if F.shape != (d, d) or np.abs(F.T @ F - np.eye(d)).max() > 1e-12:
            raise ValueError("frame must be a d x d orthonormal matrix")
        if not 1 <= ll.shape[0] <= d:
            raise ValueError("need between 1 and d long axes")
        if np.any(ll <= 0) or self.thick < 0:
            raise NegativeLength("long lengths must be positive and thickness non-negative")
        for name, val in (("anchor", a), ("frame", F), ("long_len", ll)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "thick", float(self.thick))

    @property
    def d(self) -> int:
        return self.anchor.shape[0]

    @property
    def k(self) -> int:
        return self.long_len.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return np.r_[self.long_len, np.full(self.d - self.k, self.thick)]

    @property
    def plane(self) -> Plane:
        return Plane(self.frame[:, : self.k])

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def contains(self, x, tol: float = 1e-12) -> np.ndarray | bool:
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        c = (np.atleast_2d(pts) - self.anchor) @ self.frame
        ok = np.all((c >= -tol) & (c <= self.lengths + tol), axis=1)
        return bool(ok[0]) if single else ok

    def corners(self) -> np.ndarray:
        grid = np.array(np.meshgrid(*[[0.0, 1.0]] * self.d, indexing="ij")).reshape(self.d, -1).T
        return self.anchor + (grid * self.lengths) @ self.frame.T

    def center(self) -> np.ndarray:
        return self.anchor + self.frame @ (0.5 * self.lengths)

    def scaled(self, factor: float) -> "Plate":
        """Image under x -> factor * x."""
        return Plate(self.anchor * factor, self.frame, self.long_len * factor, self.thick * factor)

    def translated(self, v) -> "Plate":
        return Plate(self.anchor + np.asarray(v, dtype=float), self.frame, self.long_len, self.thick)


def make_plate(a, V: Plane, long_len, thick: float) -> Plate:
    """Plate at corner ``a`` whose first k axes are V's basis, completed from e_1..e_d."""
    if np.any(np.asarray(long_len) < 0) or thick < 0:
        raise NegativeLength("plate lengths must be non-negative")
    frame = gram_schmidt(np.hstack([V.basis, np.eye(V.d)]))
    ll = np.broadcast_to(np.asarray(long_len, dtype=float), (V.k,)).copy()
    return Plate(np.asarray(a, dtype=float), frame, ll, thick)


def check_resolution(res: int, d: int) -> None:
    if res < 2:
        raise ValueError("raster needs at least 2 cells per axis")
    if float(res) ** d > MAX_CELLS:
        raise ResolutionTooLarge(f"{res}^{d} cells exceed the 2^34 cap")


@dataclass(frozen=True, eq=False)
class RasterSet:
    """Occupancy bits on the cube [-L, L]^d, ``res`` cells per axis."""

    L: float
    res: int
    bits: np.ndarray

    @property
    def d(self) -> int:
        return self.bits.ndim

    @property
    def cell(self) -> float:
        return 2.0 * self.L / self.res

    @property
    def cell_vol(self) -> float:
        return self.cell**self.d

    def centers(self) -> np.ndarray:
        return -self.L + (np.arange(self.res) + 0.5) * self.cell

    def occupied_points(self) -> np.ndarray:
        idx = np.argwhere(self.bits)
        return -self.L + (idx + 0.5) * self.cell

    def measure(self) -> float:
        return float(np.count_nonzero(self.bits)) * self.cell_vol

    def issubset(self, other: "RasterSet") -> bool:
        return bool(np.all(other.bits[self.bits]))

    def union(self, other: "RasterSet") -> "RasterSet":
        return RasterSet(self.L, self.res, self.bits | other.bits)

    def intersect_slab(self, lower, upper, axes) -> "RasterSet":
        """Keep cells whose centers satisfy lower <= x[axes] <= upper."""
        keep = np.ones(self.bits.shape, bool)
        c = self.centers()
        for ax, lo, hi in zip(axes, lower, upper):
            shape = [1] * self.d
            shape[ax] = self.res
            keep &= ((c >= lo) & (c <= hi)).reshape(shape)
        return RasterSet(self.L, self.res, self.bits & keep)

    def slice2d(self, axis: int | None = None, index: int = 0) -> np.ndarray:
        """2-D image: fix ``axis`` at ``index``, further leading axes at their middle.

        Rows run down the last remaining axis (largest coordinate first),
        columns along the other one.
        """
        img = self.bits
        if self.d > 2:
            sl = [slice(None)] * self.d
            sl[axis] = index
            img = img[tuple(sl)]
            while img.ndim > 2:
                img = img[img.shape[0] // 2]
        return img.T[::-1]

    def write_pgm(self, directory, axis: int | None = None, index: int = 0) -> Path:
        """NetPBM P2 slice ``slice_<axis>_<index>.pgm``; planar rasters use axis = d."""
        axis_label = self.d if self.d == 2 else axis
        path = Path(directory) / f"slice_{axis_label}_{index}.pgm"
        img = self.slice2d(axis, index)
        lines = ["P2", f"{img.shape[1]} {img.shape[0]}", "255"]
        lines += [" ".join("255" if v else "0" for v in row) for row in img]
        path.write_text("\n".join(lines) + "\n")
        return path


def read_pgm(path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if tokens[0] != "P2":
        raise ValueError("not an ASCII PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array(tokens[4 : 4 + w * h], dtype=int).reshape(h, w)


@dataclass
class Coverage:
    """Result of a line scan: hist[c] = number of cells covered exactly c times (c >= 1)."""

    L: float
    res: int
    d: int
    hist: np.ndarray
    block: int = 0
    blocks: int | None = None
    raster: RasterSet | None = None

    @property
    def cell_vol(self) -> float:
        return (2.0 * self.L / self.res) ** self.d

    @property
    def occupied(self) -> int:
        return int(self.hist[1:].sum())

    @property
    def union_measure(self) -> float:
        return self.occupied * self.cell_vol

    @property
    def coverage_integral(self) -> float:
        """Integral of the count function sum_i 1_{set_i}."""
        return float((np.arange(self.hist.size) * self.hist).sum()) * self.cell_vol


def _pack(sets: Sequence[Plate], L: float, res: int, eps=None):
    m = len(sets)
    d = sets[0].d if m else 1
    cell = 2.0 * L / res
    kind = np.zeros(m, np.int32)
    kdim = np.zeros(m, np.int32)
    anchor = np.zeros((m, d))
    frame = np.zeros((m, d, d))
    lens = np.zeros((m, d))
    epsv = np.zeros(m)
    lo = np.zeros((m, d), np.int64)
    hi = np.zeros((m, d), np.int64)
    clipped = 0
    for i, p in enumerate(sets):
        anchor[i] = p.anchor
        frame[i] = p.frame
        lens[i] = p.lengths
        e = eps if eps is not None else (cell if p.thick == 0 else None)
        corners = p.corners()
        if e is None:
            kind[i] = KIND_PLATE
            kdim[i] = d
            pad = 0.0
        else:
            kind[i] = KIND_CAPSULE
            # the neighborhood of a thick plate is the neighborhood of its full box
            kdim[i] = p.k if p.thick == 0 else d
            epsv[i] = e
            pad = e
        bmin = corners.min(axis=0) - pad
        bmax = corners.max(axis=0) + pad
        if np.any(bmin < -L) or np.any(bmax > L):
            clipped += 1
        lo[i] = np.clip(np.ceil((bmin + L) / cell - 0.5), 0, res - 1)
        hi[i] = np.clip(np.floor((bmax + L) / cell - 0.5), -1, res - 1)
    if clipped:
        log.info("%d of %d sets extend past [-%g, %g]^%d and are clipped", clipped, m, L, L, d)
    return kind, anchor, frame, lens, kdim, epsv, lo, hi


def coverage(
    sets: Sequence[Plate],
    L: float = DEFAULT_L,
    res: int = 256,
    *,
    eps: float | None = None,
    block: int = 0,
    keep_bits: bool = False,
    backend=None,
) -> Coverage:
    """Scan the union of plates (or of their eps-neighborhoods when ``eps`` is given).

    Plates with zero thickness are always thickened to their one-cell
    neighborhood so that segments stay visible on the grid.
    """
    sets = list(sets)
    d = sets[0].d if sets else 2
    if res < 2:
        raise ValueError("raster needs at least 2 cells per axis")
    scan = backend or kernels.scan_sets
    hist = np.zeros(len(sets) + 2, np.int64)
    bits = np.zeros(0, np.uint8)
    if keep_bits:
        check_resolution(res, d)
        bits = np.zeros(res**d, np.uint8)
    blocks = np.zeros(0, np.uint8)
    if block > 0:
        nb = -(-res // block)
        if float(nb) ** d > 2**31:
            raise ResolutionTooLarge("block map too large")
        blocks = np.zeros(nb**d, np.uint8)
    if sets:
        scan(*_pack(sets, L, res, eps), float(L), int(res), hist, bits, blocks, int(block))
    raster = RasterSet(L, res, bits.reshape((res,) * d).astype(bool)) if keep_bits else None
    return Coverage(L, res, d, hist, block, int(blocks.sum()) if block > 0 else None, raster)


def rasterize(plates: Sequence[Plate], L: float = DEFAULT_L, res: int = 256, *, eps: float | None = None) -> RasterSet:
    plates = list(plates)
    d = plates[0].d if plates else 2
    check_resolution(res, d)
    if not plates:
        return RasterSet(L, res, np.zeros((res,) * d, bool))
    return coverage(plates, L, res, eps=eps, keep_bits=True).raster


def union_measure(r: RasterSet) -> float:
    return r.measure()


def sum_measure(plates: Iterable[Plate]) -> float:
    return float(sum(p.volume for p in plates))


def ratio(plates, L: float = DEFAULT_L, res: int = 256) -> float:
    """Measured union volume over the exact sum of plate volumes."""
    plates = list(getattr(plates, "plates", plates))
    if not plates:
        raise EmptyFamily("ratio of an empty family")
    total = sum_measure(plates)
    if total <= 0:
        raise EmptyFamily("family has zero total volume")
    return coverage(plates, L, res).union_measure / total


def ball_offsets(radius_cells: float, d: int) -> np.ndarray:
    r = int(math.floor(radius_cells))
    g = np.indices((2 * r + 1,) * d) - r
    return (np.sum(g.astype(float) ** 2, axis=0) <= radius_cells**2 + 1e-9)


def neighborhood(r: RasterSet, eps: float) -> RasterSet:
    """Dilation by the Euclidean ball of radius eps, measured between cell centers."""
    if eps < r.cell * (1 - 1e-12):
        raise ValueError("neighborhood radius must be at least one cell")
    if not r.bits.any():
        return RasterSet(r.L, r.res, r.bits.copy())
    struct = ball_offsets(eps / r.cell, r.d)
    return RasterSet(r.L, r.res, ndimage.binary_dilation(r.bits, structure=struct))


def fit_half_width(plates: Iterable[Plate], margin: float = 0.0, choices=(0.5, 1.0, 1.5, 2.0, 3.0, 4.0)) -> float:
    """Smallest working half-width from ``choices`` containing every plate (plus margin)."""
    ext = max(float(np.abs(p.corners()).max()) for p in plates) + margin
    for L in choices:
        if ext <= L:
            return L
    return float(math.ceil(ext))


@dataclass
class PlateFamily:
    plates: list[Plate]
    directions: list[tuple[np.ndarray, Plane]]
    R: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.plates) != len(self.directions):
            raise ValueError("one direction per plate")
        etas = np.array([np.atleast_1d(e) for e, _ in self.directions], dtype=float)
        if len(etas) > 1:
            from scipy.spatial import cKDTree

            pairs = cKDTree(etas).query_pairs(1.0 / self.R * (1 - 1e-9))
            if pairs:
                raise ValueError("direction parameters are not 1/R-separated")

    def __len__(self) -> int:
        return len(self.plates)

    def sum_measure(self) -> float:
        return sum_measure(self.plates)

    def ratio(self, L: float | None = None, res: int | None = None) -> float:
        L = L or fit_half_width(self.plates)
        return ratio(self.plates, L, res or int(2 * L * 8 * self.R))


def widen_to_plates(segments, R: float, *, verify: bool = True, verify_res: int | None = None) -> PlateFamily:
    """Thicken each segment into a 1/R-plate centered on it in the thin directions.

    The centered placement keeps every plate inside the 1/R-neighborhood of
    its segment whenever the plate has at most four thin axes; containment is
    checked on a raster and recorded in the provenance.
    """
    if R < 1:
        raise ValueError("R must be at least 1")
    plates = []
    dirs = []
    thick = 1.0 / R
    for eta, V, anchor in segments:
        p = make_plate(anchor, V, 1.0, thick)
        shift = p.frame[:, p.k:] @ np.full(p.d - p.k, thick / 2.0)
        plates.append(p.translated(-shift))
        dirs.append((np.atleast_1d(np.asarray(eta, float)), V))
    fam = PlateFamily(plates, dirs, R)
    if plates and verify:
        segs = [Plate(a, p.frame, p.long_len, 0.0) for (_, _, a), p in zip(segments, plates)]
        L = fit_half_width(plates, margin=thick)
        res = verify_res or min(int(2 * L * 4 * R), int(2 ** (34 / plates[0].d)) // 8)
        inner = coverage(plates, L, res, keep_bits=res ** plates[0].d <= 2**27)
        outer = coverage(segs, L, res, eps=thick, keep_bits=res ** plates[0].d <= 2**27)
        if inner.raster is not None:
            contained = inner.raster.issubset(outer.raster)
        else:
            contained = inner.occupied <= outer.occupied
        fam.provenance["contained_in_neighborhood"] = bool(contained)
        fam.provenance["containment_res"] = res
    return fam


def cover_energy(r: RasterSet, rho: float, e: float) -> float:
    """Count of aligned cubes of side ~rho meeting the set, times side^e.

    The side is rounded to a whole number of cells; the value bounds the
    Hausdorff pre-measure at that scale from above.
    """
    if rho < r.cell * (1 - 1e-12):
        raise ValueError("cover scale must be at least one cell")
    b = max(1, int(round(rho / r.cell)))
    if not r.bits.any():
        return 0.0
    pad = [(0, (-r.res) % b)] * r.d
    bits = np.pad(r.bits, pad)
    nb = bits.shape[0] // b
    shape = []
    for _ in range(r.d):
        shape += [nb, b]
    blocks = bits.reshape(shape).any(axis=tuple(range(1, 2 * r.d, 2)))
    return float(np.count_nonzero(blocks)) * (b * r.cell) ** e


def cover_energy_scan(sets, L: float, res: int, rho_cells: int, e: float, *, eps=None) -> tuple[float, Coverage]:
    """Streaming cover energy of a union of plates or neighborhoods (no raster held)."""
    cov = coverage(sets, L, res, eps=eps, block=rho_cells)
    side = rho_cells * 2.0 * L / res
    return cov.blocks * side**e, cov
