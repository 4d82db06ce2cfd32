"""Pure NumPy line-scan coverage kernel (fallback for the compiled extension).

The grid is the cube [-L, L]^d cut into ``res`` cells per axis. Cells are
visited one line at a time along the last axis; for every set touching the
line the cell-center interval is computed in closed form (plates, 1-d
capsules) or by convex bracketing (capsules around k >= 2 segments), and the
intervals are accumulated in a difference array. The kernel reports the
histogram of coverage counts and optionally writes occupancy bits and a
block-occupancy map.
"""

import numpy as np

KIND_PLATE = 0
KIND_CAPSULE = 1

_GOLDEN_ITERS = 80
_BISECT_ITERS = 60
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def _plate_intervals(w, frame, lens):
    """s-range where w + s e_last lies in the frame box [0, lens].

    w: (m, d) line base relative to anchor; frame: (m, d, d) columns; lens: (m, d).
    """
    val0 = np.einsum("mdi,md->mi", frame, w)
    slope = frame[:, -1, :]
    flat = np.abs(slope) < 1e-15
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (0.0 - val0) / slope
        b = (lens - val0) / slope
    sa = np.where(flat, -np.inf, np.minimum(a, b))
    sb = np.where(flat, np.inf, np.maximum(a, b))
    dead = flat & ((val0 < 0.0) | (val0 > lens))
    lo = np.max(sa, axis=1)
    hi = np.min(sb, axis=1)
    hi[dead.any(axis=1)] = -np.inf
    return lo, hi


def _ball_interval(w, eps):
    """s-range where |w + s e_last| <= eps."""
    wl = w[:, -1]
    disc = wl * wl - (np.einsum("md,md->m", w, w) - eps * eps)
    ok = disc >= 0
    r = np.sqrt(np.where(ok, disc, 0.0))
    return np.where(ok, -wl - r, np.inf), np.where(ok, -wl + r, -np.inf)


def _capsule1_intervals(w, u, length, eps):
    """Exact s-range for the eps-neighborhood of the segment {t u : 0 <= t <= length}."""
    lo_a, hi_a = _ball_interval(w, eps)
    lo_b, hi_b = _ball_interval(w - u * length[:, None], eps)
    uw = np.einsum("md,md->m", u, w)
    ul = u[:, -1]
    r0 = w - uw[:, None] * u
    r1 = -ul[:, None] * u
    r1[:, -1] += 1.0
    A = np.einsum("md,md->m", r1, r1)
    Bh = np.einsum("md,md->m", r0, r1)
    C = np.einsum("md,md->m", r0, r0) - eps * eps
    par = A < 1e-24
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        disc = Bh * Bh - A * C
        rd = np.sqrt(np.where(disc >= 0, disc, 0.0))
        c_lo = np.where(disc >= 0, (-Bh - rd) / A, np.inf)
        c_hi = np.where(disc >= 0, (-Bh + rd) / A, -np.inf)
        t_a = (0.0 - uw) / ul
        t_b = (length - uw) / ul
    c_lo = np.where(par, np.where(C <= 0, -np.inf, np.inf), c_lo)
    c_hi = np.where(par, np.where(C <= 0, np.inf, -np.inf), c_hi)
    along = np.abs(ul) > 1e-15
    t_lo = np.where(along, np.minimum(t_a, t_b), np.where((uw >= 0) & (uw <= length), -np.inf, np.inf))
    t_hi = np.where(along, np.maximum(t_a, t_b), np.where((uw >= 0) & (uw <= length), np.inf, -np.inf))
    lo_c = np.maximum(c_lo, t_lo)
    hi_c = np.minimum(c_hi, t_hi)
    lo_c, hi_c = np.where(lo_c <= hi_c, lo_c, np.inf), np.where(lo_c <= hi_c, hi_c, -np.inf)
    return np.minimum(np.minimum(lo_a, lo_b), lo_c), np.maximum(np.maximum(hi_a, hi_b), hi_c)


def _segment_dist2(w, s, axes, lens):
    y = w.copy()
    y[:, -1] += s
    c = np.einsum("mdk,md->mk", axes, y)
    cc = np.clip(c, 0.0, lens)
    r = y - np.einsum("mdk,mk->md", axes, cc)
    return np.einsum("md,md->m", r, r)


def _capsule_k_intervals(w, axes, lens, eps, s_lo, s_hi):
    """Bracketing search for capsules around k-dimensional box segments.

    Squared distance to a convex set is convex along the line, so a golden
    section finds its minimum and bisection finds both level-eps crossings.
    """
    e2 = eps * eps
    a, b = s_lo.copy(), s_hi.copy()
    for _ in range(_GOLDEN_ITERS):
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        left = _segment_dist2(w, c, axes, lens) < _segment_dist2(w, d, axes, lens)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    smin = 0.5 * (a + b)
    hit = _segment_dist2(w, smin, axes, lens) <= e2
    # left crossing in [s_lo, smin], right crossing in [smin, s_hi]
    lo_a, lo_b = s_lo.copy(), smin.copy()
    hi_a, hi_b = smin.copy(), s_hi.copy()
    inside_lo = _segment_dist2(w, s_lo, axes, lens) <= e2
    inside_hi = _segment_dist2(w, s_hi, axes, lens) <= e2
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo_a + lo_b)
        inn = _segment_dist2(w, mid, axes, lens) <= e2
        lo_b = np.where(inn, mid, lo_b)
        lo_a = np.where(inn, lo_a, mid)
        mid = 0.5 * (hi_a + hi_b)
        inn = _segment_dist2(w, mid, axes, lens) <= e2
        hi_a = np.where(inn, mid, hi_a)
        hi_b = np.where(inn, hi_b, mid)
    lo = np.where(inside_lo, s_lo, lo_b)
    hi = np.where(inside_hi, s_hi, hi_a)
    return np.where(hit, lo, np.inf), np.where(hit, hi, -np.inf)


def scan_sets(kind, anchor, frame, lens, kdim, eps, lo, hi, L, res, hist, bits, blocks, block):
    """Accumulate coverage over the grid; see module docstring.

    ``lo``/``hi`` are per-set inclusive index bounding boxes. ``hist`` is
    incremented in place (hist[c] counts cells covered exactly c >= 1 times);
    ``bits`` (size res^d or 0) and ``blocks`` (size ceil(res/block)^d or 0)
    are written in place.
    """
    m, d = anchor.shape
    if m == 0:
        return
    cell = 2.0 * L / res
    glo = lo.min(axis=0)
    ghi = hi.max(axis=0)
    if np.any(glo > ghi):
        return
    nb = -(-res // block) if block > 0 else 0
    want_bits = bits.size > 0
    want_blocks = blocks.size > 0
    lead = [range(glo[t], ghi[t] + 1) for t in range(d - 1)]
    is_plate = kind == KIND_PLATE
    diff = np.zeros(res + 1, dtype=np.int64)
    for idx in np.ndindex(*[len(r) for r in lead]) if d > 1 else [()]:
        ii = np.array([lead[t][idx[t]] for t in range(d - 1)], dtype=np.int64)
        act = np.all((lo[:, : d - 1] <= ii) & (hi[:, : d - 1] >= ii), axis=1) if d > 1 else np.ones(m, bool)
        sel = np.nonzero(act)[0]
        if sel.size == 0:
            continue
        base = np.empty(d)
        base[: d - 1] = -L + (ii + 0.5) * cell
        base[d - 1] = 0.0
        w = base - anchor[sel]
        s_lo = np.empty(sel.size)
        s_hi = np.empty(sel.size)
        pl = is_plate[sel]
        if pl.any():
            j = sel[pl]
            s_lo[pl], s_hi[pl] = _plate_intervals(w[pl], frame[j], lens[j])
        c1 = (~pl) & (kdim[sel] == 1)
        if c1.any():
            j = sel[c1]
            s_lo[c1], s_hi[c1] = _capsule1_intervals(w[c1], frame[j, :, 0], lens[j, 0], eps[j])
        ck = (~pl) & (kdim[sel] > 1)
        if ck.any():
            j = sel[ck]
            for kval in np.unique(kdim[j]):
                sub = np.nonzero(ck)[0][kdim[j] == kval]
                jj = sel[sub]
                kk = int(kval)
                b_lo = -L + (lo[jj, -1] - 0.5) * cell
                b_hi = -L + (hi[jj, -1] + 1.5) * cell
                s_lo[sub], s_hi[sub] = _capsule_k_intervals(
                    w[sub], frame[jj, :, :kk], lens[jj, :kk], eps[jj], b_lo, b_hi
                )
        with np.errstate(invalid="ignore"):
            j0 = np.ceil((s_lo + L) / cell - 0.5)
            j1 = np.floor((s_hi + L) / cell - 0.5)
        j0 = np.maximum(np.nan_to_num(j0, nan=res, posinf=res, neginf=0), lo[sel, -1])
        j1 = np.minimum(np.nan_to_num(j1, nan=-1, posinf=res - 1, neginf=-1), hi[sel, -1])
        keep = j0 <= j1
        if not keep.any():
            continue
        j0 = j0[keep].astype(np.int64)
        j1 = j1[keep].astype(np.int64)
        jmin, jmax = j0.min(), j1.max()
        np.add.at(diff, j0, 1)
        np.add.at(diff, j1 + 1, -1)
        counts = np.cumsum(diff[jmin : jmax + 1])
        diff[jmin : jmax + 2] = 0
        hist += np.bincount(counts, minlength=hist.size)[: hist.size] * (np.arange(hist.size) > 0)
        if want_bits or want_blocks:
            occ = np.nonzero(counts > 0)[0] + jmin
            if want_bits:
                off = int(np.ravel_multi_index(tuple(ii) + (0,), (res,) * d)) if d > 1 else 0
                bits[off + occ] = 1
            if want_blocks:
                boff = 0
                for t in range(d - 1):
                    boff = boff * nb + int(ii[t]) // block
                bits_b = np.unique(occ // block)
                blocks[boff * nb + bits_b] = 1
