# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled line-scan coverage kernel; same contract as ``_scan.scan_sets``."""

from libc.math cimport sqrt, ceil, floor, fabs, INFINITY, isnan
from libc.stdlib cimport malloc, calloc, free

cdef int KIND_PLATE = 0
cdef int GOLDEN_ITERS = 80
cdef int BISECT_ITERS = 60
cdef double INVPHI = 0.6180339887498949


cdef inline void plate_interval(const double* w, const double[:, :, ::1] frame, const double[:, ::1] lens,
                                Py_ssize_t s, int d, double* lo, double* hi) noexcept nogil:
    cdef double l = -INFINITY, h = INFINITY, val0, slope, a, b, t
    cdef int i, r
    for i in range(d):
        val0 = 0.0
        for r in range(d):
            val0 += frame[s, r, i] * w[r]
        slope = frame[s, d - 1, i]
        if fabs(slope) < 1e-15:
            if val0 < 0.0 or val0 > lens[s, i]:
                lo[0] = INFINITY
                hi[0] = -INFINITY
                return
            continue
        a = (0.0 - val0) / slope
        b = (lens[s, i] - val0) / slope
        if a > b:
            t = a
            a = b
            b = t
        if a > l:
            l = a
        if b < h:
            h = b
    lo[0] = l
    hi[0] = h


cdef inline void ball_interval(const double* w, int d, double eps, double* lo, double* hi) noexcept nogil:
    cdef double wl = w[d - 1], ww = 0.0, disc, r
    cdef int i
    for i in range(d):
        ww += w[i] * w[i]
    disc = wl * wl - (ww - eps * eps)
    if disc >= 0:
        r = sqrt(disc)
        lo[0] = -wl - r
        hi[0] = -wl + r
    else:
        lo[0] = INFINITY
        hi[0] = -INFINITY


cdef inline void capsule1_interval(const double* w, const double[:, :, ::1] frame, double length,
                                   Py_ssize_t s, int d, double eps, double* wb,
                                   double* lo, double* hi) noexcept nogil:
    cdef double la, ha, lb, hb, uw = 0.0, ul, A = 0.0, Bh = 0.0, C = 0.0, r0, r1
    cdef double disc, rd, c_lo, c_hi, t_lo, t_hi, ta, tb, lc, hc, u
    cdef int i
    ball_interval(w, d, eps, &la, &ha)
    for i in range(d):
        wb[i] = w[i] - frame[s, i, 0] * length
        uw += frame[s, i, 0] * w[i]
    ball_interval(wb, d, eps, &lb, &hb)
    ul = frame[s, d - 1, 0]
    for i in range(d):
        u = frame[s, i, 0]
        r0 = w[i] - uw * u
        r1 = -ul * u
        if i == d - 1:
            r1 += 1.0
        A += r1 * r1
        Bh += r0 * r1
        C += r0 * r0
    C -= eps * eps
    if A < 1e-24:
        if C <= 0:
            c_lo = -INFINITY
            c_hi = INFINITY
        else:
            c_lo = INFINITY
            c_hi = -INFINITY
    else:
        disc = Bh * Bh - A * C
        if disc >= 0:
            rd = sqrt(disc)
            c_lo = (-Bh - rd) / A
            c_hi = (-Bh + rd) / A
        else:
            c_lo = INFINITY
            c_hi = -INFINITY
    if fabs(ul) > 1e-15:
        ta = (0.0 - uw) / ul
        tb = (length - uw) / ul
        t_lo = ta if ta < tb else tb
        t_hi = tb if ta < tb else ta
    elif uw >= 0 and uw <= length:
        t_lo = -INFINITY
        t_hi = INFINITY
    else:
        t_lo = INFINITY
        t_hi = -INFINITY
    lc = c_lo if c_lo > t_lo else t_lo
    hc = c_hi if c_hi < t_hi else t_hi
    if not lc <= hc:
        lc = INFINITY
        hc = -INFINITY
    lo[0] = la
    if lb < lo[0]:
        lo[0] = lb
    if lc < lo[0]:
        lo[0] = lc
    hi[0] = ha
    if hb > hi[0]:
        hi[0] = hb
    if hc > hi[0]:
        hi[0] = hc


cdef inline double seg_dist2(const double* w, double sv, const double[:, :, ::1] frame,
                             const double[:, ::1] lens, Py_ssize_t s, int d, int k,
                             double* y) noexcept nogil:
    cdef int i, j
    cdef double c, out = 0.0
    for i in range(d):
        y[i] = w[i]
    y[d - 1] += sv
    # y minus its projection clamped to the box [0, lens]
    for j in range(k):
        c = 0.0
        for i in range(d):
            c += frame[s, i, j] * (w[i] + (sv if i == d - 1 else 0.0))
        if c < 0.0:
            c = 0.0
        elif c > lens[s, j]:
            c = lens[s, j]
        for i in range(d):
            y[i] -= frame[s, i, j] * c
    for i in range(d):
        out += y[i] * y[i]
    return out


cdef inline void capsulek_interval(const double* w, const double[:, :, ::1] frame, const double[:, ::1] lens,
                                   Py_ssize_t s, int d, int k, double eps, double s_lo, double s_hi,
                                   double* y, double* lo, double* hi) noexcept nogil:
    cdef double e2 = eps * eps, a = s_lo, b = s_hi, c, dd, smin, la, lb, ha, hb, mid
    cdef int it
    cdef bint left
    for it in range(GOLDEN_ITERS):
        c = b - INVPHI * (b - a)
        dd = a + INVPHI * (b - a)
        left = seg_dist2(w, c, frame, lens, s, d, k, y) < seg_dist2(w, dd, frame, lens, s, d, k, y)
        if left:
            b = dd
        else:
            a = c
    smin = 0.5 * (a + b)
    if not seg_dist2(w, smin, frame, lens, s, d, k, y) <= e2:
        lo[0] = INFINITY
        hi[0] = -INFINITY
        return
    la = s_lo
    lb = smin
    ha = smin
    hb = s_hi
    for it in range(BISECT_ITERS):
        mid = 0.5 * (la + lb)
        if seg_dist2(w, mid, frame, lens, s, d, k, y) <= e2:
            lb = mid
        else:
            la = mid
        mid = 0.5 * (ha + hb)
        if seg_dist2(w, mid, frame, lens, s, d, k, y) <= e2:
            ha = mid
        else:
            hb = mid
    lo[0] = s_lo if seg_dist2(w, s_lo, frame, lens, s, d, k, y) <= e2 else lb
    hi[0] = s_hi if seg_dist2(w, s_hi, frame, lens, s, d, k, y) <= e2 else ha


def scan_sets(const int[::1] kind, const double[:, ::1] anchor, const double[:, :, ::1] frame,
              const double[:, ::1] lens, const int[::1] kdim, const double[::1] eps,
              const long[:, ::1] lo, const long[:, ::1] hi, double L, long res,
              long[::1] hist, unsigned char[::1] bits, unsigned char[::1] blocks, long block):
    cdef Py_ssize_t m = anchor.shape[0], s
    cdef int d = anchor.shape[1], t
    if m == 0:
        return
    cdef double cell = 2.0 * L / res
    cdef long nb = (res + block - 1) // block if block > 0 else 0
    cdef bint want_bits = bits.shape[0] > 0
    cdef bint want_blocks = blocks.shape[0] > 0
    cdef long hsize = hist.shape[0]
    cdef long* glo = <long*> malloc(d * sizeof(long))
    cdef long* ghi = <long*> malloc(d * sizeof(long))
    cdef long* ii = <long*> malloc(d * sizeof(long))
    cdef double* base = <double*> malloc(d * sizeof(double))
    cdef double* w = <double*> malloc(d * sizeof(double))
    cdef double* scratch = <double*> malloc(d * sizeof(double))
    cdef long* diff = <long*> calloc(res + 2, sizeof(long))
    cdef double s_lo, s_hi, b_lo, b_hi, fj0, fj1
    cdef long j0, j1, jmin, jmax, j, cnt, off, boff, lastblock
    cdef bint inside, any_line
    try:
        for t in range(d):
            glo[t] = lo[0, t]
            ghi[t] = hi[0, t]
        for s in range(1, m):
            for t in range(d):
                if lo[s, t] < glo[t]:
                    glo[t] = lo[s, t]
                if hi[s, t] > ghi[t]:
                    ghi[t] = hi[s, t]
        for t in range(d):
            if glo[t] > ghi[t]:
                return
            ii[t] = glo[t]
        with nogil:
            while True:
                for t in range(d - 1):
                    base[t] = -L + (ii[t] + 0.5) * cell
                base[d - 1] = 0.0
                jmin = res
                jmax = -1
                for s in range(m):
                    inside = True
                    for t in range(d - 1):
                        if ii[t] < lo[s, t] or ii[t] > hi[s, t]:
                            inside = False
                            break
                    if not inside:
                        continue
                    for t in range(d):
                        w[t] = base[t] - anchor[s, t]
                    if kind[s] == KIND_PLATE:
                        plate_interval(w, frame, lens, s, d, &s_lo, &s_hi)
                    elif kdim[s] == 1:
                        capsule1_interval(w, frame, lens[s, 0], s, d, eps[s], scratch, &s_lo, &s_hi)
                    else:
                        b_lo = -L + (lo[s, d - 1] - 0.5) * cell
                        b_hi = -L + (hi[s, d - 1] + 1.5) * cell
                        capsulek_interval(w, frame, lens, s, d, kdim[s], eps[s], b_lo, b_hi,
                                          scratch, &s_lo, &s_hi)
                    if isnan(s_lo) or isnan(s_hi) or not s_lo <= s_hi:
                        continue
                    fj0 = ceil((s_lo + L) / cell - 0.5)
                    fj1 = floor((s_hi + L) / cell - 0.5)
                    j0 = lo[s, d - 1] if fj0 < lo[s, d - 1] else <long> fj0
                    j1 = hi[s, d - 1] if fj1 > hi[s, d - 1] else <long> fj1
                    if j0 > j1:
                        continue
                    diff[j0] += 1
                    diff[j1 + 1] -= 1
                    if j0 < jmin:
                        jmin = j0
                    if j1 > jmax:
                        jmax = j1
                if jmax >= jmin:
                    off = 0
                    boff = 0
                    for t in range(d - 1):
                        off = off * res + ii[t]
                        if block > 0:
                            boff = boff * nb + ii[t] // block
                    off *= res
                    boff *= nb
                    cnt = 0
                    lastblock = -1
                    for j in range(jmin, jmax + 1):
                        cnt += diff[j]
                        diff[j] = 0
                        if cnt > 0:
                            if cnt < hsize:
                                hist[cnt] += 1
                            if want_bits:
                                bits[off + j] = 1
                            if want_blocks and j // block != lastblock:
                                lastblock = j // block
                                blocks[boff + lastblock] = 1
                    diff[jmax + 1] = 0
                # advance the multi-index over the leading axes
                t = d - 2
                while t >= 0:
                    ii[t] += 1
                    if ii[t] <= ghi[t]:
                        break
                    ii[t] = glo[t]
                    t -= 1
                if t < 0:
                    break
    finally:
        free(glo)
        free(ghi)
        free(ii)
        free(base)
        free(w)
        free(scratch)
        free(diff)
