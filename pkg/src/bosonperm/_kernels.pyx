# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Operation-for-operation twin of ``_kernels_py.py``: complex arithmetic is
spelled out on separate real/imaginary doubles in the same order, and the
extension is built with -ffp-contract=off, so results are bit-identical to
the fallback.  Keep the two files in sync when touching numerics.
"""

from libc.math cimport fabs, frexp

import numpy as np

DEF POCKET_COUNT = 64
DEF POCKET_SHIFT = 6
DEF POCKET_BIAS = 1533  # boundary just above unit magnitude (frexp exponent 2)


cdef inline int _ctzll(unsigned long long x) noexcept nogil:
    cdef int b = 0
    while not (x & 1):
        x >>= 1
        b += 1
    return b


cdef inline int _popcountll(unsigned long long x) noexcept nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef inline int _pocket_index(double re, double im) noexcept nogil:
    cdef double m = fabs(re)
    cdef double t = fabs(im)
    cdef int e
    if t > m:
        m = t
    frexp(m, &e)
    return (e + POCKET_BIAS) >> POCKET_SHIFT


cdef inline void _kahan_add(double* s, double* comp, double value) noexcept nogil:
    cdef double y = value - comp[0]
    cdef double t = s[0] + y
    comp[0] = (t - s[0]) - y
    s[0] = t


cdef void _naive_dfs(const double* ar, const double* ai, int row, int n,
                     unsigned int used, int free_sum, double pr, double pi,
                     double* acc) noexcept nogil:
    # free_sum tracks the sum of unused column indices so the single
    # remaining column at the last row needs no scan.  acc holds the
    # running sums and their compensation terms (re, re_c, im, im_c):
    # with ~n! addends, plain summation noise would swamp the oracle.
    cdef int j, j2
    cdef double xr, xi, yr, yi, qr, qi
    if row == n - 1:
        xr = ar[row * n + free_sum]
        xi = ai[row * n + free_sum]
        _kahan_add(&acc[0], &acc[1], pr * xr - pi * xi)
        _kahan_add(&acc[2], &acc[3], pr * xi + pi * xr)
        return
    if row == n - 2:
        for j in range(n):
            if not (used >> j) & 1:
                j2 = free_sum - j
                xr = ar[row * n + j]
                xi = ai[row * n + j]
                qr = pr * xr - pi * xi
                qi = pr * xi + pi * xr
                yr = ar[row * n + n + j2]
                yi = ai[row * n + n + j2]
                _kahan_add(&acc[0], &acc[1], qr * yr - qi * yi)
                _kahan_add(&acc[2], &acc[3], qr * yi + qi * yr)
        return
    for j in range(n):
        if not (used >> j) & 1:
            xr = ar[row * n + j]
            xi = ai[row * n + j]
            _naive_dfs(ar, ai, row + 1, n, used | (1u << j), free_sum - j,
                       pr * xr - pi * xi, pr * xi + pi * xr, acc)


def naive_full(double[:, ::1] ar, double[:, ::1] ai):
    """Permutation-sum permanent; the factorial-cost reference."""
    cdef int n = ar.shape[0]
    cdef double acc[4]
    cdef int total = n * (n - 1) // 2
    cdef int k
    if n == 1:
        return complex(ar[0, 0], ai[0, 0])
    for k in range(4):
        acc[k] = 0.0
    with nogil:
        _naive_dfs(&ar[0, 0], &ai[0, 0], 0, n, 0u, total, 1.0, 0.0, acc)
    return complex(acc[0], acc[2])


def ryser_full(double[:, ::1] ar, double[:, ::1] ai):
    """Inclusion-exclusion permanent with Gray-ordered column subsets."""
    cdef int n = ar.shape[0]
    cdef double[::1] rsr = np.zeros(n)
    cdef double[::1] rsi = np.zeros(n)
    cdef double tre = 0.0, tim = 0.0
    cdef double sign = 1.0, upd, pr, pi, sr, si
    cdef unsigned long long k, g = 0
    cdef int b, i
    with nogil:
        for k in range(1, (<unsigned long long>1) << n):
            b = _ctzll(k)
            g ^= (<unsigned long long>1) << b
            upd = 1.0 if (g >> b) & 1 else -1.0
            for i in range(n):
                rsr[i] += upd * ar[i, b]
                rsi[i] += upd * ai[i, b]
            sign = -sign
            pr = 1.0
            pi = 0.0
            for i in range(n):
                sr = rsr[i]
                si = rsi[i]
                pr, pi = pr * sr - pi * si, pr * si + pi * sr
            tre += sign * pr
            tim += sign * pi
    if n & 1:
        return complex(-tre, -tim)
    return complex(tre, tim)


def ryser_nw_full(double[:, ::1] ar, double[:, ::1] ai):
    """Half-range inclusion-exclusion permanent (subset sums recentered)."""
    cdef int n = ar.shape[0]
    if n == 1:
        return complex(ar[0, 0], ai[0, 0])
    cdef double[::1] rsr = np.zeros(n)
    cdef double[::1] rsi = np.zeros(n)
    cdef double tre = 0.0, tim = 0.0
    cdef double sign = 1.0, upd, pr, pi, sr, si, totr, toti, scale
    cdef unsigned long long k, g = 0
    cdef int b, i, j
    with nogil:
        for i in range(n):
            totr = 0.0
            toti = 0.0
            for j in range(n):
                totr += ar[i, j]
                toti += ai[i, j]
            rsr[i] = ar[i, n - 1] - totr * 0.5
            rsi[i] = ai[i, n - 1] - toti * 0.5
        for k in range((<unsigned long long>1) << (n - 1)):
            if k:
                b = _ctzll(k)
                g ^= (<unsigned long long>1) << b
                upd = 1.0 if (g >> b) & 1 else -1.0
                for i in range(n):
                    rsr[i] += upd * ar[i, b]
                    rsi[i] += upd * ai[i, b]
                sign = -sign
            pr = 1.0
            pi = 0.0
            for i in range(n):
                sr = rsr[i]
                si = rsi[i]
                pr, pi = pr * sr - pi * si, pr * si + pi * sr
            tre += sign * pr
            tim += sign * pi
    scale = 2.0 if (n - 1) % 2 == 0 else -2.0
    return complex(scale * tre, scale * tim)


cdef void _init_colsums(const double* ar, const double* ai, const double* coeffs,
                        int r, int c, double* csr, double* csi) noexcept nogil:
    cdef int i, j
    cdef double sr, si, w
    for j in range(c):
        sr = 0.0
        si = 0.0
        for i in range(r):
            w = coeffs[i]
            sr += w * ar[i * c + j]
            si += w * ai[i * c + j]
        csr[j] = sr
        csi[j] = si


def bbfg_lane(double[:, ::1] ar, double[:, ::1] ai,
              unsigned long long start, unsigned long long stop,
              bint gray, bint use_pockets):
    """One contiguous lane of the +-1 outer sum, row 0 held at +1.

    Returns the raw lane partial (no 2^(1-r) prefactor).  ``gray=False``
    recomputes every column sum from scratch, trading speed for one fewer
    source of accumulated rounding.
    """
    cdef int r = ar.shape[0]
    cdef int c = ar.shape[1]
    if start >= stop:
        return 0j
    cdef double[::1] coeffs = np.ones(r)
    cdef double[::1] csr = np.zeros(c)
    cdef double[::1] csi = np.zeros(c)
    cdef double pre[POCKET_COUNT]
    cdef double pim[POCKET_COUNT]
    cdef double tre = 0.0, tim = 0.0
    cdef double sign, pr, pi, sr, si, upd, are, aim
    cdef unsigned long long idx, nxt, g
    cdef int b, i, j, row
    for b in range(POCKET_COUNT):
        pre[b] = 0.0
        pim[b] = 0.0

    with nogil:
        if not gray:
            for idx in range(start, stop):
                g = idx ^ (idx >> 1)
                for i in range(r):
                    coeffs[i] = 1.0
                for i in range(1, r):
                    if (g >> (r - 1 - i)) & 1:
                        coeffs[i] = -1.0
                _init_colsums(&ar[0, 0], &ai[0, 0], &coeffs[0], r, c, &csr[0], &csi[0])
                sign = -1.0 if _popcountll(g) & 1 else 1.0
                pr = 1.0
                pi = 0.0
                for j in range(c):
                    sr = csr[j]
                    si = csi[j]
                    pr, pi = pr * sr - pi * si, pr * si + pi * sr
                are = sign * pr
                aim = sign * pi
                if use_pockets:
                    b = _pocket_index(are, aim)
                    pre[b] += are
                    pim[b] += aim
                else:
                    tre += are
                    tim += aim
        else:
            g = start ^ (start >> 1)
            for i in range(r):
                coeffs[i] = 1.0
            for i in range(1, r):
                if (g >> (r - 1 - i)) & 1:
                    coeffs[i] = -1.0
            _init_colsums(&ar[0, 0], &ai[0, 0], &coeffs[0], r, c, &csr[0], &csi[0])
            sign = -1.0 if _popcountll(g) & 1 else 1.0
            for idx in range(start, stop):
                pr = 1.0
                pi = 0.0
                for j in range(c):
                    sr = csr[j]
                    si = csi[j]
                    pr, pi = pr * sr - pi * si, pr * si + pi * sr
                are = sign * pr
                aim = sign * pi
                if use_pockets:
                    b = _pocket_index(are, aim)
                    pre[b] += are
                    pim[b] += aim
                else:
                    tre += are
                    tim += aim
                nxt = idx + 1
                if nxt < stop:
                    b = _ctzll(nxt)
                    row = r - 1 - b
                    g ^= (<unsigned long long>1) << b
                    upd = -2.0 if (g >> b) & 1 else 2.0
                    for j in range(c):
                        csr[j] += upd * ar[row, j]
                        csi[j] += upd * ai[row, j]
                    sign = -sign
        if use_pockets:
            tre = 0.0
            tim = 0.0
            for b in range(POCKET_COUNT):
                tre += pre[b]
                tim += pim[b]
    return complex(tre, tim)


def repeated_lane(double[:, ::1] ar, double[:, ::1] ai,
                  long long[::1] coeffs0, long long[::1] row_of_digit,
                  long long[::1] limits, long long[::1] nexp,
                  long long[::1] adig, long long[::1] gdig, long long[::1] dirs,
                  long long binom0, long long sign0,
                  unsigned long long start, unsigned long long stop,
                  bint use_pockets):
    """One lane of the multiplicity-weighted outer sum.

    ``adig``/``gdig``/``dirs`` carry the mixed-radix counter state at
    ``start`` and are consumed destructively; ``coeffs0`` holds the signed
    row weights (multiplicity minus twice the current digit) used to seed
    the column sums.
    """
    cdef int r = ar.shape[0]
    cdef int c = ar.shape[1]
    if start >= stop:
        return 0j
    cdef double[::1] coeffs = np.zeros(r)
    cdef double[::1] csr = np.zeros(c)
    cdef double[::1] csi = np.zeros(c)
    cdef double pre[POCKET_COUNT]
    cdef double pim[POCKET_COUNT]
    cdef double tre = 0.0, tim = 0.0
    cdef double pr, pi, sr, si, upd, w, are, aim
    cdef long long binom = binom0, sign = sign0, change, old
    cdef unsigned long long idx
    cdef int b, i, j, p, q, row, e
    for b in range(POCKET_COUNT):
        pre[b] = 0.0
        pim[b] = 0.0
    for i in range(r):
        coeffs[i] = <double>coeffs0[i]

    with nogil:
        _init_colsums(&ar[0, 0], &ai[0, 0], &coeffs[0], r, c, &csr[0], &csi[0])
        for idx in range(start, stop):
            pr = 1.0
            pi = 0.0
            for j in range(c):
                sr = csr[j]
                si = csi[j]
                for e in range(nexp[j]):
                    pr, pi = pr * sr - pi * si, pr * si + pi * sr
            w = <double>(sign * binom)
            are = w * pr
            aim = w * pi
            if use_pockets:
                b = _pocket_index(are, aim)
                pre[b] += are
                pim[b] += aim
            else:
                tre += are
                tim += aim
            if idx + 1 < stop:
                p = 0
                while adig[p] == limits[p]:
                    adig[p] = 0
                    p += 1
                adig[p] += 1
                change = dirs[p]
                old = gdig[p]
                gdig[p] += change
                if change > 0:
                    binom = binom * (limits[p] - old) // (old + 1)
                else:
                    binom = binom * old // (limits[p] - old + 1)
                sign = -sign
                for q in range(p):
                    dirs[q] = -dirs[q]
                row = row_of_digit[p]
                upd = -2.0 * change
                for j in range(c):
                    csr[j] += upd * ar[row, j]
                    csi[j] += upd * ai[row, j]
        if use_pockets:
            for b in range(POCKET_COUNT):
                tre += pre[b]
                tim += pim[b]
    return complex(tre, tim)


def repeated_lane_extended(long double[:, ::1] ar, long double[:, ::1] ai,
                           long long[::1] coeffs0, long long[::1] row_of_digit,
                           long long[::1] limits, long long[::1] nexp,
                           long long[::1] adig, long long[::1] gdig, long long[::1] dirs,
                           long long binom0, long long sign0,
                           unsigned long long start, unsigned long long stop,
                           long double[::1] out):
    """Extended-precision variant of :func:`repeated_lane`.

    ``ar``/``ai`` and ``out`` are ``numpy.longdouble`` buffers; the lane
    partial is accumulated into ``out[0]``/``out[1]`` with plain summation.
    """
    cdef int r = ar.shape[0]
    cdef int c = ar.shape[1]
    if start >= stop:
        return
    cdef long double[::1] csr = np.zeros(c, dtype=np.longdouble)
    cdef long double[::1] csi = np.zeros(c, dtype=np.longdouble)
    cdef long double tre = 0.0, tim = 0.0
    cdef long double pr, pi, sr, si, upd, w
    cdef long long binom = binom0, sign = sign0, change, old
    cdef unsigned long long idx
    cdef int i, j, p, q, row, e

    with nogil:
        for j in range(c):
            sr = 0.0
            si = 0.0
            for i in range(r):
                w = <long double>coeffs0[i]
                sr = sr + w * ar[i, j]
                si = si + w * ai[i, j]
            csr[j] = sr
            csi[j] = si
        for idx in range(start, stop):
            pr = 1.0
            pi = 0.0
            for j in range(c):
                sr = csr[j]
                si = csi[j]
                for e in range(nexp[j]):
                    pr, pi = pr * sr - pi * si, pr * si + pi * sr
            w = <long double>(sign * binom)
            tre = tre + w * pr
            tim = tim + w * pi
            if idx + 1 < stop:
                p = 0
                while adig[p] == limits[p]:
                    adig[p] = 0
                    p += 1
                adig[p] += 1
                change = dirs[p]
                old = gdig[p]
                gdig[p] += change
                if change > 0:
                    binom = binom * (limits[p] - old) // (old + 1)
                else:
                    binom = binom * old // (limits[p] - old + 1)
                sign = -sign
                for q in range(p):
                    dirs[q] = -dirs[q]
                row = row_of_digit[p]
                upd = <long double>(-2 * change)
                for j in range(c):
                    csr[j] = csr[j] + upd * ar[row, j]
                    csi[j] = csi[j] + upd * ai[row, j]
    out[0] += tre
    out[1] += tim
