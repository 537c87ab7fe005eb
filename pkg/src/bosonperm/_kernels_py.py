"""Pure-Python fallback kernels.

These mirror the compiled kernels in ``_kernels.pyx`` operation for
operation: complex arithmetic is written out on separate real/imaginary
floats, in the same order, so both backends produce bit-identical results.
Keep the two files in sync when touching numerics.
"""

from __future__ import annotations

from itertools import permutations
from math import frexp

import numpy as np

_POCKET_COUNT = 64
_POCKET_SHIFT = 6  # 64 exponent values per pocket
_POCKET_BIAS = 1533  # boundary just above unit magnitude (frexp exponent 2)


def _rows(arr):
    return [list(map(float, row)) for row in np.asarray(arr)]


def _pocket_index(re, im):
    m = abs(re)
    t = abs(im)
    if t > m:
        m = t
    e = frexp(m)[1]
    return (e + _POCKET_BIAS) >> _POCKET_SHIFT


def _pocket_total(pre, pim):
    tre = 0.0
    tim = 0.0
    for b in range(_POCKET_COUNT):
        tre += pre[b]
        tim += pim[b]
    return complex(tre, tim)


def naive_full(ar, ai):
    """Permutation-sum permanent; the factorial-cost reference.

    The ~n! addends are combined with compensated summation so the oracle's
    own rounding stays far below the engines under test.
    """
    arl = _rows(ar)
    ail = _rows(ai)
    n = len(arl)
    if n == 1:
        return complex(arl[0][0], ail[0][0])
    tre = 0.0
    cre = 0.0
    tim = 0.0
    cim = 0.0
    for perm in permutations(range(n)):
        pr = 1.0
        pi = 0.0
        for i in range(n):
            j = perm[i]
            xr = arl[i][j]
            xi = ail[i][j]
            pr, pi = pr * xr - pi * xi, pr * xi + pi * xr
        y = pr - cre
        t = tre + y
        cre = (t - tre) - y
        tre = t
        y = pi - cim
        t = tim + y
        cim = (t - tim) - y
        tim = t
    return complex(tre, tim)


def ryser_full(ar, ai):
    """Inclusion-exclusion permanent with Gray-ordered column subsets."""
    arl = _rows(ar)
    ail = _rows(ai)
    n = len(arl)
    rsr = [0.0] * n
    rsi = [0.0] * n
    tre = 0.0
    tim = 0.0
    g = 0
    sign = 1.0
    for k in range(1, 1 << n):
        b = (k & -k).bit_length() - 1
        g ^= 1 << b
        upd = 1.0 if (g >> b) & 1 else -1.0
        for i in range(n):
            rsr[i] += upd * arl[i][b]
            rsi[i] += upd * ail[i][b]
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


def ryser_nw_full(ar, ai):
    """Half-range inclusion-exclusion permanent (subset sums recentered)."""
    arl = _rows(ar)
    ail = _rows(ai)
    n = len(arl)
    if n == 1:
        return complex(arl[0][0], ail[0][0])
    rsr = [0.0] * n
    rsi = [0.0] * n
    for i in range(n):
        totr = 0.0
        toti = 0.0
        for j in range(n):
            totr += arl[i][j]
            toti += ail[i][j]
        rsr[i] = arl[i][n - 1] - totr * 0.5
        rsi[i] = ail[i][n - 1] - toti * 0.5
    tre = 0.0
    tim = 0.0
    g = 0
    sign = 1.0
    for k in range(1 << (n - 1)):
        if k:
            b = (k & -k).bit_length() - 1
            g ^= 1 << b
            upd = 1.0 if (g >> b) & 1 else -1.0
            for i in range(n):
                rsr[i] += upd * arl[i][b]
                rsi[i] += upd * ail[i][b]
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


def _init_colsums(arl, ail, coeffs):
    r = len(arl)
    c = len(arl[0])
    csr = [0.0] * c
    csi = [0.0] * c
    for j in range(c):
        sr = 0.0
        si = 0.0
        for i in range(r):
            w = coeffs[i]
            sr += w * arl[i][j]
            si += w * ail[i][j]
        csr[j] = sr
        csi[j] = si
    return csr, csi


def bbfg_lane(ar, ai, start, stop, gray, use_pockets):
    """One contiguous lane of the +-1 outer sum, row 0 held at +1.

    Returns the raw lane partial (no 2^(1-r) prefactor).  ``gray=False``
    recomputes every column sum from scratch, trading speed for one fewer
    source of accumulated rounding.
    """
    arl = _rows(ar)
    ail = _rows(ai)
    r = len(arl)
    c = len(arl[0])
    if start >= stop:
        return 0j
    pre = [0.0] * _POCKET_COUNT
    pim = [0.0] * _POCKET_COUNT
    tre = 0.0
    tim = 0.0

    if not gray:
        for idx in range(start, stop):
            g = idx ^ (idx >> 1)
            coeffs = [1.0] * r
            for i in range(1, r):
                if (g >> (r - 1 - i)) & 1:
                    coeffs[i] = -1.0
            csr, csi = _init_colsums(arl, ail, coeffs)
            sign = -1.0 if bin(g).count("1") & 1 else 1.0
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
        return _pocket_total(pre, pim) if use_pockets else complex(tre, tim)

    g = start ^ (start >> 1)
    coeffs = [1.0] * r
    for i in range(1, r):
        if (g >> (r - 1 - i)) & 1:
            coeffs[i] = -1.0
    csr, csi = _init_colsums(arl, ail, coeffs)
    sign = -1.0 if bin(g).count("1") & 1 else 1.0
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
            b = (nxt & -nxt).bit_length() - 1
            row = r - 1 - b
            g ^= 1 << b
            upd = -2.0 if (g >> b) & 1 else 2.0
            for j in range(c):
                csr[j] += upd * arl[row][j]
                csi[j] += upd * ail[row][j]
            sign = -sign
    return _pocket_total(pre, pim) if use_pockets else complex(tre, tim)


def repeated_lane(ar, ai, coeffs0, row_of_digit, limits, nexp,
                  adig, gdig, dirs, binom0, sign0, start, stop, use_pockets):
    """One lane of the multiplicity-weighted outer sum.

    ``adig``/``gdig``/``dirs`` carry the mixed-radix counter state at
    ``start`` and are consumed destructively; ``coeffs0`` holds the signed
    row weights (multiplicity minus twice the current digit) used to seed
    the column sums.
    """
    arl = _rows(ar)
    ail = _rows(ai)
    c = len(arl[0])
    if start >= stop:
        return 0j
    adig = np.asarray(adig).tolist()
    gdig = np.asarray(gdig).tolist()
    dirs = np.asarray(dirs).tolist()
    limits = np.asarray(limits).tolist()
    rows = np.asarray(row_of_digit).tolist()
    nexp = np.asarray(nexp).tolist()
    csr, csi = _init_colsums(arl, ail, [float(w) for w in coeffs0])
    binom = int(binom0)
    sign = int(sign0)
    pre = [0.0] * _POCKET_COUNT
    pim = [0.0] * _POCKET_COUNT
    tre = 0.0
    tim = 0.0
    for idx in range(start, stop):
        pr = 1.0
        pi = 0.0
        for j in range(c):
            sr = csr[j]
            si = csi[j]
            for _ in range(nexp[j]):
                pr, pi = pr * sr - pi * si, pr * si + pi * sr
        w = float(sign * binom)
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
            row = rows[p]
            upd = -2.0 * change
            for j in range(c):
                csr[j] += upd * arl[row][j]
                csi[j] += upd * ail[row][j]
    return _pocket_total(pre, pim) if use_pockets else complex(tre, tim)


def repeated_lane_extended(ar, ai, coeffs0, row_of_digit, limits, nexp,
                           adig, gdig, dirs, binom0, sign0, start, stop, out):
    """Extended-precision variant of :func:`repeated_lane`.

    ``ar``/``ai`` and ``out`` are ``numpy.longdouble`` buffers; the lane
    partial is accumulated into ``out[0]``/``out[1]`` with plain summation.
    """
    ld = np.longdouble
    arl = [[ld(x) for x in row] for row in np.asarray(ar)]
    ail = [[ld(x) for x in row] for row in np.asarray(ai)]
    c = len(arl[0])
    if start >= stop:
        return
    adig = np.asarray(adig).tolist()
    gdig = np.asarray(gdig).tolist()
    dirs = np.asarray(dirs).tolist()
    limits = np.asarray(limits).tolist()
    rows = np.asarray(row_of_digit).tolist()
    nexp = np.asarray(nexp).tolist()
    zero = ld(0.0)
    csr = [zero] * c
    csi = [zero] * c
    r = len(arl)
    for j in range(c):
        sr = zero
        si = zero
        for i in range(r):
            w = ld(int(coeffs0[i]))
            sr = sr + w * arl[i][j]
            si = si + w * ail[i][j]
        csr[j] = sr
        csi[j] = si
    binom = int(binom0)
    sign = int(sign0)
    tre = zero
    tim = zero
    one = ld(1.0)
    for idx in range(start, stop):
        pr = one
        pi = zero
        for j in range(c):
            sr = csr[j]
            si = csi[j]
            for _ in range(nexp[j]):
                pr, pi = pr * sr - pi * si, pr * si + pi * sr
        w = ld(sign * binom)
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
            row = rows[p]
            upd = ld(-2 * change)
            for j in range(c):
                csr[j] = csr[j] + upd * arl[row][j]
                csi[j] = csi[j] + upd * ail[row][j]
    out[0] += tre
    out[1] += tim
