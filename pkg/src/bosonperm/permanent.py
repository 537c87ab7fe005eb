"""Matrix permanent engines.

The workhorse is the +-1 outer-sum expansion with the first row held at +1,
enumerated in reflected Gray-code order so each step touches a single row.
``perm_bbfg_repeated`` generalizes it to repeated rows and columns: the
outer sum runs over a mixed-radix Gray counter whose digit ``k`` counts the
number of flipped copies of row ``k``, weighted by binomial coefficients
that are maintained with one multiplication and one exact division per
step.  The classic inclusion-exclusion expansions (``perm_ryser``,
``perm_ryser_nw``) and the factorial-cost ``perm_naive`` serve as
independent cross-checks, and ``perm_multiprecision`` evaluates the same
sum with correctly rounded software floats of any mantissa width.

Evaluation splits the outer index range into a fixed grid of lanes, each
re-initialized via constant-time Gray positioning and accumulated into
magnitude-bucketed pockets; the lane partials are reduced in lane order.
Because the grid does not depend on the worker count, results are
bit-for-bit reproducible for any ``workers`` value.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb, frexp, prod

import gmpy2
import numpy as np

from . import graycode
from ._backend import kernels

__all__ = [
    "PermanentResult",
    "PocketAccumulator",
    "perm_naive",
    "perm_ryser",
    "perm_ryser_nw",
    "perm_bbfg",
    "pad_matrix",
    "perm_bbfg_repeated",
    "perm_parallel",
    "perm_batch",
    "perm_multiprecision",
    "binomial_update",
    "relative_error",
]

NAIVE_MAX_DIM = 12
EXPONENTIAL_MAX_ROWS = 30
REPEATED_TERM_GUARD = 1 << 30

# Lane grid for the outer sum: fixed so that results do not depend on the
# worker count, and coarse enough that tiny instances stay single-lane.
_LANE_COUNT = 16
_LANE_MIN_TOTAL = 1024


@dataclass(frozen=True)
class PermanentResult:
    """A computed permanent plus how it was computed.

    ``addend_count`` is the number of outer-sum terms the engine evaluated;
    ``value_exact`` carries the raw software-float value for the
    multiprecision engine.
    """

    value: complex
    engine: str
    precision: str
    addend_count: int
    value_exact: object = None


class PocketAccumulator:
    """Magnitude-bucketed summation for long, cancellation-prone sums.

    Addends are routed into pockets by the binary exponent of their
    magnitude (``bucket_width`` exponent values per pocket); finalization
    adds the pockets from the smallest magnitude bucket to the largest.
    """

    def __init__(self, bucket_width: int = 64):
        if bucket_width < 1:
            raise ValueError("bucket width must be >= 1")
        self.bucket_width = bucket_width
        # Bucket boundaries sit just above the exponent of unit-magnitude
        # values, so O(1) addends never share a pocket with large
        # cancelling intermediates.
        self._bias = 1533
        self.pockets = [0j] * ((3072 // bucket_width) + 3)

    def add(self, value: complex) -> None:
        e = frexp(abs(value))[1]
        self.pockets[(e + self._bias) // self.bucket_width] += value

    def total(self) -> complex:
        out = 0j
        for p in self.pockets:
            out += p
        return out


def _as_matrix(a) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if arr.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if arr.size == 0:
        raise ValueError("matrix must be nonempty")
    return arr


def _require_square(a: np.ndarray) -> int:
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    return a.shape[0]


def _reim(a: np.ndarray, dtype=np.float64):
    return (
        np.ascontiguousarray(a.real, dtype=dtype),
        np.ascontiguousarray(a.imag, dtype=dtype),
    )


def _lanes_for(total: int, mode: str, limits):
    if total < _LANE_MIN_TOTAL:
        return [(0, total)]
    if mode == "contiguous":
        return graycode.partition(total, _LANE_COUNT)
    if mode == "leading-digit":
        return graycode.leading_digit_blocks(limits, _LANE_COUNT)
    raise ValueError(f"unknown partition mode: {mode!r}")


def _run_lanes(fn, lanes, workers: int):
    """Evaluate lanes (possibly concurrently) and reduce in lane order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or len(lanes) == 1:
        partials = [fn(s, e) for s, e in lanes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda rng: fn(*rng), lanes))
    out = 0j
    for p in partials:
        out += p
    return out


def perm_naive(a) -> PermanentResult:
    """Permanent by explicit permutation sum; reference oracle, n <= 12."""
    a = _as_matrix(a)
    n = _require_square(a)
    if n > NAIVE_MAX_DIM:
        raise ValueError(f"naive engine is limited to {NAIVE_MAX_DIM}x{NAIVE_MAX_DIM}")
    ar, ai = _reim(a)
    value = kernels.naive_full(ar, ai)
    return PermanentResult(value, "naive", "double", math.factorial(n))


def perm_ryser(a) -> PermanentResult:
    """Inclusion-exclusion permanent, Gray-ordered subsets, O(n 2^n)."""
    a = _as_matrix(a)
    n = _require_square(a)
    if n > EXPONENTIAL_MAX_ROWS:
        raise ValueError(f"engine is limited to n <= {EXPONENTIAL_MAX_ROWS}")
    ar, ai = _reim(a)
    value = kernels.ryser_full(ar, ai)
    return PermanentResult(value, "ryser", "double", (1 << n) - 1)


def perm_ryser_nw(a) -> PermanentResult:
    """Half-range inclusion-exclusion permanent over subsets of n-1 columns."""
    a = _as_matrix(a)
    n = _require_square(a)
    if n > EXPONENTIAL_MAX_ROWS:
        raise ValueError(f"engine is limited to n <= {EXPONENTIAL_MAX_ROWS}")
    ar, ai = _reim(a)
    value = kernels.ryser_nw_full(ar, ai)
    return PermanentResult(value, "ryser-nw", "double", 1 << max(n - 1, 0))


def perm_bbfg(a, gray: bool = True, *, allow_tall: bool = False,
              workers: int = 1, mode: str = "contiguous",
              pockets: bool = True) -> PermanentResult:
    """Permanent via the +-1 outer sum; rectangular matrices allowed.

    With ``r`` rows and ``c >= r`` columns the value is the generalized
    expansion over all ``c`` column sums, which coincides with the ordinary
    permanent for square input and is invariant under the one-padding of
    :func:`pad_matrix`.  ``r > c`` is rejected unless ``allow_tall`` is set
    (the exact-cancellation consistency check; the true value is 0 whenever
    ``r >= c + 2``).  ``gray=False`` recomputes each column sum from
    scratch for a higher-accuracy (but O(n) slower) evaluation.
    """
    a = _as_matrix(a)
    r, c = a.shape
    if r > c and not allow_tall:
        raise ValueError("matrix has more rows than columns; this orientation "
                         "is only meaningful for the zero-cancellation check "
                         "(pass allow_tall=True)")
    if r > EXPONENTIAL_MAX_ROWS:
        raise ValueError(f"engine is limited to {EXPONENTIAL_MAX_ROWS} rows")
    ar, ai = _reim(a)
    total = 1 << (r - 1)
    lanes = _lanes_for(total, mode, [1] * (r - 1))
    value = _run_lanes(
        lambda s, e: kernels.bbfg_lane(ar, ai, s, e, gray, pockets),
        lanes, workers,
    )
    value *= 2.0 ** (1 - r)
    engine = "bbfg-gray" if gray else "bbfg-nogray"
    return PermanentResult(value, engine, "double", total)


def pad_matrix(a, target_cols: int) -> np.ndarray:
    """Embed a square matrix into ``n x target_cols`` without changing its permanent.

    Padding columns carry 1 in the first row and 0 elsewhere, so every
    padded column sum is exactly 1 for any sign pattern.
    """
    a = _as_matrix(a)
    n = _require_square(a)
    if target_cols < n:
        raise ValueError("target column count must be at least the matrix size")
    out = np.zeros((n, target_cols), dtype=np.complex128)
    out[:, :n] = a
    out[0, n:] = 1.0
    return out


class _RepeatedPlan:
    """Shared preparation for the multiplicity-aware engines.

    Applies the fixed-first-row convention (a multiplicity-1 row is moved to
    the front when one exists, otherwise the first row donates one fixed
    copy), maps the remaining row groups onto Gray-counter digits with the
    earliest rows as the leading digits, and records the term count.
    """

    def __init__(self, m, n, rows: int, cols: int, require_balanced: bool = True):
        m = np.asarray(m, dtype=np.int64)
        n = np.asarray(n, dtype=np.int64)
        if m.shape != (rows,) or n.shape != (cols,):
            raise ValueError("multiplicity vectors do not match the matrix shape")
        if np.any(m < 1) or np.any(n < 1):
            raise ValueError("multiplicities must be >= 1")
        if require_balanced and int(m.sum()) != int(n.sum()):
            raise ValueError("row and column multiplicities must sum to the same total")
        ones = np.flatnonzero(m == 1)
        front = int(ones[0]) if ones.size else 0
        self.order = [front] + [k for k in range(rows) if k != front]
        self.mult = m[self.order].copy()
        limits_by_row = self.mult.copy()
        limits_by_row[0] -= 1
        self.digit_rows = [k for k in range(rows - 1, -1, -1) if limits_by_row[k] > 0]
        self.limits = [int(limits_by_row[k]) for k in self.digit_rows]
        self.total = prod(l + 1 for l in self.limits)
        if self.total > REPEATED_TERM_GUARD:
            raise ValueError(f"term count {self.total} exceeds the {REPEATED_TERM_GUARD} guard")
        self.nexp = n.copy()
        self.photons = int(m.sum())

    def order_matrix(self, a: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(a[self.order, :])

    def lane_state(self, start: int):
        """Counter state at decimal index ``start`` as int64 arrays."""
        if not self.limits:
            coeffs = self.mult.astype(np.int64)
            empty = np.zeros(0, dtype=np.int64)
            return coeffs, empty, empty, empty, 1, 1
        adig, gdig, dirs, parity = graycode._reflected_state(self.limits, start)
        binom = 1
        for lim, g in zip(self.limits, gdig):
            binom *= comb(lim, g)
        sign = -1 if parity else 1
        coeffs = self.mult.astype(np.int64).copy()
        for d, row in enumerate(self.digit_rows):
            coeffs[row] -= 2 * gdig[d]
        return (
            coeffs,
            np.asarray(adig, dtype=np.int64),
            np.asarray(gdig, dtype=np.int64),
            np.asarray(dirs, dtype=np.int64),
            binom,
            sign,
        )

    def lanes(self, mode: str):
        return _lanes_for(self.total, mode, self.limits)


def _evaluate_repeated(plan: _RepeatedPlan, a: np.ndarray, precision: str,
                       workers: int, mode: str, pockets: bool) -> complex:
    am = plan.order_matrix(a)
    rows = np.asarray(plan.digit_rows, dtype=np.int64)
    limits = np.asarray(plan.limits, dtype=np.int64)
    nexp = np.asarray(plan.nexp, dtype=np.int64)
    lanes = plan.lanes(mode)

    if precision == "double":
        ar, ai = _reim(am)

        def lane(s, e):
            coeffs, adig, gdig, dirs, binom, sign = plan.lane_state(s)
            return kernels.repeated_lane(ar, ai, coeffs, rows, limits, nexp,
                                         adig, gdig, dirs, binom, sign, s, e,
                                         pockets)

        total = _run_lanes(lane, lanes, workers)
        return total * 2.0 ** (1 - plan.photons)

    if precision == "extended":
        ar, ai = _reim(am, dtype=np.longdouble)
        outs = [np.zeros(2, dtype=np.longdouble) for _ in lanes]

        def lane_ext(i):
            s, e = lanes[i]
            coeffs, adig, gdig, dirs, binom, sign = plan.lane_state(s)
            kernels.repeated_lane_extended(ar, ai, coeffs, rows, limits, nexp,
                                           adig, gdig, dirs, binom, sign, s, e,
                                           outs[i])

        if workers == 1 or len(lanes) == 1:
            for i in range(len(lanes)):
                lane_ext(i)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lane_ext, range(len(lanes))))
        tre = np.longdouble(0.0)
        tim = np.longdouble(0.0)
        for out in outs:
            tre += out[0]
            tim += out[1]
        scale = np.longdouble(2.0) ** (1 - plan.photons)
        return complex(float(tre * scale), float(tim * scale))

    raise ValueError(f"unknown precision tier: {precision!r}")


def perm_bbfg_repeated(a, m=None, n=None, *, precision: str = "double",
                       workers: int = 1, mode: str = "contiguous",
                       pockets: bool = True) -> PermanentResult:
    """Permanent of a compact matrix with row/column multiplicities.

    Equals ``perm_naive`` of the expanded matrix (row ``k`` repeated
    ``m[k]`` times, column ``j`` repeated ``n[j]`` times) while evaluating
    only ``prod(m'_k + 1)`` outer terms, where ``m'`` is the multiplicity
    vector after the fixed-first-row reduction.  ``precision`` selects
    ``"double"`` or ``"extended"`` (x87 80-bit long double on this
    platform's builds).
    """
    a = _as_matrix(a)
    r, c = a.shape
    if m is None:
        m = np.ones(r, dtype=np.int64)
    if n is None:
        n = np.ones(c, dtype=np.int64)
    plan = _RepeatedPlan(m, n, rows=r, cols=c)
    value = _evaluate_repeated(plan, a, precision, workers, mode, pockets)
    engine = "bbfg-repeated" if precision == "double" else "bbfg-repeated-extended"
    return PermanentResult(value, engine, precision, plan.total)


def perm_parallel(a, m=None, n=None, workers: int = 1,
                  mode: str = "contiguous", *, precision: str = "double",
                  pockets: bool = True) -> PermanentResult:
    """Multi-worker evaluation of :func:`perm_bbfg_repeated`.

    Lane boundaries are a pure function of the term count and ``mode``, so
    any worker count yields bit-identical results; ``workers=1`` is the
    serial engine itself.
    """
    return perm_bbfg_repeated(a, m, n, precision=precision, workers=workers,
                              mode=mode, pockets=pockets)


def perm_batch(batch, m=None, n=None, *, precision: str = "double",
               workers: int = 1, mode: str = "contiguous",
               pockets: bool = True):
    """Permanents of equally-sized matrices sharing one multiplicity pair.

    The enumeration plan (row order, digit layout, lane grid) is built once
    and reused, which is what makes batching worthwhile for small matrices.
    """
    mats = [_as_matrix(a) for a in batch]
    if not mats:
        return []
    shape = mats[0].shape
    if any(x.shape != shape for x in mats):
        raise ValueError("batched matrices must share one shape")
    r, c = shape
    if m is None:
        m = np.ones(r, dtype=np.int64)
    if n is None:
        n = np.ones(c, dtype=np.int64)
    plan = _RepeatedPlan(m, n, rows=r, cols=c)
    engine = "bbfg-repeated" if precision == "double" else "bbfg-repeated-extended"
    return [
        PermanentResult(
            _evaluate_repeated(plan, a, precision, workers, mode, pockets),
            engine, precision, plan.total,
        )
        for a in mats
    ]


def perm_multiprecision(a, m=None, n=None, mantissa_bits: int = 256,
                        *, allow_tall: bool = False) -> PermanentResult:
    """Permanent with correctly rounded software floats (ground truth).

    Evaluates the same multiplicity-aware outer sum as
    :func:`perm_bbfg_repeated`, with every basic operation rounded at
    ``mantissa_bits``.  ``value_exact`` on the result carries the raw
    software-float value.  On a tall matrix (more rows than columns,
    ``allow_tall=True``) the expansion cancels exactly whenever
    ``r >= c + 2``, which makes it a sharp self-test of the implementation.
    """
    if mantissa_bits < 64:
        raise ValueError("mantissa_bits must be >= 64")
    a = _as_matrix(a)
    r, c = a.shape
    if r > c and not allow_tall:
        raise ValueError("matrix has more rows than columns; this orientation "
                         "is only meaningful for the zero-cancellation check "
                         "(pass allow_tall=True)")
    require_balanced = True
    if m is None:
        m = np.ones(r, dtype=np.int64)
        if r != c:
            require_balanced = False
    if n is None:
        n = np.ones(c, dtype=np.int64)
    plan = _RepeatedPlan(m, n, rows=r, cols=c, require_balanced=require_balanced)
    am = plan.order_matrix(a)

    old_ctx = gmpy2.get_context()
    gmpy2.set_context(gmpy2.context(precision=mantissa_bits))
    try:
        mat = [[gmpy2.mpc(am[i, j].real, am[i, j].imag) for j in range(c)]
               for i in range(r)]
        coeffs, adig, gdig, dirs, binom, sign = plan.lane_state(0)
        adig = adig.tolist()
        gdig = gdig.tolist()
        dirs = dirs.tolist()
        limits = plan.limits
        rows = plan.digit_rows
        nexp = [int(x) for x in plan.nexp]
        cs = []
        for j in range(c):
            s = gmpy2.mpc(0)
            for i in range(r):
                s += int(coeffs[i]) * mat[i][j]
            cs.append(s)
        acc = gmpy2.mpc(0)
        for idx in range(plan.total):
            p = gmpy2.mpc(1)
            for j in range(c):
                base = cs[j]
                for _ in range(nexp[j]):
                    p *= base
            acc += (sign * binom) * p
            if idx + 1 < plan.total:
                q = 0
                while adig[q] == limits[q]:
                    adig[q] = 0
                    q += 1
                adig[q] += 1
                change = dirs[q]
                old = gdig[q]
                gdig[q] += change
                if change > 0:
                    binom = binom * (limits[q] - old) // (old + 1)
                else:
                    binom = binom * old // (limits[q] - old + 1)
                sign = -sign
                for t in range(q):
                    dirs[t] = -dirs[t]
                row = rows[q]
                upd = -2 * change
                for j in range(c):
                    cs[j] += upd * mat[row][j]
        value = acc / gmpy2.mpfr(2) ** (plan.photons - 1)
    finally:
        gmpy2.set_context(old_ctx)
    return PermanentResult(
        complex(float(value.real), float(value.imag)),
        "multiprecision",
        f"multiprecision({mantissa_bits})",
        plan.total,
        value_exact=value,
    )


def binomial_update(b: int, m_k: int, delta_k: int, change: int) -> int:
    """Update ``C(m_k, delta_k)`` to ``C(m_k, delta_k + change)`` in O(1).

    One multiplication and one division, exact by construction; an inexact
    division means the inputs violated the invariant and is reported as a
    bug trap.
    """
    if change not in (-1, 1):
        raise ValueError("change must be +1 or -1")
    if not 0 <= delta_k <= m_k:
        raise ValueError("digit out of range")
    if not 0 <= delta_k + change <= m_k:
        raise ValueError("change leaves the digit range")
    if change > 0:
        num, den = b * (m_k - delta_k), delta_k + 1
    else:
        num, den = b * delta_k, m_k - delta_k + 1
    q, rem = divmod(num, den)
    if rem:
        raise ArithmeticError("inexact binomial division: corrupted counter state")
    return q


def relative_error(value: complex, reference: complex) -> float:
    """``|value - reference| / |reference|``.

    A zero reference makes the quantity undefined; the absolute error is
    returned instead, flagged with a ``RuntimeWarning``.
    """
    if reference == 0:
        warnings.warn("reference value is zero; returning the absolute error",
                      RuntimeWarning, stacklevel=2)
        return abs(value)
    return abs(value - reference) / abs(reference)
