"""Fixed-point evaluation pipeline, emulated in software.

Models a streaming evaluator that works entirely in scaled-integer
(two's-complement) arithmetic: inputs are quantized to 64 bits with 62
fractional bits, column sums are updated exactly, per-term products run
through a pairwise multiplication tree whose level widths grow from 79 to
189 bits, and terms accumulate into a wide (192- or 256-bit) register with
6 integer bits.  The emulation is value-accurate at level boundaries: every
quantity a hardware register would hold is reproduced exactly, while
routing, tiling, and clocking are out of scope.

Because all arithmetic is exact integer work after input quantization, the
result is independent of any partitioning of the outer sum; the multi-way
stream interleaving used for concurrency is therefore checked to be a
no-op bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from fractions import Fraction
from math import comb

import numpy as np

from .graycode import partition
from .linalg import ColumnScaling, scale_columns
from .permanent import PermanentResult, _RepeatedPlan, _as_matrix

__all__ = [
    "FixedPointConfig",
    "FixedPointComplex",
    "FixedPointOverflowError",
    "DEFAULT_CONFIG",
    "to_fixed",
    "fixed_complex_mul",
    "product_tree",
    "perm_fixed",
    "worst_case_partial_sum_bound",
]

FIXED_MAX_PHOTONS = 28


class FixedPointOverflowError(OverflowError):
    """A value left the representable range of its fixed-point format."""


@dataclass(frozen=True)
class FixedPointConfig:
    """Bit-width policy of the pipeline.

    Defaults follow the reference profile: 64-bit inputs with 62 fractional
    bits, a six-level product tree at 79/79/93/110/158/189 bits (two integer
    bits each), and a 192-bit accumulator with 6 integer bits.
    """

    input_bits: int = 64
    input_fraction_bits: int = 62
    tree_widths: tuple = (79, 79, 93, 110, 158, 189)
    accumulator_bits: int = 192
    accumulator_integer_bits: int = 6

    def __post_init__(self):
        if not 0 < self.input_fraction_bits < self.input_bits:
            raise ValueError("input fraction bits must lie inside the input width")
        if len(self.tree_widths) < 1 or any(w < 3 for w in self.tree_widths):
            raise ValueError("tree widths must be at least 3 bits")
        for i in range(2, len(self.tree_widths)):
            if self.tree_widths[i] < self.tree_widths[i - 1]:
                raise ValueError("tree widths must be non-decreasing from level 3 onward")
        if self.accumulator_integer_bits >= self.accumulator_bits:
            raise ValueError("accumulator integer bits exceed its width")
        object.__setattr__(self, "tree_widths", tuple(int(w) for w in self.tree_widths))

    @property
    def accumulator_fraction_bits(self) -> int:
        return self.accumulator_bits - self.accumulator_integer_bits

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_file(cls, path) -> "FixedPointConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        data["tree_widths"] = tuple(data["tree_widths"])
        return cls(**data)


DEFAULT_CONFIG = FixedPointConfig()


@dataclass(frozen=True)
class FixedPointComplex:
    """A complex number as a pair of scaled two's-complement integers."""

    real_raw: int
    imag_raw: int
    width: int
    fraction_bits: int

    def __post_init__(self):
        bound = 1 << (self.width - 1)
        if not (-bound <= self.real_raw < bound and -bound <= self.imag_raw < bound):
            raise FixedPointOverflowError(
                f"raw value does not fit {self.width} bits (two's complement)")

    @property
    def value(self) -> complex:
        scale = 1 << self.fraction_bits
        return complex(self.real_raw / scale, self.imag_raw / scale)

    @classmethod
    def from_complex(cls, z: complex, config: FixedPointConfig = DEFAULT_CONFIG):
        return cls(to_fixed(z.real, config), to_fixed(z.imag, config),
                   config.input_bits, config.input_fraction_bits)


def to_fixed(f, config: FixedPointConfig = DEFAULT_CONFIG) -> int:
    """Quantize ``f`` to the input format: nearest integer to ``f * 2**b_f``.

    Ties round to even.  ``f`` may be a float or an exact ``Fraction``;
    ``|f| > 1`` is rejected (callers normalize first).
    """
    f = Fraction(f)
    if abs(f) > 1:
        raise ValueError("fixed-point input magnitude exceeds 1; scale the matrix first")
    return round(f * (1 << config.input_fraction_bits))


def fixed_complex_mul(x: FixedPointComplex, y: FixedPointComplex,
                      out_width: int) -> FixedPointComplex:
    """Three-multiplication complex product, truncated to ``out_width``.

    Uses ``(ac - bd) + ((a+b)(c+d) - ac - bd)i``; the output keeps
    ``out_width - 2`` fraction bits (two integer bits incl. sign), and the
    discarded low bits are dropped by arithmetic shift (truncation), never
    rounded.
    """
    p1 = x.real_raw * y.real_raw
    p2 = x.imag_raw * y.imag_raw
    p3 = (x.real_raw + x.imag_raw) * (y.real_raw + y.imag_raw)
    out_fraction = out_width - 2
    shift = x.fraction_bits + y.fraction_bits - out_fraction
    re = p1 - p2
    im = p3 - p1 - p2
    if shift >= 0:
        re >>= shift
        im >>= shift
    else:
        re <<= -shift
        im <<= -shift
    return FixedPointComplex(re, im, out_width, out_fraction)


def _pad_pow2(values, config: FixedPointConfig):
    size = 1
    while size < len(values):
        size *= 2
    one = FixedPointComplex(1 << config.input_fraction_bits, 0,
                            config.input_bits, config.input_fraction_bits)
    return list(values) + [one] * (size - len(values))


def product_tree(values, config: FixedPointConfig = DEFAULT_CONFIG) -> FixedPointComplex:
    """Pairwise product of fixed-point values over log2-many widening levels.

    The list is padded with exact ones to the next power of two; a k-level
    tree uses the first k configured level widths.  Padding is lossless
    because multiplying by an exact one introduces no low bits to discard.
    """
    if not values:
        raise ValueError("product tree needs at least one input")
    level_values = _pad_pow2(values, config)
    nlevels = (len(level_values) - 1).bit_length()
    if nlevels > len(config.tree_widths):
        raise ValueError(f"{len(values)} inputs need {nlevels} tree levels; "
                         f"config provides {len(config.tree_widths)}")
    for level in range(nlevels):
        width = config.tree_widths[level]
        level_values = [
            fixed_complex_mul(level_values[2 * t], level_values[2 * t + 1], width)
            for t in range(len(level_values) // 2)
        ]
    return level_values[0]


def worst_case_partial_sum_bound(n: int) -> float:
    """Largest partial-sum magnitude of the outer sum for the all-ones worst case.

    Evaluated in exact integer arithmetic on the normalized (all entries
    ``1/n``) matrix; ``ceil(log2(.)) + 1`` integer bits (incl. sign) are
    enough for the accumulator at size ``n``.
    """
    if not 1 <= n <= 64:
        raise ValueError("supported sizes are 1..64")
    odd = sum((2 * (2 * k + 2) - n) ** n * comb(n - 1, 2 * k + 1)
              for k in range((n - 1) // 2 + 1))
    even = sum((2 * (2 * k + 1) - n) ** n * comb(n - 1, 2 * k)
               for k in range((n - 1) // 2 + 1))
    return float(Fraction(max(odd, even), n ** n))


def perm_fixed(a, m=None, n=None, config: FixedPointConfig = DEFAULT_CONFIG, *,
               streams: int = 1, scale: bool = True) -> PermanentResult:
    """Permanent through the full fixed-point pipeline.

    Columns are normalized (:func:`~bosonperm.linalg.scale_columns`), the
    scaled entries quantized, the multiplicity-aware outer sum enumerated
    with exact integer column-sum updates (add/subtract twice the changed
    row), each term reduced by :func:`product_tree`, weighted by the running
    binomial coefficient, and accumulated at the configured width.  The
    float result is rescaled by the product of the column factors.

    ``streams`` interleaves that many contiguous index sub-ranges with
    separate accumulators merged in order; since the arithmetic is exact,
    any stream count gives bit-identical results.  ``scale=False`` skips
    normalization (a hook to exercise the overflow detection).
    """
    a = _as_matrix(a)
    r, c = a.shape
    if m is None:
        m = np.ones(r, dtype=np.int64)
    if n is None:
        n = np.ones(c, dtype=np.int64)
    plan = _RepeatedPlan(m, n, rows=r, cols=c)
    if plan.photons > FIXED_MAX_PHOTONS:
        raise ValueError(f"fixed-point engine is limited to {FIXED_MAX_PHOTONS} photons")
    if streams < 1:
        raise ValueError("streams must be >= 1")

    if scale:
        # The normalization must bound the multiplicity-weighted column
        # sums, so the factors are computed on the row-expanded columns.
        _, scaling = scale_columns(np.repeat(a, np.asarray(m, dtype=np.int64), axis=0))
        scaled = a / scaling.alphas[np.newaxis, :]
    else:
        scaled = a
        scaling = ColumnScaling(alphas=np.ones(c), logproduct=0.0)
    am = plan.order_matrix(scaled)

    fr = [[to_fixed(am[i, j].real, config) for j in range(c)] for i in range(r)]
    fi = [[to_fixed(am[i, j].imag, config) for j in range(c)] for i in range(r)]

    in_bits = config.input_bits
    in_frac = config.input_fraction_bits
    cs_bound = 1 << (in_bits - 1)
    acc_frac = config.accumulator_fraction_bits
    acc_bound = 1 << (config.accumulator_bits - 1)
    nexp = [int(x) for x in plan.nexp]
    limits = plan.limits
    rows = plan.digit_rows

    # The 2^(1-n) prefactor is folded into the accumulation as an exact
    # binary shift, so the register holds normalized partial sums; without
    # it, structured inputs (identity: every term +1) would exceed the
    # configured integer bits even though their permanent is tiny.
    prefactor_shift = plan.photons - 1
    acc_re = 0
    acc_im = 0
    for begin, end in partition(plan.total, streams):
        if begin >= end:
            continue
        coeffs, adig, gdig, dirs, binom, sign = plan.lane_state(begin)
        adig = adig.tolist()
        gdig = gdig.tolist()
        dirs = dirs.tolist()
        csr = [0] * c
        csi = [0] * c
        for j in range(c):
            sr = 0
            si = 0
            for i in range(r):
                w = int(coeffs[i])
                sr += w * fr[i][j]
                si += w * fi[i][j]
            if not (-cs_bound <= sr < cs_bound and -cs_bound <= si < cs_bound):
                raise FixedPointOverflowError(
                    "column sum overflow: input normalization violated")
            csr[j] = sr
            csi[j] = si
        s_re = 0
        s_im = 0
        for idx in range(begin, end):
            inputs = []
            for j in range(c):
                v = FixedPointComplex(csr[j], csi[j], in_bits, in_frac)
                inputs.extend([v] * nexp[j])
            term = product_tree(inputs, config)
            w = sign * binom
            tre = w * term.real_raw
            tim = w * term.imag_raw
            shift = term.fraction_bits - acc_frac + prefactor_shift
            if shift >= 0:
                tre >>= shift
                tim >>= shift
            else:
                tre <<= -shift
                tim <<= -shift
            s_re += tre
            s_im += tim
            if not (-acc_bound <= s_re < acc_bound and -acc_bound <= s_im < acc_bound):
                raise FixedPointOverflowError("accumulator overflow")
            if idx + 1 < end:
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
                upd = -2 * change
                for j in range(c):
                    csr[j] += upd * fr[row][j]
                    csi[j] += upd * fi[row][j]
                    if not (-cs_bound <= csr[j] < cs_bound and -cs_bound <= csi[j] < cs_bound):
                        raise FixedPointOverflowError(
                            "column sum overflow: input normalization violated")
        acc_re += s_re
        acc_im += s_im

    denom = 1 << acc_frac
    value = complex(acc_re / denom, acc_im / denom)
    value *= scaling.rescale_factor(plan.nexp)
    return PermanentResult(
        value,
        "fixedpoint",
        f"fixedpoint({config.input_bits}->{config.accumulator_bits})",
        plan.total,
    )
