"""Reflected Gray-code counters, binary and mixed-radix.

The binary counter is the classic reflected sequence ``g(i) = i ^ (i >> 1)``:
consecutive codes differ in exactly one bit, and the changed bit between
``g(i-1)`` and ``g(i)`` sits at the position of the lowest set bit of ``i``.

:class:`NaryGrayCounter` generalizes this to per-digit limits: digit ``k``
counts over ``0..limits[k]`` and consecutive states differ in exactly one
digit, by +-1.  Digit 0 is the fastest-changing (least significant) digit;
the last digit is the leading one.  A counter can be positioned at any
decimal index in O(#digits) time, independent of the index magnitude, which
is what makes partitioned enumeration of huge index ranges practical.
Indices are plain Python integers, so widths beyond 64 bits are fine.
"""

from __future__ import annotations

from math import prod

__all__ = [
    "binary_gray",
    "changed_bit_position",
    "NaryGrayCounter",
    "partition",
    "leading_digit_blocks",
]


def binary_gray(i: int) -> int:
    """Reflected binary Gray code of decimal index ``i``."""
    if i < 0:
        raise ValueError("index must be non-negative")
    return i ^ (i >> 1)


def changed_bit_position(i: int) -> int:
    """Bit that differs between the Gray codes of ``i - 1`` and ``i``.

    Equals the position of the lowest set bit of ``i``.
    """
    if i < 1:
        raise ValueError("no transition leads to index 0")
    return (i & -i).bit_length() - 1


def _mixed_radix_digits(limits, index):
    digits = []
    rem = index
    for lim in limits:
        radix = lim + 1
        digits.append(rem % radix)
        rem //= radix
    if rem:
        raise ValueError(f"index {index} out of range for limits {tuple(limits)}")
    return digits


def _reflected_state(limits, index):
    """Decode ``index`` into (index_digits, gray_digits, directions, parity).

    The gray digit at position j equals the mixed-radix digit or its
    complement, depending on the parity of the gray digits above j; that
    parity also decides whether the digit currently counts up or down.
    """
    idx_digits = _mixed_radix_digits(limits, index)
    nd = len(limits)
    gray = [0] * nd
    dirs = [1] * nd
    flip = False
    for j in range(nd - 1, -1, -1):
        dirs[j] = -1 if flip else 1
        e = (limits[j] - idx_digits[j]) if flip else idx_digits[j]
        gray[j] = e
        if e & 1:
            flip = not flip
    parity = sum(gray) & 1
    return idx_digits, gray, dirs, parity


class NaryGrayCounter:
    """Reflected mixed-radix Gray counter with O(#digits) positioning.

    Attributes
    ----------
    limits : tuple of int
        Per-digit maxima; digit ``k`` ranges over ``0..limits[k]``.
    digits : list of int
        Current code (digit 0 fastest).
    index : int
        Current decimal position in the sequence.
    directions : list of int
        Per-digit counting direction (+1 up, -1 down), the reflected
        counter bookkeeping.
    parity : int
        Parity (0/1) of the digit sum.
    """

    __slots__ = ("limits", "digits", "index", "directions", "parity", "_idx_digits")

    def __init__(self, limits, start_index: int = 0):
        limits = tuple(int(l) for l in limits)
        if not limits:
            raise ValueError("at least one digit is required")
        if any(l < 0 for l in limits):
            raise ValueError("digit limits must be non-negative")
        if start_index < 0:
            raise ValueError("start index must be non-negative")
        self.limits = limits
        self._idx_digits, self.digits, self.directions, self.parity = _reflected_state(
            limits, start_index
        )
        self.index = start_index

    def __len__(self) -> int:
        return prod(l + 1 for l in self.limits)

    @property
    def exhausted(self) -> bool:
        return self.index + 1 >= len(self)

    def step(self):
        """Advance one position; return ``(digit_index, change, parity)``.

        Exactly one digit moves, by +-1; the parity flag flips on every
        step.  Raises ``ValueError`` when already at the final state.
        """
        idx = self._idx_digits
        limits = self.limits
        p = 0
        while p < len(limits) and idx[p] == limits[p]:
            idx[p] = 0
            p += 1
        if p == len(limits):
            raise ValueError("counter exhausted")
        idx[p] += 1
        change = self.directions[p]
        self.digits[p] += change
        self.parity ^= 1
        for j in range(p):
            self.directions[j] = -self.directions[j]
        self.index += 1
        return p, change, self.parity


def partition(total: int, workers: int):
    """Split ``range(total)`` into ``workers`` contiguous ``[begin, end)`` ranges.

    Ranges are disjoint, covering, and their sizes differ by at most one.
    When ``workers`` is a power of two dividing ``total``, the ranges are
    exactly the blocks obtained by fixing the leading bits/digits.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if total < 0:
        raise ValueError("total must be non-negative")
    base, extra = divmod(total, workers)
    ranges = []
    begin = 0
    for w in range(workers):
        size = base + (1 if w < extra else 0)
        ranges.append((begin, begin + size))
        begin += size
    return ranges


def leading_digit_blocks(limits, min_blocks: int):
    """Contiguous index blocks obtained by fixing leading (most significant) digits.

    Fixes the smallest number of leading digits whose radix product reaches
    ``min_blocks`` (or all digits, if that is never reached).  Because the
    leading digits of the reflected code are a function of the leading index
    digits alone, each block is a contiguous decimal-index range.
    """
    if min_blocks < 1:
        raise ValueError("min_blocks must be >= 1")
    radices = [l + 1 for l in limits]
    total = prod(radices)
    nblocks = 1
    for r in reversed(radices):
        if nblocks >= min(min_blocks, total):
            break
        nblocks *= r
    size = total // nblocks
    return [(b * size, (b + 1) * size) for b in range(nblocks)]
