"""Shared test oracles, independent of the library's evaluation paths."""

from itertools import permutations, product

import numpy as np
import pytest


def brute_force_permanent(a):
    """Permutation-sum permanent evaluated with plain Python complexes."""
    a = np.asarray(a)
    n = a.shape[0]
    total = 0j
    for perm in permutations(range(n)):
        p = 1 + 0j
        for i, j in enumerate(perm):
            p *= complex(a[i, j])
        total += p
    return total


def signed_column_max(col):
    """Exhaustive worst case of |sum_i d_i col_i| over all sign patterns."""
    col = list(col)
    best = 0.0
    for signs in product((1, -1), repeat=len(col) - 1):
        s = col[0]
        for d, x in zip(signs, col[1:]):
            s += d * x
        best = max(best, abs(s))
    return best


def reference_gray_sequence(limits):
    """Reflected mixed-radix sequence built by literal recursive reflection."""
    if not limits:
        return [()]
    tail = reference_gray_sequence(limits[:-1])
    out = []
    for d in range(limits[-1] + 1):
        block = tail if d % 2 == 0 else tail[::-1]
        out.extend(t + (d,) for t in block)
    return out


def random_composition(rng, total, parts):
    """Composition of ``total`` into ``parts`` strictly positive parts."""
    if parts == 1:
        return np.array([total], dtype=np.int64)
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False))
    edges = np.concatenate([[0], cuts, [total]])
    return np.diff(edges).astype(np.int64)


def empirical_tvd(records, exact):
    """Total variation distance between drawn outputs and an exact table."""
    counts = {}
    for rec in records:
        counts[rec.output_state] = counts.get(rec.output_state, 0) + 1
    n = len(records)
    keys = set(counts) | set(exact)
    return 0.5 * sum(abs(counts.get(k, 0) / n - exact.get(k, 0.0)) for k in keys)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
