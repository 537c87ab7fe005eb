"""Boson-sampling probabilities, exact samplers, the loss model, and timing.

Output probabilities follow the permanent rule: the probability of drawing
occupation ``T`` from input ``S`` through interferometer ``U`` is
``|perm(U_ST)|^2 / prod(s_i! t_i!)``, with ``U_ST`` the row/column-repeated
scattering matrix.  Sampling uses the exact chain rule: the occupied input
columns are put in a uniformly random order, then output modes are drawn
one at a time with weights given by permanents of growing submatrices; the
multiplicity-aware engine keeps repeated output rows cheap.

Photon loss is modeled by doubling the modes: a beam splitter of
transmissivity ``eta`` couples each mode to an unmeasured partner, the
sampler runs on the dilated unitary, and only the first half of the output
is kept.  Uniform loss can equivalently be applied by thinning the input
photons, and the two strategies agree in distribution.

Randomness: every sample index ``i`` of a run with root ``seed`` derives
its generator from ``numpy.random.SeedSequence((seed, STREAM_TAG, i))``,
so runs are reproducible and trivially parallelizable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np

from .linalg import expand_multiplicities, unitarity_defect
from .permanent import perm_bbfg, perm_bbfg_repeated

__all__ = [
    "SampleRecord",
    "BenchRecord",
    "STREAM_TAG",
    "output_probability",
    "brute_force_distribution",
    "sample_ideal",
    "dilate_lossy",
    "sample_lossy",
    "predicted_sampling_time",
    "fit_T0",
]

STREAM_TAG = 0x42535052  # sample-substream derivation constant

BRUTE_FORCE_GUARD = 200_000


@dataclass(frozen=True)
class SampleRecord:
    """One drawn output state with its provenance."""

    output_state: tuple
    input_state: tuple
    seed: int
    engine: str
    elapsed: float


@dataclass(frozen=True)
class BenchRecord:
    """One timing observation of the sampler.

    ``loss`` is the per-photon transmission fraction (1.0 = lossless).
    """

    n: int
    m: int
    loss: float
    seconds_per_sample: float
    samples: int


def _occupation(v, name="occupation"):
    arr = np.asarray(v, dtype=np.int64)
    if arr.ndim != 1 or np.any(arr < 0):
        raise ValueError(f"{name} must be a vector of non-negative counts")
    return arr


def _substream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), STREAM_TAG, int(index))))


def _factorial_product(counts) -> int:
    out = 1
    for x in counts:
        out *= math.factorial(int(x))
    return out


def _transition_value(u, rows, row_mult, cols, col_mult, engine) -> complex:
    a = u[np.ix_(rows, cols)]
    if engine == "bbfg-repeated":
        return perm_bbfg_repeated(a, row_mult, col_mult).value
    if engine == "bbfg":
        return perm_bbfg(expand_multiplicities(a, row_mult, col_mult)).value
    raise ValueError(f"unknown sampler engine: {engine!r}")


def output_probability(u, s, t, engine: str = "bbfg-repeated") -> float:
    """Probability of the transition ``s -> t`` through interferometer ``u``."""
    u = np.asarray(u, dtype=np.complex128)
    m = u.shape[0]
    s = _occupation(s, "input state")
    t = _occupation(t, "output state")
    if s.shape != (m,) or t.shape != (m,):
        raise ValueError("occupation vectors must match the mode count")
    if int(s.sum()) != int(t.sum()):
        raise ValueError("input and output photon numbers differ")
    rows = np.flatnonzero(t)
    cols = np.flatnonzero(s)
    value = _transition_value(u, rows, t[rows], cols, s[cols], engine)
    return abs(value) ** 2 / (_factorial_product(s) * _factorial_product(t))


def _all_outputs(m: int, n: int):
    # stars and bars: bar positions among n + m - 1 slots
    for bars in combinations(range(n + m - 1), m - 1):
        prev = -1
        state = []
        for b in bars:
            state.append(b - prev - 1)
            prev = b
        state.append(n + m - 1 - prev - 1)
        yield tuple(state)


def brute_force_distribution(u, s, engine: str = "bbfg-repeated"):
    """Exact output distribution over every ``n``-photon occupation.

    Returns a dict mapping output tuples to probabilities; the values sum
    to one.  Guarded to at most ``BRUTE_FORCE_GUARD`` outcomes.
    """
    u = np.asarray(u, dtype=np.complex128)
    m = u.shape[0]
    s = _occupation(s, "input state")
    n = int(s.sum())
    if n < 1:
        raise ValueError("empty state: at least one photon is required")
    if comb(m + n - 1, n) > BRUTE_FORCE_GUARD:
        raise ValueError(f"outcome space exceeds the {BRUTE_FORCE_GUARD} guard")
    out = {}
    for t in _all_outputs(m, n):
        out[t] = output_probability(u, s, np.array(t), engine)
    return out


def _draw_categorical(rng: np.random.Generator, weights) -> int:
    total = float(np.sum(weights))
    if not total > 0.0:
        raise RuntimeError("degenerate sampling step: all candidate weights vanished")
    r = rng.random() * total
    acc = 0.0
    for j, w in enumerate(weights):
        acc += float(w)
        if r < acc:
            return j
    return len(weights) - 1


def _draw_output_modes(u, s, rng, engine) -> tuple:
    """One chain-rule draw: returns the output occupation tuple."""
    m = u.shape[0]
    n = int(s.sum())
    cols = np.repeat(np.arange(m), s)
    cols = rng.permutation(cols)
    chosen = []
    weights = np.empty(m)
    for k in range(1, n + 1):
        col_idx, col_mult = np.unique(cols[:k], return_counts=True)
        for j in range(m):
            rows_k = chosen + [j]
            row_idx, row_mult = np.unique(rows_k, return_counts=True)
            value = _transition_value(u, row_idx, row_mult, col_idx, col_mult, engine)
            weights[j] = abs(value) ** 2
        chosen.append(_draw_categorical(rng, weights))
    counts = np.bincount(chosen, minlength=m)
    return tuple(int(x) for x in counts)


def sample_ideal(u, s, count: int, seed: int, engine: str = "bbfg-repeated"):
    """Draw ``count`` exact samples from the lossless output distribution."""
    u = np.asarray(u, dtype=np.complex128)
    m = u.shape[0]
    s = _occupation(s, "input state")
    if s.shape != (m,):
        raise ValueError("input state must match the mode count")
    if int(s.sum()) < 1:
        raise ValueError("empty state: at least one photon is required")
    records = []
    s_tuple = tuple(int(x) for x in s)
    for i in range(count):
        rng = _substream(seed, i)
        t0 = time.perf_counter()
        out = _draw_output_modes(u, s, rng, engine)
        dt = time.perf_counter() - t0
        records.append(SampleRecord(out, s_tuple, int(seed), engine, dt))
    return records


def dilate_lossy(u, eta) -> np.ndarray:
    """Embed a lossy channel into a unitary on doubled modes.

    Uniform ``eta`` uses the explicit beam-splitter block form
    ``[[sqrt(eta) U, sqrt(1-eta) I], [sqrt(1-eta) U, -sqrt(eta) I]]``; a
    per-mode ``eta`` vector goes through the singular-value decomposition of
    ``U @ diag(sqrt(eta))``.  The first ``m`` output modes carry the lossy
    channel; the rest are the unmeasured loss modes.
    """
    u = np.asarray(u, dtype=np.complex128)
    m = u.shape[0]
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=np.float64))
    if np.any(eta_arr < 0.0) or np.any(eta_arr > 1.0):
        raise ValueError("transmission must lie in [0, 1]")
    w = np.zeros((2 * m, 2 * m), dtype=np.complex128)
    if eta_arr.size == 1:
        e = float(eta_arr[0])
        w[:m, :m] = np.sqrt(e) * u
        w[:m, m:] = np.sqrt(1.0 - e) * np.eye(m)
        w[m:, :m] = np.sqrt(1.0 - e) * u
        w[m:, m:] = -np.sqrt(e) * np.eye(m)
        return w
    if eta_arr.shape != (m,):
        raise ValueError("per-mode transmission must provide one value per mode")
    lossy = u @ np.diag(np.sqrt(eta_arr))
    p, sig, qh = np.linalg.svd(lossy)
    cos = np.sqrt(np.clip(1.0 - sig ** 2, 0.0, None))
    off = p @ np.diag(cos) @ qh
    w[:m, :m] = lossy
    w[:m, m:] = off
    w[m:, :m] = off
    w[m:, m:] = -(p @ np.diag(sig) @ qh)
    defect = unitarity_defect(w)
    if defect > 1e-9:
        raise ArithmeticError(f"dilation completion failed (defect {defect:.2e})")
    return w


def sample_lossy(u, s, eta, count: int, seed: int,
                 strategy: str = "dilation", engine: str = "bbfg-repeated"):
    """Draw samples through a lossy channel of transmissivity ``eta``.

    ``strategy="dilation"`` samples on the doubled-mode unitary and keeps
    the first half of each output.  ``strategy="input-thinning"`` (uniform
    ``eta`` only) deletes each input photon independently with probability
    ``1 - eta`` and then samples the ideal distribution; both strategies
    draw from the same distribution.
    """
    u = np.asarray(u, dtype=np.complex128)
    m = u.shape[0]
    s = _occupation(s, "input state")
    if s.shape != (m,):
        raise ValueError("input state must match the mode count")
    if int(s.sum()) < 1:
        raise ValueError("empty state: at least one photon is required")
    s_tuple = tuple(int(x) for x in s)
    records = []
    if strategy == "dilation":
        w = dilate_lossy(u, eta)
        s_pad = np.concatenate([s, np.zeros(m, dtype=np.int64)])
        for i in range(count):
            rng = _substream(seed, i)
            t0 = time.perf_counter()
            full = _draw_output_modes(w, s_pad, rng, engine)
            dt = time.perf_counter() - t0
            records.append(SampleRecord(full[:m], s_tuple, int(seed), engine, dt))
        return records
    if strategy == "input-thinning":
        eta_arr = np.atleast_1d(np.asarray(eta, dtype=np.float64))
        if eta_arr.size != 1:
            raise ValueError("input thinning only models uniform loss")
        e = float(eta_arr[0])
        if not 0.0 <= e <= 1.0:
            raise ValueError("transmission must lie in [0, 1]")
        for i in range(count):
            rng = _substream(seed, i)
            t0 = time.perf_counter()
            thinned = rng.binomial(s, e)
            if int(thinned.sum()) == 0:
                out = tuple(0 for _ in range(m))
            else:
                out = _draw_output_modes(u, thinned, rng, engine)
            dt = time.perf_counter() - t0
            records.append(SampleRecord(out, s_tuple, int(seed), engine, dt))
        return records
    raise ValueError(f"unknown loss strategy: {strategy!r}")


def _complexity_factor(n: int, m: int) -> float:
    ratio = Fraction(comb(2 * m + n, n + 1), comb(m + n, n + 1))
    return float(Fraction(n * (m + n), m) * ratio + n * n * m)


def predicted_sampling_time(n: int, m: int, t0: float) -> float:
    """Average seconds per sample predicted by the chain-rule cost model.

    ``t0`` is the single hardware-dependent scale parameter; binomial
    coefficients are evaluated exactly before conversion.
    """
    if n < 1 or m < 1:
        raise ValueError("photon and mode counts must be >= 1")
    return t0 * _complexity_factor(n, m)


def fit_T0(records):
    """Least-squares fit of the single time-scale parameter.

    Returns ``(t0, residual)`` where ``residual`` is the root-mean-square
    prediction error in seconds.  Lossy records (loss < 1) use a doubled
    mode count, matching the mode-doubling simulation cost.
    """
    records = list(records)
    if not records:
        raise ValueError("at least one benchmark record is required")
    num = 0.0
    den = 0.0
    factors = []
    for rec in records:
        m_eff = rec.m if rec.loss >= 1.0 else 2 * rec.m
        f = _complexity_factor(rec.n, m_eff)
        factors.append(f)
        num += rec.seconds_per_sample * f
        den += f * f
    t0 = num / den
    sq = 0.0
    for rec, f in zip(records, factors):
        sq += (rec.seconds_per_sample - t0 * f) ** 2
    return t0, math.sqrt(sq / len(records))
