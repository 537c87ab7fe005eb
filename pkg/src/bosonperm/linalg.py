"""Complex matrices, random unitaries, and occupation-number bookkeeping.

Matrices are plain ``numpy.ndarray`` values with ``complex128`` entries,
row-major.  Occupation vectors are integer arrays of per-mode photon counts.
Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "haar_random_unitary",
    "unitarity_defect",
    "build_effective_matrix",
    "expand_multiplicities",
    "ColumnScaling",
    "scale_columns",
]


def haar_random_unitary(m: int, seed: int) -> np.ndarray:
    """Draw an ``m x m`` Haar-distributed unitary, deterministic in ``seed``.

    Uses the QR factorization of a complex Ginibre matrix with the phases of
    the triangular factor's diagonal folded back in, so the distribution is
    exactly Haar rather than QR-convention dependent.
    """
    if m < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q


def unitarity_defect(u: np.ndarray) -> float:
    """Max-norm deviation of ``u^H u`` from the identity."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def _as_occupation(v, modes=None):
    arr = np.asarray(v, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("occupation vector must be one-dimensional")
    if np.any(arr < 0):
        raise ValueError("occupation numbers must be non-negative")
    if modes is not None and arr.shape[0] != modes:
        raise ValueError(f"expected {modes} modes, got {arr.shape[0]}")
    return arr


def build_effective_matrix(u: np.ndarray, s, t):
    """Compact scattering matrix for the transition ``s -> t``.

    Returns ``(a, m, n)`` where ``a`` is the submatrix of ``u`` restricted to
    rows with ``t > 0`` and columns with ``s > 0``, ``m`` holds the nonzero
    output occupations (row multiplicities) and ``n`` the nonzero input
    occupations (column multiplicities).  Repeating row ``k`` of ``a``
    ``m[k]`` times and column ``j`` ``n[j]`` times reproduces the full
    photon-count-sized matrix whose permanent drives the transition
    amplitude.
    """
    u = np.asarray(u, dtype=np.complex128)
    modes = u.shape[0]
    if u.ndim != 2 or u.shape[1] != modes:
        raise ValueError("interferometer matrix must be square")
    s = _as_occupation(s, modes)
    t = _as_occupation(t, modes)
    if int(s.sum()) != int(t.sum()):
        raise ValueError("input and output photon numbers differ")
    if int(s.sum()) == 0:
        raise ValueError("empty state: at least one photon is required")
    rows = np.flatnonzero(t)
    cols = np.flatnonzero(s)
    a = u[np.ix_(rows, cols)]
    return a, t[rows].copy(), s[cols].copy()


def expand_multiplicities(a: np.ndarray, m, n) -> np.ndarray:
    """Expand a compact matrix by repeating row ``k`` ``m[k]`` times and column ``j`` ``n[j]`` times."""
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    m = _as_occupation(m, a.shape[0])
    n = _as_occupation(n, a.shape[1])
    if int(m.sum()) != int(n.sum()):
        raise ValueError("row and column multiplicities must sum to the same total")
    return np.repeat(np.repeat(a, m, axis=0), n, axis=1)


@dataclass(frozen=True)
class ColumnScaling:
    """Per-column normalization factors together with their log product."""

    alphas: np.ndarray
    logproduct: float = field(default=0.0)

    def rescale_log(self, n=None) -> float:
        """``sum(n[j] * log(alpha[j]))``; ``n=None`` means all-ones multiplicities."""
        logs = np.log(self.alphas)
        if n is None:
            return float(logs.sum())
        return float(np.dot(np.asarray(n, dtype=np.float64), logs))

    def rescale_factor(self, n=None) -> float:
        return float(np.exp(self.rescale_log(n)))


def _column_alpha(col: np.ndarray) -> float:
    # Sum the entries per complex-plane quadrant (sign of real/imag part),
    # fold opposite quadrants (I,III) and (II,IV) into two vectors, and take
    # the larger of their sum and difference.  The result is an achievable
    # signed column sum, and the true worst case over all sign patterns is
    # provably at most sqrt(2) times larger (parallelogram law), which the
    # downstream fixed-point format absorbs with its spare integer bit.
    re = col.real
    im = col.imag
    neg_re = re < 0
    neg_im = im < 0
    q1 = col[~neg_re & ~neg_im].sum()
    q2 = col[neg_re & ~neg_im].sum()
    q3 = col[neg_re & neg_im].sum()
    q4 = col[~neg_re & neg_im].sum()
    v1 = q1 - q3
    v2 = q2 - q4
    alpha = max(abs(v1 + v2), abs(v1 - v2))
    return alpha if alpha > 0.0 else 1.0


def scale_columns(a: np.ndarray):
    """Normalize each column by its worst-case signed-sum estimate.

    Returns ``(scaled, scaling)`` with ``scaled[:, j] = a[:, j] / alpha[j]``.
    A zero column gets ``alpha = 1``.  Cost is O(n^2) over the matrix.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if a.size == 0:
        raise ValueError("matrix must be nonempty")
    alphas = np.array([_column_alpha(a[:, j]) for j in range(a.shape[1])])
    scaled = a / alphas[np.newaxis, :]
    return scaled, ColumnScaling(alphas=alphas, logproduct=float(np.log(alphas).sum()))
