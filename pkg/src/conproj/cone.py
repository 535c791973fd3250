"""Reconstruct a conformal class representative from sampled null vectors.

Each null vector v imposes one linear equation g_ij v^i v^j = 0 on the
n(n+1)/2 independent components of a symmetric matrix.  With at least
n(n+1)/2 - 1 generic vectors the solution space is one-dimensional and
spans the conformal class at the point; the representative returned here
is canonicalized to unit max-norm with its first nonzero component (in
row-major order) positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonGenericConfiguration, TooFewVectors

__all__ = ["ConeSample", "reconstruct_conformal", "canonicalize_metric"]

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ConeSample:
    """Null vectors collected at one chart point."""

    point: tuple
    vectors: tuple

    def __post_init__(self):
        vectors = tuple(np.asarray(v, dtype=float) for v in self.vectors)
        if any(not v.any() for v in vectors):
            raise ValueError("cone vectors must be nonzero")
        object.__setattr__(self, "vectors", vectors)


def _monomial_row(v: np.ndarray, n: int) -> list:
    # Doubling the off-diagonal monomials keeps the unknown vector equal to
    # the independent components of the symmetric matrix.
    row = []
    for i in range(n):
        for j in range(i, n):
            row.append(v[i] * v[j] if i == j else 2.0 * v[i] * v[j])
    return row


def _eliminate(a: np.ndarray, rank_tol: float):
    """Gaussian elimination with full pivoting.

    Returns (rank, column permutation, reduced matrix).  A pivot counts
    only while it stays above ``rank_tol`` times the largest initial pivot.
    """
    a = a.copy()
    rows, cols = a.shape
    perm = list(range(cols))
    threshold = None
    rank = 0
    for step in range(min(rows, cols)):
        sub = np.abs(a[step:, step:])
        flat = int(np.argmax(sub))
        r_off, c_off = divmod(flat, cols - step)
        pivot = sub[r_off, c_off]
        if threshold is None:
            threshold = rank_tol * pivot
        if pivot == 0.0 or pivot < threshold:
            break
        r, c = step + r_off, step + c_off
        if r != step:
            a[[step, r], :] = a[[r, step], :]
        if c != step:
            a[:, [step, c]] = a[:, [c, step]]
            perm[step], perm[c] = perm[c], perm[step]
        for row in range(step + 1, rows):
            factor = a[row, step] / a[step, step]
            if factor != 0.0:
                a[row, step:] -= factor * a[step, step:]
                a[row, step] = 0.0
        rank += 1
    return rank, perm, a


def reconstruct_conformal(
    vectors, n: int, *, rank_tol: float = DEFAULT_RANK_TOL
) -> np.ndarray:
    """Solve the annihilation system over the given null vectors.

    Raises :class:`TooFewVectors` when fewer than n(n+1)/2 - 1 vectors are
    supplied and :class:`NonGenericConfiguration` when the solution space
    is not one-dimensional (the dimension found is attached).
    """
    if n < 2:
        raise ValueError("dimension must be at least 2")
    vs = []
    for v in vectors:
        arr = np.asarray(v, dtype=float)
        if arr.shape != (n,):
            raise ValueError(f"vectors must have {n} components")
        if not np.all(np.isfinite(arr)) or not arr.any():
            raise ValueError("vectors must be finite and nonzero")
        vs.append(arr)
    unknowns = n * (n + 1) // 2
    needed = unknowns - 1
    if len(vs) < needed:
        raise TooFewVectors(len(vs), needed)
    system = np.array([_monomial_row(v, n) for v in vs])

    rank, perm, reduced = _eliminate(system, rank_tol)
    nullity = unknowns - rank
    if nullity != 1:
        raise NonGenericConfiguration(nullity)

    solution = np.zeros(unknowns)
    solution[unknowns - 1] = 1.0
    for i in range(rank - 1, -1, -1):
        solution[i] = -float(reduced[i, i + 1 :] @ solution[i + 1 :]) / reduced[i, i]
    unscrambled = np.zeros(unknowns)
    for position, original in enumerate(perm):
        unscrambled[original] = solution[position]

    g = np.zeros((n, n))
    cursor = 0
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = unscrambled[cursor]
            cursor += 1
    return canonicalize_metric(g)


def canonicalize_metric(matrix) -> np.ndarray:
    """Scale to unit max-norm with the first nonzero component positive.

    Idempotent, and the quotient map for comparing conformal
    representatives: two matrices span the same ray iff they canonicalize
    to the same array.
    """
    g = np.asarray(matrix, dtype=float)
    g = 0.5 * (g + g.T)
    scale = float(np.max(np.abs(g)))
    if scale == 0.0:
        raise ValueError("cannot canonicalize the zero matrix")
    g = g / scale
    for entry in g.reshape(-1):
        if abs(entry) > 1e-12:
            return -g if entry < 0.0 else g
    return g
