"""Small dense symmetric eigensolver (cyclic Jacobi)."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConprojError


def jacobi_eigh(matrix, *, tol: float = 1e-14, max_sweeps: int = 60):
    """Eigenvalues and eigenvectors of a small symmetric matrix.

    Returns ``(w, v)`` with ``v[:, k]`` the unit eigenvector belonging to
    ``w[k]``.  Plane rotations are applied in cyclic ``(p, q)`` order until
    the off-diagonal mass drops below ``tol`` relative to the Frobenius
    norm.  Intended for the tiny matrices of this package (n <= 8).
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    fro = float(np.linalg.norm(a))
    if fro == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.tril(a, -1) ** 2)))
        if off <= tol * fro:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = 1.0 / (theta - math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    raise ConprojError("Jacobi eigensolver did not converge")
