"""Pointwise tensor kernels over jet-valued components.

Metric inversion runs Gaussian elimination directly over the jet ring
(pivoting on value parts), so derivatives of the inverse come out of the
same elimination instead of a separate derivative-of-inverse formula.
All residual norms in this package are max-absolute-component norms.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import jets
from .errors import DegenerateMetric
from .jets import Jet, partial_derivative

__all__ = [
    "MetricValue",
    "ConnectionValue",
    "ThomasValue",
    "OneFormValue",
    "VectorValue",
    "EquivalenceResult",
    "invert_metric",
    "christoffel",
    "conformal_rescale_metric",
    "rescaled_connection",
    "projective_transform",
    "thomas_symbol",
    "projectively_equivalent",
]

DEFAULT_RANK_TOL = 1e-10


def _uniform_order(entries) -> int:
    orders = {j.order for j in entries}
    if len(orders) != 1:
        raise ValueError("components must share one jet order")
    return orders.pop()


class MetricValue:
    """Symmetric matrix of jets g_ij at one chart point.

    The upper triangle is authoritative; the lower triangle is stored as
    the identical jet objects, so symmetry is exact by construction.
    """

    __slots__ = ("n", "order", "components", "point")

    def __init__(self, components, point=None):
        rows = [list(r) for r in components]
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise ValueError("metric components must form a square matrix")
        flat = [j for r in rows for j in r]
        if any(not isinstance(j, Jet) for j in flat):
            raise TypeError("metric components must be jets")
        if any(j.n != n for j in flat):
            raise ValueError("jet chart dimension must match the matrix size")
        for i in range(n):
            for j in range(i + 1, n):
                rows[j][i] = rows[i][j]
        self.n = n
        self.order = _uniform_order(flat)
        self.components = tuple(tuple(r) for r in rows)
        self.point = tuple(float(c) for c in point) if point is not None else None

    def values(self) -> np.ndarray:
        return np.array(
            [[j.value for j in row] for row in self.components], dtype=float
        )


class ConnectionValue:
    """Symmetric-connection components Gamma^i_jk as jets at one point.

    Symmetric in the two lower slots; the (j <= k) entries are
    authoritative and mirrored by reference.
    """

    __slots__ = ("n", "order", "components", "point")

    def __init__(self, components, point=None):
        grid = [[list(r) for r in mat] for mat in components]
        n = len(grid)
        ok = all(len(mat) == n and all(len(r) == n for r in mat) for mat in grid)
        if n < 1 or not ok:
            raise ValueError("connection components must form an n*n*n array")
        flat = [j for mat in grid for r in mat for j in r]
        if any(not isinstance(j, Jet) for j in flat):
            raise TypeError("connection components must be jets")
        if any(j.n != n for j in flat):
            raise ValueError("jet chart dimension must match the array size")
        for i in range(n):
            for jj in range(n):
                for k in range(jj + 1, n):
                    grid[i][k][jj] = grid[i][jj][k]
        self.n = n
        self.order = _uniform_order(flat)
        self.components = tuple(tuple(tuple(r) for r in mat) for mat in grid)
        self.point = tuple(float(c) for c in point) if point is not None else None

    def values(self) -> np.ndarray:
        return np.array(
            [[[j.value for j in row] for row in mat] for mat in self.components],
            dtype=float,
        )


class ThomasValue:
    """Trace-free projective invariant of a connection (value parts)."""

    __slots__ = ("n", "components")

    def __init__(self, components):
        pi = np.array(components, dtype=float)
        n = pi.shape[0]
        if pi.shape != (n, n, n):
            raise ValueError("components must form an n*n*n array")
        scale = max(1.0, float(np.max(np.abs(pi))))
        tr_first = np.einsum("ppk->k", pi)
        tr_last = np.einsum("pjp->j", pi)
        if max(np.max(np.abs(tr_first)), np.max(np.abs(tr_last))) > 1e-12 * scale:
            raise ValueError("trace-free invariant violated")
        pi.flags.writeable = False
        self.n = n
        self.components = pi


class _JetComponents:
    __slots__ = ("n", "order", "components")

    def __init__(self, components):
        comps = tuple(components)
        n = len(comps)
        if n < 1 or any(not isinstance(j, Jet) for j in comps):
            raise TypeError("components must be a nonempty sequence of jets")
        if any(j.n != n for j in comps):
            raise ValueError("jet chart dimension must match the component count")
        self.n = n
        self.order = _uniform_order(comps)
        self.components = comps

    def values(self) -> np.ndarray:
        return np.array([j.value for j in self.components], dtype=float)


class OneFormValue(_JetComponents):
    """Covariant components (psi_i, T_i, ...) as jets."""


class VectorValue(_JetComponents):
    """Contravariant components (S^i, T^i, ...) as jets."""


class EquivalenceResult(NamedTuple):
    equivalent: bool
    max_deviation: float


# -- kernels ---------------------------------------------------------------


def invert_metric(g: MetricValue, *, rank_tol: float = DEFAULT_RANK_TOL) -> MetricValue:
    """Inverse metric with full derivative propagation.

    Degeneracy is scale-aware: |det| below ``rank_tol * max|g_ij|^n``
    raises :class:`DegenerateMetric` carrying the determinant and point.
    """
    n = g.n
    vals = g.values()
    scale = float(np.max(np.abs(vals)))
    det = float(np.linalg.det(vals))
    if scale == 0.0 or abs(det) < rank_tol * scale**n:
        raise DegenerateMetric(det, point=g.point)

    work = [list(row) for row in g.components]
    one = jets.constant(1.0, n, g.order)
    zero = jets.constant(0.0, n, g.order)
    inverse = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(work[r][col].value))
        if work[pivot_row][col].value == 0.0:
            raise DegenerateMetric(det, point=g.point)
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            inverse[col], inverse[pivot_row] = inverse[pivot_row], inverse[col]
        pivot = work[col][col]
        work[col] = [entry / pivot for entry in work[col]]
        inverse[col] = [entry / pivot for entry in inverse[col]]
        for row in range(n):
            if row == col:
                continue
            factor = work[row][col]
            if jets.is_zero(factor):
                continue
            work[row] = [a - factor * b for a, b in zip(work[row], work[col])]
            inverse[row] = [a - factor * b for a, b in zip(inverse[row], inverse[col])]
    # The exact inverse of a symmetric matrix is symmetric; averaging the
    # halves removes elimination roundoff so downstream symmetry is exact.
    for i in range(n):
        for j in range(i + 1, n):
            sym = (inverse[i][j] + inverse[j][i]) * 0.5
            inverse[i][j] = inverse[j][i] = sym
    return MetricValue(inverse, point=g.point)


def _christoffel(g: MetricValue, ginv: MetricValue) -> ConnectionValue:
    n = g.n
    dg = [[None] * n for _ in range(n)]
    for p in range(n):
        for q in range(p, n):
            row = [partial_derivative(g.components[p][q], k) for k in range(n)]
            dg[p][q] = row
            dg[q][p] = row
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                acc = None
                for p in range(n):
                    gip = ginv.components[i][p]
                    if jets.is_zero(gip):
                        continue
                    term = dg[p][j][k] + dg[p][k][j] - dg[j][k][p]
                    contrib = gip * term
                    acc = contrib if acc is None else acc + contrib
                if acc is None:
                    acc = jets.constant(0.0, n, g.order - 1)
                gamma = acc * 0.5
                out[i][j][k] = gamma
                out[i][k][j] = gamma
    return ConnectionValue(out, point=g.point)


def christoffel(
    g: MetricValue, *, rank_tol: float = DEFAULT_RANK_TOL
) -> ConnectionValue:
    """Levi-Civita connection of ``g``; output order is ``g.order - 1``."""
    if g.order < 1:
        raise ValueError("christoffel requires metric jets of order >= 1")
    return _christoffel(g, invert_metric(g, rank_tol=rank_tol))


def conformal_rescale_metric(g: MetricValue, phi: Jet) -> MetricValue:
    """Componentwise rescaling of the metric by exp(2*phi)."""
    if phi.n != g.n:
        raise ValueError("conformal factor dimension mismatch")
    factor = jets.apply_function(phi * 2.0, "exp")
    n = g.n
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            scaled = g.components[i][j] * factor
            out[i][j] = scaled
            out[j][i] = scaled
    return MetricValue(out, point=g.point)


def rescaled_connection(
    g: MetricValue, phi: Jet, *, rank_tol: float = DEFAULT_RANK_TOL
) -> ConnectionValue:
    """Levi-Civita connection of the rescaled metric, built directly.

    Adds the closed-form correction delta^i_j d_k(phi) + delta^i_k d_j(phi)
    - g^{ip} g_jk d_p(phi) to the connection of ``g`` without ever forming
    the rescaled metric.
    """
    if g.order < 1 or phi.order < 1:
        raise ValueError("rescaled_connection requires jets of order >= 1")
    if phi.n != g.n:
        raise ValueError("conformal factor dimension mismatch")
    n = g.n
    ginv = invert_metric(g, rank_tol=rank_tol)
    base = _christoffel(g, ginv)
    dphi = [partial_derivative(phi, k) for k in range(n)]
    up = []
    for i in range(n):
        acc = None
        for p in range(n):
            gip = ginv.components[i][p]
            if jets.is_zero(gip):
                continue
            contrib = gip * dphi[p]
            acc = contrib if acc is None else acc + contrib
        up.append(acc if acc is not None else jets.constant(0.0, n, phi.order - 1))
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                term = base.components[i][j][k] - up[i] * g.components[j][k]
                if i == j:
                    term = term + dphi[k]
                if i == k:
                    term = term + dphi[j]
                out[i][j][k] = term
                out[i][k][j] = term
    return ConnectionValue(out, point=g.point)


def projective_transform(gamma: ConnectionValue, psi) -> ConnectionValue:
    """Representative change Gamma + delta psi + psi delta of the projective class."""
    comps = psi.components if isinstance(psi, _JetComponents) else tuple(psi)
    if len(comps) != gamma.n:
        raise ValueError("one-form dimension mismatch")
    n = gamma.n
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                term = gamma.components[i][j][k]
                if i == j:
                    term = term + comps[k]
                if i == k:
                    term = term + comps[j]
                out[i][j][k] = term
                out[i][k][j] = term
    return ConnectionValue(out, point=gamma.point)


def thomas_symbol(gamma: ConnectionValue) -> ThomasValue:
    """Trace-adjusted connection values; equal symbols mean projectively
    equivalent connections."""
    vals = gamma.values()
    n = gamma.n
    trace = np.einsum("ppk->k", vals)
    c = 1.0 / (n + 1)
    pi = vals.copy()
    idx = np.arange(n)
    pi[idx, idx, :] -= c * trace
    pi[idx, :, idx] -= c * trace
    return ThomasValue(pi)


def thomas_projection_jets(t, n: int):
    """Trace-free projection of an n*n*n array of jets (symmetric in j,k)."""
    traces = []
    for k in range(n):
        acc = t[0][0][k]
        for p in range(1, n):
            acc = acc + t[p][p][k]
        traces.append(acc)
    c = 1.0 / (n + 1)
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                term = t[i][j][k]
                if i == j:
                    term = term - traces[k] * c
                if i == k:
                    term = term - traces[j] * c
                out[i][j][k] = term
                out[i][k][j] = term
    return out


def projectively_equivalent(
    conn_a: Callable,
    conn_b: Callable,
    points: Sequence,
    *,
    tol: float = 1e-12,
) -> EquivalenceResult:
    """Compare the Thomas symbols of two connection fields over sample points."""
    deviation = 0.0
    for point in points:
        pi_a = thomas_symbol(conn_a(point)).components
        pi_b = thomas_symbol(conn_b(point)).components
        deviation = max(deviation, float(np.max(np.abs(pi_a - pi_b))))
    return EquivalenceResult(deviation <= tol, deviation)
