"""Compatibility criterion for a conformal/projective structure pair.

At each sample point the pipeline builds the trace-free difference tensor
T^i_jk between the metric's Levi-Civita connection and the scenario
connection, contracts it to T^i and T_i, and evaluates two obstructions:

* condition (A): the algebraic residual
  ``T^i_jk - g_jk T^i + (delta^i_j T_k + delta^i_k T_j)/(n+1)``,
* condition (B): the closedness residual ``d_j T_i - d_i T_j``.

Both vanishing (within tolerance) over the sampling box is the verdict
``compatible``; the one-form T_i then integrates to the conformal factor
of the shared metric.  The null-geodesic (EPS) residual is also reported:
it is implied by compatibility but does not imply it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import ConprojError, DegenerateMetric
from .geometry import (
    ConnectionValue,
    MetricValue,
    OneFormValue,
    VectorValue,
    _christoffel,
    invert_metric,
    thomas_projection_jets,
)
from .linalg import jacobi_eigh
from .sampling import SplitMix64, draw_point, point_stream
from .scenario import Scenario, Tolerances, connection_at, metric_at

__all__ = [
    "NullVector",
    "ObstructionData",
    "PointSummary",
    "CompatReport",
    "compat_tensor",
    "trace_vector",
    "condition_a_residual",
    "condition_b_residual",
    "sample_null_vectors",
    "eps_residual",
    "obstruction_at",
    "check_compatibility",
]

NULL_TOL = 1e-10


@dataclass(frozen=True)
class NullVector:
    """A nonzero vector annihilated by the metric at its point."""

    point: tuple | None
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1 or not u.any():
            raise ValueError("null vector must be a nonzero 1-d array")
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class ObstructionData:
    """Per-point tensors of the compatibility check.

    ``a`` and ``b`` are the raw condition residual arrays; ``scale`` is the
    normalization max(1, |Gamma|, |g|, |g^-1|) used for reporting.
    """

    point: tuple
    T: tuple
    t_up: VectorValue
    t_down: OneFormValue
    a: np.ndarray
    b: np.ndarray
    scale: float
    metric: MetricValue
    connection: ConnectionValue
    diff_values: np.ndarray

    @property
    def a_residual(self) -> float:
        return float(np.max(np.abs(self.a))) / self.scale

    @property
    def b_residual(self) -> float:
        return float(np.max(np.abs(self.b))) / self.scale


@dataclass(frozen=True)
class PointSummary:
    point: tuple
    a: float
    b: float
    eps: float | None
    scale: float


@dataclass(frozen=True)
class CompatReport:
    verdict: str
    eps_verdict: str
    max_a: float
    max_b: float
    max_eps: float | None
    samples: int
    seed: int
    tolerances: Tolerances
    null_vectors: int
    per_point: tuple
    worst: tuple
    skipped: tuple


def compat_tensor(g: MetricValue, gamma: ConnectionValue):
    """Trace-free difference tensor between the Levi-Civita connection of
    ``g`` and ``gamma``, as jets (order ``min(g.order - 1, gamma.order)``)."""
    if g.order < 1:
        raise ValueError("compat_tensor requires metric jets of order >= 1")
    ginv = invert_metric(g)
    base = _christoffel(g, ginv)
    return _compat_tensor_from(base, gamma)


def _compat_tensor_from(base: ConnectionValue, gamma: ConnectionValue):
    n = base.n
    diff = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                value = base.components[i][j][k] - gamma.components[i][j][k]
                diff[i][j][k] = diff[i][k][j] = value
    return thomas_projection_jets(diff, n)


def _traces(g: MetricValue, ginv: MetricValue, T):
    n = g.n
    coefficient = (n + 1) / ((n + 2) * (n - 1))
    up = []
    for i in range(n):
        acc = None
        for j in range(n):
            for k in range(n):
                gjk = ginv.components[j][k]
                if jets.is_zero(gjk):
                    continue
                contrib = gjk * T[i][j][k]
                acc = contrib if acc is None else acc + contrib
        if acc is None:
            acc = jets.constant(0.0, n, T[i][0][0].order)
        up.append(acc * coefficient)
    down = []
    for i in range(n):
        acc = None
        for j in range(n):
            gij = g.components[i][j]
            if jets.is_zero(gij):
                continue
            contrib = gij * up[j]
            acc = contrib if acc is None else acc + contrib
        if acc is None:
            acc = jets.constant(0.0, n, up[0].order)
        down.append(acc)
    return VectorValue(up), OneFormValue(down)


def trace_vector(g: MetricValue, T):
    """Contractions T^i = (n+1)/((n+2)(n-1)) g^{jk} T^i_jk and T_i = g_ij T^j."""
    if g.n < 2:
        raise ValueError("trace coefficient requires dimension >= 2")
    return _traces(g, invert_metric(g), T)


def condition_a_residual(
    g: MetricValue, T, t_up: VectorValue, t_down: OneFormValue
) -> np.ndarray:
    """Value-level residual array of the algebraic condition."""
    n = g.n
    gv = g.values()
    tv = np.array(
        [[[T[i][j][k].value for k in range(n)] for j in range(n)] for i in range(n)]
    )
    up = t_up.values()
    down = t_down.values()
    c = 1.0 / (n + 1)
    a = tv - up[:, None, None] * gv[None, :, :]
    idx = np.arange(n)
    a[idx, idx, :] += c * down
    a[idx, :, idx] += c * down
    return a


def condition_b_residual(t_down: OneFormValue) -> np.ndarray:
    """Closedness residual B_ji = d_j T_i - d_i T_j from the jets' gradients."""
    if t_down.order < 1:
        raise ValueError("condition (B) requires one-form jets of order >= 1")
    m = np.stack([comp.gradient for comp in t_down.components], axis=1)
    return m - m.T


def sample_null_vectors(
    g: MetricValue,
    count: int,
    rng: SplitMix64,
    *,
    rank_tol: float = 1e-10,
) -> list:
    """Random vectors on the metric's null cone.

    The value matrix is diagonalized by cyclic Jacobi iteration; a draw
    combines a random direction from the positive eigenspace with one from
    the negative eigenspace, scaled so the quadratic form cancels.  For a
    definite metric the cone is trivial and the list is empty.
    """
    values = g.values()
    eigenvalues, eigenvectors = jacobi_eigh(values)
    scale = float(np.max(np.abs(eigenvalues)))
    det = float(np.prod(eigenvalues))
    if scale == 0.0 or np.min(np.abs(eigenvalues)) < rank_tol * scale:
        raise DegenerateMetric(det, point=g.point)
    positive = [i for i, w in enumerate(eigenvalues) if w > 0.0]
    negative = [i for i, w in enumerate(eigenvalues) if w < 0.0]
    if not positive or not negative:
        return []
    out = []
    for _ in range(count):
        plus = _random_cone_leg(values, eigenvectors, positive, rng)
        minus = _random_cone_leg(values, eigenvectors, negative, rng)
        u = plus / math.sqrt(abs(float(plus @ values @ plus))) + minus / math.sqrt(
            abs(float(minus @ values @ minus))
        )
        u = u / np.max(np.abs(u))
        residual = abs(float(u @ values @ u))
        if residual > NULL_TOL * float(u @ u):
            raise ConprojError("null-cone sampling lost precision")
        out.append(NullVector(point=g.point, u=u))
    return out


def _random_cone_leg(values, eigenvectors, subspace, rng: SplitMix64) -> np.ndarray:
    for _ in range(1000):
        coeffs = np.array([rng.uniform(-1.0, 1.0) for _ in subspace])
        if float(coeffs @ coeffs) < 1e-4:
            continue
        leg = eigenvectors[:, subspace] @ coeffs
        if abs(float(leg @ values @ leg)) > 0.0:
            return leg
    raise ConprojError("failed to draw a usable cone direction")


def eps_residual(g: MetricValue, gamma: ConnectionValue, u) -> float:
    """Non-parallel part of (F(g) - Gamma) u u relative to u.

    Zero means the null direction ``u`` is geodesic for both structures.
    Parallelism is measured with the Euclidean chart inner product: ``u``
    is null for ``g``, so a metric projection would be undefined.
    """
    vec = np.asarray(u.u if isinstance(u, NullVector) else u, dtype=float)
    if not vec.any():
        raise ValueError("direction vector must be nonzero")
    if g.order < 1:
        raise ValueError("eps_residual requires metric jets of order >= 1")
    ginv = invert_metric(g)
    base = _christoffel(g, ginv)
    return _eps_from_diff(base.values() - gamma.values(), vec)


def _eps_from_diff(diff_values: np.ndarray, u: np.ndarray) -> float:
    d = np.einsum("ijk,j,k->i", diff_values, u, u)
    uu = float(u @ u)
    residual = d - (float(d @ u) / uu) * u
    return float(np.max(np.abs(residual))) / uu


def obstruction_at(scenario: Scenario, point) -> ObstructionData:
    """Full obstruction pipeline at one point of the sampling box."""
    g = metric_at(scenario, point, order=2)
    gamma = connection_at(scenario, point, order=1)
    rank_tol = scenario.tolerances.rank
    ginv = invert_metric(g, rank_tol=rank_tol)
    base = _christoffel(g, ginv)
    T = _compat_tensor_from(base, gamma)
    t_up, t_down = _traces(g, ginv, T)
    a = condition_a_residual(g, T, t_up, t_down)
    b = condition_b_residual(t_down)
    gamma_values = gamma.values()
    scale = max(
        1.0,
        float(np.max(np.abs(gamma_values))),
        float(np.max(np.abs(g.values()))),
        float(np.max(np.abs(ginv.values()))),
    )
    return ObstructionData(
        point=tuple(float(c) for c in point),
        T=tuple(tuple(tuple(r) for r in mat) for mat in T),
        t_up=t_up,
        t_down=t_down,
        a=a,
        b=b,
        scale=scale,
        metric=g,
        connection=gamma,
        diff_values=base.values() - gamma_values,
    )


def check_compatibility(
    scenario: Scenario,
    *,
    samples: int | None = None,
    seed: int | None = None,
) -> CompatReport:
    """Sample the box and aggregate the obstruction and EPS residuals.

    Points where the metric degenerates are skipped and reported as long
    as they stay under 1% of the samples; beyond that the degeneracy is
    fatal.  Per-point residuals are scale-normalized before aggregation.
    """
    count = scenario.samples if samples is None else samples
    if count < 1:
        raise ValueError("sample count must be positive")
    seed_val = scenario.seed if seed is None else seed
    tol = scenario.tolerances.residual
    nulls_per_point = 2 * scenario.dimension

    per_point = []
    skipped = []
    max_a = 0.0
    max_b = 0.0
    max_eps = None
    total_nulls = 0

    for index in range(count):
        stream = point_stream(seed_val, index)
        point = draw_point(stream, scenario.box_min, scenario.box_max)
        try:
            obs = obstruction_at(scenario, point)
            null_vectors = sample_null_vectors(
                obs.metric,
                nulls_per_point,
                stream,
                rank_tol=scenario.tolerances.rank,
            )
        except DegenerateMetric as err:
            skipped.append((point, err.det))
            if len(skipped) * 100 >= count:
                raise DegenerateMetric(
                    err.det,
                    point=err.point if err.point is not None else point,
                    detail=f"{len(skipped)} of {count} sample points degenerate",
                ) from err
            continue
        a_res = obs.a_residual
        b_res = obs.b_residual
        eps_val = None
        if null_vectors:
            total_nulls += len(null_vectors)
            eps_val = max(
                _eps_from_diff(obs.diff_values, nv.u) for nv in null_vectors
            )
            max_eps = eps_val if max_eps is None else max(max_eps, eps_val)
        per_point.append(
            PointSummary(point=obs.point, a=a_res, b=b_res, eps=eps_val, scale=obs.scale)
        )
        max_a = max(max_a, a_res)
        max_b = max(max_b, b_res)

    a_ok = max_a <= tol
    b_ok = max_b <= tol
    if a_ok and b_ok:
        verdict = "compatible"
    elif b_ok:
        verdict = "fails_A"
    elif a_ok:
        verdict = "fails_B"
    else:
        verdict = "fails_A_and_B"

    if max_eps is None:
        eps_verdict = "vacuous"
    elif max_eps <= tol:
        eps_verdict = "holds"
    else:
        eps_verdict = "fails"

    worst = tuple(
        sorted(per_point, key=lambda s: max(s.a, s.b), reverse=True)[:3]
    )
    return CompatReport(
        verdict=verdict,
        eps_verdict=eps_verdict,
        max_a=max_a,
        max_b=max_b,
        max_eps=max_eps,
        samples=count,
        seed=seed_val,
        tolerances=scenario.tolerances,
        null_vectors=total_nulls,
        per_point=tuple(per_point),
        worst=worst,
        skipped=tuple(skipped),
    )
