"""Shared test utilities: finite-difference oracles and scenario builders."""

from __future__ import annotations

import numpy as np

from conproj import load_scenario, metric_at, sample_points


def assert_componentwise_close(actual, expected, tol, floor=1.0):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = np.maximum(floor, np.abs(expected))
    err = np.max(np.abs(actual - expected) / scale)
    assert err <= tol, f"componentwise error {err:.3e} exceeds {tol:.1e}"


def fd_gradient(f, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    out = np.zeros(len(p))
    for k in range(len(p)):
        step = np.zeros(len(p))
        step[k] = h
        out[k] = (f(p + step) - f(p - step)) / (2.0 * h)
    return out


def fd_hessian(f, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    n = len(p)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            out[i, j] = (
                f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)
            ) / (4.0 * h * h)
    return out


def random_expression(rng, coords, depth=3):
    """Random grammar-conformant source with domain-safe subexpressions."""
    n = len(coords)
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.4:
            return repr(round(float(rng.uniform(-2.0, 2.0)), 3))
        return coords[int(rng.integers(n))]
    roll = rng.random()
    a = random_expression(rng, coords, depth - 1)
    if roll < 0.35:
        b = random_expression(rng, coords, depth - 1)
        op = str(rng.choice(["+", "-", "*"]))
        return f"({a} {op} {b})"
    if roll < 0.45:
        b = random_expression(rng, coords, depth - 1)
        return f"({a})/(2.5 + ({b})^2)"
    if roll < 0.55:
        return f"({a})^2"
    if roll < 0.65:
        return f"log(2.5 + ({a})^2)"
    if roll < 0.75:
        return f"sqrt(2.5 + ({a})^2)"
    fn = str(rng.choice(["sin", "cos", "tanh"]))
    if rng.random() < 0.3:
        fn = str(rng.choice(["exp", "sinh", "cosh"]))
        return f"{fn}(0.3*({a}))"
    return f"{fn}({a})"


def polynomial(rng, coords, *, scale, max_terms, degree=2):
    """Random polynomial source of total degree <= 2 with bounded coefficients."""
    n = len(coords)
    monomials = [()]
    monomials += [(i,) for i in range(n)]
    if degree >= 2:
        monomials += [(i, j) for i in range(n) for j in range(i, n)]
    count = int(rng.integers(1, max_terms + 1))
    picks = rng.choice(len(monomials), size=min(count, len(monomials)), replace=False)
    parts = []
    for pick in np.atleast_1d(picks):
        c = float(rng.uniform(-scale, scale))
        mon = monomials[int(pick)]
        if not mon:
            parts.append(repr(c))
        else:
            parts.append(f"{c!r}*" + "*".join(coords[k] for k in mon))
    return " + ".join(parts)


def drift_doc(s=("0", "0", "x2"), samples=60, seed=7):
    """Lorentzian chart with a drift connection: null geodesics are shared
    with the metric, but a non-gradient drift leaves the trace one-form
    non-closed."""
    return {
        "dimension": 3,
        "coordinates": ["x1", "x2", "x3"],
        "box": {"min": [-1, -1, -1], "max": [1, 1, 1]},
        "metric": [["-1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
        "connection": {
            "kind": "modified_s",
            "metric": [["-1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
            "s": list(s),
        },
        "samples": samples,
        "seed": seed,
    }


_PERT_SCALE = {2: 0.08, 3: 0.05, 4: 0.03}


def round_trip_doc(rng, n, *, samples=20, lorentzian=False, max_tries=60):
    """Compatible-by-construction scenario: the connection is a projective
    shift of the Levi-Civita connection of a conformal rescaling of the
    metric.  Returns (document, phi_source)."""
    coords = [f"x{i + 1}" for i in range(n)]
    scale = _PERT_SCALE[n]
    for _ in range(max_tries):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                if j < i:
                    row.append(None)
                    continue
                pert = polynomial(rng, coords, scale=scale, max_terms=3)
                if i == j:
                    base = "-1" if (lorentzian and i == 0) else "1"
                    row.append(f"{base} + {pert}")
                else:
                    row.append(pert)
            rows.append(row)
        phi = polynomial(rng, coords, scale=0.25, max_terms=4)
        psi = [polynomial(rng, coords, scale=0.4, max_terms=3) for _ in range(n)]
        conn_rows = [
            [
                None if j < i else f"({rows[i][j]})*exp(2*({phi}))"
                for j in range(n)
            ]
            for i in range(n)
        ]
        doc = {
            "dimension": n,
            "coordinates": coords,
            "box": {"min": [-1.0] * n, "max": [1.0] * n},
            "metric": rows,
            "connection": {
                "kind": "projective_transform",
                "base": {"kind": "levi_civita", "metric": conn_rows},
                "psi": psi,
            },
            "samples": samples,
            "seed": int(rng.integers(0, 2**31)),
        }
        scenario = load_scenario(doc)
        determinants = [
            abs(float(np.linalg.det(metric_at(scenario, p, 0).values())))
            for p in sample_points(scenario, 40, seed=1234)
        ]
        if min(determinants) > 0.5:
            return doc, phi
    raise AssertionError("could not draw a well-conditioned random metric")


def random_drift_incompatible_doc(rng, n, *, samples=20):
    """Incompatible by construction: identity metric with a drift along one
    axis proportional to another coordinate, so the lowered drift one-form
    has an exactly known non-zero closedness defect."""
    coords = [f"x{i + 1}" for i in range(n)]
    axis, dep = rng.choice(n, size=2, replace=False)
    c = float(rng.uniform(0.5, 1.5)) * float(rng.choice([-1.0, 1.0]))
    s = ["0"] * n
    s[int(axis)] = f"{c!r}*{coords[int(dep)]}"
    identity = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return {
        "dimension": n,
        "coordinates": coords,
        "box": {"min": [-1.0] * n, "max": [1.0] * n},
        "metric": identity,
        "connection": {"kind": "modified_s", "metric": identity, "s": s},
        "samples": samples,
        "seed": int(rng.integers(0, 2**31)),
    }


def random_explicit_incompatible_doc(rng, n, *, samples=20):
    """Incompatible with both conditions failing: a generic polynomial
    connection over a near-flat metric."""
    coords = [f"x{i + 1}" for i in range(n)]
    identity = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    gamma = []
    for i in range(n):
        mat = []
        for j in range(n):
            row = []
            for k in range(n):
                if k < j:
                    row.append(None)
                else:
                    row.append(polynomial(rng, coords, scale=0.5, max_terms=2))
            mat.append(row)
        gamma.append(mat)
    gamma[0][min(1, n - 1)][min(1, n - 1)] = "0.8 + 0.4*x1"
    return {
        "dimension": n,
        "coordinates": coords,
        "box": {"min": [-1.0] * n, "max": [1.0] * n},
        "metric": identity,
        "connection": {"kind": "explicit", "gamma": gamma},
        "samples": samples,
        "seed": int(rng.integers(0, 2**31)),
    }


def flat_doc(n=2, samples=10, seed=0):
    coords = [f"x{i + 1}" for i in range(n)]
    identity = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return {
        "dimension": n,
        "coordinates": coords,
        "box": {"min": [-1.0] * n, "max": [1.0] * n},
        "metric": identity,
        "connection": {"kind": "levi_civita", "metric": identity},
        "samples": samples,
        "seed": seed,
    }
