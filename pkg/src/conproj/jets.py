"""Truncated Taylor arithmetic up to second order.

A jet stores the value of a scalar quantity at one chart point together
with its gradient and Hessian (as far as its order allows).  Arithmetic
and elementary functions propagate derivatives exactly through the chain
and product rules, so any expression pipeline built from jets yields exact
first and second partials without finite differencing.

Orders are capped at 2: nothing downstream needs third derivatives, and
the closed-form propagation rules stay small.  All components are 64-bit
floats; results with non-finite components raise :class:`DomainError`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "Jet",
    "constant",
    "coordinate",
    "partial_derivative",
    "apply_function",
    "FUNCTION_NAMES",
]

_MAX_INT_POWER = 9999

_ZERO_VEC: dict[int, np.ndarray] = {}
_ZERO_MAT: dict[int, np.ndarray] = {}


def _zero_vec(n: int) -> np.ndarray:
    z = _ZERO_VEC.get(n)
    if z is None:
        z = np.zeros(n)
        z.flags.writeable = False
        _ZERO_VEC[n] = z
    return z


def _zero_mat(n: int) -> np.ndarray:
    z = _ZERO_MAT.get(n)
    if z is None:
        z = np.zeros((n, n))
        z.flags.writeable = False
        _ZERO_MAT[n] = z
    return z


class Jet:
    """Value, gradient and Hessian of a scalar at a point of an n-chart.

    ``order`` is 0, 1 or 2; ``gradient`` is present iff ``order >= 1`` and
    ``hessian`` iff ``order == 2``.  The Hessian is symmetrized on write.
    Jets are value objects: never mutate the component arrays.
    """

    __slots__ = ("n", "order", "value", "gradient", "hessian")

    def __init__(self, n, order, value, gradient=None, hessian=None):
        if not isinstance(n, int) or n < 1:
            raise ValueError("chart dimension must be a positive integer")
        if order not in (0, 1, 2):
            raise ValueError("jet order must be 0, 1 or 2")
        self.n = n
        self.order = order
        self.value = float(value)
        if order >= 1:
            if gradient is None:
                grad = _zero_vec(n)
            else:
                grad = np.asarray(gradient, dtype=float)
                if grad.shape != (n,):
                    raise ValueError(f"gradient must have shape ({n},)")
            self.gradient = grad
        else:
            self.gradient = None
        if order == 2:
            if hessian is None:
                hess = _zero_mat(n)
            else:
                hess = np.asarray(hessian, dtype=float)
                if hess.shape != (n, n):
                    raise ValueError(f"hessian must have shape ({n}, {n})")
                hess = 0.5 * (hess + hess.T)
            self.hessian = hess
        else:
            self.hessian = None
        _finite(self)

    def __repr__(self):
        parts = [f"Jet(n={self.n}, order={self.order}, value={self.value!r}"]
        if self.gradient is not None:
            parts.append(f", gradient={self.gradient.tolist()!r}")
        if self.hessian is not None:
            parts.append(f", hessian={self.hessian.tolist()!r}")
        return "".join(parts) + ")"

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        order = min(self.order, other.order)
        g = self.gradient + other.gradient if order >= 1 else None
        h = self.hessian + other.hessian if order == 2 else None
        return _finite(_make(self.n, order, self.value + other.value, g, h))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        order = min(self.order, other.order)
        g = self.gradient - other.gradient if order >= 1 else None
        h = self.hessian - other.hessian if order == 2 else None
        return _finite(_make(self.n, order, self.value - other.value, g, h))

    def __rsub__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        return other.__sub__(self)

    def __neg__(self):
        g = -self.gradient if self.order >= 1 else None
        h = -self.hessian if self.order == 2 else None
        return _make(self.n, self.order, -self.value, g, h)

    def __mul__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        order = min(self.order, other.order)
        v = self.value * other.value
        g = h = None
        if order >= 1:
            g = self.gradient * other.value + other.gradient * self.value
            if order == 2:
                cross = np.outer(self.gradient, other.gradient)
                h = (
                    self.hessian * other.value
                    + other.hessian * self.value
                    + cross
                    + cross.T
                )
        return _finite(_make(self.n, order, v, g, h))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        return self * _reciprocal(other)

    def __rtruediv__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        return other * _reciprocal(self)

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            return _transcendental_pow(self, exponent)
        if isinstance(exponent, (int, float)):
            e = float(exponent)
            if not math.isfinite(e):
                raise DomainError("non-finite exponent")
            if e.is_integer():
                if abs(e) > _MAX_INT_POWER:
                    raise DomainError(
                        f"integer exponent magnitude exceeds {_MAX_INT_POWER}"
                    )
                return _integer_power(self, int(e))
            return _transcendental_pow(self, constant(e, self.n, self.order))
        return NotImplemented

    def __rpow__(self, base):
        if isinstance(base, (int, float)):
            return _transcendental_pow(constant(float(base), self.n, self.order), self)
        return NotImplemented


def _make(n, order, value, gradient, hessian) -> Jet:
    """Trusted fast constructor: no validation, no symmetrization."""
    j = Jet.__new__(Jet)
    j.n = n
    j.order = order
    j.value = value
    j.gradient = gradient
    j.hessian = hessian
    return j


def _finite(j: Jet) -> Jet:
    # Any NaN/Inf poisons the sum, so one reduction per array suffices.
    total = j.value
    if j.gradient is not None:
        total += float(j.gradient.sum())
    if j.hessian is not None:
        total += float(j.hessian.sum())
    if not math.isfinite(total):
        raise DomainError("non-finite component in jet arithmetic")
    return j


def _coerce(other, like: Jet):
    if isinstance(other, Jet):
        if other.n != like.n:
            raise ValueError(
                f"jet dimension mismatch: {other.n} vs {like.n}"
            )
        return other
    if isinstance(other, (int, float)):
        return constant(float(other), like.n, like.order)
    return None


def constant(c: float, n: int, order: int = 2) -> Jet:
    """Jet of a constant: zero gradient and Hessian."""
    c = float(c)
    if not math.isfinite(c):
        raise DomainError("constant must be finite")
    if order not in (0, 1, 2):
        raise ValueError("jet order must be 0, 1 or 2")
    if not isinstance(n, int) or n < 1:
        raise ValueError("chart dimension must be a positive integer")
    return _make(
        n,
        order,
        c,
        _zero_vec(n) if order >= 1 else None,
        _zero_mat(n) if order == 2 else None,
    )


def coordinate(axis: int, point, order: int = 2) -> Jet:
    """Jet seeding coordinate ``axis`` (0-based) at ``point``.

    Value is the coordinate of the point, the gradient is the matching
    basis vector and the Hessian vanishes.
    """
    p = [float(c) for c in point]
    n = len(p)
    if n < 1:
        raise ValueError("point must have at least one coordinate")
    if not 0 <= axis < n:
        raise IndexError(f"coordinate axis {axis} out of range for dimension {n}")
    grad = None
    if order >= 1:
        grad = np.zeros(n)
        grad[axis] = 1.0
    return _finite(
        _make(n, order, p[axis], grad, _zero_mat(n) if order == 2 else None)
    )


def partial_derivative(a: Jet, axis: int) -> Jet:
    """Partial derivative along ``axis`` as a jet of order one less."""
    if a.order < 1:
        raise ValueError("cannot take a partial derivative of an order-0 jet")
    if not 0 <= axis < a.n:
        raise IndexError(f"coordinate axis {axis} out of range for dimension {a.n}")
    if a.order == 1:
        return _make(a.n, 0, float(a.gradient[axis]), None, None)
    return _make(a.n, 1, float(a.gradient[axis]), a.hessian[axis].copy(), None)


def _chain(a: Jet, f0: float, f1: float, f2: float) -> Jet:
    g = h = None
    if a.order >= 1:
        g = f1 * a.gradient
        if a.order == 2:
            h = f1 * a.hessian + f2 * np.outer(a.gradient, a.gradient)
    return _finite(_make(a.n, a.order, f0, g, h))


def _reciprocal(a: Jet) -> Jet:
    if a.value == 0.0:
        raise DomainError("division by zero")
    f0 = 1.0 / a.value
    f1 = -f0 * f0
    return _chain(a, f0, f1, -2.0 * f1 * f0)


def _integer_power(a: Jet, k: int) -> Jet:
    if k == 0:
        return constant(1.0, a.n, a.order)
    if k < 0:
        return _reciprocal(_integer_power(a, -k))
    out = a
    for _ in range(k - 1):
        out = out * a
    return out


def _transcendental_pow(base: Jet, exponent: Jet) -> Jet:
    if base.value <= 0.0:
        raise DomainError("power with non-positive base requires an integer exponent")
    return apply_function(exponent * apply_function(base, "log"), "exp")


# -- elementary functions ----------------------------------------------
# Each rule maps the input value to (f, f', f'').


def _exp_rule(v):
    e = math.exp(v)
    return e, e, e


def _log_rule(v):
    if v <= 0.0:
        raise DomainError("log of a non-positive value")
    r = 1.0 / v
    return math.log(v), r, -r * r


def _sqrt_rule(v):
    if v <= 0.0:
        raise DomainError("sqrt of a non-positive value (derivative unbounded at 0)")
    s = math.sqrt(v)
    d = 0.5 / s
    return s, d, -0.5 * d / v


def _sin_rule(v):
    s, c = math.sin(v), math.cos(v)
    return s, c, -s


def _cos_rule(v):
    s, c = math.sin(v), math.cos(v)
    return c, -s, -c


def _tan_rule(v):
    if math.cos(v) == 0.0:
        raise DomainError("tan at a pole")
    t = math.tan(v)
    d = 1.0 + t * t
    return t, d, 2.0 * t * d


def _sinh_rule(v):
    s, c = math.sinh(v), math.cosh(v)
    return s, c, s


def _cosh_rule(v):
    s, c = math.sinh(v), math.cosh(v)
    return c, s, c


def _tanh_rule(v):
    t = math.tanh(v)
    d = 1.0 - t * t
    return t, d, -2.0 * t * d


_FUNCTION_TABLE = {
    "exp": _exp_rule,
    "log": _log_rule,
    "sin": _sin_rule,
    "cos": _cos_rule,
    "tan": _tan_rule,
    "sinh": _sinh_rule,
    "cosh": _cosh_rule,
    "tanh": _tanh_rule,
    "sqrt": _sqrt_rule,
}

FUNCTION_NAMES = frozenset(_FUNCTION_TABLE)


def apply_function(a: Jet, name: str) -> Jet:
    """Apply an elementary function to a jet through the chain rule."""
    rule = _FUNCTION_TABLE.get(name)
    if rule is None:
        raise ValueError(f"unknown function '{name}'")
    try:
        f0, f1, f2 = rule(a.value)
    except OverflowError:
        raise DomainError(f"{name} overflow") from None
    return _chain(a, f0, f1, f2)


def is_zero(a: Jet) -> bool:
    """True when every stored component is exactly zero."""
    if a.value != 0.0:
        return False
    if a.gradient is not None and a.gradient.any():
        return False
    if a.hessian is not None and a.hessian.any():
        return False
    return True
