"""Second-order forward-mode jet arithmetic.

A :class:`Jet2` carries a value together with its gradient and Hessian with
respect to a fixed set of ``n`` input variables.  Every arithmetic operation
propagates all three through the product, quotient and chain rules truncated
at order two, so derivatives of composite expressions are exact to rounding:
no finite differencing, no symbolic algebra.

Maps are represented by :class:`SmoothMap`, a thin wrapper around a Python
function that consumes one jet per input variable and returns the output
components.  Because the wrapped function works on whatever jets it is
handed, composition of maps is literally function composition and the
second-order chain rule falls out of the arithmetic.
"""

from __future__ import annotations

import math
import numbers
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "Jet2",
    "SmoothMap",
    "variable",
    "constant",
    "seed_variables",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "powi",
    "lift_scalar",
    "compose",
    "identity_map",
]

Number = Union[int, float, np.floating]
JetLike = Union["Jet2", Number]


class Jet2:
    """Value, gradient and symmetric Hessian w.r.t. ``n`` scalar inputs.

    The Hessian stays exactly symmetric under every built-in operation:
    each update is a sum of terms that are symmetric bit-for-bit
    (scaled symmetric matrices, ``g g^T`` outer products and symmetrized
    cross products).
    """

    __slots__ = ("value", "gradient", "hessian")

    def __init__(self, value: float, gradient: np.ndarray, hessian: np.ndarray):
        self.value = float(value)
        self.gradient = np.asarray(gradient, dtype=float)
        self.hessian = np.asarray(hessian, dtype=float)

    @property
    def n(self) -> int:
        """Number of input variables of the arithmetic context."""
        return self.gradient.shape[0]

    def __repr__(self) -> str:
        return f"Jet2({self.value!r}, grad={self.gradient!r})"

    # -- arithmetic ---------------------------------------------------------

    def _match(self, other: "Jet2") -> None:
        if self.gradient.shape[0] != other.gradient.shape[0]:
            raise ValueError(
                f"jet context mismatch: {self.gradient.shape[0]} vs "
                f"{other.gradient.shape[0]} input variables"
            )

    def __add__(self, other: JetLike) -> "Jet2":
        if isinstance(other, Jet2):
            self._match(other)
            return Jet2(
                self.value + other.value,
                self.gradient + other.gradient,
                self.hessian + other.hessian,
            )
        return Jet2(self.value + float(other), self.gradient, self.hessian)

    __radd__ = __add__

    def __sub__(self, other: JetLike) -> "Jet2":
        if isinstance(other, Jet2):
            self._match(other)
            return Jet2(
                self.value - other.value,
                self.gradient - other.gradient,
                self.hessian - other.hessian,
            )
        return Jet2(self.value - float(other), self.gradient, self.hessian)

    def __rsub__(self, other: Number) -> "Jet2":
        return Jet2(float(other) - self.value, -self.gradient, -self.hessian)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.gradient, -self.hessian)

    def __mul__(self, other: JetLike) -> "Jet2":
        if isinstance(other, Jet2):
            self._match(other)
            cross = np.outer(self.gradient, other.gradient)
            return Jet2(
                self.value * other.value,
                self.value * other.gradient + other.value * self.gradient,
                self.value * other.hessian
                + other.value * self.hessian
                + cross
                + cross.T,
            )
        s = float(other)
        return Jet2(self.value * s, self.gradient * s, self.hessian * s)

    __rmul__ = __mul__

    def __truediv__(self, other: JetLike) -> "Jet2":
        if isinstance(other, Jet2):
            return self * _reciprocal(other)
        s = float(other)
        if s == 0.0:
            raise ZeroDivisionError("jet divided by zero scalar")
        return Jet2(self.value / s, self.gradient / s, self.hessian / s)

    def __rtruediv__(self, other: Number) -> "Jet2":
        return _reciprocal(self) * float(other)

    def __pow__(self, k: int) -> "Jet2":
        return powi(self, k)


def variable(index: int, value: float, n: int) -> Jet2:
    """Seed jet for input variable ``index`` in an ``n``-variable context."""
    if not 0 <= index < n:
        raise IndexError(f"variable index {index} out of range for n={n}")
    g = np.zeros(n)
    g[index] = 1.0
    return Jet2(value, g, np.zeros((n, n)))


def constant(value: float, n: int) -> Jet2:
    """Jet of a constant: zero gradient and Hessian."""
    return Jet2(value, np.zeros(n), np.zeros((n, n)))


def seed_variables(x: Sequence[float]) -> list[Jet2]:
    """One seed jet per coordinate of ``x``."""
    xs = np.asarray(x, dtype=float)
    n = xs.shape[0]
    return [variable(i, xs[i], n) for i in range(n)]


def _unary(u: Jet2, f0: float, f1: float, f2: float) -> Jet2:
    """Chain rule for a scalar function with derivatives ``f0, f1, f2`` at ``u.value``."""
    g = u.gradient
    return Jet2(f0, f1 * g, f1 * u.hessian + f2 * np.outer(g, g))


def _reciprocal(u: Jet2) -> Jet2:
    v = u.value
    if v == 0.0:
        raise ZeroDivisionError("jet division by zero value")
    inv = 1.0 / v
    return _unary(u, inv, -inv * inv, 2.0 * inv * inv * inv)


def sin(u: JetLike) -> JetLike:
    if isinstance(u, Jet2):
        s, c = math.sin(u.value), math.cos(u.value)
        return _unary(u, s, c, -s)
    return math.sin(u)


def cos(u: JetLike) -> JetLike:
    if isinstance(u, Jet2):
        s, c = math.sin(u.value), math.cos(u.value)
        return _unary(u, c, -s, -c)
    return math.cos(u)


def exp(u: JetLike) -> JetLike:
    if isinstance(u, Jet2):
        e = math.exp(u.value)
        return _unary(u, e, e, e)
    return math.exp(u)


def log(u: JetLike) -> JetLike:
    if isinstance(u, Jet2):
        if u.value <= 0.0:
            raise ValueError(f"log of non-positive jet value {u.value}")
        inv = 1.0 / u.value
        return _unary(u, math.log(u.value), inv, -inv * inv)
    return math.log(u)


def sqrt(u: JetLike) -> JetLike:
    if isinstance(u, Jet2):
        if u.value <= 0.0:
            raise ValueError(f"sqrt of non-positive jet value {u.value}")
        r = math.sqrt(u.value)
        return _unary(u, r, 0.5 / r, -0.25 / (r * u.value))
    return math.sqrt(u)


def powi(u: JetLike, k: int) -> JetLike:
    """Integer power ``u**k``; negative exponents need a nonzero value."""
    if not isinstance(k, numbers.Integral):
        raise TypeError(f"jet exponent must be an integer, got {k!r}")
    k = int(k)
    if not isinstance(u, Jet2):
        return float(u) ** k
    v = u.value
    if k == 0:
        return constant(1.0, u.n)
    if v == 0.0 and k < 0:
        raise ZeroDivisionError("negative power of zero jet value")
    f0 = v**k
    f1 = k * v ** (k - 1)
    f2 = k * (k - 1) * v ** (k - 2) if k != 1 else 0.0
    return _unary(u, f0, f1, f2)


def lift_scalar(
    args: Sequence[Jet2],
    value: float,
    gradient: Sequence[float],
    hessian: Sequence[Sequence[float]],
) -> Jet2:
    """Chain rule through arbitrary argument jets for a hand-differentiated scalar.

    ``gradient``/``hessian`` are the derivatives of the scalar function with
    respect to its ``len(args)`` arguments, evaluated at their values.  Used
    for the few built-in maps (polar angle, branch shifts) that fall outside
    the elementary operation set.
    """
    n = args[0].n
    grad = np.asarray(gradient, dtype=float)
    hess = np.asarray(hessian, dtype=float)
    G = np.stack([a.gradient for a in args])
    out_grad = grad @ G
    out_hess = G.T @ hess @ G
    out_hess = 0.5 * (out_hess + out_hess.T)
    for gi, a in zip(grad, args):
        if gi != 0.0:
            out_hess = out_hess + gi * a.hessian
    return Jet2(value, out_grad, out_hess)


def _as_jet(out, n: int) -> Jet2:
    if isinstance(out, Jet2):
        return out
    return constant(float(out), n)


class SmoothMap:
    """A deterministic map with exact second-order jets per output component.

    ``fn`` receives one :class:`Jet2` per input variable and returns the
    output components, each a jet or a plain number (treated as constant).
    Calling ``fn`` on jets produced by another map composes the two maps,
    chain rule included.
    """

    __slots__ = ("dimension_in", "dimension_out", "fn", "name")

    def __init__(
        self,
        dimension_in: int,
        dimension_out: int,
        fn: Callable[[Sequence[Jet2]], Sequence[JetLike]],
        name: str = "",
    ):
        self.dimension_in = int(dimension_in)
        self.dimension_out = int(dimension_out)
        self.fn = fn
        self.name = name

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"SmoothMap({self.dimension_in}->{self.dimension_out}{tag})"

    def jets(self, x: Sequence[float]) -> list[Jet2]:
        """Evaluate at ``x``; one jet per output component."""
        xs = np.asarray(x, dtype=float)
        if xs.shape != (self.dimension_in,):
            raise ValueError(
                f"expected {self.dimension_in} inputs, got shape {xs.shape}"
            )
        outs = self.fn(seed_variables(xs))
        jets = [_as_jet(o, self.dimension_in) for o in outs]
        if len(jets) != self.dimension_out:
            raise ValueError(
                f"map produced {len(jets)} outputs, declared {self.dimension_out}"
            )
        return jets

    def value(self, x: Sequence[float]) -> np.ndarray:
        return np.array([j.value for j in self.jets(x)])

    def jacobian(self, x: Sequence[float]) -> np.ndarray:
        return np.stack([j.gradient for j in self.jets(x)])

    def value_and_jacobian(self, x: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        jets = self.jets(x)
        return (
            np.array([j.value for j in jets]),
            np.stack([j.gradient for j in jets]),
        )


def compose(outer: SmoothMap, inner: SmoothMap) -> SmoothMap:
    """``outer`` after ``inner``; jets chain automatically."""
    if inner.dimension_out != outer.dimension_in:
        raise ValueError(
            f"cannot compose {outer.dimension_in}-input map with "
            f"{inner.dimension_out}-output map"
        )

    def fn(js: Sequence[Jet2]) -> Sequence[JetLike]:
        n = js[0].n
        mids = [_as_jet(o, n) for o in inner.fn(js)]
        return outer.fn(mids)

    name = f"{outer.name or '?'}.{inner.name or '?'}" if (outer.name or inner.name) else ""
    return SmoothMap(inner.dimension_in, outer.dimension_out, fn, name)


def identity_map(n: int) -> SmoothMap:
    return SmoothMap(n, n, lambda js: list(js), name="id")
