"""Ready-made charted manifolds for tests, examples and the CLI.

Every multi-chart fixture stores exact transition jets plus closed-form
Jacobian entry maps, so vector fields, tensors and Lagrangians can be moved
between charts without losing derivative accuracy.  The sphere uses two
stereographic charts (each genuinely two-dimensional, overlapping everywhere
except the poles) rather than latitude/longitude angles, which would be
singular at the poles.
"""

from __future__ import annotations

import math

import numpy as np

from .generators import christoffel_from_metric
from .geometry import Chart, ChartedManifold, Point, Transition
from .jets import Jet2, SmoothMap, lift_scalar, powi
from .jets import cos as jcos
from .jets import sin as jsin
from .jets import sqrt as jsqrt

__all__ = [
    "SPHERE_CHART_RADIUS",
    "make",
    "embed_sphere",
    "sphere_embedding",
]

# Stereographic coordinates beyond this radius are handed to the opposite
# chart, where they sit comfortably inside radius 1/3.
SPHERE_CHART_RADIUS = 3.0


def _const_map(n_in: int, values) -> SmoothMap:
    vals = [float(v) for v in values]
    return SmoothMap(n_in, len(vals), lambda js: list(vals), name="const")


def _zero_connection(n: int):
    def rule(coords: np.ndarray) -> np.ndarray:
        return np.zeros((n, n, n))

    return rule


def _metric_connection(metric_map: SmoothMap):
    def rule(coords: np.ndarray) -> np.ndarray:
        return christoffel_from_metric(metric_map, coords)

    return rule


def _identity_metric(n: int) -> SmoothMap:
    return _const_map(n, np.eye(n).ravel())


# -- euclidean ----------------------------------------------------------------


def _euclidean(n: int) -> ChartedManifold:
    if n < 1:
        raise ValueError("euclidean dimension must be at least 1")
    chart = Chart("cart", n)
    return ChartedManifold(
        n,
        [chart],
        metric={"cart": _identity_metric(n)},
        connection={"cart": _zero_connection(n)},
        name=f"euclidean{n}",
        flat=True,
    )


# -- warped plane: identity chart plus (x + y^3, y) ---------------------------


def _warped2() -> ChartedManifold:
    def to_warp(js):
        x, y = js
        return [x + powi(y, 3), y]

    def to_warp_jac(js):
        x, y = js
        return [1.0, 3.0 * (y * y), 0.0, 1.0]

    def to_cart(js):
        u, w = js
        return [u - powi(w, 3), w]

    def to_cart_jac(js):
        u, w = js
        return [1.0, -3.0 * (w * w), 0.0, 1.0]

    def warp_metric(js):
        u, w = js
        off = -3.0 * (w * w)
        return [1.0, off, off, 1.0 + 9.0 * powi(w, 4)]

    transitions = {
        ("cart", "warp"): Transition(
            SmoothMap(2, 2, to_warp, "cart->warp"),
            SmoothMap(2, 4, to_warp_jac, "J[cart->warp]"),
        ),
        ("warp", "cart"): Transition(
            SmoothMap(2, 2, to_cart, "warp->cart"),
            SmoothMap(2, 4, to_cart_jac, "J[warp->cart]"),
        ),
    }
    warp_metric_map = SmoothMap(2, 4, warp_metric, "g@warp")
    return ChartedManifold(
        2,
        [Chart("cart", 2), Chart("warp", 2)],
        transitions,
        metric={"cart": _identity_metric(2), "warp": warp_metric_map},
        connection={
            "cart": _zero_connection(2),
            "warp": _metric_connection(warp_metric_map),
        },
        name="euclidean_warped2",
    )


# -- slit plane with cartesian and polar charts --------------------------------


def _atan2_jet(y: Jet2, x: Jet2) -> Jet2:
    """Exact jets of the polar angle atan2(y, x) away from the origin."""
    xv, yv = x.value, y.value
    r2 = xv * xv + yv * yv
    if r2 == 0.0:
        raise ValueError("polar angle undefined at the origin")
    r4 = r2 * r2
    return lift_scalar(
        [x, y],
        math.atan2(yv, xv),
        [-yv / r2, xv / r2],
        [
            [2.0 * xv * yv / r4, (yv * yv - xv * xv) / r4],
            [(yv * yv - xv * xv) / r4, -2.0 * xv * yv / r4],
        ],
    )


def _slit_plane_contains(coords: np.ndarray, margin: float) -> bool:
    x, y = coords
    dist = math.hypot(x, y) if x > 0 else abs(y)
    return dist > margin


def _polar_contains(coords: np.ndarray, margin: float) -> bool:
    r, theta = coords
    return r > margin and abs(theta) < math.pi - margin


def _polar2() -> ChartedManifold:
    def to_cart(js):
        r, th = js
        return [r * jcos(th), r * jsin(th)]

    def to_cart_jac(js):
        r, th = js
        c, s = jcos(th), jsin(th)
        return [c, -(r * s), s, r * c]

    def to_polar(js):
        x, y = js
        return [jsqrt(x * x + y * y), _atan2_jet(y, x)]

    def to_polar_jac(js):
        x, y = js
        r2 = x * x + y * y
        r = jsqrt(r2)
        return [x / r, y / r, -(y / r2), x / r2]

    def polar_metric(js):
        r, th = js
        return [1.0, 0.0, 0.0, r * r]

    transitions = {
        ("polar", "cart"): Transition(
            SmoothMap(2, 2, to_cart, "polar->cart"),
            SmoothMap(2, 4, to_cart_jac, "J[polar->cart]"),
        ),
        ("cart", "polar"): Transition(
            SmoothMap(2, 2, to_polar, "cart->polar"),
            SmoothMap(2, 4, to_polar_jac, "J[cart->polar]"),
        ),
    }
    polar_metric_map = SmoothMap(2, 4, polar_metric, "g@polar")
    return ChartedManifold(
        2,
        [
            Chart("cart", 2, _slit_plane_contains),
            Chart("polar", 2, _polar_contains),
        ],
        transitions,
        metric={"cart": _identity_metric(2), "polar": polar_metric_map},
        connection={
            "cart": _zero_connection(2),
            "polar": _metric_connection(polar_metric_map),
        },
        name="polar2",
    )


# -- circle with two angle charts ----------------------------------------------


def _circle() -> ChartedManifold:
    two_pi = 2.0 * math.pi

    def main_to_wrap(js):
        th = js[0]
        return [th + (0.0 if th.value > 0.0 else two_pi)]

    def wrap_to_main(js):
        ph = js[0]
        return [ph + (0.0 if ph.value < math.pi else -two_pi)]

    def main_contains(coords, margin):
        return abs(coords[0]) < math.pi - margin

    def wrap_contains(coords, margin):
        return margin < coords[0] < two_pi - margin

    unit_jac = _const_map(1, [1.0])
    transitions = {
        ("main", "wrap"): Transition(SmoothMap(1, 1, main_to_wrap, "main->wrap"), unit_jac),
        ("wrap", "main"): Transition(SmoothMap(1, 1, wrap_to_main, "wrap->main"), unit_jac),
    }
    return ChartedManifold(
        1,
        [Chart("main", 1, main_contains), Chart("wrap", 1, wrap_contains)],
        transitions,
        metric={"main": _const_map(1, [1.0]), "wrap": _const_map(1, [1.0])},
        connection={"main": _zero_connection(1), "wrap": _zero_connection(1)},
        name="circle",
    )


# -- round sphere, two stereographic charts -------------------------------------


def _sphere_contains(coords: np.ndarray, margin: float) -> bool:
    return math.hypot(coords[0], coords[1]) < SPHERE_CHART_RADIUS - margin


def _sphere_flip(js):
    u1, u2 = js
    s = u1 * u1 + u2 * u2
    return [u1 / s, u2 / s]


def _sphere_flip_jac(js):
    u1, u2 = js
    s = u1 * u1 + u2 * u2
    s2 = s * s
    off = -(2.0 * (u1 * u2)) / s2
    return [(s - 2.0 * (u1 * u1)) / s2, off, off, (s - 2.0 * (u2 * u2)) / s2]


def _round_metric(js):
    u1, u2 = js
    c = 1.0 + u1 * u1 + u2 * u2
    f = 4.0 / (c * c)
    return [f, 0.0, 0.0, f]


def _sphere2() -> ChartedManifold:
    flip = SmoothMap(2, 2, _sphere_flip, "stereo-flip")
    flip_jac = SmoothMap(2, 4, _sphere_flip_jac, "J[stereo-flip]")
    transitions = {
        ("north", "south"): Transition(flip, flip_jac),
        ("south", "north"): Transition(flip, flip_jac),
    }
    g_north = SmoothMap(2, 4, _round_metric, "g@north")
    g_south = SmoothMap(2, 4, _round_metric, "g@south")
    return ChartedManifold(
        2,
        [
            Chart("north", 2, _sphere_contains),
            Chart("south", 2, _sphere_contains),
        ],
        transitions,
        metric={"north": g_north, "south": g_south},
        connection={
            "north": _metric_connection(g_north),
            "south": _metric_connection(g_south),
        },
        name="sphere2",
    )


_BUILDERS = {
    "euclidean": _euclidean,
    "euclidean_warped2": _warped2,
    "polar2": _polar2,
    "circle": _circle,
    "sphere2": _sphere2,
}


def make(name: str, **params) -> ChartedManifold:
    """Build a library manifold by name.

    Names: ``euclidean`` (takes ``n``), ``euclidean_warped2``, ``polar2``,
    ``circle``, ``sphere2``.
    """
    key = name.strip().lower()
    if key not in _BUILDERS:
        raise ValueError(
            f"unknown manifold {name!r}; choose from {sorted(_BUILDERS)}"
        )
    if key == "euclidean":
        return _euclidean(int(params.pop("n", 2)))
    if params:
        raise ValueError(f"manifold {name!r} takes no parameters, got {params}")
    return _BUILDERS[key]()


def embed_sphere(x: Point) -> np.ndarray:
    """Inverse stereographic projection of a sphere chart point; unit 3-vector."""
    u1, u2 = x.coords
    s = u1 * u1 + u2 * u2
    c = 1.0 + s
    if x.chart_id == "north":
        return np.array([2.0 * u1 / c, 2.0 * u2 / c, (1.0 - s) / c])
    if x.chart_id == "south":
        return np.array([2.0 * u1 / c, 2.0 * u2 / c, (s - 1.0) / c])
    raise ValueError(f"not a sphere chart: {x.chart_id!r}")


def sphere_embedding(chart_id: str) -> SmoothMap:
    """The chart-to-unit-sphere embedding as a smooth map (for Jacobians)."""
    if chart_id not in ("north", "south"):
        raise ValueError(f"not a sphere chart: {chart_id!r}")
    sign = 1.0 if chart_id == "north" else -1.0

    def fn(js):
        u1, u2 = js
        s = u1 * u1 + u2 * u2
        c = 1.0 + s
        return [(2.0 * u1) / c, (2.0 * u2) / c, (sign * (1.0 - s)) / c]

    return SmoothMap(2, 3, fn, name=f"embed@{chart_id}")
