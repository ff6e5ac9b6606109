"""Charts, atlases, diffusors and the second-order pushforward.

A diffusor at a point is the coordinate pair ``(a, b)`` of a differential
operator ``a^i d_i + b^{ij} d2_{ij}`` with ``b`` symmetric.  Under a smooth
map ``phi`` it pushes forward as

    a'^k = a^i d_i phi^k + b^{ij} d2_{ij} phi^k,
    b'^{kl} = b^{ij} d_i phi^k d_j phi^l,

with all derivatives supplied exactly by jet evaluation.  Points carry the
id of the chart their coordinates live in; there is no global embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .jets import Jet2, SmoothMap, identity_map

__all__ = [
    "CHART_MARGIN",
    "OutOfChartError",
    "Chart",
    "Transition",
    "ChartedManifold",
    "Point",
    "TangentVector",
    "Diffusor",
    "pushforward_diffusor",
    "symmetric_part",
    "apply_diffusor",
    "transform_point",
    "transform_vector",
]

# Safety margin used when deciding chart membership before a transition is
# evaluated; keeps evaluation away from chart boundaries where transition
# maps may blow up.
CHART_MARGIN = 1e-6


class OutOfChartError(Exception):
    """A coordinate vector fell outside the target chart's domain."""


def _always_inside(coords: np.ndarray, margin: float) -> bool:
    return bool(np.all(np.isfinite(coords)))


@dataclass(frozen=True)
class Chart:
    """A named coordinate patch with a (margin-aware) domain predicate."""

    id: str
    dimension: int
    contains: Callable[[np.ndarray, float], bool] = _always_inside
    label: str = ""

    def accepts(self, coords: np.ndarray, margin: float = 0.0) -> bool:
        coords = np.asarray(coords, dtype=float)
        if not np.all(np.isfinite(coords)):
            return False
        return bool(self.contains(coords, margin))


@dataclass(frozen=True)
class Transition:
    """Coordinate change between two charts.

    ``map`` carries exact jets of the transition.  ``jacobian_map``, when
    present, gives the Jacobian entries (row-major) as a smooth map of the
    source coordinates; it is what lets velocity-dependent objects
    (Lagrangians, 2-tensors) be transported between charts with exact jets.
    """

    map: SmoothMap
    jacobian_map: Optional[SmoothMap] = None

    @cached_property
    def tangent_lift(self) -> SmoothMap:
        """The induced map ``(x, v) -> (psi(x), J_psi(x) v)`` on 2n inputs."""
        if self.jacobian_map is None:
            raise ValueError("transition has no jacobian_map; cannot lift velocities")
        n_in = self.map.dimension_in
        n_out = self.map.dimension_out
        pos_fn = self.map.fn
        jac_fn = self.jacobian_map.fn

        def fn(js: Sequence[Jet2]):
            xs, vs = js[:n_in], js[n_in:]
            pos = list(pos_fn(xs))
            K = list(jac_fn(xs))
            vel = []
            for i in range(n_out):
                acc = K[i * n_in] * vs[0]
                for j in range(1, n_in):
                    acc = acc + K[i * n_in + j] * vs[j]
                vel.append(acc)
            return pos + vel

        return SmoothMap(2 * n_in, 2 * n_out, fn, name=f"lift[{self.map.name}]")

    def jacobian(self, coords: np.ndarray) -> np.ndarray:
        if self.jacobian_map is not None:
            vals = self.jacobian_map.value(coords)
            n_out = self.map.dimension_out
            return vals.reshape(n_out, self.map.dimension_in)
        return self.map.jacobian(coords)


@dataclass(frozen=True)
class Point:
    """Coordinates in a named chart."""

    chart_id: str
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class TangentVector:
    at: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))


@dataclass(frozen=True)
class Diffusor:
    """First- plus second-order coefficients of a differential operator at a point."""

    at: Point
    first_order: np.ndarray
    second_order: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.first_order, dtype=float)
        b = np.asarray(self.second_order, dtype=float)
        object.__setattr__(self, "first_order", a)
        object.__setattr__(self, "second_order", b)
        if b.shape != (a.shape[0], a.shape[0]):
            raise ValueError(f"second-order shape {b.shape} does not match n={a.shape[0]}")
        if not np.array_equal(b, b.T):
            raise ValueError("second-order coefficients must be exactly symmetric")


class ChartedManifold:
    """An atlas of charts with jet-evaluable transitions.

    ``metric`` maps chart ids to smooth maps producing the ``n*n`` metric
    components (row-major) in that chart; ``connection`` maps chart ids to
    rules producing the Christoffel array ``Gamma[i, j, k]`` at given
    coordinates.  Identity transitions are filled in automatically.
    """

    def __init__(
        self,
        dimension: int,
        charts: Sequence[Chart],
        transitions: Optional[Mapping[tuple[str, str], Transition]] = None,
        metric: Optional[Mapping[str, SmoothMap]] = None,
        connection: Optional[Mapping[str, Callable[[np.ndarray], np.ndarray]]] = None,
        name: str = "",
        flat: bool = False,
    ):
        self.dimension = int(dimension)
        self.charts: dict[str, Chart] = {}
        for c in charts:
            if c.dimension != self.dimension:
                raise ValueError(f"chart {c.id!r} has dimension {c.dimension}, expected {dimension}")
            if c.id in self.charts:
                raise ValueError(f"duplicate chart id {c.id!r}")
            self.charts[c.id] = c
        self.transitions: dict[tuple[str, str], Transition] = dict(transitions or {})
        ident = Transition(
            identity_map(self.dimension),
            jacobian_map=_constant_matrix_map(np.eye(self.dimension)),
        )
        for cid in self.charts:
            self.transitions.setdefault((cid, cid), ident)
        self.metric: dict[str, SmoothMap] = dict(metric or {})
        self.connection: dict[str, Callable[[np.ndarray], np.ndarray]] = dict(connection or {})
        self.name = name
        self.flat = flat

    def __repr__(self) -> str:
        return f"ChartedManifold({self.name or 'n=%d' % self.dimension}, charts={list(self.charts)})"

    @property
    def chart_ids(self) -> list[str]:
        return list(self.charts)

    @property
    def default_chart(self) -> str:
        return next(iter(self.charts))

    def chart(self, chart_id: str) -> Chart:
        try:
            return self.charts[chart_id]
        except KeyError:
            raise ValueError(f"unknown chart {chart_id!r}") from None

    def transition(self, from_chart: str, to_chart: str) -> Transition:
        try:
            return self.transitions[(from_chart, to_chart)]
        except KeyError:
            raise ValueError(f"no transition {from_chart!r} -> {to_chart!r}") from None

    def contains(self, point: Point, margin: float = 0.0) -> bool:
        return self.chart(point.chart_id).accepts(point.coords, margin)

    @property
    def has_metric(self) -> bool:
        return bool(self.metric)

    @property
    def has_connection(self) -> bool:
        return bool(self.connection)

    def metric_map(self, chart_id: str) -> SmoothMap:
        try:
            return self.metric[chart_id]
        except KeyError:
            raise ValueError(f"no metric in chart {chart_id!r}") from None

    def metric_at(self, point: Point) -> np.ndarray:
        n = self.dimension
        return self.metric_map(point.chart_id).value(point.coords).reshape(n, n)

    def christoffels(self, point: Point) -> np.ndarray:
        """Christoffel array ``Gamma[i, j, k]`` at the point, from the connection table."""
        try:
            rule = self.connection[point.chart_id]
        except KeyError:
            raise ValueError(f"no connection in chart {point.chart_id!r}") from None
        return rule(point.coords)


def _constant_matrix_map(mat: np.ndarray) -> SmoothMap:
    vals = [float(v) for v in np.asarray(mat).ravel()]
    n = np.asarray(mat).shape[1]
    return SmoothMap(n, len(vals), lambda js: list(vals), name="const")


# -- core operations --------------------------------------------------------


def pushforward_diffusor(
    phi: SmoothMap, L: Diffusor, to_chart: Optional[str] = None
) -> Diffusor:
    """Push a diffusor through a smooth map.

    Tangent vectors (``b = 0``) map to tangent vectors exactly, and the
    symmetric part transforms by Jacobian congruence.
    """
    coords = L.at.coords
    if phi.dimension_in != coords.shape[0]:
        raise ValueError(
            f"map expects {phi.dimension_in} inputs, diffusor lives in "
            f"{coords.shape[0]} dimensions"
        )
    jets = phi.jets(coords)
    a, b = L.first_order, L.second_order
    values = np.array([j.value for j in jets])
    J = np.stack([j.gradient for j in jets])
    a_out = np.array(
        [float(j.gradient @ a) + float(np.sum(b * j.hessian)) for j in jets]
    )
    b_out = J @ b @ J.T
    b_out = 0.5 * (b_out + b_out.T)
    at = Point(to_chart if to_chart is not None else L.at.chart_id, values)
    return Diffusor(at, a_out, b_out)


def symmetric_part(L: Diffusor) -> np.ndarray:
    """The symmetric 2-tensor ``b^{ij}`` read off the second-order coefficients."""
    return L.second_order.copy()


def apply_diffusor(L: Diffusor, f: SmoothMap) -> float:
    """Apply the operator to a scalar map: ``a^i d_i f + b^{ij} d2_{ij} f``."""
    if f.dimension_out != 1:
        raise ValueError("apply_diffusor needs a scalar-valued map")
    jet = f.jets(L.at.coords)[0]
    return float(L.first_order @ jet.gradient) + float(
        np.sum(L.second_order * jet.hessian)
    )


def transform_point(m: ChartedManifold, x: Point, to_chart: str) -> Point:
    """Map a point through the stored transition; the target predicate must accept."""
    target = m.chart(to_chart)
    if x.chart_id == to_chart:
        return x
    trans = m.transition(x.chart_id, to_chart)
    image = trans.map.value(x.coords)
    if not target.accepts(image):
        raise OutOfChartError(
            f"image of {x.chart_id!r} point {x.coords} lies outside chart {to_chart!r}"
        )
    return Point(to_chart, image)


def transform_vector(m: ChartedManifold, v: TangentVector, to_chart: str) -> TangentVector:
    """Transform components by the transition Jacobian."""
    if v.at.chart_id == to_chart:
        return v
    new_at = transform_point(m, v.at, to_chart)
    J = m.transition(v.at.chart_id, to_chart).jacobian(v.at.coords)
    return TangentVector(new_at, J @ v.components)
