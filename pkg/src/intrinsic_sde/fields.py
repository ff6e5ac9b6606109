"""Chart-aware geometric objects: vector fields, scalars, 2-tensors, Lagrangians.

Each object stores a coordinate expression in a home chart and produces the
coordinate expression in any other chart on demand, using the atlas's
transition maps.  Positions transfer by plain composition; velocities and
tensor slots additionally use the transition's Jacobian entries, so the
transferred expressions carry exact jets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .geometry import ChartedManifold, OutOfChartError, Point
from .jets import Jet2, SmoothMap, compose

__all__ = [
    "VectorFieldJet",
    "VectorField",
    "PointwiseVectorField",
    "ZeroVectorField",
    "constant_field",
    "ScalarField",
    "CovariantTensorField",
    "Lagrangian",
    "kinetic_lagrangian",
]


@dataclass(frozen=True)
class VectorFieldJet:
    """A vector field's value and (optional) coordinate Jacobian at a point."""

    at: Point
    value: np.ndarray
    jacobian: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))
        if self.jacobian is not None:
            object.__setattr__(self, "jacobian", np.asarray(self.jacobian, dtype=float))


class VectorField:
    """Vector field given by a component map in a home chart.

    Evaluation at a point of another chart transfers the field: the value
    picks up the transition Jacobian, and the Jacobian of the transferred
    components additionally involves the transition's second derivatives.
    Both come out of the transition jets, so no accuracy is lost.

    ``batch_fn``, when given, evaluates components on a whole ``(m, n)``
    batch of home-chart coordinates at once; single-chart integrators use it
    to vectorize across sample paths.
    """

    def __init__(
        self,
        manifold: ChartedManifold,
        chart_id: str,
        map: SmoothMap,
        batch_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        n = manifold.dimension
        if map.dimension_in != n or map.dimension_out != n:
            raise ValueError(f"vector field map must be {n}->{n}")
        manifold.chart(chart_id)
        self.manifold = manifold
        self.chart_id = chart_id
        self.map = map
        self.batch_fn = batch_fn

    def jet(self, point: Point) -> VectorFieldJet:
        m = self.manifold
        if point.chart_id == self.chart_id:
            jets = self.map.jets(point.coords)
            return VectorFieldJet(
                point,
                np.array([j.value for j in jets]),
                np.stack([j.gradient for j in jets]),
            )
        back = m.transition(point.chart_id, self.chart_id)
        fwd = m.transition(self.chart_id, point.chart_id)
        # The chart predicate is a switching-policy device; field transfer only
        # needs the transition's mathematical domain, so check finiteness, not
        # the predicate.
        x_home = back.map.value(point.coords)
        if not np.all(np.isfinite(x_home)):
            raise OutOfChartError(
                f"point {point.coords} in {point.chart_id!r} has no finite image "
                f"in the field's home chart {self.chart_id!r}"
            )
        sigma_jets = self.map.jets(x_home)
        sigma = np.array([j.value for j in sigma_jets])
        dsigma = np.stack([j.gradient for j in sigma_jets])
        t_jets = fwd.map.jets(x_home)
        J = np.stack([j.gradient for j in t_jets])
        H_dot_sigma = np.stack([j.hessian @ sigma for j in t_jets])
        J_back = back.jacobian(point.coords)
        value = J @ sigma
        jac = (H_dot_sigma + J @ dsigma) @ J_back
        return VectorFieldJet(point, value, jac)

    def value(self, point: Point) -> np.ndarray:
        if point.chart_id == self.chart_id:
            return self.map.value(point.coords)
        return self.jet(point).value


class PointwiseVectorField:
    """Field defined by a per-point value rule; no Jacobian available."""

    def __init__(self, manifold: ChartedManifold, fn: Callable[[Point], np.ndarray]):
        self.manifold = manifold
        self.fn = fn

    def jet(self, point: Point) -> VectorFieldJet:
        return VectorFieldJet(point, self.fn(point), None)

    def value(self, point: Point) -> np.ndarray:
        return np.asarray(self.fn(point), dtype=float)


class ZeroVectorField:
    """The zero section; zero in every chart."""

    def __init__(self, manifold: ChartedManifold):
        self.manifold = manifold

    def jet(self, point: Point) -> VectorFieldJet:
        n = self.manifold.dimension
        return VectorFieldJet(point, np.zeros(n), np.zeros((n, n)))

    def value(self, point: Point) -> np.ndarray:
        return np.zeros(self.manifold.dimension)


def constant_field(
    manifold: ChartedManifold, chart_id: str, components: Sequence[float]
) -> VectorField:
    comps = [float(c) for c in components]
    n = manifold.dimension
    vec = np.array(comps)
    return VectorField(
        manifold,
        chart_id,
        SmoothMap(n, n, lambda js: list(comps), name="const"),
        batch_fn=lambda X: np.broadcast_to(vec, X.shape).copy(),
    )


class _ChartMapCache:
    """Shared machinery: home-chart expression plus per-chart transfers."""

    def __init__(self, manifold: ChartedManifold, chart_id: str, map: SmoothMap):
        manifold.chart(chart_id)
        self.manifold = manifold
        self.chart_id = chart_id
        self.map = map
        self._cache: dict[str, SmoothMap] = {chart_id: map}

    def map_for(self, chart_id: str) -> SmoothMap:
        try:
            return self._cache[chart_id]
        except KeyError:
            built = self._build(chart_id)
            self._cache[chart_id] = built
            return built

    def _build(self, chart_id: str) -> SmoothMap:
        raise NotImplementedError


class ScalarField(_ChartMapCache):
    """Scalar function on the manifold, e.g. a potential energy."""

    def __init__(self, manifold: ChartedManifold, chart_id: str, map: SmoothMap):
        if map.dimension_out != 1 or map.dimension_in != manifold.dimension:
            raise ValueError(f"scalar field map must be {manifold.dimension}->1")
        super().__init__(manifold, chart_id, map)

    def _build(self, chart_id: str) -> SmoothMap:
        back = self.manifold.transition(chart_id, self.chart_id)
        return compose(self.map, back.map)

    def value(self, point: Point) -> float:
        return float(self.map_for(point.chart_id).value(point.coords)[0])


class CovariantTensorField(_ChartMapCache):
    """Type-(0,2) tensor field, components row-major: metric or quadratic form.

    Transfer to another chart is the Jacobian congruence
    ``alpha'_{ij} = K_{ki} alpha_{kl} K_{lj}`` with ``K`` the Jacobian of the
    transition back to the home chart; it needs the transition's
    ``jacobian_map``.
    """

    def __init__(self, manifold: ChartedManifold, chart_id: str, map: SmoothMap):
        n = manifold.dimension
        if map.dimension_in != n or map.dimension_out != n * n:
            raise ValueError(f"tensor field map must be {n}->{n * n}")
        super().__init__(manifold, chart_id, map)

    @classmethod
    def from_manifold_metric(cls, manifold: ChartedManifold) -> "CovariantTensorField":
        """Wrap the manifold's own per-chart metric tables."""
        if not manifold.has_metric:
            raise ValueError("manifold carries no metric")
        home = next(iter(manifold.metric))
        obj = cls(manifold, home, manifold.metric[home])
        for cid, mp in manifold.metric.items():
            obj._cache[cid] = mp
        return obj

    def _build(self, chart_id: str) -> SmoothMap:
        m = self.manifold
        n = m.dimension
        back = m.transition(chart_id, self.chart_id)
        if back.jacobian_map is None:
            raise ValueError(
                f"transition {chart_id!r}->{self.chart_id!r} has no jacobian_map; "
                "cannot transfer a 2-tensor"
            )
        home_fn = self.map.fn
        pos_fn = back.map.fn
        jac_fn = back.jacobian_map.fn

        def fn(js: Sequence[Jet2]):
            xs = list(pos_fn(js))
            A = list(home_fn(xs))
            K = list(jac_fn(js))
            out = []
            for i in range(n):
                for j in range(n):
                    acc = None
                    for k in range(n):
                        for l in range(n):
                            term = K[k * n + i] * A[k * n + l] * K[l * n + j]
                            acc = term if acc is None else acc + term
                    out.append(acc)
            return out

        return SmoothMap(n, n * n, fn, name=f"{self.map.name}@{chart_id}")

    def matrix(self, point: Point) -> np.ndarray:
        n = self.manifold.dimension
        return self.map_for(point.chart_id).value(point.coords).reshape(n, n)


class Lagrangian(_ChartMapCache):
    """Function on the tangent bundle, coordinates ``(x_1..x_n, v_1..v_n)``.

    Transfer between charts composes with the transition's tangent lift, so
    the expression in every chart describes the same function of a geometric
    position-velocity pair.
    """

    def __init__(self, manifold: ChartedManifold, chart_id: str, map: SmoothMap):
        n = manifold.dimension
        if map.dimension_in != 2 * n or map.dimension_out != 1:
            raise ValueError(f"Lagrangian map must be {2 * n}->1")
        super().__init__(manifold, chart_id, map)

    def _build(self, chart_id: str) -> SmoothMap:
        back = self.manifold.transition(chart_id, self.chart_id)
        return compose(self.map, back.tangent_lift)

    def value(self, point: Point, velocity: np.ndarray) -> float:
        z = np.concatenate([point.coords, np.asarray(velocity, dtype=float)])
        return float(self.map_for(point.chart_id).value(z)[0])


def kinetic_lagrangian(
    metric: CovariantTensorField, potential: Optional[ScalarField] = None
) -> Lagrangian:
    """Build ``L(x, v) = v^T g(x) v / 2 - Phi(x)`` with per-chart expressions."""
    m = metric.manifold
    n = m.dimension

    def chart_map(chart_id: str) -> SmoothMap:
        g_fn = metric.map_for(chart_id).fn
        phi_fn = potential.map_for(chart_id).fn if potential is not None else None

        def fn(js: Sequence[Jet2]):
            xs, vs = js[:n], js[n:]
            g = list(g_fn(xs))
            acc = None
            for i in range(n):
                for j in range(n):
                    term = g[i * n + j] * vs[i] * vs[j]
                    acc = term if acc is None else acc + term
            out = acc * 0.5
            if phi_fn is not None:
                out = out - phi_fn(xs)[0]
            return [out]

        return SmoothMap(2 * n, 1, fn, name=f"kinetic@{chart_id}")

    home = metric.chart_id
    lag = Lagrangian(m, home, chart_map(home))
    # Pre-populate charts where the metric has an explicit expression; the
    # generic lift-based transfer remains the fallback for the rest.
    for cid in metric._cache:
        if cid != home:
            lag._cache[cid] = chart_map(cid)
    return lag
