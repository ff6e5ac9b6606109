"""Numerical consistency checks run by the CLI and the test suite.

Three families: the generator defining property (second-order part equals
the squared field), coordinate invariance of generation under chart change,
and functoriality of the diffusor pushforward under composed transitions.
All return worst-case errors over sampled points, relative to the larger of
one and the compared magnitude.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .expr import parse_expression_list, vector_map
from .fields import VectorField
from .generators import DiffusionGenerator
from .geometry import (
    ChartedManifold,
    Diffusor,
    Point,
    pushforward_diffusor,
    symmetric_part,
    transform_point,
)
from .jets import compose

__all__ = [
    "sample_overlap_points",
    "default_check_fields",
    "defining_property_error",
    "invariance_error",
    "functoriality_error",
    "run_checks",
]


def _rel(diff: float, scale: float) -> float:
    return diff / max(1.0, scale)


def sample_overlap_points(
    m: ChartedManifold, rng: np.random.Generator, count: int
) -> list[tuple[Point, str]]:
    """Random points in a two-chart overlap, paired with the other chart's id."""
    name = m.name
    out: list[tuple[Point, str]] = []
    for _ in range(count):
        if name == "euclidean_warped2":
            coords = rng.uniform(-1.5, 1.5, size=2)
            out.append((Point("cart", coords), "warp"))
        elif name == "polar2":
            r = rng.uniform(0.5, 2.0)
            theta = rng.uniform(-2.5, 2.5)
            out.append((Point("polar", np.array([r, theta])), "cart"))
        elif name == "sphere2":
            radius = rng.uniform(0.5, 2.0)
            angle = rng.uniform(-np.pi, np.pi)
            coords = radius * np.array([np.cos(angle), np.sin(angle)])
            out.append((Point("north", coords), "south"))
        elif name == "circle":
            theta = rng.uniform(0.3, np.pi - 0.3) * rng.choice([-1.0, 1.0])
            out.append((Point("main", np.array([theta])), "wrap"))
        else:
            raise ValueError(f"no overlap sampler for manifold {name!r}")
    return out


def default_check_fields(m: ChartedManifold, chart_id: str) -> list[VectorField]:
    """Polynomial test fields with nonconstant Jacobians, in the given chart."""
    n = m.dimension
    if n == 1:
        texts = ["0.7 + 0.3*sin(x1)"]
    else:
        rotated = ", ".join(f"x{(i + 1) % n + 1}" for i in range(n))
        bent = ", ".join(f"0.3 + 0.1*x{i + 1}^2" for i in range(n))
        texts = [rotated, bent]
    fields = []
    for t in texts:
        exprs = parse_expression_list(t, n)
        fields.append(VectorField(m, chart_id, vector_map(exprs, name=t)))
    return fields


def defining_property_error(gen: DiffusionGenerator, field: VectorField, x: Point) -> float:
    Y = field.jet(x)
    d = gen.generate(Y)
    target = np.outer(Y.value, Y.value)
    return _rel(
        float(np.max(np.abs(symmetric_part(d) - target))),
        float(np.max(np.abs(target))),
    )


def invariance_error(
    m: ChartedManifold,
    gen: DiffusionGenerator,
    field: VectorField,
    x: Point,
    to_chart: str,
) -> float:
    """Pushforward of generation in one chart vs generation in the other."""
    d_here = gen.generate(field.jet(x))
    trans = m.transition(x.chart_id, to_chart)
    pushed = pushforward_diffusor(trans.map, d_here, to_chart)
    x_there = transform_point(m, x, to_chart)
    direct = gen.generate(field.jet(x_there))
    scale = max(
        float(np.max(np.abs(direct.first_order))),
        float(np.max(np.abs(direct.second_order))),
    )
    diff = max(
        float(np.max(np.abs(pushed.first_order - direct.first_order))),
        float(np.max(np.abs(pushed.second_order - direct.second_order))),
    )
    return _rel(diff, scale)


def functoriality_error(m: ChartedManifold, L: Diffusor, via_chart: str) -> float:
    """Push through two transitions vs pushing through their composition."""
    there = m.transition(L.at.chart_id, via_chart)
    back = m.transition(via_chart, L.at.chart_id)
    step1 = pushforward_diffusor(there.map, L, via_chart)
    chained = pushforward_diffusor(back.map, step1, L.at.chart_id)
    composite = compose(back.map, there.map)
    direct = pushforward_diffusor(composite, L, L.at.chart_id)
    scale = max(
        float(np.max(np.abs(direct.first_order))),
        float(np.max(np.abs(direct.second_order))),
    )
    diff = max(
        float(np.max(np.abs(chained.first_order - direct.first_order))),
        float(np.max(np.abs(chained.second_order - direct.second_order))),
    )
    return _rel(diff, scale)


def run_checks(
    m: ChartedManifold,
    gen: DiffusionGenerator,
    fields: Sequence[VectorField],
    n_points: int,
    seed: int,
) -> dict[str, float]:
    """Worst-case errors of all three check families at random overlap points."""
    rng = np.random.default_rng(seed)
    samples = sample_overlap_points(m, rng, n_points)
    defining = 0.0
    invariance = 0.0
    functorial = 0.0
    for x, other in samples:
        for field in fields:
            defining = max(defining, defining_property_error(gen, field, x))
            invariance = max(invariance, invariance_error(m, gen, field, x, other))
            Y = field.jet(x)
            L = gen.generate(Y)
            functorial = max(functorial, functoriality_error(m, L, other))
    return {
        "defining_property_max_error": defining,
        "coordinate_invariance_max_error": invariance,
        "pushforward_functoriality_max_error": functorial,
    }
