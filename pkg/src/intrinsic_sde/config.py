"""Run configuration: flat key-value text with section headers.

Sections: ``[manifold]`` (builtin name + params), ``[generator]`` (kind plus
its payload expressions), ``[sde]`` (drift and noise field expressions, all
in one named chart), ``[initial]``, ``[scheme]``, ``[run]``, and the
command-specific ``[generator2]``, ``[compare]``, ``[convergence]`` and
``[check]``.  Expressions use the language in :mod:`intrinsic_sde.expr`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expr import ExpressionError, batch_evaluator, parse_expression_list, vector_map
from .fields import CovariantTensorField, Lagrangian, ScalarField, VectorField
from .generators import (
    DiffusionGenerator,
    GeodesicGenerator,
    KineticPotentialGenerator,
    LagrangianGenerator,
    QuadraticFormGenerator,
    StratonovichGenerator,
    christoffel_from_metric,
    standard_ito_generator,
)
from .geometry import ChartedManifold, Point
from .integrators import SchemeConfig
from .manifolds import make
from .sde import IntrinsicSDE

__all__ = ["ConfigError", "ConvergenceSetup", "RunSetup", "load_run"]


class ConfigError(Exception):
    """The config file is malformed or inconsistent."""


@dataclass(frozen=True)
class ConvergenceSetup:
    dts: list[float]
    reference_dt: float
    n_paths: int


@dataclass
class RunSetup:
    """Everything a CLI command needs, built from one config file."""

    manifold: ChartedManifold
    sde: IntrinsicSDE
    scheme: SchemeConfig
    x0: Point
    seed: int
    n_paths: int
    field_chart: str
    generator2: Optional[DiffusionGenerator] = None
    compare_convert: bool = True
    convergence: Optional[ConvergenceSetup] = None
    check_points: int = 50


def _section(cp: configparser.ConfigParser, name: str, required: bool = False) -> dict:
    if cp.has_section(name):
        return dict(cp.items(name))
    if required:
        raise ConfigError(f"missing [{name}] section")
    return {}


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as e:
        raise ConfigError(f"bad number list for {key!r}: {e}") from e


def _float(sec: dict, key: str, default: Optional[float] = None) -> float:
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        return float(sec[key])
    except ValueError as e:
        raise ConfigError(f"bad number for {key!r}: {sec[key]!r}") from e


def _int(sec: dict, key: str, default: Optional[int] = None) -> int:
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        return int(sec[key])
    except ValueError as e:
        raise ConfigError(f"bad integer for {key!r}: {sec[key]!r}") from e


def _build_manifold(sec: dict) -> ChartedManifold:
    name = sec.get("name")
    if not name:
        raise ConfigError("missing manifold name")
    params = {}
    if "n" in sec:
        params["n"] = _int(sec, "n")
    try:
        return make(name, **params)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _vector_exprs(text: str, n: int, key: str, n_velocities: int = 0):
    try:
        exprs = parse_expression_list(text, n, n_velocities)
    except ExpressionError as e:
        raise ConfigError(f"bad expression for {key!r}: {e}") from e
    return exprs


def _tensor_field(
    m: ChartedManifold, chart: str, text: str, key: str
) -> CovariantTensorField:
    n = m.dimension
    exprs = _vector_exprs(text, n, key)
    if len(exprs) != n * n:
        raise ConfigError(f"{key!r} needs {n * n} entries (row-major), got {len(exprs)}")
    return CovariantTensorField(m, chart, vector_map(exprs, name=key))


def _build_generator(
    sec: dict, m: ChartedManifold, chart: str
) -> DiffusionGenerator:
    kind = sec.get("kind", "").strip().lower()
    n = m.dimension
    if kind == "stratonovich":
        return StratonovichGenerator()
    if kind == "geodesic":
        if "metric" in sec:
            tensor = _tensor_field(m, chart, sec["metric"], "metric")
            return GeodesicGenerator(
                lambda point: christoffel_from_metric(
                    tensor.map_for(point.chart_id), point.coords
                )
            )
        try:
            return standard_ito_generator(m)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    if kind == "lagrangian":
        if "lagrangian" not in sec:
            raise ConfigError("lagrangian kind needs a 'lagrangian' expression")
        exprs = _vector_exprs(sec["lagrangian"], n, "lagrangian", n_velocities=n)
        if len(exprs) != 1:
            raise ConfigError("'lagrangian' must be a single expression")
        lag = Lagrangian(m, chart, vector_map(exprs, name="L"))
        tol = _float(sec, "regularity_tolerance", -1.0)
        return LagrangianGenerator(lag, None if tol < 0 else tol)
    if kind == "quadratic_form":
        if "alpha" not in sec:
            raise ConfigError("quadratic_form kind needs an 'alpha' expression list")
        return QuadraticFormGenerator(_tensor_field(m, chart, sec["alpha"], "alpha"))
    if kind == "kinetic_potential":
        if "metric" in sec:
            metric = _tensor_field(m, chart, sec["metric"], "metric")
        elif m.has_metric:
            metric = CovariantTensorField.from_manifold_metric(m)
        else:
            raise ConfigError("kinetic_potential kind needs a metric")
        potential = None
        if "potential" in sec:
            exprs = _vector_exprs(sec["potential"], n, "potential")
            if len(exprs) != 1:
                raise ConfigError("'potential' must be a single expression")
            potential = ScalarField(m, chart, vector_map(exprs, name="Phi"))
        return KineticPotentialGenerator(metric, potential)
    raise ConfigError(f"unknown generator kind {sec.get('kind')!r}")


def _build_fields(
    sec: dict, m: ChartedManifold, chart: str
) -> tuple[VectorField, list[VectorField]]:
    n = m.dimension
    if "drift" not in sec:
        raise ConfigError("missing 'drift' in [sde]")
    drift_exprs = _vector_exprs(sec["drift"], n, "drift")
    if len(drift_exprs) != n:
        raise ConfigError(f"'drift' needs {n} components, got {len(drift_exprs)}")
    drift = VectorField(
        m, chart, vector_map(drift_exprs, name="V"), batch_fn=batch_evaluator(drift_exprs)
    )
    noise = []
    index = 1
    while f"noise{index}" in sec:
        key = f"noise{index}"
        exprs = _vector_exprs(sec[key], n, key)
        if len(exprs) != n:
            raise ConfigError(f"{key!r} needs {n} components, got {len(exprs)}")
        noise.append(
            VectorField(m, chart, vector_map(exprs, name=key), batch_fn=batch_evaluator(exprs))
        )
        index += 1
    stray = [k for k in sec if k.startswith("noise") and k not in
             {f"noise{i + 1}" for i in range(len(noise))}]
    if stray:
        raise ConfigError(f"noise fields must be numbered contiguously from 1; found {stray}")
    return drift, noise


def load_run(path: str, seed_override: Optional[int] = None) -> RunSetup:
    """Parse a config file and build the runnable objects."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot parse config {path!r}: {e}") from e

    m = _build_manifold(_section(cp, "manifold", required=True))
    sde_sec = _section(cp, "sde", required=True)
    chart = sde_sec.get("chart", m.default_chart)
    if chart not in m.charts:
        raise ConfigError(f"unknown chart {chart!r} in [sde]")

    gen_sec = _section(cp, "generator", required=True)
    gen_chart = gen_sec.get("chart", chart)
    if gen_chart not in m.charts:
        raise ConfigError(f"unknown chart {gen_chart!r} in [generator]")
    generator = _build_generator(gen_sec, m, gen_chart)

    drift, noise = _build_fields(sde_sec, m, chart)
    sde = IntrinsicSDE(m, drift, noise, generator)

    init_sec = _section(cp, "initial", required=True)
    init_chart = init_sec.get("chart", chart)
    if init_chart not in m.charts:
        raise ConfigError(f"unknown chart {init_chart!r} in [initial]")
    coords = _floats(init_sec.get("coords", ""), "coords") if init_sec.get("coords") else None
    if coords is None or len(coords) != m.dimension:
        raise ConfigError(f"'coords' needs {m.dimension} numbers")
    x0 = Point(init_chart, np.array(coords))
    if not m.contains(x0):
        raise ConfigError(f"initial coords {coords} outside chart {init_chart!r}")

    sch_sec = _section(cp, "scheme")
    try:
        scheme = SchemeConfig(
            scheme=sch_sec.get("scheme", "chart_em"),
            dt=_float(sch_sec, "dt", 1e-3),
            t_final=_float(sch_sec, "t_final", 1.0),
            geodesic_substeps=_int(sch_sec, "geodesic_substeps", 16),
            chart_switch_margin=_float(sch_sec, "chart_switch_margin", 1e-6),
        )
    except ValueError as e:
        raise ConfigError(f"bad [scheme]: {e}") from e

    run_sec = _section(cp, "run")
    seed = _int(run_sec, "seed", 0) if seed_override is None else int(seed_override)
    n_paths = _int(run_sec, "n_paths", 1)
    if n_paths < 1:
        raise ConfigError("n_paths must be at least 1")

    setup = RunSetup(
        manifold=m,
        sde=sde,
        scheme=scheme,
        x0=x0,
        seed=seed,
        n_paths=n_paths,
        field_chart=chart,
    )

    if cp.has_section("generator2"):
        g2 = _section(cp, "generator2")
        g2_chart = g2.get("chart", chart)
        if g2_chart not in m.charts:
            raise ConfigError(f"unknown chart {g2_chart!r} in [generator2]")
        setup.generator2 = _build_generator(g2, m, g2_chart)

    cmp_sec = _section(cp, "compare")
    if "convert" in cmp_sec:
        text = cmp_sec["convert"].strip().lower()
        if text not in ("true", "false"):
            raise ConfigError("'convert' must be true or false")
        setup.compare_convert = text == "true"

    if cp.has_section("convergence"):
        conv = _section(cp, "convergence")
        dts = _floats(conv.get("dts", ""), "dts") if conv.get("dts") else []
        setup.convergence = ConvergenceSetup(
            dts=dts,
            reference_dt=_float(conv, "reference_dt"),
            n_paths=_int(conv, "n_paths", n_paths),
        )

    check_sec = _section(cp, "check")
    setup.check_points = _int(check_sec, "n_points", 50)
    return setup
