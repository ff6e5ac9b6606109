"""Sample-path schemes: chart Euler-Maruyama and the exponential-map two-step.

The chart scheme discretizes the local Ito form directly.  The two-step
scheme first assembles the tangent-space increment

    dY = [V + (1/2) sum_l (G - G_std)(sigma_l)] dt + sum_l sigma_l dW^l

with coefficients frozen at the current point, then applies the connection's
exponential map to dY.  The exponential map integrates the geodesic
equation with classical RK4 on the deviation from the straight chart line,
so on a flat chart it reduces to a single vector addition and the two
schemes agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fields import VectorField
from .generators import (
    GeodesicGenerator,
    RegularityError,
    standard_ito_generator,
)
from .geometry import (
    CHART_MARGIN,
    ChartedManifold,
    OutOfChartError,
    Point,
    TangentVector,
    transform_point,
)
from .sde import IntrinsicSDE, difference_one_form, local_ito_coefficients

__all__ = [
    "LeftAtlasError",
    "NoiseStream",
    "SchemeConfig",
    "PathRecord",
    "em_step",
    "exp_map",
    "bd_step",
    "simulate_path",
    "simulate_terminal_batch",
    "error_study",
    "ErrorRow",
    "fit_order",
]


class LeftAtlasError(Exception):
    """No chart of the atlas accepts the current state."""


class NoiseStream:
    """Reproducible i.i.d. standard-normal increments.

    Backed by numpy's PCG64 bit generator with a 64-bit seed.  Identical
    seed, dimension and draw sequence give bit-identical increments.  The
    per-path substream convention is ``seed XOR path_index``.
    """

    def __init__(self, seed: int, p: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if p < 0:
            raise ValueError("p must be non-negative")
        self.seed = seed
        self.p = int(p)
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def normals(self) -> np.ndarray:
        """Next ``p`` standard normals."""
        return self._rng.standard_normal(self.p)

    def block(self, n_steps: int) -> np.ndarray:
        """The next ``n_steps`` rows of ``p`` normals, identical to repeated draws."""
        return self._rng.standard_normal((n_steps, self.p))

    def substream(self, path_index: int) -> "NoiseStream":
        return NoiseStream(self.seed ^ int(path_index), self.p)


@dataclass(frozen=True)
class SchemeConfig:
    """Time grid and scheme selection for path simulation."""

    scheme: str = "chart_em"
    dt: float = 1e-3
    t_final: float = 1.0
    geodesic_substeps: int = 16
    chart_switch_margin: float = CHART_MARGIN

    def __post_init__(self):
        if self.scheme not in ("chart_em", "bd"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.dt > self.t_final * (1 + 1e-12):
            raise ValueError("dt must not exceed t_final")
        if self.geodesic_substeps < 1:
            raise ValueError("geodesic_substeps must be at least 1")
        if self.chart_switch_margin < 0:
            raise ValueError("chart_switch_margin must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_final / self.dt - 1e-9))


@dataclass(frozen=True)
class PathRecord:
    times: np.ndarray
    states: list[Point]
    chart_switches: list[tuple[int, str, str]] = field(default_factory=list)


# -- single steps ------------------------------------------------------------


def em_step(sde: IntrinsicSDE, x: Point, dt: float, dW: np.ndarray) -> Point:
    """One Euler-Maruyama step of the local Ito form; chart unchanged."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    coeffs = local_ito_coefficients(sde, x)
    incr = coeffs.drift * dt + coeffs.diffusion @ np.asarray(dW, dtype=float)
    return Point(x.chart_id, x.coords + incr)


def _geodesic_acceleration(
    m: ChartedManifold, chart_id: str, coords: np.ndarray, vel: np.ndarray
) -> np.ndarray:
    gamma = m.christoffels(Point(chart_id, coords))
    return -((gamma @ vel) @ vel)


def exp_map(
    m: ChartedManifold,
    x: Point,
    v: TangentVector,
    substeps: int,
    margin: float = CHART_MARGIN,
) -> Point:
    """Follow the geodesic from ``x`` with initial velocity ``v`` for unit time.

    Integrates the deviation ``d(s) = pos(s) - (x + s v)`` with classical RK4
    in ``substeps`` fixed steps, switching charts mid-integration whenever the
    current chart's predicate rejects the state.  Zero acceleration gives
    ``x + v`` exactly.
    """
    if substeps < 1:
        raise ValueError("substeps must be at least 1")
    if not m.has_connection:
        raise ValueError("exponential map needs a connection on the manifold")
    n = m.dimension
    h = 1.0 / substeps
    chart = x.chart_id
    base = np.array(x.coords, dtype=float)
    v0 = np.array(v.components, dtype=float)
    d = np.zeros(n)
    u = np.zeros(n)
    j = 0  # substeps since the current anchor

    def accel(s: float, dd: np.ndarray, uu: np.ndarray) -> np.ndarray:
        return _geodesic_acceleration(m, chart, base + (s * v0 + dd), v0 + uu)

    for _ in range(substeps):
        s0 = j / substeps
        sh = (j + 0.5) / substeps
        s1 = (j + 1) / substeps
        k1d, k1u = u, accel(s0, d, u)
        k2d = u + (0.5 * h) * k1u
        k2u = accel(sh, d + (0.5 * h) * k1d, k2d)
        k3d = u + (0.5 * h) * k2u
        k3u = accel(sh, d + (0.5 * h) * k2d, k3d)
        k4d = u + h * k3u
        k4u = accel(s1, d + h * k3d, k4d)
        d = d + (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        j += 1
        pos = base + (j / substeps * v0 + d)
        if not m.chart(chart).accepts(pos, margin):
            vel = v0 + u
            here = Point(chart, pos)
            for cid in m.chart_ids:
                if cid == chart or (chart, cid) not in m.transitions:
                    continue
                try:
                    moved = transform_point(m, here, cid)
                except OutOfChartError:
                    continue
                if m.chart(cid).accepts(moved.coords, margin):
                    J = m.transition(chart, cid).jacobian(pos)
                    chart = cid
                    base = moved.coords
                    v0 = J @ vel
                    d = np.zeros(n)
                    u = np.zeros(n)
                    j = 0
                    break
            else:
                raise LeftAtlasError(
                    f"geodesic left the atlas at {pos} in chart {chart!r}"
                )
    return Point(chart, base + (j / substeps * v0 + d))


def bd_step(
    sde: IntrinsicSDE,
    x: Point,
    dt: float,
    dW: np.ndarray,
    substeps: int,
    margin: float = CHART_MARGIN,
    standard: Optional[GeodesicGenerator] = None,
) -> Point:
    """One step of the two-step scheme: frozen tangent increment, then exp map."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    m = sde.manifold
    if standard is None:
        standard = standard_ito_generator(m)
    n = m.dimension
    p = sde.p
    diffusion = np.zeros((n, p))
    shift_sum = np.zeros(n)
    for l, fld in enumerate(sde.noise):
        Y = fld.jet(x)
        diffusion[:, l] = Y.value
        shift_sum = shift_sum + difference_one_form(sde.generator, standard, Y).components
    drift = sde.drift.value(x) + 0.5 * shift_sum
    dY = drift * dt + diffusion @ np.asarray(dW, dtype=float)
    return exp_map(m, x, TangentVector(x, dY), substeps, margin)


# -- whole paths -------------------------------------------------------------


def _switch_chart_if_needed(
    m: ChartedManifold, x: Point, margin: float
) -> tuple[Point, Optional[tuple[str, str]]]:
    if m.chart(x.chart_id).accepts(x.coords, margin):
        return x, None
    for cid in m.chart_ids:
        if cid == x.chart_id or (x.chart_id, cid) not in m.transitions:
            continue
        try:
            moved = transform_point(m, x, cid)
        except OutOfChartError:
            continue
        if m.chart(cid).accepts(moved.coords, margin):
            return moved, (x.chart_id, cid)
    raise LeftAtlasError(f"no chart accepts state {x.coords} from {x.chart_id!r}")


def simulate_path(
    sde: IntrinsicSDE, cfg: SchemeConfig, x0: Point, noise: NoiseStream
) -> PathRecord:
    """Simulate one path; deterministic given (noise seed, config, start point).

    Chart switches happen only at step boundaries; the exponential map inside
    a two-step update may switch mid-step on its own.
    """
    m = sde.manifold
    if not m.contains(x0):
        raise OutOfChartError(f"start point {x0.coords} outside chart {x0.chart_id!r}")
    if noise.p != sde.p:
        raise ValueError(f"noise stream has p={noise.p}, SDE has p={sde.p}")
    N = cfg.n_steps
    sqrt_dt = math.sqrt(cfg.dt)
    standard = standard_ito_generator(m) if cfg.scheme == "bd" else None
    states = [x0]
    switches: list[tuple[int, str, str]] = []
    x = x0
    for k in range(N):
        dW = sqrt_dt * noise.normals() if sde.p else np.zeros(0)
        chart_before = x.chart_id
        try:
            if cfg.scheme == "chart_em":
                x = em_step(sde, x, cfg.dt, dW)
            else:
                x = bd_step(
                    sde, x, cfg.dt, dW, cfg.geodesic_substeps,
                    cfg.chart_switch_margin, standard,
                )
            x, _ = _switch_chart_if_needed(m, x, cfg.chart_switch_margin)
        except RegularityError as e:
            raise RegularityError(f"step {k}: {e}") from e
        except LeftAtlasError as e:
            raise LeftAtlasError(f"step {k}: {e}") from e
        if x.chart_id != chart_before:
            switches.append((k, chart_before, x.chart_id))
        states.append(x)
    times = np.arange(N + 1) * cfg.dt
    return PathRecord(times=times, states=states, chart_switches=switches)


# -- vectorized flat-chart fast path ----------------------------------------


def _batchable(sde: IntrinsicSDE) -> bool:
    m = sde.manifold
    if len(m.charts) != 1:
        return False
    g = sde.generator
    if not (isinstance(g, GeodesicGenerator) and g.flat and g.external is None):
        return False
    chart = m.default_chart
    for fld in (sde.drift, *sde.noise):
        if not isinstance(fld, VectorField):
            return False
        if fld.batch_fn is None or fld.chart_id != chart:
            return False
    return True


def _increment_tensor(
    base: NoiseStream, n_paths: int, n_steps: int, scale: float
) -> np.ndarray:
    out = np.empty((n_paths, n_steps, base.p))
    for i in range(n_paths):
        out[i] = base.substream(i).block(n_steps)
    return scale * out


def _batch_em_terminal(
    sde: IntrinsicSDE, dt: float, x0: Point, dW: np.ndarray
) -> np.ndarray:
    """All-paths Euler-Maruyama on a single flat chart; (n_paths, n) terminals.

    Matches per-path ``em_step`` arithmetic: the generator corrections vanish
    on a flat chart, and each increment is assembled as drift*dt plus the
    accumulated noise columns.
    """
    n_paths, n_steps, p = dW.shape
    drift_fn = sde.drift.batch_fn
    noise_fns = [f.batch_fn for f in sde.noise]
    X = np.tile(np.asarray(x0.coords, dtype=float), (n_paths, 1))
    for k in range(n_steps):
        incr = drift_fn(X) * dt
        if p:
            acc = noise_fns[0](X) * dW[:, k, 0][:, None]
            for l in range(1, p):
                acc = acc + noise_fns[l](X) * dW[:, k, l][:, None]
            incr = incr + acc
        X = X + incr
    return X


def simulate_terminal_batch(
    sde: IntrinsicSDE, cfg: SchemeConfig, x0: Point, seed: int, n_paths: int
) -> np.ndarray:
    """Terminal coordinates of ``n_paths`` paths, per-path substreams.

    Vectorizes across paths on single-chart flat manifolds (where both
    schemes coincide); otherwise falls back to per-path simulation.
    Results are keyed by path index exactly as ``simulate_path`` with
    ``NoiseStream(seed ^ i, p)`` would produce them.
    """
    if _batchable(sde):
        dW = _increment_tensor(
            NoiseStream(seed, sde.p), n_paths, cfg.n_steps, math.sqrt(cfg.dt)
        )
        return _batch_em_terminal(sde, cfg.dt, x0, dW)
    base = NoiseStream(seed, sde.p)
    rows = []
    for i in range(n_paths):
        rec = simulate_path(sde, cfg, x0, base.substream(i))
        terminal = rec.states[-1]
        if terminal.chart_id != x0.chart_id:
            terminal = transform_point(sde.manifold, terminal, x0.chart_id)
        rows.append(terminal.coords)
    return np.stack(rows)


# -- convergence study -------------------------------------------------------


@dataclass(frozen=True)
class ErrorRow:
    dt: float
    strong: float
    weak: float


def _advance_with_increments(
    sde: IntrinsicSDE,
    cfg: SchemeConfig,
    dt: float,
    x0: Point,
    dW_rows: np.ndarray,
    standard: Optional[GeodesicGenerator],
) -> Point:
    x = x0
    m = sde.manifold
    for k in range(dW_rows.shape[0]):
        if cfg.scheme == "chart_em":
            x = em_step(sde, x, dt, dW_rows[k])
        else:
            x = bd_step(
                sde, x, dt, dW_rows[k], cfg.geodesic_substeps,
                cfg.chart_switch_margin, standard,
            )
        x, _ = _switch_chart_if_needed(m, x, cfg.chart_switch_margin)
    return x


def error_study(
    sde: IntrinsicSDE,
    cfgs: Sequence[SchemeConfig],
    x0: Point,
    reference_dt: float,
    n_paths: int,
    seed: int,
) -> list[ErrorRow]:
    """Strong/weak errors of each grid against a coupled fine reference.

    Coarse-grid increments are sums of the fine-grid increments of the same
    substream, so every grid drives the same Brownian paths.  Strong error is
    the mean terminal coordinate distance; weak error compares the means of
    the first coordinate.
    """
    if not cfgs:
        raise ValueError("need at least one scheme config")
    T = cfgs[0].t_final
    scheme = cfgs[0].scheme
    for c in cfgs:
        if abs(c.t_final - T) > 1e-12:
            raise ValueError("all configs must share t_final")
        if c.scheme != scheme:
            raise ValueError("all configs must share the scheme")
    n_ref = _exact_steps(T, reference_dt)
    ratios = []
    for c in cfgs:
        r = c.dt / reference_dt
        if abs(r - round(r)) > 1e-9 or round(r) < 1:
            raise ValueError(
                f"grid incompatibility: reference dt {reference_dt} does not divide {c.dt}"
            )
        _exact_steps(T, c.dt)
        ratios.append(int(round(r)))

    if _batchable(sde):
        dW_fine = _increment_tensor(
            NoiseStream(seed, sde.p), n_paths, n_ref, math.sqrt(reference_dt)
        )
        X_ref = _batch_em_terminal(sde, reference_dt, x0, dW_fine)
        rows = []
        for c, r in zip(cfgs, ratios):
            n_c = n_ref // r
            if sde.p:
                dW_c = dW_fine.reshape(n_paths, n_c, r, sde.p).sum(axis=2)
            else:
                dW_c = np.zeros((n_paths, n_c, 0))
            X_c = _batch_em_terminal(sde, c.dt, x0, dW_c)
            rows.append(_error_row(c.dt, X_c, X_ref))
        return rows

    base = NoiseStream(seed, sde.p)
    standard = standard_ito_generator(sde.manifold) if scheme == "bd" else None
    ref_terms = np.zeros((n_paths, sde.manifold.dimension))
    coarse_terms = [np.zeros_like(ref_terms) for _ in cfgs]
    for i in range(n_paths):
        fine = base.substream(i).block(n_ref) * math.sqrt(reference_dt)
        ref_cfg = SchemeConfig(
            scheme=scheme, dt=reference_dt, t_final=T,
            geodesic_substeps=cfgs[0].geodesic_substeps,
            chart_switch_margin=cfgs[0].chart_switch_margin,
        )
        x_ref = _advance_with_increments(sde, ref_cfg, reference_dt, x0, fine, standard)
        ref_terms[i] = _coords_in_chart(sde.manifold, x_ref, x0.chart_id)
        for ci, (c, r) in enumerate(zip(cfgs, ratios)):
            n_c = n_ref // r
            dW_c = fine.reshape(n_c, r, sde.p).sum(axis=1) if sde.p else np.zeros((n_c, 0))
            x_c = _advance_with_increments(sde, c, c.dt, x0, dW_c, standard)
            coarse_terms[ci][i] = _coords_in_chart(sde.manifold, x_c, x0.chart_id)
    return [
        _error_row(c.dt, coarse_terms[ci], ref_terms)
        for ci, c in enumerate(cfgs)
    ]


def _coords_in_chart(m: ChartedManifold, x: Point, chart_id: str) -> np.ndarray:
    if x.chart_id == chart_id:
        return x.coords
    return transform_point(m, x, chart_id).coords


def _exact_steps(T: float, dt: float) -> int:
    n = T / dt
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"dt {dt} does not divide t_final {T}")
    return int(round(n))


def _error_row(dt: float, X: np.ndarray, X_ref: np.ndarray) -> ErrorRow:
    strong = float(np.mean(np.linalg.norm(X - X_ref, axis=1)))
    weak = float(abs(np.mean(X[:, 0]) - np.mean(X_ref[:, 0])))
    return ErrorRow(dt=dt, strong=strong, weak=weak)


def fit_order(dts: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if dts.shape != errors.shape or dts.size < 2:
        raise ValueError("need matching dt/error sequences of length >= 2")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive to fit an order")
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
