"""Command-line front end.

    sde simulate    <config> [--seed N] [--out DIR] [--workers K]
    sde compare     <config> [--seed N] [--out DIR]
    sde check       <config> [--seed N]
    sde convergence <config> [--seed N] [--out DIR]

Exit codes are a stable contract: 0 success, 2 config error, 3 regularity
failure, 4 the state left the atlas, 5 a comparison or consistency check
exceeded its threshold.  All numeric output uses shortest round-trip float
formatting, so identical config + seed gives byte-identical files,
independent of the worker count.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .checks import default_check_fields, run_checks
from .config import ConfigError, RunSetup, load_run
from .generators import RegularityError
from .geometry import OutOfChartError, transform_point
from .integrators import (
    LeftAtlasError,
    NoiseStream,
    PathRecord,
    SchemeConfig,
    error_study,
    fit_order,
    simulate_path,
)
from .sde import IntrinsicSDE, convert_generator

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGULARITY = 3
EXIT_ATLAS = 4
EXIT_COMPARE = 5

COMPARE_TOLERANCE = 1e-9
CHECK_TOLERANCE = 1e-9


def _fmt(x: float) -> str:
    return repr(float(x))


def _run_paths(setup: RunSetup, workers: int) -> list[PathRecord]:
    base = NoiseStream(setup.seed, setup.sde.p)

    def one(i: int) -> PathRecord:
        return simulate_path(setup.sde, setup.scheme, setup.x0, base.substream(i))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(setup.n_paths)))
    return [one(i) for i in range(setup.n_paths)]


def _write_lines(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _paths_csv_lines(records: list[PathRecord], n: int) -> list[str]:
    header = "path_id,step,t,chart," + ",".join(f"c{i + 1}" for i in range(n))
    lines = [header]
    for pid, rec in enumerate(records):
        for k, pt in enumerate(rec.states):
            coords = ",".join(_fmt(c) for c in pt.coords)
            lines.append(f"{pid},{k},{_fmt(rec.times[k])},{pt.chart_id},{coords}")
    return lines


def _summary_lines(setup: RunSetup, records: list[PathRecord]) -> list[str]:
    m = setup.manifold
    terminals = []
    chart = setup.x0.chart_id
    mixed = False
    for rec in records:
        pt = rec.states[-1]
        if pt.chart_id != chart:
            try:
                pt = transform_point(m, pt, chart)
            except (OutOfChartError, ValueError):
                mixed = True
        terminals.append(pt.coords)
    X = np.stack(terminals)
    mean = X.mean(axis=0)
    if len(records) > 1:
        centered = X - mean
        cov = centered.T @ centered / (len(records) - 1)
    else:
        cov = np.zeros((m.dimension, m.dimension))
    lines = [
        f"n_paths = {len(records)}",
        f"n_steps = {setup.scheme.n_steps}",
        f"dt = {_fmt(setup.scheme.dt)}",
        f"t_final = {_fmt(setup.scheme.t_final)}",
        f"scheme = {setup.scheme.scheme}",
        f"seed = {setup.seed}",
        f"chart = {'mixed' if mixed else chart}",
    ]
    for i in range(m.dimension):
        lines.append(f"mean_c{i + 1} = {_fmt(mean[i])}")
    for i in range(m.dimension):
        for j in range(i, m.dimension):
            lines.append(f"cov_c{i + 1}_c{j + 1} = {_fmt(cov[i, j])}")
    switches = sum(len(rec.chart_switches) for rec in records)
    lines.append(f"chart_switches = {switches}")
    return lines


def _cmd_simulate(setup: RunSetup, out_dir: Path, workers: int) -> int:
    records = _run_paths(setup, workers)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_lines(out_dir / "paths.csv", _paths_csv_lines(records, setup.manifold.dimension))
    _write_lines(out_dir / "summary.txt", _summary_lines(setup, records))
    print(f"wrote {out_dir / 'paths.csv'} and {out_dir / 'summary.txt'}")
    return EXIT_OK


def _cmd_compare(setup: RunSetup) -> int:
    if setup.generator2 is None:
        raise ConfigError("compare needs a [generator2] section")
    sde_a = setup.sde
    if setup.compare_convert:
        sde_b = convert_generator(sde_a, setup.generator2)
    else:
        # Negative-control mode: same drift and noise under the second
        # generator without the compensating drift shift.
        sde_b = IntrinsicSDE(sde_a.manifold, sde_a.drift, sde_a.noise, setup.generator2)
    base = NoiseStream(setup.seed, sde_a.p)
    max_dev = 0.0
    for i in range(setup.n_paths):
        rec_a = simulate_path(sde_a, setup.scheme, setup.x0, base.substream(i))
        rec_b = simulate_path(sde_b, setup.scheme, setup.x0, base.substream(i))
        for pa, pb in zip(rec_a.states, rec_b.states):
            if pb.chart_id != pa.chart_id:
                try:
                    pb = transform_point(setup.manifold, pb, pa.chart_id)
                except (OutOfChartError, ValueError):
                    max_dev = float("inf")
                    continue
            max_dev = max(max_dev, float(np.max(np.abs(pa.coords - pb.coords))))
    ok = max_dev <= COMPARE_TOLERANCE
    print(f"max_pathwise_deviation = {_fmt(max_dev)}")
    print(f"threshold = {_fmt(COMPARE_TOLERANCE)}")
    print(f"compare_status = {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_COMPARE


def _cmd_check(setup: RunSetup) -> int:
    m = setup.manifold
    if len(m.charts) < 2:
        raise ConfigError("check needs a manifold with at least two charts")
    fields = list(setup.sde.noise) or default_check_fields(m, setup.field_chart)
    errors = run_checks(m, setup.sde.generator, fields, setup.check_points, setup.seed)
    for key, value in errors.items():
        print(f"{key} = {_fmt(value)}")
    ok = all(v <= CHECK_TOLERANCE for v in errors.values())
    print(f"check_status = {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_COMPARE


def _cmd_convergence(setup: RunSetup, out_dir: Path) -> int:
    conv = setup.convergence
    if conv is None:
        raise ConfigError("convergence needs a [convergence] section")
    if len(conv.dts) < 4:
        raise ConfigError("need at least 4 dt values to fit an order")
    base = setup.scheme
    cfgs = [
        SchemeConfig(
            scheme=base.scheme,
            dt=dt,
            t_final=base.t_final,
            geodesic_substeps=base.geodesic_substeps,
            chart_switch_margin=base.chart_switch_margin,
        )
        for dt in conv.dts
    ]
    try:
        rows = error_study(
            setup.sde, cfgs, setup.x0, conv.reference_dt, conv.n_paths, setup.seed
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["dt,strong_error,weak_error"]
    for r in rows:
        lines.append(f"{_fmt(r.dt)},{_fmt(r.strong)},{_fmt(r.weak)}")
    _write_lines(out_dir / "convergence.csv", lines)

    def slope(errors: list[float]) -> str:
        try:
            return _fmt(fit_order([r.dt for r in rows], errors))
        except ValueError:
            return "nan"

    print(f"strong_order = {slope([r.strong for r in rows])}")
    print(f"weak_order = {slope([r.weak for r in rows])}")
    print(f"wrote {out_dir / 'convergence.csv'}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sde",
        description="Simulate and cross-check intrinsic SDEs on charted manifolds.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    specs = {
        "simulate": "simulate paths and write paths.csv plus summary.txt",
        "compare": "simulate two representations with coupled noise and compare",
        "check": "run generator invariance and pushforward consistency checks",
        "convergence": "measure strong/weak errors over a dt ladder",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the run config file")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--out", default=".", help="output directory")
        if name == "simulate":
            p.add_argument("--workers", type=int, default=1, help="path worker threads")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        setup = load_run(args.config, seed_override=args.seed)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    try:
        if args.command == "simulate":
            return _cmd_simulate(setup, out_dir, max(1, args.workers))
        if args.command == "compare":
            return _cmd_compare(setup)
        if args.command == "check":
            return _cmd_check(setup)
        return _cmd_convergence(setup, out_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RegularityError as e:
        print(f"regularity error: {e}", file=sys.stderr)
        return EXIT_REGULARITY
    except LeftAtlasError as e:
        print(f"left atlas: {e}", file=sys.stderr)
        return EXIT_ATLAS


if __name__ == "__main__":
    raise SystemExit(main())
