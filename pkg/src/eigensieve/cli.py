"""Batch command-line front end: load matrices, search a region, emit results."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass

from .errors import InputError, SolverError
from .pencil import make_pencil, read_matrix_market
from .search import Config, Region, RunCounters, find_eigenvalues

__all__ = ["RunReport", "build_parser", "run", "main"]


@dataclass
class RunReport:
    """Everything a run produced: estimates, work counters, configuration."""

    eigenvalues: list
    wall_time: float
    factorizations_built: int
    node_solves: int
    regions_tested: int
    config_echo: dict


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigensieve",
        description="Compute all generalized eigenvalues of a sparse pencil "
                    "(A, B) inside a rectangle of the complex plane.",
    )
    parser.add_argument("--matrix-a", required=True, metavar="PATH",
                        help="Matrix Market file for A")
    parser.add_argument("--matrix-b", metavar="PATH",
                        help="Matrix Market file for B (identity if absent)")
    parser.add_argument("--region", required=True, nargs=4, type=float,
                        metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
                        help="search rectangle in the complex plane")
    parser.add_argument("--precision", type=float, default=None,
                        help="eigenvalue precision (region size stop)")
    parser.add_argument("--residual-tol", type=float, default=None,
                        help="node-solve residual tolerance")
    parser.add_argument("--indicator-threshold", type=float, default=None,
                        help="region admissibility threshold")
    parser.add_argument("--krylov-dim", type=int, default=None,
                        help="Krylov basis dimension per shift")
    parser.add_argument("--quad-points", type=int, default=None,
                        help="base quadrature node count")
    parser.add_argument("--seed", type=int, default=None,
                        help="probe-vector seed")
    parser.add_argument("--legacy-indicator", action="store_true",
                        help="use the double-projection indicator")
    parser.add_argument("--no-krylov-reuse", action="store_true",
                        help="solve every quadrature node directly (control mode)")
    parser.add_argument("--output", metavar="PATH",
                        help="write results here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (default: json)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for sibling regions (1 = deterministic)")
    parser.add_argument("--dump-regions", metavar="PATH",
                        help="write the tested-region tree as JSON for plotting")
    return parser


def _build_config(ns) -> Config:
    kwargs = {}
    if ns.precision is not None:
        kwargs["d0"] = ns.precision
    if ns.residual_tol is not None:
        kwargs["eps"] = ns.residual_tol
    if ns.indicator_threshold is not None:
        kwargs["delta0"] = ns.indicator_threshold
    if ns.krylov_dim is not None:
        kwargs["m"] = ns.krylov_dim
    if ns.quad_points is not None:
        kwargs["n0"] = ns.quad_points
    if ns.seed is not None:
        kwargs["seed"] = ns.seed
    if ns.legacy_indicator:
        kwargs["use_legacy_indicator"] = True
    if ns.no_krylov_reuse:
        kwargs["reuse_krylov"] = False
    return Config(**kwargs)


def _estimate_row(e, rect, d0):
    xmin, xmax, ymin, ymax = rect
    border = min(e.value.real - xmin, xmax - e.value.real,
                 e.value.imag - ymin, ymax - e.value.imag)
    return {
        "re": e.value.real,
        "im": e.value.imag,
        "box": e.box_half_side,
        "indicator": e.indicator_value,
        "boundary": border <= 10.0 * d0,
    }


def _emit(report: RunReport, fmt: str, destination):
    if fmt == "json":
        destination.write(json.dumps(asdict(report), indent=2))
        destination.write("\n")
    else:
        destination.write("re,im,box,indicator,boundary\n")
        for row in report.eigenvalues:
            destination.write(
                f"{row['re']!r},{row['im']!r},{row['box']!r},"
                f"{row['indicator']!r},{'true' if row['boundary'] else 'false'}\n"
            )


def run(argv=None) -> int:
    """Parse flags, run the search, emit a report; returns the exit code."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    xmin, xmax, ymin, ymax = ns.region
    if not (xmin < xmax and ymin < ymax):
        print(f"error: empty region [{xmin}, {xmax}] x [{ymin}, {ymax}]", file=sys.stderr)
        return 2
    if ns.threads < 1:
        print(f"error: --threads must be at least 1, got {ns.threads}", file=sys.stderr)
        return 2

    try:
        a = read_matrix_market(ns.matrix_a)
        b = read_matrix_market(ns.matrix_b) if ns.matrix_b else None
        pencil = make_pencil(a, b)
        cfg = _build_config(ns)
    except (OSError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    # the search works on squares: circumscribe the rectangle, then filter
    center = complex((xmin + xmax) / 2.0, (ymin + ymax) / 2.0)
    half = max(xmax - xmin, ymax - ymin) / 2.0
    root = Region(center=center, half_side=half)

    counters = RunCounters()
    region_log = [] if ns.dump_regions else None
    start = time.perf_counter()
    try:
        estimates = find_eigenvalues(pencil, root, cfg, threads=ns.threads,
                                     counters=counters, region_log=region_log)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    wall = time.perf_counter() - start

    rect = (xmin, xmax, ymin, ymax)
    kept = [e for e in estimates
            if xmin - cfg.d0 <= e.value.real <= xmax + cfg.d0
            and ymin - cfg.d0 <= e.value.imag <= ymax + cfg.d0]
    report = RunReport(
        eigenvalues=[_estimate_row(e, rect, cfg.d0) for e in kept],
        wall_time=wall,
        factorizations_built=counters.factorizations,
        node_solves=counters.node_solves,
        regions_tested=counters.regions_tested,
        config_echo=asdict(cfg),
    )

    if ns.dump_regions:
        with open(ns.dump_regions, "w") as fh:
            json.dump(region_log, fh, indent=2)
            fh.write("\n")

    if ns.output:
        with open(ns.output, "w") as fh:
            _emit(report, ns.format, fh)
    else:
        _emit(report, ns.format, sys.stdout)
    return 0


def main():  # pragma: no cover - exercised through run()
    sys.exit(run())
