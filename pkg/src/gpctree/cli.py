"""``gpctree`` command line: synth, sweep, metrics, verify, export-lp."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import report
from .benchgen import Benchmark, BenchmarkError, parse_spec
from .bitheap import HeapError
from .gpclib import PROFILE_NAMES, ArchProfile, LibraryError, builtin_library, load_library
from .ilpmodel import build, to_lp_file
from .solution import Solution
from .solver.builtin import DEFAULT_MAX_BITS
from .solver.common import Infeasible, SolverError
from .solver.heuristic import METRICS, heuristic_synthesize
from .solver.manager import DEFAULT_STAGE_LIMIT, SolveTimeout, parse_solver, synthesize
from .verify import SIM_SAMPLES, validate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3
EXIT_VERIFY = 4
EXIT_CONFIG = 5

log = logging.getLogger("gpctree")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which means "infeasible" here
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", default="xilinx-baseline", help=f"one of {', '.join(PROFILE_NAMES)}")
    p.add_argument("--library", metavar="PATH", help="JSON GPC library (overrides --profile)")
    p.add_argument("--with-c42", action="store_true", help="add the C4:2 compressor proxy to a built-in profile")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--solver",
        default="builtin",
        help="builtin | external | external:<command with {lp} {sol} {time}> | heuristic[:metric]",
    )
    p.add_argument("--stages-max", type=int, default=DEFAULT_STAGE_LIMIT)
    p.add_argument("--time-budget", type=float, default=None, help="seconds per stage budget (env GPCTREE_TIME_BUDGET)")
    p.add_argument("--max-bits", type=int, default=DEFAULT_MAX_BITS, help="builtin solver size cap (0 = none)")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gpctree", description="Compressor-tree synthesis with generalized parallel counters.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="synthesize, verify and report one compressor tree")
    p.add_argument("benchmark", help="S:128, D:256, ADD:6x7, MAC3:8, FIR3:8, BNN:3x3x256 or HEAP:0,6,0,6")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=SIM_SAMPLES)
    p.add_argument("--save", metavar="PATH", help="also write the JSON report (a verifiable solution file)")
    p.add_argument("--unsafe", action="store_true", help="skip verification")

    p = sub.add_parser("sweep", help="compare profiles over several benchmarks")
    p.add_argument("benchmarks", nargs="+")
    p.add_argument("--profiles", default=",".join(PROFILE_NAMES[:3]))
    p.add_argument("--baseline", help="profile the reductions are measured against (default: first)")
    p.add_argument("--with-c42", action="store_true")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--jobs", type=int, default=1)
    _add_solver(p)

    p = sub.add_parser("metrics", help="GPC metrics table of a profile")
    _add_common(p)

    p = sub.add_parser("verify", help="re-validate a stored solution file")
    p.add_argument("solution", help="report or solution JSON written by synth --save")
    p.add_argument("--benchmark", help="benchmark spec when the file does not record one")
    _add_common(p)
    p.set_defaults(profile=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=SIM_SAMPLES)

    p = sub.add_parser("export-lp", help="write the integer program as an LP file")
    p.add_argument("benchmark")
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--profile", default="xilinx-baseline")
    p.add_argument("--library", metavar="PATH")
    p.add_argument("--with-c42", action="store_true")
    p.add_argument("--out", metavar="PATH")
    return ap


# -- helpers ---------------------------------------------------------------------------------


def _profile(name: str | None, library: str | None, with_c42: bool) -> ArchProfile:
    if library:
        return load_library(library)
    name = name or "xilinx-baseline"
    if name in PROFILE_NAMES:
        return builtin_library(name, with_c42=with_c42)
    raise ConfigError(f"unknown profile {name!r}; choose from {', '.join(PROFILE_NAMES)} or pass --library")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _check_solver(args) -> None:
    if args.stages_max < 0:
        raise ConfigError("--stages-max must be non-negative")
    if args.time_budget is not None and args.time_budget <= 0:
        raise ConfigError("--time-budget must be positive")
    if args.solver.startswith("heuristic"):
        metric = args.solver.partition(":")[2] or "efficiency"
        if metric not in METRICS:
            raise ConfigError(f"unknown heuristic metric {metric!r}; choose from {', '.join(METRICS)}")
    else:
        try:
            parse_solver(args.solver)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def run_solver(bench: Benchmark, profile: ArchProfile, solver: str, stages_max: int, budget, max_bits) -> Solution:
    if solver.startswith("heuristic"):
        return heuristic_synthesize(bench, profile, solver.partition(":")[2] or "efficiency")
    return synthesize(bench, profile, stages_max, budget, solver, max_bits or None)


# -- commands --------------------------------------------------------------------------------


def cmd_synth(args) -> int:
    _check_solver(args)
    bench = parse_spec(args.benchmark)
    profile = _profile(args.profile, args.library, args.with_c42)
    t0 = time.monotonic()
    sol = run_solver(bench, profile, args.solver, args.stages_max, args.time_budget, args.max_bits)
    log.info("solved in %.2f s", time.monotonic() - t0)
    verification = None
    ok = True
    if not args.unsafe:
        v = validate(sol, bench, profile, args.samples, args.seed)
        verification, ok = v.to_dict(), v.ok
    options = {"solver": args.solver, "with_c42": args.with_c42, "seed": args.seed, "samples": args.samples}
    rep = report.synth_report(sol, bench, profile, args.benchmark, verification, options)
    text = report.dumps(rep) if args.format == "json" else report.render_synth_text(rep)
    _emit(text, args.out)
    if args.save:
        Path(args.save).write_text(report.dumps(rep))
    if not ok:
        print("verification FAILED", file=sys.stderr)
        return EXIT_VERIFY
    if sol.status == "feasible":
        print("time budget hit: solution is not proven optimal", file=sys.stderr)
        return EXIT_TIMEOUT
    return EXIT_OK


def _sweep_job(job):
    spec, pname, with_c42, solver, stages_max, budget, max_bits = job
    bench = parse_spec(spec)
    profile = builtin_library(pname, with_c42=with_c42) if pname in PROFILE_NAMES else load_library(pname)
    try:
        sol = run_solver(bench, profile, solver, stages_max, budget, max_bits)
    except Infeasible:
        return bench.name, pname, {"status": "infeasible", "LE": None, "stages": None}
    except SolveTimeout:
        return bench.name, pname, {"status": "timeout", "LE": None, "stages": None}
    v = validate(sol, bench, profile)
    status = sol.status if v.ok else "verify-failed"
    return bench.name, pname, {"status": status, "LE": sol.total_cost, "stages": sol.stage_count}


def cmd_sweep(args) -> int:
    _check_solver(args)
    profiles = [p.strip() for p in args.profiles.split(",") if p.strip()]
    if not profiles:
        raise ConfigError("--profiles is empty")
    for p in profiles:
        if p not in PROFILE_NAMES and not Path(p).exists():
            raise ConfigError(f"unknown profile {p!r}")
    baseline = args.baseline or profiles[0]
    if baseline not in profiles:
        raise ConfigError(f"baseline {baseline!r} is not among the swept profiles")
    benches = [parse_spec(s) for s in args.benchmarks]
    jobs = [(s, p, args.with_c42, args.solver, args.stages_max, args.time_budget, args.max_bits)
            for s in args.benchmarks for p in profiles]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    rows = {b.name: {"benchmark": b.name, "results": {}} for b in benches}
    for name, p, cell in results:
        rows[name]["results"][p] = cell
    rep = report.sweep_report(list(rows.values()), profiles, baseline)
    if args.format == "json":
        text = report.dumps(rep)
    elif args.format == "csv":
        text = report.sweep_csv(rep)
    else:
        text = report.render_sweep_text(rep)
    _emit(text, args.out)
    statuses = [c["status"] for _, _, c in results]
    if "verify-failed" in statuses:
        return EXIT_VERIFY
    if "timeout" in statuses or "feasible" in statuses:
        return EXIT_TIMEOUT
    if "infeasible" in statuses:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_metrics(args) -> int:
    profile = _profile(args.profile, args.library, args.with_c42)
    rep = report.metrics_report(profile)
    _emit(report.dumps(rep) if args.format == "json" else report.render_metrics_text(rep), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        data = json.loads(Path(args.solution).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {args.solution}: {exc}") from None
    if not isinstance(data, dict):
        return _verify_fail(args, "not a solution object")
    sol_data = data.get("solution", data)
    meta = data.get("benchmark")
    spec = args.benchmark or (meta.get("spec") if isinstance(meta, dict) else None)
    if not spec:
        raise ConfigError("the file records no benchmark spec; pass --benchmark")
    opts = data.get("options", {}) if isinstance(data.get("options"), dict) else {}
    try:
        sol = Solution.from_dict(sol_data)
    except (KeyError, TypeError, ValueError, HeapError) as exc:
        return _verify_fail(args, f"malformed solution: {exc}")
    bench = parse_spec(spec)
    profile = _profile(args.profile or sol.profile, args.library, args.with_c42 or bool(opts.get("with_c42")))
    try:
        v = validate(sol, bench, profile, args.samples, args.seed)
    except (KeyError, ValueError, IndexError) as exc:
        return _verify_fail(args, f"solution cannot be simulated: {exc}")
    rep = {"file": args.solution, "benchmark": bench.name, "profile": profile.name, **v.to_dict()}
    if args.format == "json":
        text = report.dumps(rep)
    else:
        lines = [f"verify {args.solution}: {'PASS' if v.ok else 'FAIL'}"]
        lines += [f"  {d}" for d in v.structural.diagnostics]
        if v.functional:
            f = v.functional
            lines.append(f"  functional {f.samples} vectors, {f.mismatches} mismatches")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if v.ok else EXIT_VERIFY


def _verify_fail(args, why: str) -> int:
    _emit(f"verify {args.solution}: FAIL\n  {why}\n", args.out)
    return EXIT_VERIFY


def cmd_export_lp(args) -> int:
    if args.stages < 0:
        raise ConfigError("--stages must be non-negative")
    bench = parse_spec(args.benchmark)
    profile = _profile(args.profile, args.library, args.with_c42)
    _emit(to_lp_file(build(bench.heap, profile, args.stages)), args.out)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "sweep": cmd_sweep, "metrics": cmd_metrics, "verify": cmd_verify,
            "export-lp": cmd_export_lp}


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, BenchmarkError, HeapError, LibraryError) as exc:
        print(f"gpctree: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"gpctree: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolveTimeout as exc:
        print(f"gpctree: timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except ValueError as exc:  # e.g. builtin size cap
        print(f"gpctree: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"gpctree: solver error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
