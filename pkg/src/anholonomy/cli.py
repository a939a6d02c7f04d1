"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical or tracking
failure, 3 SAT instance precondition, 4 assumption violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import floquet, satqc
from .bench import holonomy_sweep
from .config import ConfigError, ExperimentConfig
from .errors import (
    AmbiguousMatching,
    AnholonomyError,
    DegenerateBranch,
    MultipleSolutions,
    NoSolution,
    SatFormatError,
    ZeroTargetOverlap,
)
from .flow import AssumptionViolation, gap_profile, holonomy, track_flow
from .transport import trace_transport

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INSTANCE, EXIT_ASSUMPTION = 0, 1, 2, 3, 4

FLOW_COLUMNS = ("lambda", "branch", "E_unwrapped", "E_branch", "overlap_v", "min_gap")
TRANSPORT_COLUMNS = ("step", "lambda", "fidelity_to_instantaneous", "fidelity_to_target")

log = logging.getLogger("anholonomy")

PLOT_STUB = '''"""Plot quasienergy flow CSVs written by `anholonomy flow`.  Needs matplotlib."""
import csv
import sys

import matplotlib.pyplot as plt

for path in sys.argv[1:] or {paths!r}:
    branches = {{}}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            lam, e = branches.setdefault(int(row["branch"]), ([], []))
            lam.append(float(row["lambda"]))
            e.append(float(row["E_unwrapped"]))
    plt.figure()
    for b, (lam, e) in sorted(branches.items()):
        plt.plot(lam, e, label=f"branch {{b}}")
    plt.xlabel("lambda")
    plt.ylabel("E (unwrapped)")
    plt.title(path)
    plt.legend()
plt.show()
'''


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _setup_logging():
    level = os.environ.get("ANHOLONOMY_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True)


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise CliError(EXIT_CONFIG, "--config is required")
    try:
        return ExperimentConfig.load(args.config)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc


def _system(cfg: ExperimentConfig):
    try:
        return cfg.system()
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc


def flow_rows(flow):
    gaps = {b: gap_profile(flow, b)[1] for b in flow.branch_ids}
    for j, b in enumerate(flow.branch_ids):
        for k, lam in enumerate(flow.lambdas):
            yield (float(lam), int(b), float(flow.e_unwrapped[k, j]), float(flow.e_branch[k, j]),
                   float(flow.overlap_v[k, j]), float(gaps[b][k]))


def run_flow(cfg: ExperimentConfig, out: str | None, branch_origin: float | None) -> dict:
    sys_ = _system(cfg)
    origin = branch_origin if branch_origin is not None else cfg.branch_origin()
    try:
        grid = cfg.flow_grid()
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    try:
        flow = track_flow(sys_, grid, branch_origin=origin)
    except (AssumptionViolation, AmbiguousMatching, DegenerateBranch) as exc:
        raise CliError(EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}") from exc
    hol = holonomy(flow)
    path = out or cfg.output("flow_csv")
    if path:
        _write_csv(path, FLOW_COLUMNS, flow_rows(flow))
    summary = hol.to_dict(sys_.period_T)
    summary.update({"grid_points": int(flow.lambdas.size), "refinements": flow.refinements,
                    "branch_origin": flow.branch_origin, "csv": path})
    return summary


def cmd_flow(args) -> dict:
    return run_flow(_load(args), args.out, args.branch_origin)


def cmd_transport(args) -> dict:
    cfg = _load(args)
    sys_ = _system(cfg)
    try:
        plan = cfg.transport_plan(args.steps)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    try:
        rows, result = trace_transport(sys_, plan)
    except (AssumptionViolation, AmbiguousMatching, DegenerateBranch, AnholonomyError) as exc:
        raise CliError(EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}") from exc
    path = args.out or cfg.output("transport_csv")
    if path:
        _write_csv(path, TRANSPORT_COLUMNS,
                   ((r.step, r.lam, r.fidelity_to_instantaneous, r.fidelity_to_target) for r in rows))
    return {
        "steps_M": plan.steps_M,
        "schedule": plan.schedule,
        "cycles": plan.cycles,
        "initial_branch": plan.initial_branch,
        "target_branch": result.target_branch,
        "fidelity_to_target": result.fidelity_target,
        "fidelity_to_initial": result.fidelity_initial,
        "per_cycle_fidelities": list(result.per_cycle_fidelities),
        "csv": path,
    }


def _aqc_setup(cfg: ExperimentConfig) -> satqc.AqcSetup:
    a = cfg.section("aqc")
    try:
        instance = satqc.parse_cnf(cfg.cnf_path().read_bytes())
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"cannot read CNF: {exc}") from exc
    except SatFormatError as exc:
        raise CliError(EXIT_CONFIG, f"SatFormatError: {exc}") from exc
    custom = a.get("custom_v")
    from .config import complex_array

    try:
        satqc.unique_solution(instance)
        return satqc.AqcSetup(
            instance,
            beta=float(a.get("beta", 1.0)),
            epsilon=float(a.get("epsilon", 0.5)),
            period_T=a.get("period_T"),
            t_factor=float(a.get("t_factor", 0.9)),
            v_strategy=a.get("v_strategy", "oracle"),
            custom_v=None if custom is None else complex_array(custom),
        )
    except (NoSolution, MultipleSolutions) as exc:
        raise CliError(EXIT_INSTANCE, f"{type(exc).__name__}: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc


def cmd_aqc(args) -> dict:
    cfg = _load(args)
    setup = _aqc_setup(cfg)
    a = cfg.section("aqc")
    steps = args.steps if args.steps is not None else int(a.get("steps", 20000))
    try:
        result = satqc.run_aqc(setup, steps, grid_points=int(a.get("gap_grid_points", 512)))
    except ZeroTargetOverlap as exc:
        raise CliError(EXIT_CONFIG, f"ZeroTargetOverlap: {exc}") from exc
    except (NoSolution, MultipleSolutions) as exc:
        raise CliError(EXIT_INSTANCE, f"{type(exc).__name__}: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    except AnholonomyError as exc:
        raise CliError(EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}") from exc
    doc = result.to_dict()
    path = args.out or cfg.output("aqc_json")
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(_dump_json(doc) + "\n")
    return doc


def cmd_gap_study(args) -> dict:
    cfg = _load(args)
    setup = _aqc_setup(cfg)
    a = cfg.section("aqc")
    candidates = a.get("candidates", ["oracle", "uniform"])
    points = int(a.get("gap_grid_points", 512))

    def one(cand):
        return satqc.gap_study(setup, [cand], grid_points=points)[0]

    try:
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(one, candidates))
        else:
            rows = [one(c) for c in candidates]
    except ZeroTargetOverlap as exc:
        raise CliError(EXIT_CONFIG, f"ZeroTargetOverlap: {exc}") from exc
    except AnholonomyError as exc:
        raise CliError(EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}") from exc
    return {"rows": [{"strategy": r.strategy, "min_gap": r.min_gap, "M_to_0.99": r.m_to_target} for r in rows]}


def cmd_validate(args) -> dict:
    cfg = _load(args)
    report = floquet.validate_assumptions(_system(cfg))
    doc = report.to_dict()
    doc["ok"] = report.ok
    if not report.ok:
        failed = []
        if not report.u0_nondegenerate:
            failed.append("assumption (i): U0 spectrum is degenerate")
        if not report.v_not_eigenvector:
            failed.append("assumption (ii): some |<v|xi_n(0)>| is 0 or 1")
        doc["violations"] = failed
    return doc


def demo_configs() -> dict[str, dict]:
    names = ("fig1_lines.json", "fig1_avoided.json")
    data = resources.files("anholonomy") / "data"
    return {name: json.loads((data / name).read_text()) for name in names}


def cmd_demo(args) -> dict:
    out_dir = Path(args.out or "fig1_demo")
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = {}
    csvs = []
    for name, raw in demo_configs().items():
        (out_dir / name).write_text(_dump_json(raw) + "\n")
        cfg = ExperimentConfig.from_dict(raw, out_dir)
        csv_path = str(out_dir / name.replace(".json", ".csv"))
        csvs.append(csv_path)
        summaries[name] = run_flow(cfg, csv_path, args.branch_origin)
    (out_dir / "plot_fig1.py").write_text(PLOT_STUB.format(paths=[Path(p).name for p in csvs]))
    return summaries


def cmd_bench(args) -> dict:
    seed = args.seed
    if args.config is not None:
        seed = _load(args).seed if args.seed is None else args.seed
    seed = 0 if seed is None else seed
    rows = list(holonomy_sweep(seed, args.systems))
    return {
        "seed": seed,
        "systems": len(rows),
        "all_shift_by_one": all(r["nu"] == 1 for r in rows),
        "max_abs_sum_rule_residual": max(abs(r["sum_rule_residual"]) for r in rows),
        "results": rows,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anholonomy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, steps=False, jobs=False, origin=False):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="PATH")
        if steps:
            p.add_argument("--steps", type=int, metavar="M")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, metavar="K")
        if origin:
            p.add_argument("--branch-origin", type=float, metavar="X")
        return p

    common(sub.add_parser("flow", help="track quasienergy branches over one cycle"), origin=True).set_defaults(
        func=cmd_flow)
    common(sub.add_parser("transport", help="simulate adiabatic transport"), steps=True).set_defaults(
        func=cmd_transport)
    common(sub.add_parser("aqc", help="run the anholonomic 3-SAT search"), steps=True).set_defaults(func=cmd_aqc)
    common(sub.add_parser("gap-study", help="compare kick vectors on one instance"), jobs=True).set_defaults(
        func=cmd_gap_study)
    common(sub.add_parser("validate", help="check nondegeneracy and kick-vector assumptions")).set_defaults(
        func=cmd_validate)
    common(sub.add_parser("demo-two-level", help="write and run the two-level demo configs"),
           origin=True).set_defaults(func=cmd_demo)
    bench = common(sub.add_parser("bench", help="holonomy check over seeded random systems"), jobs=True)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--systems", type=int, default=20)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        doc = args.func(args)
    except CliError as exc:
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    print(_dump_json(doc))
    if args.command == "validate" and not doc["ok"]:
        return EXIT_ASSUMPTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
