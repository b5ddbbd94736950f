"""``hybridgrid`` command line.

Exit codes: 0 success, 1 invalid input, 2 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import shutil
import sys
import tempfile
from pathlib import Path

from . import dcopf, evaluation, transition
from .cost import CostAssumptions, plan_cost, savings_vs_reference
from .errors import CaseFormatError, HybridGridError, PlanningError, PreprocessError, SolverError, ValidationError
from .grid_model import dumps_canonical, dumps_case, load_case, load_profiles
from .preprocess import ReductionReport, preprocess

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception, code: int):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.code = code


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (CaseFormatError, ValidationError, PreprocessError, ValueError) as exc:
        raise StageError(name, exc, EXIT_INPUT) from exc
    except (SolverError, PlanningError, HybridGridError) as exc:
        raise StageError(name, exc, EXIT_SOLVER) from exc


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _emit(obj) -> None:
    print(dumps_canonical(obj))


def _profiles_for(net, path):
    if path:
        return load_profiles(path)
    return dict(net.profiles)


def _weeks(net, profiles, weeks_arg: str) -> list[int]:
    if weeks_arg == "auto":
        series = evaluation.total_load_series(net, profiles)
        if len(series) >= 8760:
            w = evaluation.find_extreme_weeks(series)
            starts = sorted({w["min_week_start"], w["max_week_start"]})
        else:
            starts = [0]
        n = len(series) if series else evaluation.WEEK
    else:
        try:
            starts = sorted({int(s) for s in weeks_arg.split(",") if s.strip()})
        except ValueError:
            raise CaseFormatError(f"--weeks must be 'auto' or comma-separated start hours, got {weeks_arg!r}")
        n = None
    hours = set()
    for s in starts:
        end = s + evaluation.WEEK if n is None else min(s + evaluation.WEEK, n)
        hours.update(range(s, end))
    return sorted(hours)


# --------------------------------------------------------------------------- #
# subcommands

def cmd_preprocess(args) -> int:
    net = _stage("load", load_case, args.case)
    report = ReductionReport()
    base = _stage("preprocess", preprocess, net, reduce=not args.skip_reduce, report=report)
    _write(args.output, dumps_case(base))
    if args.report:
        rows = ["id,km"] + [f"{i},{km:.9g}" for _, i, km in report.removed]
        _write(args.report, "\n".join(rows) + "\n")
    _emit({"buses": len(base.buses), "branches": len(base.branches), "generators": len(base.generators),
           "removed_lines": report.count, "removed_km": report.total_km})
    return EXIT_OK


def cmd_opf(args) -> int:
    net = _stage("load", load_case, args.case)
    profiles = _stage("load", _profiles_for, net, args.profiles) if args.hour is not None else None
    if args.hour is not None:
        _stage("load", evaluation.check_profiles, net, profiles, [args.hour])
    sol = _stage("opf", dcopf.solve_case, net, args.hour, profiles)
    _write(args.out, dumps_canonical(sol.to_dict()) + "\n")
    _emit({"status": sol.status, "total_cost": sol.total_cost if sol.optimal else None,
           "cause": sol.cause or None})
    return EXIT_OK if sol.optimal else EXIT_SOLVER


def _plan(net, catalog_path, config_path):
    catalog = transition.load_catalog(catalog_path)
    cfg = transition.RatingConfig.load(config_path) if config_path else transition.RatingConfig()
    sol = dcopf.solve(dcopf.OpfProblem(net))
    if not sol.optimal:
        raise SolverError(f"peak-load OPF infeasible: {sol.cause}")
    plan, converted = transition.build_transition(net, sol, catalog, cfg)
    return sol, plan, converted


def cmd_plan(args) -> int:
    net = _stage("load", load_case, args.case)
    sol, plan, converted = _stage("plan", _plan, net, args.catalog, args.config)
    _write(args.output, dumps_canonical(plan.to_dict()) + "\n")
    if args.grid_out:
        _write(args.grid_out, dumps_case(converted))
    _emit(plan.to_dict()["summary"])
    return EXIT_OK


def _load_plan(path):
    try:
        return transition.TransitionPlan.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise CaseFormatError(f"cannot read plan {path}: {exc}") from None


def cmd_cost(args) -> int:
    plan = _stage("load", _load_plan, args.plan)
    net = _stage("load", load_case, args.case)
    assumptions = _stage("load", CostAssumptions.load, args.assumptions) if args.assumptions else CostAssumptions()
    report = plan_cost(plan, net, assumptions)
    if args.reference:
        ref = _stage("load", load_case, args.reference)
        report.comparison = savings_vs_reference(net, ref, assumptions)
    if str(args.output).endswith(".csv"):
        _write(args.output, report.to_csv())
    else:
        _write(args.output, dumps_canonical(report.to_dict()) + "\n")
    _emit({"grand_total_keur": report.grand_total_keur,
           "savings_keur": report.comparison.grand_total_keur if report.comparison else None})
    return EXIT_OK


def _evaluate(net_a, net_b, profiles, hours, ids=("A", "B")):
    evaluation.check_profiles(net_a, profiles, hours)
    evaluation.check_profiles(net_b, profiles, hours)
    run_a = evaluation.run_week(net_a, profiles, hours, ids[0])
    run_b = evaluation.run_week(net_b, profiles, hours, ids[1])
    return run_a, run_b, evaluation.compare(run_a, run_b)


def cmd_evaluate(args) -> int:
    net_a = _stage("load", load_case, args.case_a)
    net_b = _stage("load", load_case, args.case_b)
    profiles = _stage("load", _profiles_for, net_a, args.profiles)
    hours = _stage("evaluate", _weeks, net_a, profiles, args.weeks)
    ids = (Path(args.case_a).stem, Path(args.case_b).stem)
    if ids[0] == ids[1]:
        ids = ("A", "B")
    run_a, run_b, comp = _stage("evaluate", _evaluate, net_a, net_b, profiles, hours, ids)
    out = Path(args.output)
    for run in (run_a, run_b):
        _write(out / run.variant_id / "run.json", dumps_canonical(run.to_dict()) + "\n")
    _write(out / "compare.csv", comp.to_csv())
    _emit({"hours": len(hours), "total_" + ids[0]: comp.total_a, "total_" + ids[1]: comp.total_b,
           "weekly_delta": comp.weekly_delta, "max_rel_gap": comp.max_rel_gap})
    return EXIT_OK


PIPELINE_ARTIFACTS = ("base_case.json", "peak_opf.json", "plan.json", "htg_case.json", "cost.json",
                      "compare.csv")


def run_pipeline(case, catalog, config, profiles_path, out_dir, weeks="auto") -> dict:
    """Preprocess, plan, cost and evaluate; writes the six artifacts atomically."""
    net = _stage("load", load_case, case)
    profiles = _stage("load", _profiles_for, net, profiles_path)
    base = _stage("preprocess", preprocess, net)
    hours = _stage("evaluate", _weeks, base, profiles, weeks)
    _stage("evaluate", evaluation.check_profiles, base, profiles, hours)
    sol, plan, htg = _stage("plan", _plan, base, catalog, config)
    report = plan_cost(plan, base)
    report.comparison = savings_vs_reference(base, net)
    _, _, comp = _stage("evaluate", _evaluate, base, htg, profiles, hours, ("base", "htg"))

    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".hybridgrid-", dir=out.parent))
    try:
        texts = {
            "base_case.json": dumps_case(base),
            "peak_opf.json": dumps_canonical(sol.to_dict()) + "\n",
            "plan.json": dumps_canonical(plan.to_dict()) + "\n",
            "htg_case.json": dumps_case(htg),
            "cost.json": dumps_canonical(report.to_dict()) + "\n",
            "compare.csv": comp.to_csv(),
        }
        for name in PIPELINE_ARTIFACTS:
            (tmp / name).write_text(texts[name])
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return {"artifacts": list(PIPELINE_ARTIFACTS), "summary": plan.summary,
            "investment_keur": report.grand_total_keur, "savings_keur": report.comparison.grand_total_keur,
            "weekly_delta": comp.weekly_delta, "max_rel_gap": comp.max_rel_gap}


def cmd_pipeline(args) -> int:
    _emit(run_pipeline(args.case, args.catalog, args.config, args.profiles, args.output, args.weeks))
    return EXIT_OK


def cmd_count_trees(args) -> int:
    net = _stage("load", load_case, args.case)
    n = transition.count_spanning_trees(net)
    _emit({"spanning_trees": str(n), "log10": math.log10(n) if n > 0 else None})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridgrid", description=__doc__.splitlines()[0].strip("`"))
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("preprocess", help="reduce to a base grid and streamline the model")
    s.add_argument("case")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--skip-reduce", action="store_true", help="keep all new lines")
    s.add_argument("--report", help="CSV of removed lines (id, km)")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("opf", help="solve the linearized OPF")
    s.add_argument("case")
    s.add_argument("--hour", type=int)
    s.add_argument("--profiles")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_opf)

    s = sub.add_parser("plan", help="plan the transition to the hybrid architecture")
    s.add_argument("case")
    s.add_argument("--catalog", help="converter catalog JSON (default: bundled placeholder)")
    s.add_argument("--config", help="rating config JSON (default: built-in defaults)")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--grid-out", help="write the converted case here")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("cost", help="investment cost of a plan")
    s.add_argument("plan")
    s.add_argument("case")
    s.add_argument("--reference", help="reference case for new-line savings")
    s.add_argument("--assumptions", help="cost assumptions JSON")
    s.add_argument("-o", "--output", required=True, help="report path (.json or .csv)")
    s.set_defaults(func=cmd_cost)

    s = sub.add_parser("evaluate", help="compare two grid variants hour by hour")
    s.add_argument("case_a")
    s.add_argument("case_b")
    s.add_argument("--profiles")
    s.add_argument("--weeks", default="auto", help="'auto' or comma-separated week start hours")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("pipeline", help="run preprocess, plan, cost and evaluate end to end")
    s.add_argument("case")
    s.add_argument("--catalog")
    s.add_argument("--config")
    s.add_argument("--profiles")
    s.add_argument("--weeks", default="auto")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("count-trees", help="count spanning trees of the AC graph")
    s.add_argument("case")
    s.set_defaults(func=cmd_count_trees)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error in stage {exc}", file=sys.stderr)
        return exc.code
    except (CaseFormatError, ValidationError, PreprocessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HybridGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
