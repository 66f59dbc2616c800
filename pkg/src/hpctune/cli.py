"""Command-line driver: run a search, measure a baseline, print a report,
or brute-force a small space.

Exit codes: 0 success, 1 error (bad input, failed baseline), 2 refusal
(enumeration cap exceeded)."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import store
from .evaluate import Evaluator, make_live_evaluator, make_simulated_evaluator
from .problem import Problem, ProblemError, load_problem
from .search import SearchBudget, run_search
from .space import CapExceededError

LOG_NAME = "trials.jsonl"
CSV_NAME = "results.csv"
PLOT_NAME = "best_trace.tsv"
BASELINE_NAME = "baseline.json"

# Live trials are expensive; refuse to brute-force more than this many.
LIVE_ENUMERATE_CAP = 64


class _CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _evaluator_for(problem: Problem, trials_root: Path) -> Evaluator:
    if problem.evaluator_kind == "simulated":
        return make_simulated_evaluator(problem.space, problem.metric_kind())
    trials_root.mkdir(parents=True, exist_ok=True)
    return make_live_evaluator(problem, trials_root)


def _load_problem_or_exit(path: str) -> Problem:
    try:
        return load_problem(Path(path))
    except ProblemError as exc:
        raise _CliError(f"error: {exc}") from None


def cmd_run(args: argparse.Namespace) -> int:
    if args.learner.lower() != "rf":
        print(f"error: unsupported learner {args.learner!r} (only 'rf' is available)", file=sys.stderr)
        return 1
    problem = _load_problem_or_exit(args.problem)
    seed = args.seed if args.seed is not None else problem.space.seed
    budget = SearchBudget(max_evals=args.max_evals, wall_clock_limit_s=args.wall_clock_limit)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / LOG_NAME
    if log_path.exists():
        print(f"error: {log_path} already exists; choose a fresh --out directory", file=sys.stderr)
        return 1

    metadata = store.LogMetadata(
        problem_name=problem.name,
        seed=seed,
        space_fingerprint=problem.space.fingerprint(),
        parameter_names=problem.space.names,
        cardinality=problem.space.cardinality(),
        metric_kind=problem.metric_kind(),
        launcher_kind=problem.launch.kind,
        max_evals=budget.max_evals,
        wall_clock_limit_s=budget.wall_clock_limit_s,
        created_at=time.time(),
    )
    log = store.TrialLog.create(log_path, metadata)
    evaluator = _evaluator_for(problem, out / "trials")

    state = run_search(
        problem.space,
        budget,
        problem.acquisition,
        problem.forest,
        evaluator,
        seed,
        on_record=log.append,
        metric_kind=problem.metric_kind(),
    )

    names = list(problem.space.names)
    store.export_csv(log, out / CSV_NAME)
    store.export_plot_tsv(log, out / PLOT_NAME)

    print(f"search finished: {len(log.records)} trials, stopped by {state.stop_reason}")
    result = store.best(log)
    if result is None:
        print("warning: every trial failed; no best configuration")
    else:
        config, value = result
        print(f"best {problem.metric_kind()}: {value:.6g}")
        print("best configuration: " + ", ".join(f"{n}={config[n]}" for n in names))
    print(f"outputs in {out}: {LOG_NAME}, {CSV_NAME}, {PLOT_NAME}")
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    problem = _load_problem_or_exit(args.problem)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    evaluator = _evaluator_for(problem, out / "baseline_trials")
    default = problem.space.default_configuration()

    values = []
    for i in range(args.repeats):
        record = evaluator(default, i)
        if record.status == "ok":
            values.append(record.value)
        else:
            print(f"baseline repeat {i}: {record.status}", file=sys.stderr)
    if not values:
        print("error: every baseline repeat failed", file=sys.stderr)
        return 1

    baseline = min(values)
    doc = {"metric_kind": problem.metric_kind(), "repeats": args.repeats,
           "values": values, "baseline": baseline}
    (out / BASELINE_NAME).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"baseline {problem.metric_kind()} over {len(values)} runs: {baseline:.6g} (smallest)")
    return 0


def _stop_summary(log: store.TrialLog) -> str:
    meta = log.metadata
    n = len(log.records)
    if meta.max_evals is not None and n >= meta.max_evals:
        return f"evaluation budget reached ({n}/{meta.max_evals})"
    if n >= meta.cardinality:
        return f"space exhausted ({n} of {meta.cardinality} configurations)"
    if meta.wall_clock_limit_s is not None:
        return f"wall-clock limit ({meta.wall_clock_limit_s:g} s) reached after {n} trials"
    return f"stopped after {n} trials"


def format_report(log: store.TrialLog, baseline: float | None) -> str:
    lines = []
    meta = log.metadata
    names = log.metadata.parameter_names
    lines.append(f"problem: {meta.problem_name} (seed {meta.seed}, metric {meta.metric_kind})")
    lines.append(f"trials: {len(log.records)} ({len(log.ok_records())} ok); {_stop_summary(log)}")
    result = store.best(log)
    if result is None:
        lines.append("best: none (no successful trials)")
        return "\n".join(lines)
    config, value = result
    lines.append(f"best value: {value:.6g}")
    lines.append("best configuration: " + ", ".join(f"{n}={config[n]}" for n in names))
    if baseline is None:
        lines.append("baseline: none recorded (run the baseline command first)")
    else:
        lines.append(f"baseline: {baseline:.6g}")
        lines.append(f"improvement: {store.improvement_pct(baseline, value):.2f}%")
    overheads = []
    inconsistent = 0
    for r in log.records:
        try:
            o = store.overhead(r)
        except ValueError:
            inconsistent += 1
            continue
        if o is not None:
            overheads.append(o)
    if overheads:
        lines.append(
            f"overhead per trial: mean {sum(overheads) / len(overheads):.3f} s, max {max(overheads):.3f} s"
        )
    if inconsistent:
        lines.append(f"warning: {inconsistent} record(s) with inconsistent timing fields")
    return "\n".join(lines)


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out)
    log_path = out / LOG_NAME
    if not log_path.exists():
        print(f"error: no log at {log_path}", file=sys.stderr)
        return 1
    log = store.TrialLog.load(log_path)
    baseline = None
    baseline_path = out / BASELINE_NAME
    if baseline_path.exists():
        baseline = json.loads(baseline_path.read_text())["baseline"]
    print(format_report(log, baseline))
    return 0


def cmd_enumerate(args: argparse.Namespace) -> int:
    problem = _load_problem_or_exit(args.problem)
    space = problem.space
    cardinality = space.cardinality()
    if problem.evaluator_kind == "live" and cardinality > LIVE_ENUMERATE_CAP:
        print(
            f"refused: live evaluation of {cardinality} configurations exceeds cap {LIVE_ENUMERATE_CAP}",
            file=sys.stderr,
        )
        return 2
    evaluator = _evaluator_for(problem, Path(args.out) / "enumerate_trials")
    try:
        configs = list(space.enumerate_configs(cap=args.cap))
    except CapExceededError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    rows = []
    for i, config in enumerate(configs):
        record = evaluator(config, i)
        rows.append((record.value if record.status == "ok" else None, config))
    rows.sort(key=lambda r: (r[0] is None, r[0]))
    names = space.names
    print("value\t" + "\t".join(names))
    for value, config in rows:
        shown = "failed" if value is None else repr(value)
        print(shown + "\t" + "\t".join(config[n] for n in names))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hpctune",
        description="Autotune a parameterized program with forest-guided Bayesian optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a search and persist the trial log")
    run.add_argument("--problem", required=True, help="problem file (JSON)")
    run.add_argument("--max-evals", type=int, default=None, help="evaluation budget")
    run.add_argument("--wall-clock-limit", type=float, default=None, help="wall-clock budget in seconds")
    run.add_argument("--seed", type=int, default=None, help="search seed (default: the space's seed)")
    run.add_argument("--learner", default="rf", help="surrogate learner (only 'rf')")
    run.add_argument("--out", default="hpctune_out", help="output directory")
    run.set_defaults(func=cmd_run)

    baseline = sub.add_parser("baseline", help="measure the default configuration")
    baseline.add_argument("--problem", required=True)
    baseline.add_argument("--repeats", type=int, default=5)
    baseline.add_argument("--out", default="hpctune_out")
    baseline.set_defaults(func=cmd_baseline)

    report = sub.add_parser("report", help="summarize a finished search")
    report.add_argument("--out", default="hpctune_out")
    report.set_defaults(func=cmd_report)

    enum = sub.add_parser("enumerate", help="brute-force a small space, sorted by value")
    enum.add_argument("--problem", required=True)
    enum.add_argument("--cap", type=int, default=10000, help="refuse spaces larger than this")
    enum.add_argument("--out", default="hpctune_out")
    enum.set_defaults(func=cmd_enumerate)

    args = parser.parse_args(argv)
    if args.command == "run" and args.max_evals is None and args.wall_clock_limit is None:
        parser.error("run requires --max-evals and/or --wall-clock-limit")
    try:
        return args.func(args)
    except _CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
