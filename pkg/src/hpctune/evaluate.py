"""One-trial evaluation: render molds, compile, launch, parse the metric.

Also home to the text parsers for application runtime lines and node-energy
report files, the energy/EDP arithmetic, and a deterministic simulated
objective used for desk-scale runs and oracle tests. ``evaluate_trial`` never
raises: every failure mode lands in the returned record's status, because the
search loop's failure-exclusion contract depends on it.
"""

from __future__ import annotations

import math
import os
import re
import signal
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable

from . import mold
from .launch import LaunchError, build_plan
from .space import Configuration, ParamSpace

if TYPE_CHECKING:
    from .problem import Problem

STATUSES = ("ok", "compile_failed", "run_failed", "timeout", "parse_failed")
METRIC_KINDS = ("runtime_s", "node_energy_J", "edp_Js")

# Leading real literal, matched after stripping whitespace; trailing junk
# (units, parens) is tolerated the way the original report consumers were.
_FLOAT_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")


class MetricParseError(ValueError):
    """The trial's output did not contain a readable metric."""


@dataclass(frozen=True)
class TrialRecord:
    """One evaluation: what ran, what it scored, and where the time went."""

    trial_index: int
    configuration: Configuration
    metric_kind: str
    value: float | None
    status: str
    compile_time_s: float = 0.0
    app_runtime_s: float | None = None
    elapsed_total_s: float = 0.0
    started_at: float = 0.0

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.metric_kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.metric_kind!r}")
        if self.status == "ok" and (self.value is None or not math.isfinite(self.value)):
            raise ValueError("ok records must carry a finite value")
        if self.compile_time_s < 0 or self.elapsed_total_s < 0:
            raise ValueError("timing fields must be non-negative")

    def to_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "configuration": dict(self.configuration),
            "metric_kind": self.metric_kind,
            "value": self.value,
            "status": self.status,
            "compile_time_s": self.compile_time_s,
            "app_runtime_s": self.app_runtime_s,
            "elapsed_total_s": self.elapsed_total_s,
            "started_at": self.started_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrialRecord":
        return cls(
            trial_index=int(doc["trial_index"]),
            configuration=dict(doc["configuration"]),
            metric_kind=doc["metric_kind"],
            value=doc["value"],
            status=doc["status"],
            compile_time_s=float(doc["compile_time_s"]),
            app_runtime_s=doc["app_runtime_s"],
            elapsed_total_s=float(doc["elapsed_total_s"]),
            started_at=float(doc["started_at"]),
        )


@dataclass(frozen=True)
class EnergyReport:
    """Per-node (package, dram) energy totals parsed from a node-energy report."""

    entries: tuple[tuple[float, float], ...]
    node_count: int

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        for pkg, dram in self.entries:
            if pkg < 0 or dram < 0:
                raise ValueError("energies must be non-negative")


def _leading_float(text: str) -> float:
    m = _FLOAT_RE.match(text.strip())
    if not m:
        raise MetricParseError(f"no numeric field in {text!r}")
    return float(m.group(0))


def parse_runtime(output: str) -> float:
    """Runtime in seconds from the first line containing the token "Runtime".

    The line is split on its first ": "; the remainder's leading numeric
    field is the runtime.
    """
    for line in output.splitlines():
        if "Runtime" in line:
            _, sep, rest = line.partition(": ")
            if not sep:
                raise MetricParseError(f"runtime line has no ': ' separator: {line!r}")
            return _leading_float(rest)
    raise MetricParseError("no line containing 'Runtime' found")


def parse_geopm_report(report: str) -> EnergyReport:
    """Extract per-node package/dram energy totals from report text.

    State machine: each "Application Totals" line toggles the in-section flag
    and counts a node. While inside a section, the first package-energy line
    contributes the value after ": ", and the dram-energy line contributes
    its value and closes the section. Zero sections means the file is not a
    usable report.
    """
    in_section = False
    node_count = 0
    entries: list[tuple[float, float]] = []
    pkg: float | None = None

    def close(dram: float = 0.0) -> None:
        nonlocal pkg
        entries.append((pkg if pkg is not None else 0.0, dram))
        pkg = None

    for line in report.splitlines():
        if "Application Totals" in line:
            if in_section:
                close()
            in_section = not in_section
            node_count += 1
            continue
        if not in_section:
            continue
        if "package-energy" in line and pkg is None:
            _, sep, rest = line.partition(": ")
            if not sep:
                raise MetricParseError(f"malformed package-energy line: {line!r}")
            pkg = _leading_float(rest)
        elif "dram-energy" in line:
            _, sep, rest = line.partition(": ")
            if not sep:
                raise MetricParseError(f"malformed dram-energy line: {line!r}")
            close(dram=_leading_float(rest))
            in_section = False
    if in_section:
        close()
    if node_count == 0:
        raise MetricParseError("no 'Application Totals' section found (wrong input file)")
    return EnergyReport(tuple(entries), node_count)


def average_node_energy(report: EnergyReport) -> float:
    """Mean over nodes of package + dram energy, in joules."""
    total = sum(pkg + dram for pkg, dram in report.entries)
    return total / report.node_count


def edp(energy_joules: float, runtime_seconds: float) -> float:
    """Energy-delay product: energy times application runtime (joule-seconds)."""
    return energy_joules * runtime_seconds


def simulated_objective(space: ParamSpace, config: Configuration) -> float:
    """Deterministic synthetic objective over the encoded point.

    A quadratic bowl over the ordinal coordinates plus a fixed penalty table
    over the categorical ones; the unique minimizer sits at two-thirds of
    each ordinal range and the middle of each categorical listing, where the
    value is exactly 1.0. Pure and side-effect free.
    """
    total = 1.0
    for p, z in zip(space.parameters, space.encode(config)):
        n = len(p.values)
        i = int(z)
        if p.kind == "ordinal":
            target = (2 * (n - 1)) // 3
            span = max(1, n - 1)
            total += 4.0 * ((i - target) / span) ** 2
        else:
            target = n // 2
            if i != target:
                total += 0.3 + 0.4 * ((i * 5 + 1) % n) / n
    return total


def simulated_minimizer(space: ParamSpace) -> Configuration:
    """The documented unique minimizer of ``simulated_objective``."""
    out: Configuration = {}
    for p in space.parameters:
        n = len(p.values)
        target = (2 * (n - 1)) // 3 if p.kind == "ordinal" else n // 2
        out[p.name] = p.values[target]
    return out


Evaluator = Callable[[Configuration, int], TrialRecord]


def make_simulated_evaluator(space: ParamSpace, metric_kind: str = "runtime_s") -> Evaluator:
    """Evaluator that scores configurations with ``simulated_objective`` only."""

    def evaluator(config: Configuration, trial_index: int) -> TrialRecord:
        started = time.time()
        t0 = time.monotonic()
        value = simulated_objective(space, config)
        return TrialRecord(
            trial_index=trial_index,
            configuration=dict(config),
            metric_kind=metric_kind,
            value=value,
            status="ok",
            compile_time_s=0.0,
            app_runtime_s=0.0,
            elapsed_total_s=time.monotonic() - t0,
            started_at=started,
        )

    return evaluator


def _read_report_text(problem: "Problem", trial_dir: Path, plan_report: str | None) -> str:
    if plan_report is not None:
        path = trial_dir / plan_report
        if not path.exists():
            raise MetricParseError(f"expected report {path} was not produced")
        return path.read_text()
    if problem.geopm_report_glob:
        matches = sorted(trial_dir.glob(problem.geopm_report_glob))
        if not matches:
            raise MetricParseError(
                f"no report matching {problem.geopm_report_glob!r} under {trial_dir}"
            )
        return matches[0].read_text()
    raise MetricParseError("no report source configured for energy metric")


def evaluate_trial(
    problem: "Problem",
    config: Configuration,
    trial_index: int,
    trials_root: Path,
    timeout_s: float | None = None,
) -> TrialRecord:
    """Run one full trial: render -> compile -> launch -> parse.

    The trial directory is named by trial index so aborted or concurrent
    trials never collide, and it is retained afterwards for diagnosis. The
    status reflects the first failing stage; no exception escapes.
    """
    started = time.time()
    t0 = time.monotonic()
    if timeout_s is None:
        timeout_s = problem.timeout_s
    metric_kind = problem.metric_kind()
    trial_dir = Path(trials_root) / f"trial_{trial_index:05d}"

    def record(status, value=None, compile_time=0.0, app_runtime=None):
        return TrialRecord(
            trial_index=trial_index,
            configuration=dict(config),
            metric_kind=metric_kind,
            value=value,
            status=status,
            compile_time_s=compile_time,
            app_runtime_s=app_runtime,
            elapsed_total_s=time.monotonic() - t0,
            started_at=started,
        )

    compile_time = 0.0
    try:
        trial_dir.mkdir(parents=True, exist_ok=True)
        mold.render_molds(problem.molds, config, problem.base_dir, trial_dir)
    except Exception as exc:
        if trial_dir.exists():
            (trial_dir / "render_error.txt").write_text(str(exc))
        return record("compile_failed")

    bound_env = mold.bind_env(problem.env_bindings, config)
    run_env = {**os.environ, **bound_env}

    if problem.build_command:
        c0 = time.monotonic()
        try:
            built = subprocess.run(
                problem.build_command, shell=True, cwd=trial_dir, env=run_env,
                capture_output=True, text=True,
            )
        except Exception as exc:
            (trial_dir / "compile_error.txt").write_text(str(exc))
            return record("compile_failed")
        compile_time = time.monotonic() - c0
        (trial_dir / "compile_stdout.txt").write_text(built.stdout)
        (trial_dir / "compile_stderr.txt").write_text(built.stderr)
        if built.returncode != 0:
            return record("compile_failed", compile_time=compile_time)

    try:
        report_name = f"gm.{trial_index}.report" if problem.launch.kind == "geopm_aprun" else None
        plan = build_plan(
            problem.launch,
            problem.thread_count(config),
            bound_env,
            str(problem.executable),
            report=report_name,
        )
    except Exception as exc:
        (trial_dir / "run_error.txt").write_text(str(exc))
        return record("run_failed", compile_time=compile_time)

    try:
        # own session so a timeout can kill the whole process tree, not just
        # the direct child (a surviving grandchild would hold the pipes open)
        proc = subprocess.Popen(
            list(plan.argv), cwd=trial_dir, env=run_env, text=True,
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, start_new_session=True,
        )
    except Exception as exc:
        (trial_dir / "run_error.txt").write_text(str(exc))
        return record("run_failed", compile_time=compile_time)
    try:
        stdout, stderr = proc.communicate(timeout=timeout_s)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        proc.communicate()
        return record("timeout", compile_time=compile_time)
    (trial_dir / "run_stdout.txt").write_text(stdout)
    (trial_dir / "run_stderr.txt").write_text(stderr)
    if proc.returncode != 0:
        return record("run_failed", compile_time=compile_time)

    try:
        app_runtime = None
        if problem.metric == "runtime":
            app_runtime = parse_runtime(stdout)
            value = app_runtime
        else:
            report = parse_geopm_report(_read_report_text(problem, trial_dir, plan.report))
            energy = average_node_energy(report)
            if problem.metric == "energy":
                value = energy
                try:
                    app_runtime = parse_runtime(stdout)
                except MetricParseError:
                    app_runtime = None
            else:  # edp
                app_runtime = parse_runtime(stdout)
                value = edp(energy, app_runtime)
    except MetricParseError as exc:
        (trial_dir / "parse_error.txt").write_text(str(exc))
        return record("parse_failed", compile_time=compile_time)

    return record("ok", value=value, compile_time=compile_time, app_runtime=app_runtime)


def make_live_evaluator(problem: "Problem", trials_root: Path) -> Evaluator:
    """Evaluator that runs the real pipeline, one trial directory per call."""

    def evaluator(config: Configuration, trial_index: int) -> TrialRecord:
        return evaluate_trial(problem, config, trial_index, trials_root)

    return evaluator
