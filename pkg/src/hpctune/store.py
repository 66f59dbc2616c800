"""Append-only trial log with best-so-far queries, overhead accounting, and exports.

On-disk format is line-oriented JSON: the first line is a header object
carrying immutable search metadata, then one record object per line. Each
line is self-delimiting, appends are flushed and fsynced before returning,
and a reader of a truncated file recovers every complete record, so a killed
run always leaves a loadable log. Exports: a results CSV (one column per
parameter, then objective, then elapsed_sec) and a plot TSV of wall-clock
seconds versus best value so far.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from .evaluate import TrialRecord
from .space import Configuration

_HEADER_KIND = "hpctune-log-v1"

# Clock skew allowance when deriving per-trial framework overhead.
CLOCK_TOLERANCE_S = 0.05


@dataclass(frozen=True)
class LogMetadata:
    """Search-level facts fixed at log creation."""

    problem_name: str
    seed: int
    space_fingerprint: str
    parameter_names: tuple[str, ...]
    cardinality: int
    metric_kind: str
    launcher_kind: str
    max_evals: int | None
    wall_clock_limit_s: float | None
    created_at: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameter_names", tuple(self.parameter_names))

    @classmethod
    def from_dict(cls, doc: dict) -> "LogMetadata":
        return cls(**doc)


class TrialLog:
    """Single-writer append-only log; safe for concurrent readers of the file."""

    def __init__(self, path: Path, metadata: LogMetadata, records: list[TrialRecord], *, _create: bool):
        self.path = Path(path)
        self.metadata = metadata
        self.records = records
        if _create:
            if self.path.exists():
                raise FileExistsError(f"log already exists: {self.path}")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            header = {"kind": _HEADER_KIND, "metadata": asdict(metadata)}
            self._write_line(json.dumps(header, sort_keys=True))

    @classmethod
    def create(cls, path: Path, metadata: LogMetadata) -> "TrialLog":
        return cls(path, metadata, [], _create=True)

    @classmethod
    def load(cls, path: Path) -> "TrialLog":
        """Read back a log, keeping every complete record and dropping a
        truncated or corrupt tail."""
        path = Path(path)
        with open(path, "r") as fh:
            lines = fh.read().split("\n")
        if not lines or not lines[0]:
            raise ValueError(f"{path}: missing log header")
        header = json.loads(lines[0])
        if header.get("kind") != _HEADER_KIND:
            raise ValueError(f"{path}: not a trial log (kind={header.get('kind')!r})")
        metadata = LogMetadata.from_dict(header["metadata"])
        records: list[TrialRecord] = []
        for line in lines[1:]:
            if not line:
                continue
            try:
                record = TrialRecord.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                break  # incomplete tail: stop at the last complete record
            if record.trial_index != len(records):
                break
            records.append(record)
        return cls(path, metadata, records, _create=False)

    def _write_line(self, line: str) -> None:
        with open(self.path, "a") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def append(self, record: TrialRecord) -> None:
        """Durable append; the record must carry the next trial index."""
        if record.trial_index != len(self.records):
            raise ValueError(
                f"trial_index {record.trial_index} out of order (expected {len(self.records)})"
            )
        self._write_line(json.dumps(record.to_dict(), sort_keys=True))
        self.records.append(record)

    def ok_records(self) -> list[TrialRecord]:
        return [r for r in self.records if r.status == "ok"]


def best(log: TrialLog) -> tuple[Configuration, float] | None:
    """Minimum-value ok record (earliest wins ties), or None when no trial succeeded."""
    found = None
    for r in log.ok_records():
        if found is None or r.value < found.value:
            found = r
    if found is None:
        return None
    return dict(found.configuration), found.value


def best_trace(log: TrialLog) -> list[tuple[float, float]]:
    """(wall-clock seconds since search start, best value so far) at each ok
    record's completion time."""
    trace: list[tuple[float, float]] = []
    running = float("inf")
    start = log.metadata.created_at
    for r in log.ok_records():
        running = min(running, r.value)
        trace.append((r.started_at + r.elapsed_total_s - start, running))
    return trace


def improvement_pct(baseline: float, best_value: float) -> float:
    """Percent improvement of best over baseline: 100*(baseline-best)/baseline."""
    if baseline <= 0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    return 100.0 * (baseline - best_value) / baseline


def overhead(record: TrialRecord) -> float | None:
    """Per-trial framework time: elapsed minus application runtime minus compile time.

    None when the trial never produced an application runtime. A small
    negative raw value (clock skew up to CLOCK_TOLERANCE_S) clamps to zero;
    anything more negative means the record's timing fields are inconsistent.
    """
    if record.app_runtime_s is None:
        return None
    raw = record.elapsed_total_s - record.app_runtime_s - record.compile_time_s
    if raw < -CLOCK_TOLERANCE_S:
        raise ValueError(f"inconsistent timing fields (overhead {raw:.3f}s)")
    return max(0.0, raw)


def export_csv(log: TrialLog, path: Path) -> None:
    """Results table: one row per trial, configuration columns first, then the
    objective, then elapsed_sec (completion offset from search start; the one
    timing column, kept separate so the rest of the row is deterministic)."""
    names = log.metadata.parameter_names
    start = log.metadata.created_at
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*names, "objective", "elapsed_sec"])
        for r in log.records:
            objective = "" if r.value is None else repr(r.value)
            elapsed = repr(r.started_at + r.elapsed_total_s - start)
            writer.writerow([*(r.configuration[n] for n in names), objective, elapsed])


def export_plot_tsv(log: TrialLog, path: Path) -> None:
    """Two-column TSV (wall_clock_s, best_value) consumable by any plotting tool."""
    with open(path, "w") as fh:
        fh.write("wall_clock_s\tbest_value\n")
        for t, v in best_trace(log):
            fh.write(f"{t!r}\t{v!r}\n")


def validate_results_csv(path: Path, parameter_names: list[str]) -> int:
    """Check the results CSV against its schema; returns the row count."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    expected_header = [*parameter_names, "objective", "elapsed_sec"]
    if not rows or rows[0] != expected_header:
        raise ValueError(f"{path}: bad header {rows[0] if rows else None!r}")
    for row in rows[1:]:
        if len(row) != len(expected_header):
            raise ValueError(f"{path}: row width {len(row)} != {len(expected_header)}")
        if row[-2]:
            float(row[-2])
        float(row[-1])
    return len(rows) - 1


def validate_plot_tsv(path: Path) -> int:
    """Check the plot TSV schema and that best values never increase; returns row count."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "wall_clock_s\tbest_value":
        raise ValueError(f"{path}: bad header")
    previous = float("inf")
    for line in lines[1:]:
        t, v = line.split("\t")
        float(t)
        value = float(v)
        if value > previous:
            raise ValueError(f"{path}: best_value increased ({value} after {previous})")
        previous = value
    return len(lines) - 1
