from __future__ import annotations

import random

import pytest

from hpctune.evaluate import TrialRecord
from hpctune.store import (
    LogMetadata,
    TrialLog,
    best,
    best_trace,
    export_csv,
    export_plot_tsv,
    improvement_pct,
    overhead,
    validate_plot_tsv,
    validate_results_csv,
)

START = 1_000_000.0


def metadata(**overrides):
    doc = dict(
        problem_name="t",
        seed=1,
        space_fingerprint="abc",
        parameter_names=("a", "b"),
        cardinality=6,
        metric_kind="runtime_s",
        launcher_kind="local_shell",
        max_evals=10,
        wall_clock_limit_s=None,
        created_at=START,
    )
    doc.update(overrides)
    return LogMetadata(**doc)


def record(index, value, *, status="ok", offset=None, elapsed=1.0, config=None):
    return TrialRecord(
        trial_index=index,
        configuration=config or {"a": str(index % 3), "b": "x"},
        metric_kind="runtime_s",
        value=value,
        status=status,
        compile_time_s=0.1,
        app_runtime_s=(value if status == "ok" else None),
        elapsed_total_s=elapsed,
        started_at=START + (offset if offset is not None else 10.0 * index),
    )


def test_append_and_reload_round_trip(tmp_path):
    log = TrialLog.create(tmp_path / "log.jsonl", metadata())
    for i, v in enumerate([5.0, 3.0, 4.0]):
        log.append(record(i, v, elapsed=3.0))
    loaded = TrialLog.load(tmp_path / "log.jsonl")
    assert loaded.metadata == log.metadata
    assert loaded.records == log.records
    assert [r.trial_index for r in loaded.records] == [0, 1, 2]


def test_append_rejects_index_gap(tmp_path):
    log = TrialLog.create(tmp_path / "log.jsonl", metadata())
    log.append(record(0, 1.0))
    with pytest.raises(ValueError):
        log.append(record(2, 1.0))


def test_create_refuses_existing_file(tmp_path):
    TrialLog.create(tmp_path / "log.jsonl", metadata())
    with pytest.raises(FileExistsError):
        TrialLog.create(tmp_path / "log.jsonl", metadata())


def test_truncated_tail_recovers_complete_records(tmp_path):
    path = tmp_path / "log.jsonl"
    log = TrialLog.create(path, metadata())
    for i in range(3):
        log.append(record(i, float(i)))
    blob = path.read_bytes()
    path.write_bytes(blob[:-10])  # cut into the last record
    loaded = TrialLog.load(path)
    assert len(loaded.records) == 2
    assert [r.value for r in loaded.records] == [0.0, 1.0]


def test_pragma_values_round_trip_byte_equal(tmp_path):
    path = tmp_path / "log.jsonl"
    log = TrialLog.create(path, metadata(parameter_names=("p2", "p3")))
    config = {"p2": '#pragma clang loop unrolling full, "quoted"', "p3": " "}
    log.append(record(0, 1.0, config=config))
    loaded = TrialLog.load(path)
    assert loaded.records[0].configuration == config


def test_best_and_trace_example(tmp_path):
    log = TrialLog.create(tmp_path / "log.jsonl", metadata())
    for i, (v, t) in enumerate([(5.0, 10.0), (3.0, 20.0), (4.0, 30.0)]):
        log.append(record(i, v, offset=t - 1.0, elapsed=1.0))
    assert best_trace(log) == [(10.0, 5.0), (20.0, 3.0), (30.0, 3.0)]
    config, value = best(log)
    assert value == 3.0
    assert config == log.records[1].configuration


def test_best_tie_keeps_earliest(tmp_path):
    log = TrialLog.create(tmp_path / "log.jsonl", metadata())
    log.append(record(0, 3.0, config={"a": "first", "b": "x"}))
    log.append(record(1, 3.0, config={"a": "second", "b": "x"}))
    config, _ = best(log)
    assert config["a"] == "first"


def test_best_none_when_all_failed(tmp_path):
    log = TrialLog.create(tmp_path / "log.jsonl", metadata())
    log.append(record(0, None, status="run_failed"))
    assert best(log) is None
    assert best_trace(log) == []


def test_single_record_trace(tmp_path):
    log = TrialLog.create(tmp_path / "log.jsonl", metadata())
    log.append(record(0, 2.5, offset=4.0, elapsed=1.0))
    assert best_trace(log) == [(5.0, 2.5)]


def test_trace_matches_brute_force_on_random_log(tmp_path):
    rng = random.Random(8)
    log = TrialLog.create(tmp_path / "log.jsonl", metadata(max_evals=200))
    values = []
    for i in range(200):
        failed = rng.random() < 0.1
        v = None if failed else rng.uniform(1, 100)
        log.append(record(i, v, status="run_failed" if failed else "ok"))
        if not failed:
            values.append(v)
    trace = best_trace(log)
    running = []
    m = float("inf")
    for v in values:
        m = min(m, v)
        running.append(m)
    assert [v for _, v in trace] == running
    assert all(trace[i][1] >= trace[i + 1][1] for i in range(len(trace) - 1))


class TestImprovement:
    def test_paper_headline_numbers(self):
        assert improvement_pct(171.595, 14.427) == pytest.approx(91.59, abs=0.005)
        assert improvement_pct(8384.034, 6606.233) == pytest.approx(21.20, abs=0.005)
        assert improvement_pct(2494.905, 2280.806) == pytest.approx(8.58, abs=0.005)

    def test_no_improvement(self):
        assert improvement_pct(3.31, 3.31) == 0.0

    def test_algebraic_identity(self):
        for p in [0.0, 1.5, 12.34, 50.0, 99.9]:
            assert improvement_pct(7.0, 7.0 * (1 - p / 100.0)) == pytest.approx(p, abs=1e-9)

    def test_rejects_non_positive_baseline(self):
        with pytest.raises(ValueError):
            improvement_pct(0.0, 1.0)
        with pytest.raises(ValueError):
            improvement_pct(-5.0, 1.0)


class TestOverhead:
    def make(self, elapsed, app, compile_):
        return TrialRecord(
            trial_index=0, configuration={}, metric_kind="runtime_s", value=app,
            status="ok" if app is not None else "run_failed",
            compile_time_s=compile_, app_runtime_s=app, elapsed_total_s=elapsed,
        )

    def test_example(self):
        assert overhead(self.make(70.0, 3.3, 2.0)) == pytest.approx(64.7)

    def test_zero(self):
        assert overhead(self.make(10.0, 10.0, 0.0)) == 0.0

    def test_undefined_for_failed_trial(self):
        assert overhead(self.make(10.0, None, 0.0)) is None

    def test_clamps_within_tolerance(self):
        assert overhead(self.make(10.0, 10.03, 0.0)) == 0.0

    def test_rejects_beyond_tolerance(self):
        with pytest.raises(ValueError):
            overhead(self.make(10.0, 11.0, 0.0))


def test_csv_and_plot_exports(tmp_path):
    log = TrialLog.create(tmp_path / "log.jsonl", metadata())
    for i, v in enumerate([5.0, None, 3.0]):
        log.append(record(i, v, status="ok" if v is not None else "run_failed"))
    csv_path = tmp_path / "results.csv"
    tsv_path = tmp_path / "trace.tsv"
    export_csv(log, csv_path)
    export_plot_tsv(log, tsv_path)
    assert validate_results_csv(csv_path, ["a", "b"]) == 3
    assert validate_plot_tsv(tsv_path) == 2
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "a,b,objective,elapsed_sec"
    assert lines[2].split(",")[2] == ""  # failed trial has empty objective


def test_validate_results_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,objective\n1,2\n")
    with pytest.raises(ValueError):
        validate_results_csv(path, ["a", "b"])


def test_validate_plot_tsv_rejects_increase(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("wall_clock_s\tbest_value\n1.0\t5.0\n2.0\t6.0\n")
    with pytest.raises(ValueError):
        validate_plot_tsv(path)


def test_load_rejects_non_log(tmp_path):
    path = tmp_path / "x.jsonl"
    path.write_text('{"kind": "something-else"}\n')
    with pytest.raises(ValueError):
        TrialLog.load(path)
