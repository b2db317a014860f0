import csv
import json

import pytest

from conftest import make_config
from streamsim.metrics import (
    BATCH_COLUMNS, STAGE_COLUMNS, BatchRecord, MetricsCollector, RecordError, StageRecord,
    audit, export_csv, peak_overlap, read_batches_csv,
)
from streamsim.simulation import run_simulation


def test_zero_delay_record():
    rec = BatchRecord(1, 1024, 2000, 2000, 2000, 5350)
    assert rec.scheduling_delay == 0 and rec.processing_time == 3350 and not rec.empty


def test_backlog_record():
    # second batch of a single-server queue waits s1 - bi = 3350 - 2000
    bi, s1 = 2000, 3350
    rec = BatchRecord(2, 1024, 4000, 2000 + s1, 2000 + s1, 8700)
    assert rec.scheduling_delay == 1350 == s1 - bi


def test_empty_record():
    rec = BatchRecord(3, 0, 6000, 6000, 6000, 6101)
    assert rec.empty and rec.processing_time == 101


def test_out_of_order_timestamps_rejected():
    c = MetricsCollector()
    with pytest.raises(RecordError):
        c.record_batch(BatchRecord(1, 0, 100, 50, 60, 70))
    with pytest.raises(RecordError):
        c.record_stage(StageRecord(1, "S1", 0, 10, 9))


def test_summary_fields():
    c = MetricsCollector()
    for i, (size, created) in enumerate([(1, 2000), (0, 4000), (5, 6000)], start=1):
        c.record_generated(i, size, created)
    c.record_batch(BatchRecord(1, 1, 2000, 2000, 2000, 5000))
    c.record_batch(BatchRecord(2, 0, 4000, 5000, 5000, 5101))
    s = c.summarize(stability_threshold=2000, arrived_bytes=6)
    assert (s.batches_total, s.batches_empty, s.batches_completed) == (3, 1, 2)
    assert s.max_scheduling_delay_ms == 1000 and s.mean_scheduling_delay_ms == 500
    assert s.generation_interval_min_ms == s.generation_interval_max_ms == 2000
    assert s.stable
    assert not c.summarize(stability_threshold=999, arrived_bytes=6).stable


def test_summary_of_empty_run():
    s = MetricsCollector().summarize(2000, 0)
    assert s.batches_total == 0 and s.max_scheduling_delay_ms is None and s.stable


def test_export_five_batches(tmp_path):
    cfg = make_config(horizon_ms=10_000, concurrent_jobs=5)
    res = run_simulation(cfg)
    export_csv(res.metrics, res.summary, tmp_path)
    with open(tmp_path / "batches.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == BATCH_COLUMNS
    assert len(rows) == 1 + len(res.records)
    with open(tmp_path / "stages.csv") as fh:
        assert next(csv.reader(fh)) == STAGE_COLUMNS
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["batches_total"] == 5
    assert read_batches_csv(tmp_path / "batches.csv") == res.records


def test_export_is_byte_identical(tmp_path):
    cfg = make_config(horizon_ms=100_000)
    for d in ("a", "b"):
        res = run_simulation(cfg)
        export_csv(res.metrics, res.summary, tmp_path / d)
    for name in ("batches.csv", "stages.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_export_to_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = run_simulation(make_config())
    with pytest.raises(OSError):
        export_csv(res.metrics, res.summary, blocker / "sub")


@pytest.mark.parametrize("intervals,peak", [
    ([], 0),
    ([(0, 10), (10, 20)], 1),
    ([(0, 10), (5, 20), (6, 7)], 3),
    ([(5, 5), (5, 5)], 2),
    ([(0, 10), (10, 10)], 1),
])
def test_peak_overlap(intervals, peak):
    assert peak_overlap(intervals) == peak


def test_audit_catches_broken_logs():
    c = MetricsCollector()
    c.record_generated(1, 10, 2000)
    c.record_generated(2, 0, 3000)
    c.record_generated(3, 0, 4500)
    c.record_dispatch(2, 3000)
    c.record_dispatch(1, 3000)
    c.record_stage(StageRecord(1, "S2", 0, 0, 5))
    c.record_stage(StageRecord(1, "S1", 0, 3, 8))
    problems = audit(c, workers=1, con_jobs=1, arrived_bytes=11, buffered_bytes=0,
                     constraints={"S2": ("S1",)}, horizon=10_000)
    text = "\n".join(problems)
    for fragment in ("bytes not conserved", "strictly increasing", "not constant",
                     "concurrent stage", "overlapping", "jobs ran concurrently", "before S1"):
        assert fragment in text
