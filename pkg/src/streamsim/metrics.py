"""Per-batch and per-stage records, run summaries and CSV/JSON export."""

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

BATCH_COLUMNS = [
    "batch_id", "size_bytes", "created_ms", "dequeued_ms", "first_stage_start_ms",
    "finished_ms", "scheduling_delay_ms", "processing_time_ms", "empty",
    "scheduling_delay_s", "processing_time_s",
]
STAGE_COLUMNS = ["batch_id", "stage_id", "worker_id", "start_ms", "end_ms"]


class RecordError(RuntimeError):
    """A record with impossible timestamps reached the collector."""


class OutputError(OSError):
    pass


@dataclass(frozen=True)
class BatchRecord:
    batch_id: int
    size: int
    created_at: int
    dequeued_at: int
    first_stage_start: int
    finished_at: int

    @property
    def scheduling_delay(self) -> int:
        return self.dequeued_at - self.created_at

    @property
    def processing_time(self) -> int:
        return self.finished_at - self.dequeued_at

    @property
    def empty(self) -> bool:
        return self.size == 0


@dataclass(frozen=True)
class StageRecord:
    batch_id: int
    stage_id: str
    worker_id: int
    start: int
    end: int


@dataclass
class RunSummary:
    batches_total: int
    batches_empty: int
    batches_completed: int
    mean_scheduling_delay_ms: Optional[float]
    max_scheduling_delay_ms: Optional[int]
    mean_processing_time_ms: Optional[float]
    max_processing_time_ms: Optional[int]
    generation_interval_min_ms: Optional[int]
    generation_interval_max_ms: Optional[int]
    stability_threshold_ms: int
    stable: bool
    arrived_bytes: int
    deadlock: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MetricsCollector:
    records: list[BatchRecord] = field(default_factory=list)
    stages: list[StageRecord] = field(default_factory=list)
    generated: list[tuple[int, int, int]] = field(default_factory=list)  # (id, size, created)
    dispatched: list[tuple[int, int]] = field(default_factory=list)  # (id, dequeued_at)

    def record_generated(self, batch_id: int, size: int, created_at: int) -> None:
        self.generated.append((batch_id, size, created_at))

    def record_dispatch(self, batch_id: int, dequeued_at: int) -> None:
        self.dispatched.append((batch_id, dequeued_at))

    def record_stage(self, rec: StageRecord) -> None:
        if rec.start > rec.end:
            raise RecordError(f"stage {rec.stage_id} of batch {rec.batch_id} ends before it starts")
        self.stages.append(rec)

    def record_batch(self, rec: BatchRecord) -> None:
        if not rec.created_at <= rec.dequeued_at <= rec.first_stage_start <= rec.finished_at:
            raise RecordError(f"timestamps out of order: {rec}")
        self.records.append(rec)

    def summarize(self, stability_threshold: int, arrived_bytes: int,
                  deadlock: bool = False) -> RunSummary:
        recs = self.records
        delays = [r.scheduling_delay for r in recs]
        ptimes = [r.processing_time for r in recs]
        created = [c for _, _, c in self.generated]
        gaps = [b - a for a, b in zip(created, created[1:])]
        max_delay = max(delays) if delays else None
        return RunSummary(
            batches_total=len(self.generated),
            batches_empty=sum(1 for _, size, _ in self.generated if size == 0),
            batches_completed=len(recs),
            mean_scheduling_delay_ms=_mean(delays),
            max_scheduling_delay_ms=max_delay,
            mean_processing_time_ms=_mean(ptimes),
            max_processing_time_ms=max(ptimes) if ptimes else None,
            generation_interval_min_ms=min(gaps) if gaps else None,
            generation_interval_max_ms=max(gaps) if gaps else None,
            stability_threshold_ms=stability_threshold,
            stable=max_delay is None or max_delay <= stability_threshold,
            arrived_bytes=arrived_bytes,
            deadlock=deadlock,
        )


def _mean(values):
    # rounded so summary.json stays stable across platforms
    return round(sum(values) / len(values), 6) if values else None


def _seconds(ms: int) -> str:
    return f"{ms / 1000:.3f}"


def export_csv(collector: MetricsCollector, summary: RunSummary, out_dir) -> dict[str, Path]:
    """Write batches.csv, stages.csv and summary.json into ``out_dir``."""
    out = Path(out_dir)
    paths = {
        "batches": out / "batches.csv",
        "stages": out / "stages.csv",
        "summary": out / "summary.json",
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(paths["batches"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(BATCH_COLUMNS)
            for r in collector.records:
                w.writerow([
                    r.batch_id, r.size, r.created_at, r.dequeued_at, r.first_stage_start,
                    r.finished_at, r.scheduling_delay, r.processing_time, int(r.empty),
                    _seconds(r.scheduling_delay), _seconds(r.processing_time),
                ])
        with open(paths["stages"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(STAGE_COLUMNS)
            for s in collector.stages:
                w.writerow([s.batch_id, s.stage_id, s.worker_id, s.start, s.end])
        with open(paths["summary"], "w", newline="") as fh:
            json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(exc.errno, f"cannot write results to {out}: {exc.strerror}") from exc
    return paths


def write_trace(lines: list[str], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            for line in lines:
                fh.write(line + "\n")
    except OSError as exc:
        raise OutputError(exc.errno, f"cannot write trace {path}: {exc.strerror}") from exc


def read_batches_csv(path) -> list[BatchRecord]:
    with open(path, newline="") as fh:
        return [
            BatchRecord(int(row["batch_id"]), int(row["size_bytes"]), int(row["created_ms"]),
                        int(row["dequeued_ms"]), int(row["first_stage_start_ms"]),
                        int(row["finished_ms"]))
            for row in csv.DictReader(fh)
        ]


def peak_overlap(intervals) -> int:
    """Largest number of half-open ``[start, end)`` intervals alive at once.

    Zero-length intervals count as alive at their instant.
    """
    points = []
    for start, end in intervals:
        if end == start:
            points.append((start, 1, 1))
            points.append((start, 2, -1))
        else:
            points.append((start, 1, 1))
            points.append((end, 0, -1))
    # at equal times: ends (0) before starts (1) before zero-length ends (2)
    points.sort()
    live = peak = 0
    for _, _, delta in points:
        live += delta
        peak = max(peak, live)
    return peak


def audit(collector: MetricsCollector, *, workers: int, con_jobs: int,
          arrived_bytes: int, buffered_bytes: int, constraints: dict[str, tuple[str, ...]],
          horizon: int) -> list[str]:
    """Post-hoc consistency checks over the emitted logs; returns violations."""
    problems = []

    generated_bytes = sum(size for _, size, _ in collector.generated)
    if generated_bytes + buffered_bytes != arrived_bytes:
        problems.append(f"bytes not conserved: arrived {arrived_bytes}, batched "
                        f"{generated_bytes}, still buffered {buffered_bytes}")

    ids = [bid for bid, _ in collector.dispatched]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        problems.append("dispatch order is not strictly increasing in batch id")

    created = [c for _, _, c in collector.generated]
    if len(set(b - a for a, b in zip(created, created[1:]))) > 1:
        problems.append("batch generation intervals are not constant")

    stage_peak = peak_overlap((s.start, s.end) for s in collector.stages)
    if stage_peak > workers:
        problems.append(f"{stage_peak} concurrent stage executions on {workers} workers")

    per_worker: dict[int, list] = {}
    for s in collector.stages:
        per_worker.setdefault(s.worker_id, []).append((s.start, s.end))
    for wid, spans in per_worker.items():
        if peak_overlap(spans) > 1:
            problems.append(f"worker {wid} ran overlapping stages")

    finished = {r.batch_id: r.finished_at for r in collector.records}
    jobs = [(t, finished.get(bid, horizon + 1)) for bid, t in collector.dispatched]
    job_peak = peak_overlap(jobs)
    if job_peak > con_jobs:
        problems.append(f"{job_peak} jobs ran concurrently with conJobs={con_jobs}")

    ends: dict[tuple[int, str], int] = {(s.batch_id, s.stage_id): s.end for s in collector.stages}
    for s in collector.stages:
        for dep in constraints.get(s.stage_id, ()):
            dep_end = ends.get((s.batch_id, dep))
            if dep_end is None or s.start < dep_end:
                problems.append(f"batch {s.batch_id}: {s.stage_id} started at {s.start} "
                                f"before {dep} finished")
    return problems


def ensure_writable(out_dir) -> None:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(exc.errno, f"cannot create {out}: {exc.strerror}") from exc
    if not os.access(out, os.W_OK):
        raise OutputError(13, f"output directory {out} is not writable")
