"""The streaming driver: batch generator, FIFO job scheduler and job managers.

Each method here is a simulated process.  The control flow follows the
generator/scheduler/manager loops operation for operation; only the
bookkeeping needed for metrics is added.
"""

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .arrivals import ArrivalSource, ReceiveBuffer, stream_receiver
from .cluster import WorkerPool
from .engine import Engine, SimulationError, Sleep, WaitFor
from .metrics import BatchRecord, MetricsCollector, StageRecord
from .workload import Batch, JobWorkflow, StageSpec, check_constraints, cost_per_stage

SEQUENTIAL = "sequential"
PARALLEL = "parallel"


@dataclass
class DriverState:
    con_jobs: int
    bi: int
    buffer: ReceiveBuffer = field(default_factory=ReceiveBuffer)
    queue: deque = field(default_factory=deque)
    running_jobs: int = 0
    next_batch_id: int = 1

    @property
    def buffer_size(self) -> int:
        return self.buffer.data_size


@dataclass
class JobRun:
    batch: Batch
    dequeued_at: int
    pending: deque = field(default_factory=deque)
    fin: list = field(default_factory=list)
    first_stage_start: Optional[int] = None
    finished_at: Optional[int] = None


class SparkDriver:
    def __init__(self, engine: Engine, pool: WorkerPool, workflow: JobWorkflow, *,
                 bi: int, con_jobs: int = 1, stage_dispatch: str = SEQUENTIAL,
                 poll_quantum: int = 1, cost_rng: Optional[random.Random] = None,
                 metrics: Optional[MetricsCollector] = None):
        if bi < 1:
            raise ValueError("batch interval must be at least one tick")
        if con_jobs < 1:
            raise ValueError("conJobs must be at least 1")
        if stage_dispatch not in (SEQUENTIAL, PARALLEL):
            raise ValueError(f"unknown stage dispatch mode {stage_dispatch!r}")
        self.engine = engine
        self.pool = pool
        self.workflow = workflow
        self.state = DriverState(con_jobs=con_jobs, bi=bi)
        self.stage_dispatch = stage_dispatch
        self.poll_quantum = poll_quantum
        self.cost_rng = cost_rng or random.Random(0)
        self.metrics = metrics if metrics is not None else MetricsCollector()
        self.slots = engine.condition("runningJob")
        self.queued = engine.condition("queue")
        self.active: dict[int, JobRun] = {}

    def start(self, source: Optional[ArrivalSource] = None) -> None:
        """Launch receiver, generator and scheduler, as the main block would."""
        if source is not None:
            self.engine.spawn(self.arrival_process(source), "streamReceiver")
        self.engine.spawn(self.batch_generator(), "batchGenerator")
        self.engine.spawn(self.job_scheduler(), "jobScheduler")

    # -- data ingestion ------------------------------------------------------

    def arrival_process(self, source: ArrivalSource):
        while True:
            ev = source.next()
            if ev is None:
                self.engine.log("streamReceiver", "end-of-stream")
                return
            if ev.at > self.engine.now:
                yield Sleep(ev.at - self.engine.now)
            stream_receiver(ev, self.state.buffer, self.engine.now)
            self.engine.log("streamReceiver", f"arrival {ev.size}")

    # -- the three driver loops ----------------------------------------------

    def batch_generator(self):
        st = self.state
        while True:
            yield Sleep(st.bi)
            now = self.engine.now
            size = st.buffer.cut(now)
            batch = Batch(st.next_batch_id, size, now)
            st.queue.append(batch)
            st.next_batch_id += 1
            self.metrics.record_generated(batch.id, batch.size, now)
            self.engine.log("batchGenerator", f"batch {batch.id} size {size}")

    def job_scheduler(self):
        st = self.state
        while True:
            yield WaitFor(self.slots, lambda: st.running_jobs < st.con_jobs)
            yield WaitFor(self.queued, lambda: len(st.queue) > 0)
            batch = st.queue.popleft()
            run = JobRun(batch, dequeued_at=self.engine.now,
                         pending=deque(self.workflow.stages_for(batch)))
            self.active[batch.id] = run
            self.metrics.record_dispatch(batch.id, self.engine.now)
            manager = self.job_manager if self.stage_dispatch == SEQUENTIAL else self.parallel_job_manager
            self.engine.spawn(manager(run), f"jobManager-{batch.id}")
            st.running_jobs += 1
            if st.running_jobs > st.con_jobs:
                raise SimulationError("running jobs exceeded conJobs")
            self.engine.log("jobScheduler", f"dispatch {batch.id}")

    def job_manager(self, run: JobRun):
        total = len(run.pending)
        while len(run.fin) < total:
            s = run.pending[0]
            if check_constraints(s.constraints, run.fin):
                yield from self._execute_stage(run, s)
                run.pending.popleft()
            else:
                run.pending.rotate(-1)
            yield Sleep(self.poll_quantum)
        self._finish(run)

    def parallel_job_manager(self, run: JobRun):
        """Launch every satisfied stage at once instead of awaiting each one."""
        total = len(run.pending)
        started: set[str] = set()
        while len(run.fin) < total:
            for s in run.pending:
                if s.id not in started and check_constraints(s.constraints, run.fin):
                    started.add(s.id)
                    self.engine.spawn(self._execute_stage(run, s),
                                      f"stage-{run.batch.id}-{s.id}")
            yield Sleep(self.poll_quantum)
        self._finish(run)

    def _execute_stage(self, run: JobRun, s: StageSpec):
        w = yield from self.pool.acquire()
        start = self.engine.now
        if run.first_stage_start is None:
            run.first_stage_start = start
        cost = cost_per_stage(s, run.batch.size, self.cost_rng)
        self.engine.log(f"worker-{w.id}", f"exe {run.batch.id}/{s.id} cost {cost}")
        yield from w.exe(self.engine, cost)
        run.fin.append(s.id)
        self.pool.release(w)
        self.metrics.record_stage(StageRecord(run.batch.id, s.id, w.id, start, self.engine.now))

    def _finish(self, run: JobRun) -> None:
        run.finished_at = self.engine.now
        self.state.running_jobs -= 1
        del self.active[run.batch.id]
        b = run.batch
        self.metrics.record_batch(BatchRecord(b.id, b.size, b.created_at, run.dequeued_at,
                                              run.first_stage_start, run.finished_at))
        self.engine.log(f"jobManager-{b.id}", "finished")
