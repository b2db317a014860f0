"""Wires a SimConfig into an engine run and collects the results."""

import random
from dataclasses import dataclass, field
from typing import Optional

from .arrivals import ArrivalSource
from .cluster import WorkerPool, conf_setup
from .config import SimConfig
from .driver import SparkDriver
from .engine import Engine
from .metrics import MetricsCollector, RunSummary, audit


@dataclass
class SimulationResult:
    config: SimConfig
    metrics: MetricsCollector
    summary: RunSummary
    arrived_bytes: int
    buffered_bytes: int
    end_time: int
    events: int
    pool: Optional[WorkerPool] = None
    trace: list[str] = field(default_factory=list)
    live_violations: list[str] = field(default_factory=list)

    @property
    def records(self):
        return self.metrics.records

    def audit(self) -> list[str]:
        cfg = self.config
        constraints = {s.id: s.constraints for s in cfg.workflow.stages}
        return self.live_violations + audit(
            self.metrics, workers=cfg.workers.count, con_jobs=cfg.concurrent_jobs,
            arrived_bytes=self.arrived_bytes, buffered_bytes=self.buffered_bytes,
            constraints=constraints, horizon=cfg.horizon_ms)


def stream_rngs(seed: int) -> tuple[random.Random, random.Random]:
    """Independent arrival and cost generators derived from one seed."""
    return random.Random(f"{seed}/arrivals"), random.Random(f"{seed}/costs")


class _LiveAuditor:
    """Checks the slot cap and worker conservation after every event."""

    def __init__(self, driver: SparkDriver, pool: WorkerPool, limit: int = 20):
        self.driver = driver
        self.pool = pool
        self.limit = limit
        self.violations: list[str] = []

    def __call__(self, engine: Engine) -> None:
        if len(self.violations) >= self.limit:
            return
        st = self.driver.state
        if st.running_jobs > st.con_jobs:
            self.violations.append(f"t={engine.now}: running_jobs {st.running_jobs} > {st.con_jobs}")
        if len(self.driver.active) != st.running_jobs:
            self.violations.append(f"t={engine.now}: {len(self.driver.active)} active jobs, "
                                   f"counter says {st.running_jobs}")
        if not self.pool.conserved():
            self.violations.append(f"t={engine.now}: idle {len(self.pool.idle)} + busy "
                                   f"{self.pool.in_flight} != {self.pool.total}")


def run_simulation(config: SimConfig, *, trace: Optional[bool] = None,
                   live_audit: bool = True) -> SimulationResult:
    engine = Engine(trace=config.event_trace if trace is None else trace)
    arrival_rng, cost_rng = stream_rngs(config.seed)
    pool = conf_setup(config.workers.count, config.workers.spec, engine,
                      config.workers.overrides)
    metrics = MetricsCollector()
    driver = SparkDriver(engine, pool, config.workflow, bi=config.batch_interval_ms,
                         con_jobs=config.concurrent_jobs, stage_dispatch=config.stage_dispatch,
                         poll_quantum=config.poll_quantum_ms, cost_rng=cost_rng, metrics=metrics)
    auditor = None
    if live_audit:
        auditor = _LiveAuditor(driver, pool)
        engine.observe(auditor)
    driver.start(ArrivalSource(config.arrival, arrival_rng))
    end = engine.run_until(config.horizon_ms)

    buf = driver.state.buffer
    summary = metrics.summarize(config.threshold, buf.total_received, engine.deadlocked)
    return SimulationResult(
        config=config, metrics=metrics, summary=summary,
        arrived_bytes=buf.total_received, buffered_bytes=buf.data_size,
        end_time=end, events=engine.events_fired, pool=pool, trace=engine.trace,
        live_violations=auditor.violations if auditor else [])
