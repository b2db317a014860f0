"""Worker nodes and the FIFO idle-worker pool."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .engine import Engine, SimulationError, Sleep, WaitFor


@dataclass(frozen=True)
class RSpec:
    cores: int = 1
    speed: Fraction = Fraction(1)
    memory: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "speed", Fraction(self.speed))
        if self.speed <= 0:
            raise ValueError(f"worker speed must be positive, got {self.speed}")
        if self.cores < 1 or self.memory < 1:
            raise ValueError(f"cores and memory must be positive: {self}")


def execution_ticks(cost: int, speed: Fraction) -> int:
    return math.ceil(Fraction(cost) / speed)


@dataclass
class Worker:
    id: int
    spec: RSpec
    busy: bool = False
    busy_until: Optional[int] = None
    stages_executed: int = 0

    def exe(self, engine: Engine, cost: int):
        """Occupy this worker for ``ceil(cost / speed)`` ticks."""
        ticks = execution_ticks(cost, self.spec.speed)
        self.busy_until = engine.now + ticks
        yield Sleep(ticks)
        self.stages_executed += 1
        self.busy_until = None
        return True


@dataclass
class WorkerPool:
    workers: list[Worker]
    engine: Engine
    idle: list[Worker] = field(init=False)

    def __post_init__(self):
        self.idle = list(self.workers)
        self.cond = self.engine.condition("workerList")
        self.in_flight = 0

    @property
    def total(self) -> int:
        return len(self.workers)

    def acquire(self):
        """Suspend until a worker is idle, then take the head of the idle list."""
        yield WaitFor(self.cond, lambda: len(self.idle) > 0)
        return self.take()

    def take(self) -> Worker:
        if not self.idle:
            raise SimulationError("take() on an empty idle list")
        w = self.idle.pop(0)
        w.busy = True
        self.in_flight += 1
        return w

    def release(self, w: Worker) -> None:
        if not w.busy:
            raise SimulationError(f"worker {w.id} released while idle")
        w.busy = False
        self.in_flight -= 1
        self.idle.append(w)

    def conserved(self) -> bool:
        return len(self.idle) + self.in_flight == self.total


def conf_setup(num: int, rs: RSpec, engine: Engine,
               overrides: Optional[Sequence[tuple[int, RSpec]]] = None) -> WorkerPool:
    if num < 1:
        raise ValueError(f"need at least one worker, got {num}")
    specs = [rs] * num
    for idx, spec in overrides or ():
        if not 0 <= idx < num:
            raise ValueError(f"worker override index {idx} out of range 0..{num - 1}")
        specs[idx] = spec
    return WorkerPool([Worker(i, s) for i, s in enumerate(specs)], engine)
