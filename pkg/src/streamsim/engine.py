"""Discrete-event engine with an integer millisecond clock.

Simulated processes are plain generators.  A process yields either
``Sleep(ticks)`` to resume after a duration, or ``WaitFor(cond, predicate)``
to suspend until ``predicate()`` holds.  Events at the same tick run in
insertion order, so a run is fully determined by its inputs.
"""

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, Generator, NamedTuple


class SimulationError(RuntimeError):
    """Raised on engine misuse, e.g. scheduling an event in the past."""


class Sleep(NamedTuple):
    ticks: int


class WaitFor(NamedTuple):
    cond: "CondVar"
    predicate: Callable[[], bool]


@dataclass(order=True)
class Event:
    fire_at: int
    seq: int
    action: Callable[[], None] = field(compare=False)
    process: str = field(default="engine", compare=False)
    kind: str = field(default="event", compare=False)


class Process:
    def __init__(self, name: str, gen: Generator):
        self.name = name
        self.gen = gen
        self.done = False

    def __repr__(self):
        return f"Process({self.name!r})"


class CondVar:
    """A named wait set; suspended processes are re-checked in FIFO order."""

    _ids = itertools.count(1)

    def __init__(self, name: str = ""):
        self.id = next(self._ids)
        self.name = name or f"cond-{self.id}"
        self.waiters: list[tuple[Process, Callable[[], bool]]] = []

    def __repr__(self):
        return f"CondVar({self.name!r}, waiters={len(self.waiters)})"


class Engine:
    def __init__(self, trace: bool = False):
        self.now = 0
        self._queue: list[Event] = []
        self._seq = itertools.count()
        self._conds: list[CondVar] = []
        self._observers: list[Callable[["Engine"], None]] = []
        self.events_fired = 0
        self.trace_enabled = trace
        self.trace: list[str] = []

    # -- events -----------------------------------------------------------

    def schedule(self, at: int, action: Callable[[], None],
                 process: str = "engine", kind: str = "event") -> Event:
        if not isinstance(at, int):
            raise SimulationError(f"event time must be an integer tick, got {at!r}")
        if at < self.now:
            raise SimulationError(f"cannot schedule at {at}, clock is already {self.now}")
        ev = Event(at, next(self._seq), action, process, kind)
        heapq.heappush(self._queue, ev)
        return ev

    def pending(self) -> int:
        return len(self._queue)

    def log(self, process: str, kind: str) -> None:
        if self.trace_enabled:
            self.trace.append(f"{self.now}\t{process}\t{kind}")

    def observe(self, fn: Callable[["Engine"], None]) -> None:
        """Register a callback run after every event and its wakeups settle."""
        self._observers.append(fn)

    # -- processes ----------------------------------------------------------

    def condition(self, name: str = "") -> CondVar:
        cv = CondVar(name)
        self._conds.append(cv)
        return cv

    def spawn(self, gen: Generator, name: str) -> Process:
        proc = Process(name, gen)
        self.schedule(self.now, lambda: self._step(proc), name, "spawn")
        return proc

    def _step(self, proc: Process) -> None:
        try:
            cmd = next(proc.gen)
        except StopIteration:
            proc.done = True
            self.log(proc.name, "exit")
            return
        if isinstance(cmd, Sleep):
            if cmd.ticks < 0:
                raise SimulationError(f"{proc.name}: negative sleep {cmd.ticks}")
            self.schedule(self.now + cmd.ticks, lambda: self._step(proc), proc.name, "wake")
        elif isinstance(cmd, WaitFor):
            # Even an already-true predicate is only honoured once the
            # current event has run to completion.
            cmd.cond.waiters.append((proc, cmd.predicate))
        else:
            raise SimulationError(f"{proc.name} yielded unsupported command {cmd!r}")

    def _settle(self) -> None:
        progressed = True
        while progressed:
            progressed = False
            for cv in self._conds:
                for i, (proc, pred) in enumerate(cv.waiters):
                    if pred():
                        del cv.waiters[i]
                        self.log(proc.name, "resume")
                        self._step(proc)
                        progressed = True
                        break
                if progressed:
                    break

    def waiting(self) -> list[str]:
        return [proc.name for cv in self._conds for proc, _ in cv.waiters]

    @property
    def deadlocked(self) -> bool:
        return not self._queue and bool(self.waiting())

    # -- main loop ----------------------------------------------------------

    def run_until(self, horizon: int) -> int:
        """Fire every event with ``fire_at <= horizon``; return the clock.

        The clock is left at ``horizon`` when later events remain, and at the
        last fired event when the queue drains first.
        """
        self._settle()
        while self._queue and self._queue[0].fire_at <= horizon:
            ev = heapq.heappop(self._queue)
            self.now = ev.fire_at
            self.log(ev.process, ev.kind)
            ev.action()
            self.events_fired += 1
            self._settle()
            for fn in self._observers:
                fn(self)
        if self._queue:
            self.now = max(self.now, horizon)
        return self.now

