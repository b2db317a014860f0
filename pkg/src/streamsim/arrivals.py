"""Arrival processes feeding the driver's receive buffer."""

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Exponential:
    mean_ms: int
    item_size: int = 1024


@dataclass(frozen=True)
class Deterministic:
    interval_ms: int
    item_size: int = 1024


@dataclass(frozen=True)
class Trace:
    path: str
    events: tuple["ArrivalEvent", ...] = ()


ArrivalModel = Union[Exponential, Deterministic, Trace]


@dataclass(frozen=True)
class ArrivalEvent:
    at: int
    size: int


class TraceFormatError(ValueError):
    pass


def load_trace(path: Union[str, Path]) -> Trace:
    """Read ``at_ms,size_bytes`` rows; a non-numeric first row is a header."""
    events = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                at, size = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                    continue  # header
                raise TraceFormatError(f"{path}:{lineno}: expected 'at_ms,size_bytes', got {row!r}")
            if at < 0 or size <= 0:
                raise TraceFormatError(f"{path}:{lineno}: need at_ms >= 0 and size_bytes > 0")
            if events and at < events[-1].at:
                raise TraceFormatError(f"{path}:{lineno}: timestamps must be non-decreasing")
            events.append(ArrivalEvent(at, size))
    return Trace(str(path), tuple(events))


def exponential_gap(mean_ms: int, rng: random.Random) -> int:
    u = 1.0 - rng.random()  # (0, 1]
    return max(1, math.floor(-mean_ms * math.log(u) + 0.5))


def next_arrival(model: ArrivalModel, rng: random.Random, prev: int) -> ArrivalEvent:
    """Next arrival after ``prev`` for the stateless (generated) models."""
    if isinstance(model, Exponential):
        return ArrivalEvent(prev + exponential_gap(model.mean_ms, rng), model.item_size)
    if isinstance(model, Deterministic):
        return ArrivalEvent(prev + model.interval_ms, model.item_size)
    raise TypeError(f"{type(model).__name__} arrivals are replayed with ArrivalSource")


class ArrivalSource:
    """Iterates over arrivals for any model; ``next()`` returns None at end of stream."""

    def __init__(self, model: ArrivalModel, rng: random.Random):
        self.model = model
        self.rng = rng
        self.prev = 0
        self._trace: Optional[Iterator[ArrivalEvent]] = (
            iter(model.events) if isinstance(model, Trace) else None)

    def next(self) -> Optional[ArrivalEvent]:
        if self._trace is not None:
            ev = next(self._trace, None)
        else:
            ev = next_arrival(self.model, self.rng, self.prev)
        if ev is not None:
            self.prev = ev.at
        return ev


class ReceiveBuffer:
    """The driver's in-memory buffer of received bytes.

    Bytes that arrive on the very tick of a batch cut stay in the buffer
    for the next batch, whichever of the two events is dispatched first.
    """

    def __init__(self):
        self.data_size = 0
        self.total_received = 0
        self._tick = -1
        self._at_tick = 0

    def receive(self, now: int, size: int) -> None:
        if now != self._tick:
            self._tick = now
            self._at_tick = 0
        self._at_tick += size
        self.data_size += size
        self.total_received += size

    def cut(self, now: int) -> int:
        carry = self._at_tick if self._tick == now else 0
        taken = self.data_size - carry
        self.data_size = carry
        return taken


def stream_receiver(event: ArrivalEvent, buffer: ReceiveBuffer, now: int) -> None:
    if event.at != now:
        raise ValueError(f"arrival stamped {event.at} delivered at {now}")
    buffer.receive(now, event.size)
