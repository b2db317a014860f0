import random
import statistics

import pytest

from streamsim.arrivals import (
    ArrivalEvent, ArrivalSource, Deterministic, Exponential, ReceiveBuffer, TraceFormatError,
    load_trace, next_arrival, stream_receiver,
)
from streamsim.driver import SparkDriver
from streamsim.cluster import RSpec, conf_setup
from streamsim.engine import Engine
from streamsim.workload import CostExpr, JobWorkflow, StageSpec


def test_deterministic_next_arrival():
    ev = next_arrival(Deterministic(1000, 1024), random.Random(0), 3000)
    assert ev == ArrivalEvent(4000, 1024)


def test_exponential_sample_mean():
    rng = random.Random(11)
    model = Exponential(1960)
    prev, gaps = 0, []
    for _ in range(100_000):
        ev = next_arrival(model, rng, prev)
        gaps.append(ev.at - prev)
        prev = ev.at
    assert min(gaps) >= 1
    assert abs(statistics.fmean(gaps) - 1960) <= 0.02 * 1960


def test_exponential_gaps_at_least_one_tick():
    rng = random.Random(5)
    prev = 0
    for _ in range(10_000):
        ev = next_arrival(Exponential(1), rng, prev)
        assert ev.at > prev
        prev = ev.at


def test_trace_replay(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("at_ms,size_bytes\n5,1024\n9,1024\n")
    source = ArrivalSource(load_trace(path), random.Random())
    assert source.next() == ArrivalEvent(5, 1024)
    assert source.next() == ArrivalEvent(9, 1024)
    assert source.next() is None


def test_trace_without_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("5,100\n5,200\n")
    assert [e.at for e in load_trace(path).events] == [5, 5]


@pytest.mark.parametrize("body", ["9,1\n5,1\n", "1,0\n", "a,b\nc,d\n", "1\n"])
def test_bad_traces_rejected(tmp_path, body):
    path = tmp_path / "t.csv"
    path.write_text(body)
    with pytest.raises(TraceFormatError):
        load_trace(path)


def test_receiver_accumulates():
    buf = ReceiveBuffer()
    stream_receiver(ArrivalEvent(0, 1024), buf, 0)
    assert buf.data_size == 1024
    stream_receiver(ArrivalEvent(3, 1024), buf, 3)
    stream_receiver(ArrivalEvent(3, 512), buf, 3)
    assert buf.data_size == 2560


def test_receiver_rejects_late_delivery():
    with pytest.raises(ValueError):
        stream_receiver(ArrivalEvent(5, 1), ReceiveBuffer(), 6)


@pytest.mark.parametrize("arrive_first", [True, False])
def test_arrival_on_cut_tick_goes_to_next_batch(arrive_first):
    buf = ReceiveBuffer()
    buf.receive(500, 100)
    if arrive_first:
        buf.receive(2000, 7)
        taken = buf.cut(2000)
    else:
        taken = buf.cut(2000)
        buf.receive(2000, 7)
    assert taken == 100
    assert buf.cut(4000) == 7


def _run_with_trace(tmp_path, rows, bi=2000, horizon=6000):
    path = tmp_path / "trace.csv"
    path.write_text("".join(f"{a},{s}\n" for a, s in rows))
    eng = Engine()
    pool = conf_setup(1, RSpec(), eng)
    wf = JobWorkflow((StageSpec("S1", (), CostExpr(1)),), StageSpec("e", (), CostExpr(1)))
    driver = SparkDriver(eng, pool, wf, bi=bi)
    driver.start(ArrivalSource(load_trace(path), random.Random()))
    eng.run_until(horizon)
    return driver


def test_boundary_hand_trace(tmp_path):
    # arrivals at 1999, 2000 (on the cut) and 2001: batch 1 holds only the first
    driver = _run_with_trace(tmp_path, [(1999, 10), (2000, 20), (2001, 40)])
    sizes = [size for _, size, _ in driver.metrics.generated]
    assert sizes == [10, 60, 0]
    assert driver.state.buffer.total_received == 70
