"""JSON experiment configuration: parsing, defaults and validation."""

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .arrivals import ArrivalModel, Deterministic, Exponential, TraceFormatError, load_trace
from .cluster import RSpec
from .workload import CostExpr, JobWorkflow, StageSpec, validate_workflow

DISPATCH_MODES = ("sequential", "parallel")
SWEEP_AXES = ("batch_interval_ms", "concurrent_jobs", "workers.count", "workers.speed")


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class WorkersConfig:
    count: int
    spec: RSpec
    overrides: tuple[tuple[int, RSpec], ...] = ()


@dataclass(frozen=True)
class SimConfig:
    workers: WorkersConfig
    batch_interval_ms: int
    arrival: ArrivalModel
    workflow: JobWorkflow
    horizon_ms: int
    seed: int
    concurrent_jobs: int = 1
    stage_dispatch: str = "sequential"
    poll_quantum_ms: int = 1
    stability_threshold_ms: Optional[int] = None
    out_dir: str = "out"
    event_trace: bool = False
    raw: dict = field(default_factory=dict, compare=False, repr=False)
    base_dir: str = field(default=".", compare=False, repr=False)

    @property
    def threshold(self) -> int:
        if self.stability_threshold_ms is None:
            return self.batch_interval_ms
        return self.stability_threshold_ms


def _rational(value) -> Fraction:
    if isinstance(value, bool):
        raise ValueError("expected a number")
    if isinstance(value, (int, float)):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"expected a number, got {value!r}")


class _Reader:
    """Pulls typed fields out of nested dicts, collecting every problem."""

    def __init__(self):
        self.violations: list[str] = []

    def get(self, obj: dict, key: str, where: str, kind: str = "int", *,
            required: bool = True, default: Any = None, minimum: Optional[int] = None):
        path = f"{where}.{key}" if where else key
        if not isinstance(obj, dict):
            self.violations.append(f"{where}: expected an object")
            return default
        if key not in obj:
            if required:
                self.violations.append(f"{path}: missing")
            return default
        value = obj[key]
        try:
            if kind == "int":
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValueError(f"expected an integer, got {value!r}")
            elif kind == "rational":
                value = _rational(value)
            elif kind == "str":
                if not isinstance(value, str):
                    raise ValueError(f"expected a string, got {value!r}")
            elif kind == "bool":
                if not isinstance(value, bool):
                    raise ValueError(f"expected true/false, got {value!r}")
        except (ValueError, ZeroDivisionError) as exc:
            self.violations.append(f"{path}: {exc}")
            return default
        if minimum is not None and value < minimum:
            self.violations.append(f"{path}: must be >= {minimum}, got {value}")
            return default
        return value


def _cost(r: _Reader, obj, where: str, allow_variable: bool = True) -> CostExpr:
    base = r.get(obj, "base_ms", where, minimum=0, default=0)
    per_kb = r.get(obj, "per_kb_ms", where, "rational", required=False, default=Fraction(0))
    if per_kb is not None and per_kb < 0:
        r.violations.append(f"{where}.per_kb_ms: must be >= 0")
        per_kb = Fraction(0)
    lo = hi = 0
    jitter = obj.get("jitter_ms") if isinstance(obj, dict) else None
    if jitter is not None:
        ok = (isinstance(jitter, list) and len(jitter) == 2
              and all(isinstance(j, int) and not isinstance(j, bool) and j >= 0 for j in jitter)
              and jitter[0] <= jitter[1])
        if ok:
            lo, hi = jitter
        else:
            r.violations.append(f"{where}.jitter_ms: expected [lo, hi] with 0 <= lo <= hi")
    if not allow_variable and (per_kb or hi):
        r.violations.append(f"{where}: empty-job cost must be fixed (base_ms only)")
    return CostExpr(base or 0, (per_kb or Fraction(0)) / 1024, lo, hi)


def _workflow(r: _Reader, obj) -> Optional[JobWorkflow]:
    if not isinstance(obj, dict):
        r.violations.append("workflow: expected an object")
        return None
    raw_stages = obj.get("stages")
    if not isinstance(raw_stages, list) or not raw_stages:
        r.violations.append("workflow.stages: expected a non-empty list")
        raw_stages = []
    stages = []
    for i, st in enumerate(raw_stages):
        where = f"workflow.stages[{i}]"
        sid = r.get(st, "id", where, "str")
        constr = st.get("constraints", []) if isinstance(st, dict) else []
        if not isinstance(constr, list) or not all(isinstance(c, str) for c in constr):
            r.violations.append(f"{where}.constraints: expected a list of stage ids")
            constr = []
        cost = _cost(r, st.get("cost", {}) if isinstance(st, dict) else {}, f"{where}.cost")
        if sid is not None:
            stages.append(StageSpec(sid, tuple(constr), cost))
    empty = obj.get("empty_job", {})
    empty_cost = _cost(r, empty.get("cost", {}) if isinstance(empty, dict) else {},
                       "workflow.empty_job.cost", allow_variable=False)
    wf = JobWorkflow(tuple(stages), StageSpec("emptyJobStage", (), empty_cost))
    if stages:
        r.violations.extend(f"workflow: {v}" for v in validate_workflow(wf))
    return wf


def _arrival(r: _Reader, obj, base_dir: Path) -> Optional[ArrivalModel]:
    if not isinstance(obj, dict):
        r.violations.append("arrival: expected an object")
        return None
    model = r.get(obj, "model", "arrival", "str")
    item = r.get(obj, "item_size", "arrival", required=False, default=1024, minimum=1)
    if model == "exponential":
        mean = r.get(obj, "mean_ms", "arrival", minimum=1)
        return Exponential(mean, item) if mean else None
    if model == "deterministic":
        interval = r.get(obj, "interval_ms", "arrival", minimum=1)
        return Deterministic(interval, item) if interval else None
    if model == "trace":
        path = r.get(obj, "path", "arrival", "str")
        if path is None:
            return None
        full = Path(path) if Path(path).is_absolute() else base_dir / path
        try:
            return load_trace(full)
        except OSError as exc:
            r.violations.append(f"arrival.path: cannot read {full}: {exc.strerror}")
        except TraceFormatError as exc:
            r.violations.append(f"arrival.path: {exc}")
        return None
    if model is not None:
        r.violations.append(f"arrival.model: expected exponential, deterministic or trace, got {model!r}")
    return None


def _workers(r: _Reader, obj) -> Optional[WorkersConfig]:
    if not isinstance(obj, dict):
        r.violations.append("workers: expected an object")
        return None
    count = r.get(obj, "count", "workers", minimum=1)
    cores = r.get(obj, "cores", "workers", required=False, default=1, minimum=1)
    memory = r.get(obj, "memory_mb", "workers", required=False, default=1024, minimum=1)
    speed = r.get(obj, "speed", "workers", "rational", required=False, default=Fraction(1))
    if speed is not None and speed <= 0:
        r.violations.append("workers.speed: must be > 0")
        speed = None
    if None in (count, cores, memory, speed):
        return None
    spec = RSpec(cores, speed, memory)
    overrides = []
    for i, ov in enumerate(obj.get("overrides", [])):
        where = f"workers.overrides[{i}]"
        idx = r.get(ov, "index", where, minimum=0)
        if idx is not None and idx >= count:
            r.violations.append(f"{where}.index: {idx} out of range for {count} workers")
            continue
        ov_speed = r.get(ov, "speed", where, "rational", required=False, default=spec.speed)
        if ov_speed is not None and ov_speed <= 0:
            r.violations.append(f"{where}.speed: must be > 0")
            continue
        ov_cores = r.get(ov, "cores", where, required=False, default=spec.cores, minimum=1)
        ov_mem = r.get(ov, "memory_mb", where, required=False, default=spec.memory, minimum=1)
        if None not in (idx, ov_speed, ov_cores, ov_mem):
            overrides.append((idx, RSpec(ov_cores, ov_speed, ov_mem)))
    return WorkersConfig(count, spec, tuple(overrides))


def parse_config(data: dict, base_dir: Path = Path(".")) -> SimConfig:
    """Build a validated SimConfig or raise ConfigError listing every violation."""
    if not isinstance(data, dict):
        raise ConfigError(["config: top level must be a JSON object"])
    r = _Reader()
    workers = _workers(r, data.get("workers"))
    bi = r.get(data, "batch_interval_ms", "", minimum=1)
    con_jobs = r.get(data, "concurrent_jobs", "", required=False, default=1, minimum=1)
    dispatch = r.get(data, "stage_dispatch", "", "str", required=False, default="sequential")
    if dispatch is not None and dispatch not in DISPATCH_MODES:
        r.violations.append(f"stage_dispatch: expected one of {', '.join(DISPATCH_MODES)}, got {dispatch!r}")
    quantum = r.get(data, "poll_quantum_ms", "", required=False, default=1, minimum=0)
    threshold = r.get(data, "stability_threshold_ms", "", required=False, default=None, minimum=0)
    horizon = r.get(data, "horizon_ms", "", minimum=0)
    seed = r.get(data, "seed", "")
    if seed is not None and not -2**63 <= seed < 2**64:
        r.violations.append("seed: must fit in 64 bits")
    if bi is not None and horizon is not None and horizon < bi:
        r.violations.append(f"horizon_ms: must be >= batch_interval_ms ({bi}), got {horizon}")
    arrival = _arrival(r, data.get("arrival"), base_dir)
    workflow = _workflow(r, data.get("workflow"))
    outputs = data.get("outputs", {})
    out_dir = r.get(outputs, "dir", "outputs", "str", required=False, default="out")
    trace = r.get(outputs, "event_trace", "outputs", "bool", required=False, default=False)

    known = {"workers", "batch_interval_ms", "concurrent_jobs", "stage_dispatch",
             "poll_quantum_ms", "stability_threshold_ms", "horizon_ms", "seed",
             "arrival", "workflow", "outputs", "description"}
    for key in sorted(set(data) - known):
        r.violations.append(f"{key}: unknown field")

    if r.violations:
        raise ConfigError(r.violations)
    return SimConfig(workers=workers, batch_interval_ms=bi, arrival=arrival, workflow=workflow,
                     horizon_ms=horizon, seed=seed, concurrent_jobs=con_jobs,
                     stage_dispatch=dispatch, poll_quantum_ms=quantum,
                     stability_threshold_ms=threshold, out_dir=out_dir, event_trace=trace,
                     raw=copy.deepcopy(data), base_dir=str(base_dir))


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read: {exc.strerror}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"]) from exc
    return parse_config(data, path.parent)


def with_axis(config: SimConfig, axis: str, value) -> SimConfig:
    """Copy of ``config`` with one sweep axis overridden and re-validated."""
    if axis not in SWEEP_AXES:
        raise ConfigError([f"axis: unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}"])
    data = copy.deepcopy(config.raw)
    if axis.startswith("workers."):
        data.setdefault("workers", {})[axis.split(".", 1)[1]] = value
    else:
        data[axis] = value
    return parse_config(data, Path(config.base_dir))

