"""Application model: batches, stage DAGs and per-stage cost expressions."""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Batch:
    id: int
    size: int
    created_at: int


def is_empty_batch(batch: Batch) -> bool:
    return batch.size == 0


@dataclass(frozen=True)
class CostExpr:
    """``base + round(per_byte * size) + U[jitter_lo, jitter_hi]`` in ticks."""

    base: int = 0
    per_byte: Fraction = Fraction(0)
    jitter_lo: int = 0
    jitter_hi: int = 0

    def __post_init__(self):
        object.__setattr__(self, "per_byte", Fraction(self.per_byte))
        if self.base < 0 or self.per_byte < 0 or self.jitter_lo < 0:
            raise ValueError(f"cost terms must be non-negative: {self}")
        if self.jitter_lo > self.jitter_hi:
            raise ValueError(f"jitter_lo > jitter_hi: {self}")

    def evaluate(self, size: int, rng: random.Random) -> int:
        variable = math.floor(self.per_byte * size + Fraction(1, 2))
        if self.jitter_hi > self.jitter_lo:
            jitter = rng.randint(self.jitter_lo, self.jitter_hi)
        else:
            # fixed jitter consumes no randomness
            jitter = self.jitter_lo
        return self.base + variable + jitter


@dataclass(frozen=True)
class StageSpec:
    id: str
    constraints: tuple[str, ...] = ()
    cost: CostExpr = field(default_factory=CostExpr)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))


EMPTY_STAGE_ID = "emptyJobStage"


@dataclass(frozen=True)
class JobWorkflow:
    stages: tuple[StageSpec, ...]
    empty_stage: StageSpec

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    def stages_for(self, batch: Batch) -> tuple[StageSpec, ...]:
        if is_empty_batch(batch):
            return (self.empty_stage,)
        return self.stages


def check_constraints(constr: Iterable[str], fin: Iterable[str]) -> bool:
    """True iff every stage id in ``constr`` has already finished."""
    done = set(fin)
    return all(c in done for c in constr)


def cost_per_stage(stage: StageSpec, size: int, rng: random.Random) -> int:
    return stage.cost.evaluate(size, rng)


def validate_workflow(workflow: JobWorkflow) -> list[str]:
    """Return human-readable violations; an empty list means the DAG is sound."""
    violations = []
    stages: Sequence[StageSpec] = workflow.stages
    if not stages:
        violations.append("workflow has no stages")
    ids = [s.id for s in stages]
    seen = set()
    for sid in ids:
        if sid in seen:
            violations.append(f"duplicate stage id {sid!r}")
        seen.add(sid)
    for s in stages:
        for c in s.constraints:
            if c not in seen:
                violations.append(f"stage {s.id!r} depends on unknown stage {c!r}")
            elif c == s.id:
                violations.append(f"stage {s.id!r} depends on itself")
    if stages and all(s.constraints for s in stages):
        violations.append("no source stage: every stage has constraints")
    if workflow.empty_stage.constraints:
        violations.append("empty-job stage must not have constraints")

    cycle = _find_cycle({s.id: [c for c in s.constraints if c in seen and c != s.id]
                         for s in stages})
    if cycle:
        violations.append("cycle: " + " -> ".join(cycle))
    return violations


def _find_cycle(deps: dict[str, list[str]]) -> list[str]:
    WHITE, GREY, BLACK = 0, 1, 2
    color = dict.fromkeys(deps, WHITE)
    stack: list[str] = []

    def visit(node):
        color[node] = GREY
        stack.append(node)
        for nxt in deps.get(node, ()):
            if color.get(nxt) == GREY:
                return stack[stack.index(nxt):] + [nxt]
            if color.get(nxt) == WHITE:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[node] = BLACK
        return None

    for node in deps:
        if color[node] == WHITE:
            found = visit(node)
            if found:
                return found
    return []


def topological_order(workflow: JobWorkflow) -> list[str]:
    """Repeatedly move satisfied stages into ``fin`` until nothing is left.

    Raises ``ValueError`` if the loop stalls, which only happens for an
    invalid workflow.
    """
    fin: list[str] = []
    remaining = list(workflow.stages)
    while remaining:
        ready = [s for s in remaining if check_constraints(s.constraints, fin)]
        if not ready:
            raise ValueError(f"stalled with {[s.id for s in remaining]} unfinished")
        for s in ready:
            fin.append(s.id)
            remaining.remove(s)
    return fin
