"""Candidate search: build every legal parallel variant, measure each at a
reduced scale, keep the cheapest.

The interp backend's cost is a deterministic critical-path surrogate:
driver (serial) steps + the longest task's steps + a per-task overhead
constant. Wall-clock measurement on a real JVM is available when one is on
PATH (median of five).
"""

from __future__ import annotations

import copy
import shutil
from dataclasses import dataclass

from .classfile.model import ClassModel
from .depcheck import ParallelismType
from .errors import JvmparError, MeasurementFailure
from .interp import Schedule, exec_parallel
from .ir import BinOp, Const
from .loops import NormalizedLoop
from .parcodegen import ParallelVariant, emit_variant
from .xform import TransformCandidate, enumerate_candidates

DEFAULT_R = 64
DEFAULT_TASK_OVERHEAD = 1000


@dataclass
class TuneConfig:
    n_workers: int = 4
    strategy: str = "block"
    tile_sizes: tuple = (32, 64, 128)
    r: int = DEFAULT_R
    backend: str = "interp"
    task_overhead: int = DEFAULT_TASK_OVERHEAD
    seed: int = 42
    step_budget: int = 10 ** 9


@dataclass
class TrialRecord:
    candidate: TransformCandidate
    variant: ParallelVariant | None
    cost: float
    r: int
    error: str = ""

    def to_json(self) -> dict:
        return {
            "candidate": self.candidate.describe(),
            "cost": self.cost,
            "r": self.r,
            "error": self.error,
        }


@dataclass
class TuneReport:
    records: list[TrialRecord]
    selected: int  # index into records, -1 when nothing was usable

    def to_json(self) -> dict:
        return {"trials": [t.to_json() for t in self.records],
                "selected": self.selected}


def _clamped(cand: TransformCandidate, r: int) -> TransformCandidate:
    """Trial candidate with the parallel level's bound clamped to min(bound, r)."""
    trial = copy.copy(cand)
    levels = list(cand.regen_levels)
    ivar, init, bound, step, cmp = levels[0]
    clamped = BinOp("min", bound, Const(r, "I"), "I")
    levels[0] = (ivar, init, clamped, step, cmp)
    trial.regen_levels = levels
    return trial


def measure(variant: ParallelVariant, args: list, config: TuneConfig) -> float:
    """Deterministic interp cost or median-of-5 wall clock on a JVM."""
    if config.backend == "interp":
        ret, _, interp = exec_parallel(variant, variant.method, args,
                                       Schedule(), step_budget=config.step_budget)
        task_total = sum(interp.task_steps.values())
        task_max = max(interp.task_steps.values(), default=0)
        serial_part = interp.steps - task_total
        return float(serial_part + task_max
                     + config.task_overhead * len(interp.task_steps))
    if config.backend == "jvm":
        java = shutil.which("java")
        if java is None:
            raise MeasurementFailure("jvm backend requested but no java on PATH")
        raise MeasurementFailure("jvm backend measurement needs the corpus runner")
    raise MeasurementFailure(f"unknown backend {config.backend}")


def tune(model: ClassModel, method_name: str, desc: str, nest: NormalizedLoop,
         pt: ParallelismType, deps, args_factory, config: TuneConfig) -> tuple[
        ParallelVariant | None, TuneReport]:
    """Alg: emit each candidate, run at reduced scale, argmin; first wins ties."""
    next_slot = model.find_method(method_name, desc).code.max_locals
    cands = enumerate_candidates(nest, pt, deps, tile_sizes=config.tile_sizes,
                                 next_slot=next_slot)
    records: list[TrialRecord] = []
    for cand in cands:
        try:
            variant = emit_variant(model, method_name, desc, nest, cand,
                                   config.n_workers, config.strategy)
            trial_variant = emit_variant(model, method_name, desc, nest,
                                         _clamped(cand, config.r),
                                         config.n_workers, config.strategy)
            cost = measure(trial_variant, args_factory(), config)
            records.append(TrialRecord(cand, variant, cost, config.r))
        except JvmparError as exc:
            records.append(TrialRecord(cand, None, float("inf"), config.r,
                                       error=f"{type(exc).__name__}: {exc}"))
    usable = [(k, t) for k, t in enumerate(records) if t.variant is not None]
    if not usable:
        return None, TuneReport(records, -1)
    best_k, best = min(usable, key=lambda kt: kt[1].cost)  # stable: first tie wins
    return best.variant, TuneReport(records, best_k)


def argmin_first(costs: list[float]) -> int:
    """Index of the smallest cost; earliest on ties (Alg: id_min = argmin E)."""
    best = 0
    for k in range(1, len(costs)):
        if costs[k] < costs[best]:
            best = k
    return best
