"""Analysis driver.

Repeats paired executions up to a configurable budget, stops at the first
behavioral difference, accumulates line coverage, and condenses everything
into a three-way verdict.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .comparator import ABSTAIN, DIFFERENCE, compare
from .engine import (
    ComparisonProgram,
    ConsistencyMap,
    derive_seed,
    merge_pair,
    run_one,
    snapshot_injected,
)
from .frontend import FunctionPair, extract_static_facts, make_pair
from .predictor import HeuristicPredictor, Predictor

SEMANTICS_CHANGING = "semantics-changing"
LIKELY_PRESERVING = "likely-semantics-preserving"
INCONCLUSIVE = "inconclusive"

CLASSIFICATIONS = (SEMANTICS_CHANGING, LIKELY_PRESERVING, INCONCLUSIVE)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    """Tunable knobs of one analysis run."""

    max_iterations: int = 300
    seed: int = 0
    exception_probability: float = 0.15
    max_structure_size: int = 4
    object_bias: float = 0.5
    step_budget: int = 100000
    generator_cap: int = 100

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        for name in ("exception_probability", "object_bias"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be within [0, 1]")
        if self.max_structure_size < 0:
            raise ConfigError("max_structure_size must be nonnegative")
        if self.step_budget < 1:
            raise ConfigError("step_budget must be positive")
        if self.generator_cap < 1:
            raise ConfigError("generator_cap must be positive")


@dataclass(frozen=True)
class Coverage:
    """Cumulative line coverage of one analysis.

    Changed fractions are relative to each side's changed lines (1.0 when a
    side has no changed lines); overall pools both sides' code lines.
    """

    changed_old: float
    changed_new: float
    overall: float
    per_side: tuple[float, float]


@dataclass
class Verdict:
    classification: str
    iterations_run: int
    abstained_iterations: int
    difference: Optional[str]
    difference_dimension: Optional[str]
    coverage: Coverage
    runtime_ms: float = field(default=0.0, compare=False)


def _fraction(covered: int, total: int) -> float:
    return covered / total if total else 1.0


def _build_coverage(
    pair: FunctionPair,
    cum_old: set[int],
    cum_new: set[int],
    cum_changed_old: set[int],
    cum_changed_new: set[int],
) -> Coverage:
    code_old = pair.old.code_lines
    code_new = pair.new.code_lines
    covered_old = len(cum_old & code_old)
    covered_new = len(cum_new & code_new)
    return Coverage(
        changed_old=_fraction(len(cum_changed_old), len(pair.changed_lines_old)),
        changed_new=_fraction(len(cum_changed_new), len(pair.changed_lines_new)),
        overall=_fraction(covered_old + covered_new, len(code_old) + len(code_new)),
        per_side=(
            _fraction(covered_old, len(code_old)),
            _fraction(covered_new, len(code_new)),
        ),
    )


def analyze(
    pair: FunctionPair,
    cfg: Optional[EngineConfig] = None,
    predictor: Optional[Predictor] = None,
) -> Verdict:
    """Run up to cfg.max_iterations paired executions and classify the change.

    Stops early at the first behavioral difference. The verdict is
    inconclusive when no difference was found and either no changed line was
    ever reached or every iteration had to be abstained; a pair with no
    changed lines at all trivially satisfies the reached condition.
    """
    cfg = cfg if cfg is not None else EngineConfig()
    cfg.validate()
    predictor = predictor if predictor is not None else HeuristicPredictor()
    program: ComparisonProgram = merge_pair(pair)
    facts = extract_static_facts(pair)

    started = time.perf_counter()
    cum_old: set[int] = set()
    cum_new: set[int] = set()
    cum_changed_old: set[int] = set()
    cum_changed_new: set[int] = set()
    abstained = 0
    iterations_run = 0
    difference: Optional[str] = None
    dimension: Optional[str] = None

    for i in range(cfg.max_iterations):
        iterations_run = i + 1
        cmap = ConsistencyMap(pair.renames)
        iteration_seed = derive_seed(cfg.seed, "iteration", i)
        out_old = run_one("old", program, cmap, facts, cfg, predictor, iteration_seed)
        out_new = run_one("new", program, cmap, facts, cfg, predictor, iteration_seed)
        out_old.injected_state = snapshot_injected(cmap, "old")
        out_new.injected_state = snapshot_injected(cmap, "new")

        cum_old |= out_old.covered_lines
        cum_new |= out_new.covered_lines
        cum_changed_old |= out_old.covered_changed_lines
        cum_changed_new |= out_new.covered_changed_lines

        result = compare(out_old, out_new)
        if result.status == ABSTAIN:
            abstained += 1
            continue
        if result.status == DIFFERENCE:
            difference = result.detail
            dimension = result.dimension
            break

    coverage = _build_coverage(
        pair, cum_old, cum_new, cum_changed_old, cum_changed_new
    )
    if difference is not None:
        classification = SEMANTICS_CHANGING
    else:
        has_change = bool(pair.changed_lines_old or pair.changed_lines_new)
        reached = (not has_change) or bool(cum_changed_old or cum_changed_new)
        all_abstained = abstained == iterations_run
        if not reached or all_abstained:
            classification = INCONCLUSIVE
        else:
            classification = LIKELY_PRESERVING

    runtime_ms = (time.perf_counter() - started) * 1000.0
    return Verdict(
        classification=classification,
        iterations_run=iterations_run,
        abstained_iterations=abstained,
        difference=difference,
        difference_dimension=dimension,
        coverage=coverage,
        runtime_ms=runtime_ms,
    )


def analyze_sources(
    old_source: str,
    new_source: str,
    renames: Optional[dict[str, str]] = None,
    entry: Optional[str] = None,
    cfg: Optional[EngineConfig] = None,
    predictor: Optional[Predictor] = None,
) -> Verdict:
    """Convenience wrapper: parse the two sources, then analyze the pair."""
    pair = make_pair(old_source, new_source, renames=renames, entry=entry)
    return analyze(pair, cfg=cfg, predictor=predictor)
