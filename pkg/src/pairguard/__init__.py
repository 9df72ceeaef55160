"""Guided pairwise execution for classifying behavioral changes.

Given two versions of a function, the analyzer executes both side by side,
injecting predicted values wherever the code would otherwise fail on
missing context, and compares exception behavior, state, printed output,
and external calls to decide whether the change is semantics-changing,
likely semantics-preserving, or inconclusive.
"""

from .comparator import ABSTAIN, DIFFERENCE, EQUIVALENT, IterationResult, compare
from .driver import (
    INCONCLUSIVE,
    LIKELY_PRESERVING,
    SEMANTICS_CHANGING,
    ConfigError,
    Coverage,
    EngineConfig,
    Verdict,
    analyze,
    analyze_sources,
)
from .frontend import FunctionPair, SourceFunction, make_pair, parse_function
from .predictor import (
    Distribution,
    FormatError,
    HeuristicPredictor,
    InjectionQuery,
    TablePredictor,
    load_table_predictor,
)
from .values import AbstractValue, VersatileObject, serialize

__all__ = [
    "ABSTAIN",
    "DIFFERENCE",
    "EQUIVALENT",
    "INCONCLUSIVE",
    "LIKELY_PRESERVING",
    "SEMANTICS_CHANGING",
    "AbstractValue",
    "ConfigError",
    "Coverage",
    "Distribution",
    "EngineConfig",
    "FormatError",
    "FunctionPair",
    "HeuristicPredictor",
    "InjectionQuery",
    "IterationResult",
    "SourceFunction",
    "TablePredictor",
    "Verdict",
    "VersatileObject",
    "analyze",
    "analyze_sources",
    "compare",
    "load_table_predictor",
    "make_pair",
    "parse_function",
    "serialize",
]

__version__ = "0.1.0"
