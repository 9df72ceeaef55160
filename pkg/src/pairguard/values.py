"""Runtime value model: abstract kinds, versatile stand-in objects, and the
concretizer that turns a predicted kind into an actual value.

Everything injected into a guided execution flows through this module, so the
representations here are deliberately small and deterministic: serialization
is canonical (sorted sets and dict keys, stable float/str repr) and every
random decision is driven by a caller-supplied ``random.Random``.
"""

from __future__ import annotations

import copy
import operator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional


class AbstractValue(Enum):
    """The twelve abstract kinds a predictor can choose between.

    Declaration order is the canonical order used when sampling from a
    distribution, so it must stay stable.
    """

    NONE = "None"
    BOOLEAN = "Boolean"
    INTEGER = "Integer"
    FLOAT = "Float"
    STRING = "String"
    LIST = "List"
    TUPLE = "Tuple"
    DICTIONARY = "Dictionary"
    SET = "Set"
    CALLABLE = "Callable"
    RESOURCE = "Resource"
    OBJECT = "Object"


KIND_LABELS = tuple(k.value for k in AbstractValue)
LABEL_TO_KIND = {k.value: k for k in AbstractValue}

# Base sampling pools. Literals harvested from the functions under analysis
# get appended to these (duplicates kept, which weights common literals up).
HARD_INT_POOL = (-100, -10, -1, 0, 1, 10, 100)
HARD_FLOAT_POOL = (-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0)
HARD_STR_POOL = ("", "a")

_PRIMITIVE_ELEMENT_KINDS = (
    AbstractValue.INTEGER,
    AbstractValue.FLOAT,
    AbstractValue.STRING,
    AbstractValue.BOOLEAN,
    AbstractValue.NONE,
)

_MASK64 = (1 << 64) - 1


class VersatileIndexError(Exception):
    """Internal signal: subscripting a versatile object.

    Raised by ``VersatileObject.__getitem__`` and intercepted by the engine,
    which turns the access into a value injection instead. Never observable
    by the code under execution.
    """

    def __init__(self, obj: "VersatileObject", key: Any):
        super().__init__("versatile subscript")
        self.obj = obj
        self.key = key


def _child_seed(seed: int, index: int) -> int:
    # Fixed-point LCG step so child identity depends only on the parent seed.
    return (seed * 6364136223846793005 + 1442695040888963407 * (index + 1)) & _MASK64


class VersatileObject:
    """A chameleon value that survives most uses an unknown object sees.

    It carries internal representations (1, 1.0, "a") used whenever the
    context demands a number or a string, supports iteration over a small
    deterministic set of children, and absorbs operations it cannot satisfy
    by evaluating to itself rather than failing.
    """

    INTERNAL_INT = 1
    INTERNAL_FLOAT = 1.0
    INTERNAL_STR = "a"

    def __init__(self, seed: int, assigned_type: Optional[str] = None):
        self.seed = seed & _MASK64
        self.assigned_type = assigned_type
        # attrs caches every attribute ever resolved on this object so
        # repeated reads stay consistent; stored holds only explicit writes,
        # which are the part observable as state.
        self.attrs: dict[str, Any] = {}
        self.stored: dict[str, Any] = {}
        self._children: Optional[list["VersatileObject"]] = None

    def store(self, key: str, value: Any) -> None:
        self.attrs[key] = value
        self.stored[key] = value

    # arithmetic

    def __add__(self, other):
        return versatile_binop("+", self, other)

    def __radd__(self, other):
        return versatile_binop("+", other, self)

    def __sub__(self, other):
        return versatile_binop("-", self, other)

    def __rsub__(self, other):
        return versatile_binop("-", other, self)

    def __mul__(self, other):
        return versatile_binop("*", self, other)

    def __rmul__(self, other):
        return versatile_binop("*", other, self)

    def __truediv__(self, other):
        return versatile_binop("/", self, other)

    def __rtruediv__(self, other):
        return versatile_binop("/", other, self)

    def __floordiv__(self, other):
        return versatile_binop("//", self, other)

    def __rfloordiv__(self, other):
        return versatile_binop("//", other, self)

    def __mod__(self, other):
        return versatile_binop("%", self, other)

    def __rmod__(self, other):
        return versatile_binop("%", other, self)

    def __pow__(self, other):
        return versatile_binop("**", self, other)

    def __rpow__(self, other):
        return versatile_binop("**", other, self)

    def __neg__(self):
        return -self.INTERNAL_INT

    # comparisons

    def __eq__(self, other):
        return versatile_binop("==", self, other)

    def __ne__(self, other):
        return versatile_binop("!=", self, other)

    def __lt__(self, other):
        return versatile_binop("<", self, other)

    def __le__(self, other):
        return versatile_binop("<=", self, other)

    def __gt__(self, other):
        return versatile_binop(">", self, other)

    def __ge__(self, other):
        return versatile_binop(">=", self, other)

    def __hash__(self):
        return hash(("versatile", self.seed))

    # structural protocols

    def __bool__(self):
        return True

    def __len__(self):
        return 1

    def __iter__(self):
        if self._children is None:
            count = self.seed % 3
            self._children = [
                VersatileObject(_child_seed(self.seed, i), self.assigned_type)
                for i in range(count)
            ]
        return iter(self._children)

    def __contains__(self, item):
        return False

    def __getitem__(self, key):
        raise VersatileIndexError(self, key)

    def __setitem__(self, key, value):
        self.store(f"[{serialize(key)}]", value)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        return False

    def __str__(self):
        return serialize(self)

    def __repr__(self):
        return serialize(self)


class VersatileCallable(VersatileObject):
    """Versatile object usable in call position.

    The engine performs the actual call (so it can log it and keep results
    consistent across the two executions); ``call_count`` tracks how many
    times this particular instance has been invoked.
    """

    def __init__(self, seed: int, assigned_type: Optional[str] = None):
        super().__init__(seed, assigned_type)
        self.call_count = 0

    def __hash__(self):
        return hash(("versatile", self.seed))


_ARITH_OPS: dict[str, Callable[[Any, Any], Any]] = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
    "//": operator.floordiv,
    "%": operator.mod,
    "**": operator.pow,
}

_COMPARE_OPS: dict[str, Callable[[Any, Any], Any]] = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def _internal_for(value: Any) -> Any:
    """Internal representation a versatile presents next to ``value``."""
    if isinstance(value, bool):
        return VersatileObject.INTERNAL_INT
    if isinstance(value, int):
        return VersatileObject.INTERNAL_INT
    if isinstance(value, float):
        return VersatileObject.INTERNAL_FLOAT
    if isinstance(value, str):
        return VersatileObject.INTERNAL_STR
    return None


def versatile_binop(op: str, lhs: Any, rhs: Any) -> Any:
    """Total binary operation where at least one side is versatile.

    Two versatiles compare by seed and do arithmetic on their internal ints.
    A versatile next to a number or string stands in with the matching
    internal representation. Anything else, and any host-level failure,
    is absorbed: comparisons become False (``!=`` True) and arithmetic
    evaluates to the versatile operand itself.
    """
    lv = isinstance(lhs, VersatileObject)
    rv = isinstance(rhs, VersatileObject)
    if lv and rv:
        if op in _COMPARE_OPS:
            return _COMPARE_OPS[op](lhs.seed, rhs.seed)
        return _ARITH_OPS[op](VersatileObject.INTERNAL_INT, VersatileObject.INTERNAL_INT)
    versatile = lhs if lv else rhs
    other = rhs if lv else lhs
    internal = _internal_for(other)
    if internal is None:
        if op == "!=":
            return True
        if op in _COMPARE_OPS:
            return False
        return versatile
    a, b = (internal, other) if lv else (other, internal)
    fn = _COMPARE_OPS.get(op) or _ARITH_OPS[op]
    try:
        return fn(a, b)
    except Exception:
        if op == "!=":
            return True
        if op in _COMPARE_OPS:
            return False
        return versatile


class FunctionValue:
    """A function defined by the code under execution (or a lambda)."""

    def __init__(
        self,
        name: str,
        params: list[str],
        body: Any,
        env: Any,
        is_generator: bool = False,
        is_lambda: bool = False,
    ):
        self.name = name
        self.params = params
        self.body = body
        self.env = env
        self.is_generator = is_generator
        self.is_lambda = is_lambda

    def __deepcopy__(self, memo):
        return self

    def __repr__(self):
        return f"<function {self.name}>"


class GeneratorValue:
    """Lazily materialized generator result.

    ``materialize`` runs the underlying producer once (up to the engine's
    item cap) and caches the items; comparisons and unwrapping go through
    the materialized list.
    """

    def __init__(self, materializer: Optional[Callable[[], list]] = None, items: Optional[list] = None):
        self._materializer = materializer
        self.items = items

    def materialize(self) -> list:
        if self.items is None:
            if self._materializer is None:
                self.items = []
            else:
                self.items = self._materializer()
        return self.items

    def __deepcopy__(self, memo):
        return self

    def __repr__(self):
        return "<generator>"


@dataclass
class BoundMethod:
    """A whitelisted native method bound to a concrete receiver."""

    receiver: Any
    name: str


@dataclass(frozen=True)
class BuiltinFunction:
    """One of the supported builtin functions, e.g. ``len`` or ``print``."""

    name: str


class ExceptionValue:
    """An exception as seen by the executions under comparison.

    ``intentional`` distinguishes exceptions the code (or an injected call)
    raised on purpose from faults that merely reflect a gap in the guided
    execution itself.
    """

    def __init__(self, type_name: str, args: Optional[list] = None, intentional: bool = False):
        self.type_name = type_name
        self.args = list(args) if args else []
        self.intentional = intentional

    def __repr__(self):
        return serialize(self)


_SERIALIZE_DEPTH_CAP = 16


def serialize(value: Any, _depth: int = 0, _seen: Optional[set] = None) -> str:
    """Canonical, deterministic string form of any runtime value.

    Sets and dictionary keys are ordered by their serialized form so the
    output never depends on hash seeds or insertion order. Recursion is
    bounded: cycles render as ``<cycle>`` and depth beyond the cap as
    ``<depth>``.
    """
    if _depth > _SERIALIZE_DEPTH_CAP:
        return "<depth>"
    if _seen is None:
        _seen = set()
    if value is None:
        return "None"
    if isinstance(value, bool):
        return repr(value)
    if isinstance(value, (int, float, str)):
        return repr(value)
    if isinstance(value, range):
        return repr(value)
    if isinstance(value, VersatileObject):
        if id(value) in _seen:
            return "<cycle>"
        _seen.add(id(value))
        try:
            attrs = ", ".join(
                f"{k}: {serialize(v, _depth + 1, _seen)}"
                for k, v in sorted(value.stored.items())
            )
            return (
                f"{type(value).__name__}(seed={value.seed}, "
                f"assigned_type={value.assigned_type!r}, attrs={{{attrs}}})"
            )
        finally:
            _seen.discard(id(value))
    if isinstance(value, (list, tuple, dict, set, frozenset)):
        if id(value) in _seen:
            return "<cycle>"
        _seen.add(id(value))
        try:
            if isinstance(value, list):
                return "[" + ", ".join(serialize(v, _depth + 1, _seen) for v in value) + "]"
            if isinstance(value, tuple):
                inner = [serialize(v, _depth + 1, _seen) for v in value]
                if len(inner) == 1:
                    return f"({inner[0]},)"
                return "(" + ", ".join(inner) + ")"
            if isinstance(value, dict):
                pairs = sorted(
                    (serialize(k, _depth + 1, _seen), serialize(v, _depth + 1, _seen))
                    for k, v in value.items()
                )
                return "{" + ", ".join(f"{k}: {v}" for k, v in pairs) + "}"
            items = sorted(serialize(v, _depth + 1, _seen) for v in value)
            if not items:
                return "set()"
            return "{" + ", ".join(items) + "}"
        finally:
            _seen.discard(id(value))
    if isinstance(value, ExceptionValue):
        args = ", ".join(serialize(a, _depth + 1, _seen) for a in value.args)
        return f"{value.type_name}({args})"
    if isinstance(value, FunctionValue):
        return f"<function {value.name}>"
    if isinstance(value, GeneratorValue):
        return "<generator>"
    if isinstance(value, BoundMethod):
        return f"<method {value.name}>"
    if isinstance(value, BuiltinFunction):
        return f"<builtin {value.name}>"
    return f"<{type(value).__name__}>"


def deep_copy(value: Any) -> Any:
    """Deep copy honoring the by-reference semantics of function values."""
    return copy.deepcopy(value)


def sorted_iter(value: Any) -> list:
    """Iterate a set in canonical (serialized) order; other iterables as-is."""
    if isinstance(value, (set, frozenset)):
        return sorted(value, key=serialize)
    return list(value)


@dataclass(frozen=True)
class ConcretizerConfig:
    """Pools and size limits used when turning a kind into a value."""

    max_structure_size: int = 4
    object_bias: float = 0.5
    int_pool: tuple = HARD_INT_POOL
    float_pool: tuple = HARD_FLOAT_POOL
    str_pool: tuple = HARD_STR_POOL
    class_pool: tuple = ()

    @classmethod
    def with_literals(
        cls,
        int_literals=(),
        float_literals=(),
        str_literals=(),
        classes=(),
        max_structure_size: int = 4,
        object_bias: float = 0.5,
    ) -> "ConcretizerConfig":
        """Base pools extended with literals found in the analyzed code.

        Literals are kept with multiplicity, so a literal that occurs twice
        is sampled twice as often.
        """
        return cls(
            max_structure_size=max_structure_size,
            object_bias=object_bias,
            int_pool=HARD_INT_POOL + tuple(int_literals),
            float_pool=HARD_FLOAT_POOL + tuple(float_literals),
            str_pool=HARD_STR_POOL + tuple(str_literals),
            class_pool=tuple(sorted(set(classes))),
        )


def _fresh_versatile(cfg: ConcretizerConfig, rng, callable_: bool = False) -> VersatileObject:
    seed = rng.getrandbits(64)
    assigned_type = rng.choice(cfg.class_pool) if cfg.class_pool else None
    if callable_:
        return VersatileCallable(seed, assigned_type)
    return VersatileObject(seed, assigned_type)


def _element_kind(cfg: ConcretizerConfig, rng) -> AbstractValue:
    if rng.random() < cfg.object_bias:
        return AbstractValue.OBJECT
    return rng.choice(_PRIMITIVE_ELEMENT_KINDS)


def concretize(kind: AbstractValue, cfg: ConcretizerConfig, rng) -> Any:
    """Produce a concrete value of the given abstract kind.

    Containers pick one element kind for all their elements; dictionary keys
    come from the string pool (duplicates collapse, so dictionaries can come
    out smaller than the drawn size).
    """
    if kind is AbstractValue.NONE:
        return None
    if kind is AbstractValue.BOOLEAN:
        return rng.choice((True, False))
    if kind is AbstractValue.INTEGER:
        return rng.choice(cfg.int_pool)
    if kind is AbstractValue.FLOAT:
        return rng.choice(cfg.float_pool)
    if kind is AbstractValue.STRING:
        return rng.choice(cfg.str_pool)
    if kind in (AbstractValue.LIST, AbstractValue.TUPLE, AbstractValue.SET):
        size = rng.randint(0, cfg.max_structure_size)
        elem = _element_kind(cfg, rng)
        items = [concretize(elem, cfg, rng) for _ in range(size)]
        if kind is AbstractValue.LIST:
            return items
        if kind is AbstractValue.TUPLE:
            return tuple(items)
        return set(items)
    if kind is AbstractValue.DICTIONARY:
        size = rng.randint(0, cfg.max_structure_size)
        elem = _element_kind(cfg, rng)
        out = {}
        for _ in range(size):
            key = rng.choice(cfg.str_pool)
            out[key] = concretize(elem, cfg, rng)
        return out
    if kind is AbstractValue.CALLABLE:
        return _fresh_versatile(cfg, rng, callable_=True)
    # Resource and Object both map to a plain versatile object.
    return _fresh_versatile(cfg, rng)


def kind_of(value: Any) -> AbstractValue:
    """Abstract kind of a concrete runtime value."""
    if value is None:
        return AbstractValue.NONE
    if isinstance(value, bool):
        return AbstractValue.BOOLEAN
    if isinstance(value, int):
        return AbstractValue.INTEGER
    if isinstance(value, float):
        return AbstractValue.FLOAT
    if isinstance(value, str):
        return AbstractValue.STRING
    if isinstance(value, VersatileCallable):
        return AbstractValue.CALLABLE
    if isinstance(value, VersatileObject):
        return AbstractValue.OBJECT
    if isinstance(value, list):
        return AbstractValue.LIST
    if isinstance(value, tuple):
        return AbstractValue.TUPLE
    if isinstance(value, dict):
        return AbstractValue.DICTIONARY
    if isinstance(value, (set, frozenset)):
        return AbstractValue.SET
    return AbstractValue.OBJECT


def matches_kind(value: Any, kind: AbstractValue) -> bool:
    """Whether a concretized value is acceptable for the requested kind."""
    actual = kind_of(value)
    if kind in (AbstractValue.OBJECT, AbstractValue.RESOURCE):
        return actual in (AbstractValue.OBJECT, AbstractValue.CALLABLE)
    if kind is AbstractValue.CALLABLE:
        return actual is AbstractValue.CALLABLE
    return actual is kind
