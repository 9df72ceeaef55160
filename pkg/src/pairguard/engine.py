"""Guided execution engine.

A tree-walking interpreter runs one side (old or new) of a merged function
pair. Reads of undefined variables, attribute reads, unresolvable calls, and
crashing subscripts are intercepted and answered with predicted, concretized
values. A consistency map shared between the two sides of one iteration
guarantees both executions observe the same injected inputs, while every
random decision is drawn from a stream keyed by the merged access path so
small control-flow differences cannot desynchronize the two runs.
"""

from __future__ import annotations

import ast
import hashlib
import io
import operator as _op
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .frontend import (
    BUILTIN_NAMES,
    FunctionPair,
    Renamer,
    StaticFacts,
    function_is_generator,
    isinstance_class_names,
)
from .predictor import InjectionQuery, Predictor
from .values import (
    BoundMethod,
    BuiltinFunction,
    ConcretizerConfig,
    ExceptionValue,
    FunctionValue,
    GeneratorValue,
    VersatileCallable,
    VersatileIndexError,
    VersatileObject,
    concretize,
    deep_copy,
    serialize,
    sorted_iter,
    versatile_binop,
)

_MASK64 = (1 << 64) - 1
_PATH_CAP = 120
_CONTEXT_CAP = 160
_MAX_CALL_DEPTH = 200

# Methods callable natively on concrete built-in receivers. Anything else
# becomes an interception.
NATIVE_METHODS = frozenset(
    {
        "get",
        "append",
        "items",
        "keys",
        "values",
        "strip",
        "split",
        "join",
        "format",
        "upper",
        "lower",
        "startswith",
        "endswith",
    }
)

_HOST_FAULTS = (
    TypeError,
    ValueError,
    KeyError,
    IndexError,
    AttributeError,
    ZeroDivisionError,
    OverflowError,
    StopIteration,
    ArithmeticError,
)

_VIEW_TYPES = (type({}.keys()), type({}.values()), type({}.items()))


def derive_seed(*parts: Any) -> int:
    """Stable 64-bit seed from arbitrary repr-able parts.

    Uses a keyed hash rather than Python's salted ``hash`` so streams are
    identical across processes and runs.
    """
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class SubjectError(Exception):
    """Exception-level control flow of the code under execution."""

    def __init__(self, value: ExceptionValue):
        super().__init__(value.type_name)
        self.value = value


class _EngineInterrupt(Exception):
    """Step budget exhausted; never catchable by subject-level handlers."""


class _StopMaterialize(Exception):
    """Generator materialization hit the item cap."""


class _Return(Exception):
    def __init__(self, value):
        super().__init__()
        self.value = value


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


@dataclass
class ConsistencyEntry:
    v_old: Any
    v_new: Any


class ConsistencyMap:
    """Injected values shared by the two executions of one iteration.

    Keyed by merged access path; the first execution to touch a path creates
    the entry, storing the sampled value and a deep copy, so both sides see
    equal but non-interfering inputs.
    """

    def __init__(self, renames: Optional[dict[str, str]] = None):
        self.entries: dict[str, ConsistencyEntry] = {}
        self.renames = dict(renames) if renames else {}

    def lookup_or_create(self, path: str, side: str, creator: Callable[[], Any]) -> Any:
        entry = self.entries.get(path)
        if entry is None:
            v_old = creator()
            v_new = deep_copy(v_old)
            if serialize(v_old) != serialize(v_new):
                raise RuntimeError(f"consistency violation at {path!r}")
            entry = ConsistencyEntry(v_old, v_new)
            self.entries[path] = entry
        return entry.v_old if side == "old" else entry.v_new


def snapshot_injected(cmap: ConsistencyMap, side: str) -> dict[str, str]:
    """Serialized final value of every injected path, for one side."""
    out = {}
    for path, entry in cmap.entries.items():
        out[path] = serialize(entry.v_old if side == "old" else entry.v_new)
    return out


@dataclass(frozen=True)
class CallLogEntry:
    callee: str
    args: tuple[str, ...]
    kwargs: tuple[tuple[str, str], ...]
    occurrence: int

    def render(self) -> str:
        parts = list(self.args) + [f"{k}={v}" for k, v in self.kwargs]
        return f"{self.callee}({', '.join(parts)})"


@dataclass(frozen=True)
class ExceptionInfo:
    intentional: bool
    type_name: str
    args: tuple[str, ...]

    def render(self) -> str:
        return f"{self.type_name}({', '.join(self.args)})"


@dataclass
class ExecutionOutcome:
    side: str
    return_value: Optional[str]
    injected_state: dict[str, str]
    stdout: str
    stderr: str
    call_log: list[CallLogEntry]
    exception: Optional[ExceptionInfo]
    covered_lines: frozenset[int]
    covered_changed_lines: frozenset[int]


class MergeError(Exception):
    pass


@dataclass
class ComparisonProgram:
    """Both versions merged under internal names, ready for paired runs."""

    pair: FunctionPair
    internal_old: str = "f_old"
    internal_new: str = "f_new"
    plan: tuple[str, str] = ("old", "new")


def merge_pair(pair: FunctionPair) -> ComparisonProgram:
    if pair.old is None or pair.new is None:
        raise MergeError("both function versions are required")
    return ComparisonProgram(pair=pair)


class _Env:
    """Lexical environment chain. Reads walk outward, writes bind locally."""

    __slots__ = ("vars", "parent")

    def __init__(self, parent: Optional["_Env"] = None):
        self.vars: dict[str, Any] = {}
        self.parent = parent

    def lookup(self, name: str):
        env = self
        while env is not None:
            if name in env.vars:
                return True, env.vars[name]
            env = env.parent
        return False, None

    def assign(self, name: str, value: Any) -> None:
        self.vars[name] = value


_BINOP_NAMES = {
    ast.Add: "+",
    ast.Sub: "-",
    ast.Mult: "*",
    ast.Div: "/",
    ast.FloorDiv: "//",
    ast.Mod: "%",
    ast.Pow: "**",
}

_BINOP_FUNCS = {
    "+": _op.add,
    "-": _op.sub,
    "*": _op.mul,
    "/": _op.truediv,
    "//": _op.floordiv,
    "%": _op.mod,
    "**": _op.pow,
}

_CMP_FUNCS = {
    ast.Eq: _op.eq,
    ast.NotEq: _op.ne,
    ast.Lt: _op.lt,
    ast.LtE: _op.le,
    ast.Gt: _op.gt,
    ast.GtE: _op.ge,
}

_CMP_NAMES = {
    ast.Eq: "==",
    ast.NotEq: "!=",
    ast.Lt: "<",
    ast.LtE: "<=",
    ast.Gt: ">",
    ast.GtE: ">=",
}


class Interpreter:
    """Executes one side of a comparison program for one iteration."""

    def __init__(
        self,
        side: str,
        program: ComparisonProgram,
        cmap: ConsistencyMap,
        facts: StaticFacts,
        cfg: Any,
        predictor: Predictor,
        iteration_seed: int,
    ):
        self.side = side
        self.program = program
        self.pair = program.pair
        self.cmap = cmap
        self.facts = facts
        self.cfg = cfg
        self.predictor = predictor
        self.iteration_seed = iteration_seed
        self.renamer = Renamer(self.pair.renames, side)
        self.ccfg = ConcretizerConfig.with_literals(
            int_literals=facts.literals_int,
            float_literals=facts.literals_float,
            str_literals=facts.literals_str,
            classes=facts.isinstance_classes,
            max_structure_size=cfg.max_structure_size,
            object_bias=cfg.object_bias,
        )
        self.stdout = io.StringIO()
        self.call_log: list[CallLogEntry] = []
        self.covered: set[int] = set()
        self.steps = 0
        self.call_depth = 0
        self.occurrences: dict[str, int] = {}
        self.active_exceptions: list[ExceptionValue] = []
        self.sinks: list[list] = []
        self.context = ""
        self._context_cache: dict[int, str] = {}

    # plumbing

    def _stream(self, *key: Any) -> random.Random:
        return random.Random(derive_seed(self.iteration_seed, *key))

    def _step(self, node: ast.AST) -> None:
        self.steps += 1
        if self.steps > self.cfg.step_budget:
            raise _EngineInterrupt()
        line = getattr(node, "lineno", None)
        if line is not None:
            self.covered.add(line)

    def _host(self, fn: Callable, *args, **kwargs):
        """Run one host-level operation, translating faults into subject
        exceptions (unintended)."""
        try:
            return fn(*args, **kwargs)
        except VersatileIndexError:
            raise
        except _HOST_FAULTS as exc:
            raise SubjectError(
                ExceptionValue(type(exc).__name__, [str(exc)], intentional=False)
            ) from None

    def _fault(self, type_name: str, message: str):
        raise SubjectError(ExceptionValue(type_name, [message], intentional=False))

    def _cap_path(self, path: str) -> str:
        if len(path) <= _PATH_CAP:
            return path
        return path[: _PATH_CAP - 3] + "..."

    def _set_context(self, node: ast.AST) -> None:
        cached = self._context_cache.get(id(node))
        if cached is None:
            try:
                cached = ast.unparse(node)
            except Exception:
                cached = ""
            if len(cached) > _CONTEXT_CAP:
                cached = cached[:_CONTEXT_CAP]
            self._context_cache[id(node)] = cached
        self.context = cached

    def _inject(self, kind: str, raw_name: str, path: str) -> Any:
        path = self._cap_path(path)
        context = self.context

        def creator():
            rng = self._stream("value", path)
            dist = self.predictor.predict(InjectionQuery(kind, raw_name, context))
            abstract = dist.sample(rng)
            return concretize(abstract, self.ccfg, rng)

        return self.cmap.lookup_or_create(path, self.side, creator)

    def _next_occurrence(self, path: str) -> int:
        n = self.occurrences.get(path, 0) + 1
        self.occurrences[path] = n
        return n

    # entry points

    def run(self) -> ExecutionOutcome:
        fn = self.pair.old if self.side == "old" else self.pair.new
        root = _Env()
        entry = FunctionValue(fn.name, list(fn.params), fn.body, root, fn.is_generator)
        root.assign(fn.name, entry)
        self.covered.add(fn.node.lineno)
        return_s: Optional[str] = None
        exception: Optional[ExceptionInfo] = None
        try:
            result = self._call_function(entry, [], {}, allow_missing=True)
            return_s = self._epilogue(result)
        except SubjectError as err:
            ev = err.value
            exception = ExceptionInfo(
                ev.intentional, ev.type_name, tuple(serialize(a) for a in ev.args)
            )
        except _EngineInterrupt:
            exception = ExceptionInfo(False, "StepBudgetExceeded", ())
        except RecursionError:
            exception = ExceptionInfo(False, "RecursionError", ())
        changed = (
            self.pair.changed_lines_old
            if self.side == "old"
            else self.pair.changed_lines_new
        )
        covered = frozenset(self.covered)
        return ExecutionOutcome(
            side=self.side,
            return_value=None if exception is not None else return_s,
            injected_state={},
            stdout=self.stdout.getvalue(),
            stderr="",
            call_log=list(self.call_log),
            exception=exception,
            covered_lines=covered,
            covered_changed_lines=frozenset(covered & changed),
        )

    def _epilogue(self, result: Any) -> str:
        """Unwrap generator returns and probe returned functions once."""
        if isinstance(result, GeneratorValue):
            return serialize(result.materialize())
        if isinstance(result, FunctionValue):
            inner = self._call_function(result, [], {}, allow_missing=True)
            if isinstance(inner, GeneratorValue):
                rendered = serialize(inner.materialize())
            else:
                rendered = serialize(inner)
            return f"<function {result.name}() -> {rendered}>"
        return serialize(result)

    # function calls

    def _call_function(
        self,
        fv: FunctionValue,
        args: list,
        kwargs: dict[str, Any],
        allow_missing: bool = False,
    ) -> Any:
        self.call_depth += 1
        if self.call_depth > _MAX_CALL_DEPTH:
            self.call_depth -= 1
            self._fault("RecursionError", "maximum call depth exceeded")
        try:
            env = _Env(parent=fv.env)
            params = fv.params
            if len(args) > len(params):
                self._fault(
                    "TypeError",
                    f"{fv.name}() takes {len(params)} arguments but {len(args)} were given",
                )
            bound = set()
            for p, a in zip(params, args):
                env.assign(p, a)
                bound.add(p)
            for k, v in kwargs.items():
                if k not in params:
                    self._fault("TypeError", f"{fv.name}() got an unexpected keyword argument {k!r}")
                if k in bound:
                    self._fault("TypeError", f"{fv.name}() got multiple values for argument {k!r}")
                env.assign(k, v)
                bound.add(k)
            if not allow_missing:
                missing = [p for p in params if p not in bound]
                if missing:
                    self._fault(
                        "TypeError",
                        f"{fv.name}() missing required argument {missing[0]!r}",
                    )
            if fv.is_lambda:
                return self._eval(fv.body, env)
            if fv.is_generator:
                return GeneratorValue(materializer=lambda: self._materialize(fv, env))
            try:
                self._exec_block(fv.body, env)
            except _Return as r:
                return r.value
            except (_Break, _Continue):
                raise RuntimeError("loop control escaped a function body")
            return None
        finally:
            self.call_depth -= 1

    def _materialize(self, fv: FunctionValue, env: _Env) -> list:
        sink: list = []
        self.sinks.append(sink)
        try:
            try:
                self._exec_block(fv.body, env)
            except (_Return, _StopMaterialize):
                pass
        finally:
            self.sinks.pop()
        return sink

    # statements

    def _exec_block(self, stmts: list, env: _Env) -> None:
        for stmt in stmts:
            self._exec(stmt, env)

    def _exec(self, node: ast.stmt, env: _Env) -> None:
        self._step(node)
        handler = getattr(self, f"_exec_{type(node).__name__}", None)
        if handler is None:
            raise RuntimeError(f"engine cannot execute {type(node).__name__}")
        handler(node, env)

    def _exec_FunctionDef(self, node: ast.FunctionDef, env: _Env) -> None:
        fv = FunctionValue(
            node.name,
            [a.arg for a in node.args.args],
            node.body,
            env,
            is_generator=function_is_generator(node),
        )
        env.assign(node.name, fv)

    def _exec_Return(self, node: ast.Return, env: _Env) -> None:
        self._set_context(node)
        value = self._eval(node.value, env) if node.value is not None else None
        raise _Return(value)

    def _exec_Assign(self, node: ast.Assign, env: _Env) -> None:
        self._set_context(node)
        value = self._eval(node.value, env)
        self._bind_target(node.targets[0], value, env)

    def _exec_AugAssign(self, node: ast.AugAssign, env: _Env) -> None:
        self._set_context(node)
        op = _BINOP_NAMES[type(node.op)]
        target = node.target
        rhs = self._eval(node.value, env)
        if isinstance(target, ast.Name):
            current = self._read_name(target.id, env)
            env.assign(target.id, self._binop(op, current, rhs))
            return
        if isinstance(target, ast.Attribute):
            base_v, base_p = self._eval_p(target.value, env)
            current = self._read_attribute(base_v, target.attr, base_p)
            self._store_attribute(base_v, target.attr, self._binop(op, current, rhs))
            return
        base_v, base_p = self._eval_p(target.value, env)
        key, rendered, host_index = self._eval_index(target, env)
        current = self._read_subscript(base_v, key, rendered, host_index, base_p)
        self._store_subscript(base_v, host_index, self._binop(op, current, rhs))

    def _exec_Expr(self, node: ast.Expr, env: _Env) -> None:
        self._set_context(node)
        if isinstance(node.value, ast.Yield):
            value = (
                self._eval(node.value.value, env)
                if node.value.value is not None
                else None
            )
            if not self.sinks:
                self._fault("RuntimeError", "yield outside a generator")
            sink = self.sinks[-1]
            sink.append(value)
            if len(sink) >= self.cfg.generator_cap:
                raise _StopMaterialize()
            return
        self._eval(node.value, env)

    def _exec_If(self, node: ast.If, env: _Env) -> None:
        self._set_context(node.test)
        if self._truthy(self._eval(node.test, env)):
            self._exec_block(node.body, env)
        else:
            self._exec_block(node.orelse, env)

    def _exec_While(self, node: ast.While, env: _Env) -> None:
        while True:
            self._set_context(node.test)
            self._step(node)
            if not self._truthy(self._eval(node.test, env)):
                break
            try:
                self._exec_block(node.body, env)
            except _Break:
                break
            except _Continue:
                continue

    def _exec_For(self, node: ast.For, env: _Env) -> None:
        self._set_context(node.iter)
        items = self._iter_value(self._eval(node.iter, env))
        for item in items:
            self._step(node)
            self._bind_target(node.target, item, env)
            try:
                self._exec_block(node.body, env)
            except _Break:
                break
            except _Continue:
                continue

    def _exec_Break(self, node: ast.Break, env: _Env) -> None:
        raise _Break()

    def _exec_Continue(self, node: ast.Continue, env: _Env) -> None:
        raise _Continue()

    def _exec_Pass(self, node: ast.Pass, env: _Env) -> None:
        pass

    def _exec_Raise(self, node: ast.Raise, env: _Env) -> None:
        self._set_context(node)
        if node.cause is not None:
            self._eval(node.cause, env)
        if node.exc is None:
            if self.active_exceptions:
                raise SubjectError(self.active_exceptions[-1])
            self._fault("RuntimeError", "no active exception to re-raise")
        if isinstance(node.exc, ast.Name):
            found, value = env.lookup(node.exc.id)
            if found:
                if isinstance(value, ExceptionValue):
                    raise SubjectError(value)
                self._fault("TypeError", "exceptions must be exception values")
            raise SubjectError(
                ExceptionValue(self.renamer.merge(node.exc.id), [], intentional=True)
            )
        # Call of a name, e.g. raise ValueError('boom')
        call = node.exc
        args = [self._eval(a, env) for a in call.args]
        args.extend(self._eval(kw.value, env) for kw in call.keywords)
        type_name = self.renamer.merge(call.func.id)
        raise SubjectError(ExceptionValue(type_name, args, intentional=True))

    def _exec_Assert(self, node: ast.Assert, env: _Env) -> None:
        self._set_context(node)
        if not self._truthy(self._eval(node.test, env)):
            args = [self._eval(node.msg, env)] if node.msg is not None else []
            raise SubjectError(ExceptionValue("AssertionError", args, intentional=True))

    def _exec_Try(self, node: ast.Try, env: _Env) -> None:
        try:
            try:
                self._exec_block(node.body, env)
            except SubjectError as err:
                for handler in node.handlers:
                    if self._handler_matches(handler, err.value):
                        if handler.name:
                            env.assign(handler.name, err.value)
                        self.active_exceptions.append(err.value)
                        try:
                            self._exec_block(handler.body, env)
                        finally:
                            self.active_exceptions.pop()
                        break
                else:
                    raise
            else:
                self._exec_block(node.orelse, env)
        finally:
            self._exec_block(node.finalbody, env)

    def _handler_matches(self, handler: ast.ExceptHandler, ev: ExceptionValue) -> bool:
        if handler.type is None:
            return True
        if isinstance(handler.type, ast.Name):
            names = [self.renamer.merge(handler.type.id)]
        else:
            names = [
                self.renamer.merge(e.id)
                for e in handler.type.elts
                if isinstance(e, ast.Name)
            ]
        for name in names:
            if name == ev.type_name or name in ("Exception", "BaseException"):
                return True
        return False

    def _exec_With(self, node: ast.With, env: _Env) -> None:
        item = node.items[0]
        self._set_context(item.context_expr)
        value = self._eval(item.context_expr, env)
        if isinstance(value, VersatileObject):
            value = value.__enter__()
        if item.optional_vars is not None:
            env.assign(item.optional_vars.id, value)
        self._exec_block(node.body, env)

    # assignment targets

    def _bind_target(self, target: ast.expr, value: Any, env: _Env) -> None:
        if isinstance(target, ast.Name):
            env.assign(target.id, value)
            return
        if isinstance(target, ast.Tuple):
            items = self._iter_value(value)
            if len(items) != len(target.elts):
                self._fault(
                    "ValueError",
                    f"cannot unpack {len(items)} values into {len(target.elts)} targets",
                )
            for t, v in zip(target.elts, items):
                self._bind_target(t, v, env)
            return
        if isinstance(target, ast.Attribute):
            base_v, _ = self._eval_p(target.value, env)
            self._store_attribute(base_v, target.attr, value)
            return
        if isinstance(target, ast.Subscript):
            base_v, _ = self._eval_p(target.value, env)
            _, _, host_index = self._eval_index(target, env)
            self._store_subscript(base_v, host_index, value)
            return
        raise RuntimeError(f"engine cannot bind {type(target).__name__}")

    def _store_attribute(self, base: Any, raw_attr: str, value: Any) -> None:
        merged = self.renamer.merge(raw_attr)
        if isinstance(base, VersatileObject):
            base.store(merged, value)
            return
        self._host(setattr, base, raw_attr, value)

    def _store_subscript(self, base: Any, host_index: Any, value: Any) -> None:
        def do_store():
            base[host_index] = value

        self._host(do_store)

    # reads with interception

    def _read_name(self, name: str, env: _Env) -> Any:
        found, value = env.lookup(name)
        if found:
            return value
        if name in BUILTIN_NAMES:
            return BuiltinFunction(name)
        path = self.renamer.merge(name)
        value = self._inject("variable-read", name, path)
        env.assign(name, value)
        return value

    def _read_attribute(self, base: Any, raw_attr: str, base_path: Optional[str]) -> Any:
        merged = self.renamer.merge(raw_attr)
        path = f"{base_path}.{merged}" if base_path else f"<expr>.{merged}"
        if isinstance(base, VersatileObject):
            if merged in base.attrs:
                return base.attrs[merged]
            value = self._inject("attribute-read", raw_attr, path)
            base.attrs[merged] = value
            return value
        if raw_attr in NATIVE_METHODS and hasattr(base, raw_attr):
            return BoundMethod(base, raw_attr)
        return self._inject("attribute-read", raw_attr, path)

    def _eval_index(self, node: ast.Subscript, env: _Env):
        """Evaluate a subscript index once.

        Returns (key_value, rendered_text, host_index) where host_index is
        what the host subscript operation receives (a slice object for
        slices, the key itself otherwise).
        """
        s = node.slice
        if isinstance(s, ast.Slice):
            lo = self._eval(s.lower, env) if s.lower is not None else None
            hi = self._eval(s.upper, env) if s.upper is not None else None
            rendered = f"{serialize(lo) if lo is not None else ''}:{serialize(hi) if hi is not None else ''}"
            return None, rendered, slice(lo, hi)
        key = self._eval(s, env)
        rendered = serialize(key)
        return key, rendered, key

    def _read_subscript(
        self,
        base: Any,
        key: Any,
        rendered: str,
        host_index: Any,
        base_path: Optional[str],
    ) -> Any:
        path = self._cap_path(f"{base_path}[{rendered}]" if base_path else f"<expr>[{rendered}]")
        if isinstance(base, VersatileObject):
            bracket = f"[{rendered}]"
            if bracket in base.attrs:
                return base.attrs[bracket]
        try:
            return base[host_index]
        except (TypeError, KeyError, IndexError, VersatileIndexError):
            query_name = key if isinstance(key, str) else rendered
            value = self._inject("subscript-result", query_name, path)
            if isinstance(base, VersatileObject):
                base.attrs[f"[{rendered}]"] = value
            return value

    # expressions

    def _eval(self, node: ast.expr, env: _Env) -> Any:
        value, _ = self._eval_p(node, env)
        return value

    def _eval_p(self, node: ast.expr, env: _Env) -> tuple[Any, Optional[str]]:
        """Evaluate an expression, tracking its access path when it has one."""
        self._step(node)
        if isinstance(node, ast.Name):
            return self._read_name(node.id, env), self.renamer.merge(node.id)
        if isinstance(node, ast.Attribute):
            base_v, base_p = self._eval_p(node.value, env)
            merged = self.renamer.merge(node.attr)
            path = self._cap_path(f"{base_p}.{merged}" if base_p else f"<expr>.{merged}")
            return self._read_attribute(base_v, node.attr, base_p), path
        if isinstance(node, ast.Subscript):
            base_v, base_p = self._eval_p(node.value, env)
            key, rendered, host_index = self._eval_index(node, env)
            value = self._read_subscript(base_v, key, rendered, host_index, base_p)
            path = self._cap_path(
                f"{base_p}[{rendered}]" if base_p else f"<expr>[{rendered}]"
            )
            return value, path
        if isinstance(node, ast.Call):
            return self._eval_call(node, env)
        handler = getattr(self, f"_eval_{type(node).__name__}", None)
        if handler is None:
            raise RuntimeError(f"engine cannot evaluate {type(node).__name__}")
        return handler(node, env), None

    def _eval_Constant(self, node: ast.Constant, env: _Env) -> Any:
        return node.value

    def _eval_List(self, node: ast.List, env: _Env) -> list:
        return [self._eval(e, env) for e in node.elts]

    def _eval_Tuple(self, node: ast.Tuple, env: _Env) -> tuple:
        return tuple(self._eval(e, env) for e in node.elts)

    def _eval_Set(self, node: ast.Set, env: _Env) -> set:
        items = [self._eval(e, env) for e in node.elts]
        return self._host(set, items)

    def _eval_Dict(self, node: ast.Dict, env: _Env) -> dict:
        out: dict = {}
        for k, v in zip(node.keys, node.values):
            key = self._eval(k, env)
            value = self._eval(v, env)
            self._host(out.__setitem__, key, value)
        return out

    def _eval_BoolOp(self, node: ast.BoolOp, env: _Env) -> Any:
        is_or = isinstance(node.op, ast.Or)
        for sub in node.values[:-1]:
            value = self._eval(sub, env)
            truthy = self._truthy(value)
            if (is_or and truthy) or (not is_or and not truthy):
                return value
        return self._eval(node.values[-1], env)

    def _eval_BinOp(self, node: ast.BinOp, env: _Env) -> Any:
        left = self._eval(node.left, env)
        right = self._eval(node.right, env)
        return self._binop(_BINOP_NAMES[type(node.op)], left, right)

    def _binop(self, op: str, left: Any, right: Any) -> Any:
        # Host dispatch alone is not enough: str.__mod__ raises instead of
        # returning NotImplemented, so "s" % versatile would never reach the
        # reflected method. Route versatile operands through the total op.
        if isinstance(left, VersatileObject) or isinstance(right, VersatileObject):
            return versatile_binop(op, left, right)
        return self._host(_BINOP_FUNCS[op], left, right)

    def _eval_UnaryOp(self, node: ast.UnaryOp, env: _Env) -> Any:
        value = self._eval(node.operand, env)
        if isinstance(node.op, ast.Not):
            return not self._truthy(value)
        return self._host(_op.neg, value)

    def _eval_Compare(self, node: ast.Compare, env: _Env) -> bool:
        left = self._eval(node.left, env)
        for op, comparator in zip(node.ops, node.comparators):
            right = self._eval(comparator, env)
            if not self._compare_once(op, left, right):
                return False
            left = right
        return True

    def _compare_once(self, op: ast.cmpop, left: Any, right: Any) -> bool:
        if isinstance(op, ast.Is):
            return left is right
        if isinstance(op, ast.IsNot):
            return left is not right
        if isinstance(op, ast.In):
            return bool(self._host(lambda a, b: a in b, left, right))
        if isinstance(op, ast.NotIn):
            return bool(self._host(lambda a, b: a not in b, left, right))
        if isinstance(left, VersatileObject) or isinstance(right, VersatileObject):
            return bool(versatile_binop(_CMP_NAMES[type(op)], left, right))
        return bool(self._host(_CMP_FUNCS[type(op)], left, right))

    def _eval_IfExp(self, node: ast.IfExp, env: _Env) -> Any:
        if self._truthy(self._eval(node.test, env)):
            return self._eval(node.body, env)
        return self._eval(node.orelse, env)

    def _eval_Lambda(self, node: ast.Lambda, env: _Env) -> FunctionValue:
        return FunctionValue(
            "<lambda>",
            [a.arg for a in node.args.args],
            node.body,
            env,
            is_generator=False,
            is_lambda=True,
        )

    def _eval_JoinedStr(self, node: ast.JoinedStr, env: _Env) -> str:
        parts = []
        for part in node.values:
            if isinstance(part, ast.Constant):
                parts.append(part.value)
            else:
                value = self._eval(part.value, env)
                if part.conversion == 114:
                    parts.append(serialize(value))
                else:
                    parts.append(self._subject_str(value))
        return "".join(parts)

    def _eval_ListComp(self, node: ast.ListComp, env: _Env) -> list:
        out: list = []
        self._run_comprehension(node.generators, 0, _Env(parent=env), node.elt, out)
        return out

    def _eval_GeneratorExp(self, node: ast.GeneratorExp, env: _Env) -> GeneratorValue:
        out: list = []
        self._run_comprehension(node.generators, 0, _Env(parent=env), node.elt, out)
        return GeneratorValue(items=out)

    def _run_comprehension(self, gens, idx, env, elt, out) -> None:
        if idx == len(gens):
            out.append(self._eval(elt, env))
            return
        gen = gens[idx]
        for item in self._iter_value(self._eval(gen.iter, env)):
            self._step(gen.iter)
            self._bind_target(gen.target, item, env)
            if all(self._truthy(self._eval(cond, env)) for cond in gen.ifs):
                self._run_comprehension(gens, idx + 1, env, elt, out)

    def _eval_Yield(self, node: ast.Yield, env: _Env) -> Any:
        # The validator only admits yield as an expression statement.
        raise RuntimeError("yield evaluated outside statement position")

    # calls

    def _eval_call(self, node: ast.Call, env: _Env) -> tuple[Any, Optional[str]]:
        func = node.func
        if isinstance(func, ast.Name):
            found, fv = env.lookup(func.id)
            if not found:
                if func.id == "isinstance":
                    return self._builtin_isinstance(node, env), None
                if func.id == "super":
                    for a in node.args:
                        self._eval(a, env)
                    return self._super_value(), "super()"
                if func.id in BUILTIN_NAMES:
                    args, kwargs = self._eval_args(node, env)
                    path = f"{func.id}()"
                    return self._call_builtin(func.id, args, kwargs), path
                merged = self.renamer.merge(func.id)
                args, kwargs = self._eval_args(node, env)
                return self._external_call(merged, args, kwargs), f"{merged}()"
            args, kwargs = self._eval_args(node, env)
            path = self.renamer.merge(func.id)
            return self._call_value(fv, args, kwargs, path), f"{path}()"
        if isinstance(func, ast.Attribute):
            base_v, base_p = self._eval_p(func.value, env)
            merged_attr = self.renamer.merge(func.attr)
            callee = f"{base_p}.{merged_attr}" if base_p else f"<expr>.{merged_attr}"
            callee = self._cap_path(callee)
            if isinstance(base_v, VersatileObject) and merged_attr in base_v.attrs:
                args, kwargs = self._eval_args(node, env)
                return (
                    self._call_value(base_v.attrs[merged_attr], args, kwargs, callee),
                    f"{callee}()",
                )
            if (
                not isinstance(base_v, VersatileObject)
                and func.attr in NATIVE_METHODS
                and hasattr(base_v, func.attr)
            ):
                args, kwargs = self._eval_args(node, env)
                return self._call_native(base_v, func.attr, args, kwargs), f"{callee}()"
            args, kwargs = self._eval_args(node, env)
            return self._external_call(callee, args, kwargs), f"{callee}()"
        fv, fp = self._eval_p(func, env)
        args, kwargs = self._eval_args(node, env)
        callee = fp if fp else "<expr>"
        return self._call_value(fv, args, kwargs, callee), f"{callee}()"

    def _eval_args(self, node: ast.Call, env: _Env):
        args = [self._eval(a, env) for a in node.args]
        kwargs: dict[str, Any] = {}
        for kw in node.keywords:
            kwargs[kw.arg] = self._eval(kw.value, env)
        return args, kwargs

    def _call_value(self, value: Any, args: list, kwargs: dict, path: str) -> Any:
        if isinstance(value, FunctionValue):
            return self._call_function(value, args, kwargs)
        if isinstance(value, BoundMethod):
            return self._call_native(value.receiver, value.name, args, kwargs)
        if isinstance(value, BuiltinFunction):
            if value.name == "isinstance":
                # Indirect isinstance loses the syntactic class argument;
                # resolve to False rather than guessing.
                return False
            if value.name == "super":
                return self._super_value()
            return self._call_builtin(value.name, args, kwargs)
        if isinstance(value, VersatileCallable):
            return self._external_call(path, args, kwargs, constructor=value)
        if isinstance(value, VersatileObject):
            return self._external_call(path, args, kwargs)
        self._fault("TypeError", f"{serialize(value)} is not callable")

    def _call_native(self, receiver: Any, name: str, args: list, kwargs: dict) -> Any:
        method = getattr(receiver, name)
        result = self._host(method, *args, **kwargs)
        if isinstance(result, _VIEW_TYPES):
            return list(result)
        return result

    def _external_call(
        self,
        path: str,
        args: list,
        kwargs: dict,
        constructor: Optional[VersatileCallable] = None,
    ) -> Any:
        path = self._cap_path(path)
        occurrence = self._next_occurrence(path)
        entry = CallLogEntry(
            callee=path,
            args=tuple(serialize(a) for a in args),
            kwargs=tuple(sorted((k, serialize(v)) for k, v in kwargs.items())),
            occurrence=occurrence,
        )
        self.call_log.append(entry)
        exc_types = self.facts.call_exception_map.get(path)
        if exc_types:
            rng = self._stream("exc", path, occurrence)
            if rng.random() < self.cfg.exception_probability:
                ordered = sorted(exc_types)
                type_name = ordered[rng.randrange(len(ordered))]
                raise SubjectError(ExceptionValue(type_name, [], intentional=True))
        if constructor is not None:
            constructor.call_count += 1
            seed = derive_seed(constructor.seed, "call", constructor.call_count)
            return VersatileObject(seed, constructor.assigned_type)
        key = f"{path}()#{occurrence}"
        return self._inject("call-return", path, key)

    def _super_value(self) -> VersatileObject:
        occurrence = self._next_occurrence("super()")
        key = f"super()#{occurrence}"

        def creator():
            rng = self._stream("value", key)
            return VersatileObject(rng.getrandbits(64), None)

        return self.cmap.lookup_or_create(key, self.side, creator)

    def _builtin_isinstance(self, node: ast.Call, env: _Env) -> bool:
        if len(node.args) != 2 or node.keywords:
            self._fault("TypeError", "isinstance expects exactly two arguments")
        value = self._eval(node.args[0], env)
        names = isinstance_class_names(node.args[1], self.renamer)
        return self._isinstance_value(value, names)

    _KIND_NAMES = {
        bool: "bool",
        int: "int",
        float: "float",
        str: "str",
        list: "list",
        dict: "dict",
        set: "set",
        tuple: "tuple",
        type(None): "NoneType",
    }

    def _isinstance_value(self, value: Any, names: list[str]) -> bool:
        if isinstance(value, VersatileObject):
            return value.assigned_type is not None and value.assigned_type in names
        kind = self._KIND_NAMES.get(type(value))
        return kind is not None and kind in names

    # builtins

    def _call_builtin(self, name: str, args: list, kwargs: dict) -> Any:
        allowed_kwargs = {
            "print": {"sep", "end"},
            "sorted": {"reverse"},
            "dict": None,  # arbitrary string keys
        }.get(name, set())
        if allowed_kwargs is not None:
            for k in kwargs:
                if k not in allowed_kwargs:
                    self._fault(
                        "TypeError", f"{name}() got an unexpected keyword argument {k!r}"
                    )
        handler = getattr(self, f"_builtin_{name}", None)
        if handler is None:
            raise RuntimeError(f"missing builtin {name}")
        return handler(args, kwargs)

    def _builtin_print(self, args: list, kwargs: dict) -> None:
        sep = kwargs.get("sep", " ")
        end = kwargs.get("end", "\n")
        if not isinstance(sep, str) or not isinstance(end, str):
            self._fault("TypeError", "sep and end must be strings")
        self.stdout.write(sep.join(self._subject_str(a) for a in args) + end)

    def _builtin_len(self, args: list, kwargs: dict) -> int:
        if len(args) != 1:
            self._fault("TypeError", "len() takes exactly one argument")
        return self._host(len, args[0])

    def _builtin_range(self, args: list, kwargs: dict) -> range:
        if not 1 <= len(args) <= 3:
            self._fault("TypeError", "range() takes one to three arguments")
        coerced = [
            VersatileObject.INTERNAL_INT if isinstance(a, VersatileObject) else a
            for a in args
        ]
        return self._host(range, *coerced)

    def _builtin_str(self, args: list, kwargs: dict) -> str:
        if not args:
            return ""
        if len(args) != 1:
            self._fault("TypeError", "str() takes at most one argument")
        return self._subject_str(args[0])

    def _builtin_repr(self, args: list, kwargs: dict) -> str:
        if len(args) != 1:
            self._fault("TypeError", "repr() takes exactly one argument")
        return serialize(args[0])

    def _builtin_int(self, args: list, kwargs: dict) -> int:
        if not args:
            return 0
        if len(args) != 1:
            self._fault("TypeError", "int() takes at most one argument")
        v = args[0]
        if isinstance(v, VersatileObject):
            return VersatileObject.INTERNAL_INT
        return self._host(int, v)

    def _builtin_float(self, args: list, kwargs: dict) -> float:
        if not args:
            return 0.0
        if len(args) != 1:
            self._fault("TypeError", "float() takes at most one argument")
        v = args[0]
        if isinstance(v, VersatileObject):
            return VersatileObject.INTERNAL_FLOAT
        return self._host(float, v)

    def _builtin_bool(self, args: list, kwargs: dict) -> bool:
        if not args:
            return False
        if len(args) != 1:
            self._fault("TypeError", "bool() takes at most one argument")
        return self._truthy(args[0])

    def _builtin_abs(self, args: list, kwargs: dict) -> Any:
        if len(args) != 1:
            self._fault("TypeError", "abs() takes exactly one argument")
        v = args[0]
        if isinstance(v, VersatileObject):
            return abs(VersatileObject.INTERNAL_INT)
        return self._host(abs, v)

    def _builtin_min(self, args: list, kwargs: dict) -> Any:
        return self._min_max(min, args)

    def _builtin_max(self, args: list, kwargs: dict) -> Any:
        return self._min_max(max, args)

    def _min_max(self, fn: Callable, args: list) -> Any:
        if not args:
            self._fault("TypeError", f"{fn.__name__}() expects arguments")
        if len(args) == 1:
            return self._host(fn, self._iter_value(args[0]))
        return self._host(fn, args)

    def _builtin_any(self, args: list, kwargs: dict) -> bool:
        if len(args) != 1:
            self._fault("TypeError", "any() takes exactly one argument")
        return any(self._truthy(v) for v in self._iter_value(args[0]))

    def _builtin_all(self, args: list, kwargs: dict) -> bool:
        if len(args) != 1:
            self._fault("TypeError", "all() takes exactly one argument")
        return all(self._truthy(v) for v in self._iter_value(args[0]))

    def _builtin_sorted(self, args: list, kwargs: dict) -> list:
        if len(args) != 1:
            self._fault("TypeError", "sorted() takes exactly one positional argument")
        items = self._iter_value(args[0])
        reverse = self._truthy(kwargs.get("reverse", False))
        return self._host(sorted, items, reverse=reverse)

    def _builtin_enumerate(self, args: list, kwargs: dict) -> list:
        if not 1 <= len(args) <= 2:
            self._fault("TypeError", "enumerate() takes one or two arguments")
        start = args[1] if len(args) == 2 else 0
        if isinstance(start, VersatileObject):
            start = VersatileObject.INTERNAL_INT
        if not isinstance(start, int):
            self._fault("TypeError", "enumerate() start must be an integer")
        return [(start + i, v) for i, v in enumerate(self._iter_value(args[0]))]

    def _builtin_list(self, args: list, kwargs: dict) -> list:
        if not args:
            return []
        if len(args) != 1:
            self._fault("TypeError", "list() takes at most one argument")
        return list(self._iter_value(args[0]))

    def _builtin_tuple(self, args: list, kwargs: dict) -> tuple:
        if not args:
            return ()
        if len(args) != 1:
            self._fault("TypeError", "tuple() takes at most one argument")
        return tuple(self._iter_value(args[0]))

    def _builtin_set(self, args: list, kwargs: dict) -> set:
        if not args:
            return set()
        if len(args) != 1:
            self._fault("TypeError", "set() takes at most one argument")
        return self._host(set, self._iter_value(args[0]))

    def _builtin_dict(self, args: list, kwargs: dict) -> dict:
        if len(args) > 1:
            self._fault("TypeError", "dict() takes at most one positional argument")
        out: dict = {}
        if args:
            v = args[0]
            if isinstance(v, dict):
                out.update(v)
            else:
                pairs = self._iter_value(v)
                for pair in pairs:
                    items = self._iter_value(pair)
                    if len(items) != 2:
                        self._fault("ValueError", "dict() expects key/value pairs")
                    self._host(out.__setitem__, items[0], items[1])
        for k, v in kwargs.items():
            out[k] = v
        return out

    # helpers

    def _truthy(self, value: Any) -> bool:
        return bool(value)

    def _subject_str(self, value: Any) -> str:
        if isinstance(value, str):
            return value
        return serialize(value)

    def _iter_value(self, value: Any) -> list:
        if isinstance(value, VersatileObject):
            return list(value)
        if isinstance(value, GeneratorValue):
            return list(value.materialize())
        if isinstance(value, (set, frozenset)):
            return sorted_iter(value)
        if isinstance(value, (str, list, tuple, dict, range)):
            return list(value)
        self._fault("TypeError", f"{serialize(value)} is not iterable")


def run_one(
    side: str,
    program: ComparisonProgram,
    cmap: ConsistencyMap,
    facts: StaticFacts,
    cfg: Any,
    predictor: Predictor,
    iteration_seed: int,
) -> ExecutionOutcome:
    """Execute one side of the pair for one iteration."""
    interpreter = Interpreter(side, program, cmap, facts, cfg, predictor, iteration_seed)
    return interpreter.run()
