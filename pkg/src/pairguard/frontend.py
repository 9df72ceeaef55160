"""Parsing and static analysis of subject-language functions.

The subject language is an indentation-blocked, dynamically typed language
whose surface syntax is a strict subset of Python's, so parsing builds on the
standard ``ast`` module followed by a validator that rejects everything
outside the supported grammar. This module also computes changed lines
between two versions, merges renamed identifiers, and extracts the static
facts (literals, isinstance classes, caught exception types) the execution
engine needs.
"""

from __future__ import annotations

import ast
import difflib
from dataclasses import dataclass, field
from typing import Optional

BUILTIN_NAMES = frozenset(
    {
        "print",
        "len",
        "isinstance",
        "super",
        "any",
        "all",
        "range",
        "str",
        "int",
        "float",
        "bool",
        "repr",
        "list",
        "dict",
        "set",
        "tuple",
        "enumerate",
        "sorted",
        "min",
        "max",
        "abs",
    }
)

_ALLOWED_BINOPS = (
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.FloorDiv,
    ast.Mod,
    ast.Pow,
)
_ALLOWED_AUGOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.FloorDiv, ast.Mod)
_ALLOWED_CMPOPS = (
    ast.Eq,
    ast.NotEq,
    ast.Lt,
    ast.LtE,
    ast.Gt,
    ast.GtE,
    ast.In,
    ast.NotIn,
    ast.Is,
    ast.IsNot,
)
_ALLOWED_UNARYOPS = (ast.Not, ast.USub)


@dataclass
class SourceFunction:
    """One parsed function version."""

    name: str
    params: list[str]
    body: list
    source_text: str
    line_count: int
    node: ast.FunctionDef
    is_generator: bool
    code_lines: frozenset[int]


@dataclass
class FunctionPair:
    """The two versions under comparison plus diff and rename metadata."""

    old: SourceFunction
    new: SourceFunction
    renames: dict[str, str]
    changed_lines_old: frozenset[int]
    changed_lines_new: frozenset[int]


@dataclass
class StaticFacts:
    """Facts mined from both versions that guide value injection."""

    literals_int: list[int] = field(default_factory=list)
    literals_float: list[float] = field(default_factory=list)
    literals_str: list[str] = field(default_factory=list)
    isinstance_classes: set[str] = field(default_factory=set)
    call_exception_map: dict[str, frozenset[str]] = field(default_factory=dict)


def _reject(node: ast.AST, message: str, source: str) -> None:
    lineno = getattr(node, "lineno", 1)
    col = getattr(node, "col_offset", 0)
    lines = source.splitlines()
    text = lines[lineno - 1] if 0 < lineno <= len(lines) else ""
    raise SyntaxError(message, ("<pair>", lineno, col + 1, text))


class _SubsetValidator:
    """Reject constructs outside the subject-language grammar."""

    def __init__(self, source: str):
        self.source = source
        self.loop_depth = 0

    def reject(self, node, message):
        _reject(node, message, self.source)

    def validate_function(self, node: ast.FunctionDef):
        if node.decorator_list:
            self.reject(node, "decorators are not supported")
        if node.returns is not None:
            self.reject(node, "return annotations are not supported")
        a = node.args
        if a.posonlyargs or a.kwonlyargs or a.vararg or a.kwarg:
            self.reject(node, "only plain positional parameters are supported")
        if a.defaults or a.kw_defaults:
            self.reject(node, "parameter defaults are not supported")
        for arg in a.args:
            if arg.annotation is not None:
                self.reject(arg, "parameter annotations are not supported")
        for stmt in node.body:
            self.stmt(stmt)

    def stmt(self, node: ast.stmt):
        handler = getattr(self, f"stmt_{type(node).__name__}", None)
        if handler is None:
            self.reject(node, f"unsupported statement: {type(node).__name__}")
        handler(node)

    def stmt_FunctionDef(self, node):
        saved = self.loop_depth
        self.loop_depth = 0
        self.validate_function(node)
        self.loop_depth = saved

    def stmt_Return(self, node):
        if node.value is not None:
            self.expr(node.value)

    def stmt_Assign(self, node):
        if len(node.targets) != 1:
            self.reject(node, "chained assignment is not supported")
        self.target(node.targets[0], allow_tuple=True)
        self.expr(node.value)

    def stmt_AugAssign(self, node):
        if not isinstance(node.op, _ALLOWED_AUGOPS):
            self.reject(node, f"unsupported augmented operator: {type(node.op).__name__}")
        self.target(node.target, allow_tuple=False)
        self.expr(node.value)

    def stmt_Expr(self, node):
        if isinstance(node.value, ast.Yield):
            if node.value.value is not None:
                self.expr(node.value.value)
            return
        self.expr(node.value)

    def stmt_If(self, node):
        self.expr(node.test)
        for s in node.body:
            self.stmt(s)
        for s in node.orelse:
            self.stmt(s)

    def stmt_While(self, node):
        if node.orelse:
            self.reject(node, "while-else is not supported")
        self.expr(node.test)
        self.loop_depth += 1
        for s in node.body:
            self.stmt(s)
        self.loop_depth -= 1

    def stmt_For(self, node):
        if node.orelse:
            self.reject(node, "for-else is not supported")
        self.target(node.target, allow_tuple=True)
        self.expr(node.iter)
        self.loop_depth += 1
        for s in node.body:
            self.stmt(s)
        self.loop_depth -= 1

    def stmt_Break(self, node):
        if self.loop_depth == 0:
            self.reject(node, "break outside a loop")

    def stmt_Continue(self, node):
        if self.loop_depth == 0:
            self.reject(node, "continue outside a loop")

    def stmt_Pass(self, node):
        pass

    def stmt_Raise(self, node):
        if node.exc is not None:
            if isinstance(node.exc, ast.Name):
                pass
            elif isinstance(node.exc, ast.Call) and isinstance(node.exc.func, ast.Name):
                self.call_args(node.exc)
            else:
                self.reject(node, "raise target must be a name or a name call")
        if node.cause is not None:
            self.expr(node.cause)

    def stmt_Assert(self, node):
        self.expr(node.test)
        if node.msg is not None:
            self.expr(node.msg)

    def stmt_Try(self, node):
        if getattr(node, "handlers", None) is None:
            self.reject(node, "malformed try")
        for s in node.body:
            self.stmt(s)
        for h in node.handlers:
            if h.type is not None:
                if isinstance(h.type, ast.Name):
                    pass
                elif isinstance(h.type, ast.Tuple) and all(
                    isinstance(e, ast.Name) for e in h.type.elts
                ):
                    pass
                else:
                    self.reject(h, "except type must be a name or tuple of names")
            for s in h.body:
                self.stmt(s)
        for s in node.orelse:
            self.stmt(s)
        for s in node.finalbody:
            self.stmt(s)

    def stmt_With(self, node):
        if len(node.items) != 1:
            self.reject(node, "with supports a single context item")
        item = node.items[0]
        self.expr(item.context_expr)
        if item.optional_vars is not None and not isinstance(item.optional_vars, ast.Name):
            self.reject(node, "with target must be a plain name")

        for s in node.body:
            self.stmt(s)

    def target(self, node, allow_tuple: bool):
        if isinstance(node, ast.Name):
            return
        if isinstance(node, ast.Attribute):
            self.expr(node.value)
            return
        if isinstance(node, ast.Subscript):
            self.expr(node.value)
            self.subscript_index(node)
            return
        if allow_tuple and isinstance(node, ast.Tuple):
            for e in node.elts:
                self.target(e, allow_tuple=False)
            return
        self.reject(node, f"unsupported assignment target: {type(node).__name__}")

    def call_args(self, node: ast.Call):
        for a in node.args:
            if isinstance(a, ast.Starred):
                self.reject(a, "star arguments are not supported")
            self.expr(a)
        for kw in node.keywords:
            if kw.arg is None:
                self.reject(node, "keyword-splat arguments are not supported")
            self.expr(kw.value)

    def subscript_index(self, node: ast.Subscript):
        s = node.slice
        if isinstance(s, ast.Slice):
            if s.step is not None:
                self.reject(node, "slice steps are not supported")
            if s.lower is not None:
                self.expr(s.lower)
            if s.upper is not None:
                self.expr(s.upper)
            return
        self.expr(s)

    def expr(self, node: ast.expr):
        handler = getattr(self, f"expr_{type(node).__name__}", None)
        if handler is None:
            self.reject(node, f"unsupported expression: {type(node).__name__}")
        handler(node)

    def expr_BoolOp(self, node):
        for v in node.values:
            self.expr(v)

    def expr_BinOp(self, node):
        if not isinstance(node.op, _ALLOWED_BINOPS):
            self.reject(node, f"unsupported operator: {type(node.op).__name__}")
        self.expr(node.left)
        self.expr(node.right)

    def expr_UnaryOp(self, node):
        if not isinstance(node.op, _ALLOWED_UNARYOPS):
            self.reject(node, f"unsupported unary operator: {type(node.op).__name__}")
        self.expr(node.operand)

    def expr_Lambda(self, node):
        a = node.args
        if a.posonlyargs or a.kwonlyargs or a.vararg or a.kwarg or a.defaults or a.kw_defaults:
            self.reject(node, "lambda supports only plain positional parameters")
        self.expr(node.body)

    def expr_IfExp(self, node):
        self.expr(node.test)
        self.expr(node.body)
        self.expr(node.orelse)

    def expr_Dict(self, node):
        for k, v in zip(node.keys, node.values):
            if k is None:
                self.reject(node, "dict unpacking is not supported")
            self.expr(k)
            self.expr(v)

    def expr_Set(self, node):
        for e in node.elts:
            self.expr(e)

    def expr_ListComp(self, node):
        self.comprehension(node)

    def expr_GeneratorExp(self, node):
        self.comprehension(node)

    def comprehension(self, node):
        for gen in node.generators:
            if gen.is_async:
                self.reject(node, "asynchronous comprehensions are not supported")
            self.target(gen.target, allow_tuple=True)
            self.expr(gen.iter)
            for cond in gen.ifs:
                self.expr(cond)
        self.expr(node.elt)

    def expr_Compare(self, node):
        for op in node.ops:
            if not isinstance(op, _ALLOWED_CMPOPS):
                self.reject(node, f"unsupported comparison: {type(op).__name__}")
        self.expr(node.left)
        for c in node.comparators:
            self.expr(c)

    def expr_Call(self, node):
        self.expr(node.func)
        self.call_args(node)

    def expr_Constant(self, node):
        v = node.value
        if v is None or type(v) in (bool, int, float, str):
            return
        self.reject(node, f"unsupported literal: {type(v).__name__}")

    def expr_JoinedStr(self, node):
        for part in node.values:
            if isinstance(part, ast.Constant):
                if not isinstance(part.value, str):
                    self.reject(part, "unsupported f-string fragment")
            elif isinstance(part, ast.FormattedValue):
                if part.conversion not in (-1, 114, 115):
                    self.reject(part, "only {expr}, {expr!r} and {expr!s} are supported")
                if part.format_spec is not None:
                    self.reject(part, "format specifiers are not supported")
                self.expr(part.value)
            else:
                self.reject(part, "unsupported f-string fragment")

    def expr_Attribute(self, node):
        self.expr(node.value)

    def expr_Subscript(self, node):
        self.expr(node.value)
        self.subscript_index(node)

    def expr_Name(self, node):
        pass

    def expr_List(self, node):
        for e in node.elts:
            self.expr(e)

    def expr_Tuple(self, node):
        for e in node.elts:
            self.expr(e)


def _is_generator(node: ast.FunctionDef) -> bool:
    """Whether the function's own body (not nested functions) yields."""
    todo = list(node.body)
    while todo:
        n = todo.pop()
        if isinstance(n, (ast.FunctionDef, ast.Lambda)):
            continue
        if isinstance(n, ast.Yield):
            return True
        todo.extend(ast.iter_child_nodes(n))
    return False


def function_is_generator(node: ast.FunctionDef) -> bool:
    return _is_generator(node)


def code_line_numbers(source: str) -> frozenset[int]:
    """1-based numbers of lines that are neither blank nor comment-only."""
    out = set()
    for i, line in enumerate(source.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            out.add(i)
    return frozenset(out)


def parse_function(source: str) -> SourceFunction:
    """Parse a single function definition written in the subject language.

    Raises SyntaxError (with line and column) for malformed input and for any
    construct outside the supported grammar.
    """
    try:
        tree = ast.parse(source)
    except SyntaxError:
        raise
    functions = [n for n in tree.body if isinstance(n, ast.FunctionDef)]
    if isinstance(tree.body[0] if tree.body else None, ast.AsyncFunctionDef):
        _reject(tree.body[0], "asynchronous functions are not supported", source)
    if len(tree.body) != 1 or len(functions) != 1:
        node = tree.body[0] if tree.body else ast.Pass(lineno=1, col_offset=0)
        _reject(node, "expected exactly one function definition", source)
    node = functions[0]
    _SubsetValidator(source).validate_function(node)
    return SourceFunction(
        name=node.name,
        params=[a.arg for a in node.args.args],
        body=node.body,
        source_text=source,
        line_count=len(source.splitlines()) or 1,
        node=node,
        is_generator=_is_generator(node),
        code_lines=code_line_numbers(source),
    )


def pretty_print(fn: SourceFunction) -> str:
    return ast.unparse(fn.node)


def diff_changed_lines(old_text: str, new_text: str) -> tuple[set[int], set[int]]:
    """Line numbers outside the longest-common-subsequence alignment.

    Lines are compared with surrounding whitespace stripped, so a pure
    re-indentation does not count as a change.
    """
    old_lines = [line.strip() for line in old_text.splitlines()]
    new_lines = [line.strip() for line in new_text.splitlines()]
    matcher = difflib.SequenceMatcher(a=old_lines, b=new_lines, autojunk=False)
    changed_old: set[int] = set()
    changed_new: set[int] = set()
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        changed_old.update(range(i1 + 1, i2 + 1))
        changed_new.update(range(j1 + 1, j2 + 1))
    return changed_old, changed_new


def make_pair(
    old_source: str,
    new_source: str,
    renames: Optional[dict[str, str]] = None,
    entry: Optional[str] = None,
) -> FunctionPair:
    """Parse both versions and assemble the pair with its changed-line sets.

    Changed-line sets keep only lines that execution can actually reach,
    i.e. comment-only and blank lines are dropped.
    """
    renames = dict(renames) if renames else {}
    values = list(renames.values())
    if len(set(values)) != len(values):
        raise ValueError("rename map values must be distinct")
    for k, v in renames.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise ValueError("rename map entries must be identifiers")
    old = parse_function(old_source)
    new = parse_function(new_source)
    if entry is not None:
        for side, fn in (("old", old), ("new", new)):
            if fn.name != entry:
                raise ValueError(
                    f"entry {entry!r} does not match the {side} function {fn.name!r}"
                )
    raw_old, raw_new = diff_changed_lines(old_source, new_source)
    return FunctionPair(
        old=old,
        new=new,
        renames=renames,
        changed_lines_old=frozenset(raw_old & old.code_lines),
        changed_lines_new=frozenset(raw_new & new.code_lines),
    )


class Renamer:
    """Maps side-local identifiers to merged names.

    A name covered by the rename map becomes ``old_renamed_new`` on both
    sides; everything else passes through unchanged.
    """

    def __init__(self, renames: dict[str, str], side: str):
        if side == "old":
            self.table = {o: f"{o}_renamed_{n}" for o, n in renames.items()}
        elif side == "new":
            self.table = {n: f"{o}_renamed_{n}" for o, n in renames.items()}
        else:
            raise ValueError(f"unknown side: {side!r}")

    def merge(self, name: str) -> str:
        return self.table.get(name, name)


def static_callee_path(node: ast.expr, renamer: Renamer) -> Optional[str]:
    """Merged dotted path of a callee expression, if it has a static shape."""
    if isinstance(node, ast.Name):
        return renamer.merge(node.id)
    if isinstance(node, ast.Attribute):
        base = static_callee_path(node.value, renamer)
        if base is None:
            return None
        return f"{base}.{renamer.merge(node.attr)}"
    if isinstance(node, ast.Call):
        base = static_callee_path(node.func, renamer)
        if base is None:
            return None
        return f"{base}()"
    return None


def _render_class_name(node: ast.expr, renamer: Renamer) -> Optional[str]:
    if isinstance(node, ast.Name):
        return renamer.merge(node.id)
    if isinstance(node, ast.Attribute):
        base = _render_class_name(node.value, renamer)
        if base is None:
            return None
        return f"{base}.{renamer.merge(node.attr)}"
    return None


def isinstance_class_names(node: ast.expr, renamer: Renamer) -> list[str]:
    """Class names named by the second argument of an isinstance call."""
    if isinstance(node, ast.Tuple):
        out = []
        for e in node.elts:
            r = _render_class_name(e, renamer)
            if r is not None:
                out.append(r)
        return out
    r = _render_class_name(node, renamer)
    return [r] if r is not None else []


def _collect_literals(node: ast.AST, facts: StaticFacts) -> None:
    for child in ast.iter_child_nodes(node):
        if isinstance(child, ast.JoinedStr):
            # Constant fragments of an f-string are formatting scaffolding,
            # not values the code compares against; skip them but keep
            # looking inside the interpolated expressions.
            for part in child.values:
                if isinstance(part, ast.FormattedValue):
                    _collect_literals(part, facts)
            continue
        if isinstance(child, ast.Constant):
            v = child.value
            if type(v) is int:
                facts.literals_int.append(v)
            elif type(v) is float:
                facts.literals_float.append(v)
            elif type(v) is str:
                facts.literals_str.append(v)
            continue
        if (
            isinstance(child, ast.UnaryOp)
            and isinstance(child.op, ast.USub)
            and isinstance(child.operand, ast.Constant)
            and type(child.operand.value) in (int, float)
        ):
            v = -child.operand.value
            if type(v) is int:
                facts.literals_int.append(v)
            else:
                facts.literals_float.append(v)
            continue
        _collect_literals(child, facts)


def _collect_side(fn: SourceFunction, renamer: Renamer, facts: StaticFacts) -> None:
    _collect_literals(fn.node, facts)
    exception_sets: dict[str, set[str]] = {}
    for node in ast.walk(fn.node):
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.func.id == "isinstance" and len(node.args) == 2:
                facts.isinstance_classes.update(
                    isinstance_class_names(node.args[1], renamer)
                )
        if isinstance(node, ast.Try):
            caught: set[str] = set()
            for h in node.handlers:
                if isinstance(h.type, ast.Name):
                    caught.add(renamer.merge(h.type.id))
                elif isinstance(h.type, ast.Tuple):
                    for e in h.type.elts:
                        if isinstance(e, ast.Name):
                            caught.add(renamer.merge(e.id))
            if not caught:
                continue
            for stmt in node.body:
                for sub in ast.walk(stmt):
                    if isinstance(sub, ast.Call):
                        path = static_callee_path(sub.func, renamer)
                        if path is not None:
                            exception_sets.setdefault(path, set()).update(caught)
    for path, names in exception_sets.items():
        existing = set(facts.call_exception_map.get(path, frozenset()))
        facts.call_exception_map[path] = frozenset(existing | names)


def extract_static_facts(pair: FunctionPair) -> StaticFacts:
    """Union of literals, isinstance classes, and caught-exception info
    over both versions, with identifiers already rename-merged."""
    facts = StaticFacts()
    _collect_side(pair.old, Renamer(pair.renames, "old"), facts)
    _collect_side(pair.new, Renamer(pair.renames, "new"), facts)
    return facts
