"""Outcome comparison along the four behavioral dimensions.

One iteration produces two ExecutionOutcomes; this module decides whether
they differ, and if so where. Evaluation order is fixed so difference
reports are reproducible: exception triage first, then returned state,
injected state, printed output, and finally the external call logs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .engine import CallLogEntry, ExceptionInfo, ExecutionOutcome

EQUIVALENT = "equivalent"
DIFFERENCE = "difference"
ABSTAIN = "abstain"

DIMENSIONS = ("exception", "state", "output", "calls")


@dataclass(frozen=True)
class IterationResult:
    """Outcome of comparing one iteration's two executions."""

    status: str
    dimension: Optional[str] = None
    detail: Optional[str] = None
    abstain_reason: Optional[str] = None

    def __post_init__(self):
        has_diff = self.dimension is not None or self.detail is not None
        if has_diff != (self.status == DIFFERENCE):
            raise ValueError("difference fields present iff status is difference")


def _difference(
    dimension: str, old: str, new: str, extra: Optional[tuple[str, str]] = None
) -> IterationResult:
    lines = [f"dimension: {dimension}"]
    if extra is not None:
        lines.append(f"{extra[0]}: {extra[1]}")
    lines.append(f"old: {old}")
    lines.append(f"new: {new}")
    return IterationResult(
        status=DIFFERENCE, dimension=dimension, detail="\n".join(lines)
    )


def _render_exception(info: Optional[ExceptionInfo]) -> str:
    return info.render() if info is not None else "<no exception>"


def _call_key(entry: CallLogEntry):
    return (entry.callee, entry.args, entry.kwargs)


def compare(old: ExecutionOutcome, new: ExecutionOutcome) -> IterationResult:
    """Compare the two sides of one iteration.

    Returns abstain when either side died of an unintended exception (the
    engine's fault rather than the code's), a difference naming the first
    dimension that disagrees, or equivalent.
    """
    reasons = []
    for outcome in (old, new):
        exc = outcome.exception
        if exc is not None and not exc.intentional:
            reasons.append(f"{outcome.side}: {exc.render()}")
    if reasons:
        return IterationResult(
            status=ABSTAIN,
            abstain_reason="unintended exception; " + "; ".join(reasons),
        )

    oe, ne = old.exception, new.exception
    if (oe is None) != (ne is None):
        return _difference(
            "exception", _render_exception(oe), _render_exception(ne)
        )
    if oe is not None and ne is not None:
        if (oe.type_name, oe.args) != (ne.type_name, ne.args):
            return _difference("exception", oe.render(), ne.render())

    if old.return_value != new.return_value:
        return _difference(
            "state", str(old.return_value), str(new.return_value)
        )

    for path, ov in old.injected_state.items():
        nv = new.injected_state.get(path)
        if ov != nv:
            return _difference(
                "state", ov, "<absent>" if nv is None else nv, extra=("path", path)
            )
    for path, nv in new.injected_state.items():
        if path not in old.injected_state:
            return _difference("state", "<absent>", nv, extra=("path", path))

    if old.stdout != new.stdout:
        return _difference(
            "output", repr(old.stdout), repr(new.stdout), extra=("stream", "stdout")
        )
    if old.stderr != new.stderr:
        return _difference(
            "output", repr(old.stderr), repr(new.stderr), extra=("stream", "stderr")
        )

    for i in range(max(len(old.call_log), len(new.call_log))):
        o = old.call_log[i] if i < len(old.call_log) else None
        n = new.call_log[i] if i < len(new.call_log) else None
        if o is None or n is None:
            return _difference(
                "calls",
                o.render() if o is not None else "<no call>",
                n.render() if n is not None else "<no call>",
            )
        if _call_key(o) != _call_key(n):
            return _difference("calls", o.render(), n.render())

    return IterationResult(status=EQUIVALENT)
