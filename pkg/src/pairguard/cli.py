"""Batch command line front end.

Reads function-pair files (JSON with id/old/new and optional renames and
entry fields), analyzes each pair, and emits verdicts as text or JSON
lines. A directory input is expanded to its *.json files in name order;
output order always follows input order.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import re
import sys
from pathlib import Path
from typing import Optional

from .driver import ConfigError, EngineConfig, analyze_sources
from .predictor import FormatError, HeuristicPredictor, Predictor, load_table_predictor


class PairFileError(ValueError):
    pass


def _load_pair(path: Path) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PairFileError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PairFileError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise PairFileError(f"{path}: top level must be an object")
    for key in ("id", "old", "new"):
        if key not in data:
            raise PairFileError(f"{path}: missing field {key!r}")
        if not isinstance(data[key], str):
            raise PairFileError(f"{path}: field {key!r} must be a string")
    renames = data.get("renames")
    if renames is not None:
        if not isinstance(renames, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in renames.items()
        ):
            raise PairFileError(f"{path}: 'renames' must map strings to strings")
        for k, v in renames.items():
            if not re.search(rf"\b{re.escape(k)}\b", data["old"]):
                raise PairFileError(f"{path}: rename key {k!r} does not occur in old")
            if not re.search(rf"\b{re.escape(v)}\b", data["new"]):
                raise PairFileError(f"{path}: rename value {v!r} does not occur in new")
    entry = data.get("entry")
    if entry is not None and not isinstance(entry, str):
        raise PairFileError(f"{path}: 'entry' must be a string")
    return {
        "id": data["id"],
        "old": data["old"],
        "new": data["new"],
        "renames": renames,
        "entry": entry,
    }


def _pair_paths(target: Path) -> list[Path]:
    if target.is_dir():
        paths = sorted(p for p in target.iterdir() if p.suffix == ".json")
        if not paths:
            raise PairFileError(f"{target}: no .json pair files found")
        return paths
    if target.is_file():
        return [target]
    raise PairFileError(f"{target}: no such file or directory")


def _build_predictor(spec: str) -> Predictor:
    if spec == "heuristic":
        return HeuristicPredictor()
    if spec.startswith("table:"):
        return load_table_predictor(spec[len("table:") :])
    raise PairFileError(
        f"invalid --predictor {spec!r}; expected 'heuristic' or 'table:<path>'"
    )


def _analyze_pair(pair: dict, cfg: EngineConfig, predictor_spec: str) -> dict:
    """Analyze one loaded pair and return a JSON-ready result object."""
    predictor = _build_predictor(predictor_spec)
    verdict = analyze_sources(
        pair["old"],
        pair["new"],
        renames=pair["renames"],
        entry=pair["entry"],
        cfg=cfg,
        predictor=predictor,
    )
    result = {
        "id": pair["id"],
        "verdict": verdict.classification,
        "iterations": verdict.iterations_run,
        "coverage": {
            "changed_old": round(verdict.coverage.changed_old, 6),
            "changed_new": round(verdict.coverage.changed_new, 6),
            "overall": round(verdict.coverage.overall, 6),
            "per_side": [
                round(verdict.coverage.per_side[0], 6),
                round(verdict.coverage.per_side[1], 6),
            ],
        },
        "wall_time_ms": round(verdict.runtime_ms, 3),
    }
    if verdict.difference is not None:
        result["difference"] = {
            "dimension": verdict.difference_dimension,
            "detail": verdict.difference,
        }
    return result


def _worker(job: tuple[dict, EngineConfig, str]) -> dict:
    pair, cfg, predictor_spec = job
    try:
        return _analyze_pair(pair, cfg, predictor_spec)
    except (SyntaxError, ValueError) as exc:
        return {"id": pair["id"], "_error": str(exc)}


def _format_text(result: dict) -> str:
    cov = result["coverage"]
    lines = [
        f"{result['id']}: {result['verdict']} after {result['iterations']} iteration"
        f"{'s' if result['iterations'] != 1 else ''}",
        (
            f"  coverage: overall {cov['overall']:.2f}"
            f" (old {cov['per_side'][0]:.2f}, new {cov['per_side'][1]:.2f};"
            f" changed old {cov['changed_old']:.2f}, new {cov['changed_new']:.2f})"
        ),
    ]
    if "difference" in result:
        for line in result["difference"]["detail"].splitlines():
            lines.append(f"  {line}")
    return "\n".join(lines)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pairguard",
        description="Classify the behavioral impact of a change between two function versions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("analyze", help="analyze one pair file or a directory of them")
    run.add_argument("path", help="pair file (JSON) or directory of pair files")
    run.add_argument("--max-iterations", type=int, default=300)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--exception-probability", type=float, default=0.15)
    run.add_argument("--max-structure-size", type=int, default=4)
    run.add_argument("--object-bias", type=float, default=0.5)
    run.add_argument(
        "--predictor",
        default="heuristic",
        help="'heuristic' or 'table:<path>' for a JSON lookup table",
    )
    run.add_argument("--format", choices=("text", "json"), default="text")
    run.add_argument("--out", default=None, help="write results to this file")
    run.add_argument("--jobs", type=int, default=1, help="pairs analyzed in parallel")
    args = parser.parse_args(argv)

    cfg = EngineConfig(
        max_iterations=args.max_iterations,
        seed=args.seed,
        exception_probability=args.exception_probability,
        max_structure_size=args.max_structure_size,
        object_bias=args.object_bias,
    )
    try:
        cfg.validate()
        _build_predictor(args.predictor)  # fail fast on a bad spec or table
        paths = _pair_paths(Path(args.path))
    except (ConfigError, FormatError, PairFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    failed = False
    pairs: list[Optional[dict]] = []
    for path in paths:
        try:
            pairs.append(_load_pair(path))
        except PairFileError as exc:
            print(f"error: {exc}", file=sys.stderr)
            pairs.append(None)
            failed = True

    jobs = [(p, cfg, args.predictor) for p in pairs if p is not None]
    if args.jobs > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            finished = list(pool.map(_worker, jobs))
    else:
        finished = [_worker(job) for job in jobs]

    out_lines = []
    by_order = iter(finished)
    for pair in pairs:
        if pair is None:
            continue
        result = next(by_order)
        if "_error" in result:
            print(f"error: {result['id']}: {result['_error']}", file=sys.stderr)
            failed = True
            continue
        if args.format == "json":
            out_lines.append(json.dumps(result, sort_keys=True))
        else:
            out_lines.append(_format_text(result))

    text = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
