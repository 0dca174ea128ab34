"""Command line entry point.

Subcommands mirror the pipeline stages: `decisions` prints the
condition/decision table for a class, `scaffold` writes the fixture, test
class, and mock headers, `cases` fuzzes and selects robustness cases for
one method, `coverage` replays a case file and reports condition/decision
coverage, `advise` turns bug/commit/coverage history into per-component
coverage recommendations, and `run` chains everything over a source tree
and writes a reproducible manifest.

Every subcommand takes `--json` for machine-readable output on stdout.
Artifacts only ever go under `-o` paths. Exit codes: 0 success, 1 error
(also: coverage below threshold for `coverage`), 2 highlighted gaps for
`advise` and `run`.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .advisor import (
    COVERAGE_GRID,
    DEFAULT_TAU,
    build_trends,
    gap_report,
    ingest,
    recommend_all,
    render_gap_table,
    train_model,
)
from .cases import (
    CaseConfig,
    DEFAULT_BUDGET,
    DEFAULT_SEED,
    TestCase,
    case_from_json,
    case_to_json,
    expand_configured_cases,
    fuzz_candidates,
    greedy_select,
    load_case_config,
)
from .coverage import MethodCoverage, aggregate_report, all_pairs, compute_coverage
from .cutlang.nodes import SourceUnit
from .cutlang.parser import parse_source
from .decisions import decisions_table, extract_decisions
from .errors import UltgenError, UnknownClass, UnknownTarget
from .interp import CaseEvaluator
from .scaffold import (
    ScaffoldBundle,
    generate_scaffold,
    measure_generation_ratio,
    merge_bundle,
    public_methods,
)

DEFAULT_THRESHOLD = 70.0
SOURCE_SUFFIXES = (".cut", ".h")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UltgenError(f"cannot read {path}: {e.strerror}") from None


def _parse_file(path: str) -> SourceUnit:
    return parse_source(_read_text(path), path=path)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _print_json(obj: object) -> None:
    print(json.dumps(obj, indent=2))


def _resolve_seed(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("ULTGEN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UltgenError(f"ULTGEN_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _parse_grid(text: str) -> tuple[int, ...]:
    try:
        grid = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UltgenError(f"--grid must be comma-separated integers, got {text!r}") from None
    if not grid or list(grid) != sorted(grid):
        raise UltgenError("--grid must be ascending and nonempty")
    return grid


# --- decisions --------------------------------------------------------------

def cmd_decisions(args: argparse.Namespace) -> int:
    unit = _parse_file(args.file)
    cls = unit.class_named(args.class_name)
    if cls is None:
        raise UnknownClass(f"class {args.class_name!r} not found in {args.file}")
    if args.method is not None:
        if cls.method_named(args.method) is None:
            raise UnknownTarget(f"{args.class_name}.{args.method}")
        methods = [cls.method_named(args.method)]
    else:
        methods = list(cls.methods)
    payload = {
        "class": cls.name,
        "methods": [
            {
                "method": m.name,
                "decisions": decisions_table(extract_decisions(m, cls.name)),
            }
            for m in methods
        ],
    }
    if args.json:
        _print_json(payload)
        return 0
    for entry in payload["methods"]:
        print(f"{cls.name}.{entry['method']}:")
        if not entry["decisions"]:
            print("  (no decisions)")
        for row in entry["decisions"]:
            print(f"  {row['id']} [{row['kind']}] {row['expr']}")
            for cond in row["conditions"]:
                extras = []
                if cond["params"]:
                    extras.append("params=" + ",".join(cond["params"]))
                if cond["calls"]:
                    extras.append("calls=" + ",".join(cond["calls"]))
                suffix = ("  " + " ".join(extras)) if extras else ""
                print(f"    {cond['id']} [{cond['driver']}] {cond['atom']}{suffix}")
    return 0


# --- scaffold ---------------------------------------------------------------

def _write_bundle(bundle: ScaffoldBundle, out_dir: Path) -> list[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in bundle.files:
        (out_dir / name).write_text(text, encoding="utf-8")
        written.append(name)
    return written


def cmd_scaffold(args: argparse.Namespace) -> int:
    unit = _parse_file(args.src)
    bundle = generate_scaffold(unit, args.class_name)
    out_dir = Path(args.out)
    if args.merge:
        previous = {}
        for name, _ in bundle.files:
            path = out_dir / name
            if path.exists():
                previous[name] = path.read_text(encoding="utf-8")
        bundle = merge_bundle(bundle, previous)
    written = _write_bundle(bundle, out_dir)
    payload = {
        "class": bundle.class_name,
        "files": written,
        "auto_line_count": bundle.auto_line_count,
        "anchor_line_count": bundle.anchor_line_count,
        "generation_ratio": measure_generation_ratio(bundle),
        "warnings": list(bundle.warnings),
    }
    for warning in bundle.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.json:
        _print_json(payload)
    else:
        for name in written:
            print(f"wrote {out_dir / name}")
        print(
            f"generated {payload['auto_line_count']} lines, "
            f"{payload['anchor_line_count']} anchored for edits "
            f"(ratio {payload['generation_ratio']:.4f})"
        )
    return 0


# --- cases ------------------------------------------------------------------

def _configured_for_target(
    config: Optional[CaseConfig], unit: SourceUnit, class_name: str, method_name: str
) -> list[TestCase]:
    if config is None:
        return []
    return [
        c for c in expand_configured_cases(config, unit)
        if c.target == (class_name, method_name)
    ]


def _select_cases(
    unit: SourceUnit,
    class_name: str,
    method_name: str,
    config: Optional[CaseConfig],
    budget: int,
    seed: int,
):
    """Shared by `cases` and `run`: configured preseed, fuzz, greedy keep."""
    evaluator = CaseEvaluator(unit, class_name, method_name)
    configured = _configured_for_target(config, unit, class_name, method_name)
    preseed = tuple(evaluator.run(case) for case in configured)
    overrides = {}
    if config is not None:
        overrides = {
            param: pool
            for (c, m, param), pool in config.pool_overrides.items()
            if (c, m) == (class_name, method_name)
        }
    candidates = fuzz_candidates(
        class_name, evaluator.method, evaluator.decisions,
        budget=budget, seed=seed, pool_overrides=overrides,
    )
    result = greedy_select(candidates, evaluator, preseed=preseed)
    return evaluator, configured, result


def cmd_cases(args: argparse.Namespace) -> int:
    unit = _parse_file(args.src)
    seed = _resolve_seed(args.seed)
    config = None
    if args.config is not None:
        config = load_case_config(_read_text(args.config), unit)
    _, configured, result = _select_cases(
        unit, args.class_name, args.method, config, args.budget, seed
    )
    out_path = Path(args.out)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for case in list(configured) + list(result.kept):
            fh.write(json.dumps(case_to_json(case)) + "\n")
    target = f"{args.class_name}.{args.method}"
    payload = {
        "target": target,
        "budget": args.budget,
        "seed": seed,
        "configured": len(configured),
        "kept": len(result.kept),
        "candidates_run": result.candidates_run,
        "invalid": len(result.invalid),
        "conditional_pct": result.coverage.percent,
        "case_file": str(out_path),
    }
    if args.json:
        _print_json(payload)
    else:
        print(
            f"{target}: kept {payload['kept']} of {payload['candidates_run']} "
            f"fuzzed candidates (+{payload['configured']} configured); "
            f"conditional coverage {payload['conditional_pct']:.1f}%"
        )
        print(f"wrote {out_path}")
    return 0


# --- coverage ---------------------------------------------------------------

def _load_case_file(path: str) -> list[TestCase]:
    cases = []
    for n, raw in enumerate(_read_text(path).splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            data = json.loads(raw)
            cases.append(case_from_json(data))
        except (ValueError, KeyError, TypeError) as e:
            raise UltgenError(f"{path}:{n}: bad case record: {e}") from None
    return cases


def _method_row(mc: MethodCoverage, uncovered: list[str]) -> dict:
    return {
        "method": mc.method,
        "conditions": mc.conditions_total,
        "decisions": mc.decisions_total,
        "pairs_covered": len(mc.pairs_covered),
        "pairs_total": mc.denominator,
        "conditional_pct": mc.percent,
        "has_passing_case": mc.has_passing_case,
        "uncovered": uncovered,
    }


def _pair_label(pair: tuple[str, bool]) -> str:
    entity, outcome = pair
    return f"{entity}:{'T' if outcome else 'F'}"


def cmd_coverage(args: argparse.Namespace) -> int:
    unit = _parse_file(args.src)
    cases = _load_case_file(args.cases)
    by_target: dict[tuple[str, str], list[TestCase]] = {}
    for case in cases:
        by_target.setdefault(case.target, []).append(case)

    targets: list[tuple[str, str]] = []
    for cls in unit.classes:
        for m in public_methods(cls):
            targets.append((cls.name, m.name))
    for target in by_target:
        if target not in targets:
            # private or inherited methods still report when cases name them
            CaseEvaluator(unit, *target)  # raises for unknown targets
            targets.append(target)

    rows = []
    methods: list[MethodCoverage] = []
    for class_name, method_name in targets:
        evaluator = CaseEvaluator(unit, class_name, method_name)
        traces = [evaluator.run(c) for c in by_target.get((class_name, method_name), [])]
        mc = compute_coverage(
            traces, evaluator.decisions,
            f"{class_name}.{method_name}", evaluator.fingerprint,
        )
        uncovered = sorted(
            _pair_label(p) for p in all_pairs(evaluator.decisions) - mc.pairs_covered
        )
        methods.append(mc)
        rows.append(_method_row(mc, uncovered))

    report = aggregate_report(methods)
    payload = {
        "methods": rows,
        "functional_pct": report.functional_pct,
        "conditional_pct": report.conditional_pct,
        "threshold": args.threshold,
    }
    if args.json:
        _print_json(payload)
    else:
        width = max((len(r["method"]) for r in rows), default=6)
        for r in rows:
            flag = "pass" if r["has_passing_case"] else "none"
            print(
                f"{r['method']:<{width}}  {r['pairs_covered']:>3}/{r['pairs_total']:<3}"
                f"  {r['conditional_pct']:6.1f}%  passing: {flag}"
            )
        print(
            f"functional {report.functional_pct:.1f}%  "
            f"conditional {report.conditional_pct:.1f}%  "
            f"(threshold {args.threshold:.0f}%)"
        )
    return 1 if report.conditional_pct < args.threshold else 0


# --- advise -----------------------------------------------------------------

def _advise_payload(
    bugs_path: str,
    commits_path: str,
    coverage_path: str,
    map_path: str,
    tau: float,
    grid: Sequence[int],
) -> dict:
    bugs, commits, snapshots, cmap, warnings = ingest(
        bugs_path, commits_path, coverage_path, map_path
    )
    trends, trend_warnings = build_trends(bugs, commits, snapshots, cmap)
    model = train_model(trends)
    recs = recommend_all(model, trends, tau=tau, grid=grid)
    report = gap_report(recs)
    return {
        "components": [
            {
                "component": r.component,
                "current_conditional_pct": r.current_conditional_pct,
                "recommended_conditional_pct": r.recommended_conditional_pct,
                "highlight": r.highlight,
                "risk_at_current": r.risk_at_current,
                "risk_at_recommended": r.risk_at_recommended,
                "fallback_used": r.fallback_used,
            }
            for r in recs
        ],
        "gaps": report["gaps"],
        "gap_count": report["gap_count"],
        "model": {
            "weights": list(model.weights),
            "bias": model.bias,
            "churn_max": model.churn_max,
            "n_samples": model.n_samples,
            "final_loss": model.loss_history[-1],
        },
        "warnings": warnings + trend_warnings,
    }


def _advise_once(args: argparse.Namespace, grid: Sequence[int]) -> int:
    payload = _advise_payload(
        args.bugs, args.commits, args.coverage, args.map, args.tau, grid
    )
    if args.json:
        _print_json(payload)
    else:
        for warning in payload["warnings"]:
            print(f"warning: {warning}", file=sys.stderr)
        for row in payload["components"]:
            mark = " <-- raise" if row["highlight"] else ""
            print(
                f"{row['component']}: current {row['current_conditional_pct']:.1f}% "
                f"-> recommended {row['recommended_conditional_pct']}%"
                f" (risk {row['risk_at_current']:.3f} -> {row['risk_at_recommended']:.3f})"
                f"{mark}"
            )
        print()
        print(render_gap_table({"gaps": payload["gaps"]}), end="")
    return 2 if payload["gap_count"] > 0 else 0


def _dir_snapshot(path: Path) -> dict[str, tuple[float, int]]:
    snap = {}
    for p in sorted(path.rglob("*")):
        if p.is_file():
            st = p.stat()
            snap[str(p)] = (st.st_mtime, st.st_size)
    return snap


def cmd_advise(args: argparse.Namespace) -> int:
    grid = _parse_grid(args.grid)
    code = _advise_once(args, grid)
    if args.watch is None:
        return code
    watch_dir = Path(args.watch)
    if not watch_dir.is_dir():
        raise UltgenError(f"--watch {args.watch}: not a directory")
    remaining = args.watch_count
    snapshot = _dir_snapshot(watch_dir)
    while remaining is None or remaining > 0:
        time.sleep(args.watch_interval)
        current = _dir_snapshot(watch_dir)
        if current == snapshot:
            continue
        snapshot = current
        code = _advise_once(args, grid)
        if remaining is not None:
            remaining -= 1
    return code


# --- run --------------------------------------------------------------------

class _StageError(UltgenError):
    pass


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, UltgenError) and not isinstance(exc, _StageError):
                raise _StageError(f"stage {name!r}: {exc}") from None
            return False

    return _Ctx()


def _collect_sources(src_dir: Path) -> list[Path]:
    return sorted(
        p for p in src_dir.rglob("*")
        if p.is_file() and p.suffix in SOURCE_SUFFIXES
    )


def cmd_run(args: argparse.Namespace) -> int:
    src_dir = Path(args.src)
    if not src_dir.is_dir():
        raise UltgenError(f"{args.src}: not a directory")
    seed = _resolve_seed(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    advisor_flags = [args.bugs, args.commits, args.coverage_history, args.map]
    if any(advisor_flags) and not all(advisor_flags):
        raise UltgenError(
            "advise stage needs --bugs, --commits, --coverage-history, "
            "and --map together"
        )

    sources = _collect_sources(src_dir)
    inputs: dict[str, str] = {}
    texts = []
    for path in sources:
        text = path.read_text(encoding="utf-8")
        inputs[path.relative_to(src_dir).as_posix()] = _sha256(text)
        texts.append(text)
    with _stage("parse"):
        unit = parse_source("\n".join(texts), path=str(src_dir))
        if not unit.classes:
            raise UltgenError(f"no classes found in {args.src}")
    for flag in [args.config, *advisor_flags]:
        if flag:
            inputs[Path(flag).name] = _sha256(_read_text(flag))

    stages: dict[str, dict] = {}
    gap_count = 0
    if all(advisor_flags):
        with _stage("advise"):
            advise = _advise_payload(
                args.bugs, args.commits, args.coverage_history, args.map,
                args.tau, _parse_grid(args.grid),
            )
            (out_dir / "advise.json").write_text(
                json.dumps(advise, indent=2) + "\n", encoding="utf-8"
            )
            gap_count = advise["gap_count"]
            stages["advise"] = {
                "gap_count": gap_count,
                "highlighted": [row["component"] for row in advise["gaps"]],
                "report": "advise.json",
            }

    with _stage("scaffold"):
        classes = sorted(c.name for c in unit.classes)
        scaffold_dir = out_dir / "scaffold"
        file_texts: dict[str, str] = {}
        auto_total = 0
        anchor_total = 0
        for name in classes:
            bundle = generate_scaffold(unit, name)
            for warning in bundle.warnings:
                print(f"warning: {warning}", file=sys.stderr)
            auto_total += bundle.auto_line_count
            anchor_total += bundle.anchor_line_count
            for fname, text in bundle.files:
                if file_texts.get(fname, text) != text:
                    raise UltgenError(f"conflicting content for {fname}")
                file_texts[fname] = text
        scaffold_dir.mkdir(parents=True, exist_ok=True)
        for fname in sorted(file_texts):
            (scaffold_dir / fname).write_text(file_texts[fname], encoding="utf-8")
        stages["scaffold"] = {
            "classes": classes,
            "files": [f"scaffold/{name}" for name in sorted(file_texts)],
            "auto_line_count": auto_total,
            "anchor_line_count": anchor_total,
            "generation_ratio": (
                auto_total / (auto_total + anchor_total)
                if auto_total + anchor_total else 1.0
            ),
        }

    with _stage("cases"):
        config = None
        if args.config:
            config = load_case_config(_read_text(args.config), unit)
        all_cases: list[TestCase] = []
        methods: list[MethodCoverage] = []
        configured_total = 0
        kept_total = 0
        candidates_total = 0
        for cls_name in classes:
            cls = unit.class_named(cls_name)
            for m in public_methods(cls):
                _, configured, result = _select_cases(
                    unit, cls_name, m.name, config, args.budget, seed
                )
                all_cases.extend(configured)
                all_cases.extend(result.kept)
                configured_total += len(configured)
                kept_total += len(result.kept)
                candidates_total += result.candidates_run
                methods.append(result.coverage)
        with open(out_dir / "cases.jsonl", "w", encoding="utf-8") as fh:
            for case in all_cases:
                fh.write(json.dumps(case_to_json(case)) + "\n")
        stages["cases"] = {
            "configured": configured_total,
            "fuzzed_kept": kept_total,
            "candidates_run": candidates_total,
            "case_file": "cases.jsonl",
        }

    with _stage("coverage"):
        report = aggregate_report(methods)
        rows = []
        for mc in methods:
            rows.append(_method_row(mc, []))
        coverage_payload = {
            "methods": rows,
            "functional_pct": report.functional_pct,
            "conditional_pct": report.conditional_pct,
            "threshold": args.threshold,
        }
        (out_dir / "coverage.json").write_text(
            json.dumps(coverage_payload, indent=2) + "\n", encoding="utf-8"
        )
        stages["coverage"] = {
            "functional_pct": report.functional_pct,
            "conditional_pct": report.conditional_pct,
            "report": "coverage.json",
        }

    exit_code = 2 if (gap_count > 0 or report.conditional_pct < args.threshold) else 0
    manifest = {
        "tool_version": __version__,
        "seed": seed,
        "budget": args.budget,
        "inputs": dict(sorted(inputs.items())),
        "stages": stages,
        "exit_code": exit_code,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    if args.json:
        _print_json(manifest)
    else:
        print(f"classes: {len(classes)}  cases: {len(all_cases)}")
        print(
            f"generation ratio {stages['scaffold']['generation_ratio']:.4f}  "
            f"functional {report.functional_pct:.1f}%  "
            f"conditional {report.conditional_pct:.1f}%"
        )
        if "advise" in stages:
            print(f"highlighted gaps: {gap_count}")
        print(f"manifest: {out_dir / 'manifest.json'}")
    return exit_code


# --- parser -----------------------------------------------------------------

class _ArgumentParser(argparse.ArgumentParser):
    # usage problems are caller errors, not highlighted-gap exits
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="ultgen",
        description="Unit test scaffolding, robustness cases, and coverage advice.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decisions", help="print the condition/decision table")
    p.add_argument("file")
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--method")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_decisions)

    p = sub.add_parser("scaffold", help="write fixture, test class, and mocks")
    p.add_argument("src")
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--merge", action="store_true",
                   help="carry anchored edits over from existing files")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_scaffold)

    p = sub.add_parser("cases", help="fuzz and select robustness cases")
    p.add_argument("src")
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="configured cases and pool overrides (JSON)")
    p.add_argument("-o", "--out", required=True, help="case file to write (JSONL)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cases)

    p = sub.add_parser("coverage", help="replay a case file and measure coverage")
    p.add_argument("src")
    p.add_argument("--cases", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("advise", help="recommend per-component coverage targets")
    p.add_argument("--bugs", required=True)
    p.add_argument("--commits", required=True)
    p.add_argument("--coverage", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--grid", default=",".join(str(g) for g in COVERAGE_GRID))
    p.add_argument("--watch", help="directory to watch; re-advise on change")
    p.add_argument("--watch-count", type=int, default=None,
                   help="stop after this many re-runs (default: forever)")
    p.add_argument("--watch-interval", type=float, default=0.25)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_advise)

    p = sub.add_parser("run", help="full pipeline over a source directory")
    p.add_argument("src")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--config")
    p.add_argument("--bugs")
    p.add_argument("--commits")
    p.add_argument("--coverage-history", dest="coverage_history")
    p.add_argument("--map")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--grid", default=",".join(str(g) for g in COVERAGE_GRID))
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UltgenError as e:
        print(f"ultgen: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"ultgen: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
