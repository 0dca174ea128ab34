"""Condition/decision coverage computation and the exhaustive oracle.

Coverage counts outcome pairs: every decision and every condition must be
seen evaluating to both true and false. The denominator is syntactic,
2 * (#conditions + #decisions), including unreachable pairs; a method with
no decisions is vacuously at 100%.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence, Union

from .decisions import Decision
from .errors import DomainTooLarge, EmptyDomain, MixedTargets
from .interp import DEFAULT_FUEL, CaseEvaluator, ExecutionTrace

if TYPE_CHECKING:
    from .cases import TestCase

Scalar = Union[int, float, bool]

BRUTE_FORCE_CAP = 10**6


@dataclass(frozen=True)
class MethodCoverage:
    method: str  # "<Class>.<method>"
    conditions_total: int
    decisions_total: int
    pairs_covered: frozenset[tuple[str, bool]]
    percent: float
    has_passing_case: bool
    # Filled by the exhaustive oracle only: pairs no input combination can
    # produce, and the number of combinations enumerated.
    unreachable: Optional[frozenset[tuple[str, bool]]] = None
    combos: Optional[int] = None

    @property
    def denominator(self) -> int:
        return 2 * (self.conditions_total + self.decisions_total)


@dataclass(frozen=True)
class CoverageReport:
    methods: tuple[MethodCoverage, ...]
    functional_pct: float
    conditional_pct: float


def all_pairs(decisions: Sequence[Decision]) -> frozenset[tuple[str, bool]]:
    pairs: set[tuple[str, bool]] = set()
    for d in decisions:
        pairs.add((d.id, True))
        pairs.add((d.id, False))
        for c in d.conditions:
            pairs.add((c.id, True))
            pairs.add((c.id, False))
    return frozenset(pairs)


def percent_of(pairs_covered: int, denominator: int) -> float:
    if denominator == 0:
        return 100.0
    return 100.0 * pairs_covered / denominator


def compute_coverage(
    traces: Sequence[ExecutionTrace],
    decisions: Sequence[Decision],
    method_id: str,
    fingerprint: Optional[str] = None,
) -> MethodCoverage:
    """Union the outcome pairs of traces for one method.

    All traces must carry the same AST fingerprint (and match `fingerprint`
    when given); a mismatch means traces from different code were mixed.
    """
    expected = fingerprint
    for t in traces:
        if expected is None:
            expected = t.fingerprint
        elif t.fingerprint != expected:
            raise MixedTargets(
                f"trace {t.case_id!r} targets a different method body "
                f"({t.fingerprint[:12]} != {expected[:12]})"
            )
    valid = all_pairs(decisions)
    covered: set[tuple[str, bool]] = set()
    for t in traces:
        covered.update(t.outcomes & valid)
    conditions_total = sum(len(d.conditions) for d in decisions)
    decisions_total = len(decisions)
    denom = 2 * (conditions_total + decisions_total)
    return MethodCoverage(
        method=method_id,
        conditions_total=conditions_total,
        decisions_total=decisions_total,
        pairs_covered=frozenset(covered),
        percent=percent_of(len(covered), denom),
        has_passing_case=any(t.passed for t in traces),
    )


def aggregate_report(methods: Sequence[MethodCoverage]) -> CoverageReport:
    """Roll methods up: functional = share of methods with a passing case,
    conditional = pair-weighted percentage over all methods."""
    if not methods:
        return CoverageReport(methods=(), functional_pct=100.0, conditional_pct=100.0)
    passing = sum(1 for m in methods if m.has_passing_case)
    functional = 100.0 * passing / len(methods)
    denom = sum(m.denominator for m in methods)
    covered = sum(len(m.pairs_covered) for m in methods)
    return CoverageReport(
        methods=tuple(methods),
        functional_pct=functional,
        conditional_pct=percent_of(covered, denom),
    )


def brute_force_max_coverage(
    evaluator: CaseEvaluator,
    domains: dict[str, Sequence[Scalar]],
    mock_domains: dict[tuple[str, str], Sequence[Scalar]],
    cap: int = BRUTE_FORCE_CAP,
) -> MethodCoverage:
    """Maximum achievable coverage by exhausting finite input domains.

    Every method parameter needs a nonempty domain and every value-returning
    call site a nonempty mock domain (one scripted value per combination).
    Scalar fields stay at their type defaults, matching the fuzzer.
    """
    from .cases import TestCase

    method = evaluator.method
    axes: list[tuple[str, object, Sequence[Scalar]]] = []
    for p in method.params:
        values = domains.get(p.name)
        if not values:
            raise EmptyDomain(f"no domain for parameter {p.name!r}")
        axes.append(("param", p.name, values))
    for key, ret in evaluator._site_types.items():
        if ret == "void":
            continue
        values = mock_domains.get(key)
        if not values:
            raise EmptyDomain(f"no mock domain for call site {key}")
        axes.append(("mock", key, values))

    total = 1
    for _, _, values in axes:
        total *= len(values)
        if total > cap:
            raise DomainTooLarge(f"domain product exceeds {cap}")

    valid = all_pairs(evaluator.decisions)
    covered: set[tuple[str, bool]] = set()
    has_passing = False
    for combo in itertools.product(*(values for _, _, values in axes)):
        params: dict[str, Scalar] = {}
        mocks: dict[tuple[str, str], list[Scalar]] = {}
        for (kind, name, _), value in zip(axes, combo):
            if kind == "param":
                params[name] = value
            else:
                mocks[name] = [value]
        case = TestCase(
            id="brute",
            target=(evaluator.class_name, method.name),
            param_values=params,
            field_values={},
            mock_plan=mocks,
            origin="Fuzzed",
        )
        trace = evaluator.run(case)
        covered.update(trace.outcomes & valid)
        has_passing = has_passing or trace.passed
        if len(covered) == len(valid) and has_passing:
            break  # provably maximal already

    conditions_total = sum(len(d.conditions) for d in evaluator.decisions)
    decisions_total = len(evaluator.decisions)
    denom = 2 * (conditions_total + decisions_total)
    return MethodCoverage(
        method=f"{evaluator.class_name}.{method.name}",
        conditions_total=conditions_total,
        decisions_total=decisions_total,
        pairs_covered=frozenset(covered),
        percent=percent_of(len(covered), denom),
        has_passing_case=has_passing,
        unreachable=valid - covered,
        combos=total,
    )
