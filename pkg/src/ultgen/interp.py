"""Deterministic big-step interpreter for CUT-lang method bodies.

Runs one test case against one method without compilation: parameters and
scalar fields come from the case, dependency calls return scripted mock
values, and every evaluated decision/condition contributes an outcome pair.
Crashes (failed assert, integer division by zero, unscripted call, fuel
exhaustion) terminate the run and are data on the trace, not Python errors.

Semantics pinned here and mirrored by the independent test oracle:
  - int is 64-bit two's complement; arithmetic wraps, division truncates
    toward zero, and only integer division by zero is a DivByZero crash.
  - float follows IEEE-754 doubles; division by zero yields +/-inf or nan.
  - `&&`/`||` short-circuit; skipped conditions record no outcome.
  - Fuel: executing any statement costs 1, each while-condition evaluation
    costs 1 more; an unpayable charge stops the run with FuelExhausted.
  - Falling off the end of a method returns no value.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

from .cutlang.nodes import (
    INT_MAX,
    INT_MIN,
    Assert,
    Assign,
    Binary,
    Block,
    BoolLit,
    CallExpr,
    ClassDecl,
    Expr,
    FieldRef,
    FloatLit,
    If,
    IntLit,
    MethodDecl,
    ParamRef,
    RefType,
    Return,
    SourceUnit,
    Span,
    Stmt,
    Unary,
    While,
)
from .cutlang.printer import print_method
from .decisions import Decision, extract_decisions
from .errors import ContractViolation, UnknownClass, UnknownTarget

if TYPE_CHECKING:
    from .cases import TestCase

Scalar = Union[int, float, bool]

DEFAULT_FUEL = 10000

TYPE_DEFAULTS: dict[str, Scalar] = {"int": 0, "bool": False, "float": 0.0}

ASSERT_FAILURE = "AssertFailure"
DIV_BY_ZERO = "DivByZero"
UNMOCKED_CALL = "UnmockedCall"
FUEL_EXHAUSTED = "FuelExhausted"


@dataclass(frozen=True)
class Event:
    kind: str
    site: Optional[Span] = None  # FuelExhausted carries no site

    @property
    def key(self) -> tuple:
        """Identity used for "new finding" bookkeeping: kind + location."""
        if self.site is None:
            return (self.kind,)
        return (self.kind, self.site.line, self.site.column)


@dataclass(frozen=True)
class ExecutionTrace:
    case_id: str
    outcomes: frozenset[tuple[str, bool]]  # (decision or condition id, value)
    events: tuple[Event, ...]
    terminal: str  # "Normal" | "Crashed"
    crash: Optional[Event]
    steps: int
    return_value: Optional[Scalar]
    fingerprint: str

    @property
    def passed(self) -> bool:
        return self.terminal == "Normal"


class _Crash(Exception):
    def __init__(self, event: Event):
        self.event = event


class _ReturnSignal(Exception):
    def __init__(self, value: Optional[Scalar]):
        self.value = value


def method_fingerprint(class_name: str, method: MethodDecl) -> str:
    text = f"{class_name}\n{print_method(method)}\n"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _wrap_int(v: int) -> int:
    return ((v + (1 << 63)) & ((1 << 64) - 1)) - (1 << 63)


def _int_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return _wrap_int(q)


def _float_div(a: float, b: float) -> float:
    if b == 0.0:
        if math.isnan(a) or a == 0.0:
            return math.nan
        sign = math.copysign(1.0, a) * math.copysign(1.0, b)
        return math.copysign(math.inf, sign)
    return a / b


class CaseEvaluator:
    """Prepared executor for one (class, method): parse once, run many cases.

    Exposes the method's decisions and an AST fingerprint so traces can be
    checked for consistency before coverage aggregation.
    """

    def __init__(
        self,
        unit: SourceUnit,
        class_name: str,
        method_name: str,
        fuel: int = DEFAULT_FUEL,
    ):
        cls = unit.class_named(class_name)
        if cls is None:
            raise UnknownClass(f"class {class_name!r} not found in {unit.path}")
        method = self._find_method(unit, cls, method_name)
        if method is None:
            raise UnknownTarget(f"{class_name}.{method_name}")
        if fuel < 1:
            raise ContractViolation("fuel must be >= 1")
        self.unit = unit
        self.class_name = class_name
        self.cls = cls
        self.method = method
        self.fuel = fuel
        self.decisions: list[Decision] = extract_decisions(method, class_name)
        self.fingerprint = method_fingerprint(class_name, method)
        self._atom_ids: dict[int, str] = {
            id(c.atom): c.id for d in self.decisions for c in d.conditions
        }
        self._decision_ids: dict[int, str] = {id(d.expr): d.id for d in self.decisions}
        self._scalar_fields, self._ref_fields = self._effective_fields(unit, cls)
        self._site_types = self._call_site_types()

    @staticmethod
    def _find_method(
        unit: SourceUnit, cls: ClassDecl, name: str
    ) -> Optional[MethodDecl]:
        cur: Optional[ClassDecl] = cls
        while cur is not None:
            m = cur.method_named(name)
            if m is not None:
                return m
            cur = unit.class_named(cur.base) if cur.base else None
        return None

    @staticmethod
    def _effective_fields(
        unit: SourceUnit, cls: ClassDecl
    ) -> tuple[dict[str, str], dict[str, str]]:
        """(scalar fields name->type, ref fields name->class) incl. inherited."""
        chain: list[ClassDecl] = []
        cur: Optional[ClassDecl] = cls
        while cur is not None:
            chain.append(cur)
            cur = unit.class_named(cur.base) if cur.base else None
        scalars: dict[str, str] = {}
        refs: dict[str, str] = {}
        for c in reversed(chain):
            for f in c.fields:
                if isinstance(f.type, RefType):
                    refs[f.name] = f.type.class_name
                else:
                    scalars[f.name] = f.type
        return scalars, refs

    def _call_site_types(self) -> dict[tuple[str, str], str]:
        """Static return type per (field, method) call key in the body."""
        from .cutlang.nodes import walk

        out: dict[tuple[str, str], str] = {}
        for node in walk(self.method.body):
            if isinstance(node, CallExpr):
                out[(node.receiver.name, node.method)] = node.type_ or "int"
        return out

    # -- case validation ---------------------------------------------------

    def _validate(self, case: "TestCase") -> None:
        declared = {p.name: p.type for p in self.method.params}
        given = case.param_values
        missing = sorted(set(declared) - set(given))
        if missing:
            raise ContractViolation(f"missing parameter values: {missing}")
        extra = sorted(set(given) - set(declared))
        if extra:
            raise ContractViolation(f"unknown parameters: {extra}")
        for name, value in given.items():
            self._check_scalar(declared[name], value, f"parameter {name!r}")
        for name, value in case.field_values.items():
            if name not in self._scalar_fields:
                raise ContractViolation(f"unknown scalar field {name!r}")
            self._check_scalar(self._scalar_fields[name], value, f"field {name!r}")
        for key, script in case.mock_plan.items():
            f_name, m_name = key
            if f_name not in self._ref_fields:
                raise ContractViolation(f"mock key {key} names no reference field")
            ret = self._site_types.get(key)
            if ret == "void":
                raise ContractViolation(f"call {f_name}->{m_name}() returns void")
            if not script:
                raise ContractViolation(f"empty mock script for {key}")
            expect = ret if ret is not None else self._dep_return_type(key)
            for value in script:
                self._check_scalar(expect, value, f"mock {f_name}->{m_name}()")

    def _dep_return_type(self, key: tuple[str, str]) -> str:
        f_name, m_name = key
        dep = self.unit.class_named(self._ref_fields[f_name])
        if dep is None:
            return "int"  # extern dependency: documented assumption
        m = self._find_method(self.unit, dep, m_name)
        if m is None or m.return_type == "void":
            raise ContractViolation(f"no scriptable method for mock key {key}")
        return m.return_type

    @staticmethod
    def _check_scalar(type_name: str, value: Scalar, what: str) -> None:
        if type_name == "int":
            ok = type(value) is int and INT_MIN <= value <= INT_MAX
        elif type_name == "bool":
            ok = type(value) is bool
        elif type_name == "float":
            ok = type(value) is float
        else:
            ok = False
        if not ok:
            raise ContractViolation(f"{what} must be {type_name}, got {value!r}")

    # -- execution ---------------------------------------------------------

    def run(self, case: "TestCase") -> ExecutionTrace:
        self._validate(case)
        params: dict[str, Scalar] = dict(case.param_values)
        fields_env: dict[str, Scalar] = {
            name: TYPE_DEFAULTS[t] for name, t in self._scalar_fields.items()
        }
        fields_env.update(case.field_values)
        state = _State(
            params=params,
            fields=fields_env,
            scripts={k: list(v) for k, v in case.mock_plan.items()},
            fuel=self.fuel,
        )
        outcomes: set[tuple[str, bool]] = set()
        state.outcomes = outcomes
        crash: Optional[Event] = None
        ret: Optional[Scalar] = None
        try:
            self._exec_block(self.method.body, state)
        except _ReturnSignal as r:
            ret = r.value
        except _Crash as c:
            crash = c.event
        events = (crash,) if crash is not None else ()
        return ExecutionTrace(
            case_id=case.id,
            outcomes=frozenset(outcomes),
            events=events,
            terminal="Crashed" if crash is not None else "Normal",
            crash=crash,
            steps=self.fuel - state.fuel,
            return_value=None if crash is not None else ret,
            fingerprint=self.fingerprint,
        )

    def _exec_block(self, block: Block, st: "_State") -> None:
        for stmt in block.stmts:
            self._exec_stmt(stmt, st)

    def _exec_stmt(self, stmt: Stmt, st: "_State") -> None:
        st.charge()
        if isinstance(stmt, If):
            value = self._eval_decision(stmt.cond, st)
            if value:
                self._exec_block(stmt.then, st)
            elif stmt.els is not None:
                self._exec_block(stmt.els, st)
            return
        if isinstance(stmt, While):
            while True:
                st.charge()
                if not self._eval_decision(stmt.cond, st):
                    return
                self._exec_block(stmt.body, st)
        if isinstance(stmt, Assert):
            value = self._eval_decision(stmt.cond, st)
            if not value:
                raise _Crash(Event(ASSERT_FAILURE, stmt.span))
            return
        if isinstance(stmt, Return):
            value = self._eval(stmt.value, st) if stmt.value is not None else None
            raise _ReturnSignal(value)
        if isinstance(stmt, Assign):
            value = self._eval(stmt.value, st)
            if isinstance(stmt.target, ParamRef):
                st.params[stmt.target.name] = value
            else:
                st.fields[stmt.target.name] = value
            return
        # ExprStmt
        self._eval(stmt.expr, st)

    def _eval_decision(self, cond: Expr, st: "_State") -> bool:
        value = self._eval(cond, st)
        st.outcomes.add((self._decision_ids[id(cond)], value))
        return value

    def _eval(self, e: Expr, st: "_State") -> Scalar:
        value = self._eval_inner(e, st)
        cond_id = self._atom_ids.get(id(e))
        if cond_id is not None:
            st.outcomes.add((cond_id, value))
        return value

    def _eval_inner(self, e: Expr, st: "_State") -> Scalar:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, FloatLit):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, ParamRef):
            return st.params[e.name]
        if isinstance(e, FieldRef):
            return st.fields[e.name]
        if isinstance(e, CallExpr):
            return self._eval_call(e, st)
        if isinstance(e, Unary):
            return not self._eval(e.operand, st)
        if isinstance(e, Binary):
            return self._eval_binary(e, st)
        raise AssertionError(f"unhandled expression {e!r}")

    def _eval_call(self, e: CallExpr, st: "_State") -> Optional[Scalar]:
        key = (e.receiver.name, e.method)
        if self._site_types.get(key) == "void":
            return None
        script = st.scripts.get(key)
        if not script:
            raise _Crash(Event(UNMOCKED_CALL, e.span))
        idx = min(st.call_counts.get(key, 0), len(script) - 1)
        st.call_counts[key] = st.call_counts.get(key, 0) + 1
        return script[idx]

    def _eval_binary(self, e: Binary, st: "_State") -> Scalar:
        if e.op == "&&":
            if not self._eval(e.left, st):
                return False
            return bool(self._eval(e.right, st))
        if e.op == "||":
            if self._eval(e.left, st):
                return True
            return bool(self._eval(e.right, st))
        left = self._eval(e.left, st)
        right = self._eval(e.right, st)
        op = e.op
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        if isinstance(left, bool) or isinstance(right, bool):
            raise AssertionError("arithmetic on bool slipped past the checker")
        if isinstance(left, int):
            if op == "+":
                return _wrap_int(left + right)
            if op == "-":
                return _wrap_int(left - right)
            if op == "*":
                return _wrap_int(left * right)
            if right == 0:
                raise _Crash(Event(DIV_BY_ZERO, e.span))
            return _int_div(left, right)
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        return _float_div(left, right)


@dataclass
class _State:
    params: dict[str, Scalar]
    fields: dict[str, Scalar]
    scripts: dict[tuple[str, str], list[Scalar]]
    fuel: int
    call_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    outcomes: set = field(default_factory=set)

    def charge(self) -> None:
        if self.fuel <= 0:
            raise _Crash(Event(FUEL_EXHAUSTED))
        self.fuel -= 1


def evaluate_case(
    unit: SourceUnit,
    class_name: str,
    method_name: str,
    case: "TestCase",
    fuel: int = DEFAULT_FUEL,
) -> ExecutionTrace:
    """One-shot convenience wrapper around CaseEvaluator."""
    return CaseEvaluator(unit, class_name, method_name, fuel).run(case)
