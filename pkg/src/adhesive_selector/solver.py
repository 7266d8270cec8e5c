"""Inference over a ground problem: check, expand, propagate, optimize,
explain, relevance.

The search assigns discrete cells (enumerations, booleans, bounded ints) by
backtracking with unit-style forcing, then decides the residual boolean
combination of linear rational atoms by case-splitting with exact
Fourier-Motzkin feasibility checks.  Everything is exact rational
arithmetic; value ordering is declaration order for enumerations and lowest
value first for numerics, which makes every result deterministic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .grounding import Cell, CellKey, GroundClause, GroundProblem
from .model import (
    And,
    App,
    Arith,
    Assignment,
    BoolLit,
    Cmp,
    EnumLit,
    Formula,
    Iff,
    Implies,
    Interval,
    Not,
    NumLit,
    Or,
    PartialStructure,
    Term,
    Value,
)


class SolveTimeout(Exception):
    """The configured time budget ran out; reported distinctly from unsat."""


class Unbounded(Exception):
    """The goal term has no finite optimum (cannot occur on bounded domains,
    kept as a first-class outcome per the optimization contract)."""


class OptimumNotAttained(Exception):
    """Strict constraints leave the goal with an unattained infimum/supremum."""

    def __init__(self, value: Fraction):
        super().__init__(f"optimum {value} is a bound but not attained by any model")
        self.value = value


class NotAConsequence(Exception):
    """explain_value was asked about a target that is not propagated."""


class ConsistentInput(Exception):
    """explain_inconsistency was called on a satisfiable state."""


DEFAULT_TIMEOUT_MS = 30_000


class Budget:
    def __init__(self, timeout_ms: int = DEFAULT_TIMEOUT_MS):
        self.deadline = time.monotonic() + timeout_ms / 1000.0
        self.nodes = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes % 256 == 0 and time.monotonic() > self.deadline:
            raise SolveTimeout()


Model = dict[CellKey, Value]


@dataclass(frozen=True)
class OptimizationGoal:
    term: Term
    direction: str  # 'minimize' | 'maximize'


@dataclass(frozen=True)
class PropagationResult:
    consequences: tuple[Assignment, ...]
    eliminated: dict[CellKey, tuple[Value, ...]]
    numeric_bounds: dict[CellKey, Interval]
    status: str  # 'consistent' | 'inconsistent'


@dataclass(frozen=True)
class Explanation:
    assignments: tuple[Assignment, ...]
    laws: tuple[tuple[str, str], ...]  # (formula-id, label)
    target: Union[Assignment, str]  # assignment or the marker 'inconsistency'


# ---------------------------------------------------------------------------
# Search state


class _State:
    __slots__ = ("assign", "domains", "ranges")

    def __init__(
        self,
        assign: dict[CellKey, Value],
        domains: dict[CellKey, tuple[Value, ...]],
        ranges: dict[CellKey, tuple[Fraction, Fraction]],
    ):
        self.assign = assign
        self.domains = domains
        self.ranges = ranges

    def copy(self) -> "_State":
        return _State(dict(self.assign), dict(self.domains), dict(self.ranges))


class _Conflict(Exception):
    pass


def _initial_state(gp: GroundProblem, st: PartialStructure, cells: dict[CellKey, Cell]) -> Optional[_State]:
    assign: dict[CellKey, Value] = {}
    domains: dict[CellKey, tuple[Value, ...]] = {}
    ranges: dict[CellKey, tuple[Fraction, Fraction]] = {}
    for key, cell in cells.items():
        if cell.discrete:
            domains[key] = cell.candidates
        else:
            ranges[key] = (cell.lo, cell.hi)
    for key, iv in st.interval_restrictions().items():
        if key not in cells:
            continue
        cell = cells[key]
        if cell.discrete:
            kept = tuple(v for v in domains[key] if isinstance(v, Fraction) and iv.lo <= v <= iv.hi)
            if not kept:
                return None
            domains[key] = kept
        else:
            lo, hi = ranges[key]
            lo, hi = max(lo, iv.lo), min(hi, iv.hi)
            if lo > hi:
                return None
            ranges[key] = (lo, hi)
    for key, v in st.exact_values().items():
        if key not in cells:
            continue
        cell = cells[key]
        if cell.discrete:
            if v not in domains[key]:
                return None
            assign[key] = v
            domains[key] = (v,)
        else:
            assert isinstance(v, Fraction)
            lo, hi = ranges[key]
            if not (lo <= v <= hi):
                return None
            ranges[key] = (v, v)
    st2 = _State(assign, domains, ranges)
    for key, cell in cells.items():
        if cell.discrete and key not in assign and len(domains[key]) == 1:
            assign[key] = domains[key][0]
    return st2


# ---------------------------------------------------------------------------
# Term evaluation and three-valued simplification


def _eval_term(t: Term, state: _State, cells: dict[CellKey, Cell]) -> Optional[Value]:
    if isinstance(t, NumLit):
        return t.value
    if isinstance(t, EnumLit):
        return t.value
    if isinstance(t, App):
        args: list[Value] = []
        for a in t.args:
            v = _eval_term(a, state, cells)
            if v is None:
                return None
            args.append(v)
        key = (t.symbol, tuple(args))
        cell = cells.get(key)
        if cell is None:
            return None
        if cell.discrete:
            return state.assign.get(key)
        lo, hi = state.ranges[key]
        return lo if lo == hi else None
    if isinstance(t, Arith):
        vals = []
        for a in t.args:
            v = _eval_term(a, state, cells)
            if v is None:
                return None
            if not isinstance(v, Fraction):
                return None
            vals.append(v)
        return _arith(t.op, vals)
    raise TypeError(f"not a ground term: {t!r}")


def _arith(op: str, vals: list[Fraction]) -> Fraction:
    if op == "+":
        return vals[0] + vals[1]
    if op == "-":
        return vals[0] - vals[1]
    if op == "*":
        return vals[0] * vals[1]
    if op == "/":
        return vals[0] / vals[1]
    if op == "neg":
        return -vals[0]
    raise ValueError(f"unknown arithmetic op {op}")


def _term_bounds(
    t: Term, state: _State, cells: dict[CellKey, Cell]
) -> Optional[tuple[Fraction, Fraction]]:
    """Closed numeric bounds for a term under the current state, or None."""
    if isinstance(t, NumLit):
        return (t.value, t.value)
    if isinstance(t, App):
        v = _eval_term(t, state, cells)
        if isinstance(v, Fraction):
            return (v, v)
        if v is not None:
            return None
        args: list[Value] = []
        for a in t.args:
            av = _eval_term(a, state, cells)
            if av is None:
                return None
            args.append(av)
        key = (t.symbol, tuple(args))
        cell = cells.get(key)
        if cell is None:
            return None
        if cell.kind == "rat":
            return state.ranges[key]
        if cell.kind == "int":
            dom = [v for v in state.domains[key] if isinstance(v, Fraction)]
            if not dom:
                return None
            return (min(dom), max(dom))
        return None
    if isinstance(t, Arith):
        bs = []
        for a in t.args:
            b = _term_bounds(a, state, cells)
            if b is None:
                return None
            bs.append(b)
        if t.op == "+":
            return (bs[0][0] + bs[1][0], bs[0][1] + bs[1][1])
        if t.op == "-":
            return (bs[0][0] - bs[1][1], bs[0][1] - bs[1][0])
        if t.op == "neg":
            return (-bs[0][1], -bs[0][0])
        if t.op == "*":
            candidates = [x * y for x in bs[0] for y in bs[1]]
            return (min(candidates), max(candidates))
        if t.op == "/":
            (dlo, dhi) = bs[1]
            if dlo <= 0 <= dhi:
                return None  # divisor interval straddles zero
            candidates = [x / y for x in bs[0] for y in bs[1]]
            return (min(candidates), max(candidates))
    return None


def _cmp_values(op: str, l: Value, r: Value) -> bool:
    if op == "=":
        return l == r
    if op == "~=":
        return l != r
    assert isinstance(l, Fraction) and isinstance(r, Fraction)
    if op == "<":
        return l < r
    if op == "<=":
        return l <= r
    if op == ">":
        return l > r
    if op == ">=":
        return l >= r
    raise ValueError(op)


_NEG_OP = {"=": "~=", "~=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def _resolve_cell(
    t: Term, state: _State, cells: dict[CellKey, Cell]
) -> Optional[CellKey]:
    """The cell a bare application denotes, if its arguments are decided."""
    if not isinstance(t, App):
        return None
    args: list[Value] = []
    for a in t.args:
        v = _eval_term(a, state, cells)
        if v is None:
            return None
        args.append(v)
    key = (t.symbol, tuple(args))
    return key if key in cells else None


def _simplify(f: Formula, state: _State, cells: dict[CellKey, Cell]) -> Formula:
    if isinstance(f, BoolLit):
        return f
    if isinstance(f, Cmp):
        try:
            lv = _eval_term(f.lhs, state, cells)
            rv = _eval_term(f.rhs, state, cells)
        except ZeroDivisionError:
            # a division by zero has no defined value; no atom over it holds
            return BoolLit(False)
        if lv is not None and rv is not None:
            return BoolLit(_cmp_values(f.op, lv, rv))
        # candidate-set reasoning for enum cells compared with a constant
        if f.op in ("=", "~="):
            for cell_side, val_side in ((f.lhs, rv), (f.rhs, lv)):
                if val_side is None:
                    continue
                key = _resolve_cell(cell_side, state, cells)
                if key is None or not cells[key].discrete or key in state.assign:
                    continue
                if val_side not in state.domains[key]:
                    return BoolLit(f.op == "~=")
        # interval reasoning for orderings and equality separation
        lb = _term_bounds(f.lhs, state, cells)
        rb = _term_bounds(f.rhs, state, cells)
        if lb is not None and rb is not None:
            (llo, lhi), (rlo, rhi) = lb, rb
            if f.op == "<=" and lhi <= rlo:
                return BoolLit(True)
            if f.op == "<=" and llo > rhi:
                return BoolLit(False)
            if f.op == "<" and lhi < rlo:
                return BoolLit(True)
            if f.op == "<" and llo >= rhi:
                return BoolLit(False)
            if f.op == ">=" and llo >= rhi:
                return BoolLit(True)
            if f.op == ">=" and lhi < rlo:
                return BoolLit(False)
            if f.op == ">" and llo > rhi:
                return BoolLit(True)
            if f.op == ">" and lhi <= rlo:
                return BoolLit(False)
            if f.op in ("=", "~=") and (lhi < rlo or rhi < llo):
                return BoolLit(f.op == "~=")
        return f
    if isinstance(f, Not):
        b = _simplify(f.body, state, cells)
        if isinstance(b, BoolLit):
            return BoolLit(not b.value)
        if isinstance(b, Cmp):
            return Cmp(_NEG_OP[b.op], b.lhs, b.rhs)
        return Not(b)
    if isinstance(f, And):
        parts = []
        for p in f.parts:
            sp = _simplify(p, state, cells)
            if isinstance(sp, BoolLit):
                if not sp.value:
                    return BoolLit(False)
                continue
            parts.append(sp)
        if not parts:
            return BoolLit(True)
        if len(parts) == 1:
            return parts[0]
        return And(tuple(parts))
    if isinstance(f, Or):
        parts = []
        for p in f.parts:
            sp = _simplify(p, state, cells)
            if isinstance(sp, BoolLit):
                if sp.value:
                    return BoolLit(True)
                continue
            parts.append(sp)
        if not parts:
            return BoolLit(False)
        if len(parts) == 1:
            return parts[0]
        return Or(tuple(parts))
    if isinstance(f, Implies):
        l = _simplify(f.lhs, state, cells)
        if isinstance(l, BoolLit):
            return _simplify(f.rhs, state, cells) if l.value else BoolLit(True)
        r = _simplify(f.rhs, state, cells)
        if isinstance(r, BoolLit):
            return BoolLit(True) if r.value else _simplify(Not(l), state, cells)
        return Implies(l, r)
    if isinstance(f, Iff):
        l = _simplify(f.lhs, state, cells)
        r = _simplify(f.rhs, state, cells)
        if isinstance(l, BoolLit):
            return r if l.value else _simplify(Not(r), state, cells)
        if isinstance(r, BoolLit):
            return l if r.value else _simplify(Not(l), state, cells)
        return Iff(l, r)
    raise TypeError(f"unexpected formula in ground solver: {f!r}")


# ---------------------------------------------------------------------------
# Unit-style forcing


def _try_force(
    f: Formula,
    state: _State,
    cells: dict[CellKey, Cell],
    touched: Optional[set[CellKey]] = None,
) -> bool:
    """Apply a forced consequence of a residual clause; True if progress was
    made (the clause is then satisfied or tightened into the state).  Mutated
    cells are recorded in `touched` when given."""
    if not isinstance(f, Cmp):
        return False
    if touched is None:
        touched = set()
    for cell_side, other in ((f.lhs, f.rhs), (f.rhs, f.lhs)):
        key = _resolve_cell(cell_side, state, cells)
        if key is None:
            continue
        value = _eval_term(other, state, cells)
        if value is None:
            continue
        cell = cells[key]
        op = f.op
        if cell_side is f.rhs and op in ("<", "<=", ">", ">="):
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
        if cell.discrete:
            if key in state.assign:
                return False
            dom = state.domains[key]
            if op == "=":
                if value not in dom:
                    raise _Conflict()
                state.assign[key] = value
                state.domains[key] = (value,)
                touched.add(key)
                return True
            if op == "~=":
                kept = tuple(v for v in dom if v != value)
                if not kept:
                    raise _Conflict()
                if len(kept) == len(dom):
                    return False
                state.domains[key] = kept
                if len(kept) == 1:
                    state.assign[key] = kept[0]
                touched.add(key)
                return True
            if cell.kind == "int" and isinstance(value, Fraction):
                kept = tuple(v for v in dom if _cmp_values(op, v, value))  # type: ignore[arg-type]
                if not kept:
                    raise _Conflict()
                if len(kept) == len(dom):
                    return False
                state.domains[key] = kept
                if len(kept) == 1:
                    state.assign[key] = kept[0]
                touched.add(key)
                return True
            return False
        # continuous cell: closed tightenings only (strictness is decided by
        # the linear stage)
        if not isinstance(value, Fraction):
            return False
        lo, hi = state.ranges[key]
        if op == "=":
            if not (lo <= value <= hi):
                raise _Conflict()
            if (lo, hi) != (value, value):
                state.ranges[key] = (value, value)
                touched.add(key)
                return True
            return False
        if op in ("<=", "<") and value < hi:
            if value < lo:
                raise _Conflict()
            state.ranges[key] = (lo, value)
            touched.add(key)
            return True
        if op in (">=", ">") and value > lo:
            if value > hi:
                raise _Conflict()
            state.ranges[key] = (value, hi)
            touched.add(key)
            return True
        return False
    return False


def _tighten_pair(
    f: Cmp,
    state: _State,
    cells: dict[CellKey, Cell],
    touched: Optional[set[CellKey]] = None,
) -> bool:
    """Box tightening for a residual comparison between a continuous cell and
    a bounded term (closed approximation; the clause must stay pending)."""
    changed = False
    if touched is None:
        touched = set()
    for cell_side, other, hi_side in ((f.lhs, f.rhs, True), (f.rhs, f.lhs, False)):
        key = _resolve_cell(cell_side, state, cells)
        if key is None or cells[key].kind != "rat":
            continue
        ob = _term_bounds(other, state, cells)
        if ob is None:
            continue
        olo, ohi = ob
        lo, hi = state.ranges[key]
        nlo, nhi = lo, hi
        op = f.op
        if not hi_side and op in ("<", "<=", ">", ">="):
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
        if op in ("<", "<="):
            nhi = min(nhi, ohi)
        elif op in (">", ">="):
            nlo = max(nlo, olo)
        elif op == "=":
            nlo, nhi = max(nlo, olo), min(nhi, ohi)
        if nlo > nhi:
            raise _Conflict()
        if (nlo, nhi) != (lo, hi):
            state.ranges[key] = (nlo, nhi)
            touched.add(key)
            changed = True
    return changed


PClause = tuple[Formula, frozenset[str]]  # residual clause + its symbols


def _form_syms(f: Union[Formula, Term]) -> frozenset[str]:
    """All symbol names applied anywhere in the formula (an over-approximation
    of the cells its residual can depend on; simplification never adds any)."""
    out: set[str] = set()
    stack: list = [f]
    while stack:
        n = stack.pop()
        if isinstance(n, App):
            out.add(n.symbol)
            stack.extend(n.args)
        elif isinstance(n, (And, Or)):
            stack.extend(n.parts)
        elif isinstance(n, Arith):
            stack.extend(n.args)
        elif isinstance(n, (Cmp, Implies, Iff)):
            stack.append(n.lhs)
            stack.append(n.rhs)
        elif isinstance(n, Not):
            stack.append(n.body)
    return frozenset(out)


def _propagate_units(
    pending: list[PClause],
    state: _State,
    cells: dict[CellKey, Cell],
    budget: Budget,
    dirty: Optional[set[str]] = None,
) -> list[PClause]:
    """Runs simplification + forcing to fixpoint; raises _Conflict on failure.

    `dirty` names the symbols whose cells changed since `pending` was last at
    fixpoint; only clauses mentioning them are re-simplified (None = all)."""
    tighten_rounds = 0
    while True:
        budget.tick()
        forced = False
        tightened = False
        out: list[PClause] = []
        touched: set[CellKey] = set()
        for entry in pending:
            f, syms = entry
            if dirty is not None and not (syms & dirty):
                out.append(entry)
                continue
            r = _simplify(f, state, cells)
            if isinstance(r, BoolLit):
                if not r.value:
                    raise _Conflict()
                continue
            if isinstance(r, And):
                for p in r.parts:
                    out.append((p, _form_syms(p)))
                continue
            if isinstance(r, Cmp):
                if _try_force(r, state, cells, touched):
                    forced = True
                    if r.op in ("=", "~=", "<=", ">="):
                        continue  # satisfied or fully captured by the tightening
                    # strict orderings stay pending for the linear stage
                elif _tighten_pair(r, state, cells, touched):
                    tightened = True
            out.append((r, syms if r is f else _form_syms(r)))
        if not touched:
            return out
        if forced:
            tighten_rounds = 0
        elif tightened:
            # box tightening alone may converge only in the limit on cyclic
            # constraint chains; stopping early is sound (clauses pend)
            tighten_rounds += 1
            if tighten_rounds > 20:
                return out
        dirty = {k[0] for k in touched}
        pending = out


def _undecided_discrete_cells(
    f: Union[Formula, Term], state: _State, cells: dict[CellKey, Cell], out: set[CellKey]
) -> None:
    if isinstance(f, (NumLit, EnumLit, BoolLit)):
        return
    if isinstance(f, App):
        for a in f.args:
            _undecided_discrete_cells(a, state, cells, out)
        key = _resolve_cell(f, state, cells)
        if key is not None and cells[key].discrete and key not in state.assign:
            out.add(key)
        return
    if isinstance(f, (Arith, And, Or)):
        for a in f.args if isinstance(f, Arith) else f.parts:
            _undecided_discrete_cells(a, state, cells, out)
        return
    if isinstance(f, (Cmp, Implies, Iff)):
        _undecided_discrete_cells(f.lhs, state, cells, out)
        _undecided_discrete_cells(f.rhs, state, cells, out)
        return
    if isinstance(f, Not):
        _undecided_discrete_cells(f.body, state, cells, out)
        return
    raise TypeError(f"unexpected node: {f!r}")


def _first_undecided_discrete(
    f: Union[Formula, Term], state: _State, cells: dict[CellKey, Cell]
) -> Optional[CellKey]:
    if isinstance(f, (NumLit, EnumLit, BoolLit)):
        return None
    if isinstance(f, App):
        for a in f.args:
            k = _first_undecided_discrete(a, state, cells)
            if k is not None:
                return k
        key = _resolve_cell(f, state, cells)
        if key is not None and cells[key].discrete and key not in state.assign:
            return key
        return None
    if isinstance(f, Arith):
        for a in f.args:
            k = _first_undecided_discrete(a, state, cells)
            if k is not None:
                return k
        return None
    if isinstance(f, Cmp):
        return _first_undecided_discrete(f.lhs, state, cells) or _first_undecided_discrete(
            f.rhs, state, cells
        )
    if isinstance(f, Not):
        return _first_undecided_discrete(f.body, state, cells)
    if isinstance(f, (And, Or)):
        for p in f.parts:
            k = _first_undecided_discrete(p, state, cells)
            if k is not None:
                return k
        return None
    if isinstance(f, (Implies, Iff)):
        return _first_undecided_discrete(f.lhs, state, cells) or _first_undecided_discrete(
            f.rhs, state, cells
        )
    raise TypeError(f"unexpected node: {f!r}")


# ---------------------------------------------------------------------------
# Linear stage: atoms, Fourier-Motzkin, DPLL over atom polarities

LinExpr = tuple[Fraction, dict[CellKey, Fraction]]  # constant + coefficients


def _cell_sort_key(key: CellKey):
    return (key[0], tuple(str(a) for a in key[1]))


def _linearize(t: Term, state: _State, cells: dict[CellKey, Cell]) -> LinExpr:
    if isinstance(t, NumLit):
        return (t.value, {})
    if isinstance(t, App):
        v = _eval_term(t, state, cells)
        if v is not None:
            assert isinstance(v, Fraction)
            return (v, {})
        key = _resolve_cell(t, state, cells)
        if key is None or cells[key].discrete:
            raise ValueError(f"unresolved discrete term in linear stage: {t!r}")
        return (Fraction(0), {key: Fraction(1)})
    if isinstance(t, Arith):
        if t.op == "neg":
            c, m = _linearize(t.args[0], state, cells)
            return (-c, {k: -v for k, v in m.items()})
        lc, lm = _linearize(t.args[0], state, cells)
        rc, rm = _linearize(t.args[1], state, cells)
        if t.op == "+":
            m = dict(lm)
            for k, v in rm.items():
                m[k] = m.get(k, Fraction(0)) + v
            return (lc + rc, {k: v for k, v in m.items() if v != 0})
        if t.op == "-":
            m = dict(lm)
            for k, v in rm.items():
                m[k] = m.get(k, Fraction(0)) - v
            return (lc - rc, {k: v for k, v in m.items() if v != 0})
        if t.op == "*":
            if not lm:
                return (lc * rc, {k: lc * v for k, v in rm.items()})
            if not rm:
                return (lc * rc, {k: rc * v for k, v in lm.items()})
            raise ValueError("non-linear product in formula")
        if t.op == "/":
            if rm:
                raise ValueError("division by a non-constant")
            return (lc / rc, {k: v / rc for k, v in lm.items()})
    raise TypeError(f"not a numeric term: {t!r}")


AtomKey = tuple  # canonical (items, const, kind)

LinCon = tuple[dict[CellKey, Fraction], Fraction, bool]  # coeffs, const, strict


def _atom_of(f: Cmp, state: _State, cells: dict[CellKey, Cell]):
    """Returns ('const', bool) or ('atom', key, negated) for a residual Cmp.

    Atom key encodes expr (<= | < | =) 0 with expr = coeffs . x + const.
    """
    lc, lm = _linearize(f.lhs, state, cells)
    rc, rm = _linearize(f.rhs, state, cells)
    coeffs = dict(lm)
    for k, v in rm.items():
        coeffs[k] = coeffs.get(k, Fraction(0)) - v
    coeffs = {k: v for k, v in coeffs.items() if v != 0}
    const = lc - rc
    op = f.op
    negated = False
    if op == "~=":
        op, negated = "=", True
    if op == ">":
        op = "<"
        coeffs = {k: -v for k, v in coeffs.items()}
        const = -const
    elif op == ">=":
        op = "<="
        coeffs = {k: -v for k, v in coeffs.items()}
        const = -const
    if not coeffs:
        if op == "=":
            truth = const == 0
        elif op == "<":
            truth = const < 0
        else:
            truth = const <= 0
        return ("const", truth != negated)
    items = tuple(sorted(coeffs.items(), key=lambda kv: _cell_sort_key(kv[0])))
    return ("atom", (items, const, op), negated)


def _atom_constraints(key: AtomKey, polarity: bool) -> list[tuple[LinCon, ...]]:
    """Disjunction of constraint-bundles enforcing the atom's polarity."""
    items, const, op = key
    coeffs = dict(items)
    neg_coeffs = {k: -v for k, v in coeffs.items()}
    if op == "<=":
        if polarity:
            return [((coeffs, const, False),)]
        return [((neg_coeffs, -const, True),)]
    if op == "<":
        if polarity:
            return [((coeffs, const, True),)]
        return [((neg_coeffs, -const, False),)]
    if op == "=":
        if polarity:
            return [((coeffs, const, False), (neg_coeffs, -const, False))]
        return [((coeffs, const, True),), ((neg_coeffs, -const, True),)]
    raise ValueError(op)


def _eval_atoms(f: Formula, state, cells, amap: dict[AtomKey, bool]):
    """Three-valued evaluation of a residual formula under atom polarities.

    Returns True/False/None, plus the first undecided atom key found.
    """
    if isinstance(f, BoolLit):
        return f.value, None
    if isinstance(f, Cmp):
        res = _atom_of(f, state, cells)
        if res[0] == "const":
            return res[1], None
        _, key, negated = res
        if key in amap:
            return amap[key] != negated, None
        return None, key
    if isinstance(f, Not):
        v, k = _eval_atoms(f.body, state, cells, amap)
        return (None if v is None else (not v)), k
    if isinstance(f, (And, Or)):
        is_and = isinstance(f, And)
        undecided = None
        for p in f.parts:
            v, k = _eval_atoms(p, state, cells, amap)
            if v is (not is_and):
                return (not is_and), None
            if v is None and undecided is None:
                undecided = k
        return (is_and if undecided is None else None), undecided
    if isinstance(f, Implies):
        v, k = _eval_atoms(Or((Not(f.lhs), f.rhs)), state, cells, amap)
        return v, k
    if isinstance(f, Iff):
        lv, lk = _eval_atoms(f.lhs, state, cells, amap)
        rv, rk = _eval_atoms(f.rhs, state, cells, amap)
        if lv is None or rv is None:
            return None, lk or rk
        return lv == rv, None
    raise TypeError(f"unexpected formula: {f!r}")


def _fm_witness(
    cons: list[LinCon], bounds: dict[CellKey, tuple[Fraction, Fraction]]
) -> Optional[dict[CellKey, Fraction]]:
    """Feasibility of a conjunction of linear constraints (coeffs.x + c <= 0,
    strict when flagged) over closed box bounds.  Returns a witness point or
    None; deterministic: lowest attainable value per variable, midpoint of
    the open gap otherwise."""
    all_cons = list(cons)
    for key, (lo, hi) in bounds.items():
        all_cons.append(({key: Fraction(1)}, -hi, False))
        all_cons.append(({key: Fraction(-1)}, lo, False))
    variables = sorted(bounds.keys(), key=_cell_sort_key)
    return _fm_solve(all_cons, variables)


def _fm_solve(
    cons: list[LinCon], variables: list[CellKey]
) -> Optional[dict[CellKey, Fraction]]:
    for coeffs, const, strict in cons:
        if not coeffs:
            if const > 0 or (strict and const == 0):
                return None
    if not variables:
        return {}
    v = variables[0]
    lowers: list[tuple[dict, Fraction, bool]] = []  # v >= (-const - rest)/coeff
    uppers: list[tuple[dict, Fraction, bool]] = []
    rest_cons: list[LinCon] = []
    with_v_lower: list[LinCon] = []
    with_v_upper: list[LinCon] = []
    for coeffs, const, strict in cons:
        c = coeffs.get(v)
        if c is None or c == 0:
            rest_cons.append(({k: x for k, x in coeffs.items() if k != v}, const, strict))
        elif c > 0:
            with_v_upper.append((coeffs, const, strict))
        else:
            with_v_lower.append((coeffs, const, strict))
    projected = list(rest_cons)
    for lcoeffs, lconst, lstrict in with_v_lower:
        for ucoeffs, uconst, ustrict in with_v_upper:
            lc, uc = lcoeffs[v], ucoeffs[v]
            # (coeffs/|c|) combos: lower bound <= upper bound
            comb: dict[CellKey, Fraction] = {}
            for k, x in lcoeffs.items():
                if k != v:
                    comb[k] = comb.get(k, Fraction(0)) + x / (-lc)
            for k, x in ucoeffs.items():
                if k != v:
                    comb[k] = comb.get(k, Fraction(0)) + x / uc
            comb = {k: x for k, x in comb.items() if x != 0}
            cconst = lconst / (-lc) + uconst / uc
            projected.append((comb, cconst, lstrict or ustrict))
    sub = _fm_solve(projected, variables[1:])
    if sub is None:
        return None
    # back-substitute: numeric lower/upper bounds for v
    best_lo: Optional[tuple[Fraction, bool]] = None
    best_hi: Optional[tuple[Fraction, bool]] = None
    for coeffs, const, strict in with_v_lower + with_v_upper:
        c = coeffs[v]
        acc = const
        for k, x in coeffs.items():
            if k != v:
                acc += x * sub[k]
        bound = -acc / c
        if c < 0:  # v >= bound
            if best_lo is None or bound > best_lo[0] or (bound == best_lo[0] and strict):
                best_lo = (bound, strict)
        else:  # v <= bound
            if best_hi is None or bound < best_hi[0] or (bound == best_hi[0] and strict):
                best_hi = (bound, strict)
    assert best_lo is not None and best_hi is not None  # box bounds guarantee both
    lo, lo_strict = best_lo
    hi, hi_strict = best_hi
    if lo > hi or (lo == hi and (lo_strict or hi_strict)):
        return None
    value = lo if not lo_strict else (lo + hi) / 2
    out = dict(sub)
    out[v] = value
    return out


def _project_onto(
    cons: list[LinCon],
    bounds: dict[CellKey, tuple[Fraction, Fraction]],
    expr: LinExpr,
) -> tuple[Fraction, bool, Fraction, bool]:
    """Exact (lo, lo_strict, hi, hi_strict) of a linear expression over the
    feasible region; assumes the region is non-empty."""
    const, coeffs = expr
    goal_key: CellKey = ("#goal", ())
    all_cons = list(cons)
    for key, (lo, hi) in bounds.items():
        all_cons.append(({key: Fraction(1)}, -hi, False))
        all_cons.append(({key: Fraction(-1)}, lo, False))
    # g = expr  (two inequalities)
    eq1 = dict(coeffs)
    eq1[goal_key] = Fraction(-1)
    eq2 = {k: -v for k, v in coeffs.items()}
    eq2[goal_key] = Fraction(1)
    all_cons.append((eq1, const, False))
    all_cons.append((eq2, -const, False))
    variables = sorted(bounds.keys(), key=_cell_sort_key)
    cur = all_cons
    for v in variables:
        nxt: list[LinCon] = []
        lowers, uppers = [], []
        for c3 in cur:
            c = c3[0].get(v)
            if c is None or c == 0:
                nxt.append(({k: x for k, x in c3[0].items() if k != v}, c3[1], c3[2]))
            elif c > 0:
                uppers.append(c3)
            else:
                lowers.append(c3)
        for lcoeffs, lconst, lstrict in lowers:
            for ucoeffs, uconst, ustrict in uppers:
                lc, uc = lcoeffs[v], ucoeffs[v]
                comb: dict[CellKey, Fraction] = {}
                for k, x in lcoeffs.items():
                    if k != v:
                        comb[k] = comb.get(k, Fraction(0)) + x / (-lc)
                for k, x in ucoeffs.items():
                    if k != v:
                        comb[k] = comb.get(k, Fraction(0)) + x / uc
                comb = {k: x for k, x in comb.items() if x != 0}
                nxt.append((comb, lconst / (-lc) + uconst / uc, lstrict or ustrict))
        cur = nxt
    lo: Optional[tuple[Fraction, bool]] = None
    hi: Optional[tuple[Fraction, bool]] = None
    for coeffs2, const2, strict in cur:
        c = coeffs2.get(goal_key, Fraction(0))
        if c == 0:
            continue
        bound = -const2 / c
        if c < 0:
            if lo is None or bound > lo[0] or (bound == lo[0] and strict):
                lo = (bound, strict)
        else:
            if hi is None or bound < hi[0] or (bound == hi[0] and strict):
                hi = (bound, strict)
    if lo is None or hi is None:
        raise Unbounded()
    return (lo[0], lo[1], hi[0], hi[1])


# ---------------------------------------------------------------------------
# The search


class _Solver:
    def __init__(
        self,
        gp: GroundProblem,
        st: PartialStructure,
        budget: Budget,
        extra: tuple[Formula, ...] = (),
        allowed_ids: Optional[frozenset[str]] = None,
        extra_cells: tuple[Cell, ...] = (),
        proto: Optional["_Solver"] = None,
    ):
        self.gp = gp
        self.budget = budget
        self.extra = tuple(extra)
        if proto is not None:
            # share the precomputed root (cells, initial state, fixed model,
            # unit-propagated base clauses) across repeated queries on the
            # same problem; only `extra` / the goal may differ
            self.proto = proto.proto
            self.cells = self.proto.cells
            self.base_forms = self.proto.base_forms
            self.init = self.proto.init
            self.fixed_model = self.proto.fixed_model
            self.open_keys = self.proto.open_keys
        else:
            self.proto = self
            self.cells = dict(gp.cells)
            for c in extra_cells:
                self.cells[c.key] = c
            self.base_forms = [
                c.formula
                for c in gp.clauses
                if allowed_ids is None or c.source_id in allowed_ids
            ]
            self.init = _initial_state(gp, st, self.cells)
            self._root: Optional[Union[str, tuple[_State, list[Formula]]]] = None
            # last model's discrete choices, tried first on later queries
            # sharing this proto (deterministic: a pure function of the
            # query sequence)
            self.phase: dict[CellKey, Value] = {}
            self.fixed_model: Model = {}
            self.open_keys: list[CellKey] = []
            if self.init is not None:
                for key, cell in self.cells.items():
                    if key[0].startswith("#"):
                        continue
                    if cell.discrete:
                        if len(self.init.domains[key]) == 1:
                            self.fixed_model[key] = self.init.domains[key][0]
                        else:
                            self.open_keys.append(key)
                    else:
                        lo, hi = self.init.ranges[key]
                        if lo == hi:
                            self.fixed_model[key] = lo
                        else:
                            self.open_keys.append(key)
        self.goal: Optional[Term] = None
        self.direction = "minimize"
        # incumbent (value, attained) during branch-and-bound with a goal
        self.best_val: Optional[tuple[Fraction, bool]] = None

    def _ensure_root(self):
        """Initial state + unit-propagated base clauses, or 'unsat'; cached."""
        if self._root is None:
            if self.init is None:
                self._root = "unsat"
            else:
                state = self.init.copy()
                entries = [(f, _form_syms(f)) for f in self.base_forms]
                try:
                    pending = _propagate_units(entries, state, self.cells, self.budget)
                except _Conflict:
                    self._root = "unsat"
                else:
                    self._root = (state, pending)
        return self._root

    def solve(self):
        """Returns None (unsat) or (model, goal_value|None, attained)."""
        root = self.proto._ensure_root()
        if root == "unsat":
            return None
        state, pending = root
        state = state.copy()
        pending = list(pending)
        if self.extra:
            dirty: set[str] = set()
            for e in self.extra:
                syms = _form_syms(e)
                pending.append((e, syms))
                dirty |= syms
            try:
                pending = _propagate_units(pending, state, self.cells, self.budget, dirty)
            except _Conflict:
                return None
        return self._search(pending, state)

    def _search(self, pending: list[PClause], state: _State):
        self.budget.tick()
        if self._goal_pruned(state):
            return None
        # branch on the undecided discrete cell occurring in the most pending
        # clauses: deciding it enables the most clause evaluations (cells that
        # gate many clauses, like a selection symbol, are decided first)
        counts: dict[CellKey, int] = {}
        scan: list = [f for f, _ in pending]
        if self.goal is not None:
            # the goal term may mention still-undecided discrete cells
            scan.append(self.goal)
        for f in scan:
            seen: set[CellKey] = set()
            _undecided_discrete_cells(f, state, self.cells, seen)
            for k in seen:
                counts[k] = counts.get(k, 0) + 1
        if not counts:
            return self._linear_stage(pending, state)
        key = min(counts, key=lambda k: (-counts[k], _cell_sort_key(k)))
        best = None
        dom = state.domains[key]
        ph = self.proto.phase.get(key)
        if ph is not None and ph in dom and dom[0] != ph:
            dom = (ph,) + tuple(v for v in dom if v != ph)
        for v in dom:
            child = state.copy()
            child.assign[key] = v
            child.domains[key] = (v,)
            try:
                child_pending = _propagate_units(
                    list(pending), child, self.cells, self.budget, {key[0]}
                )
            except _Conflict:
                continue
            if self._goal_pruned(child):
                continue
            res = self._search(child_pending, child)
            if res is None:
                continue
            if self.goal is None:
                return res
            if self._better(best, res):
                best = res
                self._note_incumbent(res)
        return best

    def _better(self, incumbent, candidate) -> bool:
        """Whether `candidate` (model, value, attained) beats `incumbent`."""
        if incumbent is None:
            return True
        if candidate[1] != incumbent[1]:
            if self.direction == "minimize":
                return candidate[1] < incumbent[1]
            return candidate[1] > incumbent[1]
        return candidate[2] and not incumbent[2]

    def _note_incumbent(self, res) -> None:
        cand = (res[1], res[2])
        if (
            self.best_val is None
            or self._better((None, self.best_val[0], self.best_val[1]), (None,) + cand)
        ):
            self.best_val = cand

    def _goal_pruned(self, state: _State) -> bool:
        """Whether the goal's value range in `state` cannot beat the
        incumbent (equal values still count when attainment could improve)."""
        if self.goal is None or self.best_val is None:
            return False
        gb = _term_bounds(self.goal, state, self.cells)
        if gb is None:
            return False
        lo, hi = gb
        bv, batt = self.best_val
        if self.direction == "minimize":
            return lo > bv or (lo == bv and batt)
        return hi < bv or (hi == bv and batt)

    def _nonlinear_cell(self, f, state: _State) -> Optional[CellKey]:
        """A free continuous cell sitting in a nonlinear position (divisor,
        or factor of a product of two non-constant terms), if any."""
        if isinstance(f, (NumLit, EnumLit, BoolLit)):
            return None
        if isinstance(f, Arith):
            if f.op in ("*", "/"):
                lk = self._free_rat_cells(f.args[0], state)
                rk = self._free_rat_cells(f.args[1], state)
                if f.op == "/" and rk:
                    return rk[0]
                if f.op == "*" and lk and rk:
                    return rk[0]
            for a in f.args:
                k = self._nonlinear_cell(a, state)
                if k is not None:
                    return k
            return None
        if isinstance(f, App):
            for a in f.args:
                k = self._nonlinear_cell(a, state)
                if k is not None:
                    return k
            return None
        if isinstance(f, Cmp):
            return self._nonlinear_cell(f.lhs, state) or self._nonlinear_cell(f.rhs, state)
        if isinstance(f, Not):
            return self._nonlinear_cell(f.body, state)
        if isinstance(f, (And, Or)):
            for p in f.parts:
                k = self._nonlinear_cell(p, state)
                if k is not None:
                    return k
            return None
        if isinstance(f, (Implies, Iff)):
            return self._nonlinear_cell(f.lhs, state) or self._nonlinear_cell(f.rhs, state)
        raise TypeError(f"unexpected node: {f!r}")

    def _free_rat_cells(self, t: Term, state: _State) -> list[CellKey]:
        out: list[CellKey] = []

        def walk(node):
            if isinstance(node, App):
                k = _resolve_cell(node, state, self.cells)
                if k is not None and self.cells[k].kind == "rat":
                    lo, hi = state.ranges[k]
                    if lo != hi:
                        out.append(k)
                for a in node.args:
                    walk(a)
            elif isinstance(node, Arith):
                for a in node.args:
                    walk(a)

        walk(t)
        return out

    def _linear_stage(self, pending: list[Formula], state: _State):
        # Nonlinear residuals (division by or products of undetermined
        # continuous cells) are outside the linear fragment; pin the
        # offending cell to a handful of trial values and retry.  Sound,
        # complete only once the nonlinearity is determined.
        scan: list = [f for f, _ in pending]
        if self.goal is not None:
            scan.append(self.goal)
        for f in scan:
            key = self._nonlinear_cell(f, state)
            if key is None:
                continue
            lo, hi = state.ranges[key]
            if self.goal is not None and self.direction == "maximize":
                order = (hi, Fraction(1), (lo + hi) / 2, lo)
            elif self.goal is not None:
                order = (lo, Fraction(1), (lo + hi) / 2, hi)
            else:
                order = (Fraction(1), (lo + hi) / 2, lo, hi)
            trials = []
            for v in order:
                if lo <= v <= hi and v not in trials:
                    trials.append(v)
            best = None
            for v in trials:
                child = state.copy()
                child.ranges[key] = (v, v)
                try:
                    child_pending = _propagate_units(
                        list(pending), child, self.cells, self.budget, {key[0]}
                    )
                except (_Conflict, ZeroDivisionError):
                    continue
                if self._goal_pruned(child):
                    continue
                try:
                    res = self._search(child_pending, child)
                except ZeroDivisionError:
                    continue
                if res is None:
                    continue
                if self.goal is None:
                    return res
                if self._better(best, res):
                    best = res
                    self._note_incumbent(res)
            return best
        # collect involved continuous cells
        involved: set[CellKey] = set()

        def walk(t):
            if isinstance(t, App):
                k = _resolve_cell(t, state, self.cells)
                if k is not None and self.cells[k].kind == "rat":
                    lo, hi = state.ranges[k]
                    if lo != hi:
                        involved.add(k)
                for a in t.args:
                    walk(a)
            elif isinstance(t, Arith):
                for a in t.args:
                    walk(a)
            elif isinstance(t, Cmp):
                walk(t.lhs)
                walk(t.rhs)
            elif isinstance(t, Not):
                walk(t.body)
            elif isinstance(t, (And, Or)):
                for p in t.parts:
                    walk(p)
            elif isinstance(t, (Implies, Iff)):
                walk(t.lhs)
                walk(t.rhs)

        for f, _ in pending:
            walk(f)
        goal_expr: Optional[LinExpr] = None
        if self.goal is not None:
            goal_expr = _linearize(self.goal, state, self.cells)
            for k in goal_expr[1]:
                lo, hi = state.ranges[k]
                if lo != hi:
                    involved.add(k)
                else:
                    goal_expr = (goal_expr[0] + goal_expr[1][k] * lo,
                                 {kk: vv for kk, vv in goal_expr[1].items() if kk != k})
        bounds = {k: state.ranges[k] for k in sorted(involved, key=_cell_sort_key)}
        cons0: list = []
        if goal_expr is not None and self.best_val is not None:
            # incumbent bound (closed, to keep attainment ties explorable)
            const, coeffs = goal_expr
            bv = self.best_val[0]
            if self.direction == "minimize":
                cons0.append((dict(coeffs), const - bv, False))
            else:
                cons0.append(({k: -v for k, v in coeffs.items()}, bv - const, False))
        result = self._dpll(pending, state, {}, cons0, bounds, goal_expr)
        if result is None:
            return None
        witness, value, attained = result
        model = self._complete_model(state, witness)
        return (model, value, attained)

    def _dpll(self, pending, state, amap, cons, bounds, goal_expr):
        self.budget.tick()
        undecided = None
        for f, _ in pending:
            v, k = _eval_atoms(f, state, self.cells, amap)
            if v is False:
                return None
            if v is None and undecided is None:
                undecided = k
        if undecided is None:
            witness = _fm_witness(cons, bounds)
            if witness is None:
                return None
            if goal_expr is None:
                return (witness, None, True)
            const, coeffs = goal_expr
            if not coeffs:
                return (witness, const, True)
            lo, lo_s, hi, hi_s = _project_onto(cons, bounds, goal_expr)
            if self.direction == "minimize":
                best, strict = lo, lo_s
            else:
                best, strict = hi, hi_s
            if strict:
                return (witness, best, False)
            pin1 = dict(coeffs)
            pin2 = {k: -v for k, v in coeffs.items()}
            pinned = cons + [
                (pin1, const - best, False),
                (pin2, best - const, False),
            ]
            witness = _fm_witness(pinned, bounds)
            assert witness is not None
            return (witness, best, True)
        best = None
        for polarity in (True, False):
            for bundle in _atom_constraints(undecided, polarity):
                new_cons = cons + list(bundle)
                if _fm_witness(new_cons, bounds) is None:
                    continue
                res = self._dpll(pending, state, {**amap, undecided: polarity}, new_cons, bounds, goal_expr)
                if res is None:
                    continue
                if goal_expr is None:
                    return res
                if self._better(best, res):
                    best = res
                    self._note_incumbent(res)
        if goal_expr is not None:
            return best
        return None

    def _complete_model(self, state: _State, witness: dict[CellKey, Fraction]) -> Model:
        model = dict(self.fixed_model)
        phase = self.proto.phase
        for key in self.open_keys:
            cell = self.cells[key]
            if cell.discrete:
                v = state.assign.get(key, state.domains[key][0])
                model[key] = v
                phase[key] = v
            elif key in witness:
                model[key] = witness[key]
            else:
                model[key] = state.ranges[key][0]
        return model


# ---------------------------------------------------------------------------
# Public inference operations


def solve(
    gp: GroundProblem,
    st: PartialStructure,
    budget: Optional[Budget] = None,
    extra: tuple[Formula, ...] = (),
    allowed_ids: Optional[frozenset[str]] = None,
    extra_cells: tuple[Cell, ...] = (),
    proto: Optional[_Solver] = None,
) -> Optional[Model]:
    s = _Solver(gp, st, budget or Budget(), extra, allowed_ids, extra_cells, proto=proto)
    res = s.solve()
    return None if res is None else res[0]


def check(gp: GroundProblem, st: PartialStructure, budget: Optional[Budget] = None):
    """('satisfiable', witness model) or ('unsatisfiable', None)."""
    m = solve(gp, st, budget)
    return ("satisfiable", m) if m is not None else ("unsatisfiable", None)


def expand(
    gp: GroundProblem, st: PartialStructure, budget: Optional[Budget] = None, seed: int = 0
) -> Optional[PartialStructure]:
    """Total structure extending st, or None when unsatisfiable.

    Fully deterministic by the fixed value ordering; `seed` is accepted for
    interface stability and does not influence the result.
    """
    m = solve(gp, st, budget)
    if m is None:
        return None
    have = set(st.exact_values().keys())
    extra = tuple(
        Assignment(sym, args, m[(sym, args)], "propagated")
        for (sym, args) in m
        if (sym, args) not in have
    )
    return st.with_assignments(extra)


def optimize(
    gp: GroundProblem,
    st: PartialStructure,
    goal: OptimizationGoal,
    budget: Optional[Budget] = None,
    warm_models: tuple[Model, ...] = (),
    proto: Optional[_Solver] = None,
) -> Optional[tuple[Model, Fraction]]:
    """Global optimum over all models extending st, or None when unsat.

    Branch-and-bound: the search keeps the best attained goal value so far
    and prunes branches whose goal bounds cannot beat it; each leaf region
    contributes its exact optimum via projection.  `warm_models` (known
    models of the same problem) seed the incumbent for pruning."""
    budget = budget or Budget()
    s = _Solver(gp, st, budget, proto=proto)
    s.goal = goal.term
    s.direction = "minimize" if goal.direction == "minimize" else "maximize"
    seed: Optional[tuple[Model, Fraction]] = None
    for m in warm_models:
        v = _eval_in_model(goal.term, m)
        if v is None:
            continue
        if seed is None or (v < seed[1] if s.direction == "minimize" else v > seed[1]):
            seed = (m, v)
    if seed is not None:
        s.best_val = (seed[1], True)
    res = s.solve()
    if res is None:
        if seed is not None:
            # the search found nothing beating the warm incumbent
            return seed
        return None
    model, value, attained = res
    assert value is not None
    if not attained:
        raise OptimumNotAttained(value)
    return (model, value)


def _eval_in_model(t: Term, m: Model) -> Optional[Value]:
    if isinstance(t, NumLit):
        return t.value
    if isinstance(t, EnumLit):
        return t.value
    if isinstance(t, App):
        args = tuple(_eval_in_model(a, m) for a in t.args)
        if any(a is None for a in args):
            return None
        return m.get((t.symbol, args))
    if isinstance(t, Arith):
        vals = [_eval_in_model(a, m) for a in t.args]
        if any(not isinstance(v, Fraction) for v in vals):
            return None
        a, b = vals  # type: ignore[misc]
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        if t.op == "*":
            return a * b
        if b == 0:
            return None
        return a / b


def _assume_formula(key: CellKey, value: Value) -> Formula:
    args = tuple(NumLit(a) if isinstance(a, Fraction) else EnumLit(a) for a in key[1])
    lit = NumLit(value) if isinstance(value, Fraction) else EnumLit(value)
    return Cmp("=", App(key[0], args), lit)


def _cell_term(key: CellKey) -> Term:
    args = tuple(NumLit(a) if isinstance(a, Fraction) else EnumLit(a) for a in key[1])
    return App(key[0], args)


def propagate(
    gp: GroundProblem,
    st: PartialStructure,
    budget: Optional[Budget] = None,
    keys: Optional[list[CellKey]] = None,
    model_pool: Optional[list[Model]] = None,
) -> PropagationResult:
    """Complete propagation: a value survives iff some total model extending
    st assigns it; continuous cells report the convex hull of feasible
    values.  `keys` restricts the report to the given cells.

    `model_pool`, when given, must hold models of the same ground problem
    (e.g. from an earlier propagation of the same session); entries
    conforming to `st` seed the witness cache, and the pool is updated in
    place with the witnesses found here."""
    budget = budget or Budget()
    proto = _Solver(gp, st, budget)
    models: list[Model] = []
    if model_pool:
        exact0 = st.exact_values()
        restr0 = st.interval_restrictions()
        for m in model_pool:
            if all(m.get(k, v) == v for k, v in exact0.items()) and all(
                k not in m
                or not isinstance(m[k], Fraction)
                or iv.lo <= m[k] <= iv.hi
                for k, iv in restr0.items()
            ):
                models.append(m)
    if not models:
        first = solve(gp, st, budget, proto=proto)
        if first is None:
            return PropagationResult((), {}, {}, "inconsistent")
        models.append(first)
    exact = st.exact_values()
    restrictions = st.interval_restrictions()
    consequences: list[Assignment] = []
    eliminated: dict[CellKey, tuple[Value, ...]] = {}
    numeric_bounds: dict[CellKey, Interval] = {}
    targets = keys if keys is not None else list(gp.cells.keys())

    # --- discrete cells, all together: every witness model pins every cell,
    # so a model found for one candidate value usually settles candidates of
    # many other cells for free.  Cells with the largest domains go first to
    # seed the witness pool with the most diverse models.
    initial_of: dict[CellKey, list[Value]] = {}
    for key in targets:
        cell = gp.cells[key]
        if key in exact or not cell.discrete:
            continue
        initial = list(cell.candidates)
        if key in restrictions:
            iv = restrictions[key]
            initial = [
                v for v in initial if not isinstance(v, Fraction) or iv.lo <= v <= iv.hi
            ]
        initial_of[key] = initial
    discrete_order = sorted(
        initial_of, key=lambda k: (-len(initial_of[k]), targets.index(k))
    )
    witnessed: dict[CellKey, set[Value]] = {k: set() for k in initial_of}
    pending_pairs: list[tuple[CellKey, Value]] = []
    for key in discrete_order:
        wanted = set(initial_of[key])
        seen = witnessed[key]
        for m in models:
            v = m.get(key)
            if v in wanted:
                seen.add(v)
        for v in initial_of[key]:
            if v in seen:
                continue
            m = _flip_witness(gp, key, v, models)
            if m is not None:
                models.append(m)
                seen.add(v)
            else:
                pending_pairs.append((key, v))
    # narrow per-pair probes are cheapest while pairs keep turning out
    # satisfiable or refutable by root-level unit propagation; after two
    # consecutive refutations that needed real search, switch to block
    # mode, where one solve constrained to all still-unseen pairs either
    # witnesses some of them or refutes them all at once.  The mode choice
    # only affects speed — surviving/eliminated sets are exact either way.
    removed_pairs: set[tuple[CellKey, Value]] = set()
    unsat_streak = 0
    _CHEAP_UNSAT_S = 0.02

    def _absorb(m: Model) -> None:
        models.append(m)
        for k, seen_k in witnessed.items():
            v = m.get(k)
            if v is not None and v in initial_of[k]:
                seen_k.add(v)

    while pending_pairs:
        pending_pairs = [
            (k, v) for (k, v) in pending_pairs if v not in witnessed[k]
        ]
        if not pending_pairs:
            break
        if unsat_streak < 2 and len(pending_pairs) > 1:
            k, v = pending_pairs[0]
            t0 = time.perf_counter()
            m = solve(gp, st, budget, extra=(_assume_formula(k, v),), proto=proto)
            took = time.perf_counter() - t0
            if m is None:
                removed_pairs.add((k, v))
                pending_pairs.pop(0)
                if took > _CHEAP_UNSAT_S:
                    unsat_streak += 1
            else:
                _absorb(m)
                unsat_streak = 0
            continue
        alts = tuple(_assume_formula(k, v) for k, v in pending_pairs)
        extra = alts[0] if len(alts) == 1 else Or(alts)
        m = solve(gp, st, budget, extra=(extra,), proto=proto)
        if m is None:
            removed_pairs.update(pending_pairs)
            pending_pairs = []
        else:
            # satisfiable pairs remain: drop back to the cheap narrow probes
            _absorb(m)
            unsat_streak = 0

    for key in targets:
        cell = gp.cells[key]
        if key not in initial_of:
            continue
        initial = initial_of[key]
        surviving = [v for v in initial if v in witnessed[key]]
        removed = [v for v in initial if (key, v) in removed_pairs]
        if removed:
            eliminated[key] = tuple(removed)
        if len(surviving) == 1 and len(initial) > 1:
            consequences.append(Assignment(key[0], key[1], surviving[0], "propagated"))
        if cell.kind == "int" and surviving:
            nums = [v for v in surviving if isinstance(v, Fraction)]
            if nums:
                numeric_bounds.setdefault(key, Interval(min(nums), max(nums)))

    # --- continuous cells
    for key in targets:
        cell = gp.cells[key]
        if key in exact or cell.discrete:
            continue
        if True:
            term = _cell_term(key)
            base_lo, base_hi = cell.lo, cell.hi
            if key in restrictions:
                base_lo = max(base_lo, restrictions[key].lo)
                base_hi = min(base_hi, restrictions[key].hi)
            # an endpoint usually sits on the cell's box bound; confirming
            # that with one satisfiability probe is far cheaper than a full
            # branch-and-bound optimization
            lo = _probed_endpoint(gp, st, key, term, base_lo, budget, models, proto)
            if lo is None:
                lo = _hull_endpoint(gp, st, term, "minimize", budget, models, proto)
            hi = _probed_endpoint(gp, st, key, term, base_hi, budget, models, proto)
            if hi is None:
                hi = _hull_endpoint(gp, st, term, "maximize", budget, models, proto)
            if lo == hi:
                consequences.append(Assignment(key[0], key[1], lo, "propagated"))
            elif lo > base_lo or hi < base_hi:
                numeric_bounds[key] = Interval(lo, hi)
    if model_pool is not None:
        model_pool[:] = models[-64:]
    return PropagationResult(tuple(consequences), eliminated, numeric_bounds, "consistent")


def _flip_witness(gp, key, v, models) -> Optional[Model]:
    """Try to witness `key = v` by flipping only that cell in a cached model
    and re-checking every ground clause directly — far cheaper than a solve
    when the cell is loosely coupled (e.g. a free input choice)."""
    for m in models[:4]:
        m2 = dict(m)
        m2[key] = v
        if all(_holds_in_model(c.formula, m2) for c in gp.clauses):
            return m2
    return None


def _holds_in_model(f: Formula, m: Model) -> bool:
    if isinstance(f, BoolLit):
        return f.value
    if isinstance(f, Cmp):
        lv = _eval_in_model(f.lhs, m)
        rv = _eval_in_model(f.rhs, m)
        if lv is None or rv is None:
            return False  # an atom over an undefined value does not hold
        return _cmp_values(f.op, lv, rv)
    if isinstance(f, Not):
        return not _holds_in_model(f.body, m)
    if isinstance(f, And):
        return all(_holds_in_model(p, m) for p in f.parts)
    if isinstance(f, Or):
        return any(_holds_in_model(p, m) for p in f.parts)
    if isinstance(f, Implies):
        return not _holds_in_model(f.lhs, m) or _holds_in_model(f.rhs, m)
    if isinstance(f, Iff):
        return _holds_in_model(f.lhs, m) == _holds_in_model(f.rhs, m)
    raise TypeError(f"unexpected formula: {f!r}")


def _probed_endpoint(
    gp, st, key, term, bound, budget, models, proto
) -> Optional[Fraction]:
    """`bound` if some model attains the box bound (witness cache or one
    SAT probe), else None — meaning a genuine optimization is needed."""
    if any(m[key] == bound for m in models):
        return bound
    m = _flip_witness(gp, key, bound, models)
    if m is not None:
        models.append(m)
        return bound
    m = solve(gp, st, budget, extra=(Cmp("=", term, NumLit(bound)),), proto=proto)
    if m is None:
        return None
    models.append(m)
    return bound


def _hull_endpoint(gp, st, term, direction, budget, models=(), proto=None) -> Fraction:
    try:
        res = optimize(gp, st, OptimizationGoal(term, direction), budget, tuple(models), proto)
    except OptimumNotAttained as e:
        return e.value  # hull closure endpoint
    assert res is not None  # caller established satisfiability
    if isinstance(models, list) and res[0] not in models:
        models.append(res[0])
    return res[1]


def _negate_target(target: Assignment) -> Formula:
    term = _cell_term(target.key)
    if isinstance(target.value, Interval):
        return Or(
            (
                Cmp("<", term, NumLit(target.value.lo)),
                Cmp(">", term, NumLit(target.value.hi)),
            )
        )
    lit = NumLit(target.value) if isinstance(target.value, Fraction) else EnumLit(target.value)
    return Cmp("~=", term, lit)


def _shrink_core(
    gp: GroundProblem,
    background: PartialStructure,
    user: tuple[Assignment, ...],
    law_ids: tuple[str, ...],
    extra: tuple[Formula, ...],
    budget: Budget,
) -> tuple[tuple[Assignment, ...], tuple[str, ...]]:
    """Deletion-based shrinking to a subset-minimal unsatisfiable core."""

    def unsat(assignments: tuple[Assignment, ...], ids: tuple[str, ...]) -> bool:
        st = background.with_assignments(assignments)
        return solve(gp, st, budget, extra=extra, allowed_ids=frozenset(ids)) is None

    cur_a, cur_l = user, law_ids
    for a in list(user):
        trial = tuple(x for x in cur_a if x is not a)
        if unsat(trial, cur_l):
            cur_a = trial
    for i in list(law_ids):
        trial_l = tuple(x for x in cur_l if x != i)
        if unsat(cur_a, trial_l):
            cur_l = trial_l
    return cur_a, cur_l


def _law_labels(gp: GroundProblem, ids: tuple[str, ...]) -> tuple[tuple[str, str], ...]:
    seen = {}
    for c in gp.clauses:
        if c.source_id not in seen:
            seen[c.source_id] = c.label
    return tuple((i, seen.get(i, i)) for i in ids)


def _split_structure(st: PartialStructure) -> tuple[PartialStructure, tuple[Assignment, ...]]:
    background = PartialStructure(
        st.vocabulary, tuple(a for a in st.assignments if a.origin != "user")
    )
    return background, st.user_assignments()


def explain_value(
    gp: GroundProblem,
    st: PartialStructure,
    target: Assignment,
    budget: Optional[Budget] = None,
) -> Explanation:
    """Subset-minimal user assignments + laws that re-derive the target."""
    budget = budget or Budget()
    background, user = _split_structure(st)
    neg = (_negate_target(target),)
    all_ids = tuple(dict.fromkeys(c.source_id for c in gp.clauses))
    full = background.with_assignments(user)
    if solve(gp, full, budget, extra=neg) is not None:
        raise NotAConsequence(f"{target.symbol} is not entailed by the current structure")
    core_a, core_l = _shrink_core(gp, background, user, all_ids, neg, budget)
    return Explanation(core_a, _law_labels(gp, core_l), target)


def explain_inconsistency(
    gp: GroundProblem, st: PartialStructure, budget: Optional[Budget] = None
) -> Explanation:
    """Subset-minimal unsatisfiable core over user assignments and laws."""
    budget = budget or Budget()
    background, user = _split_structure(st)
    all_ids = tuple(dict.fromkeys(c.source_id for c in gp.clauses))
    if solve(gp, st, budget) is not None:
        raise ConsistentInput("the current structure is satisfiable")
    core_a, core_l = _shrink_core(gp, background, user, all_ids, (), budget)
    return Explanation(core_a, _law_labels(gp, core_l), "inconsistency")


def _mentions(f: Union[Formula, Term], key: CellKey) -> Optional[str]:
    """'static' if f applies key's symbol with exactly key's literal args,
    'dynamic' if it applies the symbol with non-literal args, else None."""
    found: Optional[str] = None

    def walk(node):
        nonlocal found
        if isinstance(node, App):
            if node.symbol == key[0]:
                vals = []
                literal = True
                for a in node.args:
                    if isinstance(a, NumLit):
                        vals.append(a.value)
                    elif isinstance(a, EnumLit):
                        vals.append(a.value)
                    else:
                        literal = False
                        break
                if literal and tuple(vals) == key[1]:
                    if found != "dynamic":
                        found = "static"
                elif not literal:
                    found = "dynamic"
            for a in node.args:
                walk(a)
        elif isinstance(node, Arith):
            for a in node.args:
                walk(a)
        elif isinstance(node, Cmp):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, (And, Or)):
            for p in node.parts:
                walk(p)
        elif isinstance(node, (Implies, Iff)):
            walk(node.lhs)
            walk(node.rhs)

    walk(f)
    return found


def _rewrite_cell(f, key: CellKey, alt_symbol: str):
    if isinstance(f, App):
        args = tuple(_rewrite_cell(a, key, alt_symbol) for a in f.args)
        if f.symbol == key[0]:
            vals = []
            for a in args:
                if isinstance(a, NumLit):
                    vals.append(a.value)
                elif isinstance(a, EnumLit):
                    vals.append(a.value)
            if tuple(vals) == key[1] and len(vals) == len(args):
                return App(alt_symbol, args)
        return App(f.symbol, args)
    if isinstance(f, (NumLit, EnumLit, BoolLit)):
        return f
    if isinstance(f, Arith):
        return Arith(f.op, tuple(_rewrite_cell(a, key, alt_symbol) for a in f.args))
    if isinstance(f, Cmp):
        return Cmp(f.op, _rewrite_cell(f.lhs, key, alt_symbol), _rewrite_cell(f.rhs, key, alt_symbol))
    if isinstance(f, Not):
        return Not(_rewrite_cell(f.body, key, alt_symbol))
    if isinstance(f, And):
        return And(tuple(_rewrite_cell(p, key, alt_symbol) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(_rewrite_cell(p, key, alt_symbol) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(_rewrite_cell(f.lhs, key, alt_symbol), _rewrite_cell(f.rhs, key, alt_symbol))
    if isinstance(f, Iff):
        return Iff(_rewrite_cell(f.lhs, key, alt_symbol), _rewrite_cell(f.rhs, key, alt_symbol))
    raise TypeError(f"unexpected node: {f!r}")


def relevance(
    gp: GroundProblem,
    st: PartialStructure,
    budget: Optional[Budget] = None,
    keys: Optional[list[CellKey]] = None,
) -> tuple[set[CellKey], set[CellKey]]:
    """(irrelevant, unknown) cells.  A cell is irrelevant iff no model's
    satisfaction can be changed by altering only that cell's value; cells
    whose exact test times out land in `unknown`, never in `irrelevant`."""
    budget = budget or Budget()
    irrelevant: set[CellKey] = set()
    unknown: set[CellKey] = set()
    targets = keys if keys is not None else list(gp.cells.keys())
    for key in targets:
        cell = gp.cells[key]
        mentioning: list[Formula] = []
        dynamic = False
        for c in gp.clauses:
            m = _mentions(c.formula, key)
            if m == "dynamic":
                dynamic = True
                break
            if m == "static":
                mentioning.append(c.formula)
        if dynamic:
            continue  # conservatively relevant
        if not mentioning:
            irrelevant.add(key)
            continue
        alt_symbol = f"#{key[0]}"
        if cell.discrete:
            alt = Cell(alt_symbol, key[1], cell.kind, cell.candidates)
        else:
            alt = Cell(alt_symbol, key[1], "rat", (), cell.lo, cell.hi)
        violated = Or(
            tuple(Not(_rewrite_cell(f, key, alt_symbol)) for f in mentioning)
        )
        try:
            m2 = solve(gp, st, budget, extra=(violated,), extra_cells=(alt,))
        except SolveTimeout:
            unknown.add(key)
            continue
        if m2 is None:
            irrelevant.add(key)
    return irrelevant, unknown
