"""Declarative knowledge-base model: vocabularies, theories, partial structures.

All values are exact: enumeration constants are strings (booleans are the
constants "true"/"false" of the built-in Bool type), numbers are
`fractions.Fraction`.  Everything here is an immutable value; inference and
parsing live in their own modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

BOOL = "Bool"
TRUE = "true"
FALSE = "false"

CATEGORIES = ("Performance", "Production", "Bond", "SubstrateA", "SubstrateB", "Hidden")


# ---------------------------------------------------------------------------
# Types and symbols


@dataclass(frozen=True)
class EnumType:
    """Finite enumeration of named constants (Bool is the built-in instance)."""

    name: str
    constants: tuple[str, ...]


@dataclass(frozen=True)
class IntType:
    """Bounded integer interval [lo, hi]; finite, enumerable."""

    name: str
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class RatType:
    """Bounded rational interval [lo, hi]; continuous."""

    name: str
    lo: Fraction
    hi: Fraction


TypeDecl = Union[EnumType, IntType, RatType]

BOOL_TYPE = EnumType(BOOL, (FALSE, TRUE))


@dataclass(frozen=True)
class SymbolDecl:
    """A function symbol; a predicate is a symbol whose result type is Bool."""

    name: str
    arg_types: tuple[str, ...] = ()
    result: str = BOOL
    category: str = "Hidden"

    @property
    def is_predicate(self) -> bool:
        return self.result == BOOL


@dataclass(frozen=True)
class Vocabulary:
    types: tuple[TypeDecl, ...] = ()
    symbols: tuple[SymbolDecl, ...] = ()

    def type_named(self, name: str) -> Optional[TypeDecl]:
        if name == BOOL:
            return BOOL_TYPE
        for t in self.types:
            if t.name == name:
                return t
        return None

    def symbol_named(self, name: str) -> Optional[SymbolDecl]:
        for s in self.symbols:
            if s.name == name:
                return s
        return None

    def enum_constant_type(self, constant: str) -> Optional[TypeDecl]:
        """The (unique) enumeration declaring `constant`."""
        if constant in BOOL_TYPE.constants:
            return BOOL_TYPE
        for t in self.types:
            if isinstance(t, EnumType) and constant in t.constants:
                return t
        return None


# ---------------------------------------------------------------------------
# Terms and formulas


@dataclass(frozen=True)
class NumLit:
    value: Fraction


@dataclass(frozen=True)
class EnumLit:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple["Term", ...] = ()


@dataclass(frozen=True)
class Arith:
    op: str  # '+', '-', '*', '/', 'neg'
    args: tuple["Term", ...]


Term = Union[NumLit, EnumLit, Var, App, Arith]


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str  # '=', '~=', '<', '<=', '>', '>='
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Quant:
    kind: str  # 'all' or 'exists'
    var: str
    type_name: str
    body: "Formula"


Formula = Union[BoolLit, Cmp, Not, And, Or, Implies, Iff, Quant]

CMP_OPS = ("=", "~=", "<", "<=", ">", ">=")


def atom(term: Term) -> Formula:
    """A boolean-typed term used in formula position."""
    return Cmp("=", term, EnumLit(TRUE))


def free_vars(f: Union[Formula, Term], bound: frozenset[str] = frozenset()) -> set[str]:
    if isinstance(f, Var):
        return set() if f.name in bound else {f.name}
    if isinstance(f, (NumLit, EnumLit, BoolLit)):
        return set()
    if isinstance(f, (App, Arith)):
        out: set[str] = set()
        for a in f.args:
            out |= free_vars(a, bound)
        return out
    if isinstance(f, Cmp):
        return free_vars(f.lhs, bound) | free_vars(f.rhs, bound)
    if isinstance(f, Not):
        return free_vars(f.body, bound)
    if isinstance(f, (And, Or)):
        out = set()
        for p in f.parts:
            out |= free_vars(p, bound)
        return out
    if isinstance(f, (Implies, Iff)):
        return free_vars(f.lhs, bound) | free_vars(f.rhs, bound)
    if isinstance(f, Quant):
        return free_vars(f.body, bound | {f.var})
    raise TypeError(f"not a formula or term: {f!r}")


def substitute(f: Union[Formula, Term], env: dict[str, Term]) -> Union[Formula, Term]:
    """Capture-free substitution of variables by ground terms."""
    if isinstance(f, Var):
        return env.get(f.name, f)
    if isinstance(f, (NumLit, EnumLit, BoolLit)):
        return f
    if isinstance(f, App):
        return App(f.symbol, tuple(substitute(a, env) for a in f.args))
    if isinstance(f, Arith):
        return Arith(f.op, tuple(substitute(a, env) for a in f.args))
    if isinstance(f, Cmp):
        return Cmp(f.op, substitute(f.lhs, env), substitute(f.rhs, env))
    if isinstance(f, Not):
        return Not(substitute(f.body, env))
    if isinstance(f, And):
        return And(tuple(substitute(p, env) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, env) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(substitute(f.lhs, env), substitute(f.rhs, env))
    if isinstance(f, Iff):
        return Iff(substitute(f.lhs, env), substitute(f.rhs, env))
    if isinstance(f, Quant):
        inner = {k: v for k, v in env.items() if k != f.var}
        return Quant(f.kind, f.var, f.type_name, substitute(f.body, inner))
    raise TypeError(f"not a formula or term: {f!r}")


# ---------------------------------------------------------------------------
# Theories


@dataclass(frozen=True)
class LabeledFormula:
    formula_id: str
    label: str
    formula: Formula


@dataclass(frozen=True)
class Theory:
    formulas: tuple[LabeledFormula, ...] = ()

    def by_id(self, formula_id: str) -> Optional[LabeledFormula]:
        for lf in self.formulas:
            if lf.formula_id == formula_id:
                return lf
        return None


# ---------------------------------------------------------------------------
# Structures


Value = Union[str, Fraction]


@dataclass(frozen=True)
class Interval:
    """Closed rational interval restriction on a numeric cell."""

    lo: Fraction
    hi: Fraction

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None


ORIGINS = ("user", "propagated", "given")


@dataclass(frozen=True)
class Assignment:
    symbol: str
    args: tuple[Value, ...] = ()
    value: Union[Value, Interval] = TRUE
    origin: str = "given"

    @property
    def key(self) -> tuple[str, tuple[Value, ...]]:
        return (self.symbol, self.args)

    @property
    def is_interval(self) -> bool:
        return isinstance(self.value, Interval)


@dataclass(frozen=True)
class PartialStructure:
    vocabulary: Vocabulary
    assignments: tuple[Assignment, ...] = ()

    def exact_values(self) -> dict[tuple[str, tuple[Value, ...]], Value]:
        out: dict[tuple[str, tuple[Value, ...]], Value] = {}
        for a in self.assignments:
            if not a.is_interval:
                out[a.key] = a.value  # type: ignore[assignment]
        return out

    def interval_restrictions(self) -> dict[tuple[str, tuple[Value, ...]], Interval]:
        out: dict[tuple[str, tuple[Value, ...]], Interval] = {}
        for a in self.assignments:
            if a.is_interval:
                prev = out.get(a.key)
                cur = a.value if prev is None else prev.intersect(a.value)  # type: ignore[arg-type]
                if cur is None:
                    cur = a.value  # invariant violation; well_formed reports it
                out[a.key] = cur  # type: ignore[assignment]
        return out

    def user_assignments(self) -> tuple[Assignment, ...]:
        return tuple(a for a in self.assignments if a.origin == "user")

    def with_assignments(self, extra: Iterable[Assignment]) -> "PartialStructure":
        return replace(self, assignments=self.assignments + tuple(extra))


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class KbError:
    code: str
    message: str
    where: str = ""


def _numeric_type(t: Optional[TypeDecl]) -> bool:
    return isinstance(t, (IntType, RatType))


def infer_term_type(
    voc: Vocabulary, term: Term, var_types: dict[str, str], errs: list[KbError], where: str
) -> Optional[str]:
    """Returns a type name, the marker 'num' for numeric-literal terms, or None."""
    if isinstance(term, NumLit):
        return "num"
    if isinstance(term, EnumLit):
        t = voc.enum_constant_type(term.value)
        if t is None:
            errs.append(KbError("unknown-constant", f"unknown constant '{term.value}'", where))
            return None
        return t.name
    if isinstance(term, Var):
        tn = var_types.get(term.name)
        if tn is None:
            errs.append(KbError("free-variable", f"free variable '{term.name}'", where))
        return tn
    if isinstance(term, App):
        decl = voc.symbol_named(term.symbol)
        if decl is None:
            errs.append(KbError("unknown-symbol", f"unknown symbol '{term.symbol}'", where))
            return None
        if len(term.args) != len(decl.arg_types):
            errs.append(
                KbError(
                    "arity-mismatch",
                    f"'{term.symbol}' expects {len(decl.arg_types)} argument(s), got {len(term.args)}",
                    where,
                )
            )
            return decl.result
        for a, expected in zip(term.args, decl.arg_types):
            got = infer_term_type(voc, a, var_types, errs, where)
            if got is None:
                continue
            if not _compatible(voc, got, expected):
                errs.append(
                    KbError(
                        "type-mismatch",
                        f"argument of '{term.symbol}' has type {got}, expected {expected}",
                        where,
                    )
                )
        return decl.result
    if isinstance(term, Arith):
        if term.op == "/":
            divisor = term.args[1]
            if isinstance(divisor, NumLit) and divisor.value == 0:
                errs.append(KbError("bad-division", "division by literal zero", where))
        for a in term.args:
            got = infer_term_type(voc, a, var_types, errs, where)
            if got is not None and got != "num" and not _numeric_type(voc.type_named(got)):
                errs.append(KbError("type-mismatch", f"arithmetic over non-numeric type {got}", where))
        return "num"
    raise TypeError(f"not a term: {term!r}")


def _compatible(voc: Vocabulary, got: str, expected: str) -> bool:
    if got == expected:
        return True
    gt, et = voc.type_named(got) if got != "num" else None, voc.type_named(expected)
    if got == "num":
        return _numeric_type(et)
    if _numeric_type(gt) and _numeric_type(et):
        return True
    # a constant shared by name is impossible (constants are unique), so enum
    # types must match exactly
    return False


def check_formula(
    voc: Vocabulary, f: Formula, var_types: dict[str, str], errs: list[KbError], where: str
) -> None:
    if isinstance(f, BoolLit):
        return
    if isinstance(f, Cmp):
        lt = infer_term_type(voc, f.lhs, var_types, errs, where)
        rt = infer_term_type(voc, f.rhs, var_types, errs, where)
        if lt is None or rt is None:
            return
        if f.op in ("<", "<=", ">", ">="):
            for side in (lt, rt):
                if side != "num" and not _numeric_type(voc.type_named(side)):
                    errs.append(
                        KbError("type-mismatch", f"ordering comparison over type {side}", where)
                    )
        else:
            if not (_compatible(voc, lt, rt) or _compatible(voc, rt, lt)):
                errs.append(
                    KbError("type-mismatch", f"comparison between {lt} and {rt}", where)
                )
        return
    if isinstance(f, Not):
        check_formula(voc, f.body, var_types, errs, where)
        return
    if isinstance(f, (And, Or)):
        for p in f.parts:
            check_formula(voc, p, var_types, errs, where)
        return
    if isinstance(f, (Implies, Iff)):
        check_formula(voc, f.lhs, var_types, errs, where)
        check_formula(voc, f.rhs, var_types, errs, where)
        return
    if isinstance(f, Quant):
        t = voc.type_named(f.type_name)
        if t is None:
            errs.append(KbError("unknown-type", f"unknown type '{f.type_name}'", where))
        elif isinstance(t, RatType):
            errs.append(
                KbError("infinite-quantifier", f"cannot quantify over rational type '{t.name}'", where)
            )
        check_formula(voc, f.body, {**var_types, f.var: f.type_name}, errs, where)
        return
    raise TypeError(f"not a formula: {f!r}")


def _check_vocabulary(voc: Vocabulary, errs: list[KbError]) -> None:
    seen_types: set[str] = {BOOL}
    seen_constants: set[str] = set(BOOL_TYPE.constants)
    for t in voc.types:
        where = f"type {t.name}"
        if t.name in seen_types:
            errs.append(KbError("duplicate-type", f"duplicate type name '{t.name}'", where))
        seen_types.add(t.name)
        if isinstance(t, EnumType):
            if not t.constants:
                errs.append(KbError("empty-enum", f"enumeration '{t.name}' has no constants", where))
            if len(set(t.constants)) != len(t.constants):
                errs.append(KbError("duplicate-constant", f"duplicate constants in '{t.name}'", where))
            for c in t.constants:
                if c in seen_constants:
                    errs.append(
                        KbError("duplicate-constant", f"constant '{c}' declared twice", where)
                    )
                seen_constants.add(c)
        else:
            if t.lo > t.hi:
                errs.append(KbError("bad-interval", f"interval [{t.lo}, {t.hi}] is empty", where))
            if isinstance(t, IntType) and (t.lo.denominator != 1 or t.hi.denominator != 1):
                errs.append(KbError("bad-interval", f"int bounds of '{t.name}' must be integers", where))
    seen_symbols: set[str] = set()
    for s in voc.symbols:
        where = f"symbol {s.name}"
        if s.name in seen_symbols:
            errs.append(KbError("duplicate-symbol", f"duplicate symbol name '{s.name}'", where))
        seen_symbols.add(s.name)
        for tn in s.arg_types:
            t = voc.type_named(tn)
            if t is None:
                errs.append(KbError("unknown-type", f"unknown argument type '{tn}'", where))
            elif isinstance(t, RatType):
                errs.append(
                    KbError("infinite-argument", f"argument type '{tn}' is not finite", where)
                )
        if s.result != BOOL and voc.type_named(s.result) is None:
            errs.append(KbError("unknown-type", f"unknown result type '{s.result}'", where))
        if s.category not in CATEGORIES:
            errs.append(KbError("bad-category", f"unknown category '{s.category}'", where))


def _value_matches(voc: Vocabulary, value: Value, type_name: str, where: str, errs: list[KbError]) -> None:
    t = voc.type_named(type_name)
    if isinstance(value, Fraction):
        if isinstance(t, IntType) and value.denominator != 1:
            errs.append(KbError("type-mismatch", f"non-integer value {value} for int type", where))
        elif not _numeric_type(t):
            errs.append(KbError("type-mismatch", f"numeric value {value} for type {type_name}", where))
        elif value < t.lo or value > t.hi:
            errs.append(KbError("out-of-range", f"value {value} outside [{t.lo}, {t.hi}]", where))
    else:
        ct = voc.enum_constant_type(value)
        if ct is None:
            errs.append(KbError("unknown-constant", f"unknown constant '{value}'", where))
        elif ct.name != type_name:
            errs.append(
                KbError("type-mismatch", f"constant '{value}' of type {ct.name}, expected {type_name}", where)
            )


def _check_structure(voc: Vocabulary, st: PartialStructure, errs: list[KbError]) -> None:
    exact: dict[tuple[str, tuple[Value, ...]], Value] = {}
    intervals: dict[tuple[str, tuple[Value, ...]], Interval] = {}
    for a in st.assignments:
        where = f"assignment {a.symbol}{list(a.args) if a.args else ''}"
        decl = voc.symbol_named(a.symbol)
        if decl is None:
            errs.append(KbError("unknown-symbol", f"unknown symbol '{a.symbol}'", where))
            continue
        if a.origin not in ORIGINS:
            errs.append(KbError("bad-origin", f"unknown origin '{a.origin}'", where))
        if len(a.args) != len(decl.arg_types):
            errs.append(KbError("arity-mismatch", f"'{a.symbol}' takes {len(decl.arg_types)} argument(s)", where))
            continue
        for v, tn in zip(a.args, decl.arg_types):
            _value_matches(voc, v, tn, where, errs)
        if a.is_interval:
            iv: Interval = a.value  # type: ignore[assignment]
            if not _numeric_type(voc.type_named(decl.result)):
                errs.append(KbError("type-mismatch", "interval restriction on non-numeric symbol", where))
            elif iv.lo > iv.hi:
                errs.append(KbError("bad-interval", f"empty interval [{iv.lo}, {iv.hi}]", where))
            prev = intervals.get(a.key)
            if prev is not None and prev.intersect(iv) is None:
                errs.append(KbError("disjoint-intervals", "interval restrictions do not intersect", where))
            intervals[a.key] = iv if prev is None else (prev.intersect(iv) or iv)
        else:
            _value_matches(voc, a.value, decl.result, where, errs)  # type: ignore[arg-type]
            prev_v = exact.get(a.key)
            if prev_v is not None and prev_v != a.value:
                errs.append(KbError("conflicting-values", f"two exact values for {a.symbol}", where))
            exact[a.key] = a.value  # type: ignore[assignment]


def well_formed(voc: Vocabulary, th: Theory, st: PartialStructure) -> list[KbError]:
    """Every type error, unknown symbol, free variable and ill-typed assignment."""
    errs: list[KbError] = []
    _check_vocabulary(voc, errs)
    seen_ids: set[str] = set()
    for lf in th.formulas:
        where = f"formula {lf.formula_id}"
        if lf.formula_id in seen_ids:
            errs.append(KbError("duplicate-formula-id", f"duplicate id '{lf.formula_id}'", where))
        seen_ids.add(lf.formula_id)
        if not lf.label:
            errs.append(KbError("empty-label", "formula label must be non-empty", where))
        fv = free_vars(lf.formula)
        for v in sorted(fv):
            errs.append(KbError("free-variable", f"free variable '{v}'", where))
        if not fv:
            check_formula(voc, lf.formula, {}, errs, where)
        else:
            # still run the checker with the free variables untyped to surface
            # unknown symbols; free-variable errors were already reported
            check_formula(voc, lf.formula, {v: BOOL for v in fv}, errs, where)
    _check_structure(voc, st, errs)
    return errs


def merge(
    base: PartialStructure, delta: tuple[Assignment, ...]
) -> tuple[Optional[PartialStructure], list[KbError]]:
    """Union of assignments; conflicts name each key receiving two exact values."""
    conflicts: list[KbError] = []
    exact = base.exact_values()
    for a in delta:
        if a.is_interval:
            continue
        prev = exact.get(a.key)
        if prev is not None and prev != a.value:
            conflicts.append(
                KbError(
                    "conflicting-values",
                    f"{a.symbol}{list(a.args) if a.args else ''} assigned both {prev} and {a.value}",
                    f"assignment {a.symbol}",
                )
            )
        else:
            exact[a.key] = a.value  # type: ignore[assignment]
    if conflicts:
        return None, conflicts
    existing = set()
    for a in base.assignments:
        existing.add((a.key, str(a.value)))
    fresh = tuple(a for a in delta if (a.key, str(a.value)) not in existing)
    return base.with_assignments(fresh), []
