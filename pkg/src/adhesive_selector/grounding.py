"""Instantiates a theory over its finite domains into a ground problem.

A *cell* is one ground decision point (symbol, argument tuple) together with
its domain: a candidate list for enumerations, booleans and bounded ints, or
a closed rational interval for continuous cells.  Clauses are the ground,
quantifier-free formulas, each tagged with its originating formula id and the
quantifier instantiation that produced it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .model import (
    And,
    App,
    EnumLit,
    EnumType,
    Formula,
    IntType,
    NumLit,
    Or,
    Quant,
    RatType,
    Term,
    Theory,
    TypeDecl,
    Value,
    Vocabulary,
    PartialStructure,
    substitute,
)

CellKey = tuple[str, tuple[Value, ...]]

DEFAULT_CELL_BUDGET = 10**6


class CapacityError(Exception):
    """Ground size exceeds the configured cell/clause budget."""


@dataclass(frozen=True)
class Cell:
    symbol: str
    args: tuple[Value, ...]
    kind: str  # 'enum' | 'int' | 'rat'
    candidates: tuple[Value, ...] = ()  # enum/int kinds
    lo: Fraction = Fraction(0)  # rat kind
    hi: Fraction = Fraction(0)

    @property
    def key(self) -> CellKey:
        return (self.symbol, self.args)

    @property
    def discrete(self) -> bool:
        return self.kind != "rat"


@dataclass(frozen=True)
class GroundClause:
    formula: Formula  # ground and quantifier-free
    source_id: str
    label: str
    instantiation: tuple[tuple[str, Value], ...] = ()


@dataclass(frozen=True)
class GroundProblem:
    vocabulary: Vocabulary
    cells: dict[CellKey, Cell]
    clauses: tuple[GroundClause, ...]


def type_domain(t: TypeDecl) -> tuple[Value, ...]:
    if isinstance(t, EnumType):
        return t.constants
    if isinstance(t, IntType):
        return tuple(Fraction(i) for i in range(int(t.lo), int(t.hi) + 1))
    raise CapacityError(f"type '{t.name}' is not finite")


def _to_term(v: Value) -> Term:
    return NumLit(v) if isinstance(v, Fraction) else EnumLit(v)


def _expand_inner(voc: Vocabulary, f: Formula) -> Formula:
    """Replace every quantifier below the top level with a finite conjunction
    or disjunction."""
    if isinstance(f, Quant):
        t = voc.type_named(f.type_name)
        assert t is not None
        parts = tuple(
            _expand_inner(voc, substitute(f.body, {f.var: _to_term(v)}))  # type: ignore[arg-type]
            for v in type_domain(t)
        )
        return And(parts) if f.kind == "all" else Or(parts)
    if isinstance(f, And):
        return And(tuple(_expand_inner(voc, p) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(_expand_inner(voc, p) for p in f.parts))
    from .model import Cmp, Iff, Implies, Not, BoolLit

    if isinstance(f, Not):
        return Not(_expand_inner(voc, f.body))
    if isinstance(f, Implies):
        return Implies(_expand_inner(voc, f.lhs), _expand_inner(voc, f.rhs))
    if isinstance(f, Iff):
        return Iff(_expand_inner(voc, f.lhs), _expand_inner(voc, f.rhs))
    return f  # Cmp, BoolLit


def ground(
    voc: Vocabulary,
    th: Theory,
    st: Optional[PartialStructure] = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> GroundProblem:
    """Expands quantifiers over the declared finite domains.

    Outermost universal quantifiers become separate clauses (one per
    instantiation, tagged for explanations); everything else is expanded in
    place.  `st` is accepted for interface symmetry; grounding itself does
    not depend on the structure.
    """
    cells: dict[CellKey, Cell] = {}
    count = 0
    for s in voc.symbols:
        result = voc.type_named(s.result)
        assert result is not None
        domains = []
        for tn in s.arg_types:
            t = voc.type_named(tn)
            assert t is not None
            domains.append(type_domain(t))
        size = 1
        for d in domains:
            size *= len(d)
        count += size
        if count > cell_budget:
            raise CapacityError(f"ground size exceeds budget of {cell_budget} cells")
        for args in itertools.product(*domains):
            if isinstance(result, RatType):
                cell = Cell(s.name, args, "rat", (), result.lo, result.hi)
            elif isinstance(result, IntType):
                cell = Cell(s.name, args, "int", type_domain(result))
            else:
                cell = Cell(s.name, args, "enum", result.constants)
            cells[cell.key] = cell

    clauses: list[GroundClause] = []
    for lf in th.formulas:
        stack: list[tuple[Formula, tuple[tuple[str, Value], ...]]] = [(lf.formula, ())]
        while stack:
            f, inst = stack.pop(0)
            if isinstance(f, Quant) and f.kind == "all":
                t = voc.type_named(f.type_name)
                assert t is not None
                for v in type_domain(t):
                    body = substitute(f.body, {f.var: _to_term(v)})
                    stack.append((body, inst + ((f.var, v),)))  # type: ignore[arg-type]
                continue
            clauses.append(GroundClause(_expand_inner(voc, f), lf.formula_id, lf.label, inst))
            if len(clauses) > cell_budget:
                raise CapacityError(f"ground size exceeds budget of {cell_budget} clauses")
    return GroundProblem(voc, cells, tuple(clauses))
