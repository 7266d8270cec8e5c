"""Seeded random generator for small, fully discrete knowledge bases.

Used to compare the engine against the brute-force oracle: every generated
KB has at most 6 nullary symbols with domains of at most 5 values, so full
model enumeration stays cheap.
"""

from __future__ import annotations

import random
from fractions import Fraction

from adhesive_selector.model import (
    And,
    App,
    Assignment,
    BoolLit,
    Cmp,
    EnumLit,
    EnumType,
    Iff,
    Implies,
    IntType,
    LabeledFormula,
    Not,
    NumLit,
    Or,
    PartialStructure,
    SymbolDecl,
    Theory,
    Vocabulary,
)

_CMP_OPS = ("=", "~=", "<", "<=", ">", ">=")


def random_kb(seed: int):
    """(voc, theory, structure) for a random discrete KB."""
    rng = random.Random(seed)
    n_enum_types = rng.randint(1, 2)
    types = []
    for i in range(n_enum_types):
        n_const = rng.randint(2, 5)
        consts = tuple(f"c{seed}_{i}_{j}" for j in range(n_const))
        types.append(EnumType(f"E{i}", consts))
    lo = rng.randint(-2, 2)
    types.append(IntType("N", Fraction(lo), Fraction(lo + rng.randint(1, 4))))

    n_sym = rng.randint(2, 6)
    symbols = []
    for i in range(n_sym):
        t = rng.choice(types + [None])  # None -> Bool
        tname = "Bool" if t is None else t.name
        symbols.append(SymbolDecl(f"S{i}", (), tname, "Performance"))
    voc = Vocabulary(tuple(types), tuple(symbols))

    type_by_name = {t.name: t for t in types}

    def rand_atom():
        s = rng.choice(symbols)
        app = App(s.name, ())
        if s.result == "Bool":
            return Cmp("=", app, EnumLit(rng.choice(("true", "false"))))
        t = type_by_name[s.result]
        if isinstance(t, EnumType):
            # compare against a constant, or another symbol of the same type
            peers = [x for x in symbols if x.result == s.result and x.name != s.name]
            if peers and rng.random() < 0.3:
                rhs = App(rng.choice(peers).name, ())
            else:
                rhs = EnumLit(rng.choice(t.constants))
            return Cmp(rng.choice(("=", "~=")), app, rhs)
        val = NumLit(Fraction(rng.randint(int(t.lo), int(t.hi))))
        return Cmp(rng.choice(_CMP_OPS), app, val)

    def rand_formula(depth: int):
        if depth <= 0 or rng.random() < 0.4:
            return rand_atom()
        kind = rng.choice(("not", "and", "or", "implies", "iff"))
        if kind == "not":
            return Not(rand_formula(depth - 1))
        if kind == "and":
            return And(tuple(rand_formula(depth - 1) for _ in range(rng.randint(2, 3))))
        if kind == "or":
            return Or(tuple(rand_formula(depth - 1) for _ in range(rng.randint(2, 3))))
        if kind == "implies":
            return Implies(rand_formula(depth - 1), rand_formula(depth - 1))
        return Iff(rand_formula(depth - 1), rand_formula(depth - 1))

    formulas = tuple(
        LabeledFormula(f"f{i}", f"generated law {i}", rand_formula(2))
        for i in range(rng.randint(1, 4))
    )
    theory = Theory(formulas)

    assignments = []
    for s in symbols:
        if rng.random() < 0.3:
            if s.result == "Bool":
                v = rng.choice(("true", "false"))
            else:
                t = type_by_name[s.result]
                if isinstance(t, EnumType):
                    v = rng.choice(t.constants)
                else:
                    v = Fraction(rng.randint(int(t.lo), int(t.hi)))
            assignments.append(Assignment(s.name, (), v, "user"))
    st = PartialStructure(voc, tuple(assignments))
    return voc, theory, st
