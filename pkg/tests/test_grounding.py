from fractions import Fraction

import pytest

import kbgen
from adhesive_selector.grounding import (
    DEFAULT_CELL_BUDGET,
    CapacityError,
    ground,
    type_domain,
)
from adhesive_selector.model import (
    EnumType,
    IntType,
    LabeledFormula,
    PartialStructure,
    Quant,
    RatType,
    SymbolDecl,
    Theory,
    Var,
    App,
    Vocabulary,
    atom,
)


def test_type_domain():
    assert type_domain(EnumType("C", ("a", "b"))) == ("a", "b")
    assert type_domain(IntType("N", Fraction(-1), Fraction(2))) == (
        Fraction(-1),
        Fraction(0),
        Fraction(1),
        Fraction(2),
    )
    with pytest.raises(CapacityError):
        type_domain(RatType("R", Fraction(0), Fraction(1)))


def test_ground_cells_and_clauses():
    voc, th, st = kbgen.random_kb(3)
    gp = ground(voc, th, st)
    assert set(gp.cells) == {(s.name, ()) for s in voc.symbols}
    assert len(gp.clauses) == len(th.formulas)
    for c in gp.clauses:
        assert th.by_id(c.source_id) is not None


def test_ground_expands_quantifiers():
    voc = Vocabulary(
        (EnumType("C", ("a", "b", "c")),),
        (SymbolDecl("P", ("C",), "Bool", "Hidden"),),
    )
    th = Theory(
        (LabeledFormula("f", "all P", Quant("all", "x", "C", atom(App("P", (Var("x"),))))),)
    )
    gp = ground(voc, th, PartialStructure(voc))
    # one cell per argument tuple, one clause per instantiation
    assert len(gp.cells) == 3
    assert len(gp.clauses) == 3
    assert {c.instantiation for c in gp.clauses} == {
        (("x", "a"),),
        (("x", "b"),),
        (("x", "c"),),
    }


def test_ground_capacity_budget():
    voc = Vocabulary(
        (IntType("Big", Fraction(0), Fraction(DEFAULT_CELL_BUDGET + 1)),),
        (SymbolDecl("F", ("Big",), "Bool", "Hidden"),),
    )
    with pytest.raises(CapacityError):
        ground(voc, Theory(), PartialStructure(voc))


def test_cell_kinds(gp):
    sel = gp.cells[("SelectedAdhesive", ())]
    assert sel.kind == "enum" and sel.discrete and len(sel.candidates) == 55
    strength = gp.cells[("MinBondStrength", ())]
    assert strength.kind == "rat" and not strength.discrete
    thickness = gp.cells[("BondThickness", ())]
    assert thickness.kind == "int" and thickness.candidates[0] == 1


def test_ground_is_deterministic():
    voc, th, st = kbgen.random_kb(11)
    g1 = ground(voc, th, st)
    g2 = ground(voc, th, st)
    assert list(g1.cells) == list(g2.cells)
    assert g1.clauses == g2.clauses
