"""Hand-built catalog fixtures shared by catalog and acceptance tests."""

from __future__ import annotations

from fractions import Fraction

from adhesive_selector.catalog import (
    ADHESIVE_PARAMS,
    SUBSTRATE_PARAMS,
    SENTINEL,
    AdhesiveRecord,
    Catalog,
    FamilyRecord,
    SubstrateRecord,
    generate_synthetic_catalog,
)

# Known parameter values for the "value on the adhesive itself" record (A1)
# and for the fully specified family (F) that A2 falls back to.  Values are
# chosen pairwise distinct so the tests can tell which source was used.
ADHESIVE_VALUES = {
    "Strength": Fraction(10),
    "MinOperatingTemp": Fraction(-10),
    "MaxOperatingTemp": Fraction(80),
    "MinApplicationTemp": Fraction(10),
    "MaxApplicationTemp": Fraction(30),
    "Elongation": Fraction(1),
    "Price": Fraction(60),
    "Viscosity": Fraction(5000),
    "MaxGapFill": Fraction(1),
    "CureTime": Fraction(48),
    "CureMethod": "cure_heat",
    "Form": "form_liquid",
    "SolventFree": "no",
    "FoodSafe": "no",
    "Transparent": "no",
    "Flexible": "no",
    "WaterResistance": "low",
    "ChemicalResistance": "low",
    "UVResistance": "low",
    "VibrationDamping": "low",
    "Paintable": "no",
}

FAMILY_VALUES = {
    "Strength": Fraction(30),
    "MinOperatingTemp": Fraction(-40),
    "MaxOperatingTemp": Fraction(200),
    "MinApplicationTemp": Fraction(20),
    "MaxApplicationTemp": Fraction(160),
    "Elongation": Fraction(3),
    "Price": Fraction(20),
    "Viscosity": Fraction(100),
    "MaxGapFill": Fraction(10),
    "CureTime": Fraction(2),
    "CureMethod": "cure_uv",
    "Form": "form_paste",
    "SolventFree": "yes",
    "FoodSafe": "yes",
    "Transparent": "yes",
    "Flexible": "yes",
    "WaterResistance": "high",
    "ChemicalResistance": "high",
    "UVResistance": "high",
    "VibrationDamping": "high",
    "Paintable": "yes",
}


def _unknown_params(specs):
    return {
        s.name: (SENTINEL if s.kind == "continuous" else s.unknown) for s in specs
    }


def three_case_catalog() -> Catalog:
    """Three adhesives covering the fallback cases for every parameter:
    a1 has every value on the adhesive itself, a2 inherits every value from
    its family, a3 has no value at either level ('ignored')."""
    fam_known = FamilyRecord("fam_known", dict(FAMILY_VALUES))
    fam_unknown = FamilyRecord("fam_unknown", _unknown_params(ADHESIVE_PARAMS))
    a1 = AdhesiveRecord("a1_direct", "fam_unknown", dict(ADHESIVE_VALUES))
    a2 = AdhesiveRecord("a2_family", "fam_known", _unknown_params(ADHESIVE_PARAMS))
    a3 = AdhesiveRecord("a3_ignored", "fam_unknown", _unknown_params(ADHESIVE_PARAMS))
    subs = tuple(
        SubstrateRecord(sid, _unknown_params(SUBSTRATE_PARAMS))
        for sid in ("sub_left", "sub_right")
    )
    return Catalog((a1, a2, a3), (fam_known, fam_unknown), subs)


def mini_catalog() -> Catalog:
    """First five adhesives of the seed-1 catalog with their families."""
    full = generate_synthetic_catalog(1)
    adhesives = full.adhesives[:5]
    fam_ids = {a.family for a in adhesives}
    families = tuple(f for f in full.families if f.id in fam_ids)
    # neutral substrates: fully unknown, so no substrate law can eliminate
    # an adhesive before any requirement is entered
    subs = tuple(
        SubstrateRecord(sid, _unknown_params(SUBSTRATE_PARAMS))
        for sid in ("sub_left", "sub_right")
    )
    return Catalog(adhesives, families, subs)
