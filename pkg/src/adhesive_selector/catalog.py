"""The adhesive-selection domain: catalog schema, a seeded synthetic catalog,
and construction of the selection knowledge base.

The catalog describes 55 adhesives grouped into 18 families, and 31
substrates.  Adhesives carry 21 parameters (10 continuous, 11 discrete),
substrates carry 11 (5 continuous, 6 discrete) — 15 continuous and 17
discrete parameters in total.  A continuous value of -1000 is the sentinel
for "unknown"; discrete parameters use a dedicated unknown constant of
their enumeration instead (written literally as ``unknown`` in catalog
files).

Unknown adhesive values fall back to the adhesive's family: for every
parameter p the knowledge base contains

    KnownAdhesive_p  <=>  adhesive's stored value is not the sentinel
    KnownFamily_p    <=>  family's stored value is not the sentinel
    Known_p          <=>  KnownAdhesive_p or KnownFamily_p
    KnownAdhesive_p  =>   Eff_p = adhesive's stored value
    not KnownAdhesive_p and KnownFamily_p  =>  Eff_p = family's stored value

and every requirement constraint on p is guarded by Known_p, so an adhesive
whose value is unknown at both levels is never eliminated by that
requirement.

The parameter schema below (names, units, ranges) is fixed here; the split
of the 15 continuous / 17 discrete parameters over adhesives and substrates
is a documented choice of this schema file.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from . import cdmn
from .grounding import GroundProblem
from .model import (
    And,
    App,
    Assignment,
    Cmp,
    EnumLit,
    EnumType,
    Formula,
    Iff,
    Implies,
    IntType,
    KbError,
    LabeledFormula,
    Not,
    NumLit,
    Or,
    PartialStructure,
    RatType,
    SymbolDecl,
    Theory,
    Value,
    Vocabulary,
    atom,
)

SENTINEL = Fraction(-1000)


# ---------------------------------------------------------------------------
# Parameter schema


@dataclass(frozen=True)
class ParamSpec:
    """One catalog parameter: a continuous range or a finite enumeration."""

    name: str
    kind: str  # 'continuous' | 'discrete'
    unit: str = ""
    lo: Fraction = Fraction(0)  # continuous only
    hi: Fraction = Fraction(0)
    type_name: str = ""  # discrete only: enum type holding the values
    unknown: str = ""  # discrete only: that type's unknown constant

    def is_unknown(self, v: Value) -> bool:
        return v == SENTINEL if self.kind == "continuous" else v == self.unknown


def _cont(name: str, unit: str, lo: int, hi: int) -> ParamSpec:
    return ParamSpec(name, "continuous", unit, Fraction(lo), Fraction(hi))


def _disc(name: str, type_name: str, unknown: str) -> ParamSpec:
    return ParamSpec(name, "discrete", type_name=type_name, unknown=unknown)


# Shared enumeration types for discrete parameters.  Enumeration constants
# are globally unique, so each value set carries its own unknown constant;
# `unknown` itself belongs to YesNo.  Catalog files always spell the unknown
# value `unknown` regardless of type.
ENUM_TYPES: dict[str, tuple[str, ...]] = {
    "YesNo": ("yes", "no", "unknown"),
    "Level": ("low", "medium", "high", "unknown_level"),
    "CureMethodT": ("cure_room_temp", "cure_heat", "cure_uv", "cure_two_part", "unknown_cure"),
    "FormT": ("form_liquid", "form_paste", "form_film", "form_tape", "unknown_form"),
    "SurfaceFinishT": ("surface_smooth", "surface_textured", "surface_rough", "unknown_surface"),
    "SupportT": ("fixed", "loose"),
    "OptFocusT": ("opt_none", "opt_lowest_price", "opt_highest_strength"),
}

_UNKNOWN_OF = {
    "YesNo": "unknown",
    "Level": "unknown_level",
    "CureMethodT": "unknown_cure",
    "FormT": "unknown_form",
    "SurfaceFinishT": "unknown_surface",
}

# 21 adhesive parameters: 10 continuous + 11 discrete.
ADHESIVE_PARAMS: tuple[ParamSpec, ...] = (
    _cont("Strength", "MPa", 0, 60),
    _cont("MinOperatingTemp", "degC", -100, 150),
    _cont("MaxOperatingTemp", "degC", -60, 400),
    _cont("MinApplicationTemp", "degC", -20, 60),
    _cont("MaxApplicationTemp", "degC", 0, 200),
    _cont("Elongation", "ratio", 0, 6),
    _cont("Price", "EUR/kg", 0, 100),
    _cont("Viscosity", "Pa.s", 0, 10000),
    _cont("MaxGapFill", "mm", 0, 25),
    _cont("CureTime", "h", 0, 96),
    _disc("CureMethod", "CureMethodT", "unknown_cure"),
    _disc("Form", "FormT", "unknown_form"),
    _disc("SolventFree", "YesNo", "unknown"),
    _disc("FoodSafe", "YesNo", "unknown"),
    _disc("Transparent", "YesNo", "unknown"),
    _disc("Flexible", "YesNo", "unknown"),
    _disc("WaterResistance", "Level", "unknown_level"),
    _disc("ChemicalResistance", "Level", "unknown_level"),
    _disc("UVResistance", "Level", "unknown_level"),
    _disc("VibrationDamping", "Level", "unknown_level"),
    _disc("Paintable", "YesNo", "unknown"),
)

# 11 substrate parameters: 5 continuous + 6 discrete.
SUBSTRATE_PARAMS: tuple[ParamSpec, ...] = (
    _cont("WaterAbsorption", "%", 0, 50),
    _cont("SurfaceEnergy", "mN/m", 10, 1000),
    _cont("Porosity", "%", 0, 100),
    _cont("MaxServiceTemp", "degC", 0, 500),
    _cont("ThermalExpansion", "um/(m.K)", 0, 300),
    _disc("SolventResistance", "Level", "unknown_level"),
    _disc("HeatSensitive", "YesNo", "unknown"),
    _disc("FlexibleSubstrate", "YesNo", "unknown"),
    _disc("SurfaceFinish", "SurfaceFinishT", "unknown_surface"),
    _disc("Conductive", "YesNo", "unknown"),
    _disc("Translucent", "YesNo", "unknown"),
)

N_ADHESIVES = 55
N_FAMILIES = 18
N_SUBSTRATES = 31

FAMILY_IDS: tuple[str, ...] = (
    "epoxy",
    "polyurethane",
    "cyanoacrylate",
    "acrylic",
    "silicone",
    "ms_polymer",
    "hot_melt",
    "pvac",
    "contact_adhesive",
    "anaerobic",
    "uv_acrylate",
    "polyimide",
    "phenolic",
    "rubber_based",
    "pressure_sensitive",
    "polysulfide",
    "plastisol",
    "starch_based",
)

SUBSTRATE_IDS: tuple[str, ...] = (
    "steel",
    "stainless_steel",
    "aluminum",
    "copper",
    "brass",
    "titanium",
    "zinc",
    "glass",
    "ceramic",
    "concrete",
    "stone",
    "wood_oak",
    "wood_pine",
    "plywood",
    "mdf",
    "cardboard",
    "paper",
    "leather",
    "cotton_fabric",
    "abs",
    "pvc",
    "polycarbonate",
    "pmma",
    "polyethylene",
    "polypropylene",
    "polystyrene",
    "nylon",
    "ptfe",
    "rubber_epdm",
    "carbon_composite",
    "glass_composite",
)


# ---------------------------------------------------------------------------
# Records


ParamMap = dict[str, Value]


@dataclass(frozen=True)
class AdhesiveRecord:
    id: str
    family: str
    params: ParamMap  # total over ADHESIVE_PARAMS


@dataclass(frozen=True)
class FamilyRecord:
    id: str
    params: ParamMap  # total over ADHESIVE_PARAMS


@dataclass(frozen=True)
class SubstrateRecord:
    id: str
    params: ParamMap  # total over SUBSTRATE_PARAMS


@dataclass(frozen=True)
class Catalog:
    adhesives: tuple[AdhesiveRecord, ...]
    families: tuple[FamilyRecord, ...]
    substrates: tuple[SubstrateRecord, ...]

    def validate(self) -> list[KbError]:
        errs: list[KbError] = []
        fam_ids = {f.id for f in self.families}
        for rec, specs, where in (
            [(a, ADHESIVE_PARAMS, f"adhesive {a.id}") for a in self.adhesives]
            + [(f, ADHESIVE_PARAMS, f"family {f.id}") for f in self.families]
            + [(s, SUBSTRATE_PARAMS, f"substrate {s.id}") for s in self.substrates]
        ):
            for spec in specs:
                if spec.name not in rec.params:
                    errs.append(KbError("missing-parameter", f"missing '{spec.name}'", where))
                    continue
                v = rec.params[spec.name]
                if spec.kind == "continuous":
                    if not isinstance(v, Fraction):
                        errs.append(KbError("bad-value", f"'{spec.name}' must be numeric", where))
                    elif v != SENTINEL and not (spec.lo <= v <= spec.hi):
                        errs.append(
                            KbError("out-of-range", f"'{spec.name}' = {v} outside range", where)
                        )
                elif v not in ENUM_TYPES[spec.type_name]:
                    errs.append(KbError("bad-value", f"'{spec.name}' = {v!r} not a constant", where))
            extra = set(rec.params) - {s.name for s in specs}
            if extra:
                errs.append(KbError("extra-parameter", f"unknown parameters {sorted(extra)}", where))
        for a in self.adhesives:
            if a.family not in fam_ids:
                errs.append(
                    KbError("unknown-family", f"family '{a.family}'", f"adhesive {a.id}")
                )
        return errs


# ---------------------------------------------------------------------------
# Synthetic catalog generation


def _tenth(rng, lo: Fraction, hi: Fraction) -> Fraction:
    """A uniform value in [lo, hi] with one decimal of precision."""
    return Fraction(rng.randrange(int(lo * 10), int(hi * 10) + 1), 10)


def _near(rng, base: Fraction, spec: ParamSpec) -> Fraction:
    """A value near `base`, clamped to the parameter's range."""
    span = (spec.hi - spec.lo) / 8
    v = base + _tenth(rng, -span, span)
    return min(max(v, spec.lo), spec.hi)


def _family_params(rng) -> ParamMap:
    params: ParamMap = {}
    for spec in ADHESIVE_PARAMS:
        if spec.kind == "continuous":
            params[spec.name] = _tenth(rng, spec.lo, spec.hi)
        else:
            choices = [c for c in ENUM_TYPES[spec.type_name] if c != spec.unknown]
            params[spec.name] = rng.choice(choices)
    # keep temperature windows ordered
    _order(params, rng, "MinOperatingTemp", "MaxOperatingTemp")
    _order(params, rng, "MinApplicationTemp", "MaxApplicationTemp")
    # families are always specified on strength and temperatures; other
    # family cells may be unknown with small probability
    protected = {
        "Strength",
        "MinOperatingTemp",
        "MaxOperatingTemp",
        "MinApplicationTemp",
        "MaxApplicationTemp",
    }
    for spec in ADHESIVE_PARAMS:
        if spec.name not in protected and rng.random() < 0.10:
            params[spec.name] = SENTINEL if spec.kind == "continuous" else spec.unknown
    return params


def _order(params: ParamMap, rng, lo_name: str, hi_name: str) -> None:
    lo, hi = params[lo_name], params[hi_name]
    if isinstance(lo, Fraction) and isinstance(hi, Fraction) and lo > hi:
        params[lo_name], params[hi_name] = hi, lo


def generate_synthetic_catalog(seed: int) -> Catalog:
    """Deterministic synthetic catalog: 55 adhesives / 18 families / 31
    substrates; ~20% of adhesive parameter cells marked unknown."""
    import random

    rng = random.Random(seed)
    families = tuple(FamilyRecord(fid, _family_params(rng)) for fid in FAMILY_IDS)
    by_id = {f.id: f for f in families}

    adhesives: list[AdhesiveRecord] = []
    for i in range(N_ADHESIVES):
        fid = FAMILY_IDS[i % N_FAMILIES]
        fam = by_id[fid]
        params: ParamMap = {}
        for spec in ADHESIVE_PARAMS:
            base = fam.params[spec.name]
            if spec.kind == "continuous":
                if base == SENTINEL:
                    params[spec.name] = _tenth(rng, spec.lo, spec.hi)
                else:
                    assert isinstance(base, Fraction)
                    params[spec.name] = _near(rng, base, spec)
            elif base == spec.unknown or rng.random() < 0.25:
                choices = [c for c in ENUM_TYPES[spec.type_name] if c != spec.unknown]
                params[spec.name] = rng.choice(choices)
            else:
                params[spec.name] = base
        _order(params, rng, "MinOperatingTemp", "MaxOperatingTemp")
        _order(params, rng, "MinApplicationTemp", "MaxApplicationTemp")
        # the unknown-marking step: ~20% of adhesive cells become unknown
        for spec in ADHESIVE_PARAMS:
            if rng.random() < 0.20:
                params[spec.name] = SENTINEL if spec.kind == "continuous" else spec.unknown
        adhesives.append(AdhesiveRecord(f"{fid}_{i + 1:02d}", fid, params))

    substrates: list[SubstrateRecord] = []
    for sid in SUBSTRATE_IDS:
        params = {}
        for spec in SUBSTRATE_PARAMS:
            if rng.random() < 0.10:
                params[spec.name] = SENTINEL if spec.kind == "continuous" else spec.unknown
            elif spec.kind == "continuous":
                params[spec.name] = _tenth(rng, spec.lo, spec.hi)
            else:
                choices = [c for c in ENUM_TYPES[spec.type_name] if c != spec.unknown]
                params[spec.name] = rng.choice(choices)
        substrates.append(SubstrateRecord(sid, params))

    cat = Catalog(tuple(adhesives), tuple(families), tuple(substrates))
    assert not cat.validate()
    return cat


# ---------------------------------------------------------------------------
# Catalog files (CSV, one table per entity kind)


def _fmt_cell(spec: ParamSpec, v: Value) -> str:
    from .parser import fmt_number

    if spec.kind == "discrete":
        return "unknown" if v == spec.unknown else str(v)
    assert isinstance(v, Fraction)
    return fmt_number(v)


def _parse_cell_value(spec: ParamSpec, text: str, where: str) -> Value:
    if spec.kind == "discrete":
        if text == "unknown":
            return spec.unknown
        if text not in ENUM_TYPES[spec.type_name]:
            raise ValueError(f"{where}: '{text}' is not a {spec.type_name} constant")
        return text
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"{where}: '{text}' is not a number") from None


def _write_table(records, specs: tuple[ParamSpec, ...], extra_cols: tuple[str, ...]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("id",) + extra_cols + tuple(s.name for s in specs))
    for rec in records:
        extras = tuple(getattr(rec, c) for c in extra_cols)
        w.writerow((rec.id,) + extras + tuple(_fmt_cell(s, rec.params[s.name]) for s in specs))
    return buf.getvalue()


def write_catalog(cat: Catalog, directory: Union[str, Path]) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "adhesives.csv").write_text(_write_table(cat.adhesives, ADHESIVE_PARAMS, ("family",)))
    (d / "families.csv").write_text(_write_table(cat.families, ADHESIVE_PARAMS, ()))
    (d / "substrates.csv").write_text(_write_table(cat.substrates, SUBSTRATE_PARAMS, ()))


def _read_table(text: str, specs: tuple[ParamSpec, ...], extra_cols: tuple[str, ...], kind: str):
    rows = list(csv.reader(io.StringIO(text)))
    expected = ["id", *extra_cols, *(s.name for s in specs)]
    if not rows or rows[0] != expected:
        raise ValueError(f"{kind} table: bad header, expected {expected}")
    out = []
    for row in rows[1:]:
        if len(row) != len(expected):
            raise ValueError(f"{kind} '{row[0] if row else '?'}': wrong column count")
        rid, extras = row[0], row[1 : 1 + len(extra_cols)]
        params = {
            spec.name: _parse_cell_value(spec, cell, f"{kind} '{rid}'")
            for spec, cell in zip(specs, row[1 + len(extra_cols) :])
        }
        out.append((rid, extras, params))
    return out


def read_catalog(directory: Union[str, Path]) -> Catalog:
    d = Path(directory)
    adhesives = tuple(
        AdhesiveRecord(rid, extras[0], params)
        for rid, extras, params in _read_table(
            (d / "adhesives.csv").read_text(), ADHESIVE_PARAMS, ("family",), "adhesive"
        )
    )
    families = tuple(
        FamilyRecord(rid, params)
        for rid, _, params in _read_table(
            (d / "families.csv").read_text(), ADHESIVE_PARAMS, (), "family"
        )
    )
    substrates = tuple(
        SubstrateRecord(rid, params)
        for rid, _, params in _read_table(
            (d / "substrates.csv").read_text(), SUBSTRATE_PARAMS, (), "substrate"
        )
    )
    cat = Catalog(adhesives, families, substrates)
    errs = cat.validate()
    if errs:
        raise ValueError("; ".join(f"{e.where}: {e.message}" for e in errs))
    return cat


# ---------------------------------------------------------------------------
# Knowledge-base construction


SELECTED = "SelectedAdhesive"

# (symbol, category, label) of the user-facing requirement tiles; constraint
# laws over them are built per-parameter below.
_T = True


def _app(name: str, *args) -> App:
    return App(name, tuple(args))


def _sel() -> App:
    return _app(SELECTED)


def _adh(p: ParamSpec) -> App:
    return _app("Adh" + p.name, _sel())


def _fam(p: ParamSpec) -> App:
    return _app("Fam" + p.name, _app("FamilyOf", _sel()))


def _eff(p: ParamSpec) -> App:
    return _app("Eff" + p.name)


def _unknown_lit(p: ParamSpec):
    return NumLit(SENTINEL) if p.kind == "continuous" else EnumLit(p.unknown)


def _store_type(p: ParamSpec) -> str:
    return p.type_name if p.kind == "discrete" else "T" + p.name + "Store"


def _value_type(p: ParamSpec) -> str:
    return p.type_name if p.kind == "discrete" else "T" + p.name


ELONGATION_TABLE = """
U MinElongationCalc
| Support || MinElongation |
| fixed   | deltaLength / BondThickness |
| loose   | 0 |
"""


def _lf(fid: str, label: str, f: Formula) -> LabeledFormula:
    return LabeledFormula(fid, label, f)


def build_kb(
    cat: Catalog,
) -> tuple[Vocabulary, Theory, PartialStructure]:
    """The selection KB: catalog data as given interpretations, the
    per-parameter fallback axioms, and the guarded requirement laws."""
    errs = cat.validate()
    if errs:
        raise ValueError("; ".join(f"{e.where}: {e.message}" for e in errs))

    types: list = [EnumType(n, cs) for n, cs in ENUM_TYPES.items()]
    types.append(EnumType("Adhesive", tuple(a.id for a in cat.adhesives)))
    types.append(EnumType("Family", tuple(f.id for f in cat.families)))
    types.append(EnumType("Substrate", tuple(s.id for s in cat.substrates)))
    for p in ADHESIVE_PARAMS + SUBSTRATE_PARAMS:
        if p.kind == "continuous":
            types.append(RatType(_store_type(p), min(SENTINEL, p.lo), p.hi))
            types.append(RatType(_value_type(p), p.lo, p.hi))
    types.append(RatType("TLength", Fraction(0), Fraction(10)))
    # whole-millimeter bond-line thickness classes; keeping this discrete
    # means the elongation division always has a determined divisor
    types.append(IntType("TThickness", Fraction(1), Fraction(5)))
    types.append(RatType("TElongationReq", Fraction(0), Fraction(100)))

    symbols: list[SymbolDecl] = [
        SymbolDecl(SELECTED, (), "Adhesive", "Hidden"),
        SymbolDecl("FamilyOf", ("Adhesive",), "Family", "Hidden"),
    ]
    for p in ADHESIVE_PARAMS:
        symbols.append(SymbolDecl("Adh" + p.name, ("Adhesive",), _store_type(p), "Hidden"))
        symbols.append(SymbolDecl("Fam" + p.name, ("Family",), _store_type(p), "Hidden"))
        symbols.append(SymbolDecl("Eff" + p.name, (), _value_type(p), "Hidden"))
        for flag in ("KnownAdhesive", "KnownFamily", "Known"):
            symbols.append(SymbolDecl(flag + p.name, (), "Bool", "Hidden"))
    for p in SUBSTRATE_PARAMS:
        symbols.append(SymbolDecl("Sub" + p.name, ("Substrate",), _store_type(p), "Hidden"))

    # user-facing requirement tiles
    reqs: list[tuple[str, str, str]] = [
        ("MinBondStrength", "TStrength", "Performance"),
        ("MinOperatingTemperature", "TMinOperatingTemp", "Performance"),
        ("MaxOperatingTemperature", "TMaxOperatingTemp", "Performance"),
        ("ApplicationTemperature", "TMaxApplicationTemp", "Production"),
        ("MaxPrice", "TPrice", "Performance"),
        ("MaxViscosity", "TViscosity", "Production"),
        ("GapFill", "TMaxGapFill", "Bond"),
        ("MaxCureTime", "TCureTime", "Production"),
        ("deltaLength", "TLength", "Bond"),
        ("BondThickness", "TThickness", "Bond"),
        ("Support", "SupportT", "Bond"),
        ("MinElongation", "TElongationReq", "Bond"),
        ("ReqCureMethod", "CureMethodT", "Production"),
        ("ReqForm", "FormT", "Production"),
        ("ReqSolventFree", "YesNo", "Production"),
        ("ReqFoodSafe", "YesNo", "Performance"),
        ("ReqTransparent", "YesNo", "Bond"),
        ("ReqFlexible", "YesNo", "Bond"),
        ("ReqWaterResistance", "Level", "Performance"),
        ("ReqChemicalResistance", "Level", "Performance"),
        ("ReqUVResistance", "Level", "Performance"),
        ("ReqVibrationDamping", "Level", "Bond"),
        ("ReqPaintable", "YesNo", "Production"),
        ("SubstrateA", "Substrate", "SubstrateA"),
        ("SubstrateB", "Substrate", "SubstrateB"),
        ("OptimizationFocus", "OptFocusT", "Performance"),
    ]
    for name, tname, category in reqs:
        symbols.append(SymbolDecl(name, (), tname, category))

    voc = Vocabulary(tuple(types), tuple(symbols))

    # --- fallback axioms, one set per adhesive parameter
    forms: list[LabeledFormula] = []
    for p in ADHESIVE_PARAMS:
        u = _unknown_lit(p)
        forms.append(
            _lf(
                f"ka_{p.name}",
                f"{p.name} is specified for the selected adhesive",
                Iff(atom(_app("KnownAdhesive" + p.name)), Cmp("~=", _adh(p), u)),
            )
        )
        forms.append(
            _lf(
                f"kf_{p.name}",
                f"{p.name} is specified for the selected adhesive's family",
                Iff(atom(_app("KnownFamily" + p.name)), Cmp("~=", _fam(p), u)),
            )
        )
        forms.append(
            _lf(
                f"k_{p.name}",
                f"{p.name} is known (directly or via the family)",
                Iff(
                    atom(_app("Known" + p.name)),
                    Or((atom(_app("KnownAdhesive" + p.name)), atom(_app("KnownFamily" + p.name)))),
                ),
            )
        )
        forms.append(
            _lf(
                f"ea_{p.name}",
                f"effective {p.name} is the selected adhesive's own value",
                Implies(atom(_app("KnownAdhesive" + p.name)), Cmp("=", _eff(p), _adh(p))),
            )
        )
        forms.append(
            _lf(
                f"ef_{p.name}",
                f"effective {p.name} falls back to the family value",
                Implies(
                    And(
                        (
                            Not(atom(_app("KnownAdhesive" + p.name))),
                            atom(_app("KnownFamily" + p.name)),
                        )
                    ),
                    Cmp("=", _eff(p), _fam(p)),
                ),
            )
        )
        if p.kind == "discrete":
            forms.append(
                _lf(
                    f"eu_{p.name}",
                    f"effective {p.name} is unknown when no value is available",
                    Implies(
                        Not(atom(_app("Known" + p.name))), Cmp("=", _eff(p), _unknown_lit(p))
                    ),
                )
            )

    # --- guarded requirement laws
    def guarded(fid: str, label: str, p: ParamSpec, body: Formula) -> None:
        forms.append(_lf(fid, label, Implies(atom(_app("Known" + p.name)), body)))

    by_name = {p.name: p for p in ADHESIVE_PARAMS}
    guarded(
        "req_strength",
        "bond strength must reach the required minimum",
        by_name["Strength"],
        Cmp(">=", _eff(by_name["Strength"]), _app("MinBondStrength")),
    )
    guarded(
        "req_min_op_temp",
        "the adhesive must withstand the minimum operating temperature",
        by_name["MinOperatingTemp"],
        Cmp("<=", _eff(by_name["MinOperatingTemp"]), _app("MinOperatingTemperature")),
    )
    guarded(
        "req_max_op_temp",
        "the adhesive must withstand the maximum operating temperature",
        by_name["MaxOperatingTemp"],
        Cmp(">=", _eff(by_name["MaxOperatingTemp"]), _app("MaxOperatingTemperature")),
    )
    guarded(
        "req_app_temp_lo",
        "application temperature must be above the adhesive's minimum",
        by_name["MinApplicationTemp"],
        Cmp("<=", _eff(by_name["MinApplicationTemp"]), _app("ApplicationTemperature")),
    )
    guarded(
        "req_app_temp_hi",
        "application temperature must be below the adhesive's maximum",
        by_name["MaxApplicationTemp"],
        Cmp(">=", _eff(by_name["MaxApplicationTemp"]), _app("ApplicationTemperature")),
    )
    guarded(
        "req_price",
        "price must not exceed the maximum price",
        by_name["Price"],
        Cmp("<=", _eff(by_name["Price"]), _app("MaxPrice")),
    )
    guarded(
        "req_viscosity",
        "viscosity must not exceed the maximum viscosity",
        by_name["Viscosity"],
        Cmp("<=", _eff(by_name["Viscosity"]), _app("MaxViscosity")),
    )
    guarded(
        "req_gap_fill",
        "the adhesive must fill the required gap",
        by_name["MaxGapFill"],
        Cmp(">=", _eff(by_name["MaxGapFill"]), _app("GapFill")),
    )
    guarded(
        "req_cure_time",
        "cure time must not exceed the maximum cure time",
        by_name["CureTime"],
        Cmp("<=", _eff(by_name["CureTime"]), _app("MaxCureTime")),
    )
    guarded(
        "req_elongation",
        "elongation must reach the computed minimum elongation",
        by_name["Elongation"],
        Cmp(">=", _eff(by_name["Elongation"]), _app("MinElongation")),
    )
    for pname, req in (
        ("CureMethod", "ReqCureMethod"),
        ("Form", "ReqForm"),
        ("SolventFree", "ReqSolventFree"),
        ("FoodSafe", "ReqFoodSafe"),
        ("Transparent", "ReqTransparent"),
        ("Flexible", "ReqFlexible"),
        ("WaterResistance", "ReqWaterResistance"),
        ("ChemicalResistance", "ReqChemicalResistance"),
        ("UVResistance", "ReqUVResistance"),
        ("VibrationDamping", "ReqVibrationDamping"),
        ("Paintable", "ReqPaintable"),
    ):
        guarded(
            f"req_{pname.lower()}",
            f"{pname} must match the requirement",
            by_name[pname],
            Cmp("=", _eff(by_name[pname]), _app(req)),
        )

    # --- ordering law for the operating-temperature window
    forms.append(
        _lf(
            "op_temp_order",
            "minimum operating temperature may not exceed the maximum",
            Cmp("<=", _app("MinOperatingTemperature"), _app("MaxOperatingTemperature")),
        )
    )

    # --- the MinElongation decision table (compiled from its grid form)
    tables, tdiags = cdmn.parse_tables(ELONGATION_TABLE, "<builtin>")
    assert not tdiags, tdiags
    forms.extend(cdmn.compile_table(tables[0], voc))

    # --- substrate compatibility laws (apply to both chosen substrates)
    def sub(p_name: str, side: str) -> App:
        return _app("Sub" + p_name, _app("Substrate" + side))

    for side in ("A", "B"):
        label_side = f"substrate {side}"
        forms.append(
            _lf(
                f"sub_porous_{side}",
                f"porous {label_side} needs a sufficiently viscous adhesive",
                Implies(
                    And(
                        (
                            Cmp("~=", sub("Porosity", side), NumLit(SENTINEL)),
                            Cmp(">", sub("Porosity", side), NumLit(Fraction(60))),
                            atom(_app("KnownViscosity")),
                        )
                    ),
                    Cmp(">=", _eff(by_name["Viscosity"]), NumLit(Fraction(50))),
                ),
            )
        )
        forms.append(
            _lf(
                f"sub_heat_{side}",
                f"heat-sensitive {label_side} rules out heat curing",
                Implies(
                    And(
                        (
                            Cmp("=", sub("HeatSensitive", side), EnumLit("yes")),
                            atom(_app("KnownCureMethod")),
                        )
                    ),
                    Cmp("~=", _eff(by_name["CureMethod"]), EnumLit("cure_heat")),
                ),
            )
        )
        forms.append(
            _lf(
                f"sub_service_temp_{side}",
                f"operating temperature is limited by {label_side}'s service temperature",
                Implies(
                    Cmp("~=", sub("MaxServiceTemp", side), NumLit(SENTINEL)),
                    Cmp("<=", _app("MaxOperatingTemperature"), sub("MaxServiceTemp", side)),
                ),
            )
        )
        forms.append(
            _lf(
                f"sub_flex_{side}",
                f"a flexible {label_side} needs a bond that is not rigid",
                Implies(
                    And(
                        (
                            Cmp("=", sub("FlexibleSubstrate", side), EnumLit("yes")),
                            atom(_app("KnownFlexible")),
                        )
                    ),
                    Cmp("~=", _eff(by_name["Flexible"]), EnumLit("no")),
                ),
            )
        )
    forms.append(
        _lf(
            "sub_uv_translucent",
            "UV curing needs at least one translucent substrate",
            Implies(
                And(
                    (
                        atom(_app("KnownCureMethod")),
                        Cmp("=", _eff(by_name["CureMethod"]), EnumLit("cure_uv")),
                    )
                ),
                # bites only when both substrates are known to be opaque;
                # unknown translucency never eliminates an adhesive
                Not(
                    And(
                        (
                            Cmp("=", sub("Translucent", "A"), EnumLit("no")),
                            Cmp("=", sub("Translucent", "B"), EnumLit("no")),
                        )
                    )
                ),
            ),
        )
    )

    theory = Theory(tuple(forms))

    # --- catalog data as given interpretations
    assignments: list[Assignment] = []
    for a in cat.adhesives:
        assignments.append(Assignment("FamilyOf", (a.id,), a.family, "given"))
        for p in ADHESIVE_PARAMS:
            assignments.append(Assignment("Adh" + p.name, (a.id,), a.params[p.name], "given"))
    for f in cat.families:
        for p in ADHESIVE_PARAMS:
            assignments.append(Assignment("Fam" + p.name, (f.id,), f.params[p.name], "given"))
    for s in cat.substrates:
        for p in SUBSTRATE_PARAMS:
            assignments.append(Assignment("Sub" + p.name, (s.id,), s.params[p.name], "given"))
    st = PartialStructure(voc, tuple(assignments))
    return voc, theory, st


# ---------------------------------------------------------------------------
# Remaining adhesives


def remaining_adhesives(
    gp: GroundProblem, st: PartialStructure, budget=None
) -> tuple[int, list[str]]:
    """(count, ids) of adhesives surviving complete propagation, in catalog
    order.  Precondition: the structure is satisfiable."""
    from . import solver

    budget = budget or solver.Budget()
    cell = gp.cells[(SELECTED, ())]
    proto = solver._Solver(gp, st, budget)
    ids: list[str] = []
    for v in cell.candidates:
        m = solver.solve(
            gp, st, budget, extra=(solver._assume_formula(cell.key, v),), proto=proto
        )
        if m is not None:
            ids.append(str(v))
    return len(ids), ids
