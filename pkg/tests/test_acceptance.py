"""End-to-end acceptance suite.

Each class checks one bar the system must clear before release:

* engine equivalence with brute-force oracles on random small KBs,
* subset-minimal explanations verified by exhaustive subset enumeration,
* the three-level fallback (adhesive value / family value / ignored) for
  every adhesive parameter,
* the canonical operating-temperature inconsistency with its exact core,
* decision-table semantics (division, Known guard, overlap detection),
* a long guided random walk that only ever picks offered candidates,
* interactive latency of a scripted nine-requirement selection,
* byte determinism of views and catalog files.
"""

from __future__ import annotations

import json
import random
import time
from fractions import Fraction

import pytest

import fixtures
import kbgen
import oracle
import test_cdmn
import test_explain
from adhesive_selector import cdmn, service, solver
from adhesive_selector.catalog import (
    SELECTED,
    build_kb,
    generate_synthetic_catalog,
    remaining_adhesives,
    write_catalog,
)
from adhesive_selector.grounding import ground
from adhesive_selector.model import (
    App,
    Assignment,
    PartialStructure,
    Theory,
)
from adhesive_selector.solver import OptimizationGoal

SEL_KEY = (SELECTED, ())


def _survivors(gp, pr, key):
    return set(gp.cells[key].candidates) - set(pr.eliminated.get(key, ()))


def _req(symbol: str, value) -> Assignment:
    return Assignment(symbol, (), value, "user")


# ---------------------------------------------------------------------------
# Oracle equivalence


class TestOracleEquivalence:
    """check / propagate / expand / optimize agree with brute-force model
    enumeration on 200 random KBs, and the selection KB agrees with a
    direct row-by-row evaluation of the catalog."""

    N_RANDOM = 200

    def test_random_kbs_match_brute_force(self):
        t0 = time.monotonic()
        for seed in range(self.N_RANDOM):
            voc, th, st = kbgen.random_kb(seed)
            gp = ground(voc, th, st)
            status, surviving = oracle.oracle_propagate(gp, st)

            chk_status, model = solver.check(gp, st)
            assert chk_status == (
                "satisfiable" if status == "consistent" else "unsatisfiable"
            )
            pr = solver.propagate(gp, st)
            assert pr.status == status

            total = solver.expand(gp, st)
            if status == "inconsistent":
                assert model is None and total is None
                continue

            # propagation: surviving value sets are exact
            exact = st.exact_values()
            for key, cell in gp.cells.items():
                if key in exact:
                    continue
                assert _survivors(gp, pr, key) == surviving[key], (seed, key)

            # expansion: a total model of the theory extending the input
            m = {k: total.exact_values()[k] for k in gp.cells}
            assert oracle.eval_formula_all(gp, m)
            assert oracle.conforms(m, st)

            # optimization of the first numeric cell, both directions
            numeric = [s for s in voc.symbols if s.result == "N"]
            if numeric:
                term = App(numeric[0].name, ())
                for direction in ("minimize", "maximize"):
                    expect = oracle.oracle_optimize(gp, st, term, direction)
                    res = solver.optimize(gp, st, OptimizationGoal(term, direction))
                    assert res is not None and res[1] == expect, (seed, direction)
        assert time.monotonic() - t0 < 60.0

    @pytest.mark.parametrize(
        "reqs",
        [
            {},
            {"MinBondStrength": Fraction(15)},
            {"MaxPrice": Fraction(30), "ReqSolventFree": "yes"},
            {"ApplicationTemperature": Fraction(5), "ReqCureMethod": "cure_heat"},
            {"MinElongation": Fraction(2), "ReqFlexible": "yes"},
            {
                "MinOperatingTemperature": Fraction(-20),
                "MaxOperatingTemperature": Fraction(120),
                "ReqWaterResistance": "high",
            },
        ],
    )
    def test_mini_catalog_matches_domain_oracle(self, reqs):
        cat = fixtures.mini_catalog()
        voc, th, st0 = build_kb(cat)
        gp = ground(voc, th, st0)
        st = st0.with_assignments([_req(k, v) for k, v in reqs.items()])
        _count, ids = remaining_adhesives(gp, st)
        assert set(ids) == oracle.oracle_surviving_adhesives(cat, reqs)


# ---------------------------------------------------------------------------
# Explanation minimality


class TestExplanationMinimality:
    """Inconsistency cores are sufficient (still unsatisfiable on their own)
    and subset-minimal, verified by enumerating every proper subset."""

    def test_cores_minimal_by_exhaustive_subsets(self):
        t0 = time.monotonic()
        checked = 0
        seed = 0
        while checked < 25 and seed < 4000:
            seed += 1
            voc, th, st = kbgen.random_kb(seed)
            gp = ground(voc, th, st)
            if oracle.oracle_check(gp, st) != "unsatisfiable":
                continue
            ex = solver.explain_inconsistency(gp, st)
            assert ex.target == "inconsistency"
            if len(ex.assignments) + len(ex.laws) > 8:
                continue  # exhaustive subset check would be too large
            law_ids = [fid for fid, _ in ex.laws]
            base = PartialStructure(voc)
            assert test_explain._unsat_with(voc, th, base, ex.assignments, law_ids)
            assert test_explain._core_is_minimal(voc, th, base, ex)
            checked += 1
        assert checked >= 25
        assert time.monotonic() - t0 < 60.0

    def test_value_explanation_cores_rederive_and_are_minimal(self):
        t0 = time.monotonic()
        checked = 0
        seed = 0
        while checked < 15 and seed < 2000:
            seed += 1
            voc, th, st = kbgen.random_kb(seed)
            gp = ground(voc, th, st)
            pr = solver.propagate(gp, st)
            if pr.status != "consistent" or not pr.consequences:
                continue
            target = pr.consequences[0]
            ex = solver.explain_value(gp, st, target)
            law_ids = [fid for fid, _ in ex.laws]
            if len(ex.assignments) + len(law_ids) > 8:
                continue
            # the cited laws + assignments alone force the target value
            sub_th = Theory(tuple(lf for lf in th.formulas if lf.formula_id in law_ids))
            base = PartialStructure(voc).with_assignments(ex.assignments)
            _s, surviving = oracle.oracle_propagate(ground(voc, sub_th, base), base)
            assert surviving[target.key] == {target.value}
            # minimality: dropping any element loses the derivation
            for drop in range(len(ex.assignments)):
                kept = ex.assignments[:drop] + ex.assignments[drop + 1 :]
                b = PartialStructure(voc).with_assignments(kept)
                _s, sv = oracle.oracle_propagate(ground(voc, sub_th, b), b)
                assert sv[target.key] != {target.value}
            for drop in range(len(law_ids)):
                kept_ids = law_ids[:drop] + law_ids[drop + 1 :]
                sub = Theory(tuple(lf for lf in th.formulas if lf.formula_id in kept_ids))
                _s, sv = oracle.oracle_propagate(ground(voc, sub, base), base)
                assert sv[target.key] != {target.value}
            checked += 1
        assert checked >= 15
        assert time.monotonic() - t0 < 60.0


# ---------------------------------------------------------------------------
# Fallback semantics


# For every adhesive parameter: a requirement value that the adhesive-level
# value (fixtures.ADHESIVE_VALUES) violates, and one that the family-level
# value (fixtures.FAMILY_VALUES) violates.  Continuous parameters use a
# directional rule, so the two cases may overlap; the assertions only pin
# the adhesive whose consulted source fails.
_FALLBACK_CASES: dict[str, tuple[tuple[str, object], tuple[str, object]]] = {
    "Strength": (("MinBondStrength", Fraction(20)), ("MinBondStrength", Fraction(40))),
    "MinOperatingTemp": (
        ("MinOperatingTemperature", Fraction(-20)),
        ("MinOperatingTemperature", Fraction(-50)),
    ),
    "MaxOperatingTemp": (
        ("MaxOperatingTemperature", Fraction(100)),
        ("MaxOperatingTemperature", Fraction(250)),
    ),
    "MinApplicationTemp": (
        ("ApplicationTemperature", Fraction(5)),
        ("ApplicationTemperature", Fraction(5)),
    ),
    "MaxApplicationTemp": (
        ("ApplicationTemperature", Fraction(40)),
        ("ApplicationTemperature", Fraction(170)),
    ),
    "Elongation": (("MinElongation", Fraction(2)), ("MinElongation", Fraction(4))),
    "Price": (("MaxPrice", Fraction(40)), ("MaxPrice", Fraction(10))),
    "Viscosity": (("MaxViscosity", Fraction(1000)), ("MaxViscosity", Fraction(50))),
    "MaxGapFill": (("GapFill", Fraction(5)), ("GapFill", Fraction(20))),
    "CureTime": (("MaxCureTime", Fraction(24)), ("MaxCureTime", Fraction(1))),
}
for _p, _req_sym in (
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
    # requiring the family's value rules out the adhesive-level value and
    # vice versa; the fixture keeps the two values distinct per parameter
    _FALLBACK_CASES[_p] = (
        (_req_sym, fixtures.FAMILY_VALUES[_p]),
        (_req_sym, fixtures.ADHESIVE_VALUES[_p]),
    )


@pytest.fixture(scope="module")
def three():
    cat = fixtures.three_case_catalog()
    voc, th, st = build_kb(cat)
    return cat, ground(voc, th, st), st


class TestFallbackSemantics:
    """a1_direct carries every value on the adhesive record, a2_family
    inherits every value from its family, a3_ignored has no value at either
    level and must never be eliminated."""

    @pytest.mark.parametrize("param", sorted(_FALLBACK_CASES))
    def test_adhesive_value_consulted(self, three, param):
        cat, gp, st0 = three
        sym, rv = _FALLBACK_CASES[param][0]
        st = st0.with_assignments([_req(sym, rv)])
        _c, ids = remaining_adhesives(gp, st)
        assert "a1_direct" not in ids
        assert "a3_ignored" in ids
        assert set(ids) == oracle.oracle_surviving_adhesives(cat, {sym: rv})

    @pytest.mark.parametrize("param", sorted(_FALLBACK_CASES))
    def test_family_value_consulted(self, three, param):
        cat, gp, st0 = three
        sym, rv = _FALLBACK_CASES[param][1]
        st = st0.with_assignments([_req(sym, rv)])
        _c, ids = remaining_adhesives(gp, st)
        assert "a2_family" not in ids
        assert "a3_ignored" in ids
        assert set(ids) == oracle.oracle_surviving_adhesives(cat, {sym: rv})

    def test_unknown_never_eliminates_under_family_safe_requirements(self, three):
        """Requirements that the fully-specified family satisfies keep both
        the inheriting and the fully-unknown adhesive alive."""
        _cat, gp, st0 = three
        reqs = {
            "MinBondStrength": Fraction(20),
            "MaxCureTime": Fraction(24),
            "ReqCureMethod": "cure_uv",
            "ReqWaterResistance": "high",
        }
        st = st0.with_assignments([_req(k, v) for k, v in reqs.items()])
        _c, ids = remaining_adhesives(gp, st)
        assert set(ids) == {"a2_family", "a3_ignored"}


# ---------------------------------------------------------------------------
# Canonical inconsistency


class TestInconsistencyScenario:
    def test_operating_temperature_core_is_exact(self, kb, gp):
        _voc, _th, st0 = kb
        reqs = [
            _req("MinOperatingTemperature", Fraction(20)),
            _req("MaxOperatingTemperature", Fraction(10)),
        ]
        st = st0.with_assignments(reqs)
        assert solver.propagate(gp, st, keys=[SEL_KEY]).status == "inconsistent"
        ex = solver.explain_inconsistency(gp, st)
        assert set(ex.assignments) == set(reqs)
        assert [label for _fid, label in ex.laws] == [
            "minimum operating temperature may not exceed the maximum"
        ]


# ---------------------------------------------------------------------------
# Decision-table semantics


@pytest.fixture(scope="module")
def voc_th_st():
    from adhesive_selector.parser import parse_kb

    parsed, diags = parse_kb(test_cdmn.VOC)
    assert not diags
    return parsed


class TestCdmnSemantics:
    def _with_table(self, voc, th, table_text):
        tables, diags = cdmn.parse_tables(table_text)
        assert [d for d in diags if d.severity == "error"] == []
        forms = cdmn.compile_table(tables[0], voc)
        return ground(voc, Theory(tuple(th.formulas) + tuple(forms)), PartialStructure(voc))

    def test_elongation_from_division(self, voc_th_st):
        voc, th, st = voc_th_st
        gp = self._with_table(voc, th, test_cdmn.ELONGATION)
        st = st.with_assignments(
            [
                _req("Support", "fixed"),
                _req("deltaLength", Fraction(2, 10)),
                _req("BondThickness", Fraction(1, 10)),
            ]
        )
        pr = solver.propagate(gp, st)
        assert pr.status == "consistent"
        values = {a.key: a.value for a in pr.consequences}
        assert values[("MinElongation", ())] == Fraction(2)

    def test_constraint_guard_only_bites_when_known(self, voc_th_st):
        voc, th, st = voc_th_st
        gp = self._with_table(voc, th, test_cdmn.STRENGTH)
        base = [
            _req("MinStress", Fraction(80)),
            _req("MaxStress", Fraction(10)),
        ]
        st_known = st.with_assignments(base + [_req("KnownStrength", "true")])
        assert solver.propagate(gp, st_known).status == "inconsistent"
        st_unknown = st.with_assignments(base + [_req("KnownStrength", "false")])
        assert solver.propagate(gp, st_unknown).status == "consistent"

    def test_unique_policy_overlap_flagged(self, voc_th_st):
        voc, _th, _st = voc_th_st
        tables, diags = cdmn.parse_tables(test_cdmn.OVERLAP)
        assert not diags
        assert cdmn.check_unique(tables[0], voc) == [(1, 2)]
        # and the well-behaved table raises no flag
        ok, _ = cdmn.parse_tables(test_cdmn.ELONGATION)
        assert cdmn.check_unique(ok[0], voc) == []


# ---------------------------------------------------------------------------
# Guided random walk


class TestGuidedWalk:
    STEPS = 1000

    def test_walk_over_offered_candidates_stays_consistent(self):
        cat = fixtures.mini_catalog()
        voc, th, st0 = build_kb(cat)
        gp = ground(voc, th, st0)
        enum_keys = [
            (s.name, ())
            for s in voc.symbols
            if s.category != "Hidden" and gp.cells[(s.name, ())].discrete
        ]
        rng = random.Random(7)
        user: dict[str, object] = {}
        pool: list = []
        for step in range(self.STEPS):
            st = st0.with_assignments([_req(k, v) for k, v in user.items()])
            pr = solver.propagate(gp, st, keys=enum_keys, model_pool=pool)
            assert pr.status == "consistent", (step, user)
            open_keys = [k for k in enum_keys if k[0] not in user]
            if not open_keys or (user and rng.random() < 0.3):
                user.pop(rng.choice(sorted(user)))
                continue
            key = open_keys[rng.randrange(len(open_keys))]
            offered = [
                v
                for v in gp.cells[key].candidates
                if v not in set(pr.eliminated.get(key, ()))
            ]
            assert offered, (step, key)  # consistency guarantees a survivor
            user[key[0]] = rng.choice(offered)


# ---------------------------------------------------------------------------
# Latency


# A realistic nine-requirement selection script over the default catalog,
# with the surviving-adhesive count after each step.
_SCRIPT = (
    ("MinBondStrength", Fraction(5), 54),
    ("MinOperatingTemperature", Fraction(-20), 14),
    ("MaxOperatingTemperature", Fraction(100), 11),
    ("ApplicationTemperature", Fraction(15), 6),
    ("MaxPrice", Fraction(85), 6),
    ("MaxCureTime", Fraction(60), 6),
    ("ReqCureMethod", "cure_heat", 5),
    ("ReqWaterResistance", "high", 4),
    ("ReqChemicalResistance", "high", 3),
)


class TestLatency:
    def test_scripted_selection_is_interactive(self, ctx):
        cat = generate_synthetic_catalog(1)
        probe = ctx.visible + [SEL_KEY]
        user: list[Assignment] = []
        pool: list = []
        t_total = time.monotonic()
        for sym, value, expected_remaining in _SCRIPT:
            user.append(_req(sym, value))
            st = ctx.given.with_assignments(user)
            t0 = time.monotonic()
            pr = solver.propagate(ctx.gp, st, keys=probe, model_pool=pool)
            step_s = time.monotonic() - t0
            assert step_s < 2.0, (sym, step_s)
            assert pr.status == "consistent"
            ids = _survivors(ctx.gp, pr, SEL_KEY)
            assert len(ids) == expected_remaining, sym
            reqs = {a.symbol: a.value for a in user}
            assert ids == oracle.oracle_surviving_adhesives(cat, reqs)
        assert time.monotonic() - t_total < 180.0


# ---------------------------------------------------------------------------
# Determinism


class TestDeterminism:
    def _view_bytes(self, user):
        ctx = service.load_default_context()
        view = service.compute_view(ctx, tuple(user), [])
        return json.dumps(view, sort_keys=True).encode()

    def test_state_view_bytes_identical_across_fresh_contexts(self):
        assert self._view_bytes([]) == self._view_bytes([])
        user = [
            _req("MinBondStrength", Fraction(15)),
            _req("ReqSolventFree", "yes"),
        ]
        assert self._view_bytes(user) == self._view_bytes(user)

    def test_catalog_files_byte_identical(self, tmp_path):
        d1, d2 = tmp_path / "c1", tmp_path / "c2"
        d1.mkdir(), d2.mkdir()
        write_catalog(generate_synthetic_catalog(1), d1)
        write_catalog(generate_synthetic_catalog(1), d2)
        files = sorted(p.name for p in d1.iterdir())
        assert files == sorted(p.name for p in d2.iterdir()) and files
        for name in files:
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
