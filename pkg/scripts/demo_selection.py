#!/usr/bin/env python3
"""Walk a nine-requirement adhesive selection end to end.

Prints the surviving-adhesive count after each requirement, the final
shortlist, a price optimum over the shortlist, and a sample explanation.

Usage: python scripts/demo_selection.py [--seed N]
"""

from __future__ import annotations

import argparse
import time
from fractions import Fraction

from adhesive_selector import solver
from adhesive_selector.catalog import SELECTED
from adhesive_selector.model import App, Assignment
from adhesive_selector.service import fmt_wire, load_default_context

SCRIPT = (
    ("MinBondStrength", Fraction(5)),
    ("MinOperatingTemperature", Fraction(-20)),
    ("MaxOperatingTemperature", Fraction(100)),
    ("ApplicationTemperature", Fraction(15)),
    ("MaxPrice", Fraction(85)),
    ("MaxCureTime", Fraction(60)),
    ("ReqCureMethod", "cure_heat"),
    ("ReqWaterResistance", "high"),
    ("ReqChemicalResistance", "high"),
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1, help="catalog seed")
    args = ap.parse_args()

    ctx = load_default_context(seed=args.seed)
    sel_key = (SELECTED, ())
    probe = ctx.visible + [sel_key]
    pool: list = []
    user: list[Assignment] = []

    print(f"catalog seed {args.seed}: {len(ctx.adhesive_ids)} adhesives")
    for sym, value in SCRIPT:
        user.append(Assignment(sym, (), value, "user"))
        st = ctx.given.with_assignments(user)
        t0 = time.monotonic()
        pr = solver.propagate(ctx.gp, st, keys=probe, model_pool=pool)
        dt = time.monotonic() - t0
        if pr.status == "inconsistent":
            print(f"  {sym} = {value}: INCONSISTENT")
            return
        remaining = [
            a
            for a in ctx.adhesive_ids
            if a not in set(pr.eliminated.get(sel_key, ()))
        ]
        shown = value if isinstance(value, str) else fmt_wire(value)
        print(f"  {sym} = {shown}: {len(remaining)} remaining  ({dt:.2f}s)")

    print("shortlist:", ", ".join(remaining))

    st = ctx.given.with_assignments(user)
    res = solver.optimize(
        ctx.gp, st, solver.OptimizationGoal(App("EffPrice", ()), "minimize")
    )
    assert res is not None
    model, best = res
    print(f"cheapest match: {model[sel_key]} at {fmt_wire(best)} EUR/kg")

    forced = [a for a in solver.propagate(ctx.gp, st).consequences if a.symbol == "EffCureMethod"]
    if forced:
        ex = solver.explain_value(ctx.gp, st, forced[0])
        print(f"why {forced[0].symbol} = {forced[0].value}:")
        for a in ex.assignments:
            v = a.value if isinstance(a.value, str) else fmt_wire(a.value)
            print(f"  because you set {a.symbol} = {v}")
        for _fid, label in ex.laws:
            print(f"  and the law: {label}")


if __name__ == "__main__":
    main()
