#!/usr/bin/env python3
"""Benchmark propagation latency across random requirement scripts.

Runs `--runs` random selection sessions against the default catalog.  Each
session assigns `--steps` requirements drawn from a pool of representative
values and times every propagation.  Reports per-step percentiles and the
worst step observed.

Usage: python scripts/bench_latency.py [--runs N] [--steps N] [--seed N]
"""

from __future__ import annotations

import argparse
import random
import statistics
import time
from fractions import Fraction

from adhesive_selector import solver
from adhesive_selector.catalog import SELECTED
from adhesive_selector.model import Assignment
from adhesive_selector.service import load_default_context

# requirement -> values that keep the default catalog satisfiable
POOL: dict[str, tuple] = {
    "MinBondStrength": (Fraction(5), Fraction(10), Fraction(15)),
    "MinOperatingTemperature": (Fraction(-20), Fraction(0)),
    "MaxOperatingTemperature": (Fraction(80), Fraction(100)),
    "ApplicationTemperature": (Fraction(15), Fraction(20)),
    "MaxPrice": (Fraction(50), Fraction(85)),
    "MaxViscosity": (Fraction(2000), Fraction(8000)),
    "MaxCureTime": (Fraction(24), Fraction(60)),
    "GapFill": (Fraction(1), Fraction(2)),
    "ReqCureMethod": ("cure_heat", "cure_room_temp"),
    "ReqSolventFree": ("yes",),
    "ReqWaterResistance": ("medium", "high"),
    "ReqChemicalResistance": ("medium", "high"),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--steps", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ctx = load_default_context()
    probe = ctx.visible + [(SELECTED, ())]
    rng = random.Random(args.seed)
    times: list[float] = []

    for run in range(args.runs):
        symbols = rng.sample(sorted(POOL), min(args.steps, len(POOL)))
        user: list[Assignment] = []
        pool: list = []
        for sym in symbols:
            user.append(Assignment(sym, (), rng.choice(POOL[sym]), "user"))
            st = ctx.given.with_assignments(user)
            t0 = time.monotonic()
            pr = solver.propagate(ctx.gp, st, keys=probe, model_pool=pool)
            times.append(time.monotonic() - t0)
            if pr.status == "inconsistent":
                # random combinations may clash; that is still a timed step
                user.pop()
        print(f"run {run}: {len(symbols)} steps, worst {max(times):.2f}s")

    times.sort()
    n = len(times)
    print(f"\n{n} propagations")
    print(f"  median {statistics.median(times):.2f}s")
    print(f"  p90    {times[int(n * 0.9)]:.2f}s")
    print(f"  worst  {times[-1]:.2f}s")


if __name__ == "__main__":
    main()
