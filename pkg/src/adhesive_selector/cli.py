"""Command-line interface.

Subcommands mirror the inference services (check, propagate, optimize,
explain), plus cDMN compilation, catalog generation, and the HTTP server.

Exit codes: 0 success, 1 errors/diagnostics, 2 inconsistent, 3 timeout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Optional

from . import catalog as catalog_mod
from . import cdmn, service, solver
from .model import App, Assignment, EnumType
from .parser import fmt_formula, fmt_number, parse_kb
from .solver import Budget, OptimizationGoal

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONSISTENT = 2
EXIT_TIMEOUT = 3

log = logging.getLogger("adhesive_selector")


def _load_context(args) -> service.KbContext:
    timeout_ms = args.timeout_ms
    if args.kb:
        return service.load_kb_file(args.kb, timeout_ms=timeout_ms)
    return service.load_default_context(seed=args.seed, timeout_ms=timeout_ms)


def _parse_sets(ctx: service.KbContext, pairs: list[str]) -> tuple[Assignment, ...]:
    """Assignments from 'Symbol=value' strings, type-checked against the KB."""
    out: list[Assignment] = []
    for pair in pairs:
        if "=" not in pair:
            raise service.ServiceError(400, "bad-set", f"expected Symbol=value, got {pair!r}")
        name, raw = pair.split("=", 1)
        name, raw = name.strip(), raw.strip()
        decl = ctx.voc.symbol_named(name)
        if decl is None:
            raise service.ServiceError(404, "no-such-symbol", f"unknown symbol {name!r}")
        t = ctx.voc.type_named(decl.result)
        if isinstance(t, EnumType):
            if raw not in t.constants:
                raise service.ServiceError(
                    422, "bad-value", f"{raw!r} is not a constant of {t.name}"
                )
            value = raw
        else:
            value = service.parse_wire_number(raw)
        out.append(Assignment(name, (), value, "user"))
    return tuple(out)


def _print_core(ex: solver.Explanation) -> None:
    for item in service.explanation_payload(ex)["items"]:
        print(f"  - {item}")


def cmd_check(args) -> int:
    ctx = _load_context(args)
    st = ctx.given.with_assignments(_parse_sets(ctx, args.set))
    status, _model = solver.check(ctx.gp, st, Budget(timeout_ms=ctx.timeout_ms))
    print(status)
    if status == "unsatisfiable":
        ex = solver.explain_inconsistency(ctx.gp, st, Budget(timeout_ms=ctx.timeout_ms))
        _print_core(ex)
        return EXIT_INCONSISTENT
    return EXIT_OK


def cmd_propagate(args) -> int:
    ctx = _load_context(args)
    user = _parse_sets(ctx, args.set)
    view = service.compute_view(ctx, user)
    print(json.dumps(view, indent=2, sort_keys=True))
    return EXIT_INCONSISTENT if view["status"] == "inconsistent" else EXIT_OK


def cmd_optimize(args) -> int:
    ctx = _load_context(args)
    st = ctx.given.with_assignments(_parse_sets(ctx, args.set))
    decl = ctx.voc.symbol_named(args.criterion)
    if decl is None:
        raise service.ServiceError(
            404, "no-such-symbol", f"unknown criterion {args.criterion!r}"
        )
    if isinstance(ctx.voc.type_named(decl.result), EnumType):
        raise service.ServiceError(
            422, "bad-criterion", f"{args.criterion} is not numeric"
        )
    goal = OptimizationGoal(App(args.criterion, ()), args.direction)
    try:
        res = solver.optimize(ctx.gp, st, goal, Budget(timeout_ms=ctx.timeout_ms))
    except solver.OptimumNotAttained as e:
        print(f"optimum {fmt_number(e.value)} is a bound but not attained")
        return EXIT_ERROR
    if res is None:
        print("inconsistent")
        return EXIT_INCONSISTENT
    model, value = res
    out = {"criterion": args.criterion, "direction": args.direction,
           "value": service.fmt_wire(value)}
    sel = model.get((catalog_mod.SELECTED, ()))
    if sel is not None:
        out["adhesive"] = str(sel)
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_explain(args) -> int:
    ctx = _load_context(args)
    budget = Budget(timeout_ms=ctx.timeout_ms)
    st = ctx.given.with_assignments(_parse_sets(ctx, args.set))
    if args.symbol is None:
        # no target: explain the inconsistency of the current assignments
        status, _ = solver.check(ctx.gp, st, budget)
        if status == "satisfiable":
            print("consistent; nothing to explain (give --symbol for a value)")
            return EXIT_ERROR
        _print_core(solver.explain_inconsistency(ctx.gp, st, budget))
        return EXIT_OK
    pr = solver.propagate(ctx.gp, st, budget, keys=[(args.symbol, ())])
    if pr.status == "inconsistent":
        print("inconsistent")
        _print_core(solver.explain_inconsistency(ctx.gp, st, budget))
        return EXIT_INCONSISTENT
    target = next((a for a in pr.consequences if a.symbol == args.symbol), None)
    if target is None:
        print(f"{args.symbol} has no propagated value")
        return EXIT_ERROR
    print(f"{target.symbol} = {service.fmt_wire(target.value)} because:")
    _print_core(solver.explain_value(ctx.gp, st, target, budget))
    return EXIT_OK


def cmd_compile_cdmn(args) -> int:
    with open(args.table, "r", encoding="utf-8") as fh:
        text = fh.read()
    tables, diags = cdmn.parse_tables(text, file=args.table)
    rc = EXIT_OK
    for d in diags:
        print(f"{args.table}:{d.span.line}:{d.span.column}: {d.severity}: {d.message}",
              file=sys.stderr)
        if d.severity == "error":
            rc = EXIT_ERROR
    if rc != EXIT_OK:
        return rc
    voc = None
    if args.kb:
        ctx = service.load_kb_file(args.kb)
        voc = ctx.voc
    for t in tables:
        if voc is not None:
            overlaps = cdmn.check_unique(t, voc)
            for i, j in overlaps:
                print(f"warning: table {t.name!r} rows {i} and {j} overlap "
                      f"under hit policy U", file=sys.stderr)
            if cdmn.coverage_warning(t, voc):
                print(f"warning: table {t.name!r} does not cover all inputs",
                      file=sys.stderr)
            for lf in cdmn.compile_table(t, voc):
                print(f"[{lf.formula_id}] \"{lf.label}\"")
                print(f"  {fmt_formula(lf.formula)}.")
        else:
            print(f"table {t.name}: {len(t.rows)} rows (no --kb: not compiled)")
    drd = cdmn.derive_drd(tables, voc)
    print(f"inputs: {', '.join(drd.inputs)}")
    print(f"decisions: {', '.join(drd.decisions)}")
    for a, b in drd.edges:
        print(f"  {a} -> {b}")
    return EXIT_OK


def cmd_gen_catalog(args) -> int:
    cat = catalog_mod.generate_synthetic_catalog(args.seed)
    catalog_mod.write_catalog(cat, args.out)
    print(f"wrote catalog (seed {args.seed}) to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    ctx = _load_context(args)
    app = service.create_app(ctx)
    uvicorn.run(app, host=args.host, port=args.port, log_level=args.log.lower())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adhesive-selector")
    p.add_argument("--log", default="WARNING", help="log level (DEBUG..ERROR)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kb", help="knowledge-base file (.kb); default: built-in catalog")
    common.add_argument("--seed", type=int, default=1,
                        help="seed for the built-in synthetic catalog")
    common.add_argument("--timeout-ms", type=int, default=30_000,
                        help="per-inference time budget in milliseconds")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", parents=[common], help="satisfiability of the KB + assignments")
    sp.add_argument("--set", action="append", default=[], metavar="SYM=VAL")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("propagate", parents=[common], help="print the propagated state view")
    sp.add_argument("--set", action="append", default=[], metavar="SYM=VAL")
    sp.set_defaults(fn=cmd_propagate)

    sp = sub.add_parser("optimize", parents=[common], help="optimize a numeric criterion")
    sp.add_argument("--criterion", required=True, help="numeric symbol, e.g. EffPrice")
    sp.add_argument("--direction", choices=("minimize", "maximize"), default="minimize")
    sp.add_argument("--set", action="append", default=[], metavar="SYM=VAL")
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("explain", parents=[common],
                        help="explain a propagated value or the inconsistency")
    sp.add_argument("--symbol", help="symbol whose propagated value to explain")
    sp.add_argument("--set", action="append", default=[], metavar="SYM=VAL")
    sp.set_defaults(fn=cmd_explain)

    sp = sub.add_parser("compile-cdmn", help="compile cDMN tables to theory formulas")
    sp.add_argument("table", help="cDMN table file")
    sp.add_argument("--kb", help="vocabulary to compile against")
    sp.set_defaults(fn=cmd_compile_cdmn)

    sp = sub.add_parser("gen-catalog", help="write the seeded synthetic catalog")
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(fn=cmd_gen_catalog)

    sp = sub.add_parser("serve", parents=[common], help="run the HTTP consultant service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(fn=cmd_serve)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    p = build_parser()
    args = p.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log.upper(), logging.WARNING))
    try:
        return args.fn(args)
    except service.ServiceError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_ERROR
    except solver.SolveTimeout:
        print("error: time budget exhausted", file=sys.stderr)
        return EXIT_TIMEOUT


if __name__ == "__main__":
    sys.exit(main())
