"""Session-oriented HTTP service for the adhesive-selection consultant.

Owns session state and the assign/retract/propagate loop; every view is a
pure function of (knowledge base, ordered user assignments), so replaying a
session's assignment log reproduces the view byte for byte.
"""

from __future__ import annotations

import itertools
import re
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Union

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import catalog as catalog_mod
from . import solver
from .catalog import SELECTED
from .grounding import GroundProblem, ground
from .model import (
    App,
    Assignment,
    EnumType,
    IntType,
    PartialStructure,
    RatType,
    Theory,
    Vocabulary,
)
from .parser import fmt_number, parse_kb
from .solver import Budget, Model, OptimizationGoal


class ServiceError(Exception):
    """An error with an HTTP-style status and a machine-readable code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _label_of(symbol: str) -> str:
    """Human-readable label from a CamelCase symbol name."""
    words = re.findall(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+", symbol)
    return " ".join(words)


def fmt_wire(v: Union[Fraction, str]) -> str:
    """Wire representation: decimal string when exact, else 'p/q'."""
    if isinstance(v, Fraction):
        return fmt_number(v)
    return str(v)


def parse_wire_number(text: str) -> Fraction:
    """Exact rational from a decimal or 'p/q' string."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ServiceError(422, "bad-number", f"not a number: {text!r}")


@dataclass(frozen=True)
class KbContext:
    """Immutable, shareable knowledge-base context loaded at startup."""

    voc: Vocabulary
    th: Theory
    given: PartialStructure
    gp: GroundProblem
    adhesive_ids: tuple[str, ...]
    timeout_ms: int

    @property
    def visible(self) -> list[tuple[str, tuple]]:
        return [(s.name, ()) for s in self.voc.symbols if s.category != "Hidden"]


def load_default_context(seed: int = 1, timeout_ms: int = 30_000) -> KbContext:
    cat = catalog_mod.generate_synthetic_catalog(seed)
    voc, th, st = catalog_mod.build_kb(cat)
    gp = ground(voc, th, st)
    return KbContext(voc, th, st, gp, tuple(a.id for a in cat.adhesives), timeout_ms)


def load_kb_file(path: str, timeout_ms: int = 30_000) -> KbContext:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    parsed, diags = parse_kb(text, file=path)
    if parsed is None:
        errors = [d for d in diags if d.severity == "error"]
        msgs = "; ".join(f"{d.span.line}:{d.span.column} {d.message}" for d in errors)
        raise ServiceError(400, "kb-parse-error", msgs)
    voc, th, st = parsed
    gp = ground(voc, th, st)
    sel = voc.symbol_named(SELECTED)
    ids: tuple[str, ...] = ()
    if sel is not None:
        t = voc.type_named(sel.result)
        if isinstance(t, EnumType):
            ids = t.constants
    return KbContext(voc, th, st, gp, ids, timeout_ms)


# ---------------------------------------------------------------------------
# StateView computation (pure)


def compute_view(
    ctx: KbContext,
    user: tuple[Assignment, ...],
    model_pool: Optional[list[Model]] = None,
) -> dict[str, Any]:
    """The full StateView for the given ordered user assignments."""
    budget = Budget(timeout_ms=ctx.timeout_ms)
    st = ctx.given.with_assignments(user)
    keys = ctx.visible
    sel_key = (SELECTED, ())
    probe = keys + ([sel_key] if sel_key in ctx.gp.cells else [])
    pr = solver.propagate(ctx.gp, st, budget, keys=probe, model_pool=model_pool)
    view: dict[str, Any] = {"status": pr.status}
    user_by_key = {a.key: a for a in user}
    view["choices"] = [
        {"symbol": a.symbol, "value": fmt_wire(a.value)} for a in user
    ]
    if pr.status == "inconsistent":
        ex = solver.explain_inconsistency(ctx.gp, st, budget)
        view["inconsistency"] = explanation_payload(ex)
        view["tiles"] = [
            _tile_static(ctx, name, user_by_key.get((name, ())))
            for name, _ in keys
        ]
        view["remaining"] = {"count": 0, "ids": []}
        return view
    view["inconsistency"] = None
    consequences = {a.key: a for a in pr.consequences}
    irrelevant, _unknown = solver.relevance(ctx.gp, st, budget, keys=keys)
    tiles = []
    for name, args in keys:
        cell = ctx.gp.cells[(name, args)]
        tile = _tile_static(ctx, name, user_by_key.get((name, args)))
        key = (name, args)
        if key in consequences and key not in user_by_key:
            tile["value"] = fmt_wire(consequences[key].value)
            tile["origin"] = "propagated"
        if cell.discrete:
            removed = set(pr.eliminated.get(key, ()))
            if key in user_by_key:
                survivors = [user_by_key[key].value]
            else:
                survivors = [v for v in cell.candidates if v not in removed]
            tile["candidates"] = [fmt_wire(v) for v in survivors]
        else:
            iv = pr.numeric_bounds.get(key)
            if key in user_by_key:
                lo = hi = user_by_key[key].value
            elif iv is not None:
                lo, hi = iv.lo, iv.hi
            else:
                lo, hi = cell.lo, cell.hi
            tile["bounds"] = {"lo": fmt_wire(lo), "hi": fmt_wire(hi)}
        tile["relevant"] = key not in irrelevant
        tiles.append(tile)
    view["tiles"] = tiles
    if sel_key in ctx.gp.cells:
        removed = set(pr.eliminated.get(sel_key, ()))
        ids = [i for i in ctx.adhesive_ids if i not in removed]
        view["remaining"] = {"count": len(ids), "ids": ids}
    else:
        view["remaining"] = {"count": 0, "ids": []}
    return view


def _tile_static(ctx: KbContext, name: str, user_a: Optional[Assignment]) -> dict[str, Any]:
    decl = ctx.voc.symbol_named(name)
    assert decl is not None
    t = ctx.voc.type_named(decl.result)
    if isinstance(t, EnumType):
        kind = "enum"
    elif isinstance(t, IntType):
        kind = "int"
    else:
        kind = "rat"
    tile: dict[str, Any] = {
        "symbol": name,
        "label": _label_of(name),
        "category": decl.category,
        "kind": kind,
        "type": decl.result,
        "value": None,
        "origin": None,
        "candidates": None,
        "bounds": None,
        "relevant": True,
    }
    if isinstance(t, (IntType, RatType)):
        tile["range"] = {"lo": fmt_wire(t.lo), "hi": fmt_wire(t.hi)}
    if user_a is not None:
        tile["value"] = fmt_wire(user_a.value)
        tile["origin"] = "user"
    return tile


def explanation_payload(ex: solver.Explanation) -> dict[str, Any]:
    """Machine ids plus human labels; `items` is the one-per-line rendering."""
    assignments = [
        {"symbol": a.symbol, "value": fmt_wire(a.value)} for a in ex.assignments
    ]
    laws = [{"id": fid, "label": label} for fid, label in ex.laws]
    items = [f"{a['symbol']} = {a['value']}" for a in assignments]
    items += [law["label"] for law in laws]
    target: Any
    if isinstance(ex.target, Assignment):
        target = {"symbol": ex.target.symbol, "value": fmt_wire(ex.target.value)}
    else:
        target = ex.target
    return {"target": target, "assignments": assignments, "laws": laws, "items": items}


def kb_schema(ctx: KbContext) -> dict[str, Any]:
    """Tile metadata: categories, types, labels, optimization criteria."""
    tiles = [_tile_static(ctx, name, None) for name, _ in ctx.visible]
    for t in tiles:
        decl = ctx.voc.type_named(t["type"])
        if isinstance(decl, EnumType):
            t["candidates"] = list(decl.constants)
    criteria = []
    for s in ctx.voc.symbols:
        t = ctx.voc.type_named(s.result)
        if s.name.startswith("Eff") and isinstance(t, RatType):
            criteria.append({"symbol": s.name, "label": _label_of(s.name[3:])})
    categories = []
    for s in ctx.voc.symbols:
        if s.category != "Hidden" and s.category not in categories:
            categories.append(s.category)
    return {"tiles": tiles, "criteria": criteria, "categories": categories}


# ---------------------------------------------------------------------------
# Sessions


@dataclass
class Session:
    id: str
    user: tuple[Assignment, ...] = ()
    pool: list[Model] = field(default_factory=list)
    view: Optional[dict[str, Any]] = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)


class Consultant:
    """Session store + the operations behind the HTTP endpoints."""

    def __init__(self, ctx: KbContext):
        self.ctx = ctx
        self._sessions: dict[str, Session] = {}
        self._counter = itertools.count(1)
        self._store_lock = threading.Lock()

    def create_session(self) -> Session:
        with self._store_lock:
            sid = f"s{next(self._counter)}"
            sess = Session(id=sid)
            self._sessions[sid] = sess
        with sess.lock:
            sess.view = compute_view(self.ctx, sess.user, sess.pool)
        return sess

    def session(self, sid: str) -> Session:
        sess = self._sessions.get(sid)
        if sess is None:
            raise ServiceError(404, "no-such-session", f"unknown session {sid!r}")
        return sess

    def _parse_value(self, symbol: str, raw: str):
        decl = self.ctx.voc.symbol_named(symbol)
        if decl is None or decl.category == "Hidden":
            raise ServiceError(404, "no-such-symbol", f"unknown symbol {symbol!r}")
        t = self.ctx.voc.type_named(decl.result)
        if isinstance(t, EnumType):
            if raw not in t.constants:
                raise ServiceError(
                    422, "bad-value", f"{raw!r} is not a constant of {t.name}"
                )
            return raw
        v = parse_wire_number(raw)
        assert isinstance(t, (IntType, RatType))
        if not (t.lo <= v <= t.hi):
            raise ServiceError(
                422, "out-of-range", f"{raw} outside [{fmt_wire(t.lo)}, {fmt_wire(t.hi)}]"
            )
        if isinstance(t, IntType) and v.denominator != 1:
            raise ServiceError(422, "bad-value", f"{raw} is not an integer")
        return v

    def set_value(self, sid: str, symbol: str, raw_value: str) -> dict[str, Any]:
        sess = self.session(sid)
        value = self._parse_value(symbol, raw_value)
        with sess.lock:
            assert sess.view is not None
            tile = next((t for t in sess.view["tiles"] if t["symbol"] == symbol), None)
            if (
                tile is not None
                and tile["kind"] == "enum"
                and tile["candidates"] is not None
                and fmt_wire(value) not in tile["candidates"]
            ):
                # the UI never offers removed values; the API still guards
                raise ServiceError(
                    409, "candidate-violation",
                    f"{raw_value!r} has been eliminated for {symbol}",
                )
            user = tuple(a for a in sess.user if a.symbol != symbol)
            user += (Assignment(symbol, (), value, "user"),)
            view = compute_view(self.ctx, user, sess.pool)
            sess.user, sess.view, sess.updated = user, view, time.time()
            return view

    def retract_value(self, sid: str, symbol: str) -> dict[str, Any]:
        sess = self.session(sid)
        with sess.lock:
            if all(a.symbol != symbol for a in sess.user):
                raise ServiceError(
                    404, "no-such-assignment", f"no user assignment on {symbol!r}"
                )
            user = tuple(a for a in sess.user if a.symbol != symbol)
            view = compute_view(self.ctx, user, sess.pool)
            sess.user, sess.view, sess.updated = user, view, time.time()
            return view

    def explain(self, sid: str, symbol: str) -> dict[str, Any]:
        sess = self.session(sid)
        with sess.lock:
            assert sess.view is not None
            if sess.view["status"] == "inconsistent":
                raise ServiceError(409, "inconsistent", "session is inconsistent")
            tile = next((t for t in sess.view["tiles"] if t["symbol"] == symbol), None)
            if tile is None:
                raise ServiceError(404, "no-such-symbol", f"unknown symbol {symbol!r}")
            if tile["origin"] != "propagated":
                raise ServiceError(
                    409, "not-propagated", f"{symbol} has no propagated value"
                )
            st = self.ctx.given.with_assignments(sess.user)
            decl = self.ctx.voc.symbol_named(symbol)
            t = self.ctx.voc.type_named(decl.result)  # type: ignore[union-attr]
            raw = tile["value"]
            value = raw if isinstance(t, EnumType) else Fraction(raw)
            target = Assignment(symbol, (), value, "propagated")
            ex = solver.explain_value(
                self.ctx.gp, st, target, Budget(timeout_ms=self.ctx.timeout_ms)
            )
            return explanation_payload(ex)

    def inconsistency(self, sid: str) -> dict[str, Any]:
        sess = self.session(sid)
        with sess.lock:
            assert sess.view is not None
            if sess.view["status"] != "inconsistent":
                raise ServiceError(409, "consistent", "session is consistent")
            return sess.view["inconsistency"]

    def optimize(self, sid: str, symbol: str, direction: str) -> dict[str, Any]:
        sess = self.session(sid)
        if direction not in ("minimize", "maximize"):
            raise ServiceError(422, "bad-direction", f"bad direction {direction!r}")
        decl = self.ctx.voc.symbol_named(symbol)
        if decl is None:
            raise ServiceError(404, "no-such-symbol", f"unknown symbol {symbol!r}")
        t = self.ctx.voc.type_named(decl.result)
        if not isinstance(t, (IntType, RatType)):
            raise ServiceError(422, "bad-criterion", f"{symbol} is not numeric")
        with sess.lock:
            assert sess.view is not None
            if sess.view["status"] == "inconsistent":
                raise ServiceError(409, "inconsistent", "session is inconsistent")
            st = self.ctx.given.with_assignments(sess.user)
            goal = OptimizationGoal(App(symbol, ()), direction)
            try:
                res = solver.optimize(
                    self.ctx.gp, st, goal, Budget(timeout_ms=self.ctx.timeout_ms)
                )
            except solver.Unbounded:
                raise ServiceError(409, "unbounded", f"{symbol} has no finite optimum")
            except solver.OptimumNotAttained as e:
                raise ServiceError(
                    409, "not-attained",
                    f"optimum {fmt_wire(e.value)} is a bound, not attained",
                )
            if res is None:
                raise ServiceError(409, "inconsistent", "session is inconsistent")
            model, value = res
            out: dict[str, Any] = {
                "symbol": symbol,
                "direction": direction,
                "value": fmt_wire(value),
            }
            sel = model.get((SELECTED, ()))
            if sel is not None:
                out["adhesive"] = str(sel)
            return out


# ---------------------------------------------------------------------------
# FastAPI wiring


def create_app(ctx: Optional[KbContext] = None) -> FastAPI:
    consultant = Consultant(ctx or load_default_context())
    app = FastAPI(title="adhesive-selector", docs_url=None, redoc_url=None)
    app.state.consultant = consultant

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.post("/sessions")
    def create_session():
        sess = consultant.create_session()
        return {"id": sess.id, "view": sess.view}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        sess = consultant.session(sid)
        with sess.lock:
            return {"id": sess.id, "view": sess.view}

    @app.post("/sessions/{sid}/assignments")
    async def set_assignment(sid: str, request: Request):
        body = await request.json()
        symbol = body.get("symbol")
        value = body.get("value")
        if not isinstance(symbol, str) or not isinstance(value, str):
            raise ServiceError(422, "bad-request", "need string 'symbol' and 'value'")
        return {"view": consultant.set_value(sid, symbol, value)}

    @app.delete("/sessions/{sid}/assignments/{symbol}")
    def delete_assignment(sid: str, symbol: str):
        return {"view": consultant.retract_value(sid, symbol)}

    @app.get("/sessions/{sid}/explanation")
    def get_explanation(sid: str, symbol: str):
        return consultant.explain(sid, symbol)

    @app.get("/sessions/{sid}/inconsistency")
    def get_inconsistency(sid: str):
        return consultant.inconsistency(sid)

    @app.post("/sessions/{sid}/optimize")
    async def post_optimize(sid: str, request: Request):
        body = await request.json()
        symbol = body.get("symbol")
        direction = body.get("direction")
        if not isinstance(symbol, str) or not isinstance(direction, str):
            raise ServiceError(422, "bad-request", "need 'symbol' and 'direction'")
        return consultant.optimize(sid, symbol, direction)

    @app.get("/kb/schema")
    def get_schema():
        return kb_schema(consultant.ctx)

    # serve the browser client same-origin when its build is present;
    # mounted last so the API routes above always win
    frontend = Path(__file__).resolve().parents[2] / "frontend"
    if (frontend / "index.html").is_file():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend, html=True), name="ui")

    return app
