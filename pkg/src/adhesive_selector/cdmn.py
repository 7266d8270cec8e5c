"""Decision tables and constraint tables in a plain-text grid format, and
their compilation into labeled theory formulas.

A table document looks like:

    U MinElongationCalc
    | Support | MinElongation               |
    | fixed   | deltaLength / BondThickness |
    | loose   | 0                           |

    E* StrengthRequirement
    | KnownStrength | MaxStress    |
    | true          | >= MinStress |

The header line carries the hit policy (`U` or `E*`) and the table name.
The first grid line names the columns; a `||` separator may be used to mark
the input/output boundary explicitly, otherwise the last column is the
output.  Cells hold `-` (any), constants, expressions, comparisons like
`>= 5`, or ranges `[a .. b]`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import solver
from .grounding import ground
from .model import (
    And,
    App,
    BoolLit,
    Cmp,
    Formula,
    KbError,
    LabeledFormula,
    PartialStructure,
    Term,
    Theory,
    Vocabulary,
    check_formula,
)
from .parser import ParseDiagnostic, SourceSpan, _Parser, _resolve, as_term, tokenize


class CdmnError(Exception):
    def __init__(self, errors: list[KbError]):
        super().__init__("; ".join(e.message for e in errors))
        self.errors = errors


@dataclass(frozen=True)
class TableCellExpr:
    kind: str  # 'dash' | 'expr' | 'cmp' | 'range'
    op: str = "="
    term: Optional[Term] = None
    hi: Optional[Term] = None  # range upper bound

    def condition(self, symbol: str) -> Formula:
        """The constraint this cell places on a 0-ary column symbol."""
        app = App(symbol, ())
        if self.kind == "dash":
            return BoolLit(True)
        if self.kind == "expr":
            assert self.term is not None
            return Cmp("=", app, self.term)
        if self.kind == "cmp":
            assert self.term is not None
            return Cmp(self.op, app, self.term)
        assert self.term is not None and self.hi is not None
        return And((Cmp(">=", app, self.term), Cmp("<=", app, self.hi)))


@dataclass(frozen=True)
class DecisionTable:
    name: str
    hit_policy: str  # 'U' | 'Estar'
    input_columns: tuple[str, ...]
    output_columns: tuple[str, ...]
    rows: tuple[tuple[tuple[TableCellExpr, ...], tuple[TableCellExpr, ...]], ...]


@dataclass(frozen=True)
class Drd:
    """Dependency graph derived from table columns: inputs feed decisions."""

    inputs: tuple[str, ...]
    decisions: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]


# ---------------------------------------------------------------------------
# Parsing


def _parse_cell(text: str, file: str, line: int, col: int) -> tuple[Optional[TableCellExpr], list[ParseDiagnostic]]:
    stripped = text.strip()
    span = SourceSpan(file, line, col, max(len(stripped), 1))
    if stripped == "-" or stripped == "":
        return TableCellExpr("dash"), []
    tokens, diags = tokenize(stripped, file)
    if diags:
        return None, [ParseDiagnostic("error", d.message, span) for d in diags]
    p = _Parser(tokens, [])
    try:
        first = p.peek()
        if first.kind == "punct" and first.text in ("<", "<=", ">", ">=", "~="):
            p.next()
            term = as_term(p.parse_addsub(), span)
            cell = TableCellExpr("cmp", first.text, term)
        elif first.kind == "punct" and first.text == "[":
            p.next()
            lo = as_term(p.parse_addsub(), span)
            p.expect("..")
            hi = as_term(p.parse_addsub(), span)
            p.expect("]")
            cell = TableCellExpr("range", "=", lo, hi)
        else:
            term = as_term(p.parse_formula(), span)
            cell = TableCellExpr("expr", "=", term)
        if p.peek().kind != "eof":
            return None, [ParseDiagnostic("error", f"trailing input in cell: '{p.peek().text}'", span)]
        return cell, []
    except Exception as e:  # ParseError
        msg = getattr(e, "message", str(e))
        return None, [ParseDiagnostic("error", msg, span)]


def _split_grid_line(line: str) -> Optional[list[str]]:
    s = line.strip()
    if not (s.startswith("|") and s.endswith("|") and len(s) >= 2):
        return None
    return s[1:-1].split("|")


def parse_tables(text: str, file: str = "<cdmn>") -> tuple[list[DecisionTable], list[ParseDiagnostic]]:
    tables: list[DecisionTable] = []
    diags: list[ParseDiagnostic] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i].strip()
        if not raw or raw.startswith("//"):
            i += 1
            continue
        parts = raw.split()
        if parts[0] not in ("U", "E*") or len(parts) != 2:
            diags.append(
                ParseDiagnostic(
                    "error",
                    f"expected a table header like 'U Name' or 'E* Name', found '{raw}'",
                    SourceSpan(file, i + 1, 1, max(len(raw), 1)),
                )
            )
            i += 1
            continue
        policy = "U" if parts[0] == "U" else "Estar"
        name = parts[1]
        i += 1
        # header grid line
        if i >= len(lines) or _split_grid_line(lines[i]) is None:
            diags.append(
                ParseDiagnostic("error", f"table '{name}' has no column header line", SourceSpan(file, i, 1, 1))
            )
            continue
        header = _split_grid_line(lines[i])
        assert header is not None
        columns = [c.strip() for c in header]
        if "" in columns:
            boundary = columns.index("")
            input_cols = tuple(columns[:boundary])
            output_cols = tuple(c for c in columns[boundary + 1 :] if c)
        else:
            input_cols = tuple(columns[:-1])
            output_cols = (columns[-1],)
        width = len(input_cols) + len(output_cols) + (1 if "" in columns else 0)
        i += 1
        rows = []
        while i < len(lines):
            cells = _split_grid_line(lines[i])
            if cells is None:
                break
            stripped = [c.strip() for c in cells]
            has_boundary = "" in columns
            # rows may repeat the '||' input/output divider or omit it
            plain_width = len(input_cols) + len(output_cols)
            if has_boundary:
                b = columns.index("")
                if len(stripped) == width and stripped[b] == "":
                    in_texts, out_texts = stripped[:b], stripped[b + 1 :]
                elif len(stripped) == plain_width:
                    in_texts, out_texts = stripped[:b], stripped[b:]
                else:
                    in_texts = None
            elif len(stripped) == plain_width:
                in_texts, out_texts = stripped[:-1], stripped[-1:]
            else:
                in_texts = None
            if in_texts is None:
                diags.append(
                    ParseDiagnostic(
                        "error",
                        f"row {len(rows) + 1} of '{name}' has {len(stripped)} cell(s), expected {plain_width}",
                        SourceSpan(file, i + 1, 1, max(len(lines[i].strip()), 1)),
                    )
                )
                i += 1
                continue
            parsed_in, parsed_out = [], []
            ok = True
            col_offset = 1
            for j, cell_text in enumerate(in_texts + out_texts):
                cell, cell_diags = _parse_cell(cell_text, file, i + 1, col_offset + j)
                diags.extend(cell_diags)
                if cell is None:
                    ok = False
                elif j < len(in_texts):
                    parsed_in.append(cell)
                else:
                    parsed_out.append(cell)
            if ok:
                rows.append((tuple(parsed_in), tuple(parsed_out)))
            i += 1
        tables.append(DecisionTable(name, policy, input_cols, output_cols, tuple(rows)))
    return tables, diags


def parse_table(text: str, file: str = "<cdmn>") -> tuple[Optional[DecisionTable], list[ParseDiagnostic]]:
    tables, diags = parse_tables(text, file)
    if any(d.severity == "error" for d in diags):
        return None, diags
    if not tables:
        return None, [
            ParseDiagnostic("error", "no table found in document", SourceSpan(file, 1, 1, 1))
        ]
    return tables[0], diags


# ---------------------------------------------------------------------------
# Compilation


def _row_antecedent(t: DecisionTable, row_inputs: tuple[TableCellExpr, ...]) -> Formula:
    conds = [
        cell.condition(sym)
        for sym, cell in zip(t.input_columns, row_inputs)
        if cell.kind != "dash"
    ]
    if not conds:
        return BoolLit(True)
    if len(conds) == 1:
        return conds[0]
    return And(tuple(conds))


def _typecheck(voc: Vocabulary, formulas: list[LabeledFormula]) -> None:
    errs: list[KbError] = []
    for lf in formulas:
        resolved = _resolve(lf.formula, voc, frozenset())
        check_formula(voc, resolved, {}, errs, f"formula {lf.formula_id}")
    if errs:
        raise CdmnError(errs)


def _resolve_all(voc: Vocabulary, formulas: list[LabeledFormula]) -> list[LabeledFormula]:
    return [
        LabeledFormula(lf.formula_id, lf.label, _resolve(lf.formula, voc, frozenset()))
        for lf in formulas
    ]


def compile_decision(t: DecisionTable, voc: Vocabulary) -> list[LabeledFormula]:
    """One formula per row: inputs => conjunction of output equalities."""
    out: list[LabeledFormula] = []
    for k, (ins, outs) in enumerate(t.rows, start=1):
        eqs = []
        for sym, cell in zip(t.output_columns, outs):
            if cell.kind == "dash":
                continue
            if cell.kind != "expr":
                raise CdmnError(
                    [KbError("bad-output", f"U-table output cells must be values, got a {cell.kind}", t.name)]
                )
            eqs.append(Cmp("=", App(sym, ()), cell.term))
        if not eqs:
            continue
        consequent: Formula = eqs[0] if len(eqs) == 1 else And(tuple(eqs))
        antecedent = _row_antecedent(t, ins)
        f: Formula = consequent if isinstance(antecedent, BoolLit) else _implies(antecedent, consequent)
        out.append(LabeledFormula(f"{t.name}_row{k}", f"{t.name} : row {k}", f))
    resolved = _resolve_all(voc, out)
    _typecheck(voc, resolved)
    return resolved


def compile_constraint(t: DecisionTable, voc: Vocabulary) -> list[LabeledFormula]:
    """One implication per row whose consequent is the output constraint."""
    out: list[LabeledFormula] = []
    for k, (ins, outs) in enumerate(t.rows, start=1):
        constraints = [
            cell.condition(sym)
            for sym, cell in zip(t.output_columns, outs)
            if cell.kind != "dash"
        ]
        if not constraints:
            continue
        consequent: Formula = constraints[0] if len(constraints) == 1 else And(tuple(constraints))
        antecedent = _row_antecedent(t, ins)
        f: Formula = consequent if isinstance(antecedent, BoolLit) else _implies(antecedent, consequent)
        out.append(LabeledFormula(f"{t.name}_row{k}", f"{t.name} : row {k}", f))
    resolved = _resolve_all(voc, out)
    _typecheck(voc, resolved)
    return resolved


def _implies(lhs: Formula, rhs: Formula) -> Formula:
    from .model import Implies

    return Implies(lhs, rhs)


def compile_table(t: DecisionTable, voc: Vocabulary) -> list[LabeledFormula]:
    if t.hit_policy == "U":
        return compile_decision(t, voc)
    return compile_constraint(t, voc)


def check_unique(t: DecisionTable, voc: Vocabulary) -> list[tuple[int, int]]:
    """Pairs of U-policy rows whose input conditions can fire together."""
    assert t.hit_policy == "U"
    overlaps: list[tuple[int, int]] = []
    empty = PartialStructure(Vocabulary(voc.types, voc.symbols))
    for i in range(len(t.rows)):
        for j in range(i + 1, len(t.rows)):
            both = And(
                (
                    _row_antecedent(t, t.rows[i][0]),
                    _row_antecedent(t, t.rows[j][0]),
                )
            )
            lf = LabeledFormula("overlap", "overlap probe", _resolve(both, voc, frozenset()))
            gp = ground(voc, Theory((lf,)), empty)
            if solver.solve(gp, empty) is not None:
                overlaps.append((i + 1, j + 1))
    return overlaps


def coverage_warning(t: DecisionTable, voc: Vocabulary) -> bool:
    """True when some input combination fires no row (U tables only); the
    compiled semantics then leaves the outputs unconstrained."""
    assert t.hit_policy == "U"
    empty = PartialStructure(Vocabulary(voc.types, voc.symbols))
    none_fire = And(
        tuple(_nnot(_row_antecedent(t, ins)) for ins, _ in t.rows) or (BoolLit(True),)
    )
    lf = LabeledFormula("gap", "coverage probe", _resolve(none_fire, voc, frozenset()))
    gp = ground(voc, Theory((lf,)), empty)
    return solver.solve(gp, empty) is not None


def _nnot(f: Formula) -> Formula:
    from .model import Not

    return Not(f)


def _cell_mentions(cell: TableCellExpr, voc: Optional[Vocabulary]) -> list[str]:
    """Symbol names referenced inside a cell's expression(s)."""
    from .model import Arith, Var

    names: list[str] = []

    def walk(t: Optional[Term]) -> None:
        if t is None:
            return
        if isinstance(t, Var):
            if voc is None or (
                voc.symbol_named(t.name) is not None
                and voc.enum_constant_type(t.name) is None
            ):
                names.append(t.name)
        elif isinstance(t, App):
            if voc is None or voc.symbol_named(t.symbol) is not None:
                names.append(t.symbol)
            for a in t.args:
                walk(a)
        elif isinstance(t, Arith):
            for a in t.args:
                walk(a)

    walk(cell.term)
    walk(cell.hi)
    return names


def derive_drd(tables: list[DecisionTable], voc: Optional[Vocabulary] = None) -> Drd:
    decisions = tuple(dict.fromkeys(sym for t in tables for sym in t.output_columns))
    deps: dict[str, list[str]] = {}
    for t in tables:
        for dst in t.output_columns:
            bucket = deps.setdefault(dst, [])
            bucket.extend(s for s in t.input_columns if s != dst)
            for row_in, row_out in t.rows:
                for cell in row_in + row_out:
                    bucket.extend(s for s in _cell_mentions(cell, voc) if s != dst)
    inputs = tuple(
        dict.fromkeys(
            src for srcs in deps.values() for src in srcs if src not in decisions
        )
    )
    edges = tuple(
        dict.fromkeys((src, dst) for dst, srcs in deps.items() for src in srcs)
    )
    # cycle check over decision-to-decision edges
    graph: dict[str, list[str]] = {}
    for src, dst in edges:
        graph.setdefault(src, []).append(dst)
    state: dict[str, int] = {}

    def visit(node: str) -> None:
        state[node] = 1
        for nxt in graph.get(node, []):
            if state.get(nxt) == 1:
                raise CdmnError([KbError("cyclic-drd", f"dependency cycle through '{nxt}'", nxt)])
            if nxt not in state:
                visit(nxt)
        state[node] = 2

    for n in list(graph):
        if n not in state:
            visit(n)
    return Drd(inputs, decisions, edges)
