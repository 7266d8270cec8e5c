"""Textual KB format: `vocabulary { } theory { } structure { }` blocks.

Grammar sketch (declarations end with '.'):

    vocabulary {
      type Support := {fixed, loose}.
      type Temp := rat [-200 .. 200].
      type Count := int [0 .. 10].
      @category(Performance) MinTemp : Temp.
      Price : Adhesive -> Temp.
      Available : Adhesive -> Bool.
    }
    theory {
      @label("Min may not exceed max") temp_order: MinTemp <= MaxTemp.
      all_available: !a in Adhesive: Available(a).
    }
    structure {
      Price(a1) := 5.
      MaxTemp in [20 .. 100].
      @origin(user) MinTemp := 20.
    }

Connectives: `~ & | => <=>`; quantifiers `!x in T:` / `?x in T:`;
comparisons `= ~= < <= > >=`; comments `//` to end of line.  Numeric
literals are exact rationals (`0.25` or `1/3`); literal division and
unary minus on literals are folded at parse time so serialization
round-trips.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .model import (
    BOOL,
    And,
    App,
    Arith,
    Assignment,
    BoolLit,
    Cmp,
    EnumLit,
    EnumType,
    Formula,
    Iff,
    Implies,
    IntType,
    Interval,
    LabeledFormula,
    Not,
    NumLit,
    Or,
    PartialStructure,
    Quant,
    RatType,
    SymbolDecl,
    Term,
    Theory,
    TypeDecl,
    Value,
    Var,
    Vocabulary,
    atom,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # 'error' | 'warning'
    message: str
    span: SourceSpan


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.message = message
        self.span = span


# ---------------------------------------------------------------------------
# Lexer

PUNCT = [
    "<=>", ":=", "=>", "~=", "<=", ">=", "..", "->",
    "{", "}", "(", ")", "[", "]", ",", ".", ":", "!", "?", "~", "&", "|",
    "=", "<", ">", "+", "-", "*", "/", "@",
]

KEYWORDS = {"vocabulary", "theory", "structure", "type", "in", "int", "rat"}


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'number', 'string', 'punct', 'eof'
    text: str
    span: SourceSpan


def tokenize(text: str, file: str = "<kb>") -> tuple[list[Token], list[ParseDiagnostic]]:
    tokens: list[Token] = []
    diags: list[ParseDiagnostic] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span(length: int) -> SourceSpan:
        return SourceSpan(file, line, col, max(length, 1))

    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i, col = i + 1, col + 1
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] != '"' and text[j] != "\n":
                j += 1
            if j >= n or text[j] != '"':
                diags.append(ParseDiagnostic("error", "unterminated string literal", span(j - i)))
                tokens.append(Token("string", text[i + 1 : j], span(j - i)))
                i, col = j, col + (j - i)
                continue
            tokens.append(Token("string", text[i + 1 : j], span(j - i + 1)))
            col += j - i + 1
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and not text.startswith("..", j) and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(Token("number", text[i:j], span(j - i)))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], span(j - i)))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, span(len(p))))
                col += len(p)
                i += len(p)
                break
        else:
            diags.append(ParseDiagnostic("error", f"unexpected character {c!r}", span(1)))
            i, col = i + 1, col + 1
    tokens.append(Token("eof", "", SourceSpan(file, line, col, 1)))
    return tokens, diags


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[Token], diags: list[ParseDiagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.diags = diags

    # -- token helpers

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.text == text and t.kind in ("punct", "ident")

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        if self.at(text):
            return self.next()
        t = self.peek()
        raise ParseError(f"expected '{text}', found '{t.text or 'end of input'}'", t.span)

    def expect_ident(self) -> Token:
        t = self.peek()
        if t.kind == "ident" and t.text not in KEYWORDS:
            return self.next()
        raise ParseError(f"expected identifier, found '{t.text or 'end of input'}'", t.span)

    def error_here(self, message: str) -> None:
        self.diags.append(ParseDiagnostic("error", message, self.peek().span))

    def recover_to(self, stops: tuple[str, ...]) -> None:
        """Skip tokens until just past a stop token (or a closing brace/eof)."""
        while True:
            t = self.peek()
            if t.kind == "eof":
                return
            if t.text == "}":
                return
            self.next()
            if t.text in stops:
                return

    # -- document

    def parse_document(self) -> tuple[Vocabulary, Theory, PartialStructure]:
        types: list[TypeDecl] = []
        symbols: list[SymbolDecl] = []
        formulas: list[LabeledFormula] = []
        assignments: list[Assignment] = []
        voc = Vocabulary()
        while self.peek().kind != "eof":
            if self.accept("vocabulary"):
                self.parse_block(lambda: self.parse_vdecl(types, symbols))
            elif self.accept("theory"):
                voc = Vocabulary(tuple(types), tuple(symbols))
                self.parse_block(lambda: self.parse_tdecl(formulas))
            elif self.accept("structure"):
                voc = Vocabulary(tuple(types), tuple(symbols))
                self.parse_block(lambda: self.parse_sdecl(voc, assignments))
            else:
                self.error_here(
                    f"expected 'vocabulary', 'theory' or 'structure', found '{self.peek().text}'"
                )
                self.next()
        voc = Vocabulary(tuple(types), tuple(symbols))
        return voc, Theory(tuple(formulas)), PartialStructure(voc, tuple(assignments))

    def parse_block(self, declaration) -> None:
        try:
            self.expect("{")
        except ParseError as e:
            self.diags.append(ParseDiagnostic("error", e.message, e.span))
            return
        while not self.at("}") and self.peek().kind != "eof":
            try:
                declaration()
            except ParseError as e:
                self.diags.append(ParseDiagnostic("error", e.message, e.span))
                self.recover_to((".",))
        if not self.accept("}"):
            self.error_here("missing closing '}'")

    # -- annotations

    def parse_annotations(self) -> dict[str, str]:
        out: dict[str, str] = {}
        while self.accept("@"):
            name = self.expect_ident().text
            self.expect("(")
            t = self.peek()
            if t.kind == "string":
                out[name] = self.next().text
            else:
                out[name] = self.expect_ident().text
            self.expect(")")
        return out

    # -- vocabulary declarations

    def parse_vdecl(self, types: list[TypeDecl], symbols: list[SymbolDecl]) -> None:
        annots = self.parse_annotations()
        if self.accept("type"):
            name = self.expect_ident().text
            self.expect(":=")
            if self.accept("{"):
                constants = [self.expect_ident().text]
                while self.accept(","):
                    constants.append(self.expect_ident().text)
                self.expect("}")
                types.append(EnumType(name, tuple(constants)))
            elif self.accept("int"):
                lo, hi = self.parse_range()
                types.append(IntType(name, lo, hi))
            elif self.accept("rat"):
                lo, hi = self.parse_range()
                types.append(RatType(name, lo, hi))
            else:
                raise ParseError("expected '{', 'int' or 'rat' after ':='", self.peek().span)
            self.expect(".")
            return
        name = self.expect_ident().text
        self.expect(":")
        first = self.expect_ident().text
        arg_types: tuple[str, ...] = ()
        result = first
        if self.at("*") or self.at("->"):
            args = [first]
            while self.accept("*"):
                args.append(self.expect_ident().text)
            self.expect("->")
            result = self.expect_ident().text
            arg_types = tuple(args)
        self.expect(".")
        symbols.append(
            SymbolDecl(name, arg_types, result, annots.get("category", "Hidden"))
        )

    def parse_range(self) -> tuple[Fraction, Fraction]:
        self.expect("[")
        lo = self.parse_signed_number()
        self.expect("..")
        hi = self.parse_signed_number()
        self.expect("]")
        return lo, hi

    def parse_signed_number(self) -> Fraction:
        neg = self.accept("-") is not None
        t = self.peek()
        if t.kind != "number":
            raise ParseError(f"expected number, found '{t.text}'", t.span)
        self.next()
        val = Fraction(t.text)
        if self.accept("/"):
            d = self.peek()
            if d.kind != "number":
                raise ParseError(f"expected denominator, found '{d.text}'", d.span)
            self.next()
            val /= Fraction(d.text)
        return -val if neg else val

    # -- theory declarations

    def parse_tdecl(self, formulas: list[LabeledFormula]) -> None:
        annots = self.parse_annotations()
        fid = self.expect_ident().text
        self.expect(":")
        f = self.parse_formula()
        self.expect(".")
        formulas.append(LabeledFormula(fid, annots.get("label", fid), as_formula(f)))

    # -- structure declarations

    def parse_sdecl(self, voc: Vocabulary, assignments: list[Assignment]) -> None:
        annots = self.parse_annotations()
        origin = annots.get("origin", "given")
        symbol = self.expect_ident().text
        args: list[Value] = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.parse_const())
                while self.accept(","):
                    args.append(self.parse_const())
            self.expect(")")
        if self.accept(":="):
            value: Union[Value, Interval] = self.parse_const()
        elif self.accept("in"):
            lo, hi = self.parse_range()
            value = Interval(lo, hi)
        else:
            raise ParseError("expected ':=' or 'in' in assignment", self.peek().span)
        self.expect(".")
        assignments.append(Assignment(symbol, tuple(args), value, origin))

    def parse_const(self) -> Value:
        t = self.peek()
        if t.kind == "number" or t.text == "-":
            return self.parse_signed_number()
        return self.expect_ident().text

    # -- formulas / terms: one precedence tower

    def parse_formula(self):
        return self.parse_iff()

    def parse_iff(self):
        lhs = self.parse_implies()
        while self.accept("<=>"):
            rhs = self.parse_implies()
            lhs = Iff(as_formula(lhs), as_formula(rhs))
        return lhs

    def parse_implies(self):
        lhs = self.parse_or()
        if self.accept("=>"):
            rhs = self.parse_implies()
            return Implies(as_formula(lhs), as_formula(rhs))
        return lhs

    def parse_or(self):
        lhs = self.parse_and()
        while self.accept("|"):
            rhs = self.parse_and()
            l = lhs.parts if isinstance(lhs, Or) else (as_formula(lhs),)
            lhs = Or(l + (as_formula(rhs),))
        return lhs

    def parse_and(self):
        lhs = self.parse_neg()
        while self.accept("&"):
            rhs = self.parse_neg()
            l = lhs.parts if isinstance(lhs, And) else (as_formula(lhs),)
            lhs = And(l + (as_formula(rhs),))
        return lhs

    def parse_neg(self):
        if self.accept("~"):
            return Not(as_formula(self.parse_neg()))
        t = self.peek()
        if t.text in ("!", "?") and t.kind == "punct":
            self.next()
            kind = "all" if t.text == "!" else "exists"
            var = self.expect_ident().text
            self.expect("in")
            type_name = self.expect_ident().text
            self.expect(":")
            body = self.parse_formula()
            return Quant(kind, var, type_name, as_formula(body))
        return self.parse_cmp()

    def parse_cmp(self):
        lhs = self.parse_addsub()
        for op in ("<=>",):
            pass
        t = self.peek()
        if t.kind == "punct" and t.text in ("=", "~=", "<", "<=", ">", ">="):
            self.next()
            rhs = self.parse_addsub()
            return Cmp(t.text, as_term(lhs, t.span), as_term(rhs, t.span))
        return lhs

    def parse_addsub(self):
        lhs = self.parse_muldiv()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ("+", "-"):
                self.next()
                rhs = self.parse_muldiv()
                lhs = Arith(t.text, (as_term(lhs, t.span), as_term(rhs, t.span)))
            else:
                return lhs

    def parse_muldiv(self):
        lhs = self.parse_unary()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ("*", "/"):
                self.next()
                rhs = self.parse_unary()
                l, r = as_term(lhs, t.span), as_term(rhs, t.span)
                if t.text == "/" and isinstance(l, NumLit) and isinstance(r, NumLit) and r.value != 0:
                    lhs = NumLit(l.value / r.value)
                else:
                    lhs = Arith(t.text, (l, r))
            else:
                return lhs

    def parse_unary(self):
        t = self.peek()
        if t.kind == "punct" and t.text == "-":
            self.next()
            inner = as_term(self.parse_unary(), t.span)
            if isinstance(inner, NumLit):
                return NumLit(-inner.value)
            return Arith("neg", (inner,))
        return self.parse_primary()

    def parse_primary(self):
        t = self.peek()
        if t.kind == "number":
            self.next()
            return NumLit(Fraction(t.text))
        if t.text == "(" and t.kind == "punct":
            self.next()
            inner = self.parse_formula()
            self.expect(")")
            return inner
        if t.kind == "ident" and t.text == "true":
            self.next()
            return BoolLit(True)
        if t.kind == "ident" and t.text == "false":
            self.next()
            return BoolLit(False)
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.next()
            if self.accept("("):
                args: list[Term] = []
                if not self.at(")"):
                    args.append(as_term(self.parse_formula(), t.span))
                    while self.accept(","):
                        args.append(as_term(self.parse_formula(), t.span))
                self.expect(")")
                return App(t.text, tuple(args))
            # bare identifier: a variable or an enum constant; the distinction
            # is resolved at binding time by `_resolve`
            return Var(t.text)
        raise ParseError(f"expected formula or term, found '{t.text or 'end of input'}'", t.span)


def as_formula(x) -> Formula:
    """Coerce a parsed expression into formula position."""
    if isinstance(x, (BoolLit, Cmp, Not, And, Or, Implies, Iff, Quant)):
        return x
    return atom(x)


def as_term(x, span: SourceSpan) -> Term:
    if isinstance(x, BoolLit):
        return EnumLit("true" if x.value else "false")
    if isinstance(x, (NumLit, EnumLit, Var, App, Arith)):
        return x
    raise ParseError("formula used where a term was expected", span)


# -- post-pass: bare identifiers parse as Var; rebind enum constants and
#    0-ary symbol applications against the vocabulary


def _resolve(node, voc: Vocabulary, bound: frozenset[str]):
    if isinstance(node, Var):
        if node.name in bound:
            return node
        if voc.enum_constant_type(node.name) is not None:
            return EnumLit(node.name)
        decl = voc.symbol_named(node.name)
        if decl is not None and not decl.arg_types:
            return App(node.name, ())
        return node  # stays free; well_formed reports it
    if isinstance(node, (NumLit, EnumLit, BoolLit)):
        return node
    if isinstance(node, App):
        return App(node.symbol, tuple(_resolve(a, voc, bound) for a in node.args))
    if isinstance(node, Arith):
        return Arith(node.op, tuple(_resolve(a, voc, bound) for a in node.args))
    if isinstance(node, Cmp):
        return Cmp(node.op, _resolve(node.lhs, voc, bound), _resolve(node.rhs, voc, bound))
    if isinstance(node, Not):
        return Not(_resolve(node.body, voc, bound))
    if isinstance(node, And):
        return And(tuple(_resolve(p, voc, bound) for p in node.parts))
    if isinstance(node, Or):
        return Or(tuple(_resolve(p, voc, bound) for p in node.parts))
    if isinstance(node, Implies):
        return Implies(_resolve(node.lhs, voc, bound), _resolve(node.rhs, voc, bound))
    if isinstance(node, Iff):
        return Iff(_resolve(node.lhs, voc, bound), _resolve(node.rhs, voc, bound))
    if isinstance(node, Quant):
        return Quant(node.kind, node.var, node.type_name, _resolve(node.body, voc, bound | {node.var}))
    raise TypeError(f"unexpected node: {node!r}")


def parse_kb(
    text: str, file: str = "<kb>"
) -> tuple[Optional[tuple[Vocabulary, Theory, PartialStructure]], list[ParseDiagnostic]]:
    """Parse a KB document; on errors the diagnostics list is non-empty."""
    tokens, diags = tokenize(text, file)
    p = _Parser(tokens, diags)
    voc, th, st = p.parse_document()
    th = Theory(
        tuple(
            LabeledFormula(lf.formula_id, lf.label, _resolve(lf.formula, voc, frozenset()))
            for lf in th.formulas
        )
    )
    if any(d.severity == "error" for d in diags):
        return None, diags
    return (voc, th, st), diags


# ---------------------------------------------------------------------------
# Serializer


def fmt_number(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    # exact finite decimal when the denominator is 2^a * 5^b
    d = x.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d == 1:
        value = x
        digits = 0
        while value.denominator != 1:
            value *= 10
            digits += 1
        s = str(abs(value.numerator)).rjust(digits + 1, "0")
        sign = "-" if x < 0 else ""
        return f"{sign}{s[:-digits]}.{s[-digits:]}"
    return f"{x.numerator}/{x.denominator}"


def fmt_value(v: Value) -> str:
    return fmt_number(v) if isinstance(v, Fraction) else v


_PREC = {"iff": 0, "implies": 1, "or": 2, "and": 3, "neg": 4, "cmp": 5, "addsub": 6, "muldiv": 7, "unary": 8}


def fmt_term(t: Term, prec: int = 0) -> str:
    if isinstance(t, NumLit):
        s = fmt_number(t.value)
        return f"({s})" if t.value < 0 and prec >= _PREC["muldiv"] else s
    if isinstance(t, EnumLit):
        if t.value == "true":
            return "true"
        if t.value == "false":
            return "false"
        return t.value
    if isinstance(t, Var):
        return t.name
    if isinstance(t, App):
        if not t.args:
            return t.symbol
        return f"{t.symbol}({', '.join(fmt_term(a) for a in t.args)})"
    if isinstance(t, Arith):
        if t.op == "neg":
            inner = fmt_term(t.args[0], _PREC["unary"])
            s = f"-{inner}"
            return f"({s})" if prec > _PREC["addsub"] else s
        mine = _PREC["muldiv"] if t.op in ("*", "/") else _PREC["addsub"]
        lhs = fmt_term(t.args[0], mine)
        rhs = fmt_term(t.args[1], mine + 1)
        s = f"{lhs} {t.op} {rhs}"
        return f"({s})" if prec > mine else s
    raise TypeError(f"not a term: {t!r}")


def fmt_formula(f: Formula, prec: int = 0) -> str:
    if isinstance(f, BoolLit):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        if f.op == "=" and f.rhs == EnumLit("true") and isinstance(f.lhs, App):
            return fmt_term(f.lhs)
        s = f"{fmt_term(f.lhs, _PREC['cmp'] + 1)} {f.op} {fmt_term(f.rhs, _PREC['cmp'] + 1)}"
        return f"({s})" if prec > _PREC["cmp"] else s
    if isinstance(f, Not):
        return f"~{fmt_formula(f.body, _PREC['neg'] + 1)}"
    if isinstance(f, And):
        s = " & ".join(fmt_formula(p, _PREC["and"] + 1) for p in f.parts)
        return f"({s})" if prec > _PREC["and"] else s
    if isinstance(f, Or):
        s = " | ".join(fmt_formula(p, _PREC["or"] + 1) for p in f.parts)
        return f"({s})" if prec > _PREC["or"] else s
    if isinstance(f, Implies):
        s = f"{fmt_formula(f.lhs, _PREC['implies'] + 1)} => {fmt_formula(f.rhs, _PREC['implies'])}"
        return f"({s})" if prec > _PREC["implies"] else s
    if isinstance(f, Iff):
        s = f"{fmt_formula(f.lhs, _PREC['iff'] + 1)} <=> {fmt_formula(f.rhs, _PREC['iff'] + 1)}"
        return f"({s})" if prec > _PREC["iff"] else s
    if isinstance(f, Quant):
        marker = "!" if f.kind == "all" else "?"
        s = f"{marker}{f.var} in {f.type_name}: {fmt_formula(f.body)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"not a formula: {f!r}")


def serialize(voc: Vocabulary, th: Theory, st: PartialStructure) -> str:
    lines: list[str] = ["vocabulary {"]
    for t in voc.types:
        if isinstance(t, EnumType):
            lines.append(f"  type {t.name} := {{{', '.join(t.constants)}}}.")
        elif isinstance(t, IntType):
            lines.append(f"  type {t.name} := int [{fmt_number(t.lo)} .. {fmt_number(t.hi)}].")
        else:
            lines.append(f"  type {t.name} := rat [{fmt_number(t.lo)} .. {fmt_number(t.hi)}].")
    for s in voc.symbols:
        prefix = "" if s.category == "Hidden" else f"@category({s.category}) "
        if s.arg_types:
            sig = f"{' * '.join(s.arg_types)} -> {s.result}"
        else:
            sig = s.result
        lines.append(f"  {prefix}{s.name} : {sig}.")
    lines.append("}")
    lines.append("theory {")
    for lf in th.formulas:
        prefix = "" if lf.label == lf.formula_id else f'@label("{lf.label}") '
        lines.append(f"  {prefix}{lf.formula_id}: {fmt_formula(lf.formula)}.")
    lines.append("}")
    lines.append("structure {")
    for a in st.assignments:
        prefix = "" if a.origin == "given" else f"@origin({a.origin}) "
        head = a.symbol if not a.args else f"{a.symbol}({', '.join(fmt_value(v) for v in a.args)})"
        if isinstance(a.value, Interval):
            lines.append(f"  {prefix}{head} in [{fmt_number(a.value.lo)} .. {fmt_number(a.value.hi)}].")
        else:
            lines.append(f"  {prefix}{head} := {fmt_value(a.value)}.")
    lines.append("}")
    return "\n".join(lines) + "\n"
