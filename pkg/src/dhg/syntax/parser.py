"""Concrete syntax for terms, formulas, and hybrid games.

The surface language is an ASCII rendering of the usual game notation:

    {x' = -1 + 2*y + z & y in [-1,1] d z in [-1,1]}     differential game
    x := t      x := *      ?F      a ++ b      a; b     a*      a^d
    [g] F       <g> F       exists y (F)     forall y (F)

`d` separates the Demon constraint from the Angel constraint inside a
differential game and is a reserved word.  Vector names declared via
`dims` expand to scalar components (x -> x1, x2); `normSq(v)` and
`dot(v, w)` are parser sugar for component sums, `v in B` for the unit
ball, and `v in [a, b]` for interval bounds.

Rational literals (including decimals) are exact.  Division and square
roots are rejected in core terms unless they fold to rational constants;
witness mode (`witness=True`) admits them as AST nodes.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Optional, Union

from .ast import (
    And, Assign, BoxF, Choice, Cmp, Const, Diamond, DiffGame, DiffVar,
    Div, Dual, Exists, FALSE, Forall, Formula, HybridGame, Iff, Implies, Max,
    Min, Mul, Neg, Not, Or, Pow, RandomAssign, Repeat, Seq, Sqrt, Term, Test,
    TRUE, Var, add, fand, free_vars, has_differentials, is_core_term, mul,
    subterms_of_kind,
)

__all__ = ["parse", "ParseError", "Parser"]

RESERVED = {
    "in", "d", "min", "max", "sqrt", "normSq", "dot", "exists", "forall",
    "true", "false", "abs",
}

_UNICODE_ALIASES = {
    "∧": "&", "∨": "|", "¬": "!", "≤": "<=", "≥": ">=", "≠": "!=",
    "→": "->", "↔": "<->", "′": "'", "∪": "++", "≔": ":=",
    "⟨": "<", "⟩": ">", "∀": "forall ", "∃": "exists ",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op><->|->|<=|>=|!=|:=|\+\+|[-+*/^'()\[\]{},;?&|!<>=])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind},{self.text!r}@{self.line}:{self.col})"


def tokenize(text: str, line_offset: int = 0) -> list[Token]:
    for u, a in _UNICODE_ALIASES.items():
        if u in text:
            text = text.replace(u, a)
    tokens = []
    line, col = 1 + line_offset, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind != "ws":
            tokens.append(Token(kind, raw, line, col))
        nl = raw.count("\n")
        if nl:
            line += nl
            col = len(raw) - raw.rfind("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# scalar or vector (tuple of components)
TermLike = Union[Term, tuple]


class Parser:
    """Recursive-descent parser over a token stream.

    dims maps vector variable names to their dimension; env maps
    abbreviation names to pre-parsed Terms, vectors, or Formulas that
    get spliced at use sites.
    """

    def __init__(self, text: str, dims: Optional[dict[str, int]] = None,
                 env: Optional[dict] = None, witness: bool = False,
                 line_offset: int = 0):
        self.tokens = tokenize(text, line_offset)
        self.pos = 0
        self.dims = dims or {}
        self.env = env or {}
        self.witness = witness

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "eof"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return tok

    def err(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    def done(self) -> bool:
        return self.peek().kind == "eof"

    def expect_end(self):
        if not self.done():
            raise self.err(f"trailing input {self.peek().text!r}")

    # -- variables and vector sugar ----------------------------------------

    def _resolve_name(self, tok: Token) -> TermLike:
        name = tok.text
        if name in self.env:
            val = self.env[name]
            if isinstance(val, Formula):
                raise ParseError(f"{name} names a formula, not a term", tok.line, tok.col)
            return val
        if name in self.dims:
            n = self.dims[name]
            return tuple(Var(name, i, span=(tok.line, tok.col)) for i in range(1, n + 1))
        m = re.fullmatch(r"([A-Za-z_$][A-Za-z0-9_$]*?)(\d+)", name)
        if m and m.group(1) in self.dims:
            base, idx = m.group(1), int(m.group(2))
            if not 1 <= idx <= self.dims[base]:
                raise ParseError(f"component {name}: {base} has dimension {self.dims[base]}",
                                 tok.line, tok.col)
            return Var(base, idx, span=(tok.line, tok.col))
        return Var(name, span=(tok.line, tok.col))

    def parse_lvalue(self) -> list[Var]:
        """Assignment target: a scalar variable or a declared vector."""
        tok = self.next()
        if tok.kind != "name" or tok.text in RESERVED:
            raise ParseError(f"expected a variable, found {tok.text!r}", tok.line, tok.col)
        v = self._resolve_name(tok)
        if isinstance(v, tuple):
            for c in v:
                if not isinstance(c, Var):
                    raise ParseError(f"{tok.text} does not name assignable variables",
                                     tok.line, tok.col)
            return list(v)
        if not isinstance(v, Var):
            raise ParseError(f"{tok.text} is an abbreviation, not a variable",
                             tok.line, tok.col)
        return [v]

    # -- terms ---------------------------------------------------------------

    def parse_term(self) -> Term:
        t = self.parse_termlike()
        if isinstance(t, tuple):
            raise self.err("vector term where a scalar is required")
        return t

    def parse_termlike(self) -> TermLike:
        return self._sum()

    def _sum(self) -> TermLike:
        t = self._product()
        while True:
            if self.accept("+"):
                t = _vadd(t, self._product(), self)
            elif self.accept("-"):
                t = _vadd(t, _vneg(self._product()), self)
            else:
                return t

    def _product(self) -> TermLike:
        t = self._unary()
        while True:
            if self.accept("*"):
                t = _vmul(t, self._unary(), self)
            elif self.peek().text == "/" and self.peek(1).text != "=":
                self.next()
                t = self._divide(t, self._unary())
            else:
                return t

    def _divide(self, a: TermLike, b: TermLike) -> TermLike:
        if isinstance(b, tuple):
            raise self.err("division by a vector")
        if isinstance(a, tuple):
            return tuple(self._divide(c, b) for c in a)
        fa, fb = _const_value(a), _const_value(b)
        if fb is not None:
            if fb == 0:
                raise self.err("division by zero")
            if fa is not None:
                return Const(fa / fb)
            # constant divisor folds into a rational coefficient in any mode
            return mul(Const(1 / fb), a)
        if not self.witness:
            raise self.err("division is only allowed in witness terms")
        return Div(a, b)

    def _unary(self) -> TermLike:
        if self.accept("-"):
            return _vneg(self._unary())
        if self.accept("+"):
            return self._unary()
        return self._postfix()

    def _postfix(self) -> TermLike:
        t = self._atom()
        while True:
            if self.at("^") and self.peek(1).kind == "num":
                self.next()
                tok = self.next()
                if "." in tok.text:
                    raise ParseError("power exponent must be a natural number",
                                     tok.line, tok.col)
                n = int(tok.text)
                if n < 1:
                    raise ParseError("power exponents must be >= 1", tok.line, tok.col)
                t = _vpow(t, n, self)
            elif self.at("'"):
                self.next()
                t = _vdiff(t, self)
            else:
                return t

    def _atom(self) -> TermLike:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Const(Fraction(tok.text), span=(tok.line, tok.col))
        if tok.text == "(":
            self.next()
            t = self.parse_termlike()
            if self.at(","):
                parts = [t]
                while self.accept(","):
                    parts.append(self.parse_termlike())
                self.expect(")")
                flat: list[Term] = []
                for p in parts:
                    flat.extend(p if isinstance(p, tuple) else [p])
                return tuple(flat)
            self.expect(")")
            return t
        if tok.kind == "name":
            name = tok.text
            if name == "min" or name == "max":
                self.next()
                self.expect("(")
                a = self.parse_term()
                self.expect(",")
                b = self.parse_term()
                self.expect(")")
                return (Min if name == "min" else Max)(a, b, span=(tok.line, tok.col))
            if name == "sqrt":
                self.next()
                self.expect("(")
                a = self.parse_term()
                self.expect(")")
                fa = _const_value(a)
                if fa is not None:
                    root = _exact_sqrt(fa)
                    if root is not None:
                        return Const(root)
                if not self.witness:
                    raise ParseError(
                        "sqrt is only allowed in witness terms "
                        "(or on perfect-square constants)", tok.line, tok.col)
                return Sqrt(a, span=(tok.line, tok.col))
            if name == "normSq":
                self.next()
                self.expect("(")
                v = self.parse_termlike()
                self.expect(")")
                comps = v if isinstance(v, tuple) else (v,)
                return add(*[Pow(c, 2) if not isinstance(c, Const) else Const(c.value ** 2)
                             for c in comps])
            if name == "dot":
                self.next()
                self.expect("(")
                a = self.parse_termlike()
                self.expect(",")
                b = self.parse_termlike()
                self.expect(")")
                ca = a if isinstance(a, tuple) else (a,)
                cb = b if isinstance(b, tuple) else (b,)
                if len(ca) != len(cb):
                    raise ParseError("dot of vectors with different dimensions",
                                     tok.line, tok.col)
                return add(*[mul(x, y) for x, y in zip(ca, cb)])
            if name in ("in", "d"):
                raise ParseError(f"reserved word {name!r} cannot start a term",
                                 tok.line, tok.col)
            self.next()
            return self._resolve_name(tok)
        raise ParseError(f"expected a term, found {tok.text or 'end of input'!r}",
                         tok.line, tok.col)

    # -- formulas ------------------------------------------------------------

    def parse_formula(self, derived: bool = False) -> Formula:
        f = self._iff()
        if not derived and has_differentials(f):
            raise self.err("differential symbols are only allowed in derived formulas")
        return f

    def _iff(self) -> Formula:
        f = self._implies()
        if self.accept("<->"):
            return Iff(f, self._iff())
        return f

    def _implies(self) -> Formula:
        f = self._or()
        if self.accept("->"):
            return Implies(f, self._implies())
        return f

    def _or(self) -> Formula:
        f = self._and()
        while self.accept("|"):
            f = _flat_or(f, self._and())
        return f

    def _and(self) -> Formula:
        f = self._not()
        while self.accept("&"):
            f = _flat_and(f, self._not())
        return f

    def _not(self) -> Formula:
        if self.accept("!"):
            return Not(self._not())
        return self._fatom()

    def _fatom(self) -> Formula:
        tok = self.peek()
        if tok.text == "(":
            # could be a parenthesized formula or a parenthesized term
            save = self.pos
            try:
                self.next()
                f = self._iff()
                self.expect(")")
                return f
            except ParseError:
                self.pos = save
                return self._comparison()
        if tok.text == "[":
            self.next()
            g = self.parse_game()
            self.expect("]")
            body = self._not()
            return BoxF(g, body, span=(tok.line, tok.col))
        if tok.text == "<":
            self.next()
            g = self.parse_game()
            self.expect(">")
            body = self._not()
            return Diamond(g, body, span=(tok.line, tok.col))
        if tok.text in ("exists", "forall"):
            self.next()
            vs = self.parse_lvalue()
            self.expect("(")
            body = self._iff()
            self.expect(")")
            for v in reversed(vs):
                body = (Exists if tok.text == "exists" else Forall)(v, body)
            return body
        if tok.text == "true":
            self.next()
            return TRUE
        if tok.text == "false":
            self.next()
            return FALSE
        if tok.kind == "name" and tok.text in self.env \
                and isinstance(self.env[tok.text], Formula) \
                and self.peek(1).text not in ("<=", "<", "=", "!=", ">", ">=", "in",
                                              "'", "^", "+", "-", "*", "/"):
            self.next()
            return self.env[tok.text]
        return self._comparison()

    def _comparison(self) -> Formula:
        left = self.parse_termlike()
        tok = self.peek()
        if tok.text == "in":
            self.next()
            return self._membership(left)
        if tok.text in ("<=", "<", "=", "!=", ">", ">="):
            self.next()
            right = self.parse_termlike()
            return self._make_cmp(tok.text, left, right, tok)
        raise ParseError(f"expected a comparison, found {tok.text or 'end of input'!r}",
                         tok.line, tok.col)

    def _make_cmp(self, op: str, left: TermLike, right: TermLike, tok: Token) -> Formula:
        if isinstance(left, tuple) or isinstance(right, tuple):
            lc = left if isinstance(left, tuple) else (left,)
            rc = right if isinstance(right, tuple) else (right,)
            if len(lc) != len(rc):
                raise ParseError("comparison of vectors with different dimensions",
                                 tok.line, tok.col)
            if op != "=":
                raise ParseError("only = lifts to vectors componentwise", tok.line, tok.col)
            return fand(*[Cmp("=", a, b) for a, b in zip(lc, rc)])
        return Cmp(op, left, right, span=(tok.line, tok.col))

    def _membership(self, subject: TermLike) -> Formula:
        tok = self.peek()
        if tok.text == "[":
            self.next()
            lo = self.parse_term()
            self.expect(",")
            hi = self.parse_term()
            self.expect("]")
            comps = subject if isinstance(subject, tuple) else (subject,)
            parts = []
            for c in comps:
                parts.append(Cmp("<=", lo, c))
                parts.append(Cmp("<=", c, hi))
            return fand(*parts)
        if tok.kind == "name" and tok.text == "B":
            self.next()
            comps = subject if isinstance(subject, tuple) else (subject,)
            norm = add(*[Pow(c, 2) for c in comps])
            return Cmp("<=", norm, Const(Fraction(1)))
        raise ParseError("expected [lo, hi] or B after 'in'", tok.line, tok.col)

    # -- games -----------------------------------------------------------------

    def parse_game(self) -> HybridGame:
        return self._choice_game()

    def _choice_game(self) -> HybridGame:
        g = self._seq_game()
        if self.accept("++"):
            return Choice(g, self._choice_game())
        return g

    def _seq_game(self) -> HybridGame:
        g = self._postfix_game()
        if self.accept(";"):
            return Seq(g, self._seq_game())
        return g

    def _postfix_game(self) -> HybridGame:
        g = self._atom_game()
        while True:
            if self.accept("*"):
                g = Repeat(g)
            elif self.at("^") and self.peek(1).text == "d":
                self.next()
                self.next()
                g = Dual(g)
            else:
                return g

    def _atom_game(self) -> HybridGame:
        tok = self.peek()
        if tok.text == "(":
            self.next()
            g = self.parse_game()
            self.expect(")")
            return g
        if tok.text == "?":
            self.next()
            if self.at("("):
                self.next()
                cond = self._iff()
                self.expect(")")
            else:
                cond = self._fatom()
            if has_differentials(cond):
                raise ParseError("test condition must be differential-symbol-free",
                                 tok.line, tok.col)
            return Test(cond, span=(tok.line, tok.col))
        if tok.text == "{":
            return self._diffgame()
        # assignment: x := term | x := *
        if tok.kind == "name":
            vs = self.parse_lvalue()
            assign_tok = self.expect(":=")
            if self.accept("*"):
                game: HybridGame = RandomAssign(vs[-1], span=(tok.line, tok.col))
                for v in reversed(vs[:-1]):
                    game = Seq(RandomAssign(v, span=(tok.line, tok.col)), game)
                return game
            rhs = self.parse_termlike()
            comps = rhs if isinstance(rhs, tuple) else (rhs,)
            if len(comps) != len(vs):
                raise ParseError("assignment dimension mismatch",
                                 assign_tok.line, assign_tok.col)
            if len(vs) > 1:
                written = {v.key for v in vs}
                for c in comps:
                    if free_vars(c) & written:
                        raise ParseError(
                            "vector assignment right-hand side reads its own target",
                            assign_tok.line, assign_tok.col)
            for v, c in zip(vs, comps):
                _require_core(c, self, assign_tok)
            game = Assign(vs[-1], comps[-1], span=(tok.line, tok.col))
            for v, c in zip(reversed(vs[:-1]), reversed(comps[:-1])):
                game = Seq(Assign(v, c, span=(tok.line, tok.col)), game)
            return game
        raise ParseError(f"expected a game, found {tok.text or 'end of input'!r}",
                         tok.line, tok.col)

    def _diffgame(self) -> DiffGame:
        open_tok = self.expect("{")
        states: list[Var] = []
        rhs: list[Term] = []
        while True:
            vs = self.parse_lvalue()
            self.expect("'")
            eq_tok = self.expect("=")
            t = self.parse_termlike()
            comps = t if isinstance(t, tuple) else (t,)
            if len(comps) != len(vs):
                raise ParseError(
                    f"{len(vs)}-dimensional state with {len(comps)}-dimensional "
                    "right-hand side", eq_tok.line, eq_tok.col)
            for v, c in zip(vs, comps):
                _require_core(c, self, eq_tok)
                states.append(v)
                rhs.append(c)
            if not self.accept(","):
                break
        demon = None
        angel = None
        if self.accept("&"):
            if not self.at("d") and not self.at("}"):
                demon = self._iff()
            if self.accept("d"):
                if not self.at("}"):
                    angel = self._iff()
        self.expect("}")
        g = DiffGame(tuple(states), tuple(rhs), demon, angel,
                     span=(open_tok.line, open_tok.col))
        _check_diffgame(g, open_tok)
        return g


def _check_diffgame(g: DiffGame, tok: Token):
    state_keys = {v.key for v in g.states}
    if len(state_keys) != len(g.states):
        raise ParseError("duplicate state variable in differential game", tok.line, tok.col)
    for label, cons in (("Demon", g.demon_constraint), ("Angel", g.angel_constraint)):
        if cons is None:
            continue
        if subterms_of_kind(cons, (Diamond, BoxF)):
            raise ParseError(f"{label} constraint contains game modalities",
                             tok.line, tok.col)
        overlap = free_vars(cons) & state_keys
        if overlap:
            raise ParseError(
                f"{label} constraint mentions state variable "
                f"{sorted(overlap)[0][0]}; control constraints must be over "
                "control variables only", tok.line, tok.col)
    demon_keys = {v.key for v in g.demon_vars}
    angel_keys = {v.key for v in g.angel_vars}
    if demon_keys & angel_keys:
        raise ParseError("a control variable occurs in both constraints", tok.line, tok.col)


def _require_core(t: Term, p: Parser, tok: Token):
    if not is_core_term(t):
        raise ParseError("division/sqrt are not allowed in core-language terms",
                         tok.line, tok.col)


def _const_value(t: Term) -> Optional[Fraction]:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Neg):
        v = _const_value(t.arg)
        return None if v is None else -v
    return None


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    import math
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def _vneg(t: TermLike) -> TermLike:
    if isinstance(t, tuple):
        return tuple(_vneg(c) for c in t)
    if isinstance(t, Const):
        return Const(-t.value)
    if isinstance(t, Neg):
        return t.arg
    if isinstance(t, Mul) and isinstance(t.args[0], Const):
        return Mul((Const(-t.args[0].value),) + t.args[1:])
    return Neg(t)


def _vadd(a: TermLike, b: TermLike, p: Parser) -> TermLike:
    if isinstance(a, tuple) or isinstance(b, tuple):
        if not (isinstance(a, tuple) and isinstance(b, tuple)) or len(a) != len(b):
            raise p.err("vector addition dimension mismatch")
        return tuple(_vadd(x, y, p) for x, y in zip(a, b))
    return add(a, b)


def _vmul(a: TermLike, b: TermLike, p: Parser) -> TermLike:
    if isinstance(a, tuple) and isinstance(b, tuple):
        raise p.err("use dot(v, w) for vector products")
    if isinstance(a, tuple):
        return tuple(_vmul(c, b, p) for c in a)
    if isinstance(b, tuple):
        return tuple(_vmul(a, c, p) for c in b)
    return mul(a, b)


def _vpow(t: TermLike, n: int, p: Parser) -> TermLike:
    if isinstance(t, tuple):
        raise p.err("powers of vectors are not defined; use normSq")
    if isinstance(t, Const):
        return Const(t.value ** n)
    if n == 1:
        return t
    return Pow(t, n)


def _vdiff(t: TermLike, p: Parser) -> TermLike:
    if isinstance(t, tuple):
        return tuple(_vdiff(c, p) for c in t)
    if isinstance(t, Var):
        return DiffVar(t.name, t.index, span=t.span)
    raise p.err("differential symbol ' applies to variables only")


def _flat_and(a: Formula, b: Formula) -> Formula:
    parts = (a.args if isinstance(a, And) else (a,)) + \
            (b.args if isinstance(b, And) else (b,))
    return And(parts)


def _flat_or(a: Formula, b: Formula) -> Formula:
    parts = (a.args if isinstance(a, Or) else (a,)) + \
            (b.args if isinstance(b, Or) else (b,))
    return Or(parts)


def parse(text: str, kind: str, dims: Optional[dict[str, int]] = None,
          env: Optional[dict] = None, witness: bool = False,
          derived: bool = False):
    """Parse `text` as a term, formula, or game.

    Core-language restrictions (no division/sqrt, no differential
    symbols in formulas) apply unless `witness` / `derived` is set.
    Proof scripts are whole files; see `dhg.syntax.dhgfile`.
    """
    if kind == "script":
        from .dhgfile import parse_dhg
        return parse_dhg(text)
    p = Parser(text, dims=dims, env=env, witness=witness)
    if kind == "term":
        t = p.parse_term()
        p.expect_end()
        return t
    if kind == "formula":
        f = p.parse_formula(derived=derived)
        p.expect_end()
        return f
    if kind == "game":
        g = p.parse_game()
        p.expect_end()
        return g
    raise ValueError(f"unknown parse kind {kind!r}")
