"""The `.dhg` file format: one goal + one proof script + declarations.

Sections (`#` comments, UTF-8):

    consts:
      vec x : 2              vector declaration (x expands to x1, x2)
      p = 3/4                named term, folded to exact rationals
      C = v1 = 1/2 & c > 0   named formula abbreviation
    goal: <dGL formula>
    proof:
      intro                  one rule per line, children indented
      DGI witness (y := 1) use (c >= 1; c <= 2)
    regions:
      x in [-5, 5]           discharge boxes for free/universal variables
    oracle:
      box x = [-3, 3]        value-grid extent (defaults to regions)
      dx = 0.05
      dt = 0.01
      horizon = 1
      tau = 0.05
      control-samples = 5
      target = x >= 1        winning-region target set
      monitor = 1 <= x^3     rollout monitor
      payoff = x^3 - 1       value payoff (defaults to arithmetized post)
      witness main (y := 1)  named demon feedback witnesses

Rule arguments in parentheses are parsed in witness mode (division and
sqrt allowed); everything else is core language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ast import Div, Formula, HybridGame, Sqrt, Term, Var, VarKey, subterms_of_kind
from .parser import ParseError, Parser

__all__ = ["DhgFile", "ProofStep", "RuleArgs", "OracleConfig", "parse_dhg",
           "parse_dhg_file"]

_SECTIONS = ("consts", "goal", "proof", "regions", "oracle")

_RULE_NAMES = {
    "DGI", "DGV", "DGR", "assign", "random-assign", "test", "choice",
    "compose", "iterate", "dual", "diamond-dual", "evolve-solution",
    "monotone", "loop-ind", "arith", "intro", "cases",
}

_ARG_KEYWORDS = ("witness", "use", "eps", "epsilon", "game", "solution",
                 "invariant")


@dataclass
class RuleArgs:
    witnesses: dict[VarKey, Term] = field(default_factory=dict)
    solutions: dict[VarKey, Term] = field(default_factory=dict)
    formula: Optional[Formula] = None          # loop-ind / monotone / cases
    epsilon: Optional[Fraction] = None
    game: Optional[HybridGame] = None          # DGR antecedent
    use: Optional[list[Formula]] = None        # context selection


@dataclass
class ProofStep:
    rule: str
    args: RuleArgs
    line: int
    children: list["ProofStep"] = field(default_factory=list)


@dataclass
class OracleConfig:
    boxes: dict[VarKey, tuple[Fraction, Fraction]] = field(default_factory=dict)
    dx: Fraction = Fraction(1, 20)
    dt: Fraction = Fraction(1, 100)
    horizon: Fraction = Fraction(1)
    tau: float = 0.05
    control_samples: int = 5
    target: Optional[Formula] = None
    monitor: Optional[Formula] = None
    payoff: Optional[Term] = None
    witnesses: dict[str, dict[VarKey, Term]] = field(default_factory=dict)


@dataclass
class DhgFile:
    path: str
    dims: dict[str, int]
    env: dict
    goal: Formula
    steps: list[ProofStep]
    regions: dict[VarKey, tuple[Fraction, Fraction]]
    oracle: OracleConfig


def parse_dhg_file(path: str) -> DhgFile:
    with open(path, encoding="utf-8") as fh:
        return parse_dhg(fh.read(), path=path)


def parse_dhg(text: str, path: str = "<string>") -> DhgFile:
    sections = _split_sections(text)
    dims: dict[str, int] = {}
    env: dict = {}
    for line_no, line in sections.get("consts", []):
        _parse_const_line(line, line_no, dims, env)

    goal_lines = sections.get("goal", [])
    if not goal_lines:
        raise ParseError("missing goal section", 1, 1)
    goal_line = goal_lines[0][0]
    goal_text = "\n" * (goal_line - 1) + "\n".join(l for _, l in goal_lines)
    p = Parser(goal_text, dims=dims, env=env)
    goal = p.parse_formula()
    p.expect_end()
    _require_core_formula(goal, goal_line)

    steps = _parse_proof(sections.get("proof", []), dims, env)

    regions: dict[VarKey, tuple[Fraction, Fraction]] = {}
    for line_no, line in sections.get("regions", []):
        _parse_region_line(line, line_no, dims, env, regions)

    oracle = _parse_oracle(sections.get("oracle", []), dims, env)
    if not oracle.boxes:
        oracle.boxes = dict(regions)

    return DhgFile(path=path, dims=dims, env=env, goal=goal, steps=steps,
                   regions=regions, oracle=oracle)


def _require_core_formula(f: Formula, line: int):
    if subterms_of_kind(f, (Div, Sqrt)):
        raise ParseError(
            "goal contains division or sqrt; these belong in witness "
            "arguments of proof steps only", line, 1)


def _split_sections(text: str) -> dict[str, list[tuple[int, str]]]:
    sections: dict[str, list[tuple[int, str]]] = {}
    current: Optional[str] = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = re.match(r"^([A-Za-z][A-Za-z-]*):(.*)$", line)
        if m and not raw[0].isspace() and m.group(1) in _SECTIONS:
            current = m.group(1)
            sections.setdefault(current, [])
            tail = m.group(2).strip()
            if tail:
                sections[current].append((i, tail))
            continue
        if current is None:
            raise ParseError(f"content before any section: {line.strip()!r}", i, 1)
        sections[current].append((i, raw.split("#", 1)[0].rstrip("\n")))
    return sections


def _parse_const_line(line: str, line_no: int, dims: dict, env: dict):
    stripped = line.strip()
    m = re.match(r"^vec\s+([A-Za-z_$][A-Za-z0-9_$]*(?:\s*,\s*[A-Za-z_$][A-Za-z0-9_$]*)*)"
                 r"\s*:\s*(\d+)$", stripped)
    if m:
        for name in re.split(r"\s*,\s*", m.group(1)):
            dims[name] = int(m.group(2))
        return
    m = re.match(r"^([A-Za-z_$][A-Za-z0-9_$]*)\s*=\s*(.+)$", stripped)
    if not m:
        raise ParseError(f"bad consts line: {stripped!r}", line_no, 1)
    name, rhs = m.group(1), m.group(2)
    value = _parse_formula_or_term(rhs, line_no, dims, env)
    env[name] = value


def _parse_formula_or_term(text: str, line_no: int, dims: dict, env: dict):
    from ..symbolic.simplify import simplify
    p = Parser(text, dims=dims, env=env, witness=True, line_offset=line_no - 1)
    save = p.pos
    try:
        f = p.parse_formula(derived=False)
        p.expect_end()
        return f
    except ParseError:
        p.pos = save
    t = p.parse_termlike()
    p.expect_end()
    if isinstance(t, tuple):
        return tuple(simplify(c) for c in t)
    return simplify(t)


def _parse_region_line(line: str, line_no: int, dims: dict, env: dict,
                       regions: dict):
    p = Parser(line, dims=dims, env=env, line_offset=line_no - 1)
    vs = p.parse_lvalue()
    p.expect("in")
    p.expect("[")
    lo = _const_term(p, line_no)
    p.expect(",")
    hi = _const_term(p, line_no)
    p.expect("]")
    p.expect_end()
    if lo > hi:
        raise ParseError("empty region interval", line_no, 1)
    for v in vs:
        regions[v.key] = (lo, hi)


def _const_term(p: Parser, line_no: int) -> Fraction:
    from ..symbolic.simplify import simplify
    from .ast import Const
    t = simplify(p.parse_term())
    if not isinstance(t, Const):
        raise ParseError("region bounds must be rational constants", line_no, 1)
    return t.value


# ---------------------------------------------------------------------------
# proof scripts
# ---------------------------------------------------------------------------


def _parse_proof(lines: list[tuple[int, str]], dims: dict, env: dict) -> list[ProofStep]:
    entries = []
    for line_no, raw in lines:
        stripped = raw.strip()
        if not stripped:
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        entries.append((indent, line_no, stripped))
    steps, pos = _parse_block(entries, 0, -1, dims, env)
    if pos != len(entries):
        _, line_no, text = entries[pos]
        raise ParseError(f"inconsistent proof indentation at {text!r}", line_no, 1)
    return steps


def _parse_block(entries, pos, parent_indent, dims, env) -> tuple[list[ProofStep], int]:
    steps: list[ProofStep] = []
    block_indent: Optional[int] = None
    while pos < len(entries):
        indent, line_no, text = entries[pos]
        if indent <= parent_indent:
            break
        if block_indent is None:
            block_indent = indent
        if indent < block_indent:
            break
        if indent > block_indent:
            raise ParseError("unexpected indentation", line_no, 1)
        step = _parse_step_line(text, line_no, dims, env)
        pos += 1
        step.children, pos = _parse_block(entries, pos, block_indent, dims, env)
        steps.append(step)
    return steps, pos


def _parse_step_line(text: str, line_no: int, dims: dict, env: dict) -> ProofStep:
    m = re.match(r"^(rule\s+)?([A-Za-z][A-Za-z-]*)\s*(.*)$", text)
    if not m:
        raise ParseError(f"bad proof step: {text!r}", line_no, 1)
    rule = m.group(2)
    if rule not in _RULE_NAMES:
        raise ParseError(f"unknown rule {rule!r}", line_no, 1)
    rest = m.group(3)
    args = RuleArgs()
    while rest:
        rest = rest.lstrip()
        if not rest:
            break
        if rest.startswith("("):
            # positional formula argument (loop-ind, monotone, cases)
            inner, rest = _balanced_paren(rest, line_no)
            args.formula = _parse_arg_formula(inner, line_no, dims, env)
            continue
        m = re.match(r"^([A-Za-z-]+)\s*", rest)
        if not m:
            raise ParseError(f"bad rule argument near {rest!r}", line_no, 1)
        key = m.group(1)
        rest = rest[m.end():]
        if key in ("eps", "epsilon"):
            m = re.match(r"^(-?\d+(?:\.\d+)?(?:/\d+)?)\s*", rest)
            if not m:
                raise ParseError("eps needs a rational value", line_no, 1)
            args.epsilon = Fraction(m.group(1))
            rest = rest[m.end():]
            continue
        if key not in _ARG_KEYWORDS and key != "region":
            raise ParseError(f"unknown rule argument {key!r}", line_no, 1)
        inner, rest = _balanced_paren(rest, line_no)
        if key == "witness":
            args.witnesses.update(_parse_assignments(inner, line_no, dims, env))
        elif key == "solution":
            args.solutions.update(_parse_assignments(inner, line_no, dims, env))
        elif key == "use":
            args.use = (args.use or []) + _parse_formula_list(inner, line_no, dims, env)
        elif key == "game":
            p = Parser(inner, dims=dims, env=env, line_offset=line_no - 1)
            args.game = p.parse_game()
            p.expect_end()
        elif key == "invariant":
            args.formula = _parse_arg_formula(inner, line_no, dims, env)
    step = ProofStep(rule=rule, args=args, line=line_no)
    return step


def _balanced_paren(text: str, line_no: int) -> tuple[str, str]:
    text = text.lstrip()
    if not text.startswith("("):
        raise ParseError("expected a parenthesized argument", line_no, 1)
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return text[1:i], text[i + 1:]
    raise ParseError("unbalanced parentheses in rule arguments", line_no, 1)


def _parse_assignments(text: str, line_no: int, dims: dict, env: dict) -> dict:
    out: dict[VarKey, Term] = {}
    p = Parser(text, dims=dims, env=env, witness=True, line_offset=line_no - 1)
    while True:
        vs = p.parse_lvalue()
        p.expect(":=")
        t = p.parse_termlike()
        comps = t if isinstance(t, tuple) else (t,)
        if len(comps) != len(vs):
            raise ParseError("witness dimension mismatch", line_no, 1)
        from ..symbolic.simplify import simplify
        for v, c in zip(vs, comps):
            out[v.key] = simplify(c)
        if p.done():
            return out
        p.expect(",")


def _parse_formula_list(text: str, line_no: int, dims: dict, env: dict) -> list[Formula]:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        out.append(_parse_arg_formula(chunk, line_no, dims, env))
    return out


def _parse_arg_formula(text: str, line_no: int, dims: dict, env: dict) -> Formula:
    p = Parser(text, dims=dims, env=env, witness=True, line_offset=line_no - 1)
    f = p.parse_formula()
    p.expect_end()
    return f


# ---------------------------------------------------------------------------
# oracle section
# ---------------------------------------------------------------------------


def _parse_oracle(lines: list[tuple[int, str]], dims: dict, env: dict) -> OracleConfig:
    cfg = OracleConfig()
    for line_no, raw in lines:
        line = raw.strip()
        if not line:
            continue
        m = re.match(r"^box\s+(.+)$", line)
        if m:
            sub = m.group(1).replace("=", "in", 1) if " in " not in m.group(1) else m.group(1)
            boxes: dict = {}
            _parse_region_line(sub, line_no, dims, env, boxes)
            cfg.boxes.update(boxes)
            continue
        m = re.match(r"^witness\s+([A-Za-z_][A-Za-z0-9_-]*)\s*(\(.*\))\s*$", line)
        if m:
            inner, rest = _balanced_paren(m.group(2), line_no)
            if rest.strip():
                raise ParseError("trailing input after witness", line_no, 1)
            cfg.witnesses[m.group(1)] = _parse_assignments(inner, line_no, dims, env)
            continue
        m = re.match(r"^([A-Za-z-]+)\s*=\s*(.+)$", line)
        if not m:
            raise ParseError(f"bad oracle line {line!r}", line_no, 1)
        key, value = m.group(1), m.group(2).strip()
        if key == "dx":
            cfg.dx = Fraction(value)
        elif key == "dt":
            cfg.dt = Fraction(value)
        elif key in ("horizon", "T"):
            cfg.horizon = Fraction(value)
        elif key == "tau":
            cfg.tau = float(Fraction(value))
        elif key == "control-samples":
            cfg.control_samples = int(value)
        elif key == "target":
            cfg.target = _parse_arg_formula(value, line_no, dims, env)
        elif key == "monitor":
            cfg.monitor = _parse_arg_formula(value, line_no, dims, env)
        elif key == "payoff":
            p = Parser(value, dims=dims, env=env, witness=True, line_offset=line_no - 1)
            cfg.payoff = p.parse_term()
            p.expect_end()
        else:
            raise ParseError(f"unknown oracle key {key!r}", line_no, 1)
    return cfg
