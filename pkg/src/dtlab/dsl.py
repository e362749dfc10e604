"""Line-oriented text format for environment models.

Example::

    dtenv 1
    param: eps = 1/100
    states: E F
    actions: B_1 B_2
    percepts: O_0 O_T O_M O_MT
    lifetime: 1
    prior: E = 1/2
    prior: F = 1/2
    act: F | -> B_1 = 1 - $eps
    act: F | -> B_2 = $eps
    ...
    per: E | B_1 -> O_0 = 1
    utility: O_M = 1000000

History patterns are space-separated action/percept ids; ``*`` matches any
single symbol (and, in the state slot, any state).  Lines that share a state
and a pattern together form one kernel row; entries they leave out are
zero.  When several rows match a history the one with the most explicit
symbols wins, and a tie is an error.

``infoset: {h1, h2}`` groups decision points that must share an action
(``()`` is the empty history).  ``label: <step> <action> = <text>`` sets a
display name.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .env import EMPTY, EnvironmentModel, History, validate
from .errors import DtlabError, ParameterOutOfDomain

VERSION = 1

_ID = re.compile(r"[A-Za-z0-9_]+\Z")
_NUMBER = re.compile(r"(\d+(\.\d*)?|\.\d+)\Z")
_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<arrow>->)|(?P<param>\$[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<word>[A-Za-z0-9_.]+)|(?P<op>[|=+\-*/(){},:])"
)
_KEYWORDS = (
    "states", "actions", "percepts", "lifetime", "param", "prior",
    "act", "per", "utility", "infoset", "label",
)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning"
    line: int
    column: int
    message: str
    token: str = ""

    def __str__(self) -> str:
        where = f" near {self.token!r}" if self.token else ""
        return f"{self.line}:{self.column}: {self.severity}: {self.message}{where}"


class DslError(DtlabError):
    def __init__(self, diagnostics: Iterable[ParseDiagnostic]):
        self.diagnostics = tuple(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class SemanticError(DslError):
    """A well-formed document that does not describe a valid model."""


class _Syntax(Exception):
    def __init__(self, column: int, message: str, token: str = ""):
        self.column, self.message, self.token = column, message, token


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int


def _lex(text: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise _Syntax(pos + 1, "unexpected character", text[pos])
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return out


# ---------------------------------------------------------------------------
# document model

# expression nodes: ("num", Fraction) | ("param", name, col) | ("neg", e) | (op, l, r)
Expr = tuple


@dataclass(frozen=True)
class Ref:
    kind: str  # "state" | "action" | "percept" | "param"
    name: str
    line: int
    col: int


@dataclass(frozen=True)
class Row:
    """One kernel line; a ``None`` symbol is the wildcard."""

    line: int
    state: str | None
    pattern: tuple[str | None, ...]
    action: str | None
    percept: str | None
    expr: Expr


@dataclass
class EnvSpecDocument:
    version: int | None = None
    states: list[str] = field(default_factory=list)
    actions: list[str] = field(default_factory=list)
    percepts: list[str] = field(default_factory=list)
    lifetime: int | None = None
    params: dict[str, tuple[Expr, int]] = field(default_factory=dict)
    prior: dict[str, tuple[Expr, int]] = field(default_factory=dict)
    act_rows: list[Row] = field(default_factory=list)
    per_rows: list[Row] = field(default_factory=list)
    utility: dict[str, tuple[Expr, int]] = field(default_factory=dict)
    infosets: list[tuple[tuple[History, ...], int]] = field(default_factory=list)
    labels: dict[tuple[int, str], tuple[str, int]] = field(default_factory=dict)
    section_lines: dict[str, int] = field(default_factory=dict)
    warnings: list[ParseDiagnostic] = field(default_factory=list)


# ---------------------------------------------------------------------------
# parsing


class _Line:
    def __init__(self, toks: list[_Tok], end_col: int):
        self.toks, self.i, self.end_col = toks, 0, end_col

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, what: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise _Syntax(self.end_col, f"expected {what}, reached end of line")
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next(repr(text))
        if tok.text != text:
            raise _Syntax(tok.col, f"expected {text!r}", tok.text)
        return tok

    def ident(self, what: str, wildcard: bool = False) -> _Tok:
        tok = self.next(what)
        if wildcard and tok.text == "*":
            return tok
        if tok.kind != "word" or not _ID.match(tok.text):
            raise _Syntax(tok.col, f"expected {what}", tok.text)
        return tok

    def done(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise _Syntax(tok.col, "unexpected trailing input", tok.text)

    def take_until(self, text: str) -> list[_Tok]:
        out = []
        while (tok := self.peek()) is not None and tok.text != text:
            out.append(tok)
            self.i += 1
        return out

    # expressions: sum := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*
    def expr(self) -> Expr:
        node = self._term()
        while (tok := self.peek()) is not None and tok.text in "+-" and tok.kind == "op":
            self.i += 1
            node = (tok.text, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._unary()
        while (tok := self.peek()) is not None and tok.text in "*/" and tok.kind == "op":
            self.i += 1
            node = (tok.text, node, self._unary(), tok.col)
        return node

    def _unary(self) -> Expr:
        tok = self.next("a number")
        if tok.text == "-":
            return ("neg", self._unary())
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "param":
            return ("param", tok.text[1:], tok.col)
        if tok.kind == "word" and _NUMBER.match(tok.text):
            try:
                return ("num", Fraction(Decimal(tok.text)))
            except InvalidOperation:  # pragma: no cover - regex guards this
                raise _Syntax(tok.col, "malformed number", tok.text) from None
        raise _Syntax(tok.col, "expected a number, $parameter or '('", tok.text)


def _params_in(node: Expr) -> Iterable[tuple[str, int]]:
    if node[0] == "param":
        yield node[1], node[2]
    elif node[0] == "neg":
        yield from _params_in(node[1])
    elif node[0] != "num":
        yield from _params_in(node[1])
        yield from _params_in(node[2])


def evaluate(node: Expr, params: Mapping[str, Fraction]) -> Fraction:
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "param":
        return params[node[1]]
    if kind == "neg":
        return -evaluate(node[1], params)
    left, right = evaluate(node[1], params), evaluate(node[2], params)
    if kind == "+":
        return left + right
    if kind == "-":
        return left - right
    if kind == "*":
        return left * right
    if right == 0:
        raise ZeroDivisionError
    return left / right


def _pattern(toks: list[_Tok], refs: list[Ref], line: int, offset: int = 0) -> tuple[str | None, ...]:
    out = []
    for i, tok in enumerate(toks):
        if tok.text == "*":
            out.append(None)
            continue
        if tok.kind != "word" or not _ID.match(tok.text):
            raise _Syntax(tok.col, "expected an id or '*' in history pattern", tok.text)
        refs.append(Ref("action" if (i + offset) % 2 == 0 else "percept", tok.text, line, tok.col))
        out.append(tok.text)
    return tuple(out)


def _history(toks: list[_Tok], refs: list[Ref], line: int) -> History:
    if len(toks) == 2 and toks[0].text == "(" and toks[1].text == ")":
        return EMPTY
    if not toks:
        raise _Syntax(0, "empty history; write () for the empty history")
    if len(toks) % 2:
        raise _Syntax(toks[-1].col, "history must alternate actions and percepts", toks[-1].text)
    syms = _pattern(toks, refs, line)
    if None in syms:
        bad = next(t for t in toks if t.text == "*")
        raise _Syntax(bad.col, "wildcards are not allowed in information sets", "*")
    return tuple(zip(syms[0::2], syms[1::2]))


def parse(text: str) -> EnvSpecDocument:
    """Parse a document; raises :class:`DslError` with every diagnostic found."""
    doc = EnvSpecDocument()
    errors: list[ParseDiagnostic] = []
    refs: list[Ref] = []
    seen_content = False
    # section keywords that appeared, even on lines that failed to parse
    attempted: set[str] = set()

    def err(line: int, col: int, msg: str, token: str = "") -> None:
        errors.append(ParseDiagnostic("error", line, max(col, 1), msg, token))

    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        try:
            toks = _lex(body)
            ln = _Line(toks, len(body) + 1)
            head = ln.next("a keyword")
            if head.text == "dtenv":
                if seen_content:
                    raise _Syntax(head.col, "the dtenv header must be the first line", head.text)
                tok = ln.next("a version number")
                if tok.text != str(VERSION):
                    raise _Syntax(tok.col, f"unsupported format version (expected {VERSION})", tok.text)
                ln.done()
                doc.version = VERSION
                seen_content = True
                continue
            seen_content = True
            if head.text not in _KEYWORDS:
                raise _Syntax(head.col, "unknown keyword", head.text)
            attempted.add(head.text)
            ln.expect(":")
            _parse_line(doc, head.text, ln, lineno, refs)
            ln.done()
        except _Syntax as exc:
            err(lineno, exc.column, exc.message, exc.token)
        except _Duplicate as exc:
            err(lineno, exc.column, exc.message, exc.token)

    for section in ("states", "actions", "percepts", "lifetime"):
        if section not in doc.section_lines and section not in attempted:
            err(1, 1, f"missing {section} section")
    declared = {"state": set(doc.states), "action": set(doc.actions), "percept": set(doc.percepts),
                "param": set(doc.params)}
    for ref in refs:
        if ref.name not in declared[ref.kind]:
            if ref.kind == "param":
                err(ref.line, ref.col, f"undeclared parameter ${ref.name}", "$" + ref.name)
            elif ref.kind + "s" in doc.section_lines:
                err(ref.line, ref.col, f"undeclared {ref.kind} {ref.name!r}", ref.name)
    for kind, table in (("state", doc.prior), ("percept", doc.utility)):
        alphabet = doc.states if kind == "state" else doc.percepts
        missing = [x for x in alphabet if x not in table]
        if missing and kind + "s" in doc.section_lines:
            what = "prior" if kind == "state" else "utility"
            err(doc.section_lines[kind + "s"], 1, f"no {what} for {kind}s {', '.join(missing)}")
    if doc.lifetime is not None:
        for row in doc.act_rows + doc.per_rows:
            if len(row.pattern) // 2 >= doc.lifetime:
                err(row.line, 1, f"history pattern is longer than lifetime {doc.lifetime}")
    if errors:
        errors.sort(key=lambda d: (d.line, d.column))
        raise DslError(errors)
    return doc


class _Duplicate(Exception):
    def __init__(self, column: int, message: str, token: str):
        self.column, self.message, self.token = column, message, token


def _parse_line(doc: EnvSpecDocument, key: str, ln: _Line, lineno: int, refs: list[Ref]) -> None:
    if key in ("states", "actions", "percepts"):
        if key in doc.section_lines:
            raise _Duplicate(1, f"duplicate {key} section", key)
        items: list[str] = getattr(doc, key)
        while ln.peek() is not None:
            tok = ln.ident(f"{key[:-1]} id")
            if tok.text in items:
                raise _Duplicate(tok.col, f"duplicate {key[:-1]} {tok.text!r}", tok.text)
            items.append(tok.text)
        if not items:
            raise _Syntax(ln.end_col, f"{key} section is empty")
        doc.section_lines[key] = lineno
    elif key == "lifetime":
        if key in doc.section_lines:
            raise _Duplicate(1, "duplicate lifetime section", key)
        tok = ln.next("a positive integer")
        if not tok.text.isdigit() or int(tok.text) < 1:
            raise _Syntax(tok.col, "lifetime must be a positive integer", tok.text)
        doc.lifetime = int(tok.text)
        doc.section_lines[key] = lineno
    elif key == "param":
        tok = ln.ident("parameter name")
        ln.expect("=")
        expr = ln.expr()
        if tok.text in doc.params:
            raise _Duplicate(tok.col, f"duplicate parameter {tok.text!r}", tok.text)
        for name, col in _params_in(expr):
            if name not in doc.params:
                raise _Syntax(col, "parameters may only refer to earlier parameters", "$" + name)
        doc.params[tok.text] = (expr, lineno)
    elif key in ("prior", "utility"):
        kind = "state" if key == "prior" else "percept"
        tok = ln.ident(f"{kind} id")
        refs.append(Ref(kind, tok.text, lineno, tok.col))
        ln.expect("=")
        expr = ln.expr()
        _collect_params(expr, refs, lineno)
        table = doc.prior if key == "prior" else doc.utility
        if tok.text in table:
            raise _Duplicate(tok.col, f"duplicate {key} for {tok.text!r}", tok.text)
        table[tok.text] = (expr, lineno)
    elif key in ("act", "per"):
        state = ln.ident("state id or '*'", wildcard=True)
        if state.text != "*":
            refs.append(Ref("state", state.text, lineno, state.col))
        ln.expect("|")
        before = ln.take_until("->")
        arrow = ln.expect("->")
        target = ln.ident("action id" if key == "act" else "percept id")
        ln.expect("=")
        expr = ln.expr()
        _collect_params(expr, refs, lineno)
        st = None if state.text == "*" else state.text
        if key == "act":
            if len(before) % 2:
                raise _Syntax(before[-1].col, "act pattern must be a whole history (even length)",
                              before[-1].text)
            refs.append(Ref("action", target.text, lineno, target.col))
            doc.act_rows.append(Row(lineno, st, _pattern(before, refs, lineno), target.text, None, expr))
        else:
            if len(before) % 2 == 0:
                col = before[-1].col if before else arrow.col
                raise _Syntax(col, "per pattern must be a history followed by an action", arrow.text)
            pat = _pattern(before, refs, lineno)
            refs.append(Ref("percept", target.text, lineno, target.col))
            doc.per_rows.append(Row(lineno, st, pat[:-1], pat[-1], target.text, expr))
    elif key == "infoset":
        ln.expect("{")
        members: list[History] = []
        while True:
            toks = []
            while (tok := ln.peek()) is not None and tok.text not in (",", "}"):
                toks.append(tok)
                ln.i += 1
            try:
                members.append(_history(toks, refs, lineno))
            except _Syntax as exc:
                raise _Syntax(exc.column or ln.end_col, exc.message, exc.token) from None
            sep = ln.next("',' or '}'")
            if sep.text == "}":
                break
        if len(set(members)) != len(members):
            raise _Syntax(1, "information set lists a history twice")
        doc.infosets.append((tuple(members), lineno))
    elif key == "label":
        step = ln.next("a step number")
        if not step.text.isdigit() or int(step.text) < 1:
            raise _Syntax(step.col, "step must be a positive integer", step.text)
        action = ln.ident("action id")
        refs.append(Ref("action", action.text, lineno, action.col))
        ln.expect("=")
        label = ln.ident("label text")
        k = (int(step.text), action.text)
        if k in doc.labels:
            raise _Duplicate(action.col, "duplicate label", action.text)
        doc.labels[k] = (label.text, lineno)


def _collect_params(expr: Expr, refs: list[Ref], line: int) -> None:
    for name, col in _params_in(expr):
        refs.append(Ref("param", name, line, col))


# ---------------------------------------------------------------------------
# lowering


@dataclass(frozen=True)
class _Group:
    """All rows sharing a state and pattern: together they form one kernel row."""

    state: str | None
    pattern: tuple[str | None, ...]
    action: str | None  # conditioning action, percept rows only
    rows: tuple[Row, ...]

    @property
    def specificity(self) -> int:
        return (self.state is not None) + sum(t is not None for t in self.pattern) + (
            self.action is not None
        )

    @property
    def lines(self) -> str:
        return ", ".join(str(r.line) for r in self.rows)

    def matches(self, state: str, history: History, action: str | None = None) -> bool:
        if self.state is not None and self.state != state:
            return False
        if len(self.pattern) != 2 * len(history):
            return False
        if self.action is not None and self.action != action:
            return False
        flat = [x for step in history for x in step]
        return all(p is None or p == x for p, x in zip(self.pattern, flat))


def _groups(rows: list[Row], percept_rows: bool) -> list[_Group]:
    table: dict[tuple, list[Row]] = {}
    for r in rows:
        key = (r.state, r.pattern, r.action if percept_rows else None)
        table.setdefault(key, []).append(r)
    return [_Group(st, pat, act, tuple(rs)) for (st, pat, act), rs in table.items()]


def _select(
    groups: list[_Group], errs: list[ParseDiagnostic], where: str, *query
) -> _Group | None:
    hits = [g for g in groups if g.matches(*query)]
    if not hits:
        return None
    top = max(g.specificity for g in hits)
    best = [g for g in hits if g.specificity == top]
    if len(best) > 1:
        lines = "; ".join(g.lines for g in best)
        errs.append(ParseDiagnostic(
            "error", best[-1].rows[0].line, 1,
            f"ambiguous rows for {where}: equally specific patterns on lines {lines}",
        ))
    return best[0]


def resolve_params(doc: EnvSpecDocument, overrides: Mapping[str, Any] | None = None) -> dict[str, Fraction]:
    overrides = dict(overrides or {})
    unknown = [k for k in overrides if k not in doc.params]
    if unknown:
        raise ParameterOutOfDomain(
            f"unknown parameter(s) {', '.join(unknown)}; declared: {', '.join(doc.params) or 'none'}"
        )
    values: dict[str, Fraction] = {}
    for name, (expr, line) in doc.params.items():
        if name in overrides:
            raw = overrides[name]
            try:
                values[name] = raw if isinstance(raw, Fraction) else Fraction(str(raw))
            except (ValueError, ZeroDivisionError):
                raise ParameterOutOfDomain(f"{name}={raw!r} is not an exact rational") from None
        else:
            try:
                values[name] = evaluate(expr, values)
            except ZeroDivisionError:
                raise SemanticError([ParseDiagnostic("error", line, 1, "division by zero")]) from None
    return values


def lower(
    doc: EnvSpecDocument, params: Mapping[str, Any] | None = None, name: str = ""
) -> EnvironmentModel:
    """Expand rows into explicit kernels on every reachable history and validate.

    Raises :class:`SemanticError` listing each problem with the line of the
    row (or section) responsible.
    """
    values = resolve_params(doc, params)
    errs: list[ParseDiagnostic] = []

    def num(expr: Expr, line: int) -> Fraction:
        try:
            return evaluate(expr, values)
        except ZeroDivisionError:
            errs.append(ParseDiagnostic("error", line, 1, "division by zero"))
            return Fraction(0)

    prior = {s: num(*doc.prior[s]) for s in doc.states}
    utility = {e: num(*doc.utility[e]) for e in doc.percepts}
    prior_lines = sorted(line for _, line in doc.prior.values())
    for s, p in prior.items():
        if p < 0:
            errs.append(ParseDiagnostic("error", doc.prior[s][1], 1, f"negative prior for {s}"))
    total = sum(prior.values(), Fraction(0))
    if total != 1:
        errs.append(
            ParseDiagnostic(
                "error", prior_lines[0], 1,
                f"prior sums to {total}, not 1 (lines {', '.join(map(str, prior_lines))})",
            )
        )
    used: set[int] = set()
    act: dict[tuple[str, History], dict[str, Fraction]] = {}
    per: dict[tuple[str, History, str], dict[str, Fraction]] = {}
    m = doc.lifetime or 0
    life_line = doc.section_lines.get("lifetime", 1)

    def fmt(s: str, h: History, a: str | None = None) -> str:
        parts = [x for step in h for x in step] + ([a] if a else [])
        return f"state {s} at history '{' '.join(parts)}'"

    act_groups = _groups(doc.act_rows, False)
    per_groups = _groups(doc.per_rows, True)
    for group in act_groups + per_groups:
        seen: dict[str, int] = {}
        for r in group.rows:
            target = r.percept if r.percept is not None else r.action
            if target in seen:
                errs.append(ParseDiagnostic(
                    "error", r.line, 1, f"duplicate entry for {target} (first given on line {seen[target]})"
                ))
            seen.setdefault(target, r.line)

    for s in doc.states:
        if prior[s] <= 0:
            continue
        frontier: list[History] = [EMPTY]
        for _ in range(m):
            nxt: list[History] = []
            for h in frontier:
                g = _select(act_groups, errs, f"actions at {fmt(s, h)}", s, h)
                if g is None:
                    errs.append(ParseDiagnostic("error", life_line, 1, f"no act row covers {fmt(s, h)}"))
                    continue
                used.update(r.line for r in g.rows)
                row = {r.action: num(r.expr, r.line) for r in g.rows}
                problem = _row_problem(row)
                if problem:
                    errs.append(ParseDiagnostic(
                        "error", g.rows[0].line, 1,
                        f"action row for {fmt(s, h)} {problem} (lines {g.lines})",
                    ))
                    continue
                zero = [a for a in doc.actions if not row.get(a)]
                if zero:
                    errs.append(ParseDiagnostic(
                        "error", g.rows[0].line, 1,
                        f"action-positivity: {', '.join(zero)} has probability zero for {fmt(s, h)}"
                        f" (lines {g.lines})",
                    ))
                act[(s, h)] = {a: p for a, p in row.items() if p}
                for a in doc.actions:
                    if not row.get(a):
                        continue
                    pg = _select(per_groups, errs, f"percepts at {fmt(s, h, a)}", s, h, a)
                    if pg is None:
                        errs.append(ParseDiagnostic("error", life_line, 1,
                                                    f"no per row covers {fmt(s, h, a)}"))
                        continue
                    used.update(r.line for r in pg.rows)
                    prow = {r.percept: num(r.expr, r.line) for r in pg.rows}
                    problem = _row_problem(prow)
                    if problem:
                        errs.append(ParseDiagnostic(
                            "error", pg.rows[0].line, 1,
                            f"percept row for {fmt(s, h, a)} {problem} (lines {pg.lines})",
                        ))
                        continue
                    per[(s, h, a)] = {e: p for e, p in prow.items() if p}
                    nxt.extend(h + ((a, e),) for e in doc.percepts if prow.get(e))
            frontier = nxt

    if errs:
        raise SemanticError(_dedupe(errs))

    env = EnvironmentModel(
        states=tuple(doc.states),
        actions=tuple(doc.actions),
        percepts=tuple(doc.percepts),
        lifetime=m,
        prior=prior,
        action_kernel=act,
        percept_kernel=per,
        utility=utility,
        infosets=tuple(frozenset(members) for members, _ in doc.infosets),
        labels={k: v for k, (v, _) in doc.labels.items()},
        name=name,
    )
    decision = set(env.decision_points())
    for members, line in doc.infosets:
        for h in members:
            if h not in decision:
                errs.append(ParseDiagnostic(
                    "error", line, 1, f"infoset member '{env.format_history(h)}' is not a reachable decision point"
                ))
    report = validate(env)
    for issue in report.issues:
        errs.append(ParseDiagnostic("error", life_line, 1, issue.message))
    if errs:
        raise SemanticError(_dedupe(errs))
    doc.warnings[:] = [
        ParseDiagnostic("warning", r.line, 1, "row never applies to a reachable history")
        for r in doc.act_rows + doc.per_rows
        if r.line not in used
    ]
    return env


def _row_problem(row: Mapping[str, Fraction]) -> str | None:
    neg = [k for k, p in row.items() if p < 0]
    if neg:
        return f"has negative entries for {', '.join(neg)}"
    total = sum(row.values(), Fraction(0))
    if total != 1:
        return f"sums to {total}, not 1"
    return None


def _dedupe(diags: list[ParseDiagnostic]) -> list[ParseDiagnostic]:
    seen, out = set(), []
    for d in diags:
        if d not in seen:
            seen.add(d)
            out.append(d)
    out.sort(key=lambda d: (d.line, d.column))
    return out


def loads(text: str, params: Mapping[str, Any] | None = None, name: str = "") -> EnvironmentModel:
    return lower(parse(text), params, name)


def load(path, params: Mapping[str, Any] | None = None) -> EnvironmentModel:
    from pathlib import Path

    p = Path(path)
    return loads(p.read_text(encoding="utf-8"), params, name=p.stem)


def check(text: str, params: Mapping[str, Any] | None = None) -> list[ParseDiagnostic]:
    """Every diagnostic for a document, errors and warnings; never raises DslError."""
    try:
        doc = parse(text)
        lower(doc, params)
    except DslError as exc:
        return list(exc.diagnostics)
    return list(doc.warnings)


# ---------------------------------------------------------------------------
# serialization


def render(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _flat(h: History) -> str:
    return " ".join(x for step in h for x in step)


def _reachable_rows(env: EnvironmentModel):
    """(state, history) pairs the model can reach, in canonical order."""
    for s in env.states:
        if not env.prior.get(s):
            continue
        frontier: list[History] = [EMPTY]
        for _ in range(env.lifetime):
            nxt = []
            for h in frontier:
                yield s, h
                row = env.action_probs(s, h)
                for a in env.actions:
                    if row.get(a):
                        pr = env.percept_probs(s, h, a)
                        nxt.extend(h + ((a, e),) for e in env.percepts if pr.get(e))
            frontier = sorted(nxt, key=env.history_sort_key)


def serialize(env: EnvironmentModel) -> str:
    """Canonical text: fixed section order, explicit rows, lowest-terms rationals."""
    out = [f"dtenv {VERSION}"]
    out += [
        "states: " + " ".join(env.states),
        "actions: " + " ".join(env.actions),
        "percepts: " + " ".join(env.percepts),
        f"lifetime: {env.lifetime}",
    ]
    out += [f"prior: {s} = {render(Fraction(env.prior.get(s, 0)))}" for s in env.states]
    acts, pers = [], []
    for s, h in _reachable_rows(env):
        row = env.action_probs(s, h)
        pre = f"{s} | {_flat(h)}".rstrip()
        for a in env.actions:
            p = row.get(a, 0)
            if p:
                acts.append(f"act: {pre} -> {a} = {render(Fraction(p))}")
                for e in env.percepts:
                    q = env.percept_probs(s, h, a).get(e, 0)
                    if q:
                        lead = " ".join(filter(None, (_flat(h), a)))
                        pers.append(f"per: {s} | {lead} -> {e} = {render(Fraction(q))}")
    out += acts + pers
    out += [f"utility: {e} = {render(Fraction(env.utility[e]))}" for e in env.percepts]
    for (step, a), lab in sorted(env.labels.items(), key=lambda kv: (kv[0][0], env.actions.index(kv[0][1]))):
        out.append(f"label: {step} {a} = {lab}")
    for group in sorted(
        (sorted(g, key=env.history_sort_key) for g in env.infosets),
        key=lambda g: env.history_sort_key(g[0]),
    ):
        out.append("infoset: {" + ", ".join(_flat(h) or "()" for h in group) + "}")
    return "\n".join(out) + "\n"


def _q(x: Fraction) -> dict[str, int]:
    x = Fraction(x)
    return {"n": x.numerator, "d": x.denominator}


def to_json(env: EnvironmentModel) -> dict:
    """JSON-ready export; histories are arrays of [action, percept] pairs."""
    acts, pers = [], []
    for s, h in _reachable_rows(env):
        hist = [list(step) for step in h]
        row = env.action_probs(s, h)
        acts.append({"state": s, "history": hist,
                     "row": [{"action": a, "p": _q(row[a])} for a in env.actions if row.get(a)]})
        for a in env.actions:
            if row.get(a):
                prow = env.percept_probs(s, h, a)
                pers.append({"state": s, "history": hist, "action": a,
                             "row": [{"percept": e, "p": _q(prow[e])} for e in env.percepts if prow.get(e)]})
    return {
        "name": env.name,
        "states": list(env.states),
        "actions": list(env.actions),
        "percepts": list(env.percepts),
        "lifetime": env.lifetime,
        "prior": [{"state": s, "p": _q(env.prior.get(s, 0))} for s in env.states],
        "action_kernel": acts,
        "percept_kernel": pers,
        "utility": [{"percept": e, "u": _q(env.utility[e])} for e in env.percepts],
        "labels": [{"step": st, "action": a, "label": lab} for (st, a), lab in sorted(env.labels.items())],
        "infosets": [[[list(step) for step in h] for h in sorted(g, key=env.history_sort_key)]
                     for g in env.infosets],
    }


def dumps_json(env: EnvironmentModel) -> str:
    return json.dumps(to_json(env), indent=2, sort_keys=False)
