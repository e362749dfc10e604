"""Command-line front end.

Exit codes: 0 success, 1 domain error (a diagnostic is printed), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import os
import sys
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from . import dsl, library, tables
from .env import EMPTY, EnvironmentModel, History
from .errors import DtlabError
from .oneshot import (
    DECIDERS,
    OneShotProblem,
    causal_family,
    evidential_family,
    project_step,
)
from .solver import DEFAULT_BUDGET, solve
from .values import Policy, Theory, evaluate

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# rendering


class Renderer:
    def __init__(self, fmt: str, exact: bool, precision: int) -> None:
        self.fmt, self.exact, self.precision = fmt, exact, precision

    def decimal(self, q: Fraction) -> str:
        if q == 0:
            return "0"
        with localcontext() as ctx:
            ctx.prec = self.precision
            ctx.rounding = ROUND_HALF_EVEN
            d = Decimal(q.numerator) / Decimal(q.denominator)
        text = format(d, "f")
        if "." in text:
            text = text.rstrip("0").rstrip(".")
        return text

    def num(self, q: Fraction) -> str:
        """Text/CSV rendering: exact n/d with --exact, otherwise a decimal."""
        return dsl.render(q) if self.exact else self.decimal(q)

    def rational(self, q: Fraction) -> dict:
        return {"n": q.numerator, "d": q.denominator, "decimal": self.decimal(q)}


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _aligned(rows: Sequence[Sequence[str]], indent: str = "") -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return [
        indent + "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows
    ]


# ---------------------------------------------------------------------------
# argument helpers


def _params(pairs: Sequence[str] | None) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise UsageError(f"--param expects name=value, got {pair!r}")
        key, raw = (x.strip() for x in pair.split("=", 1))
        try:
            out[key] = Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"--param {key}: {raw!r} is not an exact rational") from None
    return out


def _load_env(ref: str, params: dict[str, Fraction]) -> tuple[EnvironmentModel, str | None]:
    """Resolve a library name or a ``.env`` path; the second item is the library name."""
    if ref.endswith(".env") or os.sep in ref or Path(ref).is_file():
        path = Path(ref)
        if not path.is_file():
            raise UsageError(f"no such environment file: {ref}")
        return dsl.load(path, params), None
    return library.build(ref, params), ref


def _history(env: EnvironmentModel, text: str | None) -> tuple[History, str | None]:
    if not text:
        return EMPTY, None
    try:
        return env.parse_history(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _show_history(env: EnvironmentModel, h: History) -> str:
    return env.format_history(h) or "(root)"


def _policy_cells(env: EnvironmentModel, policy: Policy) -> list[tuple[str, str]]:
    return [
        (_show_history(env, h), env.label(len(h) + 1, policy(h)))
        for h in sorted(policy.table, key=env.history_sort_key)
    ]


def _policy_inline(env: EnvironmentModel, policy: Policy) -> str:
    return "; ".join(f"{h} -> {a}" for h, a in _policy_cells(env, policy))


def _policy_json(env: EnvironmentModel, policy: Policy) -> list[dict]:
    return [
        {"history": [list(step) for step in h], "action": policy(h), "text": _show_history(env, h)}
        for h in sorted(policy.table, key=env.history_sort_key)
    ]


def _policy_from_file(env: EnvironmentModel, path: Path) -> Policy:
    """JSON object mapping history text ("" for the root) to actions; "*" is a default."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read policy file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("policy file must be a JSON object of history -> action")
    default = data.pop("*", None)
    table: dict[History, str] = {}
    for text, action in data.items():
        h, trailing = env.parse_history(text)
        if trailing is not None:
            raise UsageError(f"policy key {text!r} must be a history, not end in an action")
        table[h] = env._resolve_action(len(h) + 1, action)
    missing = []
    for h in env.decision_points():
        if h not in table:
            if default is None:
                missing.append(_show_history(env, h))
            else:
                table[h] = env._resolve_action(len(h) + 1, default)
    if missing:
        raise DtlabError(f"policy file leaves decision points undefined: {', '.join(missing)}")
    return Policy({h: table[h] for h in env.decision_points()}, name=path.stem)


def _resolve_policy(env: EnvironmentModel, lib_name: str | None, ref: str) -> Policy:
    path = Path(ref)
    if ref.endswith(".json") or path.is_file():
        return _policy_from_file(env, path)
    if lib_name is None:
        raise UsageError("environment files have no named policies; pass a policy JSON file")
    try:
        return library.named_policy(env, lib_name, ref)
    except KeyError as exc:
        raise DtlabError(exc.args[0]) from None


# ---------------------------------------------------------------------------
# commands; each returns (record for JSON, text, csv rows, exit code)


def cmd_list(args, r: Renderer):
    entries = library.list_entries()
    record = {
        "command": "list",
        "environments": [
            {
                "name": e.name,
                "notes": e.notes,
                "parameters": [
                    {"name": p.name, "default": r.rational(p.default), "doc": p.doc} for p in e.params
                ],
                "policies": [label for label, _ in e.named_policies(e.build())],
            }
            for e in entries
        ],
    }
    lines = []
    for e in entries:
        lines.append(f"{e.name}: {e.notes}")
        for p in e.params:
            lines.append(f"  param {p.name} = {dsl.render(p.default)}  ({p.doc})")
        if not e.params:
            lines.append("  no parameters")
        lines.append("  policies: " + ", ".join(label for label, _ in e.named_policies(e.build())))
    rows = [["name", "parameter", "default", "description"]]
    for e in entries:
        if e.params:
            rows += [[e.name, p.name, dsl.render(p.default), p.doc] for p in e.params]
        else:
            rows.append([e.name, "", "", e.notes])
    return record, lines, rows, EXIT_OK


def cmd_decide(args, r: Renderer):
    params = _params(args.param)
    env, _ = _load_env(args.env, params)
    if args.step is not None:
        h, trailing = _history(env, args.step)
        if trailing is not None:
            raise UsageError("--step takes a history, not a history followed by an action")
        env = project_step(env, h)
    elif env.lifetime != 1:
        raise DtlabError(
            f"decide needs a one-step environment, {args.env} has lifetime {env.lifetime}; "
            "use --step HISTORY to decide a single step"
        )
    family = None
    if args.theory == "sdt" and args.pa_from:
        if args.pa_from == "evidential":
            family = evidential_family(env)
        elif args.pa_from == "causal":
            family = causal_family(env)
        else:
            family = _family_from_file(env, Path(args.pa_from))
    elif args.pa_from:
        raise UsageError("--pa-from only applies to --theory sdt")
    report = DECIDERS[args.theory](OneShotProblem(env, family))
    record = {
        "command": "decide",
        "env": args.env,
        "theory": args.theory,
        "values": [
            {"action": a, "label": env.label(1, a), "value": r.rational(report.values[a])}
            for a in env.actions
        ],
        "best": list(report.best_actions),
        "tie": report.tie,
    }
    best = ", ".join(env.label(1, a) for a in report.best_actions)
    lines = [f"environment: {args.env}", f"theory: {args.theory}"]
    lines += _aligned(
        [["action", "value"]] + [[env.label(1, a), r.num(report.values[a])] for a in env.actions]
    )
    lines.append(f"best: {best}" + (" (tie)" if report.tie else ""))
    rows = [["action", "value", "exact", "best"]] + [
        [env.label(1, a), r.decimal(report.values[a]), dsl.render(report.values[a]),
         "yes" if a in report.best_actions else "no"]
        for a in env.actions
    ]
    return record, lines, rows, EXIT_OK


def _family_from_file(env: EnvironmentModel, path: Path) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read percept family {path}: {exc}") from None
    try:
        return {
            env._resolve_action(1, a): {e: Fraction(str(p)) for e, p in row.items()}
            for a, row in data.items()
        }
    except (ValueError, ZeroDivisionError, AttributeError) as exc:
        raise DtlabError(f"malformed percept family: {exc}") from None


def cmd_eval(args, r: Renderer):
    params = _params(args.param)
    env, lib_name = _load_env(args.env, params)
    theory = Theory.parse(args.theory)
    policy = _resolve_policy(env, lib_name, args.policy)
    h, trailing = _history(env, args.history)
    action = trailing
    if args.action is not None:
        if trailing is not None:
            raise UsageError("give the action either in --history or with --action, not both")
        action = env._resolve_action(len(h) + 1, args.action)
    reports = evaluate(theory, env, policy, h, action)
    agree = len({rep.value for rep in reports}) == 1
    at = env.format_history(h, action) or "(root)"
    record = {
        "command": "eval",
        "env": args.env,
        "theory": theory.display,
        "policy": args.policy,
        "at": at,
        "value": r.rational(reports[0].value),
        "methods": [{"method": rep.method, "value": r.rational(rep.value)} for rep in reports],
        "agree": agree,
    }
    lines = [f"environment: {args.env}", f"theory: {theory.display}", f"policy: {args.policy}",
             f"at: {at}", f"value: {r.num(reports[0].value)}"]
    lines += _aligned([[rep.method, r.num(rep.value)] for rep in reports], indent="  ")
    lines.append(f"methods agree: {'yes' if agree else 'NO'}")
    rows = [["method", "value", "exact"]] + [
        [rep.method, r.decimal(rep.value), dsl.render(rep.value)] for rep in reports
    ]
    return record, lines, rows, EXIT_OK if agree else EXIT_DOMAIN


def _budget(args) -> int:
    if args.max_policies is not None:
        return args.max_policies
    raw = os.environ.get("DTLAB_MAX_POLICIES")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"DTLAB_MAX_POLICIES must be an integer, got {raw!r}") from None
    return DEFAULT_BUDGET


def cmd_solve(args, r: Renderer):
    params = _params(args.param)
    env, lib_name = _load_env(args.env, params)
    theory = Theory.parse(args.theory)
    result = solve(env, theory, budget=_budget(args), workers=args.workers)
    behaviors = result.behaviors(env)
    decision = library.entry(lib_name).describe(env, result) if lib_name else None
    tie = len(behaviors) > 1
    record = {
        "command": "solve",
        "env": args.env,
        "theory": theory.display,
        "examined": result.examined,
        "consistent": len(result.ranked),
        "optimal": len(result.policies),
        "distinct_behaviors": len(behaviors),
        "tie": tie,
        "value": r.rational(result.value) if result.value is not None else None,
        "decision": decision,
        "canonical": _policy_json(env, result.canonical) if result.canonical else None,
        "policies": [_policy_json(env, p) for p in result.policies],
        "ranked": [{"value": r.rational(v), "policy": _policy_json(env, p)} for p, v in result.ranked],
    }
    lines = [
        f"environment: {args.env}",
        f"theory: {theory.display}",
        f"policies examined: {result.examined}",
        f"time-consistent: {len(result.ranked)}",
    ]
    if result.canonical is None:
        lines.append("no time-consistent policy exists")
        shown = list(result.diagnostics.items())[:5]
        for p, vs in shown:
            v = vs[0]
            vals = ", ".join(f"{env.label(len(v.history) + 1, a)}={r.num(x)}" for a, x in v.values.items())
            lines.append(f"  {_policy_inline(env, p)}: violates at {_show_history(env, v.history)} ({vals})")
    else:
        lines.append(f"optimal value: {r.num(result.value)}")
        lines.append(
            f"optimal policies: {len(result.policies)} "
            f"({len(behaviors)} distinct behavior{'s' if len(behaviors) != 1 else ''}"
            f"{', tie' if tie else ''})"
        )
        if decision is not None:
            lines.append(f"decision: {decision}")
        lines.append("canonical policy:")
        lines += _aligned([[h, a] for h, a in _policy_cells(env, result.canonical)], indent="  ")
        if args.ranked:
            lines.append("ranked time-consistent policies:")
            for p, v in result.ranked:
                lines.append(f"  {r.num(v)}: {_policy_inline(env, p)}")
        elif tie:
            lines.append("tied behaviors:")
            for p in behaviors:
                lines.append(f"  {_policy_inline(env, p)}")
    rows = [["rank", "value", "exact", "optimal", "policy"]]
    for i, (p, v) in enumerate(result.ranked, 1):
        rows.append([str(i), r.decimal(v), dsl.render(v), "yes" if p in result.policies else "no",
                     _policy_inline(env, p)])
    return record, lines, rows, EXIT_OK


def cmd_table(args, r: Renderer):
    params = _params(args.param)
    table = tables.compute(args.selector, params)
    expected = None
    if args.golden:
        try:
            expected = tables.load_golden(args.golden)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read golden {args.golden}: {exc}") from None
    elif args.check:
        expected = tables.golden(args.selector)
    mismatches = tables.diff(table, expected) if expected is not None else []

    def cell(c):
        return r.rational(c) if isinstance(c, Fraction) else c

    def text(c):
        return r.num(c) if isinstance(c, Fraction) else c

    record = {
        "command": "table",
        "selector": args.selector,
        "columns": list(table.columns),
        "rows": [{"label": label, "cells": {c: cell(v[c]) for c in table.columns}} for label, v in table.rows],
        "decisions": table.decisions,
        "check": None if expected is None else {"passed": not mismatches, "mismatches": mismatches},
    }
    lines = _aligned(
        [["", *table.columns]] + [[label, *(text(v[c]) for c in table.columns)] for label, v in table.rows]
    )
    if table.decisions:
        lines.append("decisions: " + "; ".join(f"{k} {v}" for k, v in table.decisions.items()))
    if expected is not None:
        lines.append("check: pass" if not mismatches else "check: FAIL")
        lines += [f"  {m}" for m in mismatches]
    rows = [["policy" if table.decisions else "scenario", *table.columns]] + [
        [label, *(text(v[c]) for c in table.columns)] for label, v in table.rows
    ]
    return record, lines, rows, EXIT_DOMAIN if mismatches else EXIT_OK


def cmd_check(args, r: Renderer):
    params = _params(args.param)
    path = Path(args.file)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror}") from None
    diags = dsl.check(text, params)
    errors = [d for d in diags if d.severity == "error"]
    record = {
        "command": "check",
        "file": args.file,
        "clean": not errors,
        "diagnostics": [
            {"severity": d.severity, "line": d.line, "column": d.column, "message": d.message,
             "token": d.token}
            for d in diags
        ],
    }
    lines = [f"{args.file}:{d}" for d in diags] + [f"{args.file}: {'clean' if not errors else 'invalid'}"]
    rows = [["severity", "line", "column", "message", "token"]] + [
        [d.severity, str(d.line), str(d.column), d.message, d.token] for d in diags
    ]
    return record, lines, rows, EXIT_OK if not errors else EXIT_DOMAIN


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "csv", "json"), default="text")
    common.add_argument("--exact", action="store_true", help="render values as n/d")
    common.add_argument("--precision", type=int, default=6, help="significant digits (default 6)")
    common.add_argument("--timestamps", action="store_true", help="include a generation timestamp")

    envopts = argparse.ArgumentParser(add_help=False)
    envopts.add_argument("--env", required=True, help="library name or path to a .env file")
    envopts.add_argument("--param", action="append", metavar="NAME=VALUE", help="exact rational")

    p = argparse.ArgumentParser(prog="dtlab", description="exact decision-theory engine")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list", parents=[common], help="list library environments")

    d = sub.add_parser("decide", parents=[common, envopts], help="one-shot decision")
    d.add_argument("--theory", required=True, choices=("sdt", "edt", "cdt"))
    d.add_argument("--pa-from", help="for sdt: evidential, causal, or a JSON file")
    d.add_argument("--step", metavar="HISTORY", help="decide the single step after HISTORY")

    e = sub.add_parser("eval", parents=[common, envopts], help="value of a policy")
    e.add_argument("--theory", required=True, type=str.lower,
                   choices=("saedt", "spedt", "scdt", "aev", "pev", "cau"))
    e.add_argument("--policy", required=True, help="library policy name or JSON decision table")
    e.add_argument("--history", help="history, optionally followed by an action")
    e.add_argument("--action", help="evaluate V(h a) for this action")

    s = sub.add_parser("solve", parents=[common, envopts], help="optimal time-consistent policies")
    s.add_argument("--theory", required=True, type=str.lower,
                   choices=("saedt", "spedt", "scdt", "aev", "pev", "cau"))
    s.add_argument("--max-policies", type=int, help="enumeration budget (env DTLAB_MAX_POLICIES)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--ranked", action="store_true", help="list every time-consistent policy")

    t = sub.add_parser("table", parents=[common], help="reference tables")
    t.add_argument("selector", choices=tables.SELECTORS)
    t.add_argument("--check", action="store_true", help="compare against embedded goldens")
    t.add_argument("--golden", help="compare against a golden JSON file instead")
    t.add_argument("--param", action="append", metavar="NAME=VALUE")

    c = sub.add_parser("check", parents=[common], help="parse and validate a .env file")
    c.add_argument("file")
    c.add_argument("--param", action="append", metavar="NAME=VALUE")
    return p


COMMANDS: dict[str, Callable] = {
    "list": cmd_list, "decide": cmd_decide, "eval": cmd_eval,
    "solve": cmd_solve, "table": cmd_table, "check": cmd_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.precision < 1:
        print("error: --precision must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    r = Renderer(args.format, args.exact, args.precision)
    try:
        record, lines, rows, code = COMMANDS[args.command](args, r)
    except UsageError as exc:
        print(f"dtlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except dsl.DslError as exc:
        for d in exc.diagnostics:
            print(f"dtlab: {d}", file=sys.stderr)
        return EXIT_DOMAIN
    except (DtlabError, ValueError) as exc:
        print(f"dtlab: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN

    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if args.timestamps else None
    out = sys.stdout
    if args.format == "json":
        record = {"schema_version": SCHEMA_VERSION, **record}
        if stamp:
            record["generated"] = stamp
        out.write(json.dumps(record, indent=2) + "\n")
    elif args.format == "csv":
        out.write(_csv(rows))
        if stamp:
            out.write(f"# generated {stamp}\n")
    else:
        out.write("\n".join(lines) + "\n")
        if stamp:
            out.write(f"generated: {stamp}\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
