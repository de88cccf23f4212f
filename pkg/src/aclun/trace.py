"""Rendering and re-reading goal-directed proof traces.

Two formats: a text table for people, and a record stream with one JSON
object per line.  The stream starts with a header naming the sequent, has one
record per proof line, and ends with the verdict::

    {"sequent": "~p | r, p & ~q, q |- r"}
    {"index": 1, "formula": "r", "refs": [], "rule": "Goal", ...}
    {"verdict": "DERIVABLE", "deciding_line": 7}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .formula_core import Abnormality, Formula, Or, dab, parse, render
from .gd_engine import GdLine, Verdict
from .clun_oracle import DEFAULT_MAX_VALUATIONS, clun_consequence

RECORD_FIELDS = ("index", "formula", "refs", "rule", "d_condition", "a_condition",
                 "d_marked", "a_marked", "phase")


def format_sequent(gamma: Sequence[Formula], goal: Formula) -> str:
    left = ", ".join(render(g) for g in gamma)
    return f"{left} |- {render(goal)}" if left else f"|- {render(goal)}"


def parse_sequent(text: str) -> tuple[list[Formula], Formula]:
    if text.count("|-") != 1:
        raise ValueError(f"a sequent needs exactly one '|-': {text!r}")
    left, right = text.split("|-")
    gamma = [parse(part) for part in left.split(",")] if left.strip() else []
    return gamma, parse(right)


def _d_text(ln: GdLine) -> str:
    return "[" + ", ".join(render(f) for f in ln.d_condition) + "]"


def _a_text(ln: GdLine) -> str:
    return "{" + ", ".join(a.key for a in sorted(ln.a_condition)) + "}"


def _marks(ln: GdLine) -> str:
    return ("D" if ln.d_marked else "") + ("A" if ln.a_marked else "")


def format_table(lines: Sequence[GdLine]) -> str:
    rows = [("#", "formula", "refs", "rule", "D-condition", "A-condition", "mark", "phase")]
    for ln in lines:
        rows.append((str(ln.index), render(ln.formula), ",".join(map(str, ln.refs)) or "-",
                     ln.rule, _d_text(ln), _a_text(ln), _marks(ln), ln.phase))
    widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
    out = []
    for r in rows:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return "\n".join(out)


def line_record(ln: GdLine) -> dict:
    rec = {
        "index": ln.index,
        "formula": render(ln.formula),
        "refs": list(ln.refs),
        "rule": ln.rule,
        "d_condition": [render(f) for f in ln.d_condition],
        "a_condition": [a.key for a in sorted(ln.a_condition)],
        "d_marked": ln.d_marked,
        "a_marked": ln.a_marked,
        "phase": ln.phase,
        "history": [list(h) for h in ln.history],
    }
    return rec


def format_records(gamma: Sequence[Formula], goal: Formula, verdict: Verdict) -> str:
    out = [json.dumps({"sequent": format_sequent(gamma, goal)})]
    out += [json.dumps(line_record(ln)) for ln in verdict.proof]
    tail = {"verdict": "DERIVABLE" if verdict.derivable else "NOT DERIVABLE",
            "deciding_line": verdict.deciding_line}
    if verdict.oracle_derivable is not None:
        tail["oracle_verdict"] = "DERIVABLE" if verdict.oracle_derivable else "NOT DERIVABLE"
        tail["unreliable"] = [a.key for a in sorted(verdict.oracle_evidence.members)]
    out.append(json.dumps(tail))
    return "\n".join(out)


@dataclass
class RecordedLine:
    index: int
    formula: Formula
    refs: tuple[int, ...]
    rule: str
    d_condition: tuple[Formula, ...]
    a_condition: frozenset[Abnormality]
    d_marked: bool
    a_marked: bool
    phase: str


@dataclass
class RecordedTrace:
    gamma: list[Formula]
    goal: Formula
    lines: list[RecordedLine]
    derivable: bool | None
    deciding_line: int | None


def read_records(text: str) -> RecordedTrace:
    """Parse a record stream back into formulas; malformed input raises ValueError."""
    gamma = goal = None
    lines: list[RecordedLine] = []
    derivable = deciding = None
    for n, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"record {n}: {exc}") from exc
        if "sequent" in rec:
            gamma, goal = parse_sequent(rec["sequent"])
        elif "verdict" in rec:
            derivable = rec["verdict"] == "DERIVABLE"
            deciding = rec.get("deciding_line")
        else:
            if list(rec)[:len(RECORD_FIELDS)] != list(RECORD_FIELDS):
                raise ValueError(f"record {n}: fields out of order")
            lines.append(RecordedLine(
                rec["index"], parse(rec["formula"]), tuple(rec["refs"]), rec["rule"],
                tuple(parse(f) for f in rec["d_condition"]),
                frozenset(Abnormality.from_formula(parse(a)) for a in rec["a_condition"]),
                rec["d_marked"], rec["a_marked"], rec["phase"]))
    if goal is None:
        raise ValueError("record stream has no sequent header")
    return RecordedTrace(gamma, goal, lines, derivable, deciding)


def line_is_sound(gamma: Sequence[Formula], formula: Formula, d_condition: Sequence[Formula],
                  a_condition, max_valuations: int = DEFAULT_MAX_VALUATIONS) -> bool:
    """``gamma + D`` derives ``A | Dab(T)`` in CLuN."""
    target = Or(formula, dab(a_condition)) if a_condition else formula
    return clun_consequence(list(gamma) + list(d_condition), target, max_valuations)


def audit_lines(gamma: Sequence[Formula], lines, max_valuations: int = DEFAULT_MAX_VALUATIONS
                ) -> list[int]:
    """Indices of lines that fail the soundness check (empty when all pass)."""
    return [ln.index for ln in lines
            if not line_is_sound(gamma, ln.formula, ln.d_condition, ln.a_condition,
                                 max_valuations)]


def audit_records(text: str, max_valuations: int = DEFAULT_MAX_VALUATIONS) -> list[int]:
    trace = read_records(text)
    return audit_lines(trace.gamma, trace.lines, max_valuations)
