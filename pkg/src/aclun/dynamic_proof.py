"""Dynamic proofs for ACLuN1 under the Reliability strategy.

Lines are added with PREM, RU and RC.  RU/RC steps are certified by the
CLuN oracle.  After every addition the marks are recomputed from the
unconditioned Dab-lines, and the mark set of each stage is kept so that a
replay shows how lines go out and come back in.

Proof scripts have one line per proof line::

    <formula> ; <refs, comma separated, or -> ; <PREM|RU|RC> ; {<abnormalities>}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .formula_core import Abnormality, Formula, Or, dab, dab_disjuncts, parse, render
from .clun_oracle import DEFAULT_MAX_VALUATIONS, ClunValuation, find_countermodel

RULES = ("PREM", "RU", "RC")


class ProofError(ValueError):
    """A rule application was rejected."""

    def __init__(self, message: str, countermodel: ClunValuation | None = None):
        self.countermodel = countermodel
        if countermodel is not None:
            message = f"{message}; countermodel: {countermodel.describe()}"
        super().__init__(message)


@dataclass
class DynLine:
    index: int
    formula: Formula
    refs: tuple[int, ...]
    rule: str
    condition: frozenset[Abnormality]
    marked: bool = False

    def condition_text(self) -> str:
        return "{" + ", ".join(a.key for a in sorted(self.condition)) + "}"


@dataclass
class DynProof:
    premises: list[Formula]
    lines: list[DynLine] = field(default_factory=list)
    history: list[frozenset[int]] = field(default_factory=list)
    max_valuations: int = DEFAULT_MAX_VALUATIONS

    @property
    def stage(self) -> int:
        return len(self.lines)

    def line(self, i: int) -> DynLine:
        if not 1 <= i <= len(self.lines):
            raise ProofError(f"line {i} does not exist")
        return self.lines[i - 1]

    def _append(self, formula, refs, rule, condition) -> DynLine:
        ln = DynLine(len(self.lines) + 1, formula, tuple(refs), rule, frozenset(condition))
        self.lines.append(ln)
        marked = recompute_marks(self)
        self.history.append(frozenset(marked))
        return ln

    def _certify(self, refs: Sequence[int], conclusion: Formula) -> frozenset[Abnormality]:
        cond: set[Abnormality] = set()
        for r in refs:
            cond |= self.line(r).condition
        sources = [self.line(r).formula for r in refs]
        cm = find_countermodel(sources, conclusion, self.max_valuations)
        if cm is not None:
            shown = ", ".join(render(s) for s in sources) or "(nothing)"
            raise ProofError(f"{render(conclusion)} does not follow in CLuN from {shown}", cm)
        return frozenset(cond)

    def add_prem(self, a: Formula) -> DynLine:
        if a not in self.premises:
            raise ProofError(f"{render(a)} is not a premise")
        return self._append(a, (), "PREM", ())

    def add_ru(self, refs: Sequence[int], b: Formula) -> DynLine:
        cond = self._certify(refs, b)
        return self._append(b, refs, "RU", cond)

    def add_rc(self, refs: Sequence[int], b: Formula, theta: Iterable[Abnormality]) -> DynLine:
        theta = frozenset(theta)
        if not theta:
            raise ProofError("RC needs a nonempty condition; use RU")
        cond = self._certify(refs, Or(b, dab(theta)))
        return self._append(b, refs, "RC", cond | theta)

    def derived_at_stage(self, a: Formula) -> bool:
        return any(ln.formula == a and not ln.marked for ln in self.lines)

    def unreliable_at_stage(self) -> frozenset[Abnormality]:
        return stage_unreliable(self.lines)


def stage_unreliable(lines: Sequence[DynLine]) -> frozenset[Abnormality]:
    """Union of the minimal Dab-formulas derived on the empty condition."""
    dabs = []
    for ln in lines:
        if ln.condition:
            continue
        d = dab_disjuncts(ln.formula)
        if d is not None:
            dabs.append(d)
    minimal = [d for d in dabs if not any(o < d for o in dabs)]
    return frozenset(a for d in minimal for a in d)


def recompute_marks(proof: DynProof) -> set[int]:
    """Mark exactly the lines whose condition meets the stage's unreliable set."""
    u = stage_unreliable(proof.lines)
    marked = set()
    for ln in proof.lines:
        ln.marked = bool(ln.condition & u)
        if ln.marked:
            marked.add(ln.index)
    return marked


# ---------------------------------------------------------------------------
# Script format
# ---------------------------------------------------------------------------

@dataclass
class ScriptLine:
    number: int
    formula: Formula
    refs: tuple[int, ...]
    rule: str
    condition: frozenset[Abnormality]


def parse_condition(text: str) -> frozenset[Abnormality]:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ValueError(f"condition must be written in braces: {text!r}")
    body = text[1:-1].strip()
    if not body:
        return frozenset()
    return frozenset(Abnormality.from_formula(parse(part)) for part in body.split(","))


def parse_script(text: str) -> list[ScriptLine]:
    out = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(";")]
        if len(fields) != 4:
            raise ValueError(f"script line {number}: expected 4 ';'-separated fields")
        formula_txt, refs_txt, rule, cond_txt = fields
        rule = rule.upper()
        if rule not in RULES:
            raise ValueError(f"script line {number}: unknown rule {rule!r}")
        refs = () if refs_txt in ("-", "") else tuple(int(r) for r in refs_txt.split(","))
        out.append(ScriptLine(number, parse(formula_txt), refs, rule,
                              parse_condition(cond_txt)))
    return out


def format_script_line(ln: DynLine) -> str:
    refs = ", ".join(map(str, ln.refs)) or "-"
    return f"{render(ln.formula)} ; {refs} ; {ln.rule} ; {ln.condition_text()}"


def replay(premises: Sequence[Formula], script: Sequence[ScriptLine],
           max_valuations: int = DEFAULT_MAX_VALUATIONS) -> DynProof:
    """Rebuild a proof from a script; each line is certified as it is added.

    For RC the rule's own condition is what the script line adds on top of
    the conditions of the referenced lines.
    """
    proof = DynProof(list(premises), max_valuations=max_valuations)
    for sl in script:
        try:
            if sl.rule == "PREM":
                if sl.refs or sl.condition:
                    raise ProofError("PREM lines take no references and no condition")
                proof.add_prem(sl.formula)
            elif sl.rule == "RU":
                ln = proof.add_ru(sl.refs, sl.formula)
                if ln.condition != sl.condition:
                    raise ProofError(f"RU yields condition {ln.condition_text()}")
            else:
                inherited = frozenset().union(*(proof.line(r).condition for r in sl.refs))
                if not inherited <= sl.condition:
                    raise ProofError("RC condition must include the referenced conditions")
                proof.add_rc(sl.refs, sl.formula, sl.condition - inherited)
        except ProofError as exc:
            err = ProofError(f"script line {sl.number}: {exc}")
            err.countermodel = exc.countermodel
            raise err from exc
    return proof


def premises_of_script(script: Sequence[ScriptLine]) -> list[Formula]:
    return [sl.formula for sl in script if sl.rule == "PREM"]
