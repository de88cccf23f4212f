"""Goal-directed proof procedure for ACLuN1.

Lines carry two conditions: a D-condition (formulas still to be obtained)
and an A-condition (abnormalities assumed false).  A line ``A_{D,T}`` warrants
that ``Gamma + D`` derives ``A | Dab(T)`` in CLuN.

The procedure runs in three phases.  Phase 1 looks for the goal on an empty
D-condition.  If it turns up on a nonempty A-condition ``T``, phase 2 tries to
derive ``Dab(T)``; each ``Dab(T)_{[],L}`` found there is in turn tested by
phase 3, which tries to derive ``Dab(L)`` outright.

Moves are scheduled as follows (each move adds one line):

* eager: EM0, IC, and Trans from lines whose D-condition is empty;
* goal-directed: for the last unmarked line of the phase, look at the first
  element of its D-condition and try formula analysis, then a premise, then
  condition analysis;
* Trans into lines that carry the phase's goal, then EM on such lines;
* fallback: the same analysis for the other D-condition elements, so that
  no combination is missed when the first element is stuck;
* EFQ (phase 1 only, which then continues as subphase 1B).
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .clun_oracle import DEFAULT_MAX_VALUATIONS, analyse
from .formula_core import (
    BOT, Abnormality, Bottom, CNeg, Formula, PartMode, dab, dab_disjuncts,
    is_positive_part, render,
)
from .rules import BOTTOM_RULE, condition_rule, formula_rule

DEFAULT_MAX_STEPS = 100_000

GOAL_RULES = frozenset({"Goal", "A-Goal", "X-Goal", "Prem", "EFQ"})


class RuleError(ValueError):
    """A rule application was rejected."""


class StepCapExceeded(RuntimeError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"step cap of {cap} line additions exceeded")


class GoalKind(enum.Enum):
    AGOAL = "A-Goal"
    XGOAL = "X-Goal"


@dataclass
class GdLine:
    index: int
    formula: Formula
    refs: tuple[int, ...]
    rule: str
    d_condition: tuple[Formula, ...]
    a_condition: frozenset[Abnormality]
    phase: str
    premise_path: bool = False
    d_marked: bool = False
    a_marked: bool = False
    history: list[tuple[int, bool, bool]] = field(default_factory=list)

    def __post_init__(self):
        self.d_set = frozenset(self.d_condition)

    @property
    def goal_rule(self) -> bool:
        return self.rule in GOAL_RULES

    @property
    def marked(self) -> bool:
        return self.d_marked or self.a_marked

    def describe(self) -> str:
        d = ", ".join(render(f) for f in self.d_condition)
        a = ", ".join(x.key for x in sorted(self.a_condition))
        return f"{render(self.formula)}_{{[{d}], {{{a}}}}}"


@dataclass
class _Cand:
    formula: Formula
    refs: tuple[int, ...]
    rule: str
    d: tuple[Formula, ...]
    a: frozenset[Abnormality]


# Work classes in priority order (EFQ comes after all of them).  Keys are
# ordered so that later lines come first.
_CLASSES = ("P0", "P0IC", "P1", "P2", "P3", "P1R")


class _Phase:
    def __init__(self, kind: int, tag: str, goal: Formula, tested: int | None,
                 variant: bool, empty_a: bool):
        self.kind = kind
        self.tag = tag
        self.goal = goal
        self.tested = tested
        self.variant = variant
        self.empty_a = empty_a
        self.scope: list[int] = []
        self.members: set[int] = set()
        self.reset_work()

    def reset_work(self) -> None:
        # live work keys per class; a key leaves when its scan finds nothing
        # and comes back when a new line may give it a move
        self.heaps: dict[str, list[tuple]] = {c: [] for c in _CLASSES}
        self.live: dict[str, set[tuple]] = {c: set() for c in _CLASSES}
        # dropped keys, filed under the elements whose new lines revive them
        self.dormant: dict[str, dict[Formula, set[tuple]]] = {c: {} for c in _CLASSES}
        # D-condition element -> (line, position) pairs of scope lines
        self.elem_keys: dict[Formula, list[tuple[int, int]]] = {}
        # element -> lines with a premise in their path that analyse into a
        # formula having the element as a positive part, in line order
        self.hits: dict[Formula, list[GdLine]] = {}
        # element -> number of its hits already analysed; the analysis
        # candidates do not depend on the line being served
        self.scanned: dict[Formula, int] = {}
        # candidates refused in this phase; a refusal is final until EFQ
        # switches the D-marking clauses
        self.refused: set[tuple] = set()
        self.tail_done: set[tuple[int, int]] = set()
        self.cursor: dict[tuple, int] = {}

    def push(self, cls: str, key: tuple) -> None:
        live = self.live[cls]
        if key not in live:
            live.add(key)
            heapq.heappush(self.heaps[cls], key)

    def revive(self, cls: str, element: Formula) -> None:
        keys = self.dormant[cls].pop(element, None)
        if keys:
            for key in keys:
                self.push(cls, key)

    def drop(self, cls: str, key: tuple, elements: Iterable[Formula]) -> None:
        self.live[cls].discard(key)
        dormant = self.dormant[cls]
        for b in elements:
            dormant.setdefault(b, set()).add(key)


# outcome of offering a candidate line
_ADDED, _ADOPTED, _REJECTED = "added", "adopted", "rejected"


def _dedupe(items: Iterable[Formula]) -> tuple[Formula, ...]:
    seen: set[Formula] = set()
    out = []
    for f in items:
        if f not in seen:
            seen.add(f)
            out.append(f)
    return tuple(out)


def _complements(x: Formula) -> list[Formula]:
    out = [CNeg(x)]
    if isinstance(x, CNeg):
        out.append(x.arg)
    return out


def _complemented_by(nb: Formula) -> list[Formula]:
    """The formulas ``b`` with ``nb`` among ``_complements(b)``."""
    out = [CNeg(nb)]
    if isinstance(nb, CNeg):
        out.append(nb.arg)
    return out


@dataclass
class Verdict:
    derivable: bool
    proof: list[GdLine]
    deciding_line: int | None = None
    oracle_evidence: object | None = None
    oracle_derivable: bool | None = None
    steps: int = 0
    events: list[str] = field(default_factory=list)


class GdProof:
    """Proof state; the ``apply_*`` methods are single rule applications."""

    def __init__(self, premises: Sequence[Formula], goal: Formula,
                 max_steps: int = DEFAULT_MAX_STEPS):
        self.premises = list(_dedupe(premises))
        self.goal = goal
        self.max_steps = max_steps
        self.lines: list[GdLine] = []
        self.steps = 0
        self.efq_used = False
        self.events: list[str] = []
        self._by_key: dict[tuple, GdLine] = {}
        self._by_formula: dict[Formula, list[GdLine]] = {}
        # formula -> D-set -> lines, for subsumption queries
        # (D-sets are encoded as bitmasks over the elements seen so far)
        self._groups: dict[Formula, dict[int, list[GdLine]]] = {}
        self._group_index: dict[Formula, dict[int, set[int]]] = {}  # bit -> masks
        self._bits: dict[Formula, int] = {}
        self._by_element: dict[Formula, list[GdLine]] = {}
        self._closed: set[Formula] = set()      # formulas on an empty-empty line
        self._closed_dabs: list[frozenset[Abnormality]] = []
        self._finished_dabs: list[GdLine] = []  # Dab-formulas on an empty D-condition
        self._bad: list[frozenset[Abnormality]] = []   # sets known to meet U
        self._phase3_failed: set[frozenset[Abnormality]] = set()
        self.stack: list[_Phase] = []
        self._analysis_cache: dict[int, list[_Cand]] = {}
        self._gate_cache: dict[tuple, bool] = {}

    # -- bookkeeping ------------------------------------------------------

    @property
    def phase(self) -> _Phase:
        return self.stack[-1]

    def line(self, i: int) -> GdLine:
        if not 1 <= i <= len(self.lines):
            raise RuleError(f"line {i} does not exist")
        return self.lines[i - 1]

    def _dmark_reason(self, formula, d_set, d, a, goal_rule, skip=None) -> int:
        if not goal_rule:
            if formula in d_set:
                return 1
            if self._subsumers(formula, d_set, a, skip):
                return 2
        if not self.efq_used:
            for b in d:
                if CNeg(b) in d_set:
                    return 3
            for b in d:
                if CNeg(b) in self._closed:
                    return 4
        return 0

    @staticmethod
    def _bits_of(mask: int):
        while mask:
            low = mask & -mask
            yield low
            mask ^= low

    def _mask(self, d_set) -> int:
        mask = 0
        for b in d_set:
            bit = self._bits.get(b)
            if bit is None:
                bit = self._bits[b] = 1 << len(self._bits)
            mask |= bit
        return mask

    def _subsumers(self, formula, d_set, a, skip=None, unmarked=False) -> list[GdLine]:
        """Lines ``formula_{D',T'}`` with ``D'`` a proper subset of ``d_set`` and ``T'`` within ``a``."""
        groups = self._groups.get(formula)
        if not groups:
            return []
        mask = self._mask(d_set)
        if not mask:
            return []
        if len(groups) > (1 << len(d_set)):
            keys = []
            sub = (mask - 1) & mask
            while True:
                if sub in groups:
                    keys.append(sub)
                if not sub:
                    break
                sub = (sub - 1) & mask
        else:
            keys = [k for k in groups if k != mask and not k & ~mask]
        out = []
        for k in keys:
            for m in groups[k]:
                if m is not skip and m.a_condition <= a and not (unmarked and m.d_marked):
                    out.append(m)
        if len(keys) > 1:
            out.sort(key=lambda m: m.index)
        return out

    def _set_marks(self, ln: GdLine, d_marked: bool | None = None, a_marked: bool | None = None):
        new_d = ln.d_marked if d_marked is None else d_marked
        new_a = ln.a_marked if a_marked is None else a_marked
        if (new_d, new_a) != (ln.d_marked, ln.a_marked):
            ln.d_marked, ln.a_marked = new_d, new_a
            ln.history.append((len(self.lines), new_d, new_a))

    def d_mark_scan(self) -> None:
        """Recompute every D-mark from scratch."""
        for ln in self.lines:
            reason = self._dmark_reason(ln.formula, ln.d_set, ln.d_condition,
                                        ln.a_condition, ln.goal_rule, skip=ln)
            self._set_marks(ln, d_marked=bool(reason))

    def a_mark(self, ln: GdLine) -> None:
        self._set_marks(ln, a_marked=True)

    def _note_bad(self, s: frozenset[Abnormality]) -> None:
        if s and not any(b <= s for b in self._bad):
            self._bad.append(s)

    def _known_bad(self, s: frozenset[Abnormality]) -> bool:
        return any(b <= s for b in self._bad)

    def _insert(self, c: _Cand, phase: _Phase) -> GdLine:
        self.steps += 1
        if self.steps > self.max_steps:
            raise StepCapExceeded(self.max_steps)
        pp = c.rule == "Prem" or any(self.lines[r - 1].premise_path for r in c.refs)
        ln = GdLine(len(self.lines) + 1, c.formula, c.refs, c.rule, c.d, c.a,
                    phase.tag, premise_path=pp)
        self.lines.append(ln)
        ln.history.append((ln.index, False, False))
        self._by_key[(ln.formula, ln.d_set, ln.a_condition)] = ln
        self._by_formula.setdefault(ln.formula, []).append(ln)
        groups = self._groups.setdefault(ln.formula, {})
        index = self._group_index.setdefault(ln.formula, {})
        mask = self._mask(ln.d_set)
        # marks this line imposes on earlier ones
        if mask:
            bit = min((b for b in self._bits_of(mask)), key=lambda b: len(index.get(b, ())))
            supers = [k for k in index.get(bit, ()) if k != mask and k & mask == mask]
        else:
            supers = [k for k in groups if k]
        if len(supers) > 1:
            supers.sort(key=lambda k: groups[k][0].index)
        for k in supers:
            for m in groups[k]:
                if (not m.d_marked and not m.goal_rule
                        and ln.a_condition <= m.a_condition):
                    self._set_marks(m, d_marked=True)
        if mask not in groups:
            groups[mask] = []
            for b in self._bits_of(mask):
                index.setdefault(b, set()).add(mask)
        groups[mask].append(ln)
        for b in ln.d_condition:
            self._by_element.setdefault(b, []).append(ln)
        if not ln.d_condition and not ln.a_condition:
            self._closed.add(ln.formula)
            if not self.efq_used and isinstance(ln.formula, CNeg):
                for m in self._by_element.get(ln.formula.arg, ()):
                    self._set_marks(m, d_marked=True)
            ds = dab_disjuncts(ln.formula)
            if ds:
                self._note_bad(ds)
                self._closed_dabs.append(ds)
        if not ln.d_condition and dab_disjuncts(ln.formula):
            self._finished_dabs.append(ln)
        self._adopt(phase, ln)
        self._wake(ln)
        return ln

    def _offer(self, c: _Cand, phase: _Phase) -> tuple[str, GdLine | None]:
        """Add ``c`` unless it is not new or would be D-marked at once.

        A candidate that is not new brings the line that makes it redundant
        into the phase instead.
        """
        if phase.empty_a and c.a:
            return _REJECTED, None
        d = _dedupe(c.d)
        c = _Cand(c.formula, tuple(sorted(set(c.refs))), c.rule, d, frozenset(c.a))
        d_set = frozenset(d)
        same = self._by_key.get((c.formula, d_set, c.a))
        if same is not None:
            return (_ADOPTED if self._adopt(phase, same) else _REJECTED), same
        for m in self._groups.get(c.formula, {}).get(self._mask(d_set), ()):
            if m.a_condition <= c.a:
                return (_ADOPTED if self._adopt(phase, m) else _REJECTED), m
        reason = self._dmark_reason(c.formula, d_set, d, c.a, c.rule in GOAL_RULES)
        if reason:
            adopted = False
            if reason == 2:
                for m in self._subsumers(c.formula, d_set, c.a, unmarked=True):
                    adopted |= self._adopt(phase, m)
            return (_ADOPTED if adopted else _REJECTED), None
        return _ADDED, self._insert(c, phase)

    def _gate(self, elem: Formula, produced: Formula, phase: _Phase) -> bool:
        key = (elem, produced, phase.variant)
        hit = self._gate_cache.get(key)
        if hit is None:
            mode = PartMode.VARIANT if phase.variant else PartMode.STANDARD
            hit = (is_positive_part(elem, produced, mode)
                   or is_positive_part(BOT, produced, mode))
            self._gate_cache[key] = hit
        return hit

    def _targets(self, phase: _Phase) -> list[GdLine]:
        out = []
        for i in reversed(phase.scope):
            ln = self.lines[i - 1]
            if ln.d_condition and not ln.marked:
                out.append(ln)
        return out

    def _adopt(self, phase: _Phase, ln: GdLine) -> bool:
        if ln.index in phase.members:
            return False
        phase.members.add(ln.index)
        phase.scope.append(ln.index)
        phase.scope.sort()
        self._register(phase, ln)
        return True

    def _register(self, phase: _Phase, ln: GdLine) -> None:
        """Queue the work a new scope line makes available."""
        i = ln.index
        if not ln.d_condition:
            phase.push("P0IC", (-i,))
            return
        phase.push("P0", (-i, 0))
        for k, b in enumerate(ln.d_condition):
            phase.elem_keys.setdefault(b, []).append((i, k))
            if b not in phase.hits:
                phase.hits[b] = [src for src in self.lines
                                 if src.premise_path and self._serves(src, b, phase)]
            phase.push("P0", (-i, 1 + k))
            phase.push("P1" if k == 0 else "P1R", (-i, k))
        if ln.formula == phase.goal:
            phase.push("P2", (-i,))
            phase.push("P3", (-i,))

    def _wake(self, ln: GdLine) -> None:
        """Revive dropped work keys for which the new line ``ln`` may give a move."""
        for ph in self.stack:
            if not ln.d_condition:
                ph.revive("P0", ln.formula)
            else:
                ph.revive("P2", ln.formula)
            if ln.formula == ph.goal:
                for nb in ln.d_condition:
                    for b in _complemented_by(nb):
                        ph.revive("P3", b)
            if not ln.premise_path:
                continue
            for f in ph.elem_keys:
                if self._serves(ln, f, ph):
                    hits = ph.hits[f]
                    if not hits or hits[-1] is not ln:
                        hits.append(ln)
                    ph.revive("P1", f)
                    ph.revive("P1R", f)

    def _serves(self, src: GdLine, f: Formula, phase: _Phase) -> bool:
        """Can analysing ``src`` produce a formula that ``f`` is a positive part of?"""
        if isinstance(src.formula, Bottom):
            return True
        return any(self._gate(f, c.formula, phase) for c in self._analysis_cands(src))

    # -- candidate builders --------------------------------------------------

    def _trans_cand(self, tgt: GdLine, k: int, src: GdLine) -> _Cand:
        d = tgt.d_condition[:k] + src.d_condition + tgt.d_condition[k + 1:]
        return _Cand(tgt.formula, (tgt.index, src.index), "Trans", d,
                     tgt.a_condition | src.a_condition)

    def _em_cand(self, l1: GdLine, b: Formula, l2: GdLine, nb: Formula) -> _Cand:
        d = tuple(x for x in l1.d_condition if x != b) + \
            tuple(x for x in l2.d_condition if x != nb)
        return _Cand(l1.formula, (l1.index, l2.index), "EM", d,
                     l1.a_condition | l2.a_condition)

    def _em0_cand(self, ln: GdLine) -> _Cand | None:
        nf = CNeg(ln.formula)
        if nf not in ln.d_set:
            return None
        return _Cand(ln.formula, (ln.index,), "EM0",
                     tuple(x for x in ln.d_condition if x != nf), ln.a_condition)

    def _ic_cand(self, ln: GdLine) -> _Cand | None:
        ds = dab_disjuncts(ln.formula)
        if not ds or not (ds & ln.a_condition):
            return None
        return _Cand(ln.formula, (ln.index,), "IC", ln.d_condition, ln.a_condition - ds)

    def _analysis_cands(self, src: GdLine, wanted: Formula | None = None) -> list[_Cand]:
        if isinstance(src.formula, Bottom):
            if wanted is None:
                return []
            return [_Cand(wanted, (src.index,), BOTTOM_RULE, src.d_condition, src.a_condition)]
        cached = self._analysis_cache.get(src.index)
        if cached is not None:
            return cached
        spec = formula_rule(src.formula)
        out = []
        if spec is not None:
            rule, variants = spec
            for v in variants:
                a = src.a_condition | ({v.abnormality} if v.abnormality else set())
                out.append(_Cand(v.formula, (src.index,), rule, src.d_condition + v.extra,
                                 frozenset(a)))
        self._analysis_cache[src.index] = out
        return out

    def _condition_cands(self, ln: GdLine, k: int) -> list[_Cand]:
        spec = condition_rule(ln.d_condition[k])
        if spec is None:
            return []
        rule, variants = spec
        out = []
        for v in variants:
            d = ln.d_condition[:k] + v.replacement + ln.d_condition[k + 1:]
            a = ln.a_condition | ({v.abnormality} if v.abnormality else set())
            out.append(_Cand(ln.formula, (ln.index,), rule, d, frozenset(a)))
        return out

    # -- scheduler -----------------------------------------------------------

    def _move(self, phase: _Phase) -> bool:
        """Make one move in ``phase``; False when the phase has stopped."""
        for cls in _CLASSES:
            if self._run_class(phase, cls):
                return True
        return phase.kind == 1 and self._efq(phase)

    def _run_class(self, phase: _Phase, cls: str) -> bool:
        heap, live = phase.heaps[cls], phase.live[cls]
        work = self._work[cls]
        while heap:
            key = heap[0]
            ln = self.lines[-key[0] - 1]
            if not ln.marked and (ln.d_condition or cls == "P0IC") and work(self, phase, ln, key):
                return True
            # nothing was added, so the key is still on top
            heapq.heappop(heap)
            if ln.marked:
                live.discard(key)     # marks only go away on entering 1B
            else:
                phase.drop(cls, key, self._key_elements(cls, ln, key))
        return False

    @staticmethod
    def _key_elements(cls: str, ln: GdLine, key: tuple) -> tuple[Formula, ...]:
        if cls in ("P2", "P3"):
            return ln.d_condition
        if cls == "P0":
            return (ln.d_condition[key[1] - 1],) if key[1] else ()
        if cls in ("P1", "P1R"):
            return (ln.d_condition[key[1]],)
        return ()

    def _try(self, c: _Cand | None, phase: _Phase) -> bool:
        if c is None:
            return False
        key = (c.formula, c.d, c.a)
        if key in phase.refused:
            return False
        if self._offer(c, phase)[0] == _REJECTED:
            phase.refused.add(key)
            return False
        return True

    def _scan(self, phase: _Phase, key: tuple, seq: list[GdLine] | None, make) -> bool:
        """Offer ``make(x)`` for the members of ``seq`` not yet tried under ``key``.

        ``seq`` only ever grows, and a refused pair stays refused within the
        phase, so each pair is tried once.
        """
        if not seq:
            return False
        start = phase.cursor.get(key, 0)
        for pos in range(start, len(seq)):
            c = make(seq[pos])
            if c is not None and self._try(c, phase):
                phase.cursor[key] = pos + 1
                return True
        phase.cursor[key] = len(seq)
        return False

    # eager moves: EM0 and IC on the line itself, Trans from finished lines
    def _work_p0(self, phase: _Phase, ln: GdLine, key: tuple) -> bool:
        if key[1] == 0:
            return (self._try(self._em0_cand(ln), phase)
                    or self._try(self._ic_cand(ln), phase))
        k = key[1] - 1

        def make(src):
            if src.d_condition or src.d_marked:
                return None
            return self._trans_cand(ln, k, src)
        return self._scan(phase, ("T0", ln.index, k),
                          self._by_formula.get(ln.d_condition[k]), make)

    def _work_ic(self, phase: _Phase, ln: GdLine, key: tuple) -> bool:
        return self._try(self._ic_cand(ln), phase)

    def _work_directed(self, phase: _Phase, ln: GdLine, key: tuple) -> bool:
        return self._directed_at(ln, key[1], phase)

    def _work_trans(self, phase: _Phase, ln: GdLine, key: tuple) -> bool:
        for k, b in enumerate(ln.d_condition):
            def make(src, k=k):
                if src is ln or not src.d_condition or src.d_marked:
                    return None
                return self._trans_cand(ln, k, src)
            if self._scan(phase, ("T", ln.index, k), self._by_formula.get(b), make):
                return True
        return False

    def _work_em(self, phase: _Phase, ln: GdLine, key: tuple) -> bool:
        for b in ln.d_condition:
            for nb in _complements(b):
                def make(l2, b=b, nb=nb):
                    if l2 is ln or l2.formula != ln.formula or l2.d_marked:
                        return None
                    return self._em_cand(ln, b, l2, nb)
                if self._scan(phase, ("EM", ln.index, b, nb), self._by_element.get(nb), make):
                    return True
        return False

    _work = {"P0": _work_p0, "P0IC": _work_ic, "P1": _work_directed,
             "P2": _work_trans, "P3": _work_em, "P1R": _work_directed}

    def _directed_at(self, ln: GdLine, k: int, phase: _Phase) -> bool:
        f = ln.d_condition[k]
        hits = phase.hits[f]
        start = phase.scanned.get(f, 0)
        for pos in range(start, len(hits)):
            src = hits[pos]
            if src.d_marked:
                continue
            for c in self._analysis_cands(src, wanted=f):
                if (c.rule == BOTTOM_RULE or self._gate(f, c.formula, phase)) \
                        and self._try(c, phase):
                    phase.scanned[f] = pos
                    return True
        phase.scanned[f] = len(hits)
        if (ln.index, k) in phase.tail_done:
            return False
        for p in self.premises:
            if self._gate(f, p, phase) and self._try(self._prem_cand(p), phase):
                return True
        for c in self._condition_cands(ln, k):
            if self._try(c, phase):
                return True
        phase.tail_done.add((ln.index, k))
        return False

    def _efq_order(self) -> list[Formula]:
        seen = []
        for ln in self.lines:
            if ln.rule == "Prem" and ln.formula not in seen:
                seen.append(ln.formula)
        return seen + [p for p in self.premises if p not in seen]

    def _enter_1b(self, phase: _Phase) -> None:
        if self.efq_used:
            return
        self.efq_used = True
        phase.tag = "P1B"
        phase.variant = True
        phase.empty_a = True
        self.events.append(f"enter 1B at line {len(self.lines) + 1}")
        self.d_mark_scan()
        phase.reset_work()
        for i in phase.scope:
            self._register(phase, self.lines[i - 1])

    def _efq(self, phase: _Phase) -> bool:
        if not self.premises:
            return False
        self._enter_1b(phase)
        for p in self._efq_order():
            c = _Cand(phase.goal, (), "EFQ", (CNeg(p),), frozenset())
            if self._try(c, phase):
                return True
        return False

    def _prem_cand(self, p: Formula) -> _Cand:
        return _Cand(p, (), "Prem", (), frozenset())

    # -- phases ----------------------------------------------------------------

    def _goal_line(self, formula: Formula, rule: str, phase: _Phase) -> GdLine:
        status, ln = self._offer(_Cand(formula, (), rule, (formula,), frozenset()), phase)
        if ln is None:     # cannot happen: goal lines are never D-marked at once
            raise RuleError(f"could not introduce {rule} line for {render(formula)}")
        return ln

    def _run_phase1(self) -> tuple[bool, GdLine | None]:
        ph = self.stack[0]
        seen = 0    # A-marks are permanent, so each empty-D goal line is looked at once
        while True:
            candidates = self._groups.get(self.goal, {}).get(0, ())
            while seen < len(candidates):
                ln = candidates[seen]
                seen += 1
                if ln.a_marked:
                    continue
                if not ln.a_condition:
                    self.events.append(f"line {ln.index}: goal on empty conditions")
                    return True, ln
                if self._known_bad(ln.a_condition):
                    self.a_mark(ln)
                    self.events.append(f"line {ln.index}: A-marked, condition known unreliable")
                    continue
                self._run_phase2(ln)
                if not ln.a_marked:
                    return True, ln
            if not self._move(ph):
                self.events.append("phase 1 stopped")
                return False, None

    def _run_phase2(self, target: GdLine) -> None:
        theta = target.a_condition
        ph = _Phase(2, f"P2:{target.index}", dab(theta), target.index,
                    variant=False, empty_a=False)
        self.stack.append(ph)
        self.events.append(f"line {target.index}: phase 2 opened")
        try:
            self._goal_line(ph.goal, GoalKind.AGOAL.value, ph)
            seen = 0
            while True:
                while seen < len(self._finished_dabs):
                    ln = self._finished_dabs[seen]
                    seen += 1
                    if ln.a_marked or not dab_disjuncts(ln.formula) <= theta:
                        continue
                    lam = ln.a_condition
                    if not lam:
                        self._fail(target, f"Dab derived on empty conditions at line {ln.index}")
                        return
                    if self._known_bad(lam):
                        self.a_mark(ln)
                        continue
                    if lam not in self._phase3_failed and self._run_phase3(ln):
                        self.a_mark(ln)
                        self._note_bad(lam)
                        continue
                    self._fail(target, f"line {ln.index} survives phase 3")
                    return
                if not self._move(ph):
                    self.events.append(f"line {target.index}: phase 2 stopped, line stays unmarked")
                    return
        finally:
            self.stack.pop()

    def _fail(self, target: GdLine, why: str) -> None:
        self.a_mark(target)
        self._note_bad(target.a_condition)
        self.events.append(f"line {target.index}: A-marked ({why})")

    def _run_phase3(self, target: GdLine) -> bool:
        lam = target.a_condition
        ph = _Phase(3, f"P3:{target.index}", dab(lam), target.index,
                    variant=True, empty_a=True)
        self.stack.append(ph)
        self.events.append(f"line {target.index}: phase 3 opened")
        try:
            self._goal_line(ph.goal, GoalKind.XGOAL.value, ph)
            while True:
                if self._known_bad_exact(lam):
                    self.events.append(f"line {target.index}: phase 3 succeeded")
                    return True
                if not self._move(ph):
                    self._phase3_failed.add(lam)
                    self.events.append(f"line {target.index}: phase 3 stopped")
                    return False
        finally:
            self.stack.pop()

    def _known_bad_exact(self, lam: frozenset[Abnormality]) -> bool:
        """Is some ``Dab(L')`` with ``L'`` inside ``lam`` on empty conditions?"""
        return any(ds <= lam for ds in self._closed_dabs)

    # -- single rule applications ------------------------------------------------

    def _need_unmarked(self, ln: GdLine) -> None:
        if ln.marked:
            raise RuleError(f"line {ln.index} is marked")

    def _commit(self, c: _Cand) -> GdLine:
        status, ln = self._offer(c, self.phase)
        if status != _ADDED:
            raise RuleError(f"{c.rule}: resulting line is not new or is D-marked at once")
        return ln

    def _pending(self) -> list[Formula]:
        return [b for ln in self._targets(self.phase) for b in ln.d_condition]

    def introduce_goal(self, kind: GoalKind, delta: Iterable[Abnormality]) -> GdLine:
        delta = frozenset(delta)
        if not delta:
            raise RuleError("a Dab-formula needs at least one disjunct")
        top = self.phase.kind
        if kind is GoalKind.AGOAL and top != 1:
            raise RuleError("A-Goal opens phase 2 and needs phase 1 to be current")
        if kind is GoalKind.XGOAL and top != 2:
            raise RuleError("X-Goal opens phase 3 and needs phase 2 to be current")
        level = 2 if kind is GoalKind.AGOAL else 3
        ph = _Phase(level, f"P{level}:{len(self.lines)}", dab(delta), None,
                    variant=level == 3, empty_a=level == 3)
        self.stack.append(ph)
        return self._goal_line(ph.goal, kind.value, ph)

    def close_phase(self) -> None:
        if len(self.stack) == 1:
            raise RuleError("phase 1 cannot be closed")
        self.stack.pop()

    def apply_prem(self, a: Formula) -> GdLine:
        if a not in self.premises:
            raise RuleError(f"{render(a)} is not a premise")
        if not any(self._gate(b, a, self.phase) for b in self._pending()):
            raise RuleError(f"no pending condition element is a positive part of {render(a)}")
        return self._commit(self._prem_cand(a))

    def apply_formula_rule(self, rule_id: str, i: int) -> list[GdLine]:
        src = self.line(i)
        self._need_unmarked(src)
        spec = formula_rule(src.formula)
        if spec is None or spec[0] != rule_id:
            raise RuleError(f"{rule_id} does not apply to {render(src.formula)}")
        if not src.premise_path:
            raise RuleError(f"line {i} has no premise in its path")
        pending = self._pending()
        out = []
        for c in self._analysis_cands(src):
            if any(self._gate(b, c.formula, self.phase) for b in pending):
                status, ln = self._offer(c, self.phase)
                if status == _ADDED:
                    out.append(ln)
        if not out:
            raise RuleError(f"{rule_id} on line {i} adds no new line")
        return out

    def apply_condition_rule(self, rule_id: str, i: int, element: Formula) -> list[GdLine]:
        ln = self.line(i)
        self._need_unmarked(ln)
        if element not in ln.d_set:
            raise RuleError(f"{render(element)} is not in the D-condition of line {i}")
        k = ln.d_condition.index(element)
        spec = condition_rule(element)
        if spec is None or spec[0] != rule_id:
            raise RuleError(f"{rule_id} does not apply to {render(element)}")
        out = []
        for c in self._condition_cands(ln, k):
            status, new = self._offer(c, self.phase)
            if status == _ADDED:
                out.append(new)
        if not out:
            raise RuleError(f"{rule_id} on line {i} adds no new line")
        return out

    def apply_trans(self, i: int, j: int) -> GdLine:
        tgt, src = self.line(i), self.line(j)
        self._need_unmarked(tgt)
        self._need_unmarked(src)
        if src.formula not in tgt.d_set:
            raise RuleError(f"{render(src.formula)} is not in the D-condition of line {i}")
        return self._commit(self._trans_cand(tgt, tgt.d_condition.index(src.formula), src))

    def apply_em(self, i: int, j: int) -> GdLine:
        l1, l2 = self.line(i), self.line(j)
        self._need_unmarked(l1)
        self._need_unmarked(l2)
        if l1.formula != l2.formula:
            raise RuleError("EM needs two lines with the same formula")
        for b in l1.d_condition:
            for nb in _complements(b):
                if nb in l2.d_set:
                    return self._commit(self._em_cand(l1, b, l2, nb))
        raise RuleError("no complementary pair in the D-conditions")

    def apply_em0(self, i: int) -> GdLine:
        ln = self.line(i)
        c = self._em0_cand(ln)
        if c is None:
            raise RuleError(f"the negation of {render(ln.formula)} is not in the D-condition")
        return self._commit(c)

    def apply_ic(self, i: int) -> GdLine:
        ln = self.line(i)
        c = self._ic_cand(ln)
        if c is None:
            raise RuleError("no A-condition member is a disjunct of the formula")
        return self._commit(c)

    def apply_efq(self, a: Formula) -> GdLine:
        if self.phase.kind != 1:
            raise RuleError("EFQ is only available in phase 1")
        if a not in self.premises:
            raise RuleError(f"{render(a)} is not a premise")
        self._enter_1b(self.phase)
        return self._commit(_Cand(self.goal, (), "EFQ", (CNeg(a),), frozenset()))


def start(gamma: Sequence[Formula], g: Formula, max_steps: int = DEFAULT_MAX_STEPS) -> GdProof:
    """A fresh proof whose first line is the goal line ``G_{[G], {}}``."""
    proof = GdProof(gamma, g, max_steps)
    ph = _Phase(1, "P1A", g, None, variant=False, empty_a=False)
    proof.stack.append(ph)
    proof._goal_line(g, "Goal", ph)
    return proof


def run(gamma: Sequence[Formula], g: Formula, max_steps: int = DEFAULT_MAX_STEPS,
        check: bool = False, max_valuations: int | None = None) -> Verdict:
    """Run the full procedure; with ``check`` the oracle verdict is attached."""
    proof = start(gamma, g, max_steps)
    ok, line = proof._run_phase1()
    verdict = Verdict(ok, proof.lines, line.index if line else None,
                      steps=proof.steps, events=proof.events)
    if check:
        report = analyse(gamma, g, max_valuations or DEFAULT_MAX_VALUATIONS)
        verdict.oracle_evidence = report.unreliable
        verdict.oracle_derivable = report.derivable
    return verdict
