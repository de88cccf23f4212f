"""Semantic decision procedures for CLuN and ACLuN1 by valuation enumeration.

A CLuN valuation fixes a bit for every atom and a glut bit for every distinct
``~A`` formula.  ``~A`` is true when ``A`` is false and takes its glut bit
otherwise, so ``A | ~A`` always holds while ``A & ~A`` may.  Everything else
is classical.  Valuations are enumerated in counting order (bit ``i`` of the
index is the ``i``-th atom, then the glut bits), vectorized with numpy in
fixed-size chunks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .formula_core import (
    Abnormality, And, Atom, Bottom, CNeg, DabFormula, Formula, Iff, Imp, Or, PNeg,
    atoms, candidate_abnormalities, dab, pneg_subformulas, render,
)

DEFAULT_MAX_VALUATIONS = 1 << 24
_CHUNK_BITS = 16


class ResourceLimitError(RuntimeError):
    """The valuation space is larger than the configured cap."""

    def __init__(self, space: int, limit: int):
        self.space = space
        self.limit = limit
        super().__init__(f"valuation space of {space} exceeds the cap of {limit}")


@dataclass(frozen=True)
class ClunValuation:
    atom_bits: dict[str, int]
    glut_bits: dict[str, int]

    def describe(self) -> str:
        parts = [f"{k}={v}" for k, v in self.atom_bits.items()]
        parts += [f"glut({k})={v}" for k, v in self.glut_bits.items()]
        return ", ".join(parts) if parts else "(empty valuation)"


@dataclass
class UnreliableSet:
    members: frozenset[Abnormality]
    witnesses: list[DabFormula] = field(default_factory=list)

    def __contains__(self, item: Abnormality) -> bool:
        return item in self.members

    def __str__(self) -> str:
        if not self.members:
            return "{}"
        return "{" + ", ".join(a.key for a in sorted(self.members)) + "}"


class _Space:
    """Bit layout for the valuations relevant to a set of formulas."""

    def __init__(self, formulas: Sequence[Formula], max_valuations: int):
        self.atoms = atoms(formulas)
        self.gluts = pneg_subformulas(formulas)
        self.nbits = len(self.atoms) + len(self.gluts)
        self.size = 1 << self.nbits
        if self.size > max_valuations:
            raise ResourceLimitError(self.size, max_valuations)
        self.bit_of: dict[Formula, int] = {}
        for i, a in enumerate(self.atoms):
            self.bit_of[a] = i
        for j, g in enumerate(self.gluts):
            self.bit_of[g] = len(self.atoms) + j

    def chunks(self):
        step = 1 << _CHUNK_BITS
        for start in range(0, self.size, step):
            idx = np.arange(start, min(start + step, self.size), dtype=np.int64)
            yield start, _Chunk(self, idx)

    def valuation(self, index: int) -> ClunValuation:
        return ClunValuation(
            {a.name: (index >> self.bit_of[a]) & 1 for a in self.atoms},
            {render(g): (index >> self.bit_of[g]) & 1 for g in self.gluts},
        )


class _Chunk:
    def __init__(self, space: _Space, idx: np.ndarray):
        self.space = space
        self.idx = idx
        self.memo: dict[Formula, np.ndarray] = {}

    def bit(self, f: Formula) -> np.ndarray:
        return ((self.idx >> self.space.bit_of[f]) & 1).astype(bool)

    def eval(self, f: Formula) -> np.ndarray:
        hit = self.memo.get(f)
        if hit is not None:
            return hit
        if isinstance(f, Atom):
            val = self.bit(f)
        elif isinstance(f, Bottom):
            val = np.zeros(len(self.idx), dtype=bool)
        elif isinstance(f, CNeg):
            val = ~self.eval(f.arg)
        elif isinstance(f, PNeg):
            val = ~self.eval(f.arg) | self.bit(f)
        elif isinstance(f, And):
            val = self.eval(f.left) & self.eval(f.right)
        elif isinstance(f, Or):
            val = self.eval(f.left) | self.eval(f.right)
        elif isinstance(f, Imp):
            val = ~self.eval(f.left) | self.eval(f.right)
        elif isinstance(f, Iff):
            val = self.eval(f.left) == self.eval(f.right)
        else:
            raise TypeError(f"unknown formula node {type(f).__name__}")
        self.memo[f] = val
        return val

    def models(self, gamma: Iterable[Formula]) -> np.ndarray:
        mask = np.ones(len(self.idx), dtype=bool)
        for g in gamma:
            mask &= self.eval(g)
        return mask


def find_countermodel(gamma: Sequence[Formula], a: Formula,
                      max_valuations: int = DEFAULT_MAX_VALUATIONS) -> ClunValuation | None:
    """First valuation (counting order) satisfying ``gamma`` but not ``a``."""
    gamma = list(gamma)
    space = _Space(gamma + [a], max_valuations)
    for start, chunk in space.chunks():
        bad = chunk.models(gamma) & ~chunk.eval(a)
        if bad.any():
            return space.valuation(start + int(np.argmax(bad)))
    return None


def clun_consequence(gamma: Sequence[Formula], a: Formula,
                     max_valuations: int = DEFAULT_MAX_VALUATIONS) -> bool:
    """Decide ``gamma |-CLuN a`` by exhaustive valuation search."""
    return find_countermodel(gamma, a, max_valuations) is None


def abnormality_profiles(gamma: Sequence[Formula], candidates: Sequence[Abnormality],
                         max_valuations: int = DEFAULT_MAX_VALUATIONS) -> set[int] | None:
    """Distinct sets (bitmasks over ``candidates``) of abnormalities true in some model.

    Returns None when ``gamma`` has no CLuN model at all.
    """
    gamma = list(gamma)
    space = _Space(gamma + [c.formula for c in candidates], max_valuations)
    profiles: set[int] = set()
    any_model = False
    for _, chunk in space.chunks():
        mask = chunk.models(gamma)
        if not mask.any():
            continue
        any_model = True
        code = np.zeros(int(mask.sum()), dtype=np.int64)
        for k, c in enumerate(candidates):
            code |= chunk.eval(c.formula)[mask].astype(np.int64) << k
        profiles.update(np.unique(code).tolist())
    return profiles if any_model else None


def _minimal_sets(masks: Iterable[int]) -> list[int]:
    ordered = sorted(set(masks), key=lambda m: bin(m).count("1"))
    keep: list[int] = []
    for m in ordered:
        if not any(k & m == k for k in keep):
            keep.append(m)
    return keep


def minimal_dab_consequences(gamma: Sequence[Formula],
                             max_valuations: int = DEFAULT_MAX_VALUATIONS) -> list[DabFormula]:
    """All subset-minimal Dab-consequences of ``gamma``, by increasing size.

    ``gamma |- Dab(D)`` iff every model makes some member of ``D`` true, so
    the minimal Dab-consequences are the minimal hitting sets of the
    per-model abnormality profiles.  When ``gamma`` has no model every
    singleton is a (minimal) consequence; only candidates are reported.
    """
    candidates = candidate_abnormalities(gamma)
    if not candidates:
        return []
    profiles = abnormality_profiles(gamma, candidates, max_valuations)
    if profiles is None:
        return [DabFormula(frozenset({c})) for c in candidates]
    if 0 in profiles:
        return []
    family = _minimal_sets(profiles)
    found: list[int] = []
    n = len(candidates)
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            m = sum(1 << k for k in combo)
            if any(f & m == f for f in found):
                continue
            if all(p & m for p in family):
                found.append(m)
    return [DabFormula(frozenset(candidates[k] for k in range(n) if m >> k & 1))
            for m in found]


def minimal_dab_consequences_direct(gamma: Sequence[Formula],
                                    max_valuations: int = DEFAULT_MAX_VALUATIONS) -> list[DabFormula]:
    """Same result as :func:`minimal_dab_consequences`, one entailment check per subset.

    Slow; kept as an independent cross-check.
    """
    candidates = candidate_abnormalities(gamma)
    found: list[frozenset[Abnormality]] = []
    for size in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            s = frozenset(combo)
            if any(f <= s for f in found):
                continue
            if clun_consequence(gamma, dab(s), max_valuations):
                found.append(s)
    return [DabFormula(s) for s in found]


def unreliable_set(gamma: Sequence[Formula],
                   max_valuations: int = DEFAULT_MAX_VALUATIONS) -> UnreliableSet:
    witnesses = minimal_dab_consequences(gamma, max_valuations)
    members = frozenset(a for w in witnesses for a in w.disjuncts)
    return UnreliableSet(members, witnesses)


def _with_dab(g: Formula, abns: Iterable[Abnormality]) -> Formula:
    abns = list(abns)
    return Or(g, dab(abns)) if abns else g


def reliable_pool(gamma: Sequence[Formula], g: Formula,
                  unreliable: UnreliableSet) -> list[Abnormality]:
    """Abnormalities that may be assumed false when deriving ``g``.

    Abnormalities whose ``~B`` occurs in neither ``gamma`` nor ``g`` can always
    be falsified without touching anything else, so they never help.
    """
    return [a for a in candidate_abnormalities(list(gamma) + [g]) if a not in unreliable]


@dataclass
class OracleReport:
    candidates: list[Abnormality]
    unreliable: UnreliableSet
    reliable: list[Abnormality]
    derivable: bool
    countermodel: ClunValuation | None


def analyse(gamma: Sequence[Formula], g: Formula,
            max_valuations: int = DEFAULT_MAX_VALUATIONS) -> OracleReport:
    """Full oracle verdict for ``gamma |-ACLuN1 g`` with supporting evidence."""
    gamma = list(gamma)
    unreliable = unreliable_set(gamma, max_valuations)
    reliable = reliable_pool(gamma, g, unreliable)
    cm = find_countermodel(gamma, _with_dab(g, reliable), max_valuations)
    return OracleReport(candidate_abnormalities(gamma), unreliable, reliable, cm is None, cm)


def final_derivable(gamma: Sequence[Formula], g: Formula,
                    max_valuations: int = DEFAULT_MAX_VALUATIONS) -> bool:
    """``gamma |-ACLuN1 g``: some ``g | Dab(D)`` with ``D`` disjoint from U(gamma) follows.

    Disjunct addition preserves consequence, so it suffices to test the single
    largest reliable ``D``.
    """
    return analyse(gamma, g, max_valuations).derivable


def final_derivable_by_search(gamma: Sequence[Formula], g: Formula,
                              max_valuations: int = DEFAULT_MAX_VALUATIONS) -> bool:
    """Direct search over every reliable subset; cross-check for :func:`final_derivable`."""
    gamma = list(gamma)
    unreliable = unreliable_set(gamma, max_valuations)
    pool = reliable_pool(gamma, g, unreliable)
    for size in range(len(pool) + 1):
        for combo in itertools.combinations(pool, size):
            if clun_consequence(gamma, _with_dab(g, combo), max_valuations):
                return True
    return False


# ---------------------------------------------------------------------------
# Classical reference
# ---------------------------------------------------------------------------

def classical_image(f: Formula) -> Formula:
    """Replace every ``~`` by classical negation."""
    if isinstance(f, PNeg):
        return CNeg(classical_image(f.arg))
    if isinstance(f, CNeg):
        return CNeg(classical_image(f.arg))
    if isinstance(f, (And, Or, Imp, Iff)):
        return type(f)(classical_image(f.left), classical_image(f.right))
    return f


def classical_consequence(gamma: Sequence[Formula], a: Formula,
                          max_valuations: int = DEFAULT_MAX_VALUATIONS) -> bool:
    """Truth-table consequence, with ``~`` read classically."""
    gamma = [classical_image(g) for g in gamma]
    return clun_consequence(gamma, classical_image(a), max_valuations)


def is_explosive(gamma: Sequence[Formula], max_valuations: int = DEFAULT_MAX_VALUATIONS) -> bool:
    """True when ``gamma`` has no CLuN model (it derives ``bot``)."""
    return clun_consequence(gamma, Bottom(), max_valuations)
