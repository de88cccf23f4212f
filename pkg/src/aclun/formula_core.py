"""Propositional formulas with two negations.

``~`` is the paraconsistent negation (it may be glutty), ``!`` is classical
negation, ``bot`` is falsum.  Formulas are immutable and hash structurally;
no normalization is ever applied, so ``~~p`` and ``p`` are different values.

Surface grammar (whitespace insignificant)::

    formula := iff
    iff     := imp ("<->" imp)*
    imp     := disj ("->" imp)?
    disj    := conj ("|" conj)*
    conj    := neg ("&" neg)*
    neg     := ("~" | "!") neg | "(" formula ")" | "bot" | IDENT
    IDENT   := [a-z][a-z0-9_]*
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator


_INTERN: dict[tuple, "Formula"] = {}


class Formula:
    """Base class for formula nodes.

    Nodes are immutable and hash-consed: building the same formula twice
    returns the same object, so equality is usually an identity check.
    """

    __slots__ = ("_hash",)
    prec = 6

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"<{render(self)}>"

    # convenience constructors, handy in tests and in the engine
    def __and__(self, other: "Formula") -> "And":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Or":
        return Or(self, other)

    def __invert__(self) -> "PNeg":
        return PNeg(self)


class Atom(Formula):
    __slots__ = ("name",)

    def __new__(cls, name: str):
        key = ("atom", name)
        node = _INTERN.get(key)
        if node is None:
            node = object.__new__(cls)
            object.__setattr__(node, "name", name)
            object.__setattr__(node, "_hash", hash(key))
            _INTERN[key] = node
        return node

    def __reduce__(self):
        return (Atom, (self.name,))

    def __eq__(self, other):
        return self is other or (type(other) is Atom and other.name == self.name)

    __hash__ = Formula.__hash__

    def __setattr__(self, key, value):
        raise AttributeError("formulas are immutable")


class Bottom(Formula):
    __slots__ = ()

    def __new__(cls):
        node = _INTERN.get(("bot",))
        if node is None:
            node = object.__new__(cls)
            object.__setattr__(node, "_hash", hash("bot"))
            _INTERN[("bot",)] = node
        return node

    def __reduce__(self):
        return (Bottom, ())

    def __eq__(self, other):
        return type(other) is Bottom

    __hash__ = Formula.__hash__

    def __setattr__(self, key, value):
        raise AttributeError("formulas are immutable")


class _Unary(Formula):
    __slots__ = ("arg",)
    prec = 5
    tag = ""

    def __new__(cls, arg: Formula):
        if not isinstance(arg, Formula):
            raise TypeError(f"expected Formula, got {type(arg).__name__}")
        key = (cls.tag, arg)
        node = _INTERN.get(key)
        if node is None:
            node = object.__new__(cls)
            object.__setattr__(node, "arg", arg)
            object.__setattr__(node, "_hash", hash((cls.tag, arg._hash)))
            _INTERN[key] = node
        return node

    def __reduce__(self):
        return (type(self), (self.arg,))

    def children(self):
        return (self.arg,)

    def __eq__(self, other):
        if self is other:
            return True
        return (type(other) is type(self) and other._hash == self._hash
                and other.arg == self.arg)

    __hash__ = Formula.__hash__

    def __setattr__(self, key, value):
        raise AttributeError("formulas are immutable")


class PNeg(_Unary):
    """Paraconsistent negation ``~A``."""
    __slots__ = ()
    tag = "~"


class CNeg(_Unary):
    """Classical negation ``!A`` (read as ``A -> bot``)."""
    __slots__ = ()
    tag = "!"


class _Binary(Formula):
    __slots__ = ("left", "right")
    tag = ""

    def __new__(cls, left: Formula, right: Formula):
        if not isinstance(left, Formula) or not isinstance(right, Formula):
            raise TypeError("binary connectives take two formulas")
        key = (cls.tag, left, right)
        node = _INTERN.get(key)
        if node is None:
            node = object.__new__(cls)
            object.__setattr__(node, "left", left)
            object.__setattr__(node, "right", right)
            object.__setattr__(node, "_hash", hash((cls.tag, left._hash, right._hash)))
            _INTERN[key] = node
        return node

    def __reduce__(self):
        return (type(self), (self.left, self.right))

    def children(self):
        return (self.left, self.right)

    def __eq__(self, other):
        if self is other:
            return True
        return (type(other) is type(self) and other._hash == self._hash
                and other.left == self.left and other.right == self.right)

    __hash__ = Formula.__hash__

    def __setattr__(self, key, value):
        raise AttributeError("formulas are immutable")


class And(_Binary):
    __slots__ = ()
    tag = "&"
    prec = 4


class Or(_Binary):
    __slots__ = ()
    tag = "|"
    prec = 3


class Imp(_Binary):
    __slots__ = ()
    tag = "->"
    prec = 2


class Iff(_Binary):
    __slots__ = ()
    tag = "<->"
    prec = 1


BOT = Bottom()


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    """Malformed formula text.  ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


_TOKEN_RE = re.compile(r"\s*(?:(<->|->|[~!&|()])|([A-Za-z][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:  # only trailing whitespace left
            break
        if m.group(1):
            tokens.append(("op", m.group(1), m.start(1)))
        elif m.group(2):
            word = m.group(2)
            if not word[0].islower():
                raise FormulaSyntaxError(
                    f"identifier {word!r} must start with a lowercase letter",
                    m.start(2), text)
            if not re.fullmatch(r"[a-z][a-z0-9_]*", word):
                raise FormulaSyntaxError(f"invalid identifier {word!r}", m.start(2), text)
            tokens.append(("id", word, m.start(2)))
        else:
            raise FormulaSyntaxError(f"unexpected character {m.group(3)!r}", m.start(3), text)
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            raise FormulaSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}",
                                     pos, self.text)

    def parse(self) -> Formula:
        f = self.iff()
        kind, val, pos = self.peek()
        if kind != "end":
            raise FormulaSyntaxError(f"unexpected {val!r}", pos, self.text)
        return f

    def iff(self):
        f = self.imp()
        while self.peek()[1] == "<->":
            self.take()
            f = Iff(f, self.imp())
        return f

    def imp(self):
        f = self.disj()
        if self.peek()[1] == "->":
            self.take()
            return Imp(f, self.imp())
        return f

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.neg()
        while self.peek()[1] == "&":
            self.take()
            f = And(f, self.neg())
        return f

    def neg(self):
        kind, val, pos = self.take()
        if kind == "op" and val == "~":
            return PNeg(self.neg())
        if kind == "op" and val == "!":
            return CNeg(self.neg())
        if kind == "op" and val == "(":
            f = self.iff()
            self.expect(")")
            return f
        if kind == "id":
            return BOT if val == "bot" else Atom(val)
        raise FormulaSyntaxError(f"expected a formula, found {val or 'end of input'!r}",
                                 pos, self.text)


def parse(text: str) -> Formula:
    """Parse surface syntax into a formula.

    >>> parse("p -> q -> r") == Imp(Atom("p"), Imp(Atom("q"), Atom("r")))
    True
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render(f: Formula) -> str:
    """Minimal-parenthesis canonical text; ``parse(render(f)) == f``."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Bottom):
        return "bot"
    if isinstance(f, _Unary):
        inner = render(f.arg)
        if f.arg.prec < 5:
            inner = f"({inner})"
        return f"{f.tag}{inner}"
    if isinstance(f, Imp):
        # right-associative
        left_paren = f.left.prec <= f.prec
        right_paren = f.right.prec < f.prec
    else:
        # left-associative
        left_paren = f.left.prec < f.prec
        right_paren = f.right.prec <= f.prec
    left = render(f.left)
    right = render(f.right)
    if left_paren:
        left = f"({left})"
    if right_paren:
        right = f"({right})"
    return f"{left} {f.tag} {right}"


# ---------------------------------------------------------------------------
# Structural queries
# ---------------------------------------------------------------------------

def _walk(f: Formula) -> Iterator[Formula]:
    yield f
    for c in f.children():
        yield from _walk(c)


def subformulas(f: Formula) -> list[Formula]:
    """All subformulas of ``f`` including ``f``, deduplicated, discovery order."""
    return list(dict.fromkeys(_walk(f)))


def atoms(formulas: Iterable[Formula]) -> list[Atom]:
    """Atoms in order of first appearance."""
    seen = {}
    for f in formulas:
        for g in _walk(f):
            if isinstance(g, Atom):
                seen.setdefault(g, None)
    return list(seen)


def pneg_subformulas(formulas: Iterable[Formula]) -> list[PNeg]:
    """Distinct ``~A`` subformulas in order of first appearance."""
    seen = {}
    for f in formulas:
        for g in _walk(f):
            if isinstance(g, PNeg):
                seen.setdefault(g, None)
    return list(seen)


def depth(f: Formula) -> int:
    """Connective nesting depth; atoms and ``bot`` have depth 0."""
    kids = f.children()
    return 1 + max(depth(c) for c in kids) if kids else 0


class PartMode(Enum):
    """Which positive-part relation to use for gating.

    ``VARIANT`` treats ``A`` as a positive part of ``!~A`` and drops ``~A``
    from the negative-part base clause and from the negation clause; it is
    used where lines must carry an empty A-condition.
    """
    STANDARD = "standard"
    VARIANT = "variant"


def _wraps(variant: bool):
    return (CNeg,) if variant else (CNeg, PNeg)


@lru_cache(maxsize=1 << 14)
def _part_closure(b: Formula, variant: bool):
    """Positive/negative-part facts among the subformulas of ``b`` and their negations.

    Returns two maps from a formula ``x`` to the set of formulas ``y`` (in the
    same universe) such that ``x`` is a positive, respectively negative, part
    of ``y``.  Every ``x`` counts as a positive part of itself.
    """
    subs = list(dict.fromkeys(_walk(b)))
    universe = dict.fromkeys(subs)
    for x in subs:
        for wrap in (CNeg, PNeg):
            universe.setdefault(wrap(x))
    pos = {x: {x} for x in universe}
    neg: dict[Formula, set[Formula]] = {x: set() for x in universe}
    for y in universe:
        if isinstance(y, (And, Or)):
            pos[y.left].add(y)
            pos[y.right].add(y)
        elif isinstance(y, Imp):
            pos[y.right].add(y)
            neg[y.left].add(y)
        elif isinstance(y, Iff):
            for side in (y.left, y.right):
                pos[side].add(y)
                neg[side].add(y)
        elif isinstance(y, CNeg):
            if y.arg in universe:
                neg[y.arg].add(y)
            if variant and isinstance(y.arg, PNeg) and y.arg.arg in universe:
                pos[y.arg.arg].add(y)
        elif isinstance(y, PNeg) and not variant and y.arg in universe:
            neg[y.arg].add(y)
    changed = True
    while changed:
        changed = False
        for x in universe:
            p_new, n_new = set(pos[x]), set(neg[x])
            for y in pos[x]:
                p_new |= pos[y]
                n_new |= neg[y]
            for y in neg[x]:
                p_new |= neg[y]
                n_new |= pos[y]
            if len(p_new) != len(pos[x]) or len(n_new) != len(neg[x]):
                pos[x], neg[x] = p_new, n_new
                changed = True
        for x in universe:
            for wrap in _wraps(variant):
                w = wrap(x)
                if w in universe and not neg[x] <= pos[w]:
                    pos[w] |= neg[x]
                    changed = True
    return pos, neg


def _part_facts(a: Formula, b: Formula, variant: bool):
    """The (positive, negative) container sets of ``a`` within the closure of ``b``."""
    pos, neg = _part_closure(b, variant)
    if a in pos:
        return pos[a], neg[a]
    if isinstance(a, _wraps(variant)):
        # a = !x (or ~x): a is a positive part of whatever x is a negative part of
        seeds = _part_facts(a.arg, b, variant)[1]
        p_out: set[Formula] = set()
        n_out: set[Formula] = set()
        for y in seeds:
            p_out |= pos[y]
            n_out |= neg[y]
        return p_out, n_out
    return (), ()


@lru_cache(maxsize=1 << 18)
def _pos(a: Formula, b: Formula, variant: bool) -> bool:
    return a == b or b in _part_facts(a, b, variant)[0]


@lru_cache(maxsize=1 << 18)
def _neg(a: Formula, b: Formula, variant: bool) -> bool:
    return b in _part_facts(a, b, variant)[1]


def is_positive_part(a: Formula, b: Formula, mode: PartMode = PartMode.STANDARD) -> bool:
    """True iff ``a`` is a positive part of ``b``.

    The relation is the least fixed point of the base clauses (conjuncts,
    disjuncts, consequents, biconditional sides) closed under the negation
    clause and the four polarity-composition rules.  The closure is computed
    once per ``b`` over its subformulas and their negations; a formula
    outside that universe can only be a part by way of the negation clause.
    """
    return _pos(a, b, mode is PartMode.VARIANT)


def is_negative_part(a: Formula, b: Formula, mode: PartMode = PartMode.STANDARD) -> bool:
    return _neg(a, b, mode is PartMode.VARIANT)


# ---------------------------------------------------------------------------
# Abnormalities and Dab-formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Abnormality:
    """The contradiction ``base & ~base``."""
    base: Formula

    @property
    def formula(self) -> And:
        return And(self.base, PNeg(self.base))

    @property
    def key(self) -> str:
        return render(self.formula)

    def __lt__(self, other: "Abnormality") -> bool:
        return self.key < other.key

    def __str__(self) -> str:
        return self.key

    @classmethod
    def from_formula(cls, f: Formula) -> "Abnormality":
        base = as_abnormality(f)
        if base is None:
            raise ValueError(f"{render(f)} is not of the form A & ~A")
        return cls(base)


def as_abnormality(f: Formula) -> Formula | None:
    """Return ``A`` when ``f`` is ``A & ~A``, else None."""
    if isinstance(f, And) and isinstance(f.right, PNeg) and f.right.arg == f.left:
        return f.left
    return None


def sort_abnormalities(abns: Iterable[Abnormality]) -> list[Abnormality]:
    return sorted(set(abns), key=lambda a: a.key)


def dab(abns: Iterable[Abnormality]) -> Formula:
    """Materialize ``Dab(abns)``: right-nested disjunction in canonical order."""
    ordered = sort_abnormalities(abns)
    if not ordered:
        raise ValueError("Dab of the empty set is undefined")
    result = ordered[-1].formula
    for a in reversed(ordered[:-1]):
        result = Or(a.formula, result)
    return result


def dab_disjuncts(f: Formula) -> frozenset[Abnormality] | None:
    """Disjunct set when ``f`` is a disjunction of abnormalities, else None.

    Any bracketing of the disjunction is accepted.
    """
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        base = as_abnormality(g)
        if base is not None:
            out.add(Abnormality(base))
        elif isinstance(g, Or):
            stack.extend((g.left, g.right))
        else:
            return None
    return frozenset(out)


@dataclass(frozen=True)
class DabFormula:
    """A disjunction of abnormalities, compared as a set of disjuncts."""
    disjuncts: frozenset[Abnormality]

    def __post_init__(self):
        if not self.disjuncts:
            raise ValueError("a Dab-formula needs at least one disjunct")
        object.__setattr__(self, "disjuncts", frozenset(self.disjuncts))

    @property
    def formula(self) -> Formula:
        return dab(self.disjuncts)

    def __str__(self) -> str:
        return render(self.formula)


def candidate_abnormalities(gamma: Iterable[Formula]) -> list[Abnormality]:
    """``A & ~A`` for every ``~A`` occurring in ``gamma`` (first-appearance order).

    Only these can occur in a minimal Dab-consequence of ``gamma``.
    """
    return [Abnormality(p.arg) for p in pneg_subformulas(gamma)]


def neg(f: Formula) -> CNeg:
    return CNeg(f)
