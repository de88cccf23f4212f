"""Formulas: parsing, rendering, structural queries, positive parts, Dab-formulas."""

import copy
import pickle
import random

import pytest

from aclun.formula_core import (
    BOT, Abnormality, And, Atom, Bottom, CNeg, DabFormula, FormulaSyntaxError, Iff, Imp,
    Or, PartMode, PNeg, as_abnormality, atoms, candidate_abnormalities, dab, dab_disjuncts,
    depth, is_negative_part, is_positive_part, parse, pneg_subformulas, render, subformulas,
)
from gen import random_formula

p, q, r, s, t = (Atom(x) for x in "pqrst")
STD, VAR = PartMode.STANDARD, PartMode.VARIANT


class TestParse:
    def test_paraconsistent_negation_binds_tighter_than_or(self):
        assert parse("~p | r") == Or(PNeg(p), r)

    def test_classical_negation_of_disjunction(self):
        assert parse("!(q | r)") == CNeg(Or(q, r))

    def test_implication_is_right_associative(self):
        assert parse("p -> q -> r") == Imp(p, Imp(q, r))

    def test_and_or_iff_left_associative(self):
        assert parse("p & q & r") == And(And(p, q), r)
        assert parse("p | q | r") == Or(Or(p, q), r)
        assert parse("p <-> q <-> r") == Iff(Iff(p, q), r)

    def test_precedence_ladder(self):
        assert parse("!p & q | r -> s <-> t") == \
            Iff(Imp(Or(And(CNeg(p), q), r), s), t)

    def test_bottom_keyword(self):
        assert parse("bot") is BOT
        assert parse("p -> bot") == Imp(p, Bottom())

    def test_whitespace_insignificant(self):
        assert parse("  ~ p|r ") == parse("~p|r")

    def test_identifiers_with_digits(self):
        assert parse("p1 & x_2") == And(Atom("p1"), Atom("x_2"))

    @pytest.mark.parametrize("text", ["", "p &", "(p", "p q", "p)", "p -> ", "&p", "p # q"])
    def test_malformed_input_raises(self, text):
        with pytest.raises(FormulaSyntaxError):
            parse(text)

    def test_error_reports_position(self):
        with pytest.raises(FormulaSyntaxError) as exc:
            parse("p & & q")
        assert exc.value.pos == 4

    def test_uppercase_identifier_rejected(self):
        with pytest.raises(FormulaSyntaxError):
            parse("P | q")

    def test_hash_consing(self):
        assert parse("p & ~q") is parse("p&~q")
        f = parse("(p -> q) <-> ~r")
        assert copy.deepcopy(f) is f
        assert pickle.loads(pickle.dumps(f)) is f


class TestRender:
    def test_abnormality(self):
        assert render(And(p, PNeg(p))) == "p & ~p"

    def test_double_negation(self):
        assert render(PNeg(PNeg(p))) == "~~p"

    def test_implication(self):
        assert render(Imp(t, PNeg(p))) == "t -> ~p"

    def test_minimal_parentheses(self):
        assert render(parse("(p & q) | r")) == "p & q | r"
        assert render(parse("p & (q | r)")) == "p & (q | r)"
        assert render(parse("(p -> q) -> r")) == "(p -> q) -> r"
        assert render(parse("p -> (q -> r)")) == "p -> q -> r"
        assert render(parse("p <-> (q <-> r)")) == "p <-> (q <-> r)"

    def test_round_trip_random(self):
        rng = random.Random(11)
        for _ in range(500):
            f = random_formula(rng, 4)
            assert parse(render(f)) == f
            assert render(parse(render(f))) == render(f)


class TestStructure:
    def test_subformulas_discovery_order(self):
        assert [render(x) for x in subformulas(parse("p & ~q"))] == ["p & ~q", "p", "~q", "q"]
        assert subformulas(BOT) == [BOT]
        assert [render(x) for x in subformulas(parse("~p | r"))] == ["~p | r", "~p", "p", "r"]

    def test_subformulas_without_duplicates(self):
        assert [render(x) for x in subformulas(parse("p & p"))] == ["p & p", "p"]

    def test_atoms_and_pneg_subformulas(self):
        fs = [parse("~p | r"), parse("q & ~~p")]
        assert [a.name for a in atoms(fs)] == ["p", "r", "q"]
        assert [render(x) for x in pneg_subformulas(fs)] == ["~p", "~~p"]

    def test_depth(self):
        assert depth(p) == 0
        assert depth(parse("~(p & q)")) == 2


class TestPositiveParts:
    def test_consequent_not_antecedent(self):
        assert not is_positive_part(p, Imp(p, q), STD)
        assert is_positive_part(q, Imp(p, q), STD)

    def test_classical_negation_through_disjunction(self):
        assert is_positive_part(CNeg(q), parse("!(q | r)"), STD)

    def test_negated_pneg(self):
        # standard: p is a negative part of ~p, which is a negative part of !~p,
        # so p is a positive part of !~p; the variant adds it outright
        assert is_positive_part(p, parse("!~p"), STD)
        assert is_positive_part(p, parse("!~p"), VAR)

    def test_variant_drops_pneg_clauses(self):
        assert is_negative_part(p, PNeg(p), STD)
        assert not is_negative_part(p, PNeg(p), VAR)
        assert is_positive_part(CNeg(p), PNeg(p), STD)
        assert not is_positive_part(CNeg(p), PNeg(p), VAR)
        assert is_positive_part(PNeg(p), CNeg(p), STD)
        assert not is_positive_part(PNeg(p), CNeg(p), VAR)

    def test_biconditional_sides_both_ways(self):
        f = parse("p <-> q")
        for x in (p, q):
            assert is_positive_part(x, f) and is_negative_part(x, f)

    def test_negative_parts_flip_twice(self):
        assert is_positive_part(p, parse("(p -> q) -> r"))
        assert is_negative_part(q, parse("(p -> q) -> r"))

    def test_brute_force_closure(self):
        rng = random.Random(3)
        for _ in range(40):
            b = random_formula(rng, 4)
            for variant in (False, True):
                mode = VAR if variant else STD
                pos, neg, universe = _closure(b, variant)
                for a in universe:
                    assert is_positive_part(a, b, mode) == ((a, b) in pos), (render(a), render(b))
                    assert is_negative_part(a, b, mode) == ((a, b) in neg), (render(a), render(b))

    def test_negative_part_duality(self):
        rng = random.Random(4)
        for _ in range(200):
            b = random_formula(rng, 3)
            for a in subformulas(b):
                if is_negative_part(a, b, STD):
                    assert is_positive_part(CNeg(a), b, STD)
                    assert is_positive_part(PNeg(a), b, STD)


def _closure(b, variant):
    """Least fixed point of the part clauses over the subformulas of ``b`` and their negations."""
    subs = subformulas(b)
    universe = set(subs) | {CNeg(x) for x in subs} | {PNeg(x) for x in subs}
    pos = {(x, x) for x in universe}
    neg = set()
    for y in universe:
        if isinstance(y, (And, Or)):
            pos |= {(y.left, y), (y.right, y)}
        elif isinstance(y, Imp):
            pos.add((y.right, y))
            neg.add((y.left, y))
        elif isinstance(y, Iff):
            for side in (y.left, y.right):
                pos.add((side, y))
                neg.add((side, y))
        elif isinstance(y, CNeg):
            neg.add((y.arg, y))
            if variant and isinstance(y.arg, PNeg):
                pos.add((y.arg.arg, y))
        elif isinstance(y, PNeg) and not variant:
            neg.add((y.arg, y))
    while True:
        new_pos, new_neg = set(pos), set(neg)
        for x, y in neg:
            for wrap in ((CNeg,) if variant else (CNeg, PNeg)):
                if wrap(x) in universe:
                    new_pos.add((wrap(x), y))
        for x, y in pos:
            for y2, z in pos:
                if y2 == y:
                    new_pos.add((x, z))
            for y2, z in neg:
                if y2 == y:
                    new_neg.add((x, z))
        for x, y in neg:
            for y2, z in pos:
                if y2 == y:
                    new_neg.add((x, z))
            for y2, z in neg:
                if y2 == y:
                    new_pos.add((x, z))
        if new_pos == pos and new_neg == neg:
            return pos, neg, universe
        pos, neg = new_pos, new_neg


class TestAbnormalities:
    def test_rendered_form(self):
        assert Abnormality(p).key == "p & ~p"
        assert Abnormality(parse("q | r")).formula == parse("(q | r) & ~(q | r)")

    def test_as_abnormality(self):
        assert as_abnormality(parse("p & ~p")) == p
        assert as_abnormality(parse("~p & p")) is None
        assert as_abnormality(parse("p & ~q")) is None

    def test_from_formula_rejects_other_shapes(self):
        with pytest.raises(ValueError):
            Abnormality.from_formula(parse("p & q"))

    def test_dab_canonical_order_and_nesting(self):
        a, b, c = Abnormality(r), Abnormality(p), Abnormality(q)
        assert render(dab([a, b, c])) == "p & ~p | (q & ~q | r & ~r)"
        assert dab([b]) == parse("p & ~p")
        assert dab([a, a, b]) == dab([b, a])

    def test_dab_of_nothing(self):
        with pytest.raises(ValueError):
            dab([])
        with pytest.raises(ValueError):
            DabFormula(frozenset())

    def test_dab_disjuncts_any_bracketing(self):
        f = parse("(p & ~p | q & ~q) | p & ~p")
        assert dab_disjuncts(f) == {Abnormality(p), Abnormality(q)}
        assert dab_disjuncts(parse("p & ~p | q")) is None

    def test_dab_formula_set_semantics(self):
        d1 = DabFormula(frozenset({Abnormality(p), Abnormality(q)}))
        d2 = DabFormula(frozenset({Abnormality(q), Abnormality(p)}))
        assert d1 == d2 and str(d1) == "p & ~p | q & ~q"


class TestCandidates:
    def test_examples(self):
        assert candidate_abnormalities([p, parse("~p | r")]) == [Abnormality(p)]
        assert candidate_abnormalities([p, q]) == []
        gamma = [parse(x) for x in ("p", "~p | s", "r -> t", "~p | q", "~q")]
        assert set(candidate_abnormalities(gamma)) == {Abnormality(p), Abnormality(q)}

    def test_monotone_under_extension(self):
        rng = random.Random(5)
        for _ in range(200):
            gamma = [random_formula(rng, 3) for _ in range(rng.randint(0, 4))]
            extra = random_formula(rng, 3)
            assert set(candidate_abnormalities(gamma)) <= \
                set(candidate_abnormalities(gamma + [extra]))
