"""Staged dynamic proofs with PREM/RU/RC and Reliability marking."""

import pytest

from aclun.clun_oracle import final_derivable, unreliable_set
from aclun.dynamic_proof import (
    DynProof, ProofError, format_script_line, parse_condition, parse_script,
    premises_of_script, recompute_marks, replay,
)
from aclun.formula_core import Abnormality, Atom, parse

p, q = Atom("p"), Atom("q")
AP, AQ = Abnormality(p), Abnormality(q)

NINE_LINES = """\
(p & q) & t ; - ; PREM ; {}
~p | r ; - ; PREM ; {}
~q | s ; - ; PREM ; {}
~p | ~q ; - ; PREM ; {}
t -> ~p ; - ; PREM ; {}
r ; 1, 2 ; RC ; {p & ~p}
s ; 1, 3 ; RC ; {q & ~q}
p & ~p | q & ~q ; 1, 4 ; RU ; {}
p & ~p ; 1, 5 ; RU ; {}
"""


def section2_proof(upto=9):
    script = parse_script(NINE_LINES)[:upto]
    return replay(premises_of_script(parse_script(NINE_LINES)), script)


class TestRules:
    def test_prem(self):
        proof = DynProof([parse("(p & q) & t")])
        ln = proof.add_prem(parse("(p & q) & t"))
        assert (ln.index, ln.rule, ln.condition) == (1, "PREM", frozenset())

    def test_prem_rejects_non_premise(self):
        proof = DynProof([p])
        proof.add_prem(p)
        with pytest.raises(ProofError):
            proof.add_prem(Atom("r"))

    def test_ru_section2_lines(self):
        proof = section2_proof(5)
        ln8 = proof.add_ru([1, 4], parse("p & ~p | q & ~q"))
        ln9 = proof.add_ru([1, 5], parse("p & ~p"))
        assert ln8.condition == frozenset() and ln9.condition == frozenset()

    def test_ru_identity(self):
        proof = DynProof([p])
        proof.add_prem(p)
        assert proof.add_ru([1], p).formula == p

    def test_ru_rejects_with_countermodel(self):
        proof = DynProof([p, parse("~p | r")])
        proof.add_prem(p)
        proof.add_prem(parse("~p | r"))
        with pytest.raises(ProofError) as exc:
            proof.add_ru([1, 2], parse("r"))
        assert exc.value.countermodel is not None
        assert "countermodel" in str(exc.value)

    def test_rc_section2_lines(self):
        proof = section2_proof(5)
        assert proof.add_rc([1, 2], parse("r"), {AP}).condition == {AP}
        assert proof.add_rc([1, 3], parse("s"), {AQ}).condition == {AQ}

    def test_rc_from_nothing(self):
        proof = DynProof([q])
        ln = proof.add_rc([], parse("p | ~p"), {AP})
        assert ln.condition == {AP}

    def test_rc_needs_condition(self):
        proof = DynProof([p])
        proof.add_prem(p)
        with pytest.raises(ProofError):
            proof.add_rc([1], p, set())

    def test_rc_inherits_conditions(self):
        proof = section2_proof(6)
        ln = proof.add_rc([6], parse("r | s"), {AQ})
        assert ln.condition == {AP, AQ}

    def test_refs_must_exist(self):
        proof = DynProof([p])
        with pytest.raises(ProofError):
            proof.add_ru([1], p)


class TestMarking:
    def test_stage_history(self):
        proof = section2_proof()
        history = [sorted(h) for h in proof.history]
        assert history == [[]] * 7 + [[6, 7], [6]]

    def test_stage7_and_stage9_derivability(self):
        proof7 = section2_proof(7)
        assert proof7.derived_at_stage(parse("r"))
        proof9 = section2_proof(9)
        assert proof9.derived_at_stage(parse("s"))
        assert not proof9.derived_at_stage(parse("r"))

    def test_unreliable_at_stages(self):
        assert section2_proof(8).unreliable_at_stage() == {AP, AQ}
        assert section2_proof(9).unreliable_at_stage() == {AP}

    def test_empty_proof(self):
        proof = DynProof([p])
        assert recompute_marks(proof) == set()
        assert not proof.derived_at_stage(p)

    def test_recompute_idempotent(self):
        proof = section2_proof()
        first = recompute_marks(proof)
        assert recompute_marks(proof) == first == {6}

    def test_no_dab_line_no_marks(self):
        proof = section2_proof(7)
        assert recompute_marks(proof) == set()

    def test_agrees_with_oracle_at_saturation(self):
        gamma = premises_of_script(parse_script(NINE_LINES))
        proof = section2_proof()
        assert unreliable_set(gamma).members == proof.unreliable_at_stage()
        for goal in ("r", "s"):
            assert proof.derived_at_stage(parse(goal)) == final_derivable(gamma, parse(goal))


class TestScripts:
    def test_parse_condition(self):
        assert parse_condition("{}") == frozenset()
        assert parse_condition("{p & ~p, q & ~q}") == {AP, AQ}
        with pytest.raises(ValueError):
            parse_condition("p & ~p")
        with pytest.raises(ValueError):
            parse_condition("{p & q}")

    def test_parse_script_fields(self):
        script = parse_script(NINE_LINES)
        assert len(script) == 9
        assert script[5].refs == (1, 2) and script[5].rule == "RC"
        assert script[0].refs == ()

    def test_comments_and_blank_lines(self):
        script = parse_script("# heading\n\np ; - ; prem ; {}  # trailing\n")
        assert len(script) == 1 and script[0].rule == "PREM"

    @pytest.mark.parametrize("bad", ["p ; - ; PREM", "p ; - ; MP ; {}", "p ; x ; RU ; {}"])
    def test_malformed_scripts(self, bad):
        with pytest.raises(ValueError):
            parse_script(bad)

    def test_format_round_trip(self):
        proof = section2_proof()
        text = "\n".join(format_script_line(ln) for ln in proof.lines)
        again = replay(proof.premises, parse_script(text))
        assert again.history == proof.history

    def test_single_prem_script(self):
        script = parse_script("p ; - ; PREM ; {}")
        proof = replay(premises_of_script(script), script)
        assert proof.history == [frozenset()]

    def test_invalid_step_names_line_and_countermodel(self):
        script = parse_script("p ; - ; PREM ; {}\n~p | r ; - ; PREM ; {}\nr ; 1, 2 ; RU ; {}")
        with pytest.raises(ProofError) as exc:
            replay(premises_of_script(script), script)
        assert str(exc.value).startswith("script line 3:")
        assert exc.value.countermodel is not None

    def test_ru_condition_must_match(self):
        script = parse_script("p ; - ; PREM ; {}\np ; 1 ; RU ; {p & ~p}")
        with pytest.raises(ProofError):
            replay(premises_of_script(script), script)

    def test_prem_takes_no_refs(self):
        script = parse_script("p ; 1 ; PREM ; {}")
        with pytest.raises(ProofError):
            replay([p], script)
