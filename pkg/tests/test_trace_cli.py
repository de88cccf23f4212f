"""Trace rendering, record streams, soundness audits and the command line."""

import io
import json

import pytest

from aclun.cli import RunConfig, build_parser, main, run_oracle, run_prove
from aclun.formula_core import parse
from aclun.gd_engine import run
from aclun.trace import (
    RECORD_FIELDS, audit_lines, audit_records, format_records, format_sequent, format_table,
    line_is_sound, parse_sequent, read_records,
)

EXAMPLE1 = "~p|r, p&~q, q |- r"
NINE_LINES = """\
# the staged example
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


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


class TestSequents:
    def test_parse_and_format(self):
        gamma, goal = parse_sequent(EXAMPLE1)
        assert format_sequent(gamma, goal) == "~p | r, p & ~q, q |- r"

    def test_empty_premises(self):
        gamma, goal = parse_sequent("|- p | ~p")
        assert gamma == [] and format_sequent(gamma, goal) == "|- p | ~p"

    @pytest.mark.parametrize("bad", ["p, q", "p |- q |- r"])
    def test_turnstile_count(self, bad):
        with pytest.raises(ValueError):
            parse_sequent(bad)


class TestTable:
    def test_example1_table(self):
        gamma, goal = parse_sequent(EXAMPLE1)
        table = format_table(run(gamma, goal).proof).splitlines()
        assert table[0].split() == ["#", "formula", "refs", "rule", "D-condition",
                                    "A-condition", "mark", "phase"]
        assert table[4].split() == ["4", "r", "3", "C!~E", "[p]", "{p", "&", "~p}", "D", "P1A"]
        assert table[7].split() == ["7", "r", "4,6", "Trans", "[]", "{p", "&", "~p}", "P1A"]


class TestRecords:
    def test_field_order_and_round_trip(self):
        gamma, goal = parse_sequent(EXAMPLE1)
        text = format_records(gamma, goal, run(gamma, goal))
        rows = [json.loads(x) for x in text.splitlines()]
        assert rows[0] == {"sequent": "~p | r, p & ~q, q |- r"}
        assert tuple(rows[1])[:len(RECORD_FIELDS)] == RECORD_FIELDS
        assert rows[-1] == {"verdict": "DERIVABLE", "deciding_line": 7}
        trace = read_records(text)
        assert trace.goal == goal and trace.gamma == gamma
        assert trace.derivable and trace.deciding_line == 7
        assert [ln.index for ln in trace.lines] == list(range(1, 17))
        assert trace.lines[3].d_marked and trace.lines[3].d_condition == (parse("p"),)

    def test_mark_history_recorded(self):
        gamma, goal = parse_sequent(EXAMPLE1)
        rows = [json.loads(x) for x in format_records(gamma, goal, run(gamma, goal)).splitlines()]
        assert rows[4]["history"] == [[4, False, False], [7, True, False]]

    def test_out_of_order_fields_rejected(self):
        bad = '{"sequent": "|- p"}\n{"formula": "p", "index": 1}'
        with pytest.raises(ValueError):
            read_records(bad)

    def test_missing_header_rejected(self):
        with pytest.raises(ValueError):
            read_records('{"verdict": "DERIVABLE"}')

    def test_audit_passes_on_real_traces(self):
        for text in (EXAMPLE1, "~p, p|q, p |- q", "p, ~p|s, r->t, ~p|q, ~q |- s"):
            gamma, goal = parse_sequent(text)
            assert audit_records(format_records(gamma, goal, run(gamma, goal))) == []

    def test_audit_catches_bad_line(self):
        gamma, goal = parse_sequent(EXAMPLE1)
        trace = read_records(format_records(gamma, goal, run(gamma, goal)))
        trace.lines[6].a_condition = frozenset()
        assert audit_lines(trace.gamma, trace.lines) == [7]

    def test_line_is_sound(self):
        gamma = [parse("~p | r"), parse("p")]
        assert not line_is_sound(gamma, parse("r"), (), frozenset())
        assert line_is_sound(gamma, parse("r"), (parse("!~p"),), frozenset())


class TestCliProve:
    def test_example1(self):
        code, out, _ = cli(EXAMPLE1)
        assert code == 0 and out.splitlines()[-1] == "DERIVABLE"

    def test_example2(self):
        code, out, _ = cli("~p, p|q, p |- q")
        assert code == 1 and out.splitlines()[-1] == "NOT DERIVABLE"

    def test_theorem(self):
        assert cli("|- p | ~p")[0] == 0

    def test_check_prints_oracle(self):
        code, out, _ = cli("--check", "~p, p|q, p |- q")
        assert code == 1
        assert out.splitlines()[-1] == "oracle: NOT DERIVABLE; U(Gamma) = {p & ~p}"

    def test_records_stay_parseable_with_check(self):
        code, out, _ = cli("--trace", "records", "--check", EXAMPLE1)
        assert code == 0
        rows = [json.loads(x) for x in out.splitlines()]
        assert rows[-1]["oracle_verdict"] == "DERIVABLE"
        assert rows[-1]["unreliable"] == ["q & ~q"]

    def test_parse_error(self):
        code, _, err = cli("p |- ")
        assert code == 2 and err.startswith("error:")

    def test_step_cap(self):
        code, _, err = cli("--max-steps", "3", EXAMPLE1)
        assert code == 2 and "step cap" in err

    def test_valuation_cap(self):
        code, _, err = cli("--check", "--max-valuations", "2", EXAMPLE1)
        assert code == 2 and "exceeds the cap" in err

    def test_nonpositive_limits(self):
        assert cli("--max-steps", "0", EXAMPLE1)[0] == 2

    def test_needs_exactly_one_input(self, tmp_path):
        assert cli()[0] == 2
        f = tmp_path / "s.txt"
        f.write_text("p |- p\n")
        assert cli("--file", str(f), "p |- p")[0] == 2

    def test_batch_file(self, tmp_path):
        f = tmp_path / "batch.txt"
        f.write_text("# sample\n~p, p|q, p |- q\n\np, q |- p & q   # trivial\n")
        code, out, _ = cli("--file", str(f))
        verdicts = [x for x in out.splitlines() if x in ("DERIVABLE", "NOT DERIVABLE")]
        assert code == 1 and verdicts == ["NOT DERIVABLE", "DERIVABLE"]

    def test_batch_error_wins(self, tmp_path):
        f = tmp_path / "batch.txt"
        f.write_text("p |- p\np |-\n")
        assert cli("--file", str(f))[0] == 2

    def test_missing_file(self, tmp_path):
        assert cli("--file", str(tmp_path / "none.txt"))[0] == 2

    def test_exit_code_independent_of_format(self):
        for text in (EXAMPLE1, "~p, p|q, p |- q"):
            assert cli(text)[0] == cli("--trace", "records", text)[0]

    def test_run_prove_directly(self):
        out = io.StringIO()
        assert run_prove("p |- p", RunConfig(), out) == 0


class TestCliOracle:
    def test_section2_goal_s(self):
        code, out, _ = cli("--mode", "oracle", "(p&q)&t, ~p|r, ~q|s, ~p|~q, t->~p |- s")
        assert code == 0
        assert "U(Gamma) = {p & ~p}" in out.splitlines()

    def test_trivial(self):
        code, out, _ = cli("--mode", "oracle", "p, q |- p&q")
        assert code == 0 and "U(Gamma) = {}" in out and "minimal Dab-consequences: none" in out

    def test_example3(self):
        out = io.StringIO()
        code = run_oracle("p, ~p|s, r->t, ~p|q, ~q |- s", RunConfig(mode="oracle"), out)
        lines = out.getvalue().splitlines()
        assert code == 1
        assert lines[1:5] == ["candidates: p & ~p, q & ~q",
                              "minimal Dab-consequences: p & ~p | q & ~q",
                              "U(Gamma) = {p & ~p, q & ~q}", "NOT DERIVABLE"]
        assert lines[5].startswith("countermodel: ")


class TestCliReplay:
    def test_nine_line_proof(self, tmp_path):
        f = tmp_path / "proof.txt"
        f.write_text(NINE_LINES)
        code, out, _ = cli("--mode", "dynamic-replay", "--file", str(f))
        marks = [line.rsplit("marked ", 1)[1] for line in out.splitlines()]
        assert code == 0
        assert marks == ["{}"] * 7 + ["{6, 7}", "{6}"]

    def test_single_prem(self):
        code, out, _ = cli("--mode", "dynamic-replay", "p ; - ; PREM ; {}")
        assert code == 0 and out.strip() == "stage 1: p (PREM) marked {}"

    def test_invalid_step(self):
        code, _, err = cli("--mode", "dynamic-replay",
                           "p ; - ; PREM ; {}\n~p | r ; - ; PREM ; {}\nr ; 1, 2 ; RU ; {}")
        assert code == 2 and "countermodel" in err


class TestParser:
    def test_defaults(self):
        args = build_parser().parse_args(["p |- p"])
        assert (args.mode, args.trace, args.check) == ("gd", "table", False)
        assert args.max_steps == 100_000 and args.max_valuations == 1 << 24
        cfg = RunConfig()
        assert (cfg.mode, cfg.trace_format, cfg.max_steps) == ("gd", "table", 100_000)
