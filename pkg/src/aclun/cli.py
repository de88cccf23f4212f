"""Command-line front end.

Examples::

    aclun "~p|r, p&~q, q |- r"
    aclun --mode oracle "p, q |- p&q"
    aclun --file sequents.txt --trace records --check
    aclun --mode dynamic-replay --file proof.txt

Exit status: 0 derivable, 1 not derivable, 2 error.  In batch mode any error
gives 2, otherwise any underivable sequent gives 1.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import TextIO

from .dynamic_proof import ProofError, parse_script, premises_of_script, replay
from .formula_core import FormulaSyntaxError, render
from .gd_engine import DEFAULT_MAX_STEPS, StepCapExceeded, run
from .clun_oracle import DEFAULT_MAX_VALUATIONS, ResourceLimitError, analyse, minimal_dab_consequences
from .trace import format_records, format_sequent, format_table, parse_sequent

EXIT_DERIVABLE, EXIT_NOT_DERIVABLE, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    mode: str = "gd"
    trace_format: str = "table"
    cross_check: bool = False
    max_steps: int = DEFAULT_MAX_STEPS
    max_valuations: int = DEFAULT_MAX_VALUATIONS


class CrossCheckError(RuntimeError):
    pass


def _verdict_word(ok: bool) -> str:
    return "DERIVABLE" if ok else "NOT DERIVABLE"


def run_prove(sequent_text: str, config: RunConfig, out: TextIO) -> int:
    gamma, goal = parse_sequent(sequent_text)
    verdict = run(gamma, goal, max_steps=config.max_steps, check=config.cross_check,
                  max_valuations=config.max_valuations)
    if config.trace_format == "records":
        print(format_records(gamma, goal, verdict), file=out)
    else:
        print(format_sequent(gamma, goal), file=out)
        print(format_table(verdict.proof), file=out)
        for event in verdict.events:
            print(f"  * {event}", file=out)
        print(_verdict_word(verdict.derivable), file=out)
    if config.cross_check:
        if config.trace_format != "records":
            print(f"oracle: {_verdict_word(verdict.oracle_derivable)}; "
                  f"U(Gamma) = {verdict.oracle_evidence}", file=out)
        if verdict.oracle_derivable != verdict.derivable:
            raise CrossCheckError(f"procedure and oracle disagree on {sequent_text.strip()!r}")
    return EXIT_DERIVABLE if verdict.derivable else EXIT_NOT_DERIVABLE


def run_oracle(sequent_text: str, config: RunConfig, out: TextIO) -> int:
    gamma, goal = parse_sequent(sequent_text)
    report = analyse(gamma, goal, config.max_valuations)
    print(format_sequent(gamma, goal), file=out)
    print("candidates: " + ", ".join(a.key for a in report.candidates), file=out)
    mins = minimal_dab_consequences(gamma, config.max_valuations)
    print("minimal Dab-consequences: "
          + ("; ".join(render(d.formula) for d in mins) if mins else "none"), file=out)
    print(f"U(Gamma) = {report.unreliable}", file=out)
    print(_verdict_word(report.derivable), file=out)
    if report.countermodel is not None:
        print(f"countermodel: {report.countermodel.describe()}", file=out)
    return EXIT_DERIVABLE if report.derivable else EXIT_NOT_DERIVABLE


def run_dynamic_replay(script_text: str, config: RunConfig, out: TextIO) -> int:
    script = parse_script(script_text)
    gamma = premises_of_script(script)
    proof = replay(gamma, script, config.max_valuations)
    for stage, marked in enumerate(proof.history, 1):
        shown = "{" + ", ".join(map(str, sorted(marked))) + "}"
        ln = proof.lines[stage - 1]
        print(f"stage {stage}: {render(ln.formula)} ({ln.rule}) marked {shown}", file=out)
    return EXIT_DERIVABLE


def _sequents(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _one(item: str, config: RunConfig, out: TextIO, err: TextIO) -> int:
    handler = run_oracle if config.mode == "oracle" else run_prove
    try:
        return handler(item, config, out)
    except (ValueError, FormulaSyntaxError) as exc:
        print(f"error: {exc}", file=err)
    except (StepCapExceeded, ResourceLimitError, CrossCheckError) as exc:
        print(f"error: {exc}", file=err)
    return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aclun", description="Decide ACLuN1 derivability.")
    ap.add_argument("sequent", nargs="?", help="e.g. 'p, ~p|q |- q'")
    ap.add_argument("--file", help="sequent file (one per line) or proof script")
    ap.add_argument("--mode", choices=("gd", "oracle", "dynamic-replay"), default="gd")
    ap.add_argument("--trace", choices=("table", "records"), default="table")
    ap.add_argument("--check", action="store_true", help="cross-check with the oracle")
    ap.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    ap.add_argument("--max-valuations", type=int, default=DEFAULT_MAX_VALUATIONS)
    return ap


def main(argv=None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    if (args.sequent is None) == (args.file is None):
        print("error: give either a sequent or --file", file=err)
        return EXIT_ERROR
    if args.max_steps < 1 or args.max_valuations < 1:
        print("error: limits must be positive", file=err)
        return EXIT_ERROR
    config = RunConfig(args.mode, args.trace, args.check, args.max_steps, args.max_valuations)

    if args.file is not None:
        try:
            with open(args.file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: {exc}", file=err)
            return EXIT_ERROR
    else:
        text = args.sequent

    if config.mode == "dynamic-replay":
        try:
            return run_dynamic_replay(text, config, out)
        except (ProofError, ValueError, ResourceLimitError) as exc:
            print(f"error: {exc}", file=err)
            return EXIT_ERROR

    items = _sequents(text) if args.file is not None else [text]
    if not items:
        print("error: no sequents given", file=err)
        return EXIT_ERROR
    codes = [_one(item, config, out, err) for item in items]
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_NOT_DERIVABLE if EXIT_NOT_DERIVABLE in codes else EXIT_DERIVABLE


if __name__ == "__main__":
    sys.exit(main())
