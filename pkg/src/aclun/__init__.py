"""Goal-directed decision procedure for the adaptive logic ACLuN1.

Modules:

* ``formula_core``: formulas, parsing, positive parts, abnormalities;
* ``clun_oracle``: exhaustive CLuN valuation search and reference verdicts;
* ``dynamic_proof``: staged PREM/RU/RC proofs with Reliability marking;
* ``gd_engine``: the three-phase goal-directed procedure;
* ``trace``: proof tables, record streams and line audits;
* ``cli``: the ``aclun`` command.
"""

from .clun_oracle import clun_consequence, final_derivable, unreliable_set
from .dynamic_proof import DynProof, replay
from .formula_core import parse, render
from .gd_engine import Verdict, run

__version__ = "0.1.0"

__all__ = [
    "DynProof", "Verdict", "clun_consequence", "final_derivable", "parse", "render",
    "replay", "run", "unreliable_set",
]
