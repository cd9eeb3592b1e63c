"""A learning compiler for SAT and MINSAT classes.

A class is a CNF formula with per-variable costs together with every instance
obtained by fixing some of its variables.  Compilation partitions the
variables into a hidden-Horn part solved in linear time and an enumerated
part searched by branch and bound, then learns short lemmas from sampled
instances so later solves of any member of the class are faster.
"""

from .core import CnfFormula, DimacsError, MinsatInstance, RawCosts, normalize, parse_costs, parse_dimacs
from .driver import (
    ArtifactError, CompiledClass, build_compiled, compile_class, estimate_curve, learn, load_artifact,
    sample_level, save_artifact,
)
from .oracle import brute_force
from .solver import MINSAT, SAT, solve

__version__ = "0.1.0"
