"""Impulsive semiflows: simulation, separated-set entropy and the gluing quotient."""

__version__ = "0.1.0"

from .errors import ConsistencyError, DomainError, GrazingError, ImpflowError
from .spaces import MetricSpaceSpec, Point, SemiflowSpec, dist, evolve
from .impulsive import (
    ImpulseMap,
    ImpulseSet,
    ImpulsiveSystem,
    check_conditions,
    impulse_times,
    impulsive_orbit,
    psi,
    tau_star,
)
from .timefns import TimeFunction, TimeSequence, check_admissible, j_set
from .entropy import (
    SeparationParams,
    entropy_estimate,
    entropy_sweep,
    separated_count_exact,
    separated_count_greedy,
)
from .quotient import (
    are_equivalent,
    class_of,
    induced_psi,
    project,
    quotient_dist,
    quotient_dist_chain,
    semiconjugacy_check,
)
from .examples import get_example, list_examples

__all__ = [
    "ConsistencyError", "DomainError", "GrazingError", "ImpflowError",
    "MetricSpaceSpec", "Point", "SemiflowSpec", "dist", "evolve",
    "ImpulseMap", "ImpulseSet", "ImpulsiveSystem", "check_conditions", "impulse_times",
    "impulsive_orbit", "psi", "tau_star",
    "TimeFunction", "TimeSequence", "check_admissible", "j_set",
    "SeparationParams", "entropy_estimate", "entropy_sweep", "separated_count_exact",
    "separated_count_greedy",
    "are_equivalent", "class_of", "induced_psi", "project", "quotient_dist",
    "quotient_dist_chain", "semiconjugacy_check",
    "get_example", "list_examples",
]
