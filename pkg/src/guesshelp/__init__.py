"""Guessing exponents with compressed side information.

A guesser must produce, within a per-letter distortion budget, a
reconstruction of an unseen source sequence, after receiving a rate-limited
description of a correlated observation.  This package computes the
exponential growth rate of the best attainable moment of the number of
guesses, its closed special cases, and an exact exhaustive finite-blocklength
oracle for validation.
"""

from .prob import (
    Alphabet,
    AlphabetMismatchError,
    CondPmf,
    InvalidDistributionError,
    JointPmf,
    ParameterDomainError,
    Pmf,
    ProbabilityError,
    UndefinedConditionalError,
    compose,
    condition,
    conditional_mutual_information,
    entropy,
    joint_kl,
    kl_divergence,
    marginalize,
    mutual_information,
    renyi_entropy,
)
from .ratedist import (
    DistortionInfeasibleError,
    DistortionSpec,
    RdResult,
    conditional_rd,
    distortion_of,
    flat_allocation_rate,
    rd_function,
)
from .exponents import (
    AuxConfiguration,
    ExponentResult,
    ProblemSpec,
    SolverOptions,
    arikan_bounds,
    compute_exponent,
    direct_help_exponent,
    no_help_exponent,
    objective,
    objective_breakdown,
)
from .oracle import (
    FiniteNInstance,
    GuessOrder,
    Helper,
    OracleResult,
    ResourceCapError,
    best_helper_moment,
    covers,
    exponent_trend_report,
    optimal_order_moment,
    reverse_wyner_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
