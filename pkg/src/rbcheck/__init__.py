"""Reward-bounded reachability for Markov decision processes, for all bounds at once."""

from .bounded import ALGORITHMS, CdfResult, MergedModel, elim, modvi, run_bounded, run_to_convergence, senum
from .errors import (
    InvalidScheduler,
    ModelError,
    ModelSyntaxError,
    NonConvergence,
    NumericalError,
    RbcheckError,
    ResourceLimitExceeded,
    UnsupportedQuery,
)
from .mdp import Distribution, Mdp, RewardStructure, SimpleScheduler, Transition, restrict, validate
from .modelio import ModelBundle, load_model, parse_model, serialize_model
from .randmodel import generate_random
from .unfold import oracle_bounded_prob, unfold

__all__ = [
    "ALGORITHMS",
    "CdfResult",
    "Distribution",
    "InvalidScheduler",
    "Mdp",
    "MergedModel",
    "ModelBundle",
    "ModelError",
    "ModelSyntaxError",
    "NonConvergence",
    "NumericalError",
    "RbcheckError",
    "ResourceLimitExceeded",
    "RewardStructure",
    "SimpleScheduler",
    "Transition",
    "UnsupportedQuery",
    "elim",
    "generate_random",
    "load_model",
    "modvi",
    "oracle_bounded_prob",
    "parse_model",
    "restrict",
    "run_bounded",
    "run_to_convergence",
    "senum",
    "serialize_model",
    "unfold",
    "validate",
]

__version__ = "0.1.0"
