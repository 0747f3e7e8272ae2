"""Simulation and stability certificates for pinned networks with Markov-switched topology."""

from .certificates import (
    average_matrices,
    decay_rate,
    delta_condition,
    fast_constants,
    feasible_delta,
    theorem1_check,
    theorem2_construct,
    theorem2_rate_bound,
)
from .markov import MarkovGenerator, assemble_generator, invariant_distribution, kstep_distribution, sample_path
from .switchnet import CouplingParams, SwitchedTopology, simulate, varsigma

__version__ = "0.1.0"
