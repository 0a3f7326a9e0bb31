"""Polymorphisms over finite measure spaces.

Atomic measures on the multiplicative reals, bistochastic kernels,
polymorphisms with their composition and involution, the Mellin-Markov
operator transform, numerical Mellin inversion and discretization of
piecewise-linear interval maps.
"""
from .errors import CompositionError, DomainError, ParseError, PolymorphError, ValidationError
from .measure import (AtomicMeasure, StripPoint, convolve, distance, mellin_eval, psd_gram_check,
                      star as measure_star)
from .space import DiscreteSpace, Partition, quotient, uniform_space
from .markov import BistochasticKernel, compose_kernels, markov_operator, partition_morphisms
from .poly import (Polymorphism, coarsen, compose, from_markov, identity, pol_distance, spread,
                   star, validate)
from .mellin import OperatorMatrix, holomorphy_probe, transform_matrix
from .invert import MellinSamples, recover_measure, recover_polymorphism
from .pwl import (DyadicPartition, PiecewiseLinearMap, convergence_study, discretize,
                  gms_dense_construct, oscillating_family)

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure", "StripPoint", "convolve", "distance", "mellin_eval", "psd_gram_check",
    "measure_star", "DiscreteSpace", "Partition", "quotient", "uniform_space",
    "BistochasticKernel", "compose_kernels", "markov_operator", "partition_morphisms",
    "Polymorphism", "coarsen", "compose", "from_markov", "identity", "pol_distance", "spread",
    "star", "validate", "OperatorMatrix", "holomorphy_probe", "transform_matrix",
    "MellinSamples", "recover_measure", "recover_polymorphism", "DyadicPartition",
    "PiecewiseLinearMap", "convergence_study", "discretize", "gms_dense_construct",
    "oscillating_family", "CompositionError", "DomainError", "ParseError", "PolymorphError",
    "ValidationError",
]
