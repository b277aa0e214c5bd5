"""Boolean-model networks, empirical measures and their large-deviation rates."""

from .geometry import Ball, Domain, ball_intersects, ball_volume, minkowski_diff_volume
from .measures import (BinnedMeasure, BinnedPairMeasure, Partition, coarsen,
                       empirical_connectivity_measure, empirical_mark_measure, reference_measure)
from .model import (ConstantKernel, CorollaryKernel, FunctionKernel, PointMass, PowerLaw,
                    ScalingRegime, TableKernel, UniformLaw, connection_probability,
                    edge_probability_at_lambda, kernel_limit)
from .network import BooleanNetwork, build_hard, build_soft
from .rates import (conditional_rate, infimize_rate, joint_rate, legendre_conditional_rate,
                    mark_rate, relative_entropy)
from .sampler import MarkedConfiguration, sample_marked_ppp

__version__ = "0.1.0"

__all__ = [
    "Ball", "Domain", "ball_intersects", "ball_volume", "minkowski_diff_volume",
    "BinnedMeasure", "BinnedPairMeasure", "Partition", "coarsen",
    "empirical_connectivity_measure", "empirical_mark_measure", "reference_measure",
    "ConstantKernel", "CorollaryKernel", "FunctionKernel", "PointMass", "PowerLaw",
    "ScalingRegime", "TableKernel", "UniformLaw", "connection_probability",
    "edge_probability_at_lambda", "kernel_limit",
    "BooleanNetwork", "build_hard", "build_soft",
    "conditional_rate", "infimize_rate", "joint_rate", "legendre_conditional_rate",
    "mark_rate", "relative_entropy",
    "MarkedConfiguration", "sample_marked_ppp",
]
