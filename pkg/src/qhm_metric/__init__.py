"""
qhm-metric - numerical quantum Heisenberg manifolds

A Python package for computing with the smooth algebra of a quantum Heisenberg
manifold at finite truncation: star product, involution, trace, group action,
norms, derivations and the Lip seminorm, together with lower bounds on the
quantum metric between states.
"""

__version__ = "0.1.0"
__author__ = "qhm-metric contributors"

from .algebra import GroupPoint, group_action, involution, star, trace, zero_mode
from .derivations import lip_seminorm
from .element import Element, ModelParams, Truncation, fold_evaluate, sample
from .metric import DistanceResult, distance_lower_bound
from .norms import NormReport, sup_sum_norm
from .representation import FiberMatrix, cstar_norm_estimate, fiber_matrix
from .states import State, state_eval, trace_state
from .windowed import random_element

__all__ = [
    "Element",
    "ModelParams",
    "Truncation",
    "fold_evaluate",
    "sample",
    "random_element",
    "GroupPoint",
    "star",
    "involution",
    "trace",
    "group_action",
    "zero_mode",
    "NormReport",
    "sup_sum_norm",
    "lip_seminorm",
    "FiberMatrix",
    "fiber_matrix",
    "cstar_norm_estimate",
    "State",
    "state_eval",
    "trace_state",
    "DistanceResult",
    "distance_lower_bound",
]
