"""Fixed-point structure of quantum channels, Koashi-Imoto decompositions,
classification of bipartite states and catalysis checks."""

__version__ = "0.1.0"

from .algebra import DECOMPOSITION_HOOKS, commutant, generate_star_algebra, wedderburn_decompose
from .catalysis import (
    CatalysisInstance,
    check_catalytic,
    contagion_extend,
    ensemble_reduction,
    induced_catalyst_channel,
    mi_catalysis_test,
    mutual_information,
    von_neumann_entropy,
)
from .channels import QuantumChannel, choi_distance, make_channel, pinching
from .fixed_points import classify_channel_output, structure_decompose
from .koashi_imoto import (
    classify_bipartite,
    fixing_channel_witness,
    ki_decompose,
    steered_family,
)
from .linalg import partial_trace, tensor_product, trace_distance

__all__ = [
    "DECOMPOSITION_HOOKS",
    "CatalysisInstance",
    "QuantumChannel",
    "check_catalytic",
    "choi_distance",
    "classify_bipartite",
    "classify_channel_output",
    "commutant",
    "contagion_extend",
    "ensemble_reduction",
    "fixing_channel_witness",
    "generate_star_algebra",
    "induced_catalyst_channel",
    "ki_decompose",
    "make_channel",
    "mi_catalysis_test",
    "mutual_information",
    "partial_trace",
    "pinching",
    "steered_family",
    "structure_decompose",
    "tensor_product",
    "trace_distance",
    "von_neumann_entropy",
    "wedderburn_decompose",
]
