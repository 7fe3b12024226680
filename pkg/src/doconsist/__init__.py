"""doconsist: interventional self-supervised consistency for multi-structure causal data.

Subpackages/modules:
  graph        adjacency types, time-order invariants, intervention views
  scm          linear-SCM decode/encode and general interventions
  data         synthetic indefinite-dataset generation and JSON round trips
  nets         pairwise sigmoid MLP heads
  learner      the SSL training core with hand-rolled exact gradients
  metrics      AUROC / F1 / inconsistency / C-Dis and report aggregation
  abstraction  causal-consistency-condition verification on linear SCMs
  llmloop      iterative intervention-feedback loop with pluggable oracles
  sweep        restartable experiment grids
  kernels      compiled hot kernels with a pure numpy fallback
"""

from .graph import (
    AdjacencyEstimate,
    CausalStructure,
    InterventionView,
    binarize,
    enumerate_interventions,
    hamming_distance,
    sample_intervention_subset,
    validate_structure,
)
from .scm import decode, encode, intervene_representation, intervene_structure

__version__ = "0.1.0"

__all__ = [
    "AdjacencyEstimate",
    "CausalStructure",
    "InterventionView",
    "binarize",
    "decode",
    "encode",
    "enumerate_interventions",
    "hamming_distance",
    "intervene_representation",
    "intervene_structure",
    "sample_intervention_subset",
    "validate_structure",
    "__version__",
]
