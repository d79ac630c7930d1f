"""Surface-code memory simulator for hybrid-erasure transmon architectures.

Subpackages cover the rotated-surface-code geometry (:mod:`erasim.lattice`),
erasure-qubit placement strategies (:mod:`erasim.placement`), analytic
code-capacity models (:mod:`erasim.capacity`), noisy-circuit construction and
Pauli-frame sampling (:mod:`erasim.circuit`), erasure-aware matching decoding
(:mod:`erasim.decoder`), statistical post-processing (:mod:`erasim.analysis`)
and experiment orchestration (:mod:`erasim.cli`).
"""

from erasim.analysis import (
    DataPoint,
    FitResult,
    chip_yield,
    estimate_threshold,
    fit_deff,
    placement_correlation,
    scaling_projection,
    transmon_cost,
    wilson_interval,
)
from erasim.capacity import (
    deff_lower_bound,
    importance_map,
    king_path_count,
    rep_exact_pl,
    rep_leading_pl,
    rep_oracle_pl,
    surface_union_bound_pl,
)
from erasim.circuit import (
    NoiseModel,
    NoisyCircuit,
    ShotBatch,
    build_decoding_graphs,
    build_memory_circuit,
    sample_shots,
)
from erasim.decoder import BatchDecoder, apply_erasure_info, decode, decode_batch
from erasim.lattice import SurfaceCodeLayout, build_layout, traversing_support
from erasim.placement import (
    ArchitectureSpec,
    LinePattern,
    erasure_budget,
    max_full_lines,
    min_erasures_per_path,
    optimized_placement,
    pattern_placement,
    random_placement,
)

__all__ = [
    "DataPoint",
    "FitResult",
    "chip_yield",
    "estimate_threshold",
    "fit_deff",
    "placement_correlation",
    "scaling_projection",
    "transmon_cost",
    "wilson_interval",
    "deff_lower_bound",
    "importance_map",
    "king_path_count",
    "rep_exact_pl",
    "rep_leading_pl",
    "rep_oracle_pl",
    "surface_union_bound_pl",
    "NoiseModel",
    "NoisyCircuit",
    "ShotBatch",
    "build_decoding_graphs",
    "build_memory_circuit",
    "sample_shots",
    "BatchDecoder",
    "apply_erasure_info",
    "decode",
    "decode_batch",
    "SurfaceCodeLayout",
    "build_layout",
    "traversing_support",
    "ArchitectureSpec",
    "LinePattern",
    "erasure_budget",
    "max_full_lines",
    "min_erasures_per_path",
    "optimized_placement",
    "pattern_placement",
    "random_placement",
]
