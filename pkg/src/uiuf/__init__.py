"""Union-find decoders (UF, IRUF, UIUF) for toric and surface codes."""
from .analysis import (
    BudgetExceeded,
    EnumerationResult,
    ScalingFit,
    ThresholdFit,
    ThresholdFitError,
    WeightEnumerator,
    benchmark_decode,
    enumerate_mixed,
    enumerate_undecodable,
    fit_threshold,
    logical_error_rate,
    weight_enumerator,
)
from .clusters import ClusterSet, MalformedSyndromeError, synd_val
from .codes import (
    CheckBasis,
    CodeError,
    CodeFamily,
    CodeSpec,
    DecodingGraph,
    PauliOp,
    TopologicalCode,
    build_code,
    build_decoding_graph,
    compute_syndrome,
    is_logical_failure,
    logical_flips,
)
from .decoders import Algorithm, Correction, UnionFindDecoder, decode_spacetime, iruf, uiuf, union_find
from .harness import InvalidPlan, MonteCarloStats, RunPlan, StopRule, run, sweep
from .noise import NoiseParams, sample, syndrome_differences
from .peeling import PeelingError, peel, spanning_forest

__version__ = "0.1.0"
