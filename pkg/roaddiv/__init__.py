"""
roaddiv - Road Diversity Measures

Geometric diversity measures for test suites of lane-keeping roads:
pairwise road distances with their aggregations, direct suite measures,
behavioral diversity of driving traces and the studies relating them.
"""

from .aggregation import (
    aggregate,
    compute_catalogue,
    distance_entropy,
    incremental_sum,
    minimum_spanning_tree,
    weitzman,
)
from .behavior import (
    BehaviorFeatureVector,
    ObservationSeries,
    SimulationTrace,
    behavior_bounds,
    behavior_features,
    behavioral_distance,
    behavioral_diversity,
    derive_observations,
    validate_trace,
)
from .config import RoadDivConfigError, RunConfig, load_run_config, save_run_config
from .corpus import load_roads, load_traces, write_corpus
from .correlation import (
    correlate,
    correlation_matrix,
    rq2_pairwise_dm_correlation,
    rq3_length_effect,
    rq4_dm_bd_correlation,
)
from .direct_measures import convex_hull_diversity, incremental_convex_hull, test_set_diameter
from .distances import (
    DistanceMatrix,
    distance_matrix,
    extend_distance_matrix,
    pairwise_distance,
)
from .exceptions import (
    BadNormalization,
    CompressorFailure,
    DegenerateInput,
    DegenerateRoad,
    EmptyCorpus,
    EmptySegments,
    MixedAgents,
    NonFiniteGeometry,
    PairwiseDistanceError,
    ParseError,
    PoolTooSmall,
    ProjectionFailure,
    PropertyViolation,
    ResultsIOError,
    RoadDiversityException,
    RoadMismatch,
    SchemaMismatch,
    ShapeMismatch,
)
from .geometry import (
    RoadGeometry,
    curvature_profile,
    interpolate_road,
    procrustes_align,
    resample_uniform,
    turning_angles,
)
from .models import (
    AggregationId,
    ControlPointRoad,
    CorrelationResult,
    DirectMeasureId,
    DiversityMeasureId,
    DiversityValue,
    ExperimentRecord,
    PairwiseDistanceId,
    SamplingPlan,
    TestSuite,
    all_measures,
)
from .results import read_records, write_results
from .study import (
    StudyContext,
    additivity_experiment,
    duplicate_experiment,
    efficiency_experiment,
    growth_experiment,
    sample_suites,
    summarize_records,
)
from .synthetic import SyntheticCorpusSpec, generate_synthetic_corpus

__version__ = "0.1.0"
VERSION = __version__

__all__ = [
    # Geometry
    "RoadGeometry",
    "interpolate_road",
    "resample_uniform",
    "turning_angles",
    "curvature_profile",
    "procrustes_align",
    # Distances and aggregation
    "DistanceMatrix",
    "pairwise_distance",
    "distance_matrix",
    "extend_distance_matrix",
    "aggregate",
    "weitzman",
    "distance_entropy",
    "minimum_spanning_tree",
    "incremental_sum",
    "compute_catalogue",
    # Direct measures
    "test_set_diameter",
    "convex_hull_diversity",
    "incremental_convex_hull",
    # Behavior
    "SimulationTrace",
    "ObservationSeries",
    "BehaviorFeatureVector",
    "validate_trace",
    "derive_observations",
    "behavior_features",
    "behavior_bounds",
    "behavioral_distance",
    "behavioral_diversity",
    # Studies
    "StudyContext",
    "sample_suites",
    "growth_experiment",
    "duplicate_experiment",
    "efficiency_experiment",
    "additivity_experiment",
    "summarize_records",
    "correlate",
    "correlation_matrix",
    "rq2_pairwise_dm_correlation",
    "rq3_length_effect",
    "rq4_dm_bd_correlation",
    # Corpus and results
    "load_roads",
    "load_traces",
    "write_corpus",
    "write_results",
    "read_records",
    "SyntheticCorpusSpec",
    "generate_synthetic_corpus",
    # Config
    "RunConfig",
    "RoadDivConfigError",
    "load_run_config",
    "save_run_config",
    # Models
    "ControlPointRoad",
    "PairwiseDistanceId",
    "AggregationId",
    "DirectMeasureId",
    "DiversityMeasureId",
    "DiversityValue",
    "TestSuite",
    "SamplingPlan",
    "CorrelationResult",
    "ExperimentRecord",
    "all_measures",
    # Exceptions
    "RoadDiversityException",
    "DegenerateRoad",
    "NonFiniteGeometry",
    "ShapeMismatch",
    "EmptySegments",
    "BadNormalization",
    "CompressorFailure",
    "RoadMismatch",
    "ProjectionFailure",
    "MixedAgents",
    "PairwiseDistanceError",
    "PoolTooSmall",
    "DegenerateInput",
    "PropertyViolation",
    "ParseError",
    "SchemaMismatch",
    "EmptyCorpus",
    "ResultsIOError",
    # Metadata
    "VERSION",
]
