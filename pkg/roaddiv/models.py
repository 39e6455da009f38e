"""
Pydantic models for roaddiv data structures.

Everything that crosses a file boundary (road documents, suites, diversity
values, experiment records, correlation results, manifests) is a pydantic
model here. Numeric working types built around numpy arrays (road
geometries, distance matrices, traces) live next to the code that
computes them.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PairwiseDistanceId(str, Enum):
    """The nine pairwise road distance functions."""

    DISCRETE_FRECHET = "discrete_frechet"
    PCM = "pcm"
    DTW = "dtw"
    NORMALIZED_RELATIVE_ANGLE = "normalized_relative_angle"
    COMPLEXITY_VECTORS = "complexity_vectors"
    ITERATIVE_LEVENSHTEIN = "iterative_levenshtein"
    JACCARD = "jaccard"
    AREA_BETWEEN_CURVES = "area_between_curves"
    MANHATTAN_FEATURES = "manhattan_features"


class AggregationId(str, Enum):
    """The five ways of reducing a distance matrix to one value."""

    WEITZMAN = "weitzman"
    DISTANCE_ENTROPY = "distance_entropy"
    SUM = "sum"
    AVERAGE = "average"
    AVERAGE_OF_MAXIMA = "average_of_maxima"


class DirectMeasureId(str, Enum):
    """Diversity measures computed without pairwise distances."""

    TEST_SET_DIAMETER = "test_set_diameter"
    CONVEX_HULL = "convex_hull"


class DiversityMeasureId(BaseModel):
    """
    One of the 47 diversity measures: either a (distance, aggregation) pair
    or a direct measure. ``code`` is the stable string form used in tables.
    """

    model_config = ConfigDict(frozen=True)

    distance: Optional[PairwiseDistanceId] = None
    aggregation: Optional[AggregationId] = None
    direct: Optional[DirectMeasureId] = None

    @model_validator(mode="after")
    def validate_shape(self) -> "DiversityMeasureId":
        pair = self.distance is not None and self.aggregation is not None
        lone = self.direct is not None and self.distance is None and self.aggregation is None
        if pair == lone:
            raise ValueError(
                "measure must be either (distance, aggregation) or a direct measure"
            )
        return self

    @property
    def code(self) -> str:
        if self.direct is not None:
            return self.direct.value
        return f"{self.distance.value}+{self.aggregation.value}"

    @property
    def is_direct(self) -> bool:
        return self.direct is not None

    @classmethod
    def from_code(cls, code: str) -> "DiversityMeasureId":
        if "+" in code:
            distance, aggregation = code.split("+", 1)
            return cls(
                distance=PairwiseDistanceId(distance),
                aggregation=AggregationId(aggregation),
            )
        return cls(direct=DirectMeasureId(code))

    def __str__(self) -> str:
        return self.code


def all_measures() -> List[DiversityMeasureId]:
    """The full catalogue in its fixed order: 9 x 5 aggregated, then 2 direct."""
    measures = [
        DiversityMeasureId(distance=distance, aggregation=aggregation)
        for distance in PairwiseDistanceId
        for aggregation in AggregationId
    ]
    measures.extend(DiversityMeasureId(direct=direct) for direct in DirectMeasureId)
    return measures


class NormalizationBounds(BaseModel):
    """Per-dimension min/max over a corpus, used for min-max normalization."""

    model_config = ConfigDict(frozen=True)

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    labels: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def validate_dimensions(self) -> "NormalizationBounds":
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper bounds must have the same dimension")
        if self.labels and len(self.labels) != len(self.lower):
            raise ValueError("labels must match the bound dimension")
        for lo, hi in zip(self.lower, self.upper):
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise ValueError(f"invalid bound [{lo}, {hi}]")
        return self

    @property
    def dimension(self) -> int:
        return len(self.lower)


class ControlPointRoad(BaseModel):
    """
    A road as shipped in a corpus document.

    ``interpolated`` marks roads given as already-interpolated road points;
    those skip spline interpolation and are only resampled.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str = Field(..., min_length=1, description="Opaque road identifier")
    control_points: List[Tuple[float, float]] = Field(
        ..., description="Ordered (x, y) points in meters"
    )
    lane_width: float = Field(4.0, gt=0, description="Lane width in meters (carried, unused)")
    interpolated: bool = Field(False, description="Points are pre-interpolated road points")

    @field_validator("control_points")
    @classmethod
    def validate_points(cls, points: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if len(points) < 2:
            raise ValueError("a road needs at least 2 control points")
        for index, (x, y) in enumerate(points):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"control point {index} is not finite")
        for index in range(1, len(points)):
            (x0, y0), (x1, y1) = points[index - 1], points[index]
            if math.hypot(x1 - x0, y1 - y0) <= 1e-9:
                raise ValueError(f"control points {index - 1} and {index} coincide")
        return points


class DiversityValue(BaseModel):
    """The value one diversity measure assigns to one suite."""

    measure: DiversityMeasureId
    value: Optional[float] = Field(None, description="None when the measure failed")
    suite_id: str = ""
    timed_out: bool = False
    aligned: bool = True
    codec: Optional[str] = Field(None, description="Compressor for test set diameter")
    error: Optional[str] = None

    @model_validator(mode="after")
    def validate_value(self) -> "DiversityValue":
        if self.timed_out and self.measure.aggregation is not AggregationId.WEITZMAN:
            raise ValueError("only Weitzman values can time out")
        if self.value is not None and not self.timed_out:
            if not math.isfinite(self.value) or self.value < 0:
                raise ValueError(f"diversity value must be finite and >= 0, got {self.value}")
        return self

    @property
    def ok(self) -> bool:
        return self.error is None and self.value is not None


class BehavioralDiversity(BaseModel):
    """Behavioral diversity of one suite under one agent."""

    suite_id: str
    agent_id: str
    value: float = Field(..., ge=0)
    method: Literal["entropy", "sum"] = "entropy"


class TestSuite(BaseModel):
    """A fixed-size set of roads evaluated together."""

    __test__ = False

    model_config = ConfigDict(frozen=True)

    suite_id: str
    road_ids: List[str]
    label: str = Field("all", description="Sampling plan label (all, shortest, longest)")

    @property
    def size(self) -> int:
        return len(self.road_ids)


class SamplingPlan(BaseModel):
    """How many suites of which sizes to draw, and from which part of the pool."""

    model_config = ConfigDict(extra="forbid")

    sizes: List[int] = Field(default_factory=lambda: [10, 20, 50, 100])
    suites_per_size: int = Field(100, ge=1)
    seed: int = 0
    length_quantile: Optional[Literal["shortest", "longest"]] = None
    quantile: float = Field(0.25, gt=0, le=1)

    @field_validator("sizes")
    @classmethod
    def validate_sizes(cls, sizes: List[int]) -> List[int]:
        if not sizes or any(size < 1 for size in sizes):
            raise ValueError("sizes must be a non-empty list of positive counts")
        return sizes

    @property
    def label(self) -> str:
        return self.length_quantile or "all"


class CorrelationMethod(str, Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"


class CorrelationStrength(str, Enum):
    SLIGHT = "slight"
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"
    VERY_HIGH = "very_high"


STRENGTH_THRESHOLDS: Tuple[Tuple[float, CorrelationStrength], ...] = (
    (0.2, CorrelationStrength.SLIGHT),
    (0.4, CorrelationStrength.LOW),
    (0.7, CorrelationStrength.MODERATE),
    (0.9, CorrelationStrength.HIGH),
)


def classify_strength(coefficient: float) -> CorrelationStrength:
    """Map |r| to a strength class; each band is closed below, open above."""
    magnitude = abs(coefficient)
    for upper, strength in STRENGTH_THRESHOLDS:
        if magnitude < upper:
            return strength
    return CorrelationStrength.VERY_HIGH


class CorrelationResult(BaseModel):
    """Outcome of one correlation test between two variables."""

    x_label: str
    y_label: str
    method: CorrelationMethod
    coefficient: float = Field(..., ge=-1.0, le=1.0)
    p_value: float = Field(..., ge=0.0, le=1.0)
    strength: CorrelationStrength
    n: int = Field(..., ge=0)
    degenerate: bool = Field(False, description="Constant or too-short input; coefficient is 0")
    group: str = "all"
    agent_id: Optional[str] = None
    note: Optional[str] = None

    @model_validator(mode="after")
    def validate_strength(self) -> "CorrelationResult":
        if classify_strength(self.coefficient) is not self.strength:
            raise ValueError(
                f"strength {self.strength.value} does not match coefficient {self.coefficient}"
            )
        return self


class Experiment(str, Enum):
    GROWTH = "growth"
    DUPLICATES = "duplicates"
    EFFICIENCY = "efficiency"
    ADDITIVITY = "additivity"
    RQ2 = "rq2"
    RQ3 = "rq3"
    RQ4A = "rq4a"
    RQ4B = "rq4b"
    RQ4C = "rq4c"
    RQ4D = "rq4d"


class ExperimentRecord(BaseModel):
    """One measurement produced by an experiment harness."""

    experiment: Experiment
    suite_id: str
    measure: str = Field(..., description="DiversityMeasureId code")
    before: Optional[float] = None
    after: Optional[float] = None
    delta: Optional[float] = None
    wall_time: float = Field(0.0, ge=0)
    suite_size: int = Field(0, ge=0)
    alignment: Literal["aligned", "raw"] = "aligned"
    parameters: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_delta(self) -> "ExperimentRecord":
        if self.before is not None and self.after is not None:
            expected = self.after - self.before
            if self.delta is None:
                object.__setattr__(self, "delta", expected)
            elif abs(self.delta - expected) > 1e-12:
                raise ValueError("delta must equal after - before")
        return self


class TraceFlag(str, Enum):
    WRONG_DIRECTION = "wrong_direction"
    FREQUENCY_OUT_OF_RANGE = "frequency_out_of_range"
    INCOMPLETE_DATA = "incomplete_data"


class TraceValidationReport(BaseModel):
    """Data-quality flags for one trace; an empty flag list means valid."""

    road_id: str
    agent_id: str
    flags: List[TraceFlag] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.flags


class ValidationIssue(BaseModel):
    """Why one corpus item was excluded."""

    item_id: str
    reason: str
    detail: Optional[str] = None


class CorpusValidationReport(BaseModel):
    """Exhaustive QA report for a loaded road corpus."""

    path: str
    loaded: List[str] = Field(default_factory=list)
    excluded: List[ValidationIssue] = Field(default_factory=list)
    max_curvature: Dict[str, float] = Field(default_factory=dict)
    sharp_turns: List[str] = Field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.excluded


class CorpusManifest(BaseModel):
    """Describes a corpus on disk so loads can be verified."""

    roads_path: str
    traces_path: Optional[str] = None
    format_version: int = 1
    road_count: int = Field(..., ge=0)
    checksum: str
    traces_checksum: Optional[str] = None
