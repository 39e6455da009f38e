"""
Behavioral diversity: trace validation, observation series, the 20-value
behavior feature vector and suite-level diversity over those vectors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import LineString

from .aggregation import distance_entropy_value, sum_value
from .config import BehaviorConfig
from .distances import matrix_from_function, min_max_normalize
from .exceptions import MixedAgents, ProjectionFailure, RoadMismatch
from .geometry import RoadGeometry, feature_bounds
from .models import BehavioralDiversity, NormalizationBounds, TraceFlag, TraceValidationReport

logger = logging.getLogger(__name__)

OBSERVATIONS: Tuple[str, ...] = (
    "velocity",
    "acceleration",
    "braking",
    "steering",
    "lateral_position",
)
STATISTICS: Tuple[str, ...] = ("mean", "min", "max", "std")
BEHAVIOR_FEATURE_NAMES: Tuple[str, ...] = tuple(
    f"{observation}_{statistic}" for observation in OBSERVATIONS for statistic in STATISTICS
)

TRACE_FIELDS: Tuple[str, ...] = ("t", "x", "y", "velocity", "steering", "throttle", "brake")


def _array(values) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    """Time-ordered observation records of one agent driving one road."""

    road_id: str
    agent_id: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    velocity: np.ndarray
    steering: np.ndarray
    throttle: np.ndarray
    brake: np.ndarray

    def __post_init__(self) -> None:
        lengths = set()
        for name in TRACE_FIELDS:
            array = _array(getattr(self, name))
            object.__setattr__(self, name, array)
            lengths.add(len(array))
        if len(lengths) != 1:
            raise ValueError(f"trace {self.road_id}/{self.agent_id}: fields differ in length")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


@dataclass(frozen=True, eq=False)
class ObservationSeries:
    velocity: np.ndarray
    acceleration: np.ndarray
    braking: np.ndarray
    steering: np.ndarray
    lateral_position: np.ndarray

    def __post_init__(self) -> None:
        lengths = set()
        for name in OBSERVATIONS:
            array = _array(getattr(self, name))
            object.__setattr__(self, name, array)
            lengths.add(len(array))
        if len(lengths) != 1:
            raise ValueError("observation series must have equal lengths")

    def __len__(self) -> int:
        return len(self.velocity)


@dataclass(frozen=True, eq=False)
class BehaviorFeatureVector:
    """(mean, min, max, std) for each observation, in ``BEHAVIOR_FEATURE_NAMES`` order."""

    values: np.ndarray
    road_id: str = ""
    agent_id: str = ""
    labels: Tuple[str, ...] = field(default=BEHAVIOR_FEATURE_NAMES)

    def __post_init__(self) -> None:
        values = _array(self.values)
        if values.shape != (len(BEHAVIOR_FEATURE_NAMES),):
            raise ValueError(f"expected 20 behavior features, got {values.size}")
        object.__setattr__(self, "values", values)

    def __iter__(self):
        return iter(self.values.tolist())

    def __len__(self) -> int:
        return len(self.values)

    def statistic(self, observation: str, statistic: str) -> float:
        return float(self.values[BEHAVIOR_FEATURE_NAMES.index(f"{observation}_{statistic}")])


def _project(road: RoadGeometry, positions: np.ndarray):
    line = LineString(road.points)
    points = shapely.points(positions)
    s = shapely.line_locate_point(line, points)
    distance = shapely.distance(line, points)
    return line, np.asarray(s, dtype=float), np.asarray(distance, dtype=float)


def _check_road(trace: SimulationTrace, road: RoadGeometry) -> None:
    if trace.road_id != road.id:
        raise RoadMismatch(
            f"trace for road {trace.road_id} checked against road {road.id}", trace.road_id, road.id
        )


def validate_trace(
    trace: SimulationTrace, road: RoadGeometry, config: Optional[BehaviorConfig] = None
) -> TraceValidationReport:
    """
    Data-quality flags for one trace.

    WrongDirection: projected progress regresses over the first
    ``early_fraction`` of the records, or the trace ends before
    ``min_progress`` of the road without ever leaving the road.
    FrequencyOutOfRange: median sampling frequency outside
    [min_frequency, max_frequency]. IncompleteData: fewer than 2 records,
    non-finite values or non-increasing timestamps.
    """
    config = config or BehaviorConfig()
    _check_road(trace, road)
    report = TraceValidationReport(road_id=trace.road_id, agent_id=trace.agent_id)

    finite = all(np.all(np.isfinite(getattr(trace, name))) for name in TRACE_FIELDS)
    if len(trace) < 2 or not finite or np.any(np.diff(trace.t) <= 0):
        report.flags.append(TraceFlag.INCOMPLETE_DATA)
        report.details["records"] = len(trace)
        report.details["finite"] = bool(finite)
        return report

    frequency = 1.0 / float(np.median(np.diff(trace.t)))
    report.details["median_frequency"] = frequency
    if not config.min_frequency <= frequency <= config.max_frequency:
        report.flags.append(TraceFlag.FREQUENCY_OUT_OF_RANGE)

    _, s, distance = _project(road, trace.positions)
    progress = s / road.length
    early = max(2, int(math.ceil(config.early_fraction * len(trace))))
    regress = progress[early - 1] - progress[0] < 0
    excursion = bool(np.any(distance > config.off_road_distance))
    incomplete_run = progress[-1] < config.min_progress and not excursion
    report.details.update(
        final_progress=float(progress[-1]),
        max_offset=float(distance.max()),
        early_regress=bool(regress),
    )
    if regress or incomplete_run:
        report.flags.append(TraceFlag.WRONG_DIRECTION)

    if report.flags:
        logger.info(
            "Trace %s/%s flagged %s",
            trace.road_id,
            trace.agent_id,
            [flag.value for flag in report.flags],
        )
    return report


def derive_observations(
    trace: SimulationTrace, road: RoadGeometry, config: Optional[BehaviorConfig] = None
) -> ObservationSeries:
    """
    Velocity, acceleration (forward difference, last value repeated),
    braking, steering and signed lateral offset from the centerline (left of
    the road's direction positive).
    """
    config = config or BehaviorConfig()
    _check_road(trace, road)
    if len(trace) < 2:
        raise ValueError("observations need at least 2 records")

    acceleration = np.diff(trace.velocity) / np.diff(trace.t)
    acceleration = np.append(acceleration, acceleration[-1])

    positions = trace.positions
    line, s, distance = _project(road, positions)
    too_far = np.flatnonzero(distance > config.max_projection_distance)
    if too_far.size:
        index = int(too_far[0])
        raise ProjectionFailure(
            f"trace {trace.road_id}/{trace.agent_id}: record {index} is "
            f"{distance[index]:.1f} m from the road",
            index,
            float(distance[index]),
        )
    nearest = shapely.get_coordinates(shapely.line_interpolate_point(line, s))
    segment = np.clip(
        np.searchsorted(road.cum_arclength, s, side="right") - 1, 0, road.n_points - 2
    )
    tangent = road.points[segment + 1] - road.points[segment]
    offset = positions - nearest
    side = np.sign(tangent[:, 0] * offset[:, 1] - tangent[:, 1] * offset[:, 0])

    return ObservationSeries(
        velocity=trace.velocity,
        acceleration=acceleration,
        braking=trace.brake,
        steering=trace.steering,
        lateral_position=side * distance,
    )


def _summary(series: np.ndarray) -> Tuple[float, float, float, float]:
    low, high = float(series.min()), float(series.max())
    if high == low:
        return low, low, high, 0.0
    mean = min(max(float(series.mean()), low), high)
    return mean, low, high, float(series.std())


def behavior_features(
    obs: ObservationSeries, road_id: str = "", agent_id: str = ""
) -> BehaviorFeatureVector:
    if len(obs) == 0:
        raise ValueError("behavior features need a non-empty series")
    values: List[float] = []
    for name in OBSERVATIONS:
        values.extend(_summary(getattr(obs, name)))
    return BehaviorFeatureVector(np.asarray(values), road_id=road_id, agent_id=agent_id)


def _single_agent(features: Sequence[BehaviorFeatureVector]) -> str:
    agents = sorted({f.agent_id for f in features})
    if len(agents) > 1:
        raise MixedAgents(f"behavior features mix agents {agents}", agents)
    return agents[0] if agents else ""


def behavior_bounds(features: Sequence[BehaviorFeatureVector]) -> NormalizationBounds:
    """Normalization bounds over one agent's feature vectors."""
    _single_agent(features)
    return feature_bounds((f.values for f in features), labels=BEHAVIOR_FEATURE_NAMES)


def behavioral_distance(
    f1: BehaviorFeatureVector,
    f2: BehaviorFeatureVector,
    norms: NormalizationBounds,
    strict: bool = False,
) -> float:
    """Euclidean distance over min-max normalized coordinates, in [0, sqrt(20)]."""
    delta = min_max_normalize(f1.values, norms, strict) - min_max_normalize(f2.values, norms, strict)
    return float(np.sqrt(np.sum(delta * delta)))


def behavioral_diversity(
    features: Sequence[BehaviorFeatureVector],
    norms: NormalizationBounds,
    suite_id: str = "",
    method: str = "entropy",
    strict: bool = False,
) -> BehavioralDiversity:
    """Distance entropy (or, with ``method="sum"``, the distance sum) of one agent's vectors."""
    if len(features) < 2:
        raise ValueError("behavioral diversity needs at least 2 feature vectors")
    agent_id = _single_agent(features)
    matrix = matrix_from_function(
        list(features),
        [f.road_id for f in features],
        lambda a, b: behavioral_distance(a, b, norms, strict),
    )
    if method == "entropy":
        value = distance_entropy_value(matrix.values)
    elif method == "sum":
        value = sum_value(matrix.values)
    else:
        raise ValueError(f"unknown behavioral diversity method {method!r}")
    return BehavioralDiversity(suite_id=suite_id, agent_id=agent_id, value=value, method=method)
