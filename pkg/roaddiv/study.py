"""
Study protocols: suite sampling, the pool-level measure cache, the
property harnesses (growth, duplicates, efficiency, additivity) and the
diversity tables the correlation analyses consume.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .aggregation import (
    aggregate,
    compute_catalogue,
    incremental_sum,
)
from .behavior import (
    BehaviorFeatureVector,
    SimulationTrace,
    behavior_bounds,
    behavior_features,
    behavioral_diversity,
    derive_observations,
    validate_trace,
)
from .config import RunConfig
from .direct_measures import (
    convex_hull_diversity,
    direct_measure,
    incremental_convex_hull,
    suite_hull_vertices,
)
from .distances import (
    DistanceMatrix,
    distance_matrix,
    extend_distance_matrix,
    prepare_suite,
    suite_feature_bounds,
)
from .exceptions import PoolTooSmall, PropertyViolation, RoadDiversityException
from .geometry import RoadGeometry, interpolate_road
from .models import (
    AggregationId,
    ControlPointRoad,
    DirectMeasureId,
    DiversityMeasureId,
    DiversityValue,
    Experiment,
    ExperimentRecord,
    NormalizationBounds,
    PairwiseDistanceId,
    SamplingPlan,
    TestSuite,
    all_measures,
)
from .seeding import derive_rng

logger = logging.getLogger(__name__)

PROPERTY_TOLERANCE = 1e-9
MEASURE_ERRORS = (RoadDiversityException, ValueError, ArithmeticError)


def sample_suites(
    pool: Sequence[str],
    plan: SamplingPlan,
    lengths: Optional[Mapping[str, float]] = None,
    skip_small: bool = False,
) -> List[TestSuite]:
    """
    Draw ``plan.suites_per_size`` suites of every size, uniformly without
    replacement within a suite. With ``length_quantile`` the pool is first
    cut to its shortest or longest ``quantile`` by road length.
    """
    ids = sorted(set(pool))
    if plan.length_quantile is not None:
        if lengths is None:
            raise ValueError("length-quantile sampling needs road lengths")
        values = np.asarray([lengths[road_id] for road_id in ids], dtype=float)
        if plan.length_quantile == "shortest":
            threshold = float(np.quantile(values, plan.quantile))
            ids = [road_id for road_id, value in zip(ids, values) if value <= threshold]
        else:
            threshold = float(np.quantile(values, 1.0 - plan.quantile))
            ids = [road_id for road_id, value in zip(ids, values) if value >= threshold]
        logger.info(
            "Restricted pool to %d %s roads (threshold %.2f m)",
            len(ids),
            plan.length_quantile,
            threshold,
        )

    suites: List[TestSuite] = []
    for size in plan.sizes:
        if size > len(ids):
            message = f"pool of {len(ids)} roads cannot supply suites of {size}"
            if skip_small:
                logger.warning("%s; skipping size %d", message, size)
                continue
            raise PoolTooSmall(message, size, len(ids))
        rng = derive_rng(plan.seed, "sample", plan.label, size)
        for index in range(plan.suites_per_size):
            picks = rng.choice(len(ids), size=size, replace=False)
            suites.append(
                TestSuite(
                    suite_id=f"{plan.label}-s{size:03d}-{index:03d}",
                    road_ids=[ids[i] for i in picks],
                    label=plan.label,
                )
            )
    return suites


def _alignment_label(aligned: bool) -> str:
    return "aligned" if aligned else "raw"


def addition_count(addition: Union[int, float], size: int) -> int:
    """Ints are road counts; floats are fractions of ``size`` (at least one road)."""
    if isinstance(addition, int) and not isinstance(addition, bool):
        return addition
    return max(1, int(round(addition * size)))


class StudyContext:
    """
    A road pool with its run configuration and lazily computed pool-level
    distance matrices, one per (distance, alignment). Suite catalogues are
    served from submatrices, so no pair is evaluated twice across suites.
    """

    def __init__(self, roads: Sequence[RoadGeometry], config: Optional[RunConfig] = None):
        self.config = config or RunConfig()
        self.roads: Dict[str, RoadGeometry] = {}
        for road in roads:
            if road.id in self.roads:
                raise ValueError(f"duplicate road id {road.id!r} in pool")
            self.roads[road.id] = road
        self.ids: List[str] = list(self.roads)
        self.index = {road_id: i for i, road_id in enumerate(self.ids)}
        self._prepared: Optional[List[RoadGeometry]] = None
        self._bounds: Optional[NormalizationBounds] = None
        self._matrices: Dict[Tuple[PairwiseDistanceId, bool], DistanceMatrix] = {}

    @classmethod
    def from_roads(
        cls, roads: Sequence[ControlPointRoad], config: Optional[RunConfig] = None
    ) -> "StudyContext":
        config = config or RunConfig()
        return cls([interpolate_road(road, config.catalogue.spacing) for road in roads], config)

    @property
    def catalogue_config(self):
        return self.config.catalogue

    @property
    def prepared(self) -> List[RoadGeometry]:
        if self._prepared is None:
            self._prepared = prepare_suite(list(self.roads.values()), self.catalogue_config)
        return self._prepared

    @property
    def bounds(self) -> NormalizationBounds:
        """Manhattan feature bounds over the whole pool."""
        if self._bounds is None:
            self._bounds = suite_feature_bounds(self.prepared, self.catalogue_config)
        return self._bounds

    def lengths(self) -> Dict[str, float]:
        return {road_id: road.length for road_id, road in self.roads.items()}

    def suite_roads(self, road_ids: Iterable[str]) -> List[RoadGeometry]:
        return [self.roads[road_id] for road_id in road_ids]

    def mean_length(self, suite: TestSuite) -> float:
        return float(np.mean([self.roads[road_id].length for road_id in suite.road_ids]))

    def pool_matrix(self, distance: PairwiseDistanceId, aligned: bool) -> DistanceMatrix:
        key = (distance, aligned)
        if key not in self._matrices:
            started = time.perf_counter()
            self._matrices[key] = distance_matrix(
                self.prepared,
                distance,
                aligned,
                self.catalogue_config,
                self.bounds,
                jobs=self.config.jobs,
                prepared=True,
            )
            logger.info(
                "Pool matrix %s (%s) over %d roads in %.1fs",
                distance.value,
                _alignment_label(aligned),
                len(self.ids),
                time.perf_counter() - started,
            )
        return self._matrices[key]

    def suite_matrices(
        self, road_ids: Sequence[str], aligned: bool
    ) -> Dict[PairwiseDistanceId, DistanceMatrix]:
        indices = [self.index[road_id] for road_id in road_ids]
        matrices = {}
        for distance in PairwiseDistanceId:
            try:
                matrices[distance] = self.pool_matrix(distance, aligned).submatrix(indices)
            except MEASURE_ERRORS as exc:
                # left out so the catalogue recomputes the suite and records the failure
                logger.warning("Pool matrix %s unavailable: %s", distance.value, exc)
        return matrices

    def catalogue(
        self, road_ids: Sequence[str], aligned: bool, suite_id: str = ""
    ) -> List[DiversityValue]:
        return compute_catalogue(
            self.suite_roads(road_ids),
            self.catalogue_config,
            aligned=aligned,
            suite_id=suite_id,
            bounds=self.bounds,
            matrices=self.suite_matrices(road_ids, aligned),
        )


def _is_monotone(measure: DiversityMeasureId) -> bool:
    return measure.direct is DirectMeasureId.CONVEX_HULL or measure.aggregation in (
        AggregationId.SUM,
        AggregationId.WEITZMAN,
    )


def _is_twin_insensitive(measure: DiversityMeasureId) -> bool:
    return (
        measure.direct is DirectMeasureId.CONVEX_HULL
        or measure.aggregation is AggregationId.WEITZMAN
    )


def _tolerance(before: float) -> float:
    return PROPERTY_TOLERANCE * max(1.0, abs(before))


def _compare(
    experiment: Experiment,
    suite: TestSuite,
    aligned: bool,
    before: Sequence[DiversityValue],
    after: Sequence[DiversityValue],
    parameters: Dict,
) -> List[ExperimentRecord]:
    records = []
    for old, new in zip(before, after):
        params = dict(parameters)
        timed_out = old.timed_out or new.timed_out
        if timed_out:
            params["timed_out"] = True
        if not (old.ok and new.ok):
            params["error"] = old.error or new.error or "missing value"
            records.append(
                ExperimentRecord(
                    experiment=experiment,
                    suite_id=suite.suite_id,
                    measure=old.measure.code,
                    suite_size=suite.size,
                    alignment=_alignment_label(aligned),
                    parameters=params,
                )
            )
            continue
        delta = new.value - old.value
        if old.value > 0:
            params["relative_change"] = delta / old.value
        params["decreased"] = bool(delta < -_tolerance(old.value))
        if new.codec:
            params["codec"] = new.codec
        records.append(
            ExperimentRecord(
                experiment=experiment,
                suite_id=suite.suite_id,
                measure=old.measure.code,
                before=old.value,
                after=new.value,
                delta=delta,
                suite_size=suite.size,
                alignment=_alignment_label(aligned),
                parameters=params,
            )
        )
    return records


def _draw_extension(
    context: StudyContext, suite: TestSuite, count: int, *keys
) -> Optional[List[str]]:
    members = set(suite.road_ids)
    candidates = [road_id for road_id in sorted(context.ids) if road_id not in members]
    if count > len(candidates):
        logger.warning(
            "Suite %s: only %d roads outside the suite, cannot add %d",
            suite.suite_id,
            len(candidates),
            count,
        )
        return None
    rng = derive_rng(context.config.seed, *keys, suite.suite_id)
    return [candidates[i] for i in rng.choice(len(candidates), size=count, replace=False)]


def _check_property(
    record: ExperimentRecord, experiment: Experiment, strict: bool, violated: bool, message: str
) -> None:
    if not violated:
        return
    logger.warning("%s on suite %s: %s", record.measure, record.suite_id, message)
    if strict:
        raise PropertyViolation(
            f"{record.measure} on suite {record.suite_id}: {message}",
            record.measure,
            experiment.value,
        )


def growth_experiment(
    context: StudyContext,
    suites: Sequence[TestSuite],
    extension_fractions: Optional[Sequence[float]] = None,
) -> List[ExperimentRecord]:
    """
    Diversity before and after extending each suite by a fraction of its
    size with roads from outside the suite. Decreases are flagged on every
    record; sum, Weitzman and convex hull decreasing is a property violation.
    """
    fractions = extension_fractions or context.config.experiments.extension_fractions
    strict = context.config.experiments.strict_properties
    records: List[ExperimentRecord] = []
    for suite in suites:
        for aligned in context.config.alignment_modes():
            before = context.catalogue(suite.road_ids, aligned, suite.suite_id)
            for fraction in fractions:
                count = addition_count(float(fraction), suite.size)
                extra = _draw_extension(context, suite, count, "growth", f"{fraction:g}")
                if extra is None:
                    continue
                after = context.catalogue(suite.road_ids + extra, aligned, suite.suite_id)
                for record in _compare(
                    Experiment.GROWTH,
                    suite,
                    aligned,
                    before,
                    after,
                    {"fraction": float(fraction), "added": count},
                ):
                    measure = DiversityMeasureId.from_code(record.measure)
                    _check_property(
                        record,
                        Experiment.GROWTH,
                        strict,
                        _is_monotone(measure)
                        and not record.parameters.get("timed_out")
                        and bool(record.parameters.get("decreased")),
                        f"decreased by {record.delta} after adding {count} roads",
                    )
                    records.append(record)
    return records


def duplicate_experiment(
    context: StudyContext,
    suites: Sequence[TestSuite],
    duplicate_fractions: Optional[Sequence[float]] = None,
) -> List[ExperimentRecord]:
    """
    Diversity before and after duplicating a fraction of each suite's
    members. Weitzman and convex hull must not change.
    """
    fractions = duplicate_fractions or context.config.experiments.duplicate_fractions
    strict = context.config.experiments.strict_properties
    records: List[ExperimentRecord] = []
    for suite in suites:
        for aligned in context.config.alignment_modes():
            before = context.catalogue(suite.road_ids, aligned, suite.suite_id)
            for fraction in fractions:
                count = min(addition_count(float(fraction), suite.size), suite.size)
                rng = derive_rng(context.config.seed, "duplicates", f"{fraction:g}", suite.suite_id)
                picks = rng.choice(suite.size, size=count, replace=False)
                duplicated = suite.road_ids + [suite.road_ids[i] for i in picks]
                after = context.catalogue(duplicated, aligned, suite.suite_id)
                for record in _compare(
                    Experiment.DUPLICATES,
                    suite,
                    aligned,
                    before,
                    after,
                    {"fraction": float(fraction), "duplicated": count},
                ):
                    measure = DiversityMeasureId.from_code(record.measure)
                    changed = (
                        record.delta is not None
                        and abs(record.delta) > _tolerance(record.before or 0.0)
                    )
                    _check_property(
                        record,
                        Experiment.DUPLICATES,
                        strict,
                        _is_twin_insensitive(measure)
                        and not record.parameters.get("timed_out")
                        and changed,
                        f"changed by {record.delta} after duplicating {count} roads",
                    )
                    records.append(record)
    return records


def _timed(func, *args, **kwargs):
    started = time.perf_counter()
    result = func(*args, **kwargs)
    return result, time.perf_counter() - started


def _timed_catalogue(
    context: StudyContext, road_ids: Sequence[str], aligned: bool
) -> List[Tuple[DiversityMeasureId, Optional[DiversityValue], float, Dict]]:
    """Every measure with its own wall time: matrix build plus aggregation."""
    config = context.catalogue_config
    roads = prepare_suite(context.suite_roads(road_ids), config)
    timings = []
    for distance in PairwiseDistanceId:
        try:
            matrix, matrix_time = _timed(
                distance_matrix, roads, distance, aligned, config, context.bounds, 1, True
            )
        except MEASURE_ERRORS as exc:
            for aggregation in AggregationId:
                measure = DiversityMeasureId(distance=distance, aggregation=aggregation)
                timings.append((measure, None, 0.0, {"error": str(exc)}))
            continue
        for aggregation in AggregationId:
            measure = DiversityMeasureId(distance=distance, aggregation=aggregation)
            try:
                value, aggregation_time = _timed(aggregate, matrix, aggregation, config)
            except MEASURE_ERRORS as exc:
                timings.append((measure, None, matrix_time, {"error": str(exc)}))
                continue
            timings.append(
                (
                    measure,
                    value,
                    matrix_time + aggregation_time,
                    {"matrix_time": matrix_time, "aggregation_time": aggregation_time},
                )
            )
    originals = context.suite_roads(road_ids)
    for direct in DirectMeasureId:
        measure = DiversityMeasureId(direct=direct)
        try:
            value, elapsed = _timed(
                direct_measure,
                direct,
                originals,
                config.codec,
                config.resample_points,
                aligned and config.hull_alignment,
            )
        except MEASURE_ERRORS as exc:
            timings.append((measure, None, 0.0, {"error": str(exc)}))
            continue
        timings.append((measure, value, elapsed, {}))
    return timings


def efficiency_experiment(
    context: StudyContext, suites: Sequence[TestSuite]
) -> List[ExperimentRecord]:
    """
    Single-threaded wall time of every measure on every suite, computed from
    scratch (no pool cache). The first suite is run once untimed as warm-up.
    """
    records: List[ExperimentRecord] = []
    if not suites:
        return records
    _timed_catalogue(context, suites[0].road_ids, context.config.alignment_modes()[0])
    for suite in suites:
        for aligned in context.config.alignment_modes():
            for measure, value, elapsed, params in _timed_catalogue(
                context, suite.road_ids, aligned
            ):
                params = dict(params)
                if value is not None and value.timed_out:
                    params["timed_out"] = True
                records.append(
                    ExperimentRecord(
                        experiment=Experiment.EFFICIENCY,
                        suite_id=suite.suite_id,
                        measure=measure.code,
                        after=value.value if value is not None else None,
                        wall_time=elapsed,
                        suite_size=suite.size,
                        alignment=_alignment_label(aligned),
                        parameters=params,
                    )
                )
    return records


def _additivity_records(
    context: StudyContext,
    suite: TestSuite,
    aligned: bool,
    extra: List[str],
    addition: Union[int, float],
) -> List[ExperimentRecord]:
    config = context.catalogue_config
    base_roads = prepare_suite(context.suite_roads(suite.road_ids), config)
    added_roads = prepare_suite(context.suite_roads(extra), config)
    all_roads = base_roads + added_roads
    records = []

    def record(measure, before, after, full_time, incremental_time, params):
        params = dict(params, addition=addition, added=len(extra))
        params["full_time"] = full_time
        params["incremental_time"] = incremental_time
        if full_time > 0:
            params["ratio"] = incremental_time / full_time
        records.append(
            ExperimentRecord(
                experiment=Experiment.ADDITIVITY,
                suite_id=suite.suite_id,
                measure=measure.code,
                before=before,
                after=after,
                wall_time=full_time,
                suite_size=suite.size,
                alignment=_alignment_label(aligned),
                parameters=params,
            )
        )

    for distance in PairwiseDistanceId:
        try:
            base = distance_matrix(base_roads, distance, aligned, config, context.bounds, 1, True)
            full, full_matrix_time = _timed(
                distance_matrix, all_roads, distance, aligned, config, context.bounds, 1, True
            )
            (extended, evaluations), incremental_matrix_time = _timed(
                extend_distance_matrix,
                base,
                base_roads,
                added_roads,
                distance,
                aligned,
                config,
                context.bounds,
                1,
                True,
            )
        except MEASURE_ERRORS as exc:
            logger.warning("Additivity %s failed on %s: %s", distance.value, suite.suite_id, exc)
            continue
        for aggregation in AggregationId:
            measure = DiversityMeasureId(distance=distance, aggregation=aggregation)
            try:
                before = aggregate(base, aggregation, config)
                after, full_aggregation_time = _timed(aggregate, full, aggregation, config)
                if aggregation is AggregationId.SUM:
                    incremental, incremental_aggregation_time = _timed(
                        incremental_sum, before.value, extended, base.n
                    )
                else:
                    value, incremental_aggregation_time = _timed(
                        aggregate, extended, aggregation, config
                    )
                    incremental = value.value
            except MEASURE_ERRORS as exc:
                logger.warning("Additivity %s failed on %s: %s", measure.code, suite.suite_id, exc)
                continue
            record(
                measure,
                before.value,
                after.value,
                full_matrix_time + full_aggregation_time,
                incremental_matrix_time + incremental_aggregation_time,
                {
                    "incremental_value": incremental,
                    "evaluations_full": full.evaluations,
                    "evaluations_incremental": evaluations,
                    "timed_out": bool(after.timed_out),
                },
            )

    base_originals = context.suite_roads(suite.road_ids)
    added_originals = context.suite_roads(extra)
    align = aligned and config.hull_alignment
    hull_before = convex_hull_diversity(base_originals, align)
    hull_after, hull_full_time = _timed(convex_hull_diversity, base_originals + added_originals, align)
    vertices = suite_hull_vertices(base_originals, align)
    (hull_incremental, _), hull_incremental_time = _timed(
        incremental_convex_hull, vertices, added_originals, align
    )
    record(
        hull_before.measure,
        hull_before.value,
        hull_after.value,
        hull_full_time,
        hull_incremental_time,
        {"incremental_value": hull_incremental},
    )

    try:
        tsd_before = direct_measure(
            DirectMeasureId.TEST_SET_DIAMETER, base_originals, config.codec, config.resample_points
        )
        tsd_after, tsd_time = _timed(
            direct_measure,
            DirectMeasureId.TEST_SET_DIAMETER,
            base_originals + added_originals,
            config.codec,
            config.resample_points,
        )
    except MEASURE_ERRORS as exc:
        logger.warning("Additivity test set diameter failed on %s: %s", suite.suite_id, exc)
    else:
        # no incremental form: the whole concatenation is recompressed
        record(
            tsd_before.measure,
            tsd_before.value,
            tsd_after.value,
            tsd_time,
            tsd_time,
            {"incremental_value": tsd_after.value, "codec": config.codec},
        )
    return records


def additivity_experiment(
    context: StudyContext,
    suites: Sequence[TestSuite],
    additions: Optional[Sequence[Union[int, float]]] = None,
) -> List[ExperimentRecord]:
    """
    Recompute time after extending each suite, fully versus incrementally
    (only the new distance-matrix rows, the sum update, the hull update from
    the previous hull vertices). Records carry both times and their ratio.
    """
    additions = additions or context.config.experiments.additions
    records: List[ExperimentRecord] = []
    for suite in suites:
        for aligned in context.config.alignment_modes():
            for addition in additions:
                count = addition_count(addition, suite.size)
                extra = _draw_extension(context, suite, count, "additivity", f"{addition!r}")
                if extra is None:
                    continue
                records.extend(_additivity_records(context, suite, aligned, extra, addition))
    return records


def records_frame(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    rows = []
    for record in records:
        row = record.model_dump(mode="json", exclude={"parameters"})
        params = record.parameters
        row["variant"] = str(params.get("fraction", params.get("addition", "")))
        row["relative_change"] = params.get("relative_change")
        row["decreased"] = bool(params.get("decreased", False))
        row["ratio"] = params.get("ratio")
        rows.append(row)
    return pd.DataFrame(rows)


SUMMARY_COLUMNS = [
    "experiment",
    "measure",
    "alignment",
    "suite_size",
    "variant",
    "count",
    "delta_mean",
    "delta_min",
    "delta_max",
    "delta_std",
    "relative_mean",
    "decreases",
    "time_mean",
    "time_median",
    "time_std",
    "ratio_mean",
]


def summarize_records(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    """
    Per (experiment, measure, alignment, suite size, fraction/addition):
    delta mean/min/max/std, decrease count and wall-time mean/median/std.
    Standard deviations are population deviations.
    """
    frame = records_frame(records)
    if frame.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    keys = ["experiment", "measure", "alignment", "suite_size", "variant"]
    for column in ("delta", "relative_change", "wall_time", "ratio"):
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    grouped = frame.groupby(keys, sort=True, dropna=False)
    summary = grouped.agg(
        count=("suite_id", "size"),
        delta_mean=("delta", "mean"),
        delta_min=("delta", "min"),
        delta_max=("delta", "max"),
        delta_std=("delta", lambda s: float(np.std(s.dropna())) if s.notna().any() else np.nan),
        relative_mean=("relative_change", "mean"),
        decreases=("decreased", "sum"),
        time_mean=("wall_time", "mean"),
        time_median=("wall_time", "median"),
        time_std=("wall_time", lambda s: float(np.std(s))),
        ratio_mean=("ratio", "mean"),
    ).reset_index()
    return summary[SUMMARY_COLUMNS]


def measure_columns() -> List[str]:
    return [measure.code for measure in all_measures()]


def dm_table(
    context: StudyContext, suites: Sequence[TestSuite], aligned: Optional[bool] = None
) -> pd.DataFrame:
    """
    One row per (suite, alignment) with suite metadata and one column per
    measure code; failed measures are NaN.
    """
    modes = context.config.alignment_modes() if aligned is None else [aligned]
    rows = []
    for suite in suites:
        for mode in modes:
            row = {
                "suite_id": suite.suite_id,
                "suite_size": suite.size,
                "label": suite.label,
                "mean_length": context.mean_length(suite),
                "alignment": _alignment_label(mode),
            }
            for value in context.catalogue(suite.road_ids, mode, suite.suite_id):
                row[value.measure.code] = value.value if value.ok else math.nan
            rows.append(row)
    columns = ["suite_id", "suite_size", "label", "mean_length", "alignment"] + measure_columns()
    return pd.DataFrame(rows, columns=columns)


def trace_features(
    context: StudyContext, traces: Sequence[SimulationTrace]
) -> Dict[Tuple[str, str], BehaviorFeatureVector]:
    """Feature vectors keyed by (road_id, agent_id); invalid traces are skipped and logged."""
    behavior_config = context.config.behavior
    features = {}
    for trace in sorted(traces, key=lambda item: (item.road_id, item.agent_id)):
        road = context.roads.get(trace.road_id)
        if road is None:
            logger.warning("Trace for unknown road %s skipped", trace.road_id)
            continue
        report = validate_trace(trace, road, behavior_config)
        if not report.valid:
            logger.warning(
                "Trace %s/%s excluded: %s",
                trace.road_id,
                trace.agent_id,
                [flag.value for flag in report.flags],
            )
            continue
        try:
            observations = derive_observations(trace, road, behavior_config)
        except MEASURE_ERRORS as exc:
            logger.warning("Trace %s/%s excluded: %s", trace.road_id, trace.agent_id, exc)
            continue
        features[(trace.road_id, trace.agent_id)] = behavior_features(
            observations, trace.road_id, trace.agent_id
        )
    return features


BD_COLUMNS = ["suite_id", "agent_id", "suite_size", "label", "mean_length", "bd", "covered"]


def bd_table(
    context: StudyContext,
    suites: Sequence[TestSuite],
    features: Mapping[Tuple[str, str], BehaviorFeatureVector],
) -> pd.DataFrame:
    """
    Behavioral diversity per (suite, agent). Normalization bounds are taken
    per agent over all of that agent's feature vectors; suites with fewer
    than two covered roads are skipped.
    """
    by_agent: Dict[str, Dict[str, BehaviorFeatureVector]] = {}
    for (road_id, agent_id), vector in features.items():
        by_agent.setdefault(agent_id, {})[road_id] = vector
    method = context.config.behavior.method
    rows = []
    for agent_id in sorted(by_agent):
        vectors = by_agent[agent_id]
        bounds = behavior_bounds(list(vectors.values()))
        for suite in suites:
            covered = [vectors[road_id] for road_id in suite.road_ids if road_id in vectors]
            if len(covered) < 2:
                logger.warning(
                    "Suite %s has %d traces for agent %s; skipped",
                    suite.suite_id,
                    len(covered),
                    agent_id,
                )
                continue
            diversity = behavioral_diversity(covered, bounds, suite.suite_id, method)
            rows.append(
                {
                    "suite_id": suite.suite_id,
                    "agent_id": agent_id,
                    "suite_size": suite.size,
                    "label": suite.label,
                    "mean_length": context.mean_length(suite),
                    "bd": diversity.value,
                    "covered": len(covered),
                }
            )
    return pd.DataFrame(rows, columns=BD_COLUMNS)


def run_rq1(context: StudyContext, suites: Sequence[TestSuite]) -> List[ExperimentRecord]:
    """All four property harnesses over the suite sizes configured for each."""
    experiments = context.config.experiments

    def of_sizes(sizes):
        return [suite for suite in suites if suite.size in sizes]

    records = growth_experiment(context, of_sizes(experiments.growth_sizes))
    records += duplicate_experiment(context, of_sizes(experiments.duplicate_sizes))
    records += efficiency_experiment(context, of_sizes(experiments.efficiency_sizes))
    records += additivity_experiment(context, of_sizes(experiments.additivity_sizes))
    return records
