"""
Unit tests for roaddiv models.
"""

import math

import pytest
from pydantic import ValidationError

from roaddiv.models import (
    AggregationId,
    ControlPointRoad,
    CorpusValidationReport,
    CorrelationMethod,
    CorrelationResult,
    CorrelationStrength,
    DirectMeasureId,
    DiversityMeasureId,
    DiversityValue,
    Experiment,
    ExperimentRecord,
    NormalizationBounds,
    PairwiseDistanceId,
    SamplingPlan,
    TestSuite,
    TraceFlag,
    TraceValidationReport,
    ValidationIssue,
    all_measures,
)


class TestDiversityMeasureId:
    def test_catalogue_order(self):
        measures = all_measures()
        assert len(measures) == 47
        assert measures[0].code == "discrete_frechet+weitzman"
        assert measures[44].code == "manhattan_features+average_of_maxima"
        assert [m.code for m in measures[45:]] == ["test_set_diameter", "convex_hull"]
        assert len({m.code for m in measures}) == 47

    def test_code_round_trip(self):
        for measure in all_measures():
            assert DiversityMeasureId.from_code(measure.code) == measure

    def test_pair_and_direct_are_exclusive(self):
        with pytest.raises(ValidationError):
            DiversityMeasureId(
                distance=PairwiseDistanceId.DTW,
                aggregation=AggregationId.SUM,
                direct=DirectMeasureId.CONVEX_HULL,
            )
        with pytest.raises(ValidationError):
            DiversityMeasureId(distance=PairwiseDistanceId.DTW)
        with pytest.raises(ValidationError):
            DiversityMeasureId()

    def test_unknown_code(self):
        with pytest.raises(ValueError):
            DiversityMeasureId.from_code("dtw+median")

    def test_is_direct(self):
        assert DiversityMeasureId(direct=DirectMeasureId.CONVEX_HULL).is_direct
        assert str(DiversityMeasureId.from_code("pcm+sum")) == "pcm+sum"


class TestNormalizationBounds:
    def test_valid(self):
        bounds = NormalizationBounds(lower=(0.0, 1.0), upper=(1.0, 1.0), labels=("a", "b"))
        assert bounds.dimension == 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            NormalizationBounds(lower=(0.0,), upper=(1.0, 2.0))

    def test_labels_must_match(self):
        with pytest.raises(ValidationError):
            NormalizationBounds(lower=(0.0,), upper=(1.0,), labels=("a", "b"))

    @pytest.mark.parametrize("upper", [-1.0, math.inf])
    def test_invalid_bound(self, upper):
        with pytest.raises(ValidationError):
            NormalizationBounds(lower=(0.0,), upper=(upper,))


class TestControlPointRoad:
    def test_defaults(self):
        road = ControlPointRoad(id="r", control_points=[(0, 0), (10, 0)])
        assert road.lane_width == 4.0
        assert not road.interpolated

    @pytest.mark.parametrize(
        "points",
        [
            [(0.0, 0.0)],
            [(0.0, 0.0), (math.nan, 1.0)],
            [(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
        ],
    )
    def test_invalid_points(self, points):
        with pytest.raises(ValidationError):
            ControlPointRoad(id="r", control_points=points)

    def test_extra_fields_forbidden(self):
        with pytest.raises(ValidationError):
            ControlPointRoad(id="r", control_points=[(0, 0), (1, 0)], speed_limit=50)

    def test_empty_id(self):
        with pytest.raises(ValidationError):
            ControlPointRoad(id="", control_points=[(0, 0), (1, 0)])


class TestDiversityValue:
    def test_failed_value(self):
        value = DiversityValue(measure=DiversityMeasureId.from_code("dtw+sum"), error="boom")
        assert not value.ok

    def test_negative_value_rejected(self):
        with pytest.raises(ValidationError):
            DiversityValue(measure=DiversityMeasureId.from_code("dtw+sum"), value=-1.0)

    def test_only_weitzman_times_out(self):
        DiversityValue(
            measure=DiversityMeasureId.from_code("dtw+weitzman"), value=3.0, timed_out=True
        )
        with pytest.raises(ValidationError):
            DiversityValue(measure=DiversityMeasureId.from_code("dtw+sum"), value=3.0, timed_out=True)


class TestSuitesAndPlans:
    def test_suite_size(self):
        suite = TestSuite(suite_id="s", road_ids=["a", "b", "c"])
        assert suite.size == 3
        assert suite.label == "all"

    def test_plan_label(self):
        assert SamplingPlan().label == "all"
        assert SamplingPlan(length_quantile="longest").label == "longest"

    @pytest.mark.parametrize("sizes", [[], [0], [10, -1]])
    def test_plan_sizes(self, sizes):
        with pytest.raises(ValidationError):
            SamplingPlan(sizes=sizes)


class TestCorrelationResult:
    def test_strength_must_match(self):
        with pytest.raises(ValidationError):
            CorrelationResult(
                x_label="a",
                y_label="b",
                method=CorrelationMethod.PEARSON,
                coefficient=0.95,
                p_value=0.01,
                strength=CorrelationStrength.LOW,
                n=10,
            )

    def test_coefficient_range(self):
        with pytest.raises(ValidationError):
            CorrelationResult(
                x_label="a",
                y_label="b",
                method=CorrelationMethod.SPEARMAN,
                coefficient=1.5,
                p_value=0.0,
                strength=CorrelationStrength.VERY_HIGH,
                n=10,
            )


class TestExperimentRecord:
    def test_delta_is_filled(self):
        record = ExperimentRecord(
            experiment="growth", suite_id="s", measure="dtw+sum", before=2.0, after=5.0
        )
        assert record.delta == 3.0
        assert record.experiment is Experiment.GROWTH

    def test_inconsistent_delta(self):
        with pytest.raises(ValidationError):
            ExperimentRecord(
                experiment="growth", suite_id="s", measure="dtw+sum", before=2.0, after=5.0, delta=1.0
            )

    def test_efficiency_records_may_lack_before(self):
        record = ExperimentRecord(
            experiment="efficiency", suite_id="s", measure="convex_hull", after=1.0, wall_time=0.2
        )
        assert record.delta is None

    def test_unknown_experiment(self):
        with pytest.raises(ValidationError):
            ExperimentRecord(experiment="rq9", suite_id="s", measure="convex_hull")


class TestReports:
    def test_trace_report(self):
        report = TraceValidationReport(road_id="r", agent_id="a")
        assert report.valid
        report.flags.append(TraceFlag.INCOMPLETE_DATA)
        assert not report.valid

    def test_corpus_report(self):
        report = CorpusValidationReport(path="roads.json", loaded=["a"])
        assert report.valid
        report.excluded.append(ValidationIssue(item_id="b", reason="duplicate_id"))
        assert not report.valid
