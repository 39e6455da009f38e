"""
Unit tests for roaddiv exceptions.
"""

import pytest

from roaddiv.exceptions import (
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


class TestExceptionHierarchy:
    @pytest.mark.parametrize(
        "exc_class",
        [
            BadNormalization,
            CompressorFailure,
            DegenerateInput,
            DegenerateRoad,
            EmptyCorpus,
            EmptySegments,
            MixedAgents,
            PairwiseDistanceError,
            ParseError,
            PoolTooSmall,
            ProjectionFailure,
            PropertyViolation,
            ResultsIOError,
            RoadMismatch,
            ShapeMismatch,
        ],
    )
    def test_inherits_base(self, exc_class):
        exc = exc_class("boom")
        assert isinstance(exc, RoadDiversityException)
        assert str(exc) == "boom"

    def test_non_finite_is_degenerate(self):
        exc = NonFiniteGeometry("nan", "r1")
        assert isinstance(exc, DegenerateRoad)
        assert exc.road_id == "r1"

    def test_schema_mismatch_is_parse_error(self):
        exc = SchemaMismatch("missing", "traces.csv", ["t", "x"])
        assert isinstance(exc, ParseError)
        assert exc.path == "traces.csv"
        assert exc.line is None
        assert exc.missing == ["t", "x"]


class TestAttributes:
    def test_degenerate_road(self):
        exc = DegenerateRoad("too short", road_id="r7")
        assert exc.road_id == "r7"

    def test_shape_mismatch(self):
        exc = ShapeMismatch("shapes", left=100, right=80)
        assert (exc.left, exc.right) == (100, 80)

    def test_pairwise_distance_error_chains_cause(self):
        try:
            try:
                raise DegenerateRoad("short", "b")
            except DegenerateRoad as inner:
                raise PairwiseDistanceError("pair failed", 0, 1, "dtw") from inner
        except PairwiseDistanceError as exc:
            assert (exc.i, exc.j, exc.distance) == (0, 1, "dtw")
            assert isinstance(exc.__cause__, DegenerateRoad)

    def test_pool_too_small(self):
        exc = PoolTooSmall("pool", required=50, available=12)
        assert exc.required == 50
        assert exc.available == 12

    def test_parse_error_line(self):
        exc = ParseError("bad", "roads.json", 4)
        assert exc.path == "roads.json"
        assert exc.line == 4

    def test_mixed_agents_copies_list(self):
        agents = ("a", "b")
        assert MixedAgents("mixed", agents).agents == ["a", "b"]

    def test_defaults_are_none(self):
        assert ProjectionFailure("far").index is None
        assert RoadMismatch("other").road_id is None
        assert PropertyViolation("broke").experiment is None
        assert CompressorFailure("codec").codec is None
        assert BadNormalization("flat").dimension is None
        assert DegenerateInput("flat").label is None
        assert EmptyCorpus("none").path is None
        assert ResultsIOError("io").path is None
        assert EmptySegments("none").road_id is None
