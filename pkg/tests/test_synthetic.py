"""
Tests for the synthetic corpus generator and road shortening.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from roaddiv.geometry import RoadGeometry, curvature_profile, interpolate_road, self_intersects
from roaddiv.models import ControlPointRoad
from roaddiv.synthetic import (
    SyntheticCorpusSpec,
    _integrate,
    generate_synthetic_corpus,
    shorten_road,
    shorten_roads,
    synthetic_trace,
)

from tests.helpers import arc


def _spec(**overrides):
    values = {"road_count": 8, "seed": 3}
    values.update(overrides)
    return SyntheticCorpusSpec(**values)


class TestGenerateCorpus:
    def test_counts_and_ids(self):
        roads, traces = generate_synthetic_corpus(_spec())
        assert [road.id for road in roads] == [f"synth-{i:04d}" for i in range(8)]
        assert len(traces) == 16
        assert [trace.agent_id for trace in traces[:2]] == ["curvature", "constant"]
        assert {trace.road_id for trace in traces} == {road.id for road in roads}

    def test_same_seed_same_corpus(self):
        first, first_traces = generate_synthetic_corpus(_spec(road_count=4))
        second, second_traces = generate_synthetic_corpus(_spec(road_count=4))
        other, _ = generate_synthetic_corpus(_spec(road_count=4, seed=4))
        assert first == second
        assert np.array_equal(first_traces[0].x, second_traces[0].x)
        assert first != other

    def test_roads_are_simple(self):
        roads, _ = generate_synthetic_corpus(_spec())
        for road in roads:
            assert not self_intersects(interpolate_road(road))

    def test_single_family(self):
        roads, traces = generate_synthetic_corpus(
            _spec(road_count=3, families=["straight"], agents=["constant"])
        )
        assert len(traces) == 3
        for road in roads:
            kappa = curvature_profile(interpolate_road(road)).kappa
            assert np.max(np.abs(kappa)) == pytest.approx(0.0, abs=1e-4)

    def test_empty_families_rejected(self):
        with pytest.raises(ValidationError):
            SyntheticCorpusSpec(families=[])

    def test_unknown_family_rejected(self):
        with pytest.raises(ValidationError):
            SyntheticCorpusSpec(families=["zigzag"])

    def test_inverted_length_range(self):
        with pytest.raises(ValueError):
            generate_synthetic_corpus(_spec(min_length=100.0, max_length=50.0))


def test_integrate_constant_curvature():
    points = _integrate(np.full(40, 0.05), 1.0, 0.0, np.zeros(2))
    assert len(points) == 41
    assert np.allclose(points[0], 0.0)
    kappa = curvature_profile(RoadGeometry.from_points("c", points)).kappa
    assert kappa == pytest.approx(np.full(len(kappa), 0.05), rel=1e-3)


class TestSyntheticTraces:
    def test_constant_agent(self):
        g = arc("a", 30.0, 60.0)
        trace = synthetic_trace(g, "constant")
        assert len(trace) == g.n_points
        assert np.std(trace.velocity) == 0.0
        assert trace.velocity[0] == pytest.approx(10.0, rel=1e-3)
        assert np.array_equal(trace.positions, g.points)

    def test_curvature_agent_slows_in_turns(self):
        g = arc("a", 15.0, 60.0)
        trace = synthetic_trace(g, "curvature", frequency=10.0)
        assert trace.agent_id == "curvature"
        assert np.all(np.diff(trace.t) > 0)
        assert np.all((trace.velocity >= 5.0) & (trace.velocity <= 20.0))
        assert trace.velocity.max() < 20.0
        assert np.all(trace.steering > 0)

    def test_unknown_agent(self):
        with pytest.raises(ValueError):
            synthetic_trace(arc("a", 30.0, 60.0), "reckless")


class TestShorten:
    def test_first_half_of_a_straight(self):
        road = ControlPointRoad(id="s", control_points=[(0.0, 0.0), (100.0, 0.0)])
        short = shorten_road(road, 0.5)
        assert short.id == "s~0.5"
        assert short.interpolated
        assert short.control_points[0] == (0.0, 0.0)
        assert short.control_points[-1] == pytest.approx((50.0, 0.0))
        assert interpolate_road(short).length == pytest.approx(50.0)

    def test_full_fraction_keeps_the_road(self):
        road = ControlPointRoad(id="s", control_points=[(0.0, 0.0), (40.0, 0.0)])
        assert interpolate_road(shorten_road(road, 1.0)).length == pytest.approx(40.0)

    @pytest.mark.parametrize("fraction", [0.0, -0.5, 1.5])
    def test_fraction_out_of_range(self, fraction):
        road = ControlPointRoad(id="s", control_points=[(0.0, 0.0), (40.0, 0.0)])
        with pytest.raises(ValueError):
            shorten_road(road, fraction)

    def test_invalid_fractions_are_skipped(self):
        roads = [
            ControlPointRoad(id="a", control_points=[(0.0, 0.0), (40.0, 0.0)]),
            ControlPointRoad(id="b", control_points=[(0.0, 0.0), (0.0, 40.0)]),
        ]
        short = shorten_roads(roads, [0.25, 0.0])
        assert [road.id for road in short] == ["a~0.25", "b~0.25"]
