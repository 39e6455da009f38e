"""
Unit tests for the pairwise road distances and distance matrices.
"""

import math

import numpy as np
import pytest

from roaddiv.config import CatalogueConfig
from roaddiv.distances import (
    DistanceMatrix,
    angle_symbols,
    area_between_curves,
    complexity_distance,
    degenerate_dimensions,
    discrete_frechet,
    distance_matrix,
    dtw_distance,
    extend_distance_matrix,
    iterative_levenshtein,
    jaccard_distance,
    levenshtein,
    manhattan_feature_distance,
    min_max_normalize,
    pairwise_distance,
    pcm_distance,
    relative_angle_distance,
)
from roaddiv.exceptions import (
    BadNormalization,
    DegenerateRoad,
    PairwiseDistanceError,
    ShapeMismatch,
)
from roaddiv.geometry import RoadGeometry, feature_bounds, resample_uniform, rigid_motion, road_feature_vector
from roaddiv.models import NormalizationBounds, PairwiseDistanceId

from tests.helpers import arc, road_pool, straight


def _random_road(road_id, n, seed):
    rng = np.random.default_rng(seed)
    return RoadGeometry.from_points(road_id, np.cumsum(rng.uniform(0.5, 1.5, size=(n, 2)), axis=0))


def _naive_frechet(p, q):
    n, m = len(p), len(q)
    table = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            d = math.dist(p[i], q[j])
            if i == 0 and j == 0:
                table[i, j] = d
            elif i == 0:
                table[i, j] = max(table[i, j - 1], d)
            elif j == 0:
                table[i, j] = max(table[i - 1, j], d)
            else:
                table[i, j] = max(min(table[i - 1, j], table[i - 1, j - 1], table[i, j - 1]), d)
    return table[-1, -1]


def _naive_dtw(p, q):
    n, m = len(p), len(q)
    table = np.full((n + 1, m + 1), np.inf)
    table[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i, j] = math.dist(p[i - 1], q[j - 1]) + min(
                table[i - 1, j], table[i, j - 1], table[i - 1, j - 1]
            )
    return table[n, m]


def _naive_levenshtein(s, t):
    previous = list(range(len(t) + 1))
    for i, a in enumerate(s, start=1):
        current = [i]
        for j, b in enumerate(t, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (a != b)))
        previous = current
    return previous[-1]


class TestPointwiseDistances:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_frechet_matches_brute_force(self, seed):
        a = _random_road("a", 12, seed)
        b = _random_road("b", 9, seed + 10)
        assert discrete_frechet(a, b) == pytest.approx(_naive_frechet(a.points, b.points))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_dtw_matches_brute_force(self, seed):
        a = _random_road("a", 10, seed)
        b = _random_road("b", 14, seed + 10)
        assert dtw_distance(a, b) == pytest.approx(_naive_dtw(a.points, b.points))

    def test_frechet_and_dtw_match_similaritymeasures(self):
        similaritymeasures = pytest.importorskip("similaritymeasures")
        a = _random_road("a", 15, 3)
        b = _random_road("b", 15, 4)
        assert discrete_frechet(a, b) == pytest.approx(
            similaritymeasures.frechet_dist(a.points, b.points)
        )
        expected, _ = similaritymeasures.dtw(a.points, b.points)
        assert dtw_distance(a, b) == pytest.approx(expected)

    def test_area_between_parallel_lines(self):
        a = straight("a", 10)
        b = straight("b", 10, origin=(0.0, 1.0))
        assert area_between_curves(a, b) == pytest.approx(10.0)

    def test_area_needs_equal_point_counts(self):
        with pytest.raises(ShapeMismatch):
            area_between_curves(straight("a", 10), straight("b", 12))

    def test_pcm_identical_curves(self):
        g = arc("a", 20.0, 40.0)
        twin = arc("b", 20.0, 40.0)
        assert pcm_distance(g, twin) == pytest.approx(0.0, abs=1e-9)

    def test_pcm_removes_scale(self):
        g = arc("a", 20.0, 40.0)
        doubled = RoadGeometry.from_points("b", g.points * 2.0)
        assert pcm_distance(g, doubled) == pytest.approx(0.0, abs=1e-6)

    def test_pcm_unchanged_when_both_curves_are_scaled(self):
        a = arc("a", 20.0, 40.0)
        b = arc("b", 35.0, 60.0, left=False)
        scaled_a = RoadGeometry.from_points("a", a.points * 2.0)
        scaled_b = RoadGeometry.from_points("b", b.points * 2.0)
        assert pcm_distance(scaled_a, scaled_b) == pytest.approx(pcm_distance(a, b))


class TestShapeDistances:
    def test_relative_angle_between_arcs(self):
        a = arc("a", 20.0, 40.0)
        b = arc("b", 40.0, 40.0)
        assert relative_angle_distance(a, b) == pytest.approx(1 / 20 - 1 / 40)

    def test_unnormalized_relative_angle(self):
        a = arc("a", 20.0, 40.0)
        b = arc("b", 40.0, 40.0)
        expected = math.sqrt(39) * (1 / 20 - 1 / 40)
        assert relative_angle_distance(a, b, normalized=False) == pytest.approx(expected)

    def test_complexity_distance_arc_vs_straight(self):
        a = arc("a", 20.0, 40.0)
        b = straight("b", 40.0)
        assert complexity_distance(a, b) == pytest.approx(math.hypot(0.05, 0.05), abs=1e-9)

    def test_complexity_distance_needs_half_a_frame(self):
        with pytest.raises(DegenerateRoad):
            complexity_distance(straight("a", 5), straight("b", 40))

    def test_levenshtein_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            s = rng.integers(0, 3, size=int(rng.integers(0, 9))).tolist()
            t = rng.integers(0, 3, size=int(rng.integers(0, 9))).tolist()
            assert levenshtein(s, t) == _naive_levenshtein(s, t)

    def test_levenshtein_classic(self):
        assert levenshtein([1, 2, 3, 4, 5, 6], [7, 2, 3, 4, 8, 6, 9]) == 3

    def test_iterative_levenshtein_sums_levels(self):
        a = arc("a", 20.0, 40.0)
        b = arc("b", 30.0, 40.0, left=False)
        expected = sum(
            levenshtein(angle_symbols(a, bucket), angle_symbols(b, bucket)) for bucket in (10.0, 5.0)
        )
        assert iterative_levenshtein(a, b, levels=[10.0, 5.0]) == float(expected)

    def test_jaccard_range(self):
        a = arc("a", 20.0, 40.0)
        b = straight("b", 40.0)
        assert jaccard_distance(a, a) == 0.0
        assert 0.0 < jaccard_distance(a, b) <= 1.0

    def test_rotation_invariant_distances(self):
        a = arc("a", 20.0, 40.0)
        b = arc("b", 35.0, 40.0, left=False)
        moved = rigid_motion(b, 2.0, (100.0, 50.0))
        assert relative_angle_distance(a, moved) == pytest.approx(relative_angle_distance(a, b))
        assert complexity_distance(a, moved) == pytest.approx(complexity_distance(a, b))


class TestSymmetry:
    @pytest.mark.parametrize("distance", list(PairwiseDistanceId))
    def test_distances_are_bitwise_symmetric(self, distance):
        a = resample_uniform(arc("a", 20.0, 40.0), 50)
        b = resample_uniform(arc("b", 30.0, 50.0, left=False, heading=0.4), 50)
        bounds = feature_bounds(road_feature_vector(g) for g in (a, b))
        assert pairwise_distance(distance, a, b, bounds=bounds) == pairwise_distance(
            distance, b, a, bounds=bounds
        )

    def test_manhattan_needs_bounds(self):
        with pytest.raises(ValueError):
            pairwise_distance(PairwiseDistanceId.MANHATTAN_FEATURES, straight("a", 20), straight("b", 30))


class TestNormalization:
    def test_clips_into_unit_range(self):
        bounds = NormalizationBounds(lower=(0.0, 10.0), upper=(2.0, 20.0))
        assert min_max_normalize((1.0, 30.0), bounds).tolist() == [0.5, 1.0]

    def test_degenerate_dimension_contributes_zero(self):
        bounds = NormalizationBounds(lower=(1.0, 0.0), upper=(1.0, 4.0))
        assert min_max_normalize((1.0, 2.0), bounds).tolist() == [0.0, 0.5]
        assert degenerate_dimensions(bounds) == [0]

    def test_strict_mode_rejects_degenerate_bounds(self):
        bounds = NormalizationBounds(lower=(1.0, 0.0), upper=(1.0, 4.0))
        with pytest.raises(BadNormalization) as exc_info:
            min_max_normalize((1.0, 2.0), bounds, strict=True)
        assert exc_info.value.dimension == 0

    def test_rounding_noise_counts_as_degenerate(self):
        bounds = NormalizationBounds(lower=(5.0,), upper=(5.0 + 1e-15,))
        assert degenerate_dimensions(bounds) == [0]

    def test_manhattan_feature_distance_range(self):
        roads = [arc("a", 20.0, 40.0), straight("b", 60.0)]
        bounds = feature_bounds(road_feature_vector(g) for g in roads)
        value = manhattan_feature_distance(roads[0], roads[1], bounds)
        assert 0.0 < value <= 7.0


class TestDistanceMatrix:
    def test_rejects_asymmetric_values(self):
        with pytest.raises(ValueError):
            DistanceMatrix(ids=("a", "b"), values=[[0.0, 1.0], [2.0, 0.0]])

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            DistanceMatrix(ids=("a", "b"), values=[[0.0, -1.0], [-1.0, 0.0]])

    def test_submatrix(self):
        m = DistanceMatrix(
            ids=("a", "b", "c"), values=[[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]]
        )
        sub = m.submatrix([2, 0])
        assert sub.ids == ("c", "a")
        assert sub.values.tolist() == [[0.0, 2.0], [2.0, 0.0]]

    def test_matrix_properties(self):
        roads = road_pool(5)
        m = distance_matrix(roads, PairwiseDistanceId.DTW, config=CatalogueConfig(resample_points=30))
        assert m.n == 5
        assert m.evaluations == 10
        assert np.array_equal(m.values, m.values.T)
        assert np.all(np.diag(m.values) == 0)
        assert len(m.upper_triangle()) == 10

    def test_alignment_removes_rigid_motion(self):
        g = arc("a", 25.0, 40.0)
        moved = rigid_motion(arc("b", 25.0, 40.0), 1.3, (40.0, 10.0))
        config = CatalogueConfig(resample_points=40)
        aligned = distance_matrix([g, moved], PairwiseDistanceId.DISCRETE_FRECHET, True, config)
        raw = distance_matrix([g, moved], PairwiseDistanceId.DISCRETE_FRECHET, False, config)
        assert aligned.values[0, 1] == pytest.approx(0.0, abs=1e-6)
        assert raw.values[0, 1] > 10.0

    def test_extension_matches_full_matrix(self):
        roads = [resample_uniform(g, 30) for g in road_pool(6)]
        config = CatalogueConfig(resample_points=30)
        distance = PairwiseDistanceId.DISCRETE_FRECHET
        base = distance_matrix(roads[:4], distance, False, config, prepared=True)
        full = distance_matrix(roads, distance, False, config, prepared=True)
        extended, evaluations = extend_distance_matrix(
            base, roads[:4], roads[4:], distance, False, config, prepared=True
        )
        assert evaluations == 2 * 4 + 1
        assert extended.ids == full.ids
        assert np.array_equal(extended.values, full.values)
        assert extended.evaluations == full.evaluations

    def test_pair_failure_names_the_pair(self):
        roads = [straight("long", 40), straight("short", 5)]
        with pytest.raises(PairwiseDistanceError) as exc_info:
            distance_matrix(roads, PairwiseDistanceId.COMPLEXITY_VECTORS)
        assert (exc_info.value.i, exc_info.value.j) == (0, 1)
        assert exc_info.value.distance == "complexity_vectors"
        assert isinstance(exc_info.value.__cause__, DegenerateRoad)

    @pytest.mark.parametrize("distance", list(PairwiseDistanceId))
    def test_worker_processes_give_identical_values(self, distance):
        roads = road_pool(5)
        config = CatalogueConfig(resample_points=30)
        sequential = distance_matrix(roads, distance, config=config, jobs=1)
        parallel = distance_matrix(roads, distance, config=config, jobs=2)
        assert parallel.ids == sequential.ids
        assert np.array_equal(parallel.values, sequential.values)
