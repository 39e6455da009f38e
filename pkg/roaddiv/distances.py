"""
The nine pairwise road distance functions and distance matrix construction.

Every public distance orders its two arguments canonically (by road id, then
geometry digest) before computing, so ``d(a, b) == d(b, a)`` holds bit for
bit even where the underlying construction is asymmetric.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .config import CatalogueConfig
from .exceptions import (
    BadNormalization,
    DegenerateRoad,
    EmptySegments,
    PairwiseDistanceError,
    RoadDiversityException,
    ShapeMismatch,
)
from .geometry import (
    RoadGeometry,
    complexity_frames,
    feature_bounds,
    geometry_digest,
    procrustes_align,
    resample_uniform,
    road_feature_vector,
    segment_set,
    turning_angles,
)
from .models import NormalizationBounds, PairwiseDistanceId

logger = logging.getLogger(__name__)

PCM_OFFSETS = 51
SPAN_TOLERANCE = 1e-12

# Distances computed on raw coordinates; the others only see rotation
# invariant derivatives and are unaffected by alignment.
ALIGNMENT_SENSITIVE = frozenset(
    {
        PairwiseDistanceId.DISCRETE_FRECHET,
        PairwiseDistanceId.PCM,
        PairwiseDistanceId.DTW,
        PairwiseDistanceId.AREA_BETWEEN_CURVES,
    }
)


def _order_key(g: RoadGeometry) -> Tuple[str, str]:
    return (g.id, geometry_digest(g))


def symmetric(func: Callable[..., float]) -> Callable[..., float]:
    @functools.wraps(func)
    def wrapper(a: RoadGeometry, b: RoadGeometry, *args, **kwargs) -> float:
        if _order_key(b) < _order_key(a):
            a, b = b, a
        return func(a, b, *args, **kwargs)

    return wrapper


def _require_same_count(a: RoadGeometry, b: RoadGeometry) -> None:
    if a.n_points != b.n_points:
        raise ShapeMismatch(
            f"{a.id} has {a.n_points} points, {b.id} has {b.n_points}", a.n_points, b.n_points
        )


def _lattice_dp(cost: np.ndarray, combine: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
    """
    Monotone lattice DP over ``cost``, evaluated one anti-diagonal at a time.

    ``acc[i + 1, j + 1] = combine(cost[i, j], min(acc[i, j + 1], acc[i + 1, j], acc[i, j]))``
    """
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for k in range(n + m - 1):
        i = np.arange(max(0, k - m + 1), min(n - 1, k) + 1)
        j = k - i
        best = np.minimum(np.minimum(acc[i, j + 1], acc[i + 1, j]), acc[i, j])
        acc[i + 1, j + 1] = combine(cost[i, j], best)
    return float(acc[n, m])


@symmetric
def discrete_frechet(a: RoadGeometry, b: RoadGeometry) -> float:
    return _lattice_dp(cdist(a.points, b.points), np.maximum)


@symmetric
def dtw_distance(a: RoadGeometry, b: RoadGeometry) -> float:
    """Full-window dynamic time warping with Euclidean point cost, summed along the path."""
    return _lattice_dp(cdist(a.points, b.points), np.add)


def _triangle_areas(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    u, v = q - p, r - p
    return 0.5 * np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def _strip_areas(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Unsigned area of each quad (p_k, p_k+1, q_k+1, q_k), averaged over both triangulations."""
    p0, p1, q0, q1 = p[:-1], p[1:], q[:-1], q[1:]
    first = _triangle_areas(p0, p1, q1) + _triangle_areas(p0, q1, q0)
    second = _triangle_areas(p0, p1, q0) + _triangle_areas(p1, q1, q0)
    return 0.5 * (first + second)


@symmetric
def area_between_curves(a: RoadGeometry, b: RoadGeometry) -> float:
    _require_same_count(a, b)
    return float(np.sum(_strip_areas(a.points, b.points)))


def _normalize_curve(g: RoadGeometry) -> np.ndarray:
    centered = g.points - g.points.mean(axis=0)
    scale = float(np.mean(np.hypot(*centered.T)))
    if scale <= 1e-12:
        raise DegenerateRoad(f"road {g.id}: zero-size curve cannot be normalized", g.id)
    return centered / scale


def _arclength(points: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(points, axis=0).T))])


def _map_onto(short: np.ndarray, long: np.ndarray) -> float:
    """Best discrepancy of ``short`` laid onto a section of ``long`` starting at some offset."""
    s_short = _arclength(short)
    s_long = _arclength(long)
    slack = max(s_long[-1] - s_short[-1], 0.0)
    best = math.inf
    for offset in np.linspace(0.0, slack, PCM_OFFSETS if slack > 0 else 1):
        positions = np.minimum(offset + s_short, s_long[-1])
        mapped = np.column_stack(
            [np.interp(positions, s_long, long[:, 0]), np.interp(positions, s_long, long[:, 1])]
        )
        best = min(best, float(np.sum(_strip_areas(short, mapped))))
    return best


@symmetric
def pcm_distance(a: RoadGeometry, b: RoadGeometry) -> float:
    """
    Partial curve mapping on curves normalized by centroid and mean centroid
    distance. The shorter curve is slid along the longer one; when both have
    the same normalized length the smaller of the two directions is kept.

    The mapping is searched on a grid of ``PCM_OFFSETS`` evenly spaced start
    offsets rather than solved exactly (as ``similaritymeasures.pcm`` also
    does), so the value is an upper bound on the continuous optimum.
    """
    na, nb = _normalize_curve(a), _normalize_curve(b)
    la, lb = _arclength(na)[-1], _arclength(nb)[-1]
    if math.isclose(la, lb, rel_tol=1e-12, abs_tol=0.0):
        return min(_map_onto(na, nb), _map_onto(nb, na))
    if la < lb:
        return _map_onto(na, nb)
    return _map_onto(nb, na)


@symmetric
def relative_angle_distance(a: RoadGeometry, b: RoadGeometry, normalized: bool = True) -> float:
    _require_same_count(a, b)
    diff = turning_angles(a).angles - turning_angles(b).angles
    distance = float(np.sqrt(np.sum(diff * diff)))
    if normalized:
        distance /= math.sqrt(len(diff))
    return distance


@symmetric
def complexity_distance(a: RoadGeometry, b: RoadGeometry, frame_length: float = 20.0) -> float:
    """Symmetric Hausdorff distance between the two roads' per-frame complexity vectors."""
    fa = np.asarray(complexity_frames(a, frame_length), dtype=float)
    fb = np.asarray(complexity_frames(b, frame_length), dtype=float)
    pairwise = cdist(fa, fb)
    return float(max(pairwise.min(axis=1).max(), pairwise.min(axis=0).max()))


def levenshtein(s: Sequence[int], t: Sequence[int]) -> int:
    """Unit-cost edit distance, evaluated along anti-diagonals."""
    s_arr, t_arr = np.asarray(s), np.asarray(t)
    n, m = len(s_arr), len(t_arr)
    if n == 0 or m == 0:
        return max(n, m)
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    table[:, 0] = np.arange(n + 1)
    table[0, :] = np.arange(m + 1)
    for k in range(2, n + m + 1):
        i = np.arange(max(1, k - m), min(n, k - 1) + 1)
        j = k - i
        substitute = table[i - 1, j - 1] + (s_arr[i - 1] != t_arr[j - 1])
        table[i, j] = np.minimum(np.minimum(table[i - 1, j], table[i, j - 1]) + 1, substitute)
    return int(table[n, m])


def angle_symbols(g: RoadGeometry, bucket_deg: float) -> np.ndarray:
    angles = turning_angles(g).angles
    angles = np.where(np.abs(angles) < 1e-9, 0.0, angles)
    return np.floor(np.round(np.degrees(angles) / bucket_deg, 9)).astype(np.int64)


@symmetric
def iterative_levenshtein(
    a: RoadGeometry,
    b: RoadGeometry,
    angle_bucket_deg: float = 5.0,
    levels: Optional[Sequence[float]] = None,
) -> float:
    """
    Edit distance between quantized turning-angle sequences.

    With ``levels`` (bucket sizes in degrees, coarse to fine) the edit
    distances at every level are summed; otherwise a single level of
    ``angle_bucket_deg`` is used.
    """
    buckets = list(levels) if levels else [angle_bucket_deg]
    return float(
        sum(levenshtein(angle_symbols(a, bucket), angle_symbols(b, bucket)) for bucket in buckets)
    )


@symmetric
def jaccard_distance(
    a: RoadGeometry,
    b: RoadGeometry,
    length_buckets: int = 10,
    turn_buckets: int = 18,
    segment_spacing: float = 5.0,
) -> float:
    sa = segment_set(a, length_buckets, turn_buckets, segment_spacing)
    sb = segment_set(b, length_buckets, turn_buckets, segment_spacing)
    for road, segments in ((a, sa), (b, sb)):
        if segments.size == 0:
            raise EmptySegments(f"road {road.id} has no segments", road.id)
    return 1.0 - sa.jaccard_similarity(sb)


def min_max_normalize(
    vector: Sequence[float], bounds: NormalizationBounds, strict: bool = False
) -> np.ndarray:
    """
    Min-max normalize ``vector`` into [0, 1] per dimension. Dimensions whose
    bound has max == min contribute 0, or raise ``BadNormalization`` in
    strict mode.
    """
    values = np.asarray(tuple(vector), dtype=float)
    lower = np.asarray(bounds.lower, dtype=float)
    upper = np.asarray(bounds.upper, dtype=float)
    if values.shape != lower.shape:
        raise ValueError(f"vector has {values.size} dimensions, bounds have {lower.size}")
    span = upper - lower
    degenerate = _degenerate_spans(lower, upper)
    if strict and np.any(degenerate):
        dimension = int(np.argmax(degenerate))
        raise BadNormalization(f"normalization bound {dimension} has max == min", dimension)
    safe = np.where(degenerate, 1.0, span)
    return np.where(degenerate, 0.0, np.clip((values - lower) / safe, 0.0, 1.0))


def _degenerate_spans(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    # spans at rounding-noise level count as max == min
    scale = np.maximum(1.0, np.maximum(np.abs(lower), np.abs(upper)))
    return (upper - lower) <= SPAN_TOLERANCE * scale


def degenerate_dimensions(bounds: NormalizationBounds) -> List[int]:
    lower = np.asarray(bounds.lower, dtype=float)
    upper = np.asarray(bounds.upper, dtype=float)
    return [int(index) for index in np.flatnonzero(_degenerate_spans(lower, upper))]


@symmetric
def manhattan_feature_distance(
    a: RoadGeometry,
    b: RoadGeometry,
    norms: NormalizationBounds,
    turn_threshold: float = 0.005,
    strict: bool = False,
) -> float:
    fa = min_max_normalize(road_feature_vector(a, turn_threshold), norms, strict)
    fb = min_max_normalize(road_feature_vector(b, turn_threshold), norms, strict)
    return float(np.sum(np.abs(fa - fb)))


def pairwise_distance(
    distance: PairwiseDistanceId,
    a: RoadGeometry,
    b: RoadGeometry,
    config: Optional[CatalogueConfig] = None,
    bounds: Optional[NormalizationBounds] = None,
) -> float:
    """Dispatch one distance id with its catalogue parameters."""
    config = config or CatalogueConfig()
    if distance is PairwiseDistanceId.DISCRETE_FRECHET:
        return discrete_frechet(a, b)
    if distance is PairwiseDistanceId.PCM:
        return pcm_distance(a, b)
    if distance is PairwiseDistanceId.DTW:
        return dtw_distance(a, b)
    if distance is PairwiseDistanceId.NORMALIZED_RELATIVE_ANGLE:
        return relative_angle_distance(a, b, normalized=True)
    if distance is PairwiseDistanceId.COMPLEXITY_VECTORS:
        return complexity_distance(a, b, config.frame_length)
    if distance is PairwiseDistanceId.ITERATIVE_LEVENSHTEIN:
        return iterative_levenshtein(a, b, config.angle_bucket_deg, config.levenshtein_levels)
    if distance is PairwiseDistanceId.JACCARD:
        return jaccard_distance(
            a, b, config.length_buckets, config.turn_buckets, config.segment_spacing
        )
    if distance is PairwiseDistanceId.AREA_BETWEEN_CURVES:
        return area_between_curves(a, b)
    if distance is PairwiseDistanceId.MANHATTAN_FEATURES:
        if bounds is None:
            raise ValueError("manhattan_features needs normalization bounds")
        return manhattan_feature_distance(
            a, b, bounds, config.turn_threshold, config.strict_normalization
        )
    raise ValueError(f"unknown distance {distance!r}")


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, zero-diagonal, non-negative distance table over a suite."""

    ids: Tuple[str, ...]
    values: np.ndarray
    distance: Optional[PairwiseDistanceId] = None
    aligned: bool = False
    evaluations: int = 0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ids", tuple(self.ids))
        n = len(self.ids)
        if values.shape != (n, n):
            raise ValueError(f"matrix shape {values.shape} does not match {n} ids")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("distance matrix entries must be finite and non-negative")
        if not np.array_equal(values, values.T) or np.any(np.diag(values) != 0):
            raise ValueError("distance matrix must be symmetric with a zero diagonal")

    @property
    def n(self) -> int:
        return len(self.ids)

    def upper_triangle(self) -> np.ndarray:
        return self.values[np.triu_indices(self.n, k=1)]

    def submatrix(self, indices: Sequence[int]) -> "DistanceMatrix":
        index = np.asarray(indices, dtype=int)
        return DistanceMatrix(
            ids=tuple(self.ids[i] for i in index),
            values=self.values[np.ix_(index, index)],
            distance=self.distance,
            aligned=self.aligned,
        )


def prepare_suite(suite: Sequence[RoadGeometry], config: CatalogueConfig) -> List[RoadGeometry]:
    """Resample every road to the catalogue point count."""
    return [resample_uniform(g, config.resample_points) for g in suite]


def suite_feature_bounds(
    suite: Sequence[RoadGeometry], config: CatalogueConfig
) -> NormalizationBounds:
    bounds = feature_bounds(road_feature_vector(g, config.turn_threshold) for g in suite)
    degenerate = degenerate_dimensions(bounds)
    if degenerate:
        names = [bounds.labels[index] for index in degenerate] if bounds.labels else degenerate
        logger.warning("Feature bounds are degenerate for %s; those features contribute 0", names)
    return bounds


def _evaluate_pair(task) -> float:
    distance, gi, gj, aligned, config, bounds, i, j = task
    try:
        if aligned and distance in ALIGNMENT_SENSITIVE:
            gj = procrustes_align(gi, gj)
        value = pairwise_distance(distance, gi, gj, config, bounds)
    except (RoadDiversityException, ValueError) as exc:
        raise PairwiseDistanceError(
            f"{distance.value} failed for pair ({i}, {j}) [{gi.id}, {gj.id}]: {exc}",
            i,
            j,
            distance.value,
        ) from exc
    if not math.isfinite(value) or value < 0:
        raise PairwiseDistanceError(
            f"{distance.value} returned {value} for pair ({i}, {j})", i, j, distance.value
        )
    return value


def _fill_pairs(
    prepared: Sequence[RoadGeometry],
    pairs: Sequence[Tuple[int, int]],
    distance: PairwiseDistanceId,
    aligned: bool,
    config: CatalogueConfig,
    bounds: Optional[NormalizationBounds],
    jobs: int,
) -> List[float]:
    tasks = [
        (distance, prepared[i], prepared[j], aligned, config, bounds, i, j) for i, j in pairs
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate_pair, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_evaluate_pair(task) for task in tasks]


def distance_matrix(
    suite: Sequence[RoadGeometry],
    distance: PairwiseDistanceId,
    aligned: bool = True,
    config: Optional[CatalogueConfig] = None,
    bounds: Optional[NormalizationBounds] = None,
    jobs: int = 1,
    prepared: bool = False,
) -> DistanceMatrix:
    """
    Fill all n(n-1)/2 pairs of ``suite`` under one distance id.

    Roads are resampled to ``config.resample_points`` unless ``prepared`` is
    set. With ``aligned`` the second road of each pair is Procrustes-aligned
    onto the first. ``bounds`` are the Manhattan normalization bounds; they
    default to the suite's own. Entries are computed independently, so the
    result does not depend on ``jobs``.
    """
    config = config or CatalogueConfig()
    roads = list(suite) if prepared else prepare_suite(suite, config)
    if distance is PairwiseDistanceId.MANHATTAN_FEATURES and bounds is None:
        bounds = suite_feature_bounds(roads, config)
    n = len(roads)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    values = np.zeros((n, n))
    for (i, j), value in zip(pairs, _fill_pairs(roads, pairs, distance, aligned, config, bounds, jobs)):
        values[i, j] = values[j, i] = value
    return DistanceMatrix(
        ids=tuple(g.id for g in roads),
        values=values,
        distance=distance,
        aligned=aligned,
        evaluations=len(pairs),
    )


def extend_distance_matrix(
    matrix: DistanceMatrix,
    suite: Sequence[RoadGeometry],
    added: Sequence[RoadGeometry],
    distance: PairwiseDistanceId,
    aligned: bool = True,
    config: Optional[CatalogueConfig] = None,
    bounds: Optional[NormalizationBounds] = None,
    jobs: int = 1,
    prepared: bool = False,
) -> Tuple[DistanceMatrix, int]:
    """
    Grow ``matrix`` (built over ``suite``) by the roads in ``added``,
    evaluating only the new rows: k*n + k(k-1)/2 pairs for k added roads.

    Pass the same ``bounds`` the matrix was built with for Manhattan
    features; when omitted they are recomputed over suite + added.
    """
    config = config or CatalogueConfig()
    if len(suite) != matrix.n:
        raise ValueError(f"matrix covers {matrix.n} roads, suite has {len(suite)}")
    roads = list(suite) + list(added)
    if not prepared:
        roads = prepare_suite(roads, config)
    if distance is PairwiseDistanceId.MANHATTAN_FEATURES and bounds is None:
        bounds = suite_feature_bounds(roads, config)
    n, total = matrix.n, len(roads)
    pairs = [(i, j) for j in range(n, total) for i in range(j)]
    values = np.zeros((total, total))
    values[:n, :n] = matrix.values
    for (i, j), value in zip(pairs, _fill_pairs(roads, pairs, distance, aligned, config, bounds, jobs)):
        values[i, j] = values[j, i] = value
    extended = DistanceMatrix(
        ids=tuple(matrix.ids) + tuple(g.id for g in roads[n:]),
        values=values,
        distance=distance,
        aligned=aligned,
        evaluations=matrix.evaluations + len(pairs),
    )
    return extended, len(pairs)


def matrix_from_function(
    items: Sequence, ids: Sequence[str], func: Callable[[object, object], float]
) -> DistanceMatrix:
    """Distance matrix of arbitrary items under a symmetric ``func``."""
    n = len(items)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = func(items[i], items[j])
    return DistanceMatrix(ids=tuple(ids), values=values, evaluations=n * (n - 1) // 2)


DISTANCE_IDS: Dict[str, PairwiseDistanceId] = {d.value: d for d in PairwiseDistanceId}
