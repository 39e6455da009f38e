"""
Road geometry: interpolation, resampling, alignment and the geometric
derivatives the distance functions and direct measures work on.

All functions are pure. ``RoadGeometry`` holds read-only numpy arrays and is
safe to share between worker processes.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from shapely.geometry import LineString, MultiPoint

from .exceptions import DegenerateRoad, NonFiniteGeometry, ShapeMismatch
from .models import ControlPointRoad, NormalizationBounds

logger = logging.getLogger(__name__)

DEFAULT_RESAMPLE_POINTS = 100
DENSE_FACTOR = 10
MIN_SEGMENT_LENGTH = 1e-12


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True, order="C")
    array.setflags(write=False)
    return array


def _wrap_angle(delta: np.ndarray) -> np.ndarray:
    """Wrap to (-pi, pi]; +-pi both map to +pi."""
    return -np.mod(-delta + np.pi, 2.0 * np.pi) + np.pi


@dataclass(frozen=True, eq=False)
class RoadGeometry:
    """A resampled planar polyline with its cumulative arclength."""

    id: str
    points: np.ndarray
    cum_arclength: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _readonly(self.points))
        object.__setattr__(self, "cum_arclength", _readonly(self.cum_arclength))
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise DegenerateRoad(f"road {self.id}: points must be an (n, 2) array", self.id)
        if len(self.points) < 3:
            raise DegenerateRoad(
                f"road {self.id}: need at least 3 points, got {len(self.points)}", self.id
            )
        if len(self.cum_arclength) != len(self.points):
            raise DegenerateRoad(f"road {self.id}: arclength/point count mismatch", self.id)
        if self.cum_arclength[0] != 0.0 or np.any(np.diff(self.cum_arclength) <= 0):
            raise DegenerateRoad(
                f"road {self.id}: arclength must start at 0 and strictly increase", self.id
            )

    @classmethod
    def from_points(cls, road_id: str, points: Sequence[Sequence[float]]) -> "RoadGeometry":
        array = np.asarray(points, dtype=float)
        if array.ndim != 2 or array.shape[-1] != 2:
            raise DegenerateRoad(f"road {road_id}: points must be (x, y) pairs", road_id)
        if not np.all(np.isfinite(array)):
            raise NonFiniteGeometry(f"road {road_id}: non-finite coordinates", road_id)
        steps = np.hypot(*np.diff(array, axis=0).T)
        if np.any(steps <= MIN_SEGMENT_LENGTH):
            index = int(np.argmax(steps <= MIN_SEGMENT_LENGTH))
            raise DegenerateRoad(
                f"road {road_id}: repeated points at index {index}", road_id
            )
        cum = np.concatenate([[0.0], np.cumsum(steps)])
        return cls(road_id, array, cum)

    @property
    def length(self) -> float:
        return float(self.cum_arclength[-1])

    @property
    def n_points(self) -> int:
        return len(self.points)

    def with_points(self, points: np.ndarray) -> "RoadGeometry":
        return RoadGeometry.from_points(self.id, points)


@dataclass(frozen=True, eq=False)
class AngleSequence:
    """Signed heading change at each interior vertex, in (-pi, pi]."""

    angles: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "angles", _readonly(self.angles))

    def __len__(self) -> int:
        return len(self.angles)


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    kappa: np.ndarray
    s: np.ndarray
    dkappa_ds: np.ndarray

    def __post_init__(self) -> None:
        for name in ("kappa", "s", "dkappa_ds"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class SegmentSet:
    """Multiset of (length bucket, turn bucket) pairs, one per road segment."""

    segments: Counter

    @property
    def size(self) -> int:
        return sum(self.segments.values())

    def jaccard_similarity(self, other: "SegmentSet") -> float:
        union = sum((self.segments | other.segments).values())
        if union == 0:
            return 1.0
        return sum((self.segments & other.segments).values()) / union


class ComplexityVector(NamedTuple):
    mean_abs_kappa: float
    max_abs_kappa: float
    mean_abs_dkappa: float
    max_abs_dkappa: float


class RoadFeatureVector(NamedTuple):
    total_length: float
    min_radius: float
    mean_abs_curvature: float
    max_abs_curvature: float
    direction_coverage: float
    turn_count: float
    std_heading_change: float


FEATURE_NAMES: Tuple[str, ...] = RoadFeatureVector._fields


def interpolate_road(road: ControlPointRoad, spacing: float = 1.0) -> RoadGeometry:
    """
    Interpolate a control-point road with a natural cubic spline and resample
    it at roughly ``spacing`` meters.

    The spline is parameterized by chord length and sampled densely
    (``DENSE_FACTOR`` x the target density) before arclength resampling. The
    output passes through the first and last control points exactly.
    Pre-interpolated roads skip the spline and are only resampled.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    control = np.asarray(road.control_points, dtype=float)
    if len(control) < 2:
        raise DegenerateRoad(f"road {road.id}: fewer than 2 control points", road.id)
    if not np.all(np.isfinite(control)):
        raise NonFiniteGeometry(f"road {road.id}: non-finite control points", road.id)

    if road.interpolated:
        if len(control) < 3:
            control = np.linspace(control[0], control[-1], 3)
        geometry = RoadGeometry.from_points(road.id, control)
        return resample_uniform(geometry, max(3, int(round(geometry.length / spacing)) + 1))

    chord = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(control, axis=0).T))])
    if np.any(np.diff(chord) <= MIN_SEGMENT_LENGTH):
        raise DegenerateRoad(f"road {road.id}: repeated control points", road.id)

    n_dense = max(int(math.ceil(chord[-1] / spacing)) * DENSE_FACTOR, 20) + 1
    t = np.linspace(0.0, chord[-1], n_dense)
    if len(control) == 2:
        dense = control[0] + np.outer(t / chord[-1], control[1] - control[0])
    else:
        spline = CubicSpline(chord, control, bc_type="natural", axis=0)
        dense = spline(t)
    if not np.all(np.isfinite(dense)):
        raise NonFiniteGeometry(f"road {road.id}: spline produced non-finite values", road.id)
    dense[0], dense[-1] = control[0], control[-1]

    steps = np.hypot(*np.diff(dense, axis=0).T)
    keep = np.concatenate([[True], steps > MIN_SEGMENT_LENGTH])
    dense = dense[keep]
    s = np.concatenate([[0.0], np.cumsum(steps[keep[1:]])])
    total = s[-1]
    if total <= 1e-6:
        raise DegenerateRoad(f"road {road.id}: zero-length road", road.id)

    n = max(3, int(round(total / spacing)) + 1)
    targets = np.linspace(0.0, total, n)
    points = np.column_stack([np.interp(targets, s, dense[:, 0]), np.interp(targets, s, dense[:, 1])])
    points[0], points[-1] = control[0], control[-1]
    return RoadGeometry.from_points(road.id, points)


def resample_uniform(g: RoadGeometry, n: int = DEFAULT_RESAMPLE_POINTS) -> RoadGeometry:
    """Resample ``g`` to ``n`` points at equal arclength intervals."""
    if n < 3:
        raise ValueError(f"resampling needs n >= 3, got {n}")
    if g.length < 1e-6:
        raise DegenerateRoad(f"road {g.id}: too short to resample", g.id)
    targets = np.linspace(0.0, g.length, n)
    points = np.column_stack(
        [
            np.interp(targets, g.cum_arclength, g.points[:, 0]),
            np.interp(targets, g.cum_arclength, g.points[:, 1]),
        ]
    )
    points[0], points[-1] = g.points[0], g.points[-1]
    return g.with_points(points)


def _headings(g: RoadGeometry) -> np.ndarray:
    deltas = np.diff(g.points, axis=0)
    if np.any(np.hypot(*deltas.T) <= MIN_SEGMENT_LENGTH):
        raise DegenerateRoad(f"road {g.id}: repeated points", g.id)
    return np.arctan2(deltas[:, 1], deltas[:, 0])


def turning_angles(g: RoadGeometry) -> AngleSequence:
    return AngleSequence(_wrap_angle(np.diff(_headings(g))))


def curvature_profile(g: RoadGeometry) -> CurvatureProfile:
    """
    Signed Menger curvature at every interior point (left turns positive)
    and its forward-difference derivative over arclength.
    """
    p0, p1, p2 = g.points[:-2], g.points[1:-1], g.points[2:]
    u, v = p1 - p0, p2 - p1
    a = np.hypot(*u.T)
    b = np.hypot(*v.T)
    c = np.hypot(*(p2 - p0).T)
    if np.any(a * b * c <= MIN_SEGMENT_LENGTH):
        index = int(np.argmax(a * b * c <= MIN_SEGMENT_LENGTH))
        raise DegenerateRoad(f"road {g.id}: degenerate point triplet at {index + 1}", g.id)
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    kappa = 2.0 * cross / (a * b * c)
    s = g.cum_arclength[1:-1]
    dkappa = np.diff(kappa) / np.diff(s)
    return CurvatureProfile(kappa, s, dkappa)


def rotate_points(points: np.ndarray, angle: float, origin: Optional[np.ndarray] = None) -> np.ndarray:
    origin = np.zeros(2) if origin is None else np.asarray(origin, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    rotation = np.array([[c, -s], [s, c]])
    return (np.asarray(points, dtype=float) - origin) @ rotation.T + origin


def rigid_motion(g: RoadGeometry, angle: float, offset: Sequence[float] = (0.0, 0.0)) -> RoadGeometry:
    """Rotate ``g`` about the origin by ``angle`` and translate it by ``offset``."""
    return g.with_points(rotate_points(g.points, angle) + np.asarray(offset, dtype=float))


def procrustes_rotation(reference: RoadGeometry, other: RoadGeometry) -> float:
    """
    Rotation angle about the start point that best maps ``other`` onto
    ``reference`` once both starts coincide (least squares over points).
    """
    if reference.n_points != other.n_points:
        raise ShapeMismatch(
            f"cannot align {other.id} ({other.n_points} points) onto "
            f"{reference.id} ({reference.n_points} points)",
            reference.n_points,
            other.n_points,
        )
    a = reference.points - reference.points[0]
    b = other.points - other.points[0]
    cross = float(np.sum(b[:, 0] * a[:, 1] - b[:, 1] * a[:, 0]))
    dot = float(np.sum(b[:, 0] * a[:, 0] + b[:, 1] * a[:, 1]))
    return math.atan2(cross, dot)


def procrustes_align(reference: RoadGeometry, other: RoadGeometry) -> RoadGeometry:
    """Translate ``other`` onto the start of ``reference`` and rotate it about that point."""
    angle = procrustes_rotation(reference, other)
    start = reference.points[0]
    offset = start - other.points[0]
    moved = other.points + offset if np.any(offset) else other.points
    if angle == 0.0:
        return other.with_points(moved)
    return other.with_points(rotate_points(moved, angle, origin=start))


def segment_set(
    g: RoadGeometry,
    length_buckets: int = 10,
    turn_buckets: int = 18,
    segment_spacing: float = 5.0,
) -> SegmentSet:
    """
    Quantize each segment by its length and the heading change at its start
    vertex (the first segment uses the change at its end vertex).

    Lengths are bucketed over [0, 2 x segment_spacing] with overflow in the
    last bucket; turns over (-pi, pi].
    """
    if length_buckets < 1 or turn_buckets < 1:
        raise ValueError("bucket counts must be >= 1")
    lengths = np.diff(g.cum_arclength)
    angles = turning_angles(g).angles
    turns = np.concatenate([angles[:1], angles])
    turns = np.where(np.abs(turns) < 1e-9, 0.0, turns)

    length_width = 2.0 * segment_spacing / length_buckets
    length_index = np.floor(np.round(lengths / length_width, 9)).astype(int)
    length_index = np.clip(length_index, 0, length_buckets - 1)

    turn_width = 2.0 * np.pi / turn_buckets
    turn_index = np.floor(np.round((turns + np.pi) / turn_width, 9)).astype(int)
    turn_index = np.clip(turn_index, 0, turn_buckets - 1)

    return SegmentSet(Counter(zip(length_index.tolist(), turn_index.tolist())))


def _frame_edges(length: float, frame_length: float) -> np.ndarray:
    full = int(math.floor(length / frame_length))
    remainder = length - full * frame_length
    if full == 0:
        return np.array([0.0, length])
    if remainder >= frame_length / 2.0:
        return np.concatenate([np.arange(full + 1) * frame_length, [length]])
    edges = np.arange(full + 1) * frame_length
    edges[-1] = length
    return edges


def complexity_frames(g: RoadGeometry, frame_length: float = 20.0) -> List[ComplexityVector]:
    """
    Split ``g`` into consecutive arclength frames and summarize curvature
    and curvature change in each.

    A trailing piece shorter than half a frame is merged into the previous
    frame. Curvature samples sit at interior points; each derivative sample
    belongs to the frame of its right-hand point.
    """
    if frame_length <= 0:
        raise ValueError("frame_length must be positive")
    if g.length < frame_length / 2.0:
        raise DegenerateRoad(
            f"road {g.id}: length {g.length:.3f} m is below half a frame ({frame_length} m)",
            g.id,
        )
    edges = _frame_edges(g.length, frame_length)
    n_frames = len(edges) - 1
    profile = curvature_profile(g)
    abs_kappa = np.abs(profile.kappa)
    abs_dkappa = np.abs(profile.dkappa_ds)

    def frame_of(positions: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(edges, positions, side="right") - 1, 0, n_frames - 1)

    kappa_frames = frame_of(profile.s)
    dkappa_frames = frame_of(profile.s[1:])

    frames = []
    for index in range(n_frames):
        k = abs_kappa[kappa_frames == index]
        dk = abs_dkappa[dkappa_frames == index]
        frames.append(
            ComplexityVector(
                float(k.mean()) if k.size else 0.0,
                float(k.max()) if k.size else 0.0,
                float(dk.mean()) if dk.size else 0.0,
                float(dk.max()) if dk.size else 0.0,
            )
        )
    return frames


def road_feature_vector(g: RoadGeometry, turn_threshold: float = 0.005) -> RoadFeatureVector:
    """
    The seven scalar road features used by the Manhattan feature distance.

    Direction coverage counts occupied 10 degree bins of the heading measured
    relative to the road's initial heading, so it does not depend on how the
    road is placed on the map.
    """
    kappa = curvature_profile(g).kappa
    abs_kappa = np.abs(kappa)
    max_abs = float(abs_kappa.max()) if abs_kappa.size else 0.0
    min_radius = 1000.0 if max_abs == 0.0 else float(np.clip(1.0 / max_abs, 1.0, 1000.0))

    angles = turning_angles(g).angles
    relative = np.degrees(np.concatenate([[0.0], np.cumsum(angles)]))
    bins = np.floor(np.mod(np.round(relative, 9), 360.0) / 10.0).astype(int) % 36
    coverage = len(np.unique(bins))

    turning = kappa[abs_kappa > turn_threshold]
    turn_count = int(np.count_nonzero(np.diff(np.sign(turning)))) if turning.size else 0

    return RoadFeatureVector(
        total_length=g.length,
        min_radius=min_radius,
        mean_abs_curvature=float(abs_kappa.mean()) if abs_kappa.size else 0.0,
        max_abs_curvature=max_abs,
        direction_coverage=float(coverage),
        turn_count=float(turn_count),
        std_heading_change=float(np.std(angles)) if angles.size else 0.0,
    )


def feature_bounds(
    vectors: Iterable[Sequence[float]], labels: Sequence[str] = FEATURE_NAMES
) -> NormalizationBounds:
    """Per-dimension min/max over a corpus of feature vectors."""
    matrix = np.asarray([tuple(vector) for vector in vectors], dtype=float)
    if matrix.ndim != 2 or len(matrix) == 0:
        raise ValueError("feature_bounds needs at least one vector")
    if labels and len(labels) != matrix.shape[1]:
        labels = ()
    return NormalizationBounds(
        lower=tuple(float(v) for v in matrix.min(axis=0)),
        upper=tuple(float(v) for v in matrix.max(axis=0)),
        labels=tuple(labels),
    )


def convex_hull_area(point_sets: Iterable[np.ndarray]) -> float:
    """Area of the convex hull of the union of all points; 0 when degenerate."""
    arrays = [np.asarray(points, dtype=float).reshape(-1, 2) for points in point_sets]
    arrays = [array for array in arrays if len(array)]
    if not arrays:
        return 0.0
    unique = np.unique(np.vstack(arrays), axis=0)
    if len(unique) < 3:
        return 0.0
    return float(MultiPoint(unique).convex_hull.area)


def convex_hull_vertices(point_sets: Iterable[np.ndarray]) -> np.ndarray:
    """Vertices of the union's convex hull (all unique points when degenerate)."""
    arrays = [np.asarray(points, dtype=float).reshape(-1, 2) for points in point_sets]
    arrays = [array for array in arrays if len(array)]
    if not arrays:
        return np.empty((0, 2))
    unique = np.unique(np.vstack(arrays), axis=0)
    if len(unique) < 3:
        return unique
    hull = MultiPoint(unique).convex_hull
    if hull.geom_type == "Polygon":
        return np.asarray(hull.exterior.coords)[:-1]
    return np.asarray(hull.coords)


def self_intersects(g: RoadGeometry) -> bool:
    """True iff any two non-adjacent segments touch or cross."""
    if g.n_points >= 4 and np.array_equal(g.points[0], g.points[-1]):
        return True
    return not LineString(g.points).is_simple


def geometry_digest(g: RoadGeometry) -> str:
    """SHA-256 over the exact point coordinates; equal digests mean identical geometry."""
    return hashlib.sha256(np.ascontiguousarray(g.points, dtype="<f8").tobytes()).hexdigest()
