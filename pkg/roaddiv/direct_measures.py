"""
Diversity measures computed directly on a suite: test set diameter
(compression-based) and the convex hull of all road curves.
"""

from __future__ import annotations

import bz2
import logging
import lzma
import math
import zlib
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from .exceptions import CompressorFailure
from .geometry import (
    RoadGeometry,
    convex_hull_area,
    convex_hull_vertices,
    resample_uniform,
    rotate_points,
)
from .models import DirectMeasureId, DiversityMeasureId, DiversityValue

logger = logging.getLogger(__name__)

TEST_SET_DIAMETER = DiversityMeasureId(direct=DirectMeasureId.TEST_SET_DIAMETER)
CONVEX_HULL = DiversityMeasureId(direct=DirectMeasureId.CONVEX_HULL)

_COMPRESSORS: Dict[str, Callable[[bytes], bytes]] = {
    "zlib": lambda data: zlib.compress(data, 9),
    "bz2": lambda data: bz2.compress(data, compresslevel=9),
    "lzma": lambda data: lzma.compress(data, preset=9),
}


def compressed_size(data: bytes, codec: str = "zlib") -> int:
    compressor = _COMPRESSORS.get(codec)
    if compressor is None:
        raise CompressorFailure(f"unknown codec {codec!r}", codec)
    try:
        return len(compressor(data))
    except (zlib.error, lzma.LZMAError, ValueError, MemoryError, OSError) as exc:
        raise CompressorFailure(f"{codec} failed on {len(data)} bytes: {exc}", codec) from exc


def canonical_points(g: RoadGeometry) -> np.ndarray:
    """
    ``g`` translated so it starts at the origin and rotated so its
    start-to-end chord points along +x (first segment for closed roads).
    """
    points = g.points - g.points[0]
    chord = points[-1]
    if math.hypot(*chord) <= 1e-9:
        chord = points[1]
    return rotate_points(points, -math.atan2(chord[1], chord[0]))


def serialize_road(g: RoadGeometry, n: int = 100) -> bytes:
    """Canonical text form: 100 canonically placed points, 3 decimals, one per line."""
    points = np.round(canonical_points(resample_uniform(g, n)), 3) + 0.0
    return "".join(f"{x:.3f} {y:.3f}\n" for x, y in points).encode("ascii")


def _sorted_payloads(suite: Sequence[RoadGeometry], n: int) -> list:
    payloads = [(g.id, serialize_road(g, n)) for g in suite]
    payloads.sort(key=lambda item: (item[0], item[1]))
    return [payload for _, payload in payloads]


def test_set_diameter(
    suite: Sequence[RoadGeometry], codec: str = "zlib", resample_points: int = 100
) -> DiversityValue:
    """
    Normalized compression distance for multisets:
    (C(X) - min_x C(X without x)) / max_x C(X without x), with X the
    concatenation of the serialized roads sorted by id.
    """
    if len(suite) < 2:
        raise ValueError("test set diameter needs at least 2 roads")
    payloads = _sorted_payloads(suite, resample_points)
    whole = compressed_size(b"".join(payloads), codec)
    leave_one_out = [
        compressed_size(b"".join(payloads[:i] + payloads[i + 1 :]), codec)
        for i in range(len(payloads))
    ]
    value = (whole - min(leave_one_out)) / max(leave_one_out)
    if value < 0:
        logger.debug("NCD below zero (%.6f) clamped to 0", value)
        value = 0.0
    return DiversityValue(measure=TEST_SET_DIAMETER, value=float(value), codec=codec)


# not a test when imported into test modules
test_set_diameter.__test__ = False


def _hull_inputs(suite: Sequence[RoadGeometry], align: bool):
    return [canonical_points(g) if align else g.points for g in suite]


def convex_hull_diversity(suite: Sequence[RoadGeometry], align: bool = True) -> DiversityValue:
    """Convex hull area (m^2) of the union of all road points."""
    if len(suite) < 1:
        raise ValueError("convex hull diversity needs at least 1 road")
    area = convex_hull_area(_hull_inputs(suite, align))
    return DiversityValue(measure=CONVEX_HULL, value=area, aligned=align)


def incremental_convex_hull(
    previous_vertices: np.ndarray, added: Sequence[RoadGeometry], align: bool = True
) -> Tuple[float, np.ndarray]:
    """
    Update a suite hull with new roads from the previous hull vertices only.
    Returns the new area and hull vertices.
    """
    point_sets = [np.asarray(previous_vertices, dtype=float).reshape(-1, 2)]
    point_sets.extend(_hull_inputs(added, align))
    return convex_hull_area(point_sets), convex_hull_vertices(point_sets)


def suite_hull_vertices(suite: Sequence[RoadGeometry], align: bool = True) -> np.ndarray:
    return convex_hull_vertices(_hull_inputs(suite, align))


def direct_measure(
    measure: DirectMeasureId,
    suite: Sequence[RoadGeometry],
    codec: str = "zlib",
    resample_points: int = 100,
    align: bool = True,
) -> DiversityValue:
    if measure is DirectMeasureId.TEST_SET_DIAMETER:
        return test_set_diameter(suite, codec, resample_points)
    return convex_hull_diversity(suite, align)
