"""
Custom exceptions for roaddiv.
"""

from typing import Optional, Sequence


class RoadDiversityException(Exception):
    """Base exception for all roaddiv errors."""

    pass


class DegenerateRoad(RoadDiversityException):
    """
    Raised when a road cannot support the requested geometric operation.

    This can occur due to:
    - Fewer usable points than the operation needs
    - Repeated consecutive points (zero-length segments)
    - A road shorter than the requested frame or resolution
    """

    def __init__(self, message: str, road_id: Optional[str] = None):
        super().__init__(message)
        self.road_id = road_id


class NonFiniteGeometry(DegenerateRoad):
    """Raised when interpolation or input data yields NaN or infinite coordinates."""


class ShapeMismatch(RoadDiversityException):
    """
    Raised when two roads must share a point count and do not.

    Point-wise distances and Procrustes alignment pair points by index.
    """

    def __init__(self, message: str, left: Optional[int] = None, right: Optional[int] = None):
        super().__init__(message)
        self.left = left
        self.right = right


class EmptySegments(RoadDiversityException):
    """Raised when a road yields an empty segment multiset."""

    def __init__(self, message: str, road_id: Optional[str] = None):
        super().__init__(message)
        self.road_id = road_id


class BadNormalization(RoadDiversityException):
    """Raised in strict mode when a normalization bound has max == min."""

    def __init__(self, message: str, dimension: Optional[int] = None):
        super().__init__(message)
        self.dimension = dimension


class CompressorFailure(RoadDiversityException):
    """Raised when the configured byte-stream codec fails."""

    def __init__(self, message: str, codec: Optional[str] = None):
        super().__init__(message)
        self.codec = codec


class RoadMismatch(RoadDiversityException):
    """Raised when a trace is checked against a road with another id."""

    def __init__(
        self,
        message: str,
        trace_road_id: Optional[str] = None,
        road_id: Optional[str] = None,
    ):
        super().__init__(message)
        self.trace_road_id = trace_road_id
        self.road_id = road_id


class ProjectionFailure(RoadDiversityException):
    """Raised when a trace position lies too far from the road to project."""

    def __init__(
        self,
        message: str,
        index: Optional[int] = None,
        distance: Optional[float] = None,
    ):
        super().__init__(message)
        self.index = index
        self.distance = distance


class MixedAgents(RoadDiversityException):
    """Raised when one behavioral diversity computation mixes agents."""

    def __init__(self, message: str, agents: Sequence[str] = ()):
        super().__init__(message)
        self.agents = list(agents)


class PairwiseDistanceError(RoadDiversityException):
    """
    Raised when a single pair fails while filling a distance matrix.

    The original error is chained as ``__cause__``.
    """

    def __init__(
        self,
        message: str,
        i: Optional[int] = None,
        j: Optional[int] = None,
        distance: Optional[str] = None,
    ):
        super().__init__(message)
        self.i = i
        self.j = j
        self.distance = distance


class PoolTooSmall(RoadDiversityException):
    """Raised when a sampling pool cannot supply a suite of the requested size."""

    def __init__(
        self,
        message: str,
        required: Optional[int] = None,
        available: Optional[int] = None,
    ):
        super().__init__(message)
        self.required = required
        self.available = available


class DegenerateInput(RoadDiversityException):
    """Raised when a correlation input is constant or too short."""

    def __init__(self, message: str, label: Optional[str] = None):
        super().__init__(message)
        self.label = label


class PropertyViolation(RoadDiversityException):
    """Raised when a diversity measure breaks a property it is guaranteed to hold."""

    def __init__(
        self,
        message: str,
        measure: Optional[str] = None,
        experiment: Optional[str] = None,
    ):
        super().__init__(message)
        self.measure = measure
        self.experiment = experiment


class ParseError(RoadDiversityException):
    """
    Raised when a corpus file cannot be parsed.

    ``line`` is the 1-based file line when known.
    """

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.path = path
        self.line = line


class SchemaMismatch(ParseError):
    """Raised when a trace table header does not match the trace schema."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        missing: Sequence[str] = (),
    ):
        super().__init__(message, path=path)
        self.missing = list(missing)


class EmptyCorpus(RoadDiversityException):
    """Raised when a road document holds no roads."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path


class ResultsIOError(RoadDiversityException):
    """Raised when result artifacts cannot be written or read back."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path
