"""
Test roaddiv package exports.
"""

from roaddiv import (
    __version__,
    DistanceMatrix,
    DiversityMeasureId,
    RoadDiversityException,
    RoadGeometry,
    RunConfig,
    StudyContext,
    all_measures,
    compute_catalogue,
)


def test_version():
    """Package __version__ is defined and matches a semver-like shape."""
    import re
    assert __version__
    assert re.match(r"^\d+\.\d+\.\d+", __version__), __version__


def test_core_types_exported():
    assert RoadGeometry is not None
    assert DistanceMatrix is not None
    assert DiversityMeasureId is not None
    assert StudyContext is not None
    assert RunConfig is not None


def test_catalogue_exported():
    assert callable(compute_catalogue)
    assert len(all_measures()) == 47


def test_exceptions_exported():
    assert issubclass(RoadDiversityException, Exception)
