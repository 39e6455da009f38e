"""
Corpus ingestion: road documents, trace tables and the corpus manifest.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from .behavior import TRACE_FIELDS, SimulationTrace
from .exceptions import (
    DegenerateRoad,
    EmptyCorpus,
    ParseError,
    ResultsIOError,
    SchemaMismatch,
)
from .geometry import curvature_profile, interpolate_road, self_intersects
from .models import (
    ControlPointRoad,
    CorpusManifest,
    CorpusValidationReport,
    ValidationIssue,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
ROADS_FILENAME = "roads.json"
TRACES_FILENAME = "traces.csv"
MANIFEST_FILENAME = "manifest.json"
TRACE_COLUMNS: Tuple[str, ...] = ("road_id", "agent_id") + TRACE_FIELDS


def file_checksum(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _parse_document(path: Path) -> Any:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}: {exc.msg}", str(path), exc.lineno) from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(f"{path}:{line}: not a valid road document", str(path), line) from exc


def _road_entries(document: Any, path: Path) -> List[Any]:
    if document is None:
        return []
    if isinstance(document, list):
        return document
    if isinstance(document, dict):
        version = document.get("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise ParseError(f"{path}: unsupported format_version {version}", str(path))
        roads = document.get("roads") or []
        if not isinstance(roads, list):
            raise ParseError(f"{path}: 'roads' must be a list", str(path))
        return roads
    raise ParseError(f"{path}: expected a list of roads or a mapping with 'roads'", str(path))


def _road_from_entry(entry: Any, index: int) -> ControlPointRoad:
    if not isinstance(entry, dict):
        raise ValueError(f"entry {index} is not a mapping")
    data = dict(entry)
    if "road_points" in data:
        if "control_points" in data:
            raise ValueError("give either control_points or road_points, not both")
        data["control_points"] = data.pop("road_points")
        data["interpolated"] = True
    if "id" in data:
        data["id"] = str(data["id"])
    return ControlPointRoad.model_validate(data)


def _entry_id(entry: Any, index: int) -> str:
    if isinstance(entry, dict) and entry.get("id") is not None:
        return str(entry["id"])
    return f"#{index}"


def _verify_manifest(path: Path, entries: int) -> None:
    manifest_path = path.parent / MANIFEST_FILENAME
    if not manifest_path.exists():
        return
    manifest = load_manifest(manifest_path)
    if Path(manifest.roads_path).name != path.name:
        return
    if manifest.road_count != entries:
        raise ParseError(
            f"{path}: manifest lists {manifest.road_count} roads, file has {entries}", str(path)
        )
    if manifest.checksum != file_checksum(path):
        raise ParseError(f"{path}: checksum does not match {manifest_path}", str(path))
    logger.debug("Verified %s against %s", path, manifest_path)


def load_roads(
    path: Union[str, Path], spacing: float = 1.0, min_turn_radius: float = 10.0
) -> Tuple[List[ControlPointRoad], CorpusValidationReport]:
    """
    Load and validate a road document (JSON or YAML).

    Every entry is checked (model invariants, interpolation,
    self-intersection); failing entries are excluded and listed in the
    report with a reason. Loaded roads tighter than ``min_turn_radius`` are
    flagged in ``sharp_turns`` but kept.
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ParseError(f"road file not found: {file_path}", str(file_path))
    entries = _road_entries(_parse_document(file_path), file_path)
    if not entries:
        raise EmptyCorpus(f"{file_path}: no roads", str(file_path))
    _verify_manifest(file_path, len(entries))

    report = CorpusValidationReport(path=str(file_path))
    roads: List[ControlPointRoad] = []
    seen = set()
    for index, entry in enumerate(entries):
        item_id = _entry_id(entry, index)
        try:
            road = _road_from_entry(entry, index)
        except (ValidationError, ValueError, TypeError) as exc:
            report.excluded.append(ValidationIssue(item_id=item_id, reason="invalid", detail=str(exc)))
            continue
        if road.id in seen:
            report.excluded.append(ValidationIssue(item_id=item_id, reason="duplicate_id"))
            continue
        seen.add(road.id)
        try:
            geometry = interpolate_road(road, spacing)
            kappa = curvature_profile(geometry).kappa
        except (DegenerateRoad, ValueError) as exc:
            report.excluded.append(ValidationIssue(item_id=item_id, reason="degenerate", detail=str(exc)))
            continue
        if self_intersects(geometry):
            report.excluded.append(ValidationIssue(item_id=item_id, reason="self_intersection"))
            continue
        max_curvature = float(np.max(np.abs(kappa))) if kappa.size else 0.0
        report.max_curvature[road.id] = max_curvature
        if max_curvature > 1.0 / min_turn_radius:
            report.sharp_turns.append(road.id)
        report.loaded.append(road.id)
        roads.append(road)

    for issue in report.excluded:
        logger.warning("Road %s excluded: %s %s", issue.item_id, issue.reason, issue.detail or "")
    logger.info("Loaded %d of %d roads from %s", len(roads), len(entries), file_path)
    return roads, report


def load_traces(path: Union[str, Path]) -> List[SimulationTrace]:
    """
    Load a trace table with header ``road_id,agent_id,t,x,y,velocity,
    steering,throttle,brake``. Rows are grouped by (road_id, agent_id) and
    the traces come back sorted by that key; within a group rows keep their
    file order and timestamps must increase.
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ParseError(f"trace file not found: {file_path}", str(file_path))
    try:
        frame = pd.read_csv(
            file_path, dtype={"road_id": str, "agent_id": str}, float_precision="round_trip"
        )
    except pd.errors.EmptyDataError as exc:
        raise SchemaMismatch(f"{file_path}: empty trace file", str(file_path), list(TRACE_COLUMNS)) from exc
    except pd.errors.ParserError as exc:
        raise ParseError(f"{file_path}: {exc}", str(file_path)) from exc

    missing = [column for column in TRACE_COLUMNS if column not in frame.columns]
    if missing:
        raise SchemaMismatch(f"{file_path}: missing columns {missing}", str(file_path), missing)

    for column in TRACE_FIELDS:
        try:
            frame[column] = pd.to_numeric(frame[column], errors="raise")
        except (ValueError, TypeError) as exc:
            raise ParseError(f"{file_path}: column {column}: {exc}", str(file_path)) from exc

    traces = []
    for (road_id, agent_id), group in frame.groupby(["road_id", "agent_id"], sort=True):
        t = group["t"].to_numpy(dtype=float)
        steps = np.diff(t)
        if np.any(steps <= 0):
            row = int(group.index[int(np.argmax(steps <= 0)) + 1])
            # header is line 1
            raise ParseError(
                f"{file_path}: timestamps of {road_id}/{agent_id} not increasing at row {row}",
                str(file_path),
                row + 2,
            )
        traces.append(
            SimulationTrace(
                road_id=str(road_id),
                agent_id=str(agent_id),
                **{name: group[name].to_numpy(dtype=float) for name in TRACE_FIELDS},
            )
        )
    logger.info("Loaded %d traces from %s", len(traces), file_path)
    return traces


def load_manifest(path: Union[str, Path]) -> CorpusManifest:
    file_path = Path(path)
    try:
        return CorpusManifest.model_validate_json(file_path.read_text(encoding="utf-8"))
    except (OSError, ValidationError) as exc:
        raise ParseError(f"{file_path}: invalid corpus manifest: {exc}", str(file_path)) from exc


def _road_document(roads: Sequence[ControlPointRoad]) -> Dict[str, Any]:
    entries = []
    for road in roads:
        key = "road_points" if road.interpolated else "control_points"
        entries.append(
            {
                "id": road.id,
                key: [[float(x), float(y)] for x, y in road.control_points],
                "lane_width": road.lane_width,
            }
        )
    return {"format_version": FORMAT_VERSION, "roads": entries}


def traces_frame(traces: Sequence[SimulationTrace]) -> pd.DataFrame:
    frames = []
    for trace in traces:
        data = {name: getattr(trace, name) for name in TRACE_FIELDS}
        frame = pd.DataFrame(data)
        frame.insert(0, "agent_id", trace.agent_id)
        frame.insert(0, "road_id", trace.road_id)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=list(TRACE_COLUMNS))
    return pd.concat(frames, ignore_index=True)[list(TRACE_COLUMNS)]


def write_corpus(
    roads: Sequence[ControlPointRoad],
    traces: Optional[Sequence[SimulationTrace]],
    out_dir: Union[str, Path],
) -> CorpusManifest:
    """Write roads.json, traces.csv (when given) and a manifest with their checksums."""
    directory = Path(out_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        roads_path = directory / ROADS_FILENAME
        roads_path.write_text(
            json.dumps(_road_document(roads), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        traces_path = None
        if traces is not None:
            traces_path = directory / TRACES_FILENAME
            traces_frame(traces).to_csv(traces_path, index=False, lineterminator="\n")
        manifest = CorpusManifest(
            roads_path=ROADS_FILENAME,
            traces_path=TRACES_FILENAME if traces_path is not None else None,
            format_version=FORMAT_VERSION,
            road_count=len(roads),
            checksum=file_checksum(roads_path),
            traces_checksum=file_checksum(traces_path) if traces_path is not None else None,
        )
        (directory / MANIFEST_FILENAME).write_text(
            manifest.model_dump_json(indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise ResultsIOError(f"could not write corpus to {directory}: {exc}", str(directory)) from exc
    logger.info("Wrote %d roads to %s", len(roads), directory)
    return manifest
