"""
Result persistence: experiment records, correlation tables and the
provenance manifest written next to them.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, Field

from .config import RunConfig, save_run_config
from .correlation import CORRELATION_COLUMNS, correlations_frame
from .corpus import file_checksum
from .exceptions import ResultsIOError
from .models import CorrelationResult, ExperimentRecord
from .study import summarize_records

logger = logging.getLogger(__name__)

RECORDS_FILENAME = "records.csv"
SUMMARY_FILENAME = "summary.csv"
CORRELATIONS_CSV = "correlations.csv"
CORRELATIONS_JSON = "correlations.json"
DM_TABLE_FILENAME = "dm_table.csv"
BD_TABLE_FILENAME = "bd_table.csv"
RUN_CONFIG_FILENAME = "run_config.yaml"
MANIFEST_FILENAME = "manifest.json"

PROVENANCE_COLUMNS = ["seed", "config_hash", "codec", "tool_version"]
RECORD_COLUMNS = [
    "experiment",
    "suite_id",
    "measure",
    "alignment",
    "suite_size",
    "before",
    "after",
    "delta",
    "wall_time",
    "parameters",
] + PROVENANCE_COLUMNS


class Provenance(BaseModel):
    seed: int
    config_hash: str
    codec: str
    tool_version: str

    @classmethod
    def from_config(cls, config: RunConfig) -> "Provenance":
        from . import __version__

        return cls(
            seed=config.seed,
            config_hash=config.config_hash(),
            codec=config.catalogue.codec,
            tool_version=__version__,
        )


class ResultsManifest(BaseModel):
    """Files of one result set with their checksums and provenance."""

    provenance: Provenance
    files: Dict[str, str] = Field(default_factory=dict, description="file name -> sha256")
    record_count: int = 0
    correlation_count: int = 0


def _record_row(record: ExperimentRecord) -> Dict:
    row = record.model_dump(mode="json", exclude={"parameters"})
    row["parameters"] = json.dumps(record.parameters, sort_keys=True, separators=(",", ":"))
    return row


def records_table(records: Sequence[ExperimentRecord], provenance: Provenance) -> pd.DataFrame:
    frame = pd.DataFrame([_record_row(record) for record in records], columns=RECORD_COLUMNS)
    for key, value in provenance.model_dump().items():
        frame[key] = value
    if not frame.empty:
        frame = frame.sort_values(
            ["experiment", "suite_id", "measure", "alignment", "parameters"], kind="mergesort"
        )
    return frame[RECORD_COLUMNS]


def _with_provenance(frame: pd.DataFrame, provenance: Provenance) -> pd.DataFrame:
    frame = frame.copy()
    for key, value in provenance.model_dump().items():
        frame[key] = value
    return frame


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n")


def write_results(
    out_dir: Union[str, Path],
    records: Sequence[ExperimentRecord],
    correlations: Optional[Mapping[str, Sequence[CorrelationResult]]] = None,
    config: Optional[RunConfig] = None,
    dm_table: Optional[pd.DataFrame] = None,
    bd_table: Optional[pd.DataFrame] = None,
) -> ResultsManifest:
    """
    Write records, their summary, correlation tables (CSV and JSON), the
    diversity tables when given, the run config and a manifest. Every table
    carries seed, config hash, codec and tool version columns.
    """
    config = config or RunConfig()
    correlations = correlations or {}
    provenance = Provenance.from_config(config)
    directory = Path(out_dir)
    written: List[str] = []
    try:
        directory.mkdir(parents=True, exist_ok=True)

        _write_csv(records_table(records, provenance), directory / RECORDS_FILENAME)
        written.append(RECORDS_FILENAME)
        _write_csv(
            _with_provenance(summarize_records(records), provenance), directory / SUMMARY_FILENAME
        )
        written.append(SUMMARY_FILENAME)

        frames = []
        for experiment in sorted(correlations):
            frame = correlations_frame(correlations[experiment])
            frame.insert(0, "experiment", experiment)
            frames.append(frame)
        table = (
            pd.concat(frames, ignore_index=True)
            if frames
            else pd.DataFrame(columns=["experiment"] + CORRELATION_COLUMNS)
        )
        _write_csv(_with_provenance(table, provenance), directory / CORRELATIONS_CSV)
        written.append(CORRELATIONS_CSV)

        document = {
            "provenance": provenance.model_dump(),
            "experiments": {
                experiment: [result.model_dump(mode="json") for result in correlations[experiment]]
                for experiment in sorted(correlations)
            },
        }
        (directory / CORRELATIONS_JSON).write_text(
            json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written.append(CORRELATIONS_JSON)

        for frame, name in ((dm_table, DM_TABLE_FILENAME), (bd_table, BD_TABLE_FILENAME)):
            if frame is not None:
                _write_csv(_with_provenance(frame, provenance), directory / name)
                written.append(name)

        save_run_config(config, directory / RUN_CONFIG_FILENAME)
        written.append(RUN_CONFIG_FILENAME)

        manifest = ResultsManifest(
            provenance=provenance,
            files={name: file_checksum(directory / name) for name in written},
            record_count=len(records),
            correlation_count=sum(len(results) for results in correlations.values()),
        )
        (directory / MANIFEST_FILENAME).write_text(
            manifest.model_dump_json(indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise ResultsIOError(f"could not write results to {directory}: {exc}", str(directory)) from exc

    logger.info("Wrote %d records and %d files to %s", len(records), len(written), directory)
    return manifest


def _optional(value) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


def read_records(path: Union[str, Path]) -> List[ExperimentRecord]:
    """Load a records table written by ``write_results`` (file or result directory)."""
    file_path = Path(path)
    if file_path.is_dir():
        file_path = file_path / RECORDS_FILENAME
    try:
        frame = pd.read_csv(
            file_path,
            dtype={"suite_id": str, "measure": str, "parameters": str},
            float_precision="round_trip",
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ResultsIOError(f"could not read records from {file_path}: {exc}", str(file_path)) from exc
    missing = [column for column in RECORD_COLUMNS if column not in frame.columns]
    if missing:
        raise ResultsIOError(f"{file_path}: missing columns {missing}", str(file_path))

    records = []
    for row in frame.to_dict(orient="records"):
        records.append(
            ExperimentRecord(
                experiment=row["experiment"],
                suite_id=row["suite_id"],
                measure=row["measure"],
                before=_optional(row["before"]),
                after=_optional(row["after"]),
                delta=_optional(row["delta"]),
                wall_time=float(row["wall_time"]),
                suite_size=int(row["suite_size"]),
                alignment=row["alignment"],
                parameters=json.loads(row["parameters"]),
            )
        )
    return records
