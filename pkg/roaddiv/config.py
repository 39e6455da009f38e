"""
roaddiv run configuration models and YAML helpers.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .models import SamplingPlan


DEFAULT_CONFIG_PATH = "roaddiv.yaml"
UNHASHED_KEYS = frozenset({"output_dir", "jobs"})


class RoadDivConfigError(ValueError):
    """Raised when a roaddiv run config is invalid."""


def resolve_env_reference(value: str) -> str:
    """
    Resolve values like '$ENV_VAR' or '${ENV_VAR}' from environment.
    Returns the original value when it is not an env reference.
    """
    if not isinstance(value, str):
        return value
    if value.startswith("${") and value.endswith("}"):
        return os.getenv(value[2:-1], "")
    if value.startswith("$") and len(value) > 1 and " " not in value:
        return os.getenv(value[1:], "")
    return value


class SamplingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sizes: List[int] = Field(default_factory=lambda: [10, 20, 50, 100])
    suites_per_size: int = Field(100, ge=1)
    quantile: float = Field(0.25, gt=0, le=1)
    skip_small_pools: bool = Field(
        False, description="Skip sizes the pool cannot supply instead of failing"
    )


class CatalogueConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spacing: float = Field(1.0, gt=0, description="Interpolation spacing in meters")
    resample_points: int = Field(100, ge=3)
    length_buckets: int = Field(10, ge=1)
    turn_buckets: int = Field(18, ge=1)
    segment_spacing: float = Field(5.0, gt=0, description="Length buckets span [0, 2 x this]")
    frame_length: float = Field(20.0, gt=0)
    angle_bucket_deg: float = Field(5.0, gt=0)
    levenshtein_levels: Optional[List[float]] = Field(
        None, description="Coarse-to-fine bucket sizes in degrees; None = single level"
    )
    turn_threshold: float = Field(0.005, ge=0, description="|kappa| above which turns count")
    codec: Literal["zlib", "bz2", "lzma"] = "zlib"
    weitzman_budget: float = Field(300.0, gt=0, description="Seconds per suite")
    weitzman_exact_max: int = Field(20, ge=1, le=24)
    hull_alignment: bool = True
    dedup_exact: bool = False
    strict_normalization: bool = False

    @field_validator("levenshtein_levels")
    @classmethod
    def validate_levels(cls, levels: Optional[List[float]]) -> Optional[List[float]]:
        if levels is not None and (not levels or any(level <= 0 for level in levels)):
            raise ValueError("levenshtein_levels must be positive bucket sizes")
        return levels


class ExperimentsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    extension_fractions: List[float] = Field(default_factory=lambda: [0.1, 0.2, 0.5, 1.0])
    duplicate_fractions: List[float] = Field(default_factory=lambda: [0.1, 0.2])
    # ints are road counts, floats are fractions of the suite size
    additions: List[Union[int, float]] = Field(default_factory=lambda: [1, 2, 0.1, 0.2])
    growth_sizes: List[int] = Field(default_factory=lambda: [10, 20, 50])
    duplicate_sizes: List[int] = Field(default_factory=lambda: [10])
    efficiency_sizes: List[int] = Field(default_factory=lambda: [10, 20])
    additivity_sizes: List[int] = Field(default_factory=lambda: [10])
    strict_properties: bool = False


class BehaviorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    min_frequency: float = Field(5.0, gt=0)
    max_frequency: float = Field(20.0, gt=0)
    early_fraction: float = Field(0.1, gt=0, le=1)
    min_progress: float = Field(0.5, ge=0, le=1)
    off_road_distance: float = Field(4.0, gt=0)
    max_projection_distance: float = Field(50.0, gt=0)
    method: Literal["entropy", "sum"] = "entropy"


class CorrelationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(0.05, gt=0, lt=1)
    quartile: float = Field(0.25, gt=0, le=0.5)
    min_subset: int = Field(3, ge=3)


class QAConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    min_turn_radius: float = Field(10.0, gt=0, description="Flag roads turning tighter than this")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: Literal["v1"] = "v1"
    seed: int = 0
    output_dir: str = "results"
    alignment: Literal["aligned", "raw", "both"] = "aligned"
    jobs: int = Field(1, ge=1)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)
    catalogue: CatalogueConfig = Field(default_factory=CatalogueConfig)
    experiments: ExperimentsConfig = Field(default_factory=ExperimentsConfig)
    behavior: BehaviorConfig = Field(default_factory=BehaviorConfig)
    correlation: CorrelationConfig = Field(default_factory=CorrelationConfig)
    qa: QAConfig = Field(default_factory=QAConfig)

    def resolved_output_dir(self) -> Path:
        return Path(resolve_env_reference(self.output_dir))

    def alignment_modes(self) -> List[bool]:
        """Alignment flags to evaluate, aligned first."""
        if self.alignment == "both":
            return [True, False]
        return [self.alignment == "aligned"]

    def sampling_plan(self, length_quantile: Optional[str] = None) -> SamplingPlan:
        return SamplingPlan(
            sizes=list(self.sampling.sizes),
            suites_per_size=self.sampling.suites_per_size,
            seed=self.seed,
            length_quantile=length_quantile,
            quantile=self.sampling.quantile,
        )

    def to_yaml_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        """SHA-256 of the result-shaping settings; ``output_dir`` and ``jobs`` are left out."""
        content = {key: value for key, value in self.to_yaml_dict().items() if key not in UNHASHED_KEYS}
        canonical = json.dumps(
            content, sort_keys=True, separators=(",", ":"), ensure_ascii=True
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_run_config(path: Union[str, Path] = DEFAULT_CONFIG_PATH) -> RunConfig:
    file_path = Path(path)
    if not file_path.exists():
        raise RoadDivConfigError(f"Config file not found: {file_path}")
    with file_path.open("r", encoding="utf-8") as handle:
        try:
            raw = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise RoadDivConfigError(f"Config file is not valid YAML: {exc}") from exc
    try:
        return RunConfig.model_validate(raw)
    except Exception as exc:
        raise RoadDivConfigError(str(exc)) from exc


def save_run_config(config: RunConfig, path: Union[str, Path] = DEFAULT_CONFIG_PATH) -> None:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with file_path.open("w", encoding="utf-8") as handle:
        yaml.safe_dump(config.to_yaml_dict(), handle, sort_keys=False)
