"""
Deterministic synthetic corpora: roads from four shape families and
rule-based traces for two agents.
"""

from __future__ import annotations

import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .behavior import SimulationTrace
from .exceptions import DegenerateRoad
from .geometry import RoadGeometry, curvature_profile, interpolate_road, self_intersects
from .models import ControlPointRoad
from .seeding import derive_rng

logger = logging.getLogger(__name__)

RoadFamily = Literal["straight", "arc", "s_curve", "spline"]
AgentName = Literal["curvature", "constant"]

CONTROL_SPACING = 5.0
MAX_ATTEMPTS = 20


class SyntheticCorpusSpec(BaseModel):
    """Counts, shape families and agents of a generated corpus."""

    model_config = ConfigDict(extra="forbid")

    road_count: int = Field(200, ge=1)
    families: List[RoadFamily] = Field(
        default_factory=lambda: ["straight", "arc", "s_curve", "spline"]
    )
    min_length: float = Field(40.0, gt=0)
    max_length: float = Field(200.0, gt=0)
    min_radius: float = Field(15.0, gt=0)
    max_radius: float = Field(80.0, gt=0)
    agents: List[AgentName] = Field(default_factory=lambda: ["curvature", "constant"])
    frequency: float = Field(10.0, gt=0, description="Trace sampling rate in Hz")
    spacing: float = Field(1.0, gt=0, description="Interpolation spacing used for traces")
    seed: int = 0

    @field_validator("families", "agents")
    @classmethod
    def validate_non_empty(cls, values: list) -> list:
        if not values:
            raise ValueError("at least one entry is required")
        return values


def _integrate(curvature: np.ndarray, step: float, heading: float, origin: np.ndarray) -> np.ndarray:
    """Points of a path whose curvature per ``step`` meters is given."""
    headings = heading + np.concatenate([[0.0], np.cumsum(curvature[:-1] * step)])
    steps = step * np.column_stack([np.cos(headings), np.sin(headings)])
    return origin + np.vstack([np.zeros(2), np.cumsum(steps, axis=0)])


def _curvature_profile(family: str, length: float, spec: SyntheticCorpusSpec, rng) -> np.ndarray:
    n = max(2, int(math.ceil(length)))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    if family == "straight":
        return np.zeros(n)
    if family == "arc":
        radius = rng.uniform(spec.min_radius, spec.max_radius)
        # keep the sweep below a full turn
        n = min(n, int(1.5 * math.pi * radius))
        return np.full(n, sign / radius)
    if family == "s_curve":
        first = rng.uniform(spec.min_radius, spec.max_radius)
        second = rng.uniform(spec.min_radius, spec.max_radius)
        half = n // 2
        half = min(half, int(0.75 * math.pi * min(first, second)))
        return np.concatenate([np.full(half, sign / first), np.full(half, -sign / second)])
    pieces = int(rng.integers(2, 6))
    edges = np.sort(rng.choice(np.arange(1, n), size=min(pieces - 1, n - 1), replace=False))
    values = rng.uniform(-1.0 / spec.min_radius, 1.0 / spec.min_radius, size=len(edges) + 1)
    values[rng.random(len(values)) < 0.3] = 0.0
    return np.repeat(values, np.diff(np.concatenate([[0], edges, [n]])))


def _control_points(path: np.ndarray) -> np.ndarray:
    stride = int(CONTROL_SPACING)
    indices = list(range(0, len(path), stride))
    if indices[-1] != len(path) - 1:
        if len(path) - 1 - indices[-1] < stride / 2 and len(indices) > 2:
            indices[-1] = len(path) - 1
        else:
            indices.append(len(path) - 1)
    return np.round(path[indices], 6) + 0.0


def _generate_road(index: int, family: str, spec: SyntheticCorpusSpec) -> ControlPointRoad:
    road_id = f"synth-{index:04d}"
    for attempt in range(MAX_ATTEMPTS):
        rng = derive_rng(spec.seed, "road", index, attempt)
        length = rng.uniform(spec.min_length, spec.max_length)
        curvature = _curvature_profile(family, length, spec, rng)
        origin = rng.uniform(-500.0, 500.0, size=2)
        heading = rng.uniform(-math.pi, math.pi)
        points = _control_points(_integrate(curvature, 1.0, heading, origin))
        road = ControlPointRoad(id=road_id, control_points=[tuple(p) for p in points.tolist()])
        try:
            geometry = interpolate_road(road, spec.spacing)
        except DegenerateRoad:
            continue
        if not self_intersects(geometry):
            return road
        logger.debug("Road %s attempt %d self-intersects; redrawing", road_id, attempt)
    raise DegenerateRoad(f"road {road_id}: no valid {family} road in {MAX_ATTEMPTS} attempts", road_id)


def _kappa_at_vertices(g: RoadGeometry) -> np.ndarray:
    kappa = curvature_profile(g).kappa
    return np.concatenate([[kappa[0]], kappa, [kappa[-1]]])


def _normals(g: RoadGeometry) -> np.ndarray:
    tangents = np.gradient(g.points, axis=0)
    tangents /= np.hypot(*tangents.T)[:, None]
    return np.column_stack([-tangents[:, 1], tangents[:, 0]])


def _constant_trace(g: RoadGeometry, agent_id: str, frequency: float) -> SimulationTrace:
    """Centerline driving through every road vertex at one constant speed."""
    n = g.n_points
    speed = float(np.mean(np.diff(g.cum_arclength))) * frequency
    return SimulationTrace(
        road_id=g.id,
        agent_id=agent_id,
        t=np.arange(n) / frequency,
        x=g.points[:, 0],
        y=g.points[:, 1],
        velocity=np.full(n, speed),
        steering=np.zeros(n),
        throttle=np.full(n, 0.3),
        brake=np.zeros(n),
    )


def _curvature_trace(
    g: RoadGeometry,
    agent_id: str,
    frequency: float,
    max_speed: float = 20.0,
    min_speed: float = 5.0,
    reference_curvature: float = 0.1,
    lateral_gain: float = 10.0,
) -> SimulationTrace:
    """
    Speed falls with |curvature|, the vehicle drifts toward the inside of
    turns in proportion to curvature, and steering follows curvature.
    """
    kappa = _kappa_at_vertices(g)
    s_grid = g.cum_arclength

    def speed_at(s: float) -> float:
        k = abs(float(np.interp(s, s_grid, kappa)))
        return float(np.clip(max_speed * (1.0 - k / reference_curvature), min_speed, max_speed))

    dt = 1.0 / frequency
    positions_s = [0.0]
    while positions_s[-1] < g.length:
        positions_s.append(min(g.length, positions_s[-1] + speed_at(positions_s[-1]) * dt))
        if positions_s[-1] >= g.length:
            break
    s = np.asarray(positions_s)
    velocity = np.array([speed_at(value) for value in s])
    k = np.interp(s, s_grid, kappa)
    normals = _normals(g)
    normal = np.column_stack([np.interp(s, s_grid, normals[:, 0]), np.interp(s, s_grid, normals[:, 1])])
    normal /= np.hypot(*normal.T)[:, None]
    offset = np.clip(lateral_gain * k, -1.0, 1.0)
    x = np.interp(s, s_grid, g.points[:, 0]) + offset * normal[:, 0]
    y = np.interp(s, s_grid, g.points[:, 1]) + offset * normal[:, 1]

    acceleration = np.append(np.diff(velocity) / dt, 0.0)
    return SimulationTrace(
        road_id=g.id,
        agent_id=agent_id,
        t=np.arange(len(s)) * dt,
        x=x,
        y=y,
        velocity=velocity,
        steering=np.clip(k / 0.2, -1.0, 1.0),
        throttle=np.clip(0.3 + acceleration / 4.0, 0.0, 1.0),
        brake=np.clip(-acceleration / 6.0, 0.0, 1.0),
    )


def synthetic_trace(g: RoadGeometry, agent: str, frequency: float = 10.0) -> SimulationTrace:
    if agent == "constant":
        return _constant_trace(g, agent, frequency)
    if agent == "curvature":
        return _curvature_trace(g, agent, frequency)
    raise ValueError(f"unknown synthetic agent {agent!r}")


def generate_synthetic_corpus(
    spec: Optional[SyntheticCorpusSpec] = None,
) -> Tuple[List[ControlPointRoad], List[SimulationTrace]]:
    """
    Roads cycling through ``spec.families`` plus one trace per road and
    agent. The output depends only on ``spec``.
    """
    spec = spec or SyntheticCorpusSpec()
    if spec.max_length < spec.min_length or spec.max_radius < spec.min_radius:
        raise ValueError("length and radius ranges must have max >= min")
    roads = [
        _generate_road(index, spec.families[index % len(spec.families)], spec)
        for index in range(spec.road_count)
    ]
    traces = []
    for road in roads:
        geometry = interpolate_road(road, spec.spacing)
        for agent in spec.agents:
            traces.append(synthetic_trace(geometry, agent, spec.frequency))
    logger.info(
        "Generated %d roads and %d traces (seed %d)", len(roads), len(traces), spec.seed
    )
    return roads, traces


def shorten_road(road: ControlPointRoad, fraction: float, spacing: float = 1.0) -> ControlPointRoad:
    """
    The first ``fraction`` of ``road`` by arclength, as pre-interpolated road
    points under ``<id>~<fraction>``.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    geometry = interpolate_road(road, spacing)
    cut = fraction * geometry.length
    keep = geometry.cum_arclength < cut
    end = np.array(
        [
            np.interp(cut, geometry.cum_arclength, geometry.points[:, 0]),
            np.interp(cut, geometry.cum_arclength, geometry.points[:, 1]),
        ]
    )
    points = geometry.points[keep]
    if np.hypot(*(points[-1] - end)) > 1e-9:
        points = np.vstack([points, end])
    return ControlPointRoad(
        id=f"{road.id}~{fraction:g}",
        control_points=[tuple(p) for p in points.tolist()],
        lane_width=road.lane_width,
        interpolated=True,
    )


def shorten_roads(
    roads: Sequence[ControlPointRoad], fractions: Sequence[float], spacing: float = 1.0
) -> List[ControlPointRoad]:
    shortened = []
    for road in roads:
        for fraction in fractions:
            try:
                shortened.append(shorten_road(road, fraction, spacing))
            except (DegenerateRoad, ValueError) as exc:
                logger.warning("Road %s not shortened to %g: %s", road.id, fraction, exc)
    return shortened
