"""
Road and trace builders shared by the tests.
"""

from typing import List, Sequence

import numpy as np

from roaddiv.behavior import SimulationTrace
from roaddiv.geometry import RoadGeometry, rotate_points


def _place(local: np.ndarray, heading: float, origin: Sequence[float]) -> np.ndarray:
    return rotate_points(local, heading) + np.asarray(origin, dtype=float)


def straight(
    road_id: str,
    length: float,
    spacing: float = 1.0,
    heading: float = 0.0,
    origin: Sequence[float] = (0.0, 0.0),
) -> RoadGeometry:
    n = max(3, int(round(length / spacing)) + 1)
    s = np.linspace(0.0, length, n)
    local = np.column_stack([s, np.zeros(n)])
    return RoadGeometry.from_points(road_id, _place(local, heading, origin))


def arc(
    road_id: str,
    radius: float,
    length: float,
    spacing: float = 1.0,
    heading: float = 0.0,
    origin: Sequence[float] = (0.0, 0.0),
    left: bool = True,
) -> RoadGeometry:
    """Circular arc starting at ``origin`` tangent to ``heading``; points at equal arc steps."""
    n = max(3, int(round(length / spacing)) + 1)
    s = np.linspace(0.0, length, n)
    sign = 1.0 if left else -1.0
    local = np.column_stack([radius * np.sin(s / radius), sign * radius * (1.0 - np.cos(s / radius))])
    return RoadGeometry.from_points(road_id, _place(local, heading, origin))


def road_pool(count: int = 10) -> List[RoadGeometry]:
    roads = []
    for i in range(count):
        road_id = f"r{i:02d}"
        heading = 0.3 * i
        origin = (10.0 * i, -5.0 * i)
        if i % 2 == 0:
            roads.append(straight(road_id, 30.0 + 5.0 * i, heading=heading, origin=origin))
        else:
            roads.append(
                arc(
                    road_id,
                    20.0 + 5.0 * i,
                    30.0 + 4.0 * i,
                    heading=heading,
                    origin=origin,
                    left=(i % 4 == 1),
                )
            )
    return roads


def make_trace(
    road_id: str = "road",
    agent_id: str = "agent",
    x=None,
    y=None,
    dt: float = 0.1,
    velocity=None,
    steering=None,
    throttle=None,
    brake=None,
) -> SimulationTrace:
    x = np.asarray(x if x is not None else np.linspace(0.0, 90.0, 50), dtype=float)
    n = len(x)
    y = np.asarray(y if y is not None else np.zeros(n), dtype=float)
    if y.ndim == 0:
        y = np.full(n, float(y))
    return SimulationTrace(
        road_id=road_id,
        agent_id=agent_id,
        t=np.arange(n) * dt,
        x=x,
        y=y,
        velocity=np.full(n, 5.0) if velocity is None else velocity,
        steering=np.zeros(n) if steering is None else steering,
        throttle=np.full(n, 0.3) if throttle is None else throttle,
        brake=np.zeros(n) if brake is None else brake,
    )
