"""Core data model: agent states, scenes, recordings, kinematic histories.

A recording is a sequence of scenes on a fixed frame grid (100 ms by default).
Scenes index their agents by id and memoize pairwise gap distances, since the
same pair is queried by several metrics per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from .errors import MissingAgent
from .geometry import Corners, circumradius, rect_corners, rect_gap

AGENT_TYPES = ("car", "truck_bus", "other")

# Floor applied to minimum-gap queries so distance penalties stay finite when
# two bodies touch.
EPS_DISTANCE = 0.1


@dataclass(frozen=True)
class AgentState:
    """One agent at one frame.

    Velocity is a ground-plane vector in m/s; heading is the yaw of the body
    frame in radians. ``length`` and ``width`` may both be None for agents
    without a usable footprint (distance queries then fall back to centers).
    """

    agent_id: int
    timestamp_ms: int
    x: float
    y: float
    vx: float
    vy: float
    heading: float = 0.0
    length: float | None = None
    width: float | None = None
    agent_type: str = "car"

    @cached_property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    @property
    def has_footprint(self) -> bool:
        return self.length is not None and self.width is not None

    @cached_property
    def corners(self) -> Corners | None:
        if not self.has_footprint:
            return None
        return rect_corners(self.x, self.y, self.heading, self.length, self.width)

    @cached_property
    def circumradius(self) -> float:
        """Radius of the footprint's bounding circle, 0 for point agents."""
        if not self.has_footprint:
            return 0.0
        return circumradius(self.length, self.width)


class Scene:
    """All agent states sharing one timestamp."""

    __slots__ = ("timestamp_ms", "agents", "_by_id", "_gaps", "__weakref__")

    def __init__(self, timestamp_ms: int, agents: Iterable[AgentState]):
        self.timestamp_ms = int(timestamp_ms)
        self.agents: tuple[AgentState, ...] = tuple(agents)
        by_id: dict[int, AgentState] = {}
        for state in self.agents:
            if state.timestamp_ms != self.timestamp_ms:
                raise ValueError(
                    f"agent {state.agent_id} carries timestamp {state.timestamp_ms}, "
                    f"scene is at {self.timestamp_ms}"
                )
            if state.agent_id in by_id:
                raise ValueError(f"duplicate agent id {state.agent_id} in scene")
            by_id[state.agent_id] = state
        self._by_id = by_id
        self._gaps: dict[tuple[int, int], float] = {}

    def __len__(self) -> int:
        return len(self.agents)

    def __iter__(self) -> Iterator[AgentState]:
        return iter(self.agents)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scene):
            return NotImplemented
        return self.timestamp_ms == other.timestamp_ms and self.agents == other.agents

    def __repr__(self) -> str:
        return f"Scene(t={self.timestamp_ms} ms, agents={len(self.agents)})"

    @property
    def agent_ids(self) -> list[int]:
        return sorted(self._by_id)

    def __contains__(self, agent_id: int) -> bool:
        return agent_id in self._by_id

    def get(self, agent_id: int) -> AgentState:
        try:
            return self._by_id[agent_id]
        except KeyError:
            raise MissingAgent(
                f"agent {agent_id} not in scene at {self.timestamp_ms} ms"
            ) from None

    def gap(self, a_id: int, b_id: int) -> float:
        """Memoized body gap between two agents of this scene."""
        key = (a_id, b_id) if a_id < b_id else (b_id, a_id)
        cached = self._gaps.get(key)
        if cached is None:
            cached = gap_distance(self.get(a_id), self.get(b_id))
            self._gaps[key] = cached
        return cached


def center_distance(a: AgentState, b: AgentState) -> float:
    """Euclidean distance between reference points, in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def gap_distance(a: AgentState, b: AgentState) -> float:
    """Smallest distance between the two bodies, 0 when they overlap.

    Falls back to center distance when either agent has no footprint, so the
    value is always defined and never exceeds the center distance.
    """
    ca = a.corners
    cb = b.corners
    if ca is None or cb is None:
        return center_distance(a, b)
    return rect_gap(ca, cb)


def braking_distance(ego: AgentState, decel: float, reaction_time: float = 0.0) -> float:
    """Distance covered from current speed during reaction plus a constant-decel stop."""
    if decel <= 0.0:
        raise ValueError(f"decel must be positive, got {decel}")
    if reaction_time < 0.0:
        raise ValueError(f"reaction_time must be >= 0, got {reaction_time}")
    v = ego.speed
    return v * reaction_time + v * v / (2.0 * decel)


def _others_by_bound(scene: Scene, ego: AgentState) -> list[tuple[float, float, AgentState]]:
    """(gap lower bound, center distance, state) for every non-ego agent, bound-sorted.

    The bound is center distance minus both circumradii: the body gap can
    never fall below it, and never rise above the center distance.
    """
    ego_r = ego.circumradius
    out = []
    for other in scene.agents:
        if other.agent_id == ego.agent_id:
            continue
        d = math.hypot(other.x - ego.x, other.y - ego.y)
        out.append((d - ego_r - other.circumradius, d, other))
    out.sort(key=lambda item: item[0])
    return out


def _raw_min_gap(scene: Scene, ego_id: int) -> float | None:
    """Unclamped minimum body gap from ego to any other agent; None when alone."""
    ego = scene.get(ego_id)
    candidates = _others_by_bound(scene, ego)
    if not candidates:
        return None
    best = math.inf
    for bound, _, other in candidates:
        if bound >= best:
            break
        g = scene.gap(ego_id, other.agent_id)
        if g < best:
            best = g
    return best


def min_gap_to_any(scene: Scene, ego_id: int) -> float | None:
    """Minimum gap from ego to the rest of the scene, floored at EPS_DISTANCE.

    Returns None when the ego is the only agent.
    """
    raw = _raw_min_gap(scene, ego_id)
    if raw is None:
        return None
    return raw if raw > EPS_DISTANCE else EPS_DISTANCE


def agents_within_braking_distance(
    scene: Scene, ego_id: int, decel: float, reaction_time: float = 0.0
) -> list[AgentState]:
    """Agents whose body gap to ego is at most ego's braking distance, id-sorted."""
    ego = scene.get(ego_id)
    reach = braking_distance(ego, decel, reaction_time)
    members = []
    for bound, d, other in _others_by_bound(scene, ego):
        if bound > reach:
            break
        if d <= reach or scene.gap(ego_id, other.agent_id) <= reach:
            members.append(other)
    members.sort(key=lambda s: s.agent_id)
    return members


@dataclass(frozen=True)
class KinematicHistory:
    """Recent speed and acceleration samples of one agent, oldest first."""

    agent_id: int
    timestamps_ms: tuple[int, ...]
    speeds: tuple[float, ...]
    accels: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.timestamps_ms)

    @property
    def mean_speed(self) -> float:
        return math.fsum(self.speeds) / len(self.speeds)

    @property
    def mean_abs_accel(self) -> float:
        return math.fsum(abs(a) for a in self.accels) / len(self.accels)


class ScenarioTrackset:
    """A full recording: consecutive scenes on a constant frame grid."""

    def __init__(self, recording_id: str, scenes: Iterable[Scene], frame_interval_ms: int = 100):
        if frame_interval_ms <= 0:
            raise ValueError(f"frame_interval_ms must be positive, got {frame_interval_ms}")
        self.recording_id = str(recording_id)
        self.frame_interval_ms = int(frame_interval_ms)
        self.frames: tuple[Scene, ...] = tuple(sorted(scenes, key=lambda s: s.timestamp_ms))
        if not self.frames:
            raise ValueError(f"recording {recording_id!r} has no scenes")
        previous = None
        for scene in self.frames:
            if previous is not None and scene.timestamp_ms - previous != frame_interval_ms:
                raise ValueError(
                    f"scene timestamps must advance by {frame_interval_ms} ms, "
                    f"got {previous} -> {scene.timestamp_ms}"
                )
            previous = scene.timestamp_ms
        self._by_time = {scene.timestamp_ms: scene for scene in self.frames}

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Scene]:
        return iter(self.frames)

    @property
    def timestamps_ms(self) -> list[int]:
        return [scene.timestamp_ms for scene in self.frames]

    @property
    def agent_ids(self) -> list[int]:
        seen: set[int] = set()
        for scene in self.frames:
            seen.update(scene._by_id)
        return sorted(seen)

    def scene_at(self, timestamp_ms: int) -> Scene:
        try:
            return self._by_time[timestamp_ms]
        except KeyError:
            raise MissingAgent(
                f"recording {self.recording_id!r} has no scene at {timestamp_ms} ms"
            ) from None

    def state_at(self, timestamp_ms: int, agent_id: int) -> AgentState | None:
        scene = self._by_time.get(timestamp_ms)
        if scene is None:
            return None
        return scene._by_id.get(agent_id)


def history(
    ts: ScenarioTrackset, agent_id: int, timestamp_ms: int, window_s: float
) -> KinematicHistory:
    """Kinematic samples of an agent over the trailing window ending at timestamp_ms.

    The window walks backwards frame by frame and stops at the agent's first
    absence, so after a tracking gap only post-gap samples contribute. Speeds
    come from the stored velocity vectors; acceleration at a frame is the
    finite difference of speed against the previous frame, 0.0 at the agent's
    first available frame.
    """
    scene = ts.scene_at(timestamp_ms)
    if agent_id not in scene:
        raise MissingAgent(f"agent {agent_id} not present at {timestamp_ms} ms")
    step = ts.frame_interval_ms
    steps_back = int(round(window_s * 1000.0 / step))
    times: list[int] = []
    t = timestamp_ms
    for _ in range(steps_back + 1):
        if ts.state_at(t, agent_id) is None:
            break
        times.append(t)
        t -= step
    times.reverse()
    dt_s = step / 1000.0
    speeds = [ts.state_at(t, agent_id).speed for t in times]
    accels = []
    for i, t in enumerate(times):
        if i > 0:
            accels.append((speeds[i] - speeds[i - 1]) / dt_s)
        else:
            before = ts.state_at(t - step, agent_id)
            if before is None:
                accels.append(0.0)
            else:
                accels.append((speeds[0] - before.speed) / dt_s)
    return KinematicHistory(
        agent_id=agent_id,
        timestamps_ms=tuple(times),
        speeds=tuple(speeds),
        accels=tuple(accels),
    )
