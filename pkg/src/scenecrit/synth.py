"""Synthetic scenes, scripted scenarios, and brute-force reference values.

Everything here is deterministic in its seed, so tests can freeze expected
values. The brute-force functions recompute metrics by bisection, dense
rollout, or dense boundary sampling without touching the closed-form
production paths; they exist to cross-check those paths and are meant for
small fixtures, not batch work.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidSpec, UnsupportedMetric
from .geometry import Corners
from .model import AgentState, ScenarioTrackset, Scene

SPEED_LAWS = ("uniform", "bimodal", "all_standing", "one_fast")
SPATIAL_LAWS = ("grid", "corridor", "crossing")

CAR_LENGTH_M = 4.5
CAR_WIDTH_M = 1.8


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one synthetic scene."""

    seed: int
    n_agents: int
    speed_law: str = "uniform"
    spatial_law: str = "grid"
    bounds_m: float = 60.0

    def __post_init__(self):
        if self.n_agents < 1:
            raise InvalidSpec(f"n_agents must be >= 1, got {self.n_agents}")
        if self.speed_law not in SPEED_LAWS:
            raise InvalidSpec(f"speed_law must be one of {SPEED_LAWS}, got {self.speed_law!r}")
        if self.spatial_law not in SPATIAL_LAWS:
            raise InvalidSpec(
                f"spatial_law must be one of {SPATIAL_LAWS}, got {self.spatial_law!r}"
            )
        if self.bounds_m <= 0.0:
            raise InvalidSpec(f"bounds_m must be positive, got {self.bounds_m}")


def _speeds_for(spec: SceneSpec, rng: random.Random) -> list[float]:
    n = spec.n_agents
    if spec.speed_law == "all_standing":
        return [0.0] * n
    if spec.speed_law == "one_fast":
        return [10.0] + [0.0] * (n - 1)
    if spec.speed_law == "uniform":
        shared = rng.uniform(2.0, 15.0)
        return [shared] * n
    # bimodal: a slow and a fast population
    return [
        rng.uniform(0.0, 2.0) if i < n // 2 else rng.uniform(8.0, 15.0) for i in range(n)
    ]


def _placements_for(spec: SceneSpec, rng: random.Random) -> list[tuple[float, float, float]]:
    """(x, y, heading) per agent."""
    n = spec.n_agents
    b = spec.bounds_m
    out = []
    if spec.spatial_law == "grid":
        k = math.ceil(math.sqrt(n))
        pitch = b / k
        for i in range(n):
            gx = (i % k + 0.5) * pitch + rng.uniform(-0.2, 0.2) * pitch
            gy = (i // k + 0.5) * pitch + rng.uniform(-0.2, 0.2) * pitch
            out.append((gx, gy, rng.uniform(-math.pi, math.pi)))
    elif spec.spatial_law == "corridor":
        pitch = b / n
        for i in range(n):
            out.append(((i + 0.5) * pitch, 0.5 * b + rng.uniform(-1.0, 1.0), 0.0))
    else:  # crossing: two perpendicular lanes through the center
        for i in range(n):
            along = (i // 2 + 0.5) * (b / max(1, (n + 1) // 2))
            if i % 2 == 0:
                out.append((along, 0.5 * b, 0.0))
            else:
                out.append((0.5 * b, along, 0.5 * math.pi))
    return out


def build_scene(spec: SceneSpec) -> Scene:
    """One scene at timestamp 0, deterministic in the spec's seed."""
    rng = random.Random(spec.seed)
    placements = _placements_for(spec, rng)
    speeds = _speeds_for(spec, rng)
    agents = []
    for idx, ((x, y, heading), speed) in enumerate(zip(placements, speeds), start=1):
        agents.append(
            AgentState(
                agent_id=idx,
                timestamp_ms=0,
                x=x,
                y=y,
                vx=speed * math.cos(heading),
                vy=speed * math.sin(heading),
                heading=heading,
                length=CAR_LENGTH_M,
                width=CAR_WIDTH_M,
            )
        )
    return Scene(0, agents)


def build_crossing_scenario(
    speeds: tuple[float, float] = (10.0, 10.0),
    offset_s: float = 1.2,
    with_bystander: bool = False,
    approach_s: float = 3.0,
    margin_s: float = 3.0,
    frame_interval_ms: int = 100,
) -> ScenarioTrackset:
    """Two point agents on perpendicular paths through (0.5, 0.5).

    Agent 1 runs along +x, agent 2 along +y; agent 2 reaches the crossing
    offset_s after agent 1 (the offset is rounded to the frame grid, and 0
    makes them coincide on a frame: a collision). With the default 10 m/s and
    100 ms frames each agent covers the crossing cell for exactly one frame,
    so the post-encroachment time equals the offset. The optional bystander
    (agent 3) stands 6 m off both paths.
    """
    v1, v2 = speeds
    if v1 <= 0.0 or v2 <= 0.0:
        raise InvalidSpec(f"both speeds must be positive, got {speeds}")
    if offset_s < 0.0:
        raise InvalidSpec(f"offset_s must be >= 0, got {offset_s}")
    step = frame_interval_ms
    t_meet_1 = round(approach_s * 1000.0 / step) * step
    t_meet_2 = t_meet_1 + round(offset_s * 1000.0 / step) * step
    t_end = t_meet_2 + round(margin_s * 1000.0 / step) * step
    scenes = []
    for t in range(0, t_end + step, step):
        agents = [
            AgentState(
                agent_id=1,
                timestamp_ms=t,
                x=0.5 + v1 * ((t - t_meet_1) / 1000.0),
                y=0.5,
                vx=v1,
                vy=0.0,
                heading=0.0,
            ),
            AgentState(
                agent_id=2,
                timestamp_ms=t,
                x=0.5,
                y=0.5 + v2 * ((t - t_meet_2) / 1000.0),
                vx=0.0,
                vy=v2,
                heading=0.5 * math.pi,
            ),
        ]
        if with_bystander:
            agents.append(
                AgentState(
                    agent_id=3, timestamp_ms=t, x=6.5, y=6.5, vx=0.0, vy=0.0, heading=0.0
                )
            )
        scenes.append(Scene(t, agents))
    return ScenarioTrackset("crossing", scenes, frame_interval_ms=step)


def build_random_recording(
    n_agents: int = 30,
    n_frames: int = 1000,
    seed: int = 7,
    bounds_m: float = 120.0,
    frame_interval_ms: int = 100,
) -> ScenarioTrackset:
    """A bounded box of drifting cars for batch and throughput tests.

    Agents bounce off the walls; roughly a fifth stand still and a third
    brake to a stop partway through, so speed histories are not constant.
    """
    if n_agents < 1 or n_frames < 1:
        raise InvalidSpec("n_agents and n_frames must be >= 1")
    rng = random.Random(seed)
    dt = frame_interval_ms / 1000.0
    agents = []
    for agent_id in range(1, n_agents + 1):
        standing = rng.random() < 0.2
        agents.append(
            {
                "id": agent_id,
                "x": rng.uniform(10.0, bounds_m - 10.0),
                "y": rng.uniform(10.0, bounds_m - 10.0),
                "heading": rng.uniform(-math.pi, math.pi),
                "speed": 0.0 if standing else rng.uniform(0.5, 14.0),
                "brake_at": rng.randrange(n_frames) if rng.random() < 0.3 else None,
                "brake_rate": rng.uniform(0.5, 3.0),
            }
        )
    scenes = []
    for k in range(n_frames):
        t = k * frame_interval_ms
        states = []
        for a in agents:
            c = math.cos(a["heading"])
            s = math.sin(a["heading"])
            states.append(
                AgentState(
                    agent_id=a["id"],
                    timestamp_ms=t,
                    x=a["x"],
                    y=a["y"],
                    vx=a["speed"] * c,
                    vy=a["speed"] * s,
                    heading=a["heading"],
                    length=CAR_LENGTH_M,
                    width=CAR_WIDTH_M,
                )
            )
            a["x"] += a["speed"] * c * dt
            a["y"] += a["speed"] * s * dt
            if a["brake_at"] is not None and k >= a["brake_at"]:
                a["speed"] = max(0.0, a["speed"] - a["brake_rate"] * dt)
            if not 0.0 <= a["x"] <= bounds_m:
                a["heading"] = math.remainder(math.pi - a["heading"], math.tau)
                a["x"] = min(max(a["x"], 0.0), bounds_m)
            if not 0.0 <= a["y"] <= bounds_m:
                a["heading"] = math.remainder(-a["heading"], math.tau)
                a["y"] = min(max(a["y"], 0.0), bounds_m)
        scenes.append(Scene(t, states))
    return ScenarioTrackset(f"synthetic-{seed}", scenes, frame_interval_ms=frame_interval_ms)


def bisect_wttc(
    speed_a: float, speed_b: float, gap: float, a_max: float, tol: float = 1e-9
) -> float:
    """Worst-case time to contact by bisection on the disk-growth equation."""
    if gap <= 0.0:
        return 0.0

    def grown(t: float) -> float:
        return (speed_a + speed_b) * t + a_max * t * t

    hi = 1.0
    while grown(hi) < gap:
        hi *= 2.0
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if grown(mid) >= gap:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def rollout_ttc(
    a: AgentState, b: AgentState, dt: float = 1e-3, horizon_s: float = 120.0
) -> float | None:
    """Time to circumcircle contact by dense constant-velocity rollout."""
    r_sum = a.circumradius + b.circumradius
    steps = int(horizon_s / dt)
    dx = b.x - a.x
    dy = b.y - a.y
    rvx = b.vx - a.vx
    rvy = b.vy - a.vy
    for k in range(steps + 1):
        t = k * dt
        if math.hypot(dx + rvx * t, dy + rvy * t) <= r_sum:
            return t
    return None


def _boundary_points(corners: Corners, n: int) -> np.ndarray:
    """n points spread along a rectangle's boundary, edge by edge."""
    pts = []
    per_edge = max(2, n // 4)
    arr = np.asarray(corners, dtype=float)
    for i in range(4):
        a = arr[i]
        b = arr[(i + 1) % 4]
        frac = np.linspace(0.0, 1.0, per_edge, endpoint=False)[:, None]
        pts.append(a + frac * (b - a))
    return np.vstack(pts)


def _any_inside(points: np.ndarray, corners: Corners) -> bool:
    """Whether any point lies inside the counter-clockwise rectangle."""
    arr = np.asarray(corners, dtype=float)
    inside = np.ones(len(points), dtype=bool)
    for i in range(4):
        a = arr[i]
        b = arr[(i + 1) % 4]
        edge = b - a
        rel = points - a
        inside &= edge[0] * rel[:, 1] - edge[1] * rel[:, 0] >= 0.0
        if not inside.any():
            return False
    return bool(inside.any())


def _min_dist_to_edges(points: np.ndarray, corners: Corners) -> float:
    arr = np.asarray(corners, dtype=float)
    best = np.full(len(points), np.inf)
    for i in range(4):
        a = arr[i]
        b = arr[(i + 1) % 4]
        edge = b - a
        seg_len_sq = float(edge @ edge)
        rel = points - a
        t = np.clip((rel @ edge) / seg_len_sq, 0.0, 1.0)
        closest = a + t[:, None] * edge
        delta = points - closest
        best = np.minimum(best, np.einsum("ij,ij->i", delta, delta))
    return float(np.sqrt(best.min()))


def sampled_gap(corners_a: Corners, corners_b: Corners, n: int = 10_000) -> float:
    """Gap between two rectangles by dense boundary sampling.

    Each boundary is sampled with n points and measured exactly against the
    other rectangle's edges, so the discretization error is bounded by the
    sample spacing. Containment and boundary crossings collapse to 0.
    """
    pts_a = _boundary_points(corners_a, n)
    pts_b = _boundary_points(corners_b, n)
    if _any_inside(pts_a, corners_b) or _any_inside(pts_b, corners_a):
        return 0.0
    return min(_min_dist_to_edges(pts_a, corners_b), _min_dist_to_edges(pts_b, corners_a))


def brute_force_reference(
    metric_id: str, ts: ScenarioTrackset, a_max: float = 7.0, samples: int = 10_000
) -> dict[tuple[int, int, int], float | None]:
    """Reference values keyed by (timestamp_ms, ego_id, adversary_id).

    Supports "ttc" (dense rollout), "wttc" (bisection), and "dist" (boundary
    sampling; pairs with a missing footprint use center distance). Meant for
    small fixtures; cost grows with frames times pairs times samples.
    """
    if metric_id not in ("ttc", "wttc", "dist"):
        raise UnsupportedMetric(f"no brute-force reference for {metric_id!r}")
    out: dict[tuple[int, int, int], float | None] = {}
    for scene in ts.frames:
        ids = scene.agent_ids
        for id_a, id_b in combinations(ids, 2):
            a = scene.get(id_a)
            b = scene.get(id_b)
            if metric_id == "ttc":
                value = rollout_ttc(a, b)
            elif metric_id == "wttc":
                d = math.hypot(a.x - b.x, a.y - b.y)
                value = bisect_wttc(
                    a.speed, b.speed, d - a.circumradius - b.circumradius, a_max
                )
            else:
                if a.corners is None or b.corners is None:
                    value = math.hypot(a.x - b.x, a.y - b.y)
                else:
                    value = sampled_gap(a.corners, b.corners, samples)
            out[(scene.timestamp_ms, id_a, id_b)] = value
            out[(scene.timestamp_ms, id_b, id_a)] = value
    return out
