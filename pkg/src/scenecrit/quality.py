"""Inverse traffic-quality criticality score.

The score looks at one ego agent inside one scene and combines four layers:
the speed spread of the whole scene, how crowded the ego's braking envelope
is, the speed spread inside that envelope, and the ego's own recent dynamics.
The layers are combined as an l2 norm and optionally scaled by a penalty that
grows as the closest body gap shrinks. Larger values mean worse traffic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import EmptyScene
from .model import (
    ScenarioTrackset,
    Scene,
    agents_within_braking_distance,
    history,
    min_gap_to_any,
)

PENALTY_KINDS = ("none", "rho1", "rho2", "rho3")

RHO1_NUMERATOR_M = 1.5  # hyperbolic penalty crosses 1.0 at this gap
RHO2_SCALE_M = 5.0  # e-folding length of the exponential penalty
RHO3_OFFSET_M = 1.0  # gap at which the shifted exponential equals 1.0
RHO3_SCALE_M = 10.0


@dataclass(frozen=True)
class IutqConfig:
    """Tunables for the criticality score.

    Defaults: reference speed 50 km/h, reference acceleration 1.5 m/s^2,
    2 s history window, 4 m/s^2 assumed braking, no reaction time.
    """

    v_ref: float = 50.0 / 3.6
    a_ref: float = 1.5
    window_s: float = 2.0
    decel: float = 4.0
    reaction_time: float = 0.0
    epsilon_speed: float = 0.1
    penalty: str = "rho2"
    threshold_combined: float = 1.5
    threshold_penalized: float = 1.0

    def __post_init__(self):
        for name in ("v_ref", "a_ref", "decel", "epsilon_speed",
                     "threshold_combined", "threshold_penalized"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.window_s < 0.0 or self.reaction_time < 0.0:
            raise ValueError("window_s and reaction_time must be >= 0")
        if self.penalty not in PENALTY_KINDS:
            raise ValueError(f"penalty must be one of {PENALTY_KINDS}, got {self.penalty!r}")

    def threshold_for(self, kind: str) -> float:
        return self.threshold_combined if kind == "none" else self.threshold_penalized


def _coefficient_of_variation(speeds: Sequence[float], epsilon_speed: float) -> float:
    """Population standard deviation over the mean, with a floor on the mean.

    fsum keeps the result independent of agent ordering.
    """
    n = len(speeds)
    mean = math.fsum(speeds) / n
    var = math.fsum((v - mean) ** 2 for v in speeds) / n
    return math.sqrt(var) / max(mean, epsilon_speed)


def tq_macroscopic(scene: Scene, config: IutqConfig) -> float:
    """Speed spread of the whole scene (same value for every ego in it)."""
    if len(scene) == 0:
        raise EmptyScene(f"scene at {scene.timestamp_ms} ms has no agents")
    return _coefficient_of_variation([s.speed for s in scene.agents], config.epsilon_speed)


def tq_metascopic(scene: Scene, ego_id: int, config: IutqConfig) -> float:
    """Fraction of the other agents inside the ego's braking envelope, in [0, 1]."""
    members = agents_within_braking_distance(scene, ego_id, config.decel, config.reaction_time)
    return _metascopic(scene, members)


def _metascopic(scene: Scene, members: list) -> float:
    n_others = len(scene) - 1
    if n_others == 0:
        return 0.0
    return len(members) / n_others


def tq_mesoscopic(scene: Scene, ego_id: int, config: IutqConfig) -> float:
    """Speed spread among the ego and the agents inside its braking envelope."""
    members = agents_within_braking_distance(scene, ego_id, config.decel, config.reaction_time)
    return _mesoscopic(scene, ego_id, members, config)


def _mesoscopic(scene: Scene, ego_id: int, members: list, config: IutqConfig) -> float:
    if not members:
        return 0.0
    speeds = [scene.get(ego_id).speed] + [s.speed for s in members]
    return _coefficient_of_variation(speeds, config.epsilon_speed)


def tq_microscopic(
    ts: ScenarioTrackset, ego_id: int, timestamp_ms: int, config: IutqConfig
) -> float:
    """Ego's own recent dynamics against the reference speed and acceleration."""
    hist = history(ts, ego_id, timestamp_ms, config.window_s)
    return 0.5 * (hist.mean_abs_accel / config.a_ref + hist.mean_speed / config.v_ref)


def tq_combined(macro: float, meta: float, meso: float, micro: float) -> float:
    """l2 composition of the four layers; dominates each of them."""
    return math.sqrt(math.fsum((macro * macro, meta * meta, meso * meso, micro * micro)))


def penalty_factor(kind: str, d_min: float | None) -> float:
    """Distance penalty for the given kind.

    Kind "none" is the identity. The rho kinds need the minimum gap; with no
    other agent present (d_min None) they collapse the score to 0.
    """
    if kind == "none":
        return 1.0
    if d_min is None:
        return 0.0
    if kind == "rho1":
        return RHO1_NUMERATOR_M / d_min
    if kind == "rho2":
        return math.exp(-d_min / RHO2_SCALE_M)
    if kind == "rho3":
        return math.exp(-(d_min - RHO3_OFFSET_M) / RHO3_SCALE_M)
    raise ValueError(f"unknown penalty kind {kind!r}")


@dataclass(frozen=True)
class IutqBreakdown:
    """Every intermediate of one (scene, ego) scoring, for reports and audits."""

    recording_id: str
    timestamp_ms: int
    ego_id: int
    tq_macro: float
    tq_meta: float
    tq_meso: float
    tq_micro: float
    tq_combined: float
    d_min: float | None
    penalty: str
    penalty_factor: float
    tq_final: float
    critical: bool

    def final_for(self, kind: str) -> float:
        """Final score under a different penalty kind, from the same layers."""
        return penalty_factor(kind, self.d_min) * self.tq_combined


def _breakdown(
    ts: ScenarioTrackset,
    scene: Scene,
    ego_id: int,
    macro: float,
    config: IutqConfig,
) -> IutqBreakdown:
    members = agents_within_braking_distance(scene, ego_id, config.decel, config.reaction_time)
    meta = _metascopic(scene, members)
    meso = _mesoscopic(scene, ego_id, members, config)
    micro = tq_microscopic(ts, ego_id, scene.timestamp_ms, config)
    combined = tq_combined(macro, meta, meso, micro)
    d_min = min_gap_to_any(scene, ego_id)
    factor = penalty_factor(config.penalty, d_min)
    final = factor * combined
    return IutqBreakdown(
        recording_id=ts.recording_id,
        timestamp_ms=scene.timestamp_ms,
        ego_id=ego_id,
        tq_macro=macro,
        tq_meta=meta,
        tq_meso=meso,
        tq_micro=micro,
        tq_combined=combined,
        d_min=d_min,
        penalty=config.penalty,
        penalty_factor=factor,
        tq_final=final,
        critical=final >= config.threshold_for(config.penalty),
    )


def score_scene(
    ts: ScenarioTrackset, scene: Scene, ego_id: int, config: IutqConfig | None = None
) -> IutqBreakdown:
    """Score one ego in one scene of a recording."""
    cfg = config if config is not None else IutqConfig()
    macro = tq_macroscopic(scene, cfg)
    return _breakdown(ts, scene, ego_id, macro, cfg)


def score_all(
    ts: ScenarioTrackset, config: IutqConfig | None = None
) -> Iterator[IutqBreakdown]:
    """Score every (scene, ego) of a recording, frames ascending, egos id-sorted.

    Empty scenes are skipped. The per-scene layer is computed once and shared
    across egos of that scene, so this matches score_scene value for value.
    """
    cfg = config if config is not None else IutqConfig()
    for scene in ts.frames:
        if len(scene) == 0:
            continue
        macro = tq_macroscopic(scene, cfg)
        for ego_id in scene.agent_ids:
            yield _breakdown(ts, scene, ego_id, macro, cfg)
