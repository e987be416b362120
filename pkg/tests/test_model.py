"""Scene model, distance queries, braking envelope, kinematic histories."""

from __future__ import annotations

import math

import pytest

from scenecrit.errors import MissingAgent
from scenecrit.model import (
    EPS_DISTANCE,
    AgentState,
    ScenarioTrackset,
    Scene,
    agents_within_braking_distance,
    braking_distance,
    center_distance,
    gap_distance,
    history,
    min_gap_to_any,
)


def car(agent_id, x, y, vx=0.0, vy=0.0, t=0, heading=0.0, length=4.0, width=2.0):
    return AgentState(
        agent_id=agent_id, timestamp_ms=t, x=x, y=y, vx=vx, vy=vy,
        heading=heading, length=length, width=width,
    )


def walker(agent_id, x, y, vx=0.0, vy=0.0, t=0):
    """Footprint-less state."""
    return AgentState(agent_id=agent_id, timestamp_ms=t, x=x, y=y, vx=vx, vy=vy)


def test_speed_is_velocity_norm():
    assert car(1, 0, 0, vx=3.0, vy=4.0).speed == 5.0
    assert walker(1, 0, 0).speed == 0.0


def test_scene_rejects_mixed_timestamps_and_duplicate_ids():
    with pytest.raises(ValueError):
        Scene(0, [car(1, 0, 0), car(2, 5, 0, t=100)])
    with pytest.raises(ValueError):
        Scene(0, [car(1, 0, 0), car(1, 5, 0)])


def test_scene_get_missing_agent():
    scene = Scene(0, [car(1, 0, 0)])
    with pytest.raises(MissingAgent):
        scene.get(2)


def test_center_vs_gap_distance():
    a = car(1, 0.0, 0.0)
    b = car(2, 10.0, 0.0)
    assert center_distance(a, b) == 10.0
    assert gap_distance(a, b) == 6.0  # two 4 m bodies take 2 m each off the line


def test_gap_distance_falls_back_to_centers_without_footprint():
    a = walker(1, 0.0, 0.0)
    b = car(2, 10.0, 0.0)
    assert gap_distance(a, b) == 10.0


def test_gap_distance_zero_on_contact():
    a = car(1, 0.0, 0.0)
    b = car(2, 3.0, 0.0)
    assert gap_distance(a, b) == 0.0


def test_braking_distance_values():
    ego = car(1, 0, 0, vx=10.0)
    assert braking_distance(ego, 4.0) == 12.5
    assert braking_distance(ego, 4.0, reaction_time=1.0) == 22.5
    assert braking_distance(car(1, 0, 0), 4.0) == 0.0
    with pytest.raises(ValueError):
        braking_distance(ego, 0.0)


def test_min_gap_clamps_at_floor():
    scene = Scene(0, [car(1, 0.0, 0.0), car(2, 4.05, 0.0)])
    # raw gap is 0.05, below the floor
    assert min_gap_to_any(scene, 1) == EPS_DISTANCE
    far = Scene(0, [car(1, 0.0, 0.0), car(2, 20.0, 0.0)])
    assert min_gap_to_any(far, 1) == 16.0


def test_min_gap_none_when_alone():
    scene = Scene(0, [car(1, 0.0, 0.0)])
    assert min_gap_to_any(scene, 1) is None


def test_min_gap_picks_true_minimum_not_center_minimum():
    # agent 3 has the nearer center but agent 2 the nearer body (long vehicle)
    scene = Scene(
        0,
        [
            car(1, 0.0, 0.0, length=4.0),
            car(2, 14.0, 0.0, length=20.0, width=2.0),
            car(3, 0.0, 13.0, length=2.0, width=2.0),
        ],
    )
    assert min_gap_to_any(scene, 1) == pytest.approx(2.0)


def test_agents_within_braking_distance():
    ego = car(1, 0.0, 0.0, vx=10.0)  # 12.5 m reach at 4 m/s^2
    near = car(2, 10.0, 0.0)
    edge = car(3, 16.5, 0.0)  # gap exactly 12.5
    outside = car(4, 17.0, 0.0)
    scene = Scene(0, [ego, near, edge, outside])
    members = agents_within_braking_distance(scene, 1, 4.0)
    assert [m.agent_id for m in members] == [2, 3]


def test_agents_within_braking_standing_ego_reaches_nothing():
    scene = Scene(0, [car(1, 0.0, 0.0), car(2, 6.0, 0.0)])
    assert agents_within_braking_distance(scene, 1, 4.0) == []
    # unless the bodies already touch: gap 0 is inside a zero reach
    touching = Scene(0, [car(1, 0.0, 0.0), car(2, 3.5, 0.0)])
    assert [m.agent_id for m in agents_within_braking_distance(touching, 1, 4.0)] == [2]


def make_track(speeds_by_frame, agent_id=1, gap_at=None):
    """Recording of one agent driving along x with the given per-frame speeds."""
    scenes = []
    x = 0.0
    for k, v in enumerate(speeds_by_frame):
        t = k * 100
        agents = []
        if gap_at is None or k not in gap_at:
            agents.append(AgentState(agent_id=agent_id, timestamp_ms=t, x=x, y=0.0, vx=v, vy=0.0))
        x += v * 0.1
        scenes.append(Scene(t, agents))
    return ScenarioTrackset("track", scenes)


def test_trackset_requires_constant_spacing():
    with pytest.raises(ValueError):
        ScenarioTrackset("bad", [Scene(0, []), Scene(300, [])], frame_interval_ms=100)


def test_history_window_and_accels():
    ts = make_track([10.0, 10.0, 8.0, 7.0, 7.0])
    hist = history(ts, 1, 400, window_s=0.2)
    assert hist.timestamps_ms == (200, 300, 400)
    assert hist.speeds == (8.0, 7.0, 7.0)
    # oldest sample still differences against the pre-window frame
    assert hist.accels == pytest.approx((-20.0, -10.0, 0.0))
    assert hist.mean_speed == pytest.approx(22.0 / 3.0)
    assert hist.mean_abs_accel == pytest.approx(10.0)


def test_history_starts_at_first_appearance():
    ts = make_track([10.0, 10.0, 10.0])
    hist = history(ts, 1, 200, window_s=5.0)
    assert hist.timestamps_ms == (0, 100, 200)
    assert hist.accels[0] == 0.0


def test_history_stops_at_tracking_gap():
    ts = make_track([10.0, 10.0, 10.0, 10.0, 10.0], gap_at={2})
    hist = history(ts, 1, 400, window_s=1.0)
    assert hist.timestamps_ms == (300, 400)
    # frame after the gap has no predecessor: acceleration restarts at 0
    assert hist.accels == (0.0, 0.0)


def test_history_missing_agent():
    ts = make_track([10.0, 10.0])
    with pytest.raises(MissingAgent):
        history(ts, 9, 100, window_s=1.0)


def test_history_mean_speed_of_constant_track():
    ts = make_track([7.0] * 30)
    hist = history(ts, 1, 2900, window_s=2.0)
    assert len(hist) == 21
    assert hist.mean_speed == 7.0
    assert hist.mean_abs_accel == 0.0
