"""The synthetic fixtures and the independent reference computations."""

from __future__ import annotations

import math

import pytest

from scenecrit.errors import InvalidSpec, UnsupportedMetric
from scenecrit.geometry import rect_corners, rect_gap
from scenecrit.model import gap_distance
from scenecrit.synth import (
    SceneSpec,
    bisect_wttc,
    brute_force_reference,
    build_crossing_scenario,
    build_random_recording,
    build_scene,
    rollout_ttc,
    sampled_gap,
)


def test_build_scene_is_seed_deterministic():
    spec = SceneSpec(seed=42, n_agents=7, speed_law="bimodal")
    assert build_scene(spec) == build_scene(spec)
    other = build_scene(SceneSpec(seed=43, n_agents=7, speed_law="bimodal"))
    assert build_scene(spec) != other


def test_build_scene_speed_laws():
    one_fast = build_scene(SceneSpec(seed=1, n_agents=3, speed_law="one_fast"))
    assert sorted(a.speed for a in one_fast.agents) == [0.0, 0.0, pytest.approx(10.0)]
    standing = build_scene(SceneSpec(seed=1, n_agents=4, speed_law="all_standing"))
    assert all(a.speed == 0.0 for a in standing.agents)
    uniform = build_scene(SceneSpec(seed=9, n_agents=5, speed_law="uniform"))
    speeds = {round(a.speed, 9) for a in uniform.agents}
    assert len(speeds) == 1 and speeds.pop() > 0.0


def test_build_scene_agents_have_car_footprints():
    scene = build_scene(SceneSpec(seed=3, n_agents=4))
    assert scene.agent_ids == [1, 2, 3, 4]
    for a in scene.agents:
        assert (a.length, a.width) == (4.5, 1.8)
        assert a.has_footprint


def test_scene_spec_validation():
    with pytest.raises(InvalidSpec):
        SceneSpec(seed=1, n_agents=0)
    with pytest.raises(InvalidSpec):
        SceneSpec(seed=1, n_agents=3, speed_law="gaussian")
    with pytest.raises(InvalidSpec):
        SceneSpec(seed=1, n_agents=3, spatial_law="ring")
    with pytest.raises(InvalidSpec):
        SceneSpec(seed=1, n_agents=3, bounds_m=0.0)


def test_crossing_scenario_geometry():
    ts = build_crossing_scenario(offset_s=1.2)
    first = ts.frames[0]
    assert first.agent_ids == [1, 2]
    # agent 1 reaches (0.5, 0.5) at 3.0 s, agent 2 at 4.2 s
    a1 = ts.state_at(3000, 1)
    a2 = ts.state_at(4200, 2)
    assert (a1.x, a1.y) == (0.5, 0.5)
    assert (a2.x, a2.y) == (0.5, 0.5)
    assert ts.state_at(3000, 2).y < 0.5  # still approaching


def test_crossing_scenario_offset_snaps_to_grid():
    ts = build_crossing_scenario(offset_s=0.17)
    # 0.17 s rounds to 0.2 s on the 100 ms grid
    a2 = ts.state_at(3200, 2)
    assert (a2.x, a2.y) == (0.5, 0.5)


def test_crossing_scenario_zero_offset_collides():
    ts = build_crossing_scenario(offset_s=0.0)
    scene = ts.scene_at(3000)
    assert gap_distance(scene.get(1), scene.get(2)) == 0.0


def test_crossing_scenario_bystander():
    ts = build_crossing_scenario(with_bystander=True)
    for scene in ts.frames:
        b = scene.get(3)
        assert (b.x, b.y, b.speed) == (6.5, 6.5, 0.0)


def test_crossing_scenario_validation():
    with pytest.raises(InvalidSpec):
        build_crossing_scenario(speeds=(0.0, 10.0))
    with pytest.raises(InvalidSpec):
        build_crossing_scenario(offset_s=-1.0)


def test_random_recording_shape_and_bounds():
    ts = build_random_recording(n_agents=6, n_frames=50, seed=13, bounds_m=80.0)
    assert len(ts.frames) == 50
    assert ts.frame_interval_ms == 100
    for scene in ts.frames:
        assert len(scene.agents) == 6
        for a in scene.agents:
            assert 0.0 <= a.x <= 80.0
            assert 0.0 <= a.y <= 80.0
    assert build_random_recording(n_agents=6, n_frames=50, seed=13, bounds_m=80.0).frames[
        -1
    ] == ts.frames[-1]


def test_random_recording_has_braking_agents():
    ts = build_random_recording(n_agents=20, n_frames=200, seed=7)
    slowed = 0
    for a_id in ts.agent_ids:
        v0 = ts.frames[0].get(a_id).speed
        v1 = ts.frames[-1].get(a_id).speed
        if v1 < v0 - 1e-9:
            slowed += 1
    assert slowed >= 2


def test_bisect_wttc_against_closed_form():
    for speed_a, speed_b, gap, a_max in [
        (0.0, 0.0, 9.0, 2.0),
        (5.0, 3.0, 20.0, 7.0),
        (14.0, 0.0, 1.0, 0.5),
    ]:
        vsum = speed_a + speed_b
        closed = (math.sqrt(vsum * vsum + 4.0 * a_max * gap) - vsum) / (2.0 * a_max)
        assert bisect_wttc(speed_a, speed_b, gap, a_max) == pytest.approx(closed, abs=1e-8)
    assert bisect_wttc(5.0, 5.0, 0.0, 7.0) == 0.0


def test_rollout_ttc_head_on():
    from scenecrit.model import AgentState

    a = AgentState(agent_id=1, timestamp_ms=0, x=0.0, y=0.0, vx=5.0, vy=0.0)
    b = AgentState(agent_id=2, timestamp_ms=0, x=20.0, y=0.0, vx=0.0, vy=0.0)
    assert rollout_ttc(a, b) == pytest.approx(4.0, abs=2e-3)
    # diverging points never meet inside the horizon
    c = AgentState(agent_id=3, timestamp_ms=0, x=20.0, y=0.0, vx=5.0, vy=0.0)
    assert rollout_ttc(a, c, horizon_s=5.0) is None


def test_sampled_gap_against_exact():
    a = rect_corners(0.0, 0.0, 0.0, 4.0, 2.0)
    b = rect_corners(10.0, 3.0, 0.7, 4.0, 2.0)
    assert sampled_gap(a, b, n=4000) == pytest.approx(rect_gap(a, b), abs=0.02)
    overlapping = rect_corners(1.0, 0.5, 0.3, 4.0, 2.0)
    assert sampled_gap(a, overlapping, n=1000) == 0.0


def test_brute_force_reference_dispatch():
    ts = build_crossing_scenario(offset_s=1.2)
    dist = brute_force_reference("dist", ts)
    wttc_ref = brute_force_reference("wttc", ts)
    key = (0, 1, 2)
    assert dist[key] > 0.0
    assert dist[key] == dist[(0, 2, 1)]
    assert wttc_ref[key] > 0.0
    with pytest.raises(UnsupportedMetric):
        brute_force_reference("pet", ts)
