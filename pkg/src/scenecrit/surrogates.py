"""Baseline surrogate-safety metrics.

Seven pairwise metrics: body gap (dist), time-to-collision (ttc), a variant
with a braking adversary (pttc), a worst-case variant where both agents may
accelerate toward each other (wttc), post-encroachment time (pet), time spent
in the shared conflict region (et), and the arrival-time gap at the projected
path crossing (gt). All are "smaller is worse"; a scene is critical under a
metric when the minimum over adversaries is defined and below the threshold.

Time-domain metrics run on current-state kinematics; pet and et instead
rasterize the observed paths onto a square conflict grid and compare
occupancy intervals, so they need the whole recording.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, NamedTuple, Sequence

from .errors import UnsupportedMetric
from .model import AgentState, ScenarioTrackset, Scene, _raw_min_gap

BASELINE_METRICS = ("dist", "et", "gt", "pet", "pttc", "ttc", "wttc")


@dataclass(frozen=True)
class SurrogateConfig:
    """Thresholds and model parameters for the baseline metrics.

    Thresholds are seconds except dist_threshold (meters). wttc assumes both
    agents can accelerate at a_max toward each other; pttc_decel, when set,
    overrides the adversary deceleration estimated from the recording.
    """

    dist_threshold: float = 1.0
    ttc_threshold: float = 1.5
    pttc_threshold: float = 1.5
    wttc_threshold: float = 0.47
    pet_threshold: float = 1.5
    et_threshold: float = 1.5
    gt_threshold: float = 1.5
    a_max_wttc: float = 7.0
    pttc_decel: float | None = None
    conflict_cell_m: float = 1.0

    def __post_init__(self):
        for name in ("dist_threshold", "ttc_threshold", "pttc_threshold", "wttc_threshold",
                     "pet_threshold", "et_threshold", "gt_threshold", "a_max_wttc",
                     "conflict_cell_m"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.pttc_decel is not None and self.pttc_decel < 0.0:
            raise ValueError(f"pttc_decel must be >= 0, got {self.pttc_decel}")

    def threshold_for(self, metric_id: str) -> float:
        try:
            return getattr(self, f"{metric_id}_threshold")
        except AttributeError:
            raise UnsupportedMetric(f"no threshold for metric {metric_id!r}") from None


def _pair_kinematics(a: AgentState, b: AgentState) -> tuple[float, float, float]:
    """(center distance, closing speed, circumcircle gap) for a pair.

    Closing speed is the rate at which the center distance currently shrinks;
    negative when the agents separate. For coincident centers it degrades to
    the relative speed.
    """
    dx = b.x - a.x
    dy = b.y - a.y
    d = math.hypot(dx, dy)
    rvx = b.vx - a.vx
    rvy = b.vy - a.vy
    if d > 0.0:
        closing = -(dx * rvx + dy * rvy) / d
    else:
        closing = math.hypot(rvx, rvy)
    gap = d - a.circumradius - b.circumradius
    return d, closing, (gap if gap > 0.0 else 0.0)


def dist_metric(scene: Scene, ego_id: int) -> float | None:
    """Smallest body gap from ego to any other agent; None when alone.

    Unlike the floor applied for penalty factors, this reports the raw gap,
    so touching bodies give 0.
    """
    return _raw_min_gap(scene, ego_id)


def ttc(scene: Scene, ego_id: int, adversary_id: int) -> float | None:
    """Circumcircle gap over closing speed; None when the pair is not closing."""
    _, closing, gap = _pair_kinematics(scene.get(ego_id), scene.get(adversary_id))
    if closing <= 0.0:
        return None
    return gap / closing


def pttc(
    scene: Scene, ego_id: int, adversary_id: int, decel: float | None = None
) -> float | None:
    """Time to contact while the adversary brakes at a constant rate.

    Solves (1/2)*decel*t^2 + closing*t = gap for the smallest nonnegative t.
    With decel None or 0 this is exactly ttc. None when contact never happens
    under the model (not closing and adversary not braking).
    """
    da = 0.0 if decel is None else decel
    if da < 0.0:
        raise ValueError(f"decel must be >= 0, got {decel}")
    _, closing, gap = _pair_kinematics(scene.get(ego_id), scene.get(adversary_id))
    if da == 0.0:
        if closing <= 0.0:
            return None
        return gap / closing
    if gap == 0.0:
        return 0.0
    root = (math.sqrt(closing * closing + 2.0 * da * gap) - closing) / da
    return root if root > 0.0 else None


def wttc(scene: Scene, ego_id: int, adversary_id: int, a_max: float = 7.0) -> float:
    """Worst-case time to contact: both reachable disks grow at a_max.

    Earliest t >= 0 with speed_e*t + speed_a*t + a_max*t^2 >= circumcircle
    gap. Always defined because the disks grow without bound; 0 when the
    circumcircles already touch.
    """
    if a_max <= 0.0:
        raise ValueError(f"a_max must be positive, got {a_max}")
    a = scene.get(ego_id)
    b = scene.get(adversary_id)
    _, _, gap = _pair_kinematics(a, b)
    if gap == 0.0:
        return 0.0
    vsum = a.speed + b.speed
    return (math.sqrt(vsum * vsum + 4.0 * a_max * gap) - vsum) / (2.0 * a_max)


def gt(scene: Scene, ego_id: int, adversary_id: int) -> float | None:
    """Arrival-time gap at the crossing of the two current motion rays.

    Both agents are projected at constant velocity; the metric is the
    difference of their arrival times at the intersection point. None for
    standing agents, parallel headings, or crossings behind either agent.
    """
    a = scene.get(ego_id)
    b = scene.get(adversary_id)
    speed_a = a.speed
    speed_b = b.speed
    if speed_a <= 0.0 or speed_b <= 0.0:
        return None
    det = b.vx * a.vy - a.vx * b.vy
    if abs(det) <= 1e-12 * max(1.0, speed_a * speed_b):
        return None
    dx = b.x - a.x
    dy = b.y - a.y
    t_a = (b.vx * dy - b.vy * dx) / det
    t_b = (a.vx * dy - a.vy * dx) / det
    if t_a < 0.0 or t_b < 0.0:
        return None
    return abs(t_a - t_b)


_CELL_OFF = 1 << 19
_CELL_STRIDE = 1 << 20


def _cell_key(ix: int, iy: int) -> int:
    return (ix + _CELL_OFF) * _CELL_STRIDE + (iy + _CELL_OFF)


def _cell_tuple(key: int) -> tuple[int, int]:
    return key // _CELL_STRIDE - _CELL_OFF, key % _CELL_STRIDE - _CELL_OFF


_lattice_cache: dict[tuple[float, float, float], list[tuple[float, float]]] = {}


def _footprint_lattice(length: float, width: float, cell: float) -> list[tuple[float, float]]:
    """Body-frame sample offsets covering a footprint at half-cell spacing."""
    key = (length, width, cell)
    cached = _lattice_cache.get(key)
    if cached is not None:
        return cached
    half = 0.5 * cell
    n_l = max(2, math.ceil(length / half) + 1)
    n_w = max(2, math.ceil(width / half) + 1)
    points = []
    for i in range(n_l):
        ox = (i / (n_l - 1) - 0.5) * length
        for j in range(n_w):
            points.append((ox, (j / (n_w - 1) - 0.5) * width))
    _lattice_cache[key] = points
    return points


def _state_cells(state: AgentState, cell: float) -> set[int]:
    """Grid cells covered by one state's footprint (center cell for point agents)."""
    if not state.has_footprint:
        return {_cell_key(int(state.x // cell), int(state.y // cell))}
    c = math.cos(state.heading)
    s = math.sin(state.heading)
    x = state.x
    y = state.y
    cells = set()
    for ox, oy in _footprint_lattice(state.length, state.width, cell):
        px = x + c * ox - s * oy
        py = y + s * ox + c * oy
        cells.add(_cell_key(int(px // cell), int(py // cell)))
    return cells


def _agent_occupancy(ts: ScenarioTrackset, agent_id: int, cell: float) -> dict[int, list[int]]:
    """cell -> [first_entry_ms, last_exit_ms] over the agent's whole recording."""
    occupancy: dict[int, list[int]] = {}
    for scene in ts.frames:
        state = scene._by_id.get(agent_id)
        if state is None:
            continue
        t = scene.timestamp_ms
        for key in _state_cells(state, cell):
            interval = occupancy.get(key)
            if interval is None:
                occupancy[key] = [t, t]
            else:
                interval[1] = t
    return occupancy


def conflict_regions(
    ts: ScenarioTrackset, ego_id: int, adversary_id: int, cell: float = 1.0
) -> dict[tuple[int, int], tuple[tuple[int, int], tuple[int, int]]]:
    """Shared conflict cells of a pair with both occupancy intervals (ms).

    Keys are integer grid coordinates; each value is ((ego_entry, ego_exit),
    (adv_entry, adv_exit)). Empty when the observed paths never share a cell.
    """
    occ_e = _agent_occupancy(ts, ego_id, cell)
    occ_a = _agent_occupancy(ts, adversary_id, cell)
    if len(occ_a) < len(occ_e):
        small, large = occ_a, occ_e
        swapped = True
    else:
        small, large = occ_e, occ_a
        swapped = False
    out = {}
    for key, interval in small.items():
        other = large.get(key)
        if other is None:
            continue
        pair = (other, interval) if swapped else (interval, other)
        out[_cell_tuple(key)] = (tuple(pair[0]), tuple(pair[1]))
    return out


def _pet_from_intervals(shared: Sequence[tuple[tuple[int, int], tuple[int, int]]]) -> float:
    """Smallest nonnegative handover time over shared cells, in seconds.

    Overlapping occupancy (a true co-occupation) counts as 0.
    """
    best_ms = None
    for (e_in, e_out), (a_in, a_out) in shared:
        candidates = [c for c in (a_in - e_out, e_in - a_out) if c >= 0]
        gap_ms = min(candidates) if candidates else 0
        if best_ms is None or gap_ms < best_ms:
            best_ms = gap_ms
    return best_ms / 1000.0


def _et_from_intervals(
    shared: Sequence[tuple[tuple[int, int], tuple[int, int]]], frame_interval_ms: int
) -> float:
    """Occupancy span of the first-arriving agent over the shared region, in seconds."""
    e_first = min(iv[0][0] for iv in shared)
    a_first = min(iv[1][0] for iv in shared)
    idx = 0 if e_first <= a_first else 1
    first = min(iv[idx][0] for iv in shared)
    last = max(iv[idx][1] for iv in shared)
    return max(last - first, frame_interval_ms) / 1000.0


def pet(
    ts: ScenarioTrackset, ego_id: int, adversary_id: int, cell: float = 1.0
) -> float | None:
    """Post-encroachment time of a pair; None when their paths share no cell."""
    regions = conflict_regions(ts, ego_id, adversary_id, cell)
    if not regions:
        return None
    return _pet_from_intervals(list(regions.values()))


def et(
    ts: ScenarioTrackset, ego_id: int, adversary_id: int, cell: float = 1.0
) -> float | None:
    """Time the first-arriving agent spends in the shared region; None without one."""
    regions = conflict_regions(ts, ego_id, adversary_id, cell)
    if not regions:
        return None
    return _et_from_intervals(list(regions.values()), ts.frame_interval_ms)


class PairMetricValue(NamedTuple):
    """One pairwise metric evaluation; value None means undefined."""

    timestamp_ms: int
    ego_id: int
    adversary_id: int
    metric_id: str
    value: float | None


class SceneMetricValue(NamedTuple):
    """Per-(scene, ego) minimum over adversaries, with its criticality flag."""

    timestamp_ms: int
    ego_id: int
    metric_id: str
    value: float | None
    critical: bool


@dataclass(frozen=True)
class _PairConflict:
    """Scenario-level pet/et of one pair plus the frame window they attach to."""

    pet_s: float
    et_s: float
    window_lo_ms: int
    window_hi_ms: int


def _pair_conflicts(ts: ScenarioTrackset, cell: float) -> dict[tuple[int, int], _PairConflict]:
    """pet/et for every pair whose observed paths share a conflict cell.

    Built from an inverted cell index so cost scales with occupied cells, not
    with the pair count.
    """
    by_cell: dict[int, dict[int, list[int]]] = {}
    for agent_id in ts.agent_ids:
        for key, interval in _agent_occupancy(ts, agent_id, cell).items():
            by_cell.setdefault(key, {})[agent_id] = interval
    shared: dict[tuple[int, int], list[tuple[tuple[int, int], tuple[int, int]]]] = {}
    for agents in by_cell.values():
        if len(agents) < 2:
            continue
        for a, b in combinations(sorted(agents), 2):
            shared.setdefault((a, b), []).append((tuple(agents[a]), tuple(agents[b])))
    out = {}
    for pair, intervals in shared.items():
        lo = min(min(e[0], o[0]) for e, o in intervals)
        hi = max(max(e[1], o[1]) for e, o in intervals)
        out[pair] = _PairConflict(
            pet_s=_pet_from_intervals(intervals),
            et_s=_et_from_intervals(intervals, ts.frame_interval_ms),
            window_lo_ms=lo,
            window_hi_ms=hi,
        )
    return out


def _frame_decels(ts: ScenarioTrackset, scene: Scene) -> dict[int, float]:
    """Current deceleration magnitude per agent (0 for first frames and speed-ups)."""
    dt_s = ts.frame_interval_ms / 1000.0
    out = {}
    for state in scene.agents:
        before = ts.state_at(scene.timestamp_ms - ts.frame_interval_ms, state.agent_id)
        if before is None:
            out[state.agent_id] = 0.0
        else:
            drop = (before.speed - state.speed) / dt_s
            out[state.agent_id] = drop if drop > 0.0 else 0.0
    return out


def _check_metrics(metrics: Sequence[str]) -> tuple[str, ...]:
    bad = [m for m in metrics if m not in BASELINE_METRICS]
    if bad:
        raise UnsupportedMetric(f"unknown baseline metrics: {bad}")
    return tuple(m for m in BASELINE_METRICS if m in metrics)


def score_all_surrogates(
    ts: ScenarioTrackset,
    config: SurrogateConfig | None = None,
    metrics: Sequence[str] = BASELINE_METRICS,
) -> Iterator[SceneMetricValue]:
    """Scene-level baseline values for every (scene, ego) of a recording.

    Rows come out frames ascending, egos id-sorted, metrics in roster order.
    Each value is the minimum over adversaries of the defined pair values;
    pet/et contribute only inside the pair's conflict window. A row is
    critical when its value is defined and below the metric threshold.
    """
    cfg = config if config is not None else SurrogateConfig()
    wanted = _check_metrics(metrics)
    time_metrics = [m for m in wanted if m in ("ttc", "pttc", "wttc", "gt")]
    conflicts = (
        _pair_conflicts(ts, cfg.conflict_cell_m)
        if ("pet" in wanted or "et" in wanted)
        else {}
    )
    for scene in ts.frames:
        if len(scene) == 0:
            continue
        ids = scene.agent_ids
        t = scene.timestamp_ms
        minima: dict[str, dict[int, float]] = {m: {} for m in wanted}

        if time_metrics:
            # One kinematics evaluation per unordered pair feeds every time
            # metric; the expressions mirror the pair functions above exactly,
            # so scene rows agree with them bit for bit.
            m_ttc = minima.get("ttc")
            m_pttc = minima.get("pttc")
            m_wttc = minima.get("wttc")
            m_gt = minima.get("gt")
            fixed_da = cfg.pttc_decel
            decels = (
                _frame_decels(ts, scene) if (m_pttc is not None and fixed_da is None) else {}
            )
            a_max = cfg.a_max_wttc
            states = [scene.get(i) for i in ids]
            n = len(states)
            for i in range(n - 1):
                sa = states[i]
                id_a = ids[i]
                ax = sa.x
                ay = sa.y
                avx = sa.vx
                avy = sa.vy
                r_a = sa.circumradius
                speed_a = sa.speed
                for j in range(i + 1, n):
                    sb = states[j]
                    id_b = ids[j]
                    dx = sb.x - ax
                    dy = sb.y - ay
                    d = math.hypot(dx, dy)
                    rvx = sb.vx - avx
                    rvy = sb.vy - avy
                    if d > 0.0:
                        closing = -(dx * rvx + dy * rvy) / d
                    else:
                        closing = math.hypot(rvx, rvy)
                    gap = d - r_a - sb.circumradius
                    if gap < 0.0:
                        gap = 0.0
                    if m_ttc is not None and closing > 0.0:
                        v = gap / closing
                        cur = m_ttc.get(id_a)
                        if cur is None or v < cur:
                            m_ttc[id_a] = v
                        cur = m_ttc.get(id_b)
                        if cur is None or v < cur:
                            m_ttc[id_b] = v
                    if m_wttc is not None:
                        if gap == 0.0:
                            v = 0.0
                        else:
                            vsum = speed_a + sb.speed
                            v = (math.sqrt(vsum * vsum + 4.0 * a_max * gap) - vsum) / (
                                2.0 * a_max
                            )
                        cur = m_wttc.get(id_a)
                        if cur is None or v < cur:
                            m_wttc[id_a] = v
                        cur = m_wttc.get(id_b)
                        if cur is None or v < cur:
                            m_wttc[id_b] = v
                    if m_gt is not None and speed_a > 0.0 and sb.speed > 0.0:
                        det = sb.vx * avy - avx * sb.vy
                        if abs(det) > 1e-12 * max(1.0, speed_a * sb.speed):
                            t_a = (sb.vx * dy - sb.vy * dx) / det
                            t_b = (avx * dy - avy * dx) / det
                            if t_a >= 0.0 and t_b >= 0.0:
                                v = abs(t_a - t_b)
                                cur = m_gt.get(id_a)
                                if cur is None or v < cur:
                                    m_gt[id_a] = v
                                cur = m_gt.get(id_b)
                                if cur is None or v < cur:
                                    m_gt[id_b] = v
                    if m_pttc is not None:
                        if fixed_da is not None:
                            da_for_a = da_for_b = fixed_da
                        else:
                            da_for_a = decels[id_b]
                            da_for_b = decels[id_a]
                        for ego_id, da in ((id_a, da_for_a), (id_b, da_for_b)):
                            if da == 0.0:
                                v = gap / closing if closing > 0.0 else None
                            elif gap == 0.0:
                                v = 0.0
                            else:
                                v = (
                                    math.sqrt(closing * closing + 2.0 * da * gap) - closing
                                ) / da
                                if v <= 0.0:
                                    v = None
                            if v is not None:
                                cur = m_pttc.get(ego_id)
                                if cur is None or v < cur:
                                    m_pttc[ego_id] = v

        if "dist" in wanted:
            for ego_id in ids:
                _fold(minima["dist"], ego_id, dist_metric(scene, ego_id))

        if conflicts:
            for (id_a, id_b), conflict in conflicts.items():
                if not (conflict.window_lo_ms <= t <= conflict.window_hi_ms):
                    continue
                if id_a not in scene or id_b not in scene:
                    continue
                if "pet" in wanted:
                    _fold(minima["pet"], id_a, conflict.pet_s)
                    _fold(minima["pet"], id_b, conflict.pet_s)
                if "et" in wanted:
                    _fold(minima["et"], id_a, conflict.et_s)
                    _fold(minima["et"], id_b, conflict.et_s)

        for ego_id in ids:
            for metric in wanted:
                value = minima[metric].get(ego_id)
                critical = value is not None and value < cfg.threshold_for(metric)
                yield SceneMetricValue(t, ego_id, metric, value, critical)


def _fold(best: dict[int, float], ego_id: int, value: float | None) -> None:
    if value is None:
        return
    current = best.get(ego_id)
    if current is None or value < current:
        best[ego_id] = value


def pair_metric_values(
    ts: ScenarioTrackset,
    config: SurrogateConfig | None = None,
    metrics: Sequence[str] = BASELINE_METRICS,
) -> Iterator[PairMetricValue]:
    """Every pairwise metric evaluation, one row per (scene, ego, adversary, metric).

    This is the audit surface behind score_all_surrogates; the scene rows are
    the minima of these values. Directed pairs, so pttc can use the
    adversary's braking.
    """
    cfg = config if config is not None else SurrogateConfig()
    wanted = _check_metrics(metrics)
    conflicts = (
        _pair_conflicts(ts, cfg.conflict_cell_m)
        if ("pet" in wanted or "et" in wanted)
        else {}
    )
    for scene in ts.frames:
        ids = scene.agent_ids
        t = scene.timestamp_ms
        decels = _frame_decels(ts, scene) if "pttc" in wanted else {}
        for ego_id in ids:
            for adv_id in ids:
                if adv_id == ego_id:
                    continue
                for metric in wanted:
                    if metric == "dist":
                        value = scene.gap(ego_id, adv_id)
                    elif metric == "ttc":
                        value = ttc(scene, ego_id, adv_id)
                    elif metric == "pttc":
                        da = cfg.pttc_decel if cfg.pttc_decel is not None else decels[adv_id]
                        value = pttc(scene, ego_id, adv_id, da)
                    elif metric == "wttc":
                        value = wttc(scene, ego_id, adv_id, cfg.a_max_wttc)
                    elif metric == "gt":
                        value = gt(scene, ego_id, adv_id)
                    else:
                        pair = (ego_id, adv_id) if ego_id < adv_id else (adv_id, ego_id)
                        conflict = conflicts.get(pair)
                        value = None
                        if conflict is not None and (
                            conflict.window_lo_ms <= t <= conflict.window_hi_ms
                        ):
                            value = conflict.pet_s if metric == "pet" else conflict.et_s
                    yield PairMetricValue(t, ego_id, adv_id, metric, value)
