"""Reading and writing the delimited file formats.

Three formats live here: track recordings (one agent state per row on a fixed
frame grid), ground-truth label files, and the long-format score files the
batch scorer emits. Parsing is per row so one bad line costs one row, not the
file; labels are the exception, they are ground truth and fail hard.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, TextIO

from .errors import DuplicateLabel, EmptyRecording, FileError, FormatError
from .model import AgentState, ScenarioTrackset, Scene

TRACK_COLUMNS = (
    "track_id",
    "frame_id",
    "timestamp_ms",
    "agent_type",
    "x",
    "y",
    "vx",
    "vy",
    "psi_rad",
    "length",
    "width",
)

LABEL_COLUMNS = ("recording_id", "ego_id", "timestamp_ms", "critical")

SCORE_COLUMNS = ("recording_id", "timestamp_ms", "ego_id", "metric_id", "value", "critical")

DEFAULT_AGENT_TYPES = ("car", "truck_bus")


@dataclass
class IngestReport:
    """What happened while loading one track file."""

    path: str
    recording_id: str
    rows_read: int = 0
    rows_dropped: int = 0
    rows_filtered: int = 0
    n_agents: int = 0
    n_scenes: int = 0

    def summary(self) -> str:
        return (
            f"{self.recording_id}: {self.rows_read} rows, "
            f"{self.rows_dropped} dropped, {self.rows_filtered} filtered by type, "
            f"{self.n_agents} agents over {self.n_scenes} scenes"
        )


def _normalize_agent_type(raw: str) -> str:
    value = raw.strip().lower()
    if value in ("car", "truck_bus"):
        return value
    return "other"


def _open_for_read(path: str | Path) -> TextIO:
    try:
        return open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc


def _check_header(fieldnames: Sequence[str] | None, required: Sequence[str], path) -> None:
    names = [n.strip() for n in fieldnames] if fieldnames else []
    missing = [c for c in required if c not in names]
    if missing:
        raise FormatError(f"{path}: header is missing columns {missing}")


def _parse_extent(raw: str | None) -> float | None:
    """Length/width cell: empty or nonpositive means no usable footprint."""
    if raw is None:
        return None
    text = raw.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    if not math.isfinite(value) or value <= 0.0:
        return None
    return value


def load_trackfile(
    path: str | Path,
    recording_id: str | None = None,
    agent_types: Sequence[str] = DEFAULT_AGENT_TYPES,
    frame_interval_ms: int = 100,
) -> tuple[ScenarioTrackset, IngestReport]:
    """Load one recording.

    Malformed rows (unparseable numbers, non-finite values, timestamps off the
    frame grid, duplicated (track, frame) keys) are dropped and counted.
    Rows whose agent type is outside ``agent_types`` are counted separately.
    Raises EmptyRecording when nothing survives.
    """
    rec_id = recording_id if recording_id is not None else Path(path).stem
    report = IngestReport(path=str(path), recording_id=rec_id)
    wanted = set(agent_types)
    states: dict[tuple[int, int], AgentState] = {}
    with _open_for_read(path) as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, TRACK_COLUMNS, path)
        for row in reader:
            report.rows_read += 1
            try:
                track_id = int(row["track_id"])
                frame_id = int(row["frame_id"])
                timestamp_ms = int(row["timestamp_ms"])
                x = float(row["x"])
                y = float(row["y"])
                vx = float(row["vx"])
                vy = float(row["vy"])
                psi = float(row["psi_rad"])
            except (TypeError, ValueError, KeyError):
                report.rows_dropped += 1
                continue
            if not all(map(math.isfinite, (x, y, vx, vy, psi))):
                report.rows_dropped += 1
                continue
            if timestamp_ms != frame_id * frame_interval_ms or timestamp_ms < 0:
                report.rows_dropped += 1
                continue
            if (track_id, timestamp_ms) in states:
                report.rows_dropped += 1
                continue
            agent_type = _normalize_agent_type(row.get("agent_type") or "")
            if agent_type not in wanted:
                report.rows_filtered += 1
                continue
            states[(track_id, timestamp_ms)] = AgentState(
                agent_id=track_id,
                timestamp_ms=timestamp_ms,
                x=x,
                y=y,
                vx=vx,
                vy=vy,
                heading=math.remainder(psi, math.tau),
                length=_parse_extent(row.get("length")),
                width=_parse_extent(row.get("width")),
                agent_type=agent_type,
            )
    if not states:
        raise EmptyRecording(f"{path}: no usable rows after validation and type filtering")
    by_time: dict[int, list[AgentState]] = {}
    for (_, timestamp_ms), state in states.items():
        by_time.setdefault(timestamp_ms, []).append(state)
    t_min = min(by_time)
    t_max = max(by_time)
    scenes = []
    for t in range(t_min, t_max + frame_interval_ms, frame_interval_ms):
        scenes.append(Scene(t, by_time.get(t, ())))
    ts = ScenarioTrackset(rec_id, scenes, frame_interval_ms)
    report.n_agents = len({tid for tid, _ in states})
    report.n_scenes = len(scenes)
    return ts, report


def write_trackfile(ts: ScenarioTrackset, path: str | Path) -> None:
    """Serialize a recording back to the track-file format.

    Floats are written with repr, so load(write(ts)) reproduces the same
    values bit for bit.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACK_COLUMNS)
        for scene in ts.frames:
            for state in sorted(scene.agents, key=lambda s: s.agent_id):
                writer.writerow(
                    (
                        state.agent_id,
                        scene.timestamp_ms // ts.frame_interval_ms,
                        scene.timestamp_ms,
                        state.agent_type,
                        repr(state.x),
                        repr(state.y),
                        repr(state.vx),
                        repr(state.vy),
                        repr(state.heading),
                        "" if state.length is None else repr(state.length),
                        "" if state.width is None else repr(state.width),
                    )
                )


LabelKey = tuple[str, int, int]


@dataclass
class LabelTable:
    """Ground-truth criticality keyed by (recording_id, ego_id, timestamp_ms)."""

    labels: dict[LabelKey, bool]

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_positive(self) -> int:
        return sum(1 for v in self.labels.values() if v)

    @property
    def positive_rate(self) -> float:
        return self.n_positive / len(self.labels) if self.labels else 0.0


_TRUTHY = {"1": True, "true": True, "0": False, "false": False}


def load_labels(path: str | Path) -> LabelTable:
    """Load a label file. Malformed rows and duplicate keys are hard errors."""
    labels: dict[LabelKey, bool] = {}
    with _open_for_read(path) as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, LABEL_COLUMNS, path)
        for line_no, row in enumerate(reader, start=2):
            try:
                key = (
                    row["recording_id"].strip(),
                    int(row["ego_id"]),
                    int(row["timestamp_ms"]),
                )
            except (TypeError, ValueError, KeyError, AttributeError):
                raise FormatError(f"{path}:{line_no}: malformed label row") from None
            raw = (row.get("critical") or "").strip().lower()
            if raw not in _TRUTHY:
                raise FormatError(
                    f"{path}:{line_no}: critical must be one of 0/1/true/false, got {raw!r}"
                )
            if key in labels:
                raise DuplicateLabel(f"{path}:{line_no}: duplicate label for {key}")
            labels[key] = _TRUTHY[raw]
    return LabelTable(labels)


def write_labels(table: LabelTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_COLUMNS)
        for (rec, ego, t), value in sorted(table.labels.items()):
            writer.writerow((rec, ego, t, "1" if value else "0"))


class ScoreRow(NamedTuple):
    """One scored (scene, ego, metric) triple; value None means undefined."""

    recording_id: str
    timestamp_ms: int
    ego_id: int
    metric_id: str
    value: float | None
    critical: bool


def format_score_value(value: float | None) -> str:
    """Six significant digits, empty cell for undefined values."""
    return "" if value is None else "%.6g" % value


def write_scores(rows: Iterable[ScoreRow], fh: TextIO) -> int:
    """Write score rows in the long format; returns the row count."""
    fh.write(",".join(SCORE_COLUMNS) + "\n")
    n = 0
    for row in rows:
        fh.write(
            f"{row.recording_id},{row.timestamp_ms},{row.ego_id},{row.metric_id},"
            f"{format_score_value(row.value)},{1 if row.critical else 0}\n"
        )
        n += 1
    return n


def read_scores(path: str | Path) -> list[ScoreRow]:
    rows = []
    with _open_for_read(path) as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, SCORE_COLUMNS, path)
        for line_no, row in enumerate(reader, start=2):
            try:
                raw_value = (row.get("value") or "").strip()
                rows.append(
                    ScoreRow(
                        recording_id=row["recording_id"].strip(),
                        timestamp_ms=int(row["timestamp_ms"]),
                        ego_id=int(row["ego_id"]),
                        metric_id=row["metric_id"].strip(),
                        value=float(raw_value) if raw_value else None,
                        critical=row["critical"].strip() == "1",
                    )
                )
            except (TypeError, ValueError, KeyError, AttributeError):
                raise FormatError(f"{path}:{line_no}: malformed score row") from None
    return rows
