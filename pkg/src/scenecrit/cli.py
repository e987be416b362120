"""Batch command line: score, evaluate, timeseries, sweep.

Every command writes its outputs into --out together with a manifest.json
holding the resolved settings, so a run can be repeated by pointing
--manifest at it. Progress and diagnostics go to stderr; stdout stays clean
except for the human-readable evaluation table.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .errors import FileError, MissingAgent, SceneCritError, UnsupportedMetric
from .evaluation import (
    STAT_ROWS,
    ConfusionCounts,
    confusion,
    statistics,
    table_report_from_counts,
)
from .model import ScenarioTrackset
from .quality import PENALTY_KINDS, IutqConfig, score_all, score_scene
from .surrogates import (
    BASELINE_METRICS,
    SurrogateConfig,
    conflict_regions,
    gt,
    pttc,
    score_all_surrogates,
    ttc,
    wttc,
)
from .tracks import (
    ScoreRow,
    format_score_value,
    load_labels,
    load_trackfile,
    read_scores,
)

IUTQ_VARIANTS = ("iutq-co", "iutq-rho1", "iutq-rho2", "iutq-rho3")
METRIC_IDS = BASELINE_METRICS + IUTQ_VARIANTS

_VARIANT_KIND = {
    "iutq-co": "none",
    "iutq-rho1": "rho1",
    "iutq-rho2": "rho2",
    "iutq-rho3": "rho3",
}

# Flags whose parsed values are persisted to (and reloadable from) a manifest.
_SETTING_DESTS = (
    "metrics",
    "penalty",
    "threshold",
    "decel",
    "reaction_time",
    "window",
    "v_ref",
    "a_ref",
    "cell",
    "workers",
)


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--decel", type=float, default=4.0,
                     help="assumed braking deceleration in m/s^2 (default 4.0)")
    sub.add_argument("--reaction-time", type=float, default=0.0,
                     help="reaction time before braking in s (default 0)")
    sub.add_argument("--window", type=float, default=2.0,
                     help="history window for ego dynamics in s (default 2.0)")
    sub.add_argument("--v-ref", type=float, default=50.0 / 3.6,
                     help="reference speed in m/s (default 50 km/h)")
    sub.add_argument("--a-ref", type=float, default=1.5,
                     help="reference acceleration in m/s^2 (default 1.5)")
    sub.add_argument("--cell", type=float, default=1.0,
                     help="conflict grid cell size in m (default 1.0)")
    sub.add_argument("--penalty", default="rho2", help="distance penalty kind: "
                     "none, rho1, rho2 or rho3 (default rho2); sweep accepts a comma list")
    sub.add_argument("--threshold", default=None,
                     help="criticality threshold override (score: single value with a "
                     "single metric; sweep: comma-separated grid)")
    sub.add_argument("--manifest", default=None,
                     help="manifest.json of an earlier run; its settings become defaults")
    sub.add_argument("--out", required=True, help="output directory")


def _iutq_config(args, threshold_override: float | None = None, kind: str | None = None) -> IutqConfig:
    kwargs = dict(
        v_ref=args.v_ref,
        a_ref=args.a_ref,
        window_s=args.window,
        decel=args.decel,
        reaction_time=args.reaction_time,
        penalty=args.penalty if args.penalty in PENALTY_KINDS else "rho2",
    )
    if threshold_override is not None and kind is not None:
        if kind == "none":
            kwargs["threshold_combined"] = threshold_override
        else:
            kwargs["threshold_penalized"] = threshold_override
    return IutqConfig(**kwargs)


def _surrogate_config(args, threshold_override: float | None = None,
                      metric: str | None = None) -> SurrogateConfig:
    kwargs = dict(conflict_cell_m=args.cell)
    if threshold_override is not None and metric in BASELINE_METRICS:
        kwargs[f"{metric}_threshold"] = threshold_override
    return SurrogateConfig(**kwargs)


def _parse_metrics(raw: str, penalty: str) -> list[str]:
    names = [part.strip() for part in raw.split(",") if part.strip()]
    out: list[str] = []
    for name in names:
        if name == "all":
            out.extend(METRIC_IDS)
        elif name == "iutq":
            out.append("iutq-co" if penalty == "none" else f"iutq-{penalty}")
        elif name in METRIC_IDS:
            out.append(name)
        else:
            raise UnsupportedMetric(f"unknown metric id {name!r} (known: {', '.join(METRIC_IDS)})")
    # keep canonical order, drop duplicates
    return [m for m in METRIC_IDS if m in out]


def _expand_inputs(raw: Sequence[str]) -> list[Path]:
    paths: list[Path] = []
    for item in raw:
        p = Path(item)
        if p.is_dir():
            found = sorted(p.glob("*.csv"))
            paths.extend(found)
        else:
            paths.append(p)
    if not paths:
        raise FileError("no recordings found in the given inputs")
    return paths


def _write_manifest(out_dir: Path, command: str, args, inputs: Sequence[Path],
                    extra: dict | None = None) -> None:
    settings = {dest: getattr(args, dest) for dest in _SETTING_DESTS if hasattr(args, dest)}
    payload = {
        "tool": "scenecrit",
        "version": __version__,
        "command": command,
        "inputs": [str(p) for p in inputs],
        "out": str(out_dir),
        "settings": settings,
    }
    if extra:
        payload.update(extra)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _score_file_lines(
    path_str: str,
    iutq_cfg: IutqConfig,
    surro_cfg: SurrogateConfig,
    baselines: tuple[str, ...],
    variants: tuple[str, ...],
) -> tuple[list[str], str]:
    """Score one recording into formatted CSV lines (shared by both worker modes)."""
    ts, report = load_trackfile(path_str)
    rec = ts.recording_id
    lines: list[str] = []
    n_base = len(baselines)
    surro_iter = iter(score_all_surrogates(ts, surro_cfg, baselines)) if n_base else None
    if variants:
        for bd in score_all(ts, iutq_cfg):
            if surro_iter is not None:
                for _ in range(n_base):
                    sm = next(surro_iter)
                    lines.append(
                        f"{rec},{sm.timestamp_ms},{sm.ego_id},{sm.metric_id},"
                        f"{format_score_value(sm.value)},{1 if sm.critical else 0}"
                    )
            for vid in variants:
                kind = _VARIANT_KIND[vid]
                value = bd.final_for(kind)
                critical = value >= iutq_cfg.threshold_for(kind)
                lines.append(
                    f"{rec},{bd.timestamp_ms},{bd.ego_id},{vid},"
                    f"{format_score_value(value)},{1 if critical else 0}"
                )
    elif surro_iter is not None:
        for sm in surro_iter:
            lines.append(
                f"{rec},{sm.timestamp_ms},{sm.ego_id},{sm.metric_id},"
                f"{format_score_value(sm.value)},{1 if sm.critical else 0}"
            )
    return lines, report.summary()


def _score_task(task: tuple) -> dict:
    """Pool-friendly wrapper: never raises, reports errors as data."""
    path_str, iutq_cfg, surro_cfg, baselines, variants = task
    try:
        lines, summary = _score_file_lines(path_str, iutq_cfg, surro_cfg, baselines, variants)
        return {"path": path_str, "lines": lines, "summary": summary, "error": None}
    except SceneCritError as exc:
        return {"path": path_str, "lines": [], "summary": "", "error": str(exc)}


def cmd_score(args) -> int:
    metrics = _parse_metrics(args.metrics, args.penalty)
    threshold = None
    if args.threshold is not None:
        if len(metrics) != 1:
            raise UnsupportedMetric("--threshold needs exactly one metric in --metrics")
        threshold = float(args.threshold)
    single = metrics[0] if threshold is not None else None
    baselines = tuple(m for m in metrics if m in BASELINE_METRICS)
    variants = tuple(m for m in metrics if m in IUTQ_VARIANTS)
    iutq_cfg = _iutq_config(args, threshold, _VARIANT_KIND.get(single))
    surro_cfg = _surrogate_config(args, threshold, single)
    inputs = _expand_inputs(args.inputs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(str(p), iutq_cfg, surro_cfg, baselines, variants) for p in inputs]
    if args.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_score_task, tasks))
    else:
        results = []
        for task in tasks:
            result = _score_task(task)
            results.append(result)
            if args.strict and result["error"]:
                break

    if args.strict:
        failed = next((r for r in results if r["error"]), None)
        if failed is not None:
            print(f"error: {failed['path']}: {failed['error']}", file=sys.stderr)
            return 1

    failures = []
    n_rows = 0
    scores_path = out_dir / "scores.csv"
    with open(scores_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("recording_id,timestamp_ms,ego_id,metric_id,value,critical\n")
        for result in results:
            if result["error"]:
                failures.append(result)
                print(f"error: {result['path']}: {result['error']}", file=sys.stderr)
                continue
            print(result["summary"], file=sys.stderr)
            for line in result["lines"]:
                fh.write(line + "\n")
            n_rows += len(result["lines"])
    _write_manifest(
        out_dir, "score", args, inputs,
        {"strict": args.strict, "failures": [f["path"] for f in failures], "rows": n_rows},
    )
    print(f"wrote {n_rows} rows to {scores_path}", file=sys.stderr)
    return 1 if failures else 0


def _flags_from_scores(rows: Iterable[ScoreRow]) -> dict[str, dict]:
    by_metric: dict[str, dict] = {}
    for row in rows:
        key = (row.recording_id, row.ego_id, row.timestamp_ms)
        by_metric.setdefault(row.metric_id, {})[key] = row.critical
    return by_metric


def _read_counts_file(path: str) -> dict[str, ConfusionCounts]:
    import csv

    out: dict[str, ConfusionCounts] = {}
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        required = {"metric_id", "tp", "tn", "fp", "fn"}
        if not reader.fieldnames or not required.issubset(set(reader.fieldnames)):
            raise SceneCritError(f"{path}: counts file needs columns {sorted(required)}")
        for row in reader:
            out[row["metric_id"].strip()] = ConfusionCounts(
                tp=int(row["tp"]), tn=int(row["tn"]), fp=int(row["fp"]), fn=int(row["fn"])
            )
    return out


def cmd_evaluate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.counts:
        counts = _read_counts_file(args.counts)
        report = table_report_from_counts(counts)
        inputs = [Path(args.counts)]
    else:
        if not args.scores or not args.labels:
            raise SceneCritError("evaluate needs --scores and --labels (or --counts)")
        rows = read_scores(args.scores)
        labels = load_labels(args.labels)
        by_metric = _flags_from_scores(rows)
        present = [m for m in METRIC_IDS if m in by_metric]
        present += sorted(set(by_metric) - set(present))
        counts = {m: confusion(by_metric[m], labels) for m in present}
        report = table_report_from_counts(counts, present)
        inputs = [Path(args.scores), Path(args.labels)]
    with open(out_dir / "report.csv", "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    text = report.to_text()
    with open(out_dir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(text)
    if not args.no_plot:
        from .plots import save_report_plot

        save_report_plot(str(out_dir / "report.png"), report)
    _write_manifest(out_dir, "evaluate", args, inputs)
    sys.stdout.write(text)
    return 0


def _timeseries_columns(
    ts: ScenarioTrackset, args, metrics: list[str]
) -> tuple[list[float], dict[str, list[float | None]], dict[str, float]]:
    iutq_cfg = _iutq_config(args)
    surro_cfg = _surrogate_config(args)
    ego = args.ego
    adv = args.adversary
    pair_metrics = [m for m in metrics if m in BASELINE_METRICS]
    if pair_metrics and adv is None:
        raise MissingAgent("pairwise metrics need --adversary")
    known = ts.agent_ids
    if ego not in known:
        raise MissingAgent(f"agent {ego} not in recording {ts.recording_id!r}")
    if adv is not None and adv not in known:
        raise MissingAgent(f"agent {adv} not in recording {ts.recording_id!r}")

    conflict_window = None
    conflict_pet = conflict_et = None
    if adv is not None and ("pet" in metrics or "et" in metrics):
        regions = conflict_regions(ts, ego, adv, surro_cfg.conflict_cell_m)
        if regions:
            intervals = list(regions.values())
            from .surrogates import _et_from_intervals, _pet_from_intervals

            conflict_pet = _pet_from_intervals(intervals)
            conflict_et = _et_from_intervals(intervals, ts.frame_interval_ms)
            lo = min(min(e[0], o[0]) for e, o in intervals)
            hi = max(max(e[1], o[1]) for e, o in intervals)
            conflict_window = (lo, hi)

    times: list[float] = []
    series: dict[str, list[float | None]] = {m: [] for m in metrics}
    for scene in ts.frames:
        t = scene.timestamp_ms
        times.append(t / 1000.0)
        has_ego = ego in scene
        has_pair = has_ego and adv is not None and adv in scene
        breakdown = None
        for metric in metrics:
            value: float | None = None
            if metric in IUTQ_VARIANTS:
                if has_ego:
                    if breakdown is None:
                        breakdown = score_scene(ts, scene, ego, iutq_cfg)
                    value = breakdown.final_for(_VARIANT_KIND[metric])
            elif has_pair:
                if metric == "dist":
                    value = scene.gap(ego, adv)
                elif metric == "ttc":
                    value = ttc(scene, ego, adv)
                elif metric == "pttc":
                    before = ts.state_at(t - ts.frame_interval_ms, adv)
                    da = 0.0
                    if before is not None:
                        drop = (before.speed - scene.get(adv).speed) * 1000.0 / ts.frame_interval_ms
                        da = drop if drop > 0.0 else 0.0
                    value = pttc(scene, ego, adv, da)
                elif metric == "wttc":
                    value = wttc(scene, ego, adv, surro_cfg.a_max_wttc)
                elif metric == "gt":
                    value = gt(scene, ego, adv)
                elif metric in ("pet", "et") and conflict_window is not None:
                    if conflict_window[0] <= t <= conflict_window[1]:
                        value = conflict_pet if metric == "pet" else conflict_et
            series[metric].append(value)
    thresholds = {}
    for metric in metrics:
        if metric in BASELINE_METRICS:
            thresholds[metric] = surro_cfg.threshold_for(metric)
        else:
            thresholds[metric] = iutq_cfg.threshold_for(_VARIANT_KIND[metric])
    return times, series, thresholds


def cmd_timeseries(args) -> int:
    metrics = _parse_metrics(args.metrics, args.penalty)
    ts, report = load_trackfile(args.recording)
    print(report.summary(), file=sys.stderr)
    times, series, thresholds = _timeseries_columns(ts, args, metrics)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "timeseries.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("timestamp_ms," + ",".join(metrics) + "\n")
        for i, t in enumerate(times):
            cells = [format_score_value(series[m][i]) for m in metrics]
            fh.write(f"{round(t * 1000)}," + ",".join(cells) + "\n")
    if not args.no_plot:
        from .plots import save_timeseries_plot

        save_timeseries_plot(str(out_dir / "timeseries.png"), times, series, thresholds)
    _write_manifest(
        out_dir, "timeseries", args, [Path(args.recording)],
        {"ego": args.ego, "adversary": args.adversary},
    )
    print(f"wrote {csv_path}", file=sys.stderr)
    return 0


def _sweep_values(
    inputs: list[Path], args, metric: str, kinds: list[str]
) -> dict[str, dict]:
    """Per-key metric values for the sweep: metric id or penalty kind -> {key: value}."""
    iutq_cfg = _iutq_config(args)
    surro_cfg = _surrogate_config(args)
    values: dict[str, dict] = {name: {} for name in ([metric] if metric else kinds)}
    for path in inputs:
        ts, report = load_trackfile(path)
        print(report.summary(), file=sys.stderr)
        rec = ts.recording_id
        if metric in BASELINE_METRICS:
            for sm in score_all_surrogates(ts, surro_cfg, (metric,)):
                values[metric][(rec, sm.ego_id, sm.timestamp_ms)] = sm.value
        else:
            for bd in score_all(ts, iutq_cfg):
                key = (rec, bd.ego_id, bd.timestamp_ms)
                if metric:
                    values[metric][key] = bd.final_for(_VARIANT_KIND[metric])
                else:
                    for kind in kinds:
                        values[kind][key] = bd.final_for(kind)
    return values


def cmd_sweep(args) -> int:
    labels = load_labels(args.labels)
    inputs = _expand_inputs(args.inputs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    thresholds = (
        [float(part) for part in str(args.threshold).split(",") if part.strip()]
        if args.threshold is not None
        else []
    )
    if args.metrics:
        metrics = _parse_metrics(args.metrics, "rho2")
        if len(metrics) != 1:
            raise UnsupportedMetric("sweep needs exactly one metric in --metrics")
        if not thresholds:
            raise SceneCritError("a metric sweep needs --threshold with at least one value")
        metric = metrics[0]
        values = _sweep_values(inputs, args, metric, [])
        grid = [("%.6g" % thr, thr, metric, None) for thr in thresholds]
    else:
        kinds = [part.strip() for part in args.penalty.split(",") if part.strip()]
        bad = [k for k in kinds if k not in PENALTY_KINDS]
        if bad:
            raise SceneCritError(f"unknown penalty kinds: {bad}")
        if len(thresholds) > 1:
            raise SceneCritError("a penalty sweep takes at most one --threshold value")
        values = _sweep_values(inputs, args, "", kinds)
        grid = []
        for kind in kinds:
            thr = thresholds[0] if thresholds else (
                1.5 if kind == "none" else 1.0
            )
            grid.append((kind, thr, None, kind))

    rows = []
    stat_series: dict[str, list[float | None]] = {"acc": [], "tpr": [], "fpr": []}
    for label, thr, metric, kind in grid:
        source = values[metric if metric else kind]
        if metric in BASELINE_METRICS:
            flags = {k: (v is not None and v < thr) for k, v in source.items()}
        else:
            flags = {k: (v is not None and v >= thr) for k, v in source.items()}
        counts = confusion(flags, labels)
        stats = statistics(counts)
        rows.append((label, thr, counts, stats))
        stat_series["acc"].append(stats.acc)
        stat_series["tpr"].append(stats.tpr)
        stat_series["fpr"].append(stats.fpr)

    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", encoding="utf-8") as fh:
        stat_names = [name.lower() for name, _, _ in STAT_ROWS]
        fh.write("grid,threshold,tp,tn,fp,fn," + ",".join(stat_names) + "\n")
        for label, thr, counts, stats in rows:
            cells = [label, "%.6g" % thr, str(counts.tp), str(counts.tn),
                     str(counts.fp), str(counts.fn)]
            for _, field, _ in STAT_ROWS:
                value = getattr(stats, field)
                cells.append("" if value is None else "%.6g" % value)
            fh.write(",".join(cells) + "\n")
    if not args.no_plot:
        from .plots import save_sweep_plot

        save_sweep_plot(str(out_dir / "sweep.png"), [r[0] for r in rows], stat_series)
    _write_manifest(out_dir, "sweep", args, inputs, {"labels": str(args.labels)})
    print(f"wrote {sweep_path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenecrit",
        description="Criticality metrics over traffic recordings: batch scoring, "
        "evaluation against labels, per-pair timeseries, threshold sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"scenecrit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score recordings into a long-format CSV")
    p_score.add_argument("inputs", nargs="*", help="track files or directories of them")
    p_score.add_argument("--metrics", default="all",
                         help="comma list of metric ids, 'all', or 'iutq' (default all)")
    p_score.add_argument("--workers", type=int, default=1,
                         help="process recordings with this many workers (default 1)")
    p_score.add_argument("--strict", action="store_true",
                         help="abort on the first file error instead of continuing")
    _add_config_flags(p_score)
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("evaluate", help="compare scored criticality against labels")
    p_eval.add_argument("--scores", default=None, help="scores.csv from a score run")
    p_eval.add_argument("--labels", default=None, help="ground-truth label file")
    p_eval.add_argument("--counts", default=None,
                        help="skip scoring: CSV of metric_id,tp,tn,fp,fn rows")
    p_eval.add_argument("--no-plot", action="store_true", help="skip the figure")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_ts = sub.add_parser("timeseries", help="per-frame metric curves for one ego")
    p_ts.add_argument("recording", help="track file")
    p_ts.add_argument("--ego", type=int, required=True, help="ego agent id")
    p_ts.add_argument("--adversary", type=int, default=None,
                      help="adversary id (needed for pairwise metrics)")
    p_ts.add_argument("--metrics", default="iutq",
                      help="comma list of metric ids (default iutq)")
    p_ts.add_argument("--no-plot", action="store_true", help="skip the figure")
    _add_config_flags(p_ts)
    p_ts.set_defaults(func=cmd_timeseries)

    p_sweep = sub.add_parser("sweep", help="re-threshold scored values over a grid")
    p_sweep.add_argument("inputs", nargs="*", help="track files or directories of them")
    p_sweep.add_argument("--labels", required=True, help="ground-truth label file")
    p_sweep.add_argument("--metrics", default=None,
                         help="single metric id to sweep --threshold over")
    p_sweep.add_argument("--no-plot", action="store_true", help="skip the figure")
    _add_config_flags(p_sweep)
    # Without an explicit metric the sweep walks the whole penalty family.
    p_sweep.set_defaults(func=cmd_sweep, penalty="rho1,rho2,rho3")

    return parser


def _apply_manifest_defaults(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """If --manifest is present, preload stored settings as parser defaults."""
    path = None
    for i, item in enumerate(argv):
        if item == "--manifest" and i + 1 < len(argv):
            path = argv[i + 1]
        elif item.startswith("--manifest="):
            path = item.split("=", 1)[1]
    if not path:
        return
    try:
        with open(path, "r", encoding="utf-8") as fh:
            stored = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FileError(f"cannot read manifest {path}: {exc}") from exc
    settings = {k: v for k, v in stored.get("settings", {}).items() if v is not None}
    parser.set_defaults(**settings)
    # Subcommand flags live on the subparsers, which keep their own defaults.
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for choice in action.choices.values():
                choice.set_defaults(**settings)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_manifest_defaults(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except SceneCritError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
