"""Classification evaluation against ground-truth labels.

Predictions are per-(recording, ego, timestamp) criticality flags; labels the
same. The summary is the usual confusion-matrix family: accuracy, the rate
quartet, precision, Cohen's kappa, F1, and a Matthews coefficient rescaled to
[0, 1]. Rates whose denominator is zero are reported as undefined rather
than forced to a number; the one deliberate exception is MCC, whose raw value
is taken as 0 (rescaled 0.5, the chance level) for degenerate tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyCounts, MissingPrediction
from .tracks import LabelKey, LabelTable


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def as_rows(self) -> list[tuple[str, int]]:
        return [("TP", self.tp), ("TN", self.tn), ("FP", self.fp), ("FN", self.fn)]


@dataclass(frozen=True)
class StatsReport:
    """Derived statistics; None marks a zero-denominator (undefined) entry."""

    acc: float | None
    mr: float | None
    tpr: float | None
    fpr: float | None
    tnr: float | None
    fnr: float | None
    pre: float | None
    cok: float | None
    f1s: float | None
    mcc: float | None

    def as_rows(self) -> list[tuple[str, float | None]]:
        return [
            ("ACC", self.acc),
            ("MR", self.mr),
            ("TPR", self.tpr),
            ("FPR", self.fpr),
            ("TNR", self.tnr),
            ("FNR", self.fnr),
            ("PRE", self.pre),
            ("CoK", self.cok),
            ("F1S", self.f1s),
            ("MCC", self.mcc),
        ]


def confusion(flags: Mapping[LabelKey, bool], labels: LabelTable) -> ConfusionCounts:
    """Count the four outcomes over all labeled keys.

    Every labeled key must have a prediction (MissingPrediction otherwise);
    predictions for unlabeled keys are ignored.
    """
    missing = [key for key in labels.labels if key not in flags]
    if missing:
        raise MissingPrediction(missing)
    tp = tn = fp = fn = 0
    for key, truth in labels.labels.items():
        predicted = flags[key]
        if truth:
            if predicted:
                tp += 1
            else:
                fn += 1
        else:
            if predicted:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def statistics(counts: ConfusionCounts) -> StatsReport:
    """Derived statistics of one confusion table. Raises EmptyCounts on an empty one."""
    tp, tn, fp, fn = counts.tp, counts.tn, counts.fp, counts.fn
    total = counts.total
    if total == 0:
        raise EmptyCounts("confusion table has zero entries")
    acc = (tp + tn) / total
    p_expected = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (total * total)
    if 1.0 - p_expected != 0.0:
        cok = (acc - p_expected) / (1.0 - p_expected)
    else:
        cok = None
    mcc_den_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if mcc_den_sq > 0:
        mcc_raw = (tp * tn - fp * fn) / math.sqrt(mcc_den_sq)
    else:
        mcc_raw = 0.0
    return StatsReport(
        acc=acc,
        mr=(fp + fn) / total,
        tpr=_ratio(tp, tp + fn),
        fpr=_ratio(fp, fp + tn),
        tnr=_ratio(tn, fp + tn),
        fnr=_ratio(fn, tp + fn),
        pre=_ratio(tp, tp + fp),
        cok=cok,
        f1s=_ratio(2 * tp, 2 * tp + fp + fn),
        mcc=0.5 * (mcc_raw + 1.0),
    )


# Row name, StatsReport field, and whether larger values are better.
STAT_ROWS = (
    ("ACC", "acc", True),
    ("MR", "mr", False),
    ("TPR", "tpr", True),
    ("FPR", "fpr", False),
    ("TNR", "tnr", True),
    ("FNR", "fnr", False),
    ("PRE", "pre", True),
    ("CoK", "cok", True),
    ("F1S", "f1s", True),
    ("MCC", "mcc", True),
)

COUNT_ROWS = ("TP", "TN", "FP", "FN")


@dataclass
class TableReport:
    """One column per metric, count rows then statistic rows, with emphasis marks.

    ``best`` and ``worst`` map statistic row names to the metric ids holding
    the extreme value in the row's preferred direction; ties keep every
    holder. Undefined cells never win either mark.
    """

    metric_ids: tuple[str, ...]
    counts: dict[str, ConfusionCounts]
    stats: dict[str, StatsReport]
    best: dict[str, tuple[str, ...]]
    worst: dict[str, tuple[str, ...]]

    def to_csv(self) -> str:
        lines = ["statistic," + ",".join(self.metric_ids) + ",best,worst"]
        for name in COUNT_ROWS:
            cells = [str(dict(self.counts[m].as_rows())[name]) for m in self.metric_ids]
            lines.append(f"{name},{','.join(cells)},,")
        for name, field, _ in STAT_ROWS:
            cells = []
            for m in self.metric_ids:
                value = getattr(self.stats[m], field)
                cells.append("" if value is None else "%.3f" % value)
            lines.append(
                f"{name},{','.join(cells)},"
                f"{';'.join(self.best.get(name, ()))},{';'.join(self.worst.get(name, ()))}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Aligned table; *value* marks the best cell of a row, _value_ the worst."""
        header = ["statistic"] + list(self.metric_ids)
        rows = [header]
        for name in COUNT_ROWS:
            rows.append([name] + [str(dict(self.counts[m].as_rows())[name]) for m in self.metric_ids])
        for name, field, _ in STAT_ROWS:
            cells = [name]
            for m in self.metric_ids:
                value = getattr(self.stats[m], field)
                if value is None:
                    cells.append("n/a")
                elif m in self.best.get(name, ()):
                    cells.append("*%.3f*" % value)
                elif m in self.worst.get(name, ()):
                    cells.append("_%.3f_" % value)
                else:
                    cells.append("%.3f" % value)
            rows.append(cells)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = []
        for r in rows:
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(r, widths)))
        return "\n".join(lines) + "\n"


def table_report_from_counts(
    counts_by_metric: Mapping[str, ConfusionCounts], metric_ids: Sequence[str] | None = None
) -> TableReport:
    """Build the report table directly from confusion counts."""
    ids = tuple(metric_ids) if metric_ids is not None else tuple(counts_by_metric)
    stats = {m: statistics(counts_by_metric[m]) for m in ids}
    best: dict[str, tuple[str, ...]] = {}
    worst: dict[str, tuple[str, ...]] = {}
    for name, field, higher_is_better in STAT_ROWS:
        defined = [(m, getattr(stats[m], field)) for m in ids]
        defined = [(m, v) for m, v in defined if v is not None]
        if not defined:
            continue
        values = [v for _, v in defined]
        hi = max(values)
        lo = min(values)
        best_value = hi if higher_is_better else lo
        worst_value = lo if higher_is_better else hi
        best[name] = tuple(m for m, v in defined if v == best_value)
        if worst_value != best_value:
            worst[name] = tuple(m for m, v in defined if v == worst_value)
    return TableReport(
        metric_ids=ids,
        counts={m: counts_by_metric[m] for m in ids},
        stats=stats,
        best=best,
        worst=worst,
    )


def table_report(
    metric_ids: Sequence[str],
    flags_by_metric: Mapping[str, Mapping[LabelKey, bool]],
    labels: LabelTable,
) -> TableReport:
    """Evaluate several metrics' flags against one label table."""
    counts = {m: confusion(flags_by_metric[m], labels) for m in metric_ids}
    return table_report_from_counts(counts, metric_ids)
