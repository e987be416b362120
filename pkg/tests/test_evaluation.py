"""Confusion counting, the derived statistics, and the comparison table."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenecrit.errors import EmptyCounts, MissingPrediction
from scenecrit.evaluation import (
    ConfusionCounts,
    confusion,
    statistics,
    table_report,
    table_report_from_counts,
)
from scenecrit.tracks import LabelTable


def key(ego, t=0, rec="r"):
    return (rec, ego, t)


def labels_of(mapping):
    return LabelTable(dict(mapping))


def test_confusion_counts_all_four_outcomes():
    labels = labels_of({key(1): True, key(2): True, key(3): False, key(4): False})
    flags = {key(1): True, key(2): False, key(3): True, key(4): False, key(5): True}
    c = confusion(flags, labels)
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)
    assert c.total == 4  # the unlabeled key(5) prediction is ignored


def test_confusion_requires_full_coverage():
    labels = labels_of({key(1): True, key(2): False})
    with pytest.raises(MissingPrediction) as err:
        confusion({key(1): True}, labels)
    assert err.value.keys == [key(2)]


def test_statistics_hand_worked_table():
    s = statistics(ConfusionCounts(tp=40, tn=30, fp=20, fn=10))
    assert s.acc == 0.70
    assert s.mr == 0.30
    assert s.tpr == 0.8
    assert s.fpr == 0.4
    assert s.tnr == 0.6
    assert s.fnr == pytest.approx(0.2)
    assert s.pre == pytest.approx(2.0 / 3.0)
    # chance agreement (50*60 + 50*40)/100^2 = 0.5 and kappa (0.7-0.5)/0.5
    assert s.cok == pytest.approx(0.4)
    assert s.f1s == pytest.approx(80.0 / 110.0)
    raw = 1000.0 / math.sqrt(60 * 50 * 50 * 40)
    assert s.mcc == pytest.approx(0.5 * (raw + 1.0))


def test_statistics_no_positive_labels():
    s = statistics(ConfusionCounts(tp=0, tn=5, fp=3, fn=0))
    assert s.tpr is None
    assert s.fnr is None
    assert s.acc == pytest.approx(5.0 / 8.0)
    assert s.f1s == 0.0  # fp alone keeps the denominator positive


def test_statistics_no_predicted_positives():
    s = statistics(ConfusionCounts(tp=0, tn=5, fp=0, fn=3))
    assert s.pre is None
    assert s.fpr == 0.0


def test_statistics_degenerate_single_cell():
    s = statistics(ConfusionCounts(tp=10, tn=0, fp=0, fn=0))
    assert s.acc == 1.0
    assert s.cok is None  # chance agreement is exactly 1
    assert s.mcc == 0.5  # raw coefficient pinned to 0 on a zero denominator
    assert s.f1s == 1.0


def test_statistics_perfect_and_inverted():
    perfect = statistics(ConfusionCounts(tp=6, tn=4, fp=0, fn=0))
    assert perfect.mcc == 1.0
    assert perfect.cok == 1.0
    inverted = statistics(ConfusionCounts(tp=0, tn=0, fp=4, fn=6))
    assert inverted.mcc == 0.0
    assert inverted.acc == 0.0


def test_statistics_empty_counts():
    with pytest.raises(EmptyCounts):
        statistics(ConfusionCounts(tp=0, tn=0, fp=0, fn=0))


@settings(max_examples=150, deadline=None)
@given(
    st.integers(0, 500),
    st.integers(0, 500),
    st.integers(0, 500),
    st.integers(0, 500),
    st.integers(2, 9),
)
def test_statistics_scale_invariance(tp, tn, fp, fn, k):
    if tp + tn + fp + fn == 0:
        return
    a = statistics(ConfusionCounts(tp, tn, fp, fn))
    b = statistics(ConfusionCounts(k * tp, k * tn, k * fp, k * fn))
    for (name, va), (_, vb) in zip(a.as_rows(), b.as_rows()):
        if va is None:
            assert vb is None, name
        else:
            assert vb == pytest.approx(va, abs=1e-12), name


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 200), st.integers(0, 200), st.integers(0, 200), st.integers(0, 200))
def test_statistics_ranges(tp, tn, fp, fn):
    if tp + tn + fp + fn == 0:
        return
    s = statistics(ConfusionCounts(tp, tn, fp, fn))
    for name, value in s.as_rows():
        if value is None:
            continue
        if name == "CoK":
            assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12
        else:
            assert -1e-12 <= value <= 1.0 + 1e-12, name
    if s.mr is not None and s.acc is not None:
        assert s.acc + s.mr == pytest.approx(1.0)


def test_table_report_best_and_worst():
    counts = {
        "ttc": ConfusionCounts(tp=8, tn=80, fp=2, fn=10),
        "wttc": ConfusionCounts(tp=16, tn=60, fp=22, fn=2),
    }
    report = table_report_from_counts(counts, ["ttc", "wttc"])
    assert report.best["TPR"] == ("wttc",)
    assert report.worst["TPR"] == ("ttc",)
    assert report.best["FPR"] == ("ttc",)  # lower is better
    assert report.worst["FPR"] == ("wttc",)
    assert "TP" not in report.best  # counts never carry emphasis


def test_table_report_tie_keeps_all_holders():
    counts = {
        "a": ConfusionCounts(tp=5, tn=5, fp=5, fn=5),
        "b": ConfusionCounts(tp=5, tn=5, fp=5, fn=5),
        "c": ConfusionCounts(tp=1, tn=5, fp=5, fn=9),
    }
    report = table_report_from_counts(counts, ["a", "b", "c"])
    assert report.best["ACC"] == ("a", "b")
    assert report.worst["ACC"] == ("c",)


def test_table_report_all_equal_row_has_no_worst():
    counts = {
        "a": ConfusionCounts(tp=5, tn=5, fp=5, fn=5),
        "b": ConfusionCounts(tp=10, tn=10, fp=10, fn=10),
    }
    report = table_report_from_counts(counts, ["a", "b"])
    assert report.best["ACC"] == ("a", "b")
    assert "ACC" not in report.worst


def test_table_report_csv_layout():
    counts = {"ttc": ConfusionCounts(tp=1, tn=2, fp=3, fn=4)}
    csv_text = table_report_from_counts(counts, ["ttc"]).to_csv()
    lines = csv_text.splitlines()
    assert lines[0] == "statistic,ttc,best,worst"
    assert lines[1] == "TP,1,,"
    assert lines[4] == "FN,4,,"
    assert lines[5].startswith("ACC,0.300,")
    assert len(lines) == 1 + 4 + 10


def test_table_report_csv_blank_for_undefined():
    counts = {"ttc": ConfusionCounts(tp=10, tn=0, fp=0, fn=0)}
    lines = table_report_from_counts(counts, ["ttc"]).to_csv().splitlines()
    cok_line = next(line for line in lines if line.startswith("CoK,"))
    assert cok_line == "CoK,,,"


def test_table_report_text_emphasis():
    counts = {
        "ttc": ConfusionCounts(tp=8, tn=80, fp=2, fn=10),
        "wttc": ConfusionCounts(tp=16, tn=60, fp=22, fn=2),
    }
    text = table_report_from_counts(counts, ["ttc", "wttc"]).to_text()
    tpr_line = next(line for line in text.splitlines() if line.startswith("TPR") or "TPR" in line.split())
    assert "*" in tpr_line and "_" in tpr_line
    degenerate = table_report_from_counts({"x": ConfusionCounts(tp=1, tn=0, fp=0, fn=0)}, ["x"])
    assert "n/a" in degenerate.to_text()


def test_table_report_from_flags():
    labels = labels_of({key(1): True, key(2): False, key(3): False})
    flags = {
        "ttc": {key(1): True, key(2): False, key(3): False},
        "dist": {key(1): False, key(2): True, key(3): False},
    }
    report = table_report(["ttc", "dist"], flags, labels)
    assert report.counts["ttc"] == ConfusionCounts(tp=1, tn=2, fp=0, fn=0)
    assert report.counts["dist"] == ConfusionCounts(tp=0, tn=1, fp=1, fn=1)
    assert report.best["ACC"] == ("ttc",)
