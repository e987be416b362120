"""Oriented-rectangle geometry against the dense sampling oracle."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenecrit.geometry import circumradius, rect_corners, rect_gap, rects_overlap
from scenecrit.synth import sampled_gap

poses = st.tuples(
    st.floats(-50.0, 50.0),
    st.floats(-50.0, 50.0),
    st.floats(-math.pi, math.pi),
    st.floats(0.5, 12.0),
    st.floats(0.5, 4.0),
)


def test_corners_axis_aligned():
    corners = rect_corners(0.0, 0.0, 0.0, 4.0, 2.0)
    assert set(corners) == {(2.0, 1.0), (-2.0, 1.0), (-2.0, -1.0), (2.0, -1.0)}


def test_corners_rotation_quarter_turn():
    # a quarter turn swaps the footprint extents
    corners = rect_corners(1.0, 1.0, math.pi / 2.0, 4.0, 2.0)
    xs = [x for x, _ in corners]
    ys = [y for _, y in corners]
    assert max(xs) - min(xs) == pytest.approx(2.0)
    assert max(ys) - min(ys) == pytest.approx(4.0)


def test_circumradius_known_triangle():
    assert circumradius(6.0, 8.0) == 5.0
    assert circumradius(4.0, 2.0) == pytest.approx(math.hypot(2.0, 1.0))


def test_gap_axis_aligned_pair():
    a = rect_corners(0.0, 0.0, 0.0, 4.0, 2.0)
    b = rect_corners(10.0, 0.0, 0.0, 4.0, 2.0)
    assert rect_gap(a, b) == 6.0


def test_gap_zero_when_overlapping():
    a = rect_corners(0.0, 0.0, 0.0, 4.0, 2.0)
    b = rect_corners(1.0, 0.5, 0.3, 4.0, 2.0)
    assert rects_overlap(a, b)
    assert rect_gap(a, b) == 0.0


def test_gap_corner_to_corner():
    # diagonal offset: nearest features are two corners
    a = rect_corners(0.0, 0.0, 0.0, 2.0, 2.0)
    b = rect_corners(5.0, 5.0, 0.0, 2.0, 2.0)
    assert rect_gap(a, b) == pytest.approx(math.hypot(3.0, 3.0))


def test_gap_rotated_square_against_oracle():
    a = rect_corners(0.0, 0.0, 0.0, 2.0, 2.0)
    b = rect_corners(6.0, 0.0, math.pi / 4.0, 2.0, 2.0)
    # rotated square's nearest corner sits at 6 - sqrt(2)
    expected = 5.0 - math.sqrt(2.0)
    assert rect_gap(a, b) == pytest.approx(expected, abs=1e-12)
    assert sampled_gap(a, b) == pytest.approx(expected, abs=2e-3)


@settings(max_examples=60, deadline=None)
@given(poses, poses)
def test_gap_is_symmetric(pose_a, pose_b):
    a = rect_corners(*pose_a)
    b = rect_corners(*pose_b)
    assert rect_gap(a, b) == rect_gap(b, a)


@settings(max_examples=60, deadline=None)
@given(poses, poses, st.floats(-100.0, 100.0), st.floats(-100.0, 100.0))
def test_gap_translation_invariant(pose_a, pose_b, tx, ty):
    a = rect_corners(*pose_a)
    b = rect_corners(*pose_b)
    xa, ya, ha, la, wa = pose_a
    xb, yb, hb, lb, wb = pose_b
    a2 = rect_corners(xa + tx, ya + ty, ha, la, wa)
    b2 = rect_corners(xb + tx, yb + ty, hb, lb, wb)
    assert rect_gap(a2, b2) == pytest.approx(rect_gap(a, b), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(poses, poses)
def test_gap_bounded_by_center_distance(pose_a, pose_b):
    a = rect_corners(*pose_a)
    b = rect_corners(*pose_b)
    centers = math.hypot(pose_a[0] - pose_b[0], pose_a[1] - pose_b[1])
    gap = rect_gap(a, b)
    assert 0.0 <= gap <= centers + 1e-12
    # and never below the circumcircle bound
    bound = centers - circumradius(pose_a[3], pose_a[4]) - circumradius(pose_b[3], pose_b[4])
    assert gap >= bound - 1e-9


@settings(max_examples=40, deadline=None)
@given(poses, poses)
def test_gap_close_to_sampling_oracle(pose_a, pose_b):
    a = rect_corners(*pose_a)
    b = rect_corners(*pose_b)
    assert rect_gap(a, b) == pytest.approx(sampled_gap(a, b, 4000), abs=0.05)
