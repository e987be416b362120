"""Oriented-rectangle geometry on the ground plane.

Footprints are axis-aligned boxes in the agent frame, rotated by the heading
and centered on the reference point. All lengths are meters, angles radians.
The hot path (pairwise gap queries in batch scoring) runs on plain floats on
purpose; keep numpy out of these helpers.
"""

from __future__ import annotations

import math

Corners = tuple[tuple[float, float], ...]


def rect_corners(cx: float, cy: float, heading: float, length: float, width: float) -> Corners:
    """Corner points of an oriented rectangle, counter-clockwise.

    The rectangle is centered at (cx, cy) with its length axis along the
    heading direction.
    """
    c = math.cos(heading)
    s = math.sin(heading)
    hl = 0.5 * length
    hw = 0.5 * width
    lx = c * hl
    ly = s * hl
    wx = -s * hw
    wy = c * hw
    return (
        (cx + lx + wx, cy + ly + wy),
        (cx - lx + wx, cy - ly + wy),
        (cx - lx - wx, cy - ly - wy),
        (cx + lx - wx, cy + ly - wy),
    )


def circumradius(length: float, width: float) -> float:
    """Radius of the smallest circle around a length x width rectangle.

    >>> circumradius(6.0, 8.0)
    5.0
    """
    return 0.5 * math.hypot(length, width)


def _projected_separation(corners_a: Corners, corners_b: Corners, ax: float, ay: float) -> bool:
    """True when the axis (ax, ay) strictly separates the two corner sets."""
    lo_a = hi_a = corners_a[0][0] * ax + corners_a[0][1] * ay
    for x, y in corners_a[1:]:
        p = x * ax + y * ay
        if p < lo_a:
            lo_a = p
        elif p > hi_a:
            hi_a = p
    lo_b = hi_b = corners_b[0][0] * ax + corners_b[0][1] * ay
    for x, y in corners_b[1:]:
        p = x * ax + y * ay
        if p < lo_b:
            lo_b = p
        elif p > hi_b:
            hi_b = p
    return hi_a < lo_b or hi_b < lo_a


def rects_overlap(corners_a: Corners, corners_b: Corners) -> bool:
    """Separating-axis test for two oriented rectangles (touching counts as overlap)."""
    for corners in (corners_a, corners_b):
        x0, y0 = corners[0]
        x1, y1 = corners[1]
        x3, y3 = corners[3]
        # Edge directions double as projection axes; normals are the other edge.
        if _projected_separation(corners_a, corners_b, x1 - x0, y1 - y0):
            return False
        if _projected_separation(corners_a, corners_b, x3 - x0, y3 - y0):
            return False
    return True


def _point_segment_dist_sq(
    px: float, py: float, ax: float, ay: float, bx: float, by: float
) -> float:
    dx = bx - ax
    dy = by - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq <= 0.0:
        ex = px - ax
        ey = py - ay
        return ex * ex + ey * ey
    t = ((px - ax) * dx + (py - ay) * dy) / seg_len_sq
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return ex * ex + ey * ey


def rect_gap(corners_a: Corners, corners_b: Corners) -> float:
    """Smallest distance between two rectangle boundaries, 0.0 when they overlap.

    For disjoint convex shapes the minimum is attained at a corner of one
    shape and an edge of the other, so 32 point-to-segment checks cover it.

    >>> a = rect_corners(0.0, 0.0, 0.0, 4.0, 2.0)
    >>> b = rect_corners(10.0, 0.0, 0.0, 4.0, 2.0)
    >>> rect_gap(a, b)
    6.0
    """
    if rects_overlap(corners_a, corners_b):
        return 0.0
    best = math.inf
    for one, other in ((corners_a, corners_b), (corners_b, corners_a)):
        e0 = other[0]
        e1 = other[1]
        e2 = other[2]
        e3 = other[3]
        for px, py in one:
            d = _point_segment_dist_sq(px, py, e0[0], e0[1], e1[0], e1[1])
            if d < best:
                best = d
            d = _point_segment_dist_sq(px, py, e1[0], e1[1], e2[0], e2[1])
            if d < best:
                best = d
            d = _point_segment_dist_sq(px, py, e2[0], e2[1], e3[0], e3[1])
            if d < best:
                best = d
            d = _point_segment_dist_sq(px, py, e3[0], e3[1], e0[0], e0[1])
            if d < best:
                best = d
    return math.sqrt(best)
