import math

from hypothesis import given, strategies as st

from signsim import geometry

SQUARE = ((0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0))
L_SHAPE = ((0.0, 0.0), (10.0, 0.0), (10.0, 4.0), (4.0, 4.0), (4.0, 10.0), (0.0, 10.0))


def test_polygon_area_and_winding():
    assert geometry.polygon_area(SQUARE) == 100.0
    cw = tuple(reversed(SQUARE))
    assert geometry.polygon_area(cw) == -100.0
    assert geometry.polygon_area(geometry.ensure_ccw(cw)) == 100.0


def test_point_in_polygon_boundary_inclusive():
    assert geometry.point_in_polygon((5.0, 5.0), SQUARE)
    assert geometry.point_in_polygon((0.0, 5.0), SQUARE)  # on edge
    assert geometry.point_in_polygon((0.0, 0.0), SQUARE)  # on vertex
    assert not geometry.point_in_polygon((-0.1, 5.0), SQUARE)
    assert not geometry.point_strictly_in_polygon((0.0, 5.0), SQUARE)
    assert geometry.point_strictly_in_polygon((5.0, 5.0), SQUARE)


def test_point_in_nonconvex():
    assert geometry.point_in_polygon((2.0, 8.0), L_SHAPE)
    assert not geometry.point_in_polygon((8.0, 8.0), L_SHAPE)


def test_proper_crossing():
    assert geometry.segments_properly_cross((0, 0), (2, 2), (0, 2), (2, 0))
    # Shared endpoint is not a proper crossing.
    assert not geometry.segments_properly_cross((0, 0), (2, 2), (2, 2), (3, 0))
    # Collinear overlap is not a proper crossing.
    assert not geometry.segments_properly_cross((0, 0), (4, 0), (1, 0), (3, 0))


def test_segment_crosses_polygon():
    box = ((4.0, 4.0), (6.0, 4.0), (6.0, 6.0), (4.0, 6.0))
    assert geometry.segment_crosses_polygon((0, 5), (10, 5), box)
    assert not geometry.segment_crosses_polygon((0, 1), (10, 1), box)
    # Fully inside: no edge crossing but the midpoint betrays it.
    assert geometry.segment_crosses_polygon((4.4, 5.0), (5.6, 5.0), box)
    # Ending on a face does not count as crossing.
    assert not geometry.segment_crosses_polygon((0, 5), (4.0, 5.0), box)


def test_segment_stays_inside():
    assert geometry.segment_stays_inside((1, 1), (9, 9), SQUARE)
    assert not geometry.segment_stays_inside((1, 1), (11, 1), SQUARE)
    # Leaves and re-enters the L notch.
    assert not geometry.segment_stays_inside((2.0, 9.0), (9.0, 2.0), L_SHAPE)


def test_rect_polygon_open_interior_overlap():
    box = ((4.5, 4.5), (5.5, 4.5), (5.5, 5.5), (4.5, 5.5))
    assert geometry.rect_intersects_polygon((4.5, 4.5, 5.0, 5.0), box)
    # Flush neighbor cell only shares the boundary.
    assert not geometry.rect_intersects_polygon((4.0, 4.5, 4.5, 5.0), box)
    # Rect containing the polygon, and polygon containing the rect.
    assert geometry.rect_intersects_polygon((4.0, 4.0, 6.0, 6.0), box)
    assert geometry.rect_intersects_polygon((4.7, 4.7, 4.9, 4.9), box)


def test_rect_inside_polygon():
    assert geometry.rect_inside_polygon((1, 1, 2, 2), SQUARE)
    assert geometry.rect_inside_polygon((0.0, 0.0, 0.5, 0.5), SQUARE)  # flush with boundary
    assert not geometry.rect_inside_polygon((9.5, 9.5, 10.5, 10.5), SQUARE)
    # All corners inside the L but an outline edge cuts through.
    assert not geometry.rect_inside_polygon((3.0, 3.0, 5.0, 5.0), L_SHAPE)


def test_is_simple_polygon():
    assert geometry.is_simple_polygon(SQUARE)
    assert geometry.is_simple_polygon(L_SHAPE)
    bowtie = ((0, 0), (2, 2), (2, 0), (0, 2))
    assert not geometry.is_simple_polygon(bowtie)
    assert not geometry.is_simple_polygon(((0, 0), (1, 1)))


def test_nearest_point_and_distance():
    assert geometry.nearest_point_on_segment((5, 5), (0, 0), (10, 0)) == (5.0, 0.0)
    assert geometry.dist_point_segment((5, 5), (0, 0), (10, 0)) == 5.0
    assert geometry.dist_point_segment((-3, 4), (0, 0), (10, 0)) == 5.0  # clamps to endpoint


coords = st.floats(min_value=0.05, max_value=9.95, allow_nan=False, allow_infinity=False)


@given(px=coords, py=coords, qx=coords, qy=coords)
def test_stays_inside_is_symmetric(px, py, qx, qy):
    p, q = (px, py), (qx, qy)
    assert geometry.segment_stays_inside(p, q, L_SHAPE) == geometry.segment_stays_inside(q, p, L_SHAPE)
