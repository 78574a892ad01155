import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saddlekit.targets import (PLANE, SPACE3, ConvexRegion, HalfSpace, TargetError, TargetSpace,
                               cone, convex_hull_2d, distance, geodesic, geodesic_midpoints,
                               orient2d, point_segment_distance, segments_intersect)

# shortest paths from tests/oracles/cone_dijkstra.py (81 x 720 polar grid, omega = 3 pi)
DIJKSTRA = [((0.8, 0.0), (0.6, 1.0), 0.6935), ((0.8, 0.0), (0.6, 4.0), 1.4),
            ((0.5, 0.0), (0.5, 3.0), 1.0), ((0.7, 0.2), (0.7, 9.0), 0.4262),
            ((0.3, 1.0), (0.9, 5.5), 1.2), ((0.0, 0.0), (0.6, 2.0), 0.6)]

W = 3 * np.pi
polar = st.tuples(st.floats(0, 1), st.floats(0, W, exclude_max=True))


@pytest.mark.parametrize("p,q,expected", DIJKSTRA)
def test_cone_distance_matches_grid_shortest_path(p, q, expected):
    assert distance(cone(W), p, q) == pytest.approx(expected, abs=1e-2)


def test_cone_angle_below_two_pi_rejected():
    with pytest.raises(TargetError):
        cone(np.pi)


def test_cone_point_outside_radius_rejected():
    with pytest.raises(TargetError):
        cone(W).check_point([1.5, 0.0])


def test_cone_theta_is_normalised():
    assert cone(W).check_point([0.5, W + 1.0])[1] == pytest.approx(1.0)


def test_two_pi_cone_is_the_plane():
    s = cone(2 * np.pi)
    p, q = (0.5, 0.3), (0.8, 2.9)
    a = 0.5 * np.array([np.cos(0.3), np.sin(0.3)])
    b = 0.8 * np.array([np.cos(2.9), np.sin(2.9)])
    assert distance(s, p, q) == pytest.approx(np.linalg.norm(a - b), abs=1e-12)


def test_geodesic_through_tip_when_gap_is_large():
    g = geodesic(cone(W), (0.5, 0.0), (0.4, 4.0))
    assert g.through_tip
    assert g.length == pytest.approx(0.9)
    assert g.point(0.5)[0] == pytest.approx(0.0, abs=1e-12)


@given(polar, polar, polar)
def test_cone_triangle_inequality(p, q, r):
    s = cone(W)
    assert distance(s, p, r) <= distance(s, p, q) + distance(s, q, r) + 1e-12


@given(polar, polar)
def test_cone_distance_symmetric(p, q):
    s = cone(W)
    assert distance(s, p, q) == pytest.approx(distance(s, q, p), abs=1e-12)


@given(polar, polar, st.floats(0, 1))
def test_geodesic_points_split_length(p, q, t):
    s = cone(W)
    g = geodesic(s, p, q)
    z = g.point(t * g.length)
    assert distance(s, p, z) + distance(s, z, q) == pytest.approx(g.length, abs=1e-9)


@given(polar, polar)
def test_geodesic_midpoint_is_equidistant(p, q):
    s = cone(W)
    m = geodesic_midpoints(s, np.array([p]), np.array([q]))[0]
    d = distance(s, p, q)
    assert distance(s, p, m) == pytest.approx(d / 2, abs=1e-9)
    assert distance(s, q, m) == pytest.approx(d / 2, abs=1e-9)


def test_segment_distance_is_a_lower_bound_within_spacing():
    s = cone(W)
    g = geodesic(s, (0.8, 0.0), (0.6, 1.0))
    pts = np.array([[0.3, 0.5], [0.9, 4.0], [0.0, 0.0]])
    fine = g.distance_to(pts, spacing=1e-4)
    coarse = g.distance_to(pts, spacing=0.05)
    assert np.all(coarse <= fine + 1e-12)
    assert np.all(fine - coarse <= 0.025 + 1e-12)


def test_plane_segment_distance_exact():
    g = geodesic(PLANE, (0, 0), (1, 0))
    assert g.distance_to(np.array([[0.5, 2.0], [2.0, 0.0]])) == pytest.approx([2.0, 1.0])


def test_halfspace_normalises():
    h = HalfSpace(np.array([0.0, 0.0, 2.0]), 1.0)
    assert h.offset == pytest.approx(0.5)
    assert h.value(np.array([[0, 0, 1.0]]))[0] == pytest.approx(0.5)


def test_halfspace_zero_normal_rejected():
    with pytest.raises(TargetError):
        HalfSpace(np.zeros(2), 0.0)


def test_target_json_round_trip():
    for s in (PLANE, SPACE3, cone(W, 2.0)):
        assert TargetSpace.from_json(s.to_json()) == s


def _hull_oracle(pts):
    """Hull edges by brute force: pairs with every other point on one side."""
    idx = set()
    n = len(pts)
    for i in range(n):
        for j in range(n):
            if i == j or np.allclose(pts[i], pts[j]):
                continue
            side = orient2d(pts[i][None], pts[j][None], pts)
            if np.all(side >= -1e-12):
                idx.update((i, j))
    return idx


@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=25,
                unique=True))
def test_convex_hull_matches_halfplane_oracle(raw):
    pts = np.array(raw, dtype=float)
    if abs(np.linalg.matrix_rank(pts[1:] - pts[0])) < 2:
        return
    hull = convex_hull_2d(pts)
    got = {tuple(v) for v in np.asarray(hull.vertices)}
    oracle = {tuple(pts[i]) for i in _hull_oracle(pts)}
    # the oracle also lists collinear points on hull edges
    assert got <= oracle
    assert np.all(hull.violation(pts) <= 1e-9)
    for v in oracle - got:
        assert hull.violation(np.array([v]))[0] <= 1e-9


def test_convex_region_disc_contains_centre():
    K = ConvexRegion.disc((0.2, 0.1), 0.3)
    assert K.contains(np.array([[0.2, 0.1]]))[0]
    assert not K.contains(np.array([[0.9, 0.1]]))[0]


def test_segments_intersect_cases():
    assert segments_intersect((0, 0), (1, 1), (0, 1), (1, 0))
    assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))
    assert segments_intersect((0, 0), (1, 0), (1, 0), (2, 3))


def test_point_segment_distance():
    d = point_segment_distance(np.array([[0.5, 1.0], [-1.0, 0.0]]), np.zeros(2), np.array([1.0, 0]))
    assert d == pytest.approx([1.0, 1.0])
