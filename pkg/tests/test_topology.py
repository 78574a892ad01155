import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saddlekit import generators as gen
from saddlekit.energy import harmonic_solve
from saddlekit.mesh import PLMap, identity_map, validate_disc_mesh
from saddlekit.targets import PLANE
from saddlekit.topology import (boundary_degree, constant_classes, fiber_components, is_light,
                                is_monotone, monotone_light_factorize, signed_preimage_count)


def test_identity_fiber_is_a_point(disc4):
    rep = fiber_components(identity_map(disc4), [0.1, 0.2])
    assert rep.connected and rep.n_components == 1
    assert rep.components[0].diameter == 0.0
    assert np.allclose(rep.components[0].points, [[0.1, 0.2]])


def test_fold_fiber_has_two_points():
    _, f = gen.fold(4)
    rep = fiber_components(f, [0.3, 0.2])
    assert rep.n_components == 2 and not rep.connected
    ys = sorted(float(c.points[0, 1]) for c in rep.components)
    assert ys == pytest.approx([-0.2, 0.2])


def test_squeeze_centre_fiber_is_inner_disc():
    _, f = gen.squeeze(4)
    rep = fiber_components(f, [0.0, 0.0])
    assert rep.connected
    # the ring of radius 1/2 maps to the centre; its diameter is 1
    assert rep.max_diameter == pytest.approx(1.0, abs=1e-9)
    assert not rep.components[0].touches_boundary


def test_point_outside_bbox_gives_empty_fiber(disc4):
    rep = fiber_components(identity_map(disc4), [3.0, 3.0])
    assert rep.n_components == 0 and not rep.connected


def test_fiber_of_boundary_point_touches_boundary(disc4):
    p = disc4.vertices[disc4.boundary[0]]
    rep = fiber_components(identity_map(disc4), p)
    assert rep.components[0].touches_boundary


@pytest.mark.parametrize("name,monotone,light", [("identity", True, True), ("fold", False, True),
                                                 ("squeeze", True, False),
                                                 ("radial_fold", False, True)])
def test_sampled_verdicts(name, monotone, light):
    _, f = gen.generate_mesh(gen.GeneratorSpec(name, 4))
    assert is_monotone(f, grid_n=24).verdict is monotone
    assert is_light(f, grid_n=24).verdict is light


def test_monotone_witness_reported():
    _, f = gen.fold(4)
    rep = is_monotone(f, grid_n=16)
    assert rep.witnesses and all(w.n_components >= 2 for w in rep.witnesses)


def test_degree_identity_and_reversed(disc4):
    f = identity_map(disc4)
    assert boundary_degree(f) == 1
    g = f.with_images(f.images * np.array([1.0, -1.0]))
    assert boundary_degree(g) == -1


def test_degree_of_doubled_and_collapsed_boundaries(disc4):
    for B, d in ((gen.winding_boundary(disc4, 2), 2), (gen.collapse_arc(disc4, 1.0, 2.0), 1)):
        X = np.zeros((disc4.n_vertices, 2))
        X[disc4.boundary] = B
        assert boundary_degree(PLMap(disc4, X), [0.05, 0.03]) == d


def test_degree_rejects_base_on_curve(disc4):
    with pytest.raises(ValueError):
        boundary_degree(identity_map(disc4), disc4.vertices[disc4.boundary[3]])


def test_cone_degree_around_tip():
    _, f = gen.cone_disc(3 * np.pi, 3, warp=0.3)
    assert boundary_degree(f) == 1


@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_signed_preimage_count_is_degree(x, y):
    _, f = gen.radial_fold(3)
    if np.hypot(x, y) > 0.95:
        return
    # stay off the images of the edges (they are measure zero but do exist)
    y0 = np.array([x, y]) + np.array([1e-7, 3e-7])
    r = np.hypot(*y0)
    if min(abs(r - k) for k in (0.2, 0.6)) < 0.02:
        return
    assert signed_preimage_count(f, y0) == boundary_degree(f)


def test_monotone_implies_onto(disc4):
    out = harmonic_solve(disc4, gen.monotone_boundary(disc4, seed=1, curve="polygon"), PLANE)
    rep = is_monotone(out, grid_n=20)
    assert rep.verdict
    from saddlekit.targets import convex_hull_2d
    hull = convex_hull_2d(out.boundary_images)
    xs = np.linspace(-1, 1, 20)
    for x in xs:
        for y in xs:
            p = np.array([x, y])
            if hull.violation(p[None])[0] < -1e-6:
                assert fiber_components(out, p).n_components >= 1


def test_fibers_of_distinct_points_are_disjoint(disc4, rng):
    out = harmonic_solve(disc4, disc4.vertices[disc4.boundary], PLANE)
    pts = rng.uniform(-0.5, 0.5, (30, 2))
    pre = [fiber_components(out, p).components[0].points[0] for p in pts]
    d = np.linalg.norm(np.array(pre)[:, None] - np.array(pre)[None], axis=2)
    assert d[np.triu_indices(len(pts), 1)].min() > 0


def test_factorize_identity(disc4):
    res = monotone_light_factorize(identity_map(disc4))
    assert res.exact
    assert np.array_equal(res.collapse, np.arange(disc4.n_vertices))
    assert res.quotient.n_triangles == disc4.n_triangles


def test_factorize_squeeze_collapses_inner_disc():
    mesh, f = gen.squeeze(4)
    res = monotone_light_factorize(f)
    assert res.exact
    inner = np.flatnonzero(np.hypot(*mesh.vertices.T) <= 0.5 + 1e-12)
    assert len(np.unique(res.collapse[inner])) == 1
    assert np.array_equal(res.h_light.images[res.collapse], f.images)
    assert validate_disc_mesh(res.quotient).ok


def test_factorize_single_constant_triangle(disc4):
    t = 100
    X = disc4.vertices.copy()
    X[disc4.triangles[t]] = X[disc4.triangles[t]].mean(axis=0)
    res = monotone_light_factorize(PLMap(disc4, X))
    q = res.quotient
    assert q.n_vertices == disc4.n_vertices - 2
    assert q.n_vertices - len(q.edges) + q.n_triangles == 1
    assert np.array_equal(res.h_light.images[res.collapse], X)


def test_constant_classes_are_connected_and_constant():
    mesh, f = gen.squeeze(3)
    lab = constant_classes(f)
    for c in np.unique(lab):
        idx = np.flatnonzero(lab == c)
        assert np.all(f.images[idx] == f.images[idx[0]])
