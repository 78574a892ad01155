import numpy as np
import pytest

from saddlekit import generators as gen
from saddlekit.energy import dirichlet_energy
from saddlekit.graph import (GraphError, boundary_convexity, check_boundary_convex,
                             check_graph_property, check_max_principle, envelopes,
                             max_principle_hat, overlapping_pairs, project_xy)
from saddlekit.mesh import PLMap
from saddlekit.saddle import disc_cells, is_saddle
from saddlekit.targets import SPACE3


def _lift(mesh, xy, z=None):
    z = np.zeros(len(xy)) if z is None else z
    return PLMap(mesh, np.c_[xy, z], SPACE3)


def test_projection_of_graph_is_domain(hyperbolic):
    mesh, f = hyperbolic
    p = project_xy(f)
    assert np.array_equal(p.images, mesh.vertices)
    assert dirichlet_energy(p).total <= dirichlet_energy(f).total


def test_boundary_convexity_cases(disc4):
    assert check_boundary_convex(_lift(disc4, disc4.vertices))
    reflex = disc4.vertices.copy()
    reflex[disc4.boundary[5]] *= 0.5
    assert not check_boundary_convex(_lift(disc4, reflex))
    _, fold = gen.fold(4)
    info = boundary_convexity(_lift(disc4, fold.images))
    assert not info["simple"] and not info["ok"]


def test_figure_eight_boundary_not_simple(disc4):
    t = gen.boundary_angles(disc4)
    xy = disc4.vertices.copy()
    xy[disc4.boundary] = np.stack([np.sin(t), np.sin(t) * np.cos(t)], 1)
    assert not boundary_convexity(_lift(disc4, xy))["simple"]


def test_graph_surfaces(hyperbolic, disc4):
    rep = check_graph_property(hyperbolic[1])
    assert rep.verdict == "graph" and not rep.overlap_pairs and rep.alpha_eq_beta
    flat = check_graph_property(_lift(disc4, disc4.vertices))
    assert flat.verdict == "graph"


def test_overhang_is_not_a_graph():
    _, f = gen.overhang(4)
    rep = check_graph_property(f)
    assert rep.verdict == "not_graph" and rep.boundary_convex
    i, j = rep.overlap_pairs[0]
    tri = f.images[f.mesh.triangles[[i, j]]][:, :, :2]
    assert len(overlapping_pairs(tri)) == 1


def test_touching_triangles_do_not_overlap():
    tri = np.array([[[0, 0], [1, 0], [0, 1]], [[1, 0], [1, 1], [0, 1]], [[1, 1], [2, 1], [1, 2]]],
                   dtype=float)
    assert len(overlapping_pairs(tri)) == 0
    tri[2] -= 0.6
    assert len(overlapping_pairs(tri)) > 0


def test_envelopes_of_graph_equal_function(hyperbolic):
    env = envelopes(hyperbolic[1], grid_n=64)
    ok = ~np.isnan(env.alpha)
    assert np.nanmax(np.abs(env.alpha - env.beta)) <= 1e-9
    X, Y = np.meshgrid(env.xs, env.ys)
    # PL interpolation error of x^2 - y^2 on edges of length 1/8 is at most (1/8)^2 / 4 * 2
    assert np.abs(env.alpha - (X * X - Y * Y))[ok].max() < 2 * (1 / 8) ** 2 / 4 + 1e-12
    assert env.boundary_agree()


def test_envelopes_of_overhang_have_gap():
    _, f = gen.overhang(4)
    env = envelopes(f, grid_n=64)
    assert env.max_gap > 0.1
    i, j = env.nearest(0.0, 0.0)
    assert env.beta[i, j] - env.alpha[i, j] > 0.1
    assert env.boundary_agree()


def test_envelope_sandwich(hyperbolic):
    _, f = hyperbolic
    env = envelopes(f, grid_n=257)
    h = env.xs[1] - env.xs[0]
    for x, y, z in f.images[::7]:
        i, j = env.nearest(x, y)
        if np.isnan(env.alpha[i, j]):
            continue
        slack = 4 * h + env.tol_env       # |grad| <= 2 on the unit disc
        assert env.alpha[i, j] - slack <= z <= env.beta[i, j] + slack


def test_max_principle_cases(hyperbolic, bump_map):
    mesh, f = hyperbolic
    assert check_max_principle(f, (0, 0, 0), disc_cells(mesh, (0, 0), 0.5)).ok
    mesh, g = bump_map
    rep = check_max_principle(g, (0, 0, 0), disc_cells(mesh, (0, 0), 0.5))
    assert not rep.ok and rep.witness == 0
    hats = max_principle_hat(g, (0, 0, 0), rep)
    assert hats and 0 in hats[0].vertices


def test_max_principle_whole_mesh_with_regression_plane():
    mesh, f = gen.graph_of("x^2 - y^2 + 0.3*x*y + 0.2*x", 4)
    A = np.c_[f.images[:, :2], np.ones(mesh.n_vertices)]
    lam, *_ = np.linalg.lstsq(A, f.images[:, 2], rcond=None)
    rep = check_max_principle(f, lam, np.arange(mesh.n_triangles))
    assert rep.ok
    # the rim of the whole mesh is the disc boundary
    h = f.images[:, 2] - A @ lam
    assert rep.boundary_max == pytest.approx(h[mesh.boundary].max())


def test_max_principle_rejects_non_graph():
    mesh, f = gen.overhang(4)
    with pytest.raises(GraphError):
        check_max_principle(f, (0, 0, 0), disc_cells(mesh, (0, 0), 0.5))


def test_max_principle_rejects_disconnected_subdomain(hyperbolic):
    mesh, f = hyperbolic
    cells = np.r_[disc_cells(mesh, (-0.6, 0), 0.2), disc_cells(mesh, (0.6, 0), 0.2)]
    with pytest.raises(ValueError):
        check_max_principle(f, (0, 0, 0), cells)


@pytest.mark.parametrize("expr", ["x^2 - y^2", "x*y", "x^3 - 3*x*y^2", "0.5*x + 0.2*y"])
def test_saddle_graphs_are_graphs(expr):
    _, f = gen.graph_of(expr, 4)
    assert is_saddle(f).verdict == "saddle"
    assert check_graph_property(f).verdict == "graph"


def test_project_rejects_planar_map(disc4):
    with pytest.raises(GraphError):
        project_xy(PLMap(disc4, disc4.vertices))
