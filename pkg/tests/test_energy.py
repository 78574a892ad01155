import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saddlekit import generators as gen
from saddlekit.energy import (EnergyError, SolverConfig, SolverError, cut_hat, dirichlet_energy,
                              edge_lengths, harmonic_solve, saddle_by_descent, weight_matrix)
from saddlekit.mesh import DiscMesh, PLMap, identity_map
from saddlekit.saddle import CutError, find_hats, is_saddle, segment_hat_vertices
from saddlekit.targets import PLANE, SPACE3, cone_distance, geodesic
from saddlekit.topology import is_light, is_monotone


def _area(mesh):
    return float(np.abs(mesh.signed_areas).sum())


def test_unit_right_triangle_energy():
    V = np.array([[0, 0], [1, 0], [0, 1.0]])
    m = DiscMesh(V, np.array([[0, 1, 2]]), np.array([0, 1, 2]))
    assert dirichlet_energy(identity_map(m)).total == pytest.approx(1.0, abs=1e-15)


def test_identity_constant_and_linear(disc4):
    a = _area(disc4)
    assert dirichlet_energy(identity_map(disc4)).total == pytest.approx(2 * a, rel=1e-12)
    assert dirichlet_energy(PLMap(disc4, np.full((217, 2), 0.3))).total == 0.0
    lin = PLMap(disc4, disc4.vertices * np.array([2.0, 3.0]))
    assert dirichlet_energy(lin).total == pytest.approx(13 * a, rel=1e-12)


@given(st.integers(0, 2**31), st.sampled_from([2, 3]))
def test_edge_form_equals_triangle_form(seed, dim):
    rng = np.random.default_rng(seed)
    mesh = gen.disc_grid(2)
    f = PLMap(mesh, rng.normal(size=(mesh.n_vertices, dim)), PLANE if dim == 2 else SPACE3)
    rep = dirichlet_energy(f)
    assert rep.total == pytest.approx(rep.per_triangle.sum(), abs=1e-12)
    assert rep.edge_form(f) == pytest.approx(rep.total, abs=1e-9)


@given(st.integers(0, 2**31), st.floats(0.1, 10))
def test_energy_scales_quadratically(seed, c):
    rng = np.random.default_rng(seed)
    mesh = gen.disc_grid(1)
    f = PLMap(mesh, rng.normal(size=(mesh.n_vertices, 2)))
    e = dirichlet_energy(f).total
    assert dirichlet_energy(f.with_images(c * f.images)).total == pytest.approx(c * c * e, rel=1e-12)


def test_zero_area_triangle_rejected():
    V = np.array([[0, 0], [1, 0], [2, 0.0]])
    m = DiscMesh(V, np.array([[0, 1, 2]]), np.array([0, 1, 2]))
    with pytest.raises(EnergyError):
        dirichlet_energy(identity_map(m))


def test_cone_energy_matches_plane_for_untwisted_map():
    # a 2 pi cone is the plane in polar coordinates
    mesh, f = gen.cone_disc(2 * np.pi, 2)
    r, t = f.images.T
    flat = PLMap(mesh, np.stack([r * np.cos(t), r * np.sin(t)], 1))
    assert dirichlet_energy(f).total == pytest.approx(dirichlet_energy(flat).total, rel=1e-12)


def test_affine_boundary_gives_affine_map(disc4):
    A = np.array([[1.5, -0.4], [0.3, 0.8]])
    target = disc4.vertices @ A.T + np.array([0.2, -1.0])
    for w in ("cotangent", "mean_value"):
        out, info = harmonic_solve(disc4, target[disc4.boundary], PLANE, SolverConfig(w),
                                   return_info=True)
        assert np.abs(out.images - target).max() < 1e-9
        assert info.residual < 1e-9


def test_constant_boundary_gives_constant_map(disc4):
    out = harmonic_solve(disc4, np.tile([0.4, -0.2], (48, 1)), PLANE)
    assert np.abs(out.images - [0.4, -0.2]).max() < 1e-12
    assert dirichlet_energy(out).total == pytest.approx(0.0, abs=1e-20)


def test_identity_boundary_gives_saddle_injective_map(disc4):
    out = harmonic_solve(disc4, disc4.vertices[disc4.boundary], PLANE)
    assert is_saddle(out).verdict == "saddle"
    assert np.all(_signed(out) * np.sign(disc4.signed_areas) > 0)


def _signed(f):
    P = f.images[f.mesh.triangles]
    a, b, c = P[:, 0], P[:, 1], P[:, 2]
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])


def test_boundary_shape_checked(disc4):
    with pytest.raises(ValueError):
        harmonic_solve(disc4, np.zeros((3, 2)), PLANE)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol_solve=0.0)
    with pytest.raises(ValueError):
        SolverConfig("bogus")
    assert SolverConfig().resolved(PLANE).tol_solve == 1e-10


def test_harmonic_minimizer_is_first_order_optimal(disc4, rng):
    B = gen.monotone_boundary(disc4, seed=4)
    out = harmonic_solve(disc4, B, PLANE)
    e0 = dirichlet_energy(out).total
    for _ in range(100):
        v = rng.choice(disc4.interior)
        d = rng.normal(size=2)
        X = out.images.copy()
        X[v] += 1e-3 * d / np.linalg.norm(d)
        assert dirichlet_energy(out.with_images(X)).total >= e0 - 1e-14


def test_mean_value_weights_positive(disc4):
    W = weight_matrix(disc4, "mean_value")
    assert W.data.min() > 0


def test_cut_hat_trivial_cases():
    mesh, f = gen.pinch(4)
    seg = geodesic(PLANE, (-1, 0), (1, 0))
    hat = find_hats(f, seg, refinement=2)[0]
    verts = segment_hat_vertices(f, seg, hat)
    X = f.images.copy()
    X[verts[0]] = seg.x
    X[verts[1]] = [5.0, 0.3]
    new = cut_hat(f.with_images(X), seg, verts)
    assert np.allclose(new.images[verts[0]], seg.x)
    assert np.allclose(new.images[verts[1]], seg.y)
    others = np.setdiff1d(np.arange(mesh.n_vertices), verts)
    assert np.array_equal(new.images[others], X[others])


def test_cut_hat_rejects_boundary_component():
    mesh, f = gen.pinch(4)
    seg = geodesic(PLANE, (-1, 0), (1, 0))
    with pytest.raises(CutError):
        cut_hat(f, seg, mesh.boundary[:3])


@pytest.mark.parametrize("kw", [{}, {"upper_only": True}, {"amplitude": 2.0, "rotation": 0.7},
                                {"ring": 5, "shift": (0.3, -0.2)}])
def test_cut_hat_contracts_edges_and_lowers_energy(kw):
    mesh, f = gen.pinch(4, **kw)
    seg = geodesic(PLANE, *_axis(kw))
    e_before = dirichlet_energy(f).total
    L0 = edge_lengths(f)
    for hat in find_hats(f, seg, refinement=2):
        g = cut_hat(f, seg, hat)
        L1 = edge_lengths(g)
        assert np.all(L1 <= L0 + 1e-12)
        assert dirichlet_energy(g).total < e_before


def _axis(kw):
    c, s = np.cos(kw.get("rotation", 0.0)), np.sin(kw.get("rotation", 0.0))
    sh = np.asarray(kw.get("shift", (0.0, 0.0)))
    return np.array([-c, -s]) + sh, np.array([c, s]) + sh


def test_descent_on_saddle_input_makes_no_cuts(disc4):
    f = identity_map(disc4)
    seg = geodesic(PLANE, (-1, 0), (1, 0))
    out, trace = saddle_by_descent(f, [seg])
    assert len(trace) == 1 and trace[0][2] == dirichlet_energy(f).total
    assert np.array_equal(out.images, f.images)


def test_descent_one_hat_one_cut():
    _, f = gen.pinch(4, upper_only=True)
    seg = geodesic(PLANE, (-1, 0), (1, 0))
    out, trace = saddle_by_descent(f, [seg])
    assert len(trace) == 2 and trace[1][2] < trace[0][2]
    assert not find_hats(out, seg, refinement=2)


def test_descent_trace_non_increasing():
    _, f = gen.pinch(4, amplitude=1.5)
    segs = [geodesic(PLANE, (-1, 0), (1, 0))]
    _, trace = saddle_by_descent(f, segs, rounds=3)
    e = [t[2] for t in trace]
    assert all(b < a for a, b in zip(e, e[1:]))


def test_descent_rejects_non_delaunay():
    V = np.array([[0, 0], [4, 0], [2, 0.2], [2, -0.2]])
    m = DiscMesh(V, np.array([[0, 3, 1], [0, 1, 2]]), np.array([0, 3, 1, 2]))
    assert not m.is_delaunay()
    with pytest.raises(EnergyError):
        saddle_by_descent(identity_map(m), [geodesic(PLANE, (0, 0), (1, 0))])


def test_cone_descent_converges_and_is_locally_optimal():
    mesh, f = gen.cone_disc(3 * np.pi, 3, warp=0.2)
    out, info = harmonic_solve(mesh, f.boundary_images, f.space, return_info=True)
    assert info.converged and info.residual < 1e-7
    assert np.array_equal(out.images[mesh.boundary], f.boundary_images)
    e0 = dirichlet_energy(out).total
    rng = np.random.default_rng(3)
    for _ in range(30):
        v = rng.choice(mesh.interior)
        X = out.images.copy()
        r, t = X[v]
        X[v] = (min(max(r + rng.normal() * 1e-3, 0.0), 1.0), t + rng.normal() * 1e-3)
        assert dirichlet_energy(out.with_images(X)).total >= e0 - 1e-7


def test_cone_descent_reports_non_convergence():
    mesh, f = gen.cone_disc(3 * np.pi, 2, warp=0.2)
    with pytest.raises(SolverError) as exc:
        harmonic_solve(mesh, f.boundary_images, f.space, SolverConfig(max_iterations=2))
    assert exc.value.iterations == 2


def test_arc_collapse_harmonic_map_is_monotone(disc4):
    out = harmonic_solve(disc4, gen.collapse_arc(disc4, 0.5, np.pi / 2), PLANE)
    assert is_monotone(out, grid_n=24).verdict
