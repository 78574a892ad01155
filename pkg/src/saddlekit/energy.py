"""Dirichlet energy, hat cutting and discrete harmonic maps.

For a piecewise-linear map the energy of one triangle is
``area * |df|_F^2``, which equals ``1/2 * sum(cot(angle) * length^2)`` over
its edges, the angle being the domain angle opposite the edge and the
length the target distance between the edge's images.  Summing over
triangles gives ``E = sum_e w_e |f(i) - f(j)|^2`` with cotangent weights
``w_e``; on Delaunay meshes all ``w_e >= 0``, so any map that does not
stretch edges does not raise the energy.  That is what makes hat cutting
an energy-decreasing operation here.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import spsolve

from .mesh import DiscMesh, PLMap
from .saddle import Component, find_hats, segment_hat_vertices
from .targets import (GeodesicSegment, TargetSpace, angle_gap, cone_distance, from_chart,
                      pairwise_distance)

log = logging.getLogger(__name__)


class EnergyError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message, iterations=0, residual=float("nan")):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3g})")
        self.iterations = iterations
        self.residual = residual


@dataclass
class EnergyReport:
    total: float
    per_triangle: np.ndarray
    edge_weights: np.ndarray

    def edge_form(self, plmap: PLMap) -> float:
        """``sum_e w_e |f(i) - f(j)|^2`` (target distances)."""
        E = plmap.mesh.edges
        d = pairwise_distance(plmap.space, plmap.images[E[:, 0]], plmap.images[E[:, 1]])
        return float(np.sum(self.edge_weights * d * d))


def edge_lengths(plmap: PLMap) -> np.ndarray:
    E = plmap.mesh.edges
    return pairwise_distance(plmap.space, plmap.images[E[:, 0]], plmap.images[E[:, 1]])


def dirichlet_energy(plmap: PLMap) -> EnergyReport:
    mesh = plmap.mesh
    area = mesh.signed_areas
    if np.any(np.abs(area) <= 1e-15):
        raise EnergyError("degenerate (zero-area) domain triangle")
    T = mesh.triangles
    if plmap.space.is_flat:
        P = mesh.vertices[T]
        F = plmap.images[T]
        dom = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)     # (F, 2, 2)
        img = np.stack([F[:, 1] - F[:, 0], F[:, 2] - F[:, 0]], axis=2)     # (F, d, 2)
        J = img @ np.linalg.inv(dom)
        per = np.abs(area) * np.sum(J * J, axis=(1, 2))
    else:
        # cone: developed triangle with geodesic edge lengths
        P = mesh.vertices[T]
        twice = 2.0 * np.abs(area)
        per = np.zeros(len(T))
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            u = P[:, i] - P[:, k]
            v = P[:, j] - P[:, k]
            cot = np.sum(u * v, axis=1) / twice
            L = cone_distance(plmap.space, plmap.images[T[:, i]], plmap.images[T[:, j]])
            per += 0.5 * cot * L * L
    return EnergyReport(float(per.sum()), per, mesh.cot_weights.copy())


# ---------------------------------------------------------------- hat cutting

def cut_hat(plmap: PLMap, segment: GeodesicSegment, hat) -> PLMap:
    """Replace the map on a hat by the point at matching distance along the segment.

    A hat vertex ``z`` goes to ``gamma(min(|x - f(z)|, |x - y|))``; every
    other vertex keeps its image.  ``hat`` is a :class:`Component` from
    :func:`find_hats` or an explicit vertex array.
    """
    if isinstance(hat, Component):
        verts = segment_hat_vertices(plmap, segment, hat)
    else:
        verts = np.asarray(hat, dtype=np.int64)
        if plmap.mesh.boundary_mask[verts].any():
            from .saddle import CutError
            raise CutError("vertex set touches the domain boundary: not a hat")
    t = pairwise_distance(plmap.space, np.repeat(segment.x[None, :], len(verts), 0),
                          plmap.images[verts])
    new = plmap.images.copy()
    new[verts] = segment.points(np.minimum(t, segment.length))
    return plmap.with_images(new)


def saddle_by_descent(plmap: PLMap, segments, rounds: int = 10, refinement: int = 2):
    """Cut hats for the given segments until none are left (or ``rounds`` run out).

    Returns the final map and a trace of ``(round, cut_index, energy)`` rows;
    the first row is the starting energy.
    """
    if not plmap.mesh.is_delaunay():
        raise EnergyError("mesh is not Delaunay: energy decrease is not guaranteed")
    e = dirichlet_energy(plmap).total
    trace = [(0, 0, e)]
    cut = 0
    for rnd in range(1, rounds + 1):
        did = False
        for seg in segments:
            for h in find_hats(plmap, seg, refinement):
                try:
                    verts = segment_hat_vertices(plmap, seg, h)
                except ValueError:
                    continue
                new = cut_hat(plmap, seg, verts)
                if np.array_equal(new.images, plmap.images):
                    continue
                plmap = new
                cut += 1
                e = dirichlet_energy(plmap).total
                trace.append((rnd, cut, e))
                did = True
        if not did:
            break
    return plmap, trace


# ---------------------------------------------------------------- harmonic maps

@dataclass
class SolverConfig:
    weight_scheme: str = "cotangent"
    max_iterations: int = 100_000
    tol_solve: float | None = None
    mode: str | None = None

    def __post_init__(self):
        if self.weight_scheme not in ("cotangent", "mean_value"):
            raise ValueError(f"unknown weight scheme {self.weight_scheme!r}")
        if self.tol_solve is not None and not self.tol_solve > 0:
            raise ValueError("tol_solve must be positive")
        if self.mode not in (None, "direct_linear", "iterative_descent"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def resolved(self, space: TargetSpace) -> "SolverConfig":
        mode = self.mode or ("direct_linear" if space.is_flat else "iterative_descent")
        tol = self.tol_solve or (1e-10 if mode == "direct_linear" else 1e-7)
        return SolverConfig(self.weight_scheme, self.max_iterations, tol, mode)


@dataclass
class SolveInfo:
    mode: str
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list)


def weight_matrix(mesh: DiscMesh, scheme: str = "cotangent") -> sparse.csr_matrix:
    """Sparse ``W`` with ``W[i, j]`` the weight of neighbour ``j`` in vertex ``i``'s average."""
    n = mesh.n_vertices
    E = mesh.edges
    if scheme == "cotangent":
        w = mesh.cot_weights
        return sparse.coo_matrix((np.r_[w, w], (np.r_[E[:, 0], E[:, 1]], np.r_[E[:, 1], E[:, 0]])),
                                 shape=(n, n)).tocsr()
    # mean value weights: tan(half corner angle) / edge length, from both adjacent triangles
    T = mesh.triangles
    P = mesh.vertices[T]
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        u = P[:, i] - P[:, k]
        v = P[:, j] - P[:, k]
        lu = np.linalg.norm(u, axis=1)
        lv = np.linalg.norm(v, axis=1)
        cos = np.clip(np.sum(u * v, axis=1) / (lu * lv), -1, 1)
        th = np.tan(0.5 * np.arccos(cos))
        rows += [T[:, k], T[:, k]]
        cols += [T[:, i], T[:, j]]
        vals += [th / lu, th / lv]
    return sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n)).tocsr()


def _boundary_array(mesh: DiscMesh, boundary_values, space):
    B = np.asarray(boundary_values, dtype=float)
    if B.shape != (len(mesh.boundary), space.dim):
        raise ValueError(f"boundary_values must have shape ({len(mesh.boundary)}, {space.dim})")
    return np.array([space.check_point(b) for b in B])


def harmonic_solve(mesh: DiscMesh, boundary_values, space: TargetSpace,
                   config: SolverConfig | None = None, initial: PLMap | None = None,
                   return_info: bool = False):
    """Discrete harmonic map with prescribed boundary values.

    Flat targets solve the weighted Laplace system once; cone targets run a
    vertex-wise energy descent (see :func:`_cone_descent`).
    """
    cfg = (config or SolverConfig()).resolved(space)
    B = _boundary_array(mesh, boundary_values, space)
    if cfg.mode == "direct_linear":
        if not space.is_flat:
            raise ValueError("direct_linear needs a flat target")
        out, info = _direct(mesh, B, space, cfg)
    else:
        if space.kind != "cone":
            raise ValueError("iterative_descent is implemented for cone targets")
        out, info = _cone_descent(mesh, B, space, cfg, initial)
        if not info.converged:
            raise SolverError("cone descent did not converge", info.iterations, info.residual)
    return (out, info) if return_info else out


def _direct(mesh, B, space, cfg):
    W = weight_matrix(mesh, cfg.weight_scheme)
    L = sparse.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    inner = mesh.interior
    bnd = mesh.boundary
    X = np.zeros((mesh.n_vertices, space.dim))
    X[bnd] = B
    if len(inner):
        A = L[inner][:, inner].tocsc()
        rhs = -(L[inner][:, bnd] @ B)
        with np.errstate(all="raise"):
            try:
                sol = spsolve(A, rhs)
            except (RuntimeError, FloatingPointError) as exc:
                raise SolverError(f"singular Laplace system: {exc}") from None
        sol = np.asarray(sol).reshape(len(inner), space.dim)
        if not np.all(np.isfinite(sol)):
            raise SolverError("singular Laplace system")
        X[inner] = sol
    res = float(np.abs((L @ X)[inner]).max()) if len(inner) else 0.0
    scale = max(float(np.abs(B).max()), 1.0)
    if res > cfg.tol_solve * scale * 1e3:
        raise SolverError("linear solve residual too large", 1, res)
    return PLMap(mesh, X, space), SolveInfo("direct_linear", 1, res, True)


# ---------------------------------------------------------------- cone descent

def _colouring(mesh: DiscMesh) -> list[np.ndarray]:
    """Greedy colouring of interior vertices (ascending index) into independent sets."""
    A = mesh.adjacency
    colour = np.full(mesh.n_vertices, -1)
    for v in mesh.interior:
        used = set(colour[A.indices[A.indptr[v]:A.indptr[v + 1]]].tolist())
        c = 0
        while c in used:
            c += 1
        colour[v] = c
    return [np.flatnonzero(colour == c) for c in range(colour.max() + 1)]


def _initial_cone(mesh, B, space):
    # squash the cone angle to 2 pi, solve flat, stretch back
    s = 2 * np.pi / space.cone_angle
    flat = np.stack([B[:, 0] * np.cos(s * B[:, 1]), B[:, 0] * np.sin(s * B[:, 1])], 1)
    from .targets import PLANE
    X, _ = _direct(mesh, flat, PLANE, SolverConfig().resolved(PLANE))
    r = np.minimum(np.hypot(X.images[:, 0], X.images[:, 1]), space.cone_radius)
    th = np.mod(np.arctan2(X.images[:, 1], X.images[:, 0]) / s, space.cone_angle)
    out = np.stack([r, np.where(r > 0, th, 0.0)], 1)
    out[mesh.boundary] = B
    return out


def _local_energy(space, p, Q, W):
    """``sum_j w_j d(p, q_j)^2`` for rows of points ``p`` (S, 2), ``Q`` (S, deg, 2)."""
    d = cone_distance(space, p[:, None, :], Q)
    return np.sum(W * d * d, axis=1)


def _tip_direction(space, Q, W, samples=2048):
    """Best escape direction from the tip and its slope gain (> 0 means moving helps)."""
    th = np.linspace(0, space.cone_angle, samples, endpoint=False)
    th = np.concatenate([th, Q[:, 1]])
    gap = np.abs(angle_gap(space, th[:, None], Q[None, :, 1]))
    gain = np.sum(W[None, :] * Q[None, :, 0] * np.cos(np.minimum(gap, np.pi)), axis=1)
    k = int(np.argmax(gain))
    return th[k], float(gain[k])


def _cone_descent(mesh, B, space, cfg, initial):
    X = initial.images.copy() if initial is not None else _initial_cone(mesh, B, space)
    X[mesh.boundary] = B
    nbt = mesh.neighbor_table
    W = weight_matrix(mesh, cfg.weight_scheme)
    Wt = np.zeros(nbt.shape)
    for v in range(mesh.n_vertices):
        nb = W.indices[W.indptr[v]:W.indptr[v + 1]]
        wv = W.data[W.indptr[v]:W.indptr[v + 1]]
        pos = {int(j): i for i, j in enumerate(nbt[v])}
        for j, w in zip(nb, wv):
            Wt[v, pos[int(j)]] = w
    if np.any(Wt < -1e-12):
        raise SolverError("negative weights: cone descent needs a Delaunay mesh")
    colours = _colouring(mesh)
    R = space.cone_radius
    history = []
    move = np.inf
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        move = 0.0
        for S in colours:
            if len(S) == 0:
                continue
            move = max(move, _cone_update(space, X, S, nbt[S], Wt[S], R))
        history.append(move)
        if move < cfg.tol_solve:
            break
    info = SolveInfo("iterative_descent", it, float(move), bool(move < cfg.tol_solve), history)
    return PLMap(mesh, X, space), info


def _cone_update(space, X, S, nbt, Wt, R) -> float:
    p = X[S]
    Q = X[nbt]
    old = _local_energy(space, p, Q, Wt)
    wsum = Wt.sum(axis=1)
    new = p.copy()
    at_tip = p[:, 0] <= 0
    # vertices off the tip: weighted average of log vectors in the chart at p
    k = np.flatnonzero(~at_tip & (wsum > 0))
    if len(k):
        r = p[k, 0]
        gap = angle_gap(space, p[k, 1][:, None], Q[k, :, 1])
        inside = np.abs(gap) < np.pi
        qx = Q[k, :, 0] * np.cos(gap)
        qy = Q[k, :, 0] * np.sin(gap)
        lx = np.where(inside, qx - r[:, None], -(r[:, None] + Q[k, :, 0]))
        ly = np.where(inside, qy, 0.0)
        w = Wt[k]
        sx = np.sum(w * lx, axis=1) / wsum[k]
        sy = np.sum(w * ly, axis=1) / wsum[k]
        alpha = np.ones(len(k))
        best = p[k].copy()
        best_e = old[k].copy()
        todo = np.ones(len(k), dtype=bool)
        for _ in range(40):
            cx = r + alpha * sx
            cy = alpha * sy
            # closest approach of the move to the tip; passing it means clamping there
            L2 = (alpha * sx) ** 2 + (alpha * sy) ** 2
            t = np.clip(-(r * alpha * sx) / np.where(L2 > 0, L2, 1), 0, 1)
            near = np.hypot(r + t * alpha * sx, t * alpha * sy) <= 1e-14 * max(R, 1)
            cand = from_chart(space, p[k, 1], np.stack([cx, cy], 1))
            cand[near] = 0.0
            cand[:, 0] = np.minimum(cand[:, 0], R)
            e = _local_energy(space, cand, Q[k], Wt[k])
            ok = todo & (e < best_e)
            best[ok] = cand[ok]
            best_e[ok] = e[ok]
            todo &= ~ok
            if not todo.any():
                break
            alpha = np.where(todo, alpha * 0.5, alpha)
        new[k] = best
    for i in np.flatnonzero(at_tip & (wsum > 0)):
        th, gain = _tip_direction(space, Q[i], Wt[i])
        if gain <= 0:
            continue
        f = lambda s: float(_local_energy(space, np.array([[s, th]]), Q[i][None], Wt[i][None])[0])
        res = minimize_scalar(f, bounds=(0.0, R), method="bounded", options={"xatol": 1e-13})
        if res.fun < old[i]:
            new[i] = (res.x, th)
    moved = cone_distance(space, p, new)
    X[S] = new
    return float(moved.max(initial=0.0))
