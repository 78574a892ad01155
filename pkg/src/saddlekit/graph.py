"""Surfaces in 3-space over a convex curve: projection, envelopes and the maximum principle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .mesh import PLMap
from .saddle import find_hats
from .targets import PLANE, HalfSpace, orient2d, segments_intersect

EPS_SNAP = 1e-12


class GraphError(ValueError):
    pass


def _require_space3(surface: PLMap):
    if surface.space.kind != "space3":
        raise GraphError("surface must map into 3-space")


def project_xy(surface: PLMap) -> PLMap:
    _require_space3(surface)
    return PLMap(surface.mesh, surface.images[:, :2].copy(), PLANE)


def z_range(surface: PLMap) -> float:
    z = surface.images[:, 2]
    return float(z.max() - z.min())


# ---------------------------------------------------------------- boundary curve

def boundary_convexity(surface: PLMap) -> dict:
    """Simplicity, convexity and winding of the projected boundary cycle."""
    _require_space3(surface)
    P = surface.boundary_images[:, :2]
    n = len(P)
    Q = np.roll(P, -1, axis=0)
    R = np.roll(P, -2, axis=0)
    cr = orient2d(P, Q, R)
    convex = bool(np.all(cr >= 0) or np.all(cr <= 0))
    simple = bool(np.all(np.linalg.norm(Q - P, axis=1) > 0))
    if simple:
        lo = np.minimum(P, Q)
        hi = np.maximum(P, Q)
        for i in range(n):
            cand = np.flatnonzero(np.all(lo <= hi[i], axis=1) & np.all(hi >= lo[i], axis=1))
            for j in cand:
                if j <= i or j == (i + 1) % n or i == (j + 1) % n:
                    continue
                if segments_intersect(P[i], Q[i], P[j], Q[j]):
                    simple = False
                    break
            if not simple:
                break
    area = 0.5 * float(np.sum(P[:, 0] * Q[:, 1] - Q[:, 0] * P[:, 1]))
    # turning number of a closed polygon: total exterior angle / 2 pi
    e1 = Q - P
    e2 = R - Q
    turn = np.arctan2(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0], np.sum(e1 * e2, axis=1))
    winding = int(round(turn.sum() / (2 * np.pi)))
    ok = simple and convex and abs(winding) == 1
    return {"simple": simple, "convex": convex, "winding": winding, "area": area, "ok": ok}


def check_boundary_convex(surface: PLMap) -> bool:
    return boundary_convexity(surface)["ok"]


# ---------------------------------------------------------------- overlap test

def _candidate_pairs(tri: np.ndarray) -> np.ndarray:
    lo = tri.min(axis=1)
    hi = tri.max(axis=1)
    c = 0.5 * (lo + hi)
    half = 0.5 * np.linalg.norm(hi - lo, axis=1)
    pairs = cKDTree(c).query_pairs(2 * float(half.max(initial=0.0)) + 1e-12, output_type="ndarray")
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    i, j = pairs[:, 0], pairs[:, 1]
    keep = np.all(lo[i] <= hi[j], axis=1) & np.all(lo[j] <= hi[i], axis=1)
    return np.sort(pairs[keep], axis=1)


def overlapping_pairs(tri: np.ndarray, eps: float = EPS_SNAP) -> np.ndarray:
    """Pairs of 2D triangles whose interiors intersect (separating axis test).

    Triangles that only touch along an edge or at a vertex are separated by
    that edge's normal up to ``eps``; zero-area triangles have no interior.
    """
    pairs = _candidate_pairs(tri)
    if len(pairs) == 0:
        return pairs
    scale = max(float(np.abs(tri).max(initial=0.0)), 1.0)
    A = tri[pairs[:, 0]]
    B = tri[pairs[:, 1]]
    axes = []
    for T in (A, B):
        for k in range(3):
            e = T[:, (k + 1) % 3] - T[:, k]
            nrm = np.stack([-e[:, 1], e[:, 0]], 1)
            ln = np.linalg.norm(nrm, axis=1, keepdims=True)
            axes.append(np.where(ln > 0, nrm / np.where(ln > 0, ln, 1), 0.0))
    overlap = np.ones(len(pairs), dtype=bool)
    for ax in axes:
        pa = np.einsum("kvd,kd->kv", A, ax)
        pb = np.einsum("kvd,kd->kv", B, ax)
        gap = np.minimum(pa.max(1), pb.max(1)) - np.maximum(pa.min(1), pb.min(1))
        overlap &= gap > eps * scale
    return pairs[overlap]


# ---------------------------------------------------------------- envelopes

@dataclass
class Envelopes:
    xs: np.ndarray
    ys: np.ndarray
    alpha: np.ndarray          # (ny, nx); nan where undefined
    beta: np.ndarray
    inside: np.ndarray         # node lies in the convex figure
    boundary: np.ndarray       # node within one grid step of the figure's boundary
    tol_env: float

    @property
    def empty(self) -> np.ndarray:
        return self.inside & np.isnan(self.alpha)

    @property
    def gap(self) -> np.ndarray:
        return np.where(np.isnan(self.alpha), 0.0, self.beta - self.alpha)

    @property
    def max_gap(self) -> float:
        return float(self.gap.max(initial=0.0))

    def agree(self) -> bool:
        return self.max_gap <= self.tol_env

    def boundary_agree(self) -> bool:
        return float(self.gap[self.boundary].max(initial=0.0)) <= self.tol_env

    def nearest(self, x, y):
        i = int(np.clip(np.rint((y - self.ys[0]) / self._step(self.ys)), 0, len(self.ys) - 1))
        j = int(np.clip(np.rint((x - self.xs[0]) / self._step(self.xs)), 0, len(self.xs) - 1))
        return i, j

    @staticmethod
    def _step(a):
        return a[1] - a[0] if len(a) > 1 else 1.0

    def to_json(self) -> dict:
        return {"grid_n": len(self.xs), "tol_env": self.tol_env, "max_gap": self.max_gap,
                "alpha_eq_beta": self.agree(), "empty_nodes": int(self.empty.sum()),
                "boundary_agree": self.boundary_agree()}


def envelopes(surface: PLMap, grid_n: int = 128, tol_env: float | None = None) -> Envelopes:
    _require_space3(surface)
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    tol_env = 1e-7 * z_range(surface) if tol_env is None else tol_env
    img = surface.images
    B = surface.boundary_images[:, :2]
    lo, hi = B.min(axis=0), B.max(axis=0)
    xs = np.linspace(lo[0], hi[0], grid_n)
    ys = np.linspace(lo[1], hi[1], grid_n)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.stack([X.ravel(), Y.ravel()], 1)
    Q = np.roll(B, -1, axis=0)
    side = orient2d(B[None, :, :], Q[None, :, :], nodes[:, None, :])     # (N, nb)
    sign = 1.0 if np.sum(B[:, 0] * Q[:, 1] - Q[:, 0] * B[:, 1]) >= 0 else -1.0
    scale = max(float(np.abs(B).max()), 1.0)
    inside = np.all(sign * side >= -1e-12 * scale, axis=1)
    # distance to the boundary polygon, for the boundary flag
    e = Q - B
    t = np.clip(np.einsum("nkd,kd->nk", nodes[:, None, :] - B[None], e) / np.sum(e * e, 1), 0, 1)
    d = np.linalg.norm(nodes[:, None, :] - (B[None] + t[..., None] * e[None]), axis=2).min(axis=1)
    step = max(xs[1] - xs[0], ys[1] - ys[0])
    bflag = inside & (d <= step)

    alpha = np.full(len(nodes), np.inf)
    beta = np.full(len(nodes), -np.inf)
    T = surface.mesh.triangles
    P = img[T]
    for f in range(len(T)):
        tri = P[f]
        tlo, thi = tri[:, :2].min(axis=0), tri[:, :2].max(axis=0)
        j0, j1 = np.searchsorted(xs, [tlo[0] - 1e-12, thi[0] + 1e-12])
        i0, i1 = np.searchsorted(ys, [tlo[1] - 1e-12, thi[1] + 1e-12])
        if j0 >= j1 or i0 >= i1:
            continue
        idx = (np.arange(i0, i1)[:, None] * grid_n + np.arange(j0, j1)[None, :]).ravel()
        a, b, c = tri[0, :2], tri[1, :2], tri[2, :2]
        det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if det == 0:
            continue
        p = nodes[idx]
        l1 = ((p[:, 0] - a[0]) * (c[1] - a[1]) - (p[:, 1] - a[1]) * (c[0] - a[0])) / det
        l2 = ((b[0] - a[0]) * (p[:, 1] - a[1]) - (b[1] - a[1]) * (p[:, 0] - a[0])) / det
        l0 = 1 - l1 - l2
        ok = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2 >= -1e-12)
        z = l0 * tri[0, 2] + l1 * tri[1, 2] + l2 * tri[2, 2]
        np.minimum.at(alpha, idx[ok], z[ok])
        np.maximum.at(beta, idx[ok], z[ok])
    undefined = ~np.isfinite(alpha)
    alpha[undefined] = np.nan
    beta[undefined] = np.nan
    sh = (grid_n, grid_n)
    return Envelopes(xs, ys, alpha.reshape(sh), beta.reshape(sh), inside.reshape(sh),
                     bflag.reshape(sh), tol_env)


# ---------------------------------------------------------------- graph property

@dataclass
class GraphReport:
    boundary_convex: bool
    orientation_consistent: bool
    zero_area: list
    overlap_pairs: list
    alpha_eq_beta: bool
    verdict: str
    boundary: dict = field(default_factory=dict)
    envelopes: Envelopes | None = None

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "boundary_convex": self.boundary_convex,
                "boundary": self.boundary,
                "orientation_consistent": self.orientation_consistent,
                "zero_area_triangles": self.zero_area,
                "overlap_pairs": self.overlap_pairs[:50], "n_overlap_pairs": len(self.overlap_pairs),
                "alpha_eq_beta": self.alpha_eq_beta,
                "envelopes": self.envelopes.to_json() if self.envelopes else None}


def _projected_orientation(surface: PLMap):
    tri = surface.images[surface.mesh.triangles][:, :, :2]
    area = orient2d(tri[:, 0], tri[:, 1], tri[:, 2]) * np.sign(surface.mesh.signed_areas)
    scale = max(float(np.abs(tri).max(initial=0.0)), 1.0) ** 2
    zero = np.abs(area) <= EPS_SNAP * scale
    nz = area[~zero]
    consistent = bool(len(nz) and (np.all(nz > 0) or np.all(nz < 0)))
    return tri, consistent, np.flatnonzero(zero)


def check_graph_property(surface: PLMap, grid_n: int = 128, tol_env: float | None = None
                         ) -> GraphReport:
    _require_space3(surface)
    bnd = boundary_convexity(surface)
    tri, consistent, zero = _projected_orientation(surface)
    pairs = overlapping_pairs(tri)
    env = envelopes(surface, grid_n, tol_env)
    agree = env.agree()
    verdict = "graph" if (len(pairs) == 0 and agree) else "not_graph"
    return GraphReport(bnd["ok"], consistent and len(zero) == 0, zero.tolist(),
                       pairs.tolist(), agree, verdict, bnd, env)


def is_graph_surface(surface: PLMap) -> bool:
    """Sufficient test: convex simple boundary and every projected triangle positively turned.

    A locally injective projection with simple convex boundary image is injective.
    """
    _, consistent, zero = _projected_orientation(surface)
    return consistent and len(zero) == 0 and check_boundary_convex(surface)


# ---------------------------------------------------------------- maximum principle

@dataclass
class MaxPrincipleReport:
    ok: bool
    interior_max: float
    boundary_max: float
    witness: int | None
    tol_env: float

    def __bool__(self):
        return self.ok

    def cutting_plane(self, lam) -> HalfSpace:
        """Halfspace ``z - lambda(x, y) > c`` with ``c`` between the two maxima."""
        a, b, c0 = _affine(lam)
        c = 0.5 * (self.interior_max + self.boundary_max)
        return HalfSpace(np.array([-a, -b, 1.0]), c + c0, ">")

    def to_json(self) -> dict:
        return {"ok": self.ok, "interior_max": self.interior_max,
                "boundary_max": self.boundary_max, "witness": self.witness,
                "tol_env": self.tol_env}


def _affine(lam):
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.shape == (2,):
        lam = np.r_[lam, 0.0]
    if lam.shape != (3,):
        raise ValueError("lambda must be (a, b) or (a, b, c) for a x + b y + c")
    return lam


def check_max_principle(surface: PLMap, lam, subdomain, tol_env: float | None = None
                        ) -> MaxPrincipleReport:
    """Is ``max (z - lambda)`` over the subdomain attained on its rim?"""
    _require_space3(surface)
    if not is_graph_surface(surface):
        raise GraphError("surface is not a graph over its projection")
    mesh = surface.mesh
    cells = np.unique(np.asarray(subdomain, dtype=np.int64))
    if len(cells) == 0:
        raise ValueError("empty subdomain")
    A = mesh.triangle_adjacency[cells][:, cells]
    if connected_components(A, directed=False)[0] != 1:
        raise ValueError("subdomain is not connected")
    a, b, c = _affine(lam)
    tol_env = 1e-7 * z_range(surface) if tol_env is None else tol_env
    verts = np.unique(mesh.triangles[cells])
    rim = mesh.subset_boundary_vertices(cells)
    img = surface.images
    h = img[:, 2] - (a * img[:, 0] + b * img[:, 1] + c)
    inner = np.setdiff1d(verts, rim)
    bmax = float(h[rim].max())
    imax = float(h[inner].max()) if len(inner) else -np.inf
    ok = imax <= bmax + tol_env
    witness = None if ok else int(inner[np.argmax(h[inner])])
    return MaxPrincipleReport(bool(ok), imax, bmax, witness, tol_env)


def max_principle_hat(surface: PLMap, lam, report: MaxPrincipleReport, refinement: int = 0):
    """The hats cut off by the plane between the interior and rim maxima."""
    if report.ok:
        return []
    return find_hats(surface, report.cutting_plane(lam), refinement)
