"""Fibers of piecewise-linear maps: monotone, light, degree, factorization."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist
from scipy import sparse

from .mesh import DiscMesh, MeshError, PLMap, boundary_cycle, validate_disc_mesh
from .targets import angle_gap, point_segment_distance

TOL_FIBER = 1e-6


@dataclass
class FiberPiece:
    points: np.ndarray          # (k, 2) domain points spanning the piece
    triangles: np.ndarray
    diameter: float
    touches_boundary: bool

    @property
    def kind(self) -> str:
        if self.diameter == 0.0 or len(self.points) == 1:
            return "point"
        return "set"

    def to_json(self) -> dict:
        return {"triangles": self.triangles.tolist(), "diameter": self.diameter,
                "touches_boundary": self.touches_boundary,
                "hull": self.points.tolist()}


@dataclass
class FiberReport:
    point: np.ndarray
    components: list
    connected: bool

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def max_diameter(self) -> float:
        return max((c.diameter for c in self.components), default=0.0)

    def to_json(self) -> dict:
        return {"point": np.asarray(self.point).tolist(), "connected": self.connected,
                "n_components": self.n_components,
                "components": [c.to_json() for c in self.components]}


# ---------------------------------------------------------------- per-triangle affine data

class _Affine:
    """Affine data of every triangle: ``f(x) = f0 + J (x - p0)`` in a flat chart."""

    def __init__(self, plmap: PLMap):
        mesh = plmap.mesh
        self.plmap = plmap
        T = mesh.triangles
        P = mesh.vertices[T]
        self.P = P
        self.p0 = P[:, 0]
        if plmap.space.kind == "cone":
            F, self.base = _cone_triangle_charts(plmap)
        else:
            F = plmap.images[T]
            self.base = None
        self.F = F
        dom = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)
        img = np.stack([F[:, 1] - F[:, 0], F[:, 2] - F[:, 0]], axis=2)
        self.dom_inv = np.linalg.inv(dom)
        self.J = img @ self.dom_inv
        U, s, Vt = np.linalg.svd(self.J)
        scale = max(float(np.abs(self.J).max(initial=0.0)), 1.0)
        big = s > 1e-10 * scale
        self.rank = big.sum(axis=1)
        sinv = np.where(big, 1.0 / np.where(big, s, 1.0), 0.0)
        k = s.shape[1]
        self.pinv = np.einsum("fji,fj,fkj->fik", Vt[:, :k, :], sinv, U[:, :, :k])
        self.null = Vt[:, -1, :]                       # null direction when rank == 1
        diam = max(plmap.image_diameter(), 1.0)
        self.tol_img = 1e-9 * diam
        bmask = mesh.boundary_edge_mask[mesh.tri_edges]  # (F, 3) edge (k, k+1) on boundary
        self.bedge = bmask

    def chart_point(self, y) -> np.ndarray:
        """The target point in every triangle's chart, shape (F, d)."""
        if self.base is None:
            return np.broadcast_to(np.asarray(y, float), (len(self.F), len(y)))
        space = self.plmap.space
        if y[0] <= 0:
            return np.zeros((len(self.F), 2))
        d = angle_gap(space, self.base, y[1])
        return np.stack([y[0] * np.cos(d), y[0] * np.sin(d)], 1)

    def pieces(self, y):
        """Per-triangle preimage of ``y``: list of ``(triangle, points)``."""
        Y = self.chart_point(y)
        rhs = Y - self.F[:, 0]
        xs = np.einsum("fij,fj->fi", self.pinv, rhs)     # x* - p0
        res = np.linalg.norm(np.einsum("fij,fj->fi", self.J, xs) - rhs, axis=1)
        hit = np.flatnonzero(res <= self.tol_img)
        eps = 1e-12
        out = []
        r = self.rank[hit]
        for t in hit[r == 0]:
            out.append((int(t), self.P[t].copy()))
        # barycentric coordinates are affine in the domain point
        h2 = hit[r == 2]
        if len(h2):
            b = self._bary(h2, xs[h2])
            for t in h2[b.min(axis=1) >= -eps]:
                out.append((int(t), (self.p0[t] + xs[t])[None, :]))
        h1 = hit[r == 1]
        if len(h1):
            b = self._bary(h1, xs[h1])
            db = self._bary(h1, self.null[h1]) - self._bary(h1, np.zeros_like(xs[h1]))
            flat = np.abs(db) < 1e-15
            with np.errstate(divide="ignore", invalid="ignore"):
                ti = (-eps - b) / db
            lo = np.where(~flat & (db > 0), ti, -np.inf).max(axis=1)
            hi = np.where(~flat & (db < 0), ti, np.inf).min(axis=1)
            ok = ~np.any(flat & (b < -eps), axis=1) & (lo <= hi)
            for i in np.flatnonzero(ok):
                t = h1[i]
                x0 = self.p0[t] + xs[t]
                pts = np.array([x0 + lo[i] * self.null[t], x0 + hi[i] * self.null[t]])
                if np.linalg.norm(pts[0] - pts[1]) <= 1e-15:
                    pts = pts[:1]
                out.append((int(t), pts))
        return out

    def _bary(self, ts, d):
        l12 = np.einsum("fij,fj->fi", self.dom_inv[ts], d)
        return np.stack([1 - l12.sum(axis=1), l12[:, 0], l12[:, 1]], axis=1)


def _cone_triangle_charts(plmap: PLMap):
    space = plmap.space
    img = plmap.images[plmap.mesh.triangles]          # (F, 3, 2)
    r = img[..., 0]
    first = np.argmax(r > 0, axis=1)
    base = img[np.arange(len(img)), first, 1]
    base = np.where(r.max(axis=1) > 0, base, 0.0)
    d = angle_gap(space, base[:, None], img[..., 1])
    return np.stack([r * np.cos(d), r * np.sin(d)], axis=-1), base


# ---------------------------------------------------------------- fibers

def _poly_distance(A, B) -> float:
    """Distance between two convex sets given by at most three spanning points."""
    best = np.inf
    for X, Y in ((A, B), (B, A)):
        if len(Y) == 1:
            best = min(best, float(np.min(np.linalg.norm(X - Y[0], axis=1))))
            continue
        for i in range(len(Y)):
            a, b = Y[i], Y[(i + 1) % len(Y)]
            best = min(best, float(point_segment_distance(X, a, b).min()))
        if len(Y) == 3 and _inside_triangle(X, Y).any():
            return 0.0
    return best


def _inside_triangle(X, T):
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[:, 1] - o[1]) - (a[1] - o[1]) * (b[:, 0] - o[0])
    c = [cross(T[i], T[(i + 1) % 3], X) for i in range(3)]
    return (np.all([ci >= 0 for ci in c], axis=0) | np.all([ci <= 0 for ci in c], axis=0))


def _in_bbox(plmap, y) -> bool:
    if plmap.space.kind == "cone":
        return float(y[0]) <= float(plmap.images[:, 0].max()) + 1e-12
    lo = plmap.images.min(axis=0) - 1e-12
    hi = plmap.images.max(axis=0) + 1e-12
    return bool(np.all(y >= lo) and np.all(y <= hi))


def _touching_pairs(raw, tol):
    owner = np.concatenate([np.full(len(p), i) for i, (_, p) in enumerate(raw)])
    pts = np.vstack([p for _, p in raw])
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    rows = list(owner[pairs[:, 0]]) if len(pairs) else []
    cols = list(owner[pairs[:, 1]]) if len(pairs) else []
    # a piece can also touch another along an edge without sharing a spanning point
    ext = [i for i, (_, p) in enumerate(raw) if len(p) > 1]
    if ext:
        lo = np.array([p.min(axis=0) for _, p in raw]) - tol
        hi = np.array([p.max(axis=0) for _, p in raw]) + tol
        for i in ext:
            cand = np.flatnonzero(np.all(lo <= hi[i], axis=1) & np.all(hi >= lo[i], axis=1))
            for j in cand:
                if j != i and _poly_distance(raw[i][1], raw[j][1]) <= tol:
                    rows.append(i)
                    cols.append(j)
    return rows, cols


def fiber_components(plmap: PLMap, y, tol_fiber: float = TOL_FIBER, _aff: _Affine | None = None
                     ) -> FiberReport:
    y = np.asarray(y, dtype=float)
    if y.shape != (plmap.space.dim,):
        raise ValueError(f"point must have {plmap.space.dim} coordinates")
    if not _in_bbox(plmap, y):
        return FiberReport(y, [], False)
    aff = _aff or _Affine(plmap)
    raw = aff.pieces(y)
    if not raw:
        return FiberReport(y, [], False)
    n = len(raw)
    rows, cols = _touching_pairs(raw, tol_fiber)
    if rows:
        G = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        nc, lab = connected_components(G, directed=False)
    else:
        nc, lab = n, np.arange(n)
    mesh = plmap.mesh
    comps = []
    for c in range(nc):
        idx = np.flatnonzero(lab == c)
        pts = np.vstack([raw[i][1] for i in idx])
        tris = np.array(sorted({int(raw[i][0]) for i in idx}))
        diam = float(pdist(pts).max()) if len(pts) > 1 else 0.0
        comps.append(FiberPiece(_extreme_points(pts), tris, diam,
                                _touches(mesh, aff, [raw[i] for i in idx])))
    comps.sort(key=lambda c: (c.triangles[0], c.diameter))
    return FiberReport(y, comps, len(comps) == 1)


def _extreme_points(pts):
    if len(pts) == 1:
        return pts
    pts = np.unique(np.round(pts, 15), axis=0)
    if len(pts) <= 3:
        return pts
    from .targets import convex_hull_2d
    hull = convex_hull_2d(pts)
    return np.asarray(hull.vertices) if hull.vertices is not None else pts


def _touches(mesh, aff, raw) -> bool:
    for t, pts in raw:
        for k in range(3):
            if aff.bedge[t, k]:
                a, b = aff.P[t, k], aff.P[t, (k + 1) % 3]
                if point_segment_distance(pts, a, b).min() <= 1e-12:
                    return True
    return False


# ---------------------------------------------------------------- sampled verdicts

def sample_points(plmap: PLMap, grid_n: int = 32) -> np.ndarray:
    """Vertex images, triangle-barycentre images and a grid over the image box."""
    img = plmap.images
    bary = img[plmap.mesh.triangles].mean(axis=1) if plmap.space.is_flat else np.empty((0, img.shape[1]))
    if plmap.space.kind == "cone":
        cent = _cone_barycentres(plmap)
        return np.unique(np.round(np.vstack([img, cent]), 12), axis=0)
    lo, hi = img.min(axis=0), img.max(axis=0)
    axes = [np.linspace(a, b, grid_n) if b > a else np.array([a]) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, img.shape[1])
    return np.unique(np.vstack([img, bary, grid]), axis=0)


def _cone_barycentres(plmap):
    from .targets import from_chart
    F, base = _cone_triangle_charts(plmap)
    c = F.mean(axis=1)
    return from_chart(plmap.space, base, c)


@dataclass
class FiberSurvey:
    verdict: bool
    samples: int
    nonempty: int
    witnesses: list = field(default_factory=list)
    max_components: int = 0
    max_diameter: float = 0.0

    def __bool__(self):
        return self.verdict

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "samples": self.samples, "nonempty": self.nonempty,
                "max_components": self.max_components, "max_diameter": self.max_diameter,
                "witnesses": [{"point": np.asarray(w.point).tolist(),
                               "n_components": w.n_components,
                               "max_diameter": w.max_diameter} for w in self.witnesses]}


def _survey(plmap, grid_n, tol_fiber, bad, max_witnesses, points=None):
    aff = _Affine(plmap)
    pts = sample_points(plmap, grid_n) if points is None else np.asarray(points, float)
    wit = []
    nonempty = 0
    mc, md = 0, 0.0
    for y in pts:
        rep = fiber_components(plmap, y, tol_fiber, aff)
        if not rep.components:
            continue
        nonempty += 1
        mc = max(mc, rep.n_components)
        md = max(md, rep.max_diameter)
        if bad(rep) and len(wit) < max_witnesses:
            wit.append(rep)
    return FiberSurvey(not wit, len(pts), nonempty, wit, mc, md)


def is_monotone(plmap: PLMap, grid_n: int = 32, tol_fiber: float = TOL_FIBER,
                max_witnesses: int = 10, points=None) -> FiberSurvey:
    """Every nonempty sampled fiber must be connected."""
    return _survey(plmap, grid_n, tol_fiber, lambda r: r.n_components > 1, max_witnesses, points)


def is_light(plmap: PLMap, grid_n: int = 32, tol_fiber: float = TOL_FIBER,
             max_witnesses: int = 10, points=None) -> FiberSurvey:
    """Every sampled fiber piece must have diameter at most ``tol_fiber``."""
    return _survey(plmap, grid_n, tol_fiber, lambda r: r.max_diameter > tol_fiber,
                   max_witnesses, points)


# ---------------------------------------------------------------- degree

def boundary_degree(plmap: PLMap, base=None) -> int:
    """Winding number of the boundary image cycle around ``base``.

    Plane targets sum the turning angles seen from ``base``; cone targets wind
    around the tip, so ``base`` must be the tip there.
    """
    B = plmap.boundary_images
    space = plmap.space
    if space.kind == "cone":
        if base is not None and float(np.asarray(base)[0]) != 0.0:
            raise ValueError("cone degree is taken around the tip")
        if B[:, 0].min() <= 1e-9:
            raise ValueError("boundary image passes through the tip")
        gaps = angle_gap(space, B[:, 1], np.roll(B[:, 1], -1))
        if np.any(np.abs(gaps) >= np.pi):
            raise ValueError("boundary edge passes through the tip")
        return int(round(gaps.sum() / space.cone_angle))
    if space.kind != "plane":
        raise ValueError("degree needs a plane or cone target")
    base = np.zeros(2) if base is None else np.asarray(base, dtype=float)
    A = B - base
    Bn = np.roll(A, -1, axis=0)
    if point_segment_distance(base[None, :], B, np.roll(B, -1, axis=0)).min() <= 1e-9:
        raise ValueError("base point lies on the boundary image curve")
    ang = np.arctan2(A[:, 0] * Bn[:, 1] - A[:, 1] * Bn[:, 0], np.sum(A * Bn, axis=1))
    return int(round(ang.sum() / (2 * np.pi)))


def signed_preimage_count(plmap: PLMap, y) -> int:
    """Sum of orientation signs over the nondegenerate triangles hit by ``y``.

    Only meaningful for generic ``y`` (not on an image of an edge).
    """
    aff = _Affine(plmap)
    det = np.linalg.det(aff.J) * np.sign(plmap.mesh.signed_areas)
    total = 0
    for t, pts in aff.pieces(np.asarray(y, float)):
        if aff.rank[t] == 2:
            total += int(np.sign(det[t]))
    return total


# ---------------------------------------------------------------- factorization

@dataclass
class FactorizationResult:
    quotient: DiscMesh | None
    collapse: np.ndarray           # original vertex -> quotient vertex
    h_light: PLMap | None
    exact: bool
    classes: list
    residual: FiberSurvey | None = None
    issues: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"exact": self.exact, "collapse": self.collapse.tolist(),
                "classes": [c.tolist() for c in self.classes if len(c) > 1],
                "n_quotient_vertices": int(self.collapse.max() + 1),
                "quotient_valid": self.quotient is not None, "issues": self.issues,
                "residual": self.residual.to_json() if self.residual else None}


def constant_classes(plmap: PLMap, tol: float = 0.0):
    """Label vertices joined by edges whose endpoint images coincide (within ``tol``)."""
    from .targets import pairwise_distance
    mesh = plmap.mesh
    E = mesh.edges
    d = pairwise_distance(plmap.space, plmap.images[E[:, 0]], plmap.images[E[:, 1]])
    keep = d <= tol
    n = mesh.n_vertices
    G = sparse.coo_matrix((np.ones(keep.sum()), (E[keep, 0], E[keep, 1])), shape=(n, n))
    _, lab = connected_components(G, directed=False)
    # relabel in order of first appearance so the identity stays the identity
    _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inv]


def monotone_light_factorize(plmap: PLMap, tol: float = 0.0, grid_n: int = 24,
                             tol_fiber: float = TOL_FIBER) -> FactorizationResult:
    """Collapse the f-constant subcomplexes; the induced map is then checked for lightness."""
    mesh = plmap.mesh
    lab = constant_classes(plmap, tol)
    nq = int(lab.max()) + 1
    classes = [np.flatnonzero(lab == c) for c in range(nq)]
    issues = []
    T = lab[mesh.triangles]
    keep = (T[:, 0] != T[:, 1]) & (T[:, 1] != T[:, 2]) & (T[:, 0] != T[:, 2])
    T = T[keep]
    key = np.sort(T, axis=1)
    _, uniq = np.unique(key, axis=0, return_index=True)
    if len(uniq) != len(T):
        issues.append("collapsed triangles coincide")
    T = T[np.sort(uniq)]
    images = np.array([plmap.images[c[0]] for c in classes])
    quotient = None
    if len(T):
        try:
            cyc = np.array(boundary_cycle(T))
        except (MeshError, ValueError) as exc:
            cyc = None
            issues.append(f"quotient boundary: {exc}")
        if cyc is not None:
            coords = np.array([mesh.vertices[c].mean(axis=0) for c in classes])
            quotient = _embed(coords, T, cyc)
            if quotient is None:
                issues.append("quotient is not a disc")
    else:
        issues.append("map is constant: quotient is a point")
    h = PLMap(quotient, images, plmap.space) if quotient is not None else None
    residual = None
    exact = False
    if h is not None:
        residual = is_light(h, grid_n, tol_fiber)
        exact = residual.verdict and not issues
    return FactorizationResult(quotient, lab, h, exact, classes, residual, issues)


def _embed(coords, T, cyc):
    """Disc embedding of the quotient: class centroids, else a Tutte embedding."""
    used = np.unique(T)
    remap = -np.ones(len(coords), dtype=np.int64)
    remap[used] = np.arange(len(used))
    if len(used) != len(coords):
        return None
    for X in (coords, tutte_embedding(coords, T, cyc)):
        m = DiscMesh(X, T, cyc)
        rep = validate_disc_mesh(m)
        if rep.ok:
            return m
        if "nonpositive area" in rep.codes() or "inconsistent orientation" in rep.codes():
            m = DiscMesh(X, T[:, ::-1].copy(), cyc[::-1].copy())
            if validate_disc_mesh(m).ok:
                return m
    return None


def tutte_embedding(coords, T, cyc):
    n = len(coords)
    X = np.zeros((n, 2))
    # boundary on the unit circle, spaced by original arc length
    pb = coords[cyc]
    seg = np.linalg.norm(np.roll(pb, -1, axis=0) - pb, axis=1)
    s = np.r_[0.0, np.cumsum(seg)[:-1]] / max(seg.sum(), 1e-300)
    sign = 1.0
    area = 0.5 * np.sum(pb[:, 0] * np.roll(pb[:, 1], -1) - np.roll(pb[:, 0], -1) * pb[:, 1])
    if area < 0:
        sign = -1.0
    X[cyc] = np.stack([np.cos(2 * np.pi * s), sign * np.sin(2 * np.pi * s)], 1)
    E = np.vstack([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    E = np.unique(np.sort(E, axis=1), axis=0)
    A = sparse.coo_matrix((np.ones(len(E)), (E[:, 0], E[:, 1])), shape=(n, n))
    A = (A + A.T).tocsr()
    A.data[:] = 1.0
    L = sparse.diags(np.asarray(A.sum(axis=1)).ravel()) - A
    inner = np.setdiff1d(np.arange(n), cyc)
    if len(inner):
        from scipy.sparse.linalg import spsolve
        rhs = -(L[inner][:, cyc] @ X[cyc])
        X[inner] = np.asarray(spsolve(L[inner][:, inner].tocsc(), rhs)).reshape(-1, 2)
    return X
