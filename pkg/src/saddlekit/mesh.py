"""Triangulated discs and piecewise-linear maps on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .targets import PLANE, TargetSpace, geodesic_midpoints

TOL_GEOM = 1e-9


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscMesh:
    """A triangulated topological disc.

    Parameters
    ----------
    vertices : (V, 2) array
        Domain coordinates.
    triangles : (F, 3) int array
        Counterclockwise vertex triples.
    boundary : (B,) int array
        The boundary cycle in cyclic order.
    """
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "boundary", np.asarray(self.boundary, dtype=np.int64).ravel())

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        P = self.vertices[self.triangles]
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def _edge_data(self):
        T = self.triangles
        half = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        key = np.sort(half, axis=1)
        edges, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return edges, inverse.ravel(), counts, half

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        return self._edge_data[0]

    @property
    def tri_edges(self) -> np.ndarray:
        """(F, 3) edge ids; column k is the edge opposite corner ``(k+2) % 3``."""
        F = self.n_triangles
        return self._edge_data[1].reshape(3, F).T

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.n_vertices, dtype=bool)
        m[self.boundary] = True
        return m

    @cached_property
    def boundary_edge_mask(self) -> np.ndarray:
        return self._edge_data[2] == 1

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        E = self.edges
        n = self.n_vertices
        A = sparse.coo_matrix((np.ones(2 * len(E)), (np.r_[E[:, 0], E[:, 1]], np.r_[E[:, 1], E[:, 0]])),
                              shape=(n, n))
        return A.tocsr()

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(V, maxdeg) neighbour indices padded with the vertex itself."""
        A = self.adjacency
        deg = np.diff(A.indptr)
        out = np.repeat(np.arange(self.n_vertices)[:, None], max(int(deg.max(initial=0)), 1), axis=1)
        for v in range(self.n_vertices):
            nb = A.indices[A.indptr[v]:A.indptr[v + 1]]
            out[v, :len(nb)] = nb
        return out

    @cached_property
    def triangle_adjacency(self) -> sparse.csr_matrix:
        """Triangles sharing an edge."""
        F = self.n_triangles
        te = self.tri_edges
        rows = np.repeat(np.arange(F), 3)
        inc = sparse.coo_matrix((np.ones(3 * F), (rows, te.ravel())), shape=(F, len(self.edges))).tocsr()
        A = (inc @ inc.T).tocsr()
        A.setdiag(0)
        A.eliminate_zeros()
        return A

    @cached_property
    def cot_weights(self) -> np.ndarray:
        """Per-edge cotangent weights ``(cot a + cot b) / 2``."""
        P = self.vertices[self.triangles]
        w = np.zeros(len(self.edges))
        te = self.tri_edges
        twice = 2.0 * np.abs(self.signed_areas)
        for k in range(3):
            # corner k is opposite edge (k+1, k+2)
            u = P[:, (k + 1) % 3] - P[:, k]
            v = P[:, (k + 2) % 3] - P[:, k]
            cot = np.sum(u * v, axis=1) / twice
            np.add.at(w, te[:, (k + 1) % 3], 0.5 * cot)
        return w

    def is_delaunay(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.cot_weights >= -tol))

    def subset_boundary_vertices(self, cells) -> np.ndarray:
        """Vertices on the boundary of a union of triangles."""
        cells = np.asarray(cells, dtype=np.int64)
        te = self.tri_edges[cells].ravel()
        ids, counts = np.unique(te, return_counts=True)
        border = ids[counts == 1]
        on_rim = np.unique(self.edges[border].ravel())
        verts = np.unique(self.triangles[cells].ravel())
        return np.union1d(on_rim, np.intersect1d(verts, self.boundary))


@dataclass(frozen=True, eq=False)
class PLMap:
    """Vertex images in a target, interpolated affinely on each triangle."""
    mesh: DiscMesh
    images: np.ndarray
    space: TargetSpace = field(default=PLANE)

    def __post_init__(self):
        imgs = np.asarray(self.images, dtype=float)
        if imgs.ndim != 2 or imgs.shape != (self.mesh.n_vertices, self.space.dim):
            raise MeshError(f"images must have shape ({self.mesh.n_vertices}, {self.space.dim}), "
                            f"got {imgs.shape}")
        object.__setattr__(self, "images", imgs)

    def with_images(self, images) -> "PLMap":
        return PLMap(self.mesh, images, self.space)

    @property
    def boundary_images(self) -> np.ndarray:
        return self.images[self.mesh.boundary]

    def image_diameter(self) -> float:
        lo = self.images.min(axis=0)
        hi = self.images.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def __call__(self, pts, tri=None) -> np.ndarray:
        """Evaluate the map at domain points (flat targets only)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        tri_idx, bary = locate(self.mesh, pts) if tri is None else tri
        if np.any(tri_idx < 0):
            raise MeshError("point outside the domain")
        F = self.images[self.mesh.triangles[tri_idx]]
        return np.einsum("nk,nkd->nd", bary, F)


def barycentric(P: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of ``pts`` (N, 2) in triangles ``P`` (F, 3, 2) -> (N, F, 3)."""
    a, b, c = P[:, 0], P[:, 1], P[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    dx = pts[:, None, 0] - a[None, :, 0]
    dy = pts[:, None, 1] - a[None, :, 1]
    l1 = (dx * (c[:, 1] - a[:, 1]) - dy * (c[:, 0] - a[:, 0])) / det
    l2 = (dy * (b[:, 0] - a[:, 0]) - dx * (b[:, 1] - a[:, 1])) / det
    return np.stack([1 - l1 - l2, l1, l2], axis=-1)


def locate(mesh: DiscMesh, pts, tol: float = 1e-12, chunk: int = 2048):
    """Containing triangle (or -1) and barycentric coordinates for domain points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    P = mesh.vertices[mesh.triangles]
    tri = np.full(len(pts), -1, dtype=np.int64)
    bary = np.zeros((len(pts), 3))
    for s in range(0, len(pts), chunk):
        L = barycentric(P, pts[s:s + chunk])
        score = L.min(axis=2)
        best = np.argmax(score, axis=1)
        ok = score[np.arange(len(best)), best] >= -tol
        tri[s:s + chunk] = np.where(ok, best, -1)
        bary[s:s + chunk] = L[np.arange(len(best)), best]
    return tri, bary


def identity_map(mesh: DiscMesh) -> PLMap:
    return PLMap(mesh, mesh.vertices.copy(), PLANE)


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)

    def add(self, code: str, message: str, indices=()):
        self.violations.append((code, message, [int(i) for i in indices]))
        self.ok = False

    def codes(self) -> list[str]:
        return [c for c, _, _ in self.violations]

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [
            {"code": c, "message": m, "indices": i} for c, m, i in self.violations]}


def validate_disc_mesh(mesh: DiscMesh, tol_geom: float = TOL_GEOM) -> ValidationReport:
    """Check every disc invariant; problems are collected, never raised."""
    rep = ValidationReport(True)
    V, T, B = mesh.vertices, mesh.triangles, mesh.boundary
    n = len(V)
    if len(T) == 0:
        rep.add("empty", "mesh has no triangles")
        return rep
    if T.min() < 0 or T.max() >= n or (len(B) and (B.min() < 0 or B.max() >= n)):
        rep.add("index", "vertex index out of range")
        return rep
    bad = np.flatnonzero((T[:, 0] == T[:, 1]) | (T[:, 1] == T[:, 2]) | (T[:, 0] == T[:, 2]))
    if len(bad):
        rep.add("degenerate triangle", "triangle repeats a vertex", bad)
        return rep

    used = np.zeros(n, dtype=bool)
    used[T.ravel()] = True
    if not used.all():
        rep.add("isolated vertex", "vertices not used by any triangle", np.flatnonzero(~used))

    edges, inv, counts, half = mesh._edge_data
    if np.any(counts > 2):
        rep.add("nonmanifold edge", "edge shared by more than two triangles",
                np.flatnonzero(counts > 2))

    # Combinatorial orientation: an interior edge must be traversed both ways.
    fwd = half[:, 0] < half[:, 1]
    n_fwd = np.bincount(inv, weights=fwd, minlength=len(edges))
    twice = counts == 2
    flipped = np.flatnonzero(twice & (n_fwd != 1))
    areas = mesh.signed_areas
    if len(flipped) or (np.any(areas > tol_geom) and np.any(areas < -tol_geom)):
        rep.add("inconsistent orientation", "adjacent triangles have opposite orientations",
                flipped if len(flipped) else np.flatnonzero(areas < 0))
    elif np.any(areas <= tol_geom):
        rep.add("nonpositive area", "triangles without positive signed area",
                np.flatnonzero(areas <= tol_geom))

    chi = n - len(edges) + len(T)
    if chi != 1:
        rep.add("Euler characteristic", f"V - E + F = {chi}, expected 1")

    bnd_half = half[(counts == 1)[inv]]
    if len(bnd_half) == 0:
        rep.add("boundary", "mesh has no boundary edges")
    else:
        succ = {}
        for a, b in bnd_half:
            if a in succ:
                rep.add("boundary", "boundary is not a simple cycle", [a])
                break
            succ[int(a)] = int(b)
        else:
            start = int(bnd_half[0, 0])
            cycle = [start]
            while True:
                nxt = succ.get(cycle[-1])
                if nxt is None or nxt == start or len(cycle) > len(succ):
                    break
                cycle.append(nxt)
            if len(cycle) != len(succ):
                rep.add("boundary", "boundary edges form more than one cycle")
            elif not _same_cycle(cycle, B.tolist()):
                rep.add("boundary", "given boundary does not match the boundary edge cycle")

    if n > 1:
        pairs = cKDTree(V).query_pairs(tol_geom, output_type="ndarray")
        if len(pairs):
            rep.add("duplicate vertex", "vertices closer than tol_geom", np.unique(pairs))
    return rep


def _same_cycle(a: list, b: list) -> bool:
    if len(a) != len(b) or not a:
        return False
    if b[0] not in a:
        return False
    i = a.index(b[0])
    rot = a[i:] + a[:i]
    if rot == b:
        return True
    rev = [rot[0]] + rot[1:][::-1]
    return rev == b


# ---------------------------------------------------------------- refinement

def _refine(mesh: DiscMesh, plmap: PLMap | None):
    E = mesh.edges
    n = mesh.n_vertices
    te = mesh.tri_edges
    mids = n + np.arange(len(E))
    verts = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[E[:, 0]] + mesh.vertices[E[:, 1]])])
    T = mesh.triangles
    # te[:, 0] is edge (0,1), te[:, 1] is (1,2), te[:, 2] is (2,0)
    m01, m12, m20 = mids[te[:, 0]], mids[te[:, 1]], mids[te[:, 2]]
    tris = np.concatenate([
        np.stack([T[:, 0], m01, m20], 1),
        np.stack([T[:, 1], m12, m01], 1),
        np.stack([T[:, 2], m20, m12], 1),
        np.stack([m01, m12, m20], 1),
    ])
    parent = np.tile(np.arange(mesh.n_triangles), 4)
    B = mesh.boundary
    key = {(int(min(a, b)), int(max(a, b))): i for i, (a, b) in enumerate(E)}
    bnd = []
    for a, b in zip(B, np.roll(B, -1)):
        bnd.append(int(a))
        bnd.append(int(mids[key[(min(a, b), max(a, b))]]))
    fine = DiscMesh(verts, tris, bnd)
    fmap = None
    if plmap is not None:
        mid_img = geodesic_midpoints(plmap.space, plmap.images[E[:, 0]], plmap.images[E[:, 1]])
        fmap = PLMap(fine, np.vstack([plmap.images, mid_img]), plmap.space)
    return fine, fmap, parent


def refine(mesh: DiscMesh, plmap: PLMap | None = None):
    """Split every triangle 1 -> 4 at edge midpoints.

    The refined map agrees with the original everywhere, so energies and
    all verdicts computed downstream are unchanged.
    """
    fine, fmap, _ = _refine(mesh, plmap)
    return fine, fmap


def refine_levels(mesh: DiscMesh, plmap: PLMap | None, level: int):
    """Refine ``level`` times; also return each fine triangle's original parent."""
    if level < 0:
        raise MeshError("refinement level must be >= 0")
    parent = np.arange(mesh.n_triangles)
    for _ in range(level):
        mesh, plmap, p = _refine(mesh, plmap)
        parent = parent[p]
    return mesh, plmap, parent


def boundary_cycle(triangles) -> list[int]:
    """Oriented boundary cycle of an oriented triangle set; raises if it is not one cycle."""
    T = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    half = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    seen = {}
    for a, b in half:
        seen[(int(a), int(b))] = seen.get((int(a), int(b)), 0) + 1
    succ = {}
    for (a, b) in seen:
        if (b, a) not in seen:
            if a in succ:
                raise MeshError("boundary is pinched (vertex visited twice)")
            succ[a] = b
    if not succ:
        raise MeshError("triangle set has no boundary")
    start = min(succ)
    cycle = [start]
    while succ[cycle[-1]] != start:
        cycle.append(succ[cycle[-1]])
        if len(cycle) > len(succ):
            raise MeshError("boundary is not a cycle")
    if len(cycle) != len(succ):
        raise MeshError("boundary has more than one component")
    return cycle


def submesh(mesh: DiscMesh, cells):
    """The sub-disc spanned by ``cells``; returns ``(DiscMesh, original vertex ids)``.

    Raises :class:`MeshError` unless the cells form a triangulated disc.
    """
    cells = np.unique(np.asarray(cells, dtype=np.int64))
    if len(cells) == 0:
        raise MeshError("empty cell set")
    T = mesh.triangles[cells]
    verts, local = np.unique(T, return_inverse=True)
    local = local.reshape(-1, 3)
    cycle = boundary_cycle(local)
    sub = DiscMesh(mesh.vertices[verts], local, cycle)
    rep = validate_disc_mesh(sub)
    if not rep.ok:
        raise MeshError(f"cells do not form a disc: {rep.codes()}")
    return sub, verts
