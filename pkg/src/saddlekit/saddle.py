"""Hats and the saddle property.

A *hat* of a map ``f`` for a cutter (a hyperplane, or a geodesic segment in
a metric target) is a connected component of the complement of the
cutter's preimage that stays away from the domain boundary.  Saddle maps
are the maps without hats.

Halfspace cuts are exact.  For a piecewise-linear map the functional
``u = n . f - c`` is affine on each triangle, and its positive part inside a
triangle is convex and contains a positive vertex.  So the components of
``{u > 0}`` are exactly the components of the subgraph spanned by positive
vertices, and a component reaches the boundary iff it holds a boundary
vertex.  The same holds for ``{u < 0}``.

Geodesic cuts are approximate: triangles are refined and a cell counts as
lying on the segment when its image comes within ``tol_cut`` of it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError

from .mesh import DiscMesh, MeshError, PLMap, TOL_GEOM, refine_levels, submesh
from .targets import ConvexRegion, GeodesicSegment, HalfSpace, convex_hull_2d, geodesic

MAX_WITNESSES = 10


class CutError(ValueError):
    pass


# ---------------------------------------------------------------- data types

@dataclass
class Component:
    side: str                 # "+", "-" for halfspaces, "off" for segments
    vertices: np.ndarray      # mesh vertices inside the component
    cells: np.ndarray         # cells (triangles or refined cells) meeting it
    touches_boundary: bool
    bbox: tuple = ()

    def to_json(self) -> dict:
        return {"side": self.side, "vertices": self.vertices.tolist(), "cells": self.cells.tolist(),
                "touches_boundary": self.touches_boundary,
                "bbox": [list(map(float, b)) for b in self.bbox]}


@dataclass
class CutDecomposition:
    cutter: object
    mesh: DiscMesh            # the mesh the cells live on (refined for segment cuts)
    cell_parent: np.ndarray   # original triangle of each cell
    cell_side: list           # per cell label
    cell_polygons: list       # per cell domain polygon
    cell_component: np.ndarray  # component index per cell, -1 on the cut
    components: list = field(default_factory=list)
    tol_cut: float | None = None
    fine_map: PLMap | None = None

    @property
    def hats(self) -> list[int]:
        return [i for i, c in enumerate(self.components) if not c.touches_boundary]

    def hat_components(self) -> list[Component]:
        return [self.components[i] for i in self.hats]


@dataclass
class SaddleReport:
    family_size: int
    hats_found: list
    verdict: str
    refinement: int
    exact: bool = True
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "exact": self.exact,
            "family_size": self.family_size,
            "refinement": self.refinement,
            "config": self.config,
            "witnesses": [{"cutter": cutter_json(c), "hat": h.to_json()} for c, h in self.hats_found],
        }


def cutter_json(c) -> dict:
    if isinstance(c, HalfSpace):
        return {"halfspace": c.to_json()}
    return {"segment": {"x": c.x.tolist(), "y": c.y.tolist(), "length": c.length,
                        "through_tip": c.through_tip}}


class HalfSpaceFamily:
    """A sequence of halfspace cutters stored as arrays."""

    def __init__(self, normals, offsets):
        self.normals = np.asarray(normals, dtype=float).reshape(len(offsets), -1)
        self.offsets = np.asarray(offsets, dtype=float)

    def __len__(self):
        return len(self.offsets)

    def __getitem__(self, i) -> HalfSpace:
        return HalfSpace(self.normals[i], self.offsets[i], ">")

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_cutters(cls, cutters) -> "HalfSpaceFamily":
        cutters = list(cutters)
        return cls(np.array([c.normal for c in cutters]), np.array([c.offset for c in cutters]))


# ---------------------------------------------------------------- halfspace components

def _vertex_components(mesh: DiscMesh, mask: np.ndarray):
    """Components of the subgraph on ``mask``; returns labels (-1 off mask) and count."""
    labels = np.full(mesh.n_vertices, -1, dtype=np.int64)
    if not mask.any():
        return labels, 0
    E = mesh.edges
    keep = mask[E[:, 0]] & mask[E[:, 1]]
    n = mesh.n_vertices
    G = sparse.coo_matrix((np.ones(keep.sum()), (E[keep, 0], E[keep, 1])), shape=(n, n))
    _, lab = connected_components(G, directed=False)
    _, compact = np.unique(lab[mask], return_inverse=True)
    labels[mask] = compact
    return labels, int(compact.max()) + 1


def _side_hats(mesh: DiscMesh, u: np.ndarray, sign: int) -> list[np.ndarray]:
    """Vertex sets of hat components of ``{sign * u > 0}``."""
    labels, n = _vertex_components(mesh, sign * u > 0)
    if n == 0:
        return []
    has_b = np.zeros(n, dtype=bool)
    b = labels[mesh.boundary]
    has_b[b[b >= 0]] = True
    return [np.flatnonzero(labels == k) for k in np.flatnonzero(~has_b)]


def _clip(poly, vals, sign):
    """Closure of the part of a convex polygon where ``sign * value > 0``."""
    a = sign * np.asarray(vals, dtype=float)
    if not np.any(a > 0):
        return np.zeros((0, 2))
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        if a[i] >= 0:
            out.append(poly[i])
        if a[i] * a[j] < 0:
            t = a[i] / (a[i] - a[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out)


def _halfspace_decomposition(plmap: PLMap, cutter: HalfSpace) -> CutDecomposition:
    mesh = plmap.mesh
    u = cutter.value(plmap.images)
    comps = []
    vlabel = {}
    for side, sign in (("+", 1), ("-", -1)):
        labels, n = _vertex_components(mesh, sign * u > 0)
        vlabel[side] = labels
        for k in range(n):
            verts = np.flatnonzero(labels == k)
            cells = np.flatnonzero(np.isin(mesh.triangles, verts).any(axis=1))
            img = plmap.images[verts]
            comps.append(Component(side, verts, cells, bool(mesh.boundary_mask[verts].any()),
                                   (img.min(axis=0), img.max(axis=0))))
    offset = {"+": 0, "-": sum(1 for c in comps if c.side == "+")}
    parents, sides, polys, cid = [], [], [], []
    for t, tri in enumerate(mesh.triangles):
        P = mesh.vertices[tri]
        vals = u[tri]
        for side, sign in (("+", 1), ("-", -1)):
            piece = _clip(P, vals, sign)
            if len(piece) < 3:
                continue
            seed = tri[np.argmax(sign * vals)]
            parents.append(t)
            sides.append(side)
            polys.append(piece)
            cid.append(offset[side] + vlabel[side][seed])
    return CutDecomposition(cutter, mesh, np.array(parents, dtype=np.int64), sides, polys,
                            np.array(cid, dtype=np.int64), comps)


# ---------------------------------------------------------------- segment components

def _segment_tol(fine: PLMap) -> float:
    from .targets import pairwise_distance
    T = fine.mesh.triangles
    im = fine.images
    d = np.max([pairwise_distance(fine.space, im[T[:, i]], im[T[:, j]])
                for i, j in ((0, 1), (1, 2), (2, 0))], axis=0)
    return 2.0 * float(d.max())


def _segment_decomposition(plmap: PLMap, seg: GeodesicSegment, refinement: int,
                           tol_cut: float | None = None) -> CutDecomposition:
    fine_mesh, fine, parent = refine_levels(plmap.mesh, plmap, refinement)
    if tol_cut is None:
        tol_cut = _segment_tol(fine)
    spacing = tol_cut / 4 if not plmap.space.is_flat else None
    dv = seg.distance_to(fine.images, spacing) if spacing else seg.distance_to(fine.images)
    near = dv[fine_mesh.triangles].min(axis=1) <= tol_cut
    off = np.flatnonzero(~near)
    cell_comp = np.full(fine_mesh.n_triangles, -1, dtype=np.int64)
    comps = []
    if len(off):
        sub = fine_mesh.triangle_adjacency[off][:, off]
        n, lab = connected_components(sub, directed=False)
        cell_comp[off] = lab
        te = fine_mesh.tri_edges
        bcell = fine_mesh.boundary_edge_mask[te].any(axis=1)
        n_orig = plmap.mesh.n_vertices
        for k in range(n):
            cells = off[lab == k]
            cv = np.unique(fine_mesh.triangles[cells])
            img = fine.images[cv]
            comps.append(Component("off", cv[cv < n_orig], cells, bool(bcell[cells].any()),
                                   (img.min(axis=0), img.max(axis=0))))
    sides = ["on" if x else "off" for x in near]
    polys = [fine_mesh.vertices[t] for t in fine_mesh.triangles]
    return CutDecomposition(seg, fine_mesh, parent, sides, polys, cell_comp, comps, tol_cut, fine)


# ---------------------------------------------------------------- public operations

def _check_cutter(plmap: PLMap, cutter):
    if isinstance(cutter, HalfSpace):
        if not plmap.space.is_flat:
            raise CutError("halfspace cutters need a plane or space3 target")
        if len(cutter.normal) != plmap.space.dim:
            raise CutError("halfspace dimension does not match the target")
    elif isinstance(cutter, GeodesicSegment):
        if cutter.space != plmap.space:
            raise CutError("segment lives in a different target space")
    else:
        raise CutError(f"unsupported cutter {type(cutter).__name__}")


def cut_components(plmap: PLMap, cutter, refinement: int = 0, tol_cut: float | None = None
                   ) -> CutDecomposition:
    """Decompose the domain minus the preimage of ``cutter`` into components."""
    if refinement < 0:
        raise CutError("refinement must be >= 0")
    _check_cutter(plmap, cutter)
    if isinstance(cutter, HalfSpace):
        if refinement:
            _, plmap, _ = refine_levels(plmap.mesh, plmap, refinement)
        return _halfspace_decomposition(plmap, cutter)
    return _segment_decomposition(plmap, cutter, refinement, tol_cut)


def find_hats(plmap: PLMap, cutter, refinement: int = 0, tol_cut: float | None = None
              ) -> list[Component]:
    """Components of the cut complement that miss the domain boundary."""
    if refinement < 0:
        raise CutError("refinement must be >= 0")
    _check_cutter(plmap, cutter)
    if isinstance(cutter, HalfSpace):
        work = plmap
        if refinement:
            _, work, _ = refine_levels(plmap.mesh, plmap, refinement)
        mesh = work.mesh
        u = cutter.value(work.images)
        hats = []
        for side, sign in (("+", 1), ("-", -1)):
            for verts in _side_hats(mesh, u, sign):
                cells = np.flatnonzero(np.isin(mesh.triangles, verts).any(axis=1))
                img = work.images[verts]
                hats.append(Component(side, verts, cells, False, (img.min(axis=0), img.max(axis=0))))
        return hats
    return cut_components(plmap, cutter, refinement, tol_cut).hat_components()


def _fibonacci_directions(count: int, dim: int) -> np.ndarray:
    if count <= 0:
        return np.zeros((0, dim))
    axes = np.eye(dim)[::-1]        # z axis first in 3-space
    k = max(count - dim, 0)
    if dim == 3:
        i = np.arange(k) + 0.5
        z = 1 - i / k if k else np.zeros(0)      # upper hemisphere: n and -n cut alike
        phi = np.pi * (3 - np.sqrt(5)) * i
        rr = np.sqrt(np.maximum(0, 1 - z * z))
        extra = np.stack([rr * np.cos(phi), rr * np.sin(phi), z], 1)
    else:
        a = np.pi * (np.arange(k) + 0.5) / max(k, 1)
        extra = np.stack([np.cos(a), np.sin(a)], 1)
    return np.vstack([axes, extra])[:count]


def canonical_cut_family(plmap: PLMap, density: int = 200, eps: float | None = None, seed: int = 0,
                         max_triples: int | None = None):
    """A finite family of cutters standing in for "every hyperplane".

    Sign patterns of a piecewise-linear map only change when the cutting
    hyperplane crosses an image vertex, so hyperplanes spanned by image
    vertices, nudged by ``+-eps``, probe every combinatorial type.

    * plane: every line through two distinct image vertices.
    * space3: ``density`` quasi-random directions (coordinate axes first) at
      every vertex level, then planes through at most ``max_triples`` vertex
      triples in general position (default ``density``; all triples when
      ``density == 0``).
    * cone: geodesics between ``density`` pairs of boundary images.
    """
    if plmap.space.kind == "cone":
        return _metric_family(plmap, density, seed)
    img = np.unique(plmap.images, axis=0)
    if eps is None:
        eps = 1e-6 * max(plmap.image_diameter(), 1e-300)
    normals, levels = [], []
    if plmap.space.kind == "plane":
        i, j = np.triu_indices(len(img), 1)
        d = img[j] - img[i]
        n = np.stack([-d[:, 1], d[:, 0]], 1)
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        normals.append(n)
        levels.append(np.sum(n * img[i], axis=1))
    else:
        dirs = _fibonacci_directions(density, 3)
        if len(dirs):
            vals = img @ dirs.T                          # (V, D)
            normals.append(np.repeat(dirs, len(img), axis=0))
            levels.append(vals.T.ravel())
        cap = max_triples if max_triples is not None else (density if density > 0 else None)
        tri = _triples(img, cap, seed)
        if len(tri):
            a, b, c = img[tri[:, 0]], img[tri[:, 1]], img[tri[:, 2]]
            n = np.cross(b - a, c - a)
            n /= np.linalg.norm(n, axis=1, keepdims=True)
            normals.append(n)
            levels.append(np.sum(n * a, axis=1))
    if not normals:
        return HalfSpaceFamily(np.zeros((0, plmap.space.dim)), np.zeros(0))
    N = np.vstack(normals)
    L = np.concatenate(levels)
    return HalfSpaceFamily(np.repeat(N, 2, axis=0),
                           np.stack([L - eps, L + eps], 1).ravel())


def _triples(img: np.ndarray, cap: int | None, seed: int) -> np.ndarray:
    n = len(img)
    scale = max(float(np.ptp(img, axis=0).max()) if n else 0.0, 1e-300)

    def ok(t):
        a, b, c = img[list(t)]
        return np.linalg.norm(np.cross(b - a, c - a)) > 1e-12 * scale * scale

    total = n * (n - 1) * (n - 2) // 6
    if cap is None or total <= 4 * max(cap, 1):
        good = [t for t in itertools.combinations(range(n), 3) if ok(t)]
        if cap is not None and len(good) > cap:
            pick = np.random.default_rng(seed).choice(len(good), cap, replace=False)
            good = [good[k] for k in np.sort(pick)]
        return np.array(good, dtype=np.int64).reshape(-1, 3)
    rng = np.random.default_rng(seed)
    found = {}
    attempts = 0
    while len(found) < cap and attempts < 50 * cap:
        attempts += 1
        t = tuple(sorted(rng.choice(n, 3, replace=False).tolist()))
        if t not in found and ok(t):
            found[t] = None
    return np.array(list(found), dtype=np.int64).reshape(-1, 3)


def _metric_family(plmap: PLMap, density: int, seed: int) -> list:
    b = np.unique(plmap.boundary_images, axis=0)
    pairs = list(itertools.combinations(range(len(b)), 2))
    if density and len(pairs) > density:
        pick = np.random.default_rng(seed).choice(len(pairs), density, replace=False)
        pairs = [pairs[k] for k in np.sort(pick)]
    return [geodesic(plmap.space, b[i], b[j]) for i, j in pairs]


def _plateaus(plmap: PLMap, tol: float):
    """Classes of vertices joined by edges whose two ends share an image."""
    mesh = plmap.mesh
    E = mesh.edges
    flat = np.linalg.norm(plmap.images[E[:, 0]] - plmap.images[E[:, 1]], axis=1) <= tol
    n = mesh.n_vertices
    G = sparse.coo_matrix((np.ones(flat.sum()), (E[flat, 0], E[flat, 1])), shape=(n, n))
    return connected_components(G, directed=False)


def _screen(plmap: PLMap, tol: float):
    """Plateaus that could be the top (or bottom) of a hat for some cutter.

    A plateau is a (non-strict) local maximum of ``n . f`` iff every star
    direction ``f(w) - f(v)`` satisfies ``n . d <= 0``, which needs the
    directions to miss a neighbourhood of the origin in their convex hull.
    Plateaus touching the boundary never carry hats.  Returns the plateau
    images and their zero-padded star directions.
    """
    mesh = plmap.mesh
    k, lab = _plateaus(plmap, tol)
    has_b = np.zeros(k, dtype=bool)
    has_b[lab[mesh.boundary]] = True
    E = mesh.edges
    cross = lab[E[:, 0]] != lab[E[:, 1]]
    ends = np.concatenate([E[cross], E[cross][:, ::-1]])
    order = np.argsort(lab[ends[:, 0]], kind="stable")
    ends = ends[order]
    starts = np.searchsorted(lab[ends[:, 0]], np.arange(k + 1))
    rep = np.zeros(k, dtype=np.int64)
    rep[lab] = np.arange(mesh.n_vertices)
    imgs, dirs = [], []
    for c in np.flatnonzero(~has_b):
        nb = np.unique(ends[starts[c]:starts[c + 1], 1])
        f = plmap.images[rep[c]]
        D = plmap.images[nb] - f
        D = D[np.linalg.norm(D, axis=1) > tol]
        if len(D) > plmap.space.dim:
            try:
                hull = ConvexHull(D)
                # origin strictly inside: never an extremum, drop it
                if np.all(hull.equations[:, -1] < -tol):
                    continue
            except QhullError:
                pass
        imgs.append(f)
        dirs.append(D)
    if not imgs:
        return np.zeros((0, plmap.space.dim)), np.zeros((0, 1, plmap.space.dim))
    deg = max(max(len(D) for D in dirs), 1)
    P = np.zeros((len(dirs), deg, plmap.space.dim))
    for i, D in enumerate(dirs):
        P[i, :len(D)] = D
    return np.array(imgs), P


def _flag_cutters(family: HalfSpaceFamily, fv: np.ndarray, D: np.ndarray, tol: float,
                  chunk: int = 4096) -> np.ndarray:
    """Indices of cutters that may have a hat on either side (sound over-approximation)."""
    if len(fv) == 0 or len(family) == 0:
        return np.zeros(0, dtype=np.int64)
    normals, inv = np.unique(family.normals, axis=0, return_inverse=True)
    inv = inv.ravel()
    is_max = np.zeros((len(fv), len(normals)), dtype=bool)
    is_min = np.zeros_like(is_max)
    for s in range(0, len(normals), chunk):
        proj = np.einsum("sgd,kd->skg", D, normals[s:s + chunk])   # (S, K, deg)
        is_max[:, s:s + chunk] = proj.max(axis=2) <= tol
        is_min[:, s:s + chunk] = proj.min(axis=2) >= -tol
    flagged = []
    for s in range(0, len(family), chunk):
        sl = slice(s, s + chunk)
        u = fv @ family.normals[sl].T - family.offsets[sl][None, :]
        k = inv[sl]
        hit = np.any(is_max[:, k] & (u > 0), axis=0) | np.any(is_min[:, k] & (u < 0), axis=0)
        flagged.append(s + np.flatnonzero(hit))
    return np.concatenate(flagged)


def is_saddle(plmap: PLMap, family=None, refinement: int = 0, density: int = 200,
              seed: int = 0, eps: float | None = None, max_witnesses: int = MAX_WITNESSES,
              tol_cut: float | None = None, max_triples: int | None = None) -> SaddleReport:
    """Search a cutter family for hats.

    For halfspace families the verdict is exact for the family: ``saddle``
    means no cutter in it produces a hat.  For metric targets the cut is
    approximate; see :func:`cut_components`.
    """
    config = {"density": density, "seed": seed, "refinement": refinement,
              "eps_family": eps, "max_witnesses": max_witnesses, "max_triples": max_triples}
    if family is None:
        family = canonical_cut_family(plmap, density, eps, seed, max_triples)
    if not isinstance(family, HalfSpaceFamily):
        family = list(family)
        if family and all(isinstance(c, HalfSpace) for c in family):
            family = HalfSpaceFamily.from_cutters(family)
    if isinstance(family, HalfSpaceFamily):
        if not plmap.space.is_flat:
            raise CutError("halfspace family on a metric target")
        work = plmap
        if refinement:
            _, work, _ = refine_levels(plmap.mesh, plmap, refinement)
        scale = max(work.image_diameter(), 1.0)
        tol = 1e-12 * scale
        fv, D = _screen(work, tol)
        hats = []
        flagged = _flag_cutters(family, fv, D, tol)
        if len(flagged):
            key = np.column_stack([family.normals[flagged], family.offsets[flagged]])
            _, first = np.unique(np.round(key, 12), axis=0, return_index=True)
            flagged = flagged[np.sort(first)]
        for k in flagged:
            cutter = family[k]
            for h in find_hats(work, cutter):
                hats.append((cutter, h))
            if len(hats) >= max_witnesses:
                break
        hats = hats[:max_witnesses]
        return SaddleReport(len(family), hats, "not_saddle" if hats else "saddle",
                            refinement, True, config)

    hats = []
    inconclusive = False
    for seg in family:
        dec = _segment_decomposition(plmap, seg, refinement, tol_cut)
        for h in dec.hat_components():
            if _confirm_segment_hat(plmap, seg, h) is None:
                inconclusive = True
                continue
            hats.append((seg, h))
        if len(hats) >= max_witnesses:
            break
    hats = hats[:max_witnesses]
    config["tol_cut"] = tol_cut
    verdict = "not_saddle" if hats else ("inconclusive" if inconclusive else "saddle")
    return SaddleReport(len(family), hats, verdict, refinement, False, config)


def segment_hat_vertices(plmap: PLMap, seg: GeodesicSegment, hat: Component,
                         tol: float = TOL_GEOM) -> np.ndarray:
    """Mesh vertices of a segment hat: the off-segment vertices connected to it.

    Starting from the hat's vertices, grow through mesh edges until every
    neighbour outside the set has its image on the segment.  Raises
    :class:`CutError` if the region reaches the domain boundary.
    """
    found = _confirm_segment_hat(plmap, seg, hat, tol)
    if found is None:
        raise CutError("component reaches the domain boundary: not a hat")
    return found


def _confirm_segment_hat(plmap, seg, hat, tol=TOL_GEOM):
    mesh = plmap.mesh
    d = seg.distance_to(plmap.images)
    off = d > tol
    seeds = hat.vertices[off[hat.vertices]] if len(hat.vertices) else hat.vertices
    if len(seeds) == 0:
        return None
    labels, _ = _vertex_components(mesh, off)
    keep = np.isin(labels, np.unique(labels[seeds]))
    if mesh.boundary_mask[keep].any():
        return None
    return np.flatnonzero(keep)


# ---------------------------------------------------------------- claim checks

@dataclass
class ClaimReport:
    holds: bool
    witnesses: list = field(default_factory=list)   # vertex sets of boundary-free components

    def __bool__(self):
        return self.holds


def check_claim_i(plmap: PLMap, K: ConvexRegion, refinement: int = 0) -> ClaimReport:
    """Every component of the complement of ``f^{-1} K`` meets the domain boundary.

    Exact for planar piecewise-linear maps and polygonal ``K``: the
    complement is the union of the open sets ``{h_i(f) > 0}`` over the
    constraints ``h_i`` of ``K``; each is handled as a halfspace cut and the
    pieces are merged wherever two of them overlap inside a triangle.
    """
    if not K.closed:
        raise CutError("claim (i) is about closed convex sets")
    if plmap.space.kind != "plane":
        raise CutError("claim (i) check needs a plane target")
    work = plmap
    if refinement:
        _, work, _ = refine_levels(plmap.mesh, plmap, refinement)
    mesh = work.mesh
    H = work.images @ K.A.T - K.b[None, :]                  # (V, m)
    pos = H > 0
    outside = pos.any(axis=1)
    parent = np.arange(mesh.n_vertices)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    E = mesh.edges
    share = (pos[E[:, 0]] & pos[E[:, 1]]).any(axis=1)
    for a, b in E[share]:
        union(a, b)
    for tri in mesh.triangles:
        Ht = H[tri]                                          # (3, m)
        active = np.flatnonzero(pos[tri].any(axis=0))
        if len(active) < 2:
            continue
        for i, j in itertools.combinations(active, 2):
            vi = np.flatnonzero(pos[tri, i])
            vj = np.flatnonzero(pos[tri, j])
            if np.intersect1d(vi, vj).size:
                union(tri[vi[0]], tri[vj[0]])
                continue
            if _overlap_in_triangle(Ht[:, i], Ht[:, j]):
                union(tri[vi[0]], tri[vj[0]])
    roots = np.array([find(v) for v in range(mesh.n_vertices)])
    witnesses = []
    for r in np.unique(roots[outside]):
        members = np.flatnonzero(outside & (roots == r))
        if not mesh.boundary_mask[members].any():
            witnesses.append(members)
    return ClaimReport(not witnesses, witnesses)


def _overlap_in_triangle(hi, hj) -> bool:
    """Whether ``min(h_i, h_j) > 0`` somewhere on a triangle (values at its corners)."""
    best = np.minimum(hi, hj).max()
    for a, b in ((0, 1), (1, 2), (2, 0)):
        da, db = hi[a] - hj[a], hi[b] - hj[b]
        if da * db < 0:
            t = da / (da - db)
            best = max(best, min(hi[a] + t * (hi[b] - hi[a]), hj[a] + t * (hj[b] - hj[a])))
    return best > 0


def hull_violation(boundary_pts: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Signed distance-type violation of ``pts`` w.r.t. the hull of ``boundary_pts``.

    Works in the affine span of the boundary points, so flat or collinear
    boundaries are handled; the distance off that span is added in.
    """
    B = np.asarray(boundary_pts, dtype=float)
    X = np.asarray(pts, dtype=float)
    c = B.mean(axis=0)
    _, s, Vt = np.linalg.svd(B - c, full_matrices=False)
    scale = max(float(s.max()) if len(s) else 0.0, 1.0)
    r = int(np.sum(s > 1e-10 * scale))
    basis = Vt[:r]
    Xc = X - c
    coords = Xc @ basis.T
    off_span = np.linalg.norm(Xc - coords @ basis, axis=1)
    Bc = (B - c) @ basis.T
    if r == 0:
        inside = np.zeros(len(X))
    elif r == 1:
        lo, hi = Bc[:, 0].min(), Bc[:, 0].max()
        inside = np.maximum(coords[:, 0] - hi, lo - coords[:, 0])
    elif r == 2:
        inside = convex_hull_2d(Bc).violation(coords)
    else:
        eq = ConvexHull(Bc).equations
        inside = np.max(coords @ eq[:, :-1].T + eq[:, -1][None, :], axis=1)
    return np.maximum(inside, off_span)


def check_convex_hull_property(plmap: PLMap, subdisc, tol_hull: float | None = None):
    """Whether the subdisc's image lies in the hull of its boundary-cycle image.

    Returns ``(ok, max_violation)``.
    """
    if not plmap.space.is_flat:
        raise CutError("hull property needs a plane or space3 target")
    try:
        sub, verts = submesh(plmap.mesh, subdisc)
    except MeshError as exc:
        raise CutError(f"subdisc is not a disc: {exc}") from None
    if tol_hull is None:
        tol_hull = 1e-9 * max(plmap.image_diameter(), 1.0)
    img = plmap.images[verts]
    viol = float(hull_violation(img[sub.boundary], img).max())
    return viol <= tol_hull, viol


def disc_cells(mesh: DiscMesh, center, radius: float) -> np.ndarray:
    """Cells with centroid inside a domain disc, cut down to a sub-disc (or empty)."""
    cen = mesh.vertices[mesh.triangles].mean(axis=1)
    cells = np.flatnonzero(np.linalg.norm(cen - np.asarray(center), axis=1) < radius)
    if len(cells) == 0:
        return cells
    sub = mesh.triangle_adjacency[cells][:, cells]
    n, lab = connected_components(sub, directed=False)
    cells = cells[lab == np.argmax(np.bincount(lab))]
    try:
        submesh(mesh, cells)
    except MeshError:
        return np.zeros(0, dtype=np.int64)
    return cells
