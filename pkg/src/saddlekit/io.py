"""File formats: mesh+map JSON, OBJ, CSV and SVG, all written atomically."""
from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .mesh import DiscMesh, MeshError, PLMap, boundary_cycle
from .targets import TargetError, TargetSpace

SCHEMA = "saddlekit/1"


class InputError(ValueError):
    """Malformed or inconsistent input file."""


# ---------------------------------------------------------------- atomic writes

def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _clean(obj):
    """Make a value JSON-safe: numpy to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps(doc: dict) -> str:
    doc = dict(doc)
    doc.setdefault("schema", SCHEMA)
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, doc: dict) -> Path:
    return atomic_write(path, dumps(doc))


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


# ---------------------------------------------------------------- mesh + map JSON

def _points_json(space: TargetSpace, images):
    if space.kind == "cone":
        return [{"r": float(r), "theta": float(t)} for r, t in images]
    return np.asarray(images, dtype=float).tolist()


def _points_from_json(space: TargetSpace, raw):
    if space.kind == "cone":
        try:
            return np.array([[float(p["r"]), float(p["theta"])] for p in raw])
        except (TypeError, KeyError, ValueError):
            raise InputError('cone points must be objects {"r": ..., "theta": ...}') from None
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise InputError("points must be numeric arrays") from None
    if arr.ndim != 2 or arr.shape[1] != space.dim:
        raise InputError(f"{space.kind} points need {space.dim} coordinates each")
    return arr


def points_json(space: TargetSpace, images):
    return _points_json(space, images)


def points_from_json(space: TargetSpace, raw):
    return _points_from_json(space, raw)


def map_document(mesh: DiscMesh, plmap: PLMap | None = None, **extra) -> dict:
    doc = {"schema": SCHEMA, "vertices": mesh.vertices.tolist(),
           "triangles": mesh.triangles.tolist(), "boundary": mesh.boundary.tolist()}
    if plmap is not None:
        doc["target"] = plmap.space.to_json()
        doc["images"] = _points_json(plmap.space, plmap.images)
    doc.update(extra)
    return doc


def save_map(path, mesh: DiscMesh, plmap: PLMap | None = None, **extra) -> Path:
    return write_json(path, map_document(mesh, plmap, **extra))


def parse_map(doc: dict):
    """``(mesh, plmap or None)`` from a mesh+map document."""
    if not isinstance(doc, dict):
        raise InputError("document must be a JSON object")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise InputError(f"unsupported schema {schema!r}, expected {SCHEMA!r}")
    for key in ("vertices", "triangles"):
        if key not in doc:
            raise InputError(f"missing field {key!r}")
    try:
        V = np.asarray(doc["vertices"], dtype=float)
        T = np.asarray(doc["triangles"], dtype=np.int64)
    except (TypeError, ValueError):
        raise InputError("vertices/triangles must be numeric arrays") from None
    if V.ndim != 2 or V.shape[1] != 2:
        raise InputError("vertices must be [[x, y], ...]")
    if T.ndim != 2 or T.shape[1] != 3:
        raise InputError("triangles must be [[i, j, k], ...]")
    if len(T) and (T.min() < 0 or T.max() >= len(V)):
        raise InputError("triangle index out of range")
    if "boundary" in doc:
        try:
            B = np.asarray(doc["boundary"], dtype=np.int64)
        except (TypeError, ValueError):
            raise InputError("boundary must be a list of vertex indices") from None
    else:
        try:
            B = np.asarray(boundary_cycle(T), dtype=np.int64)
        except MeshError as exc:
            raise InputError(f"cannot infer boundary: {exc}") from None
    try:
        mesh = DiscMesh(V, T, B)
    except (MeshError, ValueError) as exc:
        raise InputError(f"bad mesh: {exc}") from None
    if "images" not in doc:
        return mesh, None
    try:
        space = TargetSpace.from_json(doc.get("target", {"kind": "plane"}))
    except (TargetError, TypeError, ValueError) as exc:
        raise InputError(f"bad target: {exc}") from None
    images = _points_from_json(space, doc["images"])
    if len(images) != len(V):
        raise InputError(f"{len(images)} images for {len(V)} vertices")
    if not np.all(np.isfinite(images)):
        raise InputError("images must be finite")
    try:
        return mesh, PLMap(mesh, images, space)
    except (MeshError, TargetError, ValueError) as exc:
        raise InputError(f"bad map: {exc}") from None


def load_map(path):
    return parse_map(read_json(path))


# ---------------------------------------------------------------- OBJ

def export_obj(path, plmap: PLMap) -> Path:
    """Surface as OBJ: 3-space images, planar images at z = 0."""
    if plmap.space.kind == "cone":
        raise InputError("OBJ export needs a flat target")
    X = plmap.images
    if X.shape[1] == 2:
        X = np.c_[X, np.zeros(len(X))]
    out = _io.StringIO()
    for p in X:
        out.write("v {:.17g} {:.17g} {:.17g}\n".format(*p))
    for t in plmap.mesh.triangles + 1:
        out.write("f {} {} {}\n".format(*t))
    return atomic_write(path, out.getvalue())


def import_obj(path):
    """Disc surface from OBJ; the domain is a Tutte embedding in the unit disc."""
    from .targets import SPACE3
    from .topology import tutte_embedding
    V, F = [], []
    try:
        with open(path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                if parts[0] == "v":
                    V.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                    idx = [i - 1 if i > 0 else len(V) + i for i in idx]
                    if len(idx) < 3:
                        raise InputError(f"line {ln}: face with fewer than 3 vertices")
                    for k in range(1, len(idx) - 1):
                        F.append([idx[0], idx[k], idx[k + 1]])
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"malformed OBJ: {exc}") from None
    V = np.asarray(V, dtype=float)
    T = np.asarray(F, dtype=np.int64)
    if len(V) == 0 or len(T) == 0 or V.shape[1] != 3:
        raise InputError("OBJ needs 3D vertices and faces")
    if T.min() < 0 or T.max() >= len(V):
        raise InputError("face index out of range")
    try:
        cyc = np.asarray(boundary_cycle(T), dtype=np.int64)
    except MeshError as exc:
        raise InputError(f"surface is not a disc: {exc}") from None
    dom = tutte_embedding(V[:, :2], T, cyc)
    mesh = DiscMesh(dom, T, cyc)
    if np.any(mesh.signed_areas < 0):
        mesh = DiscMesh(dom, T[:, ::-1].copy(), cyc[::-1].copy())
    return mesh, PLMap(mesh, V, SPACE3)


# ---------------------------------------------------------------- CSV

def write_trace_csv(path, trace) -> Path:
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["round", "cut_index", "energy"])
    for r, c, e in trace:
        w.writerow([int(r), int(c), repr(float(e))])
    return atomic_write(path, out.getvalue())


def write_heightfield_csv(path, env) -> Path:
    """Envelope grid in long form: ``x, y, alpha, beta, inside, boundary``."""
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x", "y", "alpha", "beta", "inside", "boundary"])
    for i, y in enumerate(env.ys):
        for j, x in enumerate(env.xs):
            a, b = env.alpha[i, j], env.beta[i, j]
            w.writerow([repr(float(x)), repr(float(y)),
                        "" if np.isnan(a) else repr(float(a)), "" if np.isnan(b) else repr(float(b)),
                        int(env.inside[i, j]), int(env.boundary[i, j])])
    return atomic_write(path, out.getvalue())


# ---------------------------------------------------------------- SVG

_PALETTE = ["#8ecae6", "#ffb703", "#90be6d", "#cdb4db", "#f4a261", "#a8dadc", "#e9c46a"]


class _Svg:
    def __init__(self, pts, size=600, pad=10):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = max(float((hi - lo).max()), 1e-12)
        self.lo, self.s, self.size, self.pad = lo, (size - 2 * pad) / span, size, pad
        self.parts = []

    def xy(self, p):
        x = self.pad + (p[0] - self.lo[0]) * self.s
        y = self.size - self.pad - (p[1] - self.lo[1]) * self.s
        return f"{x:.3f},{y:.3f}"

    def polygon(self, pts, fill="none", stroke="#999", width=0.5):
        pts = " ".join(self.xy(p) for p in pts)
        self.parts.append(f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}" '
                          f'stroke-width="{width}"/>')

    def polyline(self, pts, stroke="#c00", width=2.0):
        pts = " ".join(self.xy(p) for p in pts)
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
                          f'stroke-width="{width}"/>')

    def dot(self, p, r=3.0, fill="#c00"):
        x, y = self.xy(p).split(",")
        self.parts.append(f'<circle cx="{x}" cy="{y}" r="{r}" fill="{fill}"/>')

    def text(self):
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" '
                f'height="{self.size}" viewBox="0 0 {self.size} {self.size}">\n{body}\n</svg>\n')


def svg_cut_decomposition(path, dec) -> Path:
    """Domain coloured by component, hats in red, cut cells in grey."""
    pts = dec.mesh.vertices
    svg = _Svg(pts)
    hats = set(dec.hats)
    for poly, comp in zip(dec.cell_polygons, dec.cell_component):
        if len(poly) < 3:
            continue
        if comp < 0:
            fill = "#dddddd"
        elif comp in hats:
            fill = "#e63946"
        else:
            fill = _PALETTE[comp % len(_PALETTE)]
        svg.polygon(poly, fill=fill, stroke=fill, width=0.3)
    B = pts[dec.mesh.boundary]
    svg.polygon(B, stroke="#000", width=1.0)
    return atomic_write(path, svg.text())


def svg_fiber(path, plmap: PLMap, report) -> Path:
    mesh = plmap.mesh
    svg = _Svg(mesh.vertices)
    for t in mesh.triangles:
        svg.polygon(mesh.vertices[t])
    for k, comp in enumerate(report.components):
        colour = ["#c00", "#06c", "#090", "#c60"][k % 4]
        P = comp.points
        if len(P) == 1:
            svg.dot(P[0], fill=colour)
        elif len(P) == 2:
            svg.polyline(P, stroke=colour)
        else:
            svg.polygon(P, fill=colour, stroke=colour, width=1.0)
    return atomic_write(path, svg.text())


def svg_projection(path, surface: PLMap, overlap_pairs=()) -> Path:
    """Projected mesh with overlapping triangle pairs highlighted."""
    P = surface.images[:, :2]
    svg = _Svg(P)
    T = surface.mesh.triangles
    for t in T:
        svg.polygon(P[t])
    flagged = sorted({int(i) for pair in overlap_pairs for i in pair})
    for i in flagged[:200]:
        svg.polygon(P[T[i]], fill="#e6394655", stroke="#e63946", width=0.8)
    return atomic_write(path, svg.text())
