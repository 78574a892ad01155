"""Target spaces: the flat plane, Euclidean 3-space and a flat disc with one cone point.

Points are plain numpy arrays.  Plane points are ``(x, y)``, space points
``(x, y, z)``.  Cone points are stored in polar form ``(r, theta)`` with the
tip at ``r = 0`` and ``theta`` taken modulo the total angle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class TargetError(ValueError):
    """Raised for points or parameters that do not belong to a target."""


@dataclass(frozen=True)
class TargetSpace:
    kind: str = "plane"
    cone_angle: float = TWO_PI
    cone_radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("plane", "space3", "cone"):
            raise TargetError(f"unknown target kind {self.kind!r}")
        if self.kind == "cone":
            if self.cone_angle < TWO_PI - 1e-12:
                raise TargetError("cone_angle must be >= 2*pi (nonpositive curvature)")
            if not self.cone_radius > 0:
                raise TargetError("cone_radius must be positive")

    @property
    def dim(self) -> int:
        return 3 if self.kind == "space3" else 2

    @property
    def is_flat(self) -> bool:
        return self.kind in ("plane", "space3")

    def check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            raise TargetError(f"point {p!r} is not a {self.kind} point")
        if self.kind == "cone":
            r, th = p
            if r < -1e-12 or r > self.cone_radius * (1 + 1e-9):
                raise TargetError(f"radius {r} outside cone of radius {self.cone_radius}")
            p = np.array([max(r, 0.0), th % self.cone_angle])
        return p

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "cone":
            out["cone_angle"] = self.cone_angle
            out["cone_radius"] = self.cone_radius
        return out

    @classmethod
    def from_json(cls, d: dict) -> "TargetSpace":
        return cls(d.get("kind", "plane"), float(d.get("cone_angle", TWO_PI)),
                   float(d.get("cone_radius", 1.0)))


PLANE = TargetSpace("plane")
SPACE3 = TargetSpace("space3")


def cone(angle: float, radius: float = 1.0) -> TargetSpace:
    return TargetSpace("cone", float(angle), float(radius))


# ---------------------------------------------------------------- cone helpers

def angle_gap(space: TargetSpace, th1, th2):
    """Signed angular offset from ``th1`` to ``th2`` in ``(-w/2, w/2]``."""
    w = space.cone_angle
    d = np.mod(np.asarray(th2) - np.asarray(th1), w)
    return np.where(d > w / 2, d - w, d)


def cone_distance(space: TargetSpace, p, q):
    """Vectorised cone distance between arrays of polar points (..., 2)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    rp, rq = p[..., 0], q[..., 0]
    delta = np.abs(angle_gap(space, p[..., 1], q[..., 1]))
    chord = np.sqrt(np.maximum(rp * rp + rq * rq - 2 * rp * rq * np.cos(np.minimum(delta, np.pi)), 0.0))
    return np.where(delta >= np.pi, rp + rq, chord)


def cone_chart(space: TargetSpace, base, pts):
    """Develop polar points into a flat chart with ``base`` on the positive x axis.

    Angles are measured as signed offsets from ``base`` so the chart is valid
    for points within angular distance < pi of ``base``.
    """
    pts = np.asarray(pts, dtype=float)
    d = angle_gap(space, base[1], pts[..., 1])
    return np.stack([pts[..., 0] * np.cos(d), pts[..., 0] * np.sin(d)], axis=-1)


def from_chart(space: TargetSpace, base_theta: float, c):
    c = np.asarray(c, dtype=float)
    r = np.hypot(c[..., 0], c[..., 1])
    th = np.mod(base_theta + np.arctan2(c[..., 1], c[..., 0]), space.cone_angle)
    return np.stack([r, np.where(r > 0, th, 0.0)], axis=-1)


# ---------------------------------------------------------------- geodesics

@dataclass(frozen=True)
class GeodesicSegment:
    space: TargetSpace
    x: np.ndarray
    y: np.ndarray
    length: float
    through_tip: bool = False
    _delta: float = field(default=0.0, repr=False)

    def point(self, t: float) -> np.ndarray:
        return self.points(np.array([t]))[0]

    def points(self, ts) -> np.ndarray:
        """Constant-speed evaluation at arc-length parameters ``ts``."""
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, self.length)
        if self.space.is_flat:
            if self.length == 0:
                return np.repeat(self.x[None, :], len(ts), axis=0)
            u = (self.y - self.x) / self.length
            return self.x[None, :] + ts[:, None] * u[None, :]
        rx, thx = self.x
        ry, thy = self.y
        if self.through_tip:
            r = np.where(ts <= rx, rx - ts, ts - rx)
            th = np.where(ts <= rx, thx, thy)
            return np.stack([r, np.where(r > 0, th, 0.0)], axis=1)
        a = np.array([rx, 0.0])
        b = np.array([ry * np.cos(self._delta), ry * np.sin(self._delta)])
        if self.length == 0:
            return np.repeat(self.x[None, :], len(ts), axis=0)
        c = a[None, :] + (ts / self.length)[:, None] * (b - a)[None, :]
        return from_chart(self.space, thx, c)

    def sample(self, spacing: float) -> np.ndarray:
        n = max(2, int(np.ceil(self.length / max(spacing, 1e-15))) + 1)
        return self.points(np.linspace(0.0, self.length, n))

    def distance_to(self, pts, spacing: float | None = None) -> np.ndarray:
        """Distance from target points to the segment.

        Exact for flat targets.  On a cone the segment is sampled at
        ``spacing`` and the returned value is a lower bound, off by at most
        ``spacing / 2``.
        """
        pts = np.asarray(pts, dtype=float)
        if self.space.is_flat:
            return point_segment_distance(pts, self.x, self.y)
        if spacing is None:
            spacing = max(self.length, 1e-12) / 64
        samples = self.sample(spacing)
        best = np.full(pts.shape[:-1], np.inf)
        for q in samples:
            best = np.minimum(best, cone_distance(self.space, pts, q))
        return np.maximum(best - spacing / 2, 0.0)


def geodesic(space: TargetSpace, x, y) -> GeodesicSegment:
    """The unique geodesic from ``x`` to ``y``.

    On a cone target the segment either stays in a flat unfolded wedge
    (angular separation < pi) or runs radially through the tip.
    """
    x = space.check_point(x)
    y = space.check_point(y)
    if space.is_flat:
        return GeodesicSegment(space, x, y, float(np.linalg.norm(y - x)))
    delta = float(angle_gap(space, x[1], y[1]))
    if x[0] == 0 or y[0] == 0 or abs(delta) >= np.pi:
        return GeodesicSegment(space, x, y, float(x[0] + y[0]), True, delta)
    length = float(cone_distance(space, x, y))
    return GeodesicSegment(space, x, y, length, False, delta)


def distance(space: TargetSpace, x, y) -> float:
    return geodesic(space, x, y).length


def pairwise_distance(space: TargetSpace, p, q) -> np.ndarray:
    """Vectorised target distance between matching rows of ``p`` and ``q``."""
    if space.is_flat:
        return np.linalg.norm(np.asarray(p) - np.asarray(q), axis=-1)
    return cone_distance(space, p, q)


def geodesic_midpoints(space: TargetSpace, p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if space.is_flat:
        return 0.5 * (p + q)
    return np.array([geodesic(space, a, b).point(0.5 * geodesic(space, a, b).length)
                     for a, b in zip(p, q)])


# ---------------------------------------------------------------- convex sets

@dataclass(frozen=True)
class HalfSpace:
    """Affine functional ``normal . p - offset`` with a chosen side.

    The zero set is the hyperplane; ``side`` selects which open or closed
    half is meant when the halfspace is used as a region.
    """
    normal: np.ndarray
    offset: float
    side: str = ">"

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        nn = np.linalg.norm(n)
        if nn == 0:
            raise TargetError("halfspace normal must be nonzero")
        if abs(nn - 1.0) > 1e-12:
            object.__setattr__(self, "offset", float(self.offset) / nn)
            n = n / nn
        object.__setattr__(self, "normal", n)
        if self.side not in (">", ">=", "<", "<="):
            raise TargetError(f"bad side {self.side!r}")

    def value(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.normal - self.offset

    def to_json(self) -> dict:
        return {"normal": self.normal.tolist(), "offset": float(self.offset), "side": self.side}


@dataclass(frozen=True)
class ConvexRegion:
    """Convex subset of the plane as ``{p : A p <= b}`` (or ``<`` when open).

    ``vertices`` holds the polygon corners in counterclockwise order; a
    segment has two, a point one.
    """
    A: np.ndarray
    b: np.ndarray
    closed: bool = True
    vertices: np.ndarray | None = None

    def violation(self, pts) -> np.ndarray:
        """``max_i (a_i . p - b_i)``; nonpositive inside."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.max(pts @ self.A.T - self.b[None, :], axis=1)

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        v = self.violation(pts)
        return v <= tol if self.closed else v < -tol

    @classmethod
    def from_polygon(cls, vertices, closed: bool = True) -> "ConvexRegion":
        """Region from counterclockwise polygon corners (1, 2 or more)."""
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        rows, rhs = [], []
        if len(V) == 1:
            for n in ([1, 0], [-1, 0], [0, 1], [0, -1]):
                n = np.array(n, float)
                rows.append(n)
                rhs.append(n @ V[0])
        elif len(V) == 2:
            t = V[1] - V[0]
            t = t / np.linalg.norm(t)
            n = np.array([-t[1], t[0]])
            for a, p in ((n, V[0]), (-n, V[0]), (t, V[1]), (-t, V[0])):
                rows.append(a)
                rhs.append(a @ p)
        else:
            for i in range(len(V)):
                e = V[(i + 1) % len(V)] - V[i]
                n = np.array([e[1], -e[0]]) / np.linalg.norm(e)
                rows.append(n)
                rhs.append(n @ V[i])
        return cls(np.array(rows), np.array(rhs), closed, V)

    @classmethod
    def disc(cls, center, radius: float, sides: int = 32, closed: bool = True) -> "ConvexRegion":
        ang = np.linspace(0, TWO_PI, sides, endpoint=False)
        c = np.asarray(center, float)
        return cls.from_polygon(c + radius * np.stack([np.cos(ang), np.sin(ang)], 1), closed)


def orient2d(a, b, c) -> np.ndarray:
    """Twice the signed area of (a, b, c); positive for counterclockwise."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - \
        (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def convex_hull_2d(points) -> ConvexRegion:
    """Monotone-chain hull; collinear input gives a segment, one point a point."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(P) == 0:
        raise TargetError("convex hull of an empty point set")
    P = np.unique(P, axis=0)
    if len(P) == 1:
        return ConvexRegion.from_polygon(P)

    def chain(pts):
        out = []
        for p in pts:
            while len(out) >= 2 and orient2d(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(P)
    upper = chain(P[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        # all collinear: extremes of the lexicographic order
        hull = np.array([P[0], P[-1]])
    return ConvexRegion.from_polygon(hull)


def segments_intersect(p1, p2, q1, q2, eps: float = 0.0) -> bool:
    """Closed segment intersection with exact orientation signs (eps-snapped)."""
    d1 = orient2d(q1, q2, p1)
    d2 = orient2d(q1, q2, p2)
    d3 = orient2d(p1, p2, q1)
    d4 = orient2d(p1, p2, q2)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
            ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
        return True

    def on_seg(a, b, c, d):
        return abs(d) <= eps and min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps and \
            min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps

    return bool(on_seg(q1, q2, p1, d1) or on_seg(q1, q2, p2, d2) or
                on_seg(p1, p2, q1, d3) or on_seg(p1, p2, q2, d4))


def point_segment_distance(p, a, b) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    L2 = np.sum(d * d, axis=-1)
    t = np.where(L2 > 0, np.sum((p - a) * d, axis=-1) / np.where(L2 > 0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[..., None] * d), axis=-1)
