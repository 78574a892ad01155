"""Test meshes and maps.

Every disc here comes from the same hexagonal ring lattice: ring ``k`` of
``m = 2 n`` rings carries ``6 k`` vertices at radius ``k / m`` with uniform
angular spacing.  The lattice has positive cotangent weights at every
resolution checked (``m <= 16``), is mirror symmetric in the x axis and has
the six spokes (including the x axis) as edge chains.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import DiscMesh, MeshError, PLMap, identity_map
from .targets import PLANE, SPACE3, cone


@dataclass(frozen=True)
class GeneratorSpec:
    shape: str
    n: int = 4
    params: dict = field(default_factory=dict)


def _check_n(n):
    if int(n) != n or n < 1:
        raise MeshError(f"refinement level n must be an integer >= 1, got {n}")
    return int(n)


def disc_grid(n: int) -> DiscMesh:
    m = 2 * _check_n(n)
    pts = [(0.0, 0.0)]
    index = {}

    def pid(k, s, j):
        if k == 0:
            return 0
        if j == k:
            s, j = s + 1, 0
        return index[(k, s % 6, j)]

    for k in range(1, m + 1):
        for s in range(6):
            for j in range(k):
                a = np.pi / 3 * (s + j / k)
                index[(k, s, j)] = len(pts)
                pts.append((k / m * np.cos(a), k / m * np.sin(a)))
    tris = []
    for k in range(1, m + 1):
        for s in range(6):
            for j in range(k):
                tris.append((pid(k - 1, s, j), pid(k, s, j), pid(k, s, j + 1)))
                if j < k - 1:
                    tris.append((pid(k - 1, s, j), pid(k, s, j + 1), pid(k - 1, s, j + 1)))
    boundary = [index[(m, s, j)] for s in range(6) for j in range(m)]
    return DiscMesh(np.array(pts), np.array(tris), np.array(boundary))


def _polar(mesh):
    x, y = mesh.vertices.T
    return np.hypot(x, y), np.arctan2(y, x)


def parse_expression(expr):
    """Turn ``"x^2 - y^2"`` (or a callable) into a vectorised ``g(x, y)``."""
    if callable(expr):
        return expr
    import sympy
    x, y = sympy.symbols("x y")
    try:
        e = sympy.sympify(str(expr), locals={"x": x, "y": y}, convert_xor=True)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise MeshError(f"cannot parse expression {expr!r}: {exc}") from None
    free = e.free_symbols - {x, y}
    if free:
        raise MeshError(f"expression uses unknown symbols {sorted(map(str, free))}")
    f = sympy.lambdify((x, y), e, "numpy")
    return lambda X, Y: np.broadcast_to(np.asarray(f(X, Y), dtype=float), np.shape(X)).copy()


def graph_of(expr, n: int):
    mesh = disc_grid(n)
    x, y = mesh.vertices.T
    z = parse_expression(expr)(x, y)
    return mesh, PLMap(mesh, np.stack([x, y, z], 1), SPACE3)


def bump(height: float = 1.0, width: float = 0.5, n: int = 4):
    if not width > 0:
        raise MeshError("bump width must be positive")
    return graph_of(lambda x, y: height * np.exp(-(x * x + y * y) / width ** 2), n)


def identity(n: int):
    mesh = disc_grid(n)
    return mesh, identity_map(mesh)


def fold(n: int):
    """The crease map ``(x, y) -> (x, |y|)``; exact because the x axis is an edge chain."""
    mesh = disc_grid(n)
    x, y = mesh.vertices.T
    return mesh, PLMap(mesh, np.stack([x, np.abs(y)], 1), PLANE)


def _radial(mesh, profile):
    r, th = _polar(mesh)
    rho = profile(r)
    return np.stack([rho * np.cos(th), rho * np.sin(th)], 1)


def squeeze(n: int):
    """Radial squeeze ``r -> max(0, 2 r - 1)``: the inner half-radius disc goes to the centre."""
    mesh = disc_grid(n)
    return mesh, PLMap(mesh, _radial(mesh, lambda r: np.maximum(0.0, 2 * r - 1)), PLANE)


def radial_fold(n: int, knots=((0.0, 0.0), (0.375, 0.6), (0.625, 0.2), (1.0, 1.0))):
    """Planar map folding an annulus back over itself (not saddle, not monotone)."""
    mesh = disc_grid(n)
    kr, kv = np.array(knots).T
    return mesh, PLMap(mesh, _radial(mesh, lambda r: np.interp(r, kr, kv)), PLANE)


def overhang(n: int = 4, amplitude: float = 2.0, width: float = 0.4, angle: float = 0.0):
    """S-shaped sheet in 3-space over a (nearly) circular convex projected boundary.

    In coordinates ``(u, v)`` rotated by ``angle`` the sheet is
    ``(u (1 - a exp(-r^2 / w^2)), v, u)``; for ``a > 1`` the projection
    folds over itself near the centre while ``z = u`` keeps it embedded.
    """
    mesh = disc_grid(n)
    c, s = np.cos(angle), np.sin(angle)
    x, y = mesh.vertices.T
    u, v = c * x + s * y, -s * x + c * y
    r2 = x * x + y * y
    U = u * (1 - amplitude * np.exp(-r2 / width ** 2))
    X, Y = c * U - s * v, s * U + c * v
    return mesh, PLMap(mesh, np.stack([X, Y, u], 1), SPACE3)


def pinch(n: int = 4, ring: int | None = None, amplitude: float = 1.0, rotation: float = 0.0,
          shift=(0.0, 0.0), upper_only: bool = False):
    """Planar map ``(x, a y (r^2 - rho^2))`` (rotated, shifted).

    ``rho`` is the radius of lattice ring ``ring``, so the whole ring and the
    x axis land exactly on a line segment; the two half discs inside the
    ring are hats for that segment.  With ``upper_only`` the lower half disc
    stays on the segment and only one hat is left.
    """
    mesh = disc_grid(n)
    m = 2 * n
    ring = (3 * m) // 4 if ring is None else ring
    if not 0 < ring < m:
        raise MeshError("ring must lie strictly between centre and boundary")
    rho = ring / m
    x, y = mesh.vertices.T
    g = amplitude * (np.maximum(y, 0.0) if upper_only else y) * (x * x + y * y - rho * rho)
    c, s = np.cos(rotation), np.sin(rotation)
    img = np.stack([c * x - s * g, s * x + c * g], 1) + np.asarray(shift, float)
    return mesh, PLMap(mesh, img, PLANE)


def cone_disc(angle: float = 3 * np.pi, n: int = 4, warp: float = 0.0, radius: float = 1.0):
    """Disc mapped into a cone of total angle ``angle``, boundary winding once.

    Boundary vertex at polar angle ``phi`` goes to cone angle
    ``angle * s(phi) / (2 pi)`` with ``s(phi) = phi + warp sin(2 phi)``
    (monotone for ``|warp| < 1/2``).  Interior vertices start from the
    radial extension of that boundary map.
    """
    if abs(warp) >= 0.5:
        raise MeshError("|warp| must be < 1/2 to keep the boundary monotone")
    mesh = disc_grid(n)
    space = cone(angle, radius)
    r, phi = _polar(mesh)
    phi = np.mod(phi, 2 * np.pi)
    s = phi + warp * np.sin(2 * phi)
    img = np.stack([radius * r, np.mod(angle * s / (2 * np.pi), angle)], 1)
    img[r == 0, 1] = 0.0
    return mesh, PLMap(mesh, img, space)


# ---------------------------------------------------------------- boundary values

def boundary_angles(mesh: DiscMesh) -> np.ndarray:
    """Unwrapped polar angles of the boundary cycle, starting in [0, 2 pi)."""
    P = mesh.vertices[mesh.boundary]
    a = np.unwrap(np.arctan2(P[:, 1], P[:, 0]))
    return a - 2 * np.pi * np.floor(a[0] / (2 * np.pi))


def curve_points(psi, curve: str = "circle", sides: int = 4, aspect: float = 0.6) -> np.ndarray:
    """Points at angle ``psi`` on a convex curve around the origin.

    ``circle``, ``ellipse`` (semi-axes 1 and ``aspect``) or a regular
    ``polygon`` with ``sides`` corners, hit radially so that a monotone
    angle gives a monotone curve parametrization.
    """
    psi = np.asarray(psi, dtype=float)
    c, s = np.cos(psi), np.sin(psi)
    if curve == "circle":
        return np.stack([c, s], 1)
    if curve == "ellipse":
        rho = 1.0 / np.sqrt(c * c + (s / aspect) ** 2)
        return np.stack([rho * c, rho * s], 1)
    if curve == "polygon":
        if sides < 3:
            raise MeshError("polygon needs at least 3 sides")
        w = 2 * np.pi / sides
        k = np.floor(np.mod(psi, 2 * np.pi) / w)
        mid = (k + 0.5) * w
        rho = np.cos(w / 2) / np.cos(np.mod(psi, 2 * np.pi) - mid)
        return np.stack([rho * c, rho * s], 1)
    raise MeshError(f"unknown curve {curve!r}")


def collapse_arc(mesh: DiscMesh, start: float = 0.0, length: float = np.pi / 2,
                 curve: str = "circle") -> np.ndarray:
    """Boundary values squeezing the arc ``[start, start + length]`` to one point.

    The rest of the circle is stretched linearly over the whole curve, so the
    boundary map stays monotone and of degree one.
    """
    if not 0 <= length < 2 * np.pi:
        raise MeshError("arc length must lie in [0, 2 pi)")
    phi = np.mod(boundary_angles(mesh) - start, 2 * np.pi)
    psi = np.where(phi <= length, 0.0, (phi - length) * 2 * np.pi / (2 * np.pi - length))
    return curve_points(psi + start, curve)


def monotone_boundary(mesh: DiscMesh, seed: int = 0, collapse: float = 0.3,
                      curve: str = "circle") -> np.ndarray:
    """Random monotone degree-one boundary values.

    Angle increments along the boundary are random and nonnegative; a
    fraction ``collapse`` of them is zero, so some arcs go to single points.
    """
    rng = np.random.default_rng(seed)
    n = len(mesh.boundary)
    inc = rng.exponential(1.0, n)
    inc[rng.random(n) < collapse] = 0.0
    if inc.sum() == 0:
        inc[0] = 1.0
    psi = np.r_[0.0, np.cumsum(inc)[:-1]] * 2 * np.pi / inc.sum() + rng.uniform(0, 2 * np.pi)
    return curve_points(psi, curve)


def winding_boundary(mesh: DiscMesh, degree: int = 1) -> np.ndarray:
    """Boundary vertex at angle ``phi`` goes to angle ``degree * phi`` on the unit circle."""
    return curve_points(degree * boundary_angles(mesh))


BOUNDARY_VALUES = {
    "identity": lambda mesh, **p: mesh.vertices[mesh.boundary].copy(),
    "collapse_arc": lambda mesh, **p: collapse_arc(mesh, **p),
    "monotone": lambda mesh, **p: monotone_boundary(mesh, **p),
    "winding": lambda mesh, **p: winding_boundary(mesh, **p),
    "reversed": lambda mesh, **p: winding_boundary(mesh, -1),
}


GENERATORS = {
    "disc_grid": lambda n, **p: (disc_grid(n), None),
    "identity": lambda n, **p: identity(n),
    "graph": lambda n, expr="x^2-y^2", **p: graph_of(expr, n),
    "bump": lambda n, height=1.0, width=0.5, **p: bump(height, width, n),
    "fold": lambda n, **p: fold(n),
    "radial_fold": lambda n, **p: radial_fold(n),
    "squeeze": lambda n, **p: squeeze(n),
    "overhang": lambda n, **p: overhang(n, **p),
    "pinch": lambda n, **p: pinch(n, **p),
    "cone_disc": lambda n, angle=3 * np.pi, **p: cone_disc(angle, n, **p),
}


def generate_mesh(spec: GeneratorSpec):
    """Build ``(mesh, plmap)`` for a generator spec; ``plmap`` is None for bare grids."""
    if spec.shape not in GENERATORS:
        raise MeshError(f"unknown generator {spec.shape!r}; choose from {sorted(GENERATORS)}")
    n = _check_n(spec.n)
    return GENERATORS[spec.shape](n, **spec.params)
