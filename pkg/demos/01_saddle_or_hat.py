"""Which surfaces have hats?

A hat is a piece of the surface that a plane cuts off without it reaching
the boundary.  The hyperbolic paraboloid never has one; a bump does, for
every level between the rim height and the apex.
"""
import numpy as np

from saddlekit import generators as gen
from saddlekit.saddle import find_hats, is_saddle
from saddlekit.targets import HalfSpace

for name, (mesh, f) in [("x^2 - y^2", gen.graph_of("x^2 - y^2", 4)),
                        ("bump", gen.bump(1.0, 0.5, 4)),
                        ("overhang", gen.overhang(4))]:
    rep = is_saddle(f)
    print(f"{name:10s} {rep.verdict:11s} ({rep.family_size} cutting planes tried)")

mesh, f = gen.bump(1.0, 0.5, 4)
for level in (0.2, 0.5, 0.9):
    hats = find_hats(f, HalfSpace(np.array([0.0, 0.0, 1.0]), level))
    sizes = [len(h.vertices) for h in hats]
    print(f"bump cut at z = {level}: hats with {sizes} vertices")
