"""Cutting a hat along a segment never stretches an edge.

Each hat vertex is moved onto the segment, at the point whose distance
from the segment's start matches its old distance (clamped at the far
end).  On a Delaunay mesh all cotangent weights are nonnegative, so the
energy can only go down; here it goes down strictly.
"""
from saddlekit import generators as gen
from saddlekit.energy import dirichlet_energy, edge_lengths, saddle_by_descent
from saddlekit.saddle import find_hats
from saddlekit.targets import PLANE, geodesic

mesh, f = gen.pinch(4)
seg = geodesic(PLANE, (-1, 0), (1, 0))
print("hats before:", len(find_hats(f, seg, refinement=2)))

g, trace = saddle_by_descent(f, [seg])
for rnd, cut, e in trace:
    print(f"round {rnd} cut {cut}: energy {e:.6f}")
print("hats after:", len(find_hats(g, seg, refinement=2)))
print("longest edge growth:", float((edge_lengths(g) - edge_lengths(f)).max()))
print("energy drop:", dirichlet_energy(f).total - dirichlet_energy(g).total)
