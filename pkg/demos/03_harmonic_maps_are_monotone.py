"""Harmonic maps with monotone boundary values.

Squeezing a quarter of the boundary circle to one point keeps the boundary
map monotone.  The harmonic extension is then saddle, hence monotone: every
point has a connected preimage, and the degree stays one.
"""
import numpy as np

from saddlekit import generators as gen
from saddlekit.energy import harmonic_solve
from saddlekit.saddle import is_saddle
from saddlekit.targets import PLANE
from saddlekit.topology import boundary_degree, fiber_components, is_light, is_monotone

mesh = gen.disc_grid(4)
B = gen.collapse_arc(mesh, start=0.0, length=np.pi / 2)
f = harmonic_solve(mesh, B, PLANE)

print("saddle:", is_saddle(f).verdict)
print("monotone:", is_monotone(f, grid_n=32).verdict)
light = is_light(f, grid_n=32)
print("light:", light.verdict, f"(largest fiber diameter {light.max_diameter:.3f})")
print("degree:", boundary_degree(f, [0.01, 0.02]))

corner = B[0]
fib = fiber_components(f, corner)
print(f"fiber over the collapsed point: {fib.n_components} piece, "
      f"diameter {fib.max_diameter:.3f}, touches boundary {fib.components[0].touches_boundary}")
