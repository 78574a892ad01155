"""Saddle surfaces over a convex curve are graphs.

The overhang sheet has a convex boundary too, but it folds over itself in
projection; it is not saddle, and a plane cuts a hat off it.
"""
from pathlib import Path

from saddlekit import generators as gen
from saddlekit import io
from saddlekit.graph import check_graph_property, check_max_principle, max_principle_hat
from saddlekit.saddle import disc_cells

out = Path("demo_output")
for name, (mesh, f) in [("x^3 - 3xy^2", gen.graph_of("x^3 - 3*x*y^2", 4)),
                        ("overhang", gen.overhang(4))]:
    rep = check_graph_property(f)
    print(f"{name:12s} {rep.verdict:9s} overlaps={len(rep.overlap_pairs):4d} "
          f"max envelope gap={rep.envelopes.max_gap:.3f}")
    io.svg_projection(out / f"{name.split()[0]}_projection.svg", f, rep.overlap_pairs)

mesh, bump = gen.bump(1.0, 0.5, 4)
rep = check_max_principle(bump, (0, 0, 0), disc_cells(mesh, (0, 0), 0.5))
print("bump attains its max on the rim:", rep.ok, "- interior witness vertex", rep.witness)
print("hats cut off by the witness plane:", len(max_principle_hat(bump, (0, 0, 0), rep)))
