"""Command-line front end.

Every subcommand prints a JSON report (and writes it to ``--report`` when
given).  Exit status: 0 when the check passes or the operation completes,
1 when a check fails (witnesses are in the report), 2 on bad input.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import energy as en
from . import generators as gen
from . import graph as gp
from . import io
from . import saddle as sd
from . import topology as tp
from .mesh import MeshError, PLMap, validate_disc_mesh
from .targets import PLANE, HalfSpace, TargetError, geodesic


class UsageError(ValueError):
    pass


def _floats(text: str, count: int | None = None, name: str = "value"):
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{name}: expected {count} numbers, got {len(vals)}")
    return vals


def _threads() -> int | None:
    raw = os.environ.get("SADDLEKIT_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SADDLEKIT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("SADDLEKIT_THREADS must be a positive integer")
    return n


def _load(path, need_map=True):
    mesh, plmap = io.load_map(path)
    if need_map and plmap is None:
        raise UsageError(f"{path} has no images: a map is required")
    return mesh, plmap


def _cutter(args, plmap):
    if getattr(args, "plane", None):
        v = _floats(args.plane, name="--plane")
        if len(v) != plmap.space.dim + 1:
            raise UsageError(f"--plane needs {plmap.space.dim} normal components and an offset")
        return HalfSpace(np.array(v[:-1]), v[-1])
    if getattr(args, "segment", None):
        return _segment(args.segment, plmap)
    raise UsageError("give --plane or --segment")


def _segment(text, plmap):
    v = _floats(text, 4, "--segment")
    return geodesic(plmap.space, v[:2], v[2:])


# ---------------------------------------------------------------- commands

def cmd_gen(args):
    params = {}
    for key in ("expr", "height", "width", "angle", "warp", "amplitude", "ring", "radius"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    if args.shape == "cone_disc" and "angle" not in params:
        params["angle"] = 3 * np.pi
    mesh, plmap = gen.generate_mesh(gen.GeneratorSpec(args.shape, args.n, params))
    doc = io.map_document(mesh, plmap, generator={"shape": args.shape, "n": args.n, "params": params})
    if args.output:
        io.write_json(args.output, doc)
        report = {"status": "pass", "written": str(args.output), "n_vertices": mesh.n_vertices,
                  "n_triangles": mesh.n_triangles}
        return 0, report
    sys.stdout.write(io.dumps(doc))
    return 0, None


def cmd_validate(args):
    mesh, plmap = _load(args.input, need_map=False)
    rep = validate_disc_mesh(mesh, args.tol_geom)
    return (0 if rep.ok else 1), {"validation": rep.to_json(), "has_map": plmap is not None,
                                  "delaunay": mesh.is_delaunay() if rep.ok else None}


def cmd_check_saddle(args):
    _, plmap = _load(args.input)
    rep = sd.is_saddle(plmap, refinement=args.refinement, density=args.density, seed=args.seed,
                       eps=args.eps, max_witnesses=args.max_witnesses, max_triples=args.max_triples)
    if args.svg and rep.hats_found:
        cutter, _ = rep.hats_found[0]
        work = plmap
        dec = sd.cut_components(work, cutter, args.refinement)
        io.svg_cut_decomposition(args.svg, dec)
    return (0 if rep.verdict == "saddle" else 1), {"saddle": rep.to_json()}


def cmd_find_hats(args):
    _, plmap = _load(args.input)
    cutter = _cutter(args, plmap)
    dec = sd.cut_components(plmap, cutter, args.refinement, args.tol_cut)
    hats = dec.hat_components()
    if args.svg:
        io.svg_cut_decomposition(args.svg, dec)
    return (1 if hats else 0), {"cutter": sd.cutter_json(cutter),
                                "n_components": len(dec.components),
                                "tol_cut": dec.tol_cut,
                                "hats": [h.to_json() for h in hats]}


def cmd_cut_hat(args):
    mesh, plmap = _load(args.input)
    seg = _segment(args.segment, plmap)
    hats = sd.find_hats(plmap, seg, args.refinement)
    if not hats:
        raise UsageError("no hat for this segment")
    if not 0 <= args.hat_index < len(hats):
        raise UsageError(f"--hat-index must be in [0, {len(hats)})")
    verts = sd.segment_hat_vertices(plmap, seg, hats[args.hat_index])
    new = en.cut_hat(plmap, seg, verts)
    e0 = en.dirichlet_energy(plmap).total
    e1 = en.dirichlet_energy(new).total
    io.save_map(args.output, mesh, new)
    return 0, {"written": str(args.output), "relocated": verts.tolist(),
               "energy_before": e0, "energy_after": e1, "n_hats": len(hats)}


def cmd_energy(args):
    _, plmap = _load(args.input)
    rep = en.dirichlet_energy(plmap)
    out = {"total": rep.total, "n_triangles": len(rep.per_triangle),
           "delaunay": plmap.mesh.is_delaunay()}
    if plmap.space.is_flat:
        out["edge_form"] = rep.edge_form(plmap)
    if args.per_triangle:
        out["per_triangle"] = rep.per_triangle.tolist()
    return 0, out


def _boundary_values(args, mesh, plmap):
    kind = args.boundary
    if kind == "keep":
        if plmap is None:
            raise UsageError("--boundary keep needs a map in the input")
        return plmap.boundary_images, plmap.space
    params = {}
    if kind == "monotone":
        params = {"seed": args.seed, "curve": args.curve}
    elif kind == "collapse_arc":
        params = {"length": args.arc, "curve": args.curve}
    elif kind == "winding":
        params = {"degree": args.degree}
    return gen.BOUNDARY_VALUES[kind](mesh, **params), PLANE


def cmd_harmonize(args):
    mesh, plmap = _load(args.input, need_map=False)
    B, space = _boundary_values(args, mesh, plmap)
    cfg = en.SolverConfig(args.weights, args.max_iterations, args.tol_solve, args.mode)
    out, info = en.harmonic_solve(mesh, B, space, cfg, return_info=True)
    io.save_map(args.output, mesh, out)
    eff = cfg.resolved(space)
    return 0, {"written": str(args.output), "energy": en.dirichlet_energy(out).total,
               "solver": {"mode": info.mode, "iterations": info.iterations,
                          "residual": info.residual, "converged": info.converged,
                          "weight_scheme": eff.weight_scheme, "tol_solve": eff.tol_solve,
                          "max_iterations": eff.max_iterations}}


def cmd_descent(args):
    mesh, plmap = _load(args.input)
    segs = [_segment(s, plmap) for s in args.segment]
    out, trace = en.saddle_by_descent(plmap, segs, args.rounds, args.refinement)
    io.save_map(args.output, mesh, out)
    if args.trace:
        io.write_trace_csv(args.trace, trace)
    left = sum(len(sd.find_hats(out, s, args.refinement)) for s in segs)
    return (0 if left == 0 else 1), {"written": str(args.output), "cuts": len(trace) - 1,
                                     "trace": [list(t) for t in trace], "hats_left": left}


def _fiber_cmd(args, check):
    _, plmap = _load(args.input)
    rep = check(plmap, args.grid_n, args.tol_fiber)
    out = {"survey": rep.to_json()}
    if args.point:
        y = np.array(_floats(args.point, plmap.space.dim, "--point"))
        fib = tp.fiber_components(plmap, y, args.tol_fiber)
        out["fiber"] = fib.to_json()
        if args.svg:
            io.svg_fiber(args.svg, plmap, fib)
    return (0 if rep.verdict else 1), out


def cmd_check_monotone(args):
    return _fiber_cmd(args, tp.is_monotone)


def cmd_check_light(args):
    return _fiber_cmd(args, tp.is_light)


def cmd_degree(args):
    _, plmap = _load(args.input)
    base = None if args.base is None else np.array(_floats(args.base, plmap.space.dim, "--base"))
    d = tp.boundary_degree(plmap, base)
    return (0 if abs(d) == 1 else 1), {"degree": d,
                                       "base": None if base is None else base.tolist()}


def cmd_factorize(args):
    _, plmap = _load(args.input)
    res = tp.monotone_light_factorize(plmap, grid_n=args.grid_n, tol_fiber=args.tol_fiber)
    if args.output and res.h_light is not None:
        io.save_map(args.output, res.quotient, res.h_light, collapse=res.collapse.tolist())
    return (0 if res.exact else 1), {"factorization": res.to_json()}


def cmd_project_check(args):
    _, plmap = _load(args.input)
    rep = gp.check_graph_property(plmap, args.grid_n, args.tol_env)
    if args.svg:
        io.svg_projection(args.svg, plmap, rep.overlap_pairs)
    return (0 if rep.verdict == "graph" else 1), {"graph": rep.to_json()}


def cmd_envelopes(args):
    _, plmap = _load(args.input)
    env = gp.envelopes(plmap, args.grid_n, args.tol_env)
    if args.csv:
        io.write_heightfield_csv(args.csv, env)
    return (0 if env.agree() else 1), {"envelopes": env.to_json()}


def cmd_max_principle(args):
    mesh, plmap = _load(args.input)
    lam = _floats(args.lam, 3, "--lambda")
    cx, cy, r = _floats(args.disc, 3, "--disc")
    cells = sd.disc_cells(mesh, (cx, cy), r)
    if len(cells) == 0:
        raise UsageError("--disc selects no disc-shaped set of cells")
    rep = gp.check_max_principle(plmap, lam, cells, args.tol_env)
    out = {"max_principle": rep.to_json(), "n_cells": len(cells)}
    if not rep.ok:
        hats = gp.max_principle_hat(plmap, lam, rep)
        out["cutting_plane"] = rep.cutting_plane(lam).to_json()
        out["hats"] = [h.to_json() for h in hats]
    return (0 if rep.ok else 1), out


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="saddlekit", description="Saddle maps on triangulated discs.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized choices")
    p.add_argument("--report", help="also write the JSON report here")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, inp=True, **kw):
        s = sub.add_parser(name, **kw)
        if inp:
            s.add_argument("input")
        s.set_defaults(func=fn)
        return s

    s = add("gen", cmd_gen, inp=False, help="generate a mesh and map")
    s.add_argument("--shape", required=True, choices=sorted(gen.GENERATORS))
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--expr")
    s.add_argument("--height", type=float)
    s.add_argument("--width", type=float)
    s.add_argument("--angle", type=float)
    s.add_argument("--warp", type=float)
    s.add_argument("--amplitude", type=float)
    s.add_argument("--ring", type=int)
    s.add_argument("--radius", type=float)
    s.add_argument("-o", "--output")

    s = add("validate", cmd_validate, help="check the disc invariants")
    s.add_argument("--tol-geom", type=float, default=1e-9)

    s = add("check-saddle", cmd_check_saddle, help="search the canonical family for hats")
    s.add_argument("--refinement", type=int, default=0)
    s.add_argument("--density", type=int, default=200)
    s.add_argument("--eps", type=float)
    s.add_argument("--max-triples", type=int)
    s.add_argument("--max-witnesses", type=int, default=sd.MAX_WITNESSES)
    s.add_argument("--svg")

    s = add("find-hats", cmd_find_hats, help="hats of one cutter")
    s.add_argument("--plane", help="normal components and offset, comma separated")
    s.add_argument("--segment", help="x1,y1,x2,y2 (cone points as r,theta)")
    s.add_argument("--refinement", type=int, default=0)
    s.add_argument("--tol-cut", type=float)
    s.add_argument("--svg")

    s = add("cut-hat", cmd_cut_hat, help="replace the map on one segment hat")
    s.add_argument("--segment", required=True)
    s.add_argument("--hat-index", type=int, default=0)
    s.add_argument("--refinement", type=int, default=2)
    s.add_argument("-o", "--output", required=True)

    s = add("energy", cmd_energy, help="Dirichlet energy")
    s.add_argument("--per-triangle", action="store_true")

    s = add("harmonize", cmd_harmonize, help="discrete harmonic map with given boundary")
    s.add_argument("--boundary", default="keep", choices=["keep", *sorted(gen.BOUNDARY_VALUES)])
    s.add_argument("--curve", default="circle", choices=["circle", "ellipse", "polygon"])
    s.add_argument("--arc", type=float, default=np.pi / 2)
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--weights", default="cotangent", choices=["cotangent", "mean_value"])
    s.add_argument("--mode", choices=["direct_linear", "iterative_descent"])
    s.add_argument("--tol-solve", type=float)
    s.add_argument("--max-iterations", type=int, default=100_000)
    s.add_argument("-o", "--output", required=True)

    s = add("descent", cmd_descent, help="cut hats until none are left")
    s.add_argument("--segment", action="append", required=True)
    s.add_argument("--rounds", type=int, default=10)
    s.add_argument("--refinement", type=int, default=2)
    s.add_argument("--trace")
    s.add_argument("-o", "--output", required=True)

    for name, fn in (("check-monotone", cmd_check_monotone), ("check-light", cmd_check_light)):
        s = add(name, fn, help="sampled fiber check")
        s.add_argument("--grid-n", type=int, default=64)
        s.add_argument("--tol-fiber", type=float, default=tp.TOL_FIBER)
        s.add_argument("--point")
        s.add_argument("--svg")

    s = add("degree", cmd_degree, help="winding number of the boundary image")
    s.add_argument("--base")

    s = add("factorize", cmd_factorize, help="collapse f-constant subcomplexes")
    s.add_argument("--grid-n", type=int, default=24)
    s.add_argument("--tol-fiber", type=float, default=tp.TOL_FIBER)
    s.add_argument("-o", "--output")

    s = add("project-check", cmd_project_check, help="is the surface a graph over the plane")
    s.add_argument("--grid-n", type=int, default=128)
    s.add_argument("--tol-env", type=float)
    s.add_argument("--svg")

    s = add("envelopes", cmd_envelopes, help="lower and upper envelopes on a grid")
    s.add_argument("--grid-n", type=int, default=128)
    s.add_argument("--tol-env", type=float)
    s.add_argument("--csv")

    s = add("max-principle", cmd_max_principle, help="rim maximum of z - lambda on a disc")
    s.add_argument("--lambda", dest="lam", required=True, help="a,b,c for a x + b y + c")
    s.add_argument("--disc", required=True, help="cx,cy,r selecting cells by centroid")
    s.add_argument("--tol-env", type=float)
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "report")}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        threads = _threads()
        status, result = args.func(args)
    except (io.InputError, UsageError, MeshError, TargetError, sd.CutError, gp.GraphError,
            en.EnergyError, ValueError) as exc:
        sys.stderr.write(f"saddlekit {args.command}: error: {exc}\n")
        return 2
    except en.SolverError as exc:
        result = {"error": str(exc), "iterations": exc.iterations, "residual": exc.residual}
        status, threads = 1, None
    if result is None:
        return status
    config = _config(args)
    config["threads"] = threads
    report = {"schema": io.SCHEMA, "command": args.command, "config": config,
              "status": "pass" if status == 0 else "fail", "result": result}
    text = io.dumps(report)
    if args.report:
        io.atomic_write(args.report, text)
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
