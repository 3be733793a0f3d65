"""Command line front end: ``itri <command> <mesh> [options]``.

Meshes are read from OBJ, PLY or JSON files, or taken from the bundled
corpus with ``corpus:<name>``.  Every run writes ``report.json`` into
``--out`` (unless disabled with ``--export``), following
``report_schema.json`` shipped with the package.  The exit status is 0 on
success, 1 when a check fails and 2 on errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import traceback
from importlib import resources

import numpy as np

from . import corpus
from .delaunay import RefinementConfig, delaunay_refine, flip_to_delaunay, is_delaunay_edge
from .geometry import GeometryError
from .io import (read_mesh, read_scalars, write_matrix, write_obj, write_polylines_obj,
                 write_scalars)
from .ops import RemovalError
from .subdivision_transfer import (L2Transfer, build_common_subdivision,
                                   interpolation_matrices)
from .tracing import extract_edge, transpose_crossing_counts

log = logging.getLogger("itri")

SCHEMA_VERSION = "1.0"
COMMANDS = ("idt", "refine", "subdivide", "transfer", "trace", "validate", "stress")
EXPORTS = ("subdivision", "matrices", "report")


def report_schema():
    """The JSON schema of command reports."""
    return json.loads(resources.files("itri").joinpath("report_schema.json").read_text())


def load_input(spec):
    if spec.startswith("corpus:"):
        return corpus.load(spec.split(":", 1)[1])
    if not os.path.exists(spec):
        raise FileNotFoundError(f"no such mesh file: {spec}")
    return read_mesh(spec)


def mesh_summary(tri):
    m = tri.mesh
    return {"vertices": m.n_vertices(), "edges": m.n_edges(), "faces": m.n_faces(),
            "original_vertices": tri.n_original,
            "euler_characteristic": m.n_vertices() - m.n_edges() + m.n_faces()}


def _min_angle_deg(tri):
    return float(np.degrees(min(min(tri.face_angles(f)) for f in tri.mesh.faces())))


def _refine_config(args):
    return RefinementConfig(min_angle=args.min_angle, delaunay_tolerance=args.delaunay_tol,
                            mollify=args.mollify, max_insertions=args.max_insertions)


def _intrinsic(args, tri, result):
    """Mollify and flip to Delaunay, then refine when requested."""
    if args.command == "refine" or getattr(args, "refine", False):
        rep = delaunay_refine(tri, _refine_config(args))
        result["refinement"] = rep.to_dict()
        result["flips"] = rep.flips
    else:
        result["mollify_delta"] = tri.mollify(args.mollify)
        result["flips"] = flip_to_delaunay(tri, args.delaunay_tol)
    result["min_angle"] = _min_angle_deg(tri)


def _subdivision_artifacts(tri, out, result, artifacts):
    S = build_common_subdivision(tri)
    result["subdivision"] = {"vertices": S.n_vertices, "faces": S.n_faces,
                             "euler_characteristic": S.euler_characteristic(),
                             "sum_crossings": tri.sum_crossings(),
                             "nonconvex_faces": len(S.nonconvex)}
    if tri.positions is not None:
        P0, _ = interpolation_matrices(S, tri)
        X = P0 @ tri.positions
        tris = []
        for poly in S.polygons:
            s = int(np.argmin(poly))
            p = poly[s:] + poly[:s]
            tris += [[p[0], p[k], p[k + 1]] for k in range(1, len(p) - 1)]
        path = os.path.join(out, "subdivision.obj")
        write_obj(path, X, tris, "common subdivision")
        artifacts.append(path)
    prov = {"schema_version": SCHEMA_VERSION,
            "vertices": [{"kind": k, "t0": [p.kind, p.index, list(p.bary)],
                          "t1": [q.kind, q.index, list(q.bary)]}
                         for k, p, q in zip(S.kind, S.pos0, S.pos1)],
            "faces": [{"corners": poly, "t0_face": int(a), "t1_face": int(b)}
                      for poly, a, b in zip(S.polygons, S.face0, S.face1)]}
    path = os.path.join(out, "subdivision_provenance.json")
    with open(path, "w") as fh:
        json.dump(prov, fh)
    artifacts.append(path)
    return S


def run_idt(args, tri, out, result, artifacts):
    _intrinsic(args, tri, result)
    bad = [e for e in tri.mesh.edges() if not is_delaunay_edge(tri, e, args.delaunay_tol)]
    result["non_delaunay_edges"] = len(bad)
    return 0 if not bad else 1


def run_refine(args, tri, out, result, artifacts):
    _intrinsic(args, tri, result)
    return 0 if result["refinement"]["completed"] else 1


def run_subdivide(args, tri, out, result, artifacts):
    _intrinsic(args, tri, result)
    if "subdivision" in args.export:
        _subdivision_artifacts(tri, out, result, artifacts)
    else:
        S = build_common_subdivision(tri)
        result["subdivision"] = {"vertices": S.n_vertices, "faces": S.n_faces,
                                 "euler_characteristic": S.euler_characteristic(),
                                 "sum_crossings": tri.sum_crossings(),
                                 "nonconvex_faces": len(S.nonconvex)}
    return 0


def run_transfer(args, tri, out, result, artifacts):
    if args.scalars is None:
        raise ValueError("transfer needs --scalars FILE")
    values = read_scalars(args.scalars)
    _intrinsic(args, tri, result)
    op = L2Transfer(tri)
    if args.direction == "t0-to-t1":
        if len(values) != tri.n_original:
            raise ValueError(f"expected {tri.n_original} values, got {len(values)}")
        res = op.to_t1(values)
    else:
        if len(values) != len(op.S.v1_ids):
            raise ValueError(f"expected {len(op.S.v1_ids)} values, got {len(values)}")
        res = op.to_t0(values)
    path = os.path.join(out, "transferred.txt")
    write_scalars(path, res)
    artifacts.append(path)
    result["transfer"] = {"direction": args.direction, "n_in": len(values), "n_out": len(res),
                          "t1_vertex_ids": [int(v) for v in op.S.v1_ids]}
    if "matrices" in args.export:
        for name, M in (("P0", op.P0), ("P1", op.P1), ("M_S", op.M)):
            path = os.path.join(out, f"{name}.mtx")
            write_matrix(path, M)
            artifacts.append(path)
    return 0


def run_trace(args, tri, out, result, artifacts):
    _intrinsic(args, tri, result)
    lines, flagged = [], 0
    for e0 in tri.mesh0.edges():
        traj = extract_edge(tri, 2 * e0)
        flagged += traj.flagged
        a, b = tri.mesh0.tail(2 * e0), tri.mesh0.tip(2 * e0)
        us = [0.0] + [z.u for z in traj.crossings] + [1.0]
        if tri.positions is not None:
            lines.append([(1 - u) * tri.positions[a] + u * tri.positions[b] for u in us])
    result["trace"] = {"t0_edges": tri.mesh0.n_edges(), "flagged": int(flagged),
                       "crossings": int(sum(len(x) - 2 for x in lines)) if lines else None}
    if lines:
        path = os.path.join(out, "trace.obj")
        write_polylines_obj(path, lines, "T0 edges split at their crossings with T1")
        artifacts.append(path)
    return 0


def check_all(tri):
    """Every integrity suite; returns a list of failure messages."""
    fails = []
    ok, msg = tri.validate()
    if not ok:
        return [msg]
    counts = transpose_crossing_counts(tri)
    if int(counts.sum()) != tri.sum_crossings():
        fails.append(f"extracted crossings {counts.sum()} != sum of n+ {tri.sum_crossings()}")
    S = build_common_subdivision(tri)
    if S.n_vertices != tri.mesh.n_vertices() + tri.sum_crossings():
        fails.append("common subdivision vertex count identity fails")
    m0 = tri.mesh0
    if S.euler_characteristic() != m0.n_vertices() - m0.n_edges() + m0.n_faces():
        fails.append("common subdivision Euler characteristic differs from T0")
    return fails


def run_validate(args, tri, out, result, artifacts):
    suites = {"input": check_all(tri)}
    _intrinsic(args, tri, result)
    suites["intrinsic"] = check_all(tri)
    result["validation"] = suites
    return 0 if not any(suites.values()) else 1


def run_stress(args, tri, out, result, artifacts):
    rng = np.random.default_rng(args.seed)
    tri.mollify(args.mollify)
    counts = {"flip": 0, "split_face": 0, "split_edge": 0, "remove": 0, "rejected": 0}
    fails = []
    for step in range(args.steps):
        m = tri.mesh
        op = rng.choice(["flip", "flip", "split_face", "split_edge", "remove"])
        if op == "flip":
            es = [e for e in m.edges() if not m.is_boundary_edge(e) and tri.is_flippable(e)]
            if not es:
                continue
            tri.flip_edge(int(rng.choice(es)))
        elif op in ("split_face", "split_edge"):
            try:
                if op == "split_face":
                    tri.split_face(int(rng.choice(m.faces())), rng.dirichlet([2.0, 2.0, 2.0]))
                else:
                    tri.split_edge(2 * int(rng.choice(m.edges())), float(rng.uniform(0.2, 0.8)))
            except GeometryError:
                counts["rejected"] += 1
                continue
        else:
            vs = [v for v in m.vertices() if not tri.original[v]]
            if not vs:
                continue
            try:
                tri.remove_inserted_vertex(int(rng.choice(vs)))
            except RemovalError:
                counts["rejected"] += 1
                continue
        counts[op] += 1
        if (step + 1) % args.check_every == 0 or step + 1 == args.steps:
            fails = check_all(tri)
            if fails:
                fails = [f"step {step}: {x}" for x in fails]
                break
    result["stress"] = {"steps": args.steps, "seed": args.seed, "operations": counts,
                        "failures": fails}
    return 0 if not fails else 1


RUNNERS = {"idt": run_idt, "refine": run_refine, "subdivide": run_subdivide,
           "transfer": run_transfer, "trace": run_trace, "validate": run_validate,
           "stress": run_stress}


def build_parser():
    p = argparse.ArgumentParser(prog="itri", description="Integer-coordinate intrinsic "
                                "triangulations: Delaunay flipping, refinement, common "
                                "subdivisions and function transfer.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("mesh", help="OBJ/PLY/JSON file or corpus:<name>")
    p.add_argument("--min-angle", type=float, default=25.0, help="refinement angle bound (deg)")
    p.add_argument("--mollify", type=float, default=1e-5, help="relative mollification slack")
    p.add_argument("--delaunay-tol", type=float, default=1e-5, help="cotan weight tolerance")
    p.add_argument("--max-insertions", type=int, default=10000)
    p.add_argument("--refine", action="store_true",
                   help="refine instead of only flipping (subdivide, transfer, trace, validate)")
    p.add_argument("--seed", type=int, default=0, help="seed for stress")
    p.add_argument("--steps", type=int, default=200, help="stress operations")
    p.add_argument("--check-every", type=int, default=10, help="stress check interval")
    p.add_argument("--scalars", help="per-vertex values for transfer, one per line")
    p.add_argument("--direction", choices=("t0-to-t1", "t1-to-t0"), default="t0-to-t1")
    p.add_argument("--out", default="itri_out", help="output directory")
    p.add_argument("--export", default="subdivision,matrices,report",
                   help="comma-separated subset of " + ",".join(EXPORTS) + " (or 'none')")
    return p


def _setup_logging():
    level = os.environ.get("ITRI_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    args.export = set() if args.export == "none" else set(args.export.split(","))
    unknown = args.export - set(EXPORTS)
    if unknown:
        print(f"unknown export kinds: {sorted(unknown)}", file=sys.stderr)
        return 2
    if not 0 < args.min_angle < 60 or args.mollify < 0 or args.delaunay_tol <= 0:
        print("flag out of range", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    report = {"schema_version": SCHEMA_VERSION, "command": args.command, "input": args.mesh,
              "config": {"min_angle": args.min_angle, "mollify": args.mollify,
                         "delaunay_tol": args.delaunay_tol, "seed": args.seed,
                         "refine": args.refine or args.command == "refine"},
              "status": "ok", "exit_code": 0, "error": None, "result": {}, "artifacts": []}
    t0 = time.perf_counter()
    try:
        tri = load_input(args.mesh)
        report["mesh"] = mesh_summary(tri)
        code = RUNNERS[args.command](args, tri, args.out, report["result"], report["artifacts"])
        report["result"]["mesh_after"] = mesh_summary(tri)
        if code:
            report["status"] = "failed"
    except Exception as err:  # reported, then mapped to exit status 2
        log.debug("%s", traceback.format_exc())
        code = 2
        report["status"] = "error"
        report["error"] = {"type": type(err).__name__, "message": str(err)}
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
    report["exit_code"] = code
    report["seconds"] = time.perf_counter() - t0
    if "report" in args.export:
        path = os.path.join(args.out, "report.json")
        report["artifacts"].append(path)
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2, default=float)
    return code


if __name__ == "__main__":
    sys.exit(main())
