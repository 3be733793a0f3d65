"""Acceptance suite: one test per criterion, each recording a pass/fail line.

The lines are printed at the end of the pytest run (see ``conftest.py``) and
when this file is executed directly.
"""
import json
import math
import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from itri import corpus
from itri.cli import main
from itri.delaunay import (RefinementConfig, cotan_weight, delaunay_refine, flip_to_delaunay,
                           is_exempt, narrow_vertices)
from itri.ops import IntrinsicTriangulation, RemovalError
from itri.subdivision_transfer import L2Transfer, build_common_subdivision
from itri.tracing import extract_edge, transpose_crossing_counts

from .oracles import crossing_counts, flat_grid, planar, random_operation

RESULTS = {}


def record(k, ok, detail):
    RESULTS[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def _report(out):
    with open(out / "report.json") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# 1. robustness on the bundled corpus


def test_criterion_1_corpus_robustness(tmp_path):
    names = corpus.names()
    t0 = time.perf_counter()
    bad = []
    for name in names:
        for cmd in (["idt"], ["refine", "--min-angle", "25"], ["subdivide"]):
            out = tmp_path / name / cmd[0]
            code = main(cmd + [f"corpus:{name}", "--out", str(out), "--export", "report"])
            rep = _report(out)
            if code != 0:
                bad.append(f"{name}/{cmd[0]}: exit {code} {rep['error']}")
                continue
            if cmd[0] == "subdivide":
                s, after = rep["result"]["subdivision"], rep["result"]["mesh_after"]
                if s["vertices"] != after["vertices"] + s["sum_crossings"]:
                    bad.append(f"{name}: |V_S| identity")
                if s["euler_characteristic"] != rep["mesh"]["euler_characteristic"]:
                    bad.append(f"{name}: chi(S) {s['euler_characteristic']}")
    secs = time.perf_counter() - t0
    ok = len(names) >= 20 and not bad and secs < 60
    record(1, ok, f"{len(names) - len({b.split(':')[0].split('/')[0] for b in bad})}/{len(names)} "
                  f"meshes ok in {secs:.1f}s" + (f"; {bad[:3]}" if bad else ""))
    assert ok, bad


# ---------------------------------------------------------------------------
# 2. Delaunay property after idt


def test_criterion_2_delaunay_after_idt():
    worst, n_edges, bad = math.inf, 0, []
    for name in corpus.names():
        tri = corpus.load(name)
        tri.mollify(1e-5)
        flip_to_delaunay(tri, 1e-5)
        for e in tri.mesh.edges():
            if tri.mesh.is_boundary_edge(e):
                continue
            n_edges += 1
            w = cotan_weight(tri, e)
            worst = min(worst, w)
            if w < -1e-5:
                bad.append((name, e, w))
    ok = not bad
    record(2, ok, f"{n_edges} interior edges, smallest cotan weight {worst:.3g}")
    assert ok, bad[:5]


# ---------------------------------------------------------------------------
# 3. refinement quality


def _worst_nonexempt(tri):
    narrow = narrow_vertices(tri)
    worst = math.inf
    for f in tri.mesh.faces():
        if not is_exempt(tri, f, narrow):
            worst = min(worst, math.degrees(min(tri.face_angles(f))))
    return worst


def test_criterion_3_refinement_quality():
    bad, w25, w30, n30 = [], math.inf, math.inf, 0
    for name in corpus.names():
        tri = corpus.load(name)
        rep = delaunay_refine(tri, RefinementConfig(min_angle=25))
        w = _worst_nonexempt(tri)
        w25 = min(w25, w)
        if not rep.completed or w < 25 - 1e-6:
            bad.append((name, 25, w))
        tri = corpus.load(name)
        closed = "closed" in tri.tags
        if closed and all(math.degrees(tri.angle_sum0(v)) >= 60 for v in range(tri.n_original)):
            n30 += 1
            rep = delaunay_refine(tri, RefinementConfig(min_angle=30))
            w = min(math.degrees(min(tri.face_angles(f))) for f in tri.mesh.faces())
            w30 = min(w30, w)
            if not rep.completed or w < 30 - 1e-6:
                bad.append((name, 30, w))
    ok = not bad
    record(3, ok, f"worst non-exempt angle {w25:.2f} deg at 25; {w30:.2f} deg at 30 "
                  f"on {n30} closed meshes")
    assert ok, bad


# ---------------------------------------------------------------------------
# 4. integer exactness against a planar oracle


def test_criterion_4_integer_exactness():
    ops, checks, mismatches, rejected = 0, 0, [], 0
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        tri = flat_grid(2 + seed % 3, 2 + (seed // 3) % 3, 0.3, seed)
        for step in range(100):
            if random_operation(tri, rng) == "rejected":
                rejected += 1
            ops += 1
            if step % 5 == 4:
                checks += 1
                got, want = transpose_crossing_counts(tri), crossing_counts(tri)
                if not np.array_equal(got, want):
                    mismatches.append((seed, step))
    ok = ops >= 1000 and not mismatches
    record(4, ok, f"{ops} random operations, {checks} exact comparisons, "
                  f"{len(mismatches)} mismatches ({rejected} removals rolled back)")
    assert ok, mismatches[:5]


# ---------------------------------------------------------------------------
# 5. conservation and structure invariants


def _invariants(tri):
    fails = []
    ok, msg = tri.validate()
    if not ok:
        return [msg]
    extracted = sum(len(extract_edge(tri, 2 * e0).crossings) for e0 in tri.mesh0.edges())
    if extracted != tri.sum_crossings():
        fails.append(f"extracted {extracted} != sum n+ {tri.sum_crossings()}")
    S = build_common_subdivision(tri)
    if S.n_vertices != tri.mesh.n_vertices() + tri.sum_crossings():
        fails.append("|V_S| identity")
    if S.euler_characteristic() != tri.mesh0.euler_characteristic():
        fails.append("chi(S) != chi(T0)")
    return fails


def test_criterion_5_conservation(tmp_path):
    runs, checks, fails = 0, 0, []
    for k, name in enumerate(corpus.names()):
        tri = corpus.load(name)
        tri.mollify(1e-5)
        rng = np.random.default_rng(k)
        runs += 1
        for step in range(60):
            random_operation(tri, rng)
            if step % 10 == 9:
                checks += 1
                fails += [(name, step, x) for x in _invariants(tri)]
    # the CLI stress command runs the same checks
    for name in ("grid_3x3", "torus_coarse", "delta_pillow"):
        runs += 1
        code = main(["stress", f"corpus:{name}", "--steps", "100", "--seed", "3",
                     "--out", str(tmp_path / name), "--export", "report"])
        if code != 0:
            fails.append((name, "cli", _report(tmp_path / name)["result"]))
    ok = not fails
    record(5, ok, f"{runs} stress runs, {checks} invariant checks, {len(fails)} failures")
    assert ok, fails[:5]


# ---------------------------------------------------------------------------
# 6. flip involution


def test_criterion_6_flip_involution():
    trials, bad, worst = 0, [], 0.0
    rng = np.random.default_rng(6)
    meshes = []
    for name in corpus.names():
        tri = corpus.load(name)
        tri.mollify(1e-5)
        flip_to_delaunay(tri)
        meshes.append((name, tri))
    while trials < 10000:
        name, tri = meshes[trials % len(meshes)]
        m = tri.mesh
        es = [e for e in m.edges() if not m.is_boundary_edge(e) and tri.is_flippable(e)]
        if not es:
            meshes.remove((name, tri))
            continue
        e = int(rng.choice(es))
        n0, r0, l0 = list(tri.n), list(tri.r), np.array(tri.length)
        tri.flip_edge(e)
        tri.flip_edge(e, force=True)
        trials += 1
        # the edge comes back with its two halfedges exchanged
        r0[2 * e], r0[2 * e + 1] = r0[2 * e + 1], r0[2 * e]
        alive = [x for x in m.edges()]
        rel = np.abs(np.array(tri.length)[alive] - l0[alive]) / l0[alive]
        worst = max(worst, float(rel.max()))
        if tri.n != n0 or tri.r != r0 or rel.max() > 1e-9:
            bad.append((name, e))
        # wander: keep some flips so later trials see other states
        if rng.random() < 0.3:
            tri.flip_edge(e)
    ok = not bad
    record(6, ok, f"{trials} double flips on {len(corpus.names())} meshes, {len(bad)} failures, "
                  f"worst relative length change {worst:.1e}")
    assert ok, bad[:5]


# ---------------------------------------------------------------------------
# 7. transfer optimality on a Poisson problem


def _random_split_square(rng, n_splits):
    """Unit square made low quality by random edge splits; returns (faces, positions)."""
    work = corpus.load("square_2tri")
    for _ in range(n_splits):
        work.split_edge(2 * int(rng.choice(work.mesh.edges())), float(rng.uniform(0.1, 0.9)))
    vs = work.mesh.vertices()
    idx = {v: k for k, v in enumerate(vs)}
    F = [[idx[work.mesh.tail(h)] for h in work.mesh.face_halfedges(f)] for f in work.mesh.faces()]
    X = np.array([planar(work, v) for v in vs])
    return F, X


def _exact(X):
    return np.sin(math.pi * X[:, 0]) * np.sin(math.pi * X[:, 1])


def _poisson(tri, v_ids):
    """Cotan-Laplacian solve of -lap u = 2 pi^2 sin(pi x) sin(pi y), u = 0 on the boundary."""
    m = tri.mesh
    col = {v: k for k, v in enumerate(v_ids)}
    n = len(v_ids)
    rows, cols, L, M = [], [], [], []
    for f in m.faces():
        hs = m.face_halfedges(f)
        ang = tri.face_angles(f)
        area = tri.face_area(f)
        vs = [col[m.tail(h)] for h in hs]
        for s in range(3):
            # side s joins corners s and s+1; opposite corner s+2
            a, b = vs[s], vs[(s + 1) % 3]
            w = 0.5 / math.tan(ang[(s + 2) % 3])
            rows += [a, b, a, b]
            cols += [b, a, a, b]
            L += [-w, -w, w, w]
        for a in vs:
            for b in vs:
                rows.append(a)
                cols.append(b)
                L.append(0.0)
                M.append((a, b, area / 12 * (2 if a == b else 1)))
    K = sp.coo_matrix((L, (rows, cols)), shape=(n, n)).tocsr()
    Mm = sp.coo_matrix(([x for _, _, x in M], ([a for a, _, _ in M], [b for _, b, _ in M])),
                       shape=(n, n)).tocsr()
    X = np.array([planar(tri, v) for v in v_ids])
    rhs = Mm @ (2 * math.pi ** 2 * _exact(X))
    inner = np.array([k for k, v in enumerate(v_ids) if not m.is_boundary_vertex(v)])
    u = np.zeros(n)
    u[inner] = spla.spsolve(K[inner][:, inner].tocsc(), rhs[inner])
    return u


def test_criterion_7_transfer_optimality():
    wins, diffs, trials = 0, [], 100
    for seed in range(trials):
        rng = np.random.default_rng(7000 + seed)
        F, X = _random_split_square(rng, 40)
        T0 = IntrinsicTriangulation.from_positions(F, X)
        tri = T0.copy()
        delaunay_refine(tri, RefinementConfig(min_angle=25))
        op = L2Transfer(tri)
        u1 = _poisson(tri, op.S.v1_ids)
        col = {v: k for k, v in enumerate(op.S.v1_ids)}
        naive = u1[[col[v] for v in range(T0.n_original)]]
        best = op.to_t0(u1)
        XS = op.P0 @ X
        uS = _exact(XS)

        def err(u0):
            d = op.P0 @ u0 - uS
            return math.sqrt(d @ (op.M @ d))

        e_l2, e_naive = err(best), err(naive)
        wins += e_l2 <= e_naive
        diffs.append(e_naive - e_l2)
    rate = wins / trials
    ok = rate >= 0.95 and np.mean(diffs) > 0
    record(7, ok, f"L2 transfer no worse than copy-back in {wins}/{trials} trials, "
                  f"mean error reduction {np.mean(diffs):.3e}")
    assert ok


# ---------------------------------------------------------------------------
# 8. vertex removal on flat neighborhoods


def _star_polygon(rng, k):
    """Polygon star-shaped about the origin whose fan from the origin is a triangulation."""
    while True:
        ang = np.sort(rng.uniform(0, 2 * math.pi, k))
        gaps = np.diff(np.append(ang, ang[0] + 2 * math.pi))
        if gaps.max() < 0.9 * math.pi and gaps.min() > 0.05:
            break
    rad = rng.uniform(0.3, 1.0, k)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def _ear_clip(P):
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    idx, F = list(range(len(P))), []
    while len(idx) > 3:
        for s in range(len(idx)):
            a, b, c = idx[s - 1], idx[s], idx[(s + 1) % len(idx)]
            if cross(P[a], P[b], P[c]) <= 1e-12:
                continue
            if any(cross(P[a], P[b], P[x]) > 0 and cross(P[b], P[c], P[x]) > 0
                   and cross(P[c], P[a], P[x]) > 0 for x in idx if x not in (a, b, c)):
                continue
            F.append([a, b, c])
            idx.pop(s)
            break
        else:
            return None
    F.append(idx)
    return F


def _flat_neighborhood(rng, k):
    """Flat polygon triangulation with an inserted vertex of degree ``k`` at the origin."""
    while True:
        P = _star_polygon(rng, k)
        F = _ear_clip(P)
        if F is None:
            continue
        tri = IntrinsicTriangulation.from_positions(F, P)
        f0 = None
        for f in tri.mesh.faces():
            A, B, C = (P[tri.mesh.tail(h)] for h in tri.mesh.face_halfedges(f))
            T = np.column_stack([B - A, C - A])
            y = np.linalg.solve(T, -A)
            bary = np.array([1 - y.sum(), y[0], y[1]])
            if bary.min() > 1e-6:
                f0 = (f, bary)
        if f0 is None:
            continue
        p = tri.split_face(*f0)
        m = tri.mesh
        changed = True
        while m.degree(p) < k and changed:
            changed = False
            for h in m.outgoing(p):
                e = m.next(h) >> 1
                if not m.is_boundary_edge(e) and tri.is_flippable(e):
                    tri.flip_edge(e)
                    changed = True
                    break
        if m.degree(p) == k:
            return tri, p


def test_criterion_8_vertex_removal():
    rng = np.random.default_rng(8)
    failures, degrees = [], []
    for trial in range(1000):
        k = int(rng.integers(4, 13))
        tri, p = _flat_neighborhood(rng, k)
        degrees.append(k)
        assert abs(tri.vertex_angle_sum(p) - 2 * math.pi) < 1e-9
        try:
            tri.remove_inserted_vertex(p)
            if not tri.validate()[0]:
                failures.append((trial, k, "invalid"))
        except RemovalError as err:
            failures.append((trial, k, str(err)))
    ok = not failures
    record(8, ok, f"{len(degrees)} neighborhoods, degrees {min(degrees)}-{max(degrees)}, "
                  f"{len(failures)} failed removals")
    assert ok, failures[:5]


if __name__ == "__main__":
    import pathlib
    import sys
    import tempfile

    import pytest
    sys.exit(pytest.main([str(pathlib.Path(__file__)), "-q"]))
