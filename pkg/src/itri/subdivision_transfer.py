"""Common subdivision of T0 and T1 and L2-optimal function transfer.

The common subdivision S cuts every T1 face along the T0 curves crossing
it.  Its vertices are the T1 vertices followed by one vertex per crossing;
its faces are the regions returned by
:func:`~itri.integer_coords.face_regions`, oriented counterclockwise like
their T1 face.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import SurfacePoint, layout_face
from .integer_coords import IntegrityError, face_regions, npos
from .tracing import all_crossings

log = logging.getLogger(__name__)

DEGENERATE_REL = 1e-14
CONVEX_TOL = 1e-9


@dataclass
class CommonSubdivision:
    """Polygon mesh whose faces lie in one T0 face and one T1 face each.

    Attributes
    ----------
    polygons : list of list of int
        S vertex ids of each face, counterclockwise.
    corners2d : list of ndarray
        Planar corner positions from the layout of the containing T1 face.
    pos0, pos1 : list of SurfacePoint
        Location of each S vertex on T0 and on T1.
    kind : list of str
        ``"T1-vertex"`` or ``"crossing"``.
    face0, face1 : list of int
        Containing T0 and T1 face of each S face.
    v1_ids : list of int
        Alive T1 vertex ids; column ``k`` of ``P1`` is vertex ``v1_ids[k]``.
    """

    polygons: list
    corners2d: list
    pos0: list
    pos1: list
    kind: list
    face0: list
    face1: list
    v1_ids: list
    n_v0: int
    n_edges: int
    positions0: np.ndarray | None = None
    nonconvex: list = field(default_factory=list)

    @property
    def n_vertices(self):
        return len(self.pos0)

    @property
    def n_faces(self):
        return len(self.polygons)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces


def _crossing_key(n, s, q):
    """Table key of crossing ``q`` (from tail) on halfedge ``s``."""
    e = s >> 1
    return (e, q) if s & 1 == 0 else (e, npos(n[e]) - 1 - q)


def build_common_subdivision(tri):
    """Build the common subdivision of ``tri.mesh0`` and ``tri.mesh``.

    Raises
    ------
    IntegrityError
        If a counting identity fails, which indicates corrupted input.
    """
    mesh, n = tri.mesh, tri.n
    table = all_crossings(tri)
    v1_ids = list(mesh.vertices())
    vid = {v: k for k, v in enumerate(v1_ids)}
    pos0 = [tri.vpos[v] for v in v1_ids]
    pos1 = [SurfacePoint.vertex(v) for v in v1_ids]
    kind = ["T1-vertex"] * len(v1_ids)
    xid = {}
    for key in sorted(table):
        e, _ = key
        hb, u, v = table[key]
        e0 = hb >> 1
        t0 = u if hb & 1 == 0 else 1.0 - u
        xid[key] = len(pos0)
        pos0.append(SurfacePoint.edge(e0, t0, on="T0"))
        pos1.append(SurfacePoint.edge(e, v))
        kind.append("crossing")
    total_n = sum(npos(n[e]) for e in mesh.edges())
    if len(pos0) != len(v1_ids) + total_n:
        raise IntegrityError(f"common subdivision has {len(pos0)} vertices, expected "
                             f"{len(v1_ids) + total_n}")

    def xinfo(s, q):
        hb, u, v = table[_crossing_key(n, s, q)]
        if s & 1:
            return 1.0 - v, hb ^ 1, 1.0 - u
        return v, hb, u

    polygons, corners2d, face0, face1, nonconvex = [], [], [], [], []
    n_arcs = 0
    for f in mesh.faces():
        fr = face_regions(mesh, n, f)
        n_arcs += fr.n_arcs()
        _, P = layout_face(mesh, tri.length, fr.halfedges[0])
        for label in fr.regions:
            pts, faces0, _ = tri.region_geometry(fr, label, P, xinfo)
            ids = []
            for corner, _side in fr.regions[label]:
                if corner[0] == "v":
                    ids.append(vid[mesh.he_vertex[corner[1]]])
                else:
                    ids.append(xid[_crossing_key(n, corner[1], corner[2])])
            F0 = Counter(faces0).most_common(1)[0][0]
            if len(set(faces0)) > 1:
                log.debug("face %d region %s: corners disagree on T0 face %s", f, label, faces0)
            if not _is_convex(pts):
                nonconvex.append(len(polygons))
            polygons.append(ids)
            corners2d.append(pts)
            face0.append(F0)
            face1.append(f)
    n_edges = sum(npos(n[e]) + 1 for e in mesh.edges()) + n_arcs
    S = CommonSubdivision(polygons, corners2d, pos0, pos1, kind, face0, face1, v1_ids,
                          tri.mesh0.n_vertices(), n_edges, tri.positions, nonconvex)
    sides = sum(len(p) for p in polygons)
    n_bdry = sum(npos(n[e]) + 1 for e in mesh.edges() if mesh.is_boundary_edge(e))
    if sides != 2 * n_edges - n_bdry:
        raise IntegrityError(f"polygon sides {sides} do not match {n_edges} edges")
    chi0 = tri.mesh0.n_vertices() - tri.mesh0.n_edges() + tri.mesh0.n_faces()
    if S.euler_characteristic() != chi0:
        raise IntegrityError(f"Euler characteristic {S.euler_characteristic()} != {chi0}")
    if nonconvex:
        log.info("%d common subdivision faces are not strictly convex", len(nonconvex))
    return S


def _is_convex(pts):
    m = len(pts)
    scale = max(np.ptp(pts, axis=0).max(), 1e-300) ** 2
    for k in range(m):
        a, b, c = pts[k], pts[(k + 1) % m], pts[(k + 2) % m]
        cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cr <= CONVEX_TOL * scale:
            return False
    return True


# ---------------------------------------------------------------------------
# operators


def _rows(points, simplex_vertices, n_cols, col_of):
    rows, cols, vals = [], [], []
    for i, p in enumerate(points):
        for v, w in zip(simplex_vertices(p), p.bary):
            if w != 0.0:
                rows.append(i)
                cols.append(col_of(v))
                vals.append(w)
    M = sp.coo_matrix((vals, (rows, cols)), shape=(len(points), n_cols)).tocsr()
    M.sum_duplicates()
    return M


def _simplex_vertices(mesh):
    def verts(p):
        if p.kind == "vertex":
            return (p.index,)
        if p.kind == "edge":
            return (mesh.tail(2 * p.index), mesh.tip(2 * p.index))
        return tuple(mesh.tail(h) for h in mesh.face_halfedges(p.index))
    return verts


def interpolation_matrices(S, tri):
    """Sparse matrices evaluating piecewise-linear functions at S vertices.

    Returns
    -------
    P0 : csr_matrix, shape (|V_S|, |V0|)
    P1 : csr_matrix, shape (|V_S|, |V1|)
        Columns ordered by ``S.v1_ids``.
    """
    col1 = {v: k for k, v in enumerate(S.v1_ids)}
    P0 = _rows(S.pos0, _simplex_vertices(tri.mesh0), S.n_v0, lambda v: v)
    P1 = _rows(S.pos1, _simplex_vertices(tri.mesh), len(S.v1_ids), col1.__getitem__)
    return P0, P1


def _triangle_mass(a, b, c):
    area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return area, area / 12.0 * (np.ones((3, 3)) + np.eye(3))


def mass_matrix(S, return_flags=False):
    """Galerkin mass matrix of piecewise-linear hat functions on S.

    Each polygon is fan-triangulated from its lowest-id corner.  Polygons
    with area below ``1e-14`` times the total use a lumped mass instead.
    """
    areas = []
    for pts in S.corners2d:
        x, y = pts[:, 0], pts[:, 1]
        areas.append(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    total = float(sum(areas))
    rows, cols, vals = [], [], []
    flagged = []
    for f, (ids, pts) in enumerate(zip(S.polygons, S.corners2d)):
        if areas[f] < DEGENERATE_REL * total:
            flagged.append(f)
            for i in ids:
                rows.append(i)
                cols.append(i)
                vals.append(areas[f] / len(ids))
            continue
        s = int(np.argmin(ids))
        order = [(s + k) % len(ids) for k in range(len(ids))]
        for k in range(1, len(ids) - 1):
            tri_idx = (order[0], order[k], order[k + 1])
            _, Mloc = _triangle_mass(*(pts[t] for t in tri_idx))
            g = [ids[t] for t in tri_idx]
            for a in range(3):
                for b in range(3):
                    rows.append(g[a])
                    cols.append(g[b])
                    vals.append(Mloc[a, b])
    nS = S.n_vertices
    M = sp.coo_matrix((vals, (rows, cols)), shape=(nS, nS)).tocsr()
    if flagged:
        log.warning("lumped mass used for %d degenerate polygons", len(flagged))
    return (M, flagged) if return_flags else M


class L2Transfer:
    """Prefactored L2-optimal transfer between the function spaces of T0 and T1.

    Parameters
    ----------
    tri : IntrinsicTriangulation
    S : CommonSubdivision, optional
        Built on demand.
    iterative_above : int
        Systems larger than this use conjugate gradients instead of a
        direct factorization.
    """

    def __init__(self, tri, S=None, iterative_above=200_000):
        self.S = build_common_subdivision(tri) if S is None else S
        self.P0, self.P1 = interpolation_matrices(self.S, tri)
        self.M = mass_matrix(self.S)
        self.iterative_above = iterative_above
        self._solvers = {}

    def _solver(self, which):
        if which not in self._solvers:
            P = self.P0 if which == 0 else self.P1
            A = (P.T @ self.M @ P).tocsc()
            if A.shape[0] > self.iterative_above:
                def solve(b, A=A):
                    x, info = spla.cg(A, b, rtol=1e-12, maxiter=10 * A.shape[0])
                    if info != 0:
                        raise IntegrityError("normal equations did not converge")
                    return x
            else:
                try:
                    solve = spla.splu(A).solve
                except RuntimeError as err:
                    raise IntegrityError(f"singular normal matrix: {err}") from None
            self._solvers[which] = solve
        return self._solvers[which]

    def to_t0(self, f1):
        """Best approximation on T0 of values ``f1`` given at ``S.v1_ids``."""
        b = self.P0.T @ (self.M @ (self.P1 @ np.asarray(f1, dtype=float)))
        return self._solver(0)(b)

    def to_t1(self, f0):
        """Best approximation on T1 of values ``f0`` given on T0 vertices."""
        b = self.P1.T @ (self.M @ (self.P0 @ np.asarray(f0, dtype=float)))
        return self._solver(1)(b)

    def residual(self, f1, f0):
        """M_S-norm of ``P1 f1 - P0 f0``."""
        d = self.P1 @ np.asarray(f1, float) - self.P0 @ np.asarray(f0, float)
        return float(np.sqrt(max(d @ (self.M @ d), 0.0)))


def transfer_l2(tri, values, direction="T1->T0", S=None):
    """One-shot L2-optimal transfer.  ``direction`` is ``"T1->T0"`` or ``"T0->T1"``."""
    op = L2Transfer(tri, S)
    if direction == "T1->T0":
        return op.to_t0(values)
    if direction == "T0->T1":
        return op.to_t1(values)
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# export


def subdivision_positions(S, tri):
    """Extrinsic positions of S vertices interpolated from T0 positions."""
    if tri.positions is None:
        raise ValueError("T0 has no extrinsic positions")
    P0, _ = interpolation_matrices(S, tri)
    return P0 @ tri.positions


def write_subdivision_obj(S, tri, path, provenance_path=None):
    """Write S as an OBJ polygon mesh and optionally a JSON provenance sidecar."""
    X = subdivision_positions(S, tri)
    if X.shape[1] == 2:
        X = np.column_stack([X, np.zeros(len(X))])
    with open(path, "w") as fh:
        fh.write("# common subdivision\n")
        for x in X:
            fh.write(f"v {x[0]:.17g} {x[1]:.17g} {x[2]:.17g}\n")
        for poly in S.polygons:
            fh.write("f " + " ".join(str(i + 1) for i in poly) + "\n")
    if provenance_path is not None:
        data = {
            "vertices": [{"kind": k,
                          "t0": [p.kind, p.index, list(p.bary)],
                          "t1": [q.kind, q.index, list(q.bary)]}
                         for k, p, q in zip(S.kind, S.pos0, S.pos1)],
            "faces": [{"t0_face": int(a), "t1_face": int(b)} for a, b in zip(S.face0, S.face1)],
        }
        with open(provenance_path, "w") as fh:
            json.dump(data, fh)
