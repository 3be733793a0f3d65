"""The intrinsic triangulation type and its local mutations.

:class:`IntrinsicTriangulation` keeps T1 connectivity, edge lengths, normal
coordinates, roundabouts and the T0 location of every T1 vertex in sync
across flips, face splits, edge splits and removal of inserted vertices.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from . import tracing
from .geometry import (GeometryError, SurfacePoint, TangentVector, corner_angles,
                       displacement_length, layout_face, mollify_delta,
                       trace_exponential_map, triangle_area)
from .integer_coords import (CombinatorialCrossing, IntegrityError, cutting, emanating,
                             face_regions, nneg, npos, roundabout_step,
                             validate_integer_coords)
from .mesh_core import BOUNDARY, HalfedgeMesh

log = logging.getLogger(__name__)

ANGLE_TOL = 1e-9
SIDE_TOL = 1e-12
# faces with area below this times the squared longest side count as flat
FLAT_AREA = 1e-14


class RemovalError(RuntimeError):
    """An inserted vertex could not be removed; the triangulation is unchanged."""


class OutOfSurfaceError(RuntimeError):
    """A tangent vector walk left the surface; nothing was changed."""


class IntrinsicTriangulation:
    """Intrinsic triangulation T1 over a fixed input triangulation T0.

    Parameters
    ----------
    mesh0 : HalfedgeMesh
        Connectivity of T0.  A compacted copy is stored.
    lengths0 : array_like
        T0 edge lengths indexed by edge id.
    positions : array_like, optional
        Extrinsic T0 vertex positions, only used for export.

    Attributes
    ----------
    mesh : HalfedgeMesh
        T1 connectivity; original vertices keep their T0 ids.
    length, n : list
        Edge lengths and normal coordinates of T1, indexed by edge id.
    r : list
        Roundabouts per T1 halfedge (``-1`` when the tail is inserted).
    vpos : list of SurfacePoint
        Location on T0 of every T1 vertex.
    """

    def __init__(self, mesh0, lengths0, positions=None):
        mesh0 = mesh0.copy()
        if not all(mesh0.v_alive) or not all(mesh0.e_alive) or not all(mesh0.f_alive):
            mesh0.compact()
        self.mesh0 = mesh0
        self.len0 = np.asarray(lengths0, dtype=float).copy()
        if len(self.len0) != mesh0.n_edges():
            raise ValueError("need one length per T0 edge")
        if np.any(self.len0 <= 0):
            raise GeometryError("edge lengths must be positive")
        self.positions = None if positions is None else np.asarray(positions, dtype=float)
        nv = len(mesh0.v_he)
        self.out0 = [mesh0.outgoing(v) for v in range(nv)]
        self.deg0 = [len(o) for o in self.out0]
        self.idx0 = [0] * mesh0.n_halfedges
        for v in range(nv):
            for k, h in enumerate(self.out0[v]):
                self.idx0[h] = k
        self.mesh = mesh0.copy()
        self.length = [float(x) for x in self.len0]
        self.n = [-1] * mesh0.n_edges()
        self.r = list(self.idx0)
        self.vpos = [SurfacePoint.vertex(v, on="T0") for v in range(nv)]
        self.original = [True] * nv
        self.n_original = nv
        self.stats = {"flips": 0, "face_splits": 0, "edge_splits": 0, "removals": 0}

    @classmethod
    def from_positions(cls, faces, positions):
        mesh = HalfedgeMesh.from_faces(faces, len(positions))
        X = np.asarray(positions, dtype=float)
        L = np.array([np.linalg.norm(X[mesh.tip(2 * e)] - X[mesh.tail(2 * e)])
                      for e in range(mesh.n_edges())])
        return cls(mesh, L, X)

    @classmethod
    def from_face_lengths(cls, faces, face_lengths):
        """Build from faces and per-face side lengths ``(l_01, l_12, l_20)``.

        Glued sides must receive equal lengths.
        """
        mesh = HalfedgeMesh.from_faces(faces)
        L = np.full(mesh.n_edges(), np.nan)
        for f, ls in enumerate(face_lengths):
            for h, x in zip(mesh.face_halfedges(f), ls):
                if not np.isnan(L[h >> 1]) and abs(L[h >> 1] - x) > 1e-12 * max(x, 1.0):
                    raise GeometryError(f"glued sides of edge {h >> 1} have different lengths")
                L[h >> 1] = x
        return cls(mesh, L)

    def copy(self):
        other = object.__new__(IntrinsicTriangulation)
        other.__dict__.update(self.__dict__)
        other.mesh = self.mesh.copy()
        for name in ("length", "n", "r", "vpos", "original"):
            setattr(other, name, list(getattr(self, name)))
        other.stats = dict(self.stats)
        return other

    # ------------------------------------------------------------------
    # bookkeeping

    def _grow(self):
        ne = len(self.mesh.e_alive)
        nh = self.mesh.n_halfedges
        self.length += [0.0] * (ne - len(self.length))
        self.n += [0] * (ne - len(self.n))
        self.r += [-1] * (nh - len(self.r))
        nv = len(self.mesh.v_alive)
        self.original += [False] * (nv - len(self.original))
        self.vpos += [None] * (nv - len(self.vpos))

    def _update_roundabout(self, h):
        v = self.mesh.he_vertex[h]
        if not self.original[v]:
            self.r[h] = -1
            return
        g = self.mesh.rotate_cw(h)
        self.r[h] = (self.r[g] + roundabout_step(self.mesh, self.n, g)) % self.deg0[v]

    def _reset_roundabouts(self, v):
        """Recompute all roundabouts at boundary vertex ``v`` from its exterior halfedge."""
        if not self.original[v]:
            return
        start = next(h for h in self.mesh.outgoing(v) if self.mesh.he_face[h] == BOUNDARY)
        self.r[start] = 0
        h = self.mesh.rotate_ccw(start)
        while h != start:
            self._update_roundabout(h)
            h = self.mesh.rotate_ccw(h)

    def face_lengths(self, f):
        return tuple(self.length[h >> 1] for h in self.mesh.face_halfedges(f))

    def face_angles(self, f):
        return corner_angles(*self.face_lengths(f))

    def corner_angle(self, h):
        """Angle of face(h) at tail(h)."""
        hs = (h, self.mesh.he_next[h], self.mesh.he_prev[h])
        return corner_angles(*(self.length[g >> 1] for g in hs))[0]

    def is_flat_face(self, f):
        ls = self.face_lengths(f)
        return triangle_area(*ls) <= FLAT_AREA * max(ls) ** 2

    def face_area(self, f):
        return triangle_area(*self.face_lengths(f))

    def vertex_angle_sum(self, v):
        return sum(self.corner_angle(h) for h in self.mesh.outgoing(v)
                   if self.mesh.he_face[h] != BOUNDARY)

    def angle_sum0(self, v):
        """Cone angle of original vertex ``v`` measured on T0."""
        total = 0.0
        m0 = self.mesh0
        for h in self.out0[v]:
            if m0.he_face[h] == BOUNDARY:
                continue
            ls = [self.len0[g >> 1] for g in (h, m0.he_next[h], m0.he_prev[h])]
            total += corner_angles(*ls)[0]
        return total

    def sum_crossings(self):
        return sum(npos(self.n[e]) for e in self.mesh.edges())

    # ------------------------------------------------------------------
    # mollification

    def mollify(self, eps_rel=1e-5):
        """Add one constant to every T0 and T1 length if some face is near-degenerate.

        Returns the constant that was added (0 if nothing changed).
        """
        edges = self.mesh.edges()
        L = np.array([self.length[e] for e in edges])
        pos = {e: k for k, e in enumerate(edges)}
        fe = [[pos[h >> 1] for h in self.mesh.face_halfedges(f)] for f in self.mesh.faces()]
        delta = mollify_delta(L, fe, eps_rel)
        if self.mesh.n_faces() == self.mesh0.n_faces():
            fe0 = [[h >> 1 for h in self.mesh0.face_halfedges(f)] for f in self.mesh0.faces()]
            delta = max(delta, mollify_delta(self.len0, fe0, eps_rel))
        if delta > 0:
            self.len0 = self.len0 + delta
            for e in edges:
                self.length[e] += delta
            log.info("mollified all edge lengths by %.3g", delta)
        return delta

    # ------------------------------------------------------------------
    # validation

    def validate(self):
        """Run every structural check; returns ``(ok, message)``."""
        rep = self.mesh.validate()
        if not rep:
            return False, rep.message
        rep = validate_integer_coords(self.mesh, self.n, self.r, self.original, self.deg0)
        if not rep:
            return False, rep.message
        for v in self.mesh.vertices():
            sp = self.vpos[v]
            if sp is None or sp.on != "T0":
                return False, f"vertex {v} has no T0 position"
            if self.original[v] and (sp.kind != "vertex" or sp.index != v):
                return False, f"original vertex {v} moved"
            if min(sp.bary) < -1e-9:
                return False, f"vertex {v} has negative barycentric coordinates"
        for e in self.mesh.edges():
            if not self.length[e] > 0:
                return False, f"nonpositive length on edge {e}"
        return True, ""

    # ------------------------------------------------------------------
    # flips

    def _quad(self, e):
        h = 2 * e
        t = h + 1
        m = self.mesh
        return h, t, m.he_next[h], m.he_prev[h], m.he_next[t], m.he_prev[t]

    def _flip_check(self, e, flat_vertex=None, tol=ANGLE_TOL):
        m = self.mesh
        h, t, hb, hc, tb, tc = self._quad(e)
        fa, fb = m.he_face[h], m.he_face[t]
        if fa == BOUNDARY or fb == BOUNDARY or fa == fb:
            return False
        i, j = m.he_vertex[h], m.he_vertex[t]
        k, l = m.he_vertex[hc], m.he_vertex[tc]
        deg = {}
        for v in (i, j, k, l):
            deg.setdefault(v, m.degree(v))
        for v in (i, j):
            deg[v] -= 1
        for v in (k, l):
            deg[v] += 1
        if deg[i] < 1 or deg[j] < 1:
            return False
        ang_i = self.corner_angle(h) + self.corner_angle(tb)
        ang_j = self.corner_angle(hb) + self.corner_angle(t)
        for v, ang in ((i, ang_i), (j, ang_j)):
            limit = math.pi + tol if v == flat_vertex else math.pi - tol
            if not ang < limit:
                return False
        return True

    def is_flippable(self, e, tol=ANGLE_TOL):
        """Whether edge ``e`` can be flipped (degrees stay positive, quad convex)."""
        if self.mesh.is_boundary_edge(e):
            raise ValueError(f"edge {e} is a boundary edge")
        return self._flip_check(e, tol=tol)

    def _flipped_normal_coordinate(self, e):
        m, n = self.mesh, self.n
        h, t, hb, hc, tb, tc = self._quad(e)
        nij = npos(n[e])
        ciA, cjA, ckA = cutting(m, n, h), cutting(m, n, hb), cutting(m, n, hc)
        eiA, ejA, ekA = emanating(m, n, h), emanating(m, n, hb), emanating(m, n, hc)
        cjB, ciB, clB = cutting(m, n, t), cutting(m, n, tb), cutting(m, n, tc)
        ejB, eiB, elB = emanating(m, n, t), emanating(m, n, tb), emanating(m, n, tc)
        # a curve from k to l crosses ij once and becomes the new edge
        if ekA and elB and max(ciA, ciB) < min(ciA + ekA, ciB + elB):
            return -1
        return (ckA + clB + eiA + eiB + ejA + ejB + nneg(n[e])
                + max(0, ciA + cjB - nij) + max(0, ciB + cjA - nij))

    def _flipped_length(self, e):
        h, t, hb, hc, tb, tc = self._quad(e)
        _, PA = layout_face(self.mesh, self.length, h)
        _, PB = layout_face(self.mesh, self.length, t, PA[1], PA[0])
        return float(np.linalg.norm(PA[2] - PB[2]))

    def flip_edge(self, e, force=False, flat_vertex=None):
        """Flip edge ``e``; returns ``e`` (now joining the two opposite vertices).

        Raises
        ------
        ValueError
            If the edge is not flippable (unless ``force``).
        """
        if not force:
            if self.mesh.is_boundary_edge(e):
                raise ValueError(f"edge {e} is a boundary edge")
            if not self._flip_check(e, flat_vertex):
                raise ValueError(f"edge {e} is not flippable")
        new_n = self._flipped_normal_coordinate(e)
        new_l = self._flipped_length(e)
        h = self.mesh.flip(e)
        self.n[e] = new_n
        self.length[e] = new_l
        self._update_roundabout(h)
        self._update_roundabout(h ^ 1)
        self.stats["flips"] += 1
        return e

    # ------------------------------------------------------------------
    # face split

    def _vertex_t0(self, g, m):
        """T0 face and barycentric coordinates of vertex corner ``("v", g, m)``."""
        mesh, n = self.mesh, self.n
        X = mesh.he_vertex[g]
        d = None
        if m > 0:
            d = ("e", g, m - 1)
        elif n[g >> 1] < 0:
            d = ("s", g)
        else:
            w = mesh.rotate_cw(g)
            while True:
                e = emanating(mesh, n, w)
                if e > 0:
                    d = ("e", w, e - 1)
                    break
                if n[w >> 1] < 0:
                    d = ("s", w)
                    break
                if w == g:
                    break
                w = mesh.rotate_cw(w)
        if d is None:
            sp = self.vpos[X]
            if sp.kind != "face":
                raise IntegrityError(f"vertex {X} lies on T0 curves but none is visible")
            return sp.index, np.array(sp.bary)
        if self.original[X]:
            hb = tracing.t0_halfedge_of_direction(self, X, d)
            t = 0.0
        else:
            seg = tracing.follow(self, X, d)
            hb, t = seg.t0_halfedge, seg.u_start
        return self._t0_on_halfedge(hb, t)

    def _t0_on_halfedge(self, hb, t):
        m0 = self.mesh0
        F0 = m0.he_face[hb]
        if F0 == BOUNDARY:
            raise IntegrityError(f"region lies outside T0 along halfedge {hb}")
        hs0 = m0.face_halfedges(F0)
        s = hs0.index(hb)
        bary = np.zeros(3)
        bary[s] = 1.0 - t
        bary[(s + 1) % 3] = t
        return F0, bary

    def region_geometry(self, fr, label, P, xinfo):
        """Planar T1 positions and T0 locations of the corners of a region.

        Parameters
        ----------
        fr : FaceRegions
        label : tuple
            Region key in ``fr.regions``.
        P : ndarray (3, 2)
            Layout of the tails of ``fr.halfedges``.
        xinfo : callable
            ``xinfo(s, q) -> (v, hb_out, u_out)`` for the crossing with index
            ``q`` on face halfedge ``s``: its parameter along ``s``, the T0
            halfedge crossing ``s`` outward and the parameter along it.

        Returns
        -------
        pts : ndarray (rho, 2)
        faces0 : list of int
        bary0 : list of ndarray (3,)
        """
        hs = fr.halfedges
        pts, faces0, bary0 = [], [], []
        for corner, side in fr.regions[label]:
            if corner[0] == "v":
                _, g, m = corner
                pts.append(P[hs.index(g)])
                F0, b = self._vertex_t0(g, m)
            else:
                _, s, q = corner
                a = hs.index(s)
                v, hb_out, u_out = xinfo(s, q)
                pts.append(P[a] + v * (P[(a + 1) % 3] - P[a]))
                if side == "arc":
                    F0, b = self._t0_on_halfedge(hb_out ^ 1, 1.0 - u_out)
                else:
                    F0, b = self._t0_on_halfedge(hb_out, u_out)
            faces0.append(F0)
            bary0.append(b)
        return np.array(pts), faces0, bary0

    def _face_crossing_table(self, hs):
        """Crossing data for the sides of one face, by extracting each curve once."""
        n = self.n
        table = {}
        for s in hs:
            for q in range(npos(n[s >> 1])):
                if (s, q) in table:
                    continue
                seg = tracing.extract_curve(self, CombinatorialCrossing(s, q))
                for z in seg.crossings:
                    U = seg.global_u(z.u)
                    hb = seg.t0_halfedge
                    nz = npos(n[z.halfedge >> 1])
                    table[(z.halfedge, z.p)] = (z.v, hb, U)
                    table[(z.halfedge ^ 1, nz - 1 - z.p)] = (1.0 - z.v, hb ^ 1, 1.0 - U)
        return table

    def classify_point(self, f, bary):
        """Normal coordinates of spokes from a point of face ``f`` to its corners.

        Returns ``(fr, n_p, P, x, table)`` where ``n_p`` is ordered like
        ``fr.halfedges`` (i, j, k).
        """
        m = self.mesh
        fr = face_regions(m, self.n, f)
        hs = fr.halfedges
        canon = m.face_halfedges(f)
        rot = canon.index(hs[0])
        u = np.roll(np.asarray(bary, dtype=float), -rot)
        _, P = layout_face(m, self.length, hs[0])
        x = u @ P
        table = self._face_crossing_table(hs)
        scale = max(self.length[h >> 1] for h in hs) ** 2

        def pos(s, q):
            a = hs.index(s)
            v = table[(s, q)][0]
            return P[a] + v * (P[(a + 1) % 3] - P[a])

        def inside(A, B, C):
            tol = SIDE_TOL * scale
            d1 = _orient(A, B, x)
            d2 = _orient(B, C, x)
            d3 = _orient(C, A, x)
            return d1 >= -tol and d2 >= -tol and d3 >= -tol

        N, c, ek = fr.n, fr.c, fr.e_k
        nu = [0, 0, 0]
        sigma = [0, 0, 0]
        for a in range(3):
            nu[a] = c[a]
            for xi in range(c[a]):
                A = P[a]
                B = pos(hs[a], xi)
                C = pos(hs[a - 1], N[a - 1] - 1 - xi)
                if inside(A, B, C):
                    nu[a] = xi
                    break
            sigma[a] = c[a] - nu[a]
        # only one corner may keep slack; ties go to the earlier corner
        best = max(range(3), key=lambda a: (sigma[a], -a))
        sigma = [s if a == best else 0 for a, s in enumerate(sigma)]
        if ek > 0:
            if nu[0] < c[0]:
                nu[1] += ek
            elif nu[1] < c[1]:
                nu[0] += ek
            else:
                eps = ek
                for xi in range(ek):
                    if inside(P[0], pos(hs[0], c[0] + xi), P[2]):
                        eps = xi
                        break
                nu[0] += eps
                nu[1] += ek - eps
        n_p = tuple(nu[a] + sigma[(a + 1) % 3] + sigma[(a + 2) % 3] for a in range(3))
        return fr, n_p, P, x, table

    def locate_on_t0(self, fr, label, P, x, xinfo):
        pts, faces0, bary0 = self.region_geometry(fr, label, P, xinfo)
        F0 = max(set(faces0), key=faces0.count)
        if len(set(faces0)) > 1:
            log.warning("region corners disagree on their T0 face: %s", faces0)
        keep = [k for k, F in enumerate(faces0) if F == F0]
        u, flagged = recover_barycentric(pts[keep], np.array([bary0[k] for k in keep]), x)
        if flagged:
            log.debug("barycentric recovery fell back to projection")
        return SurfacePoint.face(F0, u, on="T0")

    def split_face(self, f, bary):
        """Insert a vertex at barycentric point ``bary`` of face ``f``.

        Returns the new vertex id.

        Raises
        ------
        ValueError
            If ``bary`` is not strictly inside the face.
        GeometryError
            If the face has zero area, so interior points have no unique
            location on T0.
        """
        bary = np.asarray(bary, dtype=float)
        if len(bary) != 3 or abs(bary.sum() - 1) > 1e-9 or np.any(bary <= 0):
            raise ValueError(f"point {bary} is not strictly inside face {f}")
        if self.is_flat_face(f):
            raise GeometryError(f"face {f} is flat")
        return self._split_face(f, bary)

    def _split_face(self, f, bary):
        m = self.mesh
        fr, n_p, P, x, table = self.classify_point(f, bary)
        hs = fr.halfedges

        def xinfo(s, q):
            return table[(s, q)]

        label = fr.locate(n_p)
        sp0 = self.locate_on_t0(fr, label, P, x, xinfo)
        canon = m.face_halfedges(f)
        ls = self.face_lengths(f)
        spoke_len = []
        for a in range(3):
            du = -bary.copy()
            du[a] += 1.0
            spoke_len.append(displacement_length(ls[0], ls[1], ls[2], du))
        n_by_vertex_slot = {}
        rot = canon.index(hs[0])
        for a in range(3):
            n_by_vertex_slot[(a + rot) % 3] = n_p[a]
        p, spokes = m.split_face(f)
        self._grow()
        for a, g in enumerate(spokes):
            self.n[g >> 1] = n_by_vertex_slot[a]
            self.length[g >> 1] = spoke_len[a]
        self.vpos[p] = sp0
        self.original[p] = False
        for g in spokes:
            self.r[g] = -1
            self._update_roundabout(g ^ 1)
        self.stats["face_splits"] += 1
        return p

    # ------------------------------------------------------------------
    # edge split

    def split_edge(self, h, t):
        """Insert a vertex on halfedge ``h`` at parameter ``t`` from its tail.

        Returns the new vertex id.
        """
        if not 0.0 < t < 1.0:
            raise ValueError(f"split parameter {t} not in (0, 1)")
        m = self.mesh
        if m.he_face[h] == BOUNDARY:
            h, t = h ^ 1, 1.0 - t
        e = h >> 1
        if self.n[e] >= 0:
            if self.is_flat_face(m.he_face[h]):
                if m.he_face[h ^ 1] == BOUNDARY or self.is_flat_face(m.he_face[h ^ 1]):
                    raise GeometryError(f"both faces of edge {e} are flat")
                h, t = h ^ 1, 1.0 - t
            f = m.he_face[h]
            canon = m.face_halfedges(f)
            a = canon.index(h)
            bary = np.zeros(3)
            bary[a] = 1.0 - t
            bary[(a + 1) % 3] = t
            # the flip below lays out the flat triangle (i, j, p), so the new
            # spoke into the twin face is measured in that face instead
            tw = h ^ 1
            if m.he_face[tw] != f:
                g, du = tw, (t, 1.0 - t, -1.0)
            elif m.he_next[h] == tw:
                # self-glued edge: the spoke becomes a loop between the two
                # copies of p, one on each side of the glued edge
                g, du = h, (1.0 - t, 0.0, t - 1.0)
            else:
                g, du = h, (0.0, t, -t)
            ls = (self.length[g >> 1], self.length[m.he_next[g] >> 1],
                  self.length[m.he_prev[g] >> 1])
            spoke = displacement_length(*ls, du)
            p = self._split_face(f, bary)
            self.flip_edge(e, force=True)
            self.length[e] = spoke
            self.stats["face_splits"] -= 1
            self.stats["flips"] -= 1
            self.stats["edge_splits"] += 1
            return p
        return self._split_shared_edge(h, t)

    def _split_shared_edge(self, h, t):
        m = self.mesh
        glued = m.he_face[h] == m.he_face[h ^ 1]
        if glued and m.he_next[h] != h ^ 1:
            h, t = h ^ 1, 1.0 - t
        e = h >> 1
        i = m.he_vertex[h]
        seg = tracing.follow(self, i, ("s", h))
        hb = seg.t0_halfedge
        u0 = seg.u_start + t * (seg.u_end - seg.u_start)
        te = u0 if hb & 1 == 0 else 1.0 - u0
        sp0 = SurfacePoint.edge(hb >> 1, te, on="T0")

        L = self.length[e]
        tw = h ^ 1
        sides = []
        for g, tt in ((h, t), (tw, 1.0 - t)):
            if m.he_face[g] == BOUNDARY:
                sides.append(None)
                continue
            ls = (self.length[g >> 1], self.length[m.he_next[g] >> 1],
                  self.length[m.he_prev[g] >> 1])
            lk = displacement_length(*ls, (1.0 - tt, tt, -1.0))
            nk = max(self.n[m.he_next[g] >> 1], self.n[m.he_prev[g] >> 1], 0)
            sides.append((lk, nk))
        if glued:
            # the second spoke is a loop joining the two copies of p; like the
            # first it crosses the curves leaving the apex through the third side
            ls = (L, L, self.length[m.he_prev[h] >> 1])
            sides[1] = (displacement_length(*ls, (1.0 - t, 0.0, t - 1.0)), sides[0][1])
        r_old_twin = self.r[tw]
        p, h2, spokes = m.split_edge(h)
        self._grow()
        self.length[e] = t * L
        self.length[h2 >> 1] = (1.0 - t) * L
        self.n[h2 >> 1] = -1
        self.r[h2 ^ 1] = r_old_twin
        self.r[tw] = -1
        self.r[h2] = -1
        k = 0
        for side in sides:
            if side is None:
                continue
            g = spokes[k]
            k += 1
            self.length[g >> 1], self.n[g >> 1] = side
            self.r[g] = -1
            self._update_roundabout(g ^ 1)
        self.vpos[p] = sp0
        self.original[p] = False
        self.stats["edge_splits"] += 1
        return p

    # ------------------------------------------------------------------
    # insertion at a surface point

    def insert_point(self, sp, snap=1e-9):
        """Insert a vertex at T1 surface point ``sp`` (face or edge)."""
        if sp.kind == "edge":
            return self.split_edge(2 * sp.index, sp.bary[1])
        if sp.kind != "face":
            raise ValueError("cannot insert at an existing vertex")
        b = np.asarray(sp.bary, dtype=float)
        small = [a for a in range(3) if b[a] < snap]
        if len(small) >= 2:
            raise ValueError("point coincides with a vertex")
        if small:
            a = small[0]
            hs = self.mesh.face_halfedges(sp.index)
            # side opposite corner a runs from corner a+1 to a+2
            g = hs[(a + 1) % 3]
            wa, wb = b[(a + 1) % 3], b[(a + 2) % 3]
            return self.split_edge(g, wb / (wa + wb))
        return self._split_face(sp.index, b)

    # ------------------------------------------------------------------
    # removal

    def remove_inserted_vertex(self, v, max_iter=None):
        """Remove inserted vertex ``v`` by flipping it down to a single fan.

        Raises
        ------
        ValueError
            If ``v`` is an original vertex.
        RemovalError
            If no flippable edge is found within ``max_iter`` flips.  All
            flips are undone first.
        """
        if self.original[v]:
            raise ValueError(f"vertex {v} is an original vertex")
        m = self.mesh
        boundary = m.is_boundary_vertex(v)
        target = 2 if boundary else 3
        if max_iter is None:
            max_iter = 10 * m.degree(v)
        done = []
        while m.degree(v) > target:
            if len(done) >= max_iter:
                self._undo(done)
                raise RemovalError(f"iteration cap hit while removing vertex {v}")
            e = self._pick_removal_flip(v)
            if e is None:
                self._undo(done)
                raise RemovalError(f"no flippable edge around vertex {v}")
            self.flip_edge(e, force=True)
            done.append(e)
        # a T0 curve through v along two spokes now runs along the outer
        # edge joining their tips, which was flattened onto it
        out = m.outgoing(v)
        shared = [g for g in out if self.n[g >> 1] < 0]
        merge = None
        if len(shared) == 2:
            # the outer edge is found from the face cycle, not from vertex
            # ids, which repeat in a Delta-complex
            ga, gb = shared
            lab = self.length[ga >> 1] + self.length[gb >> 1]
            for g, k in ((ga, gb), (gb, ga)):
                if m.he_face[g] != BOUNDARY and m.he_prev[g] == k ^ 1:
                    # o runs tip(g) -> tip(k) along the curve
                    merge = (m.he_next[g], self.r[g ^ 1], self.r[k ^ 1], lab)
                    break
        if boundary:
            m.remove_degree2_boundary_vertex(v)
        else:
            m.remove_degree3_vertex(v)
        if merge is not None:
            o, ra, rb, lab = merge
            self.n[o >> 1] = -1
            self.length[o >> 1] = lab
            self.r[o] = ra if self.original[m.he_vertex[o]] else -1
            self.r[o ^ 1] = rb if self.original[m.he_vertex[o ^ 1]] else -1
        self.stats["removals"] += 1
        self.stats["flips"] -= len(done)
        return True

    def _pick_removal_flip(self, v):
        m = self.mesh
        edges = sorted({h >> 1 for h in m.outgoing(v) if not m.is_boundary_edge(h >> 1)})
        for flat in (None, v):
            for e in edges:
                if self._flip_check(e, flat_vertex=flat):
                    return e
        return None

    def _undo(self, flipped):
        for e in reversed(flipped):
            self.flip_edge(e, force=True)
            self.stats["flips"] -= 2

    # ------------------------------------------------------------------
    # vertex motion

    def move_inserted_vertex(self, v, angle, distance):
        """Move inserted vertex ``v`` along a tangent vector; returns the new id.

        ``angle`` is measured counterclockwise from ``v_he[v]``.

        Raises
        ------
        OutOfSurfaceError
            If the walk leaves the surface; nothing is changed.
        """
        if self.original[v]:
            raise ValueError(f"vertex {v} is an original vertex")
        if distance == 0:
            return v
        res = trace_exponential_map(self.mesh, self.length,
                                    TangentVector(SurfacePoint.vertex(v), angle, distance))
        if res.hit_boundary:
            raise OutOfSurfaceError(f"moving vertex {v} leaves the surface")
        state = self.copy()
        try:
            p = self.insert_point(res.end)
            self.remove_inserted_vertex(v)
        except (RemovalError, ValueError):
            self.__dict__.update(state.__dict__)
            raise
        return p


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def recover_barycentric(corner_t1, corner_t0, query, tol=1e-9):
    """Map a point of a region on T1 to barycentric coordinates on T0.

    Parameters
    ----------
    corner_t1 : array_like (rho, 2) or (rho, 3)
        Region corners as planar positions or barycentric coordinates in
        the T1 face.
    corner_t0 : array_like (rho, 3)
        Barycentric coordinates of the same corners in one T0 face.
    query : array_like
        The point in the same representation as ``corner_t1``.

    Returns
    -------
    u : ndarray (3,)
        Barycentric coordinates on the T0 face.
    flagged : bool
        True when the system was rank deficient or inconsistent and a
        least-squares projection was used.
    """
    V = np.asarray(corner_t1, dtype=float)
    U = np.asarray(corner_t0, dtype=float)
    q = np.asarray(query, dtype=float)
    if V.shape[1] == 2:
        A = np.vstack([V.T, np.ones(len(V))])
        rhs = np.append(q, 1.0)
    else:
        A = V.T
        rhs = q
    xi, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = np.linalg.norm(A @ xi - rhs)
    scale = max(np.abs(A).max(), 1.0)
    flagged = rank < 3 or resid > tol * scale
    u = U.T @ xi
    u = np.clip(u, 0.0, None)
    s = u.sum()
    if s <= 0:
        u = U.mean(axis=0)
        flagged = True
    else:
        u = u / s
    return u, flagged
