"""Halfedge connectivity for oriented Delta-complex triangle meshes.

Halfedges are allocated in twin pairs, so ``twin(h) == h ^ 1`` and the edge
of a halfedge is ``h >> 1``.  Exterior (boundary) halfedges carry the face
marker ``BOUNDARY`` and are linked into ``next``/``prev`` cycles running along
each boundary loop, which keeps the vertex orbit ``twin(prev(h))`` uniform for
interior and boundary vertices alike.

Deleted elements are tombstoned; ids of live elements never change until
:meth:`HalfedgeMesh.compact` is called explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOUNDARY = -1


class MeshError(ValueError):
    """Malformed input connectivity.

    ``kind`` names the violated condition and ``simplex`` the offending
    element, e.g. ``("edge", (3, 7))`` or ``("vertex", 5)``.
    """

    def __init__(self, kind, simplex, message=None):
        self.kind = kind
        self.simplex = simplex
        super().__init__(message or f"{kind}: {simplex}")


@dataclass
class ValidationReport:
    ok: bool
    message: str = ""

    def __bool__(self):
        return self.ok


class HalfedgeMesh:
    """Mutable halfedge mesh; see module docstring for conventions."""

    def __init__(self):
        self.he_next: list[int] = []
        self.he_prev: list[int] = []
        self.he_twin: list[int] = []
        self.he_vertex: list[int] = []
        self.he_face: list[int] = []
        self.e_alive: list[bool] = []
        self.v_he: list[int] = []
        self.v_alive: list[bool] = []
        self.f_he: list[int] = []
        self.f_alive: list[bool] = []

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_faces(cls, faces, n_vertices=None):
        """Build a mesh from a list of oriented vertex triples.

        Halfedge ``(u, v)`` is glued to the unique halfedge ``(v, u)`` of
        another face slot; a self-loop ``(u, u)`` is never glued to itself.
        Unmatched halfedges become boundary.

        Raises
        ------
        MeshError
            On non-triangular faces, non-manifold or inconsistently
            oriented edges, isolated vertices and non-manifold vertices.
        """
        faces = [tuple(int(x) for x in f) for f in faces]
        for fi, f in enumerate(faces):
            if len(f) != 3:
                raise MeshError("non-triangular face", ("face", fi))
        if n_vertices is None:
            n_vertices = 1 + max((max(f) for f in faces), default=-1)

        slots = {}  # (u, v) -> list of face slot halfedge indices
        corner_he = []
        for fi, f in enumerate(faces):
            for c in range(3):
                u, v = f[c], f[(c + 1) % 3]
                key = (u, v)
                slots.setdefault(key, []).append(3 * fi + c)
                corner_he.append(key)

        for key, lst in slots.items():
            u, v = key
            if u != v and len(lst) + len(slots.get((v, u), ())) > 2:
                raise MeshError("non-manifold edge", ("edge", (min(u, v), max(u, v))),
                                f"edge {(u, v)} has more than two incident faces")
            if len(lst) > 1:
                if u == v:
                    raise MeshError("non-manifold edge", ("edge", key),
                                    f"self-loop {key} used by more than one face")
                raise MeshError("inconsistent orientation", ("edge", key),
                                f"halfedge {key} appears in {len(lst)} faces")

        mesh = cls()
        mesh.v_he = [-1] * n_vertices
        mesh.v_alive = [True] * n_vertices
        slot_to_he = {}
        for key, lst in slots.items():
            s = lst[0]
            if s in slot_to_he:
                continue
            u, v = key
            partner = None
            if u != v:
                rev = slots.get((v, u))
                if rev is not None:
                    partner = rev[0]
            h = mesh._new_edge()
            slot_to_he[s] = h
            if partner is not None:
                slot_to_he[partner] = h ^ 1
        # an edge (u,v)/(v,u) is in two faces at most by the uniqueness check

        for fi, f in enumerate(faces):
            hs = [slot_to_he[3 * fi + c] for c in range(3)]
            mesh.f_he.append(hs[0])
            mesh.f_alive.append(True)
            for c in range(3):
                h = hs[c]
                mesh.he_vertex[h] = f[c]
                mesh.he_face[h] = fi
                mesh.he_next[h] = hs[(c + 1) % 3]
                mesh.he_prev[h] = hs[(c + 2) % 3]
                if mesh.v_he[f[c]] < 0:
                    mesh.v_he[f[c]] = h

        # boundary halfedges: tail is the tip of the interior twin
        bnd_from = {}
        for h in range(len(mesh.he_face)):
            if mesh.he_face[h] == -2:
                t = h ^ 1
                tail = mesh.he_vertex[mesh.he_next[t]]
                mesh.he_vertex[h] = tail
                mesh.he_face[h] = BOUNDARY
                if tail in bnd_from:
                    raise MeshError("non-manifold vertex", ("vertex", tail),
                                    f"vertex {tail} lies on the boundary more than once")
                bnd_from[tail] = h
        for h in bnd_from.values():
            tip = mesh.he_vertex[h ^ 1]
            nxt = bnd_from[tip]
            mesh.he_next[h] = nxt
            mesh.he_prev[nxt] = h

        for v in range(n_vertices):
            if mesh.v_he[v] < 0:
                raise MeshError("isolated vertex", ("vertex", v))
            if v in bnd_from:
                mesh.v_he[v] = bnd_from[v]
        # a vertex whose orbit misses some of its halfedges is a pinch point
        counts = [0] * n_vertices
        for h in range(len(mesh.he_vertex)):
            counts[mesh.he_vertex[h]] += 1
        for v in range(n_vertices):
            if len(mesh.outgoing(v)) != counts[v]:
                raise MeshError("non-manifold vertex", ("vertex", v))
        return mesh

    def _new_edge(self):
        h = len(self.he_next)
        for k in (h, h + 1):
            self.he_next.append(-1)
            self.he_prev.append(-1)
            self.he_twin.append(k ^ 1)
            self.he_vertex.append(-1)
            self.he_face.append(-2)
        self.e_alive.append(True)
        return h

    def _new_vertex(self):
        self.v_he.append(-1)
        self.v_alive.append(True)
        return len(self.v_he) - 1

    def _new_face(self):
        self.f_he.append(-1)
        self.f_alive.append(True)
        return len(self.f_he) - 1

    def copy(self):
        other = HalfedgeMesh()
        for name, val in vars(self).items():
            setattr(other, name, list(val))
        return other

    # ------------------------------------------------------------------
    # queries

    @property
    def n_halfedges(self):
        return len(self.he_next)

    def n_vertices(self):
        return sum(self.v_alive)

    def n_edges(self):
        return sum(self.e_alive)

    def n_faces(self):
        return sum(self.f_alive)

    def euler_characteristic(self):
        return self.n_vertices() - self.n_edges() + self.n_faces()

    def vertices(self):
        return [v for v, a in enumerate(self.v_alive) if a]

    def edges(self):
        return [e for e, a in enumerate(self.e_alive) if a]

    def faces(self):
        return [f for f, a in enumerate(self.f_alive) if a]

    def halfedges(self):
        return [h for h in range(self.n_halfedges) if self.e_alive[h >> 1]]

    def twin(self, h):
        return h ^ 1

    def next(self, h):
        return self.he_next[h]

    def prev(self, h):
        return self.he_prev[h]

    def tail(self, h):
        return self.he_vertex[h]

    def tip(self, h):
        return self.he_vertex[h ^ 1]

    def face(self, h):
        return self.he_face[h]

    def edge(self, h):
        return h >> 1

    def opposite_vertex(self, h):
        """Vertex across from interior halfedge ``h`` in its face."""
        self._check_he(h)
        if self.he_face[h] == BOUNDARY:
            raise ValueError(f"halfedge {h} is a boundary halfedge")
        return self.he_vertex[self.he_prev[h]]

    def face_halfedges(self, f):
        h0 = self.f_he[f]
        h1 = self.he_next[h0]
        return h0, h1, self.he_next[h1]

    def face_vertices(self, f):
        return tuple(self.he_vertex[h] for h in self.face_halfedges(f))

    def rotate_ccw(self, h):
        """Next outgoing halfedge counterclockwise about ``tail(h)``."""
        return self.he_prev[h] ^ 1

    def rotate_cw(self, h):
        return self.he_next[h ^ 1]

    def outgoing(self, v, start=None):
        """Outgoing halfedges of ``v`` in counterclockwise order."""
        h0 = self.v_he[v] if start is None else start
        out = [h0]
        h = self.rotate_ccw(h0)
        guard = self.n_halfedges + 1
        while h != h0:
            out.append(h)
            h = self.rotate_ccw(h)
            guard -= 1
            if guard < 0:
                raise RuntimeError(f"vertex orbit of {v} does not close")
        return out

    def degree(self, v):
        """Number of incident edge ends; self-edges count twice."""
        self._check_v(v)
        return len(self.outgoing(v))

    def is_boundary_halfedge(self, h):
        return self.he_face[h] == BOUNDARY

    def is_boundary_edge(self, e):
        self._check_e(e)
        return (self.he_face[2 * e] == BOUNDARY) or (self.he_face[2 * e + 1] == BOUNDARY)

    def is_boundary_vertex(self, v):
        self._check_v(v)
        return any(self.he_face[h] == BOUNDARY for h in self.outgoing(v))

    def boundary_loops(self):
        """Boundary loops as lists of exterior halfedges in order."""
        seen = set()
        loops = []
        for h in self.halfedges():
            if self.he_face[h] != BOUNDARY or h in seen:
                continue
            loop = [h]
            seen.add(h)
            g = self.he_next[h]
            while g != h:
                loop.append(g)
                seen.add(g)
                g = self.he_next[g]
            loops.append(loop)
        return loops

    def queries(self, kind, idx):
        """Incidence summary for a vertex, edge or halfedge id."""
        if kind == "vertex":
            return {"degree": self.degree(idx), "is_boundary": self.is_boundary_vertex(idx)}
        if kind == "edge":
            return {"is_boundary": self.is_boundary_edge(idx),
                    "halfedges": (2 * idx, 2 * idx + 1)}
        if kind == "halfedge":
            self._check_he(idx)
            interior = self.he_face[idx] != BOUNDARY
            return {"twin": idx ^ 1, "next": self.he_next[idx], "prev": self.he_prev[idx],
                    "is_boundary": not interior or self.he_face[idx ^ 1] == BOUNDARY,
                    "opposite_vertex": self.opposite_vertex(idx) if interior else None}
        raise ValueError(f"unknown element kind {kind!r}")

    def _check_he(self, h):
        if not (0 <= h < self.n_halfedges) or not self.e_alive[h >> 1]:
            raise IndexError(f"invalid halfedge id {h}")

    def _check_e(self, e):
        if not (0 <= e < len(self.e_alive)) or not self.e_alive[e]:
            raise IndexError(f"invalid edge id {e}")

    def _check_v(self, v):
        if not (0 <= v < len(self.v_alive)) or not self.v_alive[v]:
            raise IndexError(f"invalid vertex id {v}")

    # ------------------------------------------------------------------
    # validation

    def validate(self):
        """Check all connectivity invariants; report the first violation."""
        nh = self.n_halfedges
        for h in range(nh):
            if not self.e_alive[h >> 1]:
                continue
            t = self.he_twin[h]
            if t == h or not (0 <= t < nh) or self.he_twin[t] != h:
                return ValidationReport(False, f"twin involution broken at halfedge {h}")
            if self.he_vertex[t] == -1 or not self.e_alive[t >> 1] or (t >> 1) != (h >> 1):
                return ValidationReport(False, f"twin of {h} lies on another edge")
            n = self.he_next[h]
            if not (0 <= n < nh) or not self.e_alive[n >> 1] or self.he_prev[n] != h:
                return ValidationReport(False, f"next/prev mismatch at halfedge {h}")
            if self.he_vertex[n] != self.he_vertex[t]:
                return ValidationReport(False, f"next of {h} does not start at its tip")
            f = self.he_face[h]
            if self.he_face[n] != f:
                return ValidationReport(False, f"face cycle of {h} mixes faces")
            if f != BOUNDARY:
                if not (0 <= f < len(self.f_alive)) or not self.f_alive[f]:
                    return ValidationReport(False, f"halfedge {h} references dead face {f}")
                if self.he_next[self.he_next[n]] != h:
                    return ValidationReport(False, f"non-triangular face at halfedge {h}")
            if not self.v_alive[self.he_vertex[h]]:
                return ValidationReport(False, f"halfedge {h} references dead vertex")
        for f, alive in enumerate(self.f_alive):
            if alive:
                h = self.f_he[f]
                if not self.e_alive[h >> 1] or self.he_face[h] != f:
                    return ValidationReport(False, f"face {f} has a stale halfedge")
        counts = {}
        for h in range(nh):
            if self.e_alive[h >> 1]:
                counts[self.he_vertex[h]] = counts.get(self.he_vertex[h], 0) + 1
        for v, alive in enumerate(self.v_alive):
            if not alive:
                continue
            h = self.v_he[v]
            if not (0 <= h < nh) or not self.e_alive[h >> 1] or self.he_vertex[h] != v:
                return ValidationReport(False, f"vertex {v} has a stale halfedge")
            try:
                orbit = self.outgoing(v)
            except RuntimeError:
                return ValidationReport(False, f"vertex orbit of {v} does not close")
            if len(orbit) != counts.get(v, 0):
                return ValidationReport(False, f"non-manifold vertex {v}")
        return ValidationReport(True)

    # ------------------------------------------------------------------
    # raw mutations; callers maintain attribute arrays

    def _link(self, a, b):
        self.he_next[a] = b
        self.he_prev[b] = a

    def _set_face(self, f, hs):
        for a, b in zip(hs, hs[1:] + hs[:1]):
            self._link(a, b)
            self.he_face[a] = f
        self.f_he[f] = hs[0]

    def flip(self, e):
        """Rotate edge ``e`` within its two faces.

        With ``h = 2e`` running i->j in face (i, j, k) and its twin in
        (j, i, l), afterwards ``h`` runs k->l in face (k, l, j) and the twin
        runs l->k in (l, k, i).
        """
        h = 2 * e
        t = h + 1
        fa, fb = self.he_face[h], self.he_face[t]
        if fa == BOUNDARY or fb == BOUNDARY or fa == fb:
            raise ValueError(f"edge {e} cannot be flipped combinatorially")
        hb, hc = self.he_next[h], self.he_prev[h]
        tb, tc = self.he_next[t], self.he_prev[t]
        i, j = self.he_vertex[h], self.he_vertex[t]
        k, l = self.he_vertex[hc], self.he_vertex[tc]
        self.he_vertex[h] = k
        self.he_vertex[t] = l
        self._set_face(fa, [h, tc, hb])
        self._set_face(fb, [t, hc, tb])
        if self.v_he[i] in (h, t):
            self.v_he[i] = tb
        if self.v_he[j] in (h, t):
            self.v_he[j] = hb
        return h

    def split_face(self, f):
        """Insert a vertex inside face ``f``; returns ``(p, [h_pi, h_pj, h_pk])``.

        Face ``f`` = (i, j, k) with ``f_he[f]`` = i->j becomes (i, j, p); the
        new faces are (j, k, p) and (k, i, p).  Returned halfedges point out
        of the new vertex.
        """
        ha, hb, hc = self.face_halfedges(f)
        i, j, k = (self.he_vertex[x] for x in (ha, hb, hc))
        p = self._new_vertex()
        ei, ej, ek = self._new_edge(), self._new_edge(), self._new_edge()
        # ei: i->p / p->i, etc.
        ip, pi = ei, ei ^ 1
        jp, pj = ej, ej ^ 1
        kp, pk = ek, ek ^ 1
        for hh, v in ((ip, i), (pi, p), (jp, j), (pj, p), (kp, k), (pk, p)):
            self.he_vertex[hh] = v
        f2, f3 = self._new_face(), self._new_face()
        self._set_face(f, [ha, jp, pi])
        self._set_face(f2, [hb, kp, pj])
        self._set_face(f3, [hc, ip, pk])
        self.v_he[p] = pi
        return p, [pi, pj, pk]

    def split_edge(self, h):
        """Insert a vertex ``p`` on the edge of halfedge ``h`` (i->j).

        Afterwards ``h`` runs i->p and a new halfedge ``h2`` runs p->j; the
        twins are p->i and j->p.  Returns ``(p, h2, [new spoke halfedges
        p->k, p->l])`` where k, l are the opposite vertices (l only when
        the twin side is interior).
        """
        t = h ^ 1
        if self.he_face[h] == self.he_face[t] != BOUNDARY:
            return self._split_self_glued_edge(h)
        i, j = self.he_vertex[h], self.he_vertex[t]
        p = self._new_vertex()
        e2 = self._new_edge()
        h2, t2 = e2, e2 ^ 1  # p->j, j->p
        self.he_vertex[h2] = p
        self.he_vertex[t2] = j
        self.he_vertex[t] = p
        spokes = []
        fa = self.he_face[h]
        fb = self.he_face[t]
        if fa != BOUNDARY:
            hn, hp = self.he_next[h], self.he_prev[h]
            k = self.he_vertex[hp]
            ek = self._new_edge()
            kp, pk = ek, ek ^ 1
            self.he_vertex[kp] = k
            self.he_vertex[pk] = p
            fnew = self._new_face()
            self._set_face(fa, [h, pk, hp])
            self._set_face(fnew, [h2, hn, kp])
            spokes.append(pk)
        if fb != BOUNDARY:
            tn, tp = self.he_next[t], self.he_prev[t]
            l = self.he_vertex[tp]
            el = self._new_edge()
            lp, pl = el, el ^ 1
            self.he_vertex[lp] = l
            self.he_vertex[pl] = p
            fnew = self._new_face()
            self._set_face(fb, [t2, pl, tp])
            self._set_face(fnew, [t, tn, lp])
            spokes.append(pl)
        else:
            bprev, bnext = self.he_prev[t], self.he_next[t]
            self.he_face[t2] = BOUNDARY
            if bprev == t:
                self._link(t2, t)
                self._link(t, t2)
            else:
                self._link(bprev, t2)
                self._link(t2, t)
                self._link(t, bnext)
        if fa == BOUNDARY:
            bprev, bnext = self.he_prev[h], self.he_next[h]
            self.he_face[h2] = BOUNDARY
            if bprev == h:
                self._link(h, h2)
                self._link(h2, h)
            else:
                self._link(bprev, h)
                self._link(h, h2)
                self._link(h2, bnext)
        if self.v_he[j] == t:
            self.v_he[j] = t2
        self.v_he[p] = t
        return p, h2, spokes

    def _split_self_glued_edge(self, h):
        """Split an edge whose two halfedges bound the same face.

        The face ``[h, h^1, x]`` becomes a pentagon in which ``p`` appears
        twice; it is fanned from the copy on ``h``, which adds the spoke
        ``p->i`` and a loop edge ``p->p``.  Returns ``(p, h2, [spoke, loop])``.
        """
        t = h ^ 1
        if self.he_next[h] != t:
            raise ValueError("split a self-glued edge from the halfedge followed by its twin")
        i, j = self.he_vertex[h], self.he_vertex[t]
        x = self.he_prev[h]
        f = self.he_face[h]
        p = self._new_vertex()
        e2 = self._new_edge()
        h2, t2 = e2, e2 ^ 1
        self.he_vertex[h2] = p
        self.he_vertex[t2] = j
        self.he_vertex[t] = p
        ed = self._new_edge()
        d_ip, d_pi = ed, ed ^ 1
        self.he_vertex[d_ip] = i
        self.he_vertex[d_pi] = p
        el = self._new_edge()
        loop_a, loop_b = el, el ^ 1
        self.he_vertex[loop_a] = p
        self.he_vertex[loop_b] = p
        f2, f3 = self._new_face(), self._new_face()
        self._set_face(f, [x, h, d_pi])
        self._set_face(f2, [h2, t2, loop_b])
        self._set_face(f3, [loop_a, t, d_ip])
        if self.v_he[j] == t:
            self.v_he[j] = t2
        self.v_he[p] = t
        return p, h2, [d_pi, loop_a]

    def remove_degree3_vertex(self, p):
        """Delete interior vertex ``p`` of degree 3, merging its faces."""
        out = self.outgoing(p)
        if len(out) != 3 or any(self.he_face[g] == BOUNDARY for g in out):
            raise ValueError(f"vertex {p} is not an interior degree-3 vertex")
        outer = [self.he_next[g] for g in out]
        faces = [self.he_face[g] for g in out]
        if len(set(faces)) != 3 or len({g >> 1 for g in out}) != 3:
            raise ValueError(f"neighborhood of {p} is not a triangle fan")
        keep = faces[0]
        self._set_face(keep, outer)
        for f in faces[1:]:
            self.f_alive[f] = False
        for g in out:
            self.e_alive[g >> 1] = False
        for o in outer:
            v = self.he_vertex[o]
            if self.v_he[v] >> 1 in {g >> 1 for g in out}:
                self.v_he[v] = o
        self.v_alive[p] = False
        return keep

    def remove_degree2_boundary_vertex(self, p):
        """Delete boundary vertex ``p`` with one incident face (x, y, p).

        The face's edge opposite ``p`` becomes a boundary edge; returns its
        halfedge that is now exterior.
        """
        out = self.outgoing(p)
        if len(out) != 2:
            raise ValueError(f"vertex {p} does not have degree 2")
        interior = [g for g in out if self.he_face[g] != BOUNDARY]
        if len(interior) != 1:
            raise ValueError(f"vertex {p} is not a degree-2 boundary vertex")
        g = interior[0]  # p->x
        o = self.he_next[g]  # x->y
        back = self.he_next[o]  # y->p
        f = self.he_face[g]
        bin_ = g ^ 1  # x->p exterior
        bout = back ^ 1  # p->y exterior
        bprev, bnext = self.he_prev[bin_], self.he_next[bout]
        self.f_alive[f] = False
        self.e_alive[g >> 1] = False
        self.e_alive[back >> 1] = False
        self.he_face[o] = BOUNDARY
        if bprev == bout:
            # loop consisted only of the two spokes
            self._link(o, o)
        else:
            self._link(bprev, o)
            self._link(o, bnext)
        x, y = self.he_vertex[o], self.he_vertex[o ^ 1]
        self.v_he[x] = o
        if self.v_he[y] >> 1 in (g >> 1, back >> 1):
            self.v_he[y] = o ^ 1
        self.v_alive[p] = False
        return o

    def compact(self):
        """Renumber live elements densely.

        Returns index maps ``(vmap, emap, fmap)`` as integer arrays holding
        the new id of every old id (``-1`` for tombstones).
        """
        vmap = np.full(len(self.v_alive), -1, dtype=np.int64)
        emap = np.full(len(self.e_alive), -1, dtype=np.int64)
        fmap = np.full(len(self.f_alive), -1, dtype=np.int64)
        vmap[np.flatnonzero(self.v_alive)] = np.arange(sum(self.v_alive))
        emap[np.flatnonzero(self.e_alive)] = np.arange(sum(self.e_alive))
        fmap[np.flatnonzero(self.f_alive)] = np.arange(sum(self.f_alive))

        def hmap(h):
            return 2 * int(emap[h >> 1]) + (h & 1)

        live_h = [h for h in range(self.n_halfedges) if self.e_alive[h >> 1]]
        new = HalfedgeMesh()
        nh = 2 * int(sum(self.e_alive))
        new.he_next = [0] * nh
        new.he_prev = [0] * nh
        new.he_twin = [h ^ 1 for h in range(nh)]
        new.he_vertex = [0] * nh
        new.he_face = [0] * nh
        new.e_alive = [True] * (nh // 2)
        for h in live_h:
            k = hmap(h)
            new.he_next[k] = hmap(self.he_next[h])
            new.he_prev[k] = hmap(self.he_prev[h])
            new.he_vertex[k] = int(vmap[self.he_vertex[h]])
            f = self.he_face[h]
            new.he_face[k] = BOUNDARY if f == BOUNDARY else int(fmap[f])
        new.v_he = [hmap(self.v_he[v]) for v in self.vertices()]
        new.v_alive = [True] * len(new.v_he)
        new.f_he = [hmap(self.f_he[f]) for f in self.faces()]
        new.f_alive = [True] * len(new.f_he)
        vars(self).update(vars(new))
        return vmap, emap, fmap


def build_from_face_list(faces, n_vertices=None):
    return HalfedgeMesh.from_faces(faces, n_vertices)


def validate(mesh):
    return mesh.validate()
