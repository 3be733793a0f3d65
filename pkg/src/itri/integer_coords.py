"""Normal coordinates, roundabouts and the derived per-corner counts.

``n[e]`` counts the transversal crossings of T1 edge ``e`` with T0 edges,
or is ``-1`` when a T0 edge runs along ``e``.  Corner quantities are indexed
by a face halfedge ``h``: the corner sits at ``tail(h)`` and faces the edge
of ``next(h)``.

``r[h]`` is stored for halfedges leaving an original vertex ``a`` and holds
the counterclockwise index (about ``a`` in T0) of the first T0 halfedge
found turning counterclockwise from ``h``, inclusive.
"""
from __future__ import annotations

from dataclasses import dataclass

from .mesh_core import BOUNDARY


class IntegrityError(RuntimeError):
    """Integer data inconsistent with the connectivity."""


@dataclass(frozen=True)
class CombinatorialCrossing:
    """The ``p``-th crossing along ``halfedge``, counted from its tail.

    The crossing curve travels from ``face(halfedge)`` into the twin face.
    """

    halfedge: int
    p: int


@dataclass(frozen=True)
class GeometricCrossing:
    halfedge: int
    p: int
    u: float  # position along the T0 curve
    v: float  # position along the T1 halfedge


def npos(x):
    return x if x > 0 else 0


def nneg(x):
    return 1 if x < 0 else 0


def corner_counts(n_ij, n_jk, n_ki, check=True):
    """Emanation and corner-crossing counts of a face with edges ij, jk, ki.

    Returns
    -------
    dict
        Keys ``e_i, e_j, e_k`` (curves leaving each corner's interior) and
        ``c_i, c_j, c_k`` (curves cutting each corner).

    Raises
    ------
    IntegrityError
        If a count is negative or fractional, or the matching identity
        ``n+_ij = c_i + c_j + e_k`` fails for some edge.
    """
    a, b, c = npos(n_ij), npos(n_jk), npos(n_ki)
    e_k = max(0, a - b - c)
    e_i = max(0, b - c - a)
    e_j = max(0, c - a - b)
    two_ci = max(0, a + c - b) - e_j - e_k
    two_cj = max(0, a + b - c) - e_k - e_i
    two_ck = max(0, b + c - a) - e_i - e_j
    out = {"e_i": e_i, "e_j": e_j, "e_k": e_k,
           "c_i": two_ci // 2, "c_j": two_cj // 2, "c_k": two_ck // 2}
    if check:
        if min(two_ci, two_cj, two_ck) < 0 or (two_ci | two_cj | two_ck) & 1:
            raise IntegrityError(f"odd or negative corner counts for n = {(n_ij, n_jk, n_ki)}")
        if (a != out["c_i"] + out["c_j"] + e_k or b != out["c_j"] + out["c_k"] + e_i
                or c != out["c_k"] + out["c_i"] + e_j):
            raise IntegrityError(f"matching identity fails for n = {(n_ij, n_jk, n_ki)}")
    return out


def emanating(mesh, n, h):
    """Curves leaving corner ``tail(h)`` into face(h); 0 on exterior halfedges."""
    if mesh.he_face[h] == BOUNDARY:
        return 0
    hn = mesh.he_next[h]
    return max(0, npos(n[hn >> 1]) - npos(n[h >> 1]) - npos(n[mesh.he_prev[h] >> 1]))


def cutting(mesh, n, h):
    """Curves crossing corner ``tail(h)`` of face(h)."""
    if mesh.he_face[h] == BOUNDARY:
        return 0
    hn, hp = mesh.he_next[h], mesh.he_prev[h]
    total = max(0, npos(n[h >> 1]) + npos(n[hp >> 1]) - npos(n[hn >> 1]))
    return (total - emanating(mesh, n, hn) - emanating(mesh, n, hp)) // 2


def face_counts(mesh, n, h):
    """Corner counts of face(h) with i = tail(h), j = tip(h)."""
    hn, hp = mesh.he_next[h], mesh.he_prev[h]
    return corner_counts(n[h >> 1], n[hn >> 1], n[hp >> 1])


def crossing_reverse(n, crossing):
    """The same crossing seen from the other side."""
    h, p = crossing.halfedge, crossing.p
    return CombinatorialCrossing(h ^ 1, n[h >> 1] - p - 1)


def roundabout_step(mesh, n, g):
    """T0 halfedges passed when turning counterclockwise from ``g`` past its wedge."""
    return nneg(n[g >> 1]) + emanating(mesh, n, g)


@dataclass
class CoordsReport:
    ok: bool
    message: str = ""

    def __bool__(self):
        return self.ok


def validate_integer_coords(mesh, n, r, original, deg0):
    """Check normal coordinates and roundabouts against the connectivity.

    Parameters
    ----------
    mesh : HalfedgeMesh
        T1 connectivity.
    n, r : sequence of int
        Normal coordinates per edge and roundabouts per halfedge.
    original : sequence of bool
        Whether each T1 vertex is a T0 vertex.
    deg0 : sequence of int
        T0 degree of each original vertex (indexed by T1 vertex id).
    """
    for e in mesh.edges():
        if n[e] < -1:
            return CoordsReport(False, f"normal coordinate {n[e]} < -1 on edge {e}")
    for e in mesh.edges():
        if mesh.is_boundary_edge(e) and n[e] != -1:
            return CoordsReport(False, f"boundary edge {e} does not carry a T0 edge")
    for f in mesh.faces():
        h0, h1, h2 = mesh.face_halfedges(f)
        try:
            corner_counts(n[h0 >> 1], n[h1 >> 1], n[h2 >> 1])
        except IntegrityError as err:
            return CoordsReport(False, f"face {f}: {err}")
    for v in mesh.vertices():
        if not original[v]:
            continue
        d = deg0[v]
        orbit = mesh.outgoing(v)
        total = 0
        for g in orbit:
            if not (0 <= r[g] < d):
                return CoordsReport(False, f"roundabout {r[g]} out of range at halfedge {g}")
            step = roundabout_step(mesh, n, g)
            nxt = mesh.rotate_ccw(g)
            if r[nxt] != (r[g] + step) % d:
                return CoordsReport(False, f"roundabouts not interleaved at halfedge {nxt}")
            total += step
        if total != d:
            return CoordsReport(False, f"vertex {v} sees {total} T0 halfedges, expected {d}")
    return CoordsReport(True)


# ---------------------------------------------------------------------------
# regions of a T1 face cut out by the T0 curves
#
# Corners of a region are ("v", g, m), the vertex tail(g) seen from the wedge
# of face(g) after its first m emanating curves, or ("x", s, q), the crossing
# with index q (from tail(s)) on face halfedge s.  Each corner is paired with
# the kind of boundary piece that follows it counterclockwise: "edge" (along
# a T1 edge) or "arc" (along a T0 curve).


def face_orientation(mesh, n, f):
    """Face halfedges ``(ij, jk, ki)`` rotated so any emanating corner is k."""
    hs = mesh.face_halfedges(f)
    for g in hs:
        if emanating(mesh, n, g) > 0:
            a = mesh.he_next[g]
            return (a, mesh.he_next[a], g)
    return hs


@dataclass
class FaceRegions:
    halfedges: tuple
    n: tuple  # crossing counts of ij, jk, ki
    c: tuple  # corner-cutting counts at i, j, k
    e_k: int
    regions: dict

    def n_arcs(self):
        return sum(self.c) + self.e_k

    def locate(self, n_p):
        """Region label of a new vertex whose spokes to i, j, k have counts ``n_p``."""
        c = self.c
        if self.e_k == 0:
            for a in range(3):
                if n_p[a] < c[a]:
                    return ("corner", a, n_p[a])
            return ("center",)
        for a in range(2):
            if n_p[a] < c[a]:
                return ("corner", a, n_p[a])
        return ("sector", n_p[0] - c[0])


def face_regions(mesh, n, f):
    """Polygons into which the T0 curves cut T1 face ``f``."""
    hs = face_orientation(mesh, n, f)
    N = tuple(npos(n[h >> 1]) for h in hs)
    c = tuple(cutting(mesh, n, h) for h in hs)
    ek = emanating(mesh, n, hs[2])
    regions = {}
    for a in range(3):
        out_h, in_h, n_in = hs[a], hs[a - 1], N[a - 1]
        for d in range(c[a]):
            if d == 0:
                poly = [(("v", out_h, 0), "edge"), (("x", out_h, 0), "arc"),
                        (("x", in_h, n_in - 1), "edge")]
            else:
                poly = [(("x", out_h, d - 1), "edge"), (("x", out_h, d), "arc"),
                        (("x", in_h, n_in - 1 - d), "edge"), (("x", in_h, n_in - d), "arc")]
            regions[("corner", a, d)] = poly

    def group(a):
        if c[a] == 0:
            return [(("v", hs[a], 0), "edge")]
        return [(("x", hs[a - 1], N[a - 1] - c[a]), "arc"), (("x", hs[a], c[a] - 1), "edge")]

    if ek == 0:
        regions[("center",)] = group(0) + group(1) + group(2)
    else:
        def E(m):
            return ("x", hs[0], c[0] + m)
        regions[("sector", 0)] = group(0) + [(E(0), "arc"), (("v", hs[2], 0), "edge")]
        for m in range(1, ek):
            regions[("sector", m)] = [(E(m - 1), "edge"), (E(m), "arc"), (("v", hs[2], m), "arc")]
        regions[("sector", ek)] = [(E(ek - 1), "edge")] + group(1) + [(("v", hs[2], ek), "arc")]
    return FaceRegions(hs, N, c, ek, regions)
