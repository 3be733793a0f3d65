"""Recover T0 curves over T1 from the integer data.

The functions here only read an :class:`~itri.ops.IntrinsicTriangulation`.

Directions at a vertex
----------------------
Around a vertex ``v`` of T1 the T0 curves leaving ``v`` are listed
counterclockwise, starting at ``v_he[v]``.  Each one is either
``("s", g)``, a curve running along halfedge ``g``, or ``("e", g, m)``, the
``m``-th curve leaving ``v`` into the wedge of face(g) (counted
counterclockwise from ``g``).  At an original vertex, list position ``t``
corresponds to the T0 halfedge with local index ``(r[v_he] + t) mod deg0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import layout_triangle_strip
from .integer_coords import (CombinatorialCrossing, GeometricCrossing, IntegrityError,
                             cutting, emanating, npos)
from .mesh_core import BOUNDARY

log = logging.getLogger(__name__)

CLAMP = 1e-12


def directions(tri, v):
    """T0 curve directions leaving T1 vertex ``v``, counterclockwise."""
    mesh, n = tri.mesh, tri.n
    out = []
    for g in mesh.outgoing(v):
        if n[g >> 1] < 0:
            out.append(("s", g))
        for m in range(emanating(mesh, n, g)):
            out.append(("e", g, m))
    return out


def direction_crossing(tri, d):
    """First crossing of an emanating direction ``("e", g, m)``."""
    _, g, m = d
    hn = tri.mesh.he_next[g]
    return CombinatorialCrossing(hn, cutting(tri.mesh, tri.n, hn) + m)


def t0_halfedge_of_direction(tri, v, d, dirs=None):
    """T0 halfedge leaving original vertex ``v`` along direction ``d``."""
    if not tri.original[v]:
        raise ValueError(f"vertex {v} is not an original vertex")
    if dirs is None:
        dirs = directions(tri, v)
    try:
        t = dirs.index(d)
    except ValueError:
        raise IntegrityError(f"direction {d} not found at vertex {v}") from None
    deg = tri.deg0[v]
    if len(dirs) != deg:
        raise IntegrityError(f"vertex {v} has {len(dirs)} curve directions, T0 degree {deg}")
    h0 = tri.mesh.v_he[v]
    return tri.out0[v][(tri.r[h0] + t) % deg]


def direction_of_t0_halfedge(tri, hb):
    """Direction at ``tail0(hb)`` of the curve carrying T0 halfedge ``hb``."""
    a = tri.mesh0.he_vertex[hb]
    deg = tri.deg0[a]
    dirs = directions(tri, a)
    if len(dirs) != deg:
        raise IntegrityError(f"vertex {a} has {len(dirs)} curve directions, T0 degree {deg}")
    h0 = tri.mesh.v_he[a]
    t = (tri.idx0[hb] - tri.r[h0]) % deg
    return dirs[t]


def trace_from(tri, crossing, max_steps=None):
    """Follow a curve from ``crossing`` until it ends at a vertex.

    Returns
    -------
    crossings : list of CombinatorialCrossing
        Starting with ``crossing`` itself.
    end : int
        Vertex where the curve terminates.
    arrival : tuple
        Direction ``("e", g, m)`` at ``end`` pointing back along the curve.

    Raises
    ------
    IntegrityError
        If the crossing is out of range or the walk leaves the surface.
    """
    mesh, n = tri.mesh, tri.n
    h, p = crossing.halfedge, crossing.p
    if not 0 <= p < npos(n[h >> 1]):
        raise IntegrityError(f"crossing index {p} out of range on halfedge {h}")
    out = [CombinatorialCrossing(h, p)]
    if max_steps is None:
        max_steps = sum(npos(x) for x in n) + 2
    for _ in range(max_steps):
        t = h ^ 1
        if mesh.he_face[t] == BOUNDARY:
            raise IntegrityError(f"curve crosses boundary halfedge {h}")
        tn, tp = mesh.he_next[t], mesh.he_prev[t]
        nij = npos(n[h >> 1])
        ci = cutting(mesh, n, tn)
        cj = cutting(mesh, n, t)
        if p < ci:
            h = tn
        elif p >= nij - cj:
            p = npos(n[tp >> 1]) + p - nij
            h = tp
        else:
            m = (nij - 1 - p) - cj
            if not 0 <= m < emanating(mesh, n, tp):
                raise IntegrityError(f"curve terminates outside the emanation fan at {t}")
            return out, mesh.he_vertex[tp], ("e", tp, m)
        out.append(CombinatorialCrossing(h, p))
    raise IntegrityError("curve tracing did not terminate")


def reverse_crossing(n, c):
    return CombinatorialCrossing(c.halfedge ^ 1, npos(n[c.halfedge >> 1]) - c.p - 1)


@dataclass
class CurveSegment:
    """A piece of a T0 edge between two consecutive T1 vertices.

    ``u`` values of ``crossings`` are local to the segment; ``t0_halfedge``
    is the T0 halfedge traversed in the segment direction and ``u_start``,
    ``u_end`` the positions of the endpoints along it.
    """

    start: int
    start_dir: tuple
    end: int
    end_dir: tuple
    crossings: list = field(default_factory=list)
    flagged: bool = False
    t0_halfedge: int | None = None
    u_start: float = 0.0
    u_end: float = 1.0

    def global_u(self, u):
        return self.u_start + u * (self.u_end - self.u_start)


def _intersect(a, b, p, q):
    """Parameters (s, t) with a + s (b - a) = p + t (q - p)."""
    d1 = b - a
    d2 = q - p
    den = d1[0] * d2[1] - d1[1] * d2[0]
    w = p - a
    if den == 0:
        return 0.5, 0.5, True
    s = (w[0] * d2[1] - w[1] * d2[0]) / den
    t = (w[0] * d1[1] - w[1] * d1[0]) / den
    return s, t, False


def extract_curve(tri, crossing, locate=True):
    """Trajectory of the curve through ``crossing`` between T1 vertices.

    Returns
    -------
    CurveSegment
        With geometric crossings in travel order.  Intersection parameters
        outside ``(CLAMP, 1 - CLAMP)`` are clamped and the segment flagged.
    """
    n = tri.n
    back, a, a_dir = trace_from(tri, reverse_crossing(n, crossing))
    front, b, b_dir = trace_from(tri, crossing)
    comb = [reverse_crossing(n, c) for c in reversed(back)] + front[1:]
    seg = CurveSegment(a, a_dir, b, b_dir)
    seg.crossings = _geometric(tri, comb, seg)
    if locate:
        _locate_on_t0(tri, seg)
    return seg


def _geometric(tri, comb, seg):
    lay = layout_triangle_strip(tri.mesh, tri.length, [c.halfedge for c in comb])
    A = lay.points[0][2]
    B = lay.points[-1][2]
    out = []
    for s, c in enumerate(comb):
        hs = lay.faces[s]
        slot = hs.index(c.halfedge)
        P, Q = lay.edge_points(s, slot)
        u, v, bad = _intersect(A, B, P, Q)
        if bad or not (CLAMP <= u <= 1 - CLAMP) or not (CLAMP <= v <= 1 - CLAMP):
            seg.flagged = True
            u = min(max(u, CLAMP), 1 - CLAMP)
            v = min(max(v, CLAMP), 1 - CLAMP)
        out.append(GeometricCrossing(c.halfedge, c.p, float(u), float(v)))
    for k in range(1, len(out)):
        if out[k].u <= out[k - 1].u:
            seg.flagged = True
    if seg.flagged:
        log.debug("clamped degenerate crossings along curve from %d to %d", seg.start, seg.end)
    return out


def _edge_param(tri, v, hb):
    """Position of inserted vertex ``v`` along T0 halfedge ``hb``."""
    sp = tri.vpos[v]
    if sp.kind != "edge" or sp.index != hb >> 1:
        raise IntegrityError(f"vertex {v} is not on T0 edge {hb >> 1}")
    t = sp.bary[1]
    return t if hb & 1 == 0 else 1.0 - t


def _locate_on_t0(tri, seg):
    a, b = seg.start, seg.end
    if tri.original[a]:
        hb = t0_halfedge_of_direction(tri, a, seg.start_dir)
    elif tri.original[b]:
        hb = t0_halfedge_of_direction(tri, b, seg.end_dir) ^ 1
    else:
        sa, sb = tri.vpos[a], tri.vpos[b]
        if sa.kind != "edge" or sb.kind != "edge" or sa.index != sb.index:
            raise IntegrityError(f"curve joins vertices {a}, {b} not on a common T0 edge")
        hb = 2 * sa.index if sb.bary[1] > sa.bary[1] else 2 * sa.index + 1
    seg.t0_halfedge = hb
    seg.u_start = 0.0 if tri.original[a] else _edge_param(tri, a, hb)
    seg.u_end = 1.0 if tri.original[b] else _edge_param(tri, b, hb)


def follow(tri, v, d, locate=True):
    """Segment leaving vertex ``v`` along direction ``d``."""
    if d[0] == "s":
        g = d[1]
        seg = CurveSegment(v, d, tri.mesh.he_vertex[g ^ 1], ("s", g ^ 1))
        if locate:
            _locate_on_t0(tri, seg)
        return seg
    return extract_curve(tri, direction_crossing(tri, d), locate)


def extract_geometric_crossing(tri, crossing):
    """Geometric version of one combinatorial crossing."""
    seg = extract_curve(tri, crossing, locate=False)
    for z in seg.crossings:
        if z.halfedge == crossing.halfedge and z.p == crossing.p:
            return z
    raise IntegrityError("crossing missing from its own curve")


@dataclass
class CurveTrajectory:
    """Trajectory of a T0 halfedge over T1.

    ``crossings`` carry ``u`` relative to the whole T0 edge; ``vertices``
    lists ``(T1 vertex, u)`` for every T1 vertex on the edge, endpoints
    included.
    """

    t0_halfedge: int
    start: int
    end: int
    crossings: list
    vertices: list
    segments: list
    flagged: bool = False


def extract_edge(tri, hb):
    """Trace T0 halfedge ``hb`` over T1, through any inserted vertices."""
    a = tri.mesh0.he_vertex[hb]
    d = direction_of_t0_halfedge(tri, hb)
    v = a
    verts = [(a, 0.0)]
    crossings = []
    segments = []
    flagged = False
    for _ in range(len(tri.mesh.v_alive) + 1):
        seg = follow(tri, v, d, locate=False)
        b = seg.end
        ua = 0.0 if v == a and len(verts) == 1 else verts[-1][1]
        ub = 1.0 if tri.original[b] else _edge_param(tri, b, hb)
        seg.t0_halfedge, seg.u_start, seg.u_end = hb, ua, ub
        for z in seg.crossings:
            crossings.append(GeometricCrossing(z.halfedge, z.p, seg.global_u(z.u), z.v))
        flagged |= seg.flagged
        segments.append(seg)
        verts.append((b, ub))
        if tri.original[b]:
            break
        others = [x for x in directions(tri, b) if x != seg.end_dir]
        if len(others) != 1:
            raise IntegrityError(f"inserted vertex {b} has {len(others) + 1} curve directions")
        v, d = b, others[0]
    else:
        raise IntegrityError(f"tracing T0 halfedge {hb} did not terminate")
    if b != tri.mesh0.he_vertex[hb ^ 1]:
        raise IntegrityError(f"T0 halfedge {hb} traced to the wrong vertex {b}")
    return CurveTrajectory(hb, a, b, crossings, verts, segments, flagged)


def transpose_crossing_counts(tri):
    """Number of T1 edges crossed by each T0 edge."""
    return np.array([len(extract_edge(tri, 2 * e).crossings) for e in tri.mesh0.edges()],
                    dtype=np.int64)


def all_crossings(tri):
    """Map ``(T1 edge, index from tail of its even halfedge)`` to crossing data.

    Each value is ``(hb, u, v)``: the T0 halfedge crossing from face(2e)
    into face(2e+1), its parameter along ``hb`` and the parameter along
    halfedge ``2e``.
    """
    n = tri.n
    table = {}
    for e0 in tri.mesh0.edges():
        traj = extract_edge(tri, 2 * e0)
        for z in traj.crossings:
            h = z.halfedge
            e = h >> 1
            if h & 1 == 0:
                table[(e, z.p)] = (2 * e0, z.u, z.v)
            else:
                table[(e, npos(n[e]) - 1 - z.p)] = (2 * e0 + 1, 1.0 - z.u, 1.0 - z.v)
    return table
