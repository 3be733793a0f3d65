"""Metric computations on triangulations described by edge lengths.

Everything here works from edge lengths alone; vertex positions only
appear in local planar layouts.  Barycentric coordinates of a face refer to
the tails of its halfedges in the order ``f_he, next(f_he), prev(f_he)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh_core import BOUNDARY

VERTEX_SNAP = 1e-12


class GeometryError(ValueError):
    """Invalid metric data (triangle inequality, negative radicand, ...)."""


@dataclass(frozen=True)
class SurfacePoint:
    """A point given by a simplex and barycentric coordinates.

    ``kind`` is ``"vertex"``, ``"edge"`` or ``"face"``.  Edge points use the
    edge id with coordinates ``(1 - t, t)`` along halfedge ``2 * index``.
    """

    kind: str
    index: int
    bary: tuple = (1.0,)
    on: str = "T1"

    def __post_init__(self):
        need = {"vertex": 1, "edge": 2, "face": 3}.get(self.kind)
        if need is None:
            raise ValueError(f"unknown simplex kind {self.kind!r}")
        if len(self.bary) != need:
            raise ValueError(f"{self.kind} point needs {need} coordinates")
        if abs(sum(self.bary) - 1.0) > 1e-9:
            raise ValueError(f"barycentric coordinates {self.bary} do not sum to 1")

    @classmethod
    def vertex(cls, v, on="T1"):
        return cls("vertex", int(v), (1.0,), on)

    @classmethod
    def edge(cls, e, t, on="T1"):
        return cls("edge", int(e), (1.0 - float(t), float(t)), on)

    @classmethod
    def face(cls, f, bary, on="T1"):
        return cls("face", int(f), tuple(float(x) for x in bary), on)


@dataclass(frozen=True)
class TangentVector:
    """Direction and length at a surface point.

    For face points ``angle`` is measured counterclockwise from the face's
    first halfedge, for edge points from the edge's even halfedge (angles in
    ``(pi, 2 pi)`` point into the odd halfedge's face), and for vertex points
    counterclockwise from the vertex's reference halfedge within the cone.
    """

    base: SurfacePoint
    angle: float
    magnitude: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("tangent vector magnitude must be nonnegative")


# ---------------------------------------------------------------------------
# single triangles


def check_triangle(a, b, c, tol=0.0):
    if min(a, b, c) <= 0:
        raise GeometryError(f"nonpositive edge length in ({a}, {b}, {c})")
    s = max(a, b, c)
    if a + b + c - 2 * s < -tol * s:
        raise GeometryError(f"triangle inequality violated by ({a}, {b}, {c})")


def triangle_area(a, b, c):
    """Area from side lengths (Kahan's stable Heron formula)."""
    x, y, z = sorted((a, b, c), reverse=True)
    q = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))
    return 0.25 * math.sqrt(max(q, 0.0))


def _semi_differences(a, b, c):
    """``2 (s - a), 2 (s - b), 2 (s - c)`` without cancellation.

    Each difference is formed from the sorted sides in Kahan's order, so it
    keeps full relative accuracy for needles and caps.
    """
    order = sorted(((a, 0), (b, 1), (c, 2)), reverse=True)
    (x, ix), (y, iy), (z, iz) = order
    out = [0.0, 0.0, 0.0]
    out[ix] = z - (x - y)
    out[iy] = z + (x - y)
    out[iz] = x + (y - z)
    return out


def _half_angle(opp, s1, s2):
    # angle between sides s1, s2 facing opp, via tan(theta / 2)
    d_opp, d1, d2 = _semi_differences(opp, s1, s2)
    per = opp + (s1 + s2)
    num = max(d1 * d2, 0.0)
    den = max(per * d_opp, 0.0)
    return 2.0 * math.atan2(math.sqrt(num), math.sqrt(den))


def corner_angles(l_ij, l_jk, l_ki):
    """Angles at corners i, j, k of a triangle with the given side lengths."""
    return (_half_angle(l_jk, l_ij, l_ki),
            _half_angle(l_ki, l_ij, l_jk),
            _half_angle(l_ij, l_jk, l_ki))


def corner_angle_and_area(l_ij, l_jk, l_ki, tol=1e-12):
    """Corner angles and area of a triangle.

    Returns
    -------
    dict
        ``{"angles": (theta_i, theta_j, theta_k), "area": A}``.

    Raises
    ------
    GeometryError
        If the lengths violate the triangle inequality beyond ``tol``
        (relative to the longest side).
    """
    check_triangle(l_ij, l_jk, l_ki, tol)
    return {"angles": corner_angles(l_ij, l_jk, l_ki),
            "area": triangle_area(l_ij, l_jk, l_ki)}


def cotan_opposite(l_ij, l_jk, l_ki):
    """Cotangent of the angle at k (opposite side ij)."""
    area = triangle_area(l_ij, l_jk, l_ki)
    if area <= 0:
        return -math.inf if l_ij >= max(l_jk, l_ki) else math.inf
    return (l_jk ** 2 + l_ki ** 2 - l_ij ** 2) / (4.0 * area)


def displacement_length(l_ij, l_jk, l_ki, du, tol=1e-10):
    """Length of a barycentric displacement ``du = (du_i, du_j, du_k)``.

    Raises
    ------
    GeometryError
        If the squared length is negative beyond ``tol`` times the squared
        length scale.
    """
    di, dj, dk = du
    q = -(l_ij ** 2) * di * dj - (l_jk ** 2) * dj * dk - (l_ki ** 2) * dk * di
    scale = max(l_ij, l_jk, l_ki) ** 2 * max(abs(di), abs(dj), abs(dk), 1e-300) ** 2
    if q < 0:
        if q < -tol * scale:
            raise GeometryError(f"negative squared displacement length {q}")
        return 0.0
    return math.sqrt(q)


def circumcenter_barycentric(l_ij, l_jk, l_ki):
    """Normalized barycentric coordinates of the circumcenter."""
    a2, b2, c2 = l_jk ** 2, l_ki ** 2, l_ij ** 2
    w = np.array([a2 * (b2 + c2 - a2), b2 * (c2 + a2 - b2), c2 * (a2 + b2 - c2)])
    total = w.sum()
    if not total > 1e-300 * max(a2, b2, c2) ** 2:
        raise GeometryError("degenerate triangle has no circumcenter")
    return w / total


# ---------------------------------------------------------------------------
# planar layouts


def place_third(pa, pb, l_a, l_b):
    """Point at distance ``l_a`` from ``pa`` and ``l_b`` from ``pb``, left of a->b."""
    pa = np.asarray(pa, dtype=float)
    pb = np.asarray(pb, dtype=float)
    d = pb - pa
    base = math.hypot(d[0], d[1])
    # the angle at pa is accurate even for caps, unlike sqrt(l_a^2 - x^2)
    theta = _half_angle(l_b, base, l_a)
    x, y = l_a * math.cos(theta), l_a * math.sin(theta)
    ex = d / base
    ey = np.array([-ex[1], ex[0]])
    return pa + x * ex + y * ey


def layout_triangle(l_ij, l_jk, l_ki):
    """Positions of i, j, k with i at the origin and j on the positive x-axis."""
    pi = np.zeros(2)
    pj = np.array([l_ij, 0.0])
    return np.array([pi, pj, place_third(pi, pj, l_ki, l_jk)])


def face_lengths(mesh, lengths, f):
    return tuple(lengths[h >> 1] for h in mesh.face_halfedges(f))


def layout_face(mesh, lengths, h, pa=None, pb=None):
    """Lay out face(h) with tail(h) at ``pa`` and tip(h) at ``pb``.

    Returns the face halfedges starting at ``h`` and the 3x2 array of the
    positions of their tails.
    """
    hn = mesh.he_next[h]
    hp = mesh.he_prev[h]
    if pa is None:
        pa = np.zeros(2)
        pb = np.array([lengths[h >> 1], 0.0])
    pc = place_third(pa, pb, lengths[hp >> 1], lengths[hn >> 1])
    return (h, hn, hp), np.array([pa, pb, pc], dtype=float)


@dataclass
class PlanarLayout:
    """Unfolded triangle strip.

    ``faces[t]`` holds the three halfedges of the t-th face (starting at the
    halfedge through which it was entered) and ``points[t]`` the positions
    of their tails.
    """

    faces: list = field(default_factory=list)
    points: list = field(default_factory=list)

    def edge_points(self, t, slot=0):
        """Tail and tip position of halfedge ``faces[t][slot]``."""
        P = self.points[t]
        return P[slot], P[(slot + 1) % 3]


def layout_triangle_strip(mesh, lengths, crossed, start=None):
    """Unfold the faces visited by a curve crossing ``crossed`` halfedges.

    ``crossed`` lists halfedges in travel order; each one is crossed from its
    own face into its twin's face.  The layout contains ``len(crossed) + 1``
    faces: face(crossed[0]) then the twin face of every crossed halfedge.
    An empty strip lays out face(``start``) alone.

    Raises
    ------
    ValueError
        If consecutive halfedges do not share a face.
    """
    crossed = list(crossed)
    if not crossed and start is None:
        raise ValueError("empty strip")
    out = PlanarLayout()
    hs, P = layout_face(mesh, lengths, crossed[0] if crossed else start)
    out.faces.append(hs)
    out.points.append(P)
    for step, h in enumerate(crossed):
        hs, P = out.faces[-1], out.points[-1]
        if h not in hs:
            raise ValueError(f"halfedge {h} is not in the previous strip face")
        slot = hs.index(h)
        a, b = P[slot], P[(slot + 1) % 3]
        t = h ^ 1
        if mesh.he_face[t] == BOUNDARY:
            raise ValueError(f"strip leaves the surface through halfedge {h}")
        nxt = crossed[step + 1] if step + 1 < len(crossed) else None
        hs2, P2 = layout_face(mesh, lengths, t, b, a)
        if nxt is not None and nxt not in hs2:
            raise ValueError(f"halfedges {h} and {nxt} are not adjacent in the strip")
        out.faces.append(hs2)
        out.points.append(P2)
    return out


def barycentric_in_triangle(P, x):
    """Barycentric coordinates of planar point ``x`` w.r.t. triangle ``P``."""
    a, b, c = P
    m = np.array([[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]])
    s, t = np.linalg.solve(m, np.asarray(x, dtype=float) - a)
    return np.array([1.0 - s - t, s, t])


def cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


# ---------------------------------------------------------------------------
# exponential map


@dataclass
class ExpMapResult:
    end: SurfacePoint | None
    crossed: list
    hit_boundary: bool = False
    boundary_edge: int | None = None
    boundary_point: SurfacePoint | None = None
    flagged: bool = False
    direction: np.ndarray | None = None


def _start_frame(mesh, lengths, start, angle):
    """Face halfedges, corner positions, start point and direction in a layout."""
    if start.kind == "face":
        hs, P = layout_face(mesh, lengths, mesh.f_he[start.index])
        x = np.asarray(start.bary) @ P
        return hs, P, x, angle, ()
    if start.kind == "edge":
        h = 2 * start.index
        t = start.bary[1]
        if angle % (2 * math.pi) > math.pi:
            h, t, angle = h ^ 1, 1.0 - t, angle - math.pi
        if mesh.he_face[h] == BOUNDARY:
            raise ValueError("tangent vector points out of the surface")
        hs, P = layout_face(mesh, lengths, h)
        x = (1.0 - t) * P[0] + t * P[1]
        return hs, P, x, angle, (h,)
    if start.kind == "vertex":
        v = start.index
        remaining = angle
        for h in mesh.outgoing(v):
            if mesh.he_face[h] == BOUNDARY:
                continue
            hs, P = layout_face(mesh, lengths, h)
            theta = corner_angles(lengths[h >> 1], lengths[hs[1] >> 1], lengths[hs[2] >> 1])[0]
            if remaining <= theta + 1e-15:
                return hs, P, P[0].copy(), max(remaining, 0.0), (h, hs[2])
            remaining -= theta
        raise ValueError(f"angle {angle} exceeds the cone angle at vertex {v}")
    raise ValueError(f"malformed start point {start!r}")


def trace_exponential_map(mesh, lengths, vector, max_steps=100000):
    """Walk straight from ``vector.base`` for ``vector.magnitude``.

    Returns
    -------
    ExpMapResult
        ``end`` is a face (or edge) point of the triangulation; ``crossed``
        lists the halfedges crossed.  If the walk leaves the surface,
        ``hit_boundary`` is set together with the exit edge and point and
        ``end`` is ``None``.
    """
    start = vector.base
    if vector.magnitude == 0:
        return ExpMapResult(start, [])
    hs, P, x, ang, skip = _start_frame(mesh, lengths, start, vector.angle)
    # direction in the layout frame: angle relative to the first halfedge
    e0 = P[1] - P[0]
    base_ang = math.atan2(e0[1], e0[0])
    d = np.array([math.cos(base_ang + ang), math.sin(base_ang + ang)])
    left = float(vector.magnitude)
    crossed = []
    flagged = False
    for _ in range(max_steps):
        best = None
        for s in range(3):
            h = hs[s]
            if h in skip:
                continue
            a, b = P[s], P[(s + 1) % 3]
            e = b - a
            denom = cross2(e, d)
            if denom >= 0:
                continue  # not moving outward through this side
            tt = cross2(e, a - x) / denom
            if best is None or tt < best[0]:
                best = (tt, s)
        if best is None:
            # numerically stuck on a corner; stop here
            flagged = True
            break
        tt, s = best
        tt = max(tt, 0.0)
        if tt >= left:
            x = x + left * d
            left = 0.0
            break
        y = x + tt * d
        h = hs[s]
        a, b = P[s], P[(s + 1) % 3]
        e = b - a
        sp = float(np.dot(y - a, e) / np.dot(e, e))
        if sp < VERTEX_SNAP or sp > 1 - VERTEX_SNAP:
            flagged = True
            sp = min(max(sp, VERTEX_SNAP), 1 - VERTEX_SNAP)
            y = a + sp * e
        left -= tt
        if mesh.he_face[h ^ 1] == BOUNDARY:
            ed = h >> 1
            tpar = sp if (h & 1) == 0 else 1.0 - sp
            return ExpMapResult(None, crossed, True, ed, SurfacePoint.edge(ed, tpar),
                                flagged, d)
        crossed.append(h)
        hs, P = layout_face(mesh, lengths, h ^ 1, b, a)
        skip = (h ^ 1,)
        x = y
    else:
        raise RuntimeError("exponential map walk did not terminate")
    f = mesh.he_face[hs[0]]
    bary = barycentric_in_triangle(P, x)
    # reorder to the face's canonical halfedge order
    fh = mesh.face_halfedges(f)
    rot = hs.index(fh[0])
    bary = np.roll(bary, -rot)
    bary = np.clip(bary, 0.0, None)
    bary = bary / bary.sum()
    return ExpMapResult(SurfacePoint.face(f, bary), crossed, False, None, None, flagged, d)


# ---------------------------------------------------------------------------
# mollification


def face_slack(lengths, face_edges):
    """Minimum of l_a + l_b - l_c over each face; shape (F,)."""
    L = np.asarray(lengths, dtype=float)[np.asarray(face_edges)]
    tot = L.sum(axis=1)
    return tot - 2.0 * L.max(axis=1)


def mollify_delta(lengths, face_edges, eps_rel=1e-5):
    """Constant to add to every length so each face has slack >= eps * mean."""
    L = np.asarray(lengths, dtype=float)
    if len(face_edges) == 0 or len(L) == 0:
        return 0.0
    h = L.mean()
    s = face_slack(L, face_edges)
    if np.all(s >= eps_rel * h):
        return 0.0
    delta = float(np.max((eps_rel * h - s) / (1.0 - eps_rel)))
    # absorb rounding so that the post-condition holds exactly in floating point
    delta = delta * (1 + 1e-9) + 1e-15 * max(h, 1.0)
    return max(delta, 0.0)


def mollify(lengths, face_edges, eps_rel=1e-5):
    """Return mollified lengths.

    Parameters
    ----------
    lengths : array_like
        Edge lengths indexed by edge id.
    face_edges : array_like of shape (F, 3)
        Edge ids of every face.
    eps_rel : float
        Required slack relative to the mean edge length.
    """
    L = np.asarray(lengths, dtype=float).copy()
    delta = mollify_delta(L, face_edges, eps_rel)
    if delta > 0:
        L += delta
    return L
