"""Intrinsic Delaunay flipping and Delaunay refinement.

Refinement follows Chew's second algorithm on the intrinsic triangulation:
circumcenters of poor triangles are inserted by walking from the triangle's
barycenter; circumcenters beyond a boundary edge split that edge instead.
Triangles near narrow vertices (small cone or boundary angles) are exempt.
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import (GeometryError, SurfacePoint, TangentVector, circumcenter_barycentric,
                       layout_face, trace_exponential_map)
from .integer_coords import IntegrityError
from .mesh_core import BOUNDARY
from .ops import RemovalError

log = logging.getLogger(__name__)


@dataclass
class RefinementConfig:
    """Parameters of :func:`delaunay_refine`.  Angles are in degrees."""

    min_angle: float = 25.0
    delaunay_tolerance: float = 1e-5
    mollify: float = 1e-5
    max_insertions: int = 10000
    narrow_threshold: float = 60.0

    def __post_init__(self):
        if not 0 < self.min_angle < 60:
            raise ValueError(f"min_angle {self.min_angle} outside (0, 60)")
        if self.min_angle > 30:
            log.warning("min_angle %.1f is outside the guaranteed regime", self.min_angle)
        if self.delaunay_tolerance <= 0 or self.mollify < 0:
            raise ValueError("tolerances must be positive")


@dataclass
class RefinementReport:
    insertions: int = 0
    circumcenter_insertions: int = 0
    boundary_splits: int = 0
    removals: int = 0
    failed_removals: int = 0
    flips: int = 0
    min_angle: float = float("nan")
    exempt_triangles: int = 0
    narrow_vertices: int = 0
    mollify_delta: float = 0.0
    completed: bool = True
    timings: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# flipping


def cotan_weight(tri, e):
    """Sum of the cotangents of the angles opposite edge ``e`` (one side if boundary)."""
    m = tri.mesh
    total = 0.0
    for h in (2 * e, 2 * e + 1):
        if m.he_face[h] == BOUNDARY:
            continue
        theta = tri.corner_angle(m.he_prev[h])
        total += math.cos(theta) / max(math.sin(theta), 1e-300)
    return total


def is_delaunay_edge(tri, e, eps=1e-5):
    """Whether interior edge ``e`` has nonnegative cotan weight up to ``eps``."""
    if tri.mesh.is_boundary_edge(e):
        return True
    return cotan_weight(tri, e) >= -eps


def is_delaunay(tri, eps=1e-5):
    return all(is_delaunay_edge(tri, e, eps) for e in tri.mesh.edges())


def flip_to_delaunay(tri, eps=1e-5, edges=None, max_flips=None):
    """Flip non-Delaunay edges until none remain.

    Parameters
    ----------
    edges : iterable of int, optional
        Initial queue; all edges by default.  Neighbors of flipped edges are
        queued as they change.

    Returns
    -------
    int
        Number of flips.

    Raises
    ------
    IntegrityError
        If ``max_flips`` (default ``100 * |E| + 1000``) is exceeded.
    """
    m = tri.mesh
    queue = list(m.edges() if edges is None else edges)
    queued = set(queue)
    if max_flips is None:
        max_flips = 100 * m.n_edges() + 1000
    flips = 0
    while queue:
        e = queue.pop()
        queued.discard(e)
        if not m.e_alive[e] or is_delaunay_edge(tri, e, eps):
            continue
        h, t, hb, hc, tb, tc = tri._quad(e)
        if m.he_face[h] == m.he_face[t]:
            continue
        tri.flip_edge(e, force=True)
        flips += 1
        if flips > max_flips:
            raise IntegrityError(f"Delaunay flipping did not terminate after {flips} flips")
        for g in (hb, hc, tb, tc):
            if g >> 1 not in queued:
                queued.add(g >> 1)
                queue.append(g >> 1)
    return flips


# ---------------------------------------------------------------------------
# refinement


def narrow_vertices(tri, threshold_deg=60.0):
    """Original vertices whose T0 angle sum is below ``threshold_deg``."""
    lim = math.radians(threshold_deg)
    return {v for v in range(tri.n_original) if tri.angle_sum0(v) < lim}


def _t0_faces_of(tri, sp):
    m0 = tri.mesh0
    if sp.kind == "face":
        return {sp.index}
    if sp.kind == "edge":
        hs = (2 * sp.index, 2 * sp.index + 1)
    else:
        hs = tri.out0[sp.index]
    return {m0.he_face[h] for h in hs} - {BOUNDARY}


def is_exempt(tri, f, narrow):
    """Whether face ``f`` is ignored by refinement because of narrow vertices."""
    if not narrow:
        return False
    m = tri.mesh
    corners = [m.tail(h) for h in m.face_halfedges(f)]
    if sum(1 for v in corners if tri.original[v] and v in narrow) == 1:
        return True
    common = None
    for v in corners:
        fs = _t0_faces_of(tri, tri.vpos[v])
        common = fs if common is None else common & fs
    m0 = tri.mesh0
    for F in common or ():
        if any(m0.tail(h) in narrow for h in m0.face_halfedges(F)):
            return True
    return False


def min_face_angle(tri, f):
    return min(tri.face_angles(f))


def _circumcenter_walk(tri, f):
    m = tri.mesh
    h0 = m.f_he[f]
    hs, P = layout_face(m, tri.length, h0)
    w = circumcenter_barycentric(*(tri.length[h >> 1] for h in hs))
    x = P.mean(axis=0)
    d = w @ P - x
    dist = float(np.hypot(d[0], d[1]))
    base = SurfacePoint.face(f, (1 / 3, 1 / 3, 1 / 3))
    return trace_exponential_map(m, tri.length,
                                 TangentVector(base, math.atan2(d[1], d[0]), dist))


def _star_edges(m, v):
    """Spokes of ``v`` and the edges opposite it."""
    out = set()
    for g in m.outgoing(v):
        out.add(g >> 1)
        if m.he_face[g] != BOUNDARY:
            out.add(m.he_next[g] >> 1)
    return out


def _dijkstra_within(tri, src, radius):
    m = tri.mesh
    dist = {src: 0.0}
    heap = [(0.0, src)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, math.inf):
            continue
        for h in m.outgoing(v):
            w = m.tip(h)
            nd = d + tri.length[h >> 1]
            if nd <= radius and nd < dist.get(w, math.inf):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def graph_distance(tri, a, b):
    """Shortest edge-path length between two T1 vertices."""
    return _dijkstra_within(tri, a, math.inf).get(b, math.inf)


def delaunay_refine(tri, config=None, mollified=False):
    """Refine ``tri`` in place until non-exempt corner angles reach ``min_angle``.

    The triangulation is mollified (unless ``mollified``) and flipped to
    Delaunay first.

    Returns
    -------
    RefinementReport
    """
    cfg = config or RefinementConfig()
    rep = RefinementReport()
    t_start = time.perf_counter()
    if not mollified and cfg.mollify > 0:
        rep.mollify_delta = tri.mollify(cfg.mollify)
    eps = cfg.delaunay_tolerance
    rep.flips += flip_to_delaunay(tri, eps)
    rep.timings["initial_flips"] = time.perf_counter() - t_start
    narrow = narrow_vertices(tri, cfg.narrow_threshold)
    rep.narrow_vertices = len(narrow)
    bound = math.radians(cfg.min_angle)
    m = tri.mesh
    boundary_inserted = set()

    def bad(f):
        return min_face_angle(tri, f) < bound and not is_exempt(tri, f, narrow)

    def push_all(heap):
        for f in m.faces():
            if bad(f):
                heapq.heappush(heap, (min_face_angle(tri, f), f))

    def push_near(heap, v):
        seen = set()
        for h in m.outgoing(v):
            for g in m.outgoing(m.tip(h)):
                f = m.he_face[g]
                if f != BOUNDARY and f not in seen:
                    seen.add(f)
                    if bad(f):
                        heapq.heappush(heap, (min_face_angle(tri, f), f))

    heap = []
    push_all(heap)
    skipped = set()
    t_loop = time.perf_counter()
    while True:
        if not heap:
            push_all(heap)
            heap = [x for x in heap if x[1] not in skipped]
            heapq.heapify(heap)
            if not heap:
                break
        key, f = heapq.heappop(heap)
        if not m.f_alive[f] or not bad(f):
            continue
        cur = min_face_angle(tri, f)
        if cur > key + 1e-12:
            heapq.heappush(heap, (cur, f))
            continue
        if rep.insertions >= cfg.max_insertions:
            rep.completed = False
            log.warning("refinement stopped after %d insertions", rep.insertions)
            break
        try:
            res = _circumcenter_walk(tri, f)
        except GeometryError as err:
            log.debug("skipping face %d: %s", f, err)
            skipped.add(f)
            continue
        if not res.hit_boundary:
            try:
                p = tri.insert_point(res.end)
            except ValueError as err:
                log.debug("skipping face %d: %s", f, err)
                skipped.add(f)
                continue
            rep.circumcenter_insertions += 1
        else:
            e = res.boundary_edge
            h = 2 * e if m.he_face[2 * e] != BOUNDARY else 2 * e + 1
            radius = tri.length[e]
            p = tri.split_edge(h, 0.5)
            boundary_inserted.add(p)
            rep.boundary_splits += 1
            rep.flips += flip_to_delaunay(tri, eps, edges=_star_edges(m, p))
            near = _dijkstra_within(tri, p, radius)
            for v in sorted(near):
                if v == p or tri.original[v] or v in boundary_inserted or not m.v_alive[v]:
                    continue
                if m.is_boundary_vertex(v):
                    continue
                ring = {m.tip(g) for g in m.outgoing(v)}
                try:
                    tri.remove_inserted_vertex(v)
                except RemovalError as err:
                    log.debug("kept vertex %d: %s", v, err)
                    rep.failed_removals += 1
                    continue
                rep.removals += 1
                edges = {g >> 1 for u in ring if m.v_alive[u] for g in m.outgoing(u)}
                rep.flips += flip_to_delaunay(tri, eps, edges=edges)
        rep.insertions += 1
        rep.flips += flip_to_delaunay(tri, eps, edges=_star_edges(m, p))
        skipped.clear()
        push_near(heap, p)
    rep.timings["refine"] = time.perf_counter() - t_loop
    angles, exempt = [], 0
    for f in m.faces():
        if is_exempt(tri, f, narrow):
            exempt += 1
        else:
            angles.append(min_face_angle(tri, f))
    rep.exempt_triangles = exempt
    rep.min_angle = math.degrees(min(angles)) if angles else float("nan")
    rep.timings["total"] = time.perf_counter() - t_start
    log.info("refinement: %d insertions, %d boundary splits, min angle %.2f",
             rep.insertions, rep.boundary_splits, rep.min_angle)
    return rep
