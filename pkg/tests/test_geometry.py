import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from itri.corpus import fan_disk
from itri.geometry import (GeometryError, SurfacePoint, TangentVector, circumcenter_barycentric,
                           corner_angle_and_area, corner_angles, displacement_length,
                           face_slack, layout_face, layout_triangle, layout_triangle_strip,
                           mollify, trace_exponential_map)
from itri.mesh_core import BOUNDARY, build_from_face_list

sides = st.floats(0.05, 20.0)


def exact_angles(a, b, c):
    """Corner angles at i, j, k for sides ij=a, jk=b, ki=c at 50 digits."""
    mpmath.mp.dps = 50
    a, b, c = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(c)
    ti = mpmath.acos((a * a + c * c - b * b) / (2 * a * c))
    tj = mpmath.acos((a * a + b * b - c * c) / (2 * a * b))
    return ti, tj, mpmath.pi - ti - tj


def test_equilateral():
    r = corner_angle_and_area(1.0, 1.0, 1.0)
    assert r["angles"] == pytest.approx([math.pi / 3] * 3, abs=1e-15)
    assert r["area"] == pytest.approx(math.sqrt(3) / 4, rel=1e-15)


def test_345():
    r = corner_angle_and_area(3.0, 4.0, 5.0)
    assert r["area"] == pytest.approx(6.0, rel=1e-15)
    # side ki = 5 is opposite corner j
    assert r["angles"][1] == pytest.approx(math.pi / 2, abs=1e-15)


def test_near_degenerate_matches_exact():
    got = corner_angles(1.0, 1.0, 1.9999)
    assert all(np.isfinite(got))
    for x, y in zip(got, exact_angles(1.0, 1.0, 1.9999)):
        assert abs(x - float(y)) < 1e-12


def test_triangle_inequality_violation():
    with pytest.raises(GeometryError):
        corner_angle_and_area(1.0, 1.0, 3.0)


@settings(max_examples=200, deadline=None)
@given(sides, sides, sides)
def test_angles_sum_to_pi_and_match_oracle(a, b, c):
    assume(a + b > c * (1 + 1e-6) and b + c > a * (1 + 1e-6) and c + a > b * (1 + 1e-6))
    got = corner_angles(a, b, c)
    assert abs(sum(got) - math.pi) < 1e-9
    for x, y in zip(got, exact_angles(a, b, c)):
        assert abs(x - float(y)) < 1e-8


def test_displacement_length_examples():
    assert displacement_length(1.0, 1.0, 1.0, (0.0, 0.0, 0.0)) == 0.0
    assert displacement_length(1.0, 1.0, 1.0, (1.0, -1.0, 0.0)) == pytest.approx(1.0, rel=1e-15)
    P = layout_triangle(3.0, 4.0, 5.0)
    du = np.array([1.0, 0.0, 0.0]) - np.full(3, 1 / 3)
    expected = np.linalg.norm(P[0] - P.mean(axis=0))
    assert displacement_length(3.0, 4.0, 5.0, du) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(sides, sides, sides, st.lists(st.floats(0.01, 1.0), min_size=6, max_size=6))
def test_displacement_matches_layout(a, b, c, w):
    assume(a + b > c * 1.01 and b + c > a * 1.01 and c + a > b * 1.01)
    P = layout_triangle(a, b, c)
    u = np.array(w[:3]) / sum(w[:3])
    v = np.array(w[3:]) / sum(w[3:])
    expected = np.linalg.norm(u @ P - v @ P)
    assert displacement_length(a, b, c, u - v) == pytest.approx(expected, rel=1e-7, abs=1e-9)


def test_strip_one_triangle():
    m = build_from_face_list([[0, 1, 2]])
    L = [3.0, 4.0, 5.0]
    h = m.f_he[0]
    lay = layout_triangle_strip(m, L, [], start=h)
    assert len(lay.faces) == 1
    hs, P = lay.faces[0], lay.points[0]
    for s in range(3):
        assert np.linalg.norm(P[(s + 1) % 3] - P[s]) == pytest.approx(L[hs[s] >> 1], rel=1e-12)


def test_strip_two_equilateral_is_rhombus():
    m = build_from_face_list([[0, 1, 2], [0, 2, 3]])
    L = [1.0] * m.n_edges()
    e = next(e for e in m.edges() if not m.is_boundary_edge(e))
    h = 2 * e if m.face(2 * e) == 0 else 2 * e + 1
    lay = layout_triangle_strip(m, L, [h])
    far_a = lay.points[0][2]
    far_b = lay.points[1][2]
    a, b = lay.points[0][0], lay.points[0][1]
    assert np.linalg.norm(b - a) == pytest.approx(1.0)
    assert np.linalg.norm(far_a - far_b) == pytest.approx(math.sqrt(3), rel=1e-12)
    for P in lay.points:
        for s in range(3):
            assert np.linalg.norm(P[(s + 1) % 3] - P[s]) == pytest.approx(1.0, rel=1e-12)


def test_strip_around_flat_vertex_matches_rotations():
    F, X = fan_disk(7)
    X[3, :2] *= 0.6
    X[5, :2] *= 1.3
    m = build_from_face_list(F)
    L = [np.linalg.norm(X[m.tip(2 * e)] - X[m.tail(2 * e)]) for e in m.edges()]
    h = next(g for g in m.outgoing(0) if m.face(g) != BOUNDARY)
    crossed = [h]
    for _ in range(4):
        crossed.append(m.next(crossed[-1] ^ 1))
    lay = layout_triangle_strip(m, L, crossed)
    c = lay.points[0][0]
    d0 = lay.points[0][1] - c
    total = 0.0
    # accumulate the corner angles at the center independently
    g = h
    for _ in range(len(crossed)):
        g = m.next(g ^ 1)
        total += corner_angles(L[g >> 1], L[m.next(g) >> 1], L[m.prev(g) >> 1])[0]
    # total is measured clockwise here, starting from h
    last = lay.faces[-1]
    slot = [m.tail(x) for x in last].index(0)
    w = lay.points[-1][(slot + 1) % 3] - c
    ang = math.atan2(d0[0] * w[1] - d0[1] * w[0], d0 @ w)
    assert (ang + total) % (2 * math.pi) == pytest.approx(0.0, abs=1e-12) or \
        (ang + total) % (2 * math.pi) == pytest.approx(2 * math.pi, abs=1e-12)
    assert np.linalg.norm(w) == pytest.approx(L[lay.faces[-1][slot] >> 1], rel=1e-12)


def test_strip_rejects_nonadjacent():
    m = build_from_face_list([[0, 1, 2], [0, 2, 3]])
    with pytest.raises(ValueError):
        layout_triangle_strip(m, [1.0] * m.n_edges(), [m.f_he[0], m.f_he[0]])


def _square():
    X = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    F = [[0, 1, 2], [0, 2, 3]]
    m = build_from_face_list(F)
    L = [np.linalg.norm(X[m.tip(2 * e)] - X[m.tail(2 * e)]) for e in m.edges()]
    return m, L, X


def _planar_point(m, X, sp):
    if sp.kind == "face":
        return sum(w * X[m.tail(h)] for w, h in zip(sp.bary, m.face_halfedges(sp.index)))
    return sp.bary[0] * X[m.tail(2 * sp.index)] + sp.bary[1] * X[m.tip(2 * sp.index)]


def test_exp_map_zero_length():
    m, L, _ = _square()
    sp = SurfacePoint.face(0, (0.2, 0.3, 0.5))
    assert trace_exponential_map(m, L, TangentVector(sp, 1.0, 0.0)).end == sp


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.01, 0.6))
def test_exp_map_matches_planar_ray(angle, dist):
    m, L, X = _square()
    start = SurfacePoint.face(0, (1 / 3, 1 / 3, 1 / 3))
    x0 = _planar_point(m, X, start)
    h0 = m.f_he[0]
    e = X[m.tip(h0)] - X[m.tail(h0)]
    base = math.atan2(e[1], e[0])
    target = x0 + dist * np.array([math.cos(base + angle), math.sin(base + angle)])
    assume(0.002 < target[0] < 0.998 and 0.002 < target[1] < 0.998)
    assume(abs(target[0] - target[1]) > 1e-6)
    res = trace_exponential_map(m, L, TangentVector(start, angle, dist))
    assert not res.hit_boundary
    assert np.linalg.norm(_planar_point(m, X, res.end) - target) < 1e-12


def test_exp_map_hits_boundary():
    m = build_from_face_list([[0, 1, 2]])
    L = [1.0, 1.0, 1.0]
    start = SurfacePoint.face(0, (1 / 3, 1 / 3, 1 / 3))
    # straight down, through the side along the first halfedge
    res = trace_exponential_map(m, L, TangentVector(start, 1.5 * math.pi, 5.0))
    assert res.hit_boundary and res.end is None
    assert res.boundary_edge == m.f_he[0] >> 1
    assert res.boundary_point.bary[1] == pytest.approx(0.5, abs=1e-12)


def test_mollify_examples():
    L = np.ones(3)
    assert np.array_equal(mollify(L, [[0, 1, 2]]), L)
    cap = np.array([1.0, 1.0, 2.0])
    out = mollify(cap, [[0, 1, 2]], 1e-5)
    assert np.all(out > cap)
    assert np.all(face_slack(out, [[0, 1, 2]]) >= 1e-5 * out.mean() * (1 - 1e-12))


def test_mollify_needle_fan():
    rng = np.random.default_rng(3)
    a = rng.uniform(0.1, 2.0, 6)
    L, fe = [], []
    for k in range(3):
        L += [a[2 * k], a[2 * k + 1], a[2 * k] + a[2 * k + 1]]
        fe.append([3 * k, 3 * k + 1, 3 * k + 2])
    out = mollify(np.array(L), fe)
    for i, j, k in fe:
        assert out[i] + out[j] > out[k]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(sides, sides, st.floats(0.0, 1.0)), min_size=1, max_size=5),
       st.floats(1e-7, 1e-3))
def test_mollify_idempotent_and_sufficient(tris, eps):
    L, fe = [], []
    for k, (a, b, t) in enumerate(tris):
        c = abs(a - b) + t * (a + b - abs(a - b))
        L += [a, b, max(c, 1e-9)]
        fe.append([3 * k, 3 * k + 1, 3 * k + 2])
    once = mollify(np.array(L), fe, eps)
    assert np.all(face_slack(once, fe) >= eps * once.mean() * (1 - 1e-9))
    assert np.array_equal(mollify(once, fe, eps), once)


def test_circumcenter_examples():
    assert circumcenter_barycentric(1, 1, 1) == pytest.approx([1 / 3] * 3, abs=1e-15)
    assert circumcenter_barycentric(1, math.sqrt(2), 1) == pytest.approx([0, 0.5, 0.5],
                                                                          abs=1e-15)
    assert min(circumcenter_barycentric(1.0, 1.0, 1.9)) < 0


def test_circumcenter_degenerate():
    with pytest.raises(GeometryError):
        circumcenter_barycentric(1.0, 1.0, 2.0)


@settings(max_examples=200, deadline=None)
@given(sides, sides, sides)
def test_circumcenter_equidistant(a, b, c):
    assume(a + b > c * 1.01 and b + c > a * 1.01 and c + a > b * 1.01)
    P = layout_triangle(a, b, c)
    x = circumcenter_barycentric(a, b, c) @ P
    d = [np.linalg.norm(x - p) for p in P]
    assert max(d) - min(d) <= 1e-9 * max(d)


def test_layout_face_lengths():
    m = build_from_face_list([[0, 1, 2]])
    L = [2.0, 3.0, 4.0]
    hs, P = layout_face(m, L, m.f_he[0])
    for s in range(3):
        assert np.linalg.norm(P[(s + 1) % 3] - P[s]) == pytest.approx(L[hs[s] >> 1], rel=1e-12)
