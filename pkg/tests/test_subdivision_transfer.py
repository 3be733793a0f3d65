import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itri.corpus import load
from itri.ops import IntrinsicTriangulation
from itri.subdivision_transfer import (L2Transfer, build_common_subdivision,
                                       interpolation_matrices, mass_matrix, transfer_l2,
                                       write_subdivision_obj)

from .oracles import flat_grid, planar, random_operation


def _scrambled(seed, steps=40):
    rng = np.random.default_rng(seed)
    tri = flat_grid(3, 3, 0.3, seed)
    for _ in range(steps):
        random_operation(tri, rng)
    return tri


def _t1_planar(tri, S):
    return np.array([planar(tri, v) for v in S.v1_ids])


def _fem_mass(F, X):
    n = len(X)
    M = np.zeros((n, n))
    for f in F:
        a, b, c = (X[i] for i in f)
        area = 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        for i in f:
            for j in f:
                M[i, j] += area / 12 * (2 if i == j else 1)
    return M


def test_identity_subdivision():
    tri = load("grid_3x3")
    S = build_common_subdivision(tri)
    assert S.n_vertices == tri.mesh0.n_vertices()
    assert S.n_faces == tri.mesh0.n_faces()
    assert S.euler_characteristic() == 1
    P0, P1 = interpolation_matrices(S, tri)
    # T1 vertices come first, in the same order as T0
    assert list(S.v1_ids) == list(range(tri.mesh0.n_vertices()))
    assert np.allclose(P0.toarray(), np.eye(S.n_vertices))
    assert np.allclose(P1.toarray(), np.eye(S.n_vertices))


def test_flipped_square_subdivision():
    tri = load("square_2tri")
    e = next(e for e in tri.mesh.edges() if not tri.mesh.is_boundary_edge(e))
    tri.flip_edge(e)
    S = build_common_subdivision(tri)
    assert (S.n_vertices, S.n_faces) == (5, 4)
    assert S.euler_characteristic() == 1
    assert S.kind[4] == "crossing"
    P0, _ = interpolation_matrices(S, tri)
    assert np.allclose((P0 @ tri.positions)[4, :2], [0.5, 0.5])


def test_equilateral_mass_matrix():
    s = math.sqrt(3) / 2
    tri = IntrinsicTriangulation.from_positions([[0, 1, 2]], np.array([[0, 0], [1, 0], [0.5, s]]))
    M = mass_matrix(build_common_subdivision(tri)).toarray()
    area = math.sqrt(3) / 4
    assert np.allclose(M, area / 12 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]), atol=1e-15)


def test_identity_mass_matches_fem():
    tri = load("grid_5x5_jitter")
    S = build_common_subdivision(tri)
    F = [[tri.mesh0.tail(h) for h in tri.mesh0.face_halfedges(f)] for f in tri.mesh0.faces()]
    M = mass_matrix(S).toarray()
    assert np.allclose(M, _fem_mass(F, tri.positions[:, :2]), atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_subdivision_structure(seed):
    tri = _scrambled(seed)
    S = build_common_subdivision(tri)
    assert S.n_vertices == len(S.v1_ids) + tri.sum_crossings()
    assert S.euler_characteristic() == tri.mesh0.euler_characteristic()
    P0, P1 = interpolation_matrices(S, tri)
    # each S vertex lies at the same place seen from T0 and from T1
    x0 = P0 @ tri.positions[:, :2]
    x1 = P1 @ _t1_planar(tri, S)
    assert np.abs(x0 - x1).max() < 1e-8
    # the mass of the constant is the total area
    M = mass_matrix(S)
    one = np.ones(S.n_vertices)
    assert one @ (M @ one) == pytest.approx(1.0, rel=1e-8)
    assert np.allclose(P0.sum(axis=1), 1) and np.allclose(P1.sum(axis=1), 1)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_linear_functions_transfer_exactly(seed):
    tri = _scrambled(seed)
    op = L2Transfer(tri)
    X0 = tri.positions[:, :2]
    X1 = _t1_planar(tri, op.S)
    for k in range(2):
        assert np.abs(op.to_t1(X0[:, k]) - X1[:, k]).max() < 1e-8
        assert np.abs(op.to_t0(X1[:, k]) - X0[:, k]).max() < 1e-8
    assert np.allclose(op.to_t0(np.ones(len(X1))), 1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_transfer_beats_copy_back(seed):
    tri = _scrambled(seed)
    op = L2Transfer(tri)
    rng = np.random.default_rng(seed)
    f1 = rng.normal(size=len(op.S.v1_ids))
    col = {v: k for k, v in enumerate(op.S.v1_ids)}
    naive = f1[[col[v] for v in range(tri.n_original)]]
    best = op.to_t0(f1)
    assert op.residual(f1, best) <= op.residual(f1, naive) + 1e-12


def test_transfer_direction_checked():
    tri = load("square_2tri")
    with pytest.raises(ValueError):
        transfer_l2(tri, np.zeros(4), direction="sideways")
    assert np.allclose(transfer_l2(tri, np.arange(4.0), direction="T0->T1"), np.arange(4.0))


def test_closed_mesh_subdivision():
    tri = load("icosahedron")
    from itri.delaunay import delaunay_refine
    delaunay_refine(tri)
    S = build_common_subdivision(tri)
    assert S.euler_characteristic() == 2
    assert S.n_vertices == len(S.v1_ids) + tri.sum_crossings()


def test_write_obj(tmp_path):
    tri = _scrambled(3)
    S = build_common_subdivision(tri)
    path = tmp_path / "s.obj"
    write_subdivision_obj(S, tri, path, tmp_path / "p.json")
    lines = path.read_text().splitlines()
    assert sum(x.startswith("v ") for x in lines) == S.n_vertices
    assert sum(x.startswith("f ") for x in lines) == S.n_faces
