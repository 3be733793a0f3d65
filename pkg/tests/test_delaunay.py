import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itri.corpus import load
from itri.delaunay import (RefinementConfig, cotan_weight, delaunay_refine, flip_to_delaunay,
                           is_delaunay, is_delaunay_edge, is_exempt, narrow_vertices)
from itri.ops import IntrinsicTriangulation

from .oracles import crossing_counts, flat_grid, planar, planar_delaunay_edges


def _interior(tri):
    return next(e for e in tri.mesh.edges() if not tri.mesh.is_boundary_edge(e))


def _kite(apex_deg):
    # diagonal from (-1, 0) to (1, 0); both opposite corners see it under apex_deg
    h = 1.0 / math.tan(math.radians(apex_deg / 2))
    X = np.array([[-1, 0], [1, 0], [0, h], [0, -h]], float)
    return IntrinsicTriangulation.from_positions([[0, 1, 2], [1, 0, 3]], X)


def test_square_diagonal_is_delaunay():
    tri = load("square_2tri")
    e = _interior(tri)
    assert cotan_weight(tri, e) == pytest.approx(0.0, abs=1e-15)
    assert is_delaunay_edge(tri, e)


def test_obtuse_pair_is_not_delaunay():
    tri = _kite(100.0)
    e = _interior(tri)
    assert cotan_weight(tri, e) == pytest.approx(2 / math.tan(math.radians(100)), rel=1e-12)
    assert not is_delaunay_edge(tri, e)
    assert flip_to_delaunay(tri) == 1
    assert is_delaunay(tri)


def test_boundary_edge_always_delaunay():
    tri = _kite(170.0)
    assert all(is_delaunay_edge(tri, e) for e in tri.mesh.edges() if tri.mesh.is_boundary_edge(e))


def test_asymmetric_quad_single_flip():
    X = np.array([[0, 0], [3, 0], [3.2, 1], [0.2, 0.8]], float)
    tri = IntrinsicTriangulation.from_positions([[0, 1, 2], [0, 2, 3]], X)
    assert not is_delaunay(tri)
    assert flip_to_delaunay(tri) == 1
    assert is_delaunay(tri)
    e = _interior(tri)
    assert {tri.mesh.tail(2 * e), tri.mesh.tip(2 * e)} == {1, 3}


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_flat_idt_matches_planar_delaunay(seed):
    tri = flat_grid(4, 4, 0.35, seed)
    flip_to_delaunay(tri)
    assert is_delaunay(tri)
    got = {tuple(sorted((tri.mesh.tail(2 * e), tri.mesh.tip(2 * e)))) for e in tri.mesh.edges()}
    assert got == planar_delaunay_edges(tri.positions[:, :2])
    # intrinsic edges are straight chords of the plane
    assert np.array_equal(crossing_counts(tri), np.array(
        [max(tri_n, 0) for tri_n in _transpose(tri)]))


def _transpose(tri):
    from itri.tracing import transpose_crossing_counts
    return transpose_crossing_counts(tri)


@pytest.mark.parametrize("name", ["cube", "torus_coarse", "delta_pillow", "needle_sphere"])
def test_idt_on_closed_meshes(name):
    tri = load(name)
    tri.mollify()
    flip_to_delaunay(tri)
    assert is_delaunay(tri)
    assert tri.validate()


def test_config_range():
    with pytest.raises(ValueError):
        RefinementConfig(min_angle=0)
    with pytest.raises(ValueError):
        RefinementConfig(min_angle=61)


def test_config_warns_above_guarantee(caplog):
    with caplog.at_level(logging.WARNING):
        RefinementConfig(min_angle=33)
    assert "guaranteed" in caplog.text


def test_narrow_vertex_detection():
    tri = load("delta_cone")
    assert 1 in narrow_vertices(tri)
    assert not narrow_vertices(load("cube"))
    assert not is_exempt(load("cube"), 0, set())


def _boundary_length(tri):
    m = tri.mesh
    return sum(tri.length[e] for e in m.edges() if m.is_boundary_edge(e))


def _area(tri):
    return sum(tri.face_area(f) for f in tri.mesh.faces())


@pytest.mark.parametrize("name", ["skinny_square", "grid_8x2_stretched", "cap_strip"])
def test_refinement_reaches_bound(name):
    tri = load(name)
    area, blen = _area(tri), _boundary_length(tri)
    rep = delaunay_refine(tri, RefinementConfig(min_angle=25))
    assert rep.completed and rep.insertions > 0
    narrow = narrow_vertices(tri)
    for f in tri.mesh.faces():
        if not is_exempt(tri, f, narrow):
            assert min(tri.face_angles(f)) >= math.radians(25) - 1e-6
    assert rep.min_angle >= 25 - 1e-6
    assert is_delaunay(tri)
    assert tri.validate()
    # refinement never changes the surface
    assert _area(tri) == pytest.approx(area, rel=1e-9)
    assert _boundary_length(tri) == pytest.approx(blen, rel=1e-9)


def test_refinement_keeps_original_vertices():
    tri = load("grid_5x5_jitter")
    delaunay_refine(tri, RefinementConfig(min_angle=30))
    for v in range(tri.n_original):
        assert tri.mesh.v_alive[v]
        assert np.allclose(planar(tri, v), tri.positions[v, :2])
    # inserted vertices stay inside the square
    for v in tri.mesh.vertices():
        x = planar(tri, v)
        assert -1e-12 <= x[0] <= 1 + 1e-12 and -1e-12 <= x[1] <= 1 + 1e-12


def test_refinement_report_fields():
    tri = load("skinny_square")
    d = delaunay_refine(tri).to_dict()
    assert d["insertions"] == d["circumcenter_insertions"] + d["boundary_splits"]
    assert d["completed"] is True and isinstance(d["timings"], dict)


def test_refinement_insertion_cap():
    tri = load("skinny_square")
    rep = delaunay_refine(tri, RefinementConfig(min_angle=25, max_insertions=2))
    assert rep.insertions <= 2 and not rep.completed
    assert tri.validate()


def test_refinement_on_narrow_cone_exempts():
    tri = load("delta_cone")
    rep = delaunay_refine(tri, RefinementConfig(min_angle=25))
    assert rep.completed and rep.narrow_vertices == 1
    assert tri.validate()
