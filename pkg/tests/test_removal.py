import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intricoarse import IntrinsicMesh, MeshError, excise_flat_vertex, reduce_degree, remove_vertex
from intricoarse import meshgen
from intricoarse.io import mesh_from_coarse
from intricoarse.mapping import ExciseOp, FlipOp
from intricoarse.removal import skip_reason

from conftest import make


def centroid_fan():
    s3 = math.sqrt(3.0)
    pts = [(0, 0, 0), (1, 0, 0), (0.5, s3 / 2, 0), (0.5, s3 / 6, 0)]
    return IntrinsicMesh.from_positions(pts, [(3, 0, 1), (3, 1, 2), (3, 2, 0)])


def test_degree_three_needs_no_flips():
    m = centroid_fan()
    log = []
    assert reduce_degree(m, 3, log)
    assert not log


def test_grid_vertex_degree_six_three_flips():
    _, _, m = make(meshgen.grid, 3, 3)
    assert m.degree(4) == 6
    log = []
    assert reduce_degree(m, 4, log)
    assert m.degree(4) == 3
    assert sum(isinstance(op, FlipOp) for op in log) == 3


def test_excise_centroid_barycentrics():
    m = centroid_fan()
    log = []
    f = excise_flat_vertex(m, 3, log)
    assert m.n_vertices == 3 and m.n_faces == 1
    assert sorted(m.face_lengths(f)) == pytest.approx([1.0, 1.0, 1.0], abs=1e-15)
    (op,) = log
    assert isinstance(op, ExciseOp)
    assert op.vertex_bary == pytest.approx((1 / 3, 1 / 3, 1 / 3), abs=1e-15)
    m.check_connectivity()


def test_excise_straight_boundary_midpoint():
    # triangle 0-1-2 with vertex 3 at the midpoint of edge 0-1
    pts = [(0, 0, 0), (2, 0, 0), (1, 1.5, 0), (1, 0, 0)]
    m = IntrinsicMesh.from_positions(pts, [(0, 3, 2), (3, 1, 2)])
    assert m.vb[3] and m.degree(3) == 2
    assert m.curvature(3) == pytest.approx(0.0, abs=1e-15)
    f = excise_flat_vertex(m, 3)
    lengths = m.face_lengths(f)
    assert max(lengths) == pytest.approx(2.0, abs=1e-15)
    m.check_connectivity()


def test_excise_rejects_non_flat_or_wrong_degree():
    p, f = meshgen.square_pyramid()
    m = IntrinsicMesh.from_positions(p, f)
    with pytest.raises(MeshError):
        excise_flat_vertex(m, 0)
    _, _, g = make(meshgen.grid, 3, 3)
    with pytest.raises(MeshError):
        excise_flat_vertex(g, 4)


def test_removal_bookkeeping_interior():
    _, _, m = make(meshgen.grid, 4, 4)
    V, E, F = m.n_vertices, m.n_edges, m.n_faces
    K0 = m.total_curvature()
    res = remove_vertex(m, 5)
    assert res.ok
    assert (m.n_vertices, m.n_edges, m.n_faces) == (V - 1, E - 3, F - 2)
    assert m.total_curvature() == pytest.approx(K0, abs=1e-12)
    assert not m.delaunay_violations()
    m.check_connectivity()


def test_removal_bookkeeping_boundary():
    _, _, m = make(meshgen.grid, 4, 4)
    V, E, F = m.n_vertices, m.n_edges, m.n_faces
    res = remove_vertex(m, 1)
    assert res.ok
    assert (m.n_vertices, m.n_edges, m.n_faces) == (V - 1, E - 2, F - 1)
    m.check_connectivity()


def test_remove_pyramid_apex_conserves_curvature():
    p, f = meshgen.square_pyramid()
    m = IntrinsicMesh.from_positions(p, f)
    K_apex = m.curvature(0)
    before = sum(m.curvature(v) for v in (1, 2, 3, 4))
    res = remove_vertex(m, 0)
    assert res.ok
    after = sum(m.curvature(v) for v in (1, 2, 3, 4))
    assert after - before == pytest.approx(K_apex, abs=1e-8)


def test_ear_vertex_is_preprocessed():
    _, _, m = make(meshgen.grid, 3, 3)
    ear = next(v for v in m.vertex_ids() if m.vb[v] and m.degree(v) == 1)
    res = remove_vertex(m, ear)
    assert res.ok
    assert isinstance(res.ops[0], FlipOp)
    m.check_connectivity()
    assert m.total_curvature() == pytest.approx(2 * math.pi, abs=1e-10)


def test_boundary_self_edge_is_skipped():
    # cone disk: one face (0, 1, 1) glued to itself along 0-1; the loop at 1 is boundary
    m = mesh_from_coarse([(0, 1, 1)], [(1.0, 0.8, 1.0)], [(2, -1, 0)])
    assert m.vb[1] and not m.vb[0]
    assert skip_reason(m, 1)
    key = m.state_key()
    res = remove_vertex(m, 1)
    assert not res.ok and res.reason
    assert m.state_key() == key


def test_failed_removal_restores_state():
    # a vertex whose flattening cannot succeed: all-fixed gaps; emulate with
    # the Delta-complex monogon sphere (self faces)
    m = mesh_from_coarse([(0, 1, 1), (1, 1, 2)], [(1.0, 1.2, 1.0), (1.2, 1.0, 1.0)],
                         [(2, 3, 0), (1, 5, 4)])
    key = m.state_key()
    for v in (0, 1, 2):
        assert not remove_vertex(m, v).ok
    assert m.state_key() == key


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_removals_keep_invariants(seed):
    _, _, m = make(meshgen.noisy_sphere, 3, 0.1, seed)
    from intricoarse import flip_to_delaunay
    flip_to_delaunay(m)
    chi = m.euler_characteristic()
    rng = np.random.default_rng(seed)
    for v in rng.permutation(m.n_vertices)[:40]:
        res = remove_vertex(m, int(v))
        if not res.ok:
            continue
        assert m.euler_characteristic() == chi
        assert abs(m.total_curvature() - 2 * math.pi * chi) < 1e-8
        assert not m.delaunay_violations()
    m.check_connectivity()
