import cmath
import math

import numpy as np
import pytest

from intricoarse import (CoarsenConfig, Coarsener, IntrinsicMesh, Tracker,
                         build_vector_prolongation, flip_edge, prolong, remove_vertex, replay)
from intricoarse import meshgen
from intricoarse.mapping import FlattenOp

from conftest import halfedge_between, make


def test_flatten_op_projective_rule():
    op = FlattenOp(0, 0.0, {5: (1.0, 1.0, 1.0)})
    assert op.apply(5, (0.2, 0.3, 0.5)) == (5, (0.2, 0.3, 0.5))
    eu = math.exp(0.7)
    op = FlattenOp(0, 0.7, {5: (1.0, eu, 1.0)})
    f, b = op.apply(5, (0.2, 0.3, 0.5))
    s = 0.2 + eu * 0.3 + 0.5
    assert f == 5 and b == pytest.approx((0.2 / s, eu * 0.3 / s, 0.5 / s), abs=1e-15)


def test_removed_centroid_tracks_to_thirds():
    s3 = math.sqrt(3.0)
    m = IntrinsicMesh.from_positions([(0, 0, 0), (1, 0, 0), (0.5, s3 / 2, 0), (0.5, s3 / 6, 0)],
                                     [(3, 0, 1), (3, 1, 2), (3, 2, 0)])
    tr = Tracker(4)
    res = remove_vertex(m, 3)
    for op in res.ops:
        tr.apply(op)
    f, b = tr.location(3, m)
    assert m.fa[f]
    assert b == pytest.approx((1 / 3, 1 / 3, 1 / 3), abs=1e-15)


def test_flip_moves_diagonal_midpoint_to_new_midpoint():
    m = IntrinsicMesh.from_positions([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)],
                                     [(0, 1, 2), (0, 2, 3)])
    h = halfedge_between(m, 0, 2)
    f0 = h // 3
    b = [0.0, 0.0, 0.0]
    b[h % 3] = 0.5
    b[(h + 1) % 3] = 0.5
    tr = Tracker(4)
    pid = tr.add_point(f0, b)
    ops = []
    flip_edge(m, h, ops)
    for op in ops:
        tr.apply(op)
    f, bb = tr.location(pid, m)
    corner = {m.hv[3 * f + s]: bb[s] for s in range(3)}
    assert set(corner) >= {1, 3}
    assert corner[1] == pytest.approx(0.5, abs=1e-15)
    assert corner[3] == pytest.approx(0.5, abs=1e-15)
    assert sum(corner.values()) == pytest.approx(1.0, abs=1e-15)


def coarsened(gen, args, n, **cfg):
    p, _, m = make(gen, *args)
    c = Coarsener(m, CoarsenConfig(**cfg))
    c.run(n)
    return p, m, c


def test_barycentrics_valid_and_replay_identical():
    p, m, c = coarsened(meshgen.noisy_sphere, (6, 0.05, 2), 40)
    for v in range(len(p)):
        f, b = c.tracker.location(v, m)
        assert m.fa[f]
        assert min(b) >= 0.0 and abs(sum(b) - 1.0) < 1e-9
    tr = replay(c.records, len(p))
    assert tr.face == c.tracker.face
    assert tr.bary == c.tracker.bary


def test_replay_of_late_query_points():
    p, f, m = make(meshgen.grid, 7, 7)
    rng = np.random.default_rng(1)
    pts = []
    for k in range(0, len(f), 3):
        b = rng.dirichlet([1.0, 1.0, 1.0])
        pts.append((k, tuple(b)))
    bnd = [v for v in m.vertex_ids() if m.vb[v]]
    c = Coarsener(m, CoarsenConfig(fixed=bnd))
    c.run(len(bnd))
    late = replay(c.records, len(p), pts)
    assert late.face[:len(p)] == c.tracker.face
    for pid, (k, b) in enumerate(pts, start=len(p)):
        want = sum(b[s] * p[f[k][s]] for s in range(3))
        fc, bb = late.location(pid, m)
        got = sum(bb[s] * p[m.hv[3 * fc + s]] for s in range(3))
        assert np.linalg.norm(got - want) < 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_planar_tracking_reproduces_positions(seed):
    rng = np.random.default_rng(seed)
    p, f = meshgen.grid(8, 7) if seed % 2 else meshgen.random_planar(80, seed)
    m = IntrinsicMesh.from_positions(p, f)
    bnd = [v for v in m.vertex_ids() if m.vb[v]]
    c = Coarsener(m, CoarsenConfig(fixed=bnd))
    for i in rng.permutation([v for v in m.vertex_ids() if not m.vb[v]]):
        assert c.remove(int(i))
    assert m.n_vertices == len(bnd)
    for v in range(len(p)):
        fc, b = c.tracker.location(v, m)
        q = sum(b[s] * p[m.hv[3 * fc + s]] for s in range(3))
        assert np.linalg.norm(q - p[v]) < 1e-9


def test_scalar_prolongation_rows_and_linear_reproduction():
    p, m, c = coarsened(meshgen.grid, (9, 9), 20, fixed=[0, 8, 72, 80])
    P = c.prolongation()
    assert P.n_rows == 81 and P.n_cols == 20
    assert np.abs(P.row_sums() - 1.0).max() < 1e-12
    ones = prolong(P, np.ones(20))
    assert np.abs(ones - 1.0).max() < 1e-12
    ids = P.coarse_ids
    for k in (0, 1):
        fine = prolong(P, p[ids, k])
        assert np.abs(fine - p[:, k]).max() < 1e-9
    M = P.to_sparse()
    for v in ids:
        row = M.getrow(v)
        assert row.nnz == 1 and row[0, ids.index(v)] == 1.0
    # a coarse indicator prolongs to the barycentric weight of that vertex
    e = np.zeros(20)
    e[3] = 1.0
    hat = prolong(P, e)
    for v in range(81):
        f, b = c.tracker.location(v, m)
        w = sum(b[s] for s in range(3) if m.hv[3 * f + s] == ids[3])
        assert hat[v] == pytest.approx(w, abs=1e-15)


def test_prolong_checks_dimensions_and_zero():
    _, m, c = coarsened(meshgen.icosphere, (3,), 20)
    P = c.prolongation()
    assert not prolong(P, np.zeros(20)).any()
    with pytest.raises(ValueError):
        prolong(P, np.zeros(21))


def unnormalized_x(mesh, p, v):
    """The world x axis at ``v`` as an unnormalized tangent vector."""
    h = mesh.outgoing(v)[0]
    d = p[mesh.tip(h)] - p[v]
    true = mesh.hp[h] * mesh.vT[v] / mesh.target_angle_sum(v)
    return cmath.exp(1j * (true - math.atan2(d[1], d[0])))


def test_vector_prolongation_identity_coarsening():
    p, f, m = make(meshgen.grid, 6, 6)
    fine = m.copy()
    c = Coarsener(m)
    Pv = build_vector_prolongation(c.tracker, fine, m)
    assert Pv.is_complex and Pv.flagged == 0
    vals = Pv.to_sparse().toarray()
    assert np.allclose(np.abs(vals[np.abs(vals) > 0]), 1.0, atol=1e-12)
    rng = np.random.default_rng(0)
    u = rng.normal(size=36) + 1j * rng.normal(size=36)
    assert np.abs(prolong(Pv, u) - u).max() < 1e-12


@pytest.mark.parametrize("shape,div", [((32, 6), 2), ((48, 8), 3)])
def test_constant_field_on_flat_annulus(shape, div):
    # at div 3 some fine vertices have every neighbor in another coarse face
    p, f, fine = make(meshgen.annulus, *shape)
    m = fine.copy()
    bnd = [v for v in m.vertex_ids() if m.vb[v]]
    c = Coarsener(m, CoarsenConfig(fixed=bnd))
    c.run(len(p) // div)
    assert m.n_vertices == len(p) // div
    ids = m.vertex_ids()
    z = np.array([unnormalized_x(m, p, v) for v in ids])
    exact = np.array([unnormalized_x(fine, p, v) for v in range(len(p))])
    Pv = build_vector_prolongation(c.tracker, fine, m)
    assert Pv.flagged == 0
    out = prolong(Pv, z)
    assert np.abs(np.abs(out) - 1.0).max() < 1e-6
    assert np.abs(np.angle(out / exact)).max() < 1e-6
    P4 = build_vector_prolongation(c.tracker, fine, m, power=4)
    assert np.abs(prolong(P4, z ** 4) - exact ** 4).max() < 1e-6
