import math

import numpy as np
import pytest

from intricoarse import (CoarsenConfig, Coarsener, IntrinsicMesh, apply_anisotropic_scaling,
                         coarsen_to_count)
from intricoarse import meshgen
from intricoarse.coarsen import connected_components

from conftest import halfedge_between, make, world_frame


def test_target_at_vertex_count_is_noop():
    _, _, m = make(meshgen.grid, 5, 5)
    key = m.state_key()
    c = coarsen_to_count(m, m.n_vertices)
    assert c.stats.removals == 0
    assert all(not r.ops for r in c.records)
    assert m.state_key() == key


def test_all_fixed_is_noop():
    _, _, m = make(meshgen.icosphere, 3)
    key = m.state_key()
    c = Coarsener(m, CoarsenConfig(fixed=m.vertex_ids()))
    assert all(x == math.inf for x in c.cost)
    c.run(10)
    assert c.stats.exhausted and c.stats.removals == 0
    assert m.state_key() == key


def test_fixed_vertices_survive():
    _, _, m = make(meshgen.bumpy_sphere, 6)
    fixed = set(range(0, m.n_vertices, 17))
    c = coarsen_to_count(m, 40, CoarsenConfig(target=40, fixed=fixed))
    assert m.n_vertices == 40
    assert fixed <= set(m.vertex_ids())
    assert c.stats.removals == 362 - 40


def test_config_rejects_bad_tau():
    with pytest.raises(ValueError):
        CoarsenConfig(aniso_tau=1.5)


def test_anisotropy_tau_zero_leaves_lengths():
    _, _, m = make(meshgen.grid, 4, 4)
    before = list(m.hl)
    assert apply_anisotropic_scaling(m, [1 + 0j] * len(m.vh), 0.0) == 0.0
    assert m.hl == before


def x_axis_field(mesh, p):
    # the world x direction in each vertex's normalized coordinates
    return [world_frame(mesh, p, v).conjugate() for v in range(len(p))]


def test_anisotropy_grid_factors():
    p, _, m = make(meshgen.grid, 5, 5)
    before = list(m.hl)
    tau = apply_anisotropic_scaling(m, x_axis_field(m, p), 0.5)
    assert tau == 0.5
    corners = {0, 4, 20, 24}
    for h in range(len(m.hv)):
        i, j = m.hv[h], m.tip(h)
        if i in corners or j in corners:
            continue
        d = p[j] - p[i]
        e = d / np.linalg.norm(d)
        # (u_i . e_ij)^2 = (u_j . e_ji)^2 = e_x^2 for a constant field
        factor = (1 - tau) + tau / 2 * (2 * e[0] ** 2)
        assert m.hl[h] == pytest.approx(before[h] * factor, abs=1e-12)
    # axis edge x1, perpendicular x0.5, diagonal x0.75
    assert m.hl[halfedge_between(m, 6, 11)] == pytest.approx(1.0, abs=1e-12)
    assert m.hl[halfedge_between(m, 6, 7)] == pytest.approx(0.5, abs=1e-12)
    assert m.hl[halfedge_between(m, 6, 12)] == pytest.approx(0.75 * math.sqrt(2), abs=1e-12)


def test_anisotropy_full_strength_is_halved():
    p, _, m = make(meshgen.grid, 4, 4)
    # tau = 1 collapses edges perpendicular to the field
    tau = apply_anisotropic_scaling(m, x_axis_field(m, p), 1.0)
    assert tau == 0.5
    for f in m.face_ids():
        assert min(m.face_lengths(f)) > 0


def test_anisotropic_run_reports_effective_tau():
    p, _, m = make(meshgen.grid, 6, 6)
    bnd = [v for v in m.vertex_ids() if m.vb[v]]
    c = Coarsener(m, CoarsenConfig(fixed=bnd, aniso_tau=1.0, aniso_field=x_axis_field(m, p)))
    assert c.stats.effective_tau == 0.5
    c.run(len(bnd))
    assert m.n_vertices == len(bnd)


def two_spheres():
    p, f = meshgen.icosphere(4)
    q = p + np.array([3.0, 0, 0])
    n = len(p)
    return np.vstack([p, q]), f + [(a + n, b + n, c + n) for a, b, c in f]


def test_per_component_target():
    p, f = two_spheres()
    m = IntrinsicMesh.from_positions(p, f)
    comp, k = connected_components(m)
    assert k == 2
    c = coarsen_to_count(m, 30, CoarsenConfig(target=30, per_component=True))
    assert m.n_vertices == 60
    assert c.target_count(30) == 60
    m2 = IntrinsicMesh.from_positions(p, f)
    coarsen_to_count(m2, 30)
    assert m2.n_vertices == 30


def test_runs_are_deterministic():
    runs = []
    for _ in range(2):
        _, _, m = make(meshgen.noisy_sphere, 5, 0.05, 3)
        c = coarsen_to_count(m, 50)
        runs.append((m.state_key(), [(r.vertex, repr(r.ops)) for r in c.records]))
    assert runs[0] == runs[1]


def test_icosphere_642_to_64_audit(sphere642):
    _, _, m = sphere642
    assert m.n_vertices == 642
    counts = []
    c = coarsen_to_count(m, 64, callback=lambda s: counts.append(s.mesh.n_vertices))
    assert m.n_vertices == 64
    assert counts == list(range(641, 63, -1))
    assert abs(m.total_curvature() - 4 * math.pi) < 1e-8
    assert not m.delaunay_violations()
    m.check_connectivity()
    assert c.stats.skipped == 0


def test_torus_keeps_topology_until_queue_is_exhausted():
    _, _, m = make(meshgen.torus, 12, 6)
    c = coarsen_to_count(m, 1)
    assert m.euler_characteristic() == 0
    assert abs(m.total_curvature()) < 1e-8
    if m.n_vertices > 1:
        assert c.stats.exhausted
    m.check_connectivity()


def test_queue_minimum_on_bump_grid_is_far_from_bump():
    def bump(x, y):
        return 0.8 * np.exp(-((x - 2.0) ** 2 + (y - 2.0) ** 2))
    p, _, m = make(meshgen.grid, 10, 10, height=bump)
    c = Coarsener(m)
    cost, v, _ = c.heap[0]
    finite = [(x, i) for i, x in enumerate(c.cost) if x != math.inf]
    assert (cost, v) == min(finite)
    # the bump's curvature is non-negligible within about 3 units of its center
    assert np.hypot(p[v, 0] - 2.0, p[v, 1] - 2.0) > 3.0
    near = [c.cost[i] for i in m.vertex_ids()
            if not m.vb[i] and np.hypot(p[i, 0] - 2.0, p[i, 1] - 2.0) < 1.5]
    assert min(near) > cost
