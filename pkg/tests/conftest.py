import math

import numpy as np
import pytest

from intricoarse import IntrinsicMesh
from intricoarse import meshgen


def make(gen, *args, **kw):
    pts, faces = gen(*args, **kw)
    return pts, faces, IntrinsicMesh.from_positions(pts, faces)


def halfedge_between(mesh, a, b):
    for h in mesh.outgoing(a):
        if mesh.tip(h) == b:
            return h
    raise KeyError((a, b))


def hexagon_fan():
    """Regular flat hexagon around vertex 0 with unit spokes."""
    pts = [(0.0, 0.0, 0.0)] + [(math.cos(k * math.pi / 3), math.sin(k * math.pi / 3), 0.0)
                               for k in range(6)]
    faces = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return np.array(pts), faces


def world_frame(mesh, p, v):
    """Rotation from the normalized frame of ``v`` to the xy plane (Theta = Theta_hat)."""
    h = mesh.outgoing(v)[0]
    d = p[mesh.tip(h)] - p[v]
    return complex(math.cos(math.atan2(d[1], d[0]) - mesh.hp[h]),
                   math.sin(math.atan2(d[1], d[0]) - mesh.hp[h]))


@pytest.fixture
def sphere642():
    return make(meshgen.icosphere, 8)


def planar_oracle_run(seed, n_max=200, every=5):
    """Coarsen a random flat disk in a random order and compare the user
    channel's error vectors with the exact ancestor center of mass.

    The oracle keeps, per surviving vertex, the share of every original
    vertex's mass it has absorbed (through the logged transfer weights).
    Returns ``(worst error where Theta = Theta_hat, number of checks,
    largest curvature-channel error vector, largest curvature cost)``.
    """
    from intricoarse import ChannelState, CoarsenConfig, Coarsener, removal_cost

    rng = np.random.default_rng(seed)
    n = int(rng.integers(30, n_max + 1))
    p, f = meshgen.random_planar(n, seed)
    z = p[:, 0] + 1j * p[:, 1]
    mesh = IntrinsicMesh.from_positions(p, f)
    mass = rng.uniform(0.5, 2.0, len(p))
    bnd = [v for v in mesh.vertex_ids() if mesh.vb[v]]
    c = Coarsener(mesh, CoarsenConfig(fixed=bnd, masses={"user": (mass, 1.0)}))
    user = c.channels.channel("user")
    curv = (c.channels.channel("K+"), c.channels.channel("K-"))
    W = np.eye(len(p))
    worst, checks, cost = 0.0, 0, 0.0
    order = [int(v) for v in rng.permutation(mesh.vertex_ids()) if not mesh.vb[v]]
    for step, i in enumerate(order):
        # cost of removing i now, curvature channels only
        sub = ChannelState([c.channels.names[k] for k in curv], [1.0, 1.0],
                           [c.channels.m[k] for k in curv], [c.channels.t[k] for k in curv])
        out, alpha = c._tentative(i)
        if alpha is not None:
            cost = max(cost, removal_cost(sub, i, alpha, out.spokes))
        if not c.remove(i):
            continue
        for j, a in c.last_alpha.items():
            W[:, j] += W[:, i] * a
        W[:, i] = 0.0
        if step % every and step != len(order) - 1:
            continue
        mw = W * mass[:, None]
        for j in mesh.vertex_ids():
            # corners of the square keep Theta != Theta_hat; skip them
            if abs(mesh.vT[j] - mesh.target_angle_sum(j)) > 1e-9:
                continue
            exact = (mw[:, j] @ z) / mw[:, j].sum() - z[j]
            got = c.channels.t[user][j] * world_frame(mesh, p, j)
            worst = max(worst, abs(got - exact))
            checks += 1
    curv_t = max(abs(t) for ch in curv for t in c.channels.t[ch])
    return worst, checks, curv_t, cost
