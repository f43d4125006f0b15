"""Intrinsic curvature error: mass channels with error tangent vectors."""

import math
from cmath import exp as cexp
from dataclasses import dataclass, field

INF = math.inf
# curvature below this is round-off in the angle sums of a flat vertex
CURVATURE_EPS = 1e-12


@dataclass
class ChannelState:
    """Per-channel vertex masses ``m`` and error vectors ``t``.

    Error vectors live in the normalized tangent coordinates of their
    vertex and point toward the approximate center of mass of everything
    merged into that vertex.
    """

    names: list
    weights: list
    m: list
    t: list = field(default_factory=list)

    def __post_init__(self):
        if not self.t:
            self.t = [[0j] * len(ms) for ms in self.m]

    def channel(self, name):
        return self.names.index(name)

    def totals(self):
        return [math.fsum(ms) for ms in self.m]


def init_channels(mesh, w_curvature=1.0, w_area=0.0, masses=None):
    """Split curvature into K+ / K- channels; optionally add area and user channels.

    ``masses`` maps a channel name to ``(per-vertex values, weight)``.
    Area masses are rescaled to carry the same total as the curvature
    channels (when those are non-zero).
    """
    n = len(mesh.vh)
    kp = [0.0] * n
    km = [0.0] * n
    for v in mesh.vertex_ids():
        k = mesh.curvature(v)
        if abs(k) < CURVATURE_EPS:
            k = 0.0
        kp[v] = max(k, 0.0)
        km[v] = -min(k, 0.0)
    names = ["K+", "K-"]
    weights = [w_curvature, w_curvature]
    m = [kp, km]
    if w_area:
        area = [0.0] * n
        for f in mesh.face_ids():
            a3 = mesh.face_area(f) / 3.0
            for v in mesh.face_vertices(f):
                area[v] += a3
        curv = math.fsum(kp) + math.fsum(km)
        tot = math.fsum(area)
        if curv > 0.0 and tot > 0.0:
            area = [a * (curv / tot) for a in area]
        names.append("area")
        weights.append(w_area)
        m.append(area)
    for name, (values, weight) in (masses or {}).items():
        values = [float(x) for x in values]
        if len(values) != n:
            raise ValueError(f"channel {name!r} has {len(values)} masses, expected {n}")
        if any(x < 0.0 for x in values):
            raise ValueError(f"channel {name!r} has negative masses")
        names.append(name)
        weights.append(float(weight))
        m.append(values)
    return ChannelState(names, weights, m)


def transfer_weights(deltas, neighbors):
    """Convex weights proportional to |curvature change|; uniform when flat."""
    total = 0.0
    for j in neighbors:
        total += abs(deltas.get(j, 0.0))
    if total == 0.0:
        w = 1.0 / len(neighbors)
        return {j: w for j in neighbors}
    return {j: abs(deltas.get(j, 0.0)) / total for j in neighbors}


def _first_spokes(spokes, i):
    out = {}
    for sp in spokes:
        j = sp[0]
        if j != i and j not in out:
            out[j] = sp
    return out


def _transported(sp, ti: complex) -> complex:
    """``R_ij t_i + e_ji`` for spoke ``(j, phi_ij, phi_ji, length)``."""
    phi_ij: float
    phi_ji: float
    ell: float
    _, phi_ij, phi_ji, ell = sp
    rot = cexp(1j * ((phi_ji + math.pi) - phi_ij))
    return rot * ti + ell * cexp(1j * phi_ji)


def removal_cost(state, i, alpha, spokes):
    """Memory-based cost: sum over channels and neighbors of new mass times
    new error-vector length."""
    if alpha is None:
        return INF
    first = _first_spokes(spokes, i)
    cost: float = 0.0
    w: float
    mi: float
    ti: complex
    acc: float
    a: float
    mj: float
    moved: float
    mn: float
    tn: complex
    for p, w in enumerate(state.weights):
        if not w:
            continue
        mp, tp = state.m[p], state.t[p]
        mi = mp[i]
        ti = tp[i]
        acc = 0.0
        for j, a in alpha.items():
            mj = mp[j]
            moved = a * mi
            mn = moved + mj
            if mn <= 0.0:
                continue
            if moved:
                tn = (moved * _transported(first[j], ti) + mj * tp[j]) / mn
            else:
                tn = tp[j]
            acc += mn * abs(tn)
        cost += w * acc
    return cost


def removal_cost_memoryless(state, i, alpha, spokes):
    """Transport cost of moving the current masses of ``i`` straight to its
    neighbors (mass times edge length)."""
    if alpha is None:
        return INF
    first = _first_spokes(spokes, i)
    cost = 0.0
    for p, w in enumerate(state.weights):
        if not w:
            continue
        mi = state.m[p][i]
        cost += w * sum(a * mi * first[j][3] for j, a in alpha.items())
    return cost


def update_after_removal(state, i, alpha, spokes):
    """Move the masses of ``i`` to its neighbors and merge error vectors."""
    first = _first_spokes(spokes, i)
    for p in range(len(state.names)):
        mp, tp = state.m[p], state.t[p]
        mi = mp[i]
        ti = tp[i]
        if mi:
            for j, a in alpha.items():
                moved = a * mi
                mj = mp[j]
                mn = moved + mj
                if mn > 0.0 and moved:
                    tp[j] = (moved * _transported(first[j], ti) + mj * tp[j]) / mn
                mp[j] = mn
        mp[i] = 0.0
        tp[i] = 0j
