"""Intrinsic edge flips and greedy flipping to an intrinsic Delaunay mesh."""

import cmath
import math
from collections import deque

from .mapping import FlipOp
from .mesh import TWO_PI, MeshError, layout_tip, nxt, prv

DELAUNAY_TOL = 1e-10
STRAIGHT_TOL = 1e-9


def is_flippable(mesh, h):
    t = mesh.ht[h]
    if t == -1 or t // 3 == h // 3:
        return False
    ha = mesh.ha
    # corners within STRAIGHT_TOL of pi count as straight: flipping them
    # would leave a zero-area face
    lim = math.pi - STRAIGHT_TOL
    if ha[h] + ha[nxt(t)] >= lim or ha[nxt(h)] + ha[t] >= lim:
        return False
    # an outer edge glued onto the diagonal cannot be rewired; this also
    # rules out degree-1 endpoints
    diag = (h, t)
    ht = mesh.ht
    for g in (nxt(h), prv(h), nxt(t), prv(t)):
        if ht[g] in diag:
            return False
    return True


def straight_flippable(mesh, h, tol=STRAIGHT_TOL):
    """Flippable except that the corner at the source of ``h`` is straight
    (within ``tol``); the flip then leaves the source on the new diagonal."""
    t = mesh.ht[h]
    if t == -1 or t // 3 == h // 3:
        return False
    ha = mesh.ha
    if ha[nxt(h)] + ha[t] >= math.pi - tol or abs(ha[h] + ha[nxt(t)] - math.pi) > tol:
        return False
    diag = (h, t)
    ht = mesh.ht
    for g in (nxt(h), prv(h), nxt(t), prv(t)):
        if ht[g] in diag:
            return False
    return True


def is_delaunay_edge(mesh, h, tol=DELAUNAY_TOL):
    t = mesh.ht[h]
    if t == -1:
        return True
    return mesh.ha[prv(h)] + mesh.ha[prv(t)] <= math.pi + tol


def flip_edge(mesh, h, log=None, force=False):
    """Flip edge ``h`` (i -> j) to the opposite diagonal; returns halfedge k -> l.

    When ``log`` is a list, a :class:`FlipOp` describing the planar
    re-expression of the two faces is appended to it.  ``force`` skips the
    convexity test (used for straight corners during vertex removal).
    """
    if not force and not is_flippable(mesh, h):
        raise MeshError(f"edge {h} is not flippable", h)
    hv, ht, hl, hp, vh = mesh.hv, mesh.ht, mesh.hl, mesh.hp, mesh.vh
    t = ht[h]
    h1, h2, t1, t2 = nxt(h), prv(h), nxt(t), prv(t)
    i, j, k, l = hv[h], hv[t], hv[h2], hv[t2]
    f1, f2 = h // 3, t // 3

    at_i = mesh.ha[h] + mesh.ha[nxt(t)]
    lij = hl[h]
    pk = layout_tip(lij, hl[h2], hl[h1])
    pl = layout_tip(lij, hl[t1], hl[t2]).conjugate()
    lkl = abs(pk - pl)
    if log is not None:
        quad = (0j, complex(lij, 0.0), pk, pl)
        old1 = [0, 0, 0]
        old1[h % 3], old1[h1 % 3], old1[h2 % 3] = 0, 1, 2
        old2 = [0, 0, 0]
        old2[t % 3], old2[t1 % 3], old2[t2 % 3] = 1, 0, 3
        log.append(FlipOp(f1, f2, quad, tuple(old1), tuple(old2)))

    a1, a2, b1, b2 = ht[h1], ht[h2], ht[t1], ht[t2]
    p_h1, p_h2, p_t1, p_t2 = hp[h1], hp[h2], hp[t1], hp[t2]
    l_jk, l_ki, l_il, l_lj = hl[h1], hl[h2], hl[t1], hl[t2]

    A0, A1, A2 = 3 * f1, 3 * f1 + 1, 3 * f1 + 2
    B0, B1, B2 = 3 * f2, 3 * f2 + 1, 3 * f2 + 2
    remap = {h2: A0, t1: A1, t2: B0, h1: B1}

    mesh._save_face(f1)
    mesh._save_face(f2)
    outer = []
    for x in (a1, a2, b1, b2):
        if x != -1 and x not in remap:
            mesh._save_he(x)
            outer.append(x)
    for v in (i, j, k, l):
        mesh._save_vertex(v)

    def tw(x):
        return remap.get(x, x)

    # new faces: A = (k, i, l) in f1, B = (l, j, k) in f2
    rows = (
        (A0, k, l_ki, tw(a2), p_h2),
        (A1, i, l_il, tw(b1), p_t1),
        (A2, l, lkl, B2, 0.0),
        (B0, l, l_lj, tw(b2), p_t2),
        (B1, j, l_jk, tw(a1), p_h1),
        (B2, k, lkl, A2, 0.0),
    )
    for g, src, ell, twin, phi in rows:
        hv[g], hl[g], ht[g], hp[g] = src, ell, twin, phi
    for g in (A0, A1, B0, B1):
        if ht[g] != -1:
            ht[ht[g]] = g

    lost = []
    for v in {i, j, k, l}:
        old = vh[v]
        if old in remap:
            vh[v] = remap[old]
        elif old == h or old == t:
            lost.append(v)
    for v in lost:
        mesh._pick_reference(v, A1 if v == i else B1)

    mesh._update_face_angles(f1)
    mesh._update_face_angles(f2)
    if force:
        # the law of cosines is ill-conditioned for a (near) straight corner;
        # take angles from the layout and keep the corner sum at i exact
        ha = mesh.ha
        pj = complex(lij, 0.0)
        ha[A0] = _angle(pk, 0j, pl)
        ha[A1] = min(at_i, math.pi)
        ha[A2] = _angle(pl, pk, 0j)
        ha[B0] = _angle(pl, pj, pk)
        ha[B1] = _angle(pj, pk, pl)
        ha[B2] = _angle(pk, pl, pj)
    for v in {i, j, k, l}:
        mesh._update_angle_sum(v)

    # signposts of the new diagonal from its CCW predecessors
    ha = mesh.ha
    hp[B2] = _advance(mesh, k, hp[A0], ha[A0])
    hp[A2] = _advance(mesh, l, hp[B0], ha[B0])
    return B2


def _angle(v, a, b):
    return abs(cmath.phase((a - v) / (b - v)))


def _advance(mesh, v, phi, angle):
    phi = phi + angle * mesh.target_angle_sum(v) / mesh.vT[v]
    return phi % TWO_PI if not mesh.vb[v] else phi


def flip_to_delaunay(mesh, seeds=None, log=None, tol=DELAUNAY_TOL):
    """Greedily flip non-Delaunay edges; returns the number of flips.

    ``seeds`` are halfedges to start from (default: every interior edge).
    """
    ht, ha, fa = mesh.ht, mesh.ha, mesh.fa
    if seeds is None:
        seeds = [h for f, alive in enumerate(fa) if alive
                 for h in (3 * f, 3 * f + 1, 3 * f + 2) if ht[h] > h]
    queue = deque()
    queued = set()
    for h in seeds:
        if ht[h] != -1:
            e = min(h, ht[h])
            if e not in queued:
                queued.add(e)
                queue.append(e)
    flips = 0
    limit = 50 * len(ht) + 1000
    while queue:
        e = queue.popleft()
        queued.discard(e)
        if not fa[e // 3]:
            continue
        t = ht[e]
        if t == -1 or ha[prv(e)] + ha[prv(t)] <= math.pi + tol:
            continue
        if not is_flippable(mesh, e):
            continue
        g = flip_edge(mesh, e, log)
        flips += 1
        if flips > limit:
            raise MeshError("Delaunay flipping did not terminate")
        # the four outer edges of the quad are the new candidates
        for x in (nxt(g), prv(g), nxt(ht[g]), prv(ht[g])):
            if ht[x] != -1:
                m = min(x, ht[x])
                if m not in queued:
                    queued.add(m)
                    queue.append(m)
    return flips
