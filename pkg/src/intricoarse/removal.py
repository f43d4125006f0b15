"""Vertex removal: flatten, flip down to degree 3 (2 on the boundary), excise."""

import math
from dataclasses import dataclass, field

from .flatten import flatten_vertex
from .mapping import ExciseOp
from .mesh import MeshError, nxt, prv
from .retriangulation import flip_edge, flip_to_delaunay, is_flippable, straight_flippable

FLAT_TOL = 1e-8


@dataclass
class RemovalResult:
    vertex: int
    ok: bool
    reason: str = ""
    outcome: object = None
    ops: list = field(default_factory=list)
    face: int = -1
    flips: int = 0


def skip_reason(mesh, i):
    """Why ``i`` can never be removed in the current state, or ``""``."""
    hv = mesh.hv
    out = mesh.outgoing(i)
    for h in out:
        f = h // 3
        a, b, c = hv[3 * f], hv[3 * f + 1], hv[3 * f + 2]
        if a == b or b == c or c == a:
            return "self-face"
    if mesh.vb[i]:
        if mesh.tip(out[0]) == i or hv[prv(out[-1])] == i:
            return "boundary-self-edge"
    return ""


def target_degree(mesh, i):
    return 2 if mesh.vb[i] else 3


def reduce_degree(mesh, i, log=None):
    """Flip edges at ``i`` until it has degree 3 (interior) or 2 (boundary).

    Self-edges go first, then the flippable edge with the largest opposite
    angle sum.  Returns False when stuck; flips already made are not undone.
    """
    goal = target_degree(mesh, i)
    ht, ha, hv = mesh.ht, mesh.ha, mesh.hv
    for _ in range(8 * mesh.degree(i) + 8):
        out = mesh.outgoing(i)
        if len(out) == goal:
            return True
        if len(out) < goal:
            return False
        best, best_sum = -1, -1.0
        for h in out:
            if ht[h] == -1 or not is_flippable(mesh, h):
                continue
            if hv[nxt(h)] == i:
                best = h
                break
            s = ha[prv(h)] + ha[prv(ht[h])]
            if s > best_sum:
                best, best_sum = h, s
        if best == -1:
            # a flat vertex can sit exactly on a ring diagonal (e.g. the
            # centre of a square); the flip then makes a degenerate face
            # at i that the excision absorbs
            for h in out:
                if straight_flippable(mesh, h):
                    s = ha[prv(h)] + ha[prv(ht[h])]
                    if s > best_sum:
                        best, best_sum = h, s
            if best == -1:
                return False
        flip_edge(mesh, best, log, force=True)
    return False


def excise_flat_vertex(mesh, i, log=None):
    """Replace the faces around a flat degree-3 (boundary: degree-2) vertex
    by one face; returns the new face id."""
    if abs(mesh.vT[i] - mesh.target_angle_sum(i)) > FLAT_TOL:
        raise MeshError(f"vertex {i} is not flat", i)
    out = mesh.outgoing(i)
    boundary = mesh.vb[i]
    if len(out) != (2 if boundary else 3):
        raise MeshError(f"vertex {i} has degree {len(out)}", i)
    hv, ht, hl, hp, vh = mesh.hv, mesh.ht, mesh.hl, mesh.hp, mesh.vh
    faces = [h // 3 for h in out]
    if len(set(faces)) != len(faces):
        raise MeshError(f"vertex {i} has a repeated face", i)
    links = [nxt(h) for h in out]
    star = {g for f in faces for g in (3 * f, 3 * f + 1, 3 * f + 2)}
    for g in links:
        if ht[g] in star:
            raise MeshError(f"ring of vertex {i} is glued to itself", i)

    f0 = faces[0]
    if boundary:
        h0, h1 = out
        a, b, c = hv[nxt(h0)], hv[prv(h0)], hv[prv(h1)]
        l_ia, l_ci = hl[h0], hl[prv(h1)]
        rows = [(links[0], a), (links[1], b), (None, c)]
        l_ca = l_ci + l_ia
        vbary = (l_ci / l_ca, 0.0, l_ia / l_ca)
    else:
        a, b, c = (hv[nxt(h)] for h in out)
        # 1/2 l l' sin(theta_i) stays accurate when a corner at i is straight
        ha = mesh.ha
        areas = [0.5 * hl[h] * hl[prv(h)] * math.sin(ha[h]) for h in out]
        tot = areas[0] + areas[1] + areas[2]
        # face k is (i, ring[k], ring[k+1]); a's weight is the area opposite a
        vbary = (areas[1] / tot, areas[2] / tot, areas[0] / tot)
        rows = [(links[0], a), (links[1], b), (links[2], c)]

    if log is not None:
        ring = (a, b, c)
        maps = {}
        for f in faces:
            vecs = []
            for g in (3 * f, 3 * f + 1, 3 * f + 2):
                v = hv[g]
                if v == i:
                    vecs.append(vbary)
                else:
                    vecs.append(tuple(1.0 if ring[s] == v else 0.0 for s in range(3)))
            maps[f] = tuple(vecs)
        log.append(ExciseOp(i, f0, maps, vbary))

    old = [(g, hl[g], ht[g], hp[g]) if g is not None else None for g, _ in rows]
    for f in faces:
        mesh._save_face(f)
    ring_vertices = sorted({a, b, c})
    for v in ring_vertices:
        mesh._save_vertex(v)
    mesh._save_vertex(i)
    for rec in old:
        if rec is not None and rec[2] != -1:
            mesh._save_he(rec[2])

    new = [3 * f0, 3 * f0 + 1, 3 * f0 + 2]
    remap = {}
    for s, (rec, (_, src)) in enumerate(zip(old, rows)):
        g = new[s]
        hv[g] = src
        if rec is None:
            hl[g], ht[g], hp[g] = l_ca, -1, 0.0
        else:
            remap[rec[0]] = g
            hl[g], ht[g], hp[g] = rec[1], rec[2], rec[3]
            if rec[2] != -1:
                ht[rec[2]] = g
    for f in faces[1:]:
        mesh.fa[f] = False
    mesh.valive[i] = False

    for v in ring_vertices:
        ref = vh[v]
        if ref in remap:
            vh[v] = remap[ref]
        elif boundary and v == c:
            vh[v] = new[2]
        elif ref in star:
            mesh._pick_reference(v, new[[a, b, c].index(v)])
    mesh._update_face_angles(f0)
    for v in ring_vertices:
        mesh._update_angle_sum(v)
    for v in ring_vertices:
        mesh.update_signposts_around_vertex(v)
    return f0


def remove_vertex(mesh, i, log=None, delaunay=True):
    """Flatten, reduce and excise ``i``; on any failure the mesh is restored.

    With ``delaunay`` the edges around the former one-ring are then flipped
    back to intrinsic Delaunay.  Returns a :class:`RemovalResult` whose
    ``ops`` are the tracking ops of the whole removal.
    """
    reason = skip_reason(mesh, i)
    if reason:
        return RemovalResult(i, False, reason)
    ops = []
    mesh.begin_journal()
    try:
        if mesh.vb[i] and mesh.degree(i) == 1:
            opp = nxt(mesh.vh[i])
            if not is_flippable(mesh, opp):
                mesh.rollback_journal()
                return RemovalResult(i, False, "ear")
            flip_edge(mesh, opp, ops)
        outcome = flatten_vertex(mesh, i, log=ops)
        if not outcome.success:
            mesh.rollback_journal()
            return RemovalResult(i, False, "flatten-" + outcome.reason, outcome)
        if not reduce_degree(mesh, i, ops):
            mesh.rollback_journal()
            return RemovalResult(i, False, "degree", outcome)
        try:
            face = excise_flat_vertex(mesh, i, ops)
        except MeshError as err:
            mesh.rollback_journal()
            return RemovalResult(i, False, "excise: " + str(err), outcome)
    except BaseException:
        if mesh._journal is not None:
            mesh.rollback_journal()
        raise
    mesh.commit_journal()
    flips = 0
    if delaunay:
        ring = {sp[0] for sp in outcome.spokes if sp[0] != i}
        seeds = [h for j in sorted(ring) for h in mesh.outgoing(j)]
        flips = flip_to_delaunay(mesh, seeds, log=ops)
    if log is not None:
        log.extend(ops)
    return RemovalResult(i, True, "", outcome, ops, face, flips)


__all__ = ["FLAT_TOL", "RemovalResult", "excise_flat_vertex", "reduce_degree",
           "remove_vertex", "skip_reason"]
