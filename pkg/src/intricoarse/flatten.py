"""Conformal flattening of a single vertex.

Only the log scale factor ``u`` at the flattened vertex is unknown; every
edge incident to it is scaled by ``e^{u/2}`` per endpoint at that vertex,
so the lengths of the surrounding ring never change.
"""

import math
from dataclasses import dataclass, field

from .mapping import FlattenOp
from .mesh import TRIANGLE_SLACK, corner_angle, nxt, prv, triangle_valid
from .retriangulation import flip_edge, is_flippable

NEWTON_TOL = 1e-10
MAX_ITER = 100
BISECT_AFTER = 32
MAX_STEP = 5.0
U_LIMIT = 60.0


@dataclass
class FlattenOutcome:
    vertex: int
    success: bool
    u: float = 0.0
    iterations: int = 0
    new_lengths: dict = field(default_factory=dict)
    deltas: dict = field(default_factory=dict)
    spokes: list = field(default_factory=list)
    reason: str = ""
    flips: int = 0


def star_corners(mesh, i, out=None):
    """Corners at ``i``: ``(h, l_ij, l_ki, l_jk, j_is_i, k_is_i)`` per outgoing ``h``."""
    hv, hl = mesh.hv, mesh.hl
    res = []
    for h in (mesh.outgoing(i) if out is None else out):
        r = h % 3
        n = h - 2 if r == 2 else h + 1
        p = h + 2 if r == 0 else h - 1
        res.append((h, hl[h], hl[p], hl[n], hv[n] == i, hv[p] == i))
    return res


def _evaluate(corners, u: float):
    """Angle sum at the vertex and its (negated) derivative in ``u``.

    Faces that break the triangle inequality count with their clamped
    angle (0 or pi) and no derivative, so the sum stays continuous and
    monotone in ``u``.
    """
    # float annotations only matter to the optional compiled build
    s: float = math.exp(0.5 * u)
    ss: float = math.exp(u)
    total: float = 0.0
    dsum: float = 0.0
    a0: float
    b0: float
    c0: float
    a: float
    b: float
    c: float
    aa: float
    bb: float
    cc: float
    xi: float
    a16: float
    cj: float
    ck: float
    d: float
    for _, a0, b0, c0, ji, ki in corners:
        a = a0 * (ss if ji else s)
        b = b0 * (ss if ki else s)
        c = c0 * (s if ji else 1.0) * (s if ki else 1.0)
        # angle at i (between a and b); cotangents at j and k via the area
        aa, bb, cc = a * a, b * b, c * c
        xi = (aa + bb - cc) / (2.0 * a * b)
        total += math.pi if xi <= -1.0 else (0.0 if xi >= 1.0 else math.acos(xi))
        a16 = 2.0 * (aa * bb + bb * cc + cc * aa) - aa * aa - bb * bb - cc * cc
        if a16 <= 0.0:
            continue
        d = 1.0 / math.sqrt(a16)
        cj = (aa + cc - bb) * d
        ck = (bb + cc - aa) * d
        d = 0.5 * (cj + ck)
        if ji:
            d -= 0.5 * ck
        if ki:
            d -= 0.5 * cj
        dsum += d
    return total, dsum


def solve_flatten(corners, target, tol=NEWTON_TOL):
    """Find ``u`` with angle sum ``target``; returns ``(u, iterations, ok)``.

    Safeguarded Newton: steps are clamped, a bracket is maintained, and
    bisection takes over after ``BISECT_AFTER`` iterations or whenever
    Newton leaves the bracket.
    """
    u = 0.0
    lo, hi = -U_LIMIT, U_LIMIT
    theta, d = _evaluate(corners, u)
    it = 0
    while True:
        f = target - theta
        if abs(f) < tol:
            return u, it, True
        if it >= MAX_ITER:
            return u, it, False
        # f increases with u
        if f > 0.0:
            hi = u
        else:
            lo = u
        if it < BISECT_AFTER and 0.0 < d < float("inf"):
            step = -f / d
            step = max(-MAX_STEP, min(MAX_STEP, step))
            un = u + step
            if not lo < un < hi:
                un = 0.5 * (lo + hi)
        else:
            un = 0.5 * (lo + hi)
        if un == u:
            return u, it, False
        u = un
        theta, d = _evaluate(corners, u)
        it += 1


def scaled_lengths(corners, u):
    """New lengths of every halfedge in the star touching the vertex."""
    s = math.exp(0.5 * u)
    ss = math.exp(u)
    out = {}
    for h, a0, b0, c0, ji, ki in corners:
        out[h] = a0 * (ss if ji else s)
        out[prv(h)] = b0 * (ss if ki else s)
        if ji or ki:
            out[nxt(h)] = c0 * (s if ji else 1.0) * (s if ki else 1.0)
    return out


def _star_valid(corners, u):
    s = math.exp(0.5 * u)
    ss = math.exp(u)
    for _, a0, b0, c0, ji, ki in corners:
        a = a0 * (ss if ji else s)
        b = b0 * (ss if ki else s)
        c = c0 * (s if ji else 1.0) * (s if ki else 1.0)
        if not triangle_valid(a, b, c):
            return False
    return True


def _violated_face_edge(mesh, corners, u):
    """Longest edge of the first face invalid after scaling, or None."""
    s = math.exp(0.5 * u)
    ss = math.exp(u)
    for h, a0, b0, c0, ji, ki in corners:
        a = a0 * (ss if ji else s)
        b = b0 * (ss if ki else s)
        c = c0 * (s if ji else 1.0) * (s if ki else 1.0)
        if not triangle_valid(a, b, c):
            cands = sorted(((a, h), (b, prv(h)), (c, nxt(h))), reverse=True)
            for _, g in cands:
                if is_flippable(mesh, g):
                    return g
    return None


def curvature_deltas(mesh, i, corners, u):
    """Angle-sum change at each neighbor (``K~_j - K_j = -dTheta_j``)."""
    hv, ha = mesh.hv, mesh.ha
    s = math.exp(0.5 * u)
    ss = math.exp(u)
    seen = set()
    out = {}
    for h, a0, b0, c0, ji, ki in corners:
        f = h // 3
        if f in seen:
            continue
        seen.add(f)
        a = a0 * (ss if ji else s)
        b = b0 * (ss if ki else s)
        c = c0 * (s if ji else 1.0) * (s if ki else 1.0)
        n, p = nxt(h), prv(h)
        if not ji:
            j = hv[n]
            out[j] = out.get(j, 0.0) - (corner_angle(a, c, b) - ha[n])
        if not ki:
            k = hv[p]
            out[k] = out.get(k, 0.0) - (corner_angle(b, c, a) - ha[p])
    return out


def _scaled_star(mesh, corners, u: float):
    """One pass over the star at ``u``: ``(new_lengths, deltas)`` or None
    if a scaled face breaks the triangle inequality."""
    hv, ha = mesh.hv, mesh.ha
    s: float = math.exp(0.5 * u)
    ss: float = math.exp(u)
    lengths = {}
    deltas = {}
    seen = set()
    acos = math.acos
    a0: float
    b0: float
    c0: float
    a: float
    b: float
    c: float
    aa: float
    bb: float
    cc: float
    x: float
    th: float
    for h, a0, b0, c0, ji, ki in corners:
        a = a0 * (ss if ji else s)
        b = b0 * (ss if ki else s)
        c = c0 * (s if ji else 1.0) * (s if ki else 1.0)
        if not triangle_valid(a, b, c):
            return None
        r = h % 3
        n = h - 2 if r == 2 else h + 1
        p = h + 2 if r == 0 else h - 1
        lengths[h] = a
        lengths[p] = b
        if ji or ki:
            lengths[n] = c
        f = h // 3
        if f in seen:
            continue
        seen.add(f)
        aa, bb, cc = a * a, b * b, c * c
        if not ji:
            x = (aa + cc - bb) / (2.0 * a * c)
            th = math.pi if x <= -1.0 else (0.0 if x >= 1.0 else acos(x))
            j = hv[n]
            deltas[j] = deltas.get(j, 0.0) - (th - ha[n])
        if not ki:
            x = (bb + cc - aa) / (2.0 * b * c)
            th = math.pi if x <= -1.0 else (0.0 if x >= 1.0 else acos(x))
            k = hv[p]
            deltas[k] = deltas.get(k, 0.0) - (th - ha[p])
    return lengths, deltas


def evaluate_flatten(mesh, i, target=None):
    """Non-mutating flatten of ``i`` without flips (fast scoring path)."""
    if target is None:
        target = mesh.target_angle_sum(i)
    out_h = mesh.outgoing(i)
    corners = star_corners(mesh, i, out_h)
    u, it, ok = solve_flatten(corners, target)
    out = FlattenOutcome(i, False, u, it)
    if not ok:
        out.reason = "newton"
        return out
    res = _scaled_star(mesh, corners, u)
    if res is None:
        out.reason = "triangle"
        return out
    out.success = True
    out.new_lengths, out.deltas = res
    out.spokes = mesh.spokes(i, out_h)
    return out


def flatten_vertex(mesh, i, target=None, log=None, flip_budget=None, apply=True):
    """Flatten ``i`` in place, flipping ring edges if scaled lengths break
    a triangle inequality.

    Flips are applied to ``mesh`` (and logged) even on failure; callers
    that need a clean state must journal and roll back.
    """
    if target is None:
        target = mesh.target_angle_sum(i)
    if flip_budget is None:
        flip_budget = 4 * mesh.degree(i)
    flips = 0
    iters = 0
    while True:
        corners = star_corners(mesh, i)
        u, it, ok = solve_flatten(corners, target)
        iters += it
        if ok and _star_valid(corners, u):
            break
        g = _violated_face_edge(mesh, corners, u) if ok else None
        if g is None or flips >= flip_budget:
            return FlattenOutcome(i, False, u, iters, reason="newton" if not ok else "triangle",
                                  flips=flips)
        flip_edge(mesh, g, log)
        flips += 1

    out = FlattenOutcome(i, True, u, iters, flips=flips)
    out.new_lengths = scaled_lengths(corners, u)
    out.deltas = curvature_deltas(mesh, i, corners, u)
    out.spokes = mesh.spokes(i)
    if apply:
        apply_flatten(mesh, i, corners, out, log)
    return out


def apply_flatten(mesh, i, corners, outcome, log=None):
    hv = mesh.hv
    if log is not None and outcome.u != 0.0:
        eu = math.exp(outcome.u)
        scales = {}
        for h, *_ in corners:
            f = h // 3
            if f not in scales:
                scales[f] = tuple(eu if hv[g] == i else 1.0 for g in (3 * f, 3 * f + 1, 3 * f + 2))
        log.append(FlattenOp(i, outcome.u, scales))
    mesh.set_lengths(outcome.new_lengths)


def tentative_flatten(mesh, i, target=None):
    """Flatten ``i`` and report transfer weights, leaving ``mesh`` untouched."""
    from .metric import transfer_weights

    out = evaluate_flatten(mesh, i, target)
    if not out.success:
        mesh.begin_journal()
        try:
            out = flatten_vertex(mesh, i, target, apply=False)
        finally:
            mesh.rollback_journal()
    if not out.success:
        return out, None
    return out, transfer_weights(out.deltas, mesh.neighbors(i) if not out.spokes
                                 else _spoke_neighbors(out.spokes, i))


def _spoke_neighbors(spokes, i):
    seen = []
    for j, *_ in spokes:
        if j != i and j not in seen:
            seen.append(j)
    return seen


__all__ = [
    "FlattenOutcome", "TRIANGLE_SLACK", "evaluate_flatten", "flatten_vertex",
    "solve_flatten", "star_corners", "tentative_flatten",
]
