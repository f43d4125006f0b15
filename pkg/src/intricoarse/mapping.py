"""Point tracking through local operations and prolongation operators.

Every mutating step of the coarsener emits a small self-contained op
carrying the planar data needed to re-express barycentric coordinates.
The same ops drive online tracking and offline replay, so both produce
identical results.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

CLAMP_TOL = 1e-9


def _cross(a, b):
    return a.real * b.imag - a.imag * b.real


def _bary_in(p, q0, q1, q2):
    """Barycentric coordinates of ``p`` in triangle ``(q0, q1, q2)`` (complex
    points), clamped to the triangle and renormalized."""
    w0 = _cross(q1 - p, q2 - p)
    w1 = _cross(q2 - p, q0 - p)
    w2 = _cross(q0 - p, q1 - p)
    s = w0 + w1 + w2
    b = [w0 / s, w1 / s, w2 / s]
    return _clamp(b)


def _clamp(b):
    b0, b1, b2 = b
    if b0 < 0.0 or b1 < 0.0 or b2 < 0.0:
        b0, b1, b2 = max(b0, 0.0), max(b1, 0.0), max(b2, 0.0)
    s = b0 + b1 + b2
    return (b0 / s, b1 / s, b2 / s)


@dataclass(frozen=True)
class FlipOp:
    """Flip inside faces ``f1``/``f2``.

    ``quad`` holds planar positions of (i, j, k, l); ``old1``/``old2`` give
    the quad role of each old face slot.  Afterwards ``f1`` is (k, i, l)
    and ``f2`` is (l, j, k).
    """

    f1: int
    f2: int
    quad: tuple
    old1: tuple
    old2: tuple

    NEW1 = (2, 0, 3)
    NEW2 = (3, 1, 2)

    def faces(self):
        return (self.f1, self.f2)

    def apply(self, f, b):
        q = self.quad
        roles = self.old1 if f == self.f1 else self.old2
        p = b[0] * q[roles[0]] + b[1] * q[roles[1]] + b[2] * q[roles[2]]
        k, l = q[2], q[3]
        kl = l - k
        d = _cross(kl, p - k)
        di = _cross(kl, q[0] - k)
        dj = _cross(kl, q[1] - k)
        eps = 1e-12 * (kl.real * kl.real + kl.imag * kl.imag)
        # a new face can be degenerate (i or j on the diagonal); never use it
        if abs(di) <= eps:
            side_i = False
        elif abs(dj) <= eps:
            side_i = True
        else:
            side_i = d * di >= 0.0
        if side_i:
            r = self.NEW1
            return self.f1, _bary_in(p, q[r[0]], q[r[1]], q[r[2]])
        r = self.NEW2
        return self.f2, _bary_in(p, q[r[0]], q[r[1]], q[r[2]])


@dataclass(frozen=True)
class FlattenOp:
    """Projective re-interpolation after conformally scaling one vertex.

    ``scales`` maps face id to per-slot multipliers (``e^u`` at the
    flattened vertex, 1 elsewhere).
    """

    vertex: int
    u: float
    scales: dict

    def faces(self):
        return tuple(self.scales)

    def apply(self, f, b):
        m = self.scales[f]
        x0, x1, x2 = m[0] * b[0], m[1] * b[1], m[2] * b[2]
        s = x0 + x1 + x2
        return f, (x0 / s, x1 / s, x2 / s)


@dataclass(frozen=True)
class ExciseOp:
    """Removal of a flat vertex; its faces collapse into ``new_face``.

    ``maps`` gives, per old face, the barycentric vector in the new face
    of each old slot; ``vertex_bary`` locates the removed vertex.
    """

    vertex: int
    new_face: int
    maps: dict
    vertex_bary: tuple

    def faces(self):
        return tuple(self.maps)

    def apply(self, f, b):
        m = self.maps[f]
        x = [0.0, 0.0, 0.0]
        for s in range(3):
            bs = b[s]
            if bs:
                v = m[s]
                x[0] += bs * v[0]
                x[1] += bs * v[1]
                x[2] += bs * v[2]
        return self.new_face, _clamp(x)


@dataclass
class RemovalRecord:
    """Ordered atomic ops of one coarsening step (vertex ``-1``: preprocessing)."""

    vertex: int
    ops: list = field(default_factory=list)


class Tracker:
    """Barycentric locations of fine vertices and extra query points.

    Point ``v < n_vertices`` is fine vertex ``v``; it stays attached to
    its vertex (``face == -1``) until an :class:`ExciseOp` removes it.
    """

    def __init__(self, n_vertices):
        self.n_vertices = n_vertices
        self.face = [-1] * n_vertices
        self.bary = [(1.0, 0.0, 0.0)] * n_vertices
        self.by_face = {}
        self.flagged = 0

    def add_point(self, face, bary):
        pid = len(self.face)
        self.face.append(face)
        self.bary.append(tuple(bary))
        self.by_face.setdefault(face, []).append(pid)
        return pid

    def apply(self, op):
        by_face, face, bary = self.by_face, self.face, self.bary
        moved = []
        for f in op.faces():
            pts = by_face.pop(f, None)
            if pts:
                moved.extend((pid, f) for pid in pts)
        for pid, f in moved:
            nf, nb = op.apply(f, bary[pid])
            face[pid] = nf
            bary[pid] = nb
            lst = by_face.get(nf)
            if lst is None:
                by_face[nf] = [pid]
            else:
                lst.append(pid)
        if isinstance(op, ExciseOp):
            v = op.vertex
            if v < self.n_vertices and face[v] == -1:
                face[v] = op.new_face
                bary[v] = op.vertex_bary
                by_face.setdefault(op.new_face, []).append(v)

    def apply_record(self, record):
        for op in record.ops:
            self.apply(op)

    def location(self, pid, mesh):
        """``(face, bary)`` of a point; surviving vertices report a corner."""
        f = self.face[pid]
        if f != -1:
            return f, self.bary[pid]
        h = mesh.vh[pid]
        b = [0.0, 0.0, 0.0]
        b[h % 3] = 1.0
        return h // 3, tuple(b)


def replay(records, n_vertices, points=()):
    """Re-run logged ops over a fresh tracker.

    ``points`` are extra ``(face, bary)`` queries on the input mesh.
    """
    tr = Tracker(n_vertices)
    for f, b in points:
        tr.add_point(f, b)
    for rec in records:
        tr.apply_record(rec)
    return tr


@dataclass
class Prolongation:
    """Sparse |V| x |V~| operator stored as triplets."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    coarse_ids: list
    flagged: int = 0

    @property
    def is_complex(self):
        return np.iscomplexobj(self.vals)

    def to_sparse(self):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)),
                             shape=(self.n_rows, self.n_cols))

    def row_sums(self):
        return np.asarray(self.to_sparse().sum(axis=1)).ravel()


def coarse_index(mesh):
    ids = mesh.vertex_ids()
    return ids, {v: c for c, v in enumerate(ids)}


def build_prolongation(tracker, mesh, fine_ids=None):
    """Scalar prolongation from tracked fine vertices (barycentric rows).

    ``fine_ids`` lists the tracked vertices giving the rows (default: all
    ``tracker.n_vertices``); columns follow ``mesh.vertex_ids()``.
    """
    ids, col = coarse_index(mesh)
    fine_ids = range(tracker.n_vertices) if fine_ids is None else fine_ids
    rows, cols, vals = [], [], []
    hv = mesh.hv
    for r, v in enumerate(fine_ids):
        f = tracker.face[v]
        if f == -1:
            rows.append(r)
            cols.append(col[v])
            vals.append(1.0)
            continue
        b = tracker.bary[v]
        acc = {}
        for s in range(3):
            if b[s] != 0.0:
                c = col[hv[3 * f + s]]
                acc[c] = acc.get(c, 0.0) + b[s]
        for c in sorted(acc):
            rows.append(r)
            cols.append(c)
            vals.append(acc[c])
    return Prolongation(len(fine_ids), len(ids), np.asarray(rows, dtype=np.int64),
                        np.asarray(cols, dtype=np.int64), np.asarray(vals, dtype=float), ids)


def prolong(P, coarse_values):
    """Apply a prolongation (``Prolongation`` or sparse matrix) to coarse data."""
    M = P.to_sparse() if isinstance(P, Prolongation) else P
    x = np.asarray(coarse_values)
    if x.shape[0] != M.shape[1]:
        raise ValueError(f"expected {M.shape[1]} coarse values, got {x.shape[0]}")
    return M @ x


def _face_frame(mesh, f):
    """Per-slot rotations into the planar frame of face ``f``.

    Returns ``(layout, z)`` where ``layout`` are slot positions and
    ``z[s]`` maps an unnormalized tangent vector at the slot's vertex
    into the face frame (slot-0 edge along the positive real axis).
    """
    hv, hp, ha, vT = mesh.hv, mesh.hp, mesh.ha, mesh.vT
    h0, h1, h2 = 3 * f, 3 * f + 1, 3 * f + 2
    beta = (0.0, math.pi - ha[h1], (math.pi - ha[h1]) + (math.pi - ha[h2]))
    z = []
    for s, h in enumerate((h0, h1, h2)):
        v = hv[h]
        true_angle = hp[h] * vT[v] / mesh.target_angle_sum(v)
        z.append(cmath.exp(1j * (beta[s] - true_angle)))
    return mesh.face_layout(f), z


# coarse faces within this many edge hops of a fine vertex's face are
# searched for a fine neighbor to orient its frame
UNFOLD_DEPTH = 3


def build_vector_prolongation(tracker, fine_mesh, coarse_mesh, power=1):
    """Complex prolongation for tangent vectors (``power`` > 1 for n-direction
    fields encoded as ``z**n``).

    Inputs and outputs are unnormalized tangent vectors: a vector with
    normalized angle ``phi`` at a vertex with angle sum ``Theta`` is stored
    as ``|u| exp(i phi Theta / Theta_hat)``.
    """
    ids, col = coarse_index(coarse_mesh)
    n = tracker.n_vertices
    hv = coarse_mesh.hv
    frames = {}
    locs = [tracker.location(v, coarse_mesh) for v in range(n)]

    def frame(f):
        fr = frames.get(f)
        if fr is None:
            fr = frames[f] = _face_frame(coarse_mesh, f)
        return fr

    def unfolded(f):
        """Rigid maps ``(a, r)`` taking layouts of faces near ``f`` into the
        frame of ``f`` (``x -> a + r x``), found by unfolding across edges."""
        maps = {f: (0j, 1 + 0j)}
        ring = [f]
        for _ in range(UNFOLD_DEPTH):
            nxt_ring = []
            for g in ring:
                a, r = maps[g]
                lg = frame(g)[0]
                for s in range(3):
                    t = coarse_mesh.ht[3 * g + s]
                    k = t // 3
                    if t == -1 or k in maps:
                        continue
                    lk = frame(k)[0]
                    q = t % 3
                    # tip of t meets source of 3g+s and vice versa
                    p0, p1 = a + r * lg[s], a + r * lg[(s + 1) % 3]
                    rot = (p1 - p0) / (lk[q] - lk[(q + 1) % 3])
                    rot /= abs(rot)
                    maps[k] = (p0 - rot * lk[(q + 1) % 3], rot)
                    nxt_ring.append(k)
            ring = nxt_ring
        return maps

    def image(w, maps):
        """Position of fine vertex ``w`` in the unfolded frame, or None."""
        fw, b = locs[w]
        if fw in maps:
            a, r = maps[fw]
            lay = frame(fw)[0]
            return a + r * (b[0] * lay[0] + b[1] * lay[1] + b[2] * lay[2])
        return None

    def transport(v, f, p):
        """Rotation from the fine frame at ``v`` to the layout of face ``f``."""
        maps = unfolded(f)
        order = list(maps)
        best = None
        for w, h in sorted((fine_mesh.tip(h), h) for h in fine_mesh.outgoing(v)):
            if w == v:
                continue
            q = image(w, maps)
            if q is None or abs(q - p) == 0.0:
                continue
            rank = order.index(locs[w][0])
            if best is None or rank < best[0]:
                best = (rank, q, h)
        if best is None:
            return None
        _, q, h = best
        what = (q - p) / abs(q - p)
        unnorm = fine_mesh.hp[h] * fine_mesh.vT[v] / fine_mesh.target_angle_sum(v)
        return cmath.exp(1j * unnorm) / what

    rows, cols, vals = [], [], []
    flagged = 0
    for v in range(n):
        f, b = locs[v]
        lay, z = frame(f)
        p = b[0] * lay[0] + b[1] * lay[1] + b[2] * lay[2]
        psi = transport(v, f, p)
        if psi is None and tracker.face[v] == -1:
            # surviving vertex: any incident coarse face holding a fine neighbor
            for g in coarse_mesh.outgoing(v):
                fg = g // 3
                lg, zg = frame(fg)
                psi = transport(v, fg, lg[g % 3])
                if psi is not None:
                    f, lay, z = fg, lg, zg
                    b = [0.0, 0.0, 0.0]
                    b[g % 3] = 1.0
                    break
        entries = {}
        if psi is None:
            flagged += 1
            s = max(range(3), key=lambda s: b[s])
            entries[col[hv[3 * f + s]]] = z[s] ** power
        else:
            for s in range(3):
                if b[s] != 0.0:
                    c = col[hv[3 * f + s]]
                    entries[c] = entries.get(c, 0.0) + b[s] * (psi * z[s]) ** power
        for c in sorted(entries):
            rows.append(v)
            cols.append(c)
            vals.append(entries[c])
    return Prolongation(n, len(ids), np.asarray(rows, dtype=np.int64),
                        np.asarray(cols, dtype=np.int64), np.asarray(vals, dtype=complex),
                        ids, flagged)
