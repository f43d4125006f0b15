"""Halfedge Delta-complex with an intrinsic (edge-length) metric.

Faces own three consecutive halfedge slots: face ``f`` holds halfedges
``3f, 3f+1, 3f+2`` and halfedge ``h`` points from ``hv[h]`` to the source
of ``next(h)``.  Boundary halfedges are not stored; their twin is ``-1``.
Per halfedge we cache the corner angle at its source (between ``h`` and
``prev(h)``) and its signpost angle in the normalized tangent coordinates
of the source vertex.

Interior vertices normalize their angle sum to 2*pi, boundary vertices to
pi, so that on flat regions normalized and true angles coincide.
"""

import math
from cmath import exp as cexp

import numpy as np

TWO_PI = 2.0 * math.pi

#: relative slack used by the strict triangle inequality test
TRIANGLE_SLACK = 1e-10


class MeshError(ValueError):
    """Invalid input or operation; ``element`` names the offending id."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


def nxt(h):
    return h - 2 if h % 3 == 2 else h + 1


def prv(h):
    return h + 2 if h % 3 == 0 else h - 1


def corner_angle(a: float, b: float, c: float) -> float:
    """Angle between sides ``a`` and ``b`` opposite side ``c`` (clamped)."""
    x: float = (a * a + b * b - c * c) / (2.0 * a * b)
    if x >= 1.0:
        return 0.0
    if x <= -1.0:
        return math.pi
    return math.acos(x)


def triangle_valid(a: float, b: float, c: float) -> bool:
    tol: float = TRIANGLE_SLACK * max(a, b, c)
    return a + b - c > tol and b + c - a > tol and c + a - b > tol


def heron_area(a, b, c):
    # stable form (Kahan); lengths sorted descending
    if a < b:
        a, b = b, a
    if b < c:
        b, c = c, b
    if a < b:
        a, b = b, a
    v = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(v) if v > 0.0 else 0.0


class IntrinsicMesh:
    """Connectivity plus intrinsic geometry of a triangulated surface.

    Vertex, face and halfedge ids are stable for the lifetime of the
    mesh: removals mark elements dead and flips rewrite face slots in
    place, so no id is ever reused.
    """

    def __init__(self, n_vertices, faces, lengths):
        nf = len(faces)
        self.n_faces_total = nf
        self.hv = [0] * (3 * nf)
        self.ht = [-1] * (3 * nf)
        self.hl = [0.0] * (3 * nf)
        self.ha = [0.0] * (3 * nf)
        self.hp = [0.0] * (3 * nf)
        self.fa = [True] * nf
        self.vh = [-1] * n_vertices
        self.vT = [0.0] * n_vertices
        self.vb = [False] * n_vertices
        self.valive = [True] * n_vertices
        self._journal = None
        self._build(faces, lengths)

    # ------------------------------------------------------------------
    # construction

    def _build(self, faces, lengths):
        nv = len(self.vh)
        directed = {}
        hv, ht, hl = self.hv, self.ht, self.hl
        for f, tri in enumerate(faces):
            if len(tri) != 3:
                raise MeshError(f"face {f} is not a triangle", f)
            for s in range(3):
                a, b = int(tri[s]), int(tri[(s + 1) % 3])
                if not (0 <= a < nv):
                    raise MeshError(f"face {f} references vertex {a} out of range", f)
                if a == b:
                    raise MeshError(f"face {f} has a repeated vertex", f)
                h = 3 * f + s
                if (a, b) in directed:
                    raise MeshError(
                        f"non-manifold or inconsistently oriented edge ({a}, {b})", (a, b))
                directed[(a, b)] = h
                hv[h] = a
        for (a, b), h in directed.items():
            t = directed.get((b, a), -1)
            ht[h] = t
            if isinstance(lengths, dict):
                key = (a, b) if a < b else (b, a)
                ell = lengths[key]
            else:
                ell = lengths(a, b)
            if not ell > 0.0:
                raise MeshError(f"edge ({a}, {b}) has non-positive length {ell}", (a, b))
            hl[h] = float(ell)
        for f in range(len(faces)):
            a, b, c = hl[3 * f], hl[3 * f + 1], hl[3 * f + 2]
            if not triangle_valid(a, b, c):
                raise MeshError(f"face {f} violates the triangle inequality", f)

        # vertex references and manifold checks
        out_count = [0] * nv
        for h in range(len(hv)):
            v = hv[h]
            out_count[v] += 1
            if ht[h] == -1:
                if self.vh[v] != -1 and ht[self.vh[v]] == -1:
                    raise MeshError(f"non-manifold boundary vertex {v}", v)
                self.vh[v] = h
                self.vb[v] = True
            elif self.vh[v] == -1:
                self.vh[v] = h
        for v in range(nv):
            if self.vh[v] == -1:
                raise MeshError(f"vertex {v} is not referenced by any face", v)
        # an interior vertex's ref must be its lowest outgoing halfedge
        lowest = [-1] * nv
        for h in range(len(hv) - 1, -1, -1):
            lowest[hv[h]] = h
        for v in range(nv):
            if not self.vb[v]:
                self.vh[v] = lowest[v]
            if self.degree(v) != out_count[v]:
                raise MeshError(f"non-manifold vertex {v}", v)

        for f in range(len(faces)):
            self._update_face_angles(f)
        for v in range(nv):
            self._update_angle_sum(v)
            self.hp[self.vh[v]] = 0.0
            self.update_signposts_around_vertex(v)

    @classmethod
    def from_positions(cls, positions, faces, lengths=None):
        """Build from 3D positions; positions are only used for edge lengths.

        ``lengths`` optionally overrides individual edges with a dict keyed
        by sorted vertex pairs.
        """
        p = np.asarray(positions, dtype=float)
        faces = [tuple(int(x) for x in f) for f in faces]
        override = lengths or {}

        def length(a, b):
            key = (a, b) if a < b else (b, a)
            if key in override:
                return override[key]
            return float(np.linalg.norm(p[a] - p[b]))

        return cls(len(p), faces, length)

    # ------------------------------------------------------------------
    # journal (undo log)

    def begin_journal(self):
        self._journal = []

    def commit_journal(self):
        self._journal = None

    def rollback_journal(self):
        j = self._journal
        self._journal = None
        for rec in reversed(j):
            kind = rec[0]
            if kind == 0:
                _, h, self.hv[h], self.ht[h], self.hl[h], self.ha[h], self.hp[h] = rec
            elif kind == 1:
                _, v, self.vh[v], self.vT[v], self.valive[v] = rec
            else:
                _, f, self.fa[f] = rec

    def _save_he(self, h):
        if self._journal is not None:
            self._journal.append((0, h, self.hv[h], self.ht[h], self.hl[h], self.ha[h], self.hp[h]))

    def _save_vertex(self, v):
        if self._journal is not None:
            self._journal.append((1, v, self.vh[v], self.vT[v], self.valive[v]))

    def _save_face(self, f):
        if self._journal is not None:
            self._journal.append((2, f, self.fa[f]))
            for h in (3 * f, 3 * f + 1, 3 * f + 2):
                self._save_he(h)

    # ------------------------------------------------------------------
    # queries

    @property
    def n_vertices(self):
        return sum(self.valive)

    @property
    def n_faces(self):
        return sum(self.fa)

    @property
    def n_edges(self):
        ht = self.ht
        n = 0
        for f, alive in enumerate(self.fa):
            if alive:
                for h in (3 * f, 3 * f + 1, 3 * f + 2):
                    t = ht[h]
                    if t == -1 or h < t:
                        n += 1
        return n

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def vertex_ids(self):
        return [v for v, a in enumerate(self.valive) if a]

    def face_ids(self):
        return [f for f, a in enumerate(self.fa) if a]

    def face_vertices(self, f):
        hv = self.hv
        return hv[3 * f], hv[3 * f + 1], hv[3 * f + 2]

    def face_lengths(self, f):
        hl = self.hl
        return hl[3 * f], hl[3 * f + 1], hl[3 * f + 2]

    def face_area(self, f):
        return heron_area(*self.face_lengths(f))

    def tip(self, h):
        return self.hv[nxt(h)]

    def is_boundary_vertex(self, v):
        return self.vb[v]

    def outgoing(self, v):
        """Outgoing halfedges of ``v`` in counter-clockwise order.

        Boundary vertices start at their outgoing boundary halfedge.
        """
        ht = self.ht
        start = self.vh[v]
        h = start
        out = []
        while True:
            out.append(h)
            h = ht[h + 2 if h % 3 == 0 else h - 1]
            if h == -1 or h == start:
                return out

    def degree(self, v):
        ht = self.ht
        start = self.vh[v]
        h = start
        d = 0
        while True:
            d += 1
            h = ht[h + 2 if h % 3 == 0 else h - 1]
            if h == -1 or h == start:
                return d
            if d > len(ht):
                raise MeshError(f"vertex {v} has an open halfedge orbit", v)

    def target_angle_sum(self, v):
        return math.pi if self.vb[v] else TWO_PI

    def angle_sum(self, v):
        return self.vT[v]

    def neighbors(self, v):
        """Distinct neighbors of ``v`` (excluding ``v``) in orbit order."""
        seen = []
        for h in self.outgoing(v):
            w = self.tip(h)
            if w != v and w not in seen:
                seen.append(w)
        if self.vb[v]:
            w = self.hv[prv(self.outgoing(v)[-1])]
            if w != v and w not in seen:
                seen.append(w)
        return seen

    def spokes(self, v, out=None):
        """Edges at ``v`` as ``(neighbor, phi_at_v, phi_at_neighbor, length)``.

        Boundary vertices also report their incoming boundary edge, whose
        direction at ``v`` is pi in normalized coordinates.
        """
        hv, ht, hp, hl = self.hv, self.ht, self.hp, self.hl
        res = []
        if out is None:
            out = self.outgoing(v)
        for h in out:
            t = ht[h]
            back = hp[t] if t != -1 else math.pi
            res.append((hv[nxt(h)], hp[h], back, hl[h]))
        if self.vb[v]:
            g = prv(out[-1])
            res.append((hv[g], math.pi, hp[g], hl[g]))
        return res

    def curvatures(self):
        """Angle defects: ``(K, kappa)`` dicts for interior/boundary vertices."""
        K, kappa = {}, {}
        for v, alive in enumerate(self.valive):
            if not alive:
                continue
            if self.vb[v]:
                kappa[v] = math.pi - self.vT[v]
            else:
                K[v] = TWO_PI - self.vT[v]
        return K, kappa

    def curvature(self, v):
        return self.target_angle_sum(v) - self.vT[v]

    def total_curvature(self):
        vT, vb = np.asarray(self.vT), np.asarray(self.vb)
        alive = np.asarray(self.valive)
        return float(np.sum(np.where(vb, math.pi, TWO_PI)[alive] - vT[alive]))

    def edge_vector(self, h):
        """Edge vector of ``h`` in the tangent coordinates of its source."""
        return self.hl[h] * cexp(1j * self.hp[h])

    def transport_rotation(self, h):
        """Unit complex rotation transporting vectors from source to tip of ``h``."""
        t = self.ht[h]
        back = self.hp[t] if t != -1 else math.pi
        return cexp(1j * ((back + math.pi) - self.hp[h]))

    # ------------------------------------------------------------------
    # geometry maintenance

    def _update_face_angles(self, f):
        hl, ha = self.hl, self.ha
        h0, h1, h2 = 3 * f, 3 * f + 1, 3 * f + 2
        j = self._journal
        if j is not None:
            hv, ht, hp = self.hv, self.ht, self.hp
            for h in (h0, h1, h2):
                j.append((0, h, hv[h], ht[h], hl[h], ha[h], hp[h]))
        a, b, c = hl[h0], hl[h1], hl[h2]
        aa, bb, cc = a * a, b * b, c * c
        # corner at source of h0 lies between h0 and h2, opposite h1
        x0 = (aa + cc - bb) / (2.0 * a * c)
        x1 = (bb + aa - cc) / (2.0 * b * a)
        x2 = (cc + bb - aa) / (2.0 * c * b)
        ha[h0] = 0.0 if x0 >= 1.0 else (math.pi if x0 <= -1.0 else math.acos(x0))
        ha[h1] = 0.0 if x1 >= 1.0 else (math.pi if x1 <= -1.0 else math.acos(x1))
        ha[h2] = 0.0 if x2 >= 1.0 else (math.pi if x2 <= -1.0 else math.acos(x2))

    def _update_angle_sum(self, v):
        ha = self.ha
        self._save_vertex(v)
        self.vT[v] = sum(ha[h] for h in self.outgoing(v))

    def update_signposts_around_vertex(self, v):
        """Recompute signposts at ``v`` keeping the reference halfedge's angle."""
        ha, hp = self.ha, self.hp
        out = self.outgoing(v)
        scale = self.target_angle_sum(v) / self.vT[v]
        wrap = not self.vb[v]
        ref = self.vh[v]
        k = out.index(ref)
        cum = hp[ref]
        n = len(out)
        for m in range(n):
            h = out[(k + m) % n]
            if m:
                self._save_he(h)
                hp[h] = cum % TWO_PI if wrap else cum
            cum += ha[h] * scale

    def update_signposts_around(self, v):
        """Refresh signposts of ``v`` and of every vertex in its one-ring."""
        self.update_signposts_around_vertex(v)
        for w in self.neighbors(v):
            self.update_signposts_around_vertex(w)

    def _pick_reference(self, v, some_outgoing):
        """Re-choose the reference of ``v`` after its old one was deleted."""
        self._save_vertex(v)
        if self.vb[v]:
            h = some_outgoing
            # rotate clockwise to the outgoing boundary halfedge
            while self.ht[h] != -1:
                h = nxt(self.ht[h])
            self.vh[v] = h
            return
        self.vh[v] = some_outgoing
        self.vh[v] = min(self.outgoing(v))

    def set_lengths(self, updates):
        """Overwrite halfedge lengths (``{h: length}``) and refresh caches.

        Twins are updated too.  Returns the touched faces.
        """
        faces = set()
        for h, ell in updates.items():
            for g in (h, self.ht[h]):
                if g == -1:
                    continue
                self._save_he(g)
                self.hl[g] = ell
                faces.add(g // 3)
        verts = set()
        for f in faces:
            self._update_face_angles(f)
            verts.update(self.face_vertices(f))
        for v in verts:
            self._update_angle_sum(v)
        for v in verts:
            self.update_signposts_around_vertex(v)
        return faces

    def reset_lengths(self, lengths):
        """Replace the whole metric (``{h: length}`` for every live halfedge)."""
        hl = self.hl
        for h, ell in lengths.items():
            self._save_he(h)
            hl[h] = ell
        for f in self.face_ids():
            self._update_face_angles(f)
        for v in self.vertex_ids():
            self._update_angle_sum(v)
            self.update_signposts_around_vertex(v)

    # ------------------------------------------------------------------
    # layouts

    def layout_diamond(self, h):
        """Planar layout of the two faces sharing edge ``h`` (i -> j).

        Returns ``{'i','j','k','l'}`` positions as complex numbers with i at
        the origin, j on the positive real axis, k above and l below.
        """
        t = self.ht[h]
        if t == -1:
            raise MeshError(f"halfedge {h} is on the boundary", h)
        hl = self.hl
        for f in (h // 3, t // 3):
            if not triangle_valid(*self.face_lengths(f)):
                raise MeshError(f"face {f} is degenerate", f)
        lij = hl[h]
        pk = layout_tip(lij, hl[prv(h)], hl[nxt(h)])
        pl = layout_tip(lij, hl[nxt(t)], hl[prv(t)]).conjugate()
        return {"i": 0j, "j": complex(lij, 0.0), "k": pk, "l": pl}

    def face_layout(self, f):
        """Corner positions of face ``f`` in slot order; slot 0 at the origin,
        slot 1 on the positive real axis."""
        a, b, c = self.face_lengths(f)
        return (0j, complex(a, 0.0), layout_tip(a, c, b))

    # ------------------------------------------------------------------
    # audits

    def check_connectivity(self):
        """Raise ``MeshError`` if the halfedge structure is inconsistent."""
        ht, hv = self.ht, self.hv
        for f, alive in enumerate(self.fa):
            if not alive:
                continue
            for h in (3 * f, 3 * f + 1, 3 * f + 2):
                t = ht[h]
                if t == -1:
                    if not self.vb[hv[h]] or not self.vb[hv[nxt(h)]]:
                        raise MeshError(f"boundary halfedge {h} at interior vertex", h)
                    continue
                if not self.fa[t // 3]:
                    raise MeshError(f"halfedge {h} glued to dead face", h)
                if ht[t] != h:
                    raise MeshError(f"twin is not an involution at {h}", h)
                if hv[t] != hv[nxt(h)] or hv[nxt(t)] != hv[h]:
                    raise MeshError(f"twin endpoints disagree at {h}", h)
        count = {}
        for f, alive in enumerate(self.fa):
            if alive:
                for h in (3 * f, 3 * f + 1, 3 * f + 2):
                    count[hv[h]] = count.get(hv[h], 0) + 1
        for v, alive in enumerate(self.valive):
            if not alive:
                if v in count:
                    raise MeshError(f"dead vertex {v} still referenced", v)
                continue
            ref = self.vh[v]
            if not self.fa[ref // 3] or hv[ref] != v:
                raise MeshError(f"vertex {v} has a stale reference", v)
            if self.vb[v] and ht[ref] != -1:
                raise MeshError(f"boundary vertex {v} reference is not on the boundary", v)
            if self.degree(v) != count.get(v, 0):
                raise MeshError(f"vertex {v} orbit does not close", v)

    def max_angle_cache_error(self):
        err = 0.0
        for f, alive in enumerate(self.fa):
            if not alive:
                continue
            a, b, c = self.face_lengths(f)
            fresh = (corner_angle(a, c, b), corner_angle(b, a, c), corner_angle(c, b, a))
            for s in range(3):
                err = max(err, abs(fresh[s] - self.ha[3 * f + s]) / max(fresh[s], 1e-300))
        return err

    def delaunay_violations(self, tol=1e-10):
        """Interior halfedges (one per edge) whose opposite angles exceed pi + tol."""
        bad = []
        ht, ha = self.ht, self.ha
        for f, alive in enumerate(self.fa):
            if not alive:
                continue
            for h in (3 * f, 3 * f + 1, 3 * f + 2):
                t = ht[h]
                if t != -1 and h < t and ha[prv(h)] + ha[prv(t)] > math.pi + tol:
                    bad.append(h)
        return bad

    def state_key(self):
        """Hashable snapshot of all mutable state (for undo checks)."""
        return (tuple(self.hv), tuple(self.ht), tuple(self.hl), tuple(self.ha),
                tuple(self.hp), tuple(self.fa), tuple(self.vh), tuple(self.vT),
                tuple(self.valive))

    def copy(self):
        new = object.__new__(IntrinsicMesh)
        for name in ("hv", "ht", "hl", "ha", "hp", "fa", "vh", "vT", "vb", "valive"):
            setattr(new, name, list(getattr(self, name)))
        new.n_faces_total = self.n_faces_total
        new._journal = None
        return new


def layout_tip(base, left, right):
    """Apex of a triangle over the segment [0, base] with the given side
    lengths to the left (origin) and right end points; apex above the axis."""
    x = (base * base + left * left - right * right) / (2.0 * base)
    y2 = left * left - x * x
    return complex(x, math.sqrt(y2) if y2 > 0.0 else 0.0)


def build_from_positions(positions, faces, lengths=None):
    return IntrinsicMesh.from_positions(positions, faces, lengths)
