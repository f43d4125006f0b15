"""Solvers that use the coarse mesh: Laplacian, Poisson, multigrid, distances,
geodesic tracing."""

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.sparse.linalg import spsolve

from .mapping import Prolongation, coarse_index
from .mesh import heron_area, layout_tip, nxt, prv


def _as_sparse(P):
    return P.to_sparse() if isinstance(P, Prolongation) else sp.csr_matrix(P)


def cotan_laplacian(mesh):
    """Cotan stiffness ``L`` (positive semidefinite) and lumped mass ``M``.

    Rows and columns follow ``mesh.vertex_ids()``.  Off-diagonal entries are
    ``-(cot a + cot b)/2``, summed over parallel edges of a Delta-complex.
    """
    ids, col = coarse_index(mesh)
    hv, hl, ha = mesh.hv, mesh.hl, mesh.ha
    n = len(ids)
    rows, cols, vals = [], [], []
    mass = np.zeros(n)
    for f in mesh.face_ids():
        area = heron_area(hl[3 * f], hl[3 * f + 1], hl[3 * f + 2])
        for h in (3 * f, 3 * f + 1, 3 * f + 2):
            i, j = col[hv[h]], col[hv[nxt(h)]]
            mass[i] += area / 3.0
            # the corner at the source of prev(h) is opposite h; the twin
            # adds the cotangent from the other side
            w = 0.5 / math.tan(ha[prv(h)])
            rows += [i, j, i, j]
            cols += [j, i, i, j]
            vals += [-w, -w, w, w]
    L = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    L.sum_duplicates()
    return L, sp.diags(mass).tocsr()


def _pinned_solve(A, b, pin):
    """Solve a singular (constant-nullspace) system with ``x[pin] = 0``."""
    n = A.shape[0]
    keep = np.ones(n, dtype=bool)
    keep[pin] = False
    A = sp.csr_matrix(A)
    x = np.zeros(n, dtype=np.result_type(A.dtype, b.dtype))
    x[keep] = spsolve(A[keep][:, keep].tocsc(), b[keep])
    return x


def poisson_solve(L, b, dirichlet=None, pin=0, tol=1e-10):
    """Solve ``L x = b``.

    ``dirichlet`` maps row indices to prescribed values.  Without it the
    operator has constants in its kernel, so ``b`` must sum to zero and the
    gauge is fixed by ``x[pin] = 0``.
    """
    b = np.asarray(b, dtype=float)
    L = sp.csr_matrix(L)
    n = L.shape[0]
    if dirichlet:
        fixed = np.array(sorted(dirichlet), dtype=np.int64)
        vals = np.array([dirichlet[k] for k in fixed], dtype=float)
        free = np.setdiff1d(np.arange(n), fixed)
        x = np.zeros(n)
        x[fixed] = vals
        rhs = b[free] - L[free][:, fixed] @ vals
        x[free] = spsolve(L[free][:, free].tocsc(), rhs)
        return x
    scale = max(np.abs(b).sum(), 1e-300)
    if abs(b.sum()) > max(tol * scale, 1e-12):
        raise ValueError("singular Poisson system: right-hand side must have zero sum "
                         "(or supply Dirichlet values)")
    return _pinned_solve(L, b, pin)


def remove_mean(x, M):
    m = M.diagonal()
    return x - (m @ x) / m.sum()


def poisson_coarse(b_fine, P, L_coarse, dirichlet=None, pin=0):
    """Restrict ``b_fine`` with ``P^T``, solve on the coarse mesh, prolong."""
    Ps = _as_sparse(P)
    b = np.asarray(b_fine, dtype=float)
    if b.shape[0] != Ps.shape[0]:
        raise ValueError(f"expected {Ps.shape[0]} fine values, got {b.shape[0]}")
    bc = Ps.T @ b
    xc = poisson_solve(L_coarse, bc, dirichlet, pin)
    return Ps @ xc


# ----------------------------------------------------------------------
# multigrid


def build_hierarchy(mesh, levels=3, factor=0.25, config=None):
    """Coarsen ``mesh`` repeatedly; returns per-level meshes and the
    prolongations ``P_l`` from level ``l+1`` to level ``l``."""
    from .coarsen import Coarsener, CoarsenConfig

    meshes = [mesh]
    Ps = []
    cur = mesh
    for _ in range(levels - 1):
        nxt_mesh = cur.copy()
        target = max(4, int(round(cur.n_vertices * factor)))
        cfg = config or CoarsenConfig()
        c = Coarsener(nxt_mesh, cfg)
        c.run(target)
        Ps.append(c.prolongation().to_sparse())
        meshes.append(nxt_mesh)
        cur = nxt_mesh
    return meshes, Ps


@dataclass
class MultigridResult:
    x: np.ndarray
    residuals: list
    converged: bool
    reason: str = ""

    @property
    def cycles(self):
        return len(self.residuals) - 1

    def convergence_factor(self):
        """Geometric mean residual reduction per V-cycle."""
        r = self.residuals
        if len(r) < 2 or r[0] == 0.0:
            return 0.0
        return (r[-1] / r[0]) ** (1.0 / (len(r) - 1))

    def factors(self):
        r = self.residuals
        return [r[k + 1] / r[k] for k in range(len(r) - 1) if r[k] > 0.0]


class Multigrid:
    """Galerkin V-cycle: ``A_{l+1} = P_l^T A_l P_l``, symmetric Gauss-Seidel
    smoothing, pinned direct solve on the coarsest level.

    ``singular`` marks operators with constant kernel (closed surfaces);
    residuals are then measured after projecting out the mean.
    """

    def __init__(self, A, prolongations, sweeps=3, singular=True):
        self.A = [sp.csr_matrix(A)]
        self.P = [sp.csr_matrix(P) for P in prolongations]
        for P in self.P:
            self.A.append(sp.csr_matrix(P.T @ self.A[-1] @ P))
        self.sweeps = sweeps
        self.singular = singular
        self.lower = [sp.tril(a, format="csr") for a in self.A]
        self.upper = [sp.triu(a, format="csr") for a in self.A]
        coarse = self.A[-1].toarray()
        if singular:
            n = coarse.shape[0]
            # bordered system fixes the constant mode
            B = np.zeros((n + 1, n + 1))
            B[:n, :n] = coarse
            B[:n, n] = 1.0
            B[n, :n] = 1.0
            self._coarse = np.linalg.inv(B)
        else:
            self._coarse = np.linalg.inv(coarse)

    def _smooth(self, lvl, x, b, forward):
        from scipy.sparse.linalg import spsolve_triangular

        A = self.A[lvl]
        for _ in range(self.sweeps):
            r = b - A @ x
            if forward:
                x = x + spsolve_triangular(self.lower[lvl], r, lower=True)
            else:
                x = x + spsolve_triangular(self.upper[lvl], r, lower=False)
        return x

    def _coarse_solve(self, b):
        if self.singular:
            n = b.shape[0]
            rhs = np.append(b - b.mean(), 0.0)
            return (self._coarse @ rhs)[:n]
        return self._coarse @ b

    def vcycle(self, x, b, lvl=0):
        if lvl == len(self.A) - 1:
            return self._coarse_solve(b)
        x = self._smooth(lvl, x, b, True)
        r = b - self.A[lvl] @ x
        P = self.P[lvl]
        e = self.vcycle(np.zeros(P.shape[1]), P.T @ r, lvl + 1)
        x = x + P @ e
        return self._smooth(lvl, x, b, False)

    def residual(self, x, b):
        r = b - self.A[0] @ x
        if self.singular:
            r = r - r.mean()
        return float(np.linalg.norm(r))

    def solve(self, b, tol=1e-8, max_cycles=30, x0=None, relative=True):
        b = np.asarray(b, dtype=float)
        if self.singular:
            b = b - b.mean()
        x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
        res = [self.residual(x, b)]
        goal = tol * (res[0] if relative and res[0] > 0 else 1.0)
        growth = 0
        while res[-1] > goal and len(res) <= max_cycles:
            x = self.vcycle(x, b)
            res.append(self.residual(x, b))
            growth = growth + 1 if res[-1] > res[-2] else 0
            if growth >= 5:
                return MultigridResult(x, res, False, "diverged")
        ok = res[-1] <= goal
        return MultigridResult(x, res, ok, "" if ok else "max-cycles")


def multigrid_solve(A, prolongations, b, tol=1e-8, max_cycles=30, singular=True):
    return Multigrid(A, prolongations, singular=singular).solve(b, tol, max_cycles)


# ----------------------------------------------------------------------
# distances


def edge_graph(mesh):
    """Sparse symmetric edge graph weighted by intrinsic lengths (shortest
    parallel edge kept); indices follow ``mesh.vertex_ids()``."""
    ids, col = coarse_index(mesh)
    best = {}
    hv, hl = mesh.hv, mesh.hl
    for f in mesh.face_ids():
        for h in (3 * f, 3 * f + 1, 3 * f + 2):
            i, j = col[hv[h]], col[hv[nxt(h)]]
            if i == j:
                continue
            key = (i, j) if i < j else (j, i)
            ell = hl[h]
            if key not in best or ell < best[key]:
                best[key] = ell
    if not best:
        return sp.csr_matrix((len(ids), len(ids)))
    keys = np.array(list(best), dtype=np.int64)
    w = np.array(list(best.values()))
    G = sp.csr_matrix((w, (keys[:, 0], keys[:, 1])), shape=(len(ids), len(ids)))
    return (G + G.T).tocsr()


def dijkstra_distance(mesh, sources, graph=None):
    """Edge-graph shortest path distance to the nearest source (``inf`` if
    unreachable).  ``sources`` are vertex ids."""
    ids, col = coarse_index(mesh)
    G = edge_graph(mesh) if graph is None else graph
    idx = [col[s] for s in sources]
    d = dijkstra(G, directed=False, indices=idx, min_only=True)
    return d


def all_pairs_dijkstra(mesh):
    return dijkstra(edge_graph(mesh), directed=False)


class LowRankDistance:
    """Implicit fine distance matrix ``P D P^T`` with row and entry queries."""

    def __init__(self, P, D_coarse):
        self.P = _as_sparse(P)
        self.D = np.asarray(D_coarse, dtype=float)
        self._PD = None

    @property
    def shape(self):
        return (self.P.shape[0], self.P.shape[0])

    @property
    def rank_bound(self):
        return self.D.shape[0]

    def entry(self, i, j):
        pi = self.P.getrow(i)
        pj = self.P.getrow(j)
        return float(pi.data @ self.D[np.ix_(pi.indices, pj.indices)] @ pj.data)

    def row(self, i):
        pi = self.P.getrow(i)
        return self.P @ (pi.data @ self.D[pi.indices])

    def dense(self):
        PD = self.P @ self.D
        return np.asarray(self.P @ PD.T).T


def all_pairs_lowrank(coarse_mesh, P):
    return LowRankDistance(P, all_pairs_dijkstra(coarse_mesh))


# ----------------------------------------------------------------------
# geodesic tracing


@dataclass
class TraceResult:
    face: int
    bary: tuple
    length: float
    hit_boundary: bool = False
    vertex: int = -1


def _face_positions(mesh, h, base=0j, direction=1.0 + 0j):
    """Layout of the face of ``h`` with its source at ``base`` and ``h`` along
    ``direction``; returns positions indexed by slot."""
    f = h // 3
    n, p = nxt(h), prv(h)
    hl = mesh.hl
    tip = layout_tip(hl[h], hl[p], hl[n])
    pos = [0j, 0j, 0j]
    pos[h % 3] = base
    pos[n % 3] = base + hl[h] * direction
    pos[p % 3] = base + tip * direction
    return f, pos


def _cross(a, b):
    return a.real * b.imag - a.imag * b.real


def _start_at_vertex(mesh, v, phi):
    """Outgoing halfedge whose wedge contains normalized direction ``phi`` and
    the true angle offset from it."""
    scale = mesh.vT[v] / mesh.target_angle_sum(v)
    period = mesh.target_angle_sum(v) if not mesh.vb[v] else None
    for h in mesh.outgoing(v):
        d = phi - mesh.hp[h]
        if period is not None:
            d %= period
        off = d * scale
        if -1e-12 <= off <= mesh.ha[h] + 1e-12:
            return h, min(max(off, 0.0), mesh.ha[h])
    return None, None


def trace_geodesic(mesh, v, vec, max_steps=100000):
    """Walk straight from vertex ``v`` along tangent vector ``vec`` (normalized
    coordinates, magnitude = distance).

    Faces are unfolded one by one; the walk stops at the requested length or
    on the boundary.  Passing exactly through a vertex continues on the
    direction that splits its angle sum in half.
    """
    remaining = abs(vec)
    if remaining == 0.0:
        raise ValueError("direction must be nonzero")
    phi = cmath.phase(vec) % (2.0 * math.pi)
    travelled = 0.0
    hv, ht, hl = mesh.hv, mesh.ht, mesh.hl
    h, off = _start_at_vertex(mesh, v, phi)
    if h is None:
        # direction outside the boundary wedge
        b = [0.0, 0.0, 0.0]
        h0 = mesh.vh[v]
        b[h0 % 3] = 1.0
        return TraceResult(h0 // 3, tuple(b), 0.0, True, v)
    f, pos = _face_positions(mesh, h)
    p = 0j
    d = cmath.exp(1j * off)
    entry = None
    for _ in range(max_steps):
        best = None
        for s in range(3):
            g = 3 * f + s
            if g == entry:
                continue
            a, b = pos[s], pos[(s + 1) % 3]
            e = b - a
            den = _cross(d, e)
            if den == 0.0:
                continue
            t = _cross(a - p, e) / den
            u = _cross(a - p, d) / den
            if t > 1e-14 and -1e-12 <= u <= 1.0 + 1e-12 and (best is None or t < best[0]):
                best = (t, u, g, s)
        if best is None or best[0] >= remaining:
            q = p + d * remaining
            travelled += remaining
            w = [_cross(pos[1] - q, pos[2] - q), _cross(pos[2] - q, pos[0] - q),
                 _cross(pos[0] - q, pos[1] - q)]
            tot = w[0] + w[1] + w[2]
            bary = tuple(max(x / tot, 0.0) for x in w)
            sb = sum(bary)
            return TraceResult(f, tuple(x / sb for x in bary), travelled)
        t, u, g, s = best
        travelled += t
        remaining -= t
        p = p + d * t
        if u <= 1e-10 or u >= 1.0 - 1e-10:
            # through a vertex: continue on the bisecting direction
            slot = s if u <= 1e-10 else (s + 1) % 3
            w_v = hv[3 * f + slot]
            hw = 3 * f + slot
            ew = pos[(slot + 1) % 3] - pos[slot]
            back = cmath.phase((-d) / ew)
            if mesh.vb[w_v] or remaining <= 1e-15:
                b = [0.0, 0.0, 0.0]
                b[slot] = 1.0
                return TraceResult(f, tuple(b), travelled, bool(mesh.vb[w_v]), w_v)
            phi_in = mesh.hp[hw] + back * mesh.target_angle_sum(w_v) / mesh.vT[w_v]
            phi = (phi_in + math.pi) % (2.0 * math.pi)
            h, off = _start_at_vertex(mesh, w_v, phi)
            if h is None:
                b = [0.0, 0.0, 0.0]
                b[slot] = 1.0
                return TraceResult(f, tuple(b), travelled, False, w_v)
            # re-anchor the walk at the vertex in a fresh frame
            f, pos = _face_positions(mesh, h)
            p = 0j
            d = cmath.exp(1j * off)
            entry = None
            continue
        tw = ht[g]
        if tw == -1:
            w = [0.0, 0.0, 0.0]
            w[s] = 1.0 - u
            w[(s + 1) % 3] = u
            return TraceResult(f, tuple(w), travelled, True)
        a, b = pos[s], pos[(s + 1) % 3]
        ell = hl[tw]
        # twin runs b -> a; its face lies on the far side of the edge
        apex = layout_tip(ell, hl[prv(tw)], hl[nxt(tw)])
        nf = tw // 3
        npos = [0j, 0j, 0j]
        npos[tw % 3] = b
        npos[nxt(tw) % 3] = a
        npos[prv(tw) % 3] = b + apex * ((a - b) / abs(a - b))
        f, pos, entry = nf, npos, tw
    raise RuntimeError("geodesic trace did not terminate")
