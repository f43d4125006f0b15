"""Greedy priority-queue coarsening driven by the intrinsic curvature error."""

import heapq
import logging
import math
from cmath import exp as cexp
from dataclasses import dataclass, field

from .flatten import evaluate_flatten, flatten_vertex
from .mapping import RemovalRecord, Tracker, build_prolongation
from .mesh import nxt, triangle_valid
from .metric import (INF, init_channels, removal_cost, removal_cost_memoryless,
                     transfer_weights, update_after_removal)
from .removal import remove_vertex, skip_reason
from .retriangulation import flip_edge, flip_to_delaunay, is_flippable

log = logging.getLogger(__name__)


@dataclass
class CoarsenConfig:
    """Inputs of a coarsening run.

    ``aniso_field`` holds one complex tangent vector per vertex (normalized
    coordinates) and is used with strength ``aniso_tau``.  ``masses`` maps
    extra channel names to ``(values, weight)``.
    """

    target: int = 0
    fixed: frozenset = frozenset()
    w_curvature: float = 1.0
    w_area: float = 0.0
    masses: dict = None
    aniso_tau: float = 0.0
    aniso_field: list = None
    per_component: bool = False

    def __post_init__(self):
        if not 0.0 <= self.aniso_tau <= 1.0:
            raise ValueError("aniso_tau must lie in [0, 1]")
        self.fixed = frozenset(int(v) for v in self.fixed)


@dataclass
class CoarsenStats:
    removals: int = 0
    skipped: int = 0
    skip_reasons: dict = field(default_factory=dict)
    flips: int = 0
    newton_iterations: list = field(default_factory=list)
    init_cost_pairs: list = field(default_factory=list)
    effective_tau: float = 0.0
    exhausted: bool = False


def apply_anisotropic_scaling(mesh, vectors, tau):
    """Scale every edge by ``(1-tau) + tau/2 * ((u_i.e_ij)^2 + (u_j.e_ji)^2)``.

    ``tau`` is halved until every face satisfies the triangle inequality;
    the effective value is returned.
    """
    if tau <= 0.0 or vectors is None:
        return 0.0
    hv, ht, hp, hl = mesh.hv, mesh.ht, mesh.hp, mesh.hl
    edges = []
    for f in mesh.face_ids():
        for h in (3 * f, 3 * f + 1, 3 * f + 2):
            t = ht[h]
            if t != -1 and t < h:
                continue
            i, j = hv[h], hv[nxt(h)]
            phi_ji = hp[t] if t != -1 else math.pi
            di = (vectors[i] * cexp(-1j * hp[h])).real
            dj = (vectors[j] * cexp(-1j * phi_ji)).real
            edges.append((h, t, di * di + dj * dj))
    for _ in range(60):
        new = {}
        for h, t, q in edges:
            new[h] = hl[h] * ((1.0 - tau) + 0.5 * tau * q)
            if t != -1:
                new[t] = new[h]
        ok = all(
            triangle_valid(new[3 * f], new[3 * f + 1], new[3 * f + 2])
            for f in mesh.face_ids()) and all(x > 0.0 for x in new.values())
        if ok:
            break
        tau *= 0.5
    else:
        return 0.0
    mesh.reset_lengths(new)
    return tau


def connected_components(mesh):
    comp = [-1] * len(mesh.vh)
    n = 0
    for s in mesh.vertex_ids():
        if comp[s] != -1:
            continue
        comp[s] = n
        stack = [s]
        while stack:
            v = stack.pop()
            for w in mesh.neighbors(v):
                if comp[w] == -1:
                    comp[w] = n
                    stack.append(w)
        n += 1
    return comp, n


class Coarsener:
    """Stateful coarsening run with online tracking of every fine vertex.

    Construction flips the input to intrinsic Delaunay and scores every
    vertex; :meth:`run` then removes vertices until the target is met.
    """

    def __init__(self, mesh, config=None):
        self.mesh = mesh
        self.config = config or CoarsenConfig()
        self.stats = CoarsenStats()
        self.tracker = Tracker(len(mesh.vh))
        self.fine_ids = mesh.vertex_ids()
        self.records = []
        cfg = self.config
        self.stats.effective_tau = apply_anisotropic_scaling(mesh, cfg.aniso_field, cfg.aniso_tau)
        self.components, self.n_components = connected_components(mesh)
        pre = RemovalRecord(-1)
        self.stats.flips += flip_to_delaunay(mesh, log=pre.ops)
        self._commit(pre)
        self.channels = init_channels(mesh, cfg.w_curvature, cfg.w_area, cfg.masses)
        self.version = [0] * len(mesh.vh)
        self.cost = [INF] * len(mesh.vh)
        self.heap = []
        self.last_alpha = None
        self.initialize_queue()

    # ------------------------------------------------------------------

    def _commit(self, record):
        self.tracker.apply_record(record)
        self.records.append(record)

    def _tentative(self, i):
        """Flatten outcome and transfer weights for ``i`` (mesh untouched)."""
        mesh = self.mesh
        if skip_reason(mesh, i):
            return None, None
        out = None
        if not (mesh.vb[i] and mesh.degree(i) == 1):
            out = evaluate_flatten(mesh, i)
            self.stats.newton_iterations.append(out.iterations)
        if out is None or not out.success:
            mesh.begin_journal()
            try:
                if mesh.vb[i] and mesh.degree(i) == 1:
                    opp = nxt(mesh.vh[i])
                    if not is_flippable(mesh, opp):
                        return None, None
                    flip_edge(mesh, opp)
                out = flatten_vertex(mesh, i, apply=False)
                self.stats.newton_iterations.append(out.iterations)
            finally:
                mesh.rollback_journal()
            if not out.success:
                return None, None
        nbrs = []
        for sp in out.spokes:
            j = sp[0]
            if j != i and j not in nbrs:
                nbrs.append(j)
        if not nbrs:
            return None, None
        return out, transfer_weights(out.deltas, nbrs)

    def score(self, i, initial=False):
        if not self.mesh.valive[i] or i in self.config.fixed:
            return INF
        out, alpha = self._tentative(i)
        if alpha is None:
            return INF
        if initial:
            c = removal_cost_memoryless(self.channels, i, alpha, out.spokes)
            self.stats.init_cost_pairs.append(
                (c, removal_cost(self.channels, i, alpha, out.spokes)))
            return c
        return removal_cost(self.channels, i, alpha, out.spokes)

    def _push(self, i, c):
        self.version[i] += 1
        self.cost[i] = c
        heapq.heappush(self.heap, (c, i, self.version[i]))

    def initialize_queue(self):
        self.heap = []
        for i in self.mesh.vertex_ids():
            self._push(i, self.score(i, initial=True))

    # ------------------------------------------------------------------

    def target_count(self, n):
        if self.config.per_component:
            return n * self.n_components
        return n

    def step(self):
        """Remove the cheapest removable vertex; False when none is left."""
        mesh = self.mesh
        heap = self.heap
        while heap:
            c, i, ver = heapq.heappop(heap)
            if ver != self.version[i] or not mesh.valive[i]:
                continue
            if c == INF:
                heapq.heappush(heap, (c, i, ver))
                self.stats.exhausted = True
                return False
            if self.remove(i):
                return True
        self.stats.exhausted = True
        return False

    def remove(self, i):
        """Remove vertex ``i`` now, updating masses, tracking and the queue.

        Returns False (and marks ``i`` infeasible) when the removal fails.
        """
        mesh = self.mesh
        rec = RemovalRecord(i)
        res = remove_vertex(mesh, i, rec.ops)
        if not res.ok:
            self.stats.skipped += 1
            key = res.reason.split(":")[0]
            self.stats.skip_reasons[key] = self.stats.skip_reasons.get(key, 0) + 1
            self._push(i, INF)
            return False
        out = res.outcome
        self.stats.newton_iterations.append(out.iterations)
        nbrs = []
        for sp in out.spokes:
            j = sp[0]
            if j != i and j not in nbrs:
                nbrs.append(j)
        alpha = transfer_weights(out.deltas, nbrs)
        update_after_removal(self.channels, i, alpha, out.spokes)
        self.last_alpha = alpha
        self.stats.flips += res.flips
        self._commit(rec)
        self.stats.removals += 1
        for j in nbrs:
            self._push(j, self.score(j))
        return True

    def run(self, n=None, callback=None):
        """Coarsen to ``n`` vertices (default: the configured target)."""
        n = self.config.target if n is None else n
        goal = self.target_count(n)
        count = self.mesh.n_vertices
        while count > goal:
            if not self.step():
                log.info("queue exhausted at %d vertices", count)
                break
            count -= 1
            if callback is not None:
                callback(self)
        return self

    def prolongation(self):
        """Scalar prolongation from the vertices alive at the start to the
        current mesh."""
        return build_prolongation(self.tracker, self.mesh, self.fine_ids)


def coarsen_to_count(mesh, n, config=None, callback=None):
    cfg = config or CoarsenConfig(target=n)
    return Coarsener(mesh, cfg).run(n, callback)
