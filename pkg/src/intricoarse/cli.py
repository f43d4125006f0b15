"""Command line front-end: ``intricoarse simplify in.obj --target N``."""

import argparse
import logging
import math
import statistics
import sys
import time

import numpy as np

from . import io as mio
from .coarsen import Coarsener, CoarsenConfig
from .mapping import build_vector_prolongation
from .mesh import IntrinsicMesh, MeshError

log = logging.getLogger("intricoarse")


def build_parser():
    ap = argparse.ArgumentParser(prog="intricoarse", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simplify", help="coarsen a triangle mesh intrinsically")
    s.add_argument("input", help="Wavefront OBJ file")
    s.add_argument("--target", type=int, required=True, help="target vertex count")
    s.add_argument("--per-component", action="store_true",
                   help="interpret --target per connected component")
    s.add_argument("--w-curvature", type=float, default=1.0)
    s.add_argument("--w-area", type=float, default=0.0)
    s.add_argument("--masses", help="per-vertex user mass table")
    s.add_argument("--fixed", help="file of vertex ids that must survive")
    s.add_argument("--lengths", help="'i j length' lines overriding edge lengths")
    s.add_argument("--aniso-tau", type=float, default=0.0)
    s.add_argument("--aniso-field", help="per-vertex 're im' tangent field")
    s.add_argument("--out-prefix", default="out")
    s.add_argument("--solve", choices=("poisson", "mg", "geodesic"),
                   help="run a demo solver on the result")
    s.add_argument("--vector", action="store_true",
                   help="also write the complex vector prolongation (.vec.pmat)")
    s.add_argument("--deterministic-report", action="store_true",
                   help="omit timings from the report")
    s.add_argument("--seedless", action="store_true",
                   help="accepted for compatibility; the pipeline has no randomness")
    s.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_mesh(args):
    pts, faces = mio.read_obj(args.input)
    lengths = mio.read_lengths(args.lengths) if args.lengths else None
    if lengths:
        for (i, j) in lengths:
            if not (0 <= i < len(pts) and 0 <= j < len(pts)):
                raise MeshError(f"length override for unknown edge ({i}, {j})", (i, j))
    return pts, faces, IntrinsicMesh.from_positions(pts, faces, lengths)


def make_config(args, n):
    if args.target < 0:
        raise ValueError("--target must be nonnegative")
    if args.aniso_tau and args.aniso_field is None:
        raise ValueError("--aniso-tau needs --aniso-field")
    fixed = mio.read_ids(args.fixed) if args.fixed else []
    bad = [v for v in fixed if not 0 <= v < n]
    if bad:
        raise ValueError(f"fixed vertex {bad[0]} out of range")
    masses = mio.read_masses(args.masses, n) if args.masses else None
    field = mio.read_field(args.aniso_field, n) if args.aniso_field else None
    return CoarsenConfig(target=args.target, fixed=fixed, w_curvature=args.w_curvature,
                         w_area=args.w_area, masses=masses, aniso_tau=args.aniso_tau,
                         aniso_field=field, per_component=args.per_component)


def _demo(kind, pts, fine, coarse, P):
    from . import solvers
    from .retriangulation import flip_to_delaunay

    flip_to_delaunay(fine)
    out = {}
    if kind == "poisson":
        L, M = solvers.cotan_laplacian(fine)
        f = pts[:, 0] if len(pts) else np.zeros(0)
        b = M @ f
        b = b - M.diagonal() * (b.sum() / M.diagonal().sum())
        xf = solvers.remove_mean(solvers.poisson_solve(L, b), M)
        Lc, _ = solvers.cotan_laplacian(coarse)
        xc = solvers.remove_mean(solvers.poisson_coarse(b, P, Lc), M)
        out["poisson_rel_l2"] = float(np.linalg.norm(xc - xf) / max(np.linalg.norm(xf), 1e-300))
    elif kind == "mg":
        meshes, Ps = solvers.build_hierarchy(fine, 3)
        L, M = solvers.cotan_laplacian(fine)
        b = M @ pts[:, 0]
        res = solvers.multigrid_solve(L, Ps, b)
        out["mg_levels"] = " ".join(str(m.n_vertices) for m in meshes)
        out["mg_cycles"] = res.cycles
        out["mg_converged"] = res.converged
        out["mg_factor"] = res.convergence_factor()
    elif kind == "geodesic":
        src = fine.vertex_ids()[0]
        d_f = solvers.dijkstra_distance(fine, [src])
        lr = solvers.all_pairs_lowrank(coarse, P)
        d_c = lr.row(src)
        mask = d_f > 0
        out["geodesic_mean_rel"] = float(np.mean(np.abs(d_c[mask] - d_f[mask]) / d_f[mask]))
    return out


def simplify(args):
    t0 = time.perf_counter()
    pts, faces, mesh = load_mesh(args)
    chi = mesh.euler_characteristic()
    n_in = mesh.n_vertices
    cfg = make_config(args, n_in)
    fine = mesh.copy() if args.solve else None
    c = Coarsener(mesh, cfg)
    t1 = time.perf_counter()
    c.run(args.target)
    t2 = time.perf_counter()
    mesh.check_connectivity()
    P = c.prolongation()

    prefix = args.out_prefix
    with open(prefix + ".coarse", "w") as fh:
        mio.write_coarse(fh, mesh)
    with open(prefix + ".map", "w") as fh:
        mio.write_map(fh, c.tracker, mesh, c.fine_ids)
    with open(prefix + ".pmat", "w") as fh:
        mio.write_matrix(fh, P)
    with open(prefix + ".vis", "w") as fh:
        colors = mio.write_visualization(fh, c.tracker, mesh, c.fine_ids)
    if args.vector:
        base = IntrinsicMesh.from_positions(pts, faces, mio.read_lengths(args.lengths)
                                            if args.lengths else None)
        Pv = build_vector_prolongation(c.tracker, base, mesh)
        with open(prefix + ".vec.pmat", "w") as fh:
            mio.write_matrix(fh, Pv)

    st = c.stats
    gb = abs(mesh.total_curvature() - 2.0 * math.pi * chi)
    rep = {
        "input_vertices": n_in,
        "output_vertices": mesh.n_vertices,
        "output_faces": mesh.n_faces,
        "target": c.target_count(args.target),
        "removals": st.removals,
        "skipped": st.skipped,
        "skip_reasons": " ".join(f"{k}={v}" for k, v in sorted(st.skip_reasons.items())) or "-",
        "queue_exhausted": st.exhausted,
        "delaunay_flips": st.flips,
        "newton_median": statistics.median(st.newton_iterations) if st.newton_iterations else 0,
        "newton_max": max(st.newton_iterations, default=0),
        "gauss_bonnet_error": gb,
        "delaunay_violations": len(mesh.delaunay_violations()),
        "effective_aniso_tau": st.effective_tau,
        "colors": max(colors) + 1 if colors else 0,
    }
    if args.solve:
        rep.update(_demo(args.solve, pts, fine, mesh, P))
    if not args.deterministic_report:
        rep["time_init_s"] = t1 - t0
        rep["time_coarsen_s"] = t2 - t1
        rep["removals_per_s"] = st.removals / (t2 - t1) if t2 > t1 else 0.0
    with open(prefix + ".report", "w") as fh:
        for k, v in rep.items():
            fh.write(f"{k}: {v}\n")
    if st.exhausted and mesh.n_vertices > c.target_count(args.target):
        log.warning("queue exhausted at %d vertices (target %d)", mesh.n_vertices,
                    c.target_count(args.target))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "simplify":
            return simplify(args)
    except (MeshError, ValueError, OSError) as err:
        print(f"intricoarse: error: {err}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
