import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from intricoarse import io as mio
from intricoarse import meshgen
from intricoarse.cli import main


@pytest.fixture
def sphere_obj(tmp_path):
    p, f = meshgen.noisy_sphere(6, 0.05, 4)
    path = tmp_path / "s.obj"
    mio.write_obj(str(path), p, f)
    return str(path), len(p)


def report(prefix):
    out = {}
    for line in open(prefix + ".report"):
        k, v = line.split(": ", 1)
        out[k] = v.strip()
    return out


def test_simplify_writes_artifacts(tmp_path, sphere_obj):
    obj, n = sphere_obj
    prefix = str(tmp_path / "out")
    assert main(["simplify", obj, "--target", "50", "--out-prefix", prefix, "--vector"]) == 0
    rep = report(prefix)
    assert rep["input_vertices"] == str(n) and rep["output_vertices"] == "50"
    assert rep["removals"] == str(n - 50) and rep["delaunay_violations"] == "0"
    assert float(rep["gauss_bonnet_error"]) < 1e-8
    for key in ("skipped", "newton_median", "time_coarsen_s", "removals_per_s"):
        assert key in rep
    with open(prefix + ".coarse") as fh:
        header, faces, _, _ = mio.read_coarse(fh)
    assert header[0] == 50 and len(faces) == header[2]
    with open(prefix + ".map") as fh:
        rows = mio.read_map(fh)
    assert len(rows) == n and all(0 <= k < header[2] for _, k, _ in rows)
    P = mio.read_matrix(prefix + ".pmat")
    assert P.shape == (n, 50)
    assert np.abs(np.asarray(P.sum(axis=1)).ravel() - 1).max() < 1e-12
    assert "complex" in open(prefix + ".vec.pmat").readline()
    vis = open(prefix + ".vis").read().splitlines()
    assert len(vis) == n


def test_target_above_count_is_noop(tmp_path, sphere_obj):
    obj, n = sphere_obj
    prefix = str(tmp_path / "o")
    assert main(["simplify", obj, "--target", str(n + 5), "--out-prefix", prefix]) == 0
    rep = report(prefix)
    assert rep["output_vertices"] == str(n) and rep["removals"] == "0"


def test_all_fixed_reports_exhausted_queue(tmp_path, sphere_obj):
    obj, n = sphere_obj
    ids = tmp_path / "fixed.txt"
    ids.write_text("\n".join(str(k) for k in range(n)))
    prefix = str(tmp_path / "o")
    assert main(["simplify", obj, "--target", "10", "--fixed", str(ids),
                 "--out-prefix", prefix]) == 0
    rep = report(prefix)
    assert rep["output_vertices"] == str(n) and rep["queue_exhausted"] == "True"
    P = mio.read_matrix(prefix + ".pmat")
    assert (P != sp.identity(n)).nnz == 0


def test_outputs_are_byte_identical(tmp_path, sphere_obj):
    obj, _ = sphere_obj
    outs = []
    for k in range(2):
        prefix = str(tmp_path / f"r{k}")
        assert main(["simplify", obj, "--target", "40", "--out-prefix", prefix,
                     "--deterministic-report", "--seedless"]) == 0
        outs.append([open(prefix + ext, "rb").read()
                     for ext in (".coarse", ".map", ".pmat", ".vis", ".report")])
    assert outs[0] == outs[1]


@pytest.mark.parametrize("kind,key", [("poisson", "poisson_rel_l2"), ("mg", "mg_converged"),
                                      ("geodesic", "geodesic_mean_rel")])
def test_solver_demos(tmp_path, sphere_obj, kind, key):
    obj, _ = sphere_obj
    prefix = str(tmp_path / kind)
    assert main(["simplify", obj, "--target", "60", "--out-prefix", prefix,
                 "--solve", kind]) == 0
    assert key in report(prefix)


def test_side_file_options(tmp_path, sphere_obj):
    obj, n = sphere_obj
    masses = tmp_path / "m.txt"
    masses.write_text("# weights 0.5\n" + "\n".join("1.0" for _ in range(n)))
    field = tmp_path / "u.txt"
    field.write_text("\n".join("1 0" for _ in range(n)))
    lengths = tmp_path / "l.txt"
    pts, faces = mio.read_obj(obj)
    a, b = faces[0][:2]
    lengths.write_text(f"{a} {b} {float(np.linalg.norm(pts[a] - pts[b])) * 1.01!r}\n")
    prefix = str(tmp_path / "o")
    assert main(["simplify", obj, "--target", "30", "--out-prefix", prefix,
                 "--masses", str(masses), "--aniso-tau", "0.3", "--aniso-field", str(field),
                 "--lengths", str(lengths), "--w-area", "0.2", "--per-component"]) == 0
    rep = report(prefix)
    assert rep["output_vertices"] == "30"
    assert 0.0 < float(rep["effective_aniso_tau"]) <= 0.3


@pytest.mark.parametrize("args", [
    ["--target", "-1"],
    ["--target", "10", "--aniso-tau", "0.5"],
    ["--target", "10", "--aniso-tau", "2", "--aniso-field", "FIELD"],
])
def test_config_errors(tmp_path, sphere_obj, capsys, args):
    obj, n = sphere_obj
    field = tmp_path / "u.txt"
    field.write_text("\n".join("1 0" for _ in range(n)))
    args = [str(field) if a == "FIELD" else a for a in args]
    assert main(["simplify", obj, "--out-prefix", str(tmp_path / "o")] + args) == 1
    assert "error" in capsys.readouterr().err


def test_input_errors(tmp_path, capsys):
    quad = tmp_path / "q.obj"
    quad.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    bow = tmp_path / "b.obj"
    bow.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv -1 0 0\nv 0 -1 0\nf 1 2 3\nf 1 4 5\n")
    for path in (quad, bow, tmp_path / "missing.obj"):
        assert main(["simplify", str(path), "--target", "3",
                     "--out-prefix", str(tmp_path / "o")]) == 1
        assert "error" in capsys.readouterr().err


def test_module_entry_point(tmp_path, sphere_obj):
    obj, _ = sphere_obj
    prefix = str(tmp_path / "m")
    r = subprocess.run([sys.executable, "-m", "intricoarse", "simplify", obj, "--target", "100",
                        "--out-prefix", prefix], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert report(prefix)["output_vertices"] == "100"
