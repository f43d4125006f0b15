"""Text formats: OBJ input, side files, coarse mesh / map / matrix output."""

import io as _io

import numpy as np
import scipy.io as sio

from .mesh import IntrinsicMesh


class FormatError(ValueError):
    pass


def _fmt(x):
    return format(float(x), ".17g")


def read_obj(path):
    """Vertex positions and triangles of a Wavefront OBJ file.

    Only ``v`` and ``f`` records are used; ``f`` entries may carry
    ``/vt/vn`` suffixes and negative (relative) indices.
    """
    pts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                try:
                    pts.append([float(x) for x in parts[1:4]])
                except ValueError as err:
                    raise FormatError(f"{path}:{lineno}: bad vertex record") from err
                if len(pts[-1]) != 3:
                    raise FormatError(f"{path}:{lineno}: vertex needs 3 coordinates")
            elif tag == "f":
                idx = []
                for tok in parts[1:]:
                    try:
                        k = int(tok.split("/")[0])
                    except ValueError as err:
                        raise FormatError(f"{path}:{lineno}: bad face index {tok!r}") from err
                    idx.append(k - 1 if k > 0 else len(pts) + k)
                if len(idx) != 3:
                    raise FormatError(f"{path}:{lineno}: only triangles are supported "
                                      f"(face has {len(idx)} vertices)")
                faces.append(tuple(idx))
    if not faces:
        raise FormatError(f"{path}: no faces")
    return np.array(pts, dtype=float).reshape(-1, 3), faces


def write_obj(path, positions, faces):
    with open(path, "w") as fh:
        for p in positions:
            fh.write("v " + " ".join(_fmt(x) for x in p) + "\n")
        for f in faces:
            fh.write("f " + " ".join(str(k + 1) for k in f) + "\n")


def _rows(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].split()
            if s:
                yield lineno, s


def read_lengths(path):
    """``i j length`` lines; returns ``{(min, max): length}``."""
    out = {}
    for lineno, s in _rows(path):
        if len(s) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'i j length'")
        i, j, ell = int(s[0]), int(s[1]), float(s[2])
        out[(min(i, j), max(i, j))] = ell
    return out


def read_ids(path):
    """Whitespace separated vertex ids."""
    return [int(x) for _, s in _rows(path) for x in s]


def read_masses(path, n):
    """One row per vertex, one column per channel.

    A ``# weights w0 w1 ...`` line sets channel weights (default 1).
    """
    weights = None
    with open(path) as fh:
        for line in fh:
            s = line.split()
            if len(s) >= 2 and s[0] == "#" and s[1] == "weights":
                weights = [float(x) for x in s[2:]]
    rows = [[float(x) for x in s] for _, s in _rows(path)]
    if len(rows) != n:
        raise FormatError(f"{path}: {len(rows)} mass rows for {n} vertices")
    k = len(rows[0])
    if any(len(r) != k for r in rows):
        raise FormatError(f"{path}: ragged mass table")
    weights = weights or [1.0] * k
    if len(weights) != k:
        raise FormatError(f"{path}: {len(weights)} weights for {k} channels")
    cols = list(zip(*rows))
    return {f"user{c}": (list(cols[c]), weights[c]) for c in range(k)}


def read_field(path, n):
    """One ``re im`` row per vertex (tangent vectors in normalized coordinates)."""
    rows = [s for _, s in _rows(path)]
    if len(rows) != n:
        raise FormatError(f"{path}: {len(rows)} field rows for {n} vertices")
    return [complex(float(s[0]), float(s[1])) for s in rows]


# ----------------------------------------------------------------------
# coarse mesh


def coarse_numbering(mesh):
    """Compact face numbering (live faces in id order) and halfedge remap."""
    faces = mesh.face_ids()
    fidx = {f: k for k, f in enumerate(faces)}
    return faces, fidx


def write_coarse(fh, mesh):
    """``V E F`` header, then per face: three vertex ids, three halfedge
    lengths, three twin halfedge indices (``3*face+slot`` or -1)."""
    faces, fidx = coarse_numbering(mesh)
    hv, ht, hl = mesh.hv, mesh.ht, mesh.hl
    fh.write(f"{mesh.n_vertices} {mesh.n_edges} {len(faces)}\n")
    for f in faces:
        hs = (3 * f, 3 * f + 1, 3 * f + 2)
        tw = []
        for h in hs:
            t = ht[h]
            tw.append(-1 if t == -1 else 3 * fidx[t // 3] + t % 3)
        fh.write(" ".join(str(hv[h]) for h in hs) + " "
                 + " ".join(_fmt(hl[h]) for h in hs) + " "
                 + " ".join(str(t) for t in tw) + "\n")


def read_coarse(fh):
    """Parse a coarse mesh file; returns ``(header, faces, lengths, twins)``."""
    header = tuple(int(x) for x in fh.readline().split())
    if len(header) != 3:
        raise FormatError("coarse header must be 'V E F'")
    faces, lengths, twins = [], [], []
    for _ in range(header[2]):
        s = fh.readline().split()
        if len(s) != 9:
            raise FormatError("coarse face record needs 9 fields")
        faces.append(tuple(int(x) for x in s[:3]))
        lengths.append(tuple(float(x) for x in s[3:6]))
        twins.append(tuple(int(x) for x in s[6:9]))
    return header, faces, lengths, twins


def mesh_from_coarse(faces, lengths, twins):
    """Rebuild an :class:`IntrinsicMesh` from coarse records (Delta-complex
    gluing taken from the twin table)."""
    vids = sorted({v for f in faces for v in f})
    m = object.__new__(IntrinsicMesh)
    nf = len(faces)
    nv = max(vids) + 1 if vids else 0
    m.n_faces_total = nf
    m.hv = [v for f in faces for v in f]
    m.ht = [t for tw in twins for t in tw]
    m.hl = [ell for ls in lengths for ell in ls]
    m.ha = [0.0] * (3 * nf)
    m.hp = [0.0] * (3 * nf)
    m.fa = [True] * nf
    m.vh = [-1] * nv
    m.vT = [0.0] * nv
    m.vb = [False] * nv
    m.valive = [False] * nv
    m._journal = None
    for h in range(3 * nf):
        v = m.hv[h]
        m.valive[v] = True
        if m.ht[h] == -1:
            m.vb[v] = True
            m.vh[v] = h
        elif m.vh[v] == -1 or (not m.vb[v] and h < m.vh[v]):
            m.vh[v] = h
    for f in range(nf):
        m._update_face_angles(f)
    for v in vids:
        m._update_angle_sum(v)
        m.update_signposts_around_vertex(v)
    m.check_connectivity()
    return m


def write_map(fh, tracker, mesh, fine_ids=None):
    """``fineId coarseFace b0 b1 b2`` per fine vertex (compact face ids)."""
    _, fidx = coarse_numbering(mesh)
    ids = range(tracker.n_vertices) if fine_ids is None else fine_ids
    for v in ids:
        f, b = tracker.location(v, mesh)
        fh.write(f"{v} {fidx[f]} {_fmt(b[0])} {_fmt(b[1])} {_fmt(b[2])}\n")


def read_map(fh):
    out = []
    for line in fh:
        s = line.split()
        if s:
            out.append((int(s[0]), int(s[1]), tuple(float(x) for x in s[2:5])))
    return out


def write_matrix(fh, P):
    """Matrix Market coordinate file (``real`` or ``complex`` ``general``)."""
    buf = _io.BytesIO()
    sio.mmwrite(buf, P.to_sparse().tocoo(), precision=17, symmetry="general")
    fh.write(buf.getvalue().decode())


def read_matrix(path):
    return sio.mmread(path).tocsr()


def greedy_face_coloring(mesh):
    """Colors for live faces (compact order) so that faces sharing an edge
    differ; faces are visited in id order, taking the smallest free color."""
    faces, fidx = coarse_numbering(mesh)
    ht = mesh.ht
    colors = [-1] * len(faces)
    for k, f in enumerate(faces):
        used = set()
        for h in (3 * f, 3 * f + 1, 3 * f + 2):
            t = ht[h]
            if t != -1 and t // 3 != f:
                c = colors[fidx[t // 3]]
                if c != -1:
                    used.add(c)
        c = 0
        while c in used:
            c += 1
        colors[k] = c
    return colors


def face_adjacency(mesh):
    faces, fidx = coarse_numbering(mesh)
    adj = [set() for _ in faces]
    for k, f in enumerate(faces):
        for h in (3 * f, 3 * f + 1, 3 * f + 2):
            t = mesh.ht[h]
            if t != -1 and t // 3 != f:
                adj[k].add(fidx[t // 3])
    return adj


def write_visualization(fh, tracker, mesh, fine_ids=None):
    """``fineId coarseFace b0 b1 b2 color`` per fine vertex."""
    _, fidx = coarse_numbering(mesh)
    colors = greedy_face_coloring(mesh)
    ids = range(tracker.n_vertices) if fine_ids is None else fine_ids
    for v in ids:
        f, b = tracker.location(v, mesh)
        k = fidx[f]
        fh.write(f"{v} {k} {_fmt(b[0])} {_fmt(b[1])} {_fmt(b[2])} {colors[k]}\n")
    return colors


__all__ = [
    "FormatError", "face_adjacency", "greedy_face_coloring", "mesh_from_coarse", "read_coarse",
    "read_field", "read_ids", "read_lengths", "read_map", "read_masses", "read_matrix",
    "read_obj", "write_coarse", "write_map", "write_matrix", "write_obj", "write_visualization",
]
