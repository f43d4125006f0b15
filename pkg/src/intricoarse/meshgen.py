"""Procedural test meshes (positions, faces) used by the demos and tests."""

import math

import numpy as np
from scipy.spatial import Delaunay


def icosahedron():
    t = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return v, f


def icosphere(freq):
    """Unit sphere from an icosahedron with every face split ``freq`` times
    per edge (``10 freq^2 + 2`` vertices)."""
    base, tris = icosahedron()
    index = {}
    pts = []
    faces = []

    def vid(a, wa, b, wb, c, wc):
        # exact key: the nonzero integer weights on original vertices
        key = tuple(sorted((x, w) for x, w in ((a, wa), (b, wb), (c, wc)) if w))
        k = index.get(key)
        if k is None:
            p = sum(w * base[x] for x, w in key)
            k = index[key] = len(pts)
            pts.append(p / np.linalg.norm(p))
        return k

    for a, b, c in tris:
        grid = {}
        for i in range(freq + 1):
            for j in range(freq + 1 - i):
                grid[i, j] = vid(a, freq - i - j, b, i, c, j)
        for i in range(freq):
            for j in range(freq - i):
                faces.append((grid[i, j], grid[i + 1, j], grid[i, j + 1]))
                if i + j < freq - 1:
                    faces.append((grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1]))
    return np.array(pts), faces


def icosphere_freq_for(n_vertices):
    """Smallest frequency whose icosphere has at least ``n_vertices``."""
    return max(1, math.ceil(math.sqrt(max(n_vertices - 2, 0) / 10.0)))


def bumpy_sphere(freq, amplitude=0.15, lobes=3):
    p, f = icosphere(freq)
    r = 1.0 + amplitude * np.sin(lobes * p[:, 0]) * np.sin(lobes * p[:, 1]) * np.sin(lobes * p[:, 2] + 1.0)
    return p * r[:, None], f


def noisy_sphere(freq, amplitude=0.02, seed=0):
    p, f = icosphere(freq)
    rng = np.random.default_rng(seed)
    r = 1.0 + amplitude * rng.uniform(-1.0, 1.0, len(p))
    return p * r[:, None], f


def torus(n_major=24, n_minor=12, R=1.0, r=0.4):
    u = np.arange(n_major) * (2.0 * math.pi / n_major)
    v = np.arange(n_minor) * (2.0 * math.pi / n_minor)
    U, V = np.meshgrid(u, v, indexing="ij")
    pts = np.stack([(R + r * np.cos(V)) * np.cos(U),
                    (R + r * np.cos(V)) * np.sin(U),
                    r * np.sin(V)], axis=-1).reshape(-1, 3)
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            faces.append((a, b, c))
            faces.append((a, c, d))
    return pts, faces


def grid(nx, ny, dx=1.0, dy=1.0, height=None):
    """Planar ``nx`` x ``ny`` vertex grid split along one diagonal.

    ``height(x, y)`` optionally lifts vertices out of the plane.
    """
    xs, ys = np.meshgrid(np.arange(nx) * dx, np.arange(ny) * dy, indexing="ij")
    z = np.zeros_like(xs) if height is None else height(xs, ys)
    pts = np.stack([xs, ys, z], axis=-1).reshape(-1, 3)
    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b = i * ny + j, (i + 1) * ny + j
            c, d = (i + 1) * ny + j + 1, i * ny + j + 1
            faces.append((a, b, c))
            faces.append((a, c, d))
    return pts, faces


def random_planar(n, seed=0):
    """Delaunay triangulation of the unit square corners plus random points."""
    rng = np.random.default_rng(seed)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    inner = rng.uniform(0.05, 0.95, size=(max(n - 4, 0), 2))
    xy = np.vstack([corners, inner])
    tri = Delaunay(xy)
    faces = []
    for a, b, c in tri.simplices:
        pa, pb, pc = xy[a], xy[b], xy[c]
        det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
        if abs(det) < 1e-12:
            continue
        faces.append((int(a), int(b), int(c)) if det > 0 else (int(a), int(c), int(b)))
    pts = np.hstack([xy, np.zeros((len(xy), 1))])
    return pts, faces


def annulus(n_theta=32, n_r=6, r0=1.0, r1=2.0):
    pts = []
    for i in range(n_r):
        r = r0 + (r1 - r0) * i / (n_r - 1)
        for j in range(n_theta):
            t = 2.0 * math.pi * (j + 0.5 * (i % 2)) / n_theta
            pts.append((r * math.cos(t), r * math.sin(t), 0.0))
    faces = []
    for i in range(n_r - 1):
        for j in range(n_theta):
            a = i * n_theta + j
            b = i * n_theta + (j + 1) % n_theta
            c = (i + 1) * n_theta + (j + 1) % n_theta
            d = (i + 1) * n_theta + j
            if i % 2 == 0:
                faces.append((a, b, d))
                faces.append((b, c, d))
            else:
                faces.append((a, b, c))
                faces.append((a, c, d))
    pts = np.array(pts)
    return pts, [_ccw(pts, f) for f in faces]


def _ccw(pts, f):
    a, b, c = (pts[k] for k in f)
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return f if det > 0 else (f[0], f[2], f[1])


def square_pyramid(height=None):
    """Four lateral faces over the unit square (apex is vertex 0).

    The default height gives unit lateral edges.
    """
    h = math.sqrt(0.5) if height is None else height
    pts = np.array([[0.5, 0.5, h], [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    faces = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 1)]
    return pts, faces


def tetrahedron():
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    faces = [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)]
    return pts, faces
