"""Small bundled test meshes, generated in code.

Every entry of :data:`CORPUS` is a zero-argument function returning an
:class:`~itri.ops.IntrinsicTriangulation`.  Meshes carry a ``tags`` set:
``flat``, ``closed``, ``boundary``, ``degenerate``, ``delta`` and
``genus1``.
"""
from __future__ import annotations

import math

import numpy as np

from .ops import IntrinsicTriangulation


def grid(nx, ny, jitter=0.0, seed=0, width=1.0, height=1.0):
    """Triangulated rectangle with alternating diagonals.

    Interior vertices are displaced by up to ``jitter`` cell widths.
    """
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X = np.array([[x, y, 0.0] for y in ys for x in xs])
    if jitter:
        for k, (x, y, _) in enumerate(X):
            if 0 < x < width and 0 < y < height:
                X[k, 0] += rng.uniform(-jitter, jitter) * width / nx
                X[k, 1] += rng.uniform(-jitter, jitter) * height / ny
    F = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b, c, d = a + 1, a + nx + 2, a + nx + 1
            F += [[a, b, c], [a, c, d]] if (i + j) % 2 else [[a, b, d], [b, c, d]]
    return F, X


def fan_disk(n, radius=1.0):
    X = [[0.0, 0.0, 0.0]] + [[radius * math.cos(2 * math.pi * k / n),
                              radius * math.sin(2 * math.pi * k / n), 0.0] for k in range(n)]
    F = [[0, 1 + k, 1 + (k + 1) % n] for k in range(n)]
    return F, np.array(X)


def annulus(n, rings, r0=0.5, r1=1.0):
    X = []
    for j in range(rings + 1):
        r = r0 + (r1 - r0) * j / rings
        for k in range(n):
            a = 2 * math.pi * (k + 0.5 * (j % 2)) / n
            X.append([r * math.cos(a), r * math.sin(a), 0.0])
    F = []
    for j in range(rings):
        for k in range(n):
            a, b = j * n + k, j * n + (k + 1) % n
            c, d = (j + 1) * n + (k + 1) % n, (j + 1) * n + k
            F += [[a, b, c], [a, c, d]]
    return F, np.array(X)


def cube():
    X = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=float)
    quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]]
    F = [t for q in quads for t in ([q[0], q[1], q[2]], [q[0], q[2], q[3]])]
    return F, X


def tetrahedron():
    X = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]], X


def octahedron():
    X = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    F = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
    return F, X


def icosahedron():
    p = (1 + 5 ** 0.5) / 2
    X = np.array([[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0], [0, -1, p], [0, 1, p],
                  [0, -1, -p], [0, 1, -p], [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]],
                 dtype=float)
    F = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9], [5, 11, 4],
         [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8],
         [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    return F, X


def subdivide_sphere(F, X, levels=1):
    X = [np.asarray(x, float) / np.linalg.norm(x) for x in X]
    for _ in range(levels):
        mid = {}

        def m(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                x = X[a] + X[b]
                X.append(x / np.linalg.norm(x))
                mid[key] = len(X) - 1
            return mid[key]

        G = []
        for a, b, c in F:
            ab, bc, ca = m(a, b), m(b, c), m(c, a)
            G += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        F = G
    return F, np.array(X)


def uv_sphere(n_lon, n_lat):
    X = [[0, 0, 1.0]]
    for j in range(1, n_lat):
        th = math.pi * j / n_lat
        for k in range(n_lon):
            ph = 2 * math.pi * k / n_lon
            X.append([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
    X.append([0, 0, -1.0])
    south = len(X) - 1

    def ring(j, k):
        return 1 + (j - 1) * n_lon + k % n_lon

    F = [[0, ring(1, k), ring(1, k + 1)] for k in range(n_lon)]
    for j in range(1, n_lat - 1):
        for k in range(n_lon):
            a, b = ring(j, k), ring(j, k + 1)
            c, d = ring(j + 1, k + 1), ring(j + 1, k)
            F += [[a, d, c], [a, c, b]]
    F += [[south, ring(n_lat - 1, k + 1), ring(n_lat - 1, k)] for k in range(n_lon)]
    return F, np.array(X)


def torus(n_major, n_minor, R=1.0, r=0.4):
    X = []
    for i in range(n_major):
        u = 2 * math.pi * i / n_major
        for j in range(n_minor):
            v = 2 * math.pi * j / n_minor
            X.append([(R + r * math.cos(v)) * math.cos(u), (R + r * math.cos(v)) * math.sin(u),
                      r * math.sin(v)])
    F = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            F += [[a, b, c], [a, c, d]]
    return F, np.array(X)


def cylinder(n, rings, height=1.0):
    X = [[math.cos(2 * math.pi * (k + 0.5 * (j % 2)) / n),
          math.sin(2 * math.pi * (k + 0.5 * (j % 2)) / n), height * j / rings]
         for j in range(rings + 1) for k in range(n)]
    F = []
    for j in range(rings):
        for k in range(n):
            a, b = j * n + k, j * n + (k + 1) % n
            c, d = (j + 1) * n + (k + 1) % n, (j + 1) * n + k
            F += [[a, b, c], [a, c, d]]
    return F, np.array(X)


def hemisphere(n_lon, n_lat):
    F, X = uv_sphere(n_lon, 2 * n_lat)
    keep = [k for k, x in enumerate(X) if x[2] >= -1e-12]
    idx = {k: i for i, k in enumerate(keep)}
    G = [[idx[a], idx[b], idx[c]] for a, b, c in F if a in idx and b in idx and c in idx]
    return G, X[keep]


def _tri(F, X, *tags):
    tri = IntrinsicTriangulation.from_positions(F, X)
    tri.tags = set(tags)
    return tri


def _intrinsic(F, L, *tags):
    tri = IntrinsicTriangulation.from_face_lengths(F, L)
    tri.tags = set(tags)
    return tri


def _skinny_square():
    X = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.5, 0.02, 0]], float)
    return [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]], X


def _cap_strip():
    # nearly collinear middle row: caps with angles close to 180 degrees
    X = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1e-3, 0], [1, 2e-3, 0], [2, 1e-3, 0],
                  [0, 1, 0], [1, 1, 0], [2, 1, 0]], float)
    F = [[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [3, 4, 7], [3, 7, 6], [4, 5, 8], [4, 8, 7]]
    return F, X


def _needle_sphere():
    F, X = subdivide_sphere(*icosahedron(), levels=1)
    # stretched into a cigar: every face becomes a needle
    return F, X * np.array([12.0, 1.0, 1.0])


def _flat_sliver():
    # a zero-area triangle glued under the unit square; needs mollification
    X = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.5, 0, 0]], float)
    return [[0, 1, 2], [0, 2, 3], [0, 4, 1]], X


def _capped_sphere():
    F, X = subdivide_sphere(*icosahedron(), levels=1)
    X = X.copy()
    a, b = [v for v in next(f for f in F if 0 in f) if v != 0]
    # vertex pulled almost onto the segment between two neighbors: a cap
    c = 0.5 * (X[a] + X[b])
    X[0] = c + 1e-3 * c / np.linalg.norm(c)
    return F, X


def _noisy_sphere():
    F, X = subdivide_sphere(*icosahedron(), levels=2)
    rng = np.random.default_rng(7)
    X = X * rng.uniform(0.85, 1.15, size=(len(X), 1))
    X += rng.normal(scale=0.03, size=X.shape)
    return F, X


CORPUS = {
    "square_2tri": lambda: _tri([[0, 1, 2], [0, 2, 3]],
                                np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float),
                                "flat", "boundary"),
    "grid_3x3": lambda: _tri(*grid(3, 3), "flat", "boundary"),
    "grid_5x5_jitter": lambda: _tri(*grid(5, 5, 0.35, seed=1), "flat", "boundary"),
    "grid_8x2_stretched": lambda: _tri(*grid(8, 2, 0.2, seed=2, width=4.0, height=0.1),
                                       "flat", "boundary", "degenerate"),
    "skinny_square": lambda: _tri(*_skinny_square(), "flat", "boundary", "degenerate"),
    "cap_strip": lambda: _tri(*_cap_strip(), "flat", "boundary", "degenerate"),
    "fan_disk_7": lambda: _tri(*fan_disk(7), "flat", "boundary"),
    "fan_disk_16": lambda: _tri(*fan_disk(16), "flat", "boundary", "degenerate"),
    "annulus": lambda: _tri(*annulus(12, 2), "flat", "boundary"),
    "tetrahedron": lambda: _tri(*tetrahedron(), "closed"),
    "cube": lambda: _tri(*cube(), "closed"),
    "octahedron": lambda: _tri(*octahedron(), "closed"),
    "icosahedron": lambda: _tri(*icosahedron(), "closed"),
    "icosphere_1": lambda: _tri(*subdivide_sphere(*icosahedron(), levels=1), "closed"),
    "uv_sphere": lambda: _tri(*uv_sphere(12, 6), "closed", "degenerate"),
    "flat_sliver": lambda: _tri(*_flat_sliver(), "flat", "degenerate"),
    "needle_sphere": lambda: _tri(*_needle_sphere(), "closed", "degenerate"),
    "capped_sphere": lambda: _tri(*_capped_sphere(), "closed", "degenerate"),
    "noisy_sphere": lambda: _tri(*_noisy_sphere(), "closed", "degenerate"),
    "torus_coarse": lambda: _tri(*torus(8, 5), "closed", "genus1"),
    "torus_thin": lambda: _tri(*torus(16, 4, 1.0, 0.15), "closed", "genus1", "degenerate"),
    "cylinder": lambda: _tri(*cylinder(10, 3), "boundary"),
    "hemisphere": lambda: _tri(*hemisphere(10, 3), "boundary"),
    "delta_cone": lambda: _intrinsic([[0, 0, 1]], [(1.0, 1.2, 1.2)], "boundary", "delta"),
    "delta_pillow": lambda: _intrinsic([[0, 1, 2], [0, 2, 1]],
                                       [(1.0, 1.0, 1.0), (1.0, 1.0, 1.0)], "closed", "delta"),
}


def load(name):
    """Build corpus mesh ``name``."""
    try:
        return CORPUS[name]()
    except KeyError:
        raise KeyError(f"unknown corpus mesh {name!r}; choose from {sorted(CORPUS)}") from None


def names(tag=None):
    if tag is None:
        return sorted(CORPUS)
    return sorted(k for k in CORPUS if tag in load(k).tags)
