"""Mesh, scalar and matrix file formats.

Supported mesh inputs are OBJ, PLY (ascii and binary little/big endian)
and a small JSON format for intrinsic meshes::

    {"faces": [[0, 1, 2], ...], "positions": [[x, y, z], ...]}
    {"faces": [[0, 0, 1], ...], "face_lengths": [[l01, l12, l20], ...]}

The second form describes a mesh by edge lengths only, which allows
Δ-complexes such as a triangle glued to itself.
"""
from __future__ import annotations

import json
import logging
import os
import struct

import numpy as np
import scipy.io

from .ops import IntrinsicTriangulation

log = logging.getLogger(__name__)


class MeshFormatError(ValueError):
    """Unreadable mesh file."""


def _fan(poly):
    return [[poly[0], poly[k], poly[k + 1]] for k in range(1, len(poly) - 1)]


def read_obj(path):
    """Vertex positions and triangles of an OBJ file (polygons are fanned)."""
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "v":
                    xyz = [float(x) for x in parts[1:4]]
                    verts.append(xyz + [0.0] * (3 - len(xyz)))
                elif parts[0] == "f":
                    idx = []
                    for tok in parts[1:]:
                        k = int(tok.split("/")[0])
                        idx.append(k - 1 if k > 0 else len(verts) + k)
                    if len(idx) < 3:
                        raise MeshFormatError(f"{path}:{lineno}: face with {len(idx)} corners")
                    faces.extend(_fan(idx))
            except ValueError as err:
                raise MeshFormatError(f"{path}:{lineno}: {err}") from None
    _check_indices(path, len(verts), faces)
    return np.array(verts, dtype=float).reshape(-1, 3), faces


def _check_indices(path, nv, faces):
    for f in faces:
        if min(f) < 0 or max(f) >= nv:
            raise MeshFormatError(f"{path}: face {f} references a missing vertex")


_PLY_TYPES = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f", "double": "d", "float64": "d",
}


def read_ply(path):
    """Vertex positions and triangles of an ascii or binary PLY file."""
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise MeshFormatError(f"{path}: missing ply magic")
        fmt = None
        elements = []
        while True:
            line = fh.readline()
            if not line:
                raise MeshFormatError(f"{path}: truncated header")
            parts = line.decode("ascii", "replace").split()
            if not parts:
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if not elements:
                    raise MeshFormatError(f"{path}: property before element")
                if parts[1] == "list":
                    elements[-1][2].append((parts[4], "list", parts[2], parts[3]))
                else:
                    elements[-1][2].append((parts[2], parts[1]))
            elif parts[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
            raise MeshFormatError(f"{path}: unsupported format {fmt}")
        body = fh.read()
    end = "<" if fmt == "binary_little_endian" else ">"
    verts, faces = [], []
    tokens = body.split() if fmt == "ascii" else None
    pos = 0

    def scalar(t):
        nonlocal pos
        if tokens is not None:
            x = tokens[pos]
            pos += 1
            return float(x) if _PLY_TYPES[t] in "fd" else int(x)
        code = end + _PLY_TYPES[t]
        (x,) = struct.unpack_from(code, body, pos)
        pos += struct.calcsize(code)
        return x

    try:
        for name, count, props in elements:
            for _ in range(count):
                rec = {}
                for prop in props:
                    if len(prop) == 4:
                        k = int(scalar(prop[2]))
                        rec[prop[0]] = [scalar(prop[3]) for _ in range(k)]
                    else:
                        rec[prop[0]] = scalar(prop[1])
                if name == "vertex":
                    verts.append([float(rec.get(c, 0.0)) for c in "xyz"])
                elif name == "face":
                    idx = rec.get("vertex_indices", rec.get("vertex_index"))
                    if idx is None or len(idx) < 3:
                        raise MeshFormatError(f"{path}: face without vertex indices")
                    faces.extend(_fan([int(i) for i in idx]))
    except (IndexError, struct.error, ValueError) as err:
        raise MeshFormatError(f"{path}: truncated or malformed body ({err})") from None
    _check_indices(path, len(verts), faces)
    return np.array(verts, dtype=float).reshape(-1, 3), faces


def read_mesh(path):
    """Load an input triangulation T0 from OBJ, PLY or JSON.

    Raises
    ------
    MeshFormatError
        On parse failures.
    MeshError
        On non-manifold or inconsistently oriented input.
    """
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".obj":
        X, F = read_obj(path)
    elif ext == ".ply":
        X, F = read_ply(path)
    elif ext == ".json":
        with open(path) as fh:
            data = json.load(fh)
        if "face_lengths" in data:
            return IntrinsicTriangulation.from_face_lengths(data["faces"], data["face_lengths"])
        X, F = np.asarray(data["positions"], dtype=float), data["faces"]
    else:
        raise MeshFormatError(f"{path}: unknown mesh extension {ext!r}")
    if len(F) == 0:
        raise MeshFormatError(f"{path}: no faces")
    log.info("read %s: %d vertices, %d faces", path, len(X), len(F))
    return IntrinsicTriangulation.from_positions(F, X)


def write_obj(path, positions, polygons, comment=None):
    """Write a polygon mesh; ``polygons`` hold 0-based vertex ids."""
    X = np.asarray(positions, dtype=float)
    if X.ndim == 2 and X.shape[1] == 2:
        X = np.column_stack([X, np.zeros(len(X))])
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for x in X:
            fh.write(f"v {x[0]:.17g} {x[1]:.17g} {x[2]:.17g}\n")
        for poly in polygons:
            fh.write("f " + " ".join(str(i + 1) for i in poly) + "\n")


def write_polylines_obj(path, polylines, comment=None):
    """Write a list of point sequences as OBJ line elements."""
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        base = 1
        for line in polylines:
            for x in line:
                x = list(x) + [0.0] * (3 - len(x))
                fh.write(f"v {x[0]:.17g} {x[1]:.17g} {x[2]:.17g}\n")
            fh.write("l " + " ".join(str(base + k) for k in range(len(line))) + "\n")
            base += len(line)


def read_scalars(path):
    """One value per line, ordered by vertex id."""
    return np.loadtxt(path, dtype=float, ndmin=1)


def write_scalars(path, values):
    np.savetxt(path, np.asarray(values, dtype=float), fmt="%.17g")


def write_matrix(path, M, comment=""):
    scipy.io.mmwrite(str(path), M, comment=comment)


def read_matrix(path):
    return scipy.io.mmread(str(path)).tocsr()
