"""Flip a stretched planar grid to intrinsic Delaunay and trace the original edges.

The input edges never move.  After flipping, each original edge is recovered
from the integer crossing counts alone by walking across the new triangles.
"""
import numpy as np

from itri.corpus import load
from itri.delaunay import flip_to_delaunay, is_delaunay
from itri.tracing import extract_edge

tri = load("grid_8x2_stretched")
print(f"input: {tri.mesh.n_vertices()} vertices, {tri.mesh.n_faces()} faces")
print(f"delaunay before flipping: {is_delaunay(tri)}")

flips = flip_to_delaunay(tri)
print(f"flips performed: {flips}, delaunay now: {is_delaunay(tri)}")
print(f"total crossings between the two triangulations: {tri.sum_crossings()}")

# Walk one crossed input edge over the new triangulation.
crossed = [e for e in tri.mesh0.edges() if len(extract_edge(tri, 2 * e).crossings) > 0]
if crossed:
    path = extract_edge(tri, 2 * crossed[0])
    us = np.array([c.u for c in path.crossings])
    print(f"input edge {crossed[0]} crosses {len(us)} intrinsic edges at u = {np.round(us, 4)}")
