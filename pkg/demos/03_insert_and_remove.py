"""Insert a vertex in the middle of a face, flip it around, then remove it.

Removal flips the vertex down to degree three and merges the last three
faces.  The total crossing count then returns to its value before the insertion.
"""
from itri.corpus import load
from itri.delaunay import flip_to_delaunay

tri = load("icosphere_1")
tri.mollify()
flip_to_delaunay(tri)
before = tri.sum_crossings()

v = tri.split_face(next(iter(tri.mesh.faces())), (0.2, 0.3, 0.5))
print(f"inserted vertex {v}, degree {tri.mesh.degree(v)}")
flip_to_delaunay(tri)
print(f"after flipping, degree {tri.mesh.degree(v)}, crossings {tri.sum_crossings()}")

tri.remove_inserted_vertex(v)
ok, _ = tri.validate()
print(f"removed; valid: {ok}, crossings {tri.sum_crossings()} vs {before} before insertion")
