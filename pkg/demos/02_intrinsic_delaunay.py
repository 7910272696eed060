"""
Intrinsic Delaunay triangulations
=================================

An edge is Delaunay when the two angles facing it sum to at most pi.
Flipping a non-Delaunay edge replaces it by the other diagonal of the
quad it sits in; the metric, and so the curvature and the area, stay the
same.  Repeated flipping ends in a Delaunay triangulation.
"""

import numpy as np

from plcurv import metric
from plcurv.delaunay import delaunay_certificate, flip_edge, make_delaunay
from plcurv.fixtures import load_fixture, one_vertex_torus

surface, lengths = load_fixture("genus2")
bad = delaunay_certificate(surface, lengths)
print(f"{len(bad)} of {surface.n_edges} edges are not Delaunay")

# flip a single edge and compare
e = bad[0]
s1, l1 = flip_edge(surface, lengths, e)
print("edge", e, "length", lengths[e], "->", l1[e])
print("curvature change:", np.max(np.abs(metric.curvature(s1, l1) - metric.curvature(surface, lengths))))
print("area change:", metric.total_area(s1, l1) - metric.total_area(surface, lengths))

# flip until nothing is left
s2, l2, log = make_delaunay(surface, lengths)
print("flips:", len(log), " remaining bad edges:", delaunay_certificate(s2, l2))

# on a one-vertex torus every edge is a loop; flips work the same way
torus, tl = one_vertex_torus()
tl = np.array([1.0, 1.0, 1.6])
print("torus Delaunay?", not delaunay_certificate(torus, tl))
t2, tl2, tlog = make_delaunay(torus, tl)
print("after", len(tlog), "flip(s): lengths", tl2, " curvature", metric.curvature(t2, tl2))
