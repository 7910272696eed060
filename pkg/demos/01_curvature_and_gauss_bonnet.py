"""
Curvature of a polyhedral surface
=================================

Discrete Gaussian curvature is the angle defect at each vertex.  Summed
over the surface it always gives 2 pi times the Euler characteristic, no
matter how the edge lengths are changed.
"""

import numpy as np

from plcurv import metric
from plcurv.fixtures import load_fixture

# a regular tetrahedron: three equilateral corners meet at each vertex
surface, lengths = load_fixture("tetrahedron")
K = metric.curvature(surface, lengths)
print("tetrahedron curvature:", K)
print("sum / 2 pi =", K.sum() / (2 * np.pi), " chi =", surface.euler_characteristic())

# scale the metric conformally: l_ij -> l_ij exp((u_i + u_j) / 2)
rng = np.random.default_rng(0)
u = rng.uniform(-0.3, 0.3, surface.n_vertices)
scaled = metric.vertex_scale(surface, lengths, u)
K2 = metric.curvature(surface, scaled)
print("after scaling:", K2)
print("Gauss-Bonnet residual:", metric.gauss_bonnet_residual(surface, scaled))

# a uniform scaling leaves angles and curvature alone
same = metric.vertex_scale(surface, lengths, np.full(4, 1.5))
print("uniform scaling changes K by", np.max(np.abs(metric.curvature(surface, same) - K)))

# the alpha-curvature divides by exp(alpha u)
print("R_alpha for alpha = -1:", metric.alpha_curvature(K2, u, -1.0))

# the genus-2 fixture has chi = -2: the defects add up to -4 pi
surface, lengths = load_fixture("genus2")
K = metric.curvature(surface, lengths)
print("genus 2: chi =", surface.euler_characteristic(), " sum K =", K.sum(), " -4 pi =", -4 * np.pi)
