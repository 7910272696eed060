"""
The discrete conformal energy
=============================

For a conformal factor u the energy E(u) is a sum of closed-form terms
per triangle.  Its gradient is the curvature vector and its Hessian is
the cotangent Laplacian.  When u moves so far that the triangulation
stops being Delaunay, edges are flipped on the way and E continues
smoothly into the new triangulation.
"""

import numpy as np

from plcurv.energy import EnergyState, lobachevsky
from plcurv.fixtures import load_fixture

# the building block: Milnor's Lobachevsky function
x = np.linspace(0, np.pi, 7)
print("L(x) on [0, pi]:", np.round(lobachevsky(x), 6))

surface, lengths = load_fixture("genus2")
state = EnergyState(surface, lengths)
print("initial flips to reach a Delaunay background:", len(state.initial_flips))
print("E(0) =", state.energy())

# move along a random direction and watch the flips happen
rng = np.random.default_rng(1)
u = rng.uniform(-1, 1, surface.n_vertices)
flipped = state.move_to(u)
print(len(flipped), "edges flipped on the way; energy offset", state.offset)
print("E(u) =", state.energy())

# gradient against finite differences
h = 1e-5
i = 3
d = np.zeros(surface.n_vertices)
d[i] = h
up, down = state.copy(), state.copy()
up.move_to(u + d)
down.move_to(u - d)
print("dE/du_3 =", (up.energy() - down.energy()) / (2 * h), " K_3 =", state.gradient()[i])

# the Hessian is positive semi-definite with the constants as kernel
H = state.hessian().toarray()
ev = np.linalg.eigvalsh(H)
print("smallest eigenvalues:", ev[:3])
print("H @ 1 =", np.max(np.abs(H @ np.ones(surface.n_vertices))))

# adding a constant c to u changes E by 2 pi c chi
c = 0.5
shifted = state.copy()
shifted.move_to(u + c)
print("E(u + c) - E(u) =", shifted.energy() - state.energy(),
      " 2 pi c chi =", 2 * np.pi * c * surface.euler_characteristic())
