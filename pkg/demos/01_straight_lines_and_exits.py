"""Geodesics of the flat metric: straight lines, and what happens on a disc."""

import cmath

import numpy as np

from merogeo import GeodesicState, PathSpec, flat_spec, trace_geodesic
from merogeo.metric import speed

# %% flat C^2: u(z) = u0 + udot0 * z along any path
m = flat_spec(2)
s0 = GeodesicState(0, [0.2, -1j], [1 + 0.5j, 0.3])
path = PathSpec.polyline([0, 4, 4 + 3j, 10j])
tr = trace_geodesic(m, s0, path)
print("status:", tr.status)
print("max deviation from the straight line:",
      np.max(np.abs(tr.u - (s0.u + np.outer(tr.z, s0.udot)))))
print("speed at start and end:", tr.speed[0], tr.speed[-1])

# %% (1, i) is a null vector: zero length although nonzero
print("speed of (1, i):", speed(m, (0, 0), (1, 1j)))

# %% first factor restricted to the unit disc: every ray leaves it at |z| = 1
disc = flat_spec(2, ["disc", "plane"])
for k in range(4):
    ray = PathSpec.segment(0, 2 * cmath.exp(2j * cmath.pi * k / 4))
    t = trace_geodesic(disc, GeodesicState(0, [0, 0], [1, 0]), ray)
    print(f"ray {k}: {t.status}")
