"""Where continuation stops, and what kind of point stops it."""

import numpy as np

from merogeo import GeodesicState, MetricSpec, PathSpec, trace_geodesic
from merogeo.continuation import (
    ODESystem, classify_singularity, monodromy_probe, radial_limit,
)
from merogeo.expr import Pole


def scalar(fn):
    return ODESystem(1, lambda y, z: np.array([fn(y[0], z)]))


def inv(x):
    if x == 0:
        raise Pole(x)
    return 1 / x


# %% square root: two turns around 0 bring the germ back
sqrt_ = scalar(lambda y, z: 0.5 * inv(y))
print("sqrt loop returns after", monodromy_probe(sqrt_, [1], PathSpec.circle(0, 1.0)).loops, "turns")

# %% logarithm: every turn adds 2*pi*i, it never comes back
log_ = scalar(lambda y, z: inv(z))
res = monodromy_probe(log_, [0], PathSpec.circle(0, 1.0), max_loops=3)
print("log displacements:", [complex(d[0]) for d in res.displacements])

# %% classification of the obstruction
print("sqrt at 0:", classify_singularity(sqrt_, [1], 0, PathSpec.segment(1, 0)))
print("log at 0:", classify_singularity(log_, [0], 0, PathSpec.segment(1, 0)))
recip = scalar(lambda y, z: y * y)     # y = 1/(1 - z)
print("1/(1-z) at 1:", classify_singularity(recip, [1], 1, PathSpec.segment(0, 1)))

# %% limits along a ray: infinity for a pole, none for exp(1/(z-1))
print(radial_limit(recip, [1], PathSpec.segment(0, 1)).value)
essential = scalar(lambda y, z: -y * inv((z - 1) ** 2))
print(type(radial_limit(essential, [np.exp(-1j)], PathSpec.segment(1 + 1j, 1))).__name__)

# %% a geodesic whose fibre coordinate runs into a branch point:
# with f2 = u^2, u2 du2/dz is constant so u2^2 = 1 + 2z vanishes at z = -1/2
m = MetricSpec.from_strings("1", ["1"], ["u^2"])
tr = trace_geodesic(m, GeodesicState(0, [0, 1], [0, 1]), PathSpec.segment(0, -1))
print("geodesic:", tr.status)

# %% a pole of the solution is stepped around and the trace goes on
m = MetricSpec.from_strings("1/u^4", ["1"], ["1"])
tr = trace_geodesic(m, GeodesicState(0, [1, 0], [1, 0.5]), PathSpec.segment(0, 2))
print("restarts:", tr.restarts, "final u1:", tr.u[-1, 0])
