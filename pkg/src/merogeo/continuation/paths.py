"""Piecewise analytic paths in the complex plane.

A path is a chain of straight segments and circular arcs parametrised by a
global ``t in [0, 1]`` proportional to arclength.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["Segment", "Arc", "PathSpec", "CONTIGUITY_TOL"]

CONTIGUITY_TOL = 1e-12


@dataclass(frozen=True)
class Segment:
    z_from: complex
    z_to: complex

    @property
    def length(self) -> float:
        return abs(self.z_to - self.z_from)

    def point(self, s: float) -> complex:
        return self.z_from + (self.z_to - self.z_from) * s

    def velocity(self, s: float) -> complex:
        """``dz/ds`` for the leg-local parameter ``s in [0, 1]``."""
        return self.z_to - self.z_from

    def reversed(self) -> "Segment":
        return Segment(self.z_to, self.z_from)

    def sub(self, s0: float, s1: float) -> "Segment":
        return Segment(self.point(s0), self.point(s1))


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    angle_from: float
    angle_to: float

    @property
    def length(self) -> float:
        return abs(self.radius * (self.angle_to - self.angle_from))

    def point(self, s: float) -> complex:
        th = self.angle_from + (self.angle_to - self.angle_from) * s
        return self.center + self.radius * cmath.exp(1j * th)

    def velocity(self, s: float) -> complex:
        dth = self.angle_to - self.angle_from
        th = self.angle_from + dth * s
        return 1j * self.radius * dth * cmath.exp(1j * th)

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.angle_to, self.angle_from)

    def sub(self, s0: float, s1: float) -> "Arc":
        dth = self.angle_to - self.angle_from
        return Arc(self.center, self.radius, self.angle_from + dth * s0, self.angle_from + dth * s1)


class PathSpec:
    """Ordered contiguous legs with a global arclength parameter."""

    def __init__(self, legs: Sequence):
        legs = [leg for leg in legs]
        if not legs:
            raise ValueError("a path needs at least one leg")
        for prev, nxt in zip(legs, legs[1:]):
            if abs(prev.point(1.0) - nxt.point(0.0)) > CONTIGUITY_TOL * max(1.0, abs(prev.point(1.0))):
                raise ValueError(f"legs not contiguous: {prev.point(1.0)} != {nxt.point(0.0)}")
        lengths = np.array([leg.length for leg in legs], dtype=float)
        total = float(lengths.sum())
        if not total > 0:
            raise ValueError("path has zero arclength")
        self.legs = tuple(legs)
        self.length = total
        self.breaks = np.concatenate([[0.0], np.cumsum(lengths) / total])
        self.breaks[-1] = 1.0

    def __repr__(self):
        return f"PathSpec({list(self.legs)!r})"

    def __eq__(self, other):
        return isinstance(other, PathSpec) and self.legs == other.legs

    # constructors -----------------------------------------------------------
    @classmethod
    def segment(cls, z_from, z_to) -> "PathSpec":
        return cls([Segment(complex(z_from), complex(z_to))])

    @classmethod
    def polyline(cls, points) -> "PathSpec":
        pts = [complex(p) for p in points]
        return cls([Segment(a, b) for a, b in zip(pts, pts[1:]) if a != b])

    @classmethod
    def circle(cls, center, radius, start_angle=0.0, turns=1) -> "PathSpec":
        """Counter-clockwise loop (negative ``turns`` for clockwise)."""
        return cls([Arc(complex(center), float(radius), float(start_angle),
                        float(start_angle) + 2 * math.pi * turns)])

    @classmethod
    def circle_through(cls, center, start) -> "PathSpec":
        """Counter-clockwise loop around ``center`` starting and ending at ``start``."""
        d = complex(start) - complex(center)
        return cls.circle(center, abs(d), cmath.phase(d))

    def then(self, other: "PathSpec") -> "PathSpec":
        return PathSpec(self.legs + other.legs)

    # evaluation -------------------------------------------------------------
    @property
    def start(self) -> complex:
        return self.legs[0].point(0.0)

    @property
    def end(self) -> complex:
        return self.legs[-1].point(1.0)

    @property
    def is_closed(self) -> bool:
        return abs(self.start - self.end) <= CONTIGUITY_TOL * max(1.0, abs(self.start))

    def locate(self, t: float):
        """Leg index and leg-local parameter for global ``t``."""
        t = min(max(float(t), 0.0), 1.0)
        idx = int(np.searchsorted(self.breaks, t, side="right")) - 1
        idx = min(max(idx, 0), len(self.legs) - 1)
        t0, t1 = self.breaks[idx], self.breaks[idx + 1]
        return idx, (t - t0) / (t1 - t0)

    def point(self, t: float) -> complex:
        idx, s = self.locate(t)
        return self.legs[idx].point(s)

    def velocity(self, t: float) -> complex:
        """``dz/dt`` (magnitude equals the total arclength)."""
        idx, s = self.locate(t)
        return self.legs[idx].velocity(s) / (self.breaks[idx + 1] - self.breaks[idx])

    def leg_intervals(self):
        return [(float(self.breaks[i]), float(self.breaks[i + 1])) for i in range(len(self.legs))]

    def reversed(self) -> "PathSpec":
        return PathSpec([leg.reversed() for leg in reversed(self.legs)])

    def subpath(self, t0: float, t1: float) -> "PathSpec":
        """Portion of the path between global parameters ``t0 < t1``."""
        if not t1 > t0:
            raise ValueError("subpath needs t0 < t1")
        legs = []
        for i, leg in enumerate(self.legs):
            a, b = self.breaks[i], self.breaks[i + 1]
            lo, hi = max(a, t0), min(b, t1)
            if hi > lo:
                legs.append(leg.sub((lo - a) / (b - a), (hi - a) / (b - a)))
        return PathSpec(legs)

    def t_at_distance(self, target: complex, distance: float, lo: float = 0.0) -> float:
        """Last ``t`` in ``[lo, 1]`` with ``|z(t) - target| = distance``.

        Assumes the path ends at ``target`` and approaches it monotonically
        over its final stretch.
        """
        def gap(t):
            return abs(self.point(t) - target) - distance
        if gap(lo) <= 0:
            return lo
        a, b = lo, 1.0
        # walk back from the end to bracket the last crossing
        for _ in range(200):
            if b - a < 1e-16:
                break
            mid = 0.5 * (a + b)
            if gap(mid) > 0:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)
