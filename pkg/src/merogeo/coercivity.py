"""Completeness checks: a certificate for an explicit rational class and a ray-fan probe.

The certified class is the metric

    (h'(u1))^2 du1^2 + sum_k f_k(u_k)^2 / P_k(h(u1)) du_k^2

with ``h`` rational and nonconstant, each ``f_k`` rational and not
identically zero, and each ``P_k`` a polynomial of degree at most two.  For
this class the base coordinate satisfies ``Phi(h(u1)) = z`` with ``Phi`` one
of the four elementary antiderivatives in :mod:`merogeo.quad`, and the
certificate records why that inversion extends over the sphere minus a
finite set.

The probe is numeric evidence, not a proof: it traces geodesics from given
seeds along a fan of rays and reports obstructions to continuation.
"""

from __future__ import annotations

import cmath
import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

from .continuation import (
    BranchLike, ClassifyOptions, DomainExit, Logarithmic, PathSpec, SingularStop,
)
from .expr import Add, Const, Div, ExprNode, Mul, Pow, derivative, is_rational, parse
from .geodesic import trace_geodesic
from .metric import MetricSpec, NotOrdinary, _is_zero_expr, is_metrically_ordinary

__all__ = [
    "EsempioSpec", "Certificate", "COERCIVE", "NOT_CERTIFIED", "check_esempio_coercive",
    "Witness", "ProbeResult", "incompleteness_probe", "polynomial_expr",
]

COERCIVE = "Coercive"
NOT_CERTIFIED = "NotCertified"


def _trim(coeffs) -> tuple:
    c = [complex(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def polynomial_expr(coeffs, var: ExprNode | None = None) -> ExprNode:
    """Expression tree of ``sum coeffs[j] * x^j`` with ``x = var``."""
    x = var if var is not None else parse("u")
    terms = None
    for j, cj in enumerate(coeffs):
        if cj == 0:
            continue
        t = Const(complex(cj))
        if j == 1:
            t = Mul(t, x)
        elif j > 1:
            t = Mul(t, Pow(x, j))
        terms = t if terms is None else Add(terms, t)
    return terms if terms is not None else Const(0)


@dataclass(frozen=True)
class EsempioSpec:
    """Data ``(h, f_k, P_k)``; ``P[k]`` lists coefficients in increasing degree."""

    n: int
    h: ExprNode
    f: tuple
    P: tuple

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "P", tuple(tuple(complex(c) for c in p) for p in self.P))
        if self.n < 2 or len(self.f) != self.n - 1 or len(self.P) != self.n - 1:
            raise ValueError("need N >= 2 and one (f_k, P_k) pair per fibre")

    @classmethod
    def from_strings(cls, h: str, f: Sequence[str], P: Sequence[Sequence[complex]]) -> "EsempioSpec":
        return cls(len(f) + 1, parse(h), tuple(parse(s) for s in f), tuple(P))

    def degrees(self) -> list:
        return [len(_trim(p)) - 1 for p in self.P]

    def to_metric(self, **kw) -> MetricSpec:
        """``b1 = (h')^2``, ``a_k = 1/P_k(h)``, fibre factor ``f_k^2``."""
        dh = derivative(self.h)
        a = [Div(Const(1), polynomial_expr(_trim(p), self.h)) for p in self.P]
        f = [Pow(fk, 2) for fk in self.f]
        return MetricSpec(self.n, Pow(dh, 2), a, f, **kw)


@dataclass(frozen=True)
class Certificate:
    verdict: str
    reasons: tuple
    witnesses: tuple = ()
    notes: tuple = ()

    @property
    def coercive(self) -> bool:
        return self.verdict == COERCIVE

    def to_record(self) -> dict:
        return {"verdict": self.verdict, "reasons": list(self.reasons),
                "notes": list(self.notes), "witnesses": [str(w) for w in self.witnesses]}

    def report(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        lines += [f"  - {r}" for r in self.reasons]
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2, sort_keys=True)


def check_esempio_coercive(s: EsempioSpec, seed=None) -> Certificate:
    """Certify the completeness criterion for ``s`` or say which condition fails.

    The verdict does not depend on any base point.  ``seed`` (a point
    ``u``) is optional and only validated as metrically ordinary, so that
    callers can confirm that two seeds give the same certificate.
    """
    if seed is not None:
        chk = is_metrically_ordinary(s.to_metric(), seed)
        if not chk:
            raise NotOrdinary(seed, chk.reason)
    reasons = []

    def fail(msg):
        return Certificate(NOT_CERTIFIED, tuple(reasons) + (f"FAILED: {msg}",))

    for k, deg in enumerate(s.degrees(), start=2):
        if deg > 2:
            return fail(f"P.{k} has degree {deg} > 2")
        if _trim(s.P[k - 2]) == (0j,):
            return fail(f"P.{k} is the zero polynomial")
    reasons.append("every P_k has degree at most two, so the integrand is "
                   "1/sqrt of a polynomial of degree <= 2 and its antiderivative "
                   "is one of the four elementary forms (log, degenerate log, sqrt, linear)")
    if not is_rational(s.h):
        return fail("h is not a rational function")
    if _is_zero_expr(derivative(s.h)):
        return fail("h is constant")
    reasons.append("h is rational and nonconstant, so it takes every value of the "
                   "Riemann sphere and the inverse of the elementary antiderivative "
                   "composed with h omits at most finitely many points")
    for k, fk in enumerate(s.f, start=2):
        if not is_rational(fk):
            return fail(f"f.{k} is not a rational function")
        if _is_zero_expr(fk):
            return fail(f"f.{k} vanishes identically")
    reasons.append("every f_k is rational and not identically zero, so the fibre "
                   "equations integrate by the same quadratures")
    reasons.append("both square-root branches give isomorphic surfaces; checked for one")
    return Certificate(COERCIVE, tuple(reasons))


# ---------------------------------------------------------------------------
# Probe

@dataclass(frozen=True)
class Witness:
    seed_index: int
    angle: float
    z_star: complex
    kind: str
    singularity: object = None

    def __str__(self):
        extra = f" {self.singularity}" if self.singularity is not None else ""
        return f"seed {self.seed_index} angle {self.angle:.6g}: {self.kind} at {self.z_star:.12g}{extra}"


@dataclass
class ProbeResult:
    witnesses: list
    stops: list = field(default_factory=list)
    rays_done: int = 0
    rays_total: int = 0
    budget_exceeded: bool = False

    @property
    def complete(self) -> bool:
        return not self.budget_exceeded


SOFT = (BranchLike, Logarithmic)


def incompleteness_probe(m: MetricSpec, seeds, n_rays: int = 32, radius: float = 50.0,
                         tol: float = 1e-10, *, angles=None, budget: float | None = None,
                         classify_opts: ClassifyOptions | None = None) -> ProbeResult:
    """Trace every seed along rays ``z0 + t e^{i theta}``, ``0 <= t <= radius``.

    ``seeds`` are :class:`~merogeo.geodesic.GeodesicState` objects.  Every
    terminal stop is recorded in ``stops``; the ones that stay on the
    extended surface (branch points and logarithmic points) are not
    witnesses.  ``budget`` is a wall-clock limit in seconds; when it runs out
    the result is returned partially with ``budget_exceeded`` set.
    """
    seeds = list(seeds)
    for s in seeds:
        chk = is_metrically_ordinary(m, s.u)
        if not chk:
            raise NotOrdinary(s.u, chk.reason)
    if angles is None:
        angles = [2 * math.pi * j / n_rays for j in range(n_rays)]
    angles = [float(a) for a in angles]
    out = ProbeResult([], [], 0, len(seeds) * len(angles))
    t_start = time.monotonic()
    for i, s in enumerate(seeds):
        for th in angles:
            if budget is not None and time.monotonic() - t_start > budget:
                out.budget_exceeded = True
                return out
            ray = PathSpec.segment(s.z, s.z + radius * cmath.exp(1j * th))
            tr = trace_geodesic(m, s, ray, tol, classify_opts=classify_opts)
            out.rays_done += 1
            st = tr.status
            if isinstance(st, DomainExit):
                w = Witness(i, th, complex(st.z), "DomainExit")
            elif isinstance(st, SingularStop):
                w = Witness(i, th, complex(st.z), "SingularStop", st.singularity)
            else:
                continue
            out.stops.append(w)
            if not isinstance(w.singularity, SOFT):
                out.witnesses.append(w)
    return out
