"""Geodesics of warped-product metrics: equations, first integrals, tracing."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import (
    Arc, ClassifyOptions, ODESystem, PathSpec, PoleLike, Removable, SingularStop,
    classify_singularity, integrate_along,
)
from .expr import Pole
from .metric import (
    MetricSpec, NotOrdinary, christoffel_warped, is_metrically_ordinary, pairing,
)

__all__ = [
    "GeodesicState", "FirstIntegrals", "GeodesicTrace", "VanishingUN",
    "geodesic_rhs", "first_integrals", "first_integral_residual", "trace_geodesic",
    "reparametrized_rhs", "reparametrized_initial_state", "covariant_derivative_along",
    "GENERAL", "CONSTANT_U1",
]

GENERAL = "general"
CONSTANT_U1 = "constant_u1"


class VanishingUN(ValueError):
    """The last coordinate has (numerically) zero velocity; it cannot serve as parameter."""


@dataclass(frozen=True)
class GeodesicState:
    z: complex
    u: np.ndarray
    udot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "u", np.array(self.u, dtype=complex).reshape(-1))
        object.__setattr__(self, "udot", np.array(self.udot, dtype=complex).reshape(-1))
        if self.u.shape != self.udot.shape:
            raise ValueError("u and udot must have the same dimension")

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.udot])

    @classmethod
    def from_vector(cls, z, y) -> "GeodesicState":
        n = len(y) // 2
        return cls(z, y[:n], y[n:])


def _check_dim(m: MetricSpec, s: GeodesicState):
    if s.u.size != m.n:
        raise ValueError(f"state has dimension {s.u.size}, metric has N = {m.n}")


def geodesic_rhs(m: MetricSpec) -> ODESystem:
    """First-order form of the geodesic equations in the state ``(u, udot)``."""
    n = m.n
    eps = m.pole_eps

    def nonzero(x, dx):
        # the equations only involve logarithmic derivatives x'/x
        if x == 0 or abs(x) <= eps * abs(dx):
            raise Pole(x)
        return x

    def rhs(y, z):
        u, ud = y[:n], y[n:]
        (b, b1, _), a, f = m.jets(u)
        nonzero(b, b1)
        acc = np.empty(n, dtype=complex)
        total = -b1 / (2 * b) * ud[0] ** 2
        for k in range(1, n):
            (ak, ak1, _), (fk, fk1, _) = a[k - 1], f[k - 1]
            total += ak1 * fk / (2 * b) * ud[k] ** 2
            acc[k] = -fk1 / (2 * nonzero(fk, fk1)) * ud[k] ** 2 - ak1 / nonzero(ak, ak1) * ud[0] * ud[k]
        acc[0] = total
        return np.concatenate([ud, acc])

    return ODESystem(2 * n, rhs, "geodesic")


# ---------------------------------------------------------------------------
# First integrals

@dataclass(frozen=True)
class FirstIntegrals:
    """Conserved constants.

    In the ``"general"`` case ``A[0]`` is the energy-like constant of the base
    equation and ``A[k]`` (``k >= 1``) the fibre constants; in the
    ``"constant_u1"`` case ``A[0]`` stores the constant base coordinate.
    """

    case: str
    A: np.ndarray


def _values(m: MetricSpec, u):
    (b, _, _), a, f = m.jets(u)
    return b, [x[0] for x in a], [x[0] for x in f]


def first_integrals(m: MetricSpec, s0: GeodesicState, degen_eps: float | None = None) -> FirstIntegrals:
    """Constants of motion of the geodesic through ``s0``.

    The constant-base case is selected when ``|udot[0]| < degen_eps``.
    """
    _check_dim(m, s0)
    chk = is_metrically_ordinary(m, s0.u)
    if not chk:
        raise NotOrdinary(s0.u, chk.reason)
    eps = m.degen_eps if degen_eps is None else degen_eps
    b, a, f = _values(m, s0.u)
    ud = s0.udot
    A = np.zeros(m.n, dtype=complex)
    if abs(ud[0]) < eps:
        A[0] = s0.u[0]
        for k in range(1, m.n):
            A[k] = ud[k] ** 2 * f[k - 1]
        return FirstIntegrals(CONSTANT_U1, A)
    for k in range(1, m.n):
        A[k] = ud[k] ** 2 * f[k - 1] * a[k - 1] ** 2
    A[0] = ud[0] ** 2 * b + sum(A[k] / a[k - 1] for k in range(1, m.n))
    return FirstIntegrals(GENERAL, A)


def first_integral_residual(m: MetricSpec, s: GeodesicState, F: FirstIntegrals) -> np.ndarray:
    """Componentwise ``|lhs - rhs|`` of each conservation law at ``s``."""
    _check_dim(m, s)
    b, a, f = _values(m, s.u)
    ud = s.udot
    r = np.zeros(m.n)
    if F.case == CONSTANT_U1:
        r[0] = abs(s.u[0] - F.A[0])
        for k in range(1, m.n):
            r[k] = abs(ud[k] ** 2 * f[k - 1] - F.A[k])
        return r
    rhs0 = F.A[0] - sum(F.A[k] / a[k - 1] for k in range(1, m.n))
    r[0] = abs(ud[0] ** 2 * b - rhs0)
    for k in range(1, m.n):
        r[k] = abs(ud[k] ** 2 * f[k - 1] * a[k - 1] ** 2 - F.A[k])
    return r


# ---------------------------------------------------------------------------
# Tracing

@dataclass
class GeodesicTrace:
    """Samples of a traced geodesic with conservation diagnostics.

    ``t`` is the fraction of travelled arclength (detours around restarted
    singular points included), so it increases along the samples.
    """

    t: np.ndarray
    z: np.ndarray
    u: np.ndarray
    udot: np.ndarray
    residuals: np.ndarray
    speed: np.ndarray
    integrals: FirstIntegrals
    status: object
    records: list = field(default_factory=list)
    restarts: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.u.shape[1]

    def state(self, i: int) -> GeodesicState:
        return GeodesicState(self.z[i], self.u[i], self.udot[i])

    @property
    def accepted_steps(self) -> int:
        return sum(r.stats.accepted for r in self.records)

    @property
    def rejected_steps(self) -> int:
        return sum(r.stats.rejected for r in self.records)


def _t_leaving(path: PathSpec, center, distance, lo):
    """First ``t >= lo`` with ``|z(t) - center| >= distance`` (None if never)."""
    grid = np.linspace(lo, 1.0, 257)
    gaps = np.array([abs(path.point(t) - center) - distance for t in grid])
    hit = np.nonzero(gaps >= 0)[0]
    if hit.size == 0:
        return None
    j = int(hit[0])
    if j == 0:
        return lo
    a, b = grid[j - 1], grid[j]
    for _ in range(100):
        mid = 0.5 * (a + b)
        if abs(path.point(mid) - center) >= distance:
            b = mid
        else:
            a = mid
    return b


def _detour(path: PathSpec, t_stop: float, center: complex, radius: float):
    """Replace the stretch of ``path`` inside the disc around ``center`` by a ccw arc."""
    head = path.subpath(0.0, t_stop)
    t_b = head.t_at_distance(center, radius) * t_stop
    t_a = _t_leaving(path, center, radius, t_stop)
    if t_a is None or t_b <= 0 or t_a >= 1.0:
        return None
    zb, za = path.point(t_b), path.point(t_a)
    th_b = cmath.phase(zb - center)
    th_a = th_b + (cmath.phase(za - center) - th_b) % (2 * math.pi)
    arc = PathSpec([Arc(center, radius, th_b, th_a)])
    return t_b, arc.then(path.subpath(t_a, 1.0))


def trace_geodesic(m: MetricSpec, s0: GeodesicState, path: PathSpec, tol: float = 1e-10, *,
                   n_samples: int | None = None, classify: bool = True, restart: bool = True,
                   max_restarts: int = 3, classify_opts: ClassifyOptions | None = None,
                   min_step: float | None = None) -> GeodesicTrace:
    """Continue the geodesic germ ``s0`` along ``path``.

    A coordinate leaving a disc factor ends the trace with
    :class:`~merogeo.continuation.DomainExit`.  A singular stop is
    classified (when ``classify``); removable points and poles of the
    solution are bypassed by a small counter-clockwise detour and the trace
    continues (when ``restart``).  With ``n_samples`` the output is sampled on
    a uniform grid of the path parameter, as needed by
    :func:`covariant_derivative_along`; a restart gives up that uniformity.
    """
    _check_dim(m, s0)
    if abs(path.start - s0.z) > 1e-12 * max(1.0, abs(s0.z)):
        raise ValueError("path must start at the state's base point")
    chk = is_metrically_ordinary(m, s0.u)
    if not chk:
        raise NotOrdinary(s0.u, chk.reason)
    F = first_integrals(m, s0)
    system = geodesic_rhs(m)
    n = m.n
    has_disc = any(d.value == "disc" for d in m.domains)
    domain = (lambda y: m.in_domain(y[:n])) if has_disc else None
    t_eval = None if n_samples is None else np.linspace(0.0, 1.0, n_samples)

    records, restarts = [], []
    y_cur, p_cur = s0.vector, path
    while True:
        rec = integrate_along(system, y_cur, p_cur, tol, t_eval=t_eval, domain=domain,
                              min_step=min_step)
        status = rec.status
        if isinstance(status, SingularStop) and classify:
            opts = classify_opts or ClassifyOptions(tol=tol)
            t_stop = rec.final_t
            if t_stop > 0:
                approach = p_cur.subpath(0.0, t_stop)
                cls = classify_singularity(system, y_cur, status.z, approach, opts)
            else:
                cls = status.singularity
            status = SingularStop(status.z, cls, status.reason)
            rec.status = status
            if restart and isinstance(cls, (Removable, PoleLike)) and len(restarts) < max_restarts:
                radius = 0.1 * min(abs(status.z - p_cur.start), abs(p_cur.end - status.z))
                plan = _detour(p_cur, t_stop, status.z, radius) if radius > 0 else None
                if plan is not None:
                    t_b, new_path = plan
                    head = integrate_along(system, y_cur, p_cur.subpath(0.0, t_b), tol,
                                           domain=domain)
                    if head.completed:
                        records.append(head)
                        restarts.append((status.z, cls))
                        y_cur, p_cur = head.final_state, new_path
                        continue
        records.append(rec)
        break
    return _assemble(m, records, F, status, restarts)


def _assemble(m, records, F, status, restarts) -> GeodesicTrace:
    n = m.n
    zs, ys, ss = [], [], []
    travelled = 0.0
    for rec in records:
        span = rec.path.length if rec.path is not None else 1.0
        scale = span * (rec.t[-1] if rec.t.size else 0.0)
        start = 0 if not zs else 1
        zs.append(rec.z[start:])
        ys.append(rec.y[start:])
        ss.append(travelled + span * rec.t[start:])
        travelled += scale
    z = np.concatenate(zs)
    y = np.concatenate(ys)
    s = np.concatenate(ss)
    t = s / s[-1] if s[-1] > 0 else s
    u, ud = y[:, :n], y[:, n:]
    res = np.full((len(z), n), np.nan)
    spd = np.full(len(z), np.nan, dtype=complex)
    for i in range(len(z)):
        st = GeodesicState(z[i], u[i], ud[i])
        try:
            res[i] = first_integral_residual(m, st, F)
            spd[i] = pairing(m, u[i], ud[i], ud[i])
        except Pole:
            pass
    return GeodesicTrace(t, z, u, ud, res, spd, F, status, records, restarts)


# ---------------------------------------------------------------------------
# Reparametrisation by the last coordinate

def reparametrized_initial_state(m: MetricSpec, s0: GeodesicState, degen_eps: float | None = None):
    """Return ``(v0, y0)`` for :func:`reparametrized_rhs`.

    ``v0`` is the last coordinate and ``y0 = (gamma, dgamma/dv)`` holds the
    other coordinates and their derivatives with respect to it.
    """
    _check_dim(m, s0)
    eps = m.degen_eps if degen_eps is None else degen_eps
    un = s0.udot[-1]
    if abs(un) < eps:
        raise VanishingUN(f"|du^N/dz| = {abs(un):.3g} below {eps:.3g}")
    return s0.u[-1], np.concatenate([s0.u[:-1], s0.udot[:-1] / un])


def reparametrized_rhs(m: MetricSpec) -> ODESystem:
    """The geodesic as a curve ``v -> (gamma(v), v)`` with ``v = u^N``.

    ``gamma'' = gamma' (w . Gamma^N . w) - (w . Gamma^k . w)`` where
    ``w = (gamma', 1)``; primes are ``d/dv``.  The result is a pregeodesic
    (the natural parameter is eliminated).
    """
    n = m.n
    d = n - 1

    def rhs(y, v):
        gamma, gp = y[:d], y[d:]
        u = np.concatenate([gamma, [v]])
        try:
            G = christoffel_warped(m, u).as_array()
        except NotOrdinary:
            raise Pole(v) from None
        w = np.concatenate([gp, [1.0 + 0j]])
        S = np.einsum("kij,i,j->k", G, w, w)
        return np.concatenate([gp, gp * S[-1] - S[:-1]])

    return ODESystem(2 * d, rhs, "reparametrized")


# ---------------------------------------------------------------------------
# Covariant derivative along a sampled trace

def _uniform_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """d/dt on a uniform grid: 4th-order central inside, 3rd-order one-sided at the ends."""
    f = np.asarray(values)
    n = f.shape[0]
    if n < 5:
        raise ValueError("need at least 5 samples")
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    out[0] = (-11 * f[0] + 18 * f[1] - 9 * f[2] + 2 * f[3]) / (6 * h)
    out[1] = (-2 * f[0] - 3 * f[1] + 6 * f[2] - f[3]) / (6 * h)
    out[-2] = (f[-4] - 6 * f[-3] + 3 * f[-2] + 2 * f[-1]) / (6 * h)
    out[-1] = (-2 * f[-4] + 9 * f[-3] - 18 * f[-2] + 11 * f[-1]) / (6 * h)
    return out


def covariant_derivative_along(m: MetricSpec, trace: GeodesicTrace, X) -> np.ndarray:
    """``(dX^k/dz + Gamma^k_ij (du^i/dz) X^j)`` at every sample of ``trace``.

    ``X`` has shape ``(samples, N)`` and must be sampled on the trace's
    uniform grid (trace with ``n_samples``); ``dX/dz`` is ``(dX/dt)/(dz/dt)``
    with both derivatives taken by finite differences in ``t``.
    """
    X = np.asarray(X, dtype=complex)
    if X.shape != trace.u.shape:
        raise ValueError("field must have one N-vector per trace sample")
    dt = np.diff(trace.t)
    h = float(dt.mean())
    if np.max(np.abs(dt - h)) > 1e-9 * h:
        raise ValueError("trace samples are not uniform in t; trace with n_samples")
    dzdt = _uniform_derivative(trace.z, h)
    dXdz = _uniform_derivative(X, h) / dzdt[:, None]
    out = np.empty_like(X)
    for s in range(X.shape[0]):
        G = christoffel_warped(m, trace.u[s]).as_array()
        out[s] = dXdz[s] + np.einsum("kij,i,j->k", G, trace.udot[s], X[s])
    return out
