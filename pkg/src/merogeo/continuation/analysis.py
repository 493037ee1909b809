"""Monodromy probes, radial limits in the Riemann sphere, singularity classification."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BranchLike, ContinuationFailure, Logarithmic, ODESystem, PoleLike, Removable,
    Undetermined, integrate_along,
)
from .paths import PathSpec

__all__ = [
    "chordal", "ReturnsAfter", "NoReturn", "monodromy_probe", "Converged", "NoLimit",
    "radial_limit", "fit_pole_order", "ClassifyOptions", "classify_singularity",
]

INF = complex(math.inf, 0.0)


def _is_inf(x) -> bool:
    return cmath.isinf(complex(x))


def chordal(x, y) -> float:
    """Chordal distance on the Riemann sphere; ``complex('inf')`` is the point at infinity.

    ``d(x, y) = 2|x - y| / sqrt((1 + |x|^2)(1 + |y|^2))``, so ``d(0, inf) = 2``.
    """
    x, y = complex(x), complex(y)
    if _is_inf(x) and _is_inf(y):
        return 0.0
    if _is_inf(x):
        x, y = y, x
    if _is_inf(y):
        return 2.0 / math.sqrt(1.0 + abs(x) ** 2)
    # divide step by step so that neither product nor reciprocal overflows
    return 2.0 * (abs(x - y) / math.hypot(1.0, abs(x))) / math.hypot(1.0, abs(y))


def _chordal_vec(x, y) -> float:
    return max(chordal(a, b) for a, b in zip(np.ravel(x), np.ravel(y)))


# ---------------------------------------------------------------------------
# Monodromy

@dataclass(frozen=True)
class ReturnsAfter:
    loops: int
    states: tuple = ()


@dataclass(frozen=True)
class NoReturn:
    displacements: tuple
    states: tuple = ()


def monodromy_probe(system: ODESystem, y0, loop: PathSpec, max_loops: int = 8,
                    tol: float = 1e-10, *, return_tol: float | None = None):
    """Continue ``y0`` repeatedly around the closed ``loop``.

    Returns :class:`ReturnsAfter` ``(k)`` when the state first comes back to
    ``y0`` within ``return_tol * (1 + |y0|)`` (and the rhs agrees there too)
    after ``k <= max_loops`` circuits, else :class:`NoReturn` with the
    per-loop displacement of the state.  Each circuit is integrated at
    ``tol / 100`` so the return test at ``tol`` is not swamped by
    integration error.

    Raises
    ------
    ContinuationFailure
        If a circuit cannot be completed.
    """
    if not loop.is_closed:
        raise ValueError("monodromy loop must be closed")
    if max_loops < 1:
        raise ValueError("max_loops must be >= 1")
    rtol = tol if return_tol is None else return_tol
    y0 = np.array(y0, dtype=complex).reshape(-1)
    z0 = loop.start
    try:
        f0 = np.asarray(system.rhs(y0, z0), dtype=complex)
    except ArithmeticError:
        f0 = None
    y = y0
    states, disps = [], []
    for k in range(1, max_loops + 1):
        rec = integrate_along(system, y, loop, tol * 1e-2)
        if not rec.completed:
            raise ContinuationFailure(rec)
        y_next = rec.final_state
        disps.append(y_next - y)
        states.append(y_next)
        y = y_next
        close = np.max(np.abs(y - y0)) <= rtol * (1.0 + np.max(np.abs(y0)))
        if close and f0 is not None:
            try:
                fk = np.asarray(system.rhs(y, z0), dtype=complex)
                close = np.max(np.abs(fk - f0)) <= rtol * (1.0 + np.max(np.abs(f0))) * 10
            except ArithmeticError:
                close = False
        if close:
            return ReturnsAfter(k, tuple(states))
    return NoReturn(tuple(disps), tuple(states))


def displacement_is_stationary(result: NoReturn, variation: float = 0.05, min_loops: int = 3) -> bool:
    """Per-loop displacement constant (within ``variation``) over at least ``min_loops`` loops."""
    d = np.array(result.displacements)
    if len(d) < min_loops:
        return False
    mean = d.mean(axis=0)
    size = np.max(np.abs(mean))
    if size == 0:
        return False
    return float(np.max(np.abs(d - mean))) < variation * size


# ---------------------------------------------------------------------------
# Radial limits

@dataclass(frozen=True)
class Converged:
    value: np.ndarray
    distances: tuple = ()
    samples: tuple = ()

    @property
    def is_infinite(self) -> bool:
        return any(_is_inf(v) for v in np.ravel(self.value))


@dataclass(frozen=True)
class NoLimit:
    oscillation: tuple
    distances: tuple = ()
    samples: tuple = ()


def radial_limit(system: ODESystem, y0, ray: PathSpec, shrink: float = 0.5, *,
                 tol: float = 1e-10, chordal_tol: float = 1e-6, window: int = 3,
                 min_samples: int = 6, max_samples: int = 60, osc_tol: float = 1e-3):
    """Sample the solution at points approaching ``ray.end`` geometrically.

    Distances to the end point shrink by ``shrink`` per sample.  The result
    is :class:`Converged` once ``window`` consecutive chordal steps fall
    below ``chordal_tol``; values whose chordal distance to infinity is
    within the Cauchy tail are reported as ``inf``.  When, after
    ``min_samples`` samples, the last ``window`` steps stay above
    ``osc_tol`` without contracting, the result is :class:`NoLimit`.

    Raises
    ------
    ContinuationFailure
        If integration fails before ``window + 1`` samples are collected.
    """
    if not 0 < shrink < 1:
        raise ValueError("shrink factor must lie in (0, 1)")
    v1 = ray.end
    y = np.array(y0, dtype=complex).reshape(-1)
    d = abs(ray.start - v1) * shrink
    t_prev = 0.0
    samples, dists, steps = [], [], []
    while len(samples) < max_samples:
        t_next = ray.t_at_distance(v1, d, lo=t_prev)
        if t_next <= t_prev:
            d *= shrink
            continue
        rec = integrate_along(system, y, ray.subpath(t_prev, t_next), tol)
        if not rec.completed:
            if len(samples) > window:
                break
            raise ContinuationFailure(rec)
        y = rec.final_state
        samples.append(y.copy())
        dists.append(d)
        if len(samples) >= 2:
            steps.append(_chordal_vec(samples[-2], samples[-1]))
        if len(steps) >= window and max(steps[-window:]) < chordal_tol:
            return Converged(_limit_value(samples[-1], steps[-window:]), tuple(dists), tuple(samples))
        if len(samples) >= min_samples and len(steps) >= 2 * window:
            recent, before = max(steps[-window:]), max(steps[-2 * window:-window])
            if recent > osc_tol and recent > 0.5 * before:
                return NoLimit(tuple(steps), tuple(dists), tuple(samples))
        t_prev = t_next
        d *= shrink
    if len(steps) >= window and max(steps[-window:]) < math.sqrt(chordal_tol):
        return Converged(_limit_value(samples[-1], steps[-window:]), tuple(dists), tuple(samples))
    return NoLimit(tuple(steps), tuple(dists), tuple(samples))


def _limit_value(last, tail):
    bound = 10.0 * max(tail)
    out = np.array(last, dtype=complex)
    for i, v in enumerate(out):
        if chordal(v, INF) <= bound:
            out[i] = INF
    return out


def fit_pole_order(distances, values, last: int = 8):
    """Least-squares slope of ``log|y|`` against ``log(distance)``.

    Returns ``(order, rms_residual, -slope)`` with ``order = round(-slope)``.
    """
    d = np.asarray(distances[-last:], dtype=float)
    v = np.abs(np.asarray(values[-last:], dtype=complex))
    x, yv = np.log(d), np.log(v)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, yv, rcond=None)
    resid = yv - A @ coef
    return int(round(-coef[0])), float(np.sqrt(np.mean(resid ** 2))), float(-coef[0])


# ---------------------------------------------------------------------------
# Classification

@dataclass
class ClassifyOptions:
    tol: float = 1e-10
    loop_fractions: tuple = (0.25, 0.0625)
    max_loop_radius: float = 0.5
    max_loops: int = 8
    shrink: float = 0.5
    chordal_tol: float = 1e-6
    fit_residual: float = 0.05
    fit_samples: int = 8
    diagnostics: dict = field(default_factory=dict)


def _state_near(system, y0, approach: PathSpec, center, radius, tol):
    t = approach.t_at_distance(center, radius)
    if t <= 0:
        return y0, approach.start
    rec = integrate_along(system, y0, approach.subpath(0.0, t), tol)
    if not rec.completed:
        raise ContinuationFailure(rec)
    return rec.final_state, rec.final_z


def classify_singularity(system: ODESystem, y0, center: complex, approach: PathSpec,
                         opts: ClassifyOptions | None = None):
    """Classify the obstruction at ``center`` met along ``approach``.

    Decision order: monodromy on shrinking loops first (a finite return
    after ``n >= 2`` circuits means a branch point with ``n`` sheets; a
    never-returning, constant per-loop displacement means a logarithmic
    point); for single-valued germs the radial limit decides between a
    removable point (finite limit) and a pole (limit at infinity with a
    clean power-law growth fit).  Anything else is :class:`Undetermined`,
    essential singularities included.
    """
    opts = opts or ClassifyOptions()
    center = complex(center)
    y0 = np.array(y0, dtype=complex).reshape(-1)
    base = abs(approach.start - center)
    if base == 0:
        return Undetermined("approach starts at the center")
    diag = opts.diagnostics
    verdicts = []
    for frac in opts.loop_fractions:
        radius = min(frac * base, opts.max_loop_radius * frac / opts.loop_fractions[0])
        try:
            y_r, z_r = _state_near(system, y0, approach, center, radius, opts.tol)
            res = monodromy_probe(system, y_r, PathSpec.circle_through(center, z_r),
                                  opts.max_loops, opts.tol)
        except ContinuationFailure as exc:
            verdicts.append(("failed", str(exc.record.status)))
            continue
        if isinstance(res, ReturnsAfter):
            verdicts.append(("returns", res.loops))
        elif displacement_is_stationary(res):
            verdicts.append(("log", None))
        else:
            verdicts.append(("noreturn", None))
    diag["monodromy"] = verdicts
    kinds = {v[0] for v in verdicts}
    if kinds == {"returns"}:
        loops = {v[1] for v in verdicts}
        if len(loops) == 1 and (n := loops.pop()) >= 2:
            return BranchLike(n)
        if len(loops) > 1:
            return Undetermined(f"inconsistent monodromy {verdicts}")
    elif kinds == {"log"}:
        return Logarithmic()
    elif kinds:
        if "failed" not in kinds:
            return Undetermined(f"monodromy {verdicts}")

    try:
        lim = radial_limit(system, y0, approach, opts.shrink, tol=opts.tol,
                           chordal_tol=opts.chordal_tol)
    except ContinuationFailure as exc:
        diag["radial"] = str(exc.record.status)
        return Undetermined("radial sampling failed")
    diag["radial"] = lim
    if isinstance(lim, Converged):
        if not lim.is_infinite:
            return Removable() if "failed" not in kinds else Undetermined("finite limit, loops failed")
        samples = np.array(lim.samples)
        comp = int(np.argmax(np.abs(samples[-1])))
        order, resid, slope = fit_pole_order(lim.distances, samples[:, comp], opts.fit_samples)
        diag["pole_fit"] = (order, resid, slope)
        if order >= 1 and resid < opts.fit_residual:
            return PoleLike(order)
        return Undetermined(f"limit at infinity without power-law growth (slope {slope:.3g})")
    return Undetermined("no radial limit")
