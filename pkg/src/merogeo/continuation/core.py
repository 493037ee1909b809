"""Adaptive Dormand-Prince 5(4) continuation of complex ODEs along paths."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..expr import Pole
from .paths import PathSpec

__all__ = [
    "ODESystem", "TraceRecord", "StepStats", "Completed", "SingularStop", "DomainExit",
    "Removable", "PoleLike", "BranchLike", "Logarithmic", "Undetermined",
    "ContinuationFailure", "integrate_along",
]


@dataclass(frozen=True)
class ODESystem:
    """``dy/dz = rhs(y, z)``; ``rhs`` raises :class:`~merogeo.expr.Pole` on singular input."""

    dim: int
    rhs: Callable[[np.ndarray, complex], np.ndarray]
    name: str = ""

    def __call__(self, y, z):
        return self.rhs(y, z)


# -- singularity classes -----------------------------------------------------

@dataclass(frozen=True)
class Removable:
    pass


@dataclass(frozen=True)
class PoleLike:
    order_estimate: int

    def __post_init__(self):
        if self.order_estimate < 1:
            raise ValueError("pole order must be >= 1")


@dataclass(frozen=True)
class BranchLike:
    sheet_count: int

    def __post_init__(self):
        if self.sheet_count < 2:
            raise ValueError("a branch point has at least two sheets")


@dataclass(frozen=True)
class Logarithmic:
    pass


@dataclass(frozen=True)
class Undetermined:
    diagnostics: str = ""


# -- terminal statuses --------------------------------------------------------

@dataclass(frozen=True)
class Completed:
    pass


@dataclass(frozen=True)
class SingularStop:
    z: complex
    singularity: object = field(default_factory=Undetermined)
    reason: str = ""


@dataclass(frozen=True)
class DomainExit:
    z: complex


class ContinuationFailure(RuntimeError):
    """Integration stopped before the end of a path that had to be completed."""

    def __init__(self, record: "TraceRecord"):
        super().__init__(f"continuation stopped: {record.status}")
        self.record = record


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    min_step: float = np.inf
    max_step: float = 0.0


@dataclass
class TraceRecord:
    t: np.ndarray
    z: np.ndarray
    y: np.ndarray
    stats: StepStats
    status: object
    path: Optional[PathSpec] = None

    @property
    def completed(self) -> bool:
        return isinstance(self.status, Completed)

    @property
    def final_state(self) -> np.ndarray:
        return self.y[-1]

    @property
    def final_z(self) -> complex:
        return complex(self.z[-1])

    @property
    def final_t(self) -> float:
        return float(self.t[-1])


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_AROWS = [np.array(row) for row in _A]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_MIN_FAC, _MAX_FAC = 0.2, 5.0


class _Diverged(Exception):
    pass


def _stage_fn(system: ODESystem, path: PathSpec, leg: int, t0: float, t1: float):
    piece = path.legs[leg]
    width = t1 - t0

    def f(t, y):
        s = (t - t0) / width
        dzdt = piece.velocity(s) / width
        out = np.asarray(system.rhs(y, piece.point(s)), dtype=complex) * dzdt
        if not np.isfinite(out).all():
            raise _Diverged
        return out
    return f


def _dp_step(f, t, y, h, k1):
    K = np.empty((7, y.size), dtype=complex)
    K[0] = k1
    # overflow in a trial step is caught below and turned into a rejection
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, 7):
            K[i] = f(t + _C[i] * h, y + h * (_AROWS[i] @ K[:i]))
        y_new = y + h * (_B @ K)
        err = h * (_E @ K)
    if not np.all(np.isfinite(y_new)):
        raise _Diverged
    return y_new, err, K[6]


def _err_norm(err, y, y_new, tol):
    scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
    return float(np.max(np.abs(err) / scale)) if err.size else 0.0


def _initial_step(f, t, y, k1, tol, span):
    scale = tol * (1.0 + np.abs(y))
    d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(k1 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        k2 = f(t + h0, y + h0 * k1)
        d2 = np.sqrt(np.mean(np.abs((k2 - k1) / scale) ** 2)) / h0
    except (Pole, _Diverged, ZeroDivisionError, OverflowError):
        return h0 * 1e-3
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate_along(system: ODESystem, y0, path: PathSpec, tol: float = 1e-10, *,
                    t_eval: Sequence[float] | None = None,
                    domain: Callable[[np.ndarray], bool] | None = None,
                    min_step: float | None = None,
                    max_steps: int = 500_000) -> TraceRecord:
    """Continue the solution with ``y(path.start) = y0`` along ``path``.

    The independent variable is the real path parameter ``t``; the rhs is
    multiplied by ``dz/dt``.  Each accepted step keeps the embedded error
    estimate below ``tol * (1 + |y|)`` componentwise.  Legs are integrated
    separately so corners never sit inside a step.

    Parameters
    ----------
    t_eval
        If given, the record holds samples exactly at these parameters (plus
        the start) instead of at every accepted step.
    domain
        Predicate on the state; the first crossing out of it is located by
        bisection and reported as :class:`DomainExit`.
    min_step
        Smallest step in units of ``t``; defaults to ``1e-13`` (that is,
        ``1e-13`` times the arclength).  Hitting it ends the trace with
        :class:`SingularStop`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = np.array(y0, dtype=complex).reshape(-1)
    if y.size != system.dim:
        raise ValueError(f"initial state has {y.size} components, system needs {system.dim}")
    h_min = 1e-13 if min_step is None else float(min_step)
    stats = StepStats()
    ts, zs, ys = [0.0], [path.start], [y.copy()]
    marks = None if t_eval is None else np.unique(np.clip(np.asarray(t_eval, float), 0.0, 1.0))
    if marks is not None:
        marks = marks[marks > 0.0]

    def finish(status, t_cur, y_cur):
        if ts[-1] != t_cur:
            ts.append(t_cur)
            zs.append(path.point(t_cur))
            ys.append(y_cur.copy())
        return TraceRecord(np.array(ts), np.array(zs, dtype=complex),
                           np.array(ys, dtype=complex), stats, status, path)

    t = 0.0
    h = None
    steps = 0
    for leg, (ta, tb) in enumerate(path.leg_intervals()):
        f = _stage_fn(system, path, leg, ta, tb)
        try:
            k1 = f(t, y)
        except (Pole, _Diverged, ZeroDivisionError, OverflowError):
            return finish(SingularStop(path.point(t), reason="pole"), t, y)
        if h is None:
            h = _initial_step(f, t, y, k1, tol, tb - ta)
        stops = [tb] if marks is None else sorted(set(marks[(marks > ta) & (marks < tb)]) | {tb})
        err_prev = 1.0
        for target in stops:
            while t < target:
                steps += 1
                if steps > max_steps:
                    return finish(SingularStop(path.point(t), reason="max steps"), t, y)
                h_try = min(h, target - t)
                last = h_try >= target - t - 1e-15
                if last:
                    h_try = target - t
                try:
                    y_new, err, k7 = _dp_step(f, t, y, h_try, k1)
                    en = _err_norm(err, y, y_new, tol)
                except (Pole, _Diverged, ZeroDivisionError, OverflowError):
                    stats.rejected += 1
                    h = h_try * 0.25
                    if h < h_min:
                        return finish(SingularStop(path.point(t), reason="pole"), t, y)
                    continue
                if en <= 1.0:
                    if domain is not None and not domain(y_new):
                        return _locate_exit(f, path, t, y, h_try, k1, domain, stats,
                                            ts, zs, ys, finish)
                    t = target if last else t + h_try
                    y, k1 = y_new, k7
                    stats.accepted += 1
                    stats.min_step = min(stats.min_step, h_try * path.length)
                    stats.max_step = max(stats.max_step, h_try * path.length)
                    if marks is None:
                        ts.append(t)
                        zs.append(path.point(t))
                        ys.append(y.copy())
                    fac = _SAFETY * (en if en > 1e-10 else 1e-10) ** (-_ALPHA) * err_prev ** _BETA
                    fac = min(_MAX_FAC, max(_MIN_FAC, fac))
                    if not last or h_try >= h:
                        h = h_try * fac
                    err_prev = max(en, 1e-4)
                else:
                    stats.rejected += 1
                    h = h_try * max(_MIN_FAC, _SAFETY * en ** (-1 / 5))
                    if h < h_min:
                        return finish(SingularStop(path.point(t), reason="step underflow"), t, y)
            if marks is not None:
                ts.append(t)
                zs.append(path.point(t))
                ys.append(y.copy())
    return finish(Completed(), 1.0, y)


def _locate_exit(f, path, t, y, h_out, k1, domain, stats, ts, zs, ys, finish):
    """Bisect the step length for the first state outside ``domain``."""
    lo, hi = 0.0, h_out
    y_lo = y
    while (hi - lo) * path.length > 1e-14 * max(1.0, path.length):
        mid = 0.5 * (lo + hi)
        y_mid, _, _ = _dp_step(f, t, y, mid, k1)
        if domain(y_mid):
            lo, y_lo = mid, y_mid
        else:
            hi = mid
    t_exit = t + lo
    return finish(DomainExit(path.point(t + 0.5 * (lo + hi))), t_exit, y_lo)
