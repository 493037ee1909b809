"""Diagonal warped-product metrics and their Levi-Civita connection.

The metric on ``U_1 x_{a_2} U_2 x ... x_{a_N} U_N`` is

    g = b1(u1) du1^2 + sum_{k>=2} a_k(u1) f_k(u_k) du_k^2

Indices are 0-based throughout: coordinate 0 is the base ``u1`` and
coordinate ``k >= 1`` is the fibre coordinate ``u_{k+1}``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import (
    DEFAULT_POLE_EPS, Const, ExprNode, Jet2, Pole, eval_jet_tuple, evaluate,
    evaluate_with, parse,
)

__all__ = [
    "FactorDomain", "MetricSpec", "ChristoffelTable", "DomainViolation",
    "NotOrdinary", "POLE", "OrdinaryCheck", "DEFAULT_DEGEN_EPS",
    "metric_diagonal", "metric_matrix", "is_metrically_ordinary",
    "christoffel_warped", "christoffel_generic", "speed", "pairing",
    "allowed_pattern", "flat_spec",
]

DEFAULT_DEGEN_EPS = 1e-12


class FactorDomain(enum.Enum):
    PLANE = "plane"
    DISC = "disc"

    def contains(self, w: complex) -> bool:
        if self is FactorDomain.PLANE:
            return bool(np.isfinite(w))
        return abs(w) < 1.0


class DomainViolation(ValueError):
    def __init__(self, index: int, value: complex):
        super().__init__(f"coordinate {index} = {value!r} outside its factor domain")
        self.index = index
        self.value = value


class NotOrdinary(ValueError):
    def __init__(self, u, reason: str):
        super().__init__(f"point {tuple(u)} is not metrically ordinary ({reason})")
        self.u = tuple(u)
        self.reason = reason


class _PoleMarker:
    """Stands in for a metric entry that sits on a pole."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "POLE"


POLE = _PoleMarker()


def _is_zero_expr(e: ExprNode) -> bool:
    if isinstance(e, Const):
        return e.value == 0
    probes = (0.3127 + 0.1913j, -0.7411 + 0.5531j, 1.9173 - 0.2207j, -0.1109 - 1.3371j)
    seen = 0
    for p in probes:
        try:
            if evaluate(e, p) != 0:
                return False
            seen += 1
        except Pole:
            return False
    return seen > 0


@dataclass(frozen=True)
class MetricSpec:
    """Warped-product metric data.

    ``a[k-2]`` and ``f[k-2]`` hold the warping function and fibre metric of
    factor ``k`` (1-based), so ``len(a) == len(f) == n - 1``.
    """

    n: int
    b1: ExprNode
    a: tuple
    f: tuple
    domains: tuple = ()
    pole_eps: float = DEFAULT_POLE_EPS
    degen_eps: float = DEFAULT_DEGEN_EPS

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a warped product needs N >= 2 factors")
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "f", tuple(self.f))
        if len(self.a) != self.n - 1 or len(self.f) != self.n - 1:
            raise ValueError("need N-1 warping functions and N-1 fibre metrics")
        doms = tuple(FactorDomain(d) for d in self.domains) if self.domains else \
            (FactorDomain.PLANE,) * self.n
        if len(doms) != self.n:
            raise ValueError("need one domain per factor")
        object.__setattr__(self, "domains", doms)
        for name, e in [("b1", self.b1)] + [(f"a.{k + 2}", x) for k, x in enumerate(self.a)] \
                + [(f"f.{k + 2}", x) for k, x in enumerate(self.f)]:
            if _is_zero_expr(e):
                raise ValueError(f"{name} must be a nonzero function")

    @classmethod
    def from_strings(cls, b1: str, a: Sequence[str], f: Sequence[str],
                     domains: Sequence[str] = (), **kw) -> "MetricSpec":
        return cls(n=len(a) + 1, b1=parse(b1), a=[parse(s) for s in a],
                   f=[parse(s) for s in f], domains=tuple(domains), **kw)

    def check_domain(self, u) -> None:
        for i, (d, w) in enumerate(zip(self.domains, u)):
            if not d.contains(complex(w)):
                raise DomainViolation(i, complex(w))

    def in_domain(self, u) -> bool:
        return all(d.contains(complex(w)) for d, w in zip(self.domains, u))

    # Compiled jet evaluation: hot path for Christoffel symbols and the geodesic rhs.
    def jets(self, u):
        """Return ``(b1, a, f)`` jets at ``u`` as ``(value, d1, d2)`` tuples.

        ``a[k]`` is evaluated at ``u[0]`` and ``f[k]`` at ``u[k+1]``.
        Raises :class:`Pole`.
        """
        eps = self.pole_eps
        u0 = complex(u[0])
        b = eval_jet_tuple(self.b1, u0, eps)
        a = [eval_jet_tuple(x, u0, eps) for x in self.a]
        f = [eval_jet_tuple(x, complex(u[k + 1]), eps) for k, x in enumerate(self.f)]
        return b, a, f


def flat_spec(n: int = 2, domains: Sequence[str] = ()) -> MetricSpec:
    """Complex-euclidean metric ``sum du_k^2``."""
    return MetricSpec.from_strings("1", ["1"] * (n - 1), ["1"] * (n - 1), domains)


def metric_diagonal(m: MetricSpec, u) -> tuple:
    """Diagonal entries ``g_kk(u)``; entries on a pole are :data:`POLE`."""
    m.check_domain(u)
    out = []
    try:
        out.append(evaluate(m.b1, u[0], m.pole_eps))
    except Pole:
        out.append(POLE)
    for k in range(m.n - 1):
        try:
            out.append(evaluate(m.a[k], u[0], m.pole_eps) * evaluate(m.f[k], u[k + 1], m.pole_eps))
        except Pole:
            out.append(POLE)
    return tuple(out)


def metric_matrix(m: MetricSpec, u) -> np.ndarray:
    """Representative matrix of the metric at ``u``.  Raises :class:`Pole`."""
    diag = metric_diagonal(m, u)
    if any(g is POLE for g in diag):
        raise Pole(tuple(u))
    return np.diag(np.array(diag, dtype=complex))


@dataclass(frozen=True)
class OrdinaryCheck:
    ok: bool
    reason: str = "ok"
    index: int | None = None

    def __bool__(self):
        return self.ok


def is_metrically_ordinary(m: MetricSpec, u, pole_eps: float | None = None,
                           degen_eps: float | None = None) -> OrdinaryCheck:
    """Metric holomorphic and nondegenerate at ``u``.

    The returned object is truthy iff ordinary; ``reason`` is one of
    ``"ok"``, ``"domain"``, ``"pole"``, ``"degenerate"``.
    """
    if pole_eps is not None or degen_eps is not None:
        m = MetricSpec(m.n, m.b1, m.a, m.f, m.domains,
                       m.pole_eps if pole_eps is None else pole_eps,
                       m.degen_eps if degen_eps is None else degen_eps)
    try:
        diag = metric_diagonal(m, u)
    except DomainViolation as exc:
        return OrdinaryCheck(False, "domain", exc.index)
    for i, g in enumerate(diag):
        if g is POLE:
            return OrdinaryCheck(False, "pole", i)
    for i, g in enumerate(diag):
        if abs(g) < m.degen_eps:
            return OrdinaryCheck(False, "degenerate", i)
    return OrdinaryCheck(True)


def _require_ordinary(m, u):
    chk = is_metrically_ordinary(m, u)
    if not chk:
        raise NotOrdinary(u, chk.reason)


# ---------------------------------------------------------------------------
# Christoffel symbols

def allowed_pattern(n: int) -> frozenset:
    """Index triples ``(i, j, k)`` that may carry a nonzero ``Gamma^k_ij``."""
    keys = {(0, 0, 0)}
    for i in range(1, n):
        keys.add((i, i, 0))
        keys.add((i, i, i))
        keys.add((0, i, i))
        keys.add((i, 0, i))
    return frozenset(keys)


@dataclass
class ChristoffelTable:
    """Sparse ``Gamma^k_ij`` keyed by ``(i, j, k)``; missing keys are zero."""

    n: int
    entries: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.entries.get(tuple(key), 0j)

    def set(self, i, j, k, value):
        self.entries[(i, j, k)] = complex(value)
        self.entries[(j, i, k)] = complex(value)

    def as_array(self) -> np.ndarray:
        """Dense array indexed ``[k, i, j]``."""
        out = np.zeros((self.n, self.n, self.n), dtype=complex)
        for (i, j, k), v in self.entries.items():
            out[k, i, j] = v
        return out

    @classmethod
    def from_array(cls, gamma: np.ndarray) -> "ChristoffelTable":
        n = gamma.shape[0]
        tab = cls(n)
        for k, i, j in zip(*np.nonzero(gamma)):
            tab.entries[(int(i), int(j), int(k))] = complex(gamma[k, i, j])
        return tab

    def is_symmetric(self) -> bool:
        return all(self.entries.get((j, i, k)) == v for (i, j, k), v in self.entries.items())

    def respects_pattern(self) -> bool:
        allowed = allowed_pattern(self.n)
        return all(key in allowed or v == 0 for key, v in self.entries.items())

    def max_relative_deviation(self, other: "ChristoffelTable") -> float:
        x, y = self.as_array(), other.as_array()
        scale = np.maximum(np.abs(x), np.abs(y))
        diff = np.abs(x - y)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)
        return float(rel.max())


def christoffel_warped(m: MetricSpec, u) -> ChristoffelTable:
    """Closed-form connection coefficients of the warped product."""
    _require_ordinary(m, u)
    b, a, f = m.jets(u)
    tab = ChristoffelTable(m.n)
    tab.set(0, 0, 0, b[1] / (2 * b[0]))
    for k in range(1, m.n):
        ak, fk = a[k - 1], f[k - 1]
        tab.set(k, k, 0, -ak[1] * fk[0] / (2 * b[0]))
        tab.set(k, k, k, fk[1] / (2 * fk[0]))
        tab.set(0, k, k, ak[1] / (2 * ak[0]))
    return tab


def _metric_partials(m: MetricSpec, u):
    """``g`` and ``dg[m_, i, j] = d g_ij / d u_m`` by seeding one jet per coordinate.

    Every diagonal entry is evaluated as a function of the full point, so the
    chain/product rules are applied by the jet arithmetic rather than by hand.
    """
    n = m.n
    g = np.zeros((n, n), dtype=complex)
    dg = np.zeros((n, n, n), dtype=complex)
    for var in range(n):
        pt = [Jet2(complex(w), 1 + 0j if c == var else 0j) for c, w in enumerate(u)]
        entries = [evaluate_with(m.b1, pt[0], m.pole_eps)]
        for k in range(n - 1):
            entries.append(evaluate_with(m.a[k], pt[0], m.pole_eps)
                           * evaluate_with(m.f[k], pt[k + 1], m.pole_eps))
        for i, e in enumerate(entries):
            if not isinstance(e, Jet2):
                # constant entry: no dependence on the seeded coordinate
                e = Jet2(complex(e), 0j, 0j)
            g[i, i] = e.value
            dg[var, i, i] = e.d1
    return g, dg


def christoffel_generic(m: MetricSpec, u) -> ChristoffelTable:
    """Connection coefficients from the general formula

        2 Gamma^k_ij = sum_m g^{km} (-d_m g_ij + d_j g_im + d_i g_jm)

    with a full matrix inverse.  Independent of :func:`christoffel_warped`.
    """
    _require_ordinary(m, u)
    g, dg = _metric_partials(m, u)
    ginv = np.linalg.inv(g)
    # bracket[m_, i, j] = -d_m g_ij + d_j g_im + d_i g_jm
    bracket = -dg + np.einsum("jim->mij", dg) + np.einsum("ijm->mij", dg)
    gamma = 0.5 * np.einsum("km,mij->kij", ginv, bracket)
    return ChristoffelTable.from_array(gamma)


def speed(m: MetricSpec, u, v) -> complex:
    """``Lambda(v, v)`` at ``u``.  Raises :class:`Pole`."""
    return pairing(m, u, v, v)


def pairing(m: MetricSpec, u, x, y) -> complex:
    """``<x, y>`` at ``u`` for the diagonal metric."""
    eps = m.pole_eps
    total = evaluate(m.b1, u[0], eps) * complex(x[0]) * complex(y[0])
    for k in range(1, m.n):
        gkk = evaluate(m.a[k - 1], u[0], eps) * evaluate(m.f[k - 1], u[k], eps)
        total += gkk * complex(x[k]) * complex(y[k])
    return total
