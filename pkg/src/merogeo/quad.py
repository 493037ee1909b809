"""Closed-form antiderivatives of ``1/sqrt(a x^2 + b x + c)`` and their inversion.

Four cases, selected by the coefficients (``D = b^2 - 4ac``):

========================  =========================================
case                       antiderivative (up to a constant)
========================  =========================================
``log``     a != 0, D != 0  ``(1/sqrt(a)) log(x + b/2a + R/sqrt(a))``
``dlog``    a != 0, D == 0  ``(1/(s sqrt(a))) log(x + b/2a)``
``sqrt``    a == 0, b != 0  ``(2/b) R``
``linear``  a == b == 0     ``x / R``
========================  =========================================

Here ``R`` is a branch of ``sqrt(a x^2 + b x + c)`` and, in the degenerate
case, ``R = s sqrt(a) (x + b/2a)`` with ``s = +-1``.  Branches are fixed at a
base point and carried to other points along straight segments, which is
exact: each linear factor ``(x - r)/(x0 - r)`` sweeps a segment starting at 1
and so never crosses the principal cut unless ``r`` lies on the segment.
Longer journeys are made by rebasing, see :func:`closed_form_geodesic_u1`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .continuation import PathSpec
from .expr import ExprNode, Jet2, derivative, evaluate

__all__ = [
    "LOG", "DEGENERATE_LOG", "SQRT", "LINEAR", "QuadBranch", "BranchCutCrossing",
    "NewtonDivergence", "BranchAmbiguity", "quad_case", "antiderivative",
    "check_derivative", "closed_form_geodesic_u1", "quadratic_from_integrals",
]

LOG = "log"
DEGENERATE_LOG = "degenerate_log"
SQRT = "sqrt"
LINEAR = "linear"

ZERO_EPS = 1e-14


class BranchCutCrossing(ValueError):
    """The straight segment from the base point passes through a branch point."""

    def __init__(self, eta, branch_point):
        super().__init__(f"segment to {eta} passes within tolerance of branch point {branch_point}")
        self.eta = eta
        self.branch_point = branch_point


class NewtonDivergence(ArithmeticError):
    pass


class BranchAmbiguity(ArithmeticError):
    pass


def quad_case(a, b, c, eps: float = ZERO_EPS) -> str:
    scale = max(abs(a), abs(b), abs(c), 1.0)
    a_zero = abs(a) <= eps * scale
    if not a_zero:
        disc = b * b - 4 * a * c
        return DEGENERATE_LOG if abs(disc) <= eps * scale * scale else LOG
    if abs(b) > eps * scale:
        return SQRT
    if abs(c) <= eps * scale:
        raise ValueError("the quadratic vanishes identically")
    return LINEAR


def _dist_to_segment(p, z0, z1) -> float:
    d = z1 - z0
    if d == 0:
        return abs(p - z0)
    length = abs(d)
    e = d / length
    # project on the unit direction; |d|^2 can underflow for tiny segments
    s = min(max(((p - z0) * e.conjugate()).real, 0.0), length)
    return abs(p - (z0 + s * e))


@dataclass(frozen=True)
class QuadBranch:
    """Branch of ``sqrt(a x^2 + b x + c)`` fixed at ``base`` by the value ``root``.

    ``root`` defaults to the principal square root at the base point.  The
    base point may be a zero of the quadratic only in the ``sqrt`` case,
    where the principal branch is then used.
    """

    a: complex
    b: complex
    c: complex
    base: complex = 0j
    root: complex | None = None
    cut_eps: float = 1e-10

    def __post_init__(self):
        for name in ("a", "b", "c", "base"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        case = quad_case(self.a, self.b, self.c)
        object.__setattr__(self, "case", case)
        q0 = self.q(self.base)
        if self.root is None:
            object.__setattr__(self, "root", cmath.sqrt(q0))
        else:
            r = complex(self.root)
            if abs(r * r - q0) > 1e-8 * max(1.0, abs(q0)):
                raise ValueError(f"root {r} does not square to the quadratic {q0} at the base")
            object.__setattr__(self, "root", r)
        if self.root == 0 and case != SQRT:
            raise ValueError("base point is a zero of the quadratic")

    @property
    def delta(self) -> complex:
        return self.b * self.b - 4 * self.a * self.c

    def q(self, eta) -> complex:
        return (self.a * eta + self.b) * eta + self.c

    def zeros(self) -> tuple:
        if self.case in (LOG, DEGENERATE_LOG):
            s = cmath.sqrt(self.delta)
            return ((-self.b + s) / (2 * self.a), (-self.b - s) / (2 * self.a))
        if self.case == SQRT:
            return (-self.c / self.b,)
        return ()

    def _check_reach(self, eta):
        for r in self.zeros():
            if r == self.base and self.case == SQRT:
                continue
            if _dist_to_segment(r, self.base, eta) <= self.cut_eps * max(1.0, abs(r)):
                raise BranchCutCrossing(eta, r)

    def sqrt_q(self, eta) -> complex:
        """The branch of ``sqrt(Q)`` continued from the base along the straight segment."""
        eta = complex(eta)
        self._check_reach(eta)
        return self._sqrt_q(eta)

    def _sqrt_q(self, eta):
        x0 = self.base
        if self.case == LINEAR:
            return self.root
        if self.case == SQRT:
            if self.root == 0:
                return cmath.sqrt(self.q(eta))
            r = -self.c / self.b
            return self.root * cmath.sqrt((eta - r) / (x0 - r))
        r1, r2 = self.zeros()
        if self.case == DEGENERATE_LOG:
            return self.root * (eta - r1) / (x0 - r1)
        return self.root * cmath.sqrt((eta - r1) / (x0 - r1)) * cmath.sqrt((eta - r2) / (x0 - r2))

    def _log_arg(self, eta, R):
        sa = cmath.sqrt(self.a)
        p, t = eta + self.b / (2 * self.a), R / sa
        if abs(p + t) >= abs(p - t):
            return p + t
        # (p + t)(p - t) = D / 4a^2; avoids cancellation on the other sheet
        return self.delta / (4 * self.a * self.a) / (p - t)

    def antiderivative(self, eta) -> complex:
        """Value at ``eta`` of the antiderivative that vanishes at the base point."""
        eta = complex(eta)
        self._check_reach(eta)
        x0 = self.base
        if eta == x0:
            return 0j
        if self.case == LINEAR:
            return (eta - x0) / self.root
        if self.case == SQRT:
            return 2.0 / self.b * (self._sqrt_q(eta) - self.root)
        if self.case == DEGENERATE_LOG:
            r = self.zeros()[0]
            return (x0 - r) / self.root * cmath.log((eta - r) / (x0 - r))
        # log case: unwrap the argument of the log along the segment
        sa = cmath.sqrt(self.a)
        w0 = self._log_arg(x0, self.root)
        w1 = self._log_arg(eta, self._sqrt_q(eta))
        return (math.log(abs(w1) / abs(w0)) + 1j * self._unwrapped_turn(eta, w0)) / sa

    def _unwrapped_turn(self, eta, w0) -> float:
        """Total change of ``arg w`` from the base to ``eta`` (adaptive subdivision)."""
        x0 = self.base

        def w_at(s):
            x = x0 + (eta - x0) * s
            return self._log_arg(x, self._sqrt_q(x))

        total = 0.0
        stack = [(0.0, 1.0, w0, w_at(1.0))]
        while stack:
            s0, s1, wa, wb = stack.pop()
            step = cmath.phase(wb / wa)
            if abs(step) < 0.5 or s1 - s0 < 1e-12:
                total += step
                continue
            sm = 0.5 * (s0 + s1)
            wm = w_at(sm)
            stack.append((sm, s1, wm, wb))
            stack.append((s0, sm, wa, wm))
        return total

    def derivative_jet(self, eta) -> complex:
        """``d/d(eta)`` of the closed form by forward-mode differentiation."""
        eta = complex(eta)
        R = self.sqrt_q(eta)
        if R == 0:
            raise ZeroDivisionError("derivative undefined at a zero of the quadratic")
        x = Jet2(eta, 1.0, 0.0)
        # R carried as a jet: R' = Q'/(2R)
        qp = 2 * self.a * eta + self.b
        Rj = Jet2(R, qp / (2 * R), (2 * self.a - (qp / (2 * R)) ** 2) / (2 * R))
        if self.case == LINEAR:
            return (x / Rj).d1
        if self.case == SQRT:
            return (Rj * (2.0 / self.b)).d1
        sa = cmath.sqrt(self.a)
        if self.case == DEGENERATE_LOG:
            r = self.zeros()[0]
            inner = x - r
            scale = (self.base - r) / self.root
        else:
            inner = x + self.b / (2 * self.a) + Rj / sa
            scale = 1.0 / sa
        return scale * inner.d1 / inner.value

    def rebased(self, eta) -> "QuadBranch":
        """Same branch, with the base moved to ``eta`` (reached along a straight segment)."""
        return QuadBranch(self.a, self.b, self.c, eta, self.sqrt_q(eta), self.cut_eps)


def antiderivative(qb: QuadBranch, eta) -> complex:
    return qb.antiderivative(eta)


def check_derivative(qb: QuadBranch, eta) -> float:
    """``|F'(eta) - 1/R(eta)|`` for the branch-consistent ``R``."""
    R = qb.sqrt_q(eta)
    return abs(qb.derivative_jet(eta) - 1.0 / R)


# ---------------------------------------------------------------------------
# Inversion for metrics of the form (h')^2 du^2 + sum f_k^2 / P_k(h) dv_k^2

def quadratic_from_integrals(P: Sequence[Sequence[complex]], A) -> tuple:
    """Coefficients ``(a, b, c)`` of ``A[0] - sum_k A[k] P_k(x)``.

    ``P[k-1]`` lists the coefficients ``(p0, p1, p2)`` of ``P_k`` in
    increasing degree (shorter lists are zero-padded).
    """
    A = np.asarray(A, dtype=complex)
    if len(P) != len(A) - 1:
        raise ValueError("need one polynomial per fibre constant")
    coef = np.zeros(3, dtype=complex)
    coef[0] = A[0]
    for Ak, p in zip(A[1:], P):
        p = list(p)
        if len(p) > 3:
            raise ValueError("polynomials must have degree at most two")
        p = p + [0] * (3 - len(p))
        coef -= Ak * np.asarray(p, dtype=complex)
    return complex(coef[2]), complex(coef[1]), complex(coef[0])


def closed_form_geodesic_u1(h: ExprNode, P, A, z, u1_0, udot1_0, *, z0: complex = 0j,
                            max_step: float = 0.05, newton_tol: float = 1e-14,
                            max_iter: int = 30, collide_eps: float = 1e-8):
    """Base coordinate of the geodesic at ``z`` from the closed-form integral.

    Solves ``Phi(h(u)) = z - z0`` where ``Phi`` is the antiderivative of
    ``1/sqrt(A[0] - sum A[k] P_k(x))`` normalised at ``h(u1_0)`` with the
    root ``h'(u1_0) * udot1_0``.  The solution is followed from ``z0`` by a
    homotopy along the segment to ``z`` (or along ``z`` itself when it is a
    :class:`~merogeo.continuation.PathSpec`), with predictor steps, damped
    Newton corrections and rebasing of the square-root branch at every
    accepted point.

    Raises
    ------
    BranchAmbiguity
        When ``h'`` or the square root gets within ``collide_eps`` of zero,
        where two preimages collide and the branch is not determined.
    NewtonDivergence
        When the corrector fails even for tiny homotopy steps.
    """
    path = z if isinstance(z, PathSpec) else None
    if path is None:
        z = complex(z)
        if z == z0:
            return complex(u1_0)
        path = PathSpec.segment(z0, z)
    dh = derivative(h)
    a, b, c = quadratic_from_integrals(P, A)
    u = complex(u1_0)
    hp = evaluate(dh, u)
    if abs(hp) < collide_eps:
        raise BranchAmbiguity(f"h' vanishes at the seed {u}")
    qb = QuadBranch(a, b, c, evaluate(h, u), hp * complex(udot1_0))
    if abs(qb.root) < collide_eps:
        raise BranchAmbiguity("seed sits on a zero of the quadratic")

    s, ds = 0.0, min(max_step, 1.0)
    zs = path.point(0.0)
    dsmin = 1e-12
    while s < 1.0:
        s_new = min(1.0, s + ds)
        z_new = path.point(s_new)
        dz = z_new - zs
        R = qb.root
        u_pred = u + dz * R / hp
        try:
            u_new, qb_new, hp_new = _newton(h, dh, qb, u_pred, dz, newton_tol, max_iter)
            ok = abs(u_new - u_pred) <= 0.1 * max(abs(dz * R / hp), 1e-12) + 1e-10 * max(1.0, abs(u))
        except (ArithmeticError, ValueError):
            ok = False
        if not ok:
            ds *= 0.5
            if ds < dsmin:
                raise NewtonDivergence(f"corrector failed near z = {z_new}")
            continue
        if abs(hp_new) < collide_eps or abs(qb_new.root) < collide_eps:
            raise BranchAmbiguity(f"preimages collide near z = {z_new}")
        u, qb, hp, zs, s = u_new, qb_new, hp_new, z_new, s_new
        ds = min(max_step, ds * 1.5)
    return u


def _newton(h, dh, qb: QuadBranch, u, target, tol, max_iter):
    """Solve ``qb.antiderivative(h(u)) = target``; return ``(u, rebased branch, h'(u))``."""
    for _ in range(max_iter):
        eta = evaluate(h, u)
        hp = evaluate(dh, u)
        g = qb.antiderivative(eta) - target
        R = qb.sqrt_q(eta)
        step = g * R / hp
        lam = 1.0
        # damping: halve until the residual decreases
        while True:
            u_try = u - lam * step
            try:
                g_try = qb.antiderivative(evaluate(h, u_try)) - target
                if abs(g_try) < abs(g) or abs(g) < tol:
                    break
            except (ArithmeticError, ValueError):
                pass
            lam *= 0.5
            if lam < 1e-4:
                if abs(step) <= 1e3 * tol * max(1.0, abs(u)):
                    # residual is at rounding level already
                    return u, qb.rebased(eta), hp
                raise NewtonDivergence("no descent")
        u = u_try
        if abs(lam * step) <= tol * max(1.0, abs(u)):
            eta = evaluate(h, u)
            return u, qb.rebased(eta), evaluate(dh, u)
    raise NewtonDivergence("corrector did not converge")
