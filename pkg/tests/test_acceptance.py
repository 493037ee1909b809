"""Acceptance suite: ten end-to-end checks, each with a stated tolerance.

Every test records one ``[PASS]``/``[FAIL]`` line that is printed in the
terminal summary, then asserts.
"""

import cmath
import math
import time

import numpy as np
import pytest

from conftest import random_rational_spec, random_smooth_spec, record_acceptance
from merogeo.coercivity import EsempioSpec, check_esempio_coercive, incompleteness_probe
from merogeo.continuation import (
    BranchLike, Completed, Converged, Logarithmic, NoLimit, NoReturn, ODESystem,
    PathSpec, ReturnsAfter, classify_singularity, integrate_along, monodromy_probe,
    radial_limit,
)
from merogeo.expr import Pole
from merogeo.geodesic import (
    GeodesicState, _uniform_derivative, covariant_derivative_along,
    reparametrized_initial_state, reparametrized_rhs, trace_geodesic,
)
from merogeo.metric import (
    NotOrdinary, christoffel_generic, christoffel_warped, flat_spec, pairing,
)
from merogeo.quad import (
    DEGENERATE_LOG, LINEAR, LOG, SQRT, BranchAmbiguity, BranchCutCrossing, NewtonDivergence,
    QuadBranch, check_derivative, closed_form_geodesic_u1,
)

pytestmark = pytest.mark.acceptance


def _report(number, title, ok, detail, started):
    record_acceptance(number, title, ok, f"{detail} ({time.monotonic() - started:.1f}s)")
    print(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    assert ok, detail


def _random_polyline(rng, max_length, start=0j):
    pts = [complex(start)]
    length = rng.uniform(0.5, 1.0) * max_length
    legs = int(rng.integers(1, 4))
    for _ in range(legs):
        pts.append(pts[-1] + length / legs * cmath.exp(1j * rng.uniform(0, 2 * math.pi)))
    return PathSpec.polyline(pts)


def _scalar(fn):
    return ODESystem(1, lambda y, z: np.array([fn(y[0], z)]))


def _inv(x):
    if x == 0:
        raise Pole(x)
    return 1 / x


def test_01_christoffel_oracle():
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    worst, done, invariants = 0.0, 0, True
    while done < 200:
        n = int(rng.choice([2, 3, 4]))
        m = random_rational_spec(rng, n)
        u = tuple(complex(*rng.uniform(-1, 1, 2)) for _ in range(n))
        try:
            w = christoffel_warped(m, u)
        except NotOrdinary:
            continue
        g = christoffel_generic(m, u)
        worst = max(worst, w.max_relative_deviation(g))
        invariants &= all(t.is_symmetric() and t.respects_pattern() for t in (w, g))
        done += 1
    ok = worst <= 1e-9 and invariants
    _report(1, "Christoffel oracle equivalence", ok,
            f"200 specs, max rel deviation {worst:.2e} <= 1e-9, invariants {invariants}", t0)


def test_02_flat_geodesics_are_exact():
    t0 = time.monotonic()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 5))
        u0 = rng.normal(size=n) + 1j * rng.normal(size=n)
        v0 = rng.normal(size=n) + 1j * rng.normal(size=n)
        path = _random_polyline(rng, 20.0)
        tr = trace_geodesic(flat_spec(n), GeodesicState(0, u0, v0), path, 1e-10)
        assert isinstance(tr.status, Completed)
        worst = max(worst, float(np.max(np.abs(tr.u - (u0 + np.outer(tr.z, v0))))))
    _report(2, "Flat-geodesic exactness", worst <= 1e-10,
            f"20 paths of arclength <= 20, max error {worst:.2e} <= 1e-10", t0)


def test_03_conservation():
    t0 = time.monotonic()
    rng = np.random.default_rng(103)
    worst_res = worst_speed = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        m = random_smooth_spec(rng, n)
        u0 = (rng.normal(size=n) + 1j * rng.normal(size=n)) * 0.2
        v0 = (rng.normal(size=n) + 1j * rng.normal(size=n)) * 0.3
        tr = trace_geodesic(m, GeodesicState(0, u0, v0), _random_polyline(rng, 20.0), 1e-10)
        assert isinstance(tr.status, Completed)
        worst_res = max(worst_res, float(np.nanmax(tr.residuals)))
        worst_speed = max(worst_speed, float(np.max(np.abs(tr.speed - tr.speed[0]))))
    ok = worst_res <= 1e-8 and worst_speed <= 1e-8
    _report(3, "Conservation of first integrals and speed", ok,
            f"50 traces, integral drift {worst_res:.2e}, speed drift {worst_speed:.2e} <= 1e-8", t0)


def test_04_monodromy_laws():
    t0 = time.monotonic()
    sqrt_ = _scalar(lambda y, z: 0.5 * _inv(y))
    log_ = _scalar(lambda y, z: _inv(z))
    loop = PathSpec.circle(0, 1.0)
    r_sqrt = monodromy_probe(sqrt_, [1], loop)
    r_log = monodromy_probe(log_, [0.5 - 1j], loop, max_loops=4)
    disp = max(abs(d[0] - 2j * math.pi) for d in r_log.displacements) \
        if isinstance(r_log, NoReturn) else math.inf
    c_sqrt = classify_singularity(sqrt_, [1], 0, PathSpec.segment(1, 0))
    c_log = classify_singularity(log_, [0], 0, PathSpec.segment(1, 0))
    ok = (isinstance(r_sqrt, ReturnsAfter) and r_sqrt.loops == 2 and disp <= 1e-9
          and c_sqrt == BranchLike(2) and c_log == Logarithmic())
    _report(4, "Monodromy laws", ok,
            f"sqrt {r_sqrt.__class__.__name__}({getattr(r_sqrt, 'loops', '-')}) -> {c_sqrt}; "
            f"log displacement error {disp:.2e} <= 1e-9 -> {c_log}", t0)


def test_05_quadrature_table():
    t0 = time.monotonic()
    cases = {LOG: (1, 0, 1), DEGENERATE_LOG: (1, 2, 1), SQRT: (0, 1, 0), LINEAR: (0, 0, 1)}
    rng = np.random.default_rng(105)
    worst = {}
    for case, abc in cases.items():
        qb = QuadBranch(*abc)
        assert qb.case == case
        errs = []
        while len(errs) < 100:
            r, th = 5 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
            eta = r * cmath.exp(1j * th)
            if any(abs(eta - z) < 1e-3 for z in qb.zeros()):
                continue
            try:
                errs.append(check_derivative(qb, eta))
            except BranchCutCrossing:
                continue
        worst[case] = max(errs)
    ok = max(worst.values()) <= 1e-9
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    _report(5, "Quadrature table derivative check", ok, f"100 points each: {detail} <= 1e-9", t0)


def test_06_example_class_closed_form():
    t0 = time.monotonic()
    es = EsempioSpec.from_strings("u", ["1"], [[1, 0, 1]])
    m = es.to_metric()
    rng = np.random.default_rng(106)
    worst, used, tried = 0.0, 0, 0
    while used < 10 and tried < 40:
        tried += 1
        s = GeodesicState(0, [complex(*rng.uniform(-0.5, 0.5, 2)), rng.normal()],
                          [complex(*rng.uniform(-0.8, 0.8, 2)), rng.normal() * 0.3])
        path = _random_polyline(rng, 5.0)
        tr = trace_geodesic(m, s, path, 1e-11)
        if not isinstance(tr.status, Completed):
            continue
        try:
            u = closed_form_geodesic_u1(es.h, es.P, tr.integrals.A, path, s.u[0], s.udot[0])
        except (BranchAmbiguity, BranchCutCrossing, NewtonDivergence):
            continue
        worst = max(worst, abs(u - tr.u[-1, 0]))
        used += 1
    ok = used == 10 and worst <= 1e-7
    _report(6, "Example-class trace vs closed form", ok,
            f"{used} branch-safe paths of arclength <= 5, max |du1| {worst:.2e} <= 1e-7", t0)


def test_07_completeness_dichotomy():
    t0 = time.monotonic()
    es = EsempioSpec.from_strings("u", ["1"], [[1, 0, 1]])
    assert check_esempio_coercive(es).coercive
    seed = GeodesicState(0, [0.1 + 0.2j, 0.3], [0.5 + 0.1j, 0.1])
    good = incompleteness_probe(es.to_metric(), [seed], n_rays=32, radius=50.0)

    disc = flat_spec(2, ["disc", "plane"])
    angles = [2 * math.pi * j / 32 for j in range(32)]
    # unit-speed seed at the center: exit distance 1 on every ray
    fan = incompleteness_probe(disc, [GeodesicState(0, [0, 0], [1, 0])], angles=angles)
    errors = [abs(abs(w.z_star) - 1.0) for w in fan.witnesses if w.kind == "DomainExit"]
    hits = len(errors)
    # off-center radial seeds: exit distance (1 - |u0|) / |udot0|
    for j, th in enumerate(angles):
        alpha = 0.37 * j
        u0, v0 = 0.3 * cmath.exp(1j * alpha), 1.7 * cmath.exp(1j * (alpha - th))
        res = incompleteness_probe(disc, [GeodesicState(0, [u0, 0], [v0, 0])], angles=[th])
        for w in res.witnesses:
            if w.kind == "DomainExit":
                hits += 1
                errors.append(abs(abs(w.z_star) - (1 - abs(u0)) / abs(v0)))
    worst = max(errors)
    ok = not good.witnesses and good.rays_done == 32 and hits == 64 and worst <= 1e-8
    _report(7, "Completeness dichotomy at probe scale", ok,
            f"coercive fixture {len(good.witnesses)} hard witnesses / 32 rays "
            f"({len(good.stops)} soft stops); disc fixture {hits}/64 DomainExit, "
            f"max |z*| error {worst:.2e} <= 1e-8", t0)


def test_08_limit_detector():
    t0 = time.monotonic()
    recip = _scalar(lambda y, z: y * y)
    essential = _scalar(lambda y, z: -y * _inv((z - 1) ** 2))
    a = radial_limit(recip, [1], PathSpec.segment(0, 1))
    b = radial_limit(essential, [cmath.exp(1 / 1j)], PathSpec.segment(1 + 1j, 1))
    ok = isinstance(a, Converged) and a.is_infinite and isinstance(b, NoLimit)
    _report(8, "Radial limit detector", ok,
            f"y'=y^2 -> {type(a).__name__}(inf={getattr(a, 'is_infinite', None)}); "
            f"y'=-y/(z-1)^2 -> {type(b).__name__}", t0)


def _sweep_fixture(rng, n):
    return random_smooth_spec(rng, n), GeodesicState(
        0, (rng.normal(size=n) + 1j * rng.normal(size=n)) * 0.2,
        np.concatenate([(rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)) * 0.3,
                        [0.5 + 0.1 * complex(*rng.normal(size=2))]]))


def test_09_reparametrisation_consistency():
    t0 = time.monotonic()
    rng = np.random.default_rng(109)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        m, s = _sweep_fixture(rng, n)
        path = PathSpec.segment(0, 2 * cmath.exp(1j * rng.uniform(0, 2 * math.pi)))
        tr = trace_geodesic(m, s, path, 1e-11, n_samples=41)
        assert isinstance(tr.status, Completed)
        v0, y = reparametrized_initial_state(m, s)
        system = reparametrized_rhs(m)
        v = tr.u[:, -1]
        # follow u^N through the traced values leg by leg and compare the rest
        for k in range(1, len(v)):
            rec = integrate_along(system, y, PathSpec.segment(v[k - 1], v[k]), 1e-12)
            assert rec.completed
            y = rec.final_state
            worst = max(worst, float(np.max(np.abs(y[:n - 1] - tr.u[k, :-1]))))
    _report(9, "Reparametrization consistency", worst <= 1e-7,
            f"10 fixtures, max deviation {worst:.2e} <= 1e-7", t0)


def test_10_metric_compatibility():
    t0 = time.monotonic()
    rng = np.random.default_rng(110)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        m, s = _sweep_fixture(rng, n)
        path = PathSpec.segment(0, 2 * cmath.exp(1j * rng.uniform(0, 2 * math.pi)))
        tr = trace_geodesic(m, s, path, 1e-11, n_samples=401)
        assert isinstance(tr.status, Completed)
        c = rng.normal(size=(4, n)) + 1j * rng.normal(size=(4, n))
        z = tr.z[:, None]
        X = c[0] * np.exp(0.2 * c[1] * z) + 0.1 * c[2] * z ** 2
        Y = np.cos(0.5 * z + c[3])
        dX = covariant_derivative_along(m, tr, X)
        dY = covariant_derivative_along(m, tr, Y)
        P = np.array([pairing(m, u, x, y) for u, x, y in zip(tr.u, X, Y)])
        h = tr.t[1] - tr.t[0]
        dP = _uniform_derivative(P, h) / _uniform_derivative(tr.z, h)
        rhs = np.array([pairing(m, u, a, y) + pairing(m, u, x, b)
                        for u, a, y, x, b in zip(tr.u, dX, Y, X, dY)])
        worst = max(worst, float(np.max(np.abs(dP - rhs))))
    _report(10, "Metric compatibility along traces", worst <= 1e-6,
            f"10 traces, max |d<X,Y> - <DX,Y> - <X,DY>| {worst:.2e} <= 1e-6", t0)
