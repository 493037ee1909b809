import cmath

import numpy as np
import pytest

from conftest import random_smooth_spec
from merogeo.continuation import (
    BranchLike, Completed, DomainExit, PathSpec, PoleLike, SingularStop, integrate_along,
)
from merogeo.geodesic import (
    CONSTANT_U1, GENERAL, GeodesicState, VanishingUN, covariant_derivative_along,
    first_integral_residual, first_integrals, geodesic_rhs, reparametrized_initial_state,
    reparametrized_rhs, trace_geodesic,
)
from merogeo.metric import MetricSpec, NotOrdinary, flat_spec, speed


def spec(b1, a, f, **kw):
    return MetricSpec.from_strings(b1, [a], [f], **kw)


def accel(m, u, ud):
    y = np.concatenate([u, ud]).astype(complex)
    return geodesic_rhs(m)(y, 0j)[m.n:]


# -- equations -------------------------------------------------------------------

def test_flat_acceleration_vanishes():
    assert not np.any(accel(flat_spec(3), [1, 2j, 3], [0.3, 1, -2]))


def test_acceleration_examples():
    assert np.allclose(accel(spec("u", "1", "1"), [1, 0], [1, 0]), [-0.5, 0])
    assert np.allclose(accel(spec("1", "u", "1"), [1, 0], [0, 1]), [0.5, 0])


def test_state_round_trip():
    s = GeodesicState(1j, [1, 2], [3, 4])
    t = GeodesicState.from_vector(s.z, s.vector)
    assert t.z == s.z and np.array_equal(t.u, s.u) and np.array_equal(t.udot, s.udot)
    with pytest.raises(ValueError):
        GeodesicState(0, [1, 2], [3])


# -- first integrals ---------------------------------------------------------------

def test_first_integral_examples():
    p, q = 0.7 - 0.2j, 1.3 + 0.5j
    F = first_integrals(flat_spec(2), GeodesicState(0, [0, 0], [p, q]))
    assert F.case == GENERAL
    assert np.allclose(F.A, [p * p + q * q, q * q])

    m = spec("exp(u)", "u^2+1", "1/(1+u^2)")
    F = first_integrals(m, GeodesicState(0, [0.2, 0.1], [0.5, 0]))
    assert F.A[1] == 0

    F = first_integrals(spec("1", "1", "1"), GeodesicState(0, [0.4, 0], [0, 3]))
    assert F.case == CONSTANT_U1
    assert F.A[1] == 9 and F.A[0] == 0.4


def test_residual_is_zero_at_the_seed(rng):
    for _ in range(5):
        m = random_smooth_spec(rng, 3)
        s = GeodesicState(0, rng.normal(size=3) * 0.2, rng.normal(size=3) + 1j * rng.normal(size=3))
        assert np.max(first_integral_residual(m, s, first_integrals(m, s))) <= 1e-14


def test_residual_is_first_order_in_a_perturbation():
    m = spec("exp(u)", "1+u^2", "exp(u)")
    s = GeodesicState(0, [0.3, 0.1], [0.8, 0.4])
    F = first_integrals(m, s)
    b1 = cmath.exp(0.3)
    for delta in (1e-3, 1e-5):
        p = GeodesicState(0, s.u, s.udot + [delta, 0])
        r = first_integral_residual(m, p, F)[0]
        assert r == pytest.approx(abs(2 * 0.8 * b1) * delta, rel=2 * delta)


@pytest.mark.parametrize("eps", [1e-6, 1e-9])
def test_constant_base_case_is_the_limit(eps):
    # a_2(0) = 1 so the two normalisations of the fibre constant coincide
    m = spec("exp(u)", "1+u^2", "1/(1+u^2)")
    s = GeodesicState(0, [0, 0.3], [eps, 0.7])
    gen = first_integrals(m, s)
    const = first_integrals(m, s, degen_eps=1e-3)
    assert gen.case == GENERAL and const.case == CONSTANT_U1
    assert abs(gen.A[1] - const.A[1]) <= 10 * eps ** 2
    assert abs(gen.A[0] - eps ** 2 * cmath.exp(0) - const.A[1]) <= 1e-14


def test_seed_must_be_ordinary():
    with pytest.raises(NotOrdinary):
        first_integrals(spec("u", "1", "1"), GeodesicState(0, [0, 0], [1, 1]))


# -- traces ------------------------------------------------------------------------

def test_flat_trace_is_a_straight_line():
    u0, v0 = np.array([0.2, -1j]), np.array([1 + 0.5j, 0.3])
    path = PathSpec.polyline([0, 4, 4 + 3j, 10j])
    tr = trace_geodesic(flat_spec(2), GeodesicState(0, u0, v0), path, 1e-10)
    assert isinstance(tr.status, Completed)
    exact = u0 + np.outer(tr.z, v0)
    assert np.max(np.abs(tr.u - exact)) < 1e-10
    assert np.nanmax(tr.residuals) <= 1e-8


def test_disc_factor_exit():
    m = flat_spec(2, ["disc", "plane"])
    tr = trace_geodesic(m, GeodesicState(0, [0, 0], [1, 0]), PathSpec.segment(0, 2))
    assert isinstance(tr.status, DomainExit)
    assert abs(tr.status.z - 1) < 1e-10


def test_square_root_branch_of_the_fibre():
    # u2 * du2/dz is constant, so u2^2 = 1 + 2z vanishes at z = -1/2
    m = spec("1", "1", "u^2")
    tr = trace_geodesic(m, GeodesicState(0, [0, 1], [0, 1]), PathSpec.segment(0, -1))
    assert isinstance(tr.status, SingularStop)
    assert abs(tr.status.z + 0.5) < 1e-3
    assert tr.status.singularity == BranchLike(2)


def test_three_sheeted_branch_of_the_fibre():
    m = spec("1", "1", "u")
    tr = trace_geodesic(m, GeodesicState(0, [0, 1], [0, 1]), PathSpec.segment(0, -1))
    assert isinstance(tr.status, SingularStop)
    assert abs(tr.status.z + 2 / 3) < 1e-3
    assert tr.status.singularity == BranchLike(3)


def test_restart_around_a_pole_of_the_solution():
    # (du1/dz)^2 / u1^4 is constant, so u1 = 1/(1 - z) has a pole at z = 1
    m = spec("1/u^4", "1", "1")
    tr = trace_geodesic(m, GeodesicState(0, [1, 0], [1, 0.5]), PathSpec.segment(0, 2))
    assert isinstance(tr.status, Completed)
    assert len(tr.restarts) == 1
    z_pole, cls = tr.restarts[0]
    assert abs(z_pole - 1) < 1e-3 and isinstance(cls, PoleLike)
    assert abs(tr.u[-1, 0] + 1) < 1e-8
    assert abs(tr.u[-1, 1] - 1) < 1e-8


def test_constant_base_coordinate_stays_put():
    m = spec("exp(u)", "1+u^2", "1/(1+u^2)")
    tr = trace_geodesic(m, GeodesicState(0, [0, 0.3], [0, 0.7]), PathSpec.segment(0, 3 + 1j))
    assert tr.integrals.case == CONSTANT_U1
    assert np.max(np.abs(tr.u[:, 0])) < 1e-12
    assert np.nanmax(tr.residuals) < 1e-8


def test_speed_and_integrals_are_conserved(rng):
    for _ in range(3):
        m = random_smooth_spec(rng, 3)
        s = GeodesicState(0, rng.normal(size=3) * 0.2, (rng.normal(size=3) + 1j * rng.normal(size=3)) * 0.3)
        tr = trace_geodesic(m, s, PathSpec.polyline([0, 3, 3 + 3j]), 1e-10)
        assert isinstance(tr.status, Completed)
        assert np.nanmax(tr.residuals) < 1e-8
        assert np.max(np.abs(tr.speed - tr.speed[0])) < 1e-8


def test_null_geodesic_stays_null():
    m = spec("exp(u)", "1+u^2", "exp(u)")
    u0 = np.array([0.2, 0.1])
    g11 = cmath.exp(0.2)
    g22 = (1 + 0.04) * cmath.exp(0.1)
    s = GeodesicState(0, u0, [1, 1j * cmath.sqrt(g11 / g22)])
    assert abs(speed(m, u0, s.udot)) < 1e-15
    tr = trace_geodesic(m, s, PathSpec.segment(0, 2 + 1j))
    assert np.max(np.abs(tr.speed)) < 1e-9


def test_path_must_start_at_the_seed():
    with pytest.raises(ValueError):
        trace_geodesic(flat_spec(2), GeodesicState(1, [0, 0], [1, 0]), PathSpec.segment(0, 1))


# -- reparametrisation -----------------------------------------------------------

def test_vanishing_last_velocity():
    with pytest.raises(VanishingUN):
        reparametrized_initial_state(flat_spec(2), GeodesicState(0, [0, 0], [1, 0]))


def test_flat_reparametrisation_is_linear():
    m = flat_spec(3)
    s = GeodesicState(0, [1, 2, 0], [0.5, 1j, 2])
    v0, y0 = reparametrized_initial_state(m, s)
    rec = integrate_along(reparametrized_rhs(m), y0, PathSpec.segment(v0, v0 + 4))
    assert np.allclose(rec.final_state, [1 + 0.25 * 4, 2 + 0.5j * 4, 0.25, 0.5j], atol=1e-12)


# -- covariant derivative ------------------------------------------------------------

def test_velocity_is_parallel():
    m = spec("exp(0.3*u)", "1+0.2*u^2", "exp(-0.4*u)")
    tr = trace_geodesic(m, GeodesicState(0, [0.1, 0.2], [0.6, 0.5]), PathSpec.segment(0, 2j),
                        n_samples=401)
    assert np.max(np.abs(covariant_derivative_along(m, tr, tr.udot))) <= 1e-6


def test_constant_field_in_flat_space():
    m = flat_spec(2)
    tr = trace_geodesic(m, GeodesicState(0, [0, 0], [1, 1]), PathSpec.segment(0, 1), n_samples=21)
    X = np.tile([2 - 1j, 0.5], (21, 1))
    assert np.max(np.abs(covariant_derivative_along(m, tr, X))) < 1e-12


def test_nonuniform_samples_refused():
    m = flat_spec(2)
    tr = trace_geodesic(m, GeodesicState(0, [0, 0], [1, 1]), PathSpec.segment(0, 1))
    if np.ptp(np.diff(tr.t)) > 1e-9:
        with pytest.raises(ValueError):
            covariant_derivative_along(m, tr, tr.udot)
