"""Property tests over random admissible parameters and states."""

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracles
from ssprofiles.critical_points import (analyze_all, enumerate_finite, numeric_jacobian, p2_e3_denominator,
                                        p2_unstable_direction)
from ssprofiles.date_classifier import center_flow_system, closed_form_invariants, invariants, sign_pattern
from ssprofiles.params import Parameters, Regime, derive_exponents
from ssprofiles.phase_systems import (INFINITY_CHARTS, PROFILE_SYSTEMS, SUBCRITICAL_SYSTEMS, PhaseState,
                                      ProfilePoint, SystemId, jacobian_function, phase_to_profile,
                                      profile_to_phase, rhs_function, v_from_xi, vector_field, xi_from_v)
from ssprofiles.shooting import barrier_constants, u_p2_over_k_closed

finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def supercritical(draw):
    m = draw(st.floats(1.6, 6.0, **finite))
    p = draw(st.floats(max(0.05, 2.05 - m), 0.95, **finite))
    lower = 2 * (1 - p) / (m - 1)
    sigma = draw(st.floats(lower + 0.05, lower + 6.0, **finite))
    return Parameters(m, p, sigma)


@st.composite
def subcritical(draw):
    m = draw(st.floats(1.05, 1.9, **finite))
    p = draw(st.floats(0.05, min(0.95, 1.95 - m), **finite))
    lower = 2 * (1 - p) / (m - 1)
    sigma = draw(st.floats(lower + 0.05, lower + 6.0, **finite))
    return Parameters(m, p, sigma)


profile_points = st.builds(ProfilePoint, st.floats(0.05, 20.0, **finite), st.floats(0.05, 20.0, **finite),
                           st.floats(-20.0, 20.0, **finite))
states = st.lists(st.floats(-2.0, 2.0, **finite), min_size=3, max_size=3)


@given(supercritical())
def test_exponents_positive(params):
    ex = derive_exponents(params)
    assert ex.alpha > 0 and ex.beta > 0
    assert ex.ratio == pytest.approx((params.m - params.p) / (params.sigma + 2), rel=1e-12)


@given(st.one_of(supercritical(), subcritical()), profile_points, st.sampled_from(PROFILE_SYSTEMS))
def test_transform_round_trip(params, pt, system):
    sub = params.regime is Regime.SUBCRITICAL
    assume((system in SUBCRITICAL_SYSTEMS) == sub)
    back = phase_to_profile(profile_to_phase(pt, system, params), params)
    assert np.allclose([back.xi, back.f, back.df], [pt.xi, pt.f, pt.df], rtol=1e-10, atol=1e-10)


@given(st.one_of(supercritical(), subcritical()), states, st.sampled_from(sorted(SystemId, key=lambda s: s.value)))
def test_jacobian_matches_finite_differences(params, u, system):
    sub = params.regime is Regime.SUBCRITICAL
    assume((system in SUBCRITICAL_SYSTEMS) == sub)
    u = np.array(u)
    if system in (SystemId.S2, SystemId.S3):
        u[0] = abs(u[0]) + 0.1  # fractional powers of the first coordinate
    if system is SystemId.S2:
        u[2] = abs(u[2]) + 0.1
    M = jacobian_function(system, params)(u)
    num = numeric_jacobian(rhs_function(system, params), u, h=1e-6)
    assert np.allclose(M, num, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(M).max()))


@given(supercritical(), st.floats(-3, 3, **finite), st.floats(-3, 3, **finite))
def test_invariant_planes_of_s1(params, a, b):
    assert vector_field(PhaseState(SystemId.S1, (0.0, a, b)), params)[0] == 0.0
    assert vector_field(PhaseState(SystemId.S1, (a, b, 0.0)), params)[2] == 0.0


@given(supercritical(), st.floats(1e-3, 5, **finite), st.floats(-5, 0, **finite), st.floats(1e-3, 5, **finite))
def test_s3_monotone_in_lower_half(params, U, Y, V):
    dU, _, dV = vector_field(PhaseState(SystemId.S3, (U, Y, V)), params)
    assert dV >= 0
    assert dU <= 0


@given(supercritical())
def test_finite_points_are_zeros(params):
    for system in (SystemId.S1, SystemId.S1_CENTER, SystemId.S3, SystemId.S4):
        for r in enumerate_finite(system, params):
            scale = max(1.0, np.abs(r.location).max())
            assert np.abs(vector_field(PhaseState(system, r.location), params)).max() < 1e-12 * scale ** 2


@given(supercritical())
def test_dims_sum_to_three(params):
    for r in analyze_all(SystemId.S1, params):
        assert sum(r.dims) == 3


@given(supercritical())
def test_p2_outgoing_direction(params):
    assert p2_e3_denominator(params) < 0
    e3 = p2_unstable_direction(params)
    assert e3[0] < 0 and e3[1] < 0


@given(st.one_of(supercritical(), subcritical()))
def test_invariants_closed_form(params):
    inv = invariants(center_flow_system(params))
    ref = oracles.loop_invariants(oracles.center_tensor(params.m, params.p, params.sigma))
    closed = closed_form_invariants(params)
    for name in ("H", "D", "F", "K2", "K3"):
        tol = 1e-12 * max(1.0, abs(ref[name]))
        assert abs(getattr(inv, name) - ref[name]) <= tol
        assert abs(closed[name] - ref[name]) <= tol
    if params.regime is Regime.SUPERCRITICAL:
        assert sign_pattern(inv) == "---"
    else:
        assert inv.K2 > 0


@given(supercritical(), st.lists(st.floats(-3, 3, **finite), min_size=4, max_size=4))
def test_invariant_signs_under_linear_change(params, entries):
    A = np.array(entries).reshape(2, 2)
    assume(abs(np.linalg.det(A)) > 0.1)
    base = center_flow_system(params)
    assert sign_pattern(invariants(base.transformed(A))) == sign_pattern(invariants(base))


@given(supercritical(), st.floats(1e-3, 1e4, **finite))
def test_v_xi_round_trip(params, xi):
    assert xi_from_v(v_from_xi(xi, params), params) == pytest.approx(xi, rel=1e-12)
    assert v_from_xi(xi * 1.01, params) > v_from_xi(xi, params)


@given(supercritical())
def test_p2_over_k_identity(params):
    b = barrier_constants(params)
    assert b["U_P2_over_k"] == pytest.approx(u_p2_over_k_closed(params), rel=1e-12, abs=1e-12)


def test_chart_systems_are_covered():
    assert INFINITY_CHARTS < set(SystemId)
