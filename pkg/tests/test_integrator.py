import math

import numpy as np
import pytest

from ssprofiles.critical_points import ExpansionKind, local_expansion, p2_location, v0_for_xi0
from ssprofiles.errors import NoInterface, NonInvertibleOrbit, StepLimitExceeded, WrongInterfaceType
from ssprofiles.integrator import (InterfaceFit, Profile, StopConditions, Target, TerminationKind,
                                   default_s1_stops, fit_interface_exponent, fit_origin_exponent, integrate,
                                   integrate_ssode_direct, orbit_profile_overlap, p0_launch, p2_launch,
                                   reconstruct_profile, rk4_fixed, verify_interface_equation)
from ssprofiles.params import Parameters, derive_exponents
from ssprofiles.phase_systems import ProfilePoint, SystemId, profile_to_phase
from ssprofiles.shooting import barrier_constants, p0_fan_orbit

SIGMA1 = Parameters(3, 0.5, 1)
SIGMA3 = Parameters(3, 0.5, 3)


@pytest.fixture(scope="module")
def fan_orbit():
    return p0_fan_orbit(SIGMA1, 1.0)


@pytest.fixture(scope="module")
def fan_profile(fan_orbit):
    return reconstruct_profile(fan_orbit, SIGMA1)


@pytest.fixture(scope="module")
def p2_orbit_sigma3():
    return integrate(p2_launch(SIGMA3), SystemId.S1, SIGMA3)


def _synthetic(params, xi, f, df):
    return Profile(params=params, exponents=derive_exponents(params), xi=np.asarray(xi), f=np.asarray(f),
                   df=np.asarray(df), origin_kind="Unknown")


def test_fan_orbit_returns_to_p0_from_below(fan_orbit):
    assert fan_orbit.termination.kind is TerminationKind.ENTERED_POINT
    assert fan_orbit.termination.label == "P0"
    end = fan_orbit.endpoint
    assert np.linalg.norm(end) <= 1e-4 * (1 + 1e-9)
    assert end[1] < 0
    assert np.all(np.diff(fan_orbit.eta) > 0)


def test_fan_profile_behaviour(fan_profile):
    slope, _ = fit_origin_exponent(fan_profile)
    assert slope == pytest.approx(1.2, rel=0.02)
    assert fan_profile.good
    assert fan_profile.interface.kind == "TypeII"
    assert fan_profile.interface.exponent == pytest.approx(2.0, rel=0.05)
    assert np.all(fan_profile.f >= 0)


def test_type2_interface_equation(fan_profile):
    lhs, rhs, rel = verify_interface_equation(fan_profile)
    assert rel < 2e-2
    for t in (0.1, 0.9):
        assert verify_interface_equation(fan_profile, t=t)[2] < 2e-2
    with pytest.raises(WrongInterfaceType):
        verify_interface_equation(fan_profile, which="TypeI")


def test_interface_stable_under_tolerance_halving(fan_profile):
    finer = reconstruct_profile(p0_fan_orbit(SIGMA1, 1.0, rtol=5e-10, atol=5e-13), SIGMA1)
    assert finer.interface.xi0 == pytest.approx(fan_profile.interface.xi0, rel=1e-8)


def test_direct_route_agrees_with_phase_route(fan_orbit):
    assert orbit_profile_overlap(fan_orbit, SIGMA1) < 1e-6


def test_s3_monotonicity_in_lower_half(fan_orbit):
    m, p = SIGMA1.m, SIGMA1.p
    X, Y, Z = fan_orbit.coords.T
    keep = (X > 0) & (Z > 0) & (Y <= 0)
    U = X ** ((m + p - 2) / (m - 1))
    V = Z / U
    # consecutive samples that both lie in {Y <= 0}
    pair = keep[1:] & keep[:-1]
    assert pair.sum() > 100
    assert np.all(np.diff(V)[pair] >= -1e-9 * V[1:][pair])
    assert np.all(np.diff(U)[pair] <= 1e-9 * U[1:][pair])


def test_p2_orbit_sigma3_enters_p0(p2_orbit_sigma3):
    t = p2_orbit_sigma3.termination
    assert (t.kind, t.label) == (TerminationKind.ENTERED_POINT, "P0")
    assert p2_orbit_sigma3.endpoint[1] < 0


def test_p2_orbit_sigma35_escapes_to_q3():
    params = Parameters(3, 0.5, 3.5)
    orbit = integrate(p2_launch(params), SystemId.S1, params)
    assert orbit.termination.kind is TerminationKind.ESCAPED
    assert orbit.termination.label == "Q3"
    assert orbit.endpoint[1] < -1e3 * (1 - 1e-9)


@pytest.mark.parametrize("sigma", [2.0, 3.0])
def test_monotone_components_along_p2_orbit(sigma):
    params = Parameters(3, 0.5, sigma)
    X, Y, _ = integrate(p2_launch(params), SystemId.S1, params).coords.T
    assert np.all(np.diff(X) <= 1e-9)
    up = Y[:-1] >= 0
    assert np.all(np.diff(Y)[up] <= 1e-9)


def test_p2_profile_sigma3(p2_orbit_sigma3):
    prof = reconstruct_profile(p2_orbit_sigma3, SIGMA3)
    assert prof.origin_kind == "P2property"
    assert prof.good
    assert prof.interface.kind == "TypeII"
    assert verify_interface_equation(prof)[2] < 2e-2


def test_heteroclinic_in_invariant_plane():
    launch = p0_launch(1e-6, 1.0, SIGMA3) * np.array([1.0, 1.0, 0.0])
    stop = StopConditions(targets=[Target("P2", p2_location(SIGMA3), 1e-6)], eta_max=1e6)
    orbit = integrate(launch, SystemId.S1, SIGMA3, stop)
    assert orbit.termination.label == "P2"
    assert orbit.termination.distance <= 1e-6 * (1 + 1e-9)
    assert np.max(np.abs(orbit.coords[:, 2])) == 0.0
    with pytest.raises(NonInvertibleOrbit):
        reconstruct_profile(orbit, SIGMA3)


def test_invariant_plane_x0_preserved():
    orbit = integrate([0.0, -0.2, 0.05], SystemId.S1, SIGMA1, StopConditions(eta_max=50.0))
    assert np.max(np.abs(orbit.coords[:, 0])) < 1e-10


def test_orbit_into_p1_gives_type1_interface():
    # a point on a solution started at a Type I interface, mapped into S1
    exp = local_expansion(None, SIGMA1, {"xi0": 1.0}, kind=ExpansionKind.BEH_P1)
    back = integrate_ssode_direct(exp, SIGMA1, direction=-1)
    k = len(back.xi) // 3
    start = profile_to_phase(ProfilePoint(back.xi[k], back.f[k], back.df[k]), SystemId.S1, SIGMA1).coords
    orbit = integrate(start, SystemId.S1, SIGMA1)
    assert orbit.termination.label == "P1"
    prof = reconstruct_profile(orbit, SIGMA1)
    assert prof.interface.kind == "TypeI"
    assert prof.interface.xi0 == pytest.approx(1.0, rel=1e-3)


def test_step_limit():
    stop = default_s1_stops(SIGMA1)
    stop.eta_max, stop.raise_on_step_limit = 1.0, True
    with pytest.raises(StepLimitExceeded):
        integrate(p0_launch(1e-4, 1.0, SIGMA1), SystemId.S1, SIGMA1, stop)
    stop.raise_on_step_limit = False
    orbit = integrate(p0_launch(1e-4, 1.0, SIGMA1), SystemId.S1, SIGMA1, stop)
    assert orbit.termination.kind is TerminationKind.STEP_LIMIT


def test_rk4_matches_adaptive():
    u0 = [0.05, 0.02, 0.03]
    fixed = rk4_fixed(SystemId.S1, SIGMA1, u0, 1e-3, 1000)
    orbit = integrate(u0, SystemId.S1, SIGMA1, StopConditions(eta_max=1.0), rtol=1e-12, atol=1e-14)
    assert np.allclose(fixed[-1], orbit.endpoint, rtol=1e-9, atol=1e-12)


def test_fit_synthetic_type1():
    xi = 1 - np.geomspace(1e-1, 1e-7, 200)
    f = (1 - xi) ** 0.5
    fit = fit_interface_exponent(_synthetic(SIGMA1, xi, f, -0.5 / f), xi0=1.0)
    assert fit.kind == "TypeI" and fit.exponent == pytest.approx(0.5, rel=1e-6)


def test_fit_synthetic_type2():
    exp = local_expansion(None, SIGMA1, {"C": 0.5}, kind=ExpansionKind.TYPE_II_CONTACT)
    assert exp.limit == pytest.approx(1.0)
    xi = 1 - np.geomspace(1e-1, 1e-7, 200)
    f, df = exp.evaluate(xi)
    # the bracket carries xi^e with e = 1 / beta = 0.4, which solves the reduced balance exactly
    assert np.allclose(f, xi ** 1.2 * (0.5 - 0.5 * xi ** 0.4) ** 2, rtol=1e-9)
    fit = fit_interface_exponent(_synthetic(SIGMA1, xi, f, df))
    assert fit.kind == "TypeII" and fit.exponent == pytest.approx(2.0, rel=0.05)
    assert fit.xi0 == pytest.approx(1.0, rel=1e-6)


def test_fit_without_zero():
    xi = np.linspace(0, 3, 50)
    f = 2 - 0.1 * xi
    with pytest.raises(NoInterface):
        fit_interface_exponent(_synthetic(SIGMA1, xi, f, np.full_like(xi, -0.1)))


def test_direct_forward_from_origin_expansion():
    exp = local_expansion(None, SIGMA1, {"K": 1.0}, kind=ExpansionKind.BEH02)
    prof = integrate_ssode_direct(exp, SIGMA1, direction=1, delta=1e-3)
    changes = np.count_nonzero(np.diff(np.sign(prof.df)) != 0)
    assert changes == 1
    assert prof.origin_kind == "P2property"
    assert prof.interface.kind == "TypeII"
    assert prof.good


def test_direct_backward_small_interface():
    exp = local_expansion(None, SIGMA1, {"xi0": 0.5}, kind=ExpansionKind.BEH_P1)
    assert v0_for_xi0(0.5, SIGMA1) == pytest.approx(0.2357, abs=1e-4)
    assert v0_for_xi0(0.5, SIGMA1) < barrier_constants(SIGMA1)["vbar0"]
    prof = integrate_ssode_direct(exp, SIGMA1, direction=-1)
    assert prof.xi[0] == pytest.approx(0.0, abs=1e-12)
    assert prof.f[0] > 0 and prof.df[0] < 0
    assert prof.origin_kind == "NegativeSlope"
    assert prof.interface.kind == "TypeI"


def test_interface_fit_is_plain_data():
    fit = InterfaceFit(xi0=1.0, kind="TypeI", exponent=0.5, r2=1.0)
    assert fit.kind == "TypeI" and math.isclose(fit.xi0, 1.0)
