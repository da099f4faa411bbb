import math

import numpy as np
import pytest

import oracles
from ssprofiles.critical_points import (ExpansionKind, Interpretation, analyze_all, cubic_roots,
                                        eigen_closed_form, enumerate_finite, enumerate_infinity,
                                        linearize, local_expansion, manifold_dims, p1_eigenvalues_closed,
                                        p2_e3_denominator, p2_eigenvalues_closed, p2_location,
                                        p2_unstable_direction, residual_order, s2_line_eigenvalues_closed,
                                        ssode_relative_residual)
from ssprofiles.errors import NoProfileBehavior, RegimeMismatch
from ssprofiles.params import Parameters, derive_exponents
from ssprofiles.phase_systems import PhaseState, SystemId, jacobian, vector_field

SUPER = Parameters(3, 0.5, 1)
SUB = Parameters(1.3, 0.5, 4)
GRID = oracles.admissible_grid()


def _by_label(reports):
    return {r.label: r for r in reports}


def test_s1_finite_points():
    pts = _by_label(enumerate_finite(SystemId.S1, SUPER))
    assert np.allclose(pts["P2"].location, [1 / 12, 1 / 12, 0], atol=1e-15)
    assert np.allclose(pts["P0"].location, 0)
    assert np.allclose(pts["P1"].location, [0, -5 / 6, 0], atol=1e-15)
    solved = sorted(oracles.s1_points(3, 0.5, 1))
    assert np.allclose(sorted(tuple(r.location) for r in pts.values()), solved, atol=1e-14)


@pytest.mark.parametrize("m, p, sigma", GRID[::7])
def test_p0_always_present_and_all_points_vanish(m, p, sigma):
    params = Parameters(m, p, sigma)
    reports = enumerate_finite(SystemId.S1, params)
    assert any(r.label == "P0" and np.allclose(r.location, 0) for r in reports)
    for r in reports:
        assert np.max(np.abs(vector_field(PhaseState(SystemId.S1, r.location), params))) < 1e-12


def test_s5_has_no_finite_points_and_seven_at_infinity():
    assert enumerate_finite(SystemId.S5, SUB) == []
    pts = enumerate_infinity(SystemId.S5, SUB)
    assert len(pts) == 7
    for r in analyze_all(SystemId.S5, SUB):
        assert r.residual < 1e-12
        assert sum(r.dims) == 3


def test_s1_infinity_points():
    pts = _by_label(enumerate_infinity(SystemId.S1, SUPER))
    assert np.allclose(pts["Q5"].location, [3 / math.sqrt(10), 1 / math.sqrt(10), 0, 0], atol=1e-15)
    assert pts["Q5"].location[0] == pytest.approx(0.94868, abs=5e-6)
    assert np.allclose(pts["Q4"].location, [0, 0, 1, 0])
    assert np.allclose(pts["Q1"].chart_point, 0)
    assert np.allclose(pts["Q5"].chart_point, [1 / 3, 0, 0])


def test_subcritical_inf11_point():
    pts = _by_label(enumerate_infinity(SystemId.S5, SUB))
    assert np.allclose(pts["E4"].chart_point, [1 / 1.3, 0, 0])


def test_infinity_only_for_compactified_systems():
    with pytest.raises(RegimeMismatch):
        enumerate_infinity(SystemId.S3, SUPER)


@pytest.mark.parametrize("system", [SystemId.S1, SystemId.S1_CENTER, SystemId.S2, SystemId.S3, SystemId.S4])
def test_every_point_is_critical(system):
    for r in enumerate_finite(system, SUPER):
        assert linearize(r, SUPER).residual < 1e-12


def test_spot_eigenvalues():
    pts = _by_label(analyze_all(SystemId.S1, SUPER))
    assert np.allclose(np.sort(pts["P1"].eigenvalues.real), [-5 / 3, -5 / 4, 5 / 6], atol=1e-12)
    p2 = np.sort(pts["P2"].eigenvalues.real)
    assert np.allclose(p2, np.sort(oracles.s1_eigenvalues(3, 0.5, 1, (1 / 12, 1 / 12, 0)).real), atol=1e-12)
    assert p2[2] == pytest.approx(1 / 24, abs=1e-14)
    # the Z = 0 block: lambda^2 + (5/4) lambda + 1/36
    assert p2[0] + p2[1] == pytest.approx(-1.25, abs=1e-12)
    assert p2[0] * p2[1] == pytest.approx(1 / 36, abs=1e-12)


def test_s2_line_eigenvalues():
    pt = enumerate_finite(SystemId.S2, SUPER, samples=(1.0,))[0]
    lam = linearize(pt, SUPER).eigenvalues
    assert np.allclose(np.sort(lam.real), [-3.75, 0, 2.5], atol=1e-12)
    assert np.allclose(np.sort(s2_line_eigenvalues_closed(1.0, SUPER)), [-3.75, 0, 2.5])


@pytest.mark.parametrize("m, p, sigma", GRID)
def test_closed_form_eigenvalues_on_grid(m, p, sigma):
    params = Parameters(m, p, sigma)
    a, b = oracles.exponents(m, p, sigma)
    p1 = oracles.s1_eigenvalues(m, p, sigma, (0, -b / a, 0))
    p2 = oracles.s1_eigenvalues(m, p, sigma, tuple(p2_location(params)))
    assert np.allclose(np.sort_complex(p1_eigenvalues_closed(params).astype(complex)), p1, atol=1e-10)
    assert np.allclose(np.sort_complex(p2_eigenvalues_closed(params)), p2, atol=1e-10)
    pts = _by_label(analyze_all(SystemId.S1, params))
    assert np.allclose(np.sort_complex(pts["P1"].eigenvalues), p1, atol=1e-10)
    assert np.allclose(np.sort_complex(pts["P2"].eigenvalues), p2, atol=1e-10)


def test_cubic_roots_against_numpy():
    rng = np.random.default_rng(3)
    for _ in range(50):
        b, c, d = rng.normal(size=3)
        ours = cubic_roots(b, c, d).astype(complex)
        for r in np.roots([1, b, c, d]):
            assert np.min(np.abs(ours - r)) < 1e-9


def test_eigenvectors_satisfy_definition():
    M = jacobian(PhaseState(SystemId.S1, p2_location(SUPER)), SUPER)
    lam, vecs = eigen_closed_form(M)
    for k in range(3):
        assert np.allclose(M @ vecs[:, k], lam[k] * vecs[:, k], atol=1e-12)


def test_manifold_dims():
    assert manifold_dims([-1, 2, 0]) == (1, 1, 1)
    assert manifold_dims([-1, -2, 3]) == (2, 1, 0)


@pytest.mark.parametrize("m, p, sigma", GRID[::5])
def test_p2_unstable_direction_points_down_left(m, p, sigma):
    params = Parameters(m, p, sigma)
    e3 = p2_unstable_direction(params)
    assert p2_e3_denominator(params) < 0
    assert e3[0] < 0 and e3[1] < 0
    M = jacobian(PhaseState(SystemId.S1, p2_location(params)), params)
    lam3 = np.max(p2_eigenvalues_closed(params).real)
    assert np.allclose(M @ e3, lam3 * e3, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("m, p, sigma", GRID[::5])
def test_p2_stable_manifold_in_invariant_plane(m, p, sigma):
    params = Parameters(m, p, sigma)
    pts = _by_label(analyze_all(SystemId.S1, params))
    r = pts["P2"]
    neg = np.flatnonzero(r.eigenvalues.real < 0)
    assert len(neg) == 2
    assert np.all(np.abs(r.eigenvectors[2, neg]) < 1e-12)


def test_beh_p1_expansion_values():
    # xi0 = sqrt(2 m K / ((m - 1) beta)) = 1 needs K = beta (m - 1) / (2 m) = 5/6
    ex = local_expansion(None, SUPER, {"xi0": 1.0}, kind=ExpansionKind.BEH_P1)
    assert ex.free_constants["K"] == pytest.approx(5 / 6, rel=1e-14)
    f, _ = ex.evaluate(0.99)
    assert f == pytest.approx(math.sqrt(5 / 6 - (5 / 6) * 0.9801), rel=1e-12)
    back = local_expansion(None, SUPER, {"K": 5 / 6}, kind=ExpansionKind.BEH_P1)
    assert back.xi0 == pytest.approx(1.0, rel=1e-14)


def test_beh02_expansion():
    ex = local_expansion(_by_label(enumerate_finite(SystemId.S1, SUPER))["P0"], SUPER, {"K": 1.0})
    assert ex.kind is ExpansionKind.BEH02
    for xi in (0.1, 0.5, 2.0):
        f, df = ex.evaluate(xi)
        assert f == pytest.approx(xi ** 1.2, rel=1e-14)
        assert df == pytest.approx(1.2 * xi ** 0.2, rel=1e-14)
    f0, _ = ex.evaluate(0.0)
    assert f0 == 0.0
    # (f^m)' = m f^{m-1} f' -> 0 at the origin
    assert 3 * ex.evaluate(1e-8)[0] ** 2 * ex.evaluate(1e-8)[1] < 1e-15


def test_q4_carries_no_profile():
    q4 = _by_label(enumerate_infinity(SystemId.S1, SUPER))["Q4"]
    assert q4.interpretation is Interpretation.NO_PROFILE
    with pytest.raises(NoProfileBehavior):
        local_expansion(q4, SUPER)


@pytest.mark.parametrize("kind, consts", [
    (ExpansionKind.BEH02, {"K": 1.0}), (ExpansionKind.BEH_P2, {}), (ExpansionKind.BEH_P1, {"xi0": 1.0}),
    (ExpansionKind.TYPE_II_CONTACT, {"xi0": 2.0}), (ExpansionKind.Q5_ROOT, {"K": 1.0}),
    (ExpansionKind.Q1_CONSTANT, {"a": 1.0})])
@pytest.mark.parametrize("params", [SUPER, Parameters(3, 0.5, 3)])
def test_expansions_solve_the_equation_to_leading_order(kind, consts, params):
    ex = local_expansion(None, params, consts, kind=kind)
    q = residual_order(ex)
    assert q > 0
    side = -1.0 if ex.limit > 0 else 1.0
    res = [ssode_relative_residual(ex, ex.limit + side * d * max(1.0, ex.limit)) for d in (1e-2, 1e-4, 1e-6)]
    assert res[0] > res[1] > res[2]


def test_interpretations_follow_classification():
    pts = _by_label(enumerate_finite(SystemId.S1, SUPER) + enumerate_infinity(SystemId.S1, SUPER))
    assert pts["P0"].interpretation is Interpretation.BEH02_AND_TYPE_II
    assert pts["P1"].interpretation is Interpretation.TYPE_I_INTERFACE
    assert pts["P2"].interpretation is Interpretation.GOOD_ORIGIN_P2
    assert pts["Q3"].interpretation is Interpretation.SIGN_CHANGE


def test_report_serializes():
    d = _by_label(analyze_all(SystemId.S1, SUPER))["P1"].to_dict()
    assert d["dims"] == {"stable": 2, "unstable": 1, "center": 0}
    assert d["interpretation"] == "TypeIInterface"


def test_s1_center_point_matches_s1():
    ex = derive_exponents(SUPER)
    pts = _by_label(enumerate_finite(SystemId.S1_CENTER, SUPER))
    assert np.allclose(pts["P1"].location, [0, -(ex.beta / ex.alpha) ** 2, 0])
