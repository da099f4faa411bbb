import pytest

from ssprofiles.errors import CriticalRegime, SigmaOutOfRange
from ssprofiles.params import (Parameters, Regime, classify_regime, derive_exponents, parse_config,
                               parameters_from_mapping, require_phase_regime)


def test_exponents_sigma_one():
    ex = derive_exponents(Parameters(3, 0.5, 1))
    assert ex.alpha == pytest.approx(3.0, abs=1e-15)
    assert ex.beta == pytest.approx(2.5, abs=1e-15)
    assert ex.ratio == pytest.approx(5 / 6, abs=1e-15)


def test_exponents_sigma_three():
    ex = derive_exponents(Parameters(3, 0.5, 3))
    assert (ex.alpha, ex.beta) == pytest.approx((1.0, 0.5), abs=1e-15)


@pytest.mark.parametrize("sigma", [0.5, 0.2, 0.0])
def test_sigma_at_or_below_bound(sigma):
    with pytest.raises(SigmaOutOfRange, match="lower bound 0.5"):
        derive_exponents(Parameters(3, 0.5, sigma))


def test_bound_is_strict_without_tolerance():
    derive_exponents(Parameters(3, 0.5, 0.5 + 1e-12))


@pytest.mark.parametrize("m, regime", [(3, Regime.SUPERCRITICAL), (1.5, Regime.CRITICAL),
                                       (1.3, Regime.SUBCRITICAL)])
def test_regimes(m, regime):
    assert classify_regime(Parameters(m, 0.5, 5)) is regime


def test_critical_refused():
    with pytest.raises(CriticalRegime):
        require_phase_regime(Parameters(1.5, 0.5, 5))


@pytest.mark.parametrize("m, p", [(1.0, 0.5), (0.5, 0.5), (3, 0.0), (3, 1.0)])
def test_invalid_parameters(m, p):
    with pytest.raises(ValueError):
        Parameters(m, p, 1)


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# header\nm = 3\np=0.5  # inline\n\nsigma=1\ntol-rel = 1e-9\n")
    values = parse_config(path)
    assert values["tol_rel"] == "1e-9"
    assert parameters_from_mapping(values) == Parameters(3, 0.5, 1)


def test_config_rejects_garbage(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("m 3\n")
    with pytest.raises(ValueError, match="key=value"):
        parse_config(path)
