"""Problem parameters, self-similarity exponents and regime gates."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

from .errors import CriticalRegime, SigmaOutOfRange


class Regime(str, enum.Enum):
    SUPERCRITICAL = "Supercritical"
    CRITICAL = "Critical"
    SUBCRITICAL = "Subcritical"


@dataclass(frozen=True)
class Parameters:
    """Exponents of u_t = (u^m)_xx + |x|^sigma u^p."""

    m: float
    p: float
    sigma: float

    def __post_init__(self):
        if not self.m > 1:
            raise ValueError(f"m must exceed 1, got {self.m}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")

    @property
    def sigma_lower(self) -> float:
        return 2.0 * (1.0 - self.p) / (self.m - 1.0)

    @property
    def regime(self) -> Regime:
        return classify_regime(self)

    def with_sigma(self, sigma: float) -> "Parameters":
        return Parameters(self.m, self.p, sigma)


@dataclass(frozen=True)
class Exponents:
    alpha: float
    beta: float
    T: float = 1.0

    @property
    def ratio(self) -> float:
        """beta / alpha, the slope of the interface critical line."""
        return self.beta / self.alpha


def classify_regime(params: Parameters) -> Regime:
    s = params.m + params.p
    if s > 2.0:
        return Regime.SUPERCRITICAL
    if s < 2.0:
        return Regime.SUBCRITICAL
    return Regime.CRITICAL


def derive_exponents(params: Parameters, T: float = 1.0) -> Exponents:
    """Blow-up rate alpha and spreading rate beta.

    The comparison with the lower bound of sigma is strict and uses no
    tolerance.
    """
    m, p, sigma = params.m, params.p, params.sigma
    if not sigma > params.sigma_lower:
        raise SigmaOutOfRange(
            f"sigma at or below lower bound {params.sigma_lower:g} (got sigma={sigma:g})"
        )
    den = sigma * (m - 1.0) + 2.0 * (p - 1.0)
    return Exponents(alpha=(sigma + 2.0) / den, beta=(m - p) / den, T=T)


def require_phase_regime(params: Parameters) -> Regime:
    """Refuse the critical case m + p = 2 for phase-space work."""
    regime = classify_regime(params)
    if regime is Regime.CRITICAL:
        raise CriticalRegime("m + p = 2 is not supported by the phase-space analysis")
    return regime


def parse_config(path: str | Path) -> dict[str, float]:
    """Read plain key=value lines; blank lines and '#' comments are skipped."""
    out: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parameters_from_mapping(values: dict) -> Parameters:
    try:
        return Parameters(float(values["m"]), float(values["p"]), float(values["sigma"]))
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc.args[0]!r}") from None


