"""Autonomous phase-space systems for the profile equation.

The profile equation is

    (f^m)'' - alpha f + beta xi f' + xi^sigma f^p = 0,

and every system below is obtained from it by a power-law change of
variables together with a rescaled independent variable eta.  Each system
comes with an analytic Jacobian and with the forward and inverse maps
between profile triples (xi, f, f') and phase coordinates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CriticalRegime, DegenerateInput, RegimeMismatch
from .params import Parameters, Regime, classify_regime, derive_exponents


class SystemId(str, enum.Enum):
    S1 = "S1"  # (X, Y, Z), quadratic, finite points P0, P1, P2
    S2 = "S2"  # (x, y, z=xi), interface critical line
    S3 = "S3"  # (U, Y, V), V monotone in xi
    S4 = "S4"  # (Xb, Yb, Zb), Zb = alpha Z / X
    S5 = "S5"  # subcritical quadratic system without finite points
    S1_CENTER = "S1_center"  # S1 in (X, T, Z) with T = (beta/alpha) Y - X + Z
    INF1 = "Inf1"  # chart X = 1 at infinity of S1, flow direction fixed
    INF2_Q2 = "Inf2_Q2"  # chart Y = +1 at infinity of S1
    INF2_Q3 = "Inf2_Q3"  # chart Y = -1 at infinity of S1
    INF11 = "Inf11"  # chart X = 1 at infinity of S5
    INF21_PLUS = "Inf21_plus"  # chart Y = +1 at infinity of S5
    INF21_MINUS = "Inf21_minus"  # chart Y = -1 at infinity of S5


COORD_NAMES = {
    SystemId.S1: ("X", "Y", "Z"),
    SystemId.S2: ("x", "y", "z"),
    SystemId.S3: ("U", "Y", "V"),
    SystemId.S4: ("Xb", "Yb", "Zb"),
    SystemId.S5: ("X", "Y", "Z"),
    SystemId.S1_CENTER: ("X", "T", "Z"),
    SystemId.INF1: ("y", "z", "w"),
    SystemId.INF2_Q2: ("x", "z", "w"),
    SystemId.INF2_Q3: ("x", "z", "w"),
    SystemId.INF11: ("y", "z", "w"),
    SystemId.INF21_PLUS: ("x", "z", "w"),
    SystemId.INF21_MINUS: ("x", "z", "w"),
}

SUPERCRITICAL_SYSTEMS = frozenset(
    {SystemId.S1, SystemId.S2, SystemId.S3, SystemId.S4, SystemId.S1_CENTER,
     SystemId.INF1, SystemId.INF2_Q2, SystemId.INF2_Q3}
)
SUBCRITICAL_SYSTEMS = frozenset({SystemId.S5, SystemId.INF11, SystemId.INF21_PLUS, SystemId.INF21_MINUS})
INFINITY_CHARTS = frozenset(
    {SystemId.INF1, SystemId.INF2_Q2, SystemId.INF2_Q3, SystemId.INF11,
     SystemId.INF21_PLUS, SystemId.INF21_MINUS}
)
PROFILE_SYSTEMS = (SystemId.S1, SystemId.S2, SystemId.S3, SystemId.S4, SystemId.S5, SystemId.S1_CENTER)

# Orientation of each chart relative to the compactified flow.  A chart with
# sign -1 is the negation of the one with +1 (points with Y < 0 at infinity).
CHART_SIGN = {
    SystemId.INF1: 1.0,
    SystemId.INF2_Q2: 1.0,
    SystemId.INF2_Q3: -1.0,
    SystemId.INF11: 1.0,
    SystemId.INF21_PLUS: 1.0,
    SystemId.INF21_MINUS: -1.0,
}


@dataclass
class PhaseState:
    system: SystemId
    coords: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        self.system = SystemId(self.system)
        self.coords = np.asarray(self.coords, dtype=float).reshape(3)


@dataclass(frozen=True)
class ProfilePoint:
    xi: float
    f: float
    df: float


def check_regime(system: SystemId, params: Parameters) -> Regime:
    system = SystemId(system)
    regime = classify_regime(params)
    if regime is Regime.CRITICAL:
        raise CriticalRegime(f"{system.value} is not available when m + p = 2")
    if system in SUPERCRITICAL_SYSTEMS and regime is not Regime.SUPERCRITICAL:
        raise RegimeMismatch(f"{system.value} requires m + p > 2 (got m + p = {params.m + params.p:g})")
    if system in SUBCRITICAL_SYSTEMS and regime is not Regime.SUBCRITICAL:
        raise RegimeMismatch(f"{system.value} requires m + p < 2 (got m + p = {params.m + params.p:g})")
    return regime


def _spow(x: float, q: float) -> float:
    return math.copysign(abs(x) ** q, x)


@dataclass(frozen=True)
class _Consts:
    m: float
    p: float
    sigma: float
    alpha: float
    beta: float
    ba: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ba", self.beta / self.alpha)


def _consts(params: Parameters) -> _Consts:
    ex = derive_exponents(params)
    return _Consts(params.m, params.p, params.sigma, ex.alpha, ex.beta)


def rhs_function(system: SystemId, params: Parameters) -> Callable[[float, np.ndarray], list]:
    """Return f(eta, u) for the given system, suitable for ODE solvers."""
    system = SystemId(system)
    check_regime(system, params)
    c = _consts(params)
    m, p, s, a, b, ba = c.m, c.p, c.sigma, c.alpha, c.beta, c.ba

    if system is SystemId.S1:
        def rhs(t, u):
            X, Y, Z = u
            return [X * ((m - 1) * Y - 2 * X),
                    -Y * Y - ba * Y + X - X * Y - Z,
                    Z * ((m + p - 2) * Y + (s - 2) * X)]
    elif system is SystemId.S2:
        q = (m - 1) / (m + p - 2)

        def rhs(t, u):
            x, y, z = u
            if z < 0:
                raise DegenerateInput("S2 is only defined for z = xi >= 0")
            xq = _spow(x, q)
            return [m * (m + p - 2) * x * y,
                    -m * y * y - b * y * z + a * xq - z ** s * x,
                    m * xq]
    elif system is SystemId.S3:
        r = (m - 1) / (m + p - 2)
        cu = (m + p - 2) / (m - 1)
        cv = (s * (m - 1) + 2 * (p - 1)) / (m - 1)

        def rhs(t, u):
            U, Y, V = u
            Ur = _spow(U, r)
            return [cu * U * ((m - 1) * Y - 2 * Ur),
                    -Y * Y - ba * Y + Ur * (1 - Y) - U * V,
                    cv * Ur * V]
    elif system is SystemId.S4:
        def rhs(t, u):
            X, Y, Z = u
            return [m * X * ((m - 1) * Y - 2 * X),
                    -m * Y * Y - b * Y + a * X - m * X * Y - X * Z,
                    m * Z * ((p - 1) * Y + s * X)]
    elif system is SystemId.S5:
        def rhs(t, u):
            X, Y, Z = u
            return [X * (0.5 * (m - p) * Y - 0.5 * (s + 2) * X),
                    -0.5 * (m + p) * Y * Y - 0.5 * s * X * Y + X * Z - ba * Z * Y - 1.0,
                    Z * (0.5 * (2 - m - p) * Y + 0.5 * (2 - s) * X)]
    elif system is SystemId.S1_CENTER:
        def rhs(t, u):
            X, T, Z = u
            Y = (T + X - Z) / ba
            dX = X * ((m - 1) * Y - 2 * X)
            dY = -Y * Y - ba * Y + X - X * Y - Z
            dZ = Z * ((m + p - 2) * Y + (s - 2) * X)
            return [dX, ba * dY - dX + dZ, dZ]
    elif system is SystemId.INF1:
        def rhs(t, u):
            y, z, w = u
            return [y + w - m * y * y - ba * y * w - z * w,
                    s * z - (1 - p) * y * z,
                    2 * w - (m - 1) * y * w]
    elif system in (SystemId.INF2_Q2, SystemId.INF2_Q3):
        sg = CHART_SIGN[system]

        def rhs(t, u):
            x, z, w = u
            return [sg * (m * x - x * x + ba * x * w - x * x * w + x * z * w),
                    sg * ((m + p - 1) * z + ba * z * w + (s - 1) * x * z + z * z * w - x * z * w),
                    sg * (w + ba * w * w - x * w * w + x * w + z * w * w)]
    elif system is SystemId.INF11:
        def rhs(t, u):
            y, z, w = u
            return [y + z - w * w - m * y * y - ba * y * z,
                    2 * z - (m - 1) * y * z,
                    0.5 * (s + 2) * w - 0.5 * (m - p) * y * w]
    else:  # INF21 charts
        sg = CHART_SIGN[system]

        def rhs(t, u):
            x, z, w = u
            return [sg * (m * x - x * x + ba * x * z + x * w * w - x * x * z),
                    sg * (z + x * z + ba * z * z + z * w * w - x * z * z),
                    sg * (0.5 * (m + p) * w + ba * z * w + 0.5 * s * x * w + w ** 3 - x * z * w)]
    return rhs


def jacobian_function(system: SystemId, params: Parameters) -> Callable[[np.ndarray], np.ndarray]:
    system = SystemId(system)
    check_regime(system, params)
    c = _consts(params)
    m, p, s, a, b, ba = c.m, c.p, c.sigma, c.alpha, c.beta, c.ba

    if system is SystemId.S1:
        def jac(u):
            X, Y, Z = u
            return np.array([
                [(m - 1) * Y - 4 * X, (m - 1) * X, 0.0],
                [1 - Y, -2 * Y - ba - X, -1.0],
                [(s - 2) * Z, (m + p - 2) * Z, (m + p - 2) * Y + (s - 2) * X]])
    elif system is SystemId.S2:
        q = (m - 1) / (m + p - 2)

        def jac(u):
            x, y, z = u
            dq = q * abs(x) ** (q - 1)
            zs1 = s * z ** (s - 1) if z > 0 else (0.0 if s > 1 else (1.0 if s == 1 else math.inf))
            return np.array([
                [m * (m + p - 2) * y, m * (m + p - 2) * x, 0.0],
                [a * dq - z ** s, -2 * m * y - b * z, -b * y - zs1 * x],
                [m * dq, 0.0, 0.0]])
    elif system is SystemId.S3:
        r = (m - 1) / (m + p - 2)
        cu = (m + p - 2) / (m - 1)
        cv = (s * (m - 1) + 2 * (p - 1)) / (m - 1)

        def jac(u):
            U, Y, V = u
            Ur = _spow(U, r)
            dUr = r * abs(U) ** (r - 1)
            return np.array([
                [(m + p - 2) * Y - 2 * cu * (r + 1) * Ur, (m + p - 2) * U, 0.0],
                [dUr * (1 - Y) - V, -2 * Y - ba - Ur, -U],
                [cv * dUr * V, 0.0, cv * Ur]])
    elif system is SystemId.S4:
        def jac(u):
            X, Y, Z = u
            return np.array([
                [m * ((m - 1) * Y - 4 * X), m * (m - 1) * X, 0.0],
                [a - m * Y - Z, -2 * m * Y - b - m * X, -X],
                [m * s * Z, m * (p - 1) * Z, m * ((p - 1) * Y + s * X)]])
    elif system is SystemId.S5:
        def jac(u):
            X, Y, Z = u
            return np.array([
                [0.5 * (m - p) * Y - (s + 2) * X, 0.5 * (m - p) * X, 0.0],
                [-0.5 * s * Y + Z, -(m + p) * Y - 0.5 * s * X - ba * Z, X - ba * Y],
                [0.5 * (2 - s) * Z, 0.5 * (2 - m - p) * Z, 0.5 * (2 - m - p) * Y + 0.5 * (2 - s) * X]])
    elif system is SystemId.S1_CENTER:
        j1 = jacobian_function(SystemId.S1, params)
        # (X, T, Z) = A (X, Y, Z)
        A = np.array([[1.0, 0.0, 0.0], [-1.0, ba, 1.0], [0.0, 0.0, 1.0]])
        Ainv = np.linalg.inv(A)

        def jac(u):
            X, T, Z = u
            Y = (T + X - Z) / ba
            return A @ j1((X, Y, Z)) @ Ainv
    elif system is SystemId.INF1:
        def jac(u):
            y, z, w = u
            return np.array([
                [1 - 2 * m * y - ba * w, -w, 1 - ba * y - z],
                [-(1 - p) * z, s - (1 - p) * y, 0.0],
                [-(m - 1) * w, 0.0, 2 - (m - 1) * y]])
    elif system in (SystemId.INF2_Q2, SystemId.INF2_Q3):
        sg = CHART_SIGN[system]

        def jac(u):
            x, z, w = u
            return sg * np.array([
                [m - 2 * x + ba * w - 2 * x * w + z * w, x * w, ba * x - x * x + x * z],
                [(s - 1) * z - z * w, (m + p - 1) + ba * w + (s - 1) * x + 2 * z * w - x * w,
                 ba * z + z * z - x * z],
                [w - w * w, w * w, 1 + 2 * ba * w - 2 * x * w + x + 2 * z * w]])
    elif system is SystemId.INF11:
        def jac(u):
            y, z, w = u
            return np.array([
                [1 - 2 * m * y - ba * z, 1 - ba * y, -2 * w],
                [-(m - 1) * z, 2 - (m - 1) * y, 0.0],
                [-0.5 * (m - p) * w, 0.0, 0.5 * (s + 2) - 0.5 * (m - p) * y]])
    else:
        sg = CHART_SIGN[system]

        def jac(u):
            x, z, w = u
            return sg * np.array([
                [m - 2 * x + ba * z + w * w - 2 * x * z, ba * x - x * x, 2 * x * w],
                [z - z * z, 1 + x + 2 * ba * z + w * w - 2 * x * z, 2 * z * w],
                [0.5 * s * w - z * w, ba * w - x * w,
                 0.5 * (m + p) + ba * z + 0.5 * s * x + 3 * w * w - x * z]])
    return jac


def vector_field(state: PhaseState, params: Parameters) -> np.ndarray:
    if state.system in INFINITY_CHARTS:
        raise RegimeMismatch("use poincare_infinity_field for charts at infinity")
    return np.asarray(rhs_function(state.system, params)(state.eta, state.coords), dtype=float)


def poincare_infinity_field(state: PhaseState, params: Parameters) -> np.ndarray:
    if state.system not in INFINITY_CHARTS:
        raise RegimeMismatch(f"{state.system.value} is not a chart at infinity")
    return np.asarray(rhs_function(state.system, params)(state.eta, state.coords), dtype=float)


def jacobian(state: PhaseState, params: Parameters) -> np.ndarray:
    return jacobian_function(state.system, params)(state.coords)


# ---------------------------------------------------------------------------
# Profile <-> phase transforms


def _s1_from_profile(xi, f, df, c: _Consts):
    m, p, s, a = c.m, c.p, c.sigma, c.alpha
    X = (m / a) * xi ** -2 * f ** (m - 1)
    Y = (m / a) * df * f ** (m - 2) / xi
    Z = (m / a ** 2) * xi ** (s - 2) * f ** (m + p - 2)
    return X, Y, Z


def _s1_to_profile(X, Y, Z, c: _Consts):
    m, p, s, a = c.m, c.p, c.sigma, c.alpha
    A = np.array([[-2.0, m - 1], [s - 2, m + p - 2]])
    rhs = np.array([math.log(X) - math.log(m / a), math.log(Z) - math.log(m / a ** 2)])
    lxi, lf = np.linalg.solve(A, rhs)
    xi, f = math.exp(lxi), math.exp(lf)
    return xi, f, Y * a * xi * f ** (2 - m) / m


def _s4_to_profile(X, Y, Z, c: _Consts):
    m, p, s = c.m, c.p, c.sigma
    A = np.array([[-2.0, m - 1], [s, p - 1]])
    lxi, lf = np.linalg.solve(A, np.array([math.log(X), math.log(Z)]))
    xi, f = math.exp(lxi), math.exp(lf)
    return xi, f, Y * xi * f ** (2 - m)


def _s5_to_profile(X, Y, Z, c: _Consts):
    m, p, s, a = c.m, c.p, c.sigma, c.alpha
    rm = math.sqrt(m)
    A = np.array([[-(s + 2) / 2, (m - p) / 2], [(2 - s) / 2, (2 - m - p) / 2]])
    lxi, lf = np.linalg.solve(A, np.array([math.log(X / rm), math.log(Z * rm / a)]))
    xi, f = math.exp(lxi), math.exp(lf)
    return xi, f, Y * xi ** (s / 2) * f ** ((2 + p - m) / 2) / rm


def profile_to_phase(pt: ProfilePoint, system: SystemId, params: Parameters) -> PhaseState:
    system = SystemId(system)
    if system in INFINITY_CHARTS:
        raise RegimeMismatch("charts at infinity carry no direct profile transform")
    check_regime(system, params)
    xi, f, df = float(pt.xi), float(pt.f), float(pt.df)
    if not f > 0:
        raise DegenerateInput(f"transform is singular at f = {f:g}")
    if system is SystemId.S2:
        if xi < 0:
            raise DegenerateInput("xi must be non-negative")
    elif not xi > 0:
        raise DegenerateInput(f"transform is singular at xi = {xi:g}")
    c = _consts(params)
    m, p, s, a = c.m, c.p, c.sigma, c.alpha
    if system is SystemId.S1:
        coords = _s1_from_profile(xi, f, df, c)
    elif system is SystemId.S2:
        coords = (f ** (m + p - 2), f ** (m - 2) * df, xi)
    elif system is SystemId.S3:
        X, Y, Z = _s1_from_profile(xi, f, df, c)
        U = X ** ((m + p - 2) / (m - 1))
        coords = (U, Y, Z / U)
    elif system is SystemId.S4:
        coords = (xi ** -2 * f ** (m - 1), df * f ** (m - 2) / xi, xi ** s * f ** (p - 1))
    elif system is SystemId.S5:
        rm = math.sqrt(m)
        coords = (rm * xi ** (-(s + 2) / 2) * f ** ((m - p) / 2),
                  rm * xi ** (-s / 2) * f ** ((m - p - 2) / 2) * df,
                  (a / rm) * xi ** ((2 - s) / 2) * f ** ((2 - m - p) / 2))
    else:
        X, Y, Z = _s1_from_profile(xi, f, df, c)
        coords = (X, c.ba * Y - X + Z, Z)
    return PhaseState(system, np.array(coords, dtype=float))


def phase_to_profile(state: PhaseState, params: Parameters) -> ProfilePoint:
    system = state.system
    if system in INFINITY_CHARTS:
        raise RegimeMismatch("charts at infinity carry no direct profile transform")
    check_regime(system, params)
    c = _consts(params)
    m, p, a = c.m, c.p, c.alpha
    u0, u1, u2 = (float(v) for v in state.coords)
    if system is SystemId.S1:
        if not (u0 > 0 and u2 > 0):
            raise DegenerateInput("S1 inverse needs X > 0 and Z > 0")
        return ProfilePoint(*_s1_to_profile(u0, u1, u2, c))
    if system is SystemId.S2:
        if not u0 > 0 or u2 < 0:
            raise DegenerateInput("S2 inverse needs x > 0 and z >= 0")
        f = u0 ** (1 / (m + p - 2))
        return ProfilePoint(u2, f, u1 * f ** (2 - m))
    if system is SystemId.S3:
        if not (u0 > 0 and u2 > 0):
            raise DegenerateInput("S3 inverse needs U > 0 and V > 0")
        xi = xi_from_v(u2, params)
        X = u0 ** ((m - 1) / (m + p - 2))
        f = (a * X * xi ** 2 / m) ** (1 / (m - 1))
        return ProfilePoint(xi, f, u1 * a * xi * f ** (2 - m) / m)
    if system is SystemId.S4:
        if not (u0 > 0 and u2 > 0):
            raise DegenerateInput("S4 inverse needs Xb > 0 and Zb > 0")
        return ProfilePoint(*_s4_to_profile(u0, u1, u2, c))
    if system is SystemId.S5:
        if not (u0 > 0 and u2 > 0):
            raise DegenerateInput("S5 inverse needs X > 0 and Z > 0")
        return ProfilePoint(*_s5_to_profile(u0, u1, u2, c))
    if not (u0 > 0 and u2 > 0):
        raise DegenerateInput("S1_center inverse needs X > 0 and Z > 0")
    Y = (u1 + u0 - u2) / c.ba
    return ProfilePoint(*_s1_to_profile(u0, Y, u2, c))


def s1_arrays_to_profile(coords: np.ndarray, params: Parameters) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised inverse of the S1 map for an (n, 3) array of interior states."""
    ex = derive_exponents(params)
    m, p, s, a = params.m, params.p, params.sigma, ex.alpha
    X, Y, Z = np.asarray(coords, dtype=float).T
    if np.any(X <= 0) or np.any(Z <= 0):
        raise DegenerateInput("S1 inverse needs X > 0 and Z > 0")
    A = np.array([[-2.0, m - 1], [s - 2, m + p - 2]])
    rhs = np.vstack([np.log(X) - math.log(m / a), np.log(Z) - math.log(m / a ** 2)])
    lxi, lf = np.linalg.solve(A, rhs)
    xi, f = np.exp(lxi), np.exp(lf)
    return xi, f, Y * a * xi * f ** (2 - m) / m


def v_from_xi(xi: float, params: Parameters) -> float:
    """S3 coordinate V as a function of xi alone."""
    ex = derive_exponents(params)
    m, p, s, a = params.m, params.p, params.sigma, ex.alpha
    den = s * (m - 1) + 2 * (p - 1)
    return (1 / a) * (m / a) ** ((1 - p) / (m - 1)) * xi ** (den / (m - 1))


def xi_from_v(v: float, params: Parameters) -> float:
    ex = derive_exponents(params)
    m, p, s, a = params.m, params.p, params.sigma, ex.alpha
    den = s * (m - 1) + 2 * (p - 1)
    return (v * a * (m / a) ** (-(1 - p) / (m - 1))) ** ((m - 1) / den)


def s4_from_s1(coords, params: Parameters) -> np.ndarray:
    """Map S1 coordinates to S4: Xb = (alpha/m) X, Yb = (alpha/m) Y, Zb = alpha Z / X."""
    ex = derive_exponents(params)
    X, Y, Z = coords
    if X == 0:
        raise DegenerateInput("S4 needs X != 0")
    k = ex.alpha / params.m
    return np.array([k * X, k * Y, ex.alpha * Z / X])


def center_manifold_T(X: float, Z: float, params: Parameters) -> float:
    """Second-order graph T(X, Z) of the centre manifold of P0."""
    ex = derive_exponents(params)
    m, p, a, b = params.m, params.p, ex.alpha, ex.beta
    return (a / b) * (-(m * a - b) / b * X * X + (3 * b + 2 * a + 3) / b * X * Z
                      - a * (m + p - 1) / b * Z * Z)


def center_reduced_field(X: float, Z: float, params: Parameters) -> tuple[float, float]:
    """Quadratic flow on the centre manifold of P0 in the S1 time."""
    ex = derive_exponents(params)
    m, p, a, b = params.m, params.p, ex.alpha, ex.beta
    return (X * (X - (m - 1) * a * Z) / b, Z * (2 * X - (m + p - 2) * a * Z) / b)
