"""Critical points, linearizations and local profile expansions."""

from __future__ import annotations

import cmath
import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NoProfileBehavior, NotACriticalPoint, RegimeMismatch
from .params import Parameters, derive_exponents
from .phase_systems import (
    INFINITY_CHARTS,
    SystemId,
    check_regime,
    jacobian_function,
    rhs_function,
    v_from_xi,
)


class Interpretation(str, enum.Enum):
    BEH02_AND_TYPE_II = "Beh02+TypeIIInterface"
    TYPE_I_INTERFACE = "TypeIInterface"
    TYPE_II_INTERFACE = "TypeIIInterface"
    GOOD_ORIGIN_P2 = "GoodOriginP2"
    ORIGIN_POSITIVE = "OriginPositive"
    SIGN_CHANGE = "SignChange"
    SIGN_CHANGE_AT_ZERO = "SignChangeAtZero"
    NO_PROFILE = "NoProfile"


class ExpansionKind(str, enum.Enum):
    BEH02 = "Beh02"
    BEH_P2 = "BehP2"
    BEH_P1 = "BehP1"
    TYPE_II_CONTACT = "TypeIIContact"
    Q5_ROOT = "Q5Root"
    Q1_CONSTANT = "Q1Constant"


@dataclass
class CriticalPointReport:
    system: SystemId
    label: str
    location: np.ndarray
    interpretation: Interpretation
    chart: SystemId | None = None
    chart_point: np.ndarray | None = None
    matrix: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    dims: tuple[int, int, int] | None = None
    residual: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def at_infinity(self) -> bool:
        return len(self.location) == 4

    def to_dict(self) -> dict:
        out = {
            "system": self.system.value,
            "label": self.label,
            "location": [float(v) for v in self.location],
            "interpretation": self.interpretation.value,
        }
        if self.chart is not None:
            out["chart"] = self.chart.value
            out["chart_point"] = [float(v) for v in self.chart_point]
        if self.matrix is not None:
            out["matrix"] = [[float(v) for v in row] for row in self.matrix]
        if self.eigenvalues is not None:
            out["eigenvalues"] = [[float(l.real), float(l.imag)] for l in self.eigenvalues]
            out["eigenvectors"] = [[[float(v.real), float(v.imag)] for v in vec]
                                   for vec in self.eigenvectors.T]
            out["dims"] = {"stable": self.dims[0], "unstable": self.dims[1], "center": self.dims[2]}
        if self.residual is not None:
            out["residual"] = float(self.residual)
        if self.notes:
            out["notes"] = self.notes
        return out


def reports_to_json(reports: Iterable[CriticalPointReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


# ---------------------------------------------------------------------------
# Eigenvalues from the characteristic polynomial


def cubic_roots(b: float, c: float, d: float) -> np.ndarray:
    """Roots of x^3 + b x^2 + c x + d by the closed-form cubic formula.

    Each root is refined by two Newton steps on the same polynomial, which
    leaves simple roots at machine precision.
    """
    d0 = b * b - 3 * c
    d1 = 2 * b ** 3 - 9 * b * c + 27 * d
    scale = max(1.0, abs(b), abs(c) ** 0.5, abs(d) ** (1 / 3))
    if abs(d0) <= 1e-14 * scale ** 2 and abs(d1) <= 1e-14 * scale ** 3:
        return np.array([-b / 3] * 3, dtype=complex)
    disc = cmath.sqrt(d1 * d1 - 4 * d0 ** 3)
    inner = (d1 + disc) / 2 if abs(d1 + disc) >= abs(d1 - disc) else (d1 - disc) / 2
    C = inner ** (1 / 3) if inner != 0 else 0j
    roots = []
    for k in range(3):
        ck = C * cmath.exp(2j * math.pi * k / 3)
        roots.append(-(b + ck + (d0 / ck if ck != 0 else 0)) / 3)

    def poly(x):
        return ((x + b) * x + c) * x + d

    def dpoly(x):
        return (3 * x + 2 * b) * x + c

    out = []
    for r in roots:
        for _ in range(2):
            dp = dpoly(r)
            if abs(dp) < 1e-14 * scale ** 2:
                break
            r = r - poly(r) / dp
        if abs(r.imag) <= 1e-12 * max(1.0, abs(r)):
            r = complex(r.real, 0.0)
        out.append(r)
    out.sort(key=lambda z: (z.real, z.imag))
    return np.array(out, dtype=complex)


def eigen_closed_form(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    M = np.asarray(M, dtype=float)
    tr = np.trace(M)
    c2 = 0.5 * (tr * tr - np.trace(M @ M))
    det = np.linalg.det(M)
    lam = cubic_roots(-tr, c2, -det)
    vecs = np.empty((3, 3), dtype=complex)
    for i, l in enumerate(lam):
        _, _, vh = np.linalg.svd(M - l * np.eye(3))
        v = vh[-1].conj()
        k = int(np.argmax(np.abs(v)))
        v = v / v[k] * abs(v[k])
        vecs[:, i] = v / np.linalg.norm(v)
    return lam, vecs


def manifold_dims(eigenvalues: Sequence[complex], tol: float = 1e-12) -> tuple[int, int, int]:
    scale = max(1.0, max(abs(l) for l in eigenvalues))
    stable = sum(1 for l in eigenvalues if l.real < -tol * scale)
    unstable = sum(1 for l in eigenvalues if l.real > tol * scale)
    return stable, unstable, len(eigenvalues) - stable - unstable


# ---------------------------------------------------------------------------
# Poincaré compactification


def _homogeneous_parts(rhs: Callable, x: np.ndarray):
    """Split a quadratic polynomial field into degree 0, 1, 2 parts at x."""
    zero = np.asarray(rhs(0.0, np.zeros(3)), dtype=float)
    plus = np.asarray(rhs(0.0, x), dtype=float)
    minus = np.asarray(rhs(0.0, -x), dtype=float)
    return zero, 0.5 * (plus - minus), 0.5 * (plus + minus) - zero


def poincare_residual(system: SystemId, direction: Sequence[float], params: Parameters) -> float:
    """Residual of the equations for critical points on the equator of the sphere."""
    rhs = rhs_function(system, params)
    d = np.asarray(direction, dtype=float)[:3]
    _, _, quad = _homogeneous_parts(rhs, d)
    X, Y, Z = d
    P, Q, R = quad
    return float(max(abs(X * Q - Y * P), abs(X * R - Z * P), abs(Y * R - Z * Q)))


def generic_chart_rhs(system: SystemId, k: int, sign: float, params: Parameters) -> Callable:
    """Chart of the Poincaré sphere around the axis k of a quadratic system.

    Coordinates are (u_j = X_j / X_k for j != k, w = 1 / X_k), the time is
    rescaled by |X_k|, and sign = -1 selects the antipodal hemisphere.
    """
    rhs = rhs_function(system, params)
    others = [j for j in range(3) if j != k]

    def chart(t, u):
        u1, u2, w = u
        e = np.empty(3)
        e[k] = sign
        e[others[0]], e[others[1]] = sign * u1, sign * u2
        c0, c1, c2 = _homogeneous_parts(rhs, e)
        Pt = c2 + w * c1 + w * w * c0
        return [sign * (Pt[others[0]] - u1 * Pt[k]),
                sign * (Pt[others[1]] - u2 * Pt[k]),
                -sign * w * Pt[k]]

    return chart


def numeric_jacobian(rhs: Callable, u: np.ndarray, h: float = 1e-6) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    cols = []
    for e in np.eye(3):
        cols.append((np.asarray(rhs(0.0, u + h * e)) - np.asarray(rhs(0.0, u - h * e))) / (2 * h))
    return np.array(cols).T


# ---------------------------------------------------------------------------
# Enumeration


def _report(system, label, location, interp, **kw) -> CriticalPointReport:
    return CriticalPointReport(system=SystemId(system), label=label,
                               location=np.asarray(location, dtype=float),
                               interpretation=Interpretation(interp), **kw)


def p2_location(params: Parameters) -> np.ndarray:
    a = derive_exponents(params).alpha
    m = params.m
    return np.array([(m - 1) / (2 * (m + 1) * a), 1 / ((m + 1) * a), 0.0])


def enumerate_finite(system: SystemId, params: Parameters,
                     samples: Sequence[float] = (0.5, 1.0, 2.0)) -> list[CriticalPointReport]:
    """Finite critical points.

    For S2 the critical line P(xi0) is sampled at the given xi0 values and for
    S3 the line P(v0) at the given v0 values.
    """
    system = SystemId(system)
    if system in INFINITY_CHARTS:
        raise RegimeMismatch("charts at infinity are handled by enumerate_infinity")
    check_regime(system, params)
    ex = derive_exponents(params)
    m, a, b = params.m, ex.alpha, ex.beta
    I = Interpretation
    if system is SystemId.S1:
        return [_report(system, "P0", (0, 0, 0), I.BEH02_AND_TYPE_II),
                _report(system, "P1", (0, -b / a, 0), I.TYPE_I_INTERFACE),
                _report(system, "P2", p2_location(params), I.GOOD_ORIGIN_P2)]
    if system is SystemId.S1_CENTER:
        X2, Y2, _ = p2_location(params)
        return [_report(system, "P0", (0, 0, 0), I.BEH02_AND_TYPE_II),
                _report(system, "P1", (0, -b * b / a ** 2, 0), I.TYPE_I_INTERFACE),
                _report(system, "P2", (X2, (b / a) * Y2 - X2, 0), I.GOOD_ORIGIN_P2)]
    if system is SystemId.S2:
        return [_report(system, f"P(xi0={x:g})", (0, -b * x / m, x), I.TYPE_I_INTERFACE,
                        notes={"xi0": float(x)}) for x in samples]
    if system is SystemId.S3:
        return [_report(system, f"P(v0={v:g})", (0, -b / a, v), I.TYPE_I_INTERFACE,
                        notes={"v0": float(v)}) for v in samples]
    if system is SystemId.S4:
        X2, Y2, _ = p2_location(params)
        return [_report(system, "P0", (0, 0, 0), I.BEH02_AND_TYPE_II),
                _report(system, "P1", (0, -b / m, 0), I.TYPE_I_INTERFACE),
                _report(system, "P2", (a * X2 / m, a * Y2 / m, 0), I.GOOD_ORIGIN_P2)]
    return []  # S5 has no finite critical points


def enumerate_infinity(system: SystemId, params: Parameters) -> list[CriticalPointReport]:
    """Critical points on the equator of the Poincaré sphere, as (Xb, Yb, Zb, 0)."""
    system = SystemId(system)
    check_regime(system, params)
    I = Interpretation
    m = params.m
    if system is SystemId.S1:
        r = math.sqrt(1 + m * m)
        return [
            _report(system, "Q1", (1, 0, 0, 0), I.ORIGIN_POSITIVE,
                    chart=SystemId.INF1, chart_point=np.zeros(3)),
            _report(system, "Q2", (0, 1, 0, 0), I.SIGN_CHANGE,
                    chart=SystemId.INF2_Q2, chart_point=np.zeros(3)),
            _report(system, "Q3", (0, -1, 0, 0), I.SIGN_CHANGE,
                    chart=SystemId.INF2_Q3, chart_point=np.zeros(3)),
            _report(system, "Q4", (0, 0, 1, 0), I.NO_PROFILE),
            _report(system, "Q5", (m / r, 1 / r, 0, 0), I.SIGN_CHANGE_AT_ZERO,
                    chart=SystemId.INF1, chart_point=np.array([1 / m, 0, 0])),
        ]
    if system is SystemId.S5:
        ex = derive_exponents(params)
        a, b = ex.alpha, ex.beta
        r = math.sqrt(1 + m * m)
        rab = math.hypot(a, b)
        L = math.sqrt(1 + (m + 1) ** 2 * a * a + (m - 1) ** 2 / 4)
        return [
            _report(system, "E1", (1, 0, 0, 0), I.ORIGIN_POSITIVE,
                    chart=SystemId.INF11, chart_point=np.zeros(3),
                    notes={"counterpart": "Q1 and P0"}),
            _report(system, "E2+", (0, 1, 0, 0), I.SIGN_CHANGE,
                    chart=SystemId.INF21_PLUS, chart_point=np.zeros(3),
                    notes={"counterpart": "Q2"}),
            _report(system, "E2-", (0, -1, 0, 0), I.SIGN_CHANGE,
                    chart=SystemId.INF21_MINUS, chart_point=np.zeros(3),
                    notes={"counterpart": "Q3"}),
            _report(system, "E3", (0, 0, 1, 0), I.NO_PROFILE, notes={"counterpart": "Q4"}),
            _report(system, "E4", (m / r, 1 / r, 0, 0), I.SIGN_CHANGE_AT_ZERO,
                    chart=SystemId.INF11, chart_point=np.array([1 / m, 0, 0]),
                    notes={"counterpart": "Q5"}),
            _report(system, "E5", (0, -b / rab, a / rab, 0), I.NO_PROFILE,
                    chart=SystemId.INF21_MINUS, chart_point=np.array([0, -a / b, 0]),
                    notes={"counterpart": "P1"}),
            _report(system, "E6", ((m - 1) / (2 * L), 1 / L, a * (m + 1) / L, 0), I.NO_PROFILE,
                    chart=SystemId.INF21_PLUS,
                    chart_point=np.array([(m - 1) / 2, a * (m + 1), 0]),
                    notes={"counterpart": "P2"}),
        ]
    raise RegimeMismatch(f"no compactification is defined for {system.value}")


# ---------------------------------------------------------------------------
# Linearization


def _chart_for_direction(direction: np.ndarray):
    k = int(np.argmax(np.abs(direction[:3])))
    sign = 1.0 if direction[k] > 0 else -1.0
    others = [j for j in range(3) if j != k]
    u = np.array([direction[others[0]] / direction[k], direction[others[1]] / direction[k], 0.0])
    return k, sign, u


def linearize(point: CriticalPointReport, params: Parameters, tol: float = 1e-10) -> CriticalPointReport:
    """Fill in matrix, eigen-data and manifold dimensions of a critical point."""
    if not point.at_infinity:
        rhs = rhs_function(point.system, params)
        jac = jacobian_function(point.system, params)
        u = point.location
        res = float(np.max(np.abs(rhs(0.0, u))))
        M = jac(u)
    elif point.chart is not None:
        rhs = rhs_function(point.chart, params)
        u = point.chart_point
        res = max(float(np.max(np.abs(rhs(0.0, u)))),
                  poincare_residual(point.system, point.location, params))
        M = jacobian_function(point.chart, params)(u)
    else:
        k, sign, u = _chart_for_direction(point.location)
        rhs = generic_chart_rhs(point.system, k, sign, params)
        res = max(float(np.max(np.abs(rhs(0.0, u)))),
                  poincare_residual(point.system, point.location, params))
        M = numeric_jacobian(rhs, u)
        M[np.abs(M) < 1e-9] = 0.0
    if res > tol:
        raise NotACriticalPoint(f"{point.label}: field residual {res:.3e} exceeds {tol:g}")
    lam, vecs = eigen_closed_form(M)
    return replace(point, matrix=M, eigenvalues=lam, eigenvectors=vecs,
                   dims=manifold_dims(lam), residual=res)


def analyze_all(system: SystemId, params: Parameters) -> list[CriticalPointReport]:
    return [linearize(pt, params)
            for pt in enumerate_finite(system, params) + enumerate_infinity(system, params)]


# Closed forms used as oracles and by the shooting code


def p1_eigenvalues_closed(params: Parameters) -> np.ndarray:
    ex = derive_exponents(params)
    m, p, ba = params.m, params.p, ex.beta / ex.alpha
    return np.array([-ba * (m - 1), ba, -(m + p - 2) * ba])


def p2_eigenvalues_closed(params: Parameters) -> np.ndarray:
    """Eigenvalues at P2 from the trace and determinant of the Z = 0 block.

    The block trace carries a (m + 3) term coming from the Y-Y entry.
    """
    ex = derive_exponents(params)
    m, p, s, a, b = params.m, params.p, params.sigma, ex.alpha, ex.beta
    tr = -(2 * (m - 1) + (m + 3) + 2 * (m + 1) * b) / (2 * (m + 1) * a)
    prod = (m - 1) / (2 * (m + 1) * a * a)
    disc = cmath.sqrt(tr * tr - 4 * prod)
    l3 = (s * (m - 1) + 2 * (p - 1)) / (2 * (m + 1) * a)
    return np.array([(tr - disc) / 2, (tr + disc) / 2, l3], dtype=complex)


def p2_e3_denominator(params: Parameters) -> float:
    m, p, s = params.m, params.p, params.sigma
    return (-(m - 1) ** 2 * s * s - (m - 1) * (3 * m + 4 * p - 3) * s
            - 4 * m * m - 4 * m * p - 4 * p * p + 4 * m + 8 * p)


def p2_unstable_direction(params: Parameters) -> np.ndarray:
    """Eigenvector of the positive eigenvalue at P2, scaled to Z-component 1."""
    ex = derive_exponents(params)
    m, p, s, a = params.m, params.p, params.sigma, ex.alpha
    D = p2_e3_denominator(params)
    return np.array([2 * (m - 1) ** 2 * (m + 1) * a / D,
                     2 * (m + 1) * a * ((m - 1) * (s + 2) + 2 * (p - 1)) / D,
                     1.0])


def s2_line_eigenvalues_closed(xi0: float, params: Parameters) -> np.ndarray:
    b = derive_exponents(params).beta
    m, p = params.m, params.p
    return np.array([-(m + p - 2) * b * xi0, b * xi0, 0.0])


# ---------------------------------------------------------------------------
# Local expansions


@dataclass
class LocalExpansion:
    anchor: CriticalPointReport | None
    kind: ExpansionKind
    free_constants: dict
    params: Parameters
    limit: float  # the xi value the expansion is valid near

    def __call__(self, xi):
        return self.evaluate(xi)

    def evaluate(self, xi):
        """Leading-order (f, f') at xi."""
        xi = np.asarray(xi, dtype=float)
        ex = derive_exponents(self.params)
        m, p, s, a, b = self.params.m, self.params.p, self.params.sigma, ex.alpha, ex.beta
        k = self.kind
        c = self.free_constants
        if k is ExpansionKind.BEH02:
            g = (s + 2) / (m - p)
            return c["K"] * xi ** g, c["K"] * g * xi ** (g - 1)
        if k is ExpansionKind.BEH_P2:
            g = 2 / (m - 1)
            K = ((m - 1) / (2 * m * (m + 1))) ** (1 / (m - 1))
            return K * xi ** g, K * g * xi ** (g - 1)
        if k is ExpansionKind.BEH_P1:
            cc = b * (m - 1) / (2 * m)
            base = np.maximum(c["K"] - cc * xi * xi, 0.0)
            f = base ** (1 / (m - 1))
            with np.errstate(divide="ignore", invalid="ignore"):
                df = np.where(base > 0, -2 * cc * xi * base ** (1 / (m - 1) - 1) / (m - 1), -np.inf)
            return f, df
        if k is ExpansionKind.TYPE_II_CONTACT:
            g = (s + 2) / (m - p)
            e = (s * (m - 1) + 2 * (p - 1)) / (m - p)
            base = np.maximum(c["C"] - (1 - p) * xi ** e, 0.0)
            f = xi ** g * base ** (1 / (1 - p))
            df = g * xi ** (g - 1) * base ** (1 / (1 - p)) - xi ** g * e * xi ** (e - 1) * base ** (p / (1 - p))
            return f, df
        if k is ExpansionKind.Q5_ROOT:
            return c["K"] * xi ** (1 / m), c["K"] * xi ** (1 / m - 1) / m
        # Q1: f(0) = a > 0 with free slope; the curvature follows from the equation at 0
        a0, s0 = c["a"], c.get("slope", 0.0)
        curv = (a * a0 - m * (m - 1) * a0 ** (m - 2) * s0 * s0) / (m * a0 ** (m - 1))
        return a0 + s0 * xi + 0.5 * curv * xi * xi, s0 + curv * xi

    def second_derivative(self, xi, h: float = 1e-6):
        xi = np.asarray(xi, dtype=float)
        # never let the stencil reach the anchor, where the expansion is singular
        step = np.minimum(h * np.maximum(np.abs(xi), 1e-3), 1e-2 * np.abs(xi - self.limit))
        return (self.evaluate(xi + step)[1] - self.evaluate(xi - step)[1]) / (2 * step)

    @property
    def xi0(self) -> float | None:
        return self.free_constants.get("xi0")


def ssode_terms(xi, f, df, d2f, params: Parameters) -> np.ndarray:
    """Individual terms of the profile equation with (f^m)'' expanded."""
    ex = derive_exponents(params)
    m, p, s = params.m, params.p, params.sigma
    return np.array([m * f ** (m - 1) * d2f, m * (m - 1) * f ** (m - 2) * df * df,
                     -ex.alpha * f, ex.beta * xi * df, xi ** s * f ** p])


def ssode_relative_residual(expansion: LocalExpansion, xi: float) -> float:
    f, df = expansion.evaluate(xi)
    terms = ssode_terms(xi, float(f), float(df), float(expansion.second_derivative(xi)), expansion.params)
    return float(abs(terms.sum()) / np.max(np.abs(terms)))


_EXPANSIONS = {
    "P0": (ExpansionKind.BEH02, ExpansionKind.TYPE_II_CONTACT),
    "P1": (ExpansionKind.BEH_P1,),
    "P2": (ExpansionKind.BEH_P2,),
    "Q1": (ExpansionKind.Q1_CONSTANT,),
    "Q5": (ExpansionKind.Q5_ROOT,),
}


def local_expansion(point: CriticalPointReport | None, params: Parameters, free_constants: dict | None = None,
                    kind: ExpansionKind | None = None) -> LocalExpansion:
    """Leading-order profile near the behaviour encoded by a critical point.

    Accepted constants: K for Beh02, Q5 and BehP1 (BehP1 also accepts xi0),
    C or xi0 for the Type II contact, a and slope for Q1.
    """
    free_constants = dict(free_constants or {})
    if kind is None:
        if point is None:
            raise ValueError("either a critical point or an expansion kind is needed")
        label = point.label.split("(")[0]
        kinds = _EXPANSIONS.get(label)
        if point.label.startswith("P("):
            kinds = (ExpansionKind.BEH_P1,)
        if not kinds:
            raise NoProfileBehavior(f"{point.label} ({point.interpretation.value}) carries no profile expansion")
        kind = kinds[0]
    kind = ExpansionKind(kind)
    ex = derive_exponents(params)
    m, p, s, b = params.m, params.p, params.sigma, ex.beta
    limit = 0.0
    if kind is ExpansionKind.BEH_P1:
        cc = b * (m - 1) / (2 * m)
        if "xi0" in free_constants and "K" not in free_constants:
            free_constants["K"] = cc * free_constants["xi0"] ** 2
        free_constants.setdefault("K", 1.0)
        free_constants["xi0"] = math.sqrt(free_constants["K"] / cc)
        limit = free_constants["xi0"]
    elif kind is ExpansionKind.TYPE_II_CONTACT:
        e = (s * (m - 1) + 2 * (p - 1)) / (m - p)
        if "xi0" in free_constants and "C" not in free_constants:
            free_constants["C"] = (1 - p) * free_constants["xi0"] ** e
        free_constants.setdefault("C", 1.0)
        free_constants["xi0"] = (free_constants["C"] / (1 - p)) ** (1 / e)
        limit = free_constants["xi0"]
    elif kind in (ExpansionKind.BEH02, ExpansionKind.Q5_ROOT):
        free_constants.setdefault("K", 1.0)
    elif kind is ExpansionKind.Q1_CONSTANT:
        free_constants.setdefault("a", 1.0)
        free_constants.setdefault("slope", 0.0)
    return LocalExpansion(anchor=point, kind=kind, free_constants=free_constants, params=params, limit=limit)


def residual_order(expansion: LocalExpansion, offsets: Sequence[float] = (1e-2, 3e-3, 1e-3, 3e-4)) -> float:
    """Fitted exponent q in residual ~ offset^q, with offsets taken toward the anchor."""
    direction = -1.0 if expansion.limit > 0 else 1.0
    xs = [expansion.limit + direction * d * max(1.0, expansion.limit) for d in offsets]
    res = [ssode_relative_residual(expansion, x) for x in xs]
    return float(np.polyfit(np.log(offsets), np.log(res), 1)[0])


def v0_for_xi0(xi0: float, params: Parameters) -> float:
    return v_from_xi(xi0, params)
