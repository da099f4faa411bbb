"""Shooting, orbit-endpoint classification, sigma sweeps and the non-existence probe."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .critical_points import (
    ExpansionKind,
    Interpretation,
    analyze_all,
    local_expansion,
    p2_location,
    v0_for_xi0,
)
from .errors import (
    BlowupInPhaseVariables,
    ProfileError,
    BracketInvalid,
    IntegrationFailure,
    NegativeF,
    RegimeMismatch,
)
from .integrator import (
    ATOL,
    R_STOP,
    RTOL,
    Orbit,
    Profile,
    TerminationKind,
    default_s1_stops,
    fit_interface_exponent,
    integrate,
    integrate_ssode_direct,
    p0_launch,
    p2_launch,
)
from .params import Parameters, Regime, derive_exponents
from .phase_systems import SystemId, xi_from_v

TOL_GOOD = 1e-6
FAN_X0 = 1e-4
FAN_ZX = 1e-3  # largest Z/X allowed at a launch out of P0


class Outcome(str, enum.Enum):
    DECREASING_TO_AXIS = "DecreasingToAxis"
    INCREASING_AT_AXIS = "IncreasingAtAxis"
    BACKWARD_SIGN_CHANGE = "BackwardSignChange"
    GOOD_PROFILE = "GoodProfile"
    UNBOUNDED = "UnboundedGrowth"


@dataclass
class ShootResult:
    xi0: float
    v0: float
    outcome: Outcome
    f0: float | None = None
    df0: float | None = None
    xi1: float | None = None
    profile: Profile | None = field(default=None, repr=False)

    @property
    def low_side(self) -> bool:
        """True when the shot lies below a good profile in the bisection order."""
        return self.outcome is Outcome.DECREASING_TO_AXIS


def _require_supercritical(params: Parameters) -> None:
    if params.regime is not Regime.SUPERCRITICAL:
        raise RegimeMismatch(f"{params.regime.value} regime: this construction needs m + p > 2")


def shoot_backward(xi0: float, params: Parameters, delta: float = 1e-6, tol_good: float = TOL_GOOD) -> ShootResult:
    """Trace the unique Type I interface profile at xi0 back to the axis."""
    _require_supercritical(params)
    if xi0 <= 0:
        raise ValueError("xi0 must be positive")
    v0 = v0_for_xi0(xi0, params)
    expansion = local_expansion(None, params, {"xi0": xi0}, kind=ExpansionKind.BEH_P1)
    try:
        prof = integrate_ssode_direct(expansion, params, direction=-1, delta=delta * xi0)
    except NegativeF as exc:
        return ShootResult(xi0, v0, Outcome.BACKWARD_SIGN_CHANGE, xi1=exc.xi_cross)
    except BlowupInPhaseVariables:
        return ShootResult(xi0, v0, Outcome.UNBOUNDED)
    f0, df0 = float(prof.f[0]), float(prof.df[0])
    if abs(df0) < tol_good * max(1.0, f0):
        outcome = Outcome.GOOD_PROFILE
        prof.origin_kind = "P1property"
    elif df0 < 0:
        outcome = Outcome.DECREASING_TO_AXIS
    else:
        outcome = Outcome.INCREASING_AT_AXIS
    return ShootResult(xi0, v0, outcome, f0=f0, df0=df0, profile=prof)


def barrier_constants(params: Parameters) -> dict:
    """Constants of the barrier arguments, evaluated at the given parameters."""
    ex = derive_exponents(params)
    m, p, s = params.m, params.p, params.sigma
    a, b = ex.alpha, ex.beta
    out = {
        "k1": (m - p) ** 2 / (4 * (s + 2) ** 2),
        "plane1_D": 2 * m * (m + 1) ** 2 / (m - 1),
        "plane1_E": 2 * (m + 1) / (m - 1),
        "plane2_B": m * (m - 1) / (2 * m * m + 5 * m + 1),
        "plane2_C": (2 * m + 1) * (m - 1) / (2 * m * (2 * m * m + 5 * m + 1)),
        "Ybar0": (m - 1) * (s + 2) / (2 * m * (s * (m - 1) + 2 * (p - 1))),
        "Y_half": -b / (2 * a),
    }
    if m + p > 2:
        q = (m + p - 2) / (m - 1)
        U0 = ((m + p - 2) * (m - p) ** 2 / (2 * (s + 2) * (2 * s + 4 + m - p) * (1 - p))) ** q
        out["U0"] = U0
        out["vbar0"] = barrier_h(U0, params)
        U_p2 = p2_location(params)[0] ** q
        inv_k = ((s + 1) * (m - 1) + 2 * (p - 1)) / (m - 1) * U_p2 ** ((1 - p) / (m + p - 2))
        out["k"] = 1 / inv_k
        out["U_P2"] = U_p2
        out["U_P2_over_k"] = U_p2 * inv_k
        out["U_P2_over_k_closed"] = u_p2_over_k_closed(params)
    return out


def barrier_h(U: float, params: Parameters) -> float:
    """Lower bound on V for crossing the plane Y = -beta/(2 alpha) toward the interface points."""
    ex = derive_exponents(params)
    m, p = params.m, params.p
    a, b = ex.alpha, ex.beta
    return (1 + b / (2 * a)) * U ** ((1 - p) / (m + p - 2)) + b * b / (4 * U * a * a)


def u_p2_over_k_closed(params: Parameters) -> float:
    m, p, s = params.m, params.p, params.sigma
    return (s * (m - 1) + 2 * (p - 1)) * ((s + 1) * (m - 1) + 2 * (p - 1)) / (2 * (s + 2) * (m + 1))


def xi0_for_v0(v0: float, params: Parameters) -> float:
    return xi_from_v(v0, params)


def find_good_type1(params: Parameters, bracket: tuple[float, float] | None = None, width: float = 1e-8,
                    tol_good: float = TOL_GOOD, max_expand: int = 60) -> tuple[float, Profile]:
    """Bisection in xi0 between a decreasing-to-axis shot and a shot that overshoots.

    Without a bracket, the search starts at the xi0 whose v0 equals the barrier
    value vbar0 (below which shots are decreasing) and doubles upward.  An
    iterate with |f'(0)| < tol_good ends the search early.
    """
    _require_supercritical(params)

    def shoot(x):
        return shoot_backward(x, params, tol_good=0.0)

    if bracket is None:
        lo = xi0_for_v0(barrier_constants(params)["vbar0"], params)
        r_lo = shoot(lo)
        while not r_lo.low_side and max_expand > 0:
            lo, max_expand = lo / 2, max_expand - 1
            r_lo = shoot(lo)
        hi = 2 * lo
        r_hi = shoot(hi)
        while r_hi.low_side and max_expand > 0:
            lo, r_lo = hi, r_hi
            hi, max_expand = 2 * hi, max_expand - 1
            r_hi = shoot(hi)
    else:
        lo, hi = bracket
        r_lo, r_hi = shoot(lo), shoot(hi)
    if r_lo.low_side == r_hi.low_side:
        raise BracketInvalid(f"same side at both ends: {r_lo.outcome.value} at {lo:g}, {r_hi.outcome.value} at {hi:g}")
    if not r_lo.low_side:
        lo, hi, r_lo, r_hi = hi, lo, r_hi, r_lo
    best = r_lo
    while abs(hi - lo) > width:
        if best.df0 is not None and abs(best.df0) < tol_good:
            break
        mid = 0.5 * (lo + hi)
        r = shoot(mid)
        if r.df0 is not None and abs(r.df0) < tol_good:
            best = r
            break
        if r.low_side:
            lo, best = mid, r
        else:
            hi = mid
    if best.profile is None:
        raise IntegrationFailure("bisection ended without a profile on the decreasing side")
    return best.xi0, _finish_good(best, params, tol_good)


def _finish_good(result: ShootResult, params: Parameters, tol_good: float = TOL_GOOD) -> Profile:
    prof = result.profile
    if abs(result.df0) < tol_good * max(1.0, result.f0):
        prof.origin_kind = "P1property"
        result.outcome = Outcome.GOOD_PROFILE
    prof.meta.update({"xi0": result.xi0, "v0": result.v0, "f0": result.f0, "df0": result.df0,
                      "outcome": result.outcome.value})
    if prof.interface is None:
        prof.interface = fit_interface_exponent(prof, xi0=result.xi0)
    return prof


@dataclass
class EndpointResult:
    sigma: float
    endpoint: str  # P0, P1, Q3, Q2 or Undecided
    termination: str
    y0_crossing_uv: float | None = None
    orbit: Orbit | None = field(default=None, repr=False)


def _endpoint_tag(orbit: Orbit) -> str:
    t = orbit.termination
    if t.kind is TerminationKind.ENTERED_POINT:
        return t.label
    if t.kind is TerminationKind.ESCAPED:
        return t.label
    return "Undecided"


def classify_p2_orbit(params: Parameters, delta: float = 1e-6, eta_max: float = 1e7,
                      r_stop: float = 1e-4, rtol: float = RTOL, atol: float = ATOL) -> EndpointResult:
    """Endpoint of the orbit leaving P2 along its unstable direction."""
    _require_supercritical(params)
    stop = default_s1_stops(params, r_stop)
    stop.eta_max = eta_max
    stop.planes = [(1, 0.0)]
    orbit = integrate(p2_launch(params, delta), SystemId.S1, params, stop, rtol=rtol, atol=atol)
    crossing = orbit.crossings.get((1, 0.0), [])
    uv = float(crossing[0][1][2]) if crossing else None  # U V equals Z
    return EndpointResult(params.sigma, _endpoint_tag(orbit), orbit.termination.describe(), uv, orbit)


def _classify_sigma(args) -> EndpointResult:
    m, p, sigma, rtol, atol = args
    try:
        res = classify_p2_orbit(Parameters(m, p, sigma), rtol=rtol, atol=atol)
    except ProfileError as exc:
        return EndpointResult(sigma, "Error", f"{type(exc).__name__}: {exc}")
    res.orbit = None
    return res


def _map(fn, items, workers: int | None):
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class RegimeReport:
    m: float
    p: float
    sigma_values: list[float]
    endpoints: list[str]
    sigma_star_bracket: tuple[float, float] | None
    sigma_star: float | None
    transitions: list[tuple[float, float]]
    barrier_checks: dict
    uv_crossings: list[float | None]
    undecided: list[float]
    refinement: list[tuple[float, str]] = field(default_factory=list)
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sigma", "endpoint", "xi0_star_if_any", "k1", "Uv_crossing"])
        for s, e, uv in zip(self.sigma_values, self.endpoints, self.uv_crossings):
            k1 = self.barrier_checks[repr(s)]["k1"]
            w.writerow([repr(s), e, "", repr(k1), "" if uv is None else repr(uv)])
        return buf.getvalue()


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def bisect_sigma_star(m: float, p: float, lo: float, hi: float, width: float = 1e-3) -> tuple[tuple[float, float], float, list]:
    """Bisect the P0 -> Q3 flip of the P2 orbit; stops early if an iterate lands in P1."""
    history = []
    end_lo = classify_p2_orbit(Parameters(m, p, lo)).endpoint
    end_hi = classify_p2_orbit(Parameters(m, p, hi)).endpoint
    if end_lo == end_hi:
        raise BracketInvalid(f"P2 orbit ends at {end_lo} at both sigma={lo:g} and sigma={hi:g}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        end = classify_p2_orbit(Parameters(m, p, mid)).endpoint
        history.append((mid, end))
        if end == "P1":
            return (mid, mid), mid, history
        if end == end_lo:
            lo = mid
        elif end == end_hi:
            hi = mid
        else:
            break
    return (lo, hi), 0.5 * (lo + hi), history


def sweep_sigma(m: float, p: float, sigma_grid, workers: int | None = None, refine: bool = True,
                width: float = 1e-3, rtol: float = RTOL, atol: float = ATOL) -> RegimeReport:
    base = Parameters(m, p, float(sigma_grid[0]))
    _require_supercritical(base)
    grid = [float(s) for s in sigma_grid]
    if min(grid) <= base.sigma_lower:
        raise ValueError(f"grid must lie above the lower bound {base.sigma_lower:g}")
    results = _map(_classify_sigma, [(m, p, s, rtol, atol) for s in grid], workers)
    endpoints = [r.endpoint for r in results]
    transitions = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1) if endpoints[i] != endpoints[i + 1]]
    bracket, star, history = None, None, []
    flips = [(a, b) for a, b in transitions if {endpoints[grid.index(a)], endpoints[grid.index(b)]} == {"P0", "Q3"}]
    if refine and flips:
        bracket, star, history = bisect_sigma_star(m, p, *flips[0], width=width)
    elif transitions:
        bracket = transitions[0]
    barriers = {repr(s): barrier_constants(Parameters(m, p, s)) for s in grid}
    return RegimeReport(m=m, p=p, sigma_values=grid, endpoints=endpoints, sigma_star_bracket=bracket,
                        sigma_star=star, transitions=transitions, barrier_checks=barriers,
                        uv_crossings=[r.y0_crossing_uv for r in results],
                        undecided=[s for s, e in zip(grid, endpoints) if e in ("Undecided", "Error")],
                        errors={repr(r.sigma): r.termination for r in results if r.endpoint == "Error"},
                        refinement=history)


# ---------------------------------------------------------------------------
# Orbits out of P0


@dataclass
class FanEntry:
    K: float
    endpoint: str
    termination: str
    min_distance_p1: float


def fan_launch_x0(params: Parameters, K: float) -> float:
    """Launch offset X0 for the origin branch with constant K.

    Along that branch Z/X = X K^(p-m) / m vanishes at the origin, so small K
    needs a smaller X0 to start where Z is still negligible against X.
    """
    return min(FAN_X0, FAN_ZX * params.m * K ** (params.m - params.p))


def p0_fan_orbit(params: Parameters, K: float, X0: float | None = None, eta_max: float = 1e7,
                 rtol: float = RTOL, atol: float = ATOL) -> Orbit:
    """Orbit leaving P0 along the origin branch with constant K.

    Below the standard offset the whole orbit can stay inside the usual stop
    ball, so the P0 radius and atol shrink with X0 and a stiff solver carries
    the slow drift (the transverse rate -beta/alpha stays order one).
    """
    X0 = fan_launch_x0(params, K) if X0 is None else X0
    scale = min(1.0, X0 / FAN_X0)
    stop = default_s1_stops(params, r_stop=R_STOP * scale)
    stop.targets[1].radius = R_STOP
    stop.eta_max = eta_max / scale
    method = "RK45" if scale == 1.0 else "LSODA"
    return integrate(p0_launch(X0, K, params), SystemId.S1, params, stop, rtol=rtol, atol=atol * scale,
                     method=method)


def _p1_distance(orbit: Orbit) -> float:
    p1 = np.array([0.0, -derive_exponents(orbit.params).ratio, 0.0])
    return float(np.min(np.linalg.norm(orbit.coords - p1, axis=1)))


def _fan_entry(args) -> FanEntry:
    m, p, s, K, X0 = args
    o = p0_fan_orbit(Parameters(m, p, s), K, X0)
    return FanEntry(K, _endpoint_tag(o), o.termination.describe(), _p1_distance(o))


def p0_fan(params: Parameters, n: int = 8, K_range: tuple[float, float] = (1e-2, 1e2), X0: float | None = None,
           workers: int | None = None) -> list[FanEntry]:
    """Endpoints of a log-spaced family of orbits leaving P0 along its centre manifold."""
    Ks = np.geomspace(K_range[0], K_range[1], n)
    return _map(_fan_entry, [(params.m, params.p, params.sigma, float(K), X0) for K in Ks], workers)


def fan_witness(params: Parameters, K_lo: float, K_hi: float, rel_width: float = 1e-6,
                X0: float | None = None) -> tuple[float, Orbit]:
    """Bisect in K between fan orbits with different endpoints; the limit orbit passes by P1."""
    e_lo = _endpoint_tag(p0_fan_orbit(params, K_lo, X0))
    e_hi = _endpoint_tag(p0_fan_orbit(params, K_hi, X0))
    if e_lo == e_hi:
        raise BracketInvalid(f"fan orbits at K={K_lo:g} and K={K_hi:g} both end at {e_lo}")
    best = None
    while K_hi / K_lo - 1 > rel_width:
        mid = math.sqrt(K_lo * K_hi)
        o = p0_fan_orbit(params, mid, X0)
        e = _endpoint_tag(o)
        if best is None or _p1_distance(o) < _p1_distance(best):
            best = o
        if e == "P1":
            return mid, o
        if e == e_lo:
            K_lo = mid
        else:
            K_hi = mid
    return math.sqrt(K_lo * K_hi), best


# ---------------------------------------------------------------------------
# Non-existence in the subcritical range


@dataclass
class LaunchEvidence:
    kind: str
    xi0: float
    result: str
    detail: float | None = None

    @property
    def good(self) -> bool:
        return self.result in ("P1property", "P2property")


@dataclass
class NonexistenceReport:
    params: dict
    points: list[dict]
    interface_candidates: list[dict]
    launches: list[LaunchEvidence]

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def failures(self) -> int:
        return sum(not e.good for e in self.launches)

    def to_dict(self) -> dict:
        return {"params": self.params, "points": self.points, "interface_candidates": self.interface_candidates,
                "launches": [asdict(e) for e in self.launches], "failures": self.failures,
                "n_launches": len(self.launches)}


def _probe_launch(expansion, params: Parameters) -> LaunchEvidence:
    kind = expansion.kind.value
    xi0 = expansion.limit
    try:
        prof = integrate_ssode_direct(expansion, params, direction=-1, delta=1e-6 * xi0)
    except NegativeF as exc:
        return LaunchEvidence(kind, xi0, "SignChange", exc.xi_cross)
    except BlowupInPhaseVariables:
        return LaunchEvidence(kind, xi0, "UnboundedGrowth")
    except IntegrationFailure as exc:
        return LaunchEvidence(kind, xi0, f"IntegrationFailure: {exc}")
    return LaunchEvidence(kind, xi0, prof.origin_kind, float(prof.df[0]))


def probe_nonexistence(params: Parameters, xi0_grid=None) -> NonexistenceReport:
    """Evidence that no good profile with an interface exists when m + p < 2."""
    if params.regime is not Regime.SUBCRITICAL:
        raise RegimeMismatch(f"{params.regime.value} regime: the probe applies to m + p < 2")
    if params.sigma <= params.sigma_lower:
        raise RegimeMismatch(f"sigma must exceed {params.sigma_lower:g}")
    reports = analyze_all(SystemId.S5, params)
    points = [r.to_dict() for r in reports]
    interface_like = {Interpretation.TYPE_I_INTERFACE, Interpretation.TYPE_II_INTERFACE,
                      Interpretation.BEH02_AND_TYPE_II}
    candidates = []
    for r in reports:
        if r.at_infinity and r.location[0] == 0 and r.location[1] < 0 and r.location[2] > 0:
            # Y < 0 with no X component: where the Type I interface point sits when m + p > 2
            candidates.append({"label": r.label, "eigenvalues": [complex(v).real for v in r.eigenvalues],
                               "dims": list(r.dims), "interpretation": r.interpretation.value,
                               "carries_profile": r.interpretation in interface_like})
    if xi0_grid is None:
        xi0_grid = np.geomspace(0.1, 100.0, 5)
    launches = []
    for xi0 in xi0_grid:
        for kind in (ExpansionKind.BEH_P1, ExpansionKind.TYPE_II_CONTACT):
            launches.append(_probe_launch(local_expansion(None, params, {"xi0": float(xi0)}, kind=kind), params))
    return NonexistenceReport(params={"m": params.m, "p": params.p, "sigma": params.sigma}, points=points,
                              interface_candidates=candidates, launches=launches)
