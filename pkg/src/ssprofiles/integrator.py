"""Orbit integration, profile reconstruction and interface analysis."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .critical_points import ExpansionKind, LocalExpansion, p2_location, p2_unstable_direction
from .errors import (
    BlowupInPhaseVariables,
    IntegrationFailure,
    NegativeF,
    NoInterface,
    NonInvertibleOrbit,
    StepLimitExceeded,
    WrongInterfaceType,
)
from .params import Exponents, Parameters, derive_exponents
from .phase_systems import (
    ProfilePoint,
    SystemId,
    center_manifold_T,
    profile_to_phase,
    rhs_function,
    s1_arrays_to_profile,
)

RTOL = 1e-9
ATOL = 1e-12
R_STOP = 1e-4
Y_ESCAPE = 1e3
LAUNCH_DELTA = 1e-6


class TerminationKind(str, enum.Enum):
    ENTERED_POINT = "EnteredPoint"
    LEFT_DOMAIN = "LeftDomain"
    SIGN_CHANGE = "SignChange"
    STEP_LIMIT = "StepLimit"
    ESCAPED = "Escaped"


@dataclass
class Termination:
    kind: TerminationKind
    label: str | None = None
    distance: float | None = None
    coord: str | None = None
    direction: str | None = None

    def describe(self) -> str:
        if self.kind is TerminationKind.ENTERED_POINT:
            return f"EnteredPoint({self.label}, {self.distance:.3e})"
        if self.kind is TerminationKind.ESCAPED:
            return f"Escaped({self.direction}) -> {self.label}"
        if self.kind is TerminationKind.SIGN_CHANGE:
            return f"SignChange({self.coord})"
        return self.kind.value


@dataclass
class Target:
    """A critical point that ends an integration when the orbit gets within radius."""

    label: str
    location: np.ndarray
    radius: float = R_STOP
    from_below: bool = False  # P0 rule: Y < 0 with X and Z decreasing


@dataclass
class StopConditions:
    targets: list[Target] = field(default_factory=list)
    y_escape: float = Y_ESCAPE
    norm_escape: float = 1e8
    eta_max: float = 1e7
    positive_coords: tuple[int, ...] = ()  # coordinates whose sign change ends the run
    planes: list[tuple[int, float]] = field(default_factory=list)  # recorded crossings
    raise_on_step_limit: bool = False


@dataclass
class Orbit:
    system: SystemId
    params: Parameters
    eta: np.ndarray
    coords: np.ndarray  # shape (n, 3)
    launch: object
    termination: Termination
    crossings: dict = field(default_factory=dict)
    nfev: int = 0

    @property
    def endpoint(self) -> np.ndarray:
        return self.coords[-1]


def default_s1_stops(params: Parameters, r_stop: float = R_STOP) -> StopConditions:
    ex = derive_exponents(params)
    return StopConditions(
        targets=[Target("P0", np.zeros(3), r_stop, from_below=True),
                 Target("P1", np.array([0.0, -ex.ratio, 0.0]), r_stop)],
        positive_coords=(0, 2),
    )


def integrate(launch, system: SystemId, params: Parameters, stop: StopConditions | None = None,
              rtol: float = RTOL, atol: float = ATOL, max_step: float = math.inf,
              method: str = "RK45") -> Orbit:
    """Integrate an orbit with event-based termination, RK45 unless method says otherwise.

    launch is either a 3-vector in the system's coordinates or a LocalExpansion
    paired with an offset, given as (expansion, delta).  Pass method="LSODA"
    for orbits that creep along a centre manifold next to a fast stable direction.
    """
    system = SystemId(system)
    stop = stop or (default_s1_stops(params) if system is SystemId.S1 else StopConditions())
    if isinstance(launch, tuple) and len(launch) == 2 and isinstance(launch[0], LocalExpansion):
        u0 = launch_from_expansion(launch[0], launch[1], system, params)
    else:
        u0 = np.asarray(launch, dtype=float)
    rhs = rhs_function(system, params)

    events, meta = [], []
    for tgt in stop.targets:
        c = np.asarray(tgt.location, dtype=float)
        if tgt.from_below:
            def ev(t, u, c=c, r=tgt.radius):
                d = rhs(t, u)
                return max(math.dist(u, c) - r, u[1], d[0], d[2])
        else:
            def ev(t, u, c=c, r=tgt.radius):
                return math.dist(u, c) - r
        ev.terminal, ev.direction = True, -1
        events.append(ev)
        meta.append(("target", tgt))
    if math.isfinite(stop.y_escape):
        for sgn, label, direction in ((-1.0, "Q3", "Y->-inf"), (1.0, "Q2", "Y->+inf")):
            def ev(t, u, sgn=sgn):
                return stop.y_escape - sgn * u[1]
            ev.terminal, ev.direction = True, -1
            events.append(ev)
            meta.append(("escape", (label, direction)))

    def ev_norm(t, u):
        return stop.norm_escape - math.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2)
    ev_norm.terminal, ev_norm.direction = True, -1
    events.append(ev_norm)
    meta.append(("norm", None))
    for idx in stop.positive_coords:
        def ev(t, u, idx=idx):
            return u[idx]
        ev.terminal, ev.direction = True, -1
        events.append(ev)
        meta.append(("sign", idx))
    for idx, value in stop.planes:
        def ev(t, u, idx=idx, value=value):
            return u[idx] - value
        ev.terminal = False
        events.append(ev)
        meta.append(("plane", (idx, value)))

    sol = solve_ivp(rhs, (0.0, stop.eta_max), u0, method=method, rtol=rtol, atol=atol,
                    events=events, max_step=max_step)
    if sol.status == -1:
        raise IntegrationFailure(sol.message)
    eta, coords = sol.t, sol.y.T.copy()
    crossings = {}
    termination = Termination(TerminationKind.STEP_LIMIT)
    for (kind, info), te, ye in zip(meta, sol.t_events, sol.y_events):
        if kind == "plane":
            crossings[info] = [(float(t), y.copy()) for t, y in zip(te, ye)]
            continue
        if not len(te) or sol.status != 1:
            continue
        if kind == "target":
            termination = Termination(TerminationKind.ENTERED_POINT, label=info.label,
                                      distance=float(np.linalg.norm(ye[0] - info.location)))
        elif kind == "escape":
            termination = Termination(TerminationKind.ESCAPED, label=info[0], direction=info[1])
        elif kind == "norm":
            raise BlowupInPhaseVariables(f"|u| exceeded {stop.norm_escape:g} at eta={te[0]:.6g} "
                                         f"without a Y-dominated escape: {ye[0]}")
        elif kind == "sign":
            termination = Termination(TerminationKind.SIGN_CHANGE, coord=f"u[{info}]")
    if termination.kind is TerminationKind.STEP_LIMIT and stop.raise_on_step_limit:
        raise StepLimitExceeded(f"no stop condition met before eta={stop.eta_max:g}")
    return Orbit(system=system, params=params, eta=eta, coords=coords, launch=launch,
                 termination=termination, crossings=crossings, nfev=sol.nfev)


def rk4_fixed(system: SystemId, params: Parameters, u0, h: float, n_steps: int) -> np.ndarray:
    """Classical fixed-step RK4, for short stretches where an adaptive controller chatters."""
    rhs = rhs_function(system, params)
    u = np.asarray(u0, dtype=float)
    out = [u.copy()]
    for _ in range(n_steps):
        k1 = np.asarray(rhs(0, u))
        k2 = np.asarray(rhs(0, u + 0.5 * h * k1))
        k3 = np.asarray(rhs(0, u + 0.5 * h * k2))
        k4 = np.asarray(rhs(0, u + h * k3))
        u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(u.copy())
    return np.array(out)


def launch_from_expansion(expansion: LocalExpansion, delta: float, system: SystemId,
                          params: Parameters) -> np.ndarray:
    """Phase state of a local expansion at distance delta from its anchor (in xi)."""
    xi = expansion.limit - delta if expansion.limit > 0 else delta
    f, df = (float(v) for v in expansion.evaluate(xi))
    state = profile_to_phase(ProfilePoint(xi, f, df), system, params).coords
    if system is SystemId.S1 and expansion.kind is ExpansionKind.BEH02:
        state = p0_launch(state[0], expansion.free_constants["K"], params)
    return state


def p0_launch(X0: float, K: float, params: Parameters) -> np.ndarray:
    """Point on the centre manifold of P0 carrying the origin behaviour f ~ K xi^gamma."""
    ex = derive_exponents(params)
    Z0 = X0 * X0 * K ** (params.p - params.m) / params.m
    T0 = center_manifold_T(X0, Z0, params)
    return np.array([X0, (X0 - Z0 + T0) / ex.ratio, Z0])


def p2_launch(params: Parameters, delta: float = LAUNCH_DELTA) -> np.ndarray:
    e3 = p2_unstable_direction(params)
    return p2_location(params) + delta * e3 / np.linalg.norm(e3)


# ---------------------------------------------------------------------------
# Direct integration of the profile equation in (F, G) = (f^m, (f^m)')


def _spow(x, q):
    return math.copysign(abs(x) ** q, x)


def direct_rhs(params: Parameters, direction: float):
    """(xi, F, G) in the time tau with dxi/dtau = direction * |F|^((m-1)/m).

    The rescaling removes the stiffness of the degenerate diffusion near F = 0.
    """
    ex = derive_exponents(params)
    m, p, s, a, b = params.m, params.p, params.sigma, ex.alpha, ex.beta
    q = (m - 1) / m

    def rhs(t, u):
        xi, F, G = u
        w = abs(F) ** q
        xs = abs(xi) ** s
        return [direction * w,
                direction * w * G,
                direction * (w * (a * _spow(F, 1 / m) - xs * _spow(F, p / m)) - b / m * xi * G)]
    return rhs


def direct_rhs_xi(params: Parameters):
    """(F, G) as functions of xi; valid away from F = 0."""
    ex = derive_exponents(params)
    m, p, s, a, b = params.m, params.p, params.sigma, ex.alpha, ex.beta

    def rhs(xi, u):
        F, G = u
        return [G, a * _spow(F, 1 / m) - (b / m) * xi * _spow(F, (1 - m) / m) * G - abs(xi) ** s * _spow(F, p / m)]
    return rhs


@dataclass
class InterfaceFit:
    xi0: float
    kind: str  # "TypeI", "TypeII" or "Ambiguous"
    exponent: float
    r2: float


@dataclass
class Profile:
    params: Parameters
    exponents: Exponents
    xi: np.ndarray
    f: np.ndarray
    df: np.ndarray
    origin_kind: str
    interface: InterfaceFit | None = None
    meta: dict = field(default_factory=dict)

    @property
    def good(self) -> bool:
        return self.origin_kind in ("P1property", "P2property") and self.interface is not None

    def samples(self) -> list[ProfilePoint]:
        return [ProfilePoint(float(a), float(b), float(c)) for a, b, c in zip(self.xi, self.f, self.df)]


def _profile_from_direct(ys: np.ndarray, params: Parameters) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = params.m
    xi, F, G = ys
    f = np.sign(F) * np.abs(F) ** (1 / m)
    with np.errstate(divide="ignore", invalid="ignore"):
        df = np.where(f != 0, G / (m * np.abs(f) ** (m - 1)), np.nan)
    return xi, f, df


def diffusion_ratio(xi, f, df, params: Parameters):
    """|(f^m)''| / |beta xi f'|: how far the profile is from the reduced first-order equation."""
    ex = derive_exponents(params)
    adv = ex.beta * xi * df
    return np.abs(ex.alpha * f - adv - np.abs(xi) ** params.sigma * np.abs(f) ** params.p) / np.abs(adv)


def attach_tail(xi, f, df, params: Parameters, kind: str, n: int = 200,
                s_min_rel: float = 1e-9) -> tuple[np.ndarray, np.ndarray, np.ndarray, LocalExpansion]:
    """Continue samples to the interface with the local expansion matched to the last sample.

    kind "TypeII" uses the contact expansion, "TypeI" the expansion near P1.
    """
    xm, fm = float(xi[-1]), float(f[-1])
    m, p = params.m, params.p
    ex = derive_exponents(params)
    if kind == "TypeII":
        g = (params.sigma + 2) / (m - p)
        e = 1 / ex.beta
        C = fm ** (1 - p) * xm ** (-g * (1 - p)) + (1 - p) * xm ** e
        expansion = LocalExpansion(None, ExpansionKind.TYPE_II_CONTACT, {"C": C}, params,
                                   (C / (1 - p)) ** (1 / e))
    else:
        cc = ex.beta * (m - 1) / (2 * m)
        K = fm ** (m - 1) + cc * xm * xm
        expansion = LocalExpansion(None, ExpansionKind.BEH_P1, {"K": K}, params, math.sqrt(K / cc))
    xi0 = expansion.limit
    s = np.geomspace(xi0 - xm, s_min_rel * xi0, n)[1:]
    tx = xi0 - s
    tf, tdf = expansion.evaluate(tx)
    return (np.concatenate([xi, tx]), np.concatenate([f, tf]), np.concatenate([df, tdf]), expansion)


def complete_to_interface(xi_start: float, f_start: float, df_start: float, params: Parameters,
                          f_ratio: float = 1e-6, r_switch: float = 1e-3,
                          rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray, np.ndarray, str | None]:
    """Forward (F, G) integration from a decreasing profile point toward the interface.

    Ends either when the diffusion term becomes negligible (the reduced equation
    then governs a Type II contact) or when f has dropped by f_ratio.  Returns
    the samples and the interface kind suggested by the stopping reason.
    """
    m = params.m
    ex = derive_exponents(params)
    a, b, sg, p = ex.alpha, ex.beta, params.sigma, params.p
    F0 = f_start ** m
    G0 = m * f_start ** (m - 1) * df_start
    rhs = direct_rhs(params, 1.0)
    F_stop = F0 * f_ratio ** m

    def ev_small(t, u):
        return u[1] - F_stop
    ev_small.terminal, ev_small.direction = True, -1

    def ev_reduced(t, u):
        xi, F, G = u
        if G >= 0 or F <= 0:
            return 1.0
        f = F ** (1 / m)
        df = G / (m * f ** (m - 1))
        return abs(a * f - b * xi * df - xi ** sg * f ** p) / abs(b * xi * df) - r_switch
    ev_reduced.terminal, ev_reduced.direction = True, -1

    def ev_turn(t, u):
        return u[2]
    ev_turn.terminal, ev_turn.direction = True, 1

    u0 = [xi_start, F0, G0]
    if ev_reduced(0, u0) <= 0:
        xi, f, df = _profile_from_direct(np.array(u0, dtype=float)[:, None], params)
        return xi, f, df, "TypeII"
    sol = solve_ivp(rhs, (0.0, 1e30), u0, method="RK45", rtol=rtol,
                    atol=[1e-13 * max(1.0, xi_start), 1e-3 * F_stop, 1e-3 * F_stop],
                    events=[ev_small, ev_reduced, ev_turn])
    if sol.status == -1:
        raise IntegrationFailure(sol.message)
    kind = None
    if len(sol.t_events[1]):
        kind = "TypeII"
    elif len(sol.t_events[0]):
        kind = "TypeI"
    xi, f, df = _profile_from_direct(sol.y, params)
    return xi, f, df, kind


def integrate_ssode_direct(start, params: Parameters, direction: int = 1, delta: float = 1e-6,
                           xi_end: float | None = None, f_ratio: float = 1e-6, r_switch: float = 1e-3,
                           rtol: float = 1e-10, f_cap: float = 1e12) -> Profile:
    """Integrate the profile equation in (F, G) from a point or a local expansion.

    direction = -1 integrates toward xi = 0 and stops there.  direction = +1
    integrates outward until xi_end, or toward the interface, which is then
    completed by the matching local expansion.  A crossing of F through zero
    raises NegativeF with the crossing location; growth of f past f_cap on
    the way back raises BlowupInPhaseVariables.
    """
    ex = derive_exponents(params)
    m = params.m
    if isinstance(start, LocalExpansion):
        xi_s = start.limit - delta if start.limit > 0 else delta
        f_s, df_s = (float(v) for v in start.evaluate(xi_s))
    else:
        xi_s, f_s, df_s = float(start.xi), float(start.f), float(start.df)
    F0, G0 = f_s ** m, m * f_s ** (m - 1) * df_s
    rhs = direct_rhs(params, float(direction))
    events = []

    def ev_zero(t, u):
        return u[1]
    ev_zero.terminal, ev_zero.direction = True, -1
    events.append(ev_zero)
    if direction < 0:
        def ev_axis(t, u):
            return u[0]
        ev_axis.terminal, ev_axis.direction = True, -1
        events.append(ev_axis)

        def ev_blowup(t, u):
            return f_cap ** m - u[1]
        ev_blowup.terminal, ev_blowup.direction = True, -1
        events.append(ev_blowup)
    else:
        # hand over to the interface completion once f is decreasing and has lost half its peak
        peak = [f_s]

        def ev_descend(t, u):
            f = max(u[1], 0.0) ** (1 / m)
            peak[0] = max(peak[0], f)
            return 1.0 if u[2] >= 0 else f - 0.5 * peak[0]
        ev_descend.terminal, ev_descend.direction = True, -1
        events.append(ev_descend)
        if xi_end is not None:
            def ev_end(t, u):
                return u[0] - xi_end
            ev_end.terminal, ev_end.direction = True, 1
            events.append(ev_end)

    scale_F = max(abs(F0), 1e-300)
    atol = [1e-13 * max(1.0, xi_s), 1e-14 * scale_F, 1e-14 * max(abs(G0), scale_F)]
    sol = solve_ivp(rhs, (0.0, 1e30), [xi_s, F0, G0], method="RK45", rtol=rtol, atol=atol,
                    events=events)
    if sol.status == -1:
        raise IntegrationFailure(sol.message)
    if len(sol.t_events[0]):
        xi_cross = float(sol.y_events[0][0][0])
        raise NegativeF(f"profile changes sign at xi={xi_cross:.10g}", xi_cross=xi_cross)
    if direction < 0 and len(sol.t_events[2]):
        raise BlowupInPhaseVariables(f"f exceeded {f_cap:g} at xi={sol.y_events[2][0][0]:.10g} during backward integration")
    xi, f, df = _profile_from_direct(sol.y, params)
    if direction < 0:
        xi, f, df = xi[::-1], f[::-1], df[::-1]
        prof = Profile(params=params, exponents=ex, xi=xi, f=f, df=df,
                       origin_kind=classify_origin(xi, f, df, params))
        if isinstance(start, LocalExpansion) and start.kind is ExpansionKind.BEH_P1:
            tail_s = np.geomspace(delta, 1e-9 * start.limit, 50)[1:]
            tf, tdf = start.evaluate(start.limit - tail_s)
            prof.xi = np.concatenate([xi, start.limit - tail_s])
            prof.f = np.concatenate([f, tf])
            prof.df = np.concatenate([df, tdf])
            prof.interface = fit_interface_exponent(prof, xi0=start.limit)
        return prof
    prof = Profile(params=params, exponents=ex, xi=xi, f=f, df=df, origin_kind="Unknown")
    if isinstance(start, LocalExpansion) and start.limit == 0:
        prof.origin_kind = "P2property" if start.kind in (ExpansionKind.BEH02, ExpansionKind.BEH_P2) else "P1property"
    if len(sol.t_events[1]):
        _complete(prof, f_ratio=f_ratio, r_switch=r_switch)
    return prof


def _complete(prof: Profile, f_ratio: float = 1e-6, r_switch: float = 1e-3) -> None:
    params = prof.params
    cx, cf, cdf, kind = complete_to_interface(float(prof.xi[-1]), float(prof.f[-1]), float(prof.df[-1]),
                                              params, f_ratio=f_ratio, r_switch=r_switch)
    xi = np.concatenate([prof.xi, cx[1:]])
    f = np.concatenate([prof.f, cf[1:]])
    df = np.concatenate([prof.df, cdf[1:]])
    prof.meta["completion_start"] = float(prof.xi[-1])
    if kind is None:
        prof.xi, prof.f, prof.df = xi, f, df
        return
    prof.meta["tail_start"] = float(xi[-1])
    xi, f, df, expansion = attach_tail(xi, f, df, params, kind)
    prof.xi, prof.f, prof.df = xi, f, df
    prof.meta["tail"] = {"kind": expansion.kind.value, **expansion.free_constants}
    prof.interface = fit_interface_exponent(prof, xi0=expansion.limit)


def classify_origin(xi, f, df, params: Parameters, tol_good: float = 1e-6) -> str:
    """Origin behaviour from the first sample, which should sit at or very near xi = 0."""
    m = params.m
    f0, d0 = float(f[0]), float(df[0])
    fmax = float(np.nanmax(np.abs(f)))
    if f0 <= 1e-8 * fmax:
        fm_slope = m * abs(f0) ** (m - 1) * d0 if f0 > 0 else 0.0
        return "P2property" if abs(fm_slope) < 1e-6 * max(1.0, fmax ** m) else "SignChangeAtZero"
    if abs(d0) < tol_good * max(1.0, f0):
        return "P1property"
    return "NegativeSlope" if d0 < 0 else "PositiveSlope"


# ---------------------------------------------------------------------------
# Profiles from phase-space orbits


def reconstruct_profile(orbit: Orbit, params: Parameters, complete: bool = True,
                        f_ratio: float = 1e-6) -> Profile:
    """Undo the S1 change of variables and complete the interface end."""
    if orbit.system is not SystemId.S1:
        raise NonInvertibleOrbit("profile reconstruction is implemented for S1 orbits")
    X, Z = orbit.coords[:, 0], orbit.coords[:, 2]
    inside = (X > 0) & (Z > 0)
    if not inside.any():
        raise NonInvertibleOrbit("orbit lies in an invariant plane X = 0 or Z = 0 and carries no profile")
    xi, f, df = s1_arrays_to_profile(orbit.coords[inside], params)
    ex = derive_exponents(params)
    launch_label = "P0"
    if isinstance(orbit.launch, tuple) and isinstance(orbit.launch[0], LocalExpansion):
        launch_label = orbit.launch[0].kind.value
    origin = "P2property"  # orbits out of P0 and P2 both start with f(0) = 0, (f^m)'(0) = 0
    prof = Profile(params=params, exponents=ex, xi=xi, f=f, df=df, origin_kind=origin,
                   meta={"launch": launch_label, "termination": orbit.termination.describe()})
    term = orbit.termination
    if complete and term.kind is TerminationKind.ENTERED_POINT and term.label in ("P0", "P1"):
        if term.label == "P0":
            _complete(prof, f_ratio=f_ratio)
        else:
            prof.xi, prof.f, prof.df, expansion = attach_tail(prof.xi, prof.f, prof.df, params, "TypeI")
            prof.meta["tail"] = {"kind": expansion.kind.value, **expansion.free_constants}
            prof.interface = fit_interface_exponent(prof, xi0=expansion.limit)
    return prof


def fit_origin_exponent(profile: Profile, decades: float = 1.0) -> tuple[float, float]:
    """Slope and prefactor of log f against log xi over the first decade of samples."""
    xi, f = profile.xi, profile.f
    ok = (xi > 0) & (f > 0)
    xi, f = xi[ok], f[ok]
    sel = xi <= xi[0] * 10 ** decades
    if sel.sum() < 3:
        sel = slice(0, min(len(xi), 5))
    slope, icpt = np.polyfit(np.log(xi[sel]), np.log(f[sel]), 1)
    return float(slope), float(math.exp(icpt))


def estimate_interface(xi: np.ndarray, f: np.ndarray, df: np.ndarray) -> float:
    """Extrapolate the zero of f from the last two samples of -f/f', which is linear near a power-law zero."""
    q1, q2 = -f[-2] / df[-2], -f[-1] / df[-1]
    if not (q2 > 0 and np.isfinite(q1) and np.isfinite(q2)) or q1 == q2:
        return math.nan
    k = -(xi[-1] - xi[-2]) / (q2 - q1)
    return float(xi[-1] + k * q2) if k > 0 else math.nan


def fit_interface_exponent(profile: Profile, xi0: float | None = None, rel_tol: float = 0.05) -> InterfaceFit:
    """Log-log fit of f against xi0 - xi over the last decade of approach."""
    m, p = profile.params.m, profile.params.p
    xi, f, df = profile.xi, profile.f, profile.df
    pos = np.isfinite(f) & (f > 0)
    if pos.sum() < 4:
        raise NoInterface("too few positive samples")
    xi, f, df = xi[pos], f[pos], df[pos]
    if xi0 is None:
        if profile.interface is not None:
            xi0 = profile.interface.xi0
        elif np.all(np.isfinite(df[-2:])) and df[-1] < 0:
            xi0 = estimate_interface(xi, f, df)
        else:
            xi0 = math.nan
    if not (math.isfinite(xi0) and xi0 > xi[-1]) or f[-1] > 1e-3 * f.max():
        raise NoInterface("f does not approach zero at the right end of the samples")
    s = xi0 - xi
    sel = (s > 0) & (s <= 10 * s[-1])
    if sel.sum() < 3:
        sel = np.zeros_like(s, dtype=bool)
        sel[-4:] = True
    ls, lf = np.log(s[sel]), np.log(f[sel])
    slope, icpt = np.polyfit(ls, lf, 1)
    resid = lf - (slope * ls + icpt)
    ss = float(np.sum((lf - lf.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    t1, t2 = 1 / (m - 1), 1 / (1 - p)
    if abs(slope - t1) <= rel_tol * t1:
        kind = "TypeI"
    elif abs(slope - t2) <= rel_tol * t2:
        kind = "TypeII"
    else:
        kind = "Ambiguous"
    return InterfaceFit(xi0=float(xi0), kind=kind, exponent=float(slope), r2=r2)


def _boundary_slope(profile: Profile, power: float) -> tuple[float, float]:
    """One-sided derivative of f^power at the interface from the last decade of samples.

    Returns (slope, local exponent of f^power in xi0 - xi); the slope is only
    meaningful when the exponent is 1.
    """
    fit = profile.interface or fit_interface_exponent(profile)
    xi0 = fit.xi0
    pos = profile.f > 0
    xi, f = profile.xi[pos], profile.f[pos]
    s = xi0 - xi
    sel = (s > 0) & (s <= 10 * s[-1])
    g = f[sel] ** power
    k = float(np.polyfit(np.log(s[sel]), np.log(g), 1)[0])
    # g ~ A s + B s^2 near the interface
    A = float(np.polyfit(s[sel], g, 2)[1])
    return -A, k


def verify_interface_equation(profile: Profile, which: str | None = None, t: float = 0.5,
                              exponent_tol: float = 0.05) -> tuple[float, float, float]:
    """Compare both sides of the interface equation at time t for u = (T-t)^-alpha f(|x|(T-t)^beta).

    which selects the equation ("TypeI" or "TypeII"); by default the one
    matching the fitted interface type.
    """
    fit = profile.interface or fit_interface_exponent(profile)
    which = which or fit.kind
    ex = profile.exponents
    m, p, sigma = profile.params.m, profile.params.p, profile.params.sigma
    a, b, T = ex.alpha, ex.beta, ex.T
    tau = T - t
    xi0 = fit.xi0
    s_pos = xi0 * tau ** (-b)
    lhs = b * xi0 * tau ** (-b - 1)  # s'(t)
    if which == "TypeI":
        slope, k = _boundary_slope(profile, m - 1)
        if abs(k - 1) > exponent_tol:
            raise WrongInterfaceType(f"(f^(m-1))' has no finite nonzero limit at the interface (local power {k:.3f})")
        vx = (m / (m - 1)) * tau ** (-a * (m - 1) + b) * slope
        rhs = -vx
    elif which == "TypeII":
        slope, k = _boundary_slope(profile, 1 - p)
        if abs(k - 1) > exponent_tol:
            raise WrongInterfaceType(f"(f^(1-p))' has no finite nonzero limit at the interface (local power {k:.3f})")
        wx = tau ** (-a * (1 - p) + b) * slope / (1 - p)
        rhs = -s_pos ** sigma / wx
    else:
        raise WrongInterfaceType(f"interface of kind {which} has no interface equation")
    return float(lhs), float(rhs), float(abs(lhs - rhs) / abs(lhs))


def orbit_profile_overlap(orbit: Orbit, params: Parameters, n: int = 40, lo: float = 0.1,
                          hi: float = 0.25) -> float:
    """Largest relative gap in f between an S1 orbit and the direct route started from one of its samples.

    The comparison window runs from where f first exceeds lo * max f to where it
    has dropped back below hi * max f, so both routes stay away from f = 0.
    """
    X, Z = orbit.coords[:, 0], orbit.coords[:, 2]
    inside = (X > 0) & (Z > 0)
    xi, f, df = s1_arrays_to_profile(orbit.coords[inside], params)
    top = int(np.argmax(f))
    i0 = int(np.argmax(f >= lo * f[top]))
    after = np.nonzero(f[top:] < hi * f[top])[0]
    i1 = top + int(after[0]) if len(after) else len(f) - 1
    idx = np.unique(np.linspace(i0, i1, n).astype(int))
    m = params.m
    sol = solve_ivp(direct_rhs_xi(params), (xi[i0], xi[i1]), [f[i0] ** m, m * f[i0] ** (m - 1) * df[i0]],
                    method="RK45", rtol=1e-11, atol=1e-16 * f[top] ** m, t_eval=xi[idx])
    F = sol.y[0]
    fd = np.sign(F) * np.abs(F) ** (1 / m)
    return float(np.max(np.abs(fd - f[idx]) / f[idx]))


def sample_window(values: Sequence[float], lo: float, hi: float) -> np.ndarray:
    v = np.asarray(values)
    return (v >= lo) & (v <= hi)
