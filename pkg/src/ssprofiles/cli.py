"""Command-line front end: analyze, shoot, sweep, probe-nonexistence."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .critical_points import analyze_all, p2_location
from .date_classifier import analyze_center_flow
from .errors import BracketInvalid, ProfileError, RegimeMismatch, SigmaOutOfRange
from .integrator import (
    ATOL,
    RTOL,
    fit_interface_exponent,
    verify_interface_equation,
)
from .params import Parameters, Regime, derive_exponents, parse_config
from .phase_systems import SystemId
from .shooting import (
    classify_p2_orbit,
    find_good_type1,
    p0_fan_orbit,
    probe_nonexistence,
    shoot_backward,
    sweep_sigma,
)
from .svgplot import Panel, render_svg

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Output helpers


def _clean(obj):
    """Convert numpy containers and enums into plain JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, (int, str)):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k, ensure_ascii=False)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with sorted keys and every float printed to 17 significant digits."""
    return _encode(_clean(obj), indent, 0) + "\n"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def profile_rows(profile):
    return zip(map(float, profile.xi), map(float, profile.f), map(float, profile.df))


# ---------------------------------------------------------------------------
# Argument handling


def _grid(text: str) -> list[float]:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be lo:hi:step") from None
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs step > 0 and hi >= lo")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=float)
    common.add_argument("--p", type=float)
    common.add_argument("--sigma", type=float)
    common.add_argument("--config", help="file of key=value lines; flags override it")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--tol-rel", type=float, default=None)
    common.add_argument("--tol-abs", type=float, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=None)

    ap = argparse.ArgumentParser(prog="ssprofiles", description="Self-similar blow-up profiles: phase-space tools")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="critical points, eigen-data and centre-flow invariants")
    sh = sub.add_parser("shoot", parents=[common], help="backward shooting from a Type I interface")
    sh.add_argument("--xi0", type=float)
    sh.add_argument("--auto-bracket", action="store_true")
    sh.add_argument("--bracket", type=str, help="lo:hi bracket for the bisection")
    sw = sub.add_parser("sweep", parents=[common], help="endpoint of the P2 orbit over a sigma grid")
    sw.add_argument("--grid", type=_grid, help="lo:hi:step")
    sw.add_argument("--refine", action="store_true", help="bisect the endpoint flip")
    sw.add_argument("--fan", type=int, default=4, help="orbits out of P0 drawn per portrait")
    sw.add_argument("--no-plots", action="store_true")
    sub.add_parser("probe-nonexistence", parents=[common], help="evidence table for m + p < 2")
    return ap


def resolve(args) -> dict:
    """Merge the config file with command-line flags (flags win)."""
    values: dict = {}
    if args.config:
        values.update(parse_config(args.config))
    for key in ("m", "p", "sigma", "xi0", "tol_rel", "tol_abs", "seed", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "grid", None) is None and "grid" in values:
        args.grid = _grid(str(values["grid"]))
    for key in ("m", "p"):
        if key not in values:
            raise UsageError(f"--{key} is required")
    if "sigma" not in values and args.command != "sweep":
        raise UsageError("--sigma is required")
    values["tol_rel"] = float(values.get("tol_rel", RTOL))
    values["tol_abs"] = float(values.get("tol_abs", ATOL))
    if values["tol_rel"] <= 0 or values["tol_abs"] <= 0:
        raise UsageError("tolerances must be positive")
    if values.get("workers") is not None:
        values["workers"] = int(values["workers"])
    return values


def _params(values: dict, sigma: float | None = None) -> Parameters:
    params = Parameters(float(values["m"]), float(values["p"]), float(values["sigma"] if sigma is None else sigma))
    derive_exponents(params)
    return params


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _header(params: Parameters, values: dict) -> dict:
    ex = derive_exponents(params)
    return {"params": {"m": params.m, "p": params.p, "sigma": params.sigma},
            "exponents": {"alpha": ex.alpha, "beta": ex.beta, "T": ex.T},
            "regime": params.regime.value, "seed": int(values.get("seed", 0)),
            "tolerances": {"rel": values["tol_rel"], "abs": values["tol_abs"]}}


# ---------------------------------------------------------------------------
# Commands


def cmd_analyze(args, values) -> int:
    params = _params(values)
    if params.regime is Regime.CRITICAL:
        raise RegimeMismatch("m + p = 2 is not covered")
    system = SystemId.S1 if params.regime is Regime.SUPERCRITICAL else SystemId.S5
    reports = analyze_all(system, params)
    inv = analyze_center_flow(params)
    report = _header(params, values)
    report.update({"system": system.value,
                   "critical_points": [r.to_dict() for r in reports],
                   "n_infinity_points": sum(r.at_infinity for r in reports),
                   "date_invariants": inv.to_dict(), "portrait": inv.portrait})
    text = dumps(report)
    (_out_dir(args) / "analyze.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_shoot(args, values) -> int:
    params = _params(values)
    out = _out_dir(args)
    report = _header(params, values)
    profile = None
    if args.auto_bracket or args.bracket:
        bracket = None
        if args.bracket:
            lo, hi = (float(v) for v in args.bracket.split(":"))
            bracket = (lo, hi)
        xi0, profile = find_good_type1(params, bracket)
        fit = profile.interface
        report["result"] = {"mode": "bisection", "xi0_star": xi0, "outcome": profile.meta["outcome"],
                            "f0": profile.meta["f0"], "df0": profile.meta["df0"], "v0": profile.meta["v0"],
                            "origin_kind": profile.origin_kind, "good": profile.good,
                            "interface": {"xi0": fit.xi0, "type": fit.kind, "exponent": fit.exponent, "r2": fit.r2}}
        try:
            lhs, rhs, err = verify_interface_equation(profile)
            report["result"]["interface_equation"] = {"lhs": lhs, "rhs": rhs, "rel_error": err}
        except ProfileError as exc:
            report["result"]["interface_equation"] = {"error": str(exc)}
    elif "xi0" in values:
        res = shoot_backward(float(values["xi0"]), params)
        profile = res.profile
        report["result"] = {"mode": "single", "xi0": res.xi0, "v0": res.v0, "outcome": res.outcome.value,
                            "f0": res.f0, "df0": res.df0, "xi1": res.xi1}
        if profile is not None:
            fit = profile.interface or fit_interface_exponent(profile, xi0=res.xi0)
            report["result"]["interface"] = {"xi0": fit.xi0, "type": fit.kind, "exponent": fit.exponent}
    else:
        raise UsageError("shoot needs --xi0, --bracket or --auto-bracket")
    write_csv(out / "profile.csv", ["xi", "f", "df"], profile_rows(profile) if profile is not None else [])
    text = dumps(report)
    (out / "shoot.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _portrait(params: Parameters, values: dict, n_fan: int, out: Path) -> None:
    """P2 orbit and a few orbits out of P0, projected on (Y, X) and (Y, Z); data also written as CSV."""
    ex = derive_exponents(params)
    orbits = []
    try:
        orbits.append(("P2", classify_p2_orbit(params, rtol=values["tol_rel"], atol=values["tol_abs"]).orbit))
    except ProfileError:
        pass
    for K in (np.geomspace(1e-2, 1e2, n_fan) if n_fan > 0 else []):
        try:
            orbits.append((f"P0:K={K:.4g}", p0_fan_orbit(params, float(K), rtol=values["tol_rel"], atol=values["tol_abs"])))
        except ProfileError:
            pass
    p2 = p2_location(params)
    floor = -2.5 * ex.ratio - 0.25  # orbits escaping toward Q3 are cut here
    data = [o.coords[o.coords[:, 1] >= floor] for _, o in orbits] + [np.array([[0.0, 0.0, 0.0], p2])]
    allpts = np.vstack(data)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    pad = 0.05 * np.maximum(hi - lo, 1e-6)
    y_lo, y_hi = lo[1] - pad[1], hi[1] + pad[1]
    x_hi, z_hi = hi[0] + pad[0], hi[2] + pad[2]
    tag = f"{params.sigma:g}"
    left = Panel(f"(Y, X), sigma={tag}", "Y", "X", (y_lo, y_hi), (0.0, x_hi))
    right = Panel(f"(Y, Z), sigma={tag}", "Y", "Z", (y_lo, y_hi), (0.0, z_hi))
    rows = []
    for i, (label, o) in enumerate(orbits):
        X, Y, Z = o.coords.T
        left.add_line(Y, X)
        right.add_line(Y, Z)
        rows.extend((label, float(t), float(x), float(y), float(z)) for t, x, y, z in zip(o.eta, X, Y, Z))
    for name, pt in (("P0", (0.0, 0.0, 0.0)), ("P1", (0.0, -ex.ratio, 0.0)), ("P2", tuple(p2))):
        left.add_marker(pt[1], pt[0], name)
        right.add_marker(pt[1], pt[2], name)
    title = f"m={params.m:g}, p={params.p:g}, sigma={tag}"
    (out / f"portrait_{tag}.svg").write_text(render_svg([left, right], title), encoding="utf-8")
    write_csv(out / f"portrait_{tag}.csv", ["orbit", "eta", "X", "Y", "Z"], rows)


def cmd_sweep(args, values) -> int:
    m, p = float(values["m"]), float(values["p"])
    if m + p < 2:
        raise RegimeMismatch("m + p < 2: no P2 orbit sweep applies; use probe-nonexistence")
    if m + p == 2:
        raise RegimeMismatch("m + p = 2 is not covered")
    grid = args.grid
    if grid is None:
        if "sigma" not in values:
            raise UsageError("sweep needs --grid lo:hi:step (or --sigma for a single point)")
        grid = [float(values["sigma"])]
    for s in grid:
        _params({"m": m, "p": p, "sigma": s})
    out = _out_dir(args)
    rep = sweep_sigma(m, p, grid, workers=values.get("workers"), refine=args.refine,
                      rtol=values["tol_rel"], atol=values["tol_abs"])
    report = {"m": m, "p": p, "seed": int(values.get("seed", 0)),
              "tolerances": {"rel": values["tol_rel"], "abs": values["tol_abs"]}, "report": rep.to_dict()}
    text = dumps(report)
    (out / "regime.json").write_text(text, encoding="utf-8")
    (out / "sweep.csv").write_text(rep.to_csv(), encoding="utf-8")
    if not args.no_plots:
        for s in grid:
            _portrait(Parameters(m, p, s), values, args.fan, out)
    sys.stdout.write(text)
    bad = sum(e in ("Undecided", "Error") for e in rep.endpoints)
    return EXIT_NUMERIC if bad * 2 > len(rep.endpoints) else EXIT_OK


def cmd_probe(args, values) -> int:
    params = _params(values)
    rep = probe_nonexistence(params)
    out = _out_dir(args)
    report = _header(params, values)
    report.update(rep.to_dict())
    report["n_points"] = rep.n_points
    text = dumps(report)
    (out / "nonexistence.json").write_text(text, encoding="utf-8")
    write_csv(out / "nonexistence.csv", ["kind", "xi0", "result", "detail"],
              [(e.kind, float(e.xi0), e.result, "" if e.detail is None else float(e.detail)) for e in rep.launches])
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "shoot": cmd_shoot, "sweep": cmd_sweep, "probe-nonexistence": cmd_probe}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        values = resolve(args)
        return COMMANDS[args.command](args, values)
    except (UsageError, SigmaOutOfRange, RegimeMismatch, BracketInvalid) as exc:
        msg = str(exc)
        if isinstance(exc, RegimeMismatch) and args.command == "sweep" and "probe-nonexistence" not in msg:
            msg += "; use probe-nonexistence"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except ProfileError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
