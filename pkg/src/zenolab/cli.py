"""Command-line front end.

Every CSV output starts with one ``# {json}`` line holding the resolved run
manifest. ``zenolab replay FILE`` re-executes a manifest and reproduces the
numeric columns exactly. Exit codes: 0 success, 2 bad configuration, 3
quadrature failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings

import numpy as np

from . import __version__
from . import dynamics as dyn
from . import polarization as pol
from . import rate_engine as re_
from . import spectra as sp
from .broadening import filter_family
from .errors import QuadratureFailure, ZenoError
from .quadrature import default_rtol

EXIT_CONFIG = 2
EXIT_QUADRATURE = 3


class ConfigError(Exception):
    pass


def parse_log_grid(text: str) -> np.ndarray:
    """``log:MIN:MAX:N`` to N log-spaced points."""
    parts = text.split(":")
    if len(parts) != 4 or parts[0] != "log":
        raise ConfigError(f"grid {text!r}: expected log:MIN:MAX:N")
    try:
        lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise ConfigError(f"grid {text!r}: MIN, MAX must be numbers and N an integer") from None
    if not (0 < lo < hi and math.isfinite(hi)) or n < 2:
        raise ConfigError(f"grid {text!r}: need 0 < MIN < MAX and N >= 2")
    return np.geomspace(lo, hi, n)


def load_spectrum_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        sp.spectrum_from_dict(cfg)
    except ZenoError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg


def _manifest(command, params):
    return {"tool": "zenolab", "version": __version__, "command": command,
            "quad_rtol": default_rtol(), "params": params}


def _csv_text(manifest, header, rows, trailer=None):
    buf = io.StringIO()
    buf.write("# " + json.dumps(manifest, sort_keys=True) + "\n")
    if trailer is not None:
        buf.write("# summary " + json.dumps(trailer, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _nullable(fn):
    try:
        return fn(), None
    except ZenoError as exc:
        return None, f"{type(exc).__name__}: {exc}"


# ---- commands: each takes the resolved parameter dict and returns file text


def run_rate(p, workers=None):
    spec = sp.spectrum_from_dict(p["spectrum"])
    nu = parse_log_grid(p["nu_grid"])
    curve = re_.rate_curve(spec, p["filter"], p["omega_a"], nu, workers=workers)
    bad = [float(v) for v, ok in zip(curve.nu, curve.ok) if not ok]
    if bad:
        raise QuadratureFailure(f"overlap integral failed at nu = {bad}")
    return _csv_text(_manifest("rate", p), ["nu", "R", "R_over_RGR", "regime"],
                     curve.rows(), trailer=curve.summary())


def run_decay(p, workers=None):
    spec = sp.spectrum_from_dict(p["spectrum"])
    man = _manifest("decay", p)
    if p.get("tau_grid"):
        taus = parse_log_grid(p["tau_grid"])
        R_GR = sp.golden_rule_rate(spec, p["omega_a"])
        rows = []
        for tau in taus:
            law = dyn.measured_decay_law(spec, p["omega_a"], tau, 1, steps=p["steps"])
            rows.append((float(tau), 2.0 / tau, law.R_eff, law.R_eff / R_GR if R_GR > 0 else math.inf))
        return _csv_text(man, ["tau", "nu", "R_eff", "R_over_RGR"], rows)
    if p.get("tau") is not None:
        law = dyn.measured_decay_law(spec, p["omega_a"], p["tau"], p["trips"], steps=p["steps"])
        rows = ((int(n), float(t), float(r)) for n, t, r in zip(law.n, law.t, law.rho))
        return _csv_text(man, ["n", "t", "rho_ee"], rows, trailer={"R_eff": law.R_eff})
    rec = dyn.solve_survival_amplitude(spec, p["omega_a"], p["t_max"], p["steps"])
    rows = zip(rec.t, rec.alpha.real, rec.alpha.imag, rec.survival)
    return _csv_text(man, ["t", "re_alpha", "im_alpha", "survival"], rows)


def _noise(p):
    if p["jumps"] == pol.CONSTANT:
        return pol.NoiseModel.constant(p["jump_rms"])
    return pol.NoiseModel(p["jump_rms"], p["gamma"])


def run_polarization(p, workers=None):
    noise = _noise(p)
    man = _manifest("polarization", p)
    if p.get("theta_sweep"):
        header = ["theta", "one_minus_theta", "nu", "R_band"]
        if p["mc"]:
            header += ["R_mc", "R_mc_sigma"]
        rows = []
        for theta in p["theta_sweep"]:
            cfg = pol.CavityConfig(theta, p["tau_r"])
            row = [theta, 1 - theta, cfg.nu, pol.band_overlap_rate(cfg, noise)]
            if p["mc"]:
                run = pol.simulate_polarization(cfg, noise, p["trips"], p["shots"], p["seed"], workers)
                row += list(pol.fitted_decay_rate(run))
            rows.append(row)
        return _csv_text(man, header, rows)
    cfg = pol.CavityConfig(p["theta"], p["tau_r"])
    run = pol.simulate_polarization(cfg, noise, p["trips"], p["shots"], p["seed"], workers)
    return _csv_text(man, ["n", "t", "mean_Ph", "stderr"], run.rows())


def run_classify(p, workers=None):
    spec = sp.spectrum_from_dict(p["spectrum"])
    wa = p["omega_a"]
    fam = "projective" if p["filter"] == "projective" else "continuous"
    out = {}
    reasons = {}

    def put(key, fn):
        val, why = _nullable(fn)
        out[key] = val
        if why is not None:
            reasons[key] = why

    put("R_GR", lambda: sp.golden_rule_rate(spec, wa))
    if isinstance(spec, sp.TailCutoff):
        put("B", lambda: re_.tail_prefactor(spec, fam))
        out["beta"] = spec.beta
        put("C", lambda: sp.integrated_coupling(spec))
    else:
        put("C", lambda: sp.integrated_coupling(spec))
    put("tau_Z", lambda: sp.zeno_time(spec))
    if isinstance(spec, sp.Flat):
        out["nu_QZE"] = None
        reasons["nu_QZE"] = "no QZE scaling"
    else:
        put("nu_QZE", lambda: re_.genuine_qze_threshold(spec, wa, fam))
    put("delta_a", lambda: re_.delta_a_estimate(spec, wa))
    bounds = {"golden_rule_below": out.get("delta_a"), "genuine_qze_above": out.get("nu_QZE")}
    if isinstance(spec, sp.Hydrogenic):
        bounds["aze_asymptote_below"] = spec.omega_b / 10
    out["regime_boundaries"] = bounds
    out["reasons"] = reasons
    out["manifest"] = _manifest("classify", p)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


COMMANDS = {"rate": run_rate, "decay": run_decay, "polarization": run_polarization,
            "classify": run_classify}


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ConfigError(f"{args.command}: missing required {flags}")


def resolve(args) -> dict:
    """Fully resolved parameter set for a parsed command line."""
    c = args.command
    if c in ("rate", "decay", "classify"):
        _need(args, "spectrum", "omega_a")
        p = {"spectrum": load_spectrum_config(args.spectrum), "omega_a": args.omega_a}
        if c == "rate":
            _need(args, "nu_grid")
            parse_log_grid(args.nu_grid)
            p.update(filter=args.filter or "projective", nu_grid=args.nu_grid)
            try:
                filter_family(p["filter"])
            except ZenoError as exc:
                raise ConfigError(str(exc)) from None
        elif c == "classify":
            p["filter"] = args.filter or "projective"
        else:
            p["steps"] = args.steps if args.steps is not None else 2000
            if args.tau_grid:
                parse_log_grid(args.tau_grid)
                p["tau_grid"] = args.tau_grid
            elif args.tau is not None:
                p.update(tau=args.tau, trips=args.trips if args.trips is not None else 100)
            else:
                _need(args, "t_max")
                p["t_max"] = args.t_max
        return p
    if c == "polarization":
        p = {
            "gamma": args.gamma if args.gamma is not None else 0.0,
            "jump_rms": args.jump_rms if args.jump_rms is not None else 0.02,
            "jumps": args.jumps,
            "tau_r": args.tau_r,
            "trips": args.trips if args.trips is not None else 1000,
            "shots": args.shots if args.shots is not None else 10000,
            "seed": args.seed,
        }
        if args.theta_sweep:
            try:
                p["theta_sweep"] = [float(x) for x in args.theta_sweep.split(",")]
            except ValueError:
                raise ConfigError(f"--theta-sweep {args.theta_sweep!r}: expected comma-separated numbers") from None
            p["mc"] = bool(args.mc)
        else:
            p["theta"] = args.theta if args.theta is not None else 0.5
        return p
    raise ConfigError(f"unknown command {c!r}")


def read_manifest(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    first = text.split("\n", 1)[0]
    try:
        if first.startswith("# "):
            man = json.loads(first[2:])
        else:
            man = json.loads(text)["manifest"]
    except (json.JSONDecodeError, KeyError, TypeError):
        raise ConfigError(f"{path}: no run manifest found") from None
    if man.get("command") not in COMMANDS or not isinstance(man.get("params"), dict):
        raise ConfigError(f"{path}: manifest lacks a known command and params")
    return man


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zenolab",
                                 description="Measurement-modified decay rates and dynamics.")
    ap.add_argument("--version", action="version", version=f"zenolab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--json", dest="json_out", help="also write the manifest with a timestamp here")
        p.add_argument("--workers", type=int, default=None, help="threads for independent work items")

    def spectral(p):
        p.add_argument("--spectrum", help="JSON spectrum config file")
        p.add_argument("--omega-a", type=float, help="level frequency (rad/s)")

    r = sub.add_parser("rate", help="R(nu) curve for a filter family")
    spectral(r)
    r.add_argument("--filter", choices=["projective", "continuous", "monitor"])
    r.add_argument("--nu-grid", help="log:MIN:MAX:N")
    common(r)

    d = sub.add_parser("decay", help="survival amplitude or measured decay law")
    spectral(d)
    d.add_argument("--t-max", type=float)
    d.add_argument("--steps", type=int)
    d.add_argument("--tau", type=float, help="projection interval; switches to decay-law output")
    d.add_argument("--trips", type=int, help="number of projections in decay-law output")
    d.add_argument("--tau-grid", help="log:MIN:MAX:N sweep of projection intervals")
    common(d)

    p = sub.add_parser("polarization", help="Monte Carlo cavity polarization decay")
    p.add_argument("--gamma", type=float, help="lag-1 jump correlation")
    p.add_argument("--jump-rms", type=float, help="rms jump B (rad), or the fixed jump with --jumps constant")
    p.add_argument("--jumps", choices=[pol.GAUSSIAN_AR1, pol.CONSTANT], default=pol.GAUSSIAN_AR1)
    p.add_argument("--theta", type=float, help="absorber amplitude transparency")
    p.add_argument("--theta-sweep", help="comma-separated theta values; emits rate table")
    p.add_argument("--mc", action="store_true", help="with --theta-sweep, add fitted Monte Carlo rates")
    p.add_argument("--tau-r", type=float, default=1.0, help="round-trip time")
    p.add_argument("--trips", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, default=pol.DEFAULT_SEED)
    common(p)

    c = sub.add_parser("classify", help="regime summary as JSON")
    spectral(c)
    c.add_argument("--filter", choices=["projective", "continuous", "monitor"])
    common(c)

    rp = sub.add_parser("replay", help="re-run the manifest stored in an output file")
    rp.add_argument("manifest_file")
    common(rp)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            man = read_manifest(args.manifest_file)
            command, params = man["command"], man["params"]
        else:
            command, params = args.command, resolve(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            text = COMMANDS[command](params, workers=args.workers)
        for msg in dict.fromkeys(str(w.message) for w in caught):
            print(f"warning: {msg}", file=sys.stderr)
    except ConfigError as exc:
        print(f"zenolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureFailure as exc:
        print(f"zenolab: quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except ZenoError as exc:
        print(f"zenolab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.json_out:
        side = dict(_manifest(command, params))
        side["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        with open(args.json_out, "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
