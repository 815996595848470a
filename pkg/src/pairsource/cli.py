"""Command-line front end: ``pairsource {angles,design,stats,fit,bell,simulate}``.

Parameters come from defaults, then the ``command`` block of an optional
JSON config file, then command-line flags (later wins).  Exit status is 0
on success, 1 for usage or configuration errors and 2 when a computation
fails.  Results go to ``--out`` when given, else to standard output;
diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

from . import coincidence_stats as cs
from . import formats
from .crystal_optics import Polarization, load_crystal
from .errors import DomainError, FitError, NoPhaseMatchingError
from .mode_design import design_collection
from .pair_sim import SimConfig, scan_levels, simulate_correlation_scan, simulate_power_sweep
from .phasematch import PumpConfig, sweep_emission

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2

DEFAULTS = {
    "angles": {"pump_nm": 351.1, "pump_angle_deg": 49.7, "start_nm": 690.0, "stop_nm": 710.0,
               "step_nm": 0.1, "phi_deg": 0.0, "idler_pol": "o", "fd_step_nm": 0.1, "format": "csv"},
    "design": {"pump_nm": 351.1, "pump_angle_deg": 49.7, "bandwidth_nm": 4.0, "margin": 1.0,
               "dispersion": None, "fiber_waist_um": 2.3, "focal_mm": 11.0, "phi_deg": 0.0,
               "idler_pol": "o", "gaussian_fiber": False, "format": "table"},
    "stats": {"input": None, "cutoff_mw": math.inf, "tau_ns": 6.8, "eta": 0.0, "duration_s": None,
              "format": "table"},
    "fit": {"input": None, "accidentals": None, "basis": "", "format": "table"},
    "bell": {"input": None, "format": "table"},
    "simulate": {"kind": "sweep", "seed": None, "pair_rate_per_mw": 900.0, "eta_s": 1.0, "eta_i": 1.0,
                 "background_s": 0.0, "background_i": 0.0, "tau_ns": 6.8, "dead_time_ns": 0.0,
                 "duration_s": 1.0, "powers_mw": [25, 50, 75, 100, 150, 200, 300, 400, 465],
                 "pump_mw": 400.0, "visibility": 0.96, "phi2_deg": 0.0, "scan_step_deg": 7.5,
                 "format": "csv"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False)
    common.add_argument("--crystal", default=S, help="crystal JSON file (default: shipped BBO data)")
    common.add_argument("--config", default=S, help="JSON run configuration")
    common.add_argument("--out", default=S, help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json", "table"], default=S)

    p = _Parser(prog="pairsource", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def pump_flags(sp):
        sp.add_argument("--pump-nm", type=float, default=S)
        sp.add_argument("--pump-angle-deg", type=float, default=S)
        sp.add_argument("--phi-deg", type=float, default=S, help="idler azimuth")
        sp.add_argument("--idler-pol", choices=["o", "e"], default=S)

    a = sub.add_parser("angles", parents=[common], help="emission angle and dispersion sweep")
    pump_flags(a)
    a.add_argument("--start-nm", type=float, default=S)
    a.add_argument("--stop-nm", type=float, default=S)
    a.add_argument("--step", dest="step_nm", type=float, default=S, help="sweep step in nm")
    a.add_argument("--fd-step-nm", type=float, default=S)

    d = sub.add_parser("design", parents=[common], help="collection mode design report")
    pump_flags(d)
    d.add_argument("--bandwidth-nm", type=float, default=S)
    d.add_argument("--margin", type=float, default=S)
    d.add_argument("--dispersion", type=float, default=S, help="override dtheta/dlambda, deg/nm")
    d.add_argument("--fiber-waist-um", type=float, default=S)
    d.add_argument("--focal-mm", type=float, default=S)
    d.add_argument("--gaussian-fiber", action="store_true", default=S)

    s = sub.add_parser("stats", parents=[common], help="efficiency, power slope and accidentals")
    s.add_argument("input", nargs="?", default=S)
    s.add_argument("--cutoff-mw", type=float, default=S)
    s.add_argument("--tau-ns", type=float, default=S)
    s.add_argument("--eta", type=float, default=S)
    s.add_argument("--duration-s", type=float, default=S)

    f = sub.add_parser("fit", parents=[common], help="sin/cos visibility fit")
    f.add_argument("input", nargs="?", default=S)
    f.add_argument("--accidentals", type=float, default=S, help="accidental floor, s^-1")
    f.add_argument("--basis", default=S)

    b = sub.add_parser("bell", parents=[common], help="CHSH evaluation")
    b.add_argument("input", nargs="?", default=S)

    m = sub.add_parser("simulate", parents=[common], help="Monte-Carlo count data")
    m.add_argument("--kind", choices=["sweep", "scan"], default=S)
    m.add_argument("--seed", type=int, default=S)
    for name in ("pair-rate-per-mw", "eta-s", "eta-i", "background-s", "background-i", "tau-ns",
                 "dead-time-ns", "duration-s", "pump-mw", "visibility", "phi2-deg", "scan-step-deg"):
        m.add_argument(f"--{name}", type=float, default=S)
    m.add_argument("--powers-mw", type=_float_list, default=S)
    return p


def resolve(argv):
    """Parse ``argv`` and merge defaults < config file < flags."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command", None)
    if command is None:
        raise UsageError("a subcommand is required: angles, design, stats, fit, bell, simulate")
    params = dict(DEFAULTS[command])
    params.update(crystal=None, out=None)
    cfg_path = ns.pop("config", None)
    if cfg_path is not None:
        try:
            cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from None
        block = cfg.get("command", {})
        if isinstance(block, dict):
            name = block.get("name", command)
            if name != command:
                raise UsageError(f"config is for command {name!r}, not {command!r}")
            block = {k: v for k, v in block.items() if k != "name"}
        else:
            block = {}
        for key in ("crystal", "out", "format"):
            if key in cfg:
                params[key] = cfg[key]
        unknown = set(block) - set(params)
        if unknown:
            raise UsageError(f"unknown config key(s) for {command}: {', '.join(sorted(unknown))}")
        params.update(block)
    params.update(ns)
    if params["crystal"] is not None and not Path(params["crystal"]).is_file():
        raise UsageError(f"crystal file not found: {params['crystal']}")
    if params.get("input", "") is None:
        raise UsageError(f"{command} needs an input CSV")
    if "input" in params and not Path(params["input"]).is_file():
        raise UsageError(f"input file not found: {params['input']}")
    return command, params


# --- rendering ---------------------------------------------------------------

def _table(rows, columns) -> str:
    cells = [[formats.fmt(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[k]) for row in cells)) if cells else len(c) for k, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _kv_table(report: dict) -> str:
    width = max(len(k) for k in report)
    out = []
    for k, v in report.items():
        if isinstance(v, (dict, list)):
            v = json.dumps(v)
        elif isinstance(v, float):
            v = f"{v:.6g}"
        out.append(f"{k.ljust(width)}  {v}")
    return "\n".join(out) + "\n"


def _kv_csv(report: dict) -> str:
    rows = [{"key": k, "value": v if isinstance(v, (int, float, str)) and not isinstance(v, bool) else json.dumps(v)}
            for k, v in report.items()]
    return formats.rows_to_csv(["key", "value"], rows)


def _render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return formats.to_json(report)
    if fmt == "csv":
        return _kv_csv(report)
    return _kv_table(report)


# --- commands ----------------------------------------------------------------

def _pump(params, power=0.0, waist=80.0):
    return PumpConfig(params["pump_nm"] * 1e-3, math.radians(params["pump_angle_deg"]), power, waist)


def cmd_angles(params) -> str:
    if not params["step_nm"] > 0:
        raise UsageError("--step must be positive")
    if params["stop_nm"] < params["start_nm"]:
        raise UsageError("empty wavelength range")
    crystal = load_crystal(params["crystal"])
    rows = sweep_emission(crystal, _pump(params), params["start_nm"] * 1e-3, params["stop_nm"] * 1e-3,
                          params["step_nm"] * 1e-3, math.radians(params["phi_deg"]),
                          Polarization.parse(params["idler_pol"]), params["fd_step_nm"])
    data = [{"lambda_nm": r.lambda_i * 1e3, "theta_i_ext_deg": math.degrees(r.theta_i_ext),
             "theta_s_ext_deg": math.degrees(r.theta_s_ext),
             "dtheta_dlambda_deg_per_nm": r.dtheta_dlambda, "status": r.status} for r in rows]
    failed = sum(r.status != "ok" for r in rows)
    if failed:
        print(f"warning: {failed} of {len(rows)} rows have no solution", file=sys.stderr)
    if params["format"] == "json":
        return formats.to_json(data)
    if params["format"] == "table":
        return _table(data, formats.SWEEP_COLUMNS)
    return formats.rows_to_csv(formats.SWEEP_COLUMNS, data)


def design_report(params) -> dict:
    crystal = load_crystal(params["crystal"])
    pump = _pump(params)
    des = design_collection(crystal, pump, params["bandwidth_nm"], params["margin"],
                            params["fiber_waist_um"], params["focal_mm"], params["dispersion"],
                            math.radians(params["phi_deg"]), Polarization.parse(params["idler_pol"]),
                            bool(params["gaussian_fiber"]))
    report = {
        "inputs": {k: params[k] for k in ("pump_nm", "pump_angle_deg", "bandwidth_nm", "margin", "dispersion",
                                          "fiber_waist_um", "focal_mm", "phi_deg", "idler_pol", "gaussian_fiber")},
        "crystal": crystal.name,
        "crystal_length_mm": crystal.length,
        "center_wavelength_nm": pump.degenerate_wavelength * 1e3,
        "dtheta_dlambda_deg_per_nm": des.dispersion,
        "theta_D_raw_deg": math.degrees(des.divergence_raw),
        "theta_D_deg": math.degrees(des.divergence),
        "waist_um": des.mode.waist,
        "rayleigh_length_mm": des.mode.rayleigh_length,
        "pump_waist_um": des.pump_waist,
        "walkoff_pump_um": des.walkoff_pump,
        "walkoff_signal_um": des.walkoff_signal,
        "walkoff_ratio": des.walkoff_ratio,
        "fiber_waist_um": des.fiber.fiber_waist,
        "focal_length_mm": des.fiber.focal_length,
        "magnification": des.fiber.magnification,
        "fiber_to_lens_mm": des.fiber.object_distance,
        "lens_to_waist_mm": des.fiber.image_distance,
    }
    if des.walkoff_warning:
        report["warning"] = des.walkoff_warning
    return report


def cmd_design(params) -> str:
    return _render_report(design_report(params), params["format"])


def stats_report(params) -> dict:
    tau = params["tau_ns"] * 1e-9
    recs = formats.read_power_csv(params["input"], tau, params["duration_s"])
    rows = []
    for r in recs:
        overall, arm_s, arm_i = cs.efficiency_ratio(r) if r.n_s > 0 and r.n_i > 0 else (math.nan,) * 3
        rows.append({"power_mw": r.pump_power, "singles_s": r.n_s, "singles_i": r.n_i, "coincidences": r.n_c,
                     "eta_overall": overall, "eta_s": arm_s, "eta_i": arm_i,
                     "accidentals": float(cs.accidental_rate(r.n_s, r.n_i, tau, params["eta"]))})
    total = cs.CountRecord(sum(r.n_s for r in recs), sum(r.n_i for r in recs),
                           sum(r.n_c for r in recs))
    report = {"rows": rows, "tau_c_ns": params["tau_ns"], "eta": params["eta"]}
    if total.n_s > 0 and total.n_i > 0:
        report["eta_overall"], report["eta_s"], report["eta_i"] = cs.efficiency_ratio(total)
    try:
        fit = cs.power_slope(recs, params["cutoff_mw"])
        report.update(slope=fit.slope, slope_stderr=fit.stderr, slope_points=fit.n_points)
    except ValueError as exc:
        print(f"warning: no slope fit: {exc}", file=sys.stderr)
    report["power_cutoff_mw"] = params["cutoff_mw"]
    return report


STATS_COLUMNS = ["power_mw", "singles_s", "singles_i", "coincidences", "eta_overall", "eta_s", "eta_i",
                 "accidentals"]


def cmd_stats(params) -> str:
    report = stats_report(params)
    if params["format"] == "json":
        return formats.to_json(report)
    if params["format"] == "csv":
        return formats.rows_to_csv(STATS_COLUMNS, report["rows"])
    summary = {k: v for k, v in report.items() if k != "rows"}
    return _table(report["rows"], STATS_COLUMNS) + "\n" + _kv_table(summary)


def fit_report(params) -> dict:
    curve = formats.read_curve_csv(params["input"], params["basis"])
    fit = cs.sincos_fit(curve)
    report = {"basis": params["basis"], "points": len(curve.points), "visibility": fit.visibility,
              "visibility_err": fit.visibility_err, "mean_rate": fit.mean_rate,
              "mean_rate_err": fit.mean_rate_err,
              "phase_deg": fit.phase if fit.phase_defined else None, "residual_rms": fit.residual_rms}
    if params["accidentals"] is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report["accidentals"] = params["accidentals"]
            report["visibility_corrected"] = cs.corrected_visibility(fit, params["accidentals"])
        if caught:
            report["warning"] = str(caught[0].message)
    return report


def cmd_fit(params) -> str:
    return _render_report(fit_report(params), params["format"])


def bell_report(params) -> dict:
    table = formats.read_bell_csv(params["input"])
    es = {}
    for key, entry in table.items():
        c = entry["counts"]
        es[key] = cs.correlation_E(c[(1, 1)], c[(1, -1)], c[(-1, 1)], c[(-1, -1)])
    res = cs.chsh_S(es[("a", "b")], es[("a", "b'")], es[("a'", "b")], es[("a'", "b'")])
    report = {}
    for key in [("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'")]:
        label = f"E({key[0]},{key[1]})"
        report[label] = es[key].value
        report[label + "_err"] = es[key].stderr
    report.update(S=res.S, sigma_S=res.sigma_S, violation_sigmas=res.violation_sigmas)
    return report


def cmd_bell(params) -> str:
    return _render_report(bell_report(params), params["format"])


def _sim_config(params, power):
    if params["seed"] is None:
        raise UsageError("simulate needs --seed (runs must be reproducible)")
    if not params["duration_s"] > 0:
        raise UsageError("duration must be positive")
    try:
        return SimConfig(params["pair_rate_per_mw"], power, params["eta_s"], params["eta_i"],
                         params["background_s"], params["background_i"], params["tau_ns"] * 1e-9,
                         params["dead_time_ns"] * 1e-9, params["duration_s"], int(params["seed"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(params) -> str:
    if params["kind"] == "sweep":
        cfg = _sim_config(params, 0.0)
        if not params["powers_mw"]:
            raise UsageError("power list is empty")
        out = [o.to_record(cfg.tau_c) for _, o in simulate_power_sweep(cfg, params["powers_mw"])]
        if params["format"] == "json":
            return formats.to_json([{"power_mw": r.pump_power, "singles_s": r.n_s, "singles_i": r.n_i,
                                     "coincidences": r.n_c, "duration_s": r.duration} for r in out])
        return formats.power_to_csv(out)
    cfg = _sim_config(params, params["pump_mw"])
    step = params["scan_step_deg"]
    if not step > 0:
        raise UsageError("scan step must be positive")
    n = int(round(180.0 / step))
    angles = [(k * step, params["phi2_deg"]) for k in range(n)]
    curve = simulate_correlation_scan(cfg, params["visibility"], angles)
    mean_rate, floor = scan_levels(cfg)
    print(f"model mean rate {mean_rate:.6g} s^-1, accidental floor {floor:.6g} s^-1", file=sys.stderr)
    if params["format"] == "json":
        return formats.to_json([{"phi1_deg": p.phi1, "phi2_deg": p.phi2, "rate_hz": p.rate,
                                 "duration_s": p.duration} for p in curve.points])
    return formats.curve_to_csv(curve)


COMMANDS = {"angles": cmd_angles, "design": cmd_design, "stats": cmd_stats, "fit": cmd_fit,
            "bell": cmd_bell, "simulate": cmd_simulate}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, params = resolve(argv)
        text = COMMANDS[command](params)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"pairsource: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoPhaseMatchingError, FitError, DomainError) as exc:
        print(f"pairsource: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (ValueError, OSError) as exc:
        print(f"pairsource: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if params["out"]:
        formats.atomic_write(params["out"], text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
