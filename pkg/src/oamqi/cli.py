"""Command-line entry point (``oamqi``).

Every subcommand resolves a configuration (flag > file > default), writes
its artifacts atomically into the output directory and prints the result
summary as JSON on stdout. Every artifact embeds the config hash and the
seed; JSON records also embed the full resolved config, so
``--config <record.json>`` reproduces a run. Failures exit nonzero with a
JSON error object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, canonical_json, config_hash, load_config
from .conversion import efficiency_report, normalized_efficiency_curve, p_max, sfg_power
from .errors import ConfigError, OamqiError
from .imaging import analyze_petals, azimuthal_profile, default_grid, iccd_acquire, radial_profile, render, write_pgm
from .overlap import h_integral
from .states import (
    OamPolState,
    V,
    fit_fringe,
    hwp_transform,
    prepare_sagnac,
    simulate_fringe_scan,
    upconvert_vertical_projection,
)
from .statistics import (
    ApdCalibration,
    analytic_g2,
    apd_calibrate,
    coincidence_histogram,
    g2_estimate,
    g2_vs_position,
    loss_chain_internal_efficiency,
    nonclassical_witness,
    signal_noise_for_peak_g2,
    simulate_pairs,
    smf_coupling_scan,
)

FIGURES = ("fig2a", "fig2b", "fig2c-f", "fig3e", "fig3f-i", "fig3jk")
ENV_OUTPUT_DIR = "OAMQI_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "oamqi-out"


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


class Emitter:
    """Writes run artifacts tagged with the config hash and seed."""

    def __init__(self, out_dir, cfg: dict, command: str):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.hash = config_hash(cfg)
        self.seed = int(cfg["seed"])
        self.command = command
        self.files: list[str] = []

    @property
    def tags(self):
        return (f"oamqi {__version__}", f"command={self.command}", f"config_sha256={self.hash}", f"seed={self.seed}")

    def _path(self, name):
        p = self.dir / name
        self.files.append(p.name)
        return p

    def json(self, name, result):
        record = {
            "command": self.command,
            "config_sha256": self.hash,
            "seed": self.seed,
            "version": __version__,
            "result": _clean(result),
            "config": self.cfg,
        }
        text = json.dumps(record, indent=2, sort_keys=True, allow_nan=False) + "\n"
        _atomic_write(self._path(name), text.encode("utf-8"))

    def csv(self, name, header, rows):
        buf = io.StringIO()
        for t in self.tags:
            buf.write(f"# {t}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        _atomic_write(self._path(name), buf.getvalue().encode("utf-8"))

    def pgm(self, name, img, scale=None):
        write_pgm(self._path(name), img, comments=self.tags, scale=scale)

    def clicks(self, name, record):
        record.to_csv(self._path(name), comments=self.tags)


# ---------------------------------------------------------------- commands


def _h_integral(args, cfg, em):
    ec = ExperimentConfig(cfg)
    r = h_integral(args.l, ec.geometry, tol=args.tol)
    out = {"value": r.value, "error": r.abs_error_estimate, "evaluations": r.evaluations}
    em.json("h_integral.json", dict(out, l=args.l, xi=ec.geometry.xi, alpha=ec.geometry.alpha, tol=args.tol))
    return out


def _pmax(args, cfg, em):
    ec = ExperimentConfig(cfg)
    h0 = h_integral(0, ec.geometry, tol=1e-9).value
    pm = p_max(ec.crystal, ec.wavelengths, h0=h0)
    out = {"p_max_w": pm, "h0": h0, "xi": ec.geometry.xi, "alpha": ec.geometry.alpha, "d_eff": ec.crystal.d_eff}
    em.json("pmax.json", out)
    return out


def _efficiency(args, cfg, em):
    ec = ExperimentConfig(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = efficiency_report(cfg["powers"]["circulating_pump"], ec.crystal, ec.geometry, ec.wavelengths)
    out = dict(asdict(rep), warnings=[str(w.message) for w in caught])
    em.json("efficiency.json", out)
    return out


def _curve_rows(ec, l_max):
    return normalized_efficiency_curve(l_max, ec.geometry, ec.crystal)


def _efficiency_curve(args, cfg, em, prefix="efficiency_curve"):
    ec = ExperimentConfig(cfg)
    rows = _curve_rows(ec, cfg.get("efficiency_curve", {}).get("l_max", 2))
    em.csv(f"{prefix}.csv", ["l", "eta_normalized"], rows)
    out = {"l": [l for l, _ in rows], "eta_normalized": [v for _, v in rows]}
    em.json(f"{prefix}.json", out)
    return out


def _state(l, superposition, theta):
    if superposition:
        state, _ = upconvert_vertical_projection(hwp_transform(prepare_sagnac(abs(l), theta)))
        return state
    return OamPolState.ket(l, V)


def _render_one(em, cfg, l, superposition, theta, noiseless, prefix):
    ic = cfg["iccd"]
    state = _state(l, superposition, theta)
    grid = default_grid(state, ic["waist"], ic.get("size", 256), ic.get("peak_radius_px", 40.0))
    expected = render(state, ic["waist"], grid)
    em.pgm(f"{prefix}_expected.pgm", expected)
    img = expected
    if not noiseless:
        img = iccd_acquire(expected, ExperimentConfig(cfg).iccd)
        em.pgm(f"{prefix}_counts.pgm", img)
    pa = analyze_petals(img)
    r, mean = radial_profile(img)
    em.csv(f"{prefix}_radial.csv", ["radius_px", "mean"], zip(r.tolist(), mean.tolist()))
    phi, az = azimuthal_profile(img, 0.75 * pa.peak_radius_px, 1.25 * pa.peak_radius_px)
    em.csv(f"{prefix}_azimuthal.csv", ["phi_rad", "value"], zip(phi.tolist(), az.tolist()))
    return {
        "l": l,
        "superposition": superposition,
        "theta": theta,
        "noiseless": noiseless,
        "petals": pa.count,
        "uniform": pa.uniform,
        "peak_radius_px": pa.peak_radius_px,
        "petal_angles_rad": list(pa.petal_angles),
        "modulation": pa.modulation,
    }


def _render(args, cfg, em):
    out = _render_one(em, cfg, args.l, args.superposition, args.theta, args.noiseless, "render")
    em.json("render.json", out)
    return out


def _interference_one(em, cfg, l, noiseless, prefix):
    it = cfg["interference"]
    n = it["phases"]
    theta = 2 * np.pi * np.arange(n) / n
    vis = 1.0 if noiseless else it["visibility"]
    seed = None if noiseless else cfg["seed"]
    counts = simulate_fringe_scan(theta, vis, it["peak_counts"], it.get("pinhole_phi", 0.0), seed=seed,
                                  stream=abs(l))
    em.csv(f"{prefix}.csv", ["theta", "relative_rate"], zip(theta.tolist(), (counts / it["peak_counts"]).tolist()))
    fit = fit_fringe(theta, counts, sigma=np.ones_like(counts) if noiseless else None)
    return {"l": l, "V": fit.visibility, "F": fit.fidelity, "V_err": fit.visibility_error, "phase": fit.phase,
            "noiseless": noiseless}


def _interference(args, cfg, em):
    out = _interference_one(em, cfg, args.l, args.noiseless, "interference")
    em.json("interference.json", out)
    return out


def _smf_one(em, cfg, l, with_g2, prefix):
    s = cfg["smf"]
    ds = np.linspace(-s["range"], s["range"], s["points"])
    rows = smf_coupling_scan(l, ds, s["mode_waist"], s["fiber_waist"])
    em.csv(f"{prefix}.csv", ["d_m", "efficiency"], rows)
    out = {"l": l, "d_m": [d for d, _ in rows], "efficiency": [e for _, e in rows]}
    if with_g2:
        ec = ExperimentConfig(cfg)
        src, eta = ec.source()
        base = replace(src, duration=s.get("duration", src.duration), signal_noise_rate=0.0)
        target = s.get("peak_g2", {}).get(str(abs(l)))
        imp = s.get("impurity", 0.0)
        if target is not None:
            noise = signal_noise_for_peak_g2(l, ds, base, target, eta, s["mode_waist"], s["fiber_waist"], imp)
            base = replace(base, signal_noise_rate=noise)
        res = g2_vs_position(l, ds, base, eta, s["mode_waist"], s["fiber_waist"], imp)
        em.csv(f"{prefix}_g2.csv", ["d_m", "g2", "g2_err"], [(d, e.g2, e.stat_error) for d, e in res])
        out.update(g2=[e.g2 for _, e in res], g2_err=[e.stat_error for _, e in res],
                   signal_noise_rate=base.signal_noise_rate, target_peak_g2=target)
    return out


def _smf_scan(args, cfg, em):
    out = _smf_one(em, cfg, args.l, args.g2, "smf_scan")
    em.json("smf_scan.json", out)
    return out


def _g2_one(em, cfg, prefix, export_clicks=False):
    ec = ExperimentConfig(cfg)
    src, eta = ec.source()
    rec = simulate_pairs(src, eta)
    est = g2_estimate(rec.signal, rec.idler, src.coincidence_window)
    hist = coincidence_histogram(rec.signal, rec.idler, src.coincidence_window)
    em.csv(f"{prefix}_histogram.csv", ["delay_s", "coincidences"], zip(hist.delays.tolist(), hist.counts.tolist()))
    if export_clicks:
        em.clicks(f"{prefix}_clicks.csv", rec)
    return {
        "g2": est.g2,
        "err": est.stat_error,
        "singles_s": est.singles_signal,
        "singles_i": est.singles_idler,
        "coincidences": est.coincidences,
        "accidentals": est.accidentals,
        "analytic_g2": analytic_g2(src, eta),
        "nonclassical": nonclassical_witness(est.g2),
        "preset": cfg["source"]["preset"],
    }


def _g2_sim(args, cfg, em):
    out = _g2_one(em, cfg, "g2_sim", args.export_clicks)
    em.json("g2_sim.json", out)
    return out


def _loss_chain(args, cfg, em):
    ec = ExperimentConfig(cfg)
    chain = ec.losses
    herald = cfg["losses"]["herald_rate"]
    cum, rows = 1.0, []
    for label, t in chain.stages:
        cum *= t
        rows.append((label, t, cum))
    em.csv("loss_chain.csv", ["stage", "transmission", "cumulative"], rows)
    out = {"herald_rate": herald, "transmission": chain.transmission,
           "internal_efficiency": loss_chain_internal_efficiency(herald, chain)}
    em.json("loss_chain.json", out)
    return out


def _calibrate_apd(args, cfg, em):
    ec = ExperimentConfig(cfg)
    if args.count_rate is not None:
        states = [{"label": "cli", "count_rate": args.count_rate,
                   "transmission": 1.0 if args.transmission is None else args.transmission}]
    else:
        states = cfg["apd"]["states"]
    rows = []
    for st in states:
        cal = replace(ec.apd, optics_transmission=st["transmission"])
        rows.append((st["label"], st["count_rate"], st["transmission"], apd_calibrate(st["count_rate"], cal)))
    em.csv("calibrate_apd.csv", ["label", "count_rate", "transmission", "crystal_face_rate"], rows)
    out = {"duty": ec.apd.duty, "states": [dict(zip(("label", "count_rate", "transmission", "crystal_face_rate"), r))
                                           for r in rows]}
    em.json("calibrate_apd.json", out)
    return out


# ---------------------------------------------------------------- figure presets


def _fig2a(cfg, em):
    ec = ExperimentConfig(cfg)
    powers = np.linspace(0.0, 2 * cfg["powers"]["signal"], 11)
    rows, slopes = [], {}
    for l in (0, 1, 2):
        pump, sig = ec.beams(l)
        for ps in powers:
            rows.append((l, float(ps), sfg_power(pump, sig.with_power(float(ps)), ec.crystal, ec.geometry)))
        slopes[str(l)] = rows[-1][2] / powers[-1]
    em.csv("fig2a.csv", ["l", "signal_power_w", "sfg_power_w"], rows)
    return {"slope": slopes}


def _fig2b(cfg, em):
    return _efficiency_curve(None, cfg, em, prefix="fig2b")


def _fig2c_f(cfg, em):
    out = []
    for l in (1, 2):
        for sup in (False, True):
            tag = f"fig2c-f_l{l}_{'petals' if sup else 'donut'}"
            out.append(_render_one(em, cfg, l, sup, 0.0, False, tag))
    return {"images": out}


def _fig3e(cfg, em):
    out = {}
    for preset in ("input", "post_conversion"):
        c = json.loads(json.dumps(cfg))
        c["source"]["preset"] = preset
        if preset == "input":
            c["source"]["duration"] = min(c["source"]["duration"], 0.1)
        out[preset] = _g2_one(em, c, f"fig3e_{preset}")
    return out


def _fig3f_i(cfg, em):
    return {f"l{l}": _smf_one(em, cfg, l, True, f"fig3f-i_l{l}") for l in (1, 2)}


def _fig3jk(cfg, em):
    return {f"l{l}": _interference_one(em, cfg, l, False, f"fig3jk_l{l}") for l in (1, 2)}


_FIGURE_RUNNERS = {
    "fig2a": _fig2a,
    "fig2b": _fig2b,
    "fig2c-f": _fig2c_f,
    "fig3e": _fig3e,
    "fig3f-i": _fig3f_i,
    "fig3jk": _fig3jk,
}


def _reproduce(args, cfg, em):
    out = _FIGURE_RUNNERS[args.figure](cfg, em)
    em.json(f"{args.figure}.json", out)
    return out


# ---------------------------------------------------------------- parser

# flag dest -> dotted config path
_OVERRIDES = {
    "seed": "seed",
    "xi": "geometry.xi",
    "alpha": "geometry.alpha",
    "d_eff": "crystal.d_eff",
    "length": "crystal.length",
    "pump": "powers.circulating_pump",
    "l_max": "efficiency_curve.l_max",
    "frames": "iccd.frames_per_image",
    "dark": "iccd.dark_count_mean",
    "signal": "iccd.mean_signal_photons_per_frame",
    "phases": "interference.phases",
    "visibility": "interference.visibility",
    "peak_counts": "interference.peak_counts",
    "points": "smf.points",
    "range": "smf.range",
    "duration": "source.duration",
    "preset": "source.preset",
    "herald_rate": "losses.herald_rate",
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file or run record")
    common.add_argument("--out", help=f"output directory (default ${ENV_OUTPUT_DIR} or ./{DEFAULT_OUTPUT_DIR})")
    common.add_argument("--seed", type=int, help="64-bit RNG seed")

    p = _Parser(prog="oamqi", description="OAM quantum-interface simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("h-integral", parents=[common], help="overlap factor h(l, xi)")
    s.add_argument("--l", type=int, default=0)
    s.add_argument("--xi", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=_h_integral)

    s = sub.add_parser("pmax", parents=[common], help="pump power for unit efficiency")
    for flag in ("--xi", "--alpha", "--d-eff", "--length"):
        s.add_argument(flag, type=float)
    s.set_defaults(func=_pmax)

    s = sub.add_parser("efficiency", parents=[common], help="efficiency at a circulating pump power")
    for flag in ("--xi", "--alpha", "--d-eff", "--pump"):
        s.add_argument(flag, type=float)
    s.set_defaults(func=_efficiency)

    s = sub.add_parser("efficiency-curve", parents=[common], help="eta(l)/eta(0) for l = 0..l_max")
    s.add_argument("--l-max", type=int)
    s.add_argument("--xi", type=float)
    s.add_argument("--alpha", type=float)
    s.set_defaults(func=_efficiency_curve)

    s = sub.add_parser("render", parents=[common], help="ICCD image of a mode or superposition")
    s.add_argument("--l", type=int, default=1)
    s.add_argument("--superposition", action="store_true")
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--frames", type=int)
    s.add_argument("--dark", type=float)
    s.add_argument("--signal", type=float, help="mean signal photons per frame")
    s.add_argument("--noiseless", action="store_true")
    s.set_defaults(func=_render)

    s = sub.add_parser("interference", parents=[common], help="projection fringe scan and fit")
    s.add_argument("--l", type=int, default=1)
    s.add_argument("--phases", type=int)
    s.add_argument("--visibility", type=float)
    s.add_argument("--peak-counts", type=float)
    s.add_argument("--noiseless", action="store_true")
    s.set_defaults(func=_interference)

    s = sub.add_parser("smf-scan", parents=[common], help="fibre coupling versus displacement")
    s.add_argument("--l", type=int, default=1)
    s.add_argument("--points", type=int)
    s.add_argument("--range", type=float, help="half-width of the scan (m)")
    s.add_argument("--g2", action="store_true", help="also simulate g2 per position")
    s.add_argument("--duration", type=float)
    s.set_defaults(func=_smf_scan)

    s = sub.add_parser("g2-sim", parents=[common], help="pair-source Monte Carlo and g2 estimate")
    s.add_argument("--preset", choices=("input", "post_conversion", "custom"))
    s.add_argument("--duration", type=float)
    s.add_argument("--export-clicks", action="store_true")
    s.set_defaults(func=_g2_sim)

    s = sub.add_parser("loss-chain", parents=[common], help="internal efficiency from the loss chain")
    s.add_argument("--herald-rate", type=float)
    s.set_defaults(func=_loss_chain)

    s = sub.add_parser("calibrate-apd", parents=[common], help="crystal-face photon rates from APD counts")
    s.add_argument("--count-rate", type=float)
    s.add_argument("--transmission", type=float)
    s.set_defaults(func=_calibrate_apd)

    s = sub.add_parser("reproduce", parents=[common], help="run a figure preset")
    s.add_argument("figure", choices=FIGURES)
    s.set_defaults(func=_reproduce)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {path: getattr(args, dest) for dest, path in _OVERRIDES.items() if hasattr(args, dest)}
    cfg = load_config(args.config, overrides)
    out_dir = args.out or os.environ.get(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR
    em = Emitter(out_dir, cfg, args.command if args.command != "reproduce" else f"reproduce {args.figure}")
    result = args.func(args, cfg, em)
    sys.stdout.write(canonical_json(_clean(result)) + "\n")
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ConfigError as exc:
        _report(exc)
        return 2
    except (OamqiError, ValueError, ArithmeticError, OSError) as exc:
        _report(exc)
        return 1


def _report(exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
