"""Command-line entry point.

    lhtwpa gain --config run.yaml --out results/
    lhtwpa preset fig3a --out results/

Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure,
3 tone outside the transmission band.
"""

import argparse
import csv
import datetime
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from . import depletion, double_pump, lattice, mixing
from . import line_model as lm
from .config import build_config, load_config, parse_document
from .errors import ConfigError, InvalidParameterError, LHTWPAError, NumericFailure, OutOfBandError

log = logging.getLogger("lhtwpa")

TWO_PI = 2 * np.pi
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BAND = 0, 1, 2, 3

GAIN_COLUMNS = (
    "delta",
    "f_signal_GHz",
    "dkl_per_cell",
    "dknl_per_cell",
    "dk_per_cell",
    "g_per_cell_re",
    "g_per_cell_im",
    "gain_cis_dB",
    "gain_trans_dB",
    "phase_rad",
)

PRESETS = ("fig2", "fig3a", "fig3b", "fig4")


@dataclass
class Curve:
    columns: tuple
    rows: np.ndarray

    def column(self, name):
        return self.rows[:, self.columns.index(name)]


@dataclass
class ResultBundle:
    command: str
    metadata: dict
    summary: dict
    curves: dict = field(default_factory=dict)


def _ghz(omega):
    return float(omega) / TWO_PI / 1e9


def _num(x):
    """JSON-safe float (NaN and infinities become None)."""
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def gain_curve_rows(curve):
    a = curve.cell_pitch
    with np.errstate(invalid="ignore", divide="ignore"):
        cols = [
            curve.delta,
            curve.signal_frequency / TWO_PI / 1e9,
            curve.dk_linear * a,
            curve.dk_nonlinear * a,
            curve.dk * a,
            np.real(curve.g) * a,
            np.imag(curve.g) * a,
            curve.cis_gain_db,
            curve.trans_gain_db,
            curve.phase,
        ]
    return Curve(GAIN_COLUMNS, np.column_stack(cols))


def _f_zd_ghz(params):
    root = lm.zero_dispersion_frequency(params)
    return None if root is None else _ghz(root)


# -- subcommands ------------------------------------------------------------


def cmd_dispersion(cfg, threads=None):
    p = cfg.line
    d = cfg.dispersion
    f = np.linspace(d["f_min"], d["f_max"], d["points"])
    w = TWO_PI * f
    lm.check_in_band(p, w)
    k = lm.wavevector(p, w)
    vw, vg = lm.velocities(p, w)
    d2 = np.array([lm.dispersion_derivative(p, x, 2) for x in w])
    rows = np.column_stack([f / 1e9, k * p.cell_pitch, vw, vg, d2])
    summary = {
        "f_J_GHz": _ghz(p.plasma_frequency),
        "f_0_GHz": _ghz(p.omega_0),
        "Z_c_ohm": float(p.impedance),
        "I_0_uA": p.critical_current * 1e6,
        "f_ZD_GHz": _f_zd_ghz(p),
        "handedness": p.handedness.value,
    }
    cols = ("f_GHz", "k_per_cell", "v_phase_m_per_s", "v_group_m_per_s", "D2_s2_per_m")
    return summary, {"dispersion": Curve(cols, rows)}


def _delta_grid(cfg, pump):
    if cfg.sweep is None:
        return None
    if cfg.sweep.kind == "delta":
        return cfg.sweep.grid()
    return 1.0 - cfg.sweep.grid() / pump.frequency


def _band_summary(rows):
    f = rows.column("f_signal_GHz")
    g = rows.column("gain_cis_dB")
    order = np.argsort(f)
    f, g = f[order], g[order]
    finite = np.where(np.isfinite(g), g, -np.inf)
    i = int(np.argmax(finite))
    band3 = mixing.band_around(f, g, finite[i] - 3.0, i)
    band20 = mixing.widest_band(f, g, 20.0)
    return {
        "bandwidth_3dB_GHz": band3.width if band3 else 0.0,
        "bandwidth_20dB_GHz": band20.width if band20 else 0.0,
        "band_20dB_GHz": [band20.low, band20.high] if band20 else None,
    }


def cmd_gain(cfg, threads=None):
    pump = cfg.require("pump", "gain")
    cells = cfg.require("cells", "gain")
    p = cfg.line
    curve = mixing.gain_sweep(p, pump, cells, _delta_grid(cfg, pump))
    rows = gain_curve_rows(curve)
    peak_db, i = curve.peak()
    peak = mixing.peak_detuning(p, pump)
    probe = cfg.classify["delta_probe"] or peak.numeric or 0.05
    quad = mixing.classify_quadrant(p, pump, probe)
    summary = {
        "peak_gain_dB": peak_db,
        "delta_at_peak": float(curve.delta[i]),
        "f_signal_at_peak_GHz": _ghz(curve.signal_frequency[i]),
        **_band_summary(rows),
        "delta_max_closed_form": _num(peak.closed_form),
        "delta_max_numeric": _num(peak.numeric),
        "delta_max_diagnostic": peak.diagnostic or None,
        "f_ZD_GHz": _f_zd_ghz(p),
        "quadrant": quad.label,
        "verdict": quad.verdict,
        "rho": mixing.mixing_coefficient(p, pump),
    }
    if p.is_left:
        summary["peak_gain_per_cell_estimate"] = mixing.peak_gain_per_cell(p, pump)
    return summary, {"gain": rows}


def cmd_compression(cfg, threads=None):
    pump = cfg.require("pump", "compression")
    cells = cfg.require("cells", "compression")
    c = cfg.compression
    ratios = depletion.default_ratio_grid(c["points"], c["ratio_min"], c["ratio_max"])
    result = depletion.compression_analysis(
        cfg.line, pump, cells, ratios=ratios, delta=c["delta"], settings=cfg.solver, threads=threads
    )
    rows = np.array([[pt.input_ratio, pt.small_signal_gain_db, pt.gain_db, pt.compression_db] for pt in result.points])
    summary = {
        "one_db_ratio": _num(result.one_db_ratio),
        "small_signal_gain_dB": result.small_signal_gain_db,
        "delta": result.delta,
        "f_signal_GHz": _ghz(pump.frequency * (1 - result.delta)),
        "diagnostic": result.diagnostic or None,
    }
    cols = ("input_ratio", "small_signal_gain_dB", "gain_dB", "compression_dB")
    return summary, {"compression": Curve(cols, rows)}


def cmd_double_pump(cfg, threads=None):
    drive = cfg.require("double_pump", "double-pump")
    cells = cfg.require("cells", "double-pump")
    p = cfg.line
    grid = None
    if cfg.sweep is not None:
        grid = cfg.sweep.grid() if cfg.sweep.kind == "frequency" else drive.center * (1 - cfg.sweep.grid())
    curve, m = double_pump.double_pump_gain_sweep(p, drive, cells, grid)
    rows = gain_curve_rows(curve)
    i = int(np.argmax(np.where(curve.valid, curve.cis_gain_db, -np.inf)))
    center = double_pump.double_pump_mismatch_and_rate(p, drive, drive.center)
    summary = {
        "peak_gain_dB": m.max_gain_db,
        "delta_at_peak": float(curve.delta[i]),
        "f_signal_at_peak_GHz": m.frequency_at_max / 1e9,
        "bandwidth_3dB_GHz": m.bandwidth_3db / 1e9,
        "bandwidth_20dB_GHz": m.bandwidth_20db / 1e9,
        "band_20dB_GHz": [m.band_20db.low / 1e9, m.band_20db.high / 1e9] if m.band_20db else None,
        "ripple_20dB_band_dB": _num(m.ripple_db),
        "f_ZD_GHz": _f_zd_ghz(p),
        "f_center_GHz": _ghz(drive.center),
        "dk_per_cell_center": float(center.dk) * p.cell_pitch,
    }
    return summary, {"gain": rows}


def cmd_oracle(cfg, threads=None):
    p = cfg.line
    o = cfg.oracle
    rows = []
    for f in o["frequencies"]:
        m = lattice.measure_dispersion(p, TWO_PI * f, n_cells=o["n_cells"])
        rows.append([f / 1e9, m.k_slope, m.k_continuum, m.k_discrete, m.relative_error, m.r_squared,
                     m.reflection, m.power_sign])
    rows = np.array(rows)
    cols = ("f_GHz", "k_measured_per_cell", "k_continuum_per_cell", "k_discrete_per_cell",
            "relative_error", "r_squared", "reflection", "power_sign")
    summary = {
        "n_cells": o["n_cells"],
        "max_relative_error": float(rows[:, 4].max()),
        "left_handed_observed": bool(np.all(rows[:, 7] > 0)),
    }
    return summary, {"oracle": Curve(cols, rows)}


def cmd_classify(cfg, threads=None):
    pump = cfg.require("pump", "classify")
    probe = cfg.classify["delta_probe"] or 0.05
    q = mixing.classify_quadrant(cfg.line, pump, probe)
    summary = {
        "delta_probe": probe,
        "dkl_per_cell": q.dk_linear * cfg.line.cell_pitch,
        "dknl_per_cell": q.dk_nonlinear * cfg.line.cell_pitch,
        "quadrant": q.label,
        "verdict": q.verdict,
    }
    return summary, {}


COMMANDS = {
    "dispersion": cmd_dispersion,
    "gain": cmd_gain,
    "compression": cmd_compression,
    "double-pump": cmd_double_pump,
    "oracle": cmd_oracle,
    "classify": cmd_classify,
}


def _metadata(command, config_hash):
    return {
        "version": __version__,
        "command": command,
        "config_hash": config_hash,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }


def run_command(command, cfg, threads=None):
    """Run one analysis and return its :class:`ResultBundle`."""
    summary, curves = COMMANDS[command](cfg, threads)
    return ResultBundle(command, _metadata(command, cfg.config_hash), summary, curves)


def load_preset(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("lhtwpa").joinpath(f"presets/{name}.yaml").read_text()
    doc = parse_document(text, source=f"preset {name}")
    return doc


def run_preset(name, threads=None):
    """Run every entry of a preset file; curves and summaries are keyed by run label."""
    doc = load_preset(name)
    command = doc["command"]
    summary = {"description": doc.get("description", "")}
    curves = {}
    hashes = []
    for run in doc["runs"]:
        cfg = build_config(run["config"])
        hashes.append(cfg.config_hash)
        part, part_curves = COMMANDS[command](cfg, threads)
        summary[run["label"]] = part
        for key, curve in part_curves.items():
            curves[f"{run['label']}_{key}"] = curve
    combined = hashlib.sha256("".join(hashes).encode()).hexdigest()
    return ResultBundle(f"preset {name}", _metadata(f"preset {name}", combined), summary, curves)


# -- output -----------------------------------------------------------------


def _fmt(x):
    x = float(x)
    if np.isnan(x):
        return "nan"
    return repr(x)


def curve_to_csv(curve):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(curve.columns)
    for row in curve.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit_outputs(bundle, out_dir, fmt="csv", prefix=""):
    """Write the bundle; files appear only once everything has been written.

    ``csv`` writes one CSV per curve plus ``summary.json``; ``structured``
    writes a single ``result.json`` holding metadata, summary and curves.
    """
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    doc = {"metadata": bundle.metadata, "summary": bundle.summary}
    if fmt == "csv":
        for name, curve in bundle.curves.items():
            files[f"{prefix}{name}.csv"] = curve_to_csv(curve)
        files[f"{prefix}summary.json"] = json.dumps(_jsonable(doc), indent=2) + "\n"
    elif fmt == "structured":
        doc["curves"] = {
            name: {"columns": list(c.columns), "rows": [[_num(v) for v in row] for row in c.rows]}
            for name, c in bundle.curves.items()
        }
        files[f"{prefix}result.json"] = json.dumps(_jsonable(doc), indent=2) + "\n"
    else:
        raise ConfigError(f"unknown output format {fmt!r}", where="output.format")
    staging = tempfile.mkdtemp(prefix=".lhtwpa-", dir=out_dir)
    try:
        for name, text in files.items():
            with open(os.path.join(staging, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        written = []
        for name in files:
            target = os.path.join(out_dir, name)
            os.replace(os.path.join(staging, name), target)
            written.append(target)
    finally:
        for leftover in os.listdir(staging):
            os.remove(os.path.join(staging, leftover))
        os.rmdir(staging)
    return written


# -- argument parsing -------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (default: config output.dir or .)")
    common.add_argument("--format", choices=("csv", "structured"), help="output format (default csv)")
    common.add_argument("--threads", type=int, metavar="N",
                        help="worker threads for grid sweeps (default $LHTWPA_THREADS or CPU count)")
    common.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="lhtwpa",
        description="Gain and dispersion analysis of Josephson traveling-wave parametric amplifiers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "dispersion": "wave vector and dispersion terms across the band",
        "gain": "stiff-pump gain against detuning",
        "compression": "gain against input level with pump depletion, 1-dB point",
        "double-pump": "two-pump gain profile and flat-top metrics",
        "oracle": "time-domain lattice check of the dispersion relation",
        "classify": "phase-matching quadrant at a probe detuning",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
    sp = sub.add_parser("preset", parents=[common], help="run a bundled reference operating point")
    sp.add_argument("name", choices=PRESETS)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "preset":
            bundle = run_preset(args.name, args.threads)
            out = args.out or "."
            fmt = args.format or "csv"
            prefix = ""
        else:
            cfg = load_config(args.config)
            bundle = run_command(args.command, cfg, args.threads)
            out = args.out or cfg.output.dir
            fmt = args.format or cfg.output.format
            prefix = cfg.output.prefix
        written = emit_outputs(bundle, out, fmt, prefix)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutOfBandError as exc:
        print(f"error: out of band: {exc}", file=sys.stderr)
        return EXIT_BAND
    except NumericFailure as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidParameterError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LHTWPAError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
