"""Run configuration: schema-checked YAML normalised to SI.

The schema lives in ``schema/run_config.schema.json``. After validation all
quantities are converted to SI, so two files that differ only in how a value
is written (``1670`` vs ``"1670pH"``) normalise, and hash, identically.
"""

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
import yaml
from jsonschema import Draft202012Validator

from . import line_model as lm
from .depletion import IntegrationSettings
from .double_pump import DoublePumpDrive
from .errors import ConfigError, InvalidParameterError
from .mixing import PumpDrive
from .units import quantity_in

TWO_PI = 2 * np.pi


def load_schema():
    text = resources.files("lhtwpa").joinpath("schema/run_config.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = Draft202012Validator(load_schema())
    return _VALIDATOR


@dataclass(frozen=True)
class Sweep:
    """Detuning range (``kind == "delta"``) or signal range in rad/s (``"frequency"``)."""

    kind: str
    low: float
    high: float
    points: int = 2001

    def grid(self):
        return np.linspace(self.low, self.high, self.points)


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "."
    format: str = "csv"
    prefix: str = ""


@dataclass
class RunConfig:
    line: lm.LineParameters
    pump: Optional[PumpDrive] = None
    double_pump: Optional[DoublePumpDrive] = None
    cells: Optional[int] = None
    sweep: Optional[Sweep] = None
    solver: IntegrationSettings = field(default_factory=IntegrationSettings)
    compression: dict = field(default_factory=dict)
    dispersion: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    classify: dict = field(default_factory=dict)
    output: OutputSpec = field(default_factory=OutputSpec)
    semantic: dict = field(default_factory=dict, repr=False)

    @property
    def config_hash(self):
        blob = json.dumps(self.semantic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def require(self, name, command):
        if getattr(self, name) is None:
            raise ConfigError(f"section required by '{command}' is missing", where=name)
        return getattr(self, name)


def _path(parts):
    return ".".join(str(p) for p in parts) if parts else "(root)"


def _describe(error):
    if error.validator == "required":
        missing = error.message.split("'")[1] if "'" in error.message else error.message
        return ConfigError(f"missing required field '{missing}'", where=_path(list(error.absolute_path) + [missing]))
    if error.validator == "additionalProperties":
        return ConfigError(error.message, where=_path(error.absolute_path))
    if error.validator == "oneOf" and list(error.absolute_path) == ["sweep"]:
        return ConfigError(
            "sweep needs either delta_min/delta_max or f_min_GHz/f_max_GHz (not both)", where="sweep"
        )
    return ConfigError(error.message, where=_path(error.absolute_path))


def parse_document(text, source="<config>"):
    """YAML text to a mapping, reporting syntax errors by line and column."""
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"{source}: line {mark.line + 1}, column {mark.column + 1}" if mark else source
        raise ConfigError(exc.problem or str(exc), where=where) from None
    except yaml.YAMLError as exc:
        raise ConfigError(str(exc), where=source) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", where=source)
    return doc


def validate(doc):
    if "pump" in doc and "double_pump" in doc:
        raise ConfigError("'pump' and 'double_pump' are mutually exclusive; give only one", where="(root)")
    errors = sorted(_validator().iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        raise _describe(errors[0])


def _q(section, key, unit, scale, path):
    try:
        return quantity_in(section[key], unit, scale)
    except ValueError as exc:
        raise ConfigError(str(exc), where=f"{path}.{key}") from None


def build_config(doc):
    """Validated mapping to :class:`RunConfig` (all values in SI)."""
    validate(doc)
    sem = {}
    ln = doc["line"]
    line_si = {
        "junction_inductance": _q(ln, "l_j_pH", "H", 1e-12, "line"),
        "junction_capacitance": _q(ln, "c_j_fF", "F", 1e-15, "line"),
        "capacitance": _q(ln, "c_fF", "F", 1e-15, "line"),
        "cell_pitch": _q(ln, "a_um", "m", 1e-6, "line"),
        "critical_current": _q(ln, "i0_uA", "A", 1e-6, "line") if "i0_uA" in ln else None,
        "handedness": ln["handedness"],
    }
    try:
        line = lm.LineParameters(**line_si)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), where="line") from None
    sem["line"] = {**line_si, "critical_current": line.critical_current}
    cfg = RunConfig(line=line)

    if "pump" in doc:
        f = _q(doc["pump"], "f_GHz", "Hz", 1e9, "pump")
        cfg.pump = _wrap(lambda: PumpDrive(TWO_PI * f, float(doc["pump"]["ip_ratio"])), "pump")
        sem["pump"] = {"frequency_hz": f, "ip_ratio": float(doc["pump"]["ip_ratio"])}
    if "double_pump" in doc:
        d = doc["double_pump"]
        f1 = _q(d, "f1_GHz", "Hz", 1e9, "double_pump")
        f2 = _q(d, "f2_GHz", "Hz", 1e9, "double_pump")
        cfg.double_pump = _wrap(
            lambda: DoublePumpDrive(TWO_PI * f1, TWO_PI * f2, float(d["i1_ratio"]), float(d["i2_ratio"])),
            "double_pump",
        )
        sem["double_pump"] = {"f1_hz": f1, "f2_hz": f2, "i1_ratio": float(d["i1_ratio"]), "i2_ratio": float(d["i2_ratio"])}
    if "cells" in doc:
        cfg.cells = int(doc["cells"])
        sem["cells"] = cfg.cells
    if "sweep" in doc:
        s = doc["sweep"]
        points = int(s.get("points", 2001))
        if "delta_min" in s:
            cfg.sweep = Sweep("delta", float(s["delta_min"]), float(s["delta_max"]), points)
        else:
            lo = _q(s, "f_min_GHz", "Hz", 1e9, "sweep")
            hi = _q(s, "f_max_GHz", "Hz", 1e9, "sweep")
            cfg.sweep = Sweep("frequency", TWO_PI * lo, TWO_PI * hi, points)
        if not cfg.sweep.high > cfg.sweep.low:
            raise ConfigError("sweep upper bound must exceed the lower bound", where="sweep")
        sem["sweep"] = {"kind": cfg.sweep.kind, "low": cfg.sweep.low, "high": cfg.sweep.high, "points": points}
    solver = doc.get("solver", {})
    cfg.solver = _wrap(
        lambda: IntegrationSettings(
            rtol=float(solver.get("rtol", 1e-9)),
            atol=float(solver["atol_Wb"]) if "atol_Wb" in solver else None,
            max_steps=int(solver.get("max_steps", 100_000)),
        ),
        "solver",
    )
    sem["solver"] = {"rtol": cfg.solver.rtol, "atol": cfg.solver.atol, "max_steps": cfg.solver.max_steps}

    comp = doc.get("compression", {})
    cfg.compression = {
        "ratio_min": float(comp.get("ratio_min", 1e-4)),
        "ratio_max": float(comp.get("ratio_max", 0.5)),
        "points": int(comp.get("points", 41)),
        "delta": float(comp["delta"]) if "delta" in comp else None,
    }
    if cfg.compression["ratio_max"] <= cfg.compression["ratio_min"]:
        raise ConfigError("ratio_max must exceed ratio_min", where="compression")
    sem["compression"] = cfg.compression

    disp = doc.get("dispersion", {})
    f_j = line.plasma_frequency / TWO_PI
    cfg.dispersion = {
        "f_min": _q(disp, "f_min_GHz", "Hz", 1e9, "dispersion") if "f_min_GHz" in disp else 0.02 * f_j,
        "f_max": _q(disp, "f_max_GHz", "Hz", 1e9, "dispersion") if "f_max_GHz" in disp else 0.99 * f_j,
        "points": int(disp.get("points", 500)),
    }
    sem["dispersion"] = cfg.dispersion

    orc = doc.get("oracle", {})
    if "frequencies_GHz" in orc:
        freqs = orc["frequencies_GHz"]
        freqs = [_q(freqs, i, "Hz", 1e9, "oracle.frequencies_GHz") for i in range(len(freqs))]
    else:
        # short-wavelength end of the band stays where k a is small
        freqs = [x * f_j for x in (0.3, 0.38, 0.5)]
    cfg.oracle = {
        "n_cells": int(orc.get("n_cells", 100)),
        "frequencies": freqs,
    }
    sem["oracle"] = cfg.oracle

    cls = doc.get("classify", {})
    cfg.classify = {"delta_probe": float(cls["delta_probe"]) if "delta_probe" in cls else None}
    sem["classify"] = cfg.classify

    out = doc.get("output", {})
    cfg.output = OutputSpec(out.get("dir", "."), out.get("format", "csv"), out.get("prefix", ""))
    cfg.semantic = sem
    return cfg


def _wrap(make, where):
    try:
        return make()
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), where=where) from None


def load_config(path):
    """Read a YAML run configuration and return it validated, in SI units."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", where=str(path)) from None
    return build_config(parse_document(text, source=str(path)))
