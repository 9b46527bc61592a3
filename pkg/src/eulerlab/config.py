"""Experiment configuration: a flat INI file with one section per concern.

Every key has a type and a default; unknown keys and malformed values are
rejected.  ``serialize(parse(text))`` is a fixed point.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


def _floats(s: str):
    s = s.strip()
    return tuple(float(v) for v in s.split(",")) if s else ()


def _bool(s: str):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_PARSERS = {"float": float, "int": int, "bool": _bool, "str": str, "floats": _floats}


def _fmt(kind, v):
    if kind == "float":
        return repr(float(v))
    if kind == "floats":
        return ", ".join(repr(float(x)) for x in v)
    if kind == "bool":
        return "true" if v else "false"
    return str(v)


# section -> key -> (kind, default, comment)
SCHEMA = {
    "run": {
        "seed": ("int", 0, "seed for randomized batteries"),
        "deterministic": ("bool", False, "omit wall-clock data from reports"),
        "output_dir": ("str", "lab_out", "where reports and artifacts go"),
    },
    "quadrature": {
        "rel_tol": ("float", 1e-8, ""),
        "abs_tol": ("float", 1e-10, ""),
        "max_depth": ("int", 30, ""),
        "singularity_radius": ("float", 1e-3, ""),
    },
    "constants": {
        "C": ("float", 1.0, "remainder constant handed to the profile formulas (>= 1)"),
        "I": ("float", 1.0, "L1 mass bound (>= 1)"),
        "s0": ("float", 0.0, "0 means: search the default grid"),
    },
    "regions": {
        "h_grid": ("floats", tuple(10.0 ** -k for k in range(4, 13)), "s values for the h table"),
        "invariant_points": ("int", 200, "grid size for the profile inequalities"),
        "tightened_rerun": ("bool", True, "repeat h at 10x tighter tolerances"),
    },
    "kernel": {
        "battery_dir": ("str", "", "directory of patch files; empty = built-in battery"),
        "grid_n": ("int", 20, ""),
        "grid_lo": ("float", 1e-3, ""),
        "grid_hi": ("float", 0.45, ""),
        "safety": ("float", 1.5, "C_fit = safety * max ratio"),
        "cross_points": ("int", 20, "evaluation points per field for contour vs direct"),
        "axis_points": ("int", 20, ""),
        "domain_points": ("int", 50, ""),
        "determinism_points": ("int", 1000, ""),
    },
    "extremal": {
        "eps": ("floats", (1e-3, 1e-4, 1e-5, 1e-6), ""),
        "I": ("floats", (1.0, 4.0), ""),
        "probe_eps": ("floats", (0.3, 20.0), "large eps probing the containment threshold"),
        "tol": ("float", 1e-10, "relative area tolerance of the level bisection"),
    },
    "simulate": {
        "initial_eps": ("float", math.exp(-4.0), ""),
        "dt_max": ("float", 0.02, ""),
        "cfl": ("float", 0.5, ""),
        "node_spacing_min": ("float", 1e-7, ""),
        "node_spacing_max": ("float", 0.02, ""),
        "t_end": ("float", 6.0, ""),
        "proxy_window": ("float", 0.2, ""),
        "initial_nodes": ("int", 200, ""),
        "snapshot_times": ("floats", (0.0, 1.0, 2.0), ""),
        "convergence_check": ("bool", True, "rerun with dt_max and cfl halved"),
    },
    "bounds": {
        "history": ("str", "", "time-series CSV written by simulate"),
        "t_max": ("float", 10.0, ""),
        "n_points": ("int", 101, ""),
        "slack": ("float", 0.10, ""),
    },
}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in SCHEMA.items()}
        for sec, kv in self.values.items():
            if sec not in SCHEMA:
                raise ConfigError(f"unknown section [{sec}]")
            for k, v in kv.items():
                if k not in SCHEMA[sec]:
                    raise ConfigError(f"unknown key {sec}.{k}")
                full[sec][k] = v
        self.values = full
        self.validate()

    def __getitem__(self, sec):
        return self.values[sec]

    def validate(self) -> None:
        v = self.values
        if not v["regions"]["h_grid"]:
            raise ConfigError("regions.h_grid is empty")
        if any(not (0 < s <= math.exp(-4.0)) for s in v["regions"]["h_grid"]):
            raise ConfigError("regions.h_grid values must lie in (0, e^-4]")
        if not v["extremal"]["eps"] or not v["extremal"]["I"]:
            raise ConfigError("extremal.eps and extremal.I must be non-empty")
        if v["constants"]["C"] < 1 or v["constants"]["I"] < 1:
            raise ConfigError("constants.C and constants.I must be >= 1")
        if v["quadrature"]["rel_tol"] <= 0 or v["quadrature"]["abs_tol"] <= 0:
            raise ConfigError("quadrature tolerances must be positive")
        if v["kernel"]["grid_n"] < 2:
            raise ConfigError("kernel.grid_n must be >= 2")

    def serialize(self) -> str:
        out = []
        for sec, keys in SCHEMA.items():
            out.append(f"[{sec}]")
            for k, (kind, _, comment) in keys.items():
                if comment:
                    out.append(f"# {comment}")
                out.append(f"{k} = {_fmt(kind, self.values[sec][k])}")
            out.append("")
        return "\n".join(out)

    def digest(self) -> str:
        return hashlib.sha256(self.serialize().encode()).hexdigest()


def parse(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        values[sec] = {}
        for k, raw in cp[sec].items():
            if k not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{k}")
            kind = SCHEMA[sec][k][0]
            try:
                values[sec][k] = _PARSERS[kind](raw)
            except ValueError as exc:
                raise ConfigError(f"{sec}.{k}: {exc}") from None
    return ExperimentConfig(values)


def load(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
