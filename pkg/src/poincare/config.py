"""Flat ``key = value`` experiment configs with per-command sections.

    # comment
    seed = 3            # top-level keys apply to every command
    [estimate]
    n = 500
    c_lambda = 0.1, 1, 10

Keys are validated against :data:`SCHEMA`; errors carry the offending line number.
"""

import hashlib
import math
import json
from dataclasses import dataclass
from typing import Any, Dict, Optional

from .errors import InputError


class ConfigError(InputError):
    pass


def _floats(s):
    return [float(x) for x in s.replace(";", ",").split(",") if x.strip()]


def _ints(s):
    return [int(x) for x in s.replace(";", ",").split(",") if x.strip()]


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    return None if s.strip().lower() in ("", "none") else float(s)


PARSERS = {"int": int, "float": float, "str": str.strip, "floats": _floats, "ints": _ints, "bool": _bool,
           "opt_float": _opt_float}


@dataclass(frozen=True)
class Key:
    type: str
    default: Any
    help: str


COMMON = {
    "seed": Key("int", 0, "master seed; data, features and paths derive from it"),
    "out": Key("str", "", "result CSV path (stdout when empty)"),
    "threads": Key("int", 1, "worker threads for repetitions and grid points"),
    "record_timing": Key("bool", False, "fill the wall_time column (breaks byte-identical reruns)"),
}

DATA = {
    "distribution": Key("str", "gaussian", "gaussian | mixture | exponential | three_gaussians | file"),
    "variances": Key("floats", [1.0], "diagonal covariance of the centered gaussian; its length sets d"),
    "mixture_a": Key("float", 1.0, "separation a of the 1-D mixture N(-a/2, s^2), N(a/2, s^2)"),
    "mixture_sigma": Key("float", 0.1, "component standard deviation s of the 1-D mixture"),
    "data": Key("str", "", "CSV sample file for distribution = file"),
}

KERNEL = {
    "gamma": Key("float", 1.0, "Gaussian kernel bandwidth in exp(-gamma |x - y|^2)"),
    "lambda_exponent": Key("float", 1.0, "lambda = C * 10^k / n^exponent"),
    "M": Key("int", 2000, "number of random features (method = rf)"),
    "rf_seed": Key("int", 0, "seed of the random feature map"),
}

SCHEMA: Dict[str, Dict[str, Key]] = {
    "estimate": {
        **COMMON, **DATA, **KERNEL,
        "method": Key("str", "exact", "exact | rf | dm"),
        "n": Key("int", 500, "sample size (ignored for distribution = file)"),
        "reps": Key("int", 1, "independent datasets"),
        "c_lambda": Key("floats", [1.0], "grid of C in lambda = C * 10^k / n"),
        "lambda_decades": Key("ints", [0], "grid of k in lambda = C * 10^k / n"),
        "c_eps": Key("floats", [0.5], "grid of C in eps = C / n^(1/4) (method = dm)"),
        "oracle": Key("opt_float", None, "known constant; selects the grid point with least mean |error|"),
    },
    "sweep-n": {
        **COMMON, **DATA, **KERNEL,
        "method": Key("str", "exact", "kernel estimator compared with diffusion maps: exact | rf"),
        "n_grid": Key("ints", [50, 100, 200, 400, 800], "sample sizes"),
        "reps": Key("int", 20, "repetitions per n"),
        "c_lambda": Key("floats", [0.01, 0.1, 1.0, 10.0, 100.0], "grid of C in lambda = C / n"),
        "c_eps": Key("floats", [0.1, 0.2, 0.5, 1.0, 2.0], "grid of C in eps = C / n^(1/4)"),
        "oracle": Key("opt_float", 1.0, "reference constant used to tune C per n"),
    },
    "mixture-growth": {
        **COMMON, **KERNEL,
        "method": Key("str", "exact", "exact | rf"),
        "a_grid": Key("floats", [0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2], "separations a"),
        "sigma": Key("float", 0.1, "component standard deviation"),
        "n": Key("int", 500, "sample size"),
        "reps": Key("int", 1, "datasets per separation; the median enters the fit"),
        "c_lambda": Key("float", 1.0, "lambda = C / n"),
    },
    "learn-rc": {
        **COMMON,
        "method": Key("str", "rf", "only rf is supported"),
        "dataset": Key("str", "three_gaussians", "three_gaussians | two_gaussians | isotropic | file"),
        "data": Key("str", "", "CSV sample file for dataset = file"),
        "n": Key("int", 200, "sample size"),
        "sigma": Key("float", 0.1, "component standard deviation of the synthetic mixtures"),
        "p": Key("int", 1, "dimension of the reaction coordinate"),
        "M": Key("int", 200, "random features"),
        "gamma": Key("float", 1.0, "kernel bandwidth"),
        "c_lambda": Key("float", 1.0, "lambda = C / n"),
        "steps": Key("int", 100, "ascent iterations per restart"),
        "step_size": Key("float", 0.1, "initial step before backtracking"),
        "restarts": Key("int", 5, "random restarts"),
        "backtracking": Key("bool", True, "halve the step until the objective does not decrease"),
        "sweep": Key("bool", True, "also scan all line directions (2-D data, p = 1)"),
        "sweep_points": Key("int", 90, "angles in [0, pi) for the scan"),
        "model_out": Key("str", "", "model JSON path (default: <out>.model.json)"),
    },
    "oracle": {
        **COMMON,
        "method": Key("str", "exact", "estimator cross-checked against the oracle: exact | rf"),
        "a": Key("float", 0.25, "target N(0, 1/(4a))"),
        "b": Key("float", 1.0, "kernel exp(-b (x - y)^2); equals gamma"),
        "m": Key("int", 60, "truncation: 2m + 2 basis functions"),
        "kappas": Key("floats", [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6], "regularizations tabulated"),
        "check_kappas": Key("floats", [1e-2, 1e-3], "regularizations cross-checked with the estimator"),
        "n_check": Key("int", 2000, "sample size of the cross-check"),
        "reps": Key("int", 1, "cross-check datasets"),
        "M": Key("int", 2000, "random features (method = rf)"),
        "rf_seed": Key("int", 0, "seed of the random feature map"),
    },
    "langevin-check": {
        **COMMON,
        "method": Key("str", "exact", "estimator for the double-well constant: exact | rf"),
        "potential": Key("str", "ou", "ou | double_well"),
        "variance": Key("float", 1.0, "stationary variance of the OU process"),
        "mixture_a": Key("float", 1.0, "double well: mixture N(-a/2, s^2), N(a/2, s^2)"),
        "mixture_sigma": Key("float", 0.3, "double well: component standard deviation s"),
        "t_max": Key("float", 2.0, "last time of the grid"),
        "t_points": Key("int", 10, "times in [0, t_max]"),
        "dt": Key("float", 1e-3, "largest Euler-Maruyama step; shrunk to divide the time-grid spacing"),
        "n_outer": Key("int", 2000, "starting points drawn from the target"),
        "n_inner": Key("int", 8, "paths per starting point"),
        "n_estimate": Key("int", 2000, "samples for the estimated constant (double well)"),
        "gamma": Key("float", 1.0, "kernel bandwidth"),
        "c_lambda": Key("float", 1.0, "lambda = C / n_estimate"),
        "M": Key("int", 2000, "random features (method = rf)"),
        "rf_seed": Key("int", 0, "seed of the random feature map"),
    },
}

COMMANDS = tuple(SCHEMA)


@dataclass
class RawEntry:
    value: str
    line: Optional[int]


def parse_text(text, source="<config>"):
    """Split config text into ``{section: {key: RawEntry}}``; top-level keys go to section ``""``."""
    sections: Dict[str, Dict[str, RawEntry]] = {"": {}}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
            current = line[1:-1].strip()
            if current not in SCHEMA:
                raise ConfigError(f"{source}:{lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        sections[current][key] = RawEntry(value, lineno)
    return sections


def resolve(command, sections=None, overrides=None, source="<config>"):
    """Typed config for ``command``: defaults, then top-level keys, the command's section, overrides."""
    if command not in SCHEMA:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMA[command]
    sections = sections or {"": {}}
    merged: Dict[str, RawEntry] = {}
    for key, entry in sections.get("", {}).items():
        if key in schema:
            merged[key] = entry
        elif not any(key in s for s in SCHEMA.values()):
            raise ConfigError(f"{source}:{entry.line}: unknown key {key!r}")
    for key, entry in sections.get(command, {}).items():
        if key not in schema:
            raise ConfigError(f"{source}:{entry.line}: unknown key {key!r} for [{command}]")
        merged[key] = entry
    for key, value in (overrides or {}).items():
        if key not in schema:
            raise ConfigError(f"override: unknown key {key!r} for {command}")
        merged[key] = RawEntry(str(value), None)

    cfg = {}
    for key, spec in schema.items():
        if key not in merged:
            cfg[key] = spec.default
            continue
        entry = merged[key]
        where = f"{source}:{entry.line}" if entry.line is not None else "override"
        try:
            cfg[key] = PARSERS[spec.type](entry.value)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r} ({spec.type}): {exc}") from exc
        values = cfg[key] if isinstance(cfg[key], list) else [cfg[key]]
        if any(isinstance(x, float) and not math.isfinite(x) for x in values):
            raise ConfigError(f"{where}: {key!r} must be finite")
    return cfg


def load(command, path=None, overrides=None):
    if path is None:
        return resolve(command, None, overrides)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return resolve(command, parse_text(text, str(path)), overrides, str(path))


def canonical(cfg) -> str:
    """Deterministic serialization; output paths and the thread count are excluded."""
    core = {k: v for k, v in cfg.items() if k not in ("out", "model_out", "threads")}
    return json.dumps(core, sort_keys=True, separators=(",", ":"))


def config_hash(cfg) -> str:
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()[:16]


def describe(command) -> str:
    """Key reference for one command, one line per key."""
    lines = [f"[{command}]"]
    for key, spec in SCHEMA[command].items():
        default = ", ".join(map(str, spec.default)) if isinstance(spec.default, list) else spec.default
        lines.append(f"{key} = {default}    # {spec.type}: {spec.help}")
    return "\n".join(lines)
