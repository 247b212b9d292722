"""Scenario files: INI-style ``key = value`` lines under ``[section]`` headers.

Example::

    [scenario]
    task = dynamics
    model = impurity
    methods = effh, rc, uw

    [parameters]
    lambda_z = 0.8
    lambda_x = 0.8

    [sweep]
    lambda_z = 0.8, 4, 8        # explicit list
    lambda_x = 0:24:13          # start:stop:count (inclusive linspace)
    mode = grid                 # or zip

    [dynamics]
    t_max = 1000
    n_points = 2001
"""
import configparser
from dataclasses import dataclass, field
import itertools
import math
from pathlib import Path

import numpy as np

from .effh.quadrature import QuadratureConfig
from .exceptions import ConfigError

TASKS = ("dynamics", "equilibrium", "kappa_scan", "xi_scan", "rates_table",
         "chain_build", "nonuniqueness_demo")
MODELS = ("impurity", "chain")
METHODS = ("uw", "rc", "effh")

DEFAULTS = {
    "delta": 1.0,
    "lambda_z": 0.0,
    "lambda_x": 0.0,
    "lambda": 0.0,
    "omega": 8.0,
    "gamma": 0.05 / math.pi,
    "cutoff": 1000.0,
    "temperature": 1.0,
    "n_spins": 4,
    "epsilon": 0.0,
    "eps1": 0.5,
    "eps2": 0.5,
}
FLOAT_KEYS = {"delta", "lambda_z", "lambda_x", "lambda", "omega", "gamma", "cutoff",
              "temperature", "epsilon", "eps1", "eps2"}
INT_KEYS = {"n_spins"}
PARAMETER_KEYS = FLOAT_KEYS | INT_KEYS | {"rc_levels", "deltas"}

SECTION_KEYS = {
    "scenario": {"task", "model", "methods"},
    "parameters": PARAMETER_KEYS,
    "sweep": FLOAT_KEYS | {"mode"},
    "dynamics": {"t_max", "n_points", "propagator"},
    "quadrature": {"gh_order", "theta_points", "radial_order"},
}

TASK_METHODS = {"dynamics", "equilibrium"}


@dataclass
class Scenario:
    task: str
    model: str
    methods: tuple
    parameters: dict
    sweep: dict = field(default_factory=dict)  # name -> list of values
    sweep_mode: str = "grid"
    t_max: float = None
    n_points: int = 2001
    propagator: str = "expm"
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    source: str = ""

    def points(self):
        """Parameter dictionaries for every sweep point, in deterministic order."""
        if not self.sweep:
            return [dict(self.parameters)]
        names = list(self.sweep)
        if self.sweep_mode == "zip":
            combos = zip(*(self.sweep[n] for n in names))
        else:
            combos = itertools.product(*(self.sweep[n] for n in names))
        out = []
        for values in combos:
            p = dict(self.parameters)
            p.update(zip(names, values))
            out.append(p)
        return out


def _parse_float(text, where):
    t = text.strip().lower().replace(" ", "")
    try:
        if t.endswith("/pi"):
            return float(t[:-3]) / math.pi
        return float(t)
    except ValueError:
        raise ConfigError(f"{where}: cannot read {text!r} as a number") from None


def _parse_int(text, where):
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot read {text!r} as an integer") from None


def _parse_values(text, where):
    text = text.strip()
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{where}: range must be start:stop:count")
        start, stop = _parse_float(parts[0], where), _parse_float(parts[1], where)
        count = _parse_int(parts[2], where)
        if count < 1:
            raise ConfigError(f"{where}: range count must be positive")
        return [float(v) for v in np.linspace(start, stop, count)]
    values = [_parse_float(v, where) for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigError(f"{where}: empty value list")
    return values


def _key_line(path, section, key):
    # configparser drops line numbers; recover them for error messages
    try:
        lines = Path(path).read_text().splitlines()
    except OSError:
        return "?"
    current = None
    for no, line in enumerate(lines, 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
        elif current == section and s.split("=")[0].strip().lower() == key:
            return no
    return "?"


def parse_scenario(path):
    """Read and validate a scenario file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None

    for section in cp.sections():
        if section not in SECTION_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in cp[section]:
            if key not in SECTION_KEYS[section]:
                raise ConfigError(
                    f"{path}:{_key_line(path, section, key)}: unknown key {key!r} in [{section}]"
                )
    if "scenario" not in cp:
        raise ConfigError(f"{path}: missing [scenario] section")
    sc = cp["scenario"]
    task = sc.get("task", "").strip()
    if task not in TASKS:
        raise ConfigError(f"{path}: task must be one of {', '.join(TASKS)}, got {task!r}")
    model = sc.get("model", "chain" if task in ("xi_scan", "chain_build") else "impurity").strip()
    if model not in MODELS:
        raise ConfigError(f"{path}: model must be impurity or chain, got {model!r}")
    methods = tuple(m.strip() for m in sc.get("methods", "effh").split(",") if m.strip())
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"{path}: unknown method {m!r}")
    if task in TASK_METHODS and not methods:
        raise ConfigError(f"{path}: task {task} needs at least one method")

    params = dict(DEFAULTS)
    params["rc_levels"] = "auto" if task == "equilibrium" else 4
    if "parameters" in cp:
        for key, raw in cp["parameters"].items():
            where = f"{path}:{_key_line(path, 'parameters', key)}"
            if key in FLOAT_KEYS:
                params[key] = _parse_float(raw, where)
            elif key in INT_KEYS:
                params[key] = _parse_int(raw, where)
            elif key == "rc_levels":
                params[key] = "auto" if raw.strip() == "auto" else _parse_int(raw, where)
            elif key == "deltas":
                params[key] = _parse_values(raw, where)

    sweep = {}
    mode = "grid"
    if "sweep" in cp:
        for key, raw in cp["sweep"].items():
            if key == "mode":
                mode = raw.strip()
                if mode not in ("grid", "zip"):
                    raise ConfigError(f"{path}: sweep mode must be grid or zip")
                continue
            sweep[key] = _parse_values(raw, f"{path}:{_key_line(path, 'sweep', key)}")
        if mode == "zip" and len({len(v) for v in sweep.values()}) > 1:
            raise ConfigError(f"{path}: zip sweep axes must have equal lengths")

    t_max, n_points, propagator = None, 2001, "expm"
    if "dynamics" in cp:
        d = cp["dynamics"]
        if "t_max" in d:
            t_max = _parse_float(d["t_max"], f"{path}: t_max")
            if t_max <= 0:
                raise ConfigError(f"{path}: t_max must be positive")
        if "n_points" in d:
            n_points = _parse_int(d["n_points"], f"{path}: n_points")
            if n_points < 2:
                raise ConfigError(f"{path}: n_points must be at least 2")
        propagator = d.get("propagator", "expm").strip()
        if propagator not in ("expm", "rk45"):
            raise ConfigError(f"{path}: propagator must be expm or rk45")
    if task == "dynamics" and t_max is None:
        raise ConfigError(f"{path}: task dynamics requires t_max in [dynamics]")

    quad = QuadratureConfig()
    if "quadrature" in cp:
        q = cp["quadrature"]
        try:
            quad = QuadratureConfig(
                _parse_int(q.get("gh_order", str(quad.gh_order)), "gh_order"),
                _parse_int(q.get("theta_points", str(quad.theta_points)), "theta_points"),
                _parse_int(q.get("radial_order", str(quad.radial_order)), "radial_order"),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    if model == "chain":
        n = params["n_spins"]
        if n < 2 or n % 2:
            raise ConfigError(
                f"{path}: n_spins = {n}, but the periodic ring needs an even number of spins"
            )
        if "deltas" in params and len(params["deltas"]) != n:
            raise ConfigError(f"{path}: deltas lists {len(params['deltas'])} values for {n} spins")
        if task in ("dynamics", "equilibrium", "rates_table"):
            raise ConfigError(f"{path}: task {task} is only available for the impurity model")
    if isinstance(params["rc_levels"], int) and params["rc_levels"] < 2:
        raise ConfigError(f"{path}: rc_levels must be at least 2")

    return Scenario(task, model, methods, params, sweep, mode, t_max, n_points, propagator,
                    quad, str(path))
