"""Experiment configuration: TOML file -> validated dataclasses.

Physical defaults that have no published value are collected in
``DEFAULTS`` under a version number; a config's ``[defaults]`` table may
restate or override them and ``[params]`` overrides both.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import MODES, PotentialSchedule
from .hilbert import REPRESENTATIONS, SpinBasis
from .params import PhysicalParams
from .phasespace import minimum_grid
from .protocols import KINDS, ProtocolSpec

DEFAULTS_VERSION = 1
DEFAULTS = {
    "mass": 1.0, "omega": 1.0, "hbar": 1.0, "energy": 5.0, "width": 1.0,
    "lam": 0.01, "gamma": 0.05, "nbar": 1.0,
}
# weak bath used for the protocol comparison
BATH_1K = {"lam": 0.001, "gamma": 0.005, "nbar": 0.5}

PIPELINES = ("thermodynamics", "protocols")
INITIAL_STATES = ("ground", "thermal", "vacuum", "random")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ThermoBlock:
    schedule: PotentialSchedule
    initial: str = "ground"
    relax_time: float = 0.0


@dataclass
class ExperimentConfig:
    pipeline: str
    params: PhysicalParams
    basis: SpinBasis
    representation: str = "hp"
    steps: int = 2000
    stride: int = 10
    n_theta: Optional[int] = None
    n_phi: Optional[int] = None
    output_dir: str = "out"
    seed: int = 0
    thermo: Optional[ThermoBlock] = None
    protocols: list = field(default_factory=list)
    protocol_dt: float = 0.01
    digest: str = ""
    raw: dict = field(default_factory=dict)


def _table(doc: dict, name: str) -> dict:
    value = doc.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(name, "must be a table")
    return value


def _get(table: dict, prefix: str, key: str, kind, default: Any = None, required: bool = False):
    name = f"{prefix}.{key}"
    if key not in table:
        if required:
            raise ConfigError(name, "is required")
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(name, f"expected {getattr(kind, '__name__', kind)}, got {value!r}")
    return value


def _check_keys(table: dict, prefix: str, allowed) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"{prefix}.{extra[0]}", "unknown key")


def _params(doc: dict) -> PhysicalParams:
    merged = dict(DEFAULTS)
    defaults = _table(doc, "defaults")
    version = defaults.get("version", DEFAULTS_VERSION)
    if version != DEFAULTS_VERSION:
        raise ConfigError("defaults.version", f"unsupported version {version!r}, expected {DEFAULTS_VERSION}")
    params = _table(doc, "params")
    preset = params.get("preset")
    if preset is not None:
        if preset != "bath_1k":
            raise ConfigError("params.preset", f"unknown preset {preset!r}")
        merged.update(BATH_1K)
    allowed = set(DEFAULTS) | {"beta"}
    for prefix, table in (("defaults", defaults), ("params", params)):
        _check_keys(table, prefix, allowed | {"version", "preset"})
        for key in allowed:
            if key in table:
                merged[key] = _get(table, prefix, key, float)
    try:
        return PhysicalParams(**merged)
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from None


def _schedule(table: dict) -> ThermoBlock:
    _check_keys(table, "schedule", {"mode", "tau", "c1", "c2", "initial", "relax_time"})
    mode = _get(table, "schedule", "mode", str, "gaussian-to-double-well")
    if mode not in MODES or mode == "tilt-controlled":
        raise ConfigError("schedule.mode", f"must be one of {[m for m in MODES if m != 'tilt-controlled']}")
    tau = _get(table, "schedule", "tau", float, required=True)
    initial = _get(table, "schedule", "initial", str, "ground")
    if initial not in INITIAL_STATES:
        raise ConfigError("schedule.initial", f"must be one of {INITIAL_STATES}")
    relax = _get(table, "schedule", "relax_time", float, 0.0)
    if relax < 0:
        raise ConfigError("schedule.relax_time", "must be non-negative")
    try:
        schedule = PotentialSchedule(tau, mode, _get(table, "schedule", "c1", float, -1.5),
                                     _get(table, "schedule", "c2", float, 0.2))
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from None
    return ThermoBlock(schedule, initial, relax)


_PROTOCOL_KEYS = {"kind", "tau", "c1", "c2", "amplitude", "ramp_fraction", "gamma_cool",
                  "cool_fraction", "g_min"}


def _protocol(table: dict, i: int) -> ProtocolSpec:
    prefix = f"protocols[{i}]"
    _check_keys(table, prefix, _PROTOCOL_KEYS)
    kind = _get(table, prefix, "kind", str, required=True)
    if kind not in KINDS:
        raise ConfigError(f"{prefix}.kind", f"must be one of {KINDS}")
    kwargs = {k: _get(table, prefix, k, float) for k in _PROTOCOL_KEYS - {"kind"} if k in table}
    if "tau" not in kwargs:
        raise ConfigError(f"{prefix}.tau", "is required")
    try:
        return ProtocolSpec(kind=kind, **kwargs)
    except ValueError as exc:
        raise ConfigError(prefix, str(exc)) from None


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("file", f"{source} is not valid TOML: {exc}") from None
    _check_keys(doc, "config", {"run", "defaults", "params", "basis", "integrator",
                                "phasespace", "output", "schedule", "protocols"})
    run = _table(doc, "run")
    _check_keys(run, "run", {"pipeline", "seed"})
    pipeline = _get(run, "run", "pipeline", str, required=True)
    if pipeline not in PIPELINES:
        raise ConfigError("run.pipeline", f"must be one of {PIPELINES}")
    seed = _get(run, "run", "seed", int, 0)

    params = _params(doc)
    basis_t = _table(doc, "basis")
    _check_keys(basis_t, "basis", {"N", "representation"})
    n = _get(basis_t, "basis", "N", int, 25)
    if n < 2:
        raise ConfigError("basis.N", "must be >= 2")
    basis = SpinBasis(n)
    rep = _get(basis_t, "basis", "representation", str, "hp")
    if rep not in REPRESENTATIONS:
        raise ConfigError("basis.representation", f"must be one of {REPRESENTATIONS}")

    integ = _table(doc, "integrator")
    _check_keys(integ, "integrator", {"steps", "stride", "dt"})
    steps = _get(integ, "integrator", "steps", int, 2000)
    stride = _get(integ, "integrator", "stride", int, 10)
    dt = _get(integ, "integrator", "dt", float, 0.01)
    if steps < 1:
        raise ConfigError("integrator.steps", "must be >= 1")
    if stride < 1 or steps % stride:
        raise ConfigError("integrator.stride", f"must be >= 1 and divide steps ({steps})")
    if dt <= 0:
        raise ConfigError("integrator.dt", "must be positive")

    ps = _table(doc, "phasespace")
    _check_keys(ps, "phasespace", {"n_theta", "n_phi"})
    n_theta = _get(ps, "phasespace", "n_theta", int)
    n_phi = _get(ps, "phasespace", "n_phi", int)
    min_t, min_p = minimum_grid(basis)
    if n_theta is not None and n_theta < min_t:
        raise ConfigError("phasespace.n_theta", f"must be >= {min_t} for N = {n}")
    if n_phi is not None and n_phi < min_p:
        raise ConfigError("phasespace.n_phi", f"must be >= {min_p} for N = {n}")

    out = _table(doc, "output")
    _check_keys(out, "output", {"dir"})
    output_dir = _get(out, "output", "dir", str, "out")

    cfg = ExperimentConfig(pipeline, params, basis, rep, steps, stride, n_theta, n_phi,
                           output_dir, seed, protocol_dt=dt, raw=doc,
                           digest=hashlib.sha256(text.encode()).hexdigest())
    if pipeline == "thermodynamics":
        if "schedule" not in doc:
            raise ConfigError("schedule", "is required for the thermodynamics pipeline")
        cfg.thermo = _schedule(_table(doc, "schedule"))
    else:
        protos = doc.get("protocols")
        if not isinstance(protos, list) or not protos:
            raise ConfigError("protocols", "need at least one [[protocols]] entry")
        cfg.protocols = [_protocol(p, i) for i, p in enumerate(protos)]
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("file", f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))
