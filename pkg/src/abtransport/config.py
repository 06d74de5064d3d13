"""Scenario configuration: parsing, validation with field paths, and resolution."""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from .bath import BathSpec, LeadSpec
from .hamiltonian import RingSpec
from .liouvillian import Numerics, SystemSpec
from .transport import NOISE_VARIANTS, default_taus

OBSERVABLES = ("current", "noise", "waiting", "transient", "spectrum", "occupations", "kappa", "rates", "fom")
AXIS_NAMES = ("phi", "gamma", "eps3", "temperature", "mu1", "mu2")
FORMATS = ("csv", "json")
MAX_AXES = 2


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def to_dict(self):
        return {"name": self.name, "values": list(self.values)}


@dataclass(frozen=True)
class Settings:
    omegas: tuple = tuple(np.linspace(0.0, 5.0, 101))
    taus: tuple = ()
    reservoir: int = 2
    n_in: int = 1
    noise_variant: str = "nojump"
    area: float = 1e-12
    gamma0_si: float = 1e4


@dataclass(frozen=True)
class ScenarioConfig:
    system: SystemSpec
    sweep: tuple = ()
    observables: tuple = ("current",)
    directory: str | None = None
    format: str = "csv"
    numerics: Numerics = field(default_factory=Numerics)
    settings: Settings = field(default_factory=Settings)
    resolved: dict = field(default_factory=dict, compare=False, repr=False)


DEFAULT_SYSTEM = {
    "eps": [3.0, 4.0, 3.0],
    "hoppings": [1.0, 1.0, 1.0],
    "phi": 0.0,
    "bath": {"gamma": 0.1, "omega_c": 10.0, "temperature": 3.0, "imag_sign": -1},
    "leads": [
        {"gamma0": 0.005, "omega0": 2.0, "omega_c": 10.0, "mu": 3.5, "temperature": 3.0},
        {"gamma0": 0.005, "omega0": 2.0, "omega_c": 10.0, "mu": 1.5, "temperature": 3.0},
    ],
}
DEFAULT_NUMERICS = {
    "mode": "nonsecular",
    "bath_lamb_shift": True,
    "lead_lamb_shift": False,
    "lead_frequency": "column",
    "detailed_balance_skew": 0.0,
}
DEFAULT_SETTINGS = {
    "omega": {"start": 0.0, "stop": 5.0, "count": 101},
    "tau": {"t_max": 20.0, "n_log": 60, "n_lin": 400},
    "reservoir": 2,
    "n_in": 1,
    "noise_variant": "nojump",
    "area": 1e-12,
    "gamma0_si": 1e4,
}
TOP_KEYS = ("system", "sweep", "observables", "output", "numerics", "settings")


def _merge(defaults, given, path):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(path, "expected a mapping")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"{path}.{key}", f"unknown key (allowed: {', '.join(defaults)})")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, f"{path}.{key}")
        else:
            out[key] = value
    return out


def _number(value, path, *, minimum=None, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(path, f"must be positive, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value!r}")
    return int(value) if integer else float(value)


def _triple(value, path, **kw):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(path, "expected a list of three numbers")
    return tuple(_number(v, f"{path}[{i}]", **kw) for i, v in enumerate(value))


def _build_system(sysd, path="system") -> SystemSpec:
    eps = _triple(sysd["eps"], f"{path}.eps")
    hops = _triple(sysd["hoppings"], f"{path}.hoppings", minimum=0.0)
    phi = _number(sysd["phi"], f"{path}.phi")
    b = sysd["bath"]
    bath = BathSpec(
        gamma=_number(b["gamma"], f"{path}.bath.gamma", minimum=0.0),
        omega_c=_number(b["omega_c"], f"{path}.bath.omega_c", positive=True),
        temperature=_number(b["temperature"], f"{path}.bath.temperature", positive=True),
        imag_sign=int(_number(b["imag_sign"], f"{path}.bath.imag_sign", integer=True)),
    )
    if bath.imag_sign not in (-1, 1):
        raise ConfigError(f"{path}.bath.imag_sign", "must be -1 or +1")
    leads_in = sysd["leads"]
    if not isinstance(leads_in, list) or len(leads_in) != 2:
        raise ConfigError(f"{path}.leads", "expected exactly two leads")
    leads = []
    for i, ld in enumerate(leads_in):
        lp = f"{path}.leads[{i}]"
        ld = _merge(DEFAULT_SYSTEM["leads"][i], ld, lp)
        leads.append(
            LeadSpec(
                gamma0=_number(ld["gamma0"], f"{lp}.gamma0", minimum=0.0),
                omega0=_number(ld["omega0"], f"{lp}.omega0"),
                omega_c_lead=_number(ld["omega_c"], f"{lp}.omega_c", positive=True),
                mu=_number(ld["mu"], f"{lp}.mu"),
                temperature=_number(ld["temperature"], f"{lp}.temperature", positive=True),
            )
        )
    return SystemSpec(ring=RingSpec(eps=eps, j0=hops, phi=phi), leads=tuple(leads), bath=bath)


def _build_axis(ax, path) -> Axis:
    if not isinstance(ax, dict):
        raise ConfigError(path, "expected a mapping")
    name = ax.get("name")
    if name not in AXIS_NAMES:
        raise ConfigError(f"{path}.name", f"unknown parameter {name!r} (allowed: {', '.join(AXIS_NAMES)})")
    extra = set(ax) - {"name", "start", "stop", "count", "values"}
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
    if "values" in ax:
        if any(k in ax for k in ("start", "stop", "count")):
            raise ConfigError(path, "give either values or start/stop/count")
        vals = ax["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{path}.values", "expected a nonempty list")
        values = tuple(_number(v, f"{path}.values[{i}]") for i, v in enumerate(vals))
    else:
        for key in ("start", "stop", "count"):
            if key not in ax:
                raise ConfigError(f"{path}.{key}", "missing")
        start = _number(ax["start"], f"{path}.start")
        stop = _number(ax["stop"], f"{path}.stop")
        count = _number(ax["count"], f"{path}.count", integer=True, minimum=1)
        values = tuple(float(v) for v in np.linspace(start, stop, count))
    if name == "gamma" and min(values) < 0:
        raise ConfigError(f"{path}", "gamma must be nonnegative")
    if name == "temperature" and min(values) <= 0:
        raise ConfigError(f"{path}", "temperature must be positive")
    return Axis(name=name, values=values)


def load_config(data: dict) -> ScenarioConfig:
    """Validate a nested mapping and expand all defaults."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping")
    for key in data:
        if key not in TOP_KEYS:
            raise ConfigError(key, f"unknown key (allowed: {', '.join(TOP_KEYS)})")
    sysd = _merge(DEFAULT_SYSTEM, data.get("system"), "system")
    system = _build_system(sysd)
    sysd["leads"] = [_merge(DEFAULT_SYSTEM["leads"][i], ld, f"system.leads[{i}]") for i, ld in enumerate(sysd["leads"])]

    sweep_in = data.get("sweep") or []
    if not isinstance(sweep_in, list):
        raise ConfigError("sweep", "expected a list of axes")
    if len(sweep_in) > MAX_AXES:
        raise ConfigError("sweep", f"at most {MAX_AXES} axes are supported, got {len(sweep_in)}")
    axes = tuple(_build_axis(ax, f"sweep[{i}]") for i, ax in enumerate(sweep_in))
    if len({a.name for a in axes}) != len(axes):
        raise ConfigError("sweep", "axes must name distinct parameters")

    obs = data.get("observables", ["current"])
    if not isinstance(obs, list) or not obs:
        raise ConfigError("observables", "expected a nonempty list")
    for i, name in enumerate(obs):
        if name not in OBSERVABLES:
            raise ConfigError(f"observables[{i}]", f"unknown observable {name!r} (allowed: {', '.join(OBSERVABLES)})")
    if "fom" in obs:
        phi_axes = [a for a in axes if a.name == "phi"]
        if not phi_axes or len(phi_axes[0].values) < 5:
            raise ConfigError("observables", "fom needs a phi axis with at least five points")
        steps = np.diff(phi_axes[0].values)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ConfigError("sweep", "fom needs a uniform phi axis")

    out = data.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output", "expected a mapping")
    for key in out:
        if key not in ("directory", "format"):
            raise ConfigError(f"output.{key}", "unknown key")
    fmt = out.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError("output.format", f"expected one of {FORMATS}, got {fmt!r}")
    directory = out.get("directory")
    if directory is not None and not isinstance(directory, str):
        raise ConfigError("output.directory", "expected a path string")

    numd = _merge(DEFAULT_NUMERICS, data.get("numerics"), "numerics")
    try:
        numerics = Numerics(
            mode=numd["mode"],
            bath_lamb_shift=bool(numd["bath_lamb_shift"]),
            lead_lamb_shift=bool(numd["lead_lamb_shift"]),
            lead_frequency=numd["lead_frequency"],
            detailed_balance_skew=_number(numd["detailed_balance_skew"], "numerics.detailed_balance_skew"),
        )
    except ValueError as exc:
        raise ConfigError("numerics", str(exc)) from None

    setd = _merge(DEFAULT_SETTINGS, data.get("settings"), "settings")
    om = setd["omega"]
    omegas = np.linspace(
        _number(om["start"], "settings.omega.start"),
        _number(om["stop"], "settings.omega.stop"),
        _number(om["count"], "settings.omega.count", integer=True, minimum=1),
    )
    tau = setd["tau"]
    taus = default_taus(
        _number(tau["t_max"], "settings.tau.t_max", positive=True),
        _number(tau["n_log"], "settings.tau.n_log", integer=True, minimum=1),
        _number(tau["n_lin"], "settings.tau.n_lin", integer=True, minimum=2),
    )
    for key in ("reservoir", "n_in"):
        if setd[key] not in (1, 2):
            raise ConfigError(f"settings.{key}", "must be 1 or 2")
    if setd["noise_variant"] not in NOISE_VARIANTS:
        raise ConfigError("settings.noise_variant", f"expected one of {NOISE_VARIANTS}")
    settings = Settings(
        omegas=tuple(float(w) for w in omegas),
        taus=tuple(float(t) for t in taus),
        reservoir=int(setd["reservoir"]),
        n_in=int(setd["n_in"]),
        noise_variant=setd["noise_variant"],
        area=_number(setd["area"], "settings.area", positive=True),
        gamma0_si=_number(setd["gamma0_si"], "settings.gamma0_si", positive=True),
    )

    resolved = {
        "system": sysd,
        "sweep": [a.to_dict() for a in axes],
        "observables": list(obs),
        "output": {"directory": directory, "format": fmt},
        "numerics": numd,
        "settings": setd,
    }
    return ScenarioConfig(
        system=system,
        sweep=axes,
        observables=tuple(obs),
        directory=directory,
        format=fmt,
        numerics=numerics,
        settings=settings,
        resolved=resolved,
    )


def read_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"not valid YAML ({exc})") from None
    return data or {}


def apply_override(data: dict, assignment: str) -> dict:
    """Apply ``a.b.c=value`` (value parsed as YAML) to a nested mapping."""
    if "=" not in assignment:
        raise ConfigError(assignment, "override must look like key.path=value")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ConfigError(key, "empty key component")
    data = copy.deepcopy(data)
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(key, f"{part} is not a mapping")
    node[parts[-1]] = yaml.safe_load(raw)
    return data


def apply_axis(spec: SystemSpec, name: str, value: float) -> SystemSpec:
    if name == "phi":
        return spec.with_phi(value)
    if name == "gamma":
        return spec.with_gamma(value)
    if name == "eps3":
        eps = spec.ring.eps
        return replace(spec, ring=spec.ring.replace(eps=(eps[0], eps[1], value)))
    if name == "temperature":
        return spec.with_temperature(value)
    if name in ("mu1", "mu2"):
        k = int(name[-1]) - 1
        leads = list(spec.leads)
        leads[k] = replace(leads[k], mu=value)
        return replace(spec, leads=tuple(leads))
    raise KeyError(name)


def numerics_dict(numerics: Numerics) -> dict:
    return asdict(numerics)
