"""Run configuration: TOML with dotted keys, validated before anything runs.

Example::

    scenario = "smalldata"
    seed = 7
    grid.N = 128
    grid.L = "16pi"
    params.n_fried = 16
    init.recipe = "random-smooth"
    init.amplitude = 1e-3
    step.dt = 0.05
    step.t_end = 10.0
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .initial import RECIPES
from .model import SweParams
from .spectral import Grid, build_grid

__all__ = ["ConfigError", "InitSpec", "RunConfig", "SCENARIOS", "load_config", "parse_config"]

SCENARIOS = ("linear-spectroscopy", "coercivity", "smalldata")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class InitSpec:
    recipe: str = "random-smooth"
    amplitude: float = 1e-3
    slope: float = 2.0
    r0: float = 1.0
    r_cut: float = 4.0
    band: int = 0
    axis: int | None = None


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "smalldata"
    seed: int = 0
    out: str = "runs/default"
    grid_N: int = 128
    grid_L: float = 16.0 * math.pi
    params: SweParams = field(default_factory=SweParams)
    init: InitSpec = field(default_factory=InitSpec)
    dt: float = 0.05
    t_end: float = 10.0
    safety: float = 0.5
    max_steps: int = 1_000_000
    probes: tuple[float, ...] = ()
    nonlinear: bool = True
    es_s: float = 1.0
    bands: tuple[int, ...] = (-3, -2, -1, 0, 1, 2, 3)
    trials: int = 100
    K_fraction: float = 0.5
    ratio_max: float = 10.0
    mass_tol: float = 1e-12
    rate_tol: float = 0.05

    def grid(self) -> Grid:
        return build_grid(self.grid_N, self.grid_L)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.as_dict()
        d["probes"] = list(self.probes)
        d["bands"] = list(self.bands)
        return d

    def hash(self) -> str:
        """SHA-256 of the canonical JSON form; the output path is excluded."""
        d = self.as_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_LENGTH = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$")


def _length(v) -> float:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, str):
        m = _LENGTH.match(v)
        if m:
            return (float(m.group(1)) if m.group(1) else 1.0) * math.pi
    raise ConfigError(f"grid.L must be a number or '<x>pi', got {v!r}")


_SECTIONS = {
    "grid": {"N", "L"},
    "params": {"hbar0", "mu", "f_cor", "grav", "beta", "n_fried"},
    "init": {"recipe", "amplitude", "slope", "r0", "r_cut", "band", "axis"},
    "step": {"dt", "t_end", "safety", "max_steps", "nonlinear"},
    "diagnostics": {"s", "bands", "trials", "K_fraction"},
    "checks": {"ratio_max", "mass_tol", "rate_tol"},
}
_TOP = {"scenario", "seed", "out", "probes"}


def _num(section: str, key: str, v, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key} must be numeric, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{section}.{key} must be an integer, got {v!r}")
    return kind(v)


def parse_config(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed TOML mapping."""
    for key, val in data.items():
        if key in _TOP:
            continue
        if key not in _SECTIONS:
            raise ConfigError(f"unknown key {key!r}")
        if not isinstance(val, dict):
            raise ConfigError(f"{key} must be a section")
        extra = set(val) - _SECTIONS[key]
        if extra:
            raise ConfigError(f"unknown keys in {key}: {sorted(extra)}")
    cfg = RunConfig()
    kw: dict = {}
    if "scenario" in data:
        kw["scenario"] = data["scenario"]
    if "seed" in data:
        kw["seed"] = _num("", "seed", data["seed"], int)
    if "out" in data:
        kw["out"] = str(data["out"])
    if "probes" in data:
        kw["probes"] = tuple(_num("", "probes", p) for p in data["probes"])

    g = data.get("grid", {})
    if "N" in g:
        kw["grid_N"] = _num("grid", "N", g["N"], int)
    if "L" in g:
        kw["grid_L"] = _length(g["L"])

    p = dict(data.get("params", {}))
    if p.get("n_fried") == "off":
        p["n_fried"] = None
    try:
        kw["params"] = SweParams(**{**cfg.params.as_dict(), **p})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from exc

    i = data.get("init", {})
    kw["init"] = InitSpec(**{**asdict(cfg.init), **i})

    s = data.get("step", {})
    for key in ("dt", "t_end", "safety"):
        if key in s:
            kw[key] = _num("step", key, s[key])
    if "max_steps" in s:
        kw["max_steps"] = _num("step", "max_steps", s["max_steps"], int)
    if "nonlinear" in s:
        kw["nonlinear"] = bool(s["nonlinear"])

    dg = data.get("diagnostics", {})
    if "s" in dg:
        kw["es_s"] = _num("diagnostics", "s", dg["s"])
    if "bands" in dg:
        kw["bands"] = tuple(_num("diagnostics", "bands", b, int) for b in dg["bands"])
    if "trials" in dg:
        kw["trials"] = _num("diagnostics", "trials", dg["trials"], int)
    if "K_fraction" in dg:
        kw["K_fraction"] = _num("diagnostics", "K_fraction", dg["K_fraction"])

    ch = data.get("checks", {})
    for key in ("ratio_max", "mass_tol", "rate_tol"):
        if key in ch:
            kw[key] = _num("checks", key, ch[key])

    out = cfg.with_(**kw)
    validate(out)
    return out


def validate(cfg: RunConfig) -> None:
    """Raise :class:`ConfigError` on any inconsistency."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {cfg.scenario!r}")
    try:
        grid = cfg.grid()
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    ini = cfg.init
    if ini.recipe not in RECIPES:
        raise ConfigError(f"init.recipe must be one of {RECIPES}, got {ini.recipe!r}")
    if not (ini.amplitude > 0 and math.isfinite(ini.amplitude)):
        raise ConfigError("init.amplitude must be positive")
    if not (ini.r0 > 0 and ini.r_cut > 0):
        raise ConfigError("init.r0 and init.r_cut must be positive")
    if ini.axis not in (None, 0, 1):
        raise ConfigError("init.axis must be 0 or 1")
    if not (cfg.dt > 0 and cfg.t_end >= 0 and cfg.safety > 0 and cfg.max_steps > 0):
        raise ConfigError("step: need dt > 0, t_end >= 0, safety > 0, max_steps > 0")
    if any(not 0 <= t <= cfg.t_end for t in cfg.probes):
        raise ConfigError("probes must lie in [0, t_end]")
    if cfg.trials < 1:
        raise ConfigError("diagnostics.trials must be positive")
    if not 0 <= cfg.K_fraction < 1:
        raise ConfigError("diagnostics.K_fraction must lie in [0, 1)")
    bad = [k for k in cfg.bands if not grid.k_min <= k <= grid.k_max]
    if cfg.scenario != "smalldata" and bad:
        raise ConfigError(f"bands {bad} outside [{grid.k_min}, {grid.k_max}] for this grid")
    if ini.recipe in ("single-band", "single-shell") and not grid.k_min <= ini.band <= grid.k_max:
        raise ConfigError(f"init.band {ini.band} not resolvable")


def load_config(path: str | Path, seed: int | None = None, out: str | None = None) -> RunConfig:
    """Read and validate a TOML run configuration, applying CLI overrides."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    try:
        cfg = parse_config(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if seed is not None:
        cfg = cfg.with_(seed=int(seed))
    if out is not None:
        cfg = cfg.with_(out=str(out))
    return cfg
