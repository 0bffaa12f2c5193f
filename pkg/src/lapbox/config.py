"""Scenario configuration: flat key-value files with dotted sections.

A config is INI-like text.  Keys before any section header are top-level;
keys inside ``[sec]`` are addressed as ``sec.key`` and map to the schema
field ``sec_key``.  Values are Python literals (numbers, strings, tuples,
lists); bare words are read as strings.

    scenario = green
    d = 1
    [z]
    lam = -1.0
"""
from __future__ import annotations

import ast
import configparser
import dataclasses
from dataclasses import dataclass, fields
from typing import Any

from .errors import ConfigError

__all__ = ["SCHEMAS", "ScenarioConfig", "parse_config", "load_config", "scenario_schema"]


def _lit(s: str):
    try:
        return ast.literal_eval(s)
    except (ValueError, SyntaxError):
        return s.strip()


# ---------------------------------------------------------------- schemas

@dataclass
class GreenParams:
    d: int
    lam: float
    eps: float = 0.0
    sign: int = 1
    method: str = "auto"
    N: int = 1 << 12
    xs: Any = None
    check: str = "none"
    tol: float = 1e-8
    grid: int = 64
    dims: tuple = (1, 2, 3)
    trials: int = 3


@dataclass
class LapParams:
    d: int = 1
    lams: tuple = (1.0, 2.0, 3.0)
    sign: int = 1
    x: tuple = (0,)
    N: int = 1 << 17
    eps_schedule: tuple = (2e-3, 1e-3, 5e-4)
    richardson_order: int = 2
    tol: float = 1e-8


@dataclass
class DecayParams:
    """``d``, ``lam`` and ``k_range`` may be tuples (one entry per case)."""

    d: Any
    lam: Any
    sign: int = 1
    direction: Any = None
    window: tuple = (8, 64)
    method: str = "contour"
    margin: float = 0.25
    max_residual: float = 0.1
    k_range: tuple = (0.0, float("inf"))


@dataclass
class DispersiveParams:
    """``d`` may be a tuple; ``exponent_range`` then holds one range per entry."""

    d: Any = 1
    check: str = "both"
    t_window: tuple = (20.0, 200.0)
    n_samples: int = 24
    exponent_range: tuple = (0.0, float("inf"))
    bessel_times: tuple = (1.0, 5.0, 10.0, 25.0, 50.0)
    bessel_tol: float = 1e-9
    bessel_margin_tol: float = 1e-14


@dataclass
class OpnormParams:
    d: int = 3
    L: int = 20
    lam: float = 1.0
    eps_list: tuple = (1e-1, 1e-2, 1e-3)
    p: float = 4 / 3
    q: float = 4.0
    restarts: int = 16
    max_iter: int = 200
    change_max: float = 0.5
    blowup_min: float = 50.0
    torus_N: int = 96


@dataclass
class AssumptionsParams:
    check: str = "riesz_thorin"
    d: int = 3
    L: int = 4
    lams: tuple = (0.5, 1.0, 1.5)
    k: float = 1.0
    samples: int = 100
    restarts: int = 2
    js: tuple = (0, 1, 2, 3, 4, 5)
    p: float = 4 / 3
    identity_tol: float = 1e-12
    growth_max: float = 0.6
    dyadic_L: int = 16


@dataclass
class BoundStatesParams:
    d: int
    V_sites: Any
    V_values: Any
    expected: Any = None
    tol: float = 1e-6


@dataclass
class HolderParams:
    d: int
    V_sites: Any
    V_values: Any
    lambda0: float
    sign: int = 1
    separations: tuple = (1e-3, 1e-1, 9)
    p: float = 1.0
    delta: float = 1.0
    min_exponent: float = 0.9


@dataclass
class WaveParams:
    d: int = 2
    V_sites: Any = ((0, 0),)
    V_values: Any = (-0.5,)
    xi0: tuple = (0.25, 0.25)
    sigma: float = 8.0
    radius: float = 0.1
    t_schedule: tuple = (8.0, 16.0, 32.0)
    halving: float = 2.0
    intertwine_t: float = 16.0
    intertwine_s: float = 4.0
    intertwine_tol: float = 1e-8
    tol: float = 1e-12
    complete_R: int = 4
    complete_T: float = 64.0
    complete_dt: float = 1.0
    complete_avg_max: float = 0.2
    phi_radius: int = 4


@dataclass
class CompleteParams:
    d: int = 2
    V_sites: Any = ((0, 0),)
    V_values: Any = (-0.5,)
    R: int = 4
    T: float = 64.0
    dt: float = 1.0
    phi: str = "random"
    phi_radius: int = 4
    avg_max: float = 0.2
    tol: float = 1e-12


@dataclass
class GammaParams:
    lam: float = 1.0
    sign: int = 1
    plateau: float = 0.1
    support: float = 0.2
    order: int = 2
    b_coef: float = 0.3
    eps_grid: Any = None
    x_grid: tuple = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0)
    separations: tuple = (1e-5, 1e-2, 7)
    xi: float = 1.0
    mu: float = 0.05
    pv_tol: float = 1e-10
    sup_change_max: float = 0.1
    slope_min: float = 0.9
    growth_max: float = 1.1


@dataclass
class BsScanParams:
    d: int = 3
    weak_sites: Any = ((0, 0, 0), (1, 0, 0), (0, 1, 0))
    weak_values: Any = (0.3, 0.3, 0.3)
    strong_sites: Any = ((0, 0, 0),)
    strong_values: Any = (-6.0,)
    lam_ranges: Any = ((-1.5, -0.05, 30), (0.05, 3.8, 76))
    sign: int = 1
    threshold: float = 1e-3
    refine_levels: int = 2
    weak_floor: float = 0.5
    max_dip_width: float = 0.05


@dataclass
class RegionParams:
    k: Any = 1.5
    pairs: Any = ((0.7, 0.3),)
    exact: bool = True


SCHEMAS = {
    "green": GreenParams,
    "lap": LapParams,
    "decay": DecayParams,
    "dispersive": DispersiveParams,
    "opnorm": OpnormParams,
    "assumptions": AssumptionsParams,
    "bs-scan": BsScanParams,
    "bound-states": BoundStatesParams,
    "holder": HolderParams,
    "wave": WaveParams,
    "complete": CompleteParams,
    "gamma": GammaParams,
    "region": RegionParams,
}


def scenario_schema(name: str):
    if name not in SCHEMAS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCHEMAS)}")
    return SCHEMAS[name]


@dataclass
class ScenarioConfig:
    """A validated scenario: name, resolved parameters and master seed."""

    scenario: str
    params: Any
    seed: int = 0
    source: str | None = None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self.params)


def _validate(name: str, raw: dict):
    schema = scenario_schema(name)
    names = {f.name for f in fields(schema)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {unknown}")
    missing = [f.name for f in fields(schema)
               if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING and f.name not in raw]
    if missing:
        raise ConfigError(f"{name}: missing required keys {missing}")
    for f in fields(schema):
        if f.name in raw and f.type in ("int", "float") and not isinstance(raw[f.name], (int, float)):
            raise ConfigError(f"{name}.{f.name}: expected a number, got {raw[f.name]!r}")
    return schema(**raw)


def parse_config(text: str, scenario: str | None = None, seed: int | None = None,
                 source: str | None = None) -> ScenarioConfig:
    """Parse config text; ``scenario``/``seed`` override the file's values."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = {}
    for sec in cp.sections():
        for k, v in cp.items(sec):
            key = k if sec == "__top__" else f"{sec}_{k}"
            raw[key.replace(".", "_").replace("-", "_")] = _lit(v)
    file_scn = raw.pop("scenario", None)
    file_seed = raw.pop("seed", 0)
    name = scenario or file_scn
    if name is None:
        raise ConfigError("no scenario given")
    if scenario and file_scn and scenario != file_scn:
        raise ConfigError(f"config is for scenario {file_scn!r}, not {scenario!r}")
    s = file_seed if seed is None else seed
    if not isinstance(s, int) or s < 0 or s >= 2**64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    return ScenarioConfig(name, _validate(name, raw), s, source)


def load_config(path: str, scenario: str | None = None, seed: int | None = None) -> ScenarioConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, scenario, seed, path)
