"""JSON run configuration: schema validation and object construction.

Rationals travel as "num/den" strings so exactness survives serialization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .drift import DriftError, law_from_config
from .fields import FieldError, Grid
from .solver import SolverConfig


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_INITIAL_KINDS = ("single_mode", "holder_profile", "gaussian_bump", "dyadic_profile", "snapshot")


@dataclass
class RunConfig:
    grid_d: int = 2
    grid_n: int = 64
    dt: float = 1e-3
    t_end: float = 0.1
    beta: float = 2.0
    cadence: int = 10
    p_list: tuple = (2.0, math.inf)
    snapshot_cadence: int | None = None
    law: dict = field(default_factory=lambda: {"law": "sqg"})
    initial: dict = field(default_factory=lambda: {"kind": "holder_profile", "alpha": "1/4"})
    seed: int = 12345
    audits: tuple = ()  # empty = all
    besov_indices: tuple = ()
    paraproduct: dict = field(default_factory=lambda: {"alpha": 0.25, "p": 2.0, "q": 2.5})
    raw: dict = field(default_factory=dict)

    def build_grid(self) -> Grid:
        return Grid(self.grid_d, self.grid_n)

    def build_law(self):
        return law_from_config(self.law)

    def build_solver_config(self) -> SolverConfig:
        return SolverConfig(
            dt=self.dt, t_end=self.t_end, beta=self.beta, law=self.build_law(),
            cadence=self.cadence, p_list=self.p_list,
            snapshot_cadence=self.snapshot_cadence,
        )


def _parse_p(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"invalid norm index {value!r}") from None
    return float(value)


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    cfg = RunConfig(raw=data)
    grid = data.get("grid", {})
    cfg.grid_d = int(grid.get("d", cfg.grid_d))
    cfg.grid_n = int(grid.get("N", grid.get("n", cfg.grid_n)))

    sol = data.get("solver", {})
    cfg.dt = float(sol.get("dt", cfg.dt))
    cfg.t_end = float(sol.get("t_end", sol.get("T_end", cfg.t_end)))
    cfg.beta = float(sol.get("beta", cfg.beta))
    cfg.cadence = int(sol.get("cadence", cfg.cadence))
    if "p_list" in sol:
        cfg.p_list = tuple(_parse_p(p) for p in sol["p_list"])
    if "snapshot_cadence" in sol and sol["snapshot_cadence"] is not None:
        cfg.snapshot_cadence = int(sol["snapshot_cadence"])

    cfg.law = dict(data.get("law", cfg.law))
    cfg.initial = dict(data.get("initial", cfg.initial))
    cfg.seed = int(data.get("seed", cfg.seed))
    cfg.audits = tuple(data.get("audits", ()))
    cfg.besov_indices = tuple(
        (float(idx["s"]), _parse_p(idx["p"]), _parse_p(idx["q"]))
        for idx in data.get("besov_indices", ())
    )
    if "paraproduct" in data:
        pp = data["paraproduct"]
        cfg.paraproduct = {"alpha": _parse_fracish(pp.get("alpha", 0.25)),
                           "p": _parse_p(pp.get("p", 2.0)),
                           "q": _parse_p(pp.get("q", 2.5))}

    # validation with pointed messages
    try:
        cfg.build_grid()
    except FieldError as exc:
        raise ConfigError(f"grid: {exc}") from None
    if cfg.dt <= 0:
        raise ConfigError("solver.dt must be positive")
    if cfg.t_end <= 0:
        raise ConfigError("solver.t_end must be positive")
    if not 1.0 < cfg.beta <= 2.0:
        raise ConfigError(f"solver.beta must lie in (1, 2], got {cfg.beta}")
    if cfg.cadence < 1:
        raise ConfigError("solver.cadence must be >= 1")
    try:
        cfg.build_law()
    except (DriftError, KeyError) as exc:
        raise ConfigError(f"law: {exc}") from None
    if cfg.initial.get("kind") not in _INITIAL_KINDS:
        raise ConfigError(
            f"initial.kind must be one of {_INITIAL_KINDS}, got {cfg.initial.get('kind')!r}")
    return cfg


def _parse_fracish(value) -> float:
    if isinstance(value, str):
        num, _, den = value.partition("/")
        return float(num) / float(den or "1")
    return float(value)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data)


def default_desk_config() -> RunConfig:
    return parse_config({
        "grid": {"d": 2, "N": 64},
        "solver": {"dt": 1e-3, "t_end": 0.3, "beta": 2.0, "cadence": 10,
                   "p_list": [2, "inf"], "snapshot_cadence": 1},
        "law": {"law": "sqg"},
        "initial": {"kind": "holder_profile", "alpha": "1/4"},
        "seed": 20240901,
    })
