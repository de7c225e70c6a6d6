"""Flat key-value configuration shared by the simulator, controller and CLI.

Config files hold one ``key = value`` pair per line (``#`` starts a comment).
Every key has a default; CLI flags override file values, which override the
defaults.  The ``EDMCONTROL_CONFIG`` environment variable names a default
config file.
"""

from __future__ import annotations

import os

from .abm import K_ARREST_90, WorldParams
from .control import ControllerParams, LoopConfig

__all__ = [
    "DEFAULTS",
    "CONFIG_ENV_VAR",
    "load_config",
    "resolve",
    "world_params",
    "controller_params",
    "loop_config",
]

CONFIG_ENV_VAR = "EDMCONTROL_CONFIG"

# Every tunable with its default.  Values are plain Python scalars; "none"
# in a file maps to None (used by jail_capacity for "unlimited").
DEFAULTS: dict[str, object] = {
    # world
    "grid_width": 40,
    "grid_height": 40,
    "n_citizens": 1120,
    "n_cops": 80,
    "vision": 7.0,
    "max_jail_term": 30,
    "k_arrest": K_ARREST_90,
    "jail_capacity": 470,
    "legitimacy": 0.84,
    "propaganda": 0.1,
    "cop_ratio_mode": "neighborhood",
    # legitimacy schedule
    "schedule_changes": 20,
    "legitimacy_low": 0.6,
    "legitimacy_high": 0.85,
    # controller
    "p_min": 0.06,
    "p_max": 0.6,
    "slope": 0.05,
    "active_midpoint": 50.0,
    "warmup_ticks": 3000,
    "theta": 2.0,
    # analysis
    "trapped_active_floor": 100.0,
    "trapped_min_duration": 200,
    "outburst_floor": 20.0,
    "jacobian_theta": 0.1,
    "jacobian_window": 100,
    "jacobian_stride": 10,
    "legitimacy_threshold": 0.7,
}


def _coerce(key: str, raw: str):
    default = DEFAULTS[key]
    token = raw.strip()
    if token.lower() in ("none", "unlimited"):
        return None
    if isinstance(default, bool):
        return token.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int) and not isinstance(default, bool):
        return int(token)
    if isinstance(default, float):
        return float(token)
    if default is None:  # jail_capacity: unlimited by default, else a count
        return int(token)
    return token


def load_config(path) -> dict[str, object]:
    """Parse a key-value config file, validating keys against the defaults."""
    values: dict[str, object] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in DEFAULTS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def resolve(path=None, overrides: dict[str, object] | None = None) -> dict[str, object]:
    """Merge defaults, an optional config file, and explicit overrides.

    With no explicit path, the file named by ``EDMCONTROL_CONFIG`` (if set)
    is loaded.
    """
    merged = dict(DEFAULTS)
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is not None:
        merged.update(load_config(path))
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise KeyError(f"unknown config key {key!r}")
        if value is not None:
            merged[key] = value
    return merged


def world_params(cfg: dict[str, object]) -> WorldParams:
    return WorldParams(
        grid_width=cfg["grid_width"],
        grid_height=cfg["grid_height"],
        n_citizens=cfg["n_citizens"],
        n_cops=cfg["n_cops"],
        vision=cfg["vision"],
        max_jail_term=cfg["max_jail_term"],
        k_arrest=cfg["k_arrest"],
        jail_capacity=cfg["jail_capacity"],
        legitimacy=cfg["legitimacy"],
        propaganda=cfg["propaganda"],
        cop_ratio_mode=cfg["cop_ratio_mode"],
    )


def controller_params(cfg: dict[str, object]) -> ControllerParams:
    return ControllerParams(
        p_min=cfg["p_min"],
        p_max=cfg["p_max"],
        slope=cfg["slope"],
        active_midpoint=cfg["active_midpoint"],
    )


def loop_config(cfg: dict[str, object]) -> LoopConfig:
    return LoopConfig(warmup_ticks=cfg["warmup_ticks"], theta=cfg["theta"])
