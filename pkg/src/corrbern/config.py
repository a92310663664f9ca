"""Declarative run configuration.

One INI-style text file with [model], [experiment], [verify], and
[output] sections; unknown sections or keys are rejected.  Every optional
key has a documented default (see README for the full table).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError
from .montecarlo import SHARD_SIZE_DEFAULT
from .process import ModelParams, PMF_DEFAULT_CAP
from .rng import BIT_GENERATORS, DEFAULT_RNG

_MISSING = object()


def _parse_int_list(s: str) -> list[int]:
    return [int(tok) for tok in s.replace(",", " ").split()]


def _parse_float_list(s: str) -> list[float]:
    return [float(tok) for tok in s.replace(",", " ").split()]


# section -> key -> (converter, default); _MISSING marks required keys.
_SCHEMA = {
    "model": {
        "theta": (float, _MISSING),
        "p": (float, _MISSING),
        "alpha": (float, None),  # defaults to p
    },
    "experiment": {
        "horizon": (int, 10_000),
        "replicates": (int, 1000),
        "master_seed": (int, 20260809),
        "checkpoints": (str, "geometric"),
        "checkpoint_first": (int, 100),
        "checkpoint_ratio": (float, 1.2),
        "retain": (str, "summaries-only"),
        "rng": (str, DEFAULT_RNG),
        "shard_size": (int, SHARD_SIZE_DEFAULT),
        "pmf_cap": (int, PMF_DEFAULT_CAP),
    },
    "verify": {
        "theorems": (str, "auto"),
        "grid_min": (float, -4.0),
        "grid_max": (float, 4.0),
        "grid_points": (int, 41),
        "lln_tol": (float, 0.02),
        "ks_tol": (float, None),  # regime default: 0.01 diffusive, 0.02 critical
        "var_tol": (float, None),
        "asclt_horizon": (int, None),  # defaults to horizon
        "asclt_tol": (float, 0.15),
        "qsl_orders": (_parse_int_list, [1, 2]),
        "qsl_tol": (float, 0.2),
        "lil_paths": (int, 100),
        "lil_horizon": (int, None),  # defaults to horizon
        "lil_min_n": (int, 1000),
        "lil_lo": (float, 0.2),
        "lil_hi": (float, 1.5),
        "lil_frac": (float, 0.95),
        "cov_s": (float, 0.25),
        "cov_t": (float, 1.0),
        "cov_tol": (float, 0.07),
        "l_m2_tol": (float, 0.05),
        "fluct_n": (int, None),  # defaults to horizon // 100
        "fluct_var_tol": (float, 0.15),
        "fluct_ks_tol": (float, 0.03),
        "profile_t": (_parse_float_list, [0.25, 0.5, 1.0]),
    },
    "output": {
        "directory": (str, "out"),
        "formats": (str, "both"),
    },
}


@dataclass
class Config:
    model: ModelParams
    experiment: dict
    verify: dict
    output: dict
    source: str = ""

    @property
    def checkpoints(self) -> np.ndarray:
        return resolve_checkpoints(
            self.experiment["checkpoints"],
            self.experiment["horizon"],
            self.experiment["checkpoint_first"],
            self.experiment["checkpoint_ratio"],
        )


def resolve_checkpoints(spec: str, horizon: int, first: int, ratio: float) -> np.ndarray:
    """Checkpoint rule: 'geometric' (default), 'dense', or explicit integers."""
    spec = spec.strip()
    if spec == "dense":
        return np.arange(1, horizon + 1, dtype=np.int64)
    if spec == "geometric":
        if ratio <= 1.0:
            raise ConfigurationError("checkpoint_ratio must exceed 1")
        pts = []
        n = min(first, horizon)
        while n < horizon:
            pts.append(n)
            n = max(n + 1, math.ceil(n * ratio))
        pts.append(horizon)
        return np.unique(np.asarray(pts, dtype=np.int64))
    try:
        explicit = _parse_int_list(spec)
    except ValueError:
        raise ConfigurationError(f"cannot parse checkpoints {spec!r}")
    if not explicit:
        raise ConfigurationError("empty checkpoint list")
    return np.unique(np.asarray(explicit, dtype=np.int64))


def parse_config(path: str) -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"cannot read config file {path!r}")
    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r} in section [{section}]")
            conv = _SCHEMA[section][key][0]
            try:
                values[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {section}.{key}: {raw!r} ({exc})")
    for section, keys in _SCHEMA.items():
        sec = values.setdefault(section, {})
        for key, (_, default) in keys.items():
            if key not in sec:
                if default is _MISSING:
                    raise ConfigurationError(f"missing required key {section}.{key}")
                sec[key] = default

    model_sec = values["model"]
    alpha = model_sec["alpha"] if model_sec["alpha"] is not None else model_sec["p"]
    try:
        model = ModelParams(theta=model_sec["theta"], p=model_sec["p"], alpha=alpha)
    except ValueError as exc:
        raise ConfigurationError(str(exc))

    exp = values["experiment"]
    if exp["retain"] not in ("summaries-only", "per-replicate-values", "full-paths"):
        raise ConfigurationError(f"invalid retain mode {exp['retain']!r}")
    if exp["rng"] not in BIT_GENERATORS:
        raise ConfigurationError(f"unknown rng {exp['rng']!r}")

    ver = values["verify"]
    if ver["asclt_horizon"] is None:
        ver["asclt_horizon"] = exp["horizon"]
    if ver["lil_horizon"] is None:
        ver["lil_horizon"] = exp["horizon"]
    if ver["fluct_n"] is None:
        ver["fluct_n"] = max(1, exp["horizon"] // 100)

    out = values["output"]
    if out["formats"] not in ("csv", "json", "both"):
        raise ConfigurationError(f"formats must be csv, json, or both, got {out['formats']!r}")

    return Config(
        model=model,
        experiment=exp,
        verify=ver,
        output=out,
        source=str(path),
    )
