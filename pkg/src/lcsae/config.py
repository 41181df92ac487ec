"""Experiment configuration: flat key=value files covering every learning
parameter plus run/dataset settings.  Unknown keys are rejected."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    # learning parameters
    N: int = 500
    P_init: bool = True
    epsilon0: float = 0.01
    beta: float = 0.1
    alpha: float = 1.0
    nu: float = 10.0
    delta: float = 0.1
    theta_del: int = 20
    F_I: float = 0.01
    epsilon_I: float = 0.0
    F_R: float = 0.1
    epsilon_R: float = 1.0
    theta_EA: int = 50
    lam: int = 2  # config key "lambda"
    chi: float = 0.0
    mu_min: float = 1e-4
    omega: float = 0.9
    h_I: int = 1
    h_M: int = 5
    # structural/run settings
    h_max: int | None = None
    connection_mutation: bool = False
    mode: str = "xcsf"  # "xcsf" or "global_ea"
    stale_limit: int = 10000
    match_threshold: float = 0.5
    seed: int = 0
    trials: int = 100000
    checkpoint_interval: int = 1000
    # dataset settings
    dataset: str = ""
    dataset_format: str = ""  # "csv", "idx", or "" to infer from extension
    has_label_column: bool = False
    split_ratio: float = 0.9
    image_shape: tuple | None = None

    @property
    def global_ea(self) -> bool:
        return self.mode == "global_ea"


# config-file key -> dataclass field ("lambda" is a Python keyword)
_KEY_TO_FIELD = {f.name: f.name for f in fields(ExperimentConfig)}
_KEY_TO_FIELD["lambda"] = "lam"
del _KEY_TO_FIELD["lam"]
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}


def _parse_bool(s):
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_opt_int(s):
    if s.lower() in ("", "none"):
        return None
    return int(s)


def _parse_opt_shape(s):
    if s.lower() in ("", "none"):
        return None
    parts = tuple(int(p) for p in s.split(","))
    if len(parts) == 2:
        parts = parts + (1,)
    if len(parts) != 3:
        raise ValueError(f"image_shape must be H,W or H,W,C: {s!r}")
    return parts


_PARSERS = {
    "N": int, "P_init": _parse_bool, "epsilon0": float, "beta": float,
    "alpha": float, "nu": float, "delta": float, "theta_del": int,
    "F_I": float, "epsilon_I": float, "F_R": float, "epsilon_R": float,
    "theta_EA": int, "lam": int, "chi": float, "mu_min": float,
    "omega": float, "h_I": int, "h_M": int,
    "h_max": _parse_opt_int, "connection_mutation": _parse_bool,
    "mode": str, "stale_limit": int, "match_threshold": float,
    "seed": int, "trials": int, "checkpoint_interval": int,
    "dataset": str, "dataset_format": str, "has_label_column": _parse_bool,
    "split_ratio": float, "image_shape": _parse_opt_shape,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse key=value lines; '#' starts a comment, blank lines are skipped."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name = _KEY_TO_FIELD[key]
        if name in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[name] = _PARSERS[name](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def validate(cfg: ExperimentConfig) -> None:
    def require(ok, msg):
        if not ok:
            raise ConfigError(msg)

    require(cfg.N >= 1, "N must be >= 1")
    require(0.0 < cfg.beta <= 1.0, "beta must be in (0, 1]")
    require(0.0 < cfg.alpha <= 1.0, "alpha must be in (0, 1]")
    require(cfg.nu > 0, "nu must be positive")
    require(0.0 < cfg.delta < 1.0, "delta must be in (0, 1)")
    require(cfg.theta_del >= 0, "theta_del must be >= 0")
    require(0.0 < cfg.F_I <= 1.0, "F_I must be in (0, 1]")
    require(cfg.epsilon_I >= 0.0, "epsilon_I must be >= 0")
    require(0.0 < cfg.F_R <= 1.0, "F_R must be in (0, 1]")
    require(0.0 < cfg.epsilon_R <= 1.0, "epsilon_R must be in (0, 1]")
    require(cfg.theta_EA >= 0, "theta_EA must be >= 0")
    require(cfg.lam >= 1, "lambda must be >= 1")
    require(cfg.chi == 0.0, "crossover is not supported: chi must be 0")
    require(0.0 < cfg.mu_min <= 1.0, "mu_min must be in (0, 1]")
    require(0.0 <= cfg.omega <= 1.0, "omega must be in [0, 1]")
    require(cfg.h_I >= 1, "h_I must be >= 1")
    require(cfg.h_M >= 1, "h_M must be >= 1")
    require(cfg.h_max is None or cfg.h_max >= cfg.h_I,
            "h_max must be >= h_I (or unset)")
    require(cfg.mode in ("xcsf", "global_ea"), "mode must be 'xcsf' or 'global_ea'")
    require(cfg.stale_limit >= 1, "stale_limit must be >= 1")
    require(0.0 <= cfg.match_threshold < 1.0, "match_threshold must be in [0, 1)")
    require(cfg.trials >= 0, "trials must be >= 0")
    require(cfg.checkpoint_interval >= 1, "checkpoint_interval must be >= 1")
    require(cfg.dataset_format in ("", "csv", "idx"),
            "dataset_format must be 'csv' or 'idx'")
    require(0.0 < cfg.split_ratio <= 1.0, "split_ratio must be in (0, 1]")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain dict keyed by config-file names (JSON-friendly)."""
    out = {}
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(value)
        out[_FIELD_TO_KEY[f.name]] = value
    return out


def config_from_dict(d: dict) -> ExperimentConfig:
    values = {}
    for key, value in d.items():
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"unknown config key {key!r}")
        name = _KEY_TO_FIELD[key]
        if name == "image_shape" and value is not None:
            value = tuple(value)
        values[name] = value
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


# RNG stream purposes derived from the master seed
STREAM_SPLIT = 0
STREAM_TRAIN = 1
STREAM_AUX = 2


def derived_rng(seed: int, stream: int) -> np.random.Generator:
    """Deterministic, independent PCG64 stream for one purpose of a run."""
    children = np.random.SeedSequence(seed).spawn(3)
    return np.random.Generator(np.random.PCG64(children[stream]))
