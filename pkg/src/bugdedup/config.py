"""Runtime configuration: flat key=value file, overridable by CLI flags."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .preprocess import DEFAULT_TRACE_PATTERNS
from .vectorize import DEFAULT_WEIGHTS, validate_weights


class ConfigError(Exception):
    pass


@dataclass
class Config:
    weights: tuple = DEFAULT_WEIGHTS
    k: int = 5
    algorithm: str = "auto"  # auto | brute | kd_tree | ball_tree
    cache_capacity: int = 1024
    pair_ratio: float = 3.0
    threshold: float = 0.5
    verdict_threshold: float = 0.5
    trace_patterns: tuple = DEFAULT_TRACE_PATTERNS
    encoder_endpoint: str | None = None
    encoder_timeout: float = 2.0
    seed: int = 0
    holdout_fraction: float = 0.2
    learning_rate: float = 0.5
    epochs: int = 300
    brute_max_samples: int = 1000
    kd_max_features: int = 20
    ball_max_features: int = 100

    def validate(self):
        self.weights = validate_weights(self.weights)
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.algorithm not in ("auto", "brute", "kd_tree", "ball_tree"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.cache_capacity < 1:
            raise ConfigError("cache_capacity must be positive")
        if self.pair_ratio <= 0:
            raise ConfigError("pair_ratio must be positive")
        for name in ("threshold", "verdict_threshold"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must be in (0, 1)")
        if not 0 < self.holdout_fraction < 1:
            raise ConfigError("holdout_fraction must be in (0, 1)")
        if self.epochs < 1 or self.learning_rate <= 0:
            raise ConfigError("bad training budget")
        return self


_INT_KEYS = {"k", "cache_capacity", "seed", "epochs",
             "brute_max_samples", "kd_max_features", "ball_max_features"}
_FLOAT_KEYS = {"pair_ratio", "threshold", "verdict_threshold", "encoder_timeout",
               "holdout_fraction", "learning_rate"}


def load_config(path=None, overrides=None) -> Config:
    """Read a flat key=value config file.

    Grammar: one `key = value` per line, `#` comments, blank lines ignored.
    `weights` is four comma-separated reals. `trace_pattern` may repeat; each
    occurrence appends a frame regex, replacing the built-in grammar.
    Precedence: overrides > file > defaults.
    """
    config = Config()
    known = {f.name for f in fields(Config)}
    extra_patterns = []

    def apply(key, value, where):
        if key == "trace_pattern":
            extra_patterns.append(value)
            return
        if key == "weights":
            parts = [p for p in str(value).replace(",", " ").split() if p]
            try:
                config.weights = tuple(float(p) for p in parts)
            except ValueError:
                raise ConfigError(f"{where}: bad weights {value!r}") from None
            return
        if key not in known:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                value = int(value)
            elif key in _FLOAT_KEYS:
                value = float(value)
        except ValueError:
            raise ConfigError(f"{where}: bad value for {key}: {value!r}") from None
        setattr(config, key, value)

    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for lineno, line in enumerate(lines, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            apply(key.strip(), value.strip(), f"{path}:{lineno}")

    if extra_patterns:
        config.trace_patterns = tuple(extra_patterns)
    for key, value in (overrides or {}).items():
        if value is not None:
            apply(key, value, "command line")
    try:
        return config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
