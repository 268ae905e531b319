"""Training configuration and its flat ``key = value`` file format.

One key per line, ``#`` starts a comment, blank lines are ignored.
Lists (``hidden_sizes``) are comma separated; booleans accept
true/false/1/0/yes/no.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .trust import TrustStepConfig

ENVS = ("hazard_grid", "point_goal", "point_circle")


@dataclass(frozen=True)
class TrainConfig:
    env: str = "hazard_grid"
    layout: str = ""  # grid layout file; empty selects the built-in 5x5 grid
    episode_cap: int = 50  # HazardGrid step cap
    horizon: int = 200  # continuous-task horizon
    hidden_sizes: tuple[int, ...] = (64, 64)
    gamma: float = 0.99
    target_kl: float = 0.01
    beta: float = 0.75
    cg_iters: int = 50
    cg_tol: float = 1e-10
    tikhonov: float = 0.02
    step_fraction: float = 0.8
    max_backtracks: int = 100
    epochs: int = 300
    steps_per_epoch: int = 2000
    n_envs: int = 4
    seed: int = 0
    whiten_reward_adv: bool = True
    log_path: str = ""

    def __post_init__(self):
        if self.env not in ENVS:
            raise ConfigError(f"unknown env: {self.env} (choose from {', '.join(ENVS)})")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.steps_per_epoch < 1:
            raise ConfigError("steps_per_epoch must be >= 1")
        if self.n_envs < 1 or self.steps_per_epoch % self.n_envs:
            raise ConfigError("steps_per_epoch must be a multiple of n_envs >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigError("hidden_sizes must be non-empty positive integers")
        if self.episode_cap < 1 or self.horizon < 1:
            raise ConfigError("episode_cap and horizon must be >= 1")
        try:
            self.trust()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def trust(self) -> TrustStepConfig:
        return TrustStepConfig(
            eps_kl=self.target_kl,
            cg_iters=self.cg_iters,
            cg_tol=self.cg_tol,
            tikhonov=self.tikhonov,
            beta=self.beta,
            max_backtracks=self.max_backtracks,
            step_fraction=self.step_fraction,
        )

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


def cpo_mode(cfg: TrainConfig) -> TrainConfig:
    """Same configuration with beta = 1 (every step demands the maximal cost decrease)."""
    return cfg.replace(beta=1.0)


_FIELDS = {f.name: f for f in fields(TrainConfig)}
_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _convert(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown key: {key}")
    default = _FIELDS[key].default
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(int(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None


def parse_pairs(lines, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, raw = line.split("=", 1)
        key = key.strip()
        values[key] = _convert(key, raw)
    return values


def parse_config(path=None, overrides=(), env=None) -> TrainConfig:
    """Defaults, then the file at ``path`` (if any), then ``key=value`` overrides.

    The ``SBTRPO_SEED`` environment variable, when set, replaces the seed
    from the file; an explicit ``seed=`` override still wins.
    """
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_pairs(text.splitlines(), str(path)))
    env = os.environ if env is None else env
    if env.get("SBTRPO_SEED"):
        values["seed"] = _convert("seed", env["SBTRPO_SEED"])
    values.update(parse_pairs(overrides, "<override>"))
    return TrainConfig(**values)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def write_config(cfg: TrainConfig, path=None) -> str:
    text = "".join(f"{name} = {format_value(getattr(cfg, name))}\n" for name in _FIELDS)
    if path is not None:
        Path(path).write_text(text)
    return text
