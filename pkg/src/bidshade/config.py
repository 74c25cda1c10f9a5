"""Run configuration: flat ``key = value`` files with exhaustive key checking.

Values are JSON literals (numbers, ``true``/``false``, quoted strings,
arrays); a bare word is read as a string. ``#`` starts a comment line.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .campaign import DEFAULT_BREAKPOINTS, Schedule


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "default"
    theta1_min: float = 0.0
    theta1_max: float = 1.0
    theta2_min: float = 0.0
    theta2_max: float = 3.0
    n1: int = 10
    n2: int = 10
    epsilon: float = 0.8
    step_size: float = 1.0
    schedule_t_end: tuple = tuple(t for t, _ in DEFAULT_BREAKPOINTS)
    schedule_budget: tuple = tuple(b for _, b in DEFAULT_BREAKPOINTS)
    horizon_hours: float = 408.0
    step_hours: float = 1.0 / 30.0
    steps_per_day: int = 720
    lr: float = 1e-3
    forget: float = 0.999
    l2: float = 1e-4
    gain: float = 0.1
    ema_alpha: float = 0.01
    plant_noise: float = 0.1
    value_noise: float = 0.1
    initial_control: float = 1.0
    n_attributes: int = 5
    redraw_attributes: bool = False
    seed: int = 0
    snapshot_every: int = 720
    output_dir: str = ""

    def __post_init__(self):
        object.__setattr__(self, "schedule_t_end", tuple(float(x) for x in self.schedule_t_end))
        object.__setattr__(self, "schedule_budget", tuple(float(x) for x in self.schedule_budget))
        validate(self)

    @property
    def total_steps(self) -> int:
        return int(round(self.horizon_hours / self.step_hours))

    def schedule(self) -> Schedule:
        return Schedule(tuple(zip(self.schedule_t_end, self.schedule_budget)),
                        self.steps_per_day, self.step_hours, self.horizon_hours)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TYPES = {name: f.type for name, f in _FIELDS.items()}


def _require(cond, key, message):
    if not cond:
        raise ConfigError(f"{key}: {message}", key=key)


def validate(c: RunConfig) -> None:
    for key in ("epsilon", "step_size", "step_hours", "lr", "gain", "initial_control"):
        _require(math.isfinite(getattr(c, key)) and getattr(c, key) > 0, key, "must be positive")
    for key in ("l2", "plant_noise", "value_noise", "horizon_hours"):
        _require(math.isfinite(getattr(c, key)) and getattr(c, key) >= 0, key, "must be >= 0")
    for key in ("n1", "n2", "steps_per_day", "snapshot_every", "n_attributes"):
        _require(isinstance(getattr(c, key), int) and getattr(c, key) >= 1, key,
                 "must be an integer >= 1")
    _require(isinstance(c.seed, int) and c.seed >= 0, "seed", "must be an integer >= 0")
    _require(0 < c.forget <= 1, "forget", "must lie in (0, 1]")
    _require(0 < c.ema_alpha <= 1, "ema_alpha", "must lie in (0, 1]")
    _require(c.theta1_min <= c.theta1_max, "theta1_min", "exceeds theta1_max")
    _require(c.theta2_min <= c.theta2_max, "theta2_min", "exceeds theta2_max")
    _require(0 <= c.theta1_min and c.theta1_max <= 1, "theta1_min", "theta1 range must lie in [0, 1]")
    _require(c.theta2_min >= 0, "theta2_min", "must be >= 0")
    _require(c.n1 == 1 or c.theta1_min < c.theta1_max, "n1", "needs a non-degenerate theta1 range")
    _require(c.n2 == 1 or c.theta2_min < c.theta2_max, "n2", "needs a non-degenerate theta2 range")
    _require(len(c.schedule_t_end) == len(c.schedule_budget) and c.schedule_t_end,
             "schedule_budget", "must have one entry per schedule_t_end")
    steps = c.horizon_hours / c.step_hours
    _require(abs(steps - round(steps)) < 1e-6, "horizon_hours",
             "must be a whole number of steps")
    _require(abs(c.steps_per_day * c.step_hours - 24.0) < 1e-9, "steps_per_day",
             "steps_per_day * step_hours must equal 24 hours")
    try:
        c.schedule()
    except ValueError as exc:
        raise ConfigError(f"schedule_t_end: {exc}", key="schedule_t_end") from exc


def _coerce(key, raw, line):
    kind = _TYPES[key]
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare word
    if kind == "str":
        return str(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {raw!r}", key, line)
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}", key, line)
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {raw!r}", key, line)
        return float(value)
    if kind == "tuple":
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{key}: expected an array of numbers, got {raw!r}", key, line)
        return tuple(float(v) for v in value)
    raise AssertionError(kind)


def parse_config(text: str, **overrides) -> RunConfig:
    values = {}
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", line=n)
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", key=key, line=n)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key=key, line=n)
        if not raw:
            raise ConfigError(f"{key}: missing value", key=key, line=n)
        values[key] = _coerce(key, raw, n)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def load_config(path, **overrides) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text(), **overrides)


def format_config(c: RunConfig) -> str:
    lines = []
    for key, value in asdict(c).items():
        if isinstance(value, tuple):
            value = list(value)
        lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def write_config(c: RunConfig, path) -> None:
    from .io import atomic_write_text

    atomic_write_text(Path(path), format_config(c))
