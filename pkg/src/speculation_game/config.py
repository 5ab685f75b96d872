"""Experiment configuration: a flat ``key = value`` text format.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Omitted keys take the baseline defaults; unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

from .engine import GameConfig

ANALYSES = ("tails", "acf", "volume", "kurtosis", "garch", "leadlag", "leverage",
            "inverse", "orders")

GAME_KEYS = tuple(f.name for f in fields(GameConfig))


class ConfigError(ValueError):
    def __init__(self, key, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}: {message}{where}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class ExperimentSpec:
    game: GameConfig = field(default_factory=GameConfig)
    trials: int = 10
    workers: int = 1
    analyses: tuple = ANALYSES
    acf_max_lag: int = 1000
    decay_fit_max_lag: int = 100
    kurtosis_scales: tuple = (5, 10, 20, 40, 80, 160, 320, 640, 1280)
    kurtosis_min_samples: int = 30
    volume_scales: tuple = (5, 10, 20)
    leadlag_dt: int = 10
    leadlag_n: int = 5
    leadlag_stride: int = 50
    leadlag_max_lag: int = 10
    leverage_max_lag: int = 50
    theta: float = 0.01
    powerlaw_max_candidates: int = 1000
    output_dir: str = "output"

    def __post_init__(self):
        for name in ("trials", "workers", "acf_max_lag", "decay_fit_max_lag", "kurtosis_min_samples",
                     "leadlag_dt", "leadlag_n", "leadlag_stride", "leadlag_max_lag",
                     "leverage_max_lag", "powerlaw_max_candidates"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if not self.theta > 0:
            raise ConfigError("theta", "must be > 0")
        if self.leadlag_stride < self.leadlag_n * self.leadlag_dt:
            raise ConfigError("leadlag_stride", "must be >= leadlag_n * leadlag_dt")
        for name in ("kurtosis_scales", "volume_scales"):
            if not getattr(self, name) or min(getattr(self, name)) < 1:
                raise ConfigError(name, "needs positive scales")
        unknown = set(self.analyses) - set(ANALYSES)
        if unknown:
            raise ConfigError("analyses", f"unknown analyses {sorted(unknown)}")

    def enabled(self, name):
        return name in self.analyses

    def replace(self, **changes):
        game = {k: changes.pop(k) for k in list(changes) if k in GAME_KEYS}
        if game:
            changes["game"] = self.game.replace(**game)
        return dataclasses.replace(self, **changes)


def _spec_types():
    types = {f.name: f.type for f in fields(GameConfig)}
    types.update({f.name: f.type for f in fields(ExperimentSpec) if f.name != "game"})
    return types


def _convert(key, raw, kind, line):
    raw = raw.strip()
    try:
        if kind in ("int", int):
            if not raw.lstrip("+-").isdigit():
                raise ValueError
            return int(raw)
        if kind in ("float", float):
            return float(raw)
        if kind in ("str", str):
            if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
                raw = raw[1:-1]
            return raw
        if kind in ("tuple", tuple):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if key == "analyses":
                return tuple(items)
            if not all(s.lstrip("+-").isdigit() for s in items):
                raise ValueError
            return tuple(int(s) for s in items)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind}", line) from None
    raise ConfigError(key, f"unsupported type {kind}", line)


def parse_spec(text):
    """Build an :class:`ExperimentSpec` from configuration text."""
    types = _spec_types()
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, "expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(key, "unknown key", lineno)
        if key in values:
            raise ConfigError(key, "duplicate key", lineno)
        values[key] = _convert(key, value, types[key], lineno)
        lines[key] = lineno
    game = {k: values.pop(k) for k in list(values) if k in GAME_KEYS}
    try:
        return ExperimentSpec(game=GameConfig(**game), **values)
    except ConfigError as err:
        raise ConfigError(err.key, str(err).split(": ", 1)[1], lines.get(err.key)) from None
    except (TypeError, ValueError) as err:
        key = next((k for k in lines if k in str(err)), "config")
        raise ConfigError(key, str(err), lines.get(key)) from None


def serialize_spec(spec):
    """Inverse of :func:`parse_spec`; writes every key explicitly."""
    def fmt(v):
        if isinstance(v, tuple):
            return ", ".join(str(x) for x in v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    out = [f"{f.name} = {fmt(getattr(spec.game, f.name))}" for f in fields(GameConfig)]
    out += [f"{f.name} = {fmt(getattr(spec, f.name))}" for f in fields(ExperimentSpec)
            if f.name != "game"]
    return "\n".join(out) + "\n"


def load_spec(path):
    with open(path) as fh:
        return parse_spec(fh.read())
