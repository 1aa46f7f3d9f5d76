"""Run configuration: flat ``key = value`` files overridden by CLI flags."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .dynamics import ModelKind
from .errors import ConfigError
from .groups import GroupDistribution, parse_groups
from .weights import WeightSpec, parse_weight

_INT_KEYS = {"n", "coins", "steps", "seed", "replicas", "snapshots", "llt_b"}
_FLOAT_KEYS = {"temp", "scale", "bin_width"}
_KNOWN = _INT_KEYS | _FLOAT_KEYS | {"model", "weight", "groups", "out", "init", "lazy",
                                   "ks", "llt_n", "ensemble"}


@dataclass
class RunConfig:
    model: str = "immediate"
    weight: str = "constant:1"
    groups: str = "pair_complete"
    n: int | None = None
    coins: int | None = None
    temp: float | None = None
    scale: float | None = None
    steps: int = 0
    seed: int = 0
    out: str = "out"
    replicas: int = 1
    snapshots: int = 100
    init: str = "constant"
    bin_width: float | None = None
    lazy: bool = True
    # limits subcommand parameters
    ks: str = "100,1000,10000"
    llt_n: str = "50,100,200"
    llt_b: int = 20
    ensemble: str = "8x16,32x64"
    # derived
    L: int = field(default=0, init=False)
    a_N: float = field(default=1.0, init=False)
    T: float = field(default=0.0, init=False)

    def resolve(self) -> "RunConfig":
        """Check consistency and derive L, a_N and T."""
        if self.n is None or self.n < 2:
            raise ConfigError("n (number of agents) must be given and >= 2")
        self.model_kind  # raises on unknown model names
        has_L = self.coins is not None
        has_scale = self.temp is not None or self.scale is not None
        if has_L and has_scale:
            raise ConfigError("give either coins, or temp and scale, not both")
        if has_L:
            if self.coins < 0:
                raise ConfigError("coins must be nonnegative")
            self.L = int(self.coins)
            self.a_N = 1.0
            self.T = self.L / self.n
        elif self.temp is not None and self.scale is not None:
            if not (self.temp > 0 and self.scale > 0):
                raise ConfigError("temp and scale must be positive")
            self.a_N = float(self.scale)
            self.T = float(self.temp)
            self.L = int(round(self.n * self.a_N * self.T))
        else:
            raise ConfigError("give coins, or both temp and scale")
        if self.steps < 0 or self.replicas < 1 or self.snapshots < 0:
            raise ConfigError("steps and snapshots must be >= 0, replicas >= 1")
        if self.init not in ("constant", "random"):
            raise ConfigError(f"init must be 'constant' or 'random', got {self.init!r}")
        if self.bin_width is None:
            self.bin_width = 0.1 * self.T if self.T > 0 else 1.0
        return self

    @property
    def model_kind(self) -> ModelKind:
        try:
            return ModelKind.parse(self.model)
        except ValueError:
            raise ConfigError(f"unknown model {self.model!r}") from None

    def weight_spec(self) -> WeightSpec:
        if self.model_kind is ModelKind.RESHUFFLE:
            return WeightSpec.delta0()
        return parse_weight(self.weight)

    def group_distribution(self) -> GroupDistribution:
        return parse_groups(self.groups, self.n)

    def header_lines(self) -> list[str]:
        return [f"{k}={v}" for k, v in self.as_dict().items()]

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("ks", "llt_n", "llt_b", "ensemble"):
            d.pop(key)
        return d


def _coerce(key: str, value: str):
    value = value.strip()
    if key in _INT_KEYS:
        return int(float(value)) if "e" in value.lower() else int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "lazy":
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(value)
    return value


def read_config_file(path: str | Path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in _KNOWN:
            raise ConfigError(f"{path}:{lineno}: cannot parse {raw!r}")
        try:
            values[key] = _coerce(key, value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value.strip()!r}") from None
    return values


def build_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """File values first, then non-None overrides (the CLI flags)."""
    values = read_config_file(path) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def parse_int_list(text: str) -> list[int]:
    return [int(float(x)) for x in text.split(",") if x.strip()]


def parse_scales(text: str) -> list[tuple[int, float]]:
    pairs = []
    for item in text.split(","):
        if not item.strip():
            continue
        n, _, a = item.partition("x")
        pairs.append((int(n), float(a)))
    return pairs


def alpha_for_json(spec: WeightSpec):
    alpha = spec.regularity.alpha
    return None if math.isinf(alpha) else alpha
