"""Weight functions g on the nonnegative integers and their prefix sums G.

A :class:`WeightSpec` bundles a weight function with a cached, growable table
of cumulative sums ``G(k) = g(0) + ... + g(k)`` and the regularity class
``g(k) ~ c * k**alpha`` that selects the limiting wealth law.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError

CONSTANT = "constant"
POWER = "power"
DELTA0 = "delta0"
TABLE = "table"

_KINDS = (CONSTANT, POWER, DELTA0, TABLE)


@dataclass(frozen=True)
class Regularity:
    """Tail class of g: ``g(k)/k**alpha -> c``.

    ``alpha = -inf`` encodes a summable weight (finite support or zero tail);
    ``c`` is then the total mass ``sum_j g(j)``.
    """

    alpha: float
    c: float

    @property
    def summable(self) -> bool:
        return self.alpha == -math.inf


class WeightSpec:
    """A weight function g with cached cumulative sums.

    Use the constructors :meth:`constant`, :meth:`power`, :meth:`delta0`,
    :meth:`table` or :func:`parse_weight`.
    """

    def __init__(self, kind: str, params: tuple = (), tail: str = "zero",
                 regularity: Regularity | None = None):
        if kind not in _KINDS:
            raise ConfigError(f"unknown weight kind {kind!r}")
        self.kind = kind
        self.params = tuple(params)
        self.tail = tail
        self._lock = threading.Lock()

        if kind == CONSTANT:
            (gamma,) = self.params
            if not gamma > 0:
                raise ConfigError("constant weight needs gamma > 0")
            regularity = Regularity(0.0, float(gamma))
        elif kind == POWER:
            (alpha,) = self.params
            if not math.isfinite(alpha):
                raise ConfigError("power weight needs a finite exponent")
            regularity = Regularity(float(alpha), 1.0)
        elif kind == DELTA0:
            regularity = Regularity(-math.inf, 1.0)
        else:
            values = np.asarray(self.params, dtype=float)
            if values.size == 0:
                raise ConfigError("table weight needs at least one value")
            if tail not in ("zero", "const"):
                raise ConfigError(f"table tail rule must be 'zero' or 'const', got {tail!r}")
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise ConfigError("table weights must be finite and nonnegative")
            if regularity is None:
                # default class when the user declares none
                if tail == "zero" or values[-1] == 0:
                    regularity = Regularity(-math.inf, float(values.sum()))
                else:
                    regularity = Regularity(0.0, float(values[-1]))
        self.regularity = regularity

        if not self._g_block(0, 1)[0] > 0:
            raise ConfigError("weight function must satisfy g(0) > 0")

        self._G: list[float] = []
        self._G_arr = np.empty(0)
        self._extend(64)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, gamma: float = 1.0) -> "WeightSpec":
        return cls(CONSTANT, (float(gamma),))

    @classmethod
    def power(cls, alpha: float) -> "WeightSpec":
        """g(k) = (k + 1) ** alpha."""
        return cls(POWER, (float(alpha),))

    @classmethod
    def delta0(cls) -> "WeightSpec":
        return cls(DELTA0)

    @classmethod
    def table(cls, values: Sequence[float], tail: str = "zero",
              regularity: Regularity | None = None) -> "WeightSpec":
        return cls(TABLE, tuple(values), tail=tail, regularity=regularity)

    # -- evaluation -------------------------------------------------------

    def _g_block(self, start: int, stop: int) -> np.ndarray:
        k = np.arange(start, stop, dtype=float)
        if self.kind == CONSTANT:
            return np.full(k.shape, self.params[0])
        if self.kind == POWER:
            return (k + 1.0) ** self.params[0]
        if self.kind == DELTA0:
            return (k == 0).astype(float)
        values = np.asarray(self.params, dtype=float)
        out = np.full(k.shape, values[-1] if self.tail == "const" else 0.0)
        inside = k < values.size
        out[inside] = values[k[inside].astype(int)]
        return out

    def _extend(self, upto: int) -> None:
        """Grow the prefix-sum cache so that G(upto - 1) is available."""
        with self._lock:
            have = len(self._G)
            if upto <= have:
                return
            # fixed block boundaries 0, 64, 128, 256, ... keep the rounding of
            # every cached value independent of the order of requests
            while have < upto:
                block = np.cumsum(self._g_block(have, max(64, 2 * have)))
                if have:
                    block += self._G[-1]
                self._G.extend(block.tolist())
                have = len(self._G)
            self._G_arr = np.asarray(self._G)

    def g(self, k: int) -> float:
        return float(self._g_block(k, k + 1)[0])

    def G(self, k: int) -> float:
        if k >= len(self._G):
            self._extend(k + 1)
        return self._G[k]

    def G_list(self, kmax: int) -> list[float]:
        """The cached prefix-sum list, guaranteed to cover 0..kmax.

        The returned list may be longer than kmax + 1; callers index into it.
        """
        if kmax >= len(self._G):
            self._extend(kmax + 1)
        return self._G

    def G_array(self, kmax: int) -> np.ndarray:
        """G(0..kmax) as a float array."""
        if kmax >= len(self._G):
            self._extend(kmax + 1)
        return self._G_arr[: kmax + 1]

    def g_array(self, kmax: int) -> np.ndarray:
        return self._g_block(0, kmax + 1)

    @property
    def is_integer_valued(self) -> bool:
        if self.kind == DELTA0:
            return True
        if self.kind == TABLE:
            return all(float(v).is_integer() for v in self.params)
        if self.kind == CONSTANT:
            return float(self.params[0]).is_integer()
        return float(self.params[0]).is_integer() and self.params[0] >= 0

    def __repr__(self) -> str:
        return f"WeightSpec({format_weight(self)!r})"

    def __getstate__(self):
        return {"kind": self.kind, "params": self.params, "tail": self.tail,
                "regularity": self.regularity}

    def __setstate__(self, state):
        self.__init__(state["kind"], state["params"], state["tail"], state["regularity"])


def g_eval(spec: WeightSpec, k: int) -> float:
    return spec.g(k)


def G_cumsum(spec: WeightSpec, k: int) -> float:
    return spec.G(k)


def asymptotic_G(spec: WeightSpec, k: int) -> float:
    """Leading-order asymptote of G(k) for the weight's regularity class.

    For alpha < -1 (and summable g) the limit constant is approximated by
    G(k) itself, so the result is only meaningful as a diagnostic.
    """
    if spec.regularity is None:
        raise ConfigError("weight has no declared regularity")
    if k < 2:
        raise ValueError("asymptotic_G needs k >= 2")
    alpha, c = spec.regularity.alpha, spec.regularity.c
    if alpha > -1:
        return c / (alpha + 1) * k ** (alpha + 1)
    if alpha == -1:
        return c * math.log(k)
    return spec.G(k)


def parse_weight(text: str) -> WeightSpec:
    """Parse ``constant:<g> | power:<alpha> | delta0 | table:<v,v,...>[:zero|const]``."""
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    try:
        if head == "constant":
            return WeightSpec.constant(float(rest) if rest else 1.0)
        if head == "power":
            return WeightSpec.power(float(rest))
        if head == "delta0":
            return WeightSpec.delta0()
        if head == "table":
            values, _, tail = rest.partition(":")
            nums = [float(v) for v in values.split(",") if v.strip()]
            return WeightSpec.table(nums, tail=tail.strip() or "zero")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad weight {text!r}: {exc}") from None
    raise ConfigError(f"unknown weight syntax {text!r}")


def format_weight(spec: WeightSpec) -> str:
    if spec.kind == CONSTANT:
        return f"constant:{spec.params[0]:g}"
    if spec.kind == POWER:
        return f"power:{spec.params[0]:g}"
    if spec.kind == DELTA0:
        return "delta0"
    return "table:" + ",".join(f"{v:g}" for v in spec.params) + f":{spec.tail}"
