"""Problem instance, user utility and price-region classification.

All population quantities are fractions of the user mass; ``N`` only
enters utilities (through W/N) and revenues.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import yaml

from .errors import ConfigError, DomainError, InvalidParameterError

DEFAULT_GAMMA = 1.0
DEFAULT_LAMBDA_MAX = 100.0
DEFAULT_TOL_C = 1e-9
SYMMETRY_TOL = 1e-12

CONFIG_KEYS = ("N", "I", "W", "U0", "gamma", "lambda_max", "tol_C")


def alpha_of(W_i: float, N: int, U0: float) -> float:
    """Composite market parameter ``W_i / (N e^U0)``."""
    try:
        alpha = W_i / (N * math.exp(U0))
    except OverflowError:
        raise InvalidParameterError(f"e^U0 overflows for U0={U0}", "U0") from None
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise InvalidParameterError(
            f"alpha={alpha} from W={W_i}, N={N}, U0={U0} is not finite and positive", "W")
    return alpha


@dataclass(frozen=True)
class AlphaProfile:
    alpha: tuple[float, ...]
    symmetric: bool = field(init=False)

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if any(not (a > 0.0 and math.isfinite(a)) for a in alpha):
            raise InvalidParameterError(f"alpha entries must be finite and positive: {alpha}")
        object.__setattr__(self, "alpha", alpha)
        sym = all(abs(a - alpha[0]) <= SYMMETRY_TOL for a in alpha)
        object.__setattr__(self, "symmetric", sym)

    @classmethod
    def uniform(cls, alpha: float, I: int) -> "AlphaProfile":
        return cls((float(alpha),) * I)

    @property
    def I(self) -> int:
        return len(self.alpha)

    def __len__(self):
        return len(self.alpha)

    def __getitem__(self, i):
        return self.alpha[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)


@dataclass(frozen=True)
class MarketConfig:
    """Immutable market instance.

    ``W`` may be given as a scalar, which is broadcast to all ``I``
    operators.
    """

    N: int
    I: int
    W: tuple[float, ...] | float
    U0: float = 0.0
    gamma: float = DEFAULT_GAMMA
    lambda_max: float = DEFAULT_LAMBDA_MAX
    tol_C: float = DEFAULT_TOL_C

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise InvalidParameterError(f"N must be a positive integer, got {self.N!r}", "N")
        if isinstance(self.I, bool) or int(self.I) != self.I or self.I < 2:
            raise InvalidParameterError(f"I must be an integer >= 2, got {self.I!r}", "I")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "I", int(self.I))
        W = self.W
        if np.ndim(W) == 0:
            W = (float(W),) * self.I
        W = tuple(float(w) for w in W)
        if len(W) != self.I:
            raise InvalidParameterError(f"W has {len(W)} entries, expected I={self.I}", "W")
        if any(not (w > 0.0 and math.isfinite(w)) for w in W):
            raise InvalidParameterError(f"W entries must be finite and positive: {W}", "W")
        object.__setattr__(self, "W", W)
        if not (self.U0 >= 0.0 and math.isfinite(self.U0)):
            raise InvalidParameterError(f"U0 must be finite and >= 0, got {self.U0!r}", "U0")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma!r}", "gamma")
        if not self.lambda_max > 0.0:
            raise InvalidParameterError(
                f"lambda_max must be > 0, got {self.lambda_max!r}", "lambda_max")
        if not self.tol_C >= 0.0:
            raise InvalidParameterError(f"tol_C must be >= 0, got {self.tol_C!r}", "tol_C")
        # validates finiteness of every alpha_i
        for w in W:
            alpha_of(w, self.N, self.U0)

    @classmethod
    def from_alpha(cls, alpha, I: int, N: int = 1000, U0: float = 0.0, **kw) -> "MarketConfig":
        """Build an instance whose alpha equals ``alpha`` (scalar or per operator)."""
        a = np.broadcast_to(np.asarray(alpha, dtype=float), (I,))
        W = tuple(float(ai) * N * math.exp(U0) for ai in a)
        return cls(N=N, I=I, W=W, U0=U0, **kw)

    @property
    def alpha(self) -> AlphaProfile:
        return AlphaProfile(tuple(alpha_of(w, self.N, self.U0) for w in self.W))

    def replace(self, **changes) -> "MarketConfig":
        kw = dict(N=self.N, I=self.I, W=self.W, U0=self.U0, gamma=self.gamma,
                  lambda_max=self.lambda_max, tol_C=self.tol_C)
        kw.update(changes)
        return MarketConfig(**kw)


@dataclass(frozen=True)
class PriceProfile:
    lam: tuple[float, ...]
    lambda_max: float = DEFAULT_LAMBDA_MAX

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lam)
        for v in lam:
            if not (0.0 <= v <= self.lambda_max):
                raise InvalidParameterError(
                    f"price {v} outside [0, lambda_max={self.lambda_max}]")
        object.__setattr__(self, "lam", lam)

    def __len__(self):
        return len(self.lam)

    def __getitem__(self, i):
        return self.lam[i]

    def others(self, i: int) -> tuple[float, ...]:
        return self.lam[:i] + self.lam[i + 1:]

    def with_price(self, i: int, value: float) -> "PriceProfile":
        lam = list(self.lam)
        lam[i] = value
        return PriceProfile(tuple(lam), self.lambda_max)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lam, dtype=float)


class Region(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"

    def __str__(self):
        return self.value


class RegionLabel(NamedTuple):
    region: Region
    S: float


def discriminant(lam: Sequence[float], alpha: Sequence[float]) -> float:
    """``S(lambda) = sum_i alpha_i e^{-lambda_i}``."""
    return math.fsum(a * math.exp(-l) for a, l in zip(alpha, lam))


def region_of(S: float, tol_C: float = DEFAULT_TOL_C) -> Region:
    if abs(S - 1.0) <= tol_C:
        return Region.C
    return Region.A if S < 1.0 else Region.B


def classify(prices: PriceProfile | Sequence[float], alpha: AlphaProfile | Sequence[float],
             tol_C: float = DEFAULT_TOL_C) -> RegionLabel:
    lam = prices.lam if isinstance(prices, PriceProfile) else prices
    a = alpha.alpha if isinstance(alpha, AlphaProfile) else alpha
    if len(lam) != len(a):
        raise InvalidParameterError(f"{len(lam)} prices for {len(a)} operators")
    S = discriminant(lam, a)
    return RegionLabel(region_of(S, tol_C), S)


def user_utility(W_i: float, N: int, x_i: float, lambda_i: float) -> float:
    """Net utility ``log(W_i / (N x_i)) - lambda_i`` of a user on operator i."""
    if not x_i > 0.0:
        raise DomainError(f"utility undefined for population share x_i={x_i}")
    return math.log(W_i / (N * x_i)) - lambda_i


# -- config files -----------------------------------------------------------

class ConfigLoader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e6``)."""


ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def parse_yaml(text: str):
    return yaml.load(text, Loader=ConfigLoader)


def read_config_file(path: str | Path) -> dict:
    """Read a YAML (or JSON) key-value config file into a dict."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = parse_yaml(text)
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"not valid YAML/JSON: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a key-value mapping")
    return data


def _number(data, key, kind=float, required=False, default=None):
    if key not in data:
        if required:
            raise ConfigError(key, "missing required key")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def market_from_mapping(data: Mapping) -> MarketConfig:
    """Build a :class:`MarketConfig` from config keys, naming the bad key on error."""
    N = _number(data, "N", int, required=True)
    I = _number(data, "I", int, required=True)
    if "W" not in data:
        raise ConfigError("W", "missing required key")
    W = data["W"]
    if isinstance(W, (list, tuple)):
        if len(W) != I:
            raise ConfigError("W", f"list has {len(W)} entries, expected I={I}")
        if any(isinstance(w, bool) or not isinstance(w, (int, float)) for w in W):
            raise ConfigError("W", f"entries must be numbers: {W!r}")
    elif isinstance(W, bool) or not isinstance(W, (int, float)):
        raise ConfigError("W", f"expected a number or list, got {W!r}")
    values = dict(
        N=N, I=I, W=W,
        U0=_number(data, "U0", default=0.0),
        gamma=_number(data, "gamma", default=DEFAULT_GAMMA),
        lambda_max=_number(data, "lambda_max", default=DEFAULT_LAMBDA_MAX),
        tol_C=_number(data, "tol_C", default=DEFAULT_TOL_C),
    )
    try:
        return MarketConfig(**values)
    except InvalidParameterError as exc:
        raise ConfigError(exc.key or "config", str(exc)) from None


def load_config(path: str | Path) -> MarketConfig:
    return market_from_mapping(read_config_file(path))
