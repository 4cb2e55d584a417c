"""User-side evolutionary game: switch rates, mean dynamics, integration."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from ._csvio import csv_writer
from .errors import DomainError, InvalidParameterError, StepSizeError
from .market import MarketConfig, PriceProfile, user_utility

SIMPLEX_TOL = 1e-9
CONSERVATION_TOL = 1e-12

DEFAULT_DT = 0.01
DEFAULT_T_MAX = 1e4
DEFAULT_SETTLE_TOL = 1e-10


@dataclass(frozen=True)
class PopulationState:
    """Shares ``x`` of the I market operators and ``x0`` of the neutral one."""

    x: tuple[float, ...]
    x0: float

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        x0 = float(self.x0)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "x0", x0)
        if any(v < 0.0 for v in x) or x0 < 0.0:
            raise InvalidParameterError(f"negative share in {x + (x0,)}")
        total = math.fsum(x) + x0
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise InvalidParameterError(f"shares sum to {total!r}, not 1")

    @classmethod
    def from_array(cls, v: Sequence[float]) -> "PopulationState":
        v = [float(a) for a in v]
        return cls(tuple(v[:-1]), v[-1])

    @classmethod
    def uniform(cls, I: int) -> "PopulationState":
        return cls((1.0 / (I + 1),) * I, 1.0 / (I + 1))

    @property
    def I(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.array(self.x + (self.x0,), dtype=float)

    def is_admissible_start(self) -> bool:
        """Every operator starts with users (hence x0 < 1)."""
        return all(v > 0.0 for v in self.x) and self.x0 < 1.0

    def distance(self, other: "PopulationState") -> float:
        return float(np.max(np.abs(self.as_array() - other.as_array())))


@dataclass
class Trajectory:
    """Recorded integration output.

    ``x`` has one row per recorded time with columns ``x_1..x_I, x_0``;
    ``U`` holds the operator utilities at the same instants.
    """

    t: np.ndarray
    x: np.ndarray
    U: np.ndarray
    settled: bool
    steps: int
    max_correction: float = 0.0
    max_defect: float = 0.0
    min_coordinate: float = 0.0
    reached_target: bool = False

    @property
    def times(self) -> list[float]:
        return self.t.tolist()

    @property
    def states(self) -> list[PopulationState]:
        return [PopulationState.from_array(row) for row in self.x]

    @property
    def utilities(self) -> list[list[float]]:
        return self.U.tolist()

    @property
    def final(self) -> PopulationState:
        return PopulationState.from_array(self.x[-1])

    def __len__(self):
        return len(self.t)


def _operator_params(prices: PriceProfile, cfg: MarketConfig):
    if len(prices) != cfg.I:
        raise InvalidParameterError(f"{len(prices)} prices for I={cfg.I} operators")
    logw = np.array([math.log(w / cfg.N) for w in cfg.W])
    return logw, prices.as_array()


def _state_array(state, I):
    v = state.as_array() if isinstance(state, PopulationState) else np.asarray(state, float)
    if v.shape != (I + 1,):
        raise InvalidParameterError(f"state has {v.shape[0]} entries, expected {I + 1}")
    return v


def switch_rates(state: PopulationState, prices: PriceProfile, cfg: MarketConfig) -> np.ndarray:
    """Per-capita switching rates between strategies.

    Entry ``[i, j]`` is the rate at which a user on strategy ``i`` moves to
    ``j``; index ``I`` is the neutral operator. Imitation targets are
    weighted by their current share, the move to the neutral operator is
    a direct selection at rate ``gamma``.
    """
    x = _state_array(state, cfg.I)
    I = cfg.I
    U = []
    for i in range(I):
        if not x[i] > 0.0:
            raise DomainError(f"operator {i + 1} has zero share; its utility is undefined")
        U.append(user_utility(cfg.W[i], cfg.N, x[i], prices[i]))
    rho = np.zeros((I + 1, I + 1))
    for i in range(I):
        for j in range(I):
            if i != j:
                rho[i, j] = x[j] * max(U[j] - U[i], 0.0)
        rho[i, I] = cfg.gamma * max(cfg.U0 - U[i], 0.0)
        rho[I, i] = x[i] * max(U[i] - cfg.U0, 0.0)
    return rho


def mean_dynamics_rhs(state: PopulationState, prices: PriceProfile, cfg: MarketConfig) -> np.ndarray:
    """Time derivative ``(dx_1/dt, ..., dx_I/dt, dx_0/dt)``."""
    x = _state_array(state, cfg.I)
    logw, lam = _operator_params(prices, cfg)
    out = np.empty(cfg.I + 1)
    _kernels.rhs(x, logw, lam, float(cfg.U0), float(cfg.gamma), out, np.empty(cfg.I))
    if not np.all(np.isfinite(out)):
        raise DomainError(f"non-finite vector field at {x}")
    total = out.sum()
    if abs(total) >= CONSERVATION_TOL * max(1.0, np.abs(out).max()):
        raise AssertionError(f"mass not conserved: derivatives sum to {total}")
    return out


def integrate(x0state: PopulationState, prices: PriceProfile, cfg: MarketConfig,
              dt: float = DEFAULT_DT, t_max: float = DEFAULT_T_MAX,
              settle_tol: float = DEFAULT_SETTLE_TOL, record_every: int = 1,
              target: PopulationState | None = None, target_tol: float = 0.0) -> Trajectory:
    """Integrate the mean dynamics with fixed-step RK4 until settled or ``t_max``.

    After every step negative shares are clamped and the state is
    renormalised; a correction larger than 1e-8 raises StepSizeError.
    With ``target`` given, integration also stops once the state is within
    ``target_tol`` of it (max-norm).
    """
    if not dt > 0 or not t_max > 0 or not settle_tol > 0:
        raise InvalidParameterError("dt, t_max and settle_tol must be positive")
    if record_every < 1:
        raise InvalidParameterError("record_every must be >= 1")
    if not x0state.is_admissible_start():
        raise InvalidParameterError(
            "initial state needs x_i > 0 for every operator (and x0 < 1)")
    x = _state_array(x0state, cfg.I).copy()
    logw, lam = _operator_params(prices, cfg)
    if target is None:
        tgt, ttol = np.zeros_like(x), 0.0
    else:
        tgt, ttol = _state_array(target, cfg.I), float(target_tol)
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    times, states, n_rec, steps, status, corr, min_coord, defect = _kernels.rk4_run(
        x, logw, lam, float(cfg.U0), float(cfg.gamma), float(dt), n_steps,
        float(settle_tol), int(record_every), tgt, ttol)
    if status == _kernels.DRIFT:
        raise StepSizeError(
            f"simplex correction {corr:.3g} exceeded {_kernels.MAX_CORRECTION} "
            f"at t={steps * dt:g}; reduce dt (currently {dt})")
    if status == _kernels.NONFINITE:
        raise DomainError(f"non-finite state or vector field at t={steps * dt:g}")
    t = times[:n_rec].copy()
    xs = states[:n_rec].copy()
    U = np.empty((n_rec, cfg.I))
    for r in range(n_rec):
        _kernels.utilities(xs[r], logw, lam, U[r])
    return Trajectory(t=t, x=xs, U=U, settled=status == _kernels.SETTLED, steps=steps,
                      max_correction=corr, max_defect=defect, min_coordinate=min_coord,
                      reached_target=status == _kernels.REACHED)


def ess_perturb_check(point, prices: PriceProfile, cfg: MarketConfig, eps: float,
                      dt: float = DEFAULT_DT, t_max: float = 5e4) -> bool:
    """Invasion test of a stationary point.

    For every ordered pair of strategies ``s -> s'`` (neutral operator
    included) shift ``eps`` of the population from ``s`` to ``s'`` and
    check that the dynamics bring the state back within ``eps/10`` of the
    point before ``t_max``. Strategies holding no users are skipped as
    sources.
    """
    if eps == 0:
        return True
    state = getattr(point, "state", point)
    base = state.as_array()
    positive = base[base > 0]
    if not 0 < eps < positive.min():
        raise InvalidParameterError(
            f"eps={eps} must be below the smallest positive share {positive.min():.3g}")
    m = base.shape[0]
    for s in range(m):
        if base[s] <= 0.0:
            continue
        for s2 in range(m):
            if s2 == s:
                continue
            v = base.copy()
            v[s] -= eps
            v[s2] += eps
            traj = integrate(PopulationState.from_array(v), prices, cfg, dt=dt, t_max=t_max,
                             settle_tol=1e-300, record_every=1 << 30,
                             target=state, target_tol=eps / 10)
            if not traj.reached_target:
                return False
    return True


# -- CSV ---------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_header(I: int) -> list[str]:
    return (["t"] + [f"x_{i + 1}" for i in range(I)] + ["x_0"]
            + [f"U_{i + 1}" for i in range(I)])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    I = traj.U.shape[1]
    with csv_writer(path) as w:
        w.writerow(trajectory_header(I))
        for t, x, U in zip(traj.t, traj.x, traj.U):
            w.writerow([_fmt(t)] + [_fmt(v) for v in x] + [_fmt(v) for v in U])


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    I = (len(header) - 2) // 2
    if header != trajectory_header(I):
        raise ValueError(f"unexpected trajectory header {header}")
    data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
    return Trajectory(t=data[:, 0], x=data[:, 1:I + 2], U=data[:, I + 2:],
                      settled=False, steps=len(body) - 1)
