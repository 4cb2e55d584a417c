"""Market outcome metrics, parameter sweeps and regulator inverse design."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

from ._csvio import csv_writer
from .errors import InvalidParameterError, TargetRangeError
from .market import MarketConfig, Region
from .pricing import (EquilibriumResult, alpha_interval, best_response_dynamics,
                      symmetric_ne)
from .stationary import StationaryPoint, stationary_point

SWEEP_PARAMETERS = ("W", "U0", "alpha")
OBJECTIVES = ("total_revenue", "U_agg")


@dataclass(frozen=True)
class EfficiencyReport:
    alpha: float
    U_agg: float
    J0: float
    R_total: float
    x0_share: float
    region: str
    lambda_star: float = math.nan
    param_value: float = math.nan


@dataclass
class SweepSeries:
    swept_parameter: str
    values: list[float]
    reports: list[EfficiencyReport] = field(default_factory=list)


def aggregate_utility(W: float, N: int, I: int, U0: float) -> float:
    """Total user utility at the symmetric equilibrium.

    Users only get the reservation utility until alpha passes
    ``e^{I/(I-1)}/I``; beyond it utility grows with ``log W``.
    """
    alpha = W / (N * math.exp(U0))
    if alpha_interval(alpha, I) != "A3":
        return N * U0
    return N * (math.log(W * I / N) - I / (I - 1))


def neutral_cost(point: StationaryPoint, N: int, U0: float,
                 displayed_formula: bool = False) -> float:
    """Cost ``x0 N U0`` of serving the abstaining users.

    ``displayed_formula=True`` returns the alternative expression
    ``alpha I N U0 / e`` for the low-alpha regime instead, which at that
    equilibrium equals ``(1 - x0) N U0``; it is zero whenever the market
    is covered.
    """
    x0 = point.state.x0
    if displayed_formula:
        return (1.0 - x0) * N * U0 if point.case_label is Region.A else 0.0
    return x0 * N * U0


def total_revenue_at_ne(alpha_scalar: float, I: int, N: int) -> float:
    return symmetric_ne(alpha_scalar, I, N).total_revenue


def _symmetric_alpha(cfg: MarketConfig) -> float:
    alpha = cfg.alpha
    if not alpha.symmetric:
        raise InvalidParameterError("regulation metrics assume equal spectrum W_i")
    return alpha.alpha[0]


def efficiency_report(cfg: MarketConfig, equilibrium: EquilibriumResult | None = None,
                      param_value: float = math.nan,
                      displayed_formula: bool = False) -> EfficiencyReport:
    """Outcome metrics at an equilibrium of ``cfg`` (symmetric one by default).

    With an explicit ``equilibrium`` (e.g. from best-response dynamics)
    aggregate utility is summed from the induced stationary point instead
    of the closed form.
    """
    alpha = _symmetric_alpha(cfg)
    if equilibrium is None:
        eq = symmetric_ne(alpha, cfg.I, cfg.N, cfg.tol_C)
        U_agg = aggregate_utility(cfg.W[0], cfg.N, cfg.I, cfg.U0)
    else:
        eq = equilibrium
        U_agg = math.nan
    point = stationary_point(eq.prices, cfg.alpha, cfg)
    if equilibrium is not None:
        U_agg = cfg.N * math.fsum([xi * ui for xi, ui in zip(point.state.x, point.utilities)]
                                  + [point.state.x0 * cfg.U0])
    return EfficiencyReport(
        alpha=alpha, U_agg=U_agg,
        J0=neutral_cost(point, cfg.N, cfg.U0, displayed_formula),
        R_total=eq.total_revenue, x0_share=point.state.x0,
        region=alpha_interval(alpha, cfg.I), lambda_star=eq.prices[0],
        param_value=param_value)


def with_parameter(cfg: MarketConfig, parameter: str, value: float) -> MarketConfig:
    if parameter == "W":
        return cfg.replace(W=float(value))
    if parameter == "U0":
        return cfg.replace(U0=float(value))
    if parameter == "alpha":
        return cfg.replace(W=float(value) * cfg.N * math.exp(cfg.U0))
    raise InvalidParameterError(f"unknown parameter {parameter!r}; use one of {SWEEP_PARAMETERS}")


def _check_monotone(grid: Sequence[float]):
    if len(grid) == 0:
        raise InvalidParameterError("empty grid")
    d = [b - a for a, b in zip(grid, grid[1:])]
    if not (all(v > 0 for v in d) or all(v < 0 for v in d)):
        raise InvalidParameterError("grid must be strictly monotone")


def sweep(cfg: MarketConfig, parameter: str, grid: Sequence[float], mode: str = "symmetric",
          initial: Sequence[float] | None = None, order=None,
          displayed_formula: bool = False) -> SweepSeries:
    """Evaluate market outcomes over a grid of ``W``, ``U0`` or ``alpha``.

    ``mode="dynamics"`` runs best-response dynamics from ``initial``
    prices at every grid point instead of using the symmetric closed form.
    """
    grid = [float(v) for v in grid]
    _check_monotone(grid)
    if mode not in ("symmetric", "dynamics"):
        raise InvalidParameterError(f"unknown sweep mode {mode!r}")
    series = SweepSeries(parameter, grid)
    for value in grid:
        c = with_parameter(cfg, parameter, value)
        eq = None
        if mode == "dynamics":
            start = initial if initial is not None else (1.0,) * c.I
            eq = best_response_dynamics(start, c.alpha, c.N, order=order,
                                        lambda_max=c.lambda_max, tol_C=c.tol_C)
        series.reports.append(efficiency_report(c, eq, value, displayed_formula))
    return series


def objective_value(cfg: MarketConfig, objective: str) -> float:
    if objective == "total_revenue":
        return total_revenue_at_ne(_symmetric_alpha(cfg), cfg.I, cfg.N)
    if objective == "U_agg":
        _symmetric_alpha(cfg)
        return aggregate_utility(cfg.W[0], cfg.N, cfg.I, cfg.U0)
    raise InvalidParameterError(f"unknown objective {objective!r}; use one of {OBJECTIVES}")


def find_parameter(cfg: MarketConfig, parameter: str, objective: str, target: float,
                   bracket: tuple[float, float], tol: float = 1e-6,
                   xtol: float = 1e-13) -> float:
    """First parameter value reaching ``target`` when moving from ``bracket[0]``.

    The objective is assumed monotone along the bracket. Because the
    equilibrium metrics have flat stretches, the returned value is the
    edge where the target is first met (within ``tol``), not an arbitrary
    point of a plateau. ``bracket`` may be decreasing, e.g. to lower U0.
    """
    if parameter not in ("W", "U0"):
        raise InvalidParameterError(f"can only tune W or U0, not {parameter!r}")

    def f(p):
        return objective_value(with_parameter(cfg, parameter, p), objective)

    start, stop = float(bracket[0]), float(bracket[1])
    f_start = f(start)
    if abs(f_start - target) <= tol:
        return start
    side = math.copysign(1.0, f_start - target)

    def reached(v):
        return abs(v - target) <= tol or math.copysign(1.0, v - target) != side

    f_stop = f(stop)
    if not reached(f_stop):
        raise TargetRangeError(
            f"{objective} goes from {f_start:.6g} to {f_stop:.6g} on "
            f"{parameter} in [{start:g}, {stop:g}]; target {target:g} not reached")
    lo, hi = start, stop
    for _ in range(400):
        if abs(hi - lo) <= xtol * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if reached(f(mid)):
            hi = mid
        else:
            lo = mid
    return hi


# -- CSV ---------------------------------------------------------------------

SWEEP_HEADER = ["param_value", "alpha", "region", "lambda_star", "R_total", "U_agg", "J0", "x0"]


def write_sweep_csv(series: SweepSeries, path) -> None:
    with csv_writer(path) as w:
        w.writerow(SWEEP_HEADER)
        for r in series.reports:
            w.writerow([format(r.param_value, ".17g"), format(r.alpha, ".17g"), r.region,
                        format(r.lambda_star, ".17g"), format(r.R_total, ".17g"),
                        format(r.U_agg, ".17g"), format(r.J0, ".17g"),
                        format(r.x0_share, ".17g")])


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise ValueError(f"unexpected sweep header {reader.fieldnames}")
        return [{k: (v if k == "region" else float(v)) for k, v in row.items()}
                for row in reader]
