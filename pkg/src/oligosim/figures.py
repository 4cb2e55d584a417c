"""Data series for the fig1 to fig4 scenarios, with their stated parameters.

Each builder returns a :class:`FigureData` table; nothing is plotted.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._csvio import csv_writer
from .errors import InvalidParameterError
from .market import MarketConfig
from .pricing import (EquilibriumResult, best_response_dynamics, first_mover, symmetric_ne,
                      TRACE_HEADER)
from .regulation import SWEEP_HEADER, SweepSeries, sweep

FIGURES = ("fig3", "fig1", "fig2", "fig4-upper", "fig4-lower")

N_USERS = 1000
FIG3_LAMBDA1_0 = 1.1


@dataclass
class FigureData:
    name: str
    header: list[str]
    rows: list[list] = field(default_factory=list)

    def column(self, name: str) -> list:
        k = self.header.index(name)
        return [r[k] for r in self.rows]


def _cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_figure_csv(data: FigureData, path) -> None:
    with csv_writer(path) as w:
        w.writerow(data.header)
        for row in data.rows:
            w.writerow([_cell(v) for v in row])


def read_figure_csv(path) -> FigureData:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))

    def parse(v):
        try:
            return float(v)
        except ValueError:
            return v

    return FigureData("", rows[0], [[parse(v) for v in r] for r in rows[1:]])


def _duopoly(lambda1_0: float, alpha: float) -> EquilibriumResult:
    # operator 1 has committed lambda1_0, so operator 2 answers first
    return best_response_dynamics((lambda1_0, lambda1_0), (alpha, alpha), N_USERS,
                                  order=first_mover(0, 2))


def fig3(n_points: int = 120) -> FigureData:
    """Duopoly equilibrium revenue across the three alpha regimes."""
    alpha_max = math.exp(2.0) / 2 * 1.2
    data = FigureData("fig3", ["alpha", "region", "lambda_1", "lambda_2", "R_1", "R_2",
                               "R_sym"])
    for k in range(1, n_points + 1):
        alpha = alpha_max * k / n_points
        eq = _duopoly(FIG3_LAMBDA1_0, alpha)
        sym = symmetric_ne(alpha, 2, N_USERS)
        data.rows.append([alpha, sym.interval, eq.prices[0], eq.prices[1],
                          eq.revenues[0], eq.revenues[1], sym.revenues[0]])
    return data


def fig1(n_points: int = 101) -> FigureData:
    """Duopoly equilibrium at alpha = e as a function of operator 1's opening price."""
    data = FigureData("fig1", ["lambda1_0", "lambda_1", "lambda_2", "R_1", "R_2", "rounds"])
    for lam0 in np.linspace(0.5, 3.0, n_points):
        eq = _duopoly(float(lam0), math.e)
        data.rows.append([float(lam0), eq.prices[0], eq.prices[1], eq.revenues[0],
                          eq.revenues[1], eq.rounds])
    return data


def fig2() -> FigureData:
    """Price trace of the duopoly at alpha = e^3 starting from log(2 alpha)."""
    alpha = math.exp(3.0)
    start = math.log(2 * alpha)
    eq = best_response_dynamics((start, start), (alpha, alpha), N_USERS)
    data = FigureData("fig2", list(TRACE_HEADER))
    for e in eq.trace:
        data.rows.append([e.round, e.operator + 1, e.old_price, e.new_price, e.potential,
                          str(e.region)])
    return data


def _sweep_table(name: str, series: SweepSeries) -> FigureData:
    data = FigureData(name, list(SWEEP_HEADER))
    for r in series.reports:
        data.rows.append([r.param_value, r.alpha, r.region, r.lambda_star, r.R_total,
                          r.U_agg, r.J0, r.x0_share])
    return data


def fig4_upper(step: float = 0.02, alpha_max: float = 3.0) -> FigureData:
    """Three operators, U0 = 0.1, alpha raised through W."""
    cfg = MarketConfig(N=N_USERS, I=3, W=1.0, U0=0.1)
    n = int(round(alpha_max / step))
    grid = [k * step * cfg.N * math.exp(cfg.U0) for k in range(1, n + 1)]
    return _sweep_table("fig4-upper", sweep(cfg, "W", grid))


def fig4_lower(step: float = 0.02, u_min: float = 0.5, u_max: float = 4.5) -> FigureData:
    """Three operators, W = 5000, alpha raised by lowering U0."""
    cfg = MarketConfig(N=N_USERS, I=3, W=5000.0, U0=u_min)
    n = int(round((u_max - u_min) / step))
    grid = [u_max - k * step for k in range(n + 1)]
    return _sweep_table("fig4-lower", sweep(cfg, "U0", grid))


_BUILDERS = {"fig3": fig3, "fig1": fig1, "fig2": fig2, "fig4-upper": fig4_upper,
             "fig4-lower": fig4_lower}


def figure(name: str) -> FigureData:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise InvalidParameterError(f"unknown figure {name!r}; choose from {FIGURES}",
                                    key="figure") from None
