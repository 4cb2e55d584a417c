"""Closed-form market stationary point for a given price profile."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import PopulationState
from .market import (AlphaProfile, MarketConfig, PriceProfile, Region, classify,
                     user_utility)


@dataclass(frozen=True)
class StationaryPoint:
    state: PopulationState
    case_label: Region
    utilities: tuple[float, ...]
    U0: float
    S: float

    def is_consistent(self, tol: float = 1e-10) -> bool:
        """Check the defining properties of the point's case."""
        U, U0 = self.utilities, self.U0
        x0 = self.state.x0
        if self.case_label is Region.A:
            return x0 > 0 and all(abs(u - U0) <= tol for u in U)
        if self.case_label is Region.B:
            return (x0 == 0 and all(u > U0 for u in U)
                    and max(U) - min(U) <= tol)
        return x0 == 0 and all(abs(u - U0) <= tol for u in U)


def stationary_point(prices: PriceProfile, alpha: AlphaProfile | None,
                     cfg: MarketConfig) -> StationaryPoint:
    """Unique stationary user distribution induced by ``prices``.

    Below the full-coverage boundary each operator holds
    ``alpha_i e^{-lambda_i}`` and the rest abstain; above it the market is
    shared in proportion to ``alpha_i e^{-lambda_i}``. Inside the
    ``tol_C`` band around the boundary the first form is used with ``x0``
    set to 0.
    """
    if alpha is None:
        alpha = cfg.alpha
    label = classify(prices, alpha, cfg.tol_C)
    a = [al * math.exp(-l) for al, l in zip(alpha.alpha, prices.lam)]
    if label.region is Region.B:
        total = math.fsum(a)
        x = tuple(ai / total for ai in a)
        x0 = 0.0
    elif label.region is Region.A:
        x = tuple(a)
        x0 = 1.0 - label.S
    else:
        # renormalise away the sub-tol_C residue so the state is on the simplex
        x = tuple(ai / label.S for ai in a)
        x0 = 0.0
    state = PopulationState(x, x0)
    point = StationaryPoint(state, label.region, (), cfg.U0, label.S)
    return StationaryPoint(state, label.region, tuple(utilities_at(point, prices, cfg)),
                           cfg.U0, label.S)


def utilities_at(point: StationaryPoint, prices: PriceProfile, cfg: MarketConfig) -> list[float]:
    """Per-operator utilities at ``point``.

    Equal to U0 in cases A and C; in case B all operators offer
    ``U0 + log S``.
    """
    return [user_utility(cfg.W[i], cfg.N, point.state.x[i], prices[i]) for i in range(cfg.I)]
