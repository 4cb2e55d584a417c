"""Operator price competition.

Operators anticipate the stationary user split induced by a price
profile and choose prices to maximise revenue ``lambda_i x_i N``. The
game admits an ordinal potential, so sequential myopic best responses
converge.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from ._csvio import csv_writer
from .errors import DomainError, InvalidParameterError, PotentialDecreaseError, SolverError
from .market import (DEFAULT_LAMBDA_MAX, DEFAULT_TOL_C, AlphaProfile, PriceProfile, Region,
                     RegionLabel, classify)

DEFAULT_BR_TOL = 1e-9
DEFAULT_MAX_ROUNDS = 1000
MU_TOL = 1e-12
MU_MAX_ITER = 200
POTENTIAL_SLACK = 1e-12
BRACKET_PAD = 64


def _alpha_tuple(alpha) -> tuple[float, ...]:
    return alpha.alpha if isinstance(alpha, AlphaProfile) else tuple(float(a) for a in alpha)


def _lam_tuple(prices) -> tuple[float, ...]:
    return prices.lam if isinstance(prices, PriceProfile) else tuple(float(p) for p in prices)


def others_mass(i: int, lambda_others: Sequence[float], alpha) -> float:
    """``sum_{j != i} alpha_j e^{-lambda_j}``; ``lambda_others`` skips operator i."""
    a = _alpha_tuple(alpha)
    a_others = a[:i] + a[i + 1:]
    if len(a_others) != len(lambda_others):
        raise InvalidParameterError(
            f"{len(lambda_others)} rival prices for {len(a)} operators")
    return math.fsum(aj * math.exp(-lj) for aj, lj in zip(a_others, lambda_others))


def l0(i: int, lambda_others: Sequence[float], alpha) -> float:
    """Own price that puts the profile exactly on the full-coverage boundary.

    ``inf`` when the rivals alone already cover the market.
    """
    beta = others_mass(i, lambda_others, alpha)
    if beta >= 1.0:
        return math.inf
    return math.log(_alpha_tuple(alpha)[i] / (1.0 - beta))


def revenue(i: int, prices, alpha, N: int) -> float:
    """Revenue of operator ``i`` at the stationary user split of ``prices``."""
    lam = _lam_tuple(prices)
    a = _alpha_tuple(alpha)
    li = lam[i]
    own = a[i] * math.exp(-li)
    boundary = l0(i, lam[:i] + lam[i + 1:], a)
    if li < boundary:
        beta = others_mass(i, lam[:i] + lam[i + 1:], a)
        return li * N * own / (own + beta)
    return li * N * own


def revenues(prices, alpha, N: int) -> list[float]:
    return [revenue(i, prices, alpha, N) for i in range(len(_lam_tuple(prices)))]


# -- interior optimum --------------------------------------------------------

def _mu_residual(mu: float, c: float) -> float:
    return math.exp(mu) * (mu - 1.0) - c


def mu_bracket(c: float, I: int) -> tuple[float, float, float]:
    """Bracket for the root of ``e^mu (mu - 1) = c`` with ``I`` operators.

    The root lies between ``I/(I-1)`` and ``h = log((I-1) c)``; with equal
    alphas ``h`` is the log harmonic mean of the rivals' ``e^{lambda_j}``.
    Returns ``(lower, upper, h)``; ``lower`` is never below 1 since the
    root always exceeds 1.
    """
    h = math.log((I - 1) * c)
    ratio = I / (I - 1)
    return max(1.0, min(h, ratio)), max(h, ratio), h


def solve_mu(c: float, I: int, tol: float = MU_TOL) -> float:
    """Root ``mu > 1`` of ``e^mu (mu - 1) = c`` by safeguarded Newton."""
    if not c > 0.0 or not math.isfinite(c):
        raise DomainError(f"interior optimum needs c > 0, got {c}")
    lo, hi, _ = mu_bracket(c, I)
    # the bracket collapses to a point when h == I/(I-1); allow for rounding
    lo = max(1.0, lo - BRACKET_PAD * math.ulp(lo))
    hi = hi + BRACKET_PAD * math.ulp(hi)
    f_lo = _mu_residual(lo, c)
    f_hi = _mu_residual(hi, c)
    if f_lo > 0.0 or f_hi < 0.0:
        raise SolverError(f"bracket [{lo}, {hi}] does not enclose the root for c={c}")
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    mu = 0.5 * (lo + hi)
    for _ in range(MU_MAX_ITER):
        e = math.exp(mu)
        f = e * (mu - 1.0) - c
        if abs(f) <= tol:
            return mu
        if f < 0.0:
            lo = mu
        else:
            hi = mu
        step = f / (e * mu)
        cand = mu - step
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        if cand == mu or hi - lo <= 4 * math.ulp(mu):
            return _polish(mu, c)
        mu = cand
    raise SolverError(f"no convergence for c={c} after {MU_MAX_ITER} iterations")


def _polish(mu: float, c: float) -> float:
    # floating-point floor: pick the neighbouring double with the smallest residual
    best, best_r = mu, abs(_mu_residual(mu, c))
    for cand in (math.nextafter(mu, -math.inf), math.nextafter(mu, math.inf)):
        r = abs(_mu_residual(cand, c))
        if r < best_r:
            best, best_r = cand, r
    return best


def mu_star(i: int, lambda_others: Sequence[float], alpha, tol: float = MU_TOL) -> float:
    """Unconstrained revenue maximiser of operator ``i`` in the covered market."""
    a = _alpha_tuple(alpha)
    beta = others_mass(i, lambda_others, a)
    if not beta > 0.0:
        raise DomainError("rivals attract no users; interior optimum undefined")
    c = a[i] / beta
    mu = solve_mu(c, len(a), tol)
    lo, hi, _ = mu_bracket(c, len(a))
    if not lo - BRACKET_PAD * math.ulp(lo) <= mu <= hi + BRACKET_PAD * math.ulp(hi):
        raise SolverError(f"mu*={mu} escaped its bracket [{lo}, {hi}]")
    return mu


# -- best response -----------------------------------------------------------

class Branch(str, enum.Enum):
    UnitPriceA = "UnitPriceA"
    InteriorB = "InteriorB"
    BoundaryC = "BoundaryC"

    def __str__(self):
        return self.value


class BestResponseOutcome(NamedTuple):
    price: float
    branch: Branch
    mu_star: float
    l0: float
    h_minus_i: float


def best_response(i: int, lambda_others: Sequence[float], alpha,
                  lambda_max: float = DEFAULT_LAMBDA_MAX) -> BestResponseOutcome:
    """Revenue-maximising price of operator ``i`` against ``lambda_others``.

    Exactly one of three options applies: the unit price if it still
    leaves users outside the market, the interior optimum ``mu*`` if it
    keeps the market covered, otherwise the boundary price ``l0``.
    """
    a = _alpha_tuple(alpha)
    beta = others_mass(i, lambda_others, a)
    boundary = l0(i, lambda_others, a)
    if beta > 0.0:
        c = a[i] / beta
        mu = mu_star(i, lambda_others, a)
        h = mu_bracket(c, len(a))[2]
    else:
        mu, h = math.nan, math.nan
    if a[i] * math.exp(-1.0) + beta < 1.0:
        price, branch = 1.0, Branch.UnitPriceA
    elif a[i] * math.exp(-mu) + beta > 1.0:
        price, branch = mu, Branch.InteriorB
    else:
        price, branch = boundary, Branch.BoundaryC
    return BestResponseOutcome(min(price, lambda_max), branch, mu, boundary, h)


# -- potential ---------------------------------------------------------------

def potential(prices, alpha) -> float:
    """Ordinal potential of the price game.

    Its change under a unilateral deviation equals the deviator's change
    in log-revenue.
    """
    lam = _lam_tuple(prices)
    if any(not p > 0.0 for p in lam):
        raise DomainError(f"potential needs strictly positive prices, got {lam}")
    base = math.fsum(math.log(p) - p for p in lam)
    S = math.fsum(aj * math.exp(-lj) for aj, lj in zip(_alpha_tuple(alpha), lam))
    return base if S <= 1.0 else base - math.log(S)


# -- equilibria --------------------------------------------------------------

class TraceEntry(NamedTuple):
    round: int
    operator: int
    old_price: float
    new_price: float
    potential: float
    region: Region


@dataclass
class EquilibriumResult:
    prices: PriceProfile
    revenues: list[float]
    region: RegionLabel
    rounds: int
    converged: bool
    trace: list[TraceEntry] = field(default_factory=list)
    # None when the producer cannot tell (e.g. best-response dynamics)
    unique: bool | None = True
    interval: str | None = None

    @property
    def total_revenue(self) -> float:
        return math.fsum(self.revenues)


def round_robin(I: int) -> list[int]:
    return list(range(I))


def first_mover(k: int, I: int) -> list[int]:
    """Update order in which operator ``k`` has already committed to its price.

    The others respond in cyclic order starting after ``k``, and ``k``
    moves last in each round.
    """
    return [(k + 1 + j) % I for j in range(I)]


def best_response_dynamics(initial, alpha, N: int, order: Iterable[int] | None = None,
                           br_tol: float = DEFAULT_BR_TOL,
                           max_rounds: int = DEFAULT_MAX_ROUNDS,
                           lambda_max: float = DEFAULT_LAMBDA_MAX,
                           tol_C: float = DEFAULT_TOL_C) -> EquilibriumResult:
    """Sequential myopic best responses until a full round moves no price.

    ``order`` lists the operators updated within each round (default
    round robin). A potential decrease beyond rounding raises
    PotentialDecreaseError.
    """
    a = _alpha_tuple(alpha)
    lam = list(_lam_tuple(initial))
    I = len(a)
    if len(lam) != I:
        raise InvalidParameterError(f"{len(lam)} initial prices for {I} operators")
    if any(not p > 0.0 for p in lam):
        raise InvalidParameterError(f"initial prices must be positive, got {lam}")
    order = round_robin(I) if order is None else list(order)
    if not order or any(not 0 <= k < I for k in order):
        raise InvalidParameterError(f"bad update order {order}")

    trace: list[TraceEntry] = []
    current = potential(lam, a)
    converged = False
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        moved = 0.0
        for i in order:
            old = lam[i]
            new = best_response(i, lam[:i] + lam[i + 1:], a, lambda_max).price
            lam[i] = new
            value = potential(lam, a)
            if value < current - POTENTIAL_SLACK * max(1.0, abs(current)):
                raise PotentialDecreaseError(
                    f"potential fell from {current!r} to {value!r} "
                    f"when operator {i + 1} moved {old!r} -> {new!r}")
            current = max(current, value)
            trace.append(TraceEntry(rounds, i, old, new, value, classify(lam, a, tol_C).region))
            moved = max(moved, abs(new - old))
        if moved <= br_tol:
            converged = True
            break
    prices = PriceProfile(tuple(lam), max(lambda_max, max(lam)))
    return EquilibriumResult(prices, revenues(lam, a, N), classify(lam, a, tol_C), rounds,
                             converged, trace, unique=None, interval=None)


def alpha_interval(alpha: float, I: int) -> str:
    """Which of the three equilibrium regimes a symmetric ``alpha`` falls in."""
    if alpha < math.e / I:
        return "A1"
    if alpha > math.exp(I / (I - 1)) / I:
        return "A3"
    return "A2"


def symmetric_ne(alpha_scalar, I: int, N: int, tol_C: float = DEFAULT_TOL_C) -> EquilibriumResult:
    """Closed-form symmetric Nash equilibrium for equal alphas.

    For ``alpha`` in the middle regime the equilibrium set is a continuum
    on the coverage boundary; the symmetric member ``log(I alpha)`` is
    returned with ``unique=False``.
    """
    if isinstance(alpha_scalar, AlphaProfile):
        if not alpha_scalar.symmetric:
            raise InvalidParameterError(
                "symmetric_ne needs equal alphas; use best_response_dynamics instead")
        I = alpha_scalar.I
        alpha_scalar = alpha_scalar.alpha[0]
    alpha = float(alpha_scalar)
    if not alpha > 0.0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if I < 2:
        raise InvalidParameterError(f"need at least two operators, got I={I}")
    interval = alpha_interval(alpha, I)
    if interval == "A1":
        lam = 1.0
    elif interval == "A3":
        lam = I / (I - 1)
    else:
        lam = math.log(I * alpha)
    a = (alpha,) * I
    prices = (lam,) * I
    inner = math.e / I < alpha < math.exp(I / (I - 1)) / I
    return EquilibriumResult(PriceProfile(prices, max(DEFAULT_LAMBDA_MAX, lam)),
                             revenues(prices, a, N), classify(prices, a, tol_C), 0, True, [],
                             unique=not inner, interval=interval)


# -- CSV ---------------------------------------------------------------------

TRACE_HEADER = ["round", "operator", "old_price", "new_price", "potential", "region"]


def write_trace_csv(result: EquilibriumResult, path) -> None:
    with csv_writer(path) as w:
        w.writerow(TRACE_HEADER)
        for e in result.trace:
            w.writerow([e.round, e.operator + 1, format(e.old_price, ".17g"),
                        format(e.new_price, ".17g"), format(e.potential, ".17g"),
                        str(e.region)])


def read_trace_csv(path) -> list[TraceEntry]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {rows[0]}")
    return [TraceEntry(int(r[0]), int(r[1]) - 1, float(r[2]), float(r[3]), float(r[4]),
                       Region(r[5])) for r in rows[1:]]
