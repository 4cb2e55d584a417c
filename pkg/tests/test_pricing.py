import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oligosim.errors import DomainError, InvalidParameterError
from oligosim.market import AlphaProfile, Region, classify
from oligosim.pricing import (Branch, best_response, best_response_dynamics, first_mover, l0,
                              mu_bracket, mu_star, potential, read_trace_csv, revenue,
                              round_robin, solve_mu, symmetric_ne, write_trace_csv)

from oracles import harmonic_h, mu_bisect

E = math.e
E3 = math.exp(3)


def test_revenue_examples():
    assert revenue(0, (1, 1, 1), (0.5,) * 3, 1000) == pytest.approx(500 / E, rel=1e-12)
    assert revenue(1, (2, 2), (E3, E3), 1000) == pytest.approx(1000, rel=1e-12)


def test_revenue_continuous_at_l0():
    a = (1.3, 0.7, 0.9)
    others = (1.5, 2.0)
    b = l0(0, others, a)
    below = revenue(0, (math.nextafter(b, 0),) + others, a, 1000)
    at = revenue(0, (b,) + others, a, 1000)
    assert abs(below - at) < 1e-9


def test_l0_examples():
    p = 1 + math.log(2)
    assert l0(0, (p,), (E, E)) == pytest.approx(p, abs=1e-12)
    assert l0(0, (0.0,), (1.0, 1.0 - 1e-12)) > 20
    assert l0(0, (0.0,), (1.0, 1.0)) == math.inf
    assert l0(0, (0.0,), (1.0, 2.0)) == math.inf


def test_mu_star_examples():
    assert mu_star(0, (2.0,), (E3, E3)) == pytest.approx(2.0, abs=1e-12)
    p = 1 + math.log(2)
    # c = 2e here; the root is near 1.8526
    assert mu_star(0, (p,), (E, E)) == pytest.approx(mu_bisect(2 * E), abs=1e-10)
    assert solve_mu(E, 2) == pytest.approx(mu_bisect(E), abs=1e-10)
    assert solve_mu(E, 2) == pytest.approx(1.5671, abs=1e-4)


def test_solve_mu_domain():
    with pytest.raises(DomainError):
        solve_mu(0.0, 2)
    with pytest.raises(DomainError):
        mu_star(0, (math.inf,), (1.0, 1.0))


@given(st.floats(1e-6, 1e8), st.integers(2, 8))
def test_solve_mu_agrees_with_bisection(c, I):
    mu = solve_mu(c, I)
    assert mu > 1
    # below 1e-10 unless the double-precision evaluation floor is larger
    assert abs(math.exp(mu) * (mu - 1) - c) <= max(1e-10, 1e-15 * c * (mu + 2))
    assert mu == pytest.approx(mu_bisect(c), abs=1e-9)


@given(st.integers(2, 6), st.floats(0.1, 10), st.lists(st.floats(0.1, 6), min_size=5, max_size=5))
def test_mu_bracket_symmetric_alpha(I, alpha, lam):
    others = tuple(lam[:I - 1])
    mu = mu_star(0, others, (alpha,) * I)
    h = harmonic_h(others)
    lo, hi = sorted((I / (I - 1), h))
    assert lo - 1e-12 <= mu <= hi + 1e-12
    assert mu_bracket(alpha / sum(alpha * math.exp(-l) for l in others), I)[2] == \
        pytest.approx(h, abs=1e-12)


def test_best_response_examples():
    out = best_response(0, (1, 1), (0.5,) * 3)
    assert out.branch is Branch.UnitPriceA and out.price == 1.0
    out = best_response(0, (2.0,), (E3, E3))
    assert out.branch is Branch.InteriorB and out.price == pytest.approx(2.0, abs=1e-12)
    out = best_response(0, (1.1,), (E, E))
    assert out.branch is Branch.InteriorB
    assert out.price == pytest.approx(mu_bisect(E ** 1.1), abs=1e-10)
    assert out.price == pytest.approx(1.604, abs=1e-3)
    assert classify((out.price, 1.1), (E, E)).S == pytest.approx(1.451, abs=1e-3)


def test_best_response_boundary_branch():
    # mu* would uncover the market, so the answer is the boundary price
    p = 1 + math.log(2)
    out = best_response(0, (p,), (E, E))
    assert out.branch is Branch.BoundaryC
    assert out.price == pytest.approx(p, abs=1e-12)


random_game = st.tuples(st.integers(2, 5), st.integers(0, 10 ** 6))


def game(I, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.1, 5, I), rng.uniform(0.1, 5, I), int(rng.integers(I)), rng


@given(random_game)
def test_branches_are_exclusive_and_consistent(g):
    alpha, lam, i, _ = game(*g)
    others = tuple(np.delete(lam, i))
    out = best_response(i, others, alpha)
    beta = sum(alpha[j] * math.exp(-lam[j]) for j in range(len(lam)) if j != i)
    in_a = alpha[i] / E + beta < 1
    in_b = alpha[i] * math.exp(-out.mu_star) + beta > 1
    assert not (in_a and in_b)
    cand = list(others)
    cand.insert(i, out.price)
    label = classify(cand, alpha).region
    if out.branch is Branch.UnitPriceA:
        assert out.price == 1 and label is Region.A
    elif out.branch is Branch.InteriorB:
        assert label is Region.B
    else:
        assert out.price == pytest.approx(out.l0)


@settings(deadline=None)
@given(random_game)
def test_best_response_beats_grid(g):
    alpha, lam, i, _ = game(*g)
    others = tuple(np.delete(lam, i))
    out = best_response(i, others, alpha)

    def R(p):
        v = list(others)
        v.insert(i, p)
        return revenue(i, v, alpha, 1000)

    best = R(out.price)
    for p in np.linspace(0.05, 12, 400):
        assert R(p) <= best * (1 + 1e-9) + 1e-9


@given(random_game)
def test_log_revenue_concave_per_branch(g):
    alpha, lam, i, _ = game(*g)
    others = tuple(np.delete(lam, i))
    b = l0(i, others, alpha)
    grid = np.linspace(0.05, 10, 600)
    for side in (grid[grid < b], grid[grid > b]):
        vals = []
        for p in side:
            v = list(others)
            v.insert(i, p)
            vals.append(math.log(revenue(i, v, alpha, 1000)))
        if len(vals) >= 3:
            assert np.max(np.diff(vals, 2)) <= 1e-9


def test_potential_examples():
    assert potential((1, 1), (0.1, 0.1)) == -2.0
    assert potential((2, 2), (E3, E3)) == pytest.approx(2 * (math.log(2) - 2) - math.log(2 * E),
                                                        abs=1e-12)
    with pytest.raises(DomainError):
        potential((0.0, 1.0), (1, 1))


@given(random_game, st.floats(0.05, 6))
def test_potential_is_ordinal(g, new):
    alpha, lam, i, _ = game(*g)
    alt = lam.copy()
    alt[i] = new
    dR = revenue(i, alt, alpha, 1) - revenue(i, lam, alpha, 1)
    dP = potential(alt, alpha) - potential(lam, alpha)
    sR = 0 if abs(dR) < 1e-12 else np.sign(dR)
    sP = 0 if abs(dP) < 1e-12 else np.sign(dP)
    assert sR == sP


def test_dynamics_fig2_narrative():
    start = math.log(2 * E3)
    eq = best_response_dynamics((start, start), (E3, E3), 1000)
    assert eq.trace[0].new_price == pytest.approx(3.0, abs=0.01)
    assert eq.trace[1].new_price == pytest.approx(2.556, abs=0.06)
    assert eq.trace[1].new_price == pytest.approx(mu_bisect(E3 / (E3 * math.exp(-3.0))), abs=1e-6)
    assert eq.converged and eq.rounds <= 50
    assert eq.prices.lam == pytest.approx((2.0, 2.0), abs=1e-6)
    pots = [e.potential for e in eq.trace]
    assert all(b >= a - 1e-12 for a, b in zip(pots, pots[1:]))


def test_dynamics_unique_low_alpha():
    eq = best_response_dynamics((3.0, 0.4, 2.2), (0.5,) * 3, 1000)
    assert eq.prices.lam == (1.0, 1.0, 1.0) and eq.rounds <= 2


def test_dynamics_first_mover_equal_split():
    p = math.log(2 * E)
    eq = best_response_dynamics((p, p), (E, E), 1000, order=first_mover(0, 2))
    assert eq.prices.lam == pytest.approx((p, p), abs=1e-9)
    assert eq.revenues == pytest.approx([1000 * p / 2] * 2, rel=1e-9)


def test_schedules():
    assert round_robin(3) == [0, 1, 2]
    assert first_mover(0, 3) == [1, 2, 0]
    with pytest.raises(InvalidParameterError):
        best_response_dynamics((1, 1), (1, 1), 1000, order=[2])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10 ** 6))
def test_converged_result_is_nash(I, seed):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.2, 5, I)
    eq = best_response_dynamics(tuple(rng.uniform(0.2, 5, I)), alpha, 1000)
    assert eq.converged
    for i in range(I):
        br = best_response(i, eq.prices.others(i), alpha).price
        assert abs(br - eq.prices[i]) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10 ** 6))
def test_dynamics_agree_with_closed_form(I, seed):
    rng = np.random.default_rng(seed)
    lo, hi = E / I, math.exp(I / (I - 1)) / I
    start = (float(rng.uniform(0.2, 5)),) * I
    for alpha in (rng.uniform(0.05, 0.95) * lo, rng.uniform(1.05, 3) * hi):
        eq = best_response_dynamics(start, (alpha,) * I, 1000)
        sym = symmetric_ne(alpha, I, 1000)
        assert eq.prices.lam == pytest.approx(sym.prices.lam, abs=1e-6)
    alpha = float(rng.uniform(lo, hi))
    eq = best_response_dynamics(start, (alpha,) * I, 1000)
    assert abs(classify(eq.prices, (alpha,) * I).S - 1) < 1e-6


def test_symmetric_ne_table():
    eq = symmetric_ne(0.5, 3, 1000)
    assert eq.prices.lam == (1.0,) * 3 and eq.region.region is Region.A
    assert eq.revenues[0] == pytest.approx(183.94, abs=0.01)
    eq = symmetric_ne(E3, 2, 1000)
    assert eq.prices.lam == (2.0, 2.0) and eq.region.region is Region.B
    assert eq.revenues[0] == pytest.approx(1000, rel=1e-12)
    eq = symmetric_ne(E / 3, 3, 1000)
    assert eq.prices[0] == pytest.approx(1.0, abs=1e-15) and eq.unique
    assert not symmetric_ne(1.0, 3, 1000).unique
    with pytest.raises(InvalidParameterError):
        symmetric_ne(AlphaProfile((1.0, 2.0)), 2, 1000)


def test_trace_csv_roundtrip(tmp_path):
    start = math.log(2 * E3)
    eq = best_response_dynamics((start, start), (E3, E3), 1000)
    path = tmp_path / "trace.csv"
    write_trace_csv(eq, path)
    assert path.read_text().splitlines()[0] == "round,operator,old_price,new_price,potential,region"
    assert read_trace_csv(path) == eq.trace
