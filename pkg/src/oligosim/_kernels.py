"""Compiled inner loops for the user-population dynamics.

State vectors are laid out as ``(x_1, ..., x_I, x_0)``. Operators are
described by ``logw[i] = log(W_i / N)`` and their price ``lam[i]`` so
that ``U_i = logw[i] - log(x_i) - lam[i]``.
"""
import math

import numpy as np
from numba import njit

# below this share an operator is treated as empty (its RHS carries a factor x_i)
X_FLOOR = 1e-15
MAX_CORRECTION = 1e-8

RUNNING = 0
SETTLED = 1
REACHED = 2
TIME_UP = 3
DRIFT = -1
NONFINITE = -2


@njit(cache=True)
def utilities(x, logw, lam, out):
    n = lam.shape[0]
    for i in range(n):
        if x[i] > X_FLOOR:
            out[i] = logw[i] - math.log(x[i]) - lam[i]
        else:
            out[i] = np.inf


@njit(cache=True)
def rhs(x, logw, lam, U0, gamma, out, U):
    """Mean dynamics of the hybrid imitation / direct-selection protocol.

    Operators at or above the reservation utility follow plain replicator
    growth against the population-wide average (neutral share included);
    operators below it additionally leak users to the neutral operator at
    rate gamma and stop receiving returning users.
    """
    n = lam.shape[0]
    x0 = x[n]
    ubar = x0 * U0
    for i in range(n):
        if x[i] > X_FLOOR:
            U[i] = logw[i] - math.log(x[i]) - lam[i]
            ubar += x[i] * U[i]
    d0 = 0.0
    for i in range(n):
        xi = x[i]
        if xi <= X_FLOOR:
            out[i] = 0.0
        elif U[i] >= U0:
            out[i] = xi * (U[i] - ubar)
            d0 += x0 * xi * (U0 - U[i])
        else:
            out[i] = xi * (U[i] - ubar - (gamma - x0) * (U0 - U[i]))
            d0 += gamma * xi * (U0 - U[i])
    out[n] = d0


@njit(cache=True)
def _max_abs(v):
    m = 0.0
    for k in range(v.shape[0]):
        a = abs(v[k])
        if a > m or a != a:
            m = a
    return m


@njit(cache=True)
def _dist(x, target):
    m = 0.0
    for k in range(x.shape[0]):
        a = abs(x[k] - target[k])
        if a > m:
            m = a
    return m


@njit(cache=True)
def rk4_run(x, logw, lam, U0, gamma, dt, n_steps, settle_tol,
            record_every, target, target_tol):
    """Fixed-step RK4 with clamp-and-renormalise drift correction.

    ``x`` is advanced in place. Stops early when the vector field falls
    below ``settle_tol`` (max-norm) or, if ``target_tol > 0``, when ``x``
    is within ``target_tol`` of ``target``.

    Returns (times, states, n_rec, steps, status, max_correction,
    min_coordinate, max_defect).
    """
    m = x.shape[0]
    n = m - 1
    U = np.empty(n)
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    y = np.empty(m)

    cap = 1024
    times = np.empty(cap)
    states = np.empty((cap, m))
    times[0] = 0.0
    states[0, :] = x
    n_rec = 1

    max_corr = 0.0
    max_defect = 0.0
    min_coord = np.inf
    for k in range(m):
        if x[k] < min_coord:
            min_coord = x[k]
    status = RUNNING
    step = 0
    half = 0.5 * dt
    while True:
        if target_tol > 0.0 and _dist(x, target) < target_tol:
            status = REACHED
            break
        rhs(x, logw, lam, U0, gamma, k1, U)
        norm = _max_abs(k1)
        if not norm < np.inf:
            status = NONFINITE
            break
        if norm < settle_tol:
            status = SETTLED
            break
        if step >= n_steps:
            status = TIME_UP
            break
        for k in range(m):
            y[k] = x[k] + half * k1[k]
        rhs(y, logw, lam, U0, gamma, k2, U)
        for k in range(m):
            y[k] = x[k] + half * k2[k]
        rhs(y, logw, lam, U0, gamma, k3, U)
        for k in range(m):
            y[k] = x[k] + dt * k3[k]
        rhs(y, logw, lam, U0, gamma, k4, U)
        s = 0.0
        for k in range(m):
            y[k] = x[k] + dt * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]) / 6.0
            if y[k] < min_coord:
                min_coord = y[k]
            if y[k] < 0.0:
                x[k] = 0.0
            else:
                x[k] = y[k]
            s += x[k]
        if not (s > 0.0 and s < np.inf):
            status = NONFINITE
            break
        defect = abs(s - 1.0)
        if defect > max_defect:
            max_defect = defect
        corr = 0.0
        for k in range(m):
            x[k] /= s
            c = abs(x[k] - y[k])
            if c > corr:
                corr = c
        if corr > max_corr:
            max_corr = corr
        step += 1
        if corr > MAX_CORRECTION:
            status = DRIFT
            break
        if step % record_every == 0:
            if n_rec == times.shape[0]:
                times = _grow1(times)
                states = _grow2(states)
            times[n_rec] = step * dt
            states[n_rec, :] = x
            n_rec += 1
    if step % record_every != 0:
        if n_rec == times.shape[0]:
            times = _grow1(times)
            states = _grow2(states)
        times[n_rec] = step * dt
        states[n_rec, :] = x
        n_rec += 1
    return times, states, n_rec, step, status, max_corr, min_coord, max_defect


@njit(cache=True)
def _grow1(a):
    b = np.empty(2 * a.shape[0])
    b[:a.shape[0]] = a
    return b


@njit(cache=True)
def _grow2(a):
    b = np.empty((2 * a.shape[0], a.shape[1]))
    b[:a.shape[0], :] = a
    return b
