"""Compiled inner loops.

Everything here works on flat float64 arrays so the public modules can stay
plain Python. Parameter vectors are packed in ``NDSParams.as_array`` order:
``(a, v, b, c, d, k, theta, eta0)``.
"""

import math

import numpy as np
from numba import njit

DIVERGENCE_BOUND = 1e6


@njit(cache=True, nogil=True)
def _out_of_bounds(x, y, u, bound):
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(u)):
        return True
    return abs(x) > bound or abs(y) > bound or abs(u) > bound


@njit(cache=True, nogil=True)
def simulate_nds(initial, params, steps, weights, delays, onset, inputs, bound):
    """Iterate the NDS map.

    Returns ``(states, spikes, feedback, n_recorded, diverged_at)``; only the
    first ``n_recorded`` rows are meaningful. ``diverged_at`` is -1 when the
    run stayed within ``bound``.
    """
    a, v, b, c, d, k, theta, eta0 = (
        params[0], params[1], params[2], params[3],
        params[4], params[5], params[6], params[7],
    )
    n = steps + 1
    states = np.zeros((n, 3))
    spikes = np.zeros(n, np.int8)
    feedback = np.zeros(n)
    x = initial[0]
    y = initial[1]
    u = initial[2]
    states[0, 0] = x
    states[0, 1] = y
    states[0, 2] = u
    for t in range(n):
        f = 0.0
        if t >= onset:
            for j in range(weights.size):
                src = t - delays[j]
                if src >= 0 and spikes[src] == 1:
                    f += weights[j]
        feedback[t] = f
        if t == steps:
            break
        inp = inputs[t]
        if u > theta:
            nu = eta0
            spikes[t + 1] = 1
        else:
            nu = u + d * (v + u * (-x) + k * u) + f + inp
        nx = x + b * (-y - u)
        ny = y + c * (x + a * y)
        x = nx
        y = ny
        u = nu
        states[t + 1, 0] = x
        states[t + 1, 1] = y
        states[t + 1, 2] = u
        if _out_of_bounds(x, y, u, bound):
            return states, spikes, feedback, t + 2, t + 1
    return states, spikes, feedback, n, -1


@njit(cache=True, nogil=True)
def rossler_euler(initial, a, b, c, ts, steps, substeps, bound):
    """Forward Euler on the Rössler field, sampled every ``substeps`` sub-steps."""
    n = steps + 1
    states = np.zeros((n, 3))
    x = initial[0]
    y = initial[1]
    u = initial[2]
    states[0, 0] = x
    states[0, 1] = y
    states[0, 2] = u
    h = ts / substeps
    for t in range(steps):
        for _ in range(substeps):
            dx = -y - u
            dy = x + a * y
            du = b + u * (x - c)
            x = x + h * dx
            y = y + h * dy
            u = u + h * du
        states[t + 1, 0] = x
        states[t + 1, 1] = y
        states[t + 1, 2] = u
        if _out_of_bounds(x, y, u, bound):
            return states, t + 2, t + 1
    return states, n, -1


@njit(cache=True, nogil=True)
def modified_rossler(initial, a, b, c, d, v, k, steps, bound):
    n = steps + 1
    states = np.zeros((n, 3))
    x = initial[0]
    y = initial[1]
    u = initial[2]
    states[0, 0] = x
    states[0, 1] = y
    states[0, 2] = u
    for t in range(steps):
        nx = x + b * (-y - u)
        ny = y + c * (x + a * y)
        nu = u + d * (v + u * (-x + k))
        x = nx
        y = ny
        u = nu
        states[t + 1, 0] = x
        states[t + 1, 1] = y
        states[t + 1, 2] = u
        if _out_of_bounds(x, y, u, bound):
            return states, t + 2, t + 1
    return states, n, -1


@njit(cache=True, nogil=True)
def periodic_at(states, spikes, start, p, eps, check_spikes):
    n = states.shape[0]
    for t in range(start, n - p):
        if check_spikes and spikes[t + p] != spikes[t]:
            return False
        for i in range(3):
            if not abs(states[t + p, i] - states[t, i]) < eps:
                return False
    return True


@njit(cache=True, nogil=True)
def smallest_period(states, spikes, start, max_period, eps, check_spikes):
    for p in range(1, max_period + 1):
        if periodic_at(states, spikes, start, p, eps, check_spikes):
            return p
    return -1


@njit(cache=True, nogil=True)
def earliest_lock(states, spikes, lower, p, eps):
    """First index >= ``lower`` from which period ``p`` holds to the end."""
    n = states.shape[0]
    t = n - p - 1
    while t >= lower:
        if spikes[t + p] != spikes[t]:
            break
        ok = True
        for i in range(3):
            if not abs(states[t + p, i] - states[t, i]) < eps:
                ok = False
        if not ok:
            break
        t -= 1
    return t + 1


@njit(cache=True, nogil=True)
def _advance(state, spikes, t, params, f):
    a, v, b, c, d, k, theta, eta0 = (
        params[0], params[1], params[2], params[3],
        params[4], params[5], params[6], params[7],
    )
    x = state[0]
    y = state[1]
    u = state[2]
    if u > theta:
        nu = eta0
        spikes[t + 1] = 1
    else:
        nu = u + d * (v + u * (-x) + k * u) + f
    state[0] = x + b * (-y - u)
    state[1] = y + c * (x + a * y)
    state[2] = nu


@njit(cache=True, nogil=True)
def _delayed_sum(spikes, t, weights, delays):
    f = 0.0
    for j in range(weights.size):
        src = t - delays[j]
        if src >= 0 and spikes[src] == 1:
            f += weights[j]
    return f


@njit(cache=True, nogil=True)
def lyapunov_pair(ref, pert, params, steps, renorm_interval, separation,
                  weights, delays, onset, bound):
    """Two-trajectory stretch estimate.

    Each copy keeps its own spike history, so a reset taken by only one copy
    shows up as a separation jump. Returns ``(sum_log_stretch, failed_at)``.
    """
    a_state = ref.copy()
    b_state = pert.copy()
    spikes_a = np.zeros(steps + 1, np.int8)
    spikes_b = np.zeros(steps + 1, np.int8)
    total = 0.0
    for t in range(steps):
        fa = 0.0
        fb = 0.0
        if t >= onset:
            fa = _delayed_sum(spikes_a, t, weights, delays)
            fb = _delayed_sum(spikes_b, t, weights, delays)
        _advance(a_state, spikes_a, t, params, fa)
        _advance(b_state, spikes_b, t, params, fb)
        if _out_of_bounds(a_state[0], a_state[1], a_state[2], bound) or _out_of_bounds(
            b_state[0], b_state[1], b_state[2], bound
        ):
            return total, t + 1
        if (t + 1) % renorm_interval == 0:
            dist = 0.0
            for i in range(3):
                diff = b_state[i] - a_state[i]
                dist += diff * diff
            dist = math.sqrt(dist)
            if dist == 0.0:
                # identical copies cannot be renormalised; restart the offset
                total += math.log(1e-300 / separation)
                b_state[0] = a_state[0] + separation
                b_state[1] = a_state[1]
                b_state[2] = a_state[2]
                continue
            total += math.log(dist / separation)
            scale = separation / dist
            for i in range(3):
                b_state[i] = a_state[i] + (b_state[i] - a_state[i]) * scale
    return total, -1
