"""Independent reference computations shared by the test modules."""

import numpy as np

from ndslab.core import StateVec, nds_step


def det3(m):
    """Cofactor expansion; works for complex entries."""
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def fd_jacobian(s, p, h=1e-6):
    cols = []
    for i in range(3):
        hi = h * max(1.0, abs(s[i]))
        up = list(s)
        dn = list(s)
        up[i] += hi
        dn[i] -= hi
        f_up, _ = nds_step(StateVec(*up), p)
        f_dn, _ = nds_step(StateVec(*dn), p)
        cols.append((np.array(f_up) - np.array(f_dn)) / (2 * hi))
    return np.array(cols).T


def increments(s, p):
    x, y, u = s
    return (p.b * (-y - u), p.c * (x + p.a * y), p.d * (p.v + u * (-x) + p.k * u))


def brute_force_period(states, spikes, transient, max_period, eps):
    """Direct transcription of the period definition, for cross-checking."""
    n = len(states)
    if not any(spikes[transient:]):
        return None
    for p in range(1, max_period + 1):
        if all(
            spikes[t + p] == spikes[t] and max(abs(states[t + p] - states[t])) < eps
            for t in range(transient, n - p)
        ):
            return p
    return None
