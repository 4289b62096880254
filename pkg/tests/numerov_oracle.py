"""Reference vibrational eigenfunctions by Numerov shooting.

Independent of the analytic Morse route in ``rovodef.vibration``: the
eigenvalues come from node-counting bisection on the potential alone, the
wavefunctions from outward/inward Numerov integration matched at the outer
turning point.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import simpson
from scipy.constants import c, h, hbar

_BIG = 1e120


def _morse_potential_cm1(r, D_e, a, r_e):
    return D_e * (1.0 - np.exp(-a * (r - r_e))) ** 2


def _numerov_factor(mu):
    # 2 mu / hbar^2 per cm^-1 of energy -> 1/m^2
    return 2.0 * mu * (h * c * 100.0) / hbar**2


def _count_nodes(E, V, step2, factor):
    """Nodes of the outward solution for each trial energy in ``E``."""
    n = V.size
    q = factor * (E[None, :] - V[:, None])  # (n_r, n_E)
    f = 1.0 + step2 * q / 12.0
    u_prev = np.zeros(E.size)
    u = np.full(E.size, 1e-30)
    nodes = np.zeros(E.size, dtype=int)
    for i in range(1, n - 1):
        u_next = (2.0 * u * (1.0 - 5.0 * step2 * q[i] / 12.0) - u_prev * f[i - 1]) / f[i + 1]
        nodes += (u_next * u < 0) | ((u_next == 0) & (u != 0))
        big = np.abs(u_next) > _BIG
        if big.any():
            scale = np.where(big, np.abs(u_next), 1.0)
            u_next = u_next / scale
            u = u / scale
        u_prev, u = u, u_next
    return nodes


def eigenvalues(V, r, mu, n_states, iterations=64):
    """Lowest ``n_states`` eigenvalues (cm^-1) of the grid problem with u=0 at both ends."""
    step2 = (r[1] - r[0]) ** 2
    factor = _numerov_factor(mu)
    lo = np.full(n_states, V.min())
    hi = np.full(n_states, V.max())
    target = np.arange(n_states)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        nodes = _count_nodes(mid, V, step2, factor)
        above = nodes > target  # at least target+1 eigenvalues below mid
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def _integrate(q, step2, start, stop, direction):
    """Numerov from ``start`` towards ``stop`` (inclusive), returning log-scaled values."""
    n = q.size
    f = 1.0 + step2 * q / 12.0
    u = np.zeros(n)
    logs = np.zeros(n)
    u[start] = 0.0
    u[start + direction] = 1e-30
    log_s = 0.0
    i = start + direction
    while i != stop:
        nxt = (2.0 * u[i] * (1.0 - 5.0 * step2 * q[i] / 12.0) - u[i - direction] * f[i - direction]) / f[i + direction]
        if abs(nxt) > _BIG:
            s = abs(nxt)
            nxt /= s
            # rescale the two most recent points so the recurrence stays consistent
            u[i] /= s
            log_s += math.log(s)
            logs[i] = log_s
        u[i + direction] = nxt
        logs[i + direction] = log_s
        i += direction
    return u, logs


def wavefunction(E, V, r, mu):
    """Normalised u(r) at eigenvalue ``E`` on grid ``r``."""
    step2 = (r[1] - r[0]) ** 2
    q = _numerov_factor(mu) * (E - V)
    n = r.size
    allowed = np.flatnonzero(q > 0)
    match = int(allowed[-1]) if allowed.size else n // 2
    match = min(max(match, 2), n - 3)
    u_out, l_out = _integrate(q, step2, 0, match, +1)
    u_in, l_in = _integrate(q, step2, n - 1, match, -1)
    # true value = u * exp(logs); align both pieces to the matching point
    left = u_out[: match + 1] * np.exp(l_out[: match + 1] - l_out[match])
    right = u_in[match:] * np.exp(l_in[match:] - l_in[match])
    right *= left[-1] / right[0]
    u = np.concatenate([left, right[1:]])
    u /= math.sqrt(simpson(u * u, x=r))
    return u


def morse_states(D_e, a, r_e, mu, r, n_states):
    """(energies, wavefunctions[n_states, n_r]) for a Morse well given in cm^-1 / SI."""
    V = _morse_potential_cm1(r, D_e, a, r_e)
    E = eigenvalues(V, r, mu, n_states)
    psi = np.array([wavefunction(e, V, r, mu) for e in E])
    return E, psi


def overlaps(psi_lower, psi_upper, r):
    return simpson(psi_lower[:, None, :] * psi_upper[None, :, :], x=r, axis=-1)
