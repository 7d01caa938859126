"""Closed-form C^inf bump machinery shared by the modulation partition and symbols.

Everything here is built from the standard mollifier phi(x) = exp(-1/x) on x > 0,
so all cutoffs are genuinely smooth with analytic first derivatives.
"""

import numpy as np

# Support constants of the base time/modulation cutoff: identically one on
# [-INNER, INNER], supported in [-OUTER, OUTER].
INNER = 5.0 / 4.0
OUTER = 8.0 / 5.0


def _phi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _phi_prime(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def smoothstep(x):
    """C^inf monotone step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = _phi(x)
    b = _phi(1.0 - x)
    return a / (a + b + np.finfo(float).tiny)


def smoothstep_prime(x):
    x = np.asarray(x, dtype=float)
    a = _phi(x)
    b = _phi(1.0 - x)
    ap = _phi_prime(x)
    bp = _phi_prime(1.0 - x)
    den = (a + b) ** 2 + np.finfo(float).tiny
    return (ap * b + a * bp) / den


def eta0(tau):
    """Even smooth cutoff: 1 on [-5/4, 5/4], supported in [-8/5, 8/5]."""
    t = np.abs(np.asarray(tau, dtype=float))
    return smoothstep((OUTER - t) / (OUTER - INNER))


def eta_j(tau, j):
    """Dyadic annulus cutoff eta_j = eta0(tau/2^j) - eta0(tau/2^(j-1)), j >= 1."""
    if j == 0:
        return eta0(tau)
    return eta0(np.asarray(tau, dtype=float) / 2.0**j) - eta0(
        np.asarray(tau, dtype=float) / 2.0 ** (j - 1)
    )


def eta_le(tau, m):
    """Telescoped partial sum eta_{<=m} = eta0(tau / 2^m)."""
    return eta0(np.asarray(tau, dtype=float) / 2.0**m)


def plateau(t, lo, hi, width):
    """Smooth plateau: 1 on [lo, hi], 0 outside [lo - width, hi + width]."""
    t = np.asarray(t, dtype=float)
    left = smoothstep((t - (lo - width)) / width)
    right = smoothstep(((hi + width) - t) / width)
    return left * right


def next_pow2(n):
    n = int(n)
    p = 1
    while p < n:
        p *= 2
    return p
