"""High-precision reference evaluations of the analytic bounds.

Written directly in ``mpmath`` arithmetic from the closed-form expressions,
sharing no code with :mod:`markovianize.bounds`, so it can serve as an
independent check of the exact-rational / log2 implementation.
"""
from __future__ import annotations

import mpmath as mp

DPS = 60


def _mpf(x):
    return mp.mpf(x)


def expected_purity(d_E, d_S, k):
    with mp.workdps(DPS):
        dE, dS = _mpf(d_E), _mpf(d_S)
        dES = dE * dS
        return (dE**2 - 1) / (dE * (dES + 1)) * ((dE**2 - 1) / (dES**2 - 1)) ** k + 1 / dE


def haar_B(d_E, d_S, k):
    with mp.workdps(DPS):
        E = expected_purity(d_E, d_S, k)
        D = _mpf(d_S) ** (2 * k + 1)
        dE = _mpf(d_E)
        if dE >= D:
            return mp.sqrt(D * E - 1) / 2
        y = 1 - dE / D
        x = dE / D * (1 + y)
        return (mp.sqrt(dE * E - x) + y) / 2


def haar_C(d_E, d_S, k):
    with mp.workdps(DPS):
        dS = _mpf(d_S)
        return _mpf(d_E) * dS * (k + 1) / 16 * ((dS - 1) / (dS ** (k + 1) - 1)) ** 2


def eta(d_E, d_S, k):
    with mp.workdps(DPS):
        dS = _mpf(d_S)
        return (_mpf(d_E) ** 4 * dS ** (2 * (k + 2)) + dS ** (-(2 * k + 1))) / 4


def design_tail_bound(d_S, log2_dE, k, t, epsilon, delta, m):
    """Unclamped bound value as an ``mpf`` (no overflow at any in-scope size)."""
    with mp.workdps(DPS):
        d_E = mp.mpf(2) ** log2_dE
        dS, m, dl, eps = _mpf(d_S), _mpf(m), _mpf(delta), _mpf(epsilon)
        pre = dS ** (3 * m * (2 * k + 1)) / dl ** (2 * m)
        C = haar_C(d_E, d_S, k)
        B = haar_B(d_E, d_S, k)
        body = (m / C) ** m + (2 * B) ** (2 * m) + eps / (d_E * dS) ** t * eta(d_E, d_S, k) ** (2 * m)
        return pre * body


def haar_tail_probability(delta, d_E, d_S, k):
    with mp.workdps(DPS):
        D = _mpf(d_S) ** (2 * k + 1)
        return mp.exp(-4 * haar_C(d_E, d_S, k) * _mpf(delta) ** 2 / D**2)
