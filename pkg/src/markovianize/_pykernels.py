"""Pure numpy implementations of the circuit kernels.

Reference fallback for ``_ckernels``; both produce bit-identical output.
"""
from __future__ import annotations

import numpy as np


def accumulate_pair_phases(n, pairs, idx, mul_phi, mul_theta, modulus):
    """Phase numerators (mod ``modulus``) of one layer of diagonal pair gates.

    Basis state ``x`` has qubit ``q`` equal to bit ``n - 1 - q`` of ``x``.
    Pair ``p = (i, j)`` with draw indices ``(a, b, c)`` contributes
    ``a*mul_phi*x_i + b*mul_phi*x_j + c*mul_theta*x_i*x_j``.
    """
    pairs = np.asarray(pairs, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    x = np.arange(1 << n, dtype=np.int64)
    bits = (x[:, None] >> (n - 1 - np.arange(n, dtype=np.int64))[None, :]) & 1
    lin = np.zeros(n, dtype=np.int64)
    np.add.at(lin, pairs[:, 0], idx[:, 0] * mul_phi)
    np.add.at(lin, pairs[:, 1], idx[:, 1] * mul_phi)
    quad = np.zeros((n, n), dtype=np.int64)
    np.add.at(quad, (pairs[:, 0], pairs[:, 1]), idx[:, 2] * mul_theta)
    acc = bits @ lin + np.einsum("xi,ij,xj->x", bits, quad, bits)
    return acc % modulus


def hadamard_rows(m):
    """In-place ``H^{(x)n}`` on the row index of a real ``(2^n, c)`` array.

    Complex matrices are passed through their ``float64`` view.  Butterfly
    passes run from the least significant qubit upward.
    """
    N, c = m.shape
    s = 1.0 / np.sqrt(2.0)
    h = 1
    while h < N:
        v = m.reshape(N // (2 * h), 2, h, c)
        a = v[:, 0].copy()
        b = v[:, 1].copy()
        v[:, 0] = (a + b) * s
        v[:, 1] = (a - b) * s
        h *= 2
    return m
