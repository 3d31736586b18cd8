"""Dense complex linear algebra used throughout the package.

All matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Subsystem index 0 is the most significant factor of a tensor product, so
``kron(a, b)`` has ``a`` on subsystem 0 and ``b`` on subsystem 1.
"""
from __future__ import annotations

from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, NotHermitianError

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10


class RngStream:
    """Reproducible random stream addressed by ``(seed, stream)``.

    Backed by the counter-based Philox generator keyed through a
    ``SeedSequence`` whose spawn key is the stream index, so the draws for a
    given pair do not depend on which other streams exist or on the order in
    which they are consumed.  An instance is single-consumer.
    """

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= seed < 2**64 and 0 <= stream < 2**64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def standard_normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def integers(self, high) -> np.ndarray:
        """Uniform integers in ``[0, high)``, elementwise for an array ``high``."""
        return self.generator.integers(0, high)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = kron(out, m)
    return out


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if any(d < 1 for d in dims):
        raise DimensionMismatchError(f"subsystem dimensions must be positive: {dims}")
    if prod(dims) != m.shape[0]:
        raise DimensionMismatchError(
            f"subsystem dimensions {tuple(dims)} do not multiply to {m.shape[0]}")


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems appear in the result in ascending index order regardless
    of the order in which ``keep`` lists them.
    """
    m = np.asarray(m)
    dims = [int(d) for d in dims]
    _check_dims(m, dims)
    n = len(dims)
    keep = sorted(set(keep))
    if any(not 0 <= i < n for i in keep):
        raise DimensionMismatchError(f"subsystem index out of range in {keep}")
    if len(keep) == n:
        return m.copy()
    t = m.reshape(dims + dims)
    # einsum subscripts: row indices 0..n-1, column indices n..2n-1;
    # traced subsystems share their row and column label.
    rows = list(range(n))
    cols = [i if i not in keep else n + i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    r = np.einsum(t, rows + cols, out)
    dk = prod(dims[i] for i in keep)
    return r.reshape(dk, dk)


def permute_subsystems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: subsystem ``perm[j]`` of the input becomes subsystem ``j``."""
    m = np.asarray(m)
    dims = [int(d) for d in dims]
    _check_dims(m, dims)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise DimensionMismatchError(f"{perm} is not a permutation of {n} subsystems")
    t = m.reshape(dims + dims)
    t = t.transpose(list(perm) + [n + p for p in perm])
    return t.reshape(m.shape)


def hermiticity_residual(h: np.ndarray) -> float:
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {h.shape}")
    res = hermiticity_residual(h)
    if res > tol:
        raise NotHermitianError(f"max |M - M^dagger| = {res:.3e} exceeds {tol:.0e}")


def unitarity_residual(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def hermitian_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted in descending order."""
    check_hermitian(h)
    h = np.asarray(h, dtype=complex)
    # symmetrize so LAPACK sees an exactly Hermitian input
    w = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    return w[::-1].copy()


def hermitian_eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs ``(w, v)`` with ``w`` descending and ``h = v diag(w) v^dagger``."""
    check_hermitian(h)
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return w[::-1].copy(), v[:, ::-1].copy()


def schatten_norm(m: np.ndarray, p: int) -> float:
    """Schatten 1- or 2-norm.

    The 1-norm is computed from the spectrum and therefore requires a
    Hermitian argument.
    """
    m = np.asarray(m)
    if p == 2:
        return float(np.sqrt(np.vdot(m, m).real))
    if p == 1:
        return float(np.sum(np.abs(hermitian_eigenvalues(m))))
    raise ValueError(f"only p = 1 or p = 2 is supported, got {p}")


def haar_unitary(d: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed ``d x d`` unitary (Ginibre + QR with phase fix)."""
    if d < 1:
        raise ValueError("dimension must be positive")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    # R's diagonal is a.s. nonzero for a Ginibre matrix
    return q * (diag / np.abs(diag))
