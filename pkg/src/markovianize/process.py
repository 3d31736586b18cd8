"""Choi states of multi-step processes built from system-environment unitaries.

Leg order
---------
A k-step process on a ``d_S``-dimensional system has ``2k + 1`` legs, each of
dimension ``d_S``, stored in the order::

    (S_out, in_1, out_1, in_2, out_2, ..., in_k, out_k)

``out_i`` records the system state handed to the i-th intervention (the
system right after ``U_{i-1}``) and ``in_i`` is the leg maximally entangled
with what the intervention feeds back into ``U_i``.  ``S_out`` is the system
after the final unitary ``U_k``.  Leg position of ``in_i`` is ``2i - 1`` and
of ``out_i`` is ``2i``.

The Choi state is normalised to unit trace (ancilla pairs carry the
normalised maximally entangled state).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence, TextIO

import numpy as np

from . import numerics as nx
from .errors import DimensionMismatchError, InvalidStateError, NotUnitaryError

STATE_TOL = 1e-10


@dataclass(frozen=True)
class ProcessDims:
    d_E: int
    d_S: int
    k: int

    def __post_init__(self):
        if self.d_E < 1 or self.d_S < 2 or self.k < 0:
            raise DimensionMismatchError(
                f"need d_E >= 1, d_S >= 2, k >= 0; got {self.d_E}, {self.d_S}, {self.k}")

    @property
    def d_ES(self) -> int:
        return self.d_E * self.d_S

    @property
    def n_legs(self) -> int:
        return 2 * self.k + 1

    @property
    def choi_dim(self) -> int:
        return self.d_S ** self.n_legs

    @property
    def dilation_dim(self) -> int:
        return self.d_E * self.choi_dim

    @property
    def leg_dims(self) -> list[int]:
        return [self.d_S] * self.n_legs


def input_leg(i: int) -> int:
    """Leg position of ``in_i`` (1-based step index)."""
    return 2 * i - 1


def output_leg(i: int) -> int:
    """Leg position of ``out_i`` (1-based step index)."""
    return 2 * i


@dataclass
class ProcessChoi:
    dims: ProcessDims
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (self.dims.choi_dim,) * 2:
            raise DimensionMismatchError(
                f"Choi matrix shape {self.matrix.shape} does not match "
                f"d_S^(2k+1) = {self.dims.choi_dim}")

    def validate(self, tol: float = STATE_TOL) -> None:
        """Raise unless the matrix is Hermitian, PSD and of unit trace within ``tol``."""
        _check_state(self.matrix, tol, "process Choi state")


@dataclass
class MarkovChoi:
    """Product-form process: one factor per group of the Markov partition.

    ``groups[j]`` lists the leg positions of factor ``j`` in ascending order,
    which is also the subsystem order inside ``factors[j]``.
    """
    dims: ProcessDims
    groups: tuple[tuple[int, ...], ...]
    factors: list[np.ndarray] = field(default_factory=list)

    def to_matrix(self) -> np.ndarray:
        """Tensor product of the factors, reordered into the standard leg order."""
        concat = [leg for g in self.groups for leg in g]
        m = nx.kron_all(self.factors)
        perm = [concat.index(leg) for leg in range(self.dims.n_legs)]
        return nx.permute_subsystems(m, [self.dims.d_S] * len(concat), perm)

    def to_choi(self) -> ProcessChoi:
        return ProcessChoi(self.dims, self.matrix_hermitian())

    def matrix_hermitian(self) -> np.ndarray:
        m = self.to_matrix()
        return 0.5 * (m + m.conj().T)


def _check_state(rho: np.ndarray, tol: float, what: str) -> None:
    try:
        nx.check_hermitian(rho, tol)
    except Exception as exc:
        raise InvalidStateError(f"{what} is not Hermitian: {exc}") from None
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidStateError(f"{what} has trace {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < -tol:
        raise InvalidStateError(f"{what} has negative eigenvalue {lo:.3e}")


def max_entangled(d: int) -> np.ndarray:
    """Normalised projector onto ``sum_i |ii> / sqrt(d)``."""
    if d < 2:
        raise ValueError("max_entangled needs d >= 2")
    v = np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)
    return np.outer(v, v.conj())


def swap_system_ancilla(i: int, dims: ProcessDims) -> np.ndarray:
    """Permutation unitary on ``E (x) S (x) legs`` swapping ``S`` with ``out_i``.

    The dilation space is ordered ``E, S, in_1, out_1, ..., in_k, out_k``;
    each ``(in_i, out_i)`` pair starts in the maximally entangled state.
    Dense: intended for small brute-force checks only.
    """
    if not 1 <= i <= dims.k:
        raise IndexError(f"step index {i} outside 1..{dims.k}")
    sub = [dims.d_E] + [dims.d_S] * dims.n_legs
    n = len(sub)
    # subsystem 1 is S, leg position p lives at subsystem 1 + p
    a, b = 1, 1 + output_leg(i)
    perm = list(range(n))
    perm[a], perm[b] = perm[b], perm[a]
    D = prod(sub)
    idx = np.arange(D).reshape(sub).transpose(perm).reshape(D)
    s = np.zeros((D, D), dtype=complex)
    s[np.arange(D), idx] = 1.0
    return s


def state_factor(rho0: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Return ``K`` with ``rho0 = K K^dagger``, dropping numerically null directions."""
    w, v = nx.hermitian_eigh(rho0)
    keep = w > tol * max(w[0], 1.0)
    return v[:, keep] * np.sqrt(w[keep])


def _check_unitaries(unitaries: Sequence[np.ndarray], dims: ProcessDims) -> None:
    if len(unitaries) != dims.k + 1:
        raise DimensionMismatchError(
            f"need k + 1 = {dims.k + 1} step unitaries, got {len(unitaries)}")
    for j, u in enumerate(unitaries):
        if np.shape(u) != (dims.d_ES, dims.d_ES):
            raise DimensionMismatchError(
                f"unitary {j} has shape {np.shape(u)}, expected {(dims.d_ES,) * 2}")
        res = nx.unitarity_residual(u)
        if res > nx.UNITARY_TOL:
            raise NotUnitaryError(f"step unitary {j} has residual {res:.3e}")


def choi_from_factor(factor: np.ndarray, unitaries: Sequence[np.ndarray],
                     dims: ProcessDims, check: bool = True) -> ProcessChoi:
    """Build the Choi state from a factor ``K`` of the initial state ``K K^dagger``.

    Each column of ``K`` is propagated as a vector on the dilation space; the
    step unitaries act on the leading ``(E, S)`` block only.
    """
    if check:
        _check_unitaries(unitaries, dims)
    dE, dS, k = dims.d_E, dims.d_S, dims.k
    factor = np.asarray(factor, dtype=complex)
    if factor.ndim != 2 or factor.shape[0] != dims.d_ES:
        raise DimensionMismatchError(f"state factor must have {dims.d_ES} rows")
    r = factor.shape[1]
    psi = np.eye(dS, dtype=complex) / np.sqrt(dS)  # (s', in)

    x = np.asarray(unitaries[0]) @ factor
    x = x.reshape(dE, dS, r)                       # axes (E, S, R)
    for i in range(1, k + 1):
        n_prev = 2 * (i - 1)
        xm = np.moveaxis(x, 1, -1)                 # (E, R, legs..., out_i)
        y = np.multiply.outer(xm, psi)             # (E, R, legs..., out_i, S, in_i)
        legs = list(range(2, 2 + n_prev))
        y = y.transpose([0, 3 + n_prev, 1] + legs + [4 + n_prev, 2 + n_prev])
        shape = y.shape
        x = (np.asarray(unitaries[i]) @ y.reshape(dims.d_ES, -1)).reshape(shape)
    # x axes: (E, S_out, R, in_1, out_1, ...)
    order = [1] + list(range(3, x.ndim)) + [0, 2]
    m = x.transpose(order).reshape(dims.choi_dim, dE * r)
    ups = m @ m.conj().T
    return ProcessChoi(dims, 0.5 * (ups + ups.conj().T))


def build_process_choi(rho0: np.ndarray, unitaries: Sequence[np.ndarray],
                       dims: ProcessDims) -> ProcessChoi:
    """Choi state of the k-step process generated by ``unitaries`` from ``rho0``."""
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dims.d_ES, dims.d_ES):
        raise DimensionMismatchError(
            f"initial state has shape {rho0.shape}, expected {(dims.d_ES,) * 2}")
    _check_state(rho0, STATE_TOL, "initial state")
    _check_unitaries(unitaries, dims)
    return choi_from_factor(state_factor(rho0), unitaries, dims, check=False)


def markov_groups(k: int) -> tuple[tuple[int, ...], ...]:
    """Leg groups of the Markov partition, one per single-step channel.

    ``(S_out, in_k), (out_k, in_{k-1}), ..., (out_2, in_1), (out_1)``, each
    sorted by leg position.
    """
    if k == 0:
        return ((0,),)
    groups = [(0, input_leg(k))]
    for i in range(k - 1, 0, -1):
        groups.append(tuple(sorted((output_leg(i + 1), input_leg(i)))))
    groups.append((output_leg(1),))
    return tuple(groups)


def markov_product(upsilon: ProcessChoi) -> MarkovChoi:
    """Product of the marginals of ``upsilon`` over the Markov partition."""
    dims = upsilon.dims
    groups = markov_groups(dims.k)
    factors = [nx.partial_trace(upsilon.matrix, dims.leg_dims, g) for g in groups]
    return MarkovChoi(dims, groups, factors)


def _check_effect(f: np.ndarray, d: int, tol: float) -> None:
    if np.shape(f) != (d, d):
        raise DimensionMismatchError(f"final effect must be {d}x{d}")
    nx.check_hermitian(f, tol)
    w = np.linalg.eigvalsh(0.5 * (f + f.conj().T))
    if w[0] < -tol or w[-1] > 1 + tol:
        raise InvalidStateError("final effect must satisfy 0 <= F <= 1")


def _check_intervention(j: np.ndarray, d: int, tol: float) -> None:
    if np.shape(j) != (d * d, d * d):
        raise DimensionMismatchError(f"intervention Choi must be {d * d}x{d * d}")
    nx.check_hermitian(j, tol)
    w = np.linalg.eigvalsh(0.5 * (j + j.conj().T))
    tr = float(np.sum(w))
    if w[0] < -tol or tr < -tol or tr > d + tol:
        raise InvalidStateError("intervention Choi must be PSD with trace in [0, d_S]")


def event_probability(upsilon: ProcessChoi, intervention_chois: Sequence[np.ndarray],
                      final_effect: np.ndarray, tol: float = STATE_TOL) -> float:
    """Joint probability of a sequence of intervention outcomes.

    ``intervention_chois[i-1]`` is the unnormalised Choi matrix
    ``sum_ab |a><b| (x) A(|a><b|)`` (input factor first) of the CP map applied
    at slot ``i``; ``final_effect`` is the POVM element measured on ``S_out``.
    The identity channel's Choi ``sum_ab |aa><bb|`` at every slot together
    with ``final_effect = 1`` gives probability one.
    """
    dims = upsilon.dims
    d, k = dims.d_S, dims.k
    if len(intervention_chois) != k:
        raise DimensionMismatchError(
            f"expected {k} intervention Choi matrices, got {len(intervention_chois)}")
    final_effect = np.asarray(final_effect, dtype=complex)
    _check_effect(final_effect, d, tol)
    # each intervention maps out_i (its input) to in_i (its output); reorder
    # its factors from (input, output) to the leg order (in_i, out_i)
    ops = [final_effect.T]
    for j in intervention_chois:
        j = np.asarray(j, dtype=complex)
        _check_intervention(j, d, tol)
        ops.append(nx.permute_subsystems(j, [d, d], [1, 0]))
    lam = nx.kron_all(ops)
    # d_S^k tr[Y lam^T] with the unit-trace Y
    p = float(d ** k * np.sum(upsilon.matrix * lam).real)
    if p < -tol or p > 1 + tol:
        raise InvalidStateError(f"probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


# -- serialisation -----------------------------------------------------------

def dump_choi(upsilon: ProcessChoi, fh: TextIO) -> None:
    """Write ``upsilon`` in the ``upsilon v1`` text format (bit-exact)."""
    dims = upsilon.dims
    fh.write(f"upsilon v1 {dims.d_E} {dims.d_S} {dims.k}\n")
    m = upsilon.matrix
    for r in range(m.shape[0]):
        for c in range(m.shape[1]):
            z = m[r, c]
            fh.write(f"{r} {c} {float(z.real)!r} {float(z.imag)!r}\n")


def load_choi(fh: TextIO) -> ProcessChoi:
    header = fh.readline().split()
    if len(header) != 5 or header[:2] != ["upsilon", "v1"]:
        raise ValueError(f"not an 'upsilon v1' file: {' '.join(header)!r}")
    dims = ProcessDims(int(header[2]), int(header[3]), int(header[4]))
    D = dims.choi_dim
    m = np.zeros((D, D), dtype=complex)
    seen = 0
    for line in fh:
        if not line.strip():
            continue
        r, c, re, im = line.split()
        m[int(r), int(c)] = complex(float(re), float(im))
        seen += 1
    if seen != D * D:
        raise ValueError(f"expected {D * D} entries, found {seen}")
    return ProcessChoi(dims, m)
