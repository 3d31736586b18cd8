"""Random diagonal circuits forming approximate unitary t-designs.

A circuit ``W_ell`` on ``n`` qubits is the product::

    D_{2 ell + 1} H D_{2 ell} H ... H D_1

where ``H`` is a Hadamard on every qubit and every ``D_j`` is an independent
layer of commuting diagonal two-qubit gates, one per unordered qubit pair.
The gate on pair ``(i, j)`` is
``(diag(1, e^{i phi1}) (x) diag(1, e^{i phi2})) diag(1, 1, 1, e^{i theta})``
with ``phi1, phi2`` drawn from ``t + 1`` equally spaced angles and ``theta``
from ``floor(t/2) + 1`` equally spaced angles.

Qubit 0 is the most significant bit of a computational basis index.  Layers
are stored as integer draw indices and rendered to exact integer phase
numerators, so the compiled and numpy kernels agree bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import ceil, gcd, log2, pi
from typing import Callable, Optional, Sequence, TextIO

import numpy as np

from . import _backend
from .errors import DomainError, ResourceCapError
from .numerics import RngStream

MAX_DENSE_QUBITS = 12

PhaseHook = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhaseSets:
    t: int
    phi_values: tuple[float, ...]
    theta_values: tuple[float, ...]

    @property
    def n_phi(self) -> int:
        return self.t + 1

    @property
    def n_theta(self) -> int:
        return self.t // 2 + 1

    @property
    def modulus(self) -> int:
        """Common denominator ``L``: every angle is ``2 pi r / L`` for integer ``r``."""
        a, b = self.n_phi, self.n_theta
        return a * b // gcd(a, b)


def phase_sets(t: int) -> PhaseSets:
    if t < 1:
        raise DomainError(f"design order must be >= 1, got {t}")
    h = t // 2 + 1
    return PhaseSets(
        t=t,
        phi_values=tuple(2 * pi * m / (t + 1) for m in range(t + 1)),
        theta_values=tuple(2 * pi * m / h for m in range(h)),
    )


@dataclass(frozen=True)
class CircuitSpec:
    n: int
    t: int
    epsilon: float
    ell: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("a design circuit needs at least 2 qubits")
        if self.t < 1:
            raise DomainError("design order must be >= 1")
        if not 0 < self.epsilon <= 1:
            raise DomainError("epsilon must lie in (0, 1]")
        if self.ell < 0:
            raise DomainError("repetition count must be >= 0")

    @classmethod
    def for_target(cls, n: int, t: int, epsilon: float) -> "CircuitSpec":
        """Spec with the smallest repetition count reaching the target."""
        return cls(n, t, epsilon, min_repetitions(t, epsilon, n))

    @property
    def n_layers(self) -> int:
        return 2 * self.ell + 1


def qubit_pairs(n: int) -> np.ndarray:
    """All unordered pairs ``(i, j)``, ``i < j``, in lexicographic order."""
    return np.array(list(combinations(range(n), 2)), dtype=np.int64).reshape(-1, 2)


def sample_rdc_indices(n: int, t: int, rng: RngStream) -> np.ndarray:
    """Draw indices ``(phi1, phi2, theta)`` for every pair of one layer.

    Draw order is pair-major (lexicographic pairs), then ``phi1, phi2, theta``.
    """
    ps = phase_sets(t)
    npairs = n * (n - 1) // 2
    highs = np.tile(np.array([ps.n_phi, ps.n_phi, ps.n_theta], dtype=np.int64), npairs)
    return np.asarray(rng.integers(highs), dtype=np.int64).reshape(npairs, 3)


def layer_numerators(n: int, t: int, idx: np.ndarray) -> np.ndarray:
    """Integer phase numerators ``r`` (angle ``2 pi r / L``) of one layer."""
    ps = phase_sets(t)
    L = ps.modulus
    return _backend.kernels.accumulate_pair_phases(
        n, qubit_pairs(n), np.asarray(idx, dtype=np.int64),
        L // ps.n_phi, L // ps.n_theta, L)


def layer_phases(n: int, t: int, idx: np.ndarray) -> np.ndarray:
    """Additive phase exponents (radians, in ``[0, 2 pi)``) of one layer."""
    return (2 * pi / phase_sets(t).modulus) * layer_numerators(n, t, idx)


def sample_rdc_layer(n: int, t: int, rng: RngStream) -> np.ndarray:
    if n < 2 or t < 1:
        raise DomainError("need n >= 2 and t >= 1")
    return layer_phases(n, t, sample_rdc_indices(n, t, rng))


def sample_w_layers(spec: CircuitSpec, rng: RngStream) -> list[np.ndarray]:
    """Draw indices for the ``2 ell + 1`` diagonal layers, ``D_1`` first."""
    return [sample_rdc_indices(spec.n, spec.t, rng) for _ in range(spec.n_layers)]


def apply_hadamard_layer(m: np.ndarray) -> np.ndarray:
    """In-place ``H^{(x)n} m`` for a C-contiguous complex ``(2^n, c)`` array."""
    _backend.kernels.hadamard_rows(m.view(np.float64))
    return m


def check_dense_cap(n: int, force: bool = False, cap: int = MAX_DENSE_QUBITS) -> None:
    if n > cap and not force:
        raise ResourceCapError(f"dense {n}-qubit circuit exceeds the {cap}-qubit cap")


def circuit_from_layers(n: int, t: int, layers: Sequence[np.ndarray],
                        phase_hook: Optional[PhaseHook] = None,
                        force: bool = False) -> np.ndarray:
    """Dense unitary of the circuit with the given diagonal layers.

    ``phase_hook``, when given, maps each layer's complex diagonal before it
    is applied (a test hook for forcing or corrupting phases).
    """
    check_dense_cap(n, force)
    m = None
    for idx in layers:
        diag = np.exp(1j * layer_phases(n, t, idx))
        if phase_hook is not None:
            diag = np.asarray(phase_hook(diag), dtype=complex)
        if m is None:
            m = np.diag(diag)
        else:
            apply_hadamard_layer(m)
            m *= diag[:, None]
    return m if m is not None else np.eye(1 << n, dtype=complex)


def build_w_circuit(spec: CircuitSpec, rng: RngStream,
                    phase_hook: Optional[PhaseHook] = None,
                    force: bool = False) -> np.ndarray:
    check_dense_cap(spec.n, force)
    return circuit_from_layers(spec.n, spec.t, sample_w_layers(spec, rng),
                               phase_hook=phase_hook, force=force)


def _check_target(t: int, epsilon: float, n: int) -> None:
    if t < 1:
        raise DomainError("design order must be >= 1")
    if not 0 < epsilon <= 1:
        raise DomainError("epsilon must lie in (0, 1]")
    if n < 2:
        raise DomainError("need at least 2 qubits")


def gate_depth(t: int, epsilon: float, n: int) -> float:
    """Asymptotic non-commuting gate depth ``t - log2(epsilon) / n``."""
    _check_target(t, epsilon, n)
    return t - log2(epsilon) / n


def min_repetitions(t: int, epsilon: float, n: int) -> int:
    return int(ceil(gate_depth(t, epsilon, n)))


def gate_count(spec: CircuitSpec) -> tuple[int, int]:
    """``(two_qubit, hadamard)`` gate counts of ``W_ell``."""
    return spec.n_layers * spec.n * (spec.n - 1) // 2, 2 * spec.ell * spec.n


# -- dump format -------------------------------------------------------------

def dump_circuit(n: int, t: int, layers: Sequence[np.ndarray], fh: TextIO) -> None:
    """Write layers as replayable text.

    ``circuit v1 n t n_layers`` header, then one ``pair i j a b c`` line per
    gate, with a ``hadamard-layer`` line between consecutive layers.
    """
    fh.write(f"circuit v1 {n} {t} {len(layers)}\n")
    pairs = qubit_pairs(n)
    for j, idx in enumerate(layers):
        if j:
            fh.write("hadamard-layer\n")
        for (a, b), (p1, p2, th) in zip(pairs, np.asarray(idx)):
            fh.write(f"pair {a} {b} {p1} {p2} {th}\n")


def load_circuit(fh: TextIO) -> tuple[int, int, list[np.ndarray]]:
    head = fh.readline().split()
    if len(head) != 5 or head[:2] != ["circuit", "v1"]:
        raise ValueError("not a 'circuit v1' dump")
    n, t, n_layers = int(head[2]), int(head[3]), int(head[4])
    pairs = {tuple(p): r for r, p in enumerate(qubit_pairs(n).tolist())}
    layers: list[np.ndarray] = []
    cur = np.full((len(pairs), 3), -1, dtype=np.int64)
    for line in fh:
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "hadamard-layer":
            layers.append(cur)
            cur = np.full((len(pairs), 3), -1, dtype=np.int64)
        elif tok[0] == "pair":
            i, j, a, b, c = map(int, tok[1:])
            cur[pairs[(i, j)]] = (a, b, c)
        else:
            raise ValueError(f"unrecognised line {line!r}")
    layers.append(cur)
    if len(layers) != n_layers or any((lay < 0).any() for lay in layers):
        raise ValueError("incomplete circuit dump")
    return n, t, layers
