"""Ensemble sampling of processes and empirical statistics of their measures.

Sample ``i`` of an ensemble with base seed ``s`` draws from
``RngStream(s, i)`` only, so every sample is a pure function of
``(s, i)`` and any parallel schedule reproduces the same records.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.stats import beta

from . import designs, measures
from .designs import CircuitSpec
from .errors import DimensionMismatchError, DomainError, ResourceCapError
from .numerics import RngStream, haar_unitary
from .process import ProcessChoi, ProcessDims, choi_from_factor, state_factor

MAX_DILATION_DIM = 2 ** 13

Kind = Literal["haar", "design"]
Measure = Literal["purity", "n2id", "n1marg"]
MEASURES: tuple[str, ...] = ("purity", "n2id", "n1marg")


@dataclass(frozen=True)
class EnsembleSpec:
    """Distribution over k-step processes.

    ``initial_state`` is ``"all-zero"`` for the pure product ``|0...0>``
    (default; the Haar purity closed form assumes a pure initial state),
    ``"mixed-env"`` for ``(I_E/d_E) (x) |0><0|_S``, or ``"explicit"`` with
    the matrix given as ``rho0``.  For ``kind="design"`` the system is the
    last ``log2(d_S)`` qubits of an ``n = log2(d_E d_S)`` qubit register.
    """
    kind: Kind
    dims: ProcessDims
    samples: int
    base_seed: int = 0
    circuit: Optional[CircuitSpec] = None
    initial_state: Literal["all-zero", "mixed-env", "explicit"] = "all-zero"
    rho0: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    force: bool = False
    force_zero_phases: bool = False

    def __post_init__(self):
        if self.samples < 1:
            raise DomainError("need at least one sample")
        if self.kind == "design":
            if self.circuit is None:
                raise DomainError("design ensembles need a CircuitSpec")
            d = self.dims.d_ES
            if d & (d - 1) or self.dims.d_S & (self.dims.d_S - 1):
                raise DimensionMismatchError("design ensembles need power-of-two d_E and d_S")
            if 1 << self.circuit.n != d:
                raise DimensionMismatchError(
                    f"circuit on {self.circuit.n} qubits does not match d_E*d_S = {d}")
        elif self.kind != "haar":
            raise DomainError(f"unknown ensemble kind {self.kind!r}")
        if self.initial_state == "explicit" and self.rho0 is None:
            raise DomainError("explicit initial state requires rho0")
        if self.dims.dilation_dim > MAX_DILATION_DIM and not self.force:
            raise ResourceCapError(
                f"dilation dimension {self.dims.dilation_dim} exceeds {MAX_DILATION_DIM}")

    def describe(self) -> dict:
        out = {
            "kind": self.kind,
            "d_E": self.dims.d_E,
            "d_S": self.dims.d_S,
            "k": self.dims.k,
            "samples": self.samples,
            "base_seed": self.base_seed,
            "initial_state": self.initial_state,
        }
        if self.circuit is not None:
            out["circuit"] = asdict(self.circuit)
        return out


def initial_factor(spec: EnsembleSpec) -> np.ndarray:
    dE, dS = spec.dims.d_E, spec.dims.d_S
    if spec.initial_state == "mixed-env":
        k = np.zeros((dE * dS, dE), dtype=complex)
        k[np.arange(dE) * dS, np.arange(dE)] = 1.0 / math.sqrt(dE)
        return k
    if spec.initial_state == "all-zero":
        k = np.zeros((dE * dS, 1), dtype=complex)
        k[0, 0] = 1.0
        return k
    return state_factor(np.asarray(spec.rho0, dtype=complex))


def sample_unitaries(spec: EnsembleSpec, index: int) -> list[np.ndarray]:
    if not 0 <= index < spec.samples:
        raise IndexError(f"sample index {index} outside 0..{spec.samples - 1}")
    rng = RngStream(spec.base_seed, index)
    n_steps = spec.dims.k + 1
    if spec.kind == "haar":
        return [haar_unitary(spec.dims.d_ES, rng) for _ in range(n_steps)]
    hook = (lambda d: np.ones_like(d)) if spec.force_zero_phases else None
    return [designs.build_w_circuit(spec.circuit, rng, phase_hook=hook, force=spec.force)
            for _ in range(n_steps)]


def sample_process(spec: EnsembleSpec, index: int) -> ProcessChoi:
    us = sample_unitaries(spec, index)
    return choi_from_factor(initial_factor(spec), us, spec.dims, check=False)


@dataclass(frozen=True)
class SampleRecord:
    index: int
    purity: float
    n2id: float
    n1marg: float

    def value(self, measure: str) -> float:
        return getattr(self, measure)


def measure_sample(spec: EnsembleSpec, index: int) -> SampleRecord:
    ups = sample_process(spec, index)
    return SampleRecord(
        index=index,
        purity=measures.purity(ups),
        n2id=measures.nm_two_identity(ups),
        n1marg=measures.nm_one_marginal(ups),
    )


def run_ensemble(spec: EnsembleSpec, threads: int = 1) -> list[SampleRecord]:
    """Measure every sample; records are returned in sample-index order."""
    indices = range(spec.samples)
    if threads <= 1:
        return [measure_sample(spec, i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: measure_sample(spec, i), indices))


@dataclass(frozen=True)
class TailEstimate:
    delta: float
    hits: int
    samples: int
    p_hat: float
    ci_low: float
    ci_high: float


def clopper_pearson(hits: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if hits == 0 else float(beta.ppf(a / 2, hits, n - hits + 1))
    hi = 1.0 if hits == n else float(beta.ppf(1 - a / 2, hits + 1, n - hits))
    return lo, hi


def tail_from_values(values: Sequence[float], delta: float) -> TailEstimate:
    v = np.asarray(values, dtype=float)
    hits = int(np.count_nonzero(v >= delta))
    n = int(v.size)
    lo, hi = clopper_pearson(hits, n)
    p = hits / n
    return TailEstimate(delta, hits, n, p, min(lo, p), max(hi, p))


def estimate_tail(spec: EnsembleSpec, measure: Measure, delta: float,
                  records: Optional[Sequence[SampleRecord]] = None,
                  threads: int = 1) -> TailEstimate:
    if measure not in MEASURES:
        raise DomainError(f"unknown measure {measure!r}")
    if records is None:
        records = run_ensemble(spec, threads)
    return tail_from_values([r.value(measure) for r in records], delta)


def mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DomainError("need at least two samples for a standard error")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def estimate_mean_purity(spec: EnsembleSpec,
                         records: Optional[Sequence[SampleRecord]] = None,
                         threads: int = 1) -> tuple[float, float]:
    if records is None:
        records = run_ensemble(spec, threads)
    return mean_stderr([r.purity for r in records])
