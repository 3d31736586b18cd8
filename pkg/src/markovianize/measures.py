"""Non-Markovianity functionals of a process Choi state.

The minimisation over Markovian processes that defines the exact measures is
not performed.  Two computable reference processes are used instead, both of
which upper-bound the minimised quantity:

* the maximally mixed Choi state, giving ``nm_two_identity``;
* the product of the process's own marginals over the Markov partition,
  giving ``nm_one_marginal``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from math import sqrt

import numpy as np

from . import numerics as nx
from .errors import InvalidStateError
from .process import ProcessChoi, markov_product

RADICAND_TOL = 1e-12


@dataclass(frozen=True)
class NmReport:
    purity: float
    n2_identity: float
    n1_marginal: float
    diamond_lower: float
    diamond_upper: float

    def as_dict(self) -> dict:
        return asdict(self)


def purity(upsilon: ProcessChoi) -> float:
    m = upsilon.matrix
    return float(np.vdot(m, m).real)


def nm_two_identity(upsilon: ProcessChoi) -> float:
    """Half the Hilbert-Schmidt distance to the maximally mixed Choi state."""
    rad = purity(upsilon) - 1.0 / upsilon.dims.choi_dim
    if rad < -RADICAND_TOL:
        raise InvalidStateError(
            f"purity below 1/d_S^(2k+1) by {-rad:.3e}: not a valid Choi state")
    return 0.5 * sqrt(max(rad, 0.0))


def marginal_difference(upsilon: ProcessChoi) -> np.ndarray:
    return upsilon.matrix - markov_product(upsilon).matrix_hermitian()


def nm_one_marginal(upsilon: ProcessChoi) -> float:
    """Half the trace distance between ``upsilon`` and its product of marginals."""
    return 0.5 * nx.schatten_norm(marginal_difference(upsilon), 1)


def nm_report(upsilon: ProcessChoi) -> NmReport:
    n1 = nm_one_marginal(upsilon)
    return NmReport(
        purity=purity(upsilon),
        n2_identity=nm_two_identity(upsilon),
        n1_marginal=n1,
        diamond_lower=n1,
        diamond_upper=upsilon.dims.choi_dim * n1,
    )
