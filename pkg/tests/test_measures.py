import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from markovianize import measures, numerics as nx
from markovianize.errors import InvalidStateError
from markovianize.numerics import RngStream, haar_unitary
from markovianize.process import (
    ProcessChoi, ProcessDims, build_process_choi, markov_product, max_entangled,
)

from conftest import random_state


def _haar_choi(dE, dS, k, seed):
    rng = RngStream(seed)
    dims = ProcessDims(dE, dS, k)
    rho0 = np.zeros((dE * dS, dE * dS))
    rho0[0, 0] = 1
    return build_process_choi(rho0, [haar_unitary(dE * dS, rng) for _ in range(k + 1)], dims)


def test_purity_extremes():
    dims = ProcessDims(2, 2, 1)
    v = np.zeros(8)
    v[3] = 1
    assert measures.purity(ProcessChoi(dims, np.outer(v, v))) == 1.0
    mixed = ProcessChoi(dims, np.eye(8) / 8)
    assert measures.purity(mixed) == pytest.approx(1 / 8, abs=1e-16)


def test_n2_identity_values():
    dims = ProcessDims(2, 2, 1)
    assert measures.nm_two_identity(ProcessChoi(dims, np.eye(8) / 8)) == 0.0
    v = np.ones(8) / math.sqrt(8)
    assert measures.nm_two_identity(ProcessChoi(dims, np.outer(v, v))) == pytest.approx(
        0.5 * math.sqrt(1 - 1 / 8), abs=1e-15)
    assert 0.5 * math.sqrt(7 / 8) == pytest.approx(0.467707, abs=1e-6)


def test_n2_identity_is_hs_distance():
    ups = _haar_choi(4, 2, 1, 3)
    ref = 0.5 * nx.schatten_norm(ups.matrix - np.eye(8) / 8, 2)
    assert measures.nm_two_identity(ups) == pytest.approx(ref, rel=1e-12)


def test_negative_radicand():
    dims = ProcessDims(1, 2, 0)
    # a radicand of -2e-13 is rounding noise and clamps; -2e-2 raises
    m = np.eye(2) * (0.5 - 1e-13)
    assert measures.nm_two_identity(ProcessChoi(dims, m)) == 0.0
    with pytest.raises(InvalidStateError):
        measures.nm_two_identity(ProcessChoi(dims, np.eye(2) * 0.49))


def test_identity_dynamics_is_markovian():
    rng = RngStream(7)
    for dE, k in ((2, 1), (3, 2), (2, 0)):
        dims = ProcessDims(dE, 2, k)
        rho0 = nx.kron(random_state(dE, rng), random_state(2, rng))
        ups = build_process_choi(rho0, [np.eye(2 * dE)] * (k + 1), dims)
        assert measures.nm_one_marginal(ups) <= 1e-12
        rep = measures.nm_report(ups)
        assert rep.diamond_lower <= 1e-12 and rep.diamond_upper <= 1e-10


def test_entangled_pair_across_partition():
    # Y = I/2 (x) Phi on (in_1, out_1): in_1 and out_1 sit in different groups
    dims = ProcessDims(1, 2, 1)
    ups = ProcessChoi(dims, nx.kron(np.eye(2) / 2, max_entangled(2)))
    diff = ups.matrix - np.eye(8) / 8
    oracle = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff)))
    assert oracle == pytest.approx(0.75, abs=1e-14)
    assert measures.nm_one_marginal(ups) == pytest.approx(oracle, abs=1e-13)


def test_report_maximally_mixed():
    rep = measures.nm_report(ProcessChoi(ProcessDims(3, 2, 2), np.eye(32) / 32))
    assert rep.purity == pytest.approx(1 / 32, abs=1e-16)
    assert rep.n2_identity == 0.0 and rep.n1_marginal <= 1e-15
    assert set(rep.as_dict()) == {"purity", "n2_identity", "n1_marginal",
                                  "diamond_lower", "diamond_upper"}


def test_report_bracket():
    ups = _haar_choi(16, 2, 1, 1)
    rep = measures.nm_report(ups)
    assert rep.diamond_upper == pytest.approx(8 * rep.diamond_lower, rel=1e-15)
    assert rep.n1_marginal >= 0.5 * nx.schatten_norm(measures.marginal_difference(ups), 2)


@given(st.sampled_from([(2, 2, 1), (4, 2, 1), (2, 2, 2), (3, 3, 1)]), st.integers(0, 2**31))
def test_norm_ordering(case, seed):
    ups = _haar_choi(*case, seed)
    diff = measures.marginal_difference(ups)
    assert 0.5 * nx.schatten_norm(diff, 2) <= measures.nm_one_marginal(ups) + 1e-13


@given(st.integers(0, 2**31))
def test_system_relabeling_invariance(seed):
    ups = _haar_choi(2, 2, 1, seed)
    w = haar_unitary(2, RngStream(seed, 1))
    wk = nx.kron_all([w] * 3)
    rot = ProcessChoi(ups.dims, wk @ ups.matrix @ wk.conj().T)
    assert measures.purity(rot) == pytest.approx(measures.purity(ups), rel=1e-12)
    assert measures.nm_two_identity(rot) == pytest.approx(measures.nm_two_identity(ups), rel=1e-10)
    # the Markov partition is respected by a leg-wise product, so N1 is preserved too
    assert measures.nm_one_marginal(rot) == pytest.approx(measures.nm_one_marginal(ups), abs=1e-12)


def test_markov_reference_is_product():
    ups = _haar_choi(4, 2, 2, 6)
    prod = markov_product(ups).to_choi()
    assert measures.nm_one_marginal(prod) <= 1e-12
