import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from markovianize import designs
from markovianize.errors import DomainError, ResourceCapError
from markovianize.numerics import RngStream, unitarity_residual
from markovianize.validation import five_matrix_oracle


def gate_oracle(n, pair, phi1, phi2, theta):
    """Dense diagonal of one two-qubit gate embedded in n qubits (qubit 0 most significant)."""
    i, j = pair
    out = np.ones(1 << n, dtype=complex)
    for x in range(1 << n):
        bi = (x >> (n - 1 - i)) & 1
        bj = (x >> (n - 1 - j)) & 1
        out[x] = np.exp(1j * (phi1 * bi + phi2 * bj + theta * bi * bj))
    return out


def hadamard_dense(n):
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, h)
    return out


def test_phase_sets():
    ps = designs.phase_sets(2)
    assert np.allclose(ps.phi_values, [0, 2 * np.pi / 3, 4 * np.pi / 3])
    assert np.allclose(ps.theta_values, [0, np.pi])
    ps1 = designs.phase_sets(1)
    assert np.allclose(ps1.phi_values, [0, np.pi]) and ps1.theta_values == (0.0,)
    assert designs.phase_sets(10).modulus == 66
    with pytest.raises(DomainError):
        designs.phase_sets(0)


def test_single_pair_diagonal():
    ps = designs.phase_sets(4)
    idx = np.array([[1, 3, 2]])
    phi1, phi2, th = ps.phi_values[1], ps.phi_values[3], ps.theta_values[2]
    got = np.exp(1j * designs.layer_phases(2, 4, idx))
    expect = np.exp(1j * np.array([0, phi2, phi1, phi1 + phi2 + th]))
    assert np.allclose(got, expect, atol=1e-15)


@given(st.integers(2, 6), st.integers(1, 10), st.integers(0, 2**31))
def test_layer_matches_gate_product(n, t, seed):
    ps = designs.phase_sets(t)
    idx = designs.sample_rdc_indices(n, t, RngStream(seed))
    expect = np.ones(1 << n, dtype=complex)
    for pair, (a, b, c) in zip(designs.qubit_pairs(n), idx):
        expect *= gate_oracle(n, pair, ps.phi_values[a], ps.phi_values[b], ps.theta_values[c])
    got = np.exp(1j * designs.layer_phases(n, t, idx))
    assert np.max(np.abs(got - expect)) <= 1e-12


def test_zero_draws_give_identity():
    idx = np.zeros((10, 3), dtype=np.int64)
    assert not designs.layer_numerators(5, 3, idx).any()


def test_layer_commutes_under_pair_shuffle():
    n, t = 5, 3
    ps = designs.phase_sets(t)
    idx = designs.sample_rdc_indices(n, t, RngStream(2))
    pairs = designs.qubit_pairs(n)
    order = np.random.default_rng(0).permutation(len(pairs))
    a = np.ones(1 << n, dtype=complex)
    for p, (x, y, z) in zip(pairs[order], idx[order]):
        a *= gate_oracle(n, p, ps.phi_values[x], ps.phi_values[y], ps.theta_values[z])
    assert np.allclose(a, np.exp(1j * designs.layer_phases(n, t, idx)), atol=1e-12)


def test_sample_rdc_layer_range():
    ph = designs.sample_rdc_layer(4, 2, RngStream(0))
    assert ph.shape == (16,) and np.all((ph >= 0) & (ph < 2 * np.pi))


def test_hadamard_layer_matches_dense(rng):
    for n in (1, 3, 5):
        m = rng.standard_normal((1 << n, 3)) + 1j * rng.standard_normal((1 << n, 3))
        expect = hadamard_dense(n) @ m
        assert np.allclose(designs.apply_hadamard_layer(m.copy()), expect, atol=1e-14)


def test_five_matrix_oracle():
    for seed in range(5):
        spec = designs.CircuitSpec(2, 3, 1.0, 1)
        layers = designs.sample_w_layers(spec, RngStream(seed))
        w = designs.circuit_from_layers(2, 3, layers)
        assert np.max(np.abs(w - five_matrix_oracle(2, 3, layers))) <= 1e-12
        assert np.allclose(w, designs.build_w_circuit(spec, RngStream(seed)), atol=0)


def test_w_matches_dense_product():
    n, t = 4, 2
    spec = designs.CircuitSpec(n, t, 1e-3, 2)
    layers = designs.sample_w_layers(spec, RngStream(3))
    h = hadamard_dense(n)
    expect = np.eye(1 << n, dtype=complex)
    for j, idx in enumerate(layers):
        if j:
            expect = h @ expect
        expect = np.diag(np.exp(1j * designs.layer_phases(n, t, idx))) @ expect
    assert np.max(np.abs(designs.circuit_from_layers(n, t, layers) - expect)) <= 1e-12


def test_ell0_is_diagonal():
    w = designs.build_w_circuit(designs.CircuitSpec(3, 2, 0.5, 0), RngStream(1))
    assert np.array_equal(w, np.diag(np.diag(w)))


@pytest.mark.parametrize("ell", [0, 1, 3])
def test_zero_phases_give_identity(ell):
    spec = designs.CircuitSpec(4, 2, 1e-3, ell)
    w = designs.build_w_circuit(spec, RngStream(0), phase_hook=lambda d: np.ones_like(d))
    assert np.max(np.abs(w - np.eye(16))) <= 1e-12


def test_unitarity_up_to_ten_qubits():
    for n in range(2, 11):
        spec = designs.CircuitSpec.for_target(n, 2, 1e-3)
        assert unitarity_residual(designs.build_w_circuit(spec, RngStream(n))) <= 1e-10


def test_dense_cap():
    spec = designs.CircuitSpec(13, 1, 1.0, 0)
    with pytest.raises(ResourceCapError):
        designs.build_w_circuit(spec, RngStream(0))


def test_repetitions_and_depth():
    assert designs.min_repetitions(10, 1e-12, 35) == 12
    assert designs.gate_depth(10, 1e-12, 35) == pytest.approx(10 + 12 * math.log2(10) / 35, rel=1e-15)
    assert designs.gate_depth(10, 1e-12, 35) == pytest.approx(11.139, abs=1e-3)
    for t in (1, 4, 10):
        assert designs.gate_depth(t, 1.0, 20) == t and designs.min_repetitions(t, 1.0, 20) == t
    assert designs.min_repetitions(2, 1e-3, 6) == 4
    assert designs.min_repetitions(10, 1e-12, 10**6) == 11
    assert all(designs.min_repetitions(10, 1e-12, n) <= 12 for n in range(35, 61))
    with pytest.raises(DomainError):
        designs.gate_depth(2, 0.0, 4)


def test_gate_counts():
    assert designs.gate_count(designs.CircuitSpec(2, 2, 1.0, 1)) == (3, 4)
    spec = designs.CircuitSpec.for_target(35, 10, 1e-12)
    assert spec.ell == 12 and designs.gate_count(spec)[0] == 25 * 595 == 14875
    r = designs.gate_count(designs.CircuitSpec(200, 2, 1.0, 3))[0] / designs.gate_count(
        designs.CircuitSpec(100, 2, 1.0, 3))[0]
    assert r == pytest.approx(4, rel=0.01)


def test_draw_order_is_pair_major():
    n, t = 3, 4
    idx = designs.sample_rdc_indices(n, t, RngStream(5))
    raw = RngStream(5).integers(np.array([5, 5, 3] * 3)).reshape(3, 3)
    assert np.array_equal(idx, raw)


def test_circuit_dump_roundtrip():
    spec = designs.CircuitSpec(4, 3, 1e-2, 2)
    layers = designs.sample_w_layers(spec, RngStream(8))
    buf = io.StringIO()
    designs.dump_circuit(4, 3, layers, buf)
    text = buf.getvalue()
    assert text.count("hadamard-layer") == 4
    assert sum(l.startswith("pair ") for l in text.splitlines()) == designs.gate_count(spec)[0]
    buf.seek(0)
    n, t, back = designs.load_circuit(buf)
    assert (n, t) == (4, 3) and all(np.array_equal(a, b) for a, b in zip(back, layers))
    with pytest.raises(ValueError):
        designs.load_circuit(io.StringIO("circuit v1 4 3 5\npair 0 1 0 0 0\n"))


@pytest.mark.slow
def test_first_moment_contracts():
    # average of U X U^dagger over the ensemble for traceless X
    n, t = 4, 2
    spec = designs.CircuitSpec.for_target(n, t, 1e-3)
    x = np.diag(np.r_[np.ones(8), -np.ones(8)]).astype(complex)
    acc = np.zeros((16, 16), dtype=complex)
    samples = 10_000
    for i in range(samples):
        w = designs.build_w_circuit(spec, RngStream(17, i))
        acc += w @ x @ w.conj().T
    mean = acc / samples
    assert np.linalg.norm(mean) <= 0.05 * np.linalg.norm(x)
