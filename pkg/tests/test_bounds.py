import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from markovianize import bounds, oracle
from markovianize.errors import DomainError


def test_expected_purity_hand_values():
    assert bounds.expected_purity_haar(2, 2, 0) == Fraction(4, 5)
    assert bounds.expected_purity_haar(4, 2, 1) == Fraction(15, 36) * Fraction(15, 63) + Fraction(1, 4)
    assert bounds.expected_purity_haar(4, 2, 1) == Fraction(22, 63)


def test_expected_purity_large_limit():
    d_E = 2**40
    val = float(bounds.expected_purity_haar(d_E, 2, 1))
    assert val == pytest.approx(1 / 8 + 1 / d_E, rel=1e-9)


@given(st.integers(1, 200), st.integers(2, 5), st.integers(0, 4))
def test_expected_purity_range(d_E, d_S, k):
    e = bounds.expected_purity_haar(d_E, d_S, k)
    assert Fraction(1, d_S ** (2 * k + 1)) <= e <= 1


def test_haar_C_and_appendix():
    assert bounds.haar_C(2, 2, 1) == Fraction(1, 18)
    assert bounds.haar_C_scaled(2, 2, 1) == Fraction(2, 9)
    assert bounds.haar_C_scaled(256, 2, 1) == Fraction(256 * 2 * 2, 4) * Fraction(1, 9)


def test_eta_values():
    assert bounds.eta_exact(2, 2, 1) == Fraction(25603125, 100000)
    assert 2 ** bounds.eta_bound(2, 2, 1) == pytest.approx(256.03125, rel=1e-15)
    assert bounds.eta_bound(2**35, 2, 2) == pytest.approx(146.0, abs=1e-12)


def test_haar_B_vs_oracle_and_formula():
    d_E = 2**10
    e = bounds.expected_purity_haar(d_E, 2, 1)
    assert bounds.haar_B(d_E, 2, 1) == pytest.approx(0.5 * math.sqrt(float(8 * e - 1)), rel=1e-14)
    assert bounds.haar_B(d_E, 2, 1) == pytest.approx(float(oracle.haar_B(d_E, 2, 1)), rel=1e-14)


def test_haar_B_branch_continuity():
    for d_S, k in ((2, 0), (2, 1), (3, 1), (2, 2)):
        D = d_S ** (2 * k + 1)
        large = bounds.haar_B_parts(D, d_S, k, "large")
        small = bounds.haar_B_parts(D, d_S, k, "small")
        assert large == small


def test_haar_B_decreases_to_zero():
    vals = [bounds.haar_B(2**j, 2, 1) for j in range(3, 61)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-8


def test_haar_B_small_branch_matches_oracle():
    for d_E in (1, 2, 3, 5):
        assert bounds.haar_B(d_E, 2, 1) == pytest.approx(float(oracle.haar_B(d_E, 2, 1)), rel=1e-14)


def test_moment_bound_value():
    b = bounds.haar_moment_bound(1, 256, 2, 1)
    first = 1 / float(bounds.haar_C(256, 2, 1))
    second = (2 * bounds.haar_B(256, 2, 1)) ** 2
    assert first == pytest.approx(0.1406, abs=1e-4) and second == pytest.approx(0.0293, abs=1e-4)
    assert b == pytest.approx(first + second, rel=1e-12)
    assert b == pytest.approx(0.170, abs=1e-3)
    # (m/C)^m -> 1 as m -> 0; the (2B)^(2m) term also tends to 1
    m = 1e-9
    tiny = bounds.haar_moment_bound(m, 256, 2, 1) - second ** m
    assert tiny == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        bounds.haar_moment_bound(0, 256, 2, 1)


PREMISE = bounds.BoundParams(d_S=2, log2_dE=60, k=2, t=10, epsilon=1e-12, delta=0.1)


def test_design_bound_premise():
    m, br = bounds.optimize_m(PREMISE)
    assert 0 < m <= 2.5
    assert br.total_clamped <= 0.01
    req, ok = bounds.epsilon_condition(PREMISE, m)
    assert ok and math.log2(1e-12) < req


def test_epsilon_condition_fails_for_eps_one():
    p = bounds.BoundParams(2, 4, 1, 4, 1.0, 0.1)
    assert not bounds.epsilon_condition(p, 0.5)[1]


def test_small_m_is_vacuous():
    br = bounds.design_tail_bound(PREMISE, 1e-12)
    assert br.total_clamped == 1.0 and br.log2_total >= -1e-9


def test_m_domain():
    with pytest.raises(DomainError):
        bounds.design_tail_bound(PREMISE, 2.6)
    with pytest.raises(DomainError):
        bounds.BoundParams(2, 10, 1, 4, 1e-3, 0.1, m=0.0)
    with pytest.raises(DomainError):
        bounds.BoundParams(2, 10, 1, 4, 2.0, 0.1)
    with pytest.raises(DomainError):
        bounds.BoundParams(2, 10, 1, 4, 1e-3, 0.0)


def test_eps_zero_is_moment_assembly():
    for (lde, k, m) in ((8, 1, 0.5), (20, 0, 1.0), (12, 2, 0.25)):
        p = bounds.BoundParams(2, lde, k, 4, 0.0, 0.3)
        br = bounds.design_tail_bound(p, m)
        pre = 3 * m * (2 * k + 1) - 2 * m * math.log2(0.3)
        expect = pre + bounds.log2_haar_moment_bound(m, 2**lde, 2, k)
        assert br.log2_total == pytest.approx(expect, abs=1e-12)
        assert br.log2_term_eps == -math.inf


@given(st.integers(1, 12), st.integers(0, 3), st.integers(2, 10),
       st.floats(1e-15, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_breakdown_consistency(lde, k, t, eps, delta, frac):
    p = bounds.BoundParams(2, lde, k, t, eps, delta)
    br = bounds.design_tail_bound(p, frac * t / 4)
    terms = [br.log2_term_moment, br.log2_term_B, br.log2_term_eps]
    if max(terms) < 1000 and min(terms) > -1000:
        lin = sum(2.0 ** x for x in terms)
        assert 2.0 ** br.log2_total == pytest.approx(lin, rel=1e-12)


@given(st.integers(10, 60), st.integers(0, 4), st.integers(2, 10))
def test_optimizer_beats_grid(lde, k, t):
    import numpy as np
    p = bounds.BoundParams(2, lde, k, t, 1e-12, 0.1)
    m, br = bounds.optimize_m(p)
    grid = np.geomspace(t / 4 * 1e-6, t / 4, 2000)
    best = min(bounds.design_tail_bound(p, g).log2_total for g in grid)
    assert br.log2_total <= best + 1e-6 * abs(best) + 1e-9


@pytest.mark.parametrize("tup", [
    dict(d_S=2, log2_dE=60, k=2, t=10, epsilon=1e-12, delta=0.1, m=1.1),
    dict(d_S=3, log2_dE=1, k=0, t=2, epsilon=0.5, delta=0.9, m=0.3),
    dict(d_S=2, log2_dE=35, k=4, t=7, epsilon=1e-3, delta=0.02, m=1.7),
])
def test_tail_bound_vs_oracle(tup):
    br = bounds.design_tail_bound(bounds.BoundParams(tup["d_S"], tup["log2_dE"], tup["k"], tup["t"],
                                                     tup["epsilon"], tup["delta"]), tup["m"])
    with mp.workdps(60):
        ref = mp.log(oracle.design_tail_bound(**tup), 2)
        assert abs(mp.mpf(br.log2_total) - ref) * mp.log(2) <= 1e-9


def test_haar_tail_bound():
    thr, p = bounds.haar_tail_bound(0.05, 2**20, 2, 1)
    ref = oracle.haar_tail_probability(0.05, 2**20, 2, 1)
    assert p == pytest.approx(float(ref), rel=1e-12)
    assert thr == pytest.approx(8 * bounds.haar_B(2**20, 2, 1) + 0.05, rel=1e-15)
    assert bounds.haar_tail_bound(1e-12, 2**20, 2, 1)[1] == pytest.approx(1.0, abs=1e-9)
    _, pa = bounds.haar_tail_bound(0.05, 2**20, 2, 1, variant="linear")
    assert pa == pytest.approx(math.exp(-float(4 * bounds.haar_C(2**20, 2, 1)) / 64 * 0.05), rel=1e-12)
    with pytest.raises(DomainError):
        bounds.haar_tail_bound(0, 4, 2, 1)


def test_log2_fraction_huge():
    q = Fraction(3 ** 900, 2 ** 1200)
    assert bounds.log2_fraction(q) == pytest.approx(900 * math.log2(3) - 1200, rel=1e-14)
    assert bounds.log2_fraction(Fraction(0)) == -math.inf
