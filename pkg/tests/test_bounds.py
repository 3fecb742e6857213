import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensolver import bounds
from ensolver.logreal import LogReal, log_sum
from ensolver.votes import agreement_floor
from ensolver.world import WorldConfig

N_PAPER = 2.9e12
EX43 = dict(M=10, N_S=26.0**5, tau=0.5, betas=(0.9,) * 10)


def cfg(M, N_S, tau, alpha, betas, T=0):
    return WorldConfig(M, N_S, tau, alpha, tuple(betas), T)


def rational_oeb(M, N, tau):
    return Fraction(math.comb(M, M // 2), N ** agreement_floor(M, tau))


# logreal


def test_logreal_arithmetic():
    a, b = LogReal.from_float(0.25), LogReal.from_float(0.5)
    assert float(a * b) == pytest.approx(0.125)
    assert float(a + b) == pytest.approx(0.75)
    assert float(b / a) == pytest.approx(2.0)
    assert float(b**3) == pytest.approx(0.125)
    assert float(a + LogReal.zero()) == pytest.approx(0.25)
    assert LogReal.one().log10 == 0.0


def test_log_sum_is_stable_far_below_double_range():
    tiny = [LogReal(-2000.0), LogReal(-2000.0 + math.log(3))]
    assert log_sum(tiny).ln_value == pytest.approx(-2000.0 + math.log(4))
    assert log_sum([]).ln_value == -math.inf


# combinatorics


def test_log_binomial_values():
    assert bounds.log_binomial(10, 5).ln_value == pytest.approx(math.log(252), rel=1e-14)
    assert bounds.log_binomial(7, 0).ln_value == 0.0
    big = math.comb(52, 26)
    assert math.exp(bounds.log_binomial(52, 26).ln_value) == pytest.approx(big, rel=1e-12)
    with pytest.raises(ValueError):
        bounds.log_binomial(5, 6)


# out-of-distribution error bound


def test_oeb_worked_example():
    e = bounds.oeb(10, 26**5, 0.5)
    assert e.ln_value == pytest.approx(math.log(252) - 25 * math.log(26), rel=1e-10)
    assert e.log10 == pytest.approx(-32.97, abs=0.01)


def test_oeb_can_exceed_one_for_tiny_domains():
    assert float(bounds.oeb(2, 2, 0.5)) == pytest.approx(1.0)


def test_oeb_table_domain():
    e = bounds.oeb(6, N_PAPER, 0.3)
    assert e.ln_value == pytest.approx(math.log(20) - 4 * math.log(N_PAPER), rel=1e-14)


@pytest.mark.parametrize("M", [2, 3, 7, 12, 20])
@pytest.mark.parametrize("N", [2, 3, 26, 1000, 10**6])
@pytest.mark.parametrize("tau", [0.3, 0.5, 0.7])
def test_oeb_matches_rational(M, N, tau):
    if agreement_floor(M, tau) < 1:
        pytest.skip("degenerate threshold")
    exact = rational_oeb(M, N, tau)
    ln_exact = math.log(exact.numerator) - math.log(exact.denominator)
    assert bounds.oeb(M, N, tau).ln_value == pytest.approx(ln_exact, rel=1e-10)


@pytest.mark.parametrize("M,tau", [(1, 0.5), (2, 0.6), (3, 0.7), (10, 0.95)])
def test_degenerate_threshold(M, tau):
    with pytest.raises(bounds.DegenerateThresholdError, match="degenerate threshold"):
        bounds.oeb(M, 100, tau)


# binomial range sums


def test_binomial_range_sum_examples():
    assert bounds.binomial_range_sum(2, 2, 2, 0.734, 0.739) == pytest.approx(0.734**2, rel=1e-12)
    assert bounds.binomial_range_sum(7, 0, 7, 0.6, 0.6) == pytest.approx(1.0, abs=1e-14)
    tail = sum(math.comb(10, i) * 0.9**i * 0.1 ** (10 - i) for i in range(6, 11))
    assert bounds.binomial_range_sum(10, 6, 10, 0.9, 0.9) == pytest.approx(tail, rel=1e-12)
    assert tail == pytest.approx(0.9984, abs=1e-4)


@settings(max_examples=200, deadline=None)
@given(
    M=st.integers(1, 15),
    data=st.data(),
    lo_b=st.fractions(Fraction(1, 100), Fraction(99, 100), max_denominator=100),
    hi_b=st.fractions(Fraction(1, 100), Fraction(99, 100), max_denominator=100),
)
def test_binomial_range_sum_matches_rational(M, data, lo_b, hi_b):
    bmin, bmax = sorted((lo_b, hi_b))
    lo = data.draw(st.integers(0, M))
    hi = data.draw(st.integers(lo, M))
    exact = sum(math.comb(M, i) * bmin**i * (1 - bmax) ** (M - i) for i in range(lo, hi + 1))
    got = bounds.binomial_range_sum(M, lo, hi, float(bmin), float(bmax))
    assert got == pytest.approx(float(exact), rel=1e-11, abs=1e-300)


# closed-form bounds


def test_rdr_examples():
    c = cfg(2, N_PAPER, 0.5, 0.2, (0.734, 0.739))
    assert bounds.rdr_lower_bound(c) == pytest.approx(0.908, abs=5e-4)
    at0 = c.replace(alpha=0.0)
    E = float(bounds.oeb(2, N_PAPER, 0.5))
    assert bounds.rdr_lower_bound(at0) == 1.0 - E
    ex = cfg(alpha=0.5, **EX43)
    assert bounds.rdr_lower_bound(ex) == pytest.approx(0.9991, abs=1e-4)


def test_correct_rate_examples():
    assert bounds.correct_rate_lower_bound(cfg(alpha=0.0, **EX43)) == 0.0
    tail = sum(math.comb(10, i) * 0.9**i * 0.1 ** (10 - i) for i in range(6, 11))
    assert bounds.correct_rate_lower_bound(cfg(alpha=0.5, **EX43)) == pytest.approx(0.5 * tail, rel=1e-12)
    assert bounds.correct_rate_lower_bound(cfg(2, N_PAPER, 0.5, 0.2, (0.734, 0.739))) == pytest.approx(
        0.2 * 0.734**2, rel=1e-9
    )


def test_skip_rate_examples():
    c = cfg(2, N_PAPER, 0.5, 0.2, (0.734, 0.739))
    head = 0.261**2 + 2 * 0.734 * 0.261
    assert bounds.skip_rate_lower_bound(c) == pytest.approx(0.2 * head + 0.8, rel=1e-9)
    E = float(bounds.oeb(6, 7, 0.5))
    at0 = cfg(6, 7, 0.5, 0.0, (0.5,) * 6)
    assert bounds.skip_rate_lower_bound(at0) == pytest.approx(1 - 7 / 6 * E, rel=1e-12)


def test_success_examples():
    ex = cfg(alpha=0.5, **EX43)
    assert bounds.success_rate_lower_bound(ex, 1) == pytest.approx(0.75, abs=0.01)
    assert bounds.success_rate_lower_bound(ex, 3) == pytest.approx(0.93, abs=0.01)
    assert bounds.success_rate_lower_bound(ex, 5) == pytest.approx(0.98, abs=0.01)
    c = cfg(2, N_PAPER, 0.5, 0.2, (0.734, 0.739))
    assert bounds.success_rate_lower_bound(c, 3) == pytest.approx(0.365, abs=5e-4)


def test_success_alpha_zero_is_finite():
    # 1 - rho is ~1e-12 here and must not be formed by subtraction
    c = cfg(6, N_PAPER, 0.5, 0.0, (0.7,) * 6)
    assert bounds.success_rate_lower_bound(c, 10**6) == 0.0


def test_geometric_sum_paths_agree():
    for r in (0.0, 0.3, 0.9, 0.999):
        horner = bounds.geometric_sum(r, 10_000)
        closed = (1 - r**10_001) / (1 - r)
        assert horner == pytest.approx(closed, rel=1e-9)
        big = bounds.geometric_sum(r, 10**7)
        assert big == pytest.approx(1 / (1 - r) if r < 1 else 0, rel=1e-9)


def test_assumption_a1_enforced():
    with pytest.raises(bounds.AssumptionError):
        bounds.rdr_lower_bound(cfg(2, 4, 0.5, 0.5, (0.2, 0.9)))


def test_bounds_finite_at_huge_domain():
    c = cfg(12, 1e13, 0.5, 0.5, (0.8,) * 12)
    rep = bounds.bound_report(c, 5)
    for v in (rep.rdr_lower, rep.correct_lower, rep.skip_lower, rep.success_lower):
        assert math.isfinite(v)
    assert math.isfinite(rep.oeb.ln_value)


def test_bound_report_vacuous_flags():
    rep = bounds.bound_report(cfg(2, 3, 0.5, 0.0, (0.5, 0.5)), 1)
    assert "correct" in rep.vacuous_names
    rep = bounds.bound_report(cfg(alpha=0.5, **EX43), 3)
    assert rep.vacuous_names == []


@settings(max_examples=300, deadline=None)
@given(
    M=st.integers(2, 12),
    N=st.sampled_from([3, 5, 10, 1000, 10**6, 2.9e12]),
    tau=st.sampled_from([0.3, 0.5, 0.7]),
    alpha=st.floats(0, 1),
    b=st.floats(0.35, 0.99),
    spread=st.floats(0, 0.3),
)
def test_success_bound_properties(M, N, tau, alpha, b, spread):
    if agreement_floor(M, tau) < 1:
        return
    betas = [min(b + spread * i / M, 1.0) for i in range(M)]
    if min(betas) <= 1 / N:
        return
    c = cfg(M, N, tau, alpha, betas)
    gamma = bounds.correct_rate_lower_bound(c)
    assert bounds.success_rate_lower_bound(c, 0) == gamma
    rho = bounds.skip_rate_lower_bound(c)
    seq = [bounds.success_rate_lower_bound(c, T) for T in range(6)]
    assert all(math.isfinite(v) for v in seq)
    if 0 < rho < 1:
        assert all(x <= y for x, y in zip(seq, seq[1:]))


# uniform tail gap


@pytest.mark.parametrize("M", range(2, 13))
@pytest.mark.parametrize("N", [2, 3, 5, 10, 10**3, 10**6])
@pytest.mark.parametrize("tau", [0.3, 0.5, 0.7])
def test_uniform_tail_gap_strict(M, N, tau):
    j = agreement_floor(M, tau)
    if j < 1:
        pytest.skip("degenerate threshold")
    lhs = sum(Fraction(math.comb(M, i), N**i) for i in range(j + 1, M + 1))
    rhs = rational_oeb(M, N, tau) / (N - 1)
    assert lhs < rhs
    got_l, got_r = bounds.uniform_tail_gap(M, N, tau)
    assert got_l < got_r


def test_uniform_tail_gap_examples():
    lhs, rhs = bounds.uniform_tail_gap(2, 2, 0.5)
    assert float(lhs) == pytest.approx(0.25) and float(rhs) == pytest.approx(1.0)
    lhs, rhs = bounds.uniform_tail_gap(10, 26**5, 0.5)
    # leading terms C(10,6)/N^6 and C(10,5)/(N^5 (N-1)) differ only by ~252/210
    assert lhs < rhs
    assert float(rhs / lhs) == pytest.approx(252 / 210, rel=1e-5)
