from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from timesp.asymptotics import (
    certify_nonvanishing,
    cesaro_fourier,
    cesaro_sweep,
    decay_scan,
    digit_stats,
    extract_density1,
    geometric_average,
    geometric_average_bound,
    psi_along,
    qualifying,
    star_condition_scan,
    to_base,
    upper_density_estimate,
    word_density,
)
from timesp.errors import DomainError, HypothesisError
from timesp.measures1d import BernoulliMeasure, COMeasure, Dirac, fourier
from timesp.sequences import Geometric, Polynomial

F = Fraction
MU_73 = BernoulliMeasure(2, (F(7, 10), F(3, 10)))


def runs_oracle(m: int, p: int):
    digits = np.base_repr(m, p) if m else ""
    blocks = [(int(d, 36), len(list(g))) for d, g in itertools.groupby(digits)]
    R0 = sum(1 for d, _ in blocks if d == 0)
    Rp1 = sum(1 for d, _ in blocks if d == p - 1)
    Nmid = sum(n for d, n in blocks if d not in (0, p - 1))
    return R0, Rp1, Nmid, len(blocks)


# ---------------------------------------------------------------- digits


def test_digit_examples():
    s = digit_stats(5, 2)
    assert (s.R0, s.Rp1, s.Nmid, s.psi, s.R) == (1, 2, 0, 3, 3)
    s = digit_stats(0, 2)
    assert (s.R0, s.Rp1, s.Nmid, s.psi, s.R) == (0, 0, 0, 0, 0)
    s = digit_stats(5, 3)
    assert (s.R0, s.Rp1, s.Nmid, s.psi) == (0, 1, 1, 2)
    for k in range(1, 40):
        assert digit_stats(2**k, 2).psi == 2


@given(st.integers(0, 10**30), st.integers(2, 10))
def test_digit_stats_match_oracle(m, p):
    s = digit_stats(m, p)
    R0, Rp1, Nmid, R = runs_oracle(m, p)
    assert (s.R0, s.Rp1, s.Nmid, s.R) == (R0, Rp1, Nmid, R)
    assert s.psi == s.R0 + s.Rp1 + s.Nmid
    if p == 2:
        assert s.psi == s.R and s.Nmid == 0
    if m >= 1:
        assert s.psi >= 1
    assert to_base(m, p) == ([int(c, 36) for c in np.base_repr(m, p)] if m else [])


@given(st.integers(1, 10**12))
def test_psi_trailing_zero_merge(m):
    # Appending a 0 digit merges into a trailing 0 block, else opens a new one.
    assert digit_stats(2 * m, 2).psi == digit_stats(m, 2).psi + (m % 2)


# ---------------------------------------------------------------- decay scan


def test_nonvanishing_certificates():
    assert certify_nonvanishing(MU_73) == "theta_0 > 1/2"
    # roots of 2/5 + 2z/5 + z^2/5 are -1 +- i, off the circle
    assert certify_nonvanishing(BernoulliMeasure(3, (F(2, 5), F(2, 5), F(1, 5)))).startswith("grid")
    # 2/5 + z/5 + 2z^2/5 vanishes where cos(theta) = -1/4
    with pytest.raises(HypothesisError):
        certify_nonvanishing(BernoulliMeasure(3, (F(2, 5), F(1, 5), F(2, 5))))
    with pytest.raises(HypothesisError):
        certify_nonvanishing(BernoulliMeasure(2, (F(1, 2), F(1, 2))))
    with pytest.raises(HypothesisError):
        decay_scan(BernoulliMeasure(3, (F(1, 3),) * 3), 1, 10)


def test_decay_scan_bracket():
    scan = decay_scan(MU_73, 1, 512)
    assert 0 < scan.min_ratio <= scan.max_ratio < math.inf
    assert scan.C1 <= scan.min_ratio and scan.C2 >= scan.max_ratio
    for m, psi, *_rest, a, ratio in scan.rows:
        assert scan.C1 <= ratio <= scan.C2
        assert abs(ratio - (-math.log(abs(fourier(MU_73, m).approx)) / psi)) < 1e-12
    wider = decay_scan(MU_73, 1, 1024)
    assert wider.min_ratio > 0 and wider.min_ratio <= scan.min_ratio


def test_decay_scan_powers_of_two():
    for k in range(1, 12):
        scan = decay_scan(MU_73, 2**k, 2**k)
        (row,) = scan.rows
        assert row[1] == 2 and math.isfinite(row[6])


# ---------------------------------------------------------------- density one


def recount(data, target, result):
    prev = 0
    for s in result.scales:
        ok = qualifying(data, target, s.k)
        count = int(ok[: s.N_k].sum())
        assert count == s.count
        assert F(count, s.N_k) >= 1 - F(1, 2**s.k)
        if prev:
            assert s.N_k >= 2 ** (s.k - 1) * prev and s.N_k > prev
        prev = s.N_k


def test_density_exact_data():
    data = np.zeros((300, 9))
    res = extract_density1(data, np.zeros(9), 4)
    assert res.complete
    last = res.scales[-1].N_k
    assert list(res.D) == list(range(1, last + 1))
    assert all(s.fraction == 1 for s in res.scales)


def test_density_squares():
    L, a_cap = 1 << 14, 6
    data = np.zeros((L, 2 * a_cap + 1))
    n = np.arange(1, L + 1)
    data[np.isin(n, np.arange(1, 200) ** 2), a_cap + 1] = 1.0
    res = extract_density1(data, np.zeros(2 * a_cap + 1), 5)
    assert res.complete
    assert not any(math.isqrt(d) ** 2 == d for d in res.D)
    recount(data, np.zeros(2 * a_cap + 1), res)


def test_density_adversarial_partial():
    L, a_cap = 1 << 12, 8
    n = np.arange(1, L + 1)
    j = np.floor(np.log(n) / np.log(4))
    data = np.zeros((L, 2 * a_cap + 1))
    data[n < 2 * 4**j, a_cap] = 1.0  # a = 0 column off target on half the blocks
    res = extract_density1(data, np.zeros(2 * a_cap + 1), 8)
    assert res.achieved_k < 8
    recount(data, np.zeros(2 * a_cap + 1), res)


def test_density_validation():
    with pytest.raises(DomainError):
        extract_density1(np.zeros((10, 4)), np.zeros(4), 1)
    with pytest.raises(DomainError):
        extract_density1(np.zeros((10, 5)), np.zeros(5), 3)


def test_upper_density_estimate():
    members = list(range(2, 1001, 2))
    est, counts = upper_density_estimate(members, 1000, 4)
    assert est == pytest.approx(0.5, abs=0.01)
    assert (1000, 500) in counts


# ---------------------------------------------------------------- averages


def test_cesaro_dirac_zero():
    for N in (1, 5, 50):
        assert cesaro_fourier(Dirac(F(0)), Polynomial((0, 1)), 1, N).value == 1


def test_cesaro_dirac_geometric_sum():
    x = F(1, 7)
    for N in range(1, 60):
        v = cesaro_fourier(Dirac(x), Polynomial((0, 1)), 1, N).value
        direct = sum(cmath.exp(2j * math.pi * n / 7) for n in range(N)) / N
        assert abs(v - direct) < 1e-13
        assert abs(v - geometric_average(x, N)) < 1e-13
        assert abs(v) <= geometric_average_bound(x, N) + 1e-13


def test_cesaro_bernoulli_smaller_than_first_term():
    mu = BernoulliMeasure(3, (F(1, 2), F(3, 10), F(1, 5)))
    avg = cesaro_fourier(mu, Geometric(2), 1, 64)
    assert abs(avg.value) < fourier(mu, 1).abs
    assert abs(avg.value) <= 1 + avg.error_bound


def test_cesaro_data_input():
    data = [1, 0, 1j, -1]
    vals = cesaro_sweep(data, None, 1, [1, 2, 4])
    assert [v.value for v in vals] == [1, 0.5, (1j) / 4]
    with pytest.raises(DomainError):
        cesaro_sweep(data, None, 1, [5])


def test_word_density_examples():
    assert word_density(2, 3, 1, "0", 50) > F(9, 10)
    assert word_density(2, 2, 1, "11", 100) == 0
    # the long word can only miss at small n
    assert word_density(2, 3, 1, "1", 20) == 1
    with pytest.raises(DomainError):
        word_density(2, 3, 1, "2", 10)


def test_psi_along_and_star_scan():
    pa = psi_along(Geometric(3), 1, 2, 40, 5)
    assert pa.values[0] == 1 and len(pa.values) == 40
    assert pa.fraction_above == F(sum(v >= 5 for v in pa.values), 40)
    mu = COMeasure(3, 3, 1)
    scan = star_condition_scan(mu, Geometric(2), 1, 0.5, 60, 4)
    assert 0 <= scan.upper_density <= 1
