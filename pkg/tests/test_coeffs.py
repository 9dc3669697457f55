import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetalab.coeffs import (
    CoefficientSequence,
    EulerProductSpec,
    abscissa_estimates,
    derivative_coeffs,
    dirichlet_convolve,
    divisor_kappa,
    divisor_kappa_prefix,
    euler_coeffs,
    log_coeffs,
    logderiv_coeffs,
    mobius_prefix,
    power_coeffs,
    primes_up_to,
)
from zetalab.errors import DegenerateFitError, IncompleteSpecError, LengthError, ParameterError

ZETA = EulerProductSpec.zeta()


def brute_convolve(a, b, N):
    out = [0] * N
    for n in range(1, N + 1):
        out[n - 1] = sum(a[d - 1] * b[n // d - 1] for d in range(1, n + 1) if n % d == 0)
    return out


def ordered_factorizations(n, k):
    """Number of ordered k-tuples of positive integers with product n."""
    if k == 1:
        return 1
    return sum(ordered_factorizations(n // d, k - 1) for d in range(1, n + 1) if n % d == 0)


def brute_mobius(n):
    res, m, p = 1, n, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            res = -res
        p += 1
    return -res if m > 1 else res


# -- convolution --------------------------------------------------------------

def test_convolve_ones_gives_d2():
    ones = CoefficientSequence.ones(12)
    r = dirichlet_convolve(ones, ones, 12)
    assert r[12] == 6
    assert r.multiplicative


def test_convolve_unit_is_identity():
    rng = np.random.default_rng(0)
    a = CoefficientSequence(rng.normal(size=50) + 1j * rng.normal(size=50))
    r = dirichlet_convolve(a, CoefficientSequence.unit(50), 50)
    assert np.allclose(r.values, a.values, rtol=0, atol=0)
    assert not r.multiplicative


def test_mobius_inversion():
    r = dirichlet_convolve(mobius_prefix(100), CoefficientSequence.ones(100), 100)
    assert list(r.values) == [1] + [0] * 99


def test_convolve_length_error():
    with pytest.raises(LengthError):
        dirichlet_convolve(CoefficientSequence.ones(10), CoefficientSequence.ones(5), 8)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=60), st.integers(min_value=0, max_value=2**31 - 1))
def test_convolution_commutative_associative(N, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (CoefficientSequence(rng.integers(-5, 6, N)) for _ in range(3))
    ab = dirichlet_convolve(a, b, N)
    assert np.array_equal(ab.values, dirichlet_convolve(b, a, N).values)
    assert np.array_equal(ab.values, np.array(brute_convolve(list(a.values), list(b.values), N)))
    lhs = dirichlet_convolve(ab, c, N)
    rhs = dirichlet_convolve(a, dirichlet_convolve(b, c, N), N)
    assert np.array_equal(lhs.values, rhs.values)


def test_convolution_large_prefix_exhaustive():
    rng = np.random.default_rng(7)
    a = CoefficientSequence(rng.integers(-3, 4, 1000))
    b = CoefficientSequence(rng.integers(-3, 4, 1000))
    ab = dirichlet_convolve(a, b, 1000).values
    ba = dirichlet_convolve(b, a, 1000).values
    assert np.array_equal(ab, ba)
    # spot-check against the divisor-sum definition
    for n in (1, 360, 720, 997, 1000):
        assert ab[n - 1] == sum(a[d] * b[n // d] for d in range(1, n + 1) if n % d == 0)


# -- divisor functions ----------------------------------------------------------

def test_divisor_kappa_examples():
    assert all(divisor_kappa(1, n) == 1 for n in range(1, 200))
    assert divisor_kappa(-1, 4) == 0
    assert divisor_kappa(-1, 6) == 1
    assert divisor_kappa(3, 4) == 6 == ordered_factorizations(4, 3)
    assert isinstance(divisor_kappa(2, 12), int)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_divisor_kappa_matches_ordered_factorizations(k):
    for n in range(1, 61):
        assert divisor_kappa(k, n) == ordered_factorizations(n, k)


def test_divisor_kappa_real_kappa_oracle():
    # d_{1/2}(p^nu) = binom(nu - 1/2, nu) computed with mpmath
    for n, expected in [(2, 0.5), (4, 0.375), (12, 0.1875), (8, 0.3125)]:
        assert divisor_kappa(0.5, n) == pytest.approx(expected, rel=1e-15)
    assert divisor_kappa(0.5, 16) == pytest.approx(float(mpmath.binomial(4 - 0.5, 4)), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-3, max_value=3, allow_nan=False), st.integers(min_value=1, max_value=400))
def test_divisor_kappa_domination(kappa, n):
    K = math.ceil(abs(kappa)) if abs(kappa) > 0 else 0
    assert abs(divisor_kappa(kappa, n)) <= divisor_kappa(K, n) * (1 + 1e-12) + 1e-12
    assert abs(divisor_kappa(kappa, n)) <= divisor_kappa(abs(kappa), n) * (1 + 1e-12) + 1e-12


def test_mobius_prefix_matches_bruteforce():
    mu = mobius_prefix(300).values
    assert [int(x) for x in mu] == [brute_mobius(n) for n in range(1, 301)]


# -- Euler products ----------------------------------------------------------------

def test_euler_coeffs_zeta_is_ones():
    a = euler_coeffs(ZETA, 100)
    assert np.all(a.values == 1) and a.multiplicative


def test_euler_coeffs_order_two_is_d2():
    spec = EulerProductSpec.zeta_power(2)
    a = euler_coeffs(spec, 300)
    ones = CoefficientSequence.ones(300)
    assert np.array_equal(a.values, dirichlet_convolve(ones, ones, 300).values)


def test_euler_coeffs_sign_at_two():
    spec = EulerProductSpec(1, {2: (-1,)}, (1,))
    a = euler_coeffs(spec, 12)
    assert (a[2], a[4], a[6], a[3]) == (-1, 1, -1, 1)


def test_incomplete_spec():
    spec = EulerProductSpec.from_rule(1, lambda p: [1], 10)
    euler_coeffs(spec, 10)
    with pytest.raises(IncompleteSpecError):
        euler_coeffs(spec, 20)


def test_ramanujan_flag_validation():
    with pytest.raises(ParameterError):
        EulerProductSpec(1, {2: (2,)}, (1,), ramanujan=True)


def test_multiplicativity_scan():
    spec = EulerProductSpec.from_rule(2, lambda p: [np.exp(1j * p), np.exp(-2j * p) * 0.5], 200)
    a = euler_coeffs(spec, 200)
    assert a[1] == 1
    assert a.check_multiplicative()
    v = a.values
    for m in range(1, 15):
        for n in range(1, 15):
            if math.gcd(m, n) == 1 and m * n <= 200:
                assert abs(v[m * n - 1] - v[m - 1] * v[n - 1]) < 1e-12


def test_ramanujan_bound_by_dm():
    rng = np.random.default_rng(1)
    spec = EulerProductSpec.from_rule(3, lambda p: np.exp(2j * np.pi * rng.random(3)) * rng.random(3), 500, True)
    a = euler_coeffs(spec, 500)
    d3 = divisor_kappa_prefix(3, 500).values
    assert np.all(np.abs(a.values) <= d3 + 1e-9)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_power_coeffs_integer_kappa(k):
    a = power_coeffs(ZETA, k, 200)
    assert [int(x) for x in a.values] == [divisor_kappa(k, n) for n in range(1, 201)]
    assert a.values.dtype == np.int64


def test_power_coeffs_minus_one_is_mobius():
    assert np.array_equal(power_coeffs(ZETA, -1, 300).values, mobius_prefix(300).values)


def test_power_coeffs_zero_is_unit():
    spec = EulerProductSpec.from_rule(2, lambda p: [0.3j, -0.7], 100)
    assert np.allclose(power_coeffs(spec, 0, 100).values, CoefficientSequence.unit(100).values)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_inverse_powers_exact(k):
    N = 1000
    prod = dirichlet_convolve(power_coeffs(ZETA, -k, N), power_coeffs(ZETA, k, N), N)
    assert prod.values.dtype == np.int64
    assert list(prod.values) == [1] + [0] * (N - 1)


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=-2, max_value=2), st.floats(min_value=-2, max_value=2))
def test_power_additivity(k1, k2):
    spec = EulerProductSpec.from_rule(2, lambda p: [1, np.exp(1j * p)], 150)
    N = 150
    lhs = dirichlet_convolve(power_coeffs(spec, k1, N), power_coeffs(spec, k2, N), N)
    rhs = power_coeffs(spec, k1 + k2, N)
    assert np.max(np.abs(lhs.values - rhs.values)) < 1e-9


# -- log, log-derivative, derivatives ---------------------------------------------

def coefficient_exp(alog, N):
    """exp of a Dirichlet series with a(1) = 0 via n-weighted recurrence:
    b(n) log n = sum_{d | n, d > 1} a(d) log d b(n/d)."""
    b = np.zeros(N, dtype=complex)
    b[0] = 1
    lam = alog * np.log(np.arange(1, N + 1))
    for n in range(2, N + 1):
        acc = 0j
        for d in range(2, n + 1):
            if n % d == 0:
                acc += lam[d - 1] * b[n // d - 1]
        b[n - 1] = acc / math.log(n)
    return b


def test_log_coeffs_zeta_values():
    a = log_coeffs(ZETA, 64)
    assert a[8] == pytest.approx(1 / 3)
    assert a[2] == 1 and a[6] == 0 and a[12] == 0
    for n in range(1, 65):
        is_pp = n > 1 and len({p for p in primes_up_to(n) if n % p == 0}) == 1
        assert (a[n] != 0) == is_pp


def test_log_coeffs_numeric_oracle():
    N = 100_000
    a = log_coeffs(ZETA, N).values
    n = np.arange(1, N + 1, dtype=float)
    lhs = math.fsum(a / n**3)
    assert abs(lhs - float(mpmath.log(mpmath.zeta(3)))) < 1e-10


def test_exp_log_round_trip():
    spec = EulerProductSpec.from_rule(2, lambda p: [np.exp(0.3j * p), -0.5], 200)
    b = coefficient_exp(np.asarray(log_coeffs(spec, 200).values, dtype=complex), 200)
    assert np.max(np.abs(b - euler_coeffs(spec, 200).values)) < 1e-9


def test_logderiv_coeffs():
    lam = logderiv_coeffs(ZETA, 500)
    assert lam[8] == pytest.approx(math.log(2))
    assert lam[6] == 0
    spec = EulerProductSpec.from_rule(2, lambda p: [1, np.exp(1j * p)], 500)
    a = euler_coeffs(spec, 500)
    L = logderiv_coeffs(spec, 500)
    conv = dirichlet_convolve(L, a, 500).values
    n = np.arange(1, 501)
    assert np.max(np.abs(a.values * np.log(n) - conv)) < 1e-9


def test_derivative_coeffs():
    a = CoefficientSequence.ones(100)
    assert np.array_equal(derivative_coeffs(a, 0).values, a.values)
    d1 = derivative_coeffs(a, 1)
    assert d1[2] == pytest.approx(-math.log(2))
    d2 = derivative_coeffs(a, 2)
    logn = np.log(np.arange(1, 101))
    assert np.allclose(d2.values, logn * (-d1.values) * 1.0)
    # against the derivative of the partial sum at s = 3
    s = mpmath.mpf(3)
    num = mpmath.diff(lambda x: mpmath.fsum(mpmath.mpf(k) ** -x for k in range(1, 101)), s)
    assert abs(math.fsum(d1.values / np.arange(1, 101) ** 3.0) - float(num)) < 1e-12


# -- abscissae --------------------------------------------------------------------

GRID = [int(x) for x in np.unique(np.geomspace(10, 20000, 40).astype(int))]


def test_abscissa_ones():
    r = abscissa_estimates(CoefficientSequence.ones(20000), GRID)
    assert r.sigma_c_estimate == pytest.approx(1.0, abs=0.02)
    assert r.gap_ok()


def test_abscissa_alternating():
    a = CoefficientSequence(np.array([(-1) ** (n + 1) for n in range(1, 20001)]))
    r = abscissa_estimates(a, GRID)
    assert r.sigma_c_estimate < 0.05
    assert r.sigma_a_estimate == pytest.approx(1.0, abs=0.02)
    assert r.gap_ok()


def test_abscissa_degenerate():
    with pytest.raises(DegenerateFitError):
        abscissa_estimates(CoefficientSequence(np.zeros(100)), [10, 50, 100])


# -- serialization ------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    a = CoefficientSequence(np.array([1, 2 + 1j, -0.5]))
    a.to_csv(tmp_path / "a.csv")
    b = CoefficientSequence.from_csv(tmp_path / "a.csv")
    assert np.array_equal(a.values, b.values)


def test_spec_round_trip(tmp_path):
    spec = EulerProductSpec(2, {2: (1, -1), 3: (1j, -1j)}, (1, 1), ramanujan=True)
    spec.dump(tmp_path / "s.txt")
    back = EulerProductSpec.load(tmp_path / "s.txt")
    assert back == spec
