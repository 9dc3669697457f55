import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetalab.coeffs import CoefficientSequence, EulerProductSpec, power_coeffs
from zetalab.errors import ParameterError, SampleSizeError, TruncationError
from zetalab.torus import (
    TorusPoint,
    birkhoff_vs_space,
    character_orthogonality,
    make_rng,
    plancherel_check,
    plancherel_target,
    twisted_series,
    twisted_values,
)

ONES200 = CoefficientSequence.ones(200)
ONES100 = CoefficientSequence.ones(100)


def exact_time_average(c, T):
    """(1/T) int_0^T |sum c_n n^{-it}|^2 dt in closed form."""
    n = np.arange(1, c.size + 1, dtype=float)
    d = np.subtract.outer(np.log(n), np.log(n))  # log(m/n)
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = np.where(d == 0, 1.0, (np.exp(-1j * T * d) - 1) / (-1j * T * d))
    return float(np.real(c @ kern @ np.conj(c)))


def test_torus_point_validation():
    with pytest.raises(ParameterError):
        TorusPoint(np.zeros(3))
    with pytest.raises(ParameterError):
        TorusPoint(np.full(100, 7.0))
    assert TorusPoint.zero().phases.size == 100  # primes up to 541


def test_flow_phases_in_range():
    x = TorusPoint.flow(-1e6)
    assert np.all((x.phases >= 0) & (x.phases < 2 * np.pi))


def test_zero_point_is_plain_partial_sum():
    s = 0.7 + 3j
    n = np.arange(1, 201, dtype=float)
    assert abs(twisted_series(ONES200, TorusPoint.zero(), s) - np.sum(n**-s)) < 1e-12


def test_flow_point_equals_vertical_shift():
    s, t = 0.8, 17.3
    n = np.arange(1, 201, dtype=float)
    ref = np.sum(n ** -(s + 1j * t))
    assert abs(twisted_series(ONES200, TorusPoint.flow(t), s) - ref) < 1e-12


def test_single_term_is_one():
    a = CoefficientSequence.unit(50)
    x = TorusPoint.random(make_rng(1))
    assert twisted_series(a, x, 0.6 + 2j) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.floats(min_value=-500, max_value=500),
       st.floats(min_value=0.55, max_value=2.0))
def test_shift_identity(seed, t, sigma):
    x = TorusPoint.random(make_rng(seed))
    lhs = twisted_series(ONES100, x.shift(t), sigma)
    rhs = twisted_series(ONES100, x, sigma + 1j * t)
    assert abs(lhs - rhs) < 1e-10


def test_truncation_error():
    a = CoefficientSequence.ones(600)  # 547 is prime and above 541
    with pytest.raises(TruncationError):
        twisted_series(a, TorusPoint.zero(), 1.0)
    # zero coefficients at rough n are fine
    v = np.ones(600)
    v[546] = 0
    v[[n - 1 for n in range(557, 601) if n in (557, 563, 569, 571, 577, 587, 593, 599)]] = 0
    twisted_series(CoefficientSequence(v), TorusPoint.zero(), 1.0)


def test_twisted_values_stack_matches_series():
    rng = make_rng(5)
    pts = [TorusPoint.random(rng) for _ in range(4)]
    stack = twisted_values(ONES100, np.array([p.phases for p in pts]), 0.9)
    assert np.allclose(stack, [twisted_series(ONES100, p, 0.9) for p in pts], atol=1e-12)


def test_plancherel_target_closed_form():
    n = np.arange(1, 201)
    assert plancherel_target(ONES200, 0.75) == pytest.approx(np.sum(n**-1.5), rel=1e-14)


@pytest.mark.parametrize("sigma", [0.6, 0.75, 1.0])
def test_plancherel_z(sigma):
    r = plancherel_check(ONES200, sigma, 10_000, seed=0)
    assert abs(r.z_score) <= 3


def test_plancherel_unit_exact():
    r = plancherel_check(CoefficientSequence.unit(100), 0.75, 1000)
    assert r.mc_mean == 1.0 and r.target == 1.0 and r.z_score == 0.0


def test_plancherel_errors():
    with pytest.raises(ParameterError):
        plancherel_check(ONES100, 0.5, 1000)
    with pytest.raises(SampleSizeError):
        plancherel_check(ONES100, 0.75, 50)


def test_plancherel_seed_reproducible():
    assert plancherel_check(ONES100, 0.8, 500, seed=3) == plancherel_check(ONES100, 0.8, 500, seed=3)


def test_plancherel_d2_coefficients():
    a = power_coeffs(EulerProductSpec.zeta(), 2, 100)
    assert abs(plancherel_check(a, 0.9, 5000, seed=2).z_score) <= 3


@pytest.mark.parametrize("m,n", [(2, 3), (6, 10), (12, 18)])
def test_character_orthogonality(m, n):
    assert character_orthogonality(m, n, 5000, seed=1).z_score <= 3


def test_character_same_index():
    r = character_orthogonality(30, 30, 200)
    assert r.mc_mean == pytest.approx(1.0) and r.z_score == 0


def test_birkhoff_against_closed_form():
    n = np.arange(1, 101, dtype=float)
    for T in (50.0, 300.0):
        r = birkhoff_vs_space(ONES100, 0.8, T)
        assert r.time_avg == pytest.approx(exact_time_average(n**-0.8, T), rel=1e-10)


def test_birkhoff_with_offset_point():
    x0 = TorusPoint.random(make_rng(9))
    n = np.arange(1, 101, dtype=float)
    c = np.array([twisted_series(CoefficientSequence(np.eye(100)[k]), x0, 0.8) for k in range(100)])
    r = birkhoff_vs_space(ONES100, 0.8, 200.0, x0)
    assert r.time_avg == pytest.approx(exact_time_average(c, 200.0), rel=1e-10)


def test_birkhoff_gap_and_envelope():
    envs = [birkhoff_vs_space(ONES100, 0.8, T).envelope for T in (500, 1000, 2000)]
    assert envs[0] >= envs[1] >= envs[2]
    assert birkhoff_vs_space(ONES100, 0.8, 2000).gap < 0.05


def test_birkhoff_constant_series_exact():
    r = birkhoff_vs_space(CoefficientSequence.unit(10), 0.8, 100.0)
    assert r.time_avg == pytest.approx(r.space_avg, rel=1e-14)
    assert r.gap < 1e-14


def test_birkhoff_errors():
    with pytest.raises(ParameterError):
        birkhoff_vs_space(ONES100, 0.4, 10.0)
    with pytest.raises(ParameterError):
        birkhoff_vs_space(ONES100, 0.8, 0.0)
