import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetalab.errors import BranchError, FunctionalEquationViolation, ParameterError, PoleError, RangeError
from zetalab.funceq import (
    FunctionalEquationData,
    delta_asymptotic,
    delta_eval,
    delta_invariants,
    delta_log,
    delta_logderiv,
    delta_sqrt,
    hardy_z,
    logderiv_identity,
    synthetic_class_g,
)
from zetalab.zeta import ZetaEvaluator

ZP = FunctionalEquationData.zeta()
Z2 = FunctionalEquationData.zeta_power(2)
COMPLEX_P = FunctionalEquationData(cmath.exp(0.7j), 0.8, (0.5, 1.0), (0.25 + 0.3j, 0.5 - 0.2j))


def mp_delta(p, s):
    """Independent evaluation of Delta_p(s) in 30-digit arithmetic."""
    mpmath.mp.dps = 30
    s = mpmath.mpc(s)
    out = mpmath.mpc(p.omega) * mpmath.mpf(p.Q) ** (1 - 2 * s)
    for l, m in zip(p.lambdas, p.mus):
        out *= mpmath.gamma(l * (1 - s) + mpmath.conj(m)) / mpmath.gamma(l * s + m)
    return complex(out)


@pytest.mark.parametrize("p", [ZP, Z2, COMPLEX_P, FunctionalEquationData.zeta_doubled()])
@pytest.mark.parametrize("s", [0.3 + 2j, 0.5 + 14.1j, -1.5 + 40j, 2.5 - 7j, 0.9 + 300j])
def test_delta_against_mpmath(p, s):
    assert abs(delta_eval(p, s) / mp_delta(p, s) - 1) < 1e-11


def test_zeta_functional_equation_against_mpmath_zeta():
    for s in (0.3 + 5j, -2.5 + 1j, 0.75 + 30j):
        lhs = complex(mpmath.zeta(s))
        rhs = delta_eval(ZP, s) * complex(mpmath.zeta(1 - s))
        assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_doubled_tuple_same_delta():
    s = np.array([0.2 + 3j, 0.7 + 50j, -0.4 - 9j])
    assert np.allclose(delta_eval(FunctionalEquationData.zeta_doubled(), s), delta_eval(ZP, s), rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-3, max_value=4), st.floats(min_value=-200, max_value=200))
def test_reflection_identity(sigma, t):
    s = complex(sigma, t)
    for p in (ZP, COMPLEX_P):
        try:
            val = delta_eval(p, s) * np.conj(delta_eval(p, 1 - np.conj(s)))
        except PoleError:
            continue
        if np.isfinite(val):
            assert abs(val - 1) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=10, max_value=1000))
def test_unimodular_on_critical_line(t):
    assert abs(abs(delta_eval(ZP, 0.5 + 1j * t)) - 1) < 1e-10
    assert abs(abs(delta_eval(COMPLEX_P, 0.5 + 1j * t)) - 1) < 1e-10


def test_pole_error():
    with pytest.raises(PoleError):
        delta_eval(ZP, 1.0)
    with pytest.raises(PoleError):
        delta_eval(ZP, 3.0)


def test_parameter_validation():
    with pytest.raises(ParameterError):
        FunctionalEquationData(2.0, 1.0, (0.5,), (0,))
    with pytest.raises(ParameterError):
        FunctionalEquationData(1.0, 1.0, (-0.5,), (0,))
    with pytest.raises(ParameterError):
        FunctionalEquationData(1.0, 1.0, (0.5,), ())


def test_invariants_zeta():
    inv = delta_invariants(ZP)
    assert inv.degree == 1
    assert inv.q2lambda == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert inv.im_mu_p == 0
    assert abs(inv.omega_p - cmath.exp(1j * math.pi / 4)) < 1e-15


def test_invariants_degree_two():
    inv = delta_invariants(Z2)
    assert inv.degree == 2
    assert inv.q2lambda == pytest.approx(1 / (4 * math.pi**2), rel=1e-14)


@pytest.mark.parametrize("p", [ZP, Z2, COMPLEX_P])
def test_asymptotic_error_halves(p):
    errs = []
    for t in (100, 200, 400, 800, 1600):
        s = 0.5 + 1j * t
        errs.append(abs(delta_asymptotic(p, s) / delta_eval(p, s) - 1))
    assert errs[0] < 0.01
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 2) < 0.4)


def test_asymptotic_negative_ordinate():
    s = 0.3 - 500j
    assert abs(delta_asymptotic(COMPLEX_P, s) / delta_eval(COMPLEX_P, s) - 1) < 1e-2


def test_asymptotic_range():
    with pytest.raises(RangeError):
        delta_asymptotic(ZP, 0.5 + 1j)


def test_delta_log_normalization_and_continuity():
    assert abs(delta_log(ZP, 0.5)) < 1e-15
    t = np.linspace(0, 60, 6001)
    lg = delta_log(ZP, 0.5 + 1j * t)
    assert np.max(np.abs(np.diff(lg.imag))) < 0.5  # no 2 pi jumps
    assert np.allclose(np.exp(lg), delta_eval(ZP, 0.5 + 1j * t), rtol=1e-12)
    # against the Riemann-Siegel theta function: Delta(1/2+it) = exp(-2 i theta(t))
    for tt in (1.0, 10.0, 100.0):
        assert abs(delta_log(ZP, 0.5 + 1j * tt).imag + 2 * float(mpmath.siegeltheta(tt))) < 1e-10


def test_delta_log_complex_tuple_continuous():
    t = np.linspace(COMPLEX_P.t_star + 0.01, 80, 8000)
    lg = delta_log(COMPLEX_P, 0.5 + 1j * t)
    assert np.max(np.abs(np.diff(lg.imag))) < 0.5  # no 2 pi jumps
    assert np.allclose(np.exp(lg), delta_eval(COMPLEX_P, 0.5 + 1j * t), rtol=1e-11)


def test_delta_log_branch_error():
    with pytest.raises(BranchError):
        delta_log(ZP, -2.0 - 1j)


def test_delta_sqrt_squares():
    s = np.array([0.5 + 3j, 0.2 + 40j])
    assert np.allclose(delta_sqrt(ZP, s) ** 2, delta_eval(ZP, s), rtol=1e-13)


def test_logderiv_against_finite_difference():
    s = 0.3 + 20j
    h = 1e-5
    fd = (delta_eval(COMPLEX_P, s + h) - delta_eval(COMPLEX_P, s - h)) / (2 * h) / delta_eval(COMPLEX_P, s)
    assert abs(delta_logderiv(COMPLEX_P, s) - fd) < 1e-7


def test_hardy_z_against_mpmath():
    f = ZetaEvaluator()
    t = np.array([5.0, 14.0, 33.3, 99.0])
    z = hardy_z(f, ZP, t)
    ref = np.array([float(mpmath.siegelz(x)) for x in t])
    assert np.allclose(z, ref, atol=1e-9)


def test_hardy_z_detects_mismatch():
    with pytest.raises(FunctionalEquationViolation):
        hardy_z(ZetaEvaluator(), Z2, np.linspace(5, 50, 50))


@pytest.mark.parametrize("kind,params", [("g_alpha", (0.0, 1.0)), ("g_alpha", (0.5, 2.0)), ("g_0", ()), ("g_1_zeta", ())])
def test_class_g_fixtures(kind, params):
    g = synthetic_class_g(kind, params)
    pts = np.array([0.3 + 5j, 0.8 + 17j, -0.5 + 60j])
    assert g.fe_residual(pts) < 1e-10 * max(1.0, np.max(np.abs(g.values(pts))))


def test_class_g_bad_params():
    with pytest.raises(ParameterError):
        synthetic_class_g("g_alpha", (0.0, 0.0))
    with pytest.raises(ParameterError):
        synthetic_class_g("nope")


def test_logderiv_identity_zeta():
    r = logderiv_identity(ZetaEvaluator(), ZP, 20.0)
    assert r.residual < 1e-7


def test_load_dump_round_trip(tmp_path):
    COMPLEX_P.dump(tmp_path / "p.txt")
    assert FunctionalEquationData.load(tmp_path / "p.txt") == COMPLEX_P
    (tmp_path / "bad.txt").write_text("1 0\n")
    with pytest.raises(ParameterError):
        FunctionalEquationData.load(tmp_path / "bad.txt")
