"""Gamma-factor data of Riemann-type functional equations.

A tuple ``p = (omega, Q, lambdas, mus)`` defines

    Delta_p(s) = omega Q^{1-2s} prod_j Gamma(l_j (1-s) + conj(m_j)) / Gamma(l_j s + m_j)

and a function ``G`` satisfies the functional equation when
``G(s) = Delta_p(s) conj(G(1 - conj(s)))``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import loggamma, psi

from .errors import (
    BranchError,
    FunctionalEquationViolation,
    ParameterError,
    PoleError,
    RangeError,
    SingularPointError,
)
from .evaluator import FunctionEvaluator

__all__ = [
    "FunctionalEquationData",
    "DeltaInvariants",
    "ClassGEvaluator",
    "delta_eval",
    "delta_log",
    "delta_logderiv",
    "delta_invariants",
    "delta_asymptotic",
    "delta_sqrt",
    "hardy_z",
    "synthetic_class_g",
    "logderiv_identity",
    "logderiv_lower_bound",
]

_POLE_TOL = 1e-12


@dataclass(frozen=True)
class FunctionalEquationData:
    omega: complex
    Q: float
    lambdas: tuple = ()
    mus: tuple = ()

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        mu = tuple(complex(x) for x in self.mus)
        if len(lam) != len(mu):
            raise ParameterError("lambdas and mus must have equal length")
        if any(x <= 0 for x in lam):
            raise ParameterError("all lambda_j must be positive")
        if not self.Q > 0:
            raise ParameterError("Q must be positive")
        if abs(abs(complex(self.omega)) - 1) > 1e-12:
            raise ParameterError(f"|omega| = {abs(complex(self.omega))} is not 1")
        object.__setattr__(self, "omega", complex(self.omega))
        object.__setattr__(self, "Q", float(self.Q))
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "mus", mu)

    @property
    def f(self) -> int:
        return len(self.lambdas)

    @property
    def degree(self) -> float:
        return 2 * sum(self.lambdas)

    @property
    def t_star(self) -> float:
        """Height above which no zero or pole of Delta lies."""
        return max((abs(m.imag) / l for l, m in zip(self.lambdas, self.mus)), default=0.0)

    def conjugate(self) -> "FunctionalEquationData":
        """Tuple of ``conj(Delta_p(conj s))``."""
        return FunctionalEquationData(self.omega.conjugate(), self.Q, self.lambdas, tuple(m.conjugate() for m in self.mus))

    @property
    def is_real(self) -> bool:
        return self.omega.imag == 0 and all(m.imag == 0 for m in self.mus)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zeta(cls) -> "FunctionalEquationData":
        return cls(1.0, math.pi**-0.5, (0.5,), (0.0,))

    @classmethod
    def zeta_power(cls, m: int) -> "FunctionalEquationData":
        """Tuple of ``Delta_zeta**m`` (m identical Gamma factors)."""
        return cls(1.0, math.pi ** (-m / 2), (0.5,) * m, (0.0,) * m)

    @classmethod
    def zeta_doubled(cls) -> "FunctionalEquationData":
        """The zeta factor rewritten with the duplication formula for Gamma(s/2)."""
        return cls(1.0, math.sqrt(2 / math.pi), (0.25, 0.25), (0.0, 0.5))

    @classmethod
    def load(cls, path) -> "FunctionalEquationData":
        """Text format: ``Re(omega) Im(omega)``, then ``Q``, then one line
        ``lambda Re(mu) Im(mu)`` per Gamma factor.  ``#`` starts a comment."""
        path = Path(path)
        rows = []
        for raw in path.read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append([float(x) for x in line.replace(",", " ").split()])
        if len(rows) < 2 or len(rows[0]) != 2 or len(rows[1]) != 1 or any(len(r) != 3 for r in rows[2:]):
            raise ParameterError(f"{path}: malformed functional-equation file")
        return cls(complex(*rows[0]), rows[1][0], tuple(r[0] for r in rows[2:]),
                   tuple(complex(r[1], r[2]) for r in rows[2:]))

    def dump(self, path) -> None:
        lines = [f"{self.omega.real!r} {self.omega.imag!r}", repr(self.Q)]
        lines += [f"{l!r} {m.real!r} {m.imag!r}" for l, m in zip(self.lambdas, self.mus)]
        Path(path).write_text("\n".join(lines) + "\n")

    # -- branch bookkeeping -------------------------------------------------
    @cached_property
    def _log_offset(self) -> float:
        return _branch_offset(self)


@dataclass(frozen=True)
class DeltaInvariants:
    degree: float
    q2lambda: float
    im_mu_p: float
    omega_p: complex

    def as_dict(self) -> dict:
        return {
            "d": self.degree,
            "q2lambda": self.q2lambda,
            "im_mu_p": self.im_mu_p,
            "omega_p": [self.omega_p.real, self.omega_p.imag],
        }


# --------------------------------------------------------------------------
# exact evaluation
# --------------------------------------------------------------------------

def _raw_log(p: FunctionalEquationData, s: np.ndarray) -> np.ndarray:
    """Sum of principal log-Gammas; analytic off horizontal cuts."""
    s = np.asarray(s, dtype=complex)
    out = 1j * cmath.phase(p.omega) + (1 - 2 * s) * math.log(p.Q)
    for l, m in zip(p.lambdas, p.mus):
        out = out + loggamma(l * (1 - s) + m.conjugate()) - loggamma(l * s + m)
    return out


def _check_poles(p: FunctionalEquationData, s: np.ndarray) -> None:
    for l, m in zip(p.lambdas, p.mus):
        # poles of Gamma(l(1-s)+conj m): l(1-s)+conj m = -n
        z = l * (1 - s) + m.conjugate()
        near = (np.abs(z.imag) < _POLE_TOL) & (z.real < _POLE_TOL) & (np.abs(z.real - np.round(z.real)) < _POLE_TOL)
        if np.any(near):
            raise PoleError(f"Delta has a pole at {np.asarray(s)[near].ravel()[0]}")


def _at_zeros(p: FunctionalEquationData, s: np.ndarray) -> np.ndarray:
    """Points where Gamma(l s + m) has a pole, i.e. zeros of Delta."""
    out = np.zeros(s.shape, dtype=bool)
    for l, m in zip(p.lambdas, p.mus):
        z = l * s + m
        out |= (np.abs(z.imag) < _POLE_TOL) & (z.real < _POLE_TOL) & (np.abs(z.real - np.round(z.real)) < _POLE_TOL)
    return out


def delta_eval(p: FunctionalEquationData, s):
    """``Delta_p(s)``; scalar in, scalar out, arrays vectorized."""
    arr = np.asarray(s, dtype=complex)
    _check_poles(p, arr)
    zero = _at_zeros(p, arr)
    out = np.exp(_raw_log(p, np.where(zero, 0.5, arr)))
    out = np.where(zero, 0, out)
    return complex(out) if np.ndim(s) == 0 else out


def delta_logderiv(p: FunctionalEquationData, s):
    """``Delta_p'(s)/Delta_p(s)`` via the digamma function."""
    arr = np.asarray(s, dtype=complex)
    _check_poles(p, arr)
    out = np.full(arr.shape, -2 * math.log(p.Q), dtype=complex)
    for l, m in zip(p.lambdas, p.mus):
        out = out - l * psi(l * (1 - arr) + m.conjugate()) - l * psi(l * arr + m)
    return complex(out) if np.ndim(s) == 0 else out


def _on_slit(p: FunctionalEquationData, s: np.ndarray) -> np.ndarray:
    """Points on the downward vertical half-lines below zeros and poles of Delta."""
    bad = np.zeros(np.shape(s), dtype=bool)
    for l, m in zip(p.lambdas, p.mus):
        h = -m.imag / l
        # zeros at (-n - m)/l and poles at 1 + (n + conj m)/l, all at height h
        for height, base, sign in ((h, -m.real / l, -1), (h, 1 + m.real / l, 1)):
            below = s.imag <= height + 1e-14
            offs = sign * (s.real - base) * l
            on_lattice = (offs > -1e-12) & (np.abs(offs - np.round(offs)) < 1e-12)
            bad |= below & on_lattice
    return bad


def _normalization_sigma(p: FunctionalEquationData) -> float:
    if _on_slit(p, np.array([0.5 + 0j]))[0]:
        return 0.5 + 1e-9
    return 0.5


def _branch_offset(p: FunctionalEquationData) -> float:
    """Imaginary constant turning the raw log-Gamma sum into the normalized
    continuous argument on the region above all zeros and poles."""
    sig = _normalization_sigma(p)
    top = p.t_star + 1.0
    ts = np.linspace(0.0, top, int(2000 * top) + 1)
    raw = _raw_log(p, sig + 1j * ts).imag
    steps = np.diff(raw)
    # raw jumps by multiples of 2 pi where it crosses a horizontal cut of loggamma
    jumps = np.round(steps / (2 * np.pi)) * 2 * np.pi
    cont_top = raw[0] + np.sum(steps - jumps)
    # normalize arg at the base point to [-pi, pi)
    k = math.floor((raw[0] + math.pi) / (2 * math.pi))
    cont_top -= 2 * math.pi * k
    return cont_top - raw[-1]


def _in_branch_domain(p: FunctionalEquationData, s: np.ndarray) -> np.ndarray:
    ok = s.imag > p.t_star
    if p.t_star == 0 and all(m.imag == 0 for m in p.mus):
        lo = max((-m.real / l for l, m in zip(p.lambdas, p.mus)), default=-math.inf)
        hi = min((1 + m.real / l for l, m in zip(p.lambdas, p.mus)), default=math.inf)
        if lo < 0.5 < hi:
            ok |= (s.real > lo) & (s.real < hi)
    return ok


def delta_log(p: FunctionalEquationData, s):
    """Analytic logarithm of Delta on the slit plane, normalized at 1/2.

    Supported on the half-plane above all zeros and poles, plus (for real
    tuples) the vertical strip between the innermost zero and pole.  Elsewhere
    a :class:`BranchError` is raised.
    """
    arr = np.asarray(s, dtype=complex)
    _check_poles(p, arr)
    if p.f == 0:
        out = _raw_log(p, arr)
        return complex(out) if np.ndim(s) == 0 else out
    if np.any(_on_slit(p, arr)):
        raise BranchError("point lies on a slit of the Delta plane")
    inside = _in_branch_domain(p, arr)
    if not np.all(inside):
        raise BranchError(f"point {arr[~inside].ravel()[0]} is outside the supported branch region")
    out = _raw_log(p, arr)
    upper = arr.imag > p.t_star
    if p.t_star > 0 or not p.is_real:
        out = out + 1j * p._log_offset * upper
    else:
        # raw log-Gamma sum is itself continuous through 1/2 for real tuples
        k = math.floor((_raw_log(p, np.array([0.5 + 0j]))[0].imag + math.pi) / (2 * math.pi))
        out = out - 2j * math.pi * k
    return complex(out) if np.ndim(s) == 0 else out


def delta_sqrt(p: FunctionalEquationData, s):
    """Analytic square root ``exp(log Delta / 2)``."""
    out = np.exp(0.5 * np.asarray(delta_log(p, s)))
    return complex(out) if np.ndim(s) == 0 else out


# --------------------------------------------------------------------------
# invariants and asymptotics
# --------------------------------------------------------------------------

def delta_invariants(p: FunctionalEquationData) -> DeltaInvariants:
    d = p.degree
    if d == 0:
        return DeltaInvariants(0.0, p.Q**2, 0.0, p.omega)
    mu_p = sum(1 - 2 * m for m in p.mus)
    log_lambda_p = sum(2 * l * math.log(l) for l in p.lambdas)
    # no separate exp(-i Im mu_p) factor: the constant phases of the two
    # Stirling expansions cancel (checked against the exact quotient)
    omega_p = p.omega * cmath.exp(1j * math.pi / 4 * (2 * mu_p.real - d))
    omega_p *= cmath.exp(sum(-2j * m.imag * math.log(l) for l, m in zip(p.lambdas, p.mus)))
    omega_p /= abs(omega_p)
    return DeltaInvariants(d, p.Q**2 * math.exp(log_lambda_p), mu_p.imag, omega_p)


def _asym_upper(inv: DeltaInvariants, s: np.ndarray) -> np.ndarray:
    sigma, t = s.real, s.imag
    logt = np.log(t)
    log_base = math.log(inv.q2lambda) + inv.degree * logt
    return inv.omega_p * np.exp((0.5 - sigma - 1j * t) * log_base + 1j * (inv.degree * t + inv.im_mu_p * logt))


def delta_asymptotic(p: FunctionalEquationData, s):
    """Leading-order asymptotic form of Delta for ``|Im s| >= 2``.

    For negative ordinates the form is applied to the conjugate tuple at
    ``conj(s)`` and conjugated back, which keeps the correct unimodular factor.
    """
    arr = np.asarray(s, dtype=complex)
    if np.any(np.abs(arr.imag) < 2):
        raise RangeError("asymptotic form needs |Im s| >= 2")
    out = np.empty(arr.shape, dtype=complex)
    up = arr.imag > 0
    if np.any(up):
        out[up] = _asym_upper(delta_invariants(p), arr[up])
    if np.any(~up):
        out[~up] = np.conj(_asym_upper(delta_invariants(p.conjugate()), np.conj(arr[~up])))
    return complex(out) if np.ndim(s) == 0 else out


def logderiv_lower_bound(p: FunctionalEquationData, t: float, c: float = 1.0) -> float:
    """Asymptotic lower bound ``(d/2) log|t| + (1/2) log(Q^2 lambda_p) - c/|t|``
    for ``|G'/G|`` on the critical line."""
    inv = delta_invariants(p)
    return 0.5 * inv.degree * math.log(abs(t)) + 0.5 * math.log(inv.q2lambda) - c / abs(t)


# --------------------------------------------------------------------------
# class G
# --------------------------------------------------------------------------

def hardy_z(f: FunctionEvaluator, p: FunctionalEquationData, t, tol: float = 1e-8):
    """Real-valued ``Z(t) = f(1/2+it) / Delta^{1/2}(1/2+it)``."""
    tt = np.asarray(t, dtype=float)
    s = 0.5 + 1j * tt
    z = f.values(np.atleast_1d(s)).reshape(tt.shape) / np.asarray(delta_sqrt(p, s))
    bad = np.abs(z.imag) > tol * np.maximum(1.0, np.abs(z))
    if np.any(bad):
        i = np.argmax(np.abs(z.imag))
        raise FunctionalEquationViolation(
            f"Im Z = {z.ravel()[i].imag:.3e} at t = {np.atleast_1d(tt)[i % max(tt.size, 1)]}; "
            "the function does not satisfy this functional equation"
        )
    out = z.real
    return float(out) if np.ndim(t) == 0 else out


KINDS = ("g_alpha", "g_0", "g_1_zeta", "external")


class ClassGEvaluator(FunctionEvaluator):
    """Synthetic (or wrapped) function satisfying the functional equation of ``p``."""

    def __init__(self, kind: str, params: tuple, p: FunctionalEquationData, inner: FunctionEvaluator | None = None):
        if kind not in KINDS:
            raise ParameterError(f"unknown kind {kind!r}; expected one of {KINDS}")
        self.kind = kind
        self.params = tuple(params)
        self.p = p
        self.inner = inner
        self.name = f"{kind}{self.params if self.params else ''}"
        if kind == "g_alpha":
            if len(self.params) != 2:
                raise ParameterError("g_alpha needs (alpha1, alpha2)")
            a1, a2 = map(float, self.params)
            if not (0 <= a1 <= a2) or (a1 == 0 and a2 == 0):
                raise ParameterError("need 0 <= alpha1 <= alpha2, not both zero")
            self._A, self._B = (a1 + a2) / 2, (a2 - a1) / 2
        elif kind == "external":
            if inner is None:
                raise ParameterError("external kind wraps an existing evaluator")
            self.poles = tuple(inner.poles)
            self.name = inner.name
        if kind in ("g_alpha", "g_0"):
            lo = p.t_star
            self.domain = type(self.domain)(t_min=lo)

    def values(self, s):
        s = np.asarray(s, dtype=complex)
        if self.kind == "g_alpha":
            return (self._A + self._B * np.sin(-1j * (s - 0.5))) * np.asarray(delta_sqrt(self.p, s))
        if self.kind == "g_0":
            return np.exp(-s * (1 - s)) * np.asarray(delta_sqrt(self.p, s))
        if self.kind == "g_1_zeta":
            return 1 + np.asarray(delta_eval(self.p, s))
        return self.inner.values(s)

    def log_anchor(self, s0):
        return self.inner.log_anchor(s0) if self.kind == "external" else super().log_anchor(s0)

    def coefficients(self, N):
        if self.kind == "external":
            return self.inner.coefficients(N)
        return super().coefficients(N)

    def fe_residual(self, s) -> float:
        s = np.asarray(s, dtype=complex)
        lhs = self.values(s)
        rhs = np.asarray(delta_eval(self.p, s)) * np.conj(self.values(1 - np.conj(s)))
        return float(np.max(np.abs(lhs - rhs)))


def synthetic_class_g(kind: str, params=(), p: FunctionalEquationData | None = None, inner=None) -> ClassGEvaluator:
    return ClassGEvaluator(kind, params, p or FunctionalEquationData.zeta(), inner)


class LogDerivIdentity(NamedTuple):
    residual: float
    delta_ld: float


def logderiv_identity(f: FunctionEvaluator, p: FunctionalEquationData, t: float) -> LogDerivIdentity:
    """Compare ``2 Re(f'/f)`` with ``Delta'/Delta`` at ``1/2 + it``."""
    s = complex(0.5, t)
    v = f.value(s)
    if not np.isfinite(v) or abs(v) < 1e-14:
        raise SingularPointError(f"f vanishes or has a pole at 1/2 + {t}i")
    ld = f.derivative(s, 1) / v
    dld = delta_logderiv(p, s)
    return LogDerivIdentity(abs(2 * ld.real - dld), float(dld.real))
