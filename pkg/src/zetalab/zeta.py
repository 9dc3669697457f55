"""Riemann zeta-function backends and related evaluators.

Backends:

* ``alternating``: eta(s) = (1 - 2^{1-s}) zeta(s) summed with the
  Borwein/Cohen-Rodriguez-Villegas-Zagier weights.  Cheap for moderate ``|t|``.
* ``euler_maclaurin``: the Dirichlet series cut at ``N`` plus its
  Euler-Maclaurin tail.  Works for every ``s != 1``; cost grows like ``|t|``.
* ``reflection``: ``zeta(s) = Delta(s) zeta(1-s)`` for ``Re s <= 0``.

``auto`` picks per point.
"""
from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, zeta as hurwitz_zeta

from .coeffs import CoefficientSequence, primes_up_to
from .errors import ParameterError, PoleError, UnvalidatedAccuracyWarning
from .evaluator import EvalConfig, FunctionEvaluator, cauchy_derivative
from .funceq import FunctionalEquationData, delta_eval

__all__ = [
    "ZetaEvaluator",
    "TruncatedEulerEvaluator",
    "GonekEvaluator",
    "zeta_eval",
    "zeta_values",
    "zeta_derivative",
    "truncated_euler",
    "gonek_zeta_x",
    "alternating_terms",
]

_DEFAULT_CFG = EvalConfig()
_ZETA_P = FunctionalEquationData.zeta()
_CHUNK = 1 << 22  # complex entries per block in the partial sums
_POLE_RADIUS = 1e-3


# --------------------------------------------------------------------------
# alternating series
# --------------------------------------------------------------------------

def alternating_terms(t: float, target: float = 1e-10) -> int:
    """Term count for the accelerated eta series.

    Truncation error behaves like ``(3+sqrt 8)^{-n} exp(pi |t| / 2)``, i.e.
    ``n ~ 1.31 digits + 0.89 |t|``.
    """
    digits = -math.log10(target) + 3
    return int(math.ceil(1.31 * digits + 0.89 * abs(t))) + 4


@lru_cache(maxsize=64)
def _eta_weights(n: int) -> np.ndarray:
    """Signed weights ``(-1)^k (d_n - d_k)/d_n`` computed in log space."""
    i = np.arange(n + 1, dtype=float)
    # log of n (n+i-1)! 4^i / ((n-i)! (2i)!)
    logt = math.log(n) + gammaln(n + i) + i * math.log(4) - gammaln(n - i + 1) - gammaln(2 * i + 1)
    logt -= logt.max()
    terms = np.exp(logt)
    tail = np.cumsum(terms[::-1])[::-1]  # tail[k] = sum_{i>=k} t_i
    w = tail[1:] / tail[0]  # k = 0..n-1: sum_{i>k} t_i / sum t_i
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return sign * w


def _alternating(s: np.ndarray, target: float) -> np.ndarray:
    out = np.empty(s.shape, dtype=complex)
    ns = np.array([alternating_terms(z.imag, target) for z in s])
    for n in np.unique(ns):
        idx = np.nonzero(ns == n)[0]
        w = _eta_weights(int(n))
        logk = np.log(np.arange(1, n + 1, dtype=float))
        eta = np.exp(-np.outer(s[idx], logk)) @ w
        out[idx] = eta / (1 - 2.0 ** (1 - s[idx]))
    return out


# --------------------------------------------------------------------------
# Euler-Maclaurin
# --------------------------------------------------------------------------

def _em_cutoff(t: float) -> int:
    return 20 + int(math.ceil(0.2 * abs(t)))


def _power_sum(s: np.ndarray, N: int) -> np.ndarray:
    """sum_{n < N} n^{-s} for each entry of ``s``.

    For large ordinates the phases ``t log n`` are formed and reduced modulo
    2 pi in extended precision; in plain doubles their absolute error grows
    like ``t * 1e-16`` and would dominate the result.
    """
    n = np.arange(1, N, dtype=float)
    logn = np.log(n)
    out = np.zeros(s.shape, dtype=complex)
    rows = max(1, _CHUNK // max(N, 1))
    cols = min(N - 1, _CHUNK)
    extended = np.max(np.abs(s.imag), initial=0.0) > 100
    if extended:
        logn_ld = np.log(n.astype(np.longdouble))
        two_pi = 2 * np.pi_ld if hasattr(np, "pi_ld") else np.longdouble("6.283185307179586476925286766559")
    for r0 in range(0, s.size, rows):
        blk = s[r0 : r0 + rows]
        acc = np.zeros(blk.shape, dtype=complex)
        for c0 in range(0, N - 1, cols):
            ln = logn[c0 : c0 + cols]
            if extended:
                theta = np.fmod(np.outer(blk.imag.astype(np.longdouble), logn_ld[c0 : c0 + cols]), two_pi).astype(float)
                acc += (np.exp(-np.outer(blk.real, ln)) * np.exp(-1j * theta)).sum(axis=1)
            else:
                acc += np.exp(-np.outer(blk, ln)).sum(axis=1)
        out[r0 : r0 + rows] = acc
    return out


def _em_tail(s: np.ndarray, N: int, eps: float = 1e-17) -> np.ndarray:
    logN = math.log(N)
    base = np.exp((1 - s) * logN)  # N^{1-s}
    out = base / (s - 1) + 0.5 * base / N
    # T_k = (-1)^{k+1} 2 zeta(2k) (2 pi N)^{-2k} N^{1-s} s(s+1)...(s+2k-2);
    # the Pochhammer product and the power of 2 pi N are carried together
    scale = 1.0 / (2 * math.pi * N) ** 2
    prod = s * scale
    active = np.ones(s.shape, dtype=bool)
    prev = np.full(s.shape, np.inf)
    for k in range(1, 400):
        term = (-1) ** (k + 1) * 2 * hurwitz_zeta(2 * k, 1) * base * prod
        mag = np.abs(term)
        # the series is asymptotic: stop once terms stop shrinking
        active &= mag < prev
        out = out + np.where(active, term, 0)
        active &= mag > eps * np.maximum(np.abs(out), 1e-300)
        if not np.any(active):
            break
        prev = mag
        prod = prod * (s + 2 * k - 1) * (s + 2 * k) * scale
    return out


def _euler_maclaurin(s: np.ndarray) -> np.ndarray:
    out = np.empty(s.shape, dtype=complex)
    Ns = np.array([_em_cutoff(max(abs(z.imag), abs(z))) for z in s])
    # bucket cutoffs so that nearby ordinates share one partial-sum pass
    Ns = np.where(Ns > 256, (np.ceil(Ns / 64) * 64).astype(int), Ns)
    for N in np.unique(Ns):
        idx = np.nonzero(Ns == N)[0]
        z = s[idx]
        out[idx] = _power_sum(z, int(N)) + _em_tail(z, int(N))
    return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

BACKENDS = ("auto", "alternating", "euler_maclaurin", "direct", "reflection")


def _route(s: np.ndarray) -> np.ndarray:
    """0 = alternating, 1 = Euler-Maclaurin, 2 = reflection."""
    route = np.ones(s.shape, dtype=int)
    alt = (s.real > 0) & (s.real <= 2) & (np.abs(s.imag) <= 200)
    alt &= np.abs(1 - 2.0 ** (1 - s)) >= 0.05
    route[alt] = 0
    route[(s.real <= 0) & (np.abs(s) >= 0.01)] = 2
    return route


def zeta_values(s, cfg: EvalConfig | None = None, backend: str = "auto") -> np.ndarray:
    """Vectorized zeta-function values."""
    cfg = cfg or _DEFAULT_CFG
    if backend not in BACKENDS:
        raise ParameterError(f"unknown backend {backend!r}")
    arr = np.asarray(s, dtype=complex)
    flat = arr.ravel()
    if np.any(np.abs(flat - 1) < _POLE_RADIUS):
        raise PoleError("zeta is evaluated within 1e-3 of its pole at s = 1")
    if np.any(np.abs(flat.imag) > cfg.t_cap):
        warnings.warn(f"|t| exceeds t_cap = {cfg.t_cap:g}; accuracy is not validated there",
                      UnvalidatedAccuracyWarning, stacklevel=2)
    if backend == "auto":
        route = _route(flat)
    elif backend == "alternating":
        if np.any(flat.real <= 0):
            raise ParameterError("alternating backend needs Re s > 0")
        route = np.zeros(flat.shape, dtype=int)
    elif backend in ("euler_maclaurin", "direct"):
        route = np.ones(flat.shape, dtype=int)
    else:
        route = np.full(flat.shape, 2)
    out = np.empty(flat.shape, dtype=complex)
    m = route == 0
    if np.any(m):
        out[m] = _alternating(flat[m], cfg.target_abs_error)
    m = route == 1
    if np.any(m):
        out[m] = _euler_maclaurin(flat[m])
    m = route == 2
    if np.any(m):
        z = flat[m]
        out[m] = np.asarray(delta_eval(_ZETA_P, z)) * zeta_values(1 - z, cfg, "auto" if backend == "auto" else "euler_maclaurin")
    return out.reshape(arr.shape)


def zeta_eval(s, cfg: EvalConfig | None = None, backend: str = "auto") -> complex:
    return complex(zeta_values(np.array([complex(s)]), cfg, backend)[0])


class ZetaEvaluator(FunctionEvaluator):
    name = "zeta"
    poles = (1.0,)

    def __init__(self, cfg: EvalConfig | None = None, backend: str = "auto"):
        self.cfg = cfg or _DEFAULT_CFG
        self.backend = backend

    def values(self, s):
        return zeta_values(s, self.cfg, self.backend)

    def log_anchor(self, s0):
        # |zeta(s) - 1| < 1 for Re s >= 2, so the principal log is the right branch
        return complex(np.log(self.value(s0)))

    def log_anchor_batch(self, s0):
        return np.log(self.values(s0))

    def coefficients(self, N: int) -> CoefficientSequence:
        return CoefficientSequence.ones(N)


def zeta_derivative(s, k: int = 1, cfg: EvalConfig | None = None) -> complex:
    """k-th derivative of zeta by circle quadrature (radius ``min(0.1, |s-1|/2)``)."""
    if k < 0:
        raise ParameterError("derivative order must be non-negative")
    ev = ZetaEvaluator(cfg)
    if k == 0:
        return ev.value(s)
    return complex(cauchy_derivative(ev, np.array([complex(s)]), k)[0])


# --------------------------------------------------------------------------
# truncated Euler products and the P_X + Delta conj(P_X) model
# --------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _prime_power_weights(X: float):
    """(log n, 1/k) over prime powers n = p^k <= X."""
    logs, ws = [], []
    for p in primes_up_to(int(X)):
        p = int(p)
        q, k = p, 1
        while q <= X:
            logs.append(math.log(q))
            ws.append(1.0 / k)
            q *= p
            k += 1
    return np.array(logs), np.array(ws)


def _log_truncated_euler(X: float, s: np.ndarray) -> np.ndarray:
    logs, ws = _prime_power_weights(float(X))
    s = np.asarray(s, dtype=complex)
    flat = s.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    rows = max(1, _CHUNK // max(len(logs), 1))
    for r0 in range(0, flat.size, rows):
        blk = flat[r0 : r0 + rows]
        out[r0 : r0 + rows] = np.exp(-np.outer(blk, logs)) @ ws
    return out.reshape(s.shape)


def truncated_euler(X: float, s):
    """``P_X(s) = exp(sum_{n<=X} Lambda(n) / (n^s log n))``."""
    if X < 2:
        raise ParameterError("X must be at least 2")
    out = np.exp(_log_truncated_euler(X, s))
    return complex(out) if np.ndim(s) == 0 else out


def gonek_zeta_x(X: float, s, p: FunctionalEquationData | None = None):
    """``zeta_X(s) = P_X(s) + Delta(s) conj(P_X(1 - conj s))``."""
    if X < 2:
        raise ParameterError("X must be at least 2")
    p = p or _ZETA_P
    arr = np.asarray(s, dtype=complex)
    out = np.exp(_log_truncated_euler(X, arr)) + np.asarray(delta_eval(p, arr)) * np.conj(
        np.exp(_log_truncated_euler(X, 1 - np.conj(arr)))
    )
    return complex(out) if np.ndim(s) == 0 else out


class TruncatedEulerEvaluator(FunctionEvaluator):
    """``P_X``; its logarithm is the finite prime-power sum itself."""

    def __init__(self, X: float):
        if X < 2:
            raise ParameterError("X must be at least 2")
        self.X = float(X)
        self.name = f"P_{X:g}"

    def values(self, s):
        return np.exp(_log_truncated_euler(self.X, s))

    def log_value(self, s):
        return complex(_log_truncated_euler(self.X, np.array([complex(s)]))[0])

    def log_anchor(self, s0):
        return self.log_value(s0)


class GonekEvaluator(FunctionEvaluator):
    """``zeta_X``: a symmetrized truncated Euler product in the class of ``p``."""

    def __init__(self, X: float, p: FunctionalEquationData | None = None):
        if X < 2:
            raise ParameterError("X must be at least 2")
        self.X = float(X)
        self.p = p or _ZETA_P
        self.name = f"zeta_X(X={X:g})"

    def values(self, s):
        return gonek_zeta_x(self.X, np.asarray(s, dtype=complex), self.p)
