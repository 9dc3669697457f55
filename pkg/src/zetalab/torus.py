"""Truncated infinite-dimensional torus and twisted Dirichlet series.

A point of the torus is a phase ``theta_p`` for every prime ``p <= P``; the
character attached to ``n = prod p^nu`` is ``exp(i sum_p nu theta_p)``.  The
vertical flow ``t -> e_t`` has phases ``theta_p = -t log p``, so twisting by
``e_t`` reproduces a vertical shift of the series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .coeffs import CoefficientSequence, primes_up_to, smallest_prime_factors
from .errors import ParameterError, QuadratureError, SampleSizeError, TruncationError

__all__ = [
    "DEFAULT_PRIME_BOUND",
    "TorusPoint",
    "PlancherelResult",
    "BirkhoffResult",
    "make_rng",
    "twisted_series",
    "twisted_values",
    "plancherel_target",
    "plancherel_check",
    "character_orthogonality",
    "birkhoff_vs_space",
]

DEFAULT_PRIME_BOUND = 541  # the 100th prime
TWO_PI = 2 * math.pi


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator so streams are reproducible from one root seed."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class TorusPoint:
    """Phases ``theta_p in [0, 2 pi)`` for the primes ``p <= prime_bound``."""

    phases: np.ndarray
    prime_bound: int = DEFAULT_PRIME_BOUND

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=float)
        n = primes_up_to(self.prime_bound).size
        if ph.shape != (n,):
            raise ParameterError(f"expected {n} phases for P = {self.prime_bound}, got shape {ph.shape}")
        if np.any(ph < 0) or np.any(ph >= TWO_PI):
            raise ParameterError("phases must lie in [0, 2 pi)")
        object.__setattr__(self, "phases", ph)

    @property
    def primes(self) -> np.ndarray:
        return primes_up_to(self.prime_bound)

    @classmethod
    def zero(cls, prime_bound: int = DEFAULT_PRIME_BOUND) -> "TorusPoint":
        return cls(np.zeros(primes_up_to(prime_bound).size), prime_bound)

    @classmethod
    def flow(cls, t: float, prime_bound: int = DEFAULT_PRIME_BOUND) -> "TorusPoint":
        """The point ``e_t`` with ``theta_p = -t log p (mod 2 pi)``."""
        return cls(_wrap(-t * np.log(primes_up_to(prime_bound).astype(float))), prime_bound)

    @classmethod
    def random(cls, rng: np.random.Generator, prime_bound: int = DEFAULT_PRIME_BOUND) -> "TorusPoint":
        return cls(_wrap(rng.uniform(0, TWO_PI, primes_up_to(prime_bound).size)), prime_bound)

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        if other.prime_bound != self.prime_bound:
            raise ParameterError("torus points with different prime bounds")
        return TorusPoint(_wrap(self.phases + other.phases), self.prime_bound)

    def shift(self, t: float) -> "TorusPoint":
        return self + TorusPoint.flow(t, self.prime_bound)


def _wrap(x):
    y = np.mod(x, TWO_PI)
    # mod can round up to exactly 2 pi for tiny negative inputs
    return np.where(y >= TWO_PI, 0.0, y)


@lru_cache(maxsize=16)
def _exponent_matrix(N: int, P: int):
    """``E[n-1, j] = nu(n; p_j)`` and a flag for ``n`` not ``P``-smooth."""
    primes = primes_up_to(P)
    index = {int(p): j for j, p in enumerate(primes)}
    spf = smallest_prime_factors(max(N, 2))
    E = np.zeros((N, primes.size))
    rough = np.zeros(N, dtype=bool)
    for n in range(2, N + 1):
        p = int(spf[n])
        m = n // p
        rough[n - 1] = rough[m - 1] or p > P
        E[n - 1] = E[m - 1]
        if p <= P:
            E[n - 1, index[p]] += 1
    E.setflags(write=False)
    rough.setflags(write=False)
    return E, rough


def _weights(a: CoefficientSequence, P: int):
    vals = np.asarray(a.values, dtype=complex)
    E, rough = _exponent_matrix(a.length, P)
    bad = np.nonzero(rough & (vals != 0))[0]
    if bad.size:
        raise TruncationError(f"n = {bad[0] + 1} has a prime factor above P = {P}")
    return vals, E


def twisted_values(a: CoefficientSequence, thetas: np.ndarray, s: complex, P: int = DEFAULT_PRIME_BOUND):
    """``L(s, x)`` for a stack of phase vectors ``thetas`` of shape ``(samples, pi(P))``."""
    vals, E = _weights(a, P)
    n = np.arange(1, a.length + 1, dtype=float)
    c = vals * np.exp(-complex(s) * np.log(n))
    phase = np.atleast_2d(thetas) @ E.T
    return np.exp(1j * phase) @ c


def twisted_series(a: CoefficientSequence, x: TorusPoint, s):
    """``sum_n a(n) chi_n(x) n^{-s}`` for scalar or array ``s``."""
    vals, E = _weights(a, x.prime_bound)
    n = np.arange(1, a.length + 1, dtype=float)
    chi = np.exp(1j * (E @ x.phases)) * vals
    ss = np.asarray(s, dtype=complex)
    out = np.exp(-np.multiply.outer(ss, np.log(n))) @ chi
    return complex(out) if ss.ndim == 0 else out


def plancherel_target(a: CoefficientSequence, sigma: float) -> float:
    n = np.arange(1, a.length + 1, dtype=float)
    return float(math.fsum(np.abs(np.asarray(a.values, dtype=complex)) ** 2 / n ** (2 * sigma)))


class PlancherelResult(NamedTuple):
    mc_mean: float
    target: float
    z_score: float


def _z(mean: float, target: float, sd: float, count: int) -> float:
    gap = mean - target
    if sd == 0:
        return 0.0 if abs(gap) <= 1e-12 * max(1.0, abs(target)) else math.copysign(math.inf, gap)
    return gap / (sd / math.sqrt(count))


def plancherel_check(a: CoefficientSequence, sigma: float, samples: int, seed: int = 0,
                     P: int = DEFAULT_PRIME_BOUND, batch: int = 4096) -> PlancherelResult:
    """Monte-Carlo mean of ``|L(sigma, x)|^2`` over uniform ``x`` against ``sum |a(n)|^2 n^{-2 sigma}``."""
    if sigma <= 0.5:
        raise ParameterError("sigma must exceed 1/2")
    if samples < 100:
        raise SampleSizeError("at least 100 samples are required")
    rng = make_rng(seed)
    k = primes_up_to(P).size
    sq = []
    for start in range(0, samples, batch):
        m = min(batch, samples - start)
        sq.append(np.abs(twisted_values(a, rng.uniform(0, TWO_PI, (m, k)), sigma, P)) ** 2)
    sq = np.concatenate(sq)
    target = plancherel_target(a, sigma)
    mean = float(np.mean(sq))
    return PlancherelResult(mean, target, _z(mean, target, float(np.std(sq, ddof=1)), samples))


def character_orthogonality(m: int, n: int, samples: int, seed: int = 0, P: int = DEFAULT_PRIME_BOUND) -> PlancherelResult:
    """MC mean of ``chi_m(x) conj(chi_n(x))``; target 1 when ``m = n`` and 0 otherwise.

    The z-score uses the modulus of the complex gap.
    """
    if samples < 100:
        raise SampleSizeError("at least 100 samples are required")
    E, rough = _exponent_matrix(max(m, n), P)
    if rough[m - 1] or rough[n - 1]:
        raise TruncationError("m and n must be P-smooth")
    rng = make_rng(seed)
    th = rng.uniform(0, TWO_PI, (samples, primes_up_to(P).size))
    prod = np.exp(1j * (th @ (E[m - 1] - E[n - 1])))
    target = 1.0 if m == n else 0.0
    mean = complex(np.mean(prod))
    sd = float(np.sqrt(np.mean(np.abs(prod - mean) ** 2) * samples / (samples - 1)))
    gap = abs(mean - target)
    z = 0.0 if sd == 0 and gap < 1e-12 else (math.inf if sd == 0 else gap / (sd / math.sqrt(samples)))
    return PlancherelResult(mean.real if m == n else abs(mean), target, z)


class BirkhoffResult(NamedTuple):
    time_avg: float
    space_avg: float
    gap: float
    envelope: float  # max relative gap over horizons in [T/2, T]


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def birkhoff_vs_space(a: CoefficientSequence, sigma: float, T: float, x0: TorusPoint | None = None,
                      panel: float | None = None) -> BirkhoffResult:
    """Time average of ``|L(sigma, x0 + e_t)|^2`` on ``[0, T]`` against the space average.

    The time integral uses 16-point Gauss-Legendre on panels short compared to
    the fastest oscillation ``log N`` of the integrand.
    """
    if sigma <= 0.5:
        raise ParameterError("sigma must exceed 1/2")
    if not T > 0:
        raise ParameterError("T must be positive")
    x0 = x0 or TorusPoint.zero()
    vals, E = _weights(a, x0.prime_bound)
    n = np.arange(1, a.length + 1, dtype=float)
    c = vals * np.exp(1j * (E @ x0.phases)) * n**-sigma
    h = panel or min(1.0, math.pi / max(math.log(a.length), 1.0))
    m = max(1, math.ceil(T / h))
    edges = np.linspace(0.0, T, m + 1)
    half = (edges[1] - edges[0]) / 2
    integrals = np.empty(m)
    logn = np.log(n)
    chunk = max(1, 200_000 // (16 * a.length))
    for i in range(0, m, chunk):
        j = min(i + chunk, m)
        mid = (edges[i:j] + edges[i + 1 : j + 1]) / 2
        t = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
        v = np.abs(np.exp(-1j * np.multiply.outer(t, logn)) @ c) ** 2
        integrals[i : i + mid.size] = half * (v.reshape(-1, 16) @ _GL_WEIGHTS)
    if not np.all(np.isfinite(integrals)):
        raise QuadratureError("non-finite panel integral")
    cum = np.cumsum(integrals)
    space = plancherel_target(a, sigma)
    time_avg = float(cum[-1] / T)
    horizons = edges[1:]
    sel = horizons >= T / 2
    env = float(np.max(np.abs(cum[sel] / horizons[sel] - space)) / space)
    return BirkhoffResult(time_avg, space, abs(time_avg - space) / space, env)
