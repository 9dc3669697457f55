"""Dirichlet-series coefficient algebra.

Coefficients are held as dense arrays over ``n = 1..N``.  Sequences built from
integer data keep an integer dtype so that identities such as
``d_{-k} * d_k = d_0`` can be checked exactly.

Euler products are polynomial: each prime carries ``m`` local roots
``alpha_1(p), ..., alpha_m(p)`` and the local factor is
``prod_j (1 - alpha_j(p) p^{-s})^{-1}``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from numbers import Integral
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegenerateFitError, IncompleteSpecError, LengthError, ParameterError

__all__ = [
    "CoefficientSequence",
    "EulerProductSpec",
    "AbscissaReport",
    "primes_up_to",
    "smallest_prime_factors",
    "dirichlet_convolve",
    "divisor_kappa",
    "divisor_kappa_prefix",
    "euler_coeffs",
    "power_coeffs",
    "log_coeffs",
    "logderiv_coeffs",
    "derivative_coeffs",
    "abscissa_estimates",
    "mobius_prefix",
    "local_power_coeffs",
]


# --------------------------------------------------------------------------
# sieves
# --------------------------------------------------------------------------

def primes_up_to(n: int) -> np.ndarray:
    """Primes ``<= n`` as an int64 array (Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def smallest_prime_factors(n: int) -> np.ndarray:
    """``spf[k]`` is the least prime dividing ``k`` (``spf[0] = spf[1] = 0``)."""
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if spf[p] == 0:
            spf[p] = p
            block = spf[p * p :: p] if p * p <= n else spf[0:0]
            block[block == 0] = p
    return spf


# --------------------------------------------------------------------------
# types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientSequence:
    """Finite prefix ``a(1..N)`` of a Dirichlet series.

    ``values[n - 1]`` holds ``a(n)``; use ``seq[n]`` for 1-based access.
    """

    values: np.ndarray
    multiplicative: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 1 or arr.size == 0:
            raise LengthError("coefficient prefix must be a non-empty 1-d array")
        if not np.isfinite(arr[0]):
            raise ParameterError("a(1) must be finite")
        object.__setattr__(self, "values", arr)

    @property
    def length(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, n):
        if isinstance(n, slice):
            raise TypeError("use .values for slicing")
        if not 1 <= n <= self.length:
            raise IndexError(f"index {n} outside 1..{self.length}")
        return self.values[n - 1]

    def truncate(self, N: int) -> "CoefficientSequence":
        if N > self.length:
            raise LengthError(f"cannot truncate length {self.length} to {N}")
        return CoefficientSequence(self.values[:N].copy(), self.multiplicative)

    def check_multiplicative(self) -> bool:
        """Exhaustive scan of ``a(mn) = a(m)a(n)`` over coprime pairs, plus ``a(1)=1``."""
        a = self.values
        N = self.length
        if a[0] != 1:
            return False
        for m in range(2, N + 1):
            for n in range(m + 1, N // m + 1):
                if math.gcd(m, n) == 1 and not np.isclose(a[m * n - 1], a[m - 1] * a[n - 1], rtol=1e-12, atol=1e-12):
                    return False
        return True

    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "re", "im"])
            for n, v in enumerate(self.values, start=1):
                c = complex(v)
                w.writerow([n, repr(c.real), repr(c.imag)])

    @classmethod
    def from_csv(cls, path, multiplicative: bool = False) -> "CoefficientSequence":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append((int(row["n"]), complex(float(row["re"]), float(row["im"]))))
        rows.sort()
        if [n for n, _ in rows] != list(range(1, len(rows) + 1)):
            raise LengthError(f"{path}: indices must be exactly 1..N")
        vals = np.array([v for _, v in rows], dtype=complex)
        if np.all(vals.imag == 0):
            vals = vals.real
        return cls(vals, multiplicative)

    @classmethod
    def unit(cls, N: int) -> "CoefficientSequence":
        """``d_0``: 1, 0, 0, ..."""
        v = np.zeros(N, dtype=np.int64)
        v[0] = 1
        return cls(v, True)

    @classmethod
    def ones(cls, N: int) -> "CoefficientSequence":
        return cls(np.ones(N, dtype=np.int64), True)


RootRule = Callable[[int], Sequence[complex]]


@dataclass(frozen=True)
class EulerProductSpec:
    """Local roots of a polynomial Euler product.

    ``roots`` maps primes to exactly ``order`` complex roots.  ``default`` may
    supply roots for every prime not listed (e.g. ``[1]`` for zeta); without a
    default, only primes up to ``prime_bound`` are known.
    """

    order: int
    roots: dict = field(default_factory=dict)
    default: tuple | None = None
    ramanujan: bool = False

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError("order must be positive")
        clean = {}
        for p, rs in self.roots.items():
            rs = tuple(complex(r) for r in rs)
            if len(rs) != self.order:
                raise ParameterError(f"prime {p}: expected {self.order} roots, got {len(rs)}")
            clean[int(p)] = rs
        object.__setattr__(self, "roots", clean)
        if self.default is not None:
            d = tuple(complex(r) for r in self.default)
            if len(d) != self.order:
                raise ParameterError("default root list has wrong length")
            object.__setattr__(self, "default", d)
        if self.ramanujan:
            bad = [p for p, rs in clean.items() if max(abs(r) for r in rs) > 1 + 1e-12]
            if self.default is not None and max(abs(r) for r in self.default) > 1 + 1e-12:
                bad.append("default")
            if bad:
                raise ParameterError(f"Ramanujan flag claimed but |alpha| > 1 at {bad[:5]}")

    @property
    def prime_bound(self) -> float:
        if self.default is not None:
            return math.inf
        return max(self.roots) if self.roots else 0

    def roots_at(self, p: int) -> tuple:
        try:
            return self.roots[p]
        except KeyError:
            if self.default is None:
                raise IncompleteSpecError(f"no local roots stored for prime {p}") from None
            return self.default

    def require(self, N: int) -> None:
        if self.default is not None:
            return
        missing = [int(p) for p in primes_up_to(N) if int(p) not in self.roots]
        if missing:
            raise IncompleteSpecError(f"spec lacks roots for primes {missing[:8]}{'...' if len(missing) > 8 else ''}")

    def is_integral(self) -> bool:
        rs = list(self.roots.values()) + ([self.default] if self.default else [])
        return all(r.imag == 0 and float(r.real).is_integer() for tup in rs for r in tup)

    @classmethod
    def zeta(cls) -> "EulerProductSpec":
        return cls(1, {}, (1,), ramanujan=True)

    @classmethod
    def zeta_power(cls, m: int) -> "EulerProductSpec":
        return cls(m, {}, (1,) * m, ramanujan=True)

    @classmethod
    def from_rule(cls, order: int, rule: RootRule, prime_bound: int, ramanujan: bool = False) -> "EulerProductSpec":
        return cls(order, {int(p): tuple(rule(int(p))) for p in primes_up_to(prime_bound)}, None, ramanujan)

    @classmethod
    def load(cls, path) -> "EulerProductSpec":
        """Read the text format::

            # comment
            order 2
            2: 1,0 ; -1,0
            3: 0,1 ; 0,-1
            *: 1,0 ; 1,0        (optional default for unlisted primes)
            ramanujan           (optional flag)
        """
        path = Path(path)
        order = None
        roots = {}
        default = None
        ramanujan = False
        for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("order"):
                order = int(line.split()[1])
                continue
            if line == "ramanujan":
                ramanujan = True
                continue
            key, _, rest = line.partition(":")
            try:
                rs = []
                for pair in rest.split(";"):
                    re_, im_ = (float(x) for x in pair.split(","))
                    rs.append(complex(re_, im_))
            except ValueError as exc:
                raise ParameterError(f"{path}:{lineno}: cannot parse roots {rest!r}") from exc
            if key.strip() == "*":
                default = tuple(rs)
            else:
                roots[int(key)] = tuple(rs)
        if order is None:
            order = len(default) if default else len(next(iter(roots.values())))
        return cls(order, roots, default, ramanujan)

    def dump(self, path) -> None:
        lines = [f"order {self.order}"]
        if self.ramanujan:
            lines.append("ramanujan")
        for p in sorted(self.roots):
            lines.append(f"{p}: " + " ; ".join(f"{r.real!r},{r.imag!r}" for r in self.roots[p]))
        if self.default is not None:
            lines.append("*: " + " ; ".join(f"{r.real!r},{r.imag!r}" for r in self.default))
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class AbscissaReport:
    sigma_c_estimate: float
    sigma_a_estimate: float
    sample_points: list
    fit_tolerance: float = 0.05

    def gap_ok(self) -> bool:
        return self.sigma_a_estimate - self.sigma_c_estimate <= 1 + self.fit_tolerance


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def dirichlet_convolve(a: CoefficientSequence, b: CoefficientSequence, N: int | None = None) -> CoefficientSequence:
    """``(a*b)(n) = sum_{d|n} a(d) b(n/d)`` for ``n <= N``."""
    if N is None:
        N = min(a.length, b.length)
    if N > a.length or N > b.length:
        raise LengthError(f"N={N} exceeds input lengths ({a.length}, {b.length})")
    av = a.values[:N]
    bv = b.values[:N]
    dtype = np.result_type(av.dtype, bv.dtype)
    out = np.zeros(N, dtype=dtype)
    for d in range(1, N + 1):
        ad = av[d - 1]
        if ad == 0:
            continue
        k = N // d
        out[d - 1 :: d][:k] += ad * bv[:k]
    return CoefficientSequence(out, a.multiplicative and b.multiplicative)


def _is_integral(kappa) -> bool:
    return isinstance(kappa, Integral) or float(kappa).is_integer()


def _binom_series(kappa, nu_max: int) -> list:
    """``d_kappa(p^nu)`` for ``nu = 0..nu_max``.

    Integral ``kappa`` gives exact Python ints; real ``kappa`` uses the product
    recurrence ``d(p^nu) = d(p^{nu-1}) (kappa + nu - 1) / nu``.
    """
    if _is_integral(kappa):
        k = int(kappa)
        out = [1]
        num = 1
        for nu in range(1, nu_max + 1):
            num *= k + nu - 1
            out.append(num // math.factorial(nu))
        return out
    out = [1.0]
    for nu in range(1, nu_max + 1):
        out.append(out[-1] * (kappa + nu - 1) / nu)
    return out


def divisor_kappa(kappa: float, n: int):
    """Generalized divisor function ``d_kappa(n)``.

    Multiplicative with ``d_kappa(p^nu) = binom(kappa + nu - 1, nu)``.  Returns an
    ``int`` for integral ``kappa``.
    """
    if n < 1:
        raise ParameterError("n must be positive")
    if _is_integral(kappa):
        kappa = int(kappa)
        result = 1
    else:
        kappa = float(kappa)
        result = 1.0
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            nu = 0
            while m % p == 0:
                m //= p
                nu += 1
            result *= _binom_series(kappa, nu)[nu]
        p += 1
    if m > 1:
        result *= kappa
    return result


def _fill_multiplicative(N: int, local: Callable[[int, int], Sequence], dtype) -> np.ndarray:
    """Dense multiplicative array from prime-power values ``local(p, nu_max)[nu]``."""
    out = np.ones(N, dtype=dtype)
    for p in primes_up_to(N):
        p = int(p)
        nu_max = 1
        while p ** (nu_max + 1) <= N:
            nu_max += 1
        vals = local(p, nu_max)
        for nu in range(1, nu_max + 1):
            q = p**nu
            idx = np.arange(q, N + 1, q)
            idx = idx[(idx // q) % p != 0]
            out[idx - 1] *= vals[nu]
    return out


def divisor_kappa_prefix(kappa: float, N: int) -> CoefficientSequence:
    """``d_kappa(1..N)``; integer dtype for integral ``kappa``."""
    integral = _is_integral(kappa)
    k = int(kappa) if integral else float(kappa)
    dtype = np.int64 if integral else np.float64
    series = _binom_series(k, max(1, int(math.log2(max(N, 2)))))
    return CoefficientSequence(_fill_multiplicative(N, lambda p, nu_max: series, dtype), True)


def mobius_prefix(N: int) -> CoefficientSequence:
    return divisor_kappa_prefix(-1, N)


def local_power_coeffs(roots: Sequence[complex], kappa, nu_max: int) -> list:
    """Coefficients of ``prod_j (1 - alpha_j x)^{-kappa}`` up to ``x^nu_max``."""
    dk = _binom_series(kappa, nu_max)
    poly = [1] + [0] * nu_max
    for alpha in roots:
        factor = [dk[k] * alpha**k for k in range(nu_max + 1)]
        poly = [sum(poly[i] * factor[k - i] for i in range(k + 1)) for k in range(nu_max + 1)]
    return poly


def _coeff_dtype(spec: EulerProductSpec, kappa) -> type:
    if spec.is_integral() and _is_integral(kappa):
        return np.int64
    rs = list(spec.roots.values()) + ([spec.default] if spec.default else [])
    if all(r.imag == 0 for tup in rs for r in tup):
        return np.float64
    return np.complex128


def _cast_local(vals, dtype):
    if dtype is np.int64:
        return [int(round(complex(v).real)) for v in vals]
    if dtype is np.float64:
        return [complex(v).real for v in vals]
    return [complex(v) for v in vals]


def power_coeffs(spec: EulerProductSpec, kappa: float, N: int) -> CoefficientSequence:
    """Coefficients ``a_kappa(n)`` of ``L^kappa`` for a polynomial Euler product."""
    spec.require(N)
    dtype = _coeff_dtype(spec, kappa)

    def local(p, nu_max):
        return _cast_local(local_power_coeffs(spec.roots_at(p), kappa, nu_max), dtype)

    return CoefficientSequence(_fill_multiplicative(N, local, dtype), True)


def euler_coeffs(spec: EulerProductSpec, N: int) -> CoefficientSequence:
    """Coefficients of ``L`` itself (``kappa = 1``)."""
    return power_coeffs(spec, 1, N)


def _prime_power_table(N: int):
    """Arrays (n, p, nu) over all prime powers ``n = p^nu <= N``."""
    ns, ps, nus = [], [], []
    for p in primes_up_to(N):
        p = int(p)
        q, nu = p, 1
        while q <= N:
            ns.append(q)
            ps.append(p)
            nus.append(nu)
            q *= p
            nu += 1
    return np.array(ns, dtype=np.int64), np.array(ps, dtype=np.int64), np.array(nus, dtype=np.int64)


def _power_sums(spec: EulerProductSpec, ps, nus) -> np.ndarray:
    return np.array([sum(r**int(nu) for r in spec.roots_at(int(p))) for p, nu in zip(ps, nus)], dtype=complex)


def _maybe_real(v: np.ndarray) -> np.ndarray:
    return v.real.copy() if np.all(v.imag == 0) else v


def log_coeffs(spec: EulerProductSpec, N: int) -> CoefficientSequence:
    """Coefficients of ``log L`` with ``log L(sigma) -> 0`` as ``sigma -> oo``.

    Supported on prime powers: ``a(p^nu) = (1/nu) sum_j alpha_j(p)^nu``.
    """
    spec.require(N)
    out = np.zeros(N, dtype=complex)
    ns, ps, nus = _prime_power_table(N)
    if ns.size:
        out[ns - 1] = _power_sums(spec, ps, nus) / nus
    return CoefficientSequence(_maybe_real(out), False)


def logderiv_coeffs(spec: EulerProductSpec, N: int) -> CoefficientSequence:
    """Generalized von Mangoldt function: ``L'/L = -sum Lambda_L(n) n^{-s}``."""
    spec.require(N)
    out = np.zeros(N, dtype=complex)
    ns, ps, nus = _prime_power_table(N)
    if ns.size:
        out[ns - 1] = _power_sums(spec, ps, nus) * np.log(ps)
    return CoefficientSequence(_maybe_real(out), False)


def derivative_coeffs(a: CoefficientSequence, ell: int, N: int | None = None) -> CoefficientSequence:
    """Coefficients of the ``ell``-th derivative: ``(-1)^ell a(n) (log n)^ell``."""
    if ell < 0:
        raise ParameterError("derivative order must be non-negative")
    N = a.length if N is None else N
    if N > a.length:
        raise LengthError(f"N={N} exceeds length {a.length}")
    if ell == 0:
        return CoefficientSequence(a.values[:N].copy(), a.multiplicative)
    logn = np.log(np.arange(1, N + 1, dtype=float))
    return CoefficientSequence((-1) ** ell * a.values[:N] * logn**ell, False)


def _windowed_slopes(xs: np.ndarray, ys: np.ndarray, window: int) -> list:
    slopes = []
    lx = np.log(xs)
    for i in range(0, len(xs) - window + 1):
        sl = np.polyfit(lx[i : i + window], ys[i : i + window], 1)[0]
        slopes.append(float(sl))
    return slopes


def _growth_exponent(psums: np.ndarray, grid: np.ndarray):
    absval = np.abs(psums[grid - 1])
    keep = absval > 0
    if not np.any(keep):
        raise DegenerateFitError("partial sums vanish on the whole grid")
    xs = grid[keep].astype(float)
    ys = np.log(absval[keep])
    samples = [(int(x), float(y / math.log(x)) if x > 1 else 0.0) for x, y in zip(xs, ys)]
    half = len(xs) // 2
    xs_t, ys_t = xs[half:], ys[half:]
    if len(xs_t) < 2:
        # too few points for a slope; fall back to the ratio at the last point
        est = float(ys[-1] / math.log(xs[-1])) if xs[-1] > 1 else 0.0
        return max(est, 0.0), samples
    window = max(2, len(xs_t) // 2)
    est = max(_windowed_slopes(xs_t, ys_t, window))
    return max(est, 0.0), samples


def abscissa_estimates(a: CoefficientSequence, x_grid: Iterable[int]) -> AbscissaReport:
    """Empirical growth exponents of ``sum_{n<=x} a(n)`` and ``sum |a(n)|``.

    Each exponent is the largest least-squares slope of ``log|A(x)|`` against
    ``log x`` over sliding windows in the upper half of the grid (a finite
    stand-in for the limsup), clipped at 0.
    """
    grid = np.asarray(list(x_grid), dtype=np.int64)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 1:
        raise ParameterError("x_grid must be a non-empty increasing list of positive integers")
    if grid[-1] > a.length:
        raise LengthError(f"grid maximum {grid[-1]} exceeds coefficient length {a.length}")
    sc, samples = _growth_exponent(np.cumsum(a.values), grid)
    sa, _ = _growth_exponent(np.cumsum(np.abs(a.values)), grid)
    return AbscissaReport(sc, sa, samples)
