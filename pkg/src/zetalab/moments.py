"""Moments on complements of density-zero block sets.

Blocks are ``[n l, (n+1) l)``; a block is excluded when the sup of ``|f|`` over
the rectangle ``alpha <= sigma <= 2`` above it exceeds ``M``.  Continuous,
sigma-integrated and discrete moments of ``|f|^{2k}`` over the remaining blocks
are compared with the mean value ``sum |a_k(n)|^2 n^{-2 sigma}``, computed as an
Euler product.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .coeffs import EulerProductSpec, local_power_coeffs, power_coeffs, primes_up_to
from .errors import (
    AdmissibilityError,
    ParameterError,
    QuadratureError,
    ScaleError,
    SingularFactorError,
)
from .evaluator import FunctionEvaluator, cauchy_derivative

__all__ = [
    "BlockExclusion",
    "MomentReport",
    "MomentTarget",
    "Admissibility",
    "build_exclusion",
    "moment_target",
    "moment_target_special_l",
    "target_partial_sums",
    "check_admissible",
    "continuous_moment",
    "integrated_moment",
    "discrete_moment",
]

_GL24 = np.polynomial.legendre.leggauss(24)
_GL8 = np.polynomial.legendre.leggauss(8)
_CHUNK = 50_000


# --------------------------------------------------------------------------
# exclusion sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockExclusion:
    """Thresholded blocks; ``sup_values`` is ``nan`` where no sup was sampled."""

    l: float
    M: float
    alpha: float
    excluded: np.ndarray
    sup_values: np.ndarray
    sigma_hi: float = 2.0

    @property
    def n_blocks(self) -> int:
        return int(self.excluded.size)

    @property
    def density(self) -> float:
        return float(np.count_nonzero(self.excluded)) / self.n_blocks

    @property
    def excluded_indices(self) -> frozenset:
        return frozenset(int(i) for i in np.nonzero(self.excluded)[0])

    def rethreshold(self, M: float) -> "BlockExclusion":
        """Same sampled sups, new threshold (policy exclusions kept)."""
        policy = np.isnan(self.sup_values) & self.excluded
        if np.any(np.isnan(self.sup_values) & ~policy):
            raise ParameterError("sups were not sampled (built with M = inf)")
        exc = policy | (np.nan_to_num(self.sup_values, nan=0.0) > M)
        return BlockExclusion(self.l, M, self.alpha, exc, self.sup_values, self.sigma_hi)

    def to_bitmap_csv(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(["schema_version", "block", "t_lo", "t_hi", "excluded", "sup"])
        for n in range(self.n_blocks):
            w.writerow([1, n, repr(n * self.l), repr((n + 1) * self.l), int(self.excluded[n]), repr(float(self.sup_values[n]))])

    def as_dict(self) -> dict:
        return {"l": self.l, "M": self.M, "alpha": self.alpha, "sigma_hi": self.sigma_hi,
                "n_blocks": self.n_blocks, "density": self.density,
                "excluded": sorted(self.excluded_indices)}


def build_exclusion(f: FunctionEvaluator, l: float, alpha: float, M: float, N_blocks: int,
                    sigma_hi: float = 2.0, rel_accuracy: float = 0.05) -> BlockExclusion:
    """Exclude block ``n`` when the sampled sup of ``|f|`` over its rectangle exceeds ``M``.

    The sup is taken on the rectangle boundary (maximum principle).  The step
    on each block comes from three probe points on the left edge: with ``S``
    the largest probed ``|f|`` and ``D`` the largest probed ``|f'|``, a step
    ``h = rel_accuracy * S / D`` keeps the sampling error of the sup near
    ``rel_accuracy`` as long as ``|f'|`` stays within twice ``D``.  Blocks
    starting below ``t = 1`` are excluded by policy.
    """
    if not l > 0 or not M > 0 or N_blocks < 1:
        raise ParameterError("need l > 0, M > 0 and N_blocks >= 1")
    if not alpha < sigma_hi:
        raise ParameterError("alpha must lie below sigma_hi")
    starts = l * np.arange(N_blocks)
    excluded = starts < 1
    sups = np.full(N_blocks, np.nan)
    active = np.nonzero(~excluded)[0]
    if math.isinf(M) or active.size == 0:
        return BlockExclusion(l, M, alpha, excluded, sups, sigma_hi)

    probe_t = (starts[active, None] + l * np.array([1 / 6, 1 / 2, 5 / 6])[None, :]).ravel()
    probe_s = alpha + 1j * probe_t
    pv = np.abs(f.values(probe_s)).reshape(-1, 3)
    pd = np.abs(cauchy_derivative(f, probe_s, 1, radius=min(0.1, l / 4), nodes=12)).reshape(-1, 3)
    S = pv.max(axis=1)
    D = pd.max(axis=1)
    h = np.clip(rel_accuracy * S / np.maximum(D, 1e-300), l / 512, l / 4)

    # vertical edges per block; each horizontal edge is shared by the blocks above and below it
    pos = np.full(N_blocks, -1)
    pos[active] = np.arange(active.size)
    pts, owner = [], []
    for j, n in enumerate(active):
        kt = max(2, math.ceil(l / h[j]) + 1)
        kr = max(2, math.ceil(l / max(h[j], l / 8)) + 1)
        t0 = starts[n]
        g = np.concatenate([alpha + 1j * np.linspace(t0, t0 + l, kt), sigma_hi + 1j * np.linspace(t0, t0 + l, kr)])
        pts.append(g)
        owner.append(np.full(g.size, j))
    for edge in range(int(active[0]), N_blocks + 1):
        below = pos[edge - 1] if edge >= 1 else -1
        above = pos[edge] if edge < N_blocks else -1
        hh = min(h[i] for i in (below, above) if i >= 0)
        ks = max(2, math.ceil((sigma_hi - alpha) / hh) + 1)
        g = np.linspace(alpha, sigma_hi, ks) + 1j * edge * l
        for i in (below, above):
            if i >= 0:
                pts.append(g)
                owner.append(np.full(g.size, i))
    pts = np.concatenate(pts)
    owner = np.concatenate(owner)
    # evaluate each distinct point once
    uniq, inv = np.unique(pts, return_inverse=True)
    absval = np.empty(uniq.size)
    for i in range(0, uniq.size, _CHUNK):
        absval[i : i + _CHUNK] = np.abs(f.values(uniq[i : i + _CHUNK]))
    if not np.all(np.isfinite(absval)):
        raise QuadratureError("non-finite values while sampling block sups")
    absval = absval[inv]
    sup = np.maximum(S, 0.0)
    np.maximum.at(sup, owner, absval)
    sups[active] = sup
    excluded[active] = sup > M
    return BlockExclusion(l, M, alpha, excluded, sups, sigma_hi)


# --------------------------------------------------------------------------
# mean-value targets
# --------------------------------------------------------------------------

class MomentTarget(NamedTuple):
    value: float       # best estimate of sum |a_kappa(n)|^2 n^{-2 sigma}
    partial: float     # Euler product over p <= prime_cut
    tail_bound: float  # rigorous bound on value - partial from the Ramanujan envelope


def _local_series(roots, kappa, x: float, p: float, lam: float = 0.0) -> float:
    """``sum_nu |c_nu|^2 p^{-x nu}`` for the local coefficients of ``L^kappa`` at ``p``."""
    y = p**-x
    A = max(1.0, max(abs(r) for r in roots))
    nu_max = 4
    while (A * A * y) ** nu_max > 1e-18 and nu_max < 200:
        nu_max += 4
    c = local_power_coeffs(roots, kappa, nu_max)
    return float(math.fsum(abs(complex(cv)) ** 2 * y**nu for nu, cv in enumerate(c)))


def _log_series_coeffs(g: list, J: int) -> list:
    """Power-series coefficients ``e_1..e_J`` of ``log(sum g_j y^j)`` with ``g_0 = 1``."""
    e = [0.0] * (J + 1)
    for j in range(1, J + 1):
        acc = g[j] if j < len(g) else 0.0
        acc -= sum(i * e[i] * (g[j - i] if j - i < len(g) else 0.0) for i in range(1, j)) / j
        e[j] = acc
    return e


@lru_cache(maxsize=256)
def _prime_zeta(x: float) -> float:
    """``sum_p p^{-x}`` for real ``x > 1`` via ``sum_k mu(k)/k log zeta(k x)``."""
    from .coeffs import mobius_prefix
    from .zeta import zeta_values

    K = max(2, math.ceil(60 / (x * math.log(2))))
    mu = mobius_prefix(K).values
    ks = np.arange(1, K + 1)
    keep = mu != 0
    z = zeta_values((ks[keep] * x).astype(complex)).real
    return float(math.fsum(mu[keep] / ks[keep] * np.log(z)))


def _envelope_constants(spec: EulerProductSpec, kappa: float):
    rs = list(spec.roots.values()) + ([spec.default] if spec.default else [])
    A = max([1.0] + [abs(r) for tup in rs for r in tup])
    K = math.ceil(abs(kappa) * spec.order)
    return A, K


def moment_target(spec: EulerProductSpec, sigma: float, kappa: float, prime_cut: int = 100_000) -> MomentTarget:
    """``sum_n |a_kappa(n)|^2 n^{-2 sigma}`` as an Euler product.

    Primes up to ``prime_cut`` are multiplied out exactly.  When every larger
    prime carries the default roots, the remaining product is summed through
    the prime zeta function; otherwise only the envelope bound is reported.
    """
    if sigma <= 0.5:
        raise ParameterError("sigma must exceed 1/2")
    if kappa == 0:
        return MomentTarget(1.0, 1.0, 0.0)
    x = 2 * sigma
    if spec.default is None:
        cut = int(spec.prime_bound)
    else:
        # listed primes must all fall below the cut; beyond it the default roots apply
        cut = max([int(prime_cut)] + list(spec.roots))
    primes = primes_up_to(cut)
    logs = []
    if spec.default is not None:
        listed = [p for p in primes if int(p) in spec.roots]
        rest = primes[~np.isin(primes, listed)] if listed else primes
        g = [abs(complex(c)) ** 2 for c in local_power_coeffs(spec.default, kappa, 60)]
        y = rest.astype(float) ** -x
        # log of the local series evaluated as a polynomial in y
        poly = np.polyval(np.array(g[::-1]), y)
        logs.append(math.fsum(np.log(poly)))
        for p in listed:
            logs.append(math.log(_local_series(spec.roots[int(p)], kappa, x, float(p))))
    else:
        for p in primes:
            logs.append(math.log(_local_series(spec.roots_at(int(p)), kappa, x, float(p))))
    log_partial = math.fsum(logs)
    partial = math.exp(log_partial)

    A, K = _envelope_constants(spec, kappa)
    P = float(cut)
    env = K * K * A * A / (1 - A * A * P**-x) * P ** (1 - x) / (x - 1)
    tail_bound = partial * math.expm1(env)
    if spec.default is None:
        return MomentTarget(partial, partial, tail_bound)
    # sum_{p > P} log local(p) = sum_j e_j sum_{p > P} p^{-j x}
    J = max(1, math.ceil(36 / ((x - 1) * math.log(P))))  # P^{1-jx} below 1e-16
    J = min(J, 40)
    e = _log_series_coeffs(g, J)
    small = primes.astype(float)
    tail = 0.0
    for j in range(1, J + 1):
        if e[j] == 0:
            continue
        beyond = _prime_zeta(j * x) - math.fsum(small ** (-j * x))
        tail += e[j] * beyond
    return MomentTarget(partial * math.exp(tail), partial, tail_bound)


def target_partial_sums(spec: EulerProductSpec, sigma: float, kappa: float, N: int) -> np.ndarray:
    """Cumulative ``sum_{n <= N} |a_kappa(n)|^2 n^{-2 sigma}`` (nondecreasing in ``N``)."""
    a = power_coeffs(spec, kappa, N).values
    n = np.arange(1, N + 1, dtype=float)
    return np.cumsum(np.abs(np.asarray(a, dtype=complex)) ** 2 * n ** (-2 * sigma))


def moment_target_special_l(spec: EulerProductSpec, sigma: float, kappa: float, p: int, k: int = 1,
                            lam: float = 0.0, prime_cut: int = 100_000) -> float:
    """Mean value along ``l = 2 pi k / log p``.

    ``|prod_j (1 - alpha_j(p) p^{-sigma - i lam})^{-2 kappa}| * sum_{p not | n} |a_kappa(n)|^2 n^{-2 sigma}``.
    The phase of ``p^{-i t}`` is frozen along such progressions, so the local
    factor at ``p`` is evaluated at the offset ``lam`` (``lam = 0`` gives the
    textbook form).
    """
    if sigma <= 0.5:
        raise ParameterError("sigma must exceed 1/2")
    if k < 1:
        raise ParameterError("k must be a positive integer")
    if kappa == 0:
        return 1.0
    s = complex(sigma, lam)
    factor = 1.0
    for alpha in spec.roots_at(int(p)):
        u = 1 - alpha * complex(p) ** -s
        if abs(u) < 1e-14:
            raise SingularFactorError(f"local factor at p = {p} is singular")
        factor *= abs(u) ** (-2 * kappa)
    full = moment_target(spec, sigma, kappa, prime_cut).value
    coprime = full / _local_series(spec.roots_at(int(p)), kappa, 2 * sigma, float(p))
    return factor * coprime


# --------------------------------------------------------------------------
# admissibility of the block length
# --------------------------------------------------------------------------

class Admissibility(NamedTuple):
    admissible: bool
    witness: tuple | None     # (k, n, m) with l = 2 pi k / log(n/m) within tolerance
    distance: float           # closest approach found
    special_prime: int | None # p when l = 2 pi k / log p


def check_admissible(l: float, bound: int = 1000, tol: float = 1e-9, near: float = 1e-6) -> Admissibility:
    """Bounded search of ``l = 2 pi k / log(n/m)`` over ``k, n, m <= bound``."""
    if not l > 0:
        raise ParameterError("l must be positive")
    best, witness = math.inf, None
    logb = math.log(bound)
    for k in range(1, bound + 1):
        r_log = 2 * math.pi * k / l
        if r_log > logb + 1e-12:
            break
        r = math.exp(r_log)
        m = np.arange(1, int(bound / r) + 1)
        if m.size == 0:
            continue
        n = np.rint(r * m)
        ok = (n > m) & (n <= bound)
        if not np.any(ok):
            continue
        m, n = m[ok], n[ok]
        d = np.abs(2 * math.pi * k / np.log(n / m) - l)
        i = int(np.argmin(d))
        if d[i] < best:
            best, witness = float(d[i]), (k, int(n[i]), int(m[i]))
    special = None
    for p in primes_up_to(bound):
        j = l * math.log(p) / (2 * math.pi)
        if round(j) >= 1 and abs(l - 2 * math.pi * round(j) / math.log(p)) < tol:
            special = int(p)
            break
    admissible = best >= tol
    if admissible and best < near:
        warnings.warn(f"l = {l!r} lies within {best:.2e} of {witness}; Gamma_P is dense", RuntimeWarning, stacklevel=2)
    return Admissibility(admissible, None if admissible else witness, best, special)


# --------------------------------------------------------------------------
# moments
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentReport:
    sigma: float
    k: float
    empirical: float
    target: float
    target_partial: float
    tail_bound: float
    relative_gap: float
    reached: float
    excluded_density: float
    mode: str = "continuous"

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _abs_pow(f: FunctionEvaluator, s: np.ndarray, k: float) -> np.ndarray:
    out = np.empty(s.size)
    for i in range(0, s.size, _CHUNK):
        v = np.abs(f.values(s[i : i + _CHUNK]))
        out[i : i + _CHUNK] = v ** (2 * k)
    if not np.all(np.isfinite(out)):
        raise QuadratureError("non-finite integrand")
    return out


def _check_blocks(T: float, excl: BlockExclusion) -> int:
    nb = math.ceil(T / excl.l - 1e-12)
    if nb < 10:
        raise ScaleError("T must span at least 10 blocks")
    if nb > excl.n_blocks:
        raise ScaleError(f"exclusion covers {excl.n_blocks} blocks, T needs {nb}")
    return nb


def _time_average(f: FunctionEvaluator, sigma: float, k: float, T: float, excl: BlockExclusion) -> float:
    nb = _check_blocks(T, excl)
    keep = np.nonzero(~excl.excluded[:nb])[0]
    lo = keep * excl.l
    hi = np.minimum(lo + excl.l, T)
    x, w = _GL24
    half = (hi - lo) / 2
    t = ((lo + hi) / 2)[:, None] + half[:, None] * x[None, :]
    vals = _abs_pow(f, (sigma + 1j * t).ravel(), k).reshape(t.shape)
    return math.fsum(half * (vals @ w)) / T


def continuous_moment(f: FunctionEvaluator, sigma: float, k: float, T: float, excl: BlockExclusion,
                      spec: EulerProductSpec | None = None) -> MomentReport:
    """``(1/T) int_0^T |f(sigma + i t)|^{2k} 1_{A^c}(t) dt`` with 24-point Gauss-Legendre per block."""
    if sigma < excl.alpha - 1e-12:
        raise ParameterError("sigma lies left of the exclusion rectangle")
    spec = spec or EulerProductSpec.zeta()
    emp = _time_average(f, sigma, k, T, excl)
    tgt = moment_target(spec, sigma, k)
    return MomentReport(sigma, k, emp, tgt.value, tgt.partial, tgt.tail_bound,
                        (emp - tgt.value) / tgt.value, T, excl.density, "continuous")


def integrated_moment(f: FunctionEvaluator, alpha: float, k: float, T: float, excl: BlockExclusion,
                      spec: EulerProductSpec | None = None, sigma_hi: float = 2.0) -> MomentReport:
    """Moment averaged over ``sigma in [alpha, sigma_hi]`` (8-point Gauss-Legendre in sigma)."""
    if alpha < excl.alpha - 1e-12:
        raise ParameterError("alpha lies left of the exclusion rectangle")
    spec = spec or EulerProductSpec.zeta()
    x, w = _GL8
    sig = (alpha + sigma_hi) / 2 + (sigma_hi - alpha) / 2 * x
    emp = float(sum(wi * _time_average(f, float(si), k, T, excl) for si, wi in zip(sig, w)) / 2)
    tg = [moment_target(spec, float(si), k) for si in sig]
    val = float(sum(wi * t.value for wi, t in zip(w, tg)) / 2)
    part = float(sum(wi * t.partial for wi, t in zip(w, tg)) / 2)
    tail = float(sum(wi * t.tail_bound for wi, t in zip(w, tg)) / 2)
    return MomentReport(alpha, k, emp, val, part, tail, (emp - val) / val, T, excl.density, "integrated")


def discrete_moment(f: FunctionEvaluator, sigma: float, lam: float, l: float, k: float, N: int,
                    excl: BlockExclusion, spec: EulerProductSpec | None = None) -> MomentReport:
    """``(1/N) sum_{n <= N, n not excluded} |f(sigma + i lam + i n l)|^{2k}``."""
    if not 0 <= lam <= l:
        raise ParameterError("lambda must lie in [0, l]")
    if not math.isclose(excl.l, l, rel_tol=1e-12):
        raise ParameterError("exclusion was built for a different block length")
    if sigma < excl.alpha - 1e-12:
        raise ParameterError("sigma lies left of the exclusion rectangle")
    if N + 1 > excl.n_blocks:
        raise ScaleError(f"exclusion covers {excl.n_blocks} blocks, N needs {N + 1}")
    spec = spec or EulerProductSpec.zeta()
    adm = check_admissible(l)
    if adm.admissible:
        tgt = moment_target(spec, sigma, k)
        value, partial, tail = tgt
    elif adm.special_prime is not None:
        p = adm.special_prime
        kk = round(l * math.log(p) / (2 * math.pi))
        value = moment_target_special_l(spec, sigma, k, p, kk, lam)
        partial, tail = value, math.nan
    else:
        raise AdmissibilityError(f"l = {l!r} lies in Gamma_P: witness (k, n, m) = {adm.witness}")
    n = np.arange(1, N + 1)
    keep = n[~excl.excluded[n]]
    vals = _abs_pow(f, sigma + 1j * (lam + keep * l), k)
    emp = math.fsum(vals) / N
    return MomentReport(sigma, k, emp, value, partial, tail, (emp - value) / value, float(N),
                        float(np.count_nonzero(excl.excluded[n])) / N, "discrete")
