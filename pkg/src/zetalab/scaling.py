"""Rescaling near the critical line.

The conformal maps ``phi_tau(z) = 1/2 + (mu(tau)/log tau) z + i tau`` blow up
shrinking discs around ``1/2 + i tau`` to the unit disc.  This module provides
the scaling profiles ``mu``, the limit shapes of ``Delta_p o phi_tau``,
phase-matched sequences ``tau_k``, the functional-equation symmetry of
rescaled families, and spherical-derivative scans along the critical line.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegeneratePhaseError, PoleError, ProfileError, RangeError
from .evaluator import FunctionEvaluator
from .funceq import FunctionalEquationData, delta_eval, delta_invariants

__all__ = [
    "ScalingProfile",
    "FillingDiscRecord",
    "LimitShapeReport",
    "phi_map",
    "rescaled_delta",
    "nu_phase",
    "delta_limit_shape",
    "construct_tau_sequence",
    "rescaled_symmetry_check",
    "lehto_scan",
    "scan_grid",
    "write_records_csv",
]

PROFILE_KINDS = ("constant", "loglog-power", "log-power", "custom")

# far-tail probe for the regime of mu, in units of log(tau)
_PROBE_LOGTAU = (1e80, 1e90, 1e100)
_ZERO_THRESHOLD = 0.05
_INF_THRESHOLD = 20.0


@dataclass(frozen=True)
class ScalingProfile:
    """Named scaling function ``mu(tau)``.

    * ``constant``: ``mu = c``
    * ``loglog-power``: ``mu = c (log log tau)^a`` (``a < 0`` decays, ``a > 0`` grows)
    * ``log-power``: ``mu = c (log tau)^a`` with ``0 < a <= 1``
    * ``custom``: table of ``(tau, mu)`` interpolated in ``log tau``, constant
      beyond both ends
    """

    kind: str
    params: tuple = ()
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        if self.kind == "custom":
            taus = np.array([x for x, _ in self.table], dtype=float)
            mus = np.array([y for _, y in self.table], dtype=float)
            if taus.size == 0 or np.any(np.diff(taus) <= 0) or np.any(mus <= 0):
                raise ProfileError("custom table needs increasing tau and positive mu")
        elif self.kind == "constant":
            if len(self.params) != 1 or not self.params[0] > 0:
                raise ProfileError("constant profile needs one positive value")
        else:
            if len(self.params) != 2 or not self.params[0] > 0:
                raise ProfileError(f"{self.kind} profile needs (c > 0, a)")
            if self.kind == "log-power" and not 0 < self.params[1] <= 1:
                raise ProfileError("log-power exponent must lie in (0, 1]")

    # -- constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "ScalingProfile":
        return cls("constant", (float(c),))

    @classmethod
    def loglog(cls, c: float = 1.0, a: float = 1.0) -> "ScalingProfile":
        return cls("loglog-power", (float(c), float(a)))

    @classmethod
    def inverse_loglog(cls) -> "ScalingProfile":
        return cls.loglog(1.0, -1.0)

    @classmethod
    def log_power(cls, c: float, a: float) -> "ScalingProfile":
        return cls("log-power", (float(c), float(a)))

    @classmethod
    def custom(cls, pairs: Sequence) -> "ScalingProfile":
        return cls("custom", (), tuple((float(x), float(y)) for x, y in pairs))

    @classmethod
    def parse(cls, text: str) -> "ScalingProfile":
        """``loglog``, ``invloglog``, ``const:1.5``, ``logpow:0.3,0.5``, ``loglogpow:1,2``."""
        name, _, arg = text.partition(":")
        vals = [float(x) for x in arg.split(",")] if arg else []
        if name == "loglog":
            return cls.loglog(*(vals or [1.0]))
        if name == "invloglog":
            return cls.inverse_loglog()
        if name in ("const", "constant"):
            return cls.constant(vals[0] if vals else 1.0)
        if name == "logpow":
            return cls.log_power(*vals)
        if name == "loglogpow":
            return cls.loglog(*vals)
        raise ProfileError(f"cannot parse profile {text!r}")

    # -- evaluation -------------------------------------------------------------
    def mu_of_logtau(self, L):
        """``mu`` as a function of ``L = log tau`` (safe for astronomically large tau)."""
        L = np.asarray(L, dtype=float)
        if self.kind == "constant":
            out = np.full(L.shape, self.params[0])
        elif self.kind == "loglog-power":
            c, a = self.params
            out = c * np.log(L) ** a
        elif self.kind == "log-power":
            c, a = self.params
            out = c * L**a
        else:
            lt = np.log([x for x, _ in self.table])
            out = np.interp(L, lt, [y for _, y in self.table])
        return float(out) if out.ndim == 0 else out

    def __call__(self, tau):
        return self.mu_of_logtau(np.log(np.asarray(tau, dtype=float)))

    def check(self, tau) -> None:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if np.any(tau < 2):
            raise ProfileError("profiles are defined on [2, oo)")
        mu = np.atleast_1d(self(tau))
        if np.any(mu <= 0):
            raise ProfileError("mu must be positive")
        if np.any(mu > 0.5 * np.log(tau) * (1 + 1e-12)):
            bad = tau[mu > 0.5 * np.log(tau)][0]
            raise ProfileError(f"mu({bad:g}) exceeds (1/2) log tau")

    def radius(self, tau):
        return np.asarray(self(tau)) / np.log(tau)

    def regime(self) -> tuple:
        """``("0" | "c" | "inf", c_estimate)``.

        Parametric kinds are classified from their exponents.  Custom tables
        are probed far out in the tail against the fixed thresholds.
        """
        if self.kind == "constant":
            return "c", self.params[0]
        if self.kind == "log-power":
            return "inf", math.inf
        if self.kind == "loglog-power":
            c, a = self.params
            return ("0", 0.0) if a < 0 else ("inf", math.inf) if a > 0 else ("c", c)
        probe = np.array(self.mu_of_logtau(np.array(_PROBE_LOGTAU)))
        last = float(probe[-1])
        if last < _ZERO_THRESHOLD:
            return "0", 0.0
        if last > _INF_THRESHOLD:
            return "inf", math.inf
        return "c", float(np.mean(probe))

    def describe(self) -> str:
        return f"{self.kind}{self.params or ''}"


@dataclass(frozen=True)
class FillingDiscRecord:
    tau: float
    radius: float
    score: float
    abs_value: float
    predicted_bound: float = 0.0

    def as_row(self) -> list:
        return [self.tau, self.radius, self.score, self.abs_value, self.predicted_bound]


def phi_map(tau: float, profile: ScalingProfile, z):
    """``1/2 + (mu(tau)/log tau) z + i tau``."""
    if tau < 2:
        raise ProfileError("tau must be at least 2")
    profile.check(tau)
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) >= 1):
        raise ProfileError("z must lie in the open unit disc")
    out = 0.5 + profile.radius(tau) * zz + 1j * tau
    return complex(out) if np.ndim(z) == 0 else out


def nu_phase(p: FunctionalEquationData, tau: float) -> float:
    """``nu_p(tau) = d tau log tau + tau log(lambda_p Q^2) - d tau - Im(mu_p) log tau``.

    Terms are accumulated with ``math.fsum`` so the large cancelling pieces keep
    their absolute accuracy at big ``tau``.
    """
    inv = delta_invariants(p)
    lt = math.log(tau)
    return math.fsum([inv.degree * tau * lt, tau * math.log(inv.q2lambda), -inv.degree * tau, -inv.im_mu_p * lt])


def _nu_prime(p: FunctionalEquationData, tau: float) -> float:
    inv = delta_invariants(p)
    return inv.degree * math.log(tau) + math.log(inv.q2lambda) - inv.im_mu_p / tau


@dataclass(frozen=True)
class LimitShapeReport:
    taus: tuple
    max_deviation: tuple          # leading-order form from the limit lemma
    max_deviation_refined: tuple  # with the (lambda_p Q^2)^{-lambda(tau) z} factor
    max_abs_minus_one: tuple      # max_z | |Delta_{p,tau}(z)| - 1 |
    empirical_mu: tuple
    regime: str
    c_estimate: float

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def rescaled_delta(p: FunctionalEquationData, tau: float, profile: ScalingProfile, z):
    return delta_eval(p, phi_map(tau, profile, z))


def delta_limit_shape(p: FunctionalEquationData, profile: ScalingProfile, tau_list, z_grid) -> LimitShapeReport:
    """Compare ``Delta_p(phi_tau(z))`` with ``omega_p exp(-d mu z - i nu_p(tau))``."""
    inv = delta_invariants(p)
    if inv.degree <= 0:
        raise DegeneratePhaseError("limit shapes need positive degree")
    z = np.asarray(z_grid, dtype=complex).ravel()
    devs, devs_ref, mods, emus = [], [], [], []
    for tau in tau_list:
        if tau < 10:
            raise RangeError("tau must be at least 10")
        mu = float(profile(tau))
        lam = mu / math.log(tau)
        exact = np.asarray(rescaled_delta(p, tau, profile, z))
        lead = inv.omega_p * np.exp(-inv.degree * mu * z - 1j * nu_phase(p, tau))
        refined = lead * np.exp(-lam * z * math.log(inv.q2lambda))
        devs.append(float(np.max(np.abs(exact - lead) / np.abs(exact))))
        devs_ref.append(float(np.max(np.abs(exact - refined) / np.abs(exact))))
        mods.append(float(np.max(np.abs(np.abs(exact) - 1))))
        xs = z[np.abs(z.real) > 1e-3]
        if xs.size:
            # -log|Delta| = x (d mu + lambda log(lambda_p Q^2)) to leading order
            ex = np.asarray(rescaled_delta(p, tau, profile, xs))
            slope = -np.log(np.abs(ex)) / xs.real
            emus.append(float(np.median(slope) / (inv.degree + math.log(inv.q2lambda) / math.log(tau))))
        else:
            emus.append(math.nan)
    regime, c = profile.regime()
    return LimitShapeReport(tuple(float(t) for t in tau_list), tuple(devs), tuple(devs_ref), tuple(mods),
                            tuple(emus), regime, c)


def construct_tau_sequence(p: FunctionalEquationData, ell: float, count: int, tau_min: float) -> list:
    """First ``count`` solutions ``tau >= tau_min`` of ``-nu_p(tau) = ell (mod 2 pi)``."""
    inv = delta_invariants(p)
    if inv.degree <= 0:
        raise DegeneratePhaseError("nu_p is not increasing when d_p = 0")
    if not 0 <= ell < 2 * math.pi:
        raise RangeError("ell must lie in [0, 2 pi)")
    tau = max(float(tau_min), 2.0)
    while _nu_prime(p, tau) <= 0:
        # move past the turning point of nu_p
        tau *= 1.5
    k = math.ceil((nu_phase(p, tau) + ell) / (2 * math.pi))
    out = []
    lo = tau
    for _ in range(count):
        target = 2 * math.pi * k - ell
        g = lambda x: nu_phase(p, x) - target
        step = 2 * math.pi / _nu_prime(p, lo)
        hi = lo + step
        while g(hi) < 0:
            hi += step
        root = brentq(g, lo, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
        out.append(root)
        lo = root
        k += 1
    return out


def rescaled_symmetry_check(f: FunctionEvaluator, p: FunctionalEquationData, tau: float,
                            profile: ScalingProfile, z_grid) -> float:
    """``max_z |f(phi(z)) - Delta(phi(z)) conj(f(phi(-conj z)))|``."""
    z = np.asarray(z_grid, dtype=complex).ravel()
    s = np.asarray(phi_map(tau, profile, z))
    s_ref = np.asarray(phi_map(tau, profile, -np.conj(z)))
    center, radius = 0.5 + 1j * tau, float(profile.radius(tau))
    if any(abs(complex(q) - center) < radius for q in f.poles):
        raise PoleError("pole inside the image of the disc")
    lhs = f.values(s)
    rhs = np.asarray(delta_eval(p, s)) * np.conj(f.values(s_ref))
    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
        raise PoleError("pole inside the image of the disc")
    return float(np.max(np.abs(lhs - rhs)))


def scan_grid(t_lo: float, t_hi: float, degree: float = 1.0) -> np.ndarray:
    """Ordinates spaced by an eighth of the local phase wavelength ``2 pi/(d log t)``."""
    pts = [float(t_lo)]
    t = float(t_lo)
    while t < t_hi:
        t += 2 * math.pi / (degree * math.log(t)) / 8
        pts.append(min(t, t_hi))
    return np.unique(np.array(pts))


def _score_chunk(f: FunctionEvaluator, profile: ScalingProfile, d: float, lo: float, hi: float, tt: np.ndarray) -> list:
    v = f.values(0.5 + 1j * tt)
    av = np.abs(v)
    keep = (av >= lo) & (av <= hi)
    if not np.any(keep):
        return []
    tk, avk = tt[keep], av[keep]
    dv = f.derivatives(0.5 + 1j * tk, 1)
    mu = np.atleast_1d(profile(tk))
    lam = mu / np.log(tk)
    sharp = np.abs(dv) / (1 + avk**2)
    bound = d / 4 * mu * avk / (1 + avk**2)
    return [FillingDiscRecord(*map(float, row)) for row in zip(tk, lam, lam * sharp, avk, bound)]


def lehto_scan(f: FunctionEvaluator, t_range, profile: ScalingProfile, alpha_band=(0.5, 2.0),
               p: FunctionalEquationData | None = None, chunk: int = 4096, threads: int = 1) -> list:
    """Spherical-derivative scores at the grid ordinates where ``|f|`` lies in the band.

    ``predicted_bound`` holds ``(d/4) mu |f| / (1 + |f|^2)``.  Chunks of the grid
    are independent; with ``threads > 1`` they run on a thread pool and are
    merged in ordinate order.
    """
    t_lo, t_hi = map(float, t_range)
    if not t_hi > t_lo:
        raise RangeError("empty t range")
    if t_lo < 10:
        raise RangeError("scans start at t >= 10")
    lo, hi = alpha_band
    if not 0 <= lo <= hi:
        raise RangeError("band must satisfy 0 <= lo <= hi")
    p = p or FunctionalEquationData.zeta()
    d = delta_invariants(p).degree or 1.0
    taus = scan_grid(t_lo, t_hi, d)
    profile.check(taus)
    parts = [taus[i : i + chunk] for i in range(0, taus.size, chunk)]
    work = lambda tt: _score_chunk(f, profile, d, lo, hi, tt)
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, parts))
    else:
        results = [work(tt) for tt in parts]
    return [r for part in results for r in part]


def write_records_csv(records: Sequence[FillingDiscRecord], fh) -> None:
    w = csv.writer(fh)
    w.writerow(["schema_version", "tau", "radius", "score", "abs_value", "predicted_bound"])
    for r in records:
        w.writerow([1] + [repr(x) for x in r.as_row()])
