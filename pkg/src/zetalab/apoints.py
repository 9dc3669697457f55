"""Counting, locating and bookkeeping of a-points (roots of ``f(s) = a``).

Contour work happens on adaptive edge meshes: each edge is refined until
consecutive samples of ``g = f - a`` differ by less than ``_MAX_DLOG`` in
``log g``.  On such a mesh the winding integral ``(1/2 pi i) oint g'/g ds`` is
the sum of panel-wise exact antiderivatives ``log(g_{j+1}/g_j)``, and the
continuous logarithm needed by Littlewood's identity is available at every
node.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AccuracyError,
    BoundaryError,
    OrderError,
    ParameterError,
    RefinementError,
    UndefinedFractionError,
)
from .evaluator import FunctionEvaluator
from .funceq import FunctionalEquationData, delta_invariants

__all__ = [
    "ScanRectangle",
    "APoint",
    "CountReport",
    "DenseCurve",
    "count_apoints",
    "winding_number",
    "locate_apoints",
    "rvm_main_term",
    "rvm_compare",
    "littlewood_sides",
    "littlewood_check",
    "clustering_stats",
    "dense_curve",
    "sign_changes",
]

_MAX_DLOG = 0.3
_MIN_SPACING = 1e-12
_MAX_NODES = 4_000_000
_BOUNDARY_TOL = 1e-7
_MIN_CELL = 1e-6
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class ScanRectangle:
    sigma_lo: float
    sigma_hi: float
    t_lo: float
    t_hi: float
    # boxes touching or crossing the real axis are only built on purpose
    allow_real_axis: bool = False

    def __post_init__(self):
        if not self.sigma_lo < self.sigma_hi:
            raise ParameterError("need sigma_lo < sigma_hi")
        if not self.t_lo < self.t_hi:
            raise ParameterError("need t_lo < t_hi")
        if not self.allow_real_axis and not self.t_lo > 0:
            raise ParameterError("need 0 < t_lo (use ScanRectangle.symmetric for boxes around the real axis)")

    @classmethod
    def symmetric(cls, sigma_lo: float, sigma_hi: float, half_height: float) -> "ScanRectangle":
        """Box ``[sigma_lo, sigma_hi] x [-h, h]`` around a stretch of the real axis."""
        return cls(sigma_lo, sigma_hi, -half_height, half_height, True)

    def mirror(self) -> "ScanRectangle":
        """Reflection in the real axis."""
        return ScanRectangle(self.sigma_lo, self.sigma_hi, -self.t_hi, -self.t_lo, True)

    @property
    def corners(self):
        return (complex(self.sigma_lo, self.t_lo), complex(self.sigma_hi, self.t_lo),
                complex(self.sigma_hi, self.t_hi), complex(self.sigma_lo, self.t_hi))

    @property
    def width(self) -> float:
        return self.sigma_hi - self.sigma_lo

    @property
    def height(self) -> float:
        return self.t_hi - self.t_lo

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> complex:
        return complex((self.sigma_lo + self.sigma_hi) / 2, (self.t_lo + self.t_hi) / 2)

    def contains(self, s, margin: float = 0.0) -> bool:
        s = complex(s)
        return (self.sigma_lo - margin <= s.real <= self.sigma_hi + margin
                and self.t_lo - margin <= s.imag <= self.t_hi + margin)

    def split(self, sigma_cut: float | None = None, t_cut: float | None = None) -> list:
        """Sub-rectangles cut at the given abscissa and/or ordinate."""
        sig = [self.sigma_lo] + ([sigma_cut] if sigma_cut is not None else []) + [self.sigma_hi]
        ts = [self.t_lo] + ([t_cut] if t_cut is not None else []) + [self.t_hi]
        return [ScanRectangle(s0, s1, t0, t1, True) for s0, s1 in zip(sig, sig[1:]) for t0, t1 in zip(ts, ts[1:])]


@dataclass(frozen=True)
class APoint:
    location: complex
    target: complex
    multiplicity: int = 1
    residual: float = 0.0

    @property
    def beta(self) -> float:
        return self.location.real

    @property
    def gamma(self) -> float:
        return self.location.imag

    def as_dict(self) -> dict:
        return {
            "re": self.location.real,
            "im": self.location.imag,
            "a": [complex(self.target).real, complex(self.target).imag],
            "multiplicity": self.multiplicity,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class CountReport:
    located: int
    rvm_main_term: float
    discrepancy: float
    boundary_perturbation: float
    T: float = 0.0
    a: complex = 0j

    def as_dict(self) -> dict:
        return {
            "located": self.located,
            "rvm_main_term": self.rvm_main_term,
            "discrepancy": self.discrepancy,
            "boundary_perturbation": self.boundary_perturbation,
            "T": self.T,
            "a": [complex(self.a).real, complex(self.a).imag],
        }


# --------------------------------------------------------------------------
# edge meshes
# --------------------------------------------------------------------------

class _NearBoundary(Exception):
    pass


@dataclass
class _EdgeMesh:
    z: np.ndarray       # nodes, first = start, last = end
    g: np.ndarray       # f - a at the nodes
    logg: np.ndarray    # continuous log of g along the edge

    @property
    def dlog(self) -> complex:
        return complex(self.logg[-1] - self.logg[0])


def _edge_mesh(f: FunctionEvaluator, a: complex, z0: complex, z1: complex, start_log: complex | None = None,
               min_abs: float = _BOUNDARY_TOL) -> _EdgeMesh:
    length = abs(z1 - z0)
    n0 = int(math.ceil(8 * length)) + 8
    u = np.linspace(0.0, 1.0, n0 + 1)
    g = f.values(z0 + (z1 - z0) * u) - a
    while True:
        if not np.all(np.isfinite(g)):
            raise _NearBoundary("non-finite value on the contour")
        if np.min(np.abs(g)) < min_abs:
            raise _NearBoundary(f"|f - a| = {np.min(np.abs(g)):.2e} on the contour")
        step = np.log(g[1:] / g[:-1])
        bad = np.abs(step) > _MAX_DLOG
        if not np.any(bad):
            break
        idx = np.nonzero(bad)[0]
        if np.min(u[idx + 1] - u[idx]) * length < _MIN_SPACING:
            raise _NearBoundary("contour mesh collapsed next to an a-point")
        if u.size + idx.size > _MAX_NODES:
            raise AccuracyError("edge mesh refinement exceeded its node budget")
        mid = 0.5 * (u[idx] + u[idx + 1])
        gm = f.values(z0 + (z1 - z0) * mid) - a
        u = np.insert(u, idx + 1, mid)
        g = np.insert(g, idx + 1, gm)
    first = complex(np.log(g[0])) if start_log is None else start_log
    # continuous log: real part exact, imaginary part accumulated from small steps
    logg = np.empty(g.shape, dtype=complex)
    logg[0] = first
    logg[1:] = first + np.cumsum(step)
    logg.real = np.log(np.abs(g))
    return _EdgeMesh(z0 + (z1 - z0) * u, g, logg)


def _contour(f, a, rect: ScanRectangle):
    c = rect.corners
    meshes = []
    start = None
    for z0, z1 in zip(c, c[1:] + c[:1]):
        m = _edge_mesh(f, a, z0, z1, start)
        meshes.append(m)
        start = complex(m.logg[-1])
    return meshes


def winding_number(f: FunctionEvaluator, a: complex, rect: ScanRectangle):
    """Raw winding number ``(1/2 pi) Delta arg (f - a)`` around ``rect``.

    Returns ``(value, residual)`` where ``residual`` is the distance of the
    pre-rounding value to the nearest integer.  Raises ``_NearBoundary`` when
    the contour passes too close to an a-point.
    """
    meshes = _contour(f, a, rect)
    total = sum(m.dlog.imag for m in meshes) / (2 * math.pi)
    return total, abs(total - round(total))


def _perturbed(rect: ScanRectangle, rng: np.random.Generator) -> tuple:
    d = rng.uniform(1e-6, 1e-5, size=4) * rng.choice([-1.0, 1.0], size=4)
    new = ScanRectangle(rect.sigma_lo + d[0], rect.sigma_hi + d[1], rect.t_lo + d[2], rect.t_hi + d[3],
                        rect.allow_real_axis or rect.t_lo + d[2] <= 0)
    return new, float(np.max(np.abs(d)))


def _count_with_perturbation(f, a, rect: ScanRectangle, rng, retries: int = 5):
    current, shift = rect, 0.0
    for attempt in range(retries + 1):
        try:
            value, residual = winding_number(f, a, current)
        except _NearBoundary as exc:
            if attempt == retries:
                raise BoundaryError(f"a-point persistently on the boundary of {rect}: {exc}") from None
            current, shift = _perturbed(rect, rng)
            continue
        if residual >= 0.25:
            raise AccuracyError(f"winding number {value:.4f} is not near an integer")
        n = int(round(value))
        if n < 0:
            raise AccuracyError(f"negative winding number {n}: f has poles inside {current}")
        return n, current, shift
    raise AssertionError("unreachable")


def count_apoints(f: FunctionEvaluator, a: complex, rect: ScanRectangle, seed: int = 0, details: bool = False):
    """Number of a-points (with multiplicity) inside ``rect``."""
    n, used, shift = _count_with_perturbation(f, complex(a), rect, np.random.default_rng(seed))
    return (n, used, shift) if details else n


# --------------------------------------------------------------------------
# locating
# --------------------------------------------------------------------------

def _newton(f, a, s0: complex, cell: ScanRectangle, maxit: int = 60, mult: int = 1):
    s = complex(s0)
    radius = max(min(0.05, cell.diameter / 4), 1e-5)
    for _ in range(maxit):
        g = f.value(s) - a
        dg = complex(f.derivatives(np.array([s]), 1)[0]) if radius >= 0.05 else _small_circle_derivative(f, s, radius)
        if dg == 0 or not np.isfinite(dg):
            return None
        step = mult * g / dg
        s = s - step
        if not cell.contains(s, margin=0.5 * cell.diameter):
            return None
        if abs(step) < 1e-14 * (1 + abs(s)):
            break
    return s


def _small_circle_derivative(f, s, r):
    theta = 2 * np.pi * np.arange(24) / 24
    v = f.values(s + r * np.exp(1j * theta))
    return complex(np.mean(v * np.exp(-1j * theta)) / r)


def _polish(f, a, s):
    # a couple of extra Newton steps with a fresh derivative
    for _ in range(3):
        g = f.value(s) - a
        dg = f.derivative(s, 1)
        if dg == 0:
            break
        s = s - g / dg
    return s


def _children(rect: ScanRectangle, rng) -> list:
    # split the long side (quadrisect near-square cells); cut lines are jittered
    # slightly so that repeated retries do not keep hitting the same a-point
    jit = lambda: 0.5 + rng.uniform(-0.05, 0.05)
    if rect.height > 2 * rect.width:
        return rect.split(t_cut=rect.t_lo + jit() * rect.height)
    if rect.width > 2 * rect.height:
        return rect.split(sigma_cut=rect.sigma_lo + jit() * rect.width)
    return rect.split(rect.sigma_lo + jit() * rect.width, rect.t_lo + jit() * rect.height)


def _cluster(f, a, rect: ScanRectangle, count: int, rng):
    """Try to certify a single a-point of multiplicity ``count`` in ``rect``:
    Newton with the multiplicity built in, then a winding count on a small box."""
    s = _newton(f, a, rect.center, rect, mult=count)
    if s is None or not rect.contains(s, margin=1e-12):
        return None
    # distinct roots at distance delta leave a residual near delta^2 / 4
    if abs(f.value(s) - a) > 1e-12 * (1 + abs(a)):
        return None
    h = max(min(rect.width, rect.height) / 8, 1e-9)
    box = ScanRectangle(s.real - h, s.real + h, s.imag - h, s.imag + h, allow_real_axis=True)
    try:
        inner = _count_with_perturbation(f, a, box, rng, retries=1)[0]
    except (BoundaryError, AccuracyError):
        return None
    if inner != count:
        return None
    return APoint(s, a, count, float(abs(f.value(s) - a)))


def _locate(f, a, rect, count, rng, out, newton_size):
    if count == 0:
        return
    if count == 1 and rect.diameter <= newton_size:
        s = _newton(f, a, rect.center, rect)
        if s is not None and rect.contains(s, margin=1e-12):
            s = _polish(f, a, s)
            out.append(APoint(s, a, 1, float(abs(f.value(s) - a))))
            return
    if count >= 2 and rect.diameter <= newton_size:
        pt = _cluster(f, a, rect, count, rng)
        if pt is not None:
            out.append(pt)
            return
    if rect.diameter < _MIN_CELL:
        if count >= 2:
            s = rect.center
            out.append(APoint(s, a, count, float(abs(f.value(s) - a))))
            return
        raise RefinementError(f"Newton does not converge in a unit-count cell {rect}", cell=rect)
    for _attempt in range(6):
        kids = _children(rect, rng)
        try:
            counts = [_count_with_perturbation(f, a, k, rng, retries=0)[0] for k in kids]
        except BoundaryError:
            continue
        if sum(counts) != count:
            continue
        for k, c in zip(kids, counts):
            _locate(f, a, k, c, rng, out, newton_size)
        return
    raise RefinementError(f"could not split {rect} consistently", cell=rect)


def locate_apoints(f: FunctionEvaluator, a: complex, rect: ScanRectangle, seed: int = 0,
                   newton_size: float = 1.0, tol: float = 1e-8) -> list:
    """All a-points inside ``rect``, sorted by ordinate."""
    a = complex(a)
    rng = np.random.default_rng(seed)
    total, used, _ = _count_with_perturbation(f, a, rect, rng)
    out: list = []
    _locate(f, a, used, total, rng, out, newton_size)
    bad = [p for p in out if p.residual >= tol * (1 + abs(a))]
    if bad:
        raise RefinementError(f"a-point residual {bad[0].residual:.2e} above tolerance at {bad[0].location}")
    if sum(p.multiplicity for p in out) != total:
        raise RefinementError("located multiset disagrees with the winding count")
    return sorted(out, key=lambda p: (p.gamma, p.beta))


# --------------------------------------------------------------------------
# Riemann-von Mangoldt comparison
# --------------------------------------------------------------------------

def _least_coefficient_index(f: FunctionEvaluator, N: int = 64) -> tuple:
    coeffs = f.coefficients(N)
    v = np.asarray(coeffs.values)
    for q in range(2, N + 1):
        if v[q - 1] != 0:
            return q, complex(v[q - 1])
    raise ParameterError("no non-zero coefficient a(q) with q > 1 in the stored prefix")


def rvm_main_term(p: FunctionalEquationData, T: float, a: complex = 0, q: int | None = None) -> float:
    """``(d/2 pi) T log(T/e) + (T/2 pi) log(lambda Q^2)``, minus ``(T/2 pi) log q`` for ``a = 1``."""
    inv = delta_invariants(p)
    main = inv.degree / (2 * math.pi) * T * math.log(T / math.e) + T / (2 * math.pi) * math.log(inv.q2lambda)
    if complex(a) == 1:
        if q is None:
            raise ParameterError("a = 1 needs the least index q > 1 with a(q) != 0")
        main -= T / (2 * math.pi) * math.log(q)
    return main


def _right_edge(f: FunctionEvaluator, a: complex) -> float:
    """Abscissa right of which ``f`` has no a-points (Dirichlet-series bound)."""
    try:
        v = np.abs(np.asarray(f.coefficients(4096).values, dtype=complex))
    except NotImplementedError:
        return 3.0
    n = np.arange(1, v.size + 1, dtype=float)
    for sigma in np.arange(1.25, 12.0, 0.25):
        w = v * n**-sigma
        if complex(a) == 1:
            q, aq = _least_coefficient_index(f)
            # |q^s/a(q) (f - 1) - 1| <= sum_{n>q} |a(n)| (q/n)^sigma / |a(q)|
            bound = float(np.sum(v[q:] * (q / n[q:]) ** sigma)) / abs(aq)
            if bound < 0.9:
                return float(sigma) + 0.25
        elif abs(1 - complex(a)) > 1.1 * float(np.sum(w[1:])) + 1e-9:
            return float(sigma) + 0.25
    return 12.0


def rvm_compare(f: FunctionEvaluator, a: complex, p: FunctionalEquationData, T: float,
                sigma_lo: float = -1.0, sigma_hi: float | None = None, t_lo: float = 1.0, seed: int = 0) -> CountReport:
    """Count a-points with ``t_lo < gamma <= T`` and compare with the main term."""
    if T < 10:
        raise ParameterError("T must be at least 10")
    a = complex(a)
    if sigma_hi is None:
        sigma_hi = _right_edge(f, a)
    q = _least_coefficient_index(f)[0] if a == 1 else None
    rect = ScanRectangle(sigma_lo, sigma_hi, t_lo, T)
    n, _, shift = count_apoints(f, a, rect, seed=seed, details=True)
    main = rvm_main_term(p, T, a, q)
    return CountReport(n, main, n - main, shift, T, a)


# --------------------------------------------------------------------------
# Littlewood's identity
# --------------------------------------------------------------------------

def _panel_integral(f, a, mesh: _EdgeMesh, part: Callable) -> float:
    """Gauss-Legendre integral of ``part(continuous log g)`` over the edge
    with respect to arc length."""
    z0, z1 = mesh.z[:-1], mesh.z[1:]
    h = np.abs(z1 - z0)
    nodes = 0.5 * (z0 + z1)[:, None] + 0.5 * (z1 - z0)[:, None] * _GL_X[None, :]
    gv = f.values(nodes.ravel()).reshape(nodes.shape) - a
    logv = mesh.logg[:-1, None] + np.log(gv / mesh.g[:-1, None])
    return float(np.sum(0.5 * h[:, None] * _GL_W[None, :] * part(logv)))


def littlewood_sides(f: FunctionEvaluator, a: complex, rect: ScanRectangle, b: float | None = None):
    """Integral side of Littlewood's identity for ``[b, sigma_hi] x [t_lo, t_hi]``.

    Returns ``(1/2 pi) [int log|g(b+it)| dt - int log|g(c+it)| dt
    + int arg g(sigma + i t_hi) dsigma - int arg g(sigma + i t_lo) dsigma]``
    with ``g = f - a`` and ``arg`` continued leftward from the right edge.
    """
    a = complex(a)
    b = rect.sigma_lo if b is None else b
    c = rect.sigma_hi
    T1, T2 = rect.t_lo, rect.t_hi
    try:
        right = _edge_mesh(f, a, complex(c, T1), complex(c, T2))
        bottom = _edge_mesh(f, a, complex(c, T1), complex(b, T1), complex(right.logg[0]))
        top = _edge_mesh(f, a, complex(c, T2), complex(b, T2), complex(right.logg[-1]))
        left = _edge_mesh(f, a, complex(b, T1), complex(b, T2))
    except _NearBoundary as exc:
        raise BoundaryError(f"a-point on or next to the boundary: {exc}") from None
    re = lambda L: L.real
    im = lambda L: L.imag
    total = (_panel_integral(f, a, left, re) - _panel_integral(f, a, right, re)
             + _panel_integral(f, a, top, im) - _panel_integral(f, a, bottom, im))
    return total / (2 * math.pi)


def littlewood_check(f: FunctionEvaluator, a: complex, rect: ScanRectangle, b: float | None = None,
                     points: Sequence[APoint] | None = None, seed: int = 0) -> float:
    """``|integral side - sum (beta_a - b)|`` over the a-points in the rectangle."""
    b = rect.sigma_lo if b is None else b
    box = replace(rect, sigma_lo=b)
    if points is None:
        points = locate_apoints(f, a, box, seed=seed)
    lhs = littlewood_sides(f, a, box, b)
    rhs = sum(pt.multiplicity * (pt.beta - b) for pt in points)
    return abs(lhs - rhs)


# --------------------------------------------------------------------------
# clustering and curves
# --------------------------------------------------------------------------

def _loglog(t):
    return np.log(np.log(t))


PROFILES = ("levinson", "selberg", "mu-over-log")


def clustering_stats(points: Sequence[APoint], T: float, profile: str = "levinson",
                     mu: Callable | None = None) -> float:
    """Fraction of a-points with ``|beta - 1/2|`` below the profile width at ``gamma``."""
    if not points:
        raise UndefinedFractionError("no a-points given")
    if profile not in PROFILES:
        raise ParameterError(f"unknown profile {profile!r}")
    g = np.array([p.gamma for p in points])
    if np.any(g <= T) or np.any(g > 2 * T):
        raise ParameterError("all ordinates must lie in (T, 2T]")
    beta = np.array([p.beta for p in points])
    w = np.array([p.multiplicity for p in points], dtype=float)
    mu = mu or _loglog
    logg = np.log(g)
    if profile == "levinson":
        width = _loglog(g) ** 2 / logg
    elif profile == "selberg":
        width = mu(g) * np.sqrt(_loglog(g)) / logg
    else:
        width = mu(g) / logg
    inside = np.abs(beta - 0.5) < width
    return float(np.sum(w * inside) / np.sum(w))


@dataclass(frozen=True)
class DenseCurve:
    """Piecewise-linear ``eps(t)`` with ``1/2 + eps(gamma_k) + i gamma_k = rho_k``."""

    gammas: np.ndarray
    eps: np.ndarray

    def __call__(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.gammas, self.eps)
        return float(out) if np.ndim(t) == 0 else out

    def point(self, t: float) -> complex:
        return complex(0.5 + self(t), t)

    def to_csv(self, path, grid=None) -> None:
        ts = self.gammas if grid is None else np.asarray(grid, dtype=float)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["schema_version", "t", "eps"])
            for t in ts:
                w.writerow([1, repr(float(t)), repr(self(float(t)))])


def dense_curve(points: Sequence[APoint]) -> DenseCurve:
    if not points:
        raise ParameterError("need at least one point")
    g = np.array([p.gamma for p in points], dtype=float)
    if np.any(np.diff(g) <= 0):
        raise OrderError("ordinates must be strictly increasing")
    return DenseCurve(g, np.array([p.beta - 0.5 for p in points], dtype=float))


def sign_changes(values: np.ndarray) -> int:
    """Number of strict sign changes in a sampled real sequence (zeros skipped)."""
    v = np.asarray(values, dtype=float)
    v = v[v != 0]
    return int(np.sum(np.signbit(v[1:]) != np.signbit(v[:-1])))
