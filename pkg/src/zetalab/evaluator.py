"""Common interface for pointwise evaluation of analytic targets.

Every target (zeta, truncated Euler products, synthetic functional-equation
members, twisted series) exposes the same small surface: vectorized values,
derivatives by Cauchy quadrature on a circle, and a logarithm obtained by
continuous continuation along a horizontal path from the right.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchError, PoleError, RadiusError

__all__ = [
    "Domain",
    "EvalConfig",
    "FunctionEvaluator",
    "ConstantEvaluator",
    "CallableEvaluator",
    "ReciprocalEvaluator",
    "cauchy_derivative",
    "spherical_derivative",
    "log_along_path",
    "log_along_path_batch",
]


@dataclass(frozen=True)
class EvalConfig:
    """Accuracy knobs shared by the evaluation backends."""

    target_abs_error: float = 1e-10
    max_terms: int = 2_000_000
    t_cap: float = 1e5

    def __post_init__(self):
        if not self.target_abs_error > 0:
            raise ValueError("target_abs_error must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")
        if not self.t_cap > 0:
            raise ValueError("t_cap must be positive")


@dataclass(frozen=True)
class Domain:
    """Axis-aligned region of validity (bounds may be infinite)."""

    sigma_min: float = -math.inf
    sigma_max: float = math.inf
    t_min: float = -math.inf
    t_max: float = math.inf

    def contains(self, s) -> bool:
        s = complex(s)
        return self.sigma_min <= s.real <= self.sigma_max and self.t_min <= s.imag <= self.t_max


class FunctionEvaluator:
    """Base class; subclasses override :meth:`values` (preferred) or :meth:`value`."""

    name = "f"
    domain = Domain()
    poles: tuple = ()
    # abscissa where the logarithm is anchored on its principal value
    log_anchor_sigma = 2.0

    def value(self, s) -> complex:
        return complex(self.values(np.array([complex(s)]))[0])

    def values(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        out = np.empty(s.shape, dtype=complex)
        for idx, z in np.ndenumerate(s):
            out[idx] = self.value(z)
        return out

    def __call__(self, s):
        if np.ndim(s) == 0:
            return self.value(s)
        return self.values(s)

    def pole_distance(self, s) -> float:
        if not self.poles:
            return math.inf
        return min(abs(complex(s) - complex(p)) for p in self.poles)

    def derivative(self, s, k: int = 1) -> complex:
        if k == 0:
            return self.value(s)
        return complex(cauchy_derivative(self, np.array([complex(s)]), k)[0])

    def derivatives(self, s, k: int = 1) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        if k == 0:
            return self.values(s)
        return cauchy_derivative(self, s, k)

    def log_value(self, s) -> complex:
        return log_along_path(self, s)

    def log_anchor(self, s0: complex) -> complex:
        """Logarithm at the anchor point of the continuation path."""
        return complex(np.log(self.value(s0)))

    def coefficients(self, N: int):
        raise NotImplementedError(f"{self.name} exposes no Dirichlet coefficients")


class CallableEvaluator(FunctionEvaluator):
    """Wrap a vectorized callable (and optionally its derivative)."""

    def __init__(self, fn, name="callable", dfn=None, poles=(), domain=None):
        self._fn = fn
        self._dfn = dfn
        self.name = name
        self.poles = tuple(poles)
        if domain is not None:
            self.domain = domain

    def values(self, s):
        return np.asarray(self._fn(np.asarray(s, dtype=complex)), dtype=complex)

    def derivatives(self, s, k: int = 1):
        if k == 1 and self._dfn is not None:
            return np.asarray(self._dfn(np.asarray(s, dtype=complex)), dtype=complex)
        return super().derivatives(s, k)

    def derivative(self, s, k: int = 1):
        return complex(self.derivatives(np.array([complex(s)]), k)[0])


class ConstantEvaluator(CallableEvaluator):
    def __init__(self, c: complex):
        c = complex(c)
        super().__init__(lambda s: np.full(np.shape(s), c, dtype=complex), name=f"const({c})",
                         dfn=lambda s: np.zeros(np.shape(s), dtype=complex))


class ReciprocalEvaluator(FunctionEvaluator):
    """``1/f`` for a given evaluator (derivative via the quotient rule)."""

    def __init__(self, f: FunctionEvaluator):
        self.f = f
        self.name = f"1/{f.name}"
        self.domain = f.domain

    def values(self, s):
        return 1.0 / self.f.values(s)

    def derivatives(self, s, k: int = 1):
        if k == 1:
            v = self.f.values(s)
            return -self.f.derivatives(s, 1) / v**2
        return super().derivatives(s, k)

    def derivative(self, s, k: int = 1):
        return complex(self.derivatives(np.array([complex(s)]), k)[0])


def _default_nodes(ratio: float, k: int) -> int:
    # trapezoidal error on the circle decays like ratio**M
    if ratio <= 0.1:
        m = 24
    else:
        m = int(math.ceil(math.log(1e-16) / math.log(ratio)))
    return max(m, 16) + 2 * k


def cauchy_derivative(f: FunctionEvaluator, s, k: int = 1, radius: float | None = None, nodes: int | None = None):
    """k-th derivative by the trapezoidal rule on a circle around each point.

    The radius defaults to ``min(0.1, dist/2)`` where ``dist`` is the distance
    to the nearest known pole; points closer than ``1e-3`` to a pole raise
    :class:`RadiusError`.
    """
    s = np.asarray(s, dtype=complex)
    flat = s.ravel()
    if flat.size == 0:
        return np.zeros(s.shape, dtype=complex)
    dist = np.full(flat.shape, math.inf)
    for p in f.poles:
        dist = np.minimum(dist, np.abs(flat - complex(p)))
    if np.any(dist < 1e-3):
        raise RadiusError("point lies within 1e-3 of a pole; derivative radius collapses")
    if radius is None:
        r = np.minimum(0.1, dist / 2)
    else:
        r = np.minimum(radius, dist / 2)
    ratio = float(np.max(r / np.where(np.isfinite(dist), dist, np.inf))) if np.any(np.isfinite(dist)) else 0.0
    M = nodes or _default_nodes(ratio, k)
    theta = 2 * np.pi * np.arange(M) / M
    e = np.exp(1j * theta)
    pts = flat[:, None] + r[:, None] * e[None, :]
    vals = f.values(pts.ravel()).reshape(pts.shape)
    coef = np.mean(vals * np.exp(-1j * k * theta)[None, :], axis=1)
    out = coef * math.factorial(k) / r**k
    return out.reshape(s.shape)


def spherical_derivative(f: FunctionEvaluator, s) -> float:
    """``|f'(s)| / (1 + |f(s)|^2)``, switching to ``1/f`` at poles."""
    try:
        v = f.value(s)
        if not np.isfinite(v):
            raise PoleError("non-finite value")
        d = f.derivative(s, 1)
        return float(abs(d) / (1 + abs(v) ** 2))
    except (PoleError, RadiusError):
        g = ReciprocalEvaluator(f)
        # at a pole 1/f vanishes; take its derivative on a circle that avoids the pole
        r = 1e-3
        theta = 2 * np.pi * np.arange(32) / 32
        pts = complex(s) + r * np.exp(1j * theta)
        gv = g.values(pts)
        dg = np.mean(gv * np.exp(-1j * theta)) / r
        g0 = np.mean(gv)
        return float(abs(dg) / (1 + abs(g0) ** 2))


# --------------------------------------------------------------------------
# branch-tracked logarithm
# --------------------------------------------------------------------------

_MAX_PHASE_STEP = 0.5


def _continue_phase(f: FunctionEvaluator, path: np.ndarray, start_log: complex, min_abs: float, depth: int = 0):
    """Continue ``log f`` along a polyline given by ``path`` (first point = anchor).

    Segments are refined until successive phase increments stay below
    ``_MAX_PHASE_STEP``.  Returns the log at the final point.
    """
    current = start_log
    prev_val = np.exp(start_log)
    for a, b in zip(path[:-1], path[1:]):
        n = max(8, int(abs(b - a) * 32))
        while True:
            pts = a + (b - a) * np.linspace(0, 1, n + 1)[1:]
            vals = f.values(pts)
            if np.any(np.abs(vals) < min_abs) or not np.all(np.isfinite(vals)):
                raise BranchError(f"{f.name} (nearly) vanishes on the continuation path near {pts[np.argmin(np.abs(vals))]}")
            ratios = vals / np.concatenate([[prev_val], vals[:-1]])
            steps = np.angle(ratios)
            if np.max(np.abs(steps)) < _MAX_PHASE_STEP or n > 2**20:
                break
            n *= 4
        arg = current.imag + np.sum(steps)
        current = complex(math.log(abs(vals[-1])), arg)
        prev_val = vals[-1]
    return current


def log_along_path(f: FunctionEvaluator, s, min_abs: float = 1e-12) -> complex:
    """Logarithm of ``f(s)`` continued leftward from ``sigma0 + i Im(s)``.

    The anchor value is :meth:`FunctionEvaluator.log_anchor` (the principal
    logarithm unless a subclass knows better).  If ``f`` nearly vanishes on
    the direct path, a detour through ``+-0.01i`` is attempted before giving up.
    """
    s = complex(s)
    sigma0 = max(f.log_anchor_sigma, s.real)
    s0 = complex(sigma0, s.imag)
    anchor = f.log_anchor(s0)
    if s == s0:
        return anchor
    try:
        return _continue_phase(f, np.array([s0, s]), anchor, min_abs)
    except BranchError:
        last = None
        for h in (0.01, -0.01, 0.05, -0.05):
            try:
                a0 = complex(sigma0, s.imag + h)
                start = _continue_phase(f, np.array([s0, a0]), anchor, min_abs)
                return _continue_phase(f, np.array([a0, complex(s.real, s.imag + h), s]), start, min_abs)
            except BranchError as exc:
                last = exc
        raise BranchError(f"no zero-free detour found for {s}: {last}") from None


def log_along_path_batch(f: FunctionEvaluator, s, n_steps: int = 64, min_abs: float = 1e-12):
    """Vectorized :func:`log_along_path` for points sharing one abscissa.

    Rows whose phase increments are too coarse on the common mesh are refined
    individually; rows where ``f`` nearly vanishes on the path are returned as
    ``nan`` so callers can count and report failures.
    """
    s = np.asarray(s, dtype=complex).ravel()
    if s.size == 0:
        return s.copy()
    sig = float(s[0].real)
    if np.any(s.real != sig):
        raise ValueError("batch points must share one real part")
    sigma0 = max(f.log_anchor_sigma, sig)
    t = s.imag
    anchors = np.array([f.log_anchor(complex(sigma0, ti)) for ti in t]) if not hasattr(f, "log_anchor_batch") \
        else f.log_anchor_batch(sigma0 + 1j * t)
    out = np.full(s.shape, complex(math.nan, math.nan))
    todo = np.arange(s.size)
    fallback = []
    # coarse rows are redone on a 4x finer common mesh before falling back to single paths
    for level in range(3):
        grid = np.linspace(sigma0, sig, n_steps * 4**level + 1)
        pts = grid[None, :] + 1j * t[todo, None]
        vals = f.values(pts.ravel()).reshape(pts.shape)
        steps = np.angle(vals[:, 1:] / vals[:, :-1])
        out[todo] = np.log(np.abs(vals[:, -1])) + 1j * (anchors[todo].imag + np.sum(steps, axis=1))
        small = np.min(np.abs(vals), axis=1) < min_abs
        coarse = np.max(np.abs(steps), axis=1) >= _MAX_PHASE_STEP
        fallback.extend(todo[small])
        todo = todo[coarse & ~small]
        if todo.size == 0:
            break
    fallback.extend(todo)
    for i in fallback:
        try:
            out[i] = log_along_path(f, s[i], min_abs=min_abs)
        except BranchError:
            out[i] = complex(math.nan, math.nan)
    return out
