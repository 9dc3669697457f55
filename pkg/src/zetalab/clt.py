"""Value distribution of ``log L(1/2 + i t)`` on ``(T, 2T]``.

Samples are stratified in ``t``: one uniform draw per cell of width ``T/n``.
The real part ``log|L|`` needs no branch; the imaginary part is continued
horizontally from ``sigma = 2`` on a subsample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .errors import ParameterError, SamplingError
from .evaluator import FunctionEvaluator, cauchy_derivative, log_along_path_batch
from .torus import make_rng

__all__ = ["CLTResult", "selberg_clt", "w_measures"]


@dataclass(frozen=True)
class CLTResult:
    T: float
    n_L: float
    scale: float                 # sqrt(n_L/2 * log log T)
    ks_distance_re: float
    ks_distance_im: float
    histogram_edges: np.ndarray
    histogram_re: np.ndarray
    histogram_im: np.ndarray
    w_measures: tuple            # Fractions summing to exactly 1
    m: float
    samples_re: int
    samples_im: int
    removed_measure: float       # share of the sample dropped next to zeros
    branch_failures: int

    def as_dict(self) -> dict:
        return {
            "T": self.T, "n_L": self.n_L, "scale": self.scale,
            "ks_distance_re": self.ks_distance_re, "ks_distance_im": self.ks_distance_im,
            "w_measures": [float(w) for w in self.w_measures], "m": self.m,
            "samples_re": self.samples_re, "samples_im": self.samples_im,
            "removed_measure": self.removed_measure, "branch_failures": self.branch_failures,
        }


def w_measures(abs_values: np.ndarray, m: float) -> tuple:
    """Shares of ``|L| < 1/m``, ``1/m <= |L| < m`` and ``|L| >= m`` as exact fractions."""
    if not m > 1:
        raise ParameterError("m must exceed 1")
    v = np.asarray(abs_values)
    n = v.size
    lo = int(np.count_nonzero(v < 1 / m))
    hi = int(np.count_nonzero(v >= m))
    return Fraction(lo, n), Fraction(n - lo - hi, n), Fraction(hi, n)


def selberg_clt(f: FunctionEvaluator, T: float, bins: int = 40, samples: int = 20_000, seed: int = 0,
                n_L: float = 1.0, m: float = 2.0, im_samples: int = 1000, zero_gap: float = 1e-3) -> CLTResult:
    """KS distances of ``log L(1/2 + i t) / sqrt(n_L/2 log log T)`` to the standard normal."""
    if T < 1e3:
        raise ParameterError("T must be at least 1000")
    if samples < 100 or bins < 1:
        raise ParameterError("need at least 100 samples and one bin")
    rng = make_rng(seed)
    t = T + (np.arange(samples) + rng.random(samples)) * (T / samples)
    s = 0.5 + 1j * t
    vals = np.empty(samples, dtype=complex)
    for i in range(0, samples, 20_000):
        vals[i : i + 20_000] = f.values(s[i : i + 20_000])
    av = np.abs(vals)

    # drop ordinates within zero_gap of a zero, estimated by |f|/|f'|
    near = np.nonzero(av < 0.05)[0]
    drop = np.zeros(samples, dtype=bool)
    if near.size:
        d = np.abs(cauchy_derivative(f, s[near], 1))
        drop[near] = av[near] < zero_gap * d
    keep = ~drop
    scale = math.sqrt(0.5 * n_L * math.log(math.log(T)))
    x_re = np.log(av[keep]) / scale

    # imaginary part on an evenly spread subsample
    idx = np.nonzero(keep)[0]
    if im_samples > 0 and idx.size:
        sub = idx[np.linspace(0, idx.size - 1, min(im_samples, idx.size)).astype(int)]
        logs = log_along_path_batch(f, s[sub], n_steps=24)
        failed = int(np.count_nonzero(~np.isfinite(logs)))
        if failed > 0.01 * sub.size:
            raise SamplingError(f"branch continuation failed on {failed} of {sub.size} samples")
        x_im = logs[np.isfinite(logs)].imag / scale
        ks_im = float(stats.kstest(x_im, "norm").statistic)
    else:
        failed, x_im, ks_im = 0, np.zeros(0), math.nan

    ks_re = float(stats.kstest(x_re, "norm").statistic)
    edges = np.linspace(-4, 4, bins + 1)
    h_re = np.histogram(np.clip(x_re, -4, 4), edges)[0]
    h_im = np.histogram(np.clip(x_im, -4, 4), edges)[0]
    return CLTResult(float(T), float(n_L), scale, ks_re, ks_im, edges, h_re, h_im,
                     w_measures(av[keep], m), float(m), int(x_re.size), int(x_im.size),
                     float(np.count_nonzero(drop)) / samples, failed)
