"""Weighted polynomial regression with Student-t prediction windows.

The fit is solved by Householder QR of the weight-scaled Vandermonde matrix and
back substitution; the normal equations are never formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .errors import DegenerateFitError

__all__ = [
    "WeightedFit",
    "compute_weights",
    "householder_lstsq",
    "weighted_polyfit",
    "weighted_polyfit_columns",
    "predict",
    "t_cdf",
    "t_quantile",
    "regularized_incomplete_beta",
    "prediction_halfwidth",
]


@dataclass(frozen=True)
class WeightedFit:
    """Result of a weighted polynomial fit.

    ``coefficients`` are constant-term first in shifted time ``t - t_ref``, where
    ``t_ref`` is the newest sample time.
    """

    coefficients: np.ndarray
    sigma_sq_hat: float
    t_bar_w: float
    sum_sq_dev: float
    n_samples: int
    degree: int
    t_ref: float = 0.0

    @property
    def dof(self) -> int:
        return self.n_samples - (self.degree + 1)


def compute_weights(ages: Sequence[float], decay: float) -> np.ndarray:
    """Exponential-decay weights ``exp(-decay * age)`` normalised to sum to one."""
    ages = np.asarray(ages, dtype=float)
    if ages.size == 0:
        raise ValueError("ages must be non-empty")
    if decay < 0:
        raise ValueError("decay rate must be >= 0")
    if np.any(ages < 0):
        raise ValueError("ages must be >= 0")
    # relative to the youngest sample so large ages cannot underflow every weight
    w = np.exp(-decay * (ages - ages.min()))
    return w / w.sum()


def householder_lstsq(a: np.ndarray, b: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Least-squares solution of ``a @ x ~= b`` via Householder QR.

    The factorisation is LAPACK's Householder QR (``numpy.linalg.qr``); the
    triangular system is solved by back substitution. ``a`` is (n, p) with
    n >= p; ``b`` is (n,) or (n, k). Raises DegenerateFitError when a diagonal
    entry of R is negligible relative to the largest.
    """
    a = np.asarray(a, dtype=float)
    rhs = np.asarray(b, dtype=float)
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, None]
    n, p = a.shape
    if n < p:
        raise DegenerateFitError(f"{n} equations cannot determine {p} unknowns")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(rhs)):
        raise DegenerateFitError("non-finite entries in the least-squares system")
    q, rr = np.linalg.qr(a, mode="reduced")
    diag = np.abs(np.diag(rr))
    if diag.max(initial=0.0) == 0.0 or diag.min() <= rcond * diag.max():
        raise DegenerateFitError("triangular factor is numerically singular")
    qtb = q.T @ rhs
    # back substitution on R beta = Q^T b
    beta = np.empty((p, qtb.shape[1]))
    for i in range(p - 1, -1, -1):
        beta[i] = (qtb[i] - rr[i, i + 1 :] @ beta[i + 1 :]) / rr[i, i]
    return beta[:, 0] if vector_rhs else beta


def weighted_polyfit_columns(
    times: Sequence[float],
    columns: np.ndarray,
    weights: Sequence[float],
    degree: int,
) -> list[WeightedFit]:
    """Fit one degree-``degree`` polynomial per column of ``columns`` (shape (n, k)).

    All columns share the design matrix, so one factorisation serves every axis.
    """
    t = np.asarray(times, dtype=float)
    vals = np.asarray(columns, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    w = np.asarray(weights, dtype=float)
    n = t.size
    if vals.shape[0] != n or w.size != n:
        raise ValueError("times, values and weights must have equal length")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if n < degree + 2:
        raise DegenerateFitError(f"{n} samples cannot fit degree {degree} with a residual dof")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if np.unique(t).size < degree + 1:
        raise DegenerateFitError(f"fewer than {degree + 1} distinct sample times")

    t_ref = float(t.max())
    ts = t - t_ref
    design = np.vander(ts, degree + 1, increasing=True)
    sw = np.sqrt(w)[:, None]
    beta = householder_lstsq(design * sw, vals * sw)

    resid = vals - design @ beta
    # weights rescaled to mean one so uniform weighting reduces to the textbook estimator
    sigma_sq = n * (w @ resid**2) / (n - (degree + 1))
    t_bar = float(w @ t) / float(w.sum())
    sum_sq_dev = float(((t - t_bar) ** 2).sum())
    return [
        WeightedFit(beta[:, k].copy(), float(sigma_sq[k]), t_bar, sum_sq_dev, n, degree, t_ref)
        for k in range(vals.shape[1])
    ]


def weighted_polyfit(
    times: Sequence[float], values: Sequence[float], weights: Sequence[float], degree: int
) -> WeightedFit:
    """Weighted least-squares polynomial fit of ``values`` against ``times``."""
    return weighted_polyfit_columns(times, np.asarray(values, dtype=float), weights, degree)[0]


def predict(fit: WeightedFit, t: float) -> float:
    """Evaluate the fitted polynomial at time ``t`` (Horner)."""
    s = t - fit.t_ref
    acc = 0.0
    for c in fit.coefficients[::-1]:
        acc = acc * s + float(c)
    return acc


def _betacf(a: float, b: float, x: float, max_iter: int = 20_000, eps: float = 1e-15) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, nu: float) -> float:
    """Student-t cumulative distribution function."""
    x = nu / (nu + t * t)
    tail = 0.5 * regularized_incomplete_beta(nu / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def _t_logpdf(t: float, nu: float) -> float:
    return (
        math.lgamma((nu + 1) / 2)
        - math.lgamma(nu / 2)
        - 0.5 * math.log(nu * math.pi)
        - (nu + 1) / 2 * math.log1p(t * t / nu)
    )


@lru_cache(maxsize=4096)
def t_quantile(p: float, nu: float) -> float:
    """p-quantile of Student's t with ``nu`` degrees of freedom.

    Inverts the incomplete-beta form of the CDF by safeguarded Newton steps,
    started from the normal quantile.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if nu < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, nu)

    # bracket [lo, hi] around the root of cdf(t) - p on t > 0
    lo, hi = 0.0, max(1.0, NormalDist().inv_cdf(p))
    while t_cdf(hi, nu) < p:
        lo, hi = hi, hi * 2.0
    t = min(max(NormalDist().inv_cdf(p), lo), hi)
    for _ in range(200):
        f = t_cdf(t, nu) - p
        if f > 0:
            hi = t
        else:
            lo = t
        step = f / math.exp(_t_logpdf(t, nu))
        t_new = t - step
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-13 * max(1.0, abs(t_new)):
            return t_new
        t = t_new
    return t


def prediction_halfwidth(fit: WeightedFit, t: float, alpha: float) -> float:
    """Half-width of the (1 - alpha) prediction window for a new response at ``t``."""
    nu = fit.dof
    if nu < 1:
        raise ValueError(f"prediction window needs >= 1 residual dof, got {nu}")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lever = (t - fit.t_bar_w) ** 2 / fit.sum_sq_dev if fit.sum_sq_dev > 0 else 0.0
    se = math.sqrt(fit.sigma_sq_hat * (1.0 + 1.0 / fit.n_samples + lever))
    return t_quantile(1.0 - alpha / 2.0, nu) * se
