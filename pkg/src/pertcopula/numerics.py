"""Shared numerical kernels: bracketed root finding, quadrature on (0, 1), quantiles.

All routines are pure functions of their inputs.  The root finder is
vectorised so that many independent monotone equations (one per simulated
chain) can be solved in lock-step.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError, MaxIterationsExceeded, NoSignChange

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOL",
    "find_root_bracketed",
    "integrate",
    "integrate_01",
    "quantile",
    "normal_cdf",
    "chi2_sf",
]


@dataclass(frozen=True)
class ToleranceConfig:
    root_abs_tol: float = 1e-10
    quad_abs_tol: float = 1e-12
    max_iterations: int = 200

    def __post_init__(self):
        if not (self.root_abs_tol > 0 and self.quad_abs_tol > 0):
            raise ValueError("tolerances must be strictly positive")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")


DEFAULT_TOL = ToleranceConfig()


def find_root_bracketed(
    f: Callable,
    lo,
    hi,
    tol: ToleranceConfig = DEFAULT_TOL,
    fprime: Callable | None = None,
):
    """Root of a continuous function inside ``[lo, hi]``.

    Bisection safeguarded Newton (when ``fprime`` is given) or secant
    iteration.  ``f`` may be vectorised: ``lo`` and ``hi`` broadcast to a
    common shape and every element is solved independently.  ``f`` and
    ``fprime`` are always called with the full flattened vector of iterates,
    so element ``i`` of the argument belongs to equation ``i``.  Each element
    terminates once its bracket is no wider than ``tol.root_abs_tol`` or
    ``f`` vanishes exactly.

    Raises:
        NoSignChange: ``f(lo)`` and ``f(hi)`` share a sign (and neither
            endpoint is a root).
        MaxIterationsExceeded: some element did not converge.
    """
    scalar = np.ndim(lo) == 0 and np.ndim(hi) == 0
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    shape = lo.shape
    lo = lo.astype(float).ravel()
    hi = hi.astype(float).ravel()
    xtol = tol.root_abs_tol
    flo = np.asarray(f(lo), dtype=float).ravel()
    fhi = np.asarray(f(hi), dtype=float).ravel()

    root = np.full(lo.shape, np.nan)
    at_lo = np.abs(flo) <= xtol
    at_hi = ~at_lo & (np.abs(fhi) <= xtol)
    root[at_lo] = lo[at_lo]
    root[at_hi] = hi[at_hi]
    active = ~(at_lo | at_hi)
    if np.any(active & (flo * fhi > 0)):
        bad = np.flatnonzero(active & (flo * fhi > 0))[0]
        raise NoSignChange(
            f"no sign change on [{lo[bad]}, {hi[bad]}]: f={flo[bad]:.3g}, {fhi[bad]:.3g}"
        )

    # orient every bracket so that f(a) < 0 < f(b)
    neg_lo = flo < 0
    a = np.where(neg_lo, lo, hi)
    b = np.where(neg_lo, hi, lo)
    fa = np.where(neg_lo, flo, fhi)
    fb = np.where(neg_lo, fhi, flo)

    # first iterate: regula falsi on the initial bracket
    with np.errstate(divide="ignore", invalid="ignore"):
        x = a - fa * (b - a) / (fb - fa)
    x = np.where(np.isfinite(x), x, 0.5 * (a + b))
    x_prev, f_prev = a.copy(), fa.copy()
    dx_old = np.abs(b - a)
    dx_mid = dx_old.copy()

    for _ in range(int(tol.max_iterations)):
        # full-vector evaluation keeps element-wise closures aligned
        fx = np.asarray(f(x), dtype=float).ravel()
        a = np.where(fx < 0, x, a)
        b = np.where(fx > 0, x, b)
        width = np.abs(b - a)
        done = active & ((fx == 0) | (width <= xtol))
        root = np.where(done, x, root)
        active &= ~done
        if not active.any():
            break

        with np.errstate(divide="ignore", invalid="ignore"):
            if fprime is not None:
                step = -fx / np.asarray(fprime(x), dtype=float).ravel()
            else:
                step = -fx * (x - x_prev) / (fx - f_prev)
        # Dekker nudge: never step less than half the tolerance, toward the far end
        toward = np.where(fx < 0, b - x, a - x)
        step = np.where(np.abs(step) < 0.5 * xtol, np.copysign(0.5 * xtol, toward), step)
        cand = x + step
        inside = (cand > np.minimum(a, b)) & (cand < np.maximum(a, b))
        # bisect when the step leaves the bracket or is not shrinking fast
        # enough compared with the step before last
        bad = ~np.isfinite(cand) | ~inside | (np.abs(step) > 0.5 * dx_old)
        cand = np.where(bad, 0.5 * (a + b), cand)

        dx_old, dx_mid = dx_mid, np.abs(cand - x)
        x_prev, f_prev = x, fx
        x = np.where(active, cand, x)

    if np.any(active):
        raise MaxIterationsExceeded(
            f"root finder did not converge in {tol.max_iterations} iterations"
        )
    return float(root[0]) if scalar else root.reshape(shape)


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _panel(f, a, b, order):
    nodes, weights = _gauss_legendre(order)
    half = 0.5 * (b - a)
    vals = np.asarray(f(a + half * (nodes + 1.0)), dtype=float)
    return half * float(np.dot(weights, vals))


def integrate(f: Callable, a: float, b: float, tol: ToleranceConfig = DEFAULT_TOL, order: int = 64) -> float:
    """Adaptive composite Gauss-Legendre quadrature of a vectorised ``f`` on [a, b].

    Each panel is compared with its two halves; panels are split until the
    local discrepancy falls below a share of ``tol.quad_abs_tol``
    proportional to the panel length.
    """
    if b == a:
        return 0.0
    total = 0.0
    length = abs(b - a)
    stack = [(a, b, _panel(f, a, b, order))]
    splits = 0
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid, order)
        right = _panel(f, mid, hi, order)
        if abs(left + right - whole) <= tol.quad_abs_tol * abs(hi - lo) / length:
            total += left + right
            continue
        splits += 1
        if splits > tol.max_iterations:
            raise MaxIterationsExceeded("adaptive quadrature did not converge")
        stack.append((mid, hi, right))
        stack.append((lo, mid, left))
    return total


def integrate_01(f: Callable, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    return integrate(f, 0.0, 1.0, tol)


def quantile(dist: str, p: float, df: int | None = None) -> float:
    """Inverse CDF of the standard normal (``"normal"``) or chi-square (``"chi2"``)."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if dist in ("normal", "standard_normal"):
        return float(special.ndtri(p))
    if dist in ("chi2", "chi_square"):
        if df is None or df < 1:
            raise DomainError("chi-square quantile needs df >= 1")
        return float(special.chdtri(df, 1.0 - p))
    raise DomainError(f"unknown distribution {dist!r}")


def normal_cdf(x):
    return special.ndtr(x)


def chi2_sf(x, df: int):
    return special.chdtrc(df, x)
