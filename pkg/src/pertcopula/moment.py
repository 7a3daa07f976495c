"""Moment estimator of the series coefficients and its asymptotic theory.

For a stationary chain ``U_0, ..., U_n`` driven by a copula with density
``1 + sum_k lam_k phi_k(u) phi_k(v)``, the sample mean of
``phi_k(U_i) phi_k(U_{i-1})`` is unbiased for ``lam_k`` and jointly
asymptotically normal.  This module computes the estimates, the limiting
covariance (both the per-family closed forms and the general series
expression), Wald intervals and regions, and the chi-square test of
serial independence.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import BasisFamily, BasisFunctionId, cross_moment, eval_phi, product_moment
from .chain import ChainSample
from .copulas import CopulaSpec, Family, project_interior, require_positive
from .errors import (
    ChainTooShort,
    DivergentSeries,
    EmptyChain,
    NonPositiveVariance,
    SingularMatrix,
)
from .numerics import chi2_sf, quantile

__all__ = [
    "EstimateReport",
    "TestResult",
    "estimate_lambda",
    "spearman_rho",
    "asymptotic_sigma",
    "general_sigma",
    "confidence_intervals",
    "region_statistic",
    "independence_ids",
    "independence_test",
    "fit_moment",
    "MIN_PAIRS_PER_DF",
]

# smallest chain length per degree of freedom accepted by the independence test
MIN_PAIRS_PER_DF = 30


@dataclass
class EstimateReport:
    """Point estimates with their covariance (or information) and intervals.

    ``sigma`` is the plug-in asymptotic covariance for the moment and robust
    methods and the observed information for maximum likelihood.  Intervals
    need not contain the estimate (the robust ones are bias corrected).
    """

    method: str
    estimates: np.ndarray
    sigma: np.ndarray
    intervals: list
    alpha: float
    n: int
    family: str = ""
    param_names: tuple = ()
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        return {
            "method": self.method,
            "family": self.family,
            "param_names": list(self.param_names),
            "estimates": [float(x) for x in self.estimates],
            "sigma": [[float(x) for x in row] for row in sigma],
            "intervals": [[float(lo), float(hi)] for lo, hi in self.intervals],
            "alpha": float(self.alpha),
            "n": int(self.n),
            **{k: _jsonable(v) for k, v in self.extras.items()},
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass(frozen=True)
class TestResult:
    """Outcome of a chi-square test; ``reject`` iff statistic > critical value."""

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    df: int
    critical_value: float
    p_value: float
    reject: bool
    normal_approx: float = float("nan")


def _values(chain) -> np.ndarray:
    if isinstance(chain, ChainSample):
        return chain.values
    vals = np.asarray(chain, dtype=float)
    if vals.ndim != 1:
        raise ValueError("a chain must be one-dimensional")
    return vals


def _resolve_ids(ids) -> tuple[BasisFunctionId, ...]:
    if isinstance(ids, CopulaSpec):
        return ids.ids
    if isinstance(ids, (Family, str)):
        return Family.parse(ids).ids
    if isinstance(ids, BasisFunctionId):
        return (ids,)
    return tuple(ids)


def estimate_lambda(chain, ids) -> np.ndarray:
    """Sample means of ``phi_k(U_i) phi_k(U_{i-1})``, one per basis function.

    ``ids`` is a family (name, :class:`Family` or spec) or an explicit
    sequence of basis function ids.
    """
    vals = _values(chain)
    if vals.size < 2:
        raise EmptyChain("the chain needs at least one transition")
    cur, prev = vals[1:], vals[:-1]
    return np.array([np.mean(eval_phi(fid, cur) * eval_phi(fid, prev)) for fid in _resolve_ids(ids)])


def spearman_rho(chain, family="sine") -> float:
    """Spearman's rho of the pair copula, estimated by the first coefficient."""
    return float(estimate_lambda(chain, _resolve_ids(family)[:1])[0])


def asymptotic_sigma(family, at) -> np.ndarray:
    """Closed-form asymptotic covariance of the moment estimator.

    ``family`` is a family or a spec; ``at`` is the parameter vector in the
    family's order.  For the sine-cosine family the (lambda1, mu1) entry
    includes the term ``-lambda1 mu1 lambda2 / (1 - lambda2)`` that the
    general series produces through ``int phi_cos2 phi_cos1^2 = 1/sqrt(2)``
    and ``int phi_cos2 phi_sin1^2 = -1/sqrt(2)``.

    Raises:
        NonInteriorSpec: the density at ``at`` is not bounded away from 0.
    """
    fam = family.family if isinstance(family, CopulaSpec) else Family.parse(family)
    spec = CopulaSpec(fam, at)
    require_positive(spec)
    p = spec.params
    if fam is Family.SINE:
        l1, l2 = p
        s11 = 1 + l2 / 2 + l1**2 * l2 / (1 - l2)
        s12 = l1 * (0.5 - l2)
        out = [[s11, s12], [s12, 1.0]]
    elif fam is Family.LEGENDRE:
        l1, l2 = p
        s11 = 1 + 0.8 * l2 + l1**2 * (3 + 5 * l2) / (5 * (1 - l2))
        s12 = 0.8 * l1 + l1 * l2 * (1 + 7 * l2) / (7 * (1 - l2))
        s22 = 1 + 20 * l2 / 49 + l2**2 * (63 - 23 * l2) / (49 * (1 - l2))
        out = [[s11, s12], [s12, s22]]
    else:
        l1, l2, m1, m2 = p
        g = l2 / (1 - l2)
        s11 = 1 + l2 / 2 + l1**2 * g
        s33 = 1 + l2 / 2 + m1**2 * g
        s12 = l1 * (0.5 - l2)
        s13 = m2 / 2 - 2 * l1 * m1 - l1 * m1 * g
        s14 = m1 / 2 - l1 * m2
        s23 = m1 * (0.5 - l2)
        s24 = -2 * l2 * m2
        s34 = l1 / 2 - m1 * m2
        out = [
            [s11, s12, s13, s14],
            [s12, 1.0, s23, s24],
            [s13, s23, s33, s34],
            [s14, s24, s34, 1.0],
        ]
    return np.array(out, dtype=float)


def general_sigma(ids: Sequence[BasisFunctionId], lambdas) -> np.ndarray:
    """Asymptotic covariance from the series expression, any finite basis.

    Entry ``(k, j)`` is::

        delta_kj + sum_z lam_z (int phi_z phi_k phi_j)^2 - lam_k lam_j
          + 2 lam_k lam_j (int phi_k^2 phi_j^2 - 1)
          + 2 lam_k lam_j sum_z lam_z / (1 - lam_z) (int phi_z phi_k^2)(int phi_z phi_j^2)

    where ``z`` runs over the given ids and the geometric tail
    ``sum_{m>=2} lam_z^(m-1)`` is summed in closed form.

    Raises:
        DivergentSeries: some ``|lam_z| >= 1``.
    """
    ids = tuple(ids)
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size != len(ids):
        raise ValueError(f"{len(ids)} basis functions but {lam.size} coefficients")
    if np.any(np.abs(lam) >= 1):
        raise DivergentSeries("the geometric series needs every |lambda| < 1")
    s = len(ids)
    geo = lam / (1 - lam)
    # t[z, k] = int phi_z phi_k^2
    t = np.array([[cross_moment(z, k, k) for k in ids] for z in ids]).reshape(s, s)
    out = np.eye(s)
    for a in range(s):
        for b in range(a, s):
            ka, kb = ids[a], ids[b]
            triple = sum(lz * cross_moment(z, ka, kb) ** 2 for z, lz in zip(ids, lam) if lz != 0)
            quartic = product_moment(ka, ka, kb, kb)
            ll = lam[a] * lam[b]
            val = triple - ll + 2 * ll * (quartic - 1) + 2 * ll * float(np.sum(geo * t[:, a] * t[:, b]))
            out[a, b] += val
            if a != b:
                out[b, a] = out[a, b]
    return out


def confidence_intervals(estimates, sigma, n: int, alpha: float = 0.05) -> list[tuple[float, float]]:
    """Wald intervals ``est_k -/+ z_{alpha/2} sqrt(sigma_kk / n)``."""
    est = np.asarray(estimates, dtype=float).ravel()
    diag = np.diag(np.atleast_2d(np.asarray(sigma, dtype=float)))
    if n < 2:
        raise ChainTooShort("confidence intervals need n >= 2")
    if np.any(~(diag > 0)):
        raise NonPositiveVariance(f"nonpositive variance on the diagonal: {diag}")
    half = quantile("normal", 1 - alpha / 2) * np.sqrt(diag / n)
    return [(float(e - h), float(e + h)) for e, h in zip(est, half)]


def _chi2_result(stat: float, df: int, alpha: float) -> TestResult:
    crit = quantile("chi2", 1 - alpha, df)
    return TestResult(
        statistic=float(stat),
        df=int(df),
        critical_value=crit,
        p_value=float(chi2_sf(stat, df)),
        reject=bool(stat > crit),
        normal_approx=float((stat - df) / math.sqrt(2 * df)),
    )


def region_statistic(estimates, null, sigma, n: int, alpha: float = 0.05) -> TestResult:
    """Wald statistic ``n d' sigma^-1 d`` with ``d = estimates - null``."""
    d = np.asarray(estimates, dtype=float).ravel() - np.asarray(null, dtype=float).ravel()
    sig = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sig.shape != (d.size, d.size):
        raise ValueError(f"sigma has shape {sig.shape}, expected {(d.size, d.size)}")
    if not np.all(np.isfinite(sig)) or np.linalg.cond(sig) > 1e12:
        raise SingularMatrix("sigma is singular or too ill-conditioned to invert")
    q = float(n * d @ np.linalg.solve(sig, d))
    return _chi2_result(q, d.size, alpha)


def independence_ids(basis: BasisFamily | Family | str, s: int) -> tuple[BasisFunctionId, ...]:
    """First ``s`` basis functions; cosine and sine interleave for the trig basis."""
    if not isinstance(basis, BasisFamily):
        try:
            basis = BasisFamily(basis)
        except ValueError:
            basis = Family.parse(basis).basis
    if s < 1:
        raise ValueError("s must be >= 1")
    if basis is BasisFamily.TRIG:
        return tuple(BasisFunctionId(basis, j // 2 + 1, "cosine" if j % 2 == 0 else "sine") for j in range(s))
    return tuple(BasisFunctionId(basis, j + 1) for j in range(s))


def independence_test(chain, basis, s: int = 2, alpha: float = 0.05) -> TestResult:
    """Chi-square test of serial independence from the first ``s`` estimates.

    Under independence ``n * sum W_j^2`` is asymptotically chi-square with
    ``s`` degrees of freedom.  The normalised form
    ``(n sum W^2 - s) / sqrt(2 s)`` is reported as ``normal_approx``.

    Raises:
        ChainTooShort: fewer than ``30 s`` transitions.
    """
    vals = _values(chain)
    n = vals.size - 1
    if n < MIN_PAIRS_PER_DF * s:
        raise ChainTooShort(f"the test needs n >= {MIN_PAIRS_PER_DF * s} transitions, got {max(n, 0)}")
    w = estimate_lambda(vals, independence_ids(basis, s))
    return _chi2_result(n * float(w @ w), s, alpha)


def fit_moment(chain, family, alpha: float = 0.05, margin: float = 1e-6) -> EstimateReport:
    """Moment estimates with plug-in covariance and Wald intervals.

    The covariance is evaluated at the estimate pulled back inside the
    parameter region (at distance ``margin`` from its boundary) when the raw
    estimate falls on or outside it.
    """
    fam = family.family if isinstance(family, CopulaSpec) else Family.parse(family)
    vals = _values(chain)
    est = estimate_lambda(vals, fam)
    n = vals.size - 1
    plug = CopulaSpec(fam, est)
    projected = plug.constraint_value > 1 - margin
    if projected:
        plug = project_interior(plug, margin)
    sigma = asymptotic_sigma(fam, plug.params)
    return EstimateReport(
        method="moment",
        estimates=est,
        sigma=sigma,
        intervals=confidence_intervals(est, sigma, n, alpha),
        alpha=alpha,
        n=n,
        family=fam.value,
        param_names=fam.param_names,
        extras={"plugin_projected": bool(projected)},
    )

