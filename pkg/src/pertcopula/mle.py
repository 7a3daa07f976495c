"""Constrained maximum likelihood for the series copula families.

The log-likelihood of a chain is ``sum_i ln c(U_i, U_{i-1})`` with
``c = 1 + sum_j lam_j g_j`` and ``g_j(u, v) = phi_j(u) phi_j(v)``.  It is
concave in the parameters, so a projected Newton iteration over the
family's weighted-L1 region, started at zero, finds the global maximum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import eval_phi
from .copulas import CopulaSpec, Family, project_weighted_l1
from .errors import (
    BoundaryEstimate,
    ChainTooShort,
    NonPositiveDensity,
    OptimizerDiverged,
    SingularInformation,
)
from .moment import EstimateReport, _values
from .numerics import quantile

__all__ = [
    "MleResult",
    "log_likelihood",
    "score",
    "observed_information",
    "fit_mle",
    "mle_confidence_intervals",
    "fit_mle_report",
    "loglik_grid",
    "BOUNDARY_TOL",
]

BOUNDARY_TOL = 1e-8
MIN_MLE_N = 10


@dataclass
class MleResult:
    estimates: np.ndarray
    loglik: float
    information: np.ndarray
    converged: bool
    iterations: int
    at_boundary: bool
    family: Family = Family.SINE
    n: int = 0


def _family(family) -> Family:
    return family.family if isinstance(family, CopulaSpec) else Family.parse(family)


def coefficient_matrix(chain, family) -> np.ndarray:
    """Matrix with rows ``g_j(U_i, U_{i-1})``, shape (n, s)."""
    vals = _values(chain)
    cur, prev = vals[1:], vals[:-1]
    return np.column_stack([eval_phi(fid, cur) * eval_phi(fid, prev) for fid in _family(family).ids])


def _density_values(params, g) -> np.ndarray:
    c = 1.0 + g @ np.asarray(params, dtype=float)
    if np.any(c <= 0):
        i = int(np.argmin(c))
        raise NonPositiveDensity(f"density {c[i]:.3g} <= 0 at observed pair {i + 1}")
    return c


def _loglik(params, g) -> float:
    return float(np.sum(np.log(_density_values(params, g))))


def log_likelihood(params, chain, family) -> float:
    """``sum_i ln c(U_i, U_{i-1}; params)``."""
    fam = _family(family)
    p = np.asarray(params, dtype=float).ravel()
    if p.size != fam.size:
        raise ValueError(f"{fam.value} copula takes {fam.size} parameters")
    return _loglik(p, coefficient_matrix(chain, fam))


def score(params, chain, family) -> np.ndarray:
    """Gradient of the log-likelihood: ``sum_i g_j / c``."""
    g = coefficient_matrix(chain, family)
    return g.T @ (1.0 / _density_values(params, g))


def observed_information(params, chain, family) -> np.ndarray:
    """``sum_i g_j g_k / c^2``, the negative Hessian of the log-likelihood."""
    g = coefficient_matrix(chain, family)
    r = g / _density_values(params, g)[:, None]
    return r.T @ r


def _try_loglik(x, g) -> float:
    try:
        return _loglik(x, g)
    except NonPositiveDensity:
        return -np.inf


def _projected_gradient(x, grad, weights) -> np.ndarray:
    # for a polytope, P(x + eps g) - x is eps times the tangent-cone
    # projection of g once eps is small enough
    eps = 1e-7 / max(1.0, float(np.max(np.abs(grad))))
    return (project_weighted_l1(x + eps * grad, weights) - x) / eps


def fit_mle(chain, family, tol: float = 1e-8, max_iterations: int = 500) -> MleResult:
    """Maximise the log-likelihood over ``{sum w_k |lam_k| <= 1}`` from zero.

    Each iteration tries a projected Newton step with Armijo backtracking
    and falls back to a projected gradient step when that fails to ascend.
    Convergence needs both the projected-gradient norm at most ``tol * n``
    and the last step at most ``tol``.

    Raises:
        ChainTooShort: fewer than 10 transitions.
        OptimizerDiverged: no convergence within ``max_iterations``.
    """
    fam = _family(family)
    vals = _values(chain)
    n = vals.size - 1
    if n < MIN_MLE_N:
        raise ChainTooShort(f"maximum likelihood needs n >= {MIN_MLE_N}, got {max(n, 0)}")
    g = coefficient_matrix(vals, fam)
    w = fam.weights
    x = np.zeros(fam.size)
    f = _loglik(x, g)
    step_norm = np.inf
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        c = 1.0 + g @ x
        grad = g.T @ (1.0 / c)
        r = g / c[:, None]
        info = r.T @ r
        pg = _projected_gradient(x, grad, w)
        if np.linalg.norm(pg) <= tol * n and step_norm <= tol:
            converged = True
            break

        new = None
        try:
            d = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            d = None
        if d is not None and np.all(np.isfinite(d)):
            new = _armijo(x, f, grad, d, g, w, min_t=1e-6)
        if new is None:
            lmax = float(np.linalg.eigvalsh(info)[-1]) if np.all(np.isfinite(info)) else 1.0
            new = _armijo(x, f, grad, grad / max(lmax, 1e-12), g, w, min_t=1e-12)
        if new is None:
            # no ascent possible at working precision: stationary
            step_norm = 0.0
            continue
        x_new, f_new = new
        step_norm = float(np.linalg.norm(x_new - x))
        x, f = x_new, f_new
        if not np.isfinite(f):
            raise OptimizerDiverged("log-likelihood became non-finite")
    else:
        raise OptimizerDiverged(f"no convergence within {max_iterations} iterations")

    c = 1.0 + g @ x
    r = g / c[:, None]
    return MleResult(
        estimates=x,
        loglik=f,
        information=r.T @ r,
        converged=converged,
        iterations=it,
        at_boundary=bool(abs(float(w @ np.abs(x)) - 1.0) <= BOUNDARY_TOL),
        family=fam,
        n=n,
    )


def _armijo(x, f, grad, direction, g, w, min_t, sigma=1e-4):
    """Backtrack along the projected path ``P(x + t d)``; None if no ascent."""
    t = 1.0
    while t >= min_t:
        cand = project_weighted_l1(x + t * direction, w)
        delta = cand - x
        if not np.any(delta):
            return None
        fc = _try_loglik(cand, g)
        if fc >= f + sigma * float(grad @ delta) and fc >= f:
            return cand, fc
        t *= 0.5
    return None


def mle_confidence_intervals(result: MleResult, alpha: float = 0.05) -> list[tuple[float, float]]:
    """``est_k -/+ z_{alpha/2} sqrt([I_n^-1]_kk)``.

    Raises:
        BoundaryEstimate: the estimate lies on the region boundary.
        SingularInformation: the observed information cannot be inverted.
    """
    if result.at_boundary:
        raise BoundaryEstimate("the estimate is on the boundary of the parameter region; no intervals")
    info = np.atleast_2d(result.information)
    if not np.all(np.isfinite(info)) or np.linalg.cond(info) > 1e12:
        raise SingularInformation("observed information is singular")
    var = np.diag(np.linalg.inv(info))
    if np.any(var <= 0):
        raise SingularInformation("inverse information has a nonpositive diagonal")
    half = quantile("normal", 1 - alpha / 2) * np.sqrt(var)
    return [(float(e - h), float(e + h)) for e, h in zip(result.estimates, half)]


def fit_mle_report(chain, family, alpha: float = 0.05, tol: float = 1e-8) -> EstimateReport:
    """:func:`fit_mle` wrapped as a report; intervals are empty on the boundary."""
    res = fit_mle(chain, family, tol)
    intervals = [] if res.at_boundary else mle_confidence_intervals(res, alpha)
    return EstimateReport(
        method="mle",
        estimates=res.estimates,
        sigma=res.information,
        intervals=intervals,
        alpha=alpha,
        n=res.n,
        family=res.family.value,
        param_names=res.family.param_names,
        extras={
            "loglik": res.loglik,
            "converged": res.converged,
            "iterations": res.iterations,
            "at_boundary": res.at_boundary,
        },
    )


def loglik_grid(chain, family, axes: tuple[int, int] = (0, 1), points: int = 41, base=None):
    """Log-likelihood on a grid over two parameters, the others held at ``base``.

    Returns ``(xs, ys, values)`` with ``values[i, j] = l(xs[i], ys[j])``;
    cells outside the parameter region (or with a nonpositive density at
    some observed pair) are NaN.
    """
    fam = _family(family)
    g = coefficient_matrix(chain, fam)
    w = fam.weights
    base = np.zeros(fam.size) if base is None else np.asarray(base, dtype=float).copy()
    a, b = axes
    xs = np.linspace(-1.0 / w[a], 1.0 / w[a], points)
    ys = np.linspace(-1.0 / w[b], 1.0 / w[b], points)
    out = np.full((points, points), np.nan)
    for i, xv in enumerate(xs):
        for j, yv in enumerate(ys):
            p = base.copy()
            p[a], p[b] = xv, yv
            if w @ np.abs(p) <= 1.0 + 1e-12:
                val = _try_loglik(p, g)
                out[i, j] = val if np.isfinite(val) else np.nan
    return xs, ys, out
