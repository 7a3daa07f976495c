"""Copulas built as finite orthonormal-series perturbations of independence.

A copula of this kind has density ``c(u, v) = 1 + sum_k lam_k phi_k(u) phi_k(v)``
for basis functions ``phi_k`` of L2(0, 1).  Integrating term by term gives

* ``C(u, v)    = uv + sum_k lam_k Phi_k(u) Phi_k(v)``
* ``C_1(u, v)  = v  + sum_k lam_k phi_k(u) Phi_k(v)``  (derivative in ``u``)

with ``Phi_k`` the antiderivative of ``phi_k`` vanishing at 0.  The three
named families fix the basis functions and the admissible region; a
:class:`GeneralSpec` accepts any list of basis functions and is checked
against the sufficient nonnegativity condition instead.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .basis import BasisFamily, BasisFunctionId, eval_antiderivative, eval_phi, phi_extrema
from .errors import InvalidSpec, NonInteriorSpec

__all__ = [
    "Family",
    "CopulaSpec",
    "GeneralSpec",
    "Verdict",
    "PRESETS",
    "validate",
    "min_density",
    "require_positive",
    "density",
    "cdf",
    "conditional_cdf",
    "project_weighted_l1",
    "project_interior",
    "spec_to_text",
    "spec_from_text",
    "preset",
]

# equality slack for the region test; 3*0.15 + 5*0.1 style sums are not exact in binary
_REGION_EPS = 1e-12


class Family(enum.Enum):
    SINE = "sine"
    SINE_COSINE = "sine-cosine"
    LEGENDRE = "legendre"

    @classmethod
    def parse(cls, name) -> "Family":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"sinecosine": "sine-cosine", "cosine": "sine", "fgm": "legendre"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InvalidSpec(f"unknown family {name!r}; expected sine, sine-cosine or legendre") from None

    @property
    def basis(self) -> BasisFamily:
        return _FAMILY_BASIS[self]

    @property
    def ids(self) -> tuple[BasisFunctionId, ...]:
        """Basis functions in the fixed parameter order of the family."""
        return _FAMILY_IDS[self]

    @property
    def param_names(self) -> tuple[str, ...]:
        return _FAMILY_NAMES[self]

    @property
    def weights(self) -> np.ndarray:
        """Weights ``w`` of the admissible region ``sum w_k |lam_k| <= 1``."""
        return np.array(_FAMILY_WEIGHTS[self], dtype=float)

    @property
    def size(self) -> int:
        return len(self.ids)


_H, _T, _L = BasisFamily.HALF_COSINE, BasisFamily.TRIG, BasisFamily.LEGENDRE
_FAMILY_BASIS = {Family.SINE: _H, Family.SINE_COSINE: _T, Family.LEGENDRE: _L}
_FAMILY_IDS = {
    Family.SINE: (BasisFunctionId(_H, 1), BasisFunctionId(_H, 2)),
    # (lambda1, lambda2, mu1, mu2)
    Family.SINE_COSINE: (
        BasisFunctionId(_T, 1, "cosine"),
        BasisFunctionId(_T, 2, "cosine"),
        BasisFunctionId(_T, 1, "sine"),
        BasisFunctionId(_T, 2, "sine"),
    ),
    Family.LEGENDRE: (BasisFunctionId(_L, 1), BasisFunctionId(_L, 2)),
}
_FAMILY_NAMES = {
    Family.SINE: ("lambda1", "lambda2"),
    Family.SINE_COSINE: ("lambda1", "lambda2", "mu1", "mu2"),
    Family.LEGENDRE: ("lambda1", "lambda2"),
}
# |l1| + |l2| <= 1/2, sum of four <= 1/2, 3|l1| + 5|l2| <= 1
_FAMILY_WEIGHTS = {
    Family.SINE: (2.0, 2.0),
    Family.SINE_COSINE: (2.0, 2.0, 2.0, 2.0),
    Family.LEGENDRE: (3.0, 5.0),
}


@dataclass(frozen=True)
class CopulaSpec:
    """One of the three named families with its parameter vector."""

    family: Family
    params: tuple[float, ...]

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        params = tuple(float(p) for p in np.ravel(self.params))
        if len(params) != fam.size:
            raise InvalidSpec(f"{fam.value} copula takes {fam.size} parameters, got {len(params)}")
        if not all(np.isfinite(params)):
            raise InvalidSpec("parameters must be finite")
        object.__setattr__(self, "params", params)

    @property
    def ids(self) -> tuple[BasisFunctionId, ...]:
        return self.family.ids

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(self.params)

    @property
    def constraint_value(self) -> float:
        """``sum w_k |lam_k|``; the admissible region is where this is <= 1."""
        return float(self.family.weights @ np.abs(self.coefficients))

    def with_params(self, params) -> "CopulaSpec":
        return CopulaSpec(self.family, tuple(params))


@dataclass(frozen=True)
class GeneralSpec:
    """Arbitrary finite combination of basis functions (single basis family)."""

    ids: tuple[BasisFunctionId, ...]
    lambdas: tuple[float, ...]

    def __post_init__(self):
        ids = tuple(self.ids)
        lambdas = tuple(float(c) for c in self.lambdas)
        if len(ids) != len(lambdas):
            raise InvalidSpec("one coefficient per basis function is required")
        if len({i.family for i in ids}) > 1:
            raise InvalidSpec("all basis functions must come from one family")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "lambdas", lambdas)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(self.lambdas)

    def condition_value(self) -> float:
        """``1 + sum lam_k alpha_k``; nonnegative for a genuine copula density.

        ``alpha_k`` is ``max phi_k**2`` for negative coefficients and
        ``min phi_k * max phi_k`` for positive ones.
        """
        total = 1.0
        for fid, lam in zip(self.ids, self.lambdas):
            if lam == 0:
                continue
            lo, hi = phi_extrema(fid)
            alpha = max(lo * lo, hi * hi) if lam < 0 else lo * hi
            total += lam * alpha
        return total


@dataclass(frozen=True)
class Verdict:
    """Outcome of :func:`validate`.

    ``interior`` is the strict form of the region inequality.  ``positive``
    records that the density stays bounded away from zero on the unit
    square (grid minimum at least ``POSITIVITY_FLOOR``); it can hold on the
    boundary of the sufficient region, e.g. for the sine-cosine vector
    (0.14, 0.13, -0.11, -0.12), whose absolute values sum to exactly 1/2.
    """

    valid: bool
    interior: bool
    message: str = ""
    min_density: float = float("nan")

    @property
    def positive(self) -> bool:
        return self.valid and (self.interior or self.min_density >= POSITIVITY_FLOOR)

    def __bool__(self):
        return self.valid


POSITIVITY_FLOOR = 1e-3
_SQUARE = np.linspace(0.0, 1.0, 401)


def min_density(spec) -> float:
    """Minimum of the density on a 401 x 401 grid of the unit square."""
    u = _SQUARE[:, None]
    out = np.ones((u.size, u.size))
    for fid, lam in zip(*_terms(spec)):
        if lam != 0:
            phi = eval_phi(fid, _SQUARE)
            out += lam * phi[:, None] * phi[None, :]
    return float(out.min())


def validate(spec) -> Verdict:
    if isinstance(spec, CopulaSpec):
        s = spec.constraint_value
        bound = " + ".join(f"{w:g}|{n}|" for w, n in zip(spec.family.weights, spec.family.param_names))
        if s > 1.0 + _REGION_EPS:
            return Verdict(False, False, f"{bound} = {s:.6g} exceeds 1")
        if s >= 1.0 - _REGION_EPS:
            return Verdict(True, False, f"{bound} = 1: boundary of the parameter region", min_density(spec))
        return Verdict(True, True)
    if isinstance(spec, GeneralSpec):
        m = spec.condition_value()
        if m < -_REGION_EPS:
            return Verdict(False, False, f"1 + sum lam_k alpha_k = {m:.6g} < 0")
        if m <= _REGION_EPS:
            return Verdict(True, False, "nonnegativity condition holds with equality", min_density(spec))
        return Verdict(True, True)
    raise InvalidSpec(f"cannot validate {type(spec).__name__}")


def _require_valid(spec):
    verdict = validate(spec)
    if not verdict.valid:
        raise InvalidSpec(verdict.message)


def require_positive(spec):
    """Raise unless the density is valid and bounded away from zero."""
    verdict = validate(spec)
    if not verdict.valid:
        raise InvalidSpec(verdict.message)
    if not verdict.positive:
        raise NonInteriorSpec(f"density may vanish: {verdict.message}")
    return verdict


def _terms(spec):
    ids = spec.ids
    return ids, spec.coefficients


def density(spec, u, v):
    """Copula density ``c(u, v)``; broadcasts over array arguments."""
    _require_valid(spec)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.ones(np.broadcast(u, v).shape)
    for fid, lam in zip(*_terms(spec)):
        if lam != 0:
            out = out + lam * eval_phi(fid, u) * eval_phi(fid, v)
    return out if out.ndim else float(out)


def cdf(spec, u, v):
    """Copula ``C(u, v)``."""
    _require_valid(spec)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = u * v
    for fid, lam in zip(*_terms(spec)):
        if lam != 0:
            out = out + lam * eval_antiderivative(fid, u) * eval_antiderivative(fid, v)
    return out if np.ndim(out) else float(out)


def conditional_cdf(spec, u, v):
    """``dC/du (u, v)``: the law of the next state given the current state ``u``."""
    _require_valid(spec)
    return _conditional_cdf(spec, u, v)


def _conditional_cdf(spec, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = v + np.zeros(np.broadcast(u, v).shape)
    for fid, lam in zip(*_terms(spec)):
        if lam != 0:
            out = out + lam * eval_phi(fid, u) * eval_antiderivative(fid, v)
    return out if out.ndim else float(out)


def project_weighted_l1(x, weights, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``{y : sum w_i |y_i| <= radius}``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(weights, dtype=float)
    ax = np.abs(x)
    if w @ ax <= radius:
        return x.copy()
    # y_i = sign(x_i) max(|x_i| - theta w_i, 0); theta solves the active-set equation
    ratio = ax / w
    order = np.argsort(-ratio)
    cum_wx = np.cumsum((w * ax)[order])
    cum_ww = np.cumsum((w * w)[order])
    theta = 0.0
    for j in range(len(order)):
        t = (cum_wx[j] - radius) / cum_ww[j]
        nxt = ratio[order[j + 1]] if j + 1 < len(order) else 0.0
        if t >= nxt:
            theta = t
            break
    return np.sign(x) * np.maximum(ax - theta * w, 0.0)


def project_interior(spec: CopulaSpec, margin: float = 1e-6) -> CopulaSpec:
    """Pull a parameter vector outside (or on) the region back inside it.

    Vectors already satisfying ``sum w_k |lam_k| <= 1 - margin`` are
    returned unchanged.
    """
    radius = 1.0 - margin
    if spec.constraint_value <= radius:
        return spec
    return spec.with_params(project_weighted_l1(spec.coefficients, spec.family.weights, radius))


PRESETS = {
    Family.SINE: (0.28, -0.15),
    Family.SINE_COSINE: (0.14, 0.13, -0.11, -0.12),
    Family.LEGENDRE: (0.15, 0.1),
}


def preset(family) -> CopulaSpec:
    fam = Family.parse(family)
    return CopulaSpec(fam, PRESETS[fam])


def spec_to_text(spec: CopulaSpec, **extra) -> str:
    """Key-value document, one ``key: value`` pair per line."""
    lines = [f"family: {spec.family.value}", "params: " + ", ".join(repr(p) for p in spec.params)]
    lines += [f"{k}: {v}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = ":" if ":" in line else "="
        if sep not in line:
            raise InvalidSpec(f"malformed line {raw!r}")
        key, value = line.split(sep, 1)
        out[key.strip().lower()] = value.strip()
    return out


def parse_params(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(p) for p in text)
    body = str(text).strip().strip("[]()")
    try:
        return tuple(float(p) for p in body.replace(" ", ",").split(",") if p)
    except ValueError:
        raise InvalidSpec(f"cannot parse parameter list {text!r}") from None


def spec_from_text(text: str) -> CopulaSpec:
    kv = parse_key_values(text)
    if "family" not in kv:
        raise InvalidSpec("spec document needs a 'family' field")
    fam = Family.parse(kv["family"])
    params = parse_params(kv["params"]) if "params" in kv else PRESETS[fam]
    return CopulaSpec(fam, params)
