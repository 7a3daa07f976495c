"""Orthonormal bases of L2(0, 1) and their moment integrals.

Three bases are supported:

* ``HALF_COSINE``: sqrt(2) cos(k pi x)
* ``TRIG``: sqrt(2) cos(2 pi k x) and sqrt(2) sin(2 pi k x)
* ``LEGENDRE``: sqrt(2k + 1) P_k(2x - 1)

Every integral of a product of basis functions goes through adaptive
quadrature and is memoised; the closed-form trigonometric expansion in
:func:`trig_product_moment` is kept as an independent check.
"""
from __future__ import annotations

import enum
import itertools
import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import FamilyMismatch, InvalidId
from .numerics import DEFAULT_TOL, integrate_01

SQRT2 = math.sqrt(2.0)


class BasisFamily(enum.Enum):
    HALF_COSINE = "half-cosine"
    TRIG = "trig"
    LEGENDRE = "legendre"


_KINDS = {
    BasisFamily.HALF_COSINE: ("cosine",),
    BasisFamily.TRIG: ("cosine", "sine"),
    BasisFamily.LEGENDRE: ("polynomial",),
}


@dataclass(frozen=True)
class BasisFunctionId:
    family: BasisFamily
    index: int
    kind: str = ""

    def __post_init__(self):
        if not isinstance(self.family, BasisFamily):
            raise InvalidId(f"unknown basis family {self.family!r}")
        kind = self.kind or _KINDS[self.family][0]
        object.__setattr__(self, "kind", kind)
        if kind not in _KINDS[self.family]:
            raise InvalidId(f"kind {kind!r} is not valid for {self.family.value}")
        if int(self.index) != self.index or self.index < 1:
            raise InvalidId(f"basis index must be a positive integer, got {self.index}")

    @property
    def sort_key(self):
        return (self.family.value, self.kind, self.index)

    def __str__(self):
        if self.family is BasisFamily.TRIG:
            return f"{'cos' if self.kind == 'cosine' else 'sin'}{self.index}"
        return f"{self.family.value}{self.index}"


def legendre(k: int, t):
    """Classical Legendre polynomial P_k(t) by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    if k == 0:
        return p_prev
    p = t.copy()
    for j in range(1, k):
        p_prev, p = p, ((2 * j + 1) * t * p - j * p_prev) / (j + 1)
    return p


def eval_phi(fid: BasisFunctionId, x):
    """Value of the basis function at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    k = fid.index
    if fid.family is BasisFamily.HALF_COSINE:
        return SQRT2 * np.cos(k * np.pi * x)
    if fid.family is BasisFamily.TRIG:
        arg = 2.0 * np.pi * k * x
        return SQRT2 * (np.cos(arg) if fid.kind == "cosine" else np.sin(arg))
    return math.sqrt(2 * k + 1) * legendre(k, 2.0 * x - 1.0)


def eval_antiderivative(fid: BasisFunctionId, x):
    """Integral of the basis function over [0, x]."""
    x = np.asarray(x, dtype=float)
    k = fid.index
    if fid.family is BasisFamily.HALF_COSINE:
        return SQRT2 * np.sin(k * np.pi * x) / (k * np.pi)
    if fid.family is BasisFamily.TRIG:
        arg = 2.0 * np.pi * k * x
        if fid.kind == "cosine":
            return SQRT2 * np.sin(arg) / (2.0 * np.pi * k)
        return SQRT2 * (1.0 - np.cos(arg)) / (2.0 * np.pi * k)
    # integral of P_k is (P_{k+1} - P_{k-1}) / (2k + 1), which vanishes at -1
    s = 2.0 * x - 1.0
    return (legendre(k + 1, s) - legendre(k - 1, s)) / (2.0 * math.sqrt(2 * k + 1))


_GRID = np.linspace(0.0, 1.0, 10001)


def phi_extrema(fid: BasisFunctionId) -> tuple[float, float]:
    """(min, max) of the basis function on a 10001-point grid of [0, 1]."""
    vals = eval_phi(fid, _GRID)
    return float(vals.min()), float(vals.max())


_moment_cache: dict = {}
_moment_lock = threading.Lock()


def _check_family(ids):
    fams = {i.family for i in ids}
    if len(fams) > 1:
        raise FamilyMismatch(f"basis functions from different families: {sorted(f.value for f in fams)}")


def product_moment(*ids: BasisFunctionId, tol=DEFAULT_TOL) -> float:
    """Integral over (0, 1) of the product of the given basis functions."""
    _check_family(ids)
    key = tuple(sorted(ids, key=lambda i: i.sort_key))
    with _moment_lock:
        if key in _moment_cache:
            return _moment_cache[key]
    value = integrate_01(lambda x: np.prod([eval_phi(i, x) for i in key], axis=0) if key else np.ones_like(x), tol)
    with _moment_lock:
        _moment_cache[key] = value
    return value


def cross_moment(a: BasisFunctionId, b: BasisFunctionId | None = None, c: BasisFunctionId | None = None) -> float:
    """Integral of phi_a * phi_b * phi_c; ``None`` stands for the constant 1."""
    return product_moment(*(i for i in (a, b, c) if i is not None))


def fourth_moment(fid: BasisFunctionId) -> float:
    return product_moment(fid, fid, fid, fid)


def trig_product_moment(*ids: BasisFunctionId) -> float:
    """Exact integral of a product of trigonometric basis functions.

    Expands every cosine/sine into complex exponentials and keeps the terms
    whose total frequency vanishes.
    """
    _check_family(ids)
    if not ids:
        return 1.0
    fam = ids[0].family
    if fam is BasisFamily.LEGENDRE:
        raise FamilyMismatch("trig_product_moment only handles trigonometric bases")
    total = 0j
    for signs in itertools.product((1, -1), repeat=len(ids)):
        if sum(s * i.index for s, i in zip(signs, ids)) != 0:
            continue
        coef = 1 + 0j
        for s, i in zip(signs, ids):
            coef *= 0.5 if i.kind == "cosine" else s / 2j
        total += coef
    return float(total.real) * SQRT2 ** len(ids)
