"""Stationary Markov chains with uniform marginals driven by a copula.

The transition law from state ``u`` is ``v -> C_1(u, v)``; each step draws a
fresh uniform ``w`` and solves ``C_1(u, v) = w`` on [0, 1].  Chains for
independent replications are advanced together so that the root finder runs
on whole vectors of states at once.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from .basis import eval_antiderivative, eval_phi
from .copulas import CopulaSpec, parse_key_values, require_positive, spec_from_text, spec_to_text
from .numerics import DEFAULT_TOL, ToleranceConfig, find_root_bracketed

__all__ = [
    "RngStream",
    "ChainSample",
    "inverse_conditional",
    "simulate",
    "simulate_batch",
    "write_chain_csv",
    "read_chain_csv",
]

_TWO53 = float(2**53)


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream addressed by ``(seed, stream_id)``.

    Streams with the same seed but different ids are statistically
    independent (they are spawned children of one ``SeedSequence``); the
    bit generator is the counter-based Philox.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def uniforms(self, size: int) -> np.ndarray:
        """Uniforms on the open interval (0, 1), 53 bits each."""
        k = self.generator().integers(0, 2**53, size=size, dtype=np.int64)
        return (k.astype(float) + 0.5) / _TWO53

    def normals(self, size: int) -> np.ndarray:
        """Standard normals by inverse-CDF transform of :meth:`uniforms`."""
        return special.ndtri(self.uniforms(size))


@dataclass(frozen=True, eq=False)
class ChainSample:
    values: np.ndarray
    seed: int = 0
    spec: CopulaSpec | None = None
    stream_id: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("a chain needs at least one value")
        if np.any((vals < 0) | (vals > 1)):
            raise ValueError("chain values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        """Number of transitions (the chain holds ``n + 1`` values)."""
        return self.values.size - 1

    def __eq__(self, other):
        return (
            isinstance(other, ChainSample)
            and self.seed == other.seed
            and self.stream_id == other.stream_id
            and self.spec == other.spec
            and np.array_equal(self.values, other.values)
        )

    def __len__(self):
        return self.values.size

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(current, previous) arrays ``U_i, U_{i-1}`` for i = 1..n."""
        return self.values[1:], self.values[:-1]


def inverse_conditional(spec: CopulaSpec, u_prev, w, tol: ToleranceConfig = DEFAULT_TOL):
    """Solve ``C_1(u_prev, v) = w`` for ``v`` in [0, 1] (vectorised)."""
    require_positive(spec)
    return _inverse(spec, u_prev, w, tol)


def _inverse(spec, u_prev, w, tol):
    u_prev, w = np.broadcast_arrays(np.asarray(u_prev, dtype=float), np.asarray(w, dtype=float))
    scalar = u_prev.ndim == 0
    u_flat = u_prev.ravel()
    w_flat = w.ravel()
    # C_1(u, v) = v + sum_k (lam_k phi_k(u)) Phi_k(v); the bracketed factors
    # depend only on the current states, so evaluate them once per step
    terms = [(fid, lam * eval_phi(fid, u_flat)) for fid, lam in zip(spec.ids, spec.params) if lam != 0]

    def residual(v):
        out = v - w_flat
        for fid, a in terms:
            out = out + a * eval_antiderivative(fid, v)
        return out

    def slope(v):
        out = np.ones_like(v)
        for fid, a in terms:
            out = out + a * eval_phi(fid, v)
        return out

    root = find_root_bracketed(residual, np.zeros_like(u_flat), np.ones_like(u_flat), tol, fprime=slope)
    root = np.clip(root, 0.0, 1.0)
    return float(root[0]) if scalar else root.reshape(u_prev.shape)


def simulate_batch(
    spec: CopulaSpec, n: int, rngs: Sequence[RngStream], tol: ToleranceConfig = DEFAULT_TOL
) -> list[ChainSample]:
    """One chain of ``n`` transitions per stream, advanced in lock-step.

    Stream ``r`` supplies ``n + 1`` uniforms: the first is ``U_0`` and the
    rest drive the transitions.  A chain depends only on its own stream, so
    the result for a given stream does not depend on which other streams
    share the batch.
    """
    require_positive(spec)
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    draws = np.stack([r.uniforms(n + 1) for r in rngs], axis=1) if rngs else np.empty((n + 1, 0))
    path = np.empty_like(draws)
    path[0] = draws[0]
    for i in range(1, n + 1):
        path[i] = _inverse(spec, path[i - 1], draws[i], tol)
    return [ChainSample(path[:, j].copy(), r.seed, spec, r.stream_id) for j, r in enumerate(rngs)]


def simulate(spec: CopulaSpec, n: int, rng: RngStream, tol: ToleranceConfig = DEFAULT_TOL) -> ChainSample:
    return simulate_batch(spec, n, [rng], tol)[0]


def write_chain_csv(chain: ChainSample, path) -> Path:
    """Write ``index,u`` rows plus a ``<path>.meta`` sidecar with seed and spec.

    The sidecar is skipped when the chain carries no generating spec.
    """
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "u"])
    for i, u in enumerate(chain.values):
        writer.writerow([i, repr(float(u))])
    path.write_text(buf.getvalue())
    if chain.spec is not None:
        meta = spec_to_text(chain.spec, seed=chain.seed, stream_id=chain.stream_id, n=chain.n)
        Path(str(path) + ".meta").write_text(meta)
    return path


def read_chain_csv(path, spec: CopulaSpec | None = None) -> ChainSample:
    """Load a chain CSV; seed and spec come from the sidecar when present."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "u" not in reader.fieldnames:
            raise ValueError(f"{path}: expected a header with a 'u' column")
        rows = [(int(r["index"]) if r.get("index") else k, float(r["u"])) for k, r in enumerate(reader)]
    rows.sort()
    values = np.array([u for _, u in rows])
    seed, stream_id = 0, 0
    meta = Path(str(path) + ".meta")
    if meta.exists():
        text = meta.read_text()
        kv = parse_key_values(text)
        seed = int(kv.get("seed", 0))
        stream_id = int(kv.get("stream_id", 0))
        if spec is None:
            spec = spec_from_text(text)
    return ChainSample(values, seed, spec, stream_id)
