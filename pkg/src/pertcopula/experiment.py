"""Monte Carlo coverage study of the interval estimators.

Replication ``r`` simulates its chain from stream ``(base_seed, r)`` and
draws the robust estimator's auxiliary normals from
``(base_seed, r + noise_offset)``.  One chain of the largest requested
length is simulated per replication; shorter sample sizes use its
prefixes, which are exactly the chains the same stream would produce on
its own.  Aggregates are order-independent sums, so the report does not
depend on the order in which replications are processed.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .chain import RngStream, simulate_batch
from .copulas import CopulaSpec, Family, parse_params, preset, require_positive
from .errors import CopulaError, InvalidSpec
from .mle import fit_mle, mle_confidence_intervals
from .moment import fit_moment, independence_test
from .robust import fit_robust

__all__ = [
    "ESTIMATORS",
    "DESK_SAMPLE_SIZES",
    "FULL_SAMPLE_SIZES",
    "ExperimentConfig",
    "CoverageRow",
    "TestRow",
    "CoverageReport",
    "run_coverage",
    "run_replication",
]

ESTIMATORS = ("moment", "mle", "robust_empirical", "robust_model")
DESK_SAMPLE_SIZES = (1999, 4999)
FULL_SAMPLE_SIZES = (4999, 9999, 19999)
REPORT_COLUMNS = (
    "estimator",
    "parameter",
    "n",
    "coverage_count",
    "replications",
    "mean_ci_length",
    "mean_estimate",
    "failures",
)
TEST_COLUMNS = ("test", "n", "df", "rejections", "replications", "alpha", "mean_statistic", "failures")


@dataclass(frozen=True)
class ExperimentConfig:
    spec: CopulaSpec
    sample_sizes: tuple[int, ...] = DESK_SAMPLE_SIZES
    replications: int = 100
    alpha: float = 0.05
    estimators: tuple[str, ...] = ESTIMATORS
    base_seed: int = 20240101
    output_path: str = "coverage.csv"
    independence_test: bool = False
    noise_offset: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.replications < 1:
            raise InvalidSpec("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise InvalidSpec("alpha must lie in (0, 1)")
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise InvalidSpec("sample sizes must be positive integers")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise InvalidSpec(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
        if self.noise_offset < self.replications:
            raise InvalidSpec("noise_offset must exceed the replication count so streams stay distinct")
        require_positive(self.spec)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "spec" in doc:
            sub = doc.pop("spec")
            doc.setdefault("family", sub.get("family"))
            if "params" in sub:
                doc.setdefault("params", sub["params"])
        if "family" not in doc:
            raise InvalidSpec("config needs a 'family' field")
        fam = Family.parse(doc.pop("family"))
        params = doc.pop("params", None)
        spec = preset(fam) if params is None else CopulaSpec(fam, parse_params(params))
        full = bool(doc.pop("full_scale", False))
        if full and "sample_sizes" not in doc:
            doc["sample_sizes"] = FULL_SAMPLE_SIZES
        known = set(cls.__dataclass_fields__) - {"spec"}
        extra = set(doc) - known
        if extra:
            raise InvalidSpec(f"unknown config fields {sorted(extra)}")
        return cls(spec=spec, **doc)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @property
    def tests_output_path(self) -> str:
        p = Path(self.output_path)
        return str(p.with_name(p.stem + ".tests" + p.suffix))


@dataclass(frozen=True)
class CoverageRow:
    estimator: str
    parameter: str
    n: int
    coverage_count: int
    replications: int
    mean_ci_length: float
    mean_estimate: float
    failures: int


@dataclass(frozen=True)
class TestRow:
    __test__ = False

    test: str
    n: int
    df: int
    rejections: int
    replications: int
    alpha: float
    mean_statistic: float
    failures: int


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in columns])
    return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else v


@dataclass
class CoverageReport:
    rows: list[CoverageRow]
    tests: list[TestRow] = field(default_factory=list)

    def to_csv(self) -> str:
        return _csv(REPORT_COLUMNS, self.rows)

    def tests_to_csv(self) -> str:
        return _csv(TEST_COLUMNS, self.tests)

    def write(self, path, tests_path=None) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        if self.tests and tests_path is not None:
            Path(tests_path).write_text(self.tests_to_csv())
        return path

    def row(self, estimator: str, parameter: str, n: int) -> CoverageRow:
        for r in self.rows:
            if (r.estimator, r.parameter, r.n) == (estimator, parameter, n):
                return r
        raise KeyError((estimator, parameter, n))


def _intervals(estimator: str, values, spec: CopulaSpec, noise, alpha: float):
    """(estimates, intervals) for one chain; estimator failures propagate."""
    if estimator == "moment":
        rep = fit_moment(values, spec.family, alpha)
        return rep.estimates, rep.intervals
    if estimator == "mle":
        res = fit_mle(values, spec.family)
        return res.estimates, mle_confidence_intervals(res, alpha)
    variant = estimator.split("_", 1)[1]
    rep = fit_robust(values, spec.family, noise, variant, alpha)
    return rep.estimates, rep.intervals


def run_replication(config: ExperimentConfig, r: int, values: np.ndarray) -> dict:
    """Per-replication outcomes keyed by (estimator, n).

    Each value is either a list of ``(estimate, lower, upper)`` per parameter
    or the name of the error that stopped the estimator.
    """
    out = {}
    noise_all = RngStream(config.base_seed, r + config.noise_offset).normals(max(config.sample_sizes))
    for n in config.sample_sizes:
        vals = values[: n + 1]
        noise = noise_all[:n]
        for est in config.estimators:
            try:
                e, iv = _intervals(est, vals, config.spec, noise, config.alpha)
                out[(est, n)] = [(float(x), float(lo), float(hi)) for x, (lo, hi) in zip(e, iv)]
            except CopulaError as exc:
                out[(est, n)] = type(exc).__name__
        if config.independence_test:
            try:
                res = independence_test(vals, config.spec.family.basis, config.spec.family.size, config.alpha)
                out[("independence", n)] = (bool(res.reject), float(res.statistic), int(res.df))
            except CopulaError as exc:
                out[("independence", n)] = type(exc).__name__
    return out


def _mean(xs) -> float:
    return math.fsum(xs) / len(xs) if xs else float("nan")


def aggregate(config: ExperimentConfig, outcomes: Sequence[dict]) -> CoverageReport:
    """Reduce per-replication outcomes into report rows, keyed deterministically."""
    truth = config.spec.params
    names = config.spec.family.param_names
    rows = []
    for est in config.estimators:
        for j, name in enumerate(names):
            for n in config.sample_sizes:
                ok = [o[(est, n)] for o in outcomes if not isinstance(o[(est, n)], str)]
                fails = len(outcomes) - len(ok)
                cover = sum(1 for res in ok if res[j][1] <= truth[j] <= res[j][2])
                rows.append(
                    CoverageRow(
                        estimator=est,
                        parameter=name,
                        n=n,
                        coverage_count=cover,
                        replications=len(ok),
                        mean_ci_length=_mean([res[j][2] - res[j][1] for res in ok]),
                        mean_estimate=_mean([res[j][0] for res in ok]),
                        failures=fails,
                    )
                )
    tests = []
    if config.independence_test:
        for n in config.sample_sizes:
            ok = [o[("independence", n)] for o in outcomes if not isinstance(o[("independence", n)], str)]
            tests.append(
                TestRow(
                    test="independence",
                    n=n,
                    df=config.spec.family.size,
                    rejections=sum(1 for rej, _, _ in ok if rej),
                    replications=len(ok),
                    alpha=config.alpha,
                    mean_statistic=_mean([s for _, s, _ in ok]),
                    failures=len(outcomes) - len(ok),
                )
            )
    return CoverageReport(rows, tests)


def run_coverage(config: ExperimentConfig, batch_size: int = 100) -> CoverageReport:
    """Coverage counts and mean interval lengths for every estimator and parameter.

    Chains are simulated in lock-step batches of ``batch_size`` streams;
    the batching does not affect the result.
    """
    n_max = max(config.sample_sizes)
    outcomes = []
    for start in range(0, config.replications, batch_size):
        ids = range(start, min(start + batch_size, config.replications))
        chains = simulate_batch(config.spec, n_max, [RngStream(config.base_seed, r) for r in ids])
        for r, ch in zip(ids, chains):
            outcomes.append(run_replication(config, r, ch.values))
    return aggregate(config, outcomes)
