"""Command line interface: ``pertcopula <command> [options]``.

Commands:
  simulate     write a simulated chain as ``index,u`` CSV
  estimate     fit one estimator to a chain CSV and print a JSON report
  test         chi-square test of serial independence on a chain CSV
  coverage     Monte Carlo coverage study, CSV report
  loglik-grid  log-likelihood over a parameter grid, CSV for plotting
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .chain import RngStream, read_chain_csv, simulate, write_chain_csv
from .copulas import CopulaSpec, Family, parse_params, preset
from .errors import CopulaError
from .experiment import DESK_SAMPLE_SIZES, ESTIMATORS, FULL_SAMPLE_SIZES, ExperimentConfig, run_coverage
from .mle import fit_mle_report, loglik_grid
from .moment import fit_moment, independence_test
from .robust import fit_robust

NOISE_STREAM = 1_000_000


def _spec(args) -> CopulaSpec:
    fam = Family.parse(args.family)
    return preset(fam) if args.params is None else CopulaSpec(fam, parse_params(args.params))


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    spec = _spec(args)
    chain = simulate(spec, args.n, RngStream(args.seed, args.stream))
    write_chain_csv(chain, args.out)
    print(f"wrote {len(chain)} values to {args.out}", file=sys.stderr)
    return 0


def cmd_estimate(args) -> int:
    chain = read_chain_csv(args.input)
    fam = Family.parse(args.family) if args.family else (chain.spec.family if chain.spec else None)
    if fam is None:
        raise CopulaError("--family is required when the chain has no .meta sidecar")
    if args.method == "moment":
        report = fit_moment(chain, fam, args.alpha)
    elif args.method == "mle":
        report = fit_mle_report(chain, fam, args.alpha)
    else:
        noise = RngStream(args.seed, NOISE_STREAM + args.stream)
        report = fit_robust(chain, fam, noise, args.method.split("_", 1)[1], args.alpha)
    _emit(report.to_json() + "\n", args.out)
    return 0


def cmd_test(args) -> int:
    chain = read_chain_csv(args.input)
    fam = Family.parse(args.family) if args.family else (chain.spec.family if chain.spec else Family.SINE)
    res = independence_test(chain, fam.basis, args.s, args.alpha)
    _emit(json.dumps(asdict(res), indent=2) + "\n", args.out)
    return 0


def cmd_coverage(args) -> int:
    if args.config:
        config = ExperimentConfig.from_json(args.config)
    else:
        config = ExperimentConfig(spec=_spec(args))
    overrides = {}
    if args.out:
        overrides["output_path"] = args.out
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.method:
        overrides["estimators"] = tuple(args.method)
    if args.n:
        overrides["sample_sizes"] = tuple(args.n)
    elif args.full_scale:
        overrides["sample_sizes"] = FULL_SAMPLE_SIZES
    if args.independence:
        overrides["independence_test"] = True
    if overrides:
        config = replace(config, **overrides)
    report = run_coverage(config)
    path = report.write(config.output_path, config.tests_output_path)
    print(f"wrote {len(report.rows)} rows to {path}", file=sys.stderr)
    if report.tests:
        print(f"wrote independence tests to {config.tests_output_path}", file=sys.stderr)
    return 0


def cmd_loglik_grid(args) -> int:
    chain = read_chain_csv(args.input)
    fam = Family.parse(args.family) if args.family else (chain.spec.family if chain.spec else None)
    if fam is None:
        raise CopulaError("--family is required when the chain has no .meta sidecar")
    a, b = args.axes
    names = fam.param_names
    xs, ys, vals = loglik_grid(chain, fam, (a, b), args.points)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow([names[a], names[b], "loglik"])
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                writer.writerow([repr(float(x)), repr(float(y)), "" if vals[i, j] != vals[i, j] else repr(float(vals[i, j]))])
    finally:
        if args.out:
            out.close()
    return 0


def _add_spec_args(p, required=False):
    p.add_argument("--family", required=required, help="sine, sine-cosine or legendre")
    p.add_argument("--params", help="comma-separated parameters (default: the family preset)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pertcopula", description="Series copula Markov chains: simulation and estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a chain")
    _add_spec_args(p, required=True)
    p.add_argument("--n", type=int, required=True, help="number of transitions (the chain has n + 1 values)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0, help="stream id under the seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate parameters from a chain CSV")
    p.add_argument("--method", choices=ESTIMATORS, default="moment")
    p.add_argument("--family")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0, help="seed of the robust estimator's auxiliary normals")
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="chi-square test of serial independence")
    p.add_argument("--family")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--s", type=int, default=2, help="number of coefficients tested")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study")
    p.add_argument("--config", help="JSON experiment config")
    _add_spec_args(p)
    p.add_argument("--n", type=int, nargs="+", help=f"sample sizes (default {DESK_SAMPLE_SIZES})")
    p.add_argument("--full-scale", action="store_true", help=f"use sample sizes {FULL_SAMPLE_SIZES}")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--method", nargs="+", choices=ESTIMATORS)
    p.add_argument("--independence", action="store_true", help="also run the independence test")
    p.add_argument("--out")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("loglik-grid", help="log-likelihood grid as CSV")
    p.add_argument("--family")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--axes", type=int, nargs=2, default=(0, 1), help="0-based parameter positions")
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--out")
    p.set_defaults(func=cmd_loglik_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "coverage" and not args.config and not args.family:
        parser.error("coverage needs --config or --family")
    try:
        return args.func(args)
    except (CopulaError, ValueError, OSError, KeyError) as exc:
        print(f"pertcopula {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
