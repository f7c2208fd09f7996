"""Command-line entry point: ``concfun <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds, concentration, harness, kernels, limits
from .concentration import ConcentrationCurve, SortedSample
from .counting import make_mixing
from .errors import ConfigError, ConvergenceError, DomainError, MomentDivergenceError

EXIT_FAIL = 1
EXIT_USAGE = 2


def _load_config(args) -> harness.ExperimentConfig:
    seed = getattr(args, "seed", None)
    if args.config:
        return harness.ExperimentConfig.from_file(args.config, seed=seed)
    return harness.ExperimentConfig.from_text(harness.default_config_text(args.theorem), seed=seed)


def _read_sample(path: str) -> np.ndarray:
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    vals = [float(tok) for tok in text.replace(",", " ").split()]
    return np.asarray(vals, dtype=float)


def _write(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_bound(args) -> int:
    if args.config:
        cfg = harness.ExperimentConfig.from_file(args.config)
        if cfg.theorem_id != args.theorem:
            raise ConfigError(f"config is for {cfg.theorem_id}, not {args.theorem}")
    else:
        cfg = harness.default_config(args.theorem)
    bv = harness.config_bound(cfg, halfopen=args.halfopen)
    record = {**bv.as_record(), "inputs_digest": bv.inputs_digest, "vacuous": bv.vacuous}
    print(json.dumps(record, indent=2, default=float))
    return 0


def cmd_qhat(args) -> int:
    sample = SortedSample.of(_read_sample(args.input))
    zs = concentration.parse_grid(args.z_grid)
    q = concentration.q_hat_curve(sample, zs, closed=not args.halfopen)
    curve = ConcentrationCurve(zs, q)
    _write(curve.to_json() + "\n" if args.format == "json" else curve.to_csv(), args.out)
    return 0


def cmd_limit(args) -> int:
    zs = concentration.parse_grid(args.grid)
    if args.law == "generic_mixture":
        if not args.mix:
            raise ConfigError("generic_mixture needs --mix kind:key=value,...")
        kind, _, rest = args.mix.partition(":")
        params = {k: float(v) for k, v in (item.split("=") for item in rest.split(",") if item)}
        law = limits.LimitLaw("generic_mixture", mix=make_mixing(kind, **params), sigma=args.sigma)
    else:
        law = limits.LimitLaw(args.law, scale=args.scale, r=args.r)
    curve = ConcentrationCurve(zs, law.curve(zs))
    _write(curve.to_json() + "\n" if args.format == "json" else curve.to_csv(), args.out)
    return 0


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    if args.workers:
        from dataclasses import replace

        cfg = replace(cfg, workers=args.workers)
    report = harness.run_verification(cfg)
    _write(harness.emit_report(report, args.format), args.out)
    status = "PASS" if report.passed else "FAIL"
    print(
        f"{report.theorem_id}: {status} deviation={report.empirical_sup_deviation:.6g} "
        f"bound={report.bound_value:.6g} budget={report.mc_error_budget:.6g}",
        file=sys.stderr,
    )
    return 0 if report.passed else EXIT_FAIL


def cmd_selfcheck(args) -> int:
    """Fast internal consistency checks; exits nonzero on any failure."""
    from . import dists, specfun

    checks = []

    def check(name: str, ok: bool) -> None:
        checks.append((name, ok))
        print(f"{'ok  ' if ok else 'FAIL'} {name}")

    check("constants identity", all(abs(bounds.CONSTANTS.q_constant(k) - 2 * bounds.CONSTANTS.q_constant(k, True)) < 1e-15
                                     for k in ("general", "iid", "poisson_3rd")))
    check("P + Q = 1", abs(specfun.regularized_lower_gamma(2.5, 1.7) + specfun.regularized_upper_gamma(2.5, 1.7) - 1) < 1e-13)
    check("folded normal", abs(specfun.folded_normal_cdf(1.0) - 0.6826894921370859) < 1e-14)
    check("V+_1 closed form", abs(limits.folded_variance_gamma_cdf(1.0, 1.0) - (1 - np.exp(-np.sqrt(2)))) < 1e-9)
    check("T+_1 closed form", abs(limits.folded_student_cdf(1.0, 1.0) - 0.5) < 1e-13)
    v = np.sort(np.random.default_rng(0).normal(size=2000))
    zs = np.linspace(0.0, 3.0, 17)
    from . import _pykernels

    check(f"kernel backends agree ({kernels.BACKEND})",
          np.array_equal(kernels.window_counts_max(v, zs), _pykernels.window_counts_max(v, zs, True)))
    rad = dists.rademacher()
    check("Rademacher Q(0)", concentration.q_exact_lattice(rad, 0.0) == 0.5)
    failed = [n for n, ok in checks if not ok]
    return EXIT_FAIL if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="concfun", description="Concentration-function bounds for random sums.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="evaluate a theorem bound")
    b.add_argument("theorem", choices=bounds.THEOREM_IDS)
    b.add_argument("--config", help="experiment config (default: the shipped one)")
    b.add_argument("--halfopen", action="store_true", help="bound for half-open windows")
    b.set_defaults(func=cmd_bound)

    q = sub.add_parser("qhat", help="empirical concentration curve of a sample")
    q.add_argument("--input", required=True, help="whitespace or comma separated numbers; '-' for stdin")
    q.add_argument("--z-grid", required=True, help="start:stop:count or a comma list")
    q.add_argument("--halfopen", action="store_true")
    q.add_argument("--format", choices=("csv", "json"), default="csv")
    q.add_argument("--out")
    q.set_defaults(func=cmd_qhat)

    lim = sub.add_parser("limit", help="tabulate a limit law")
    lim.add_argument("law", choices=limits.LIMIT_KINDS)
    lim.add_argument("--grid", required=True)
    lim.add_argument("--scale", type=float, default=1.0)
    lim.add_argument("--r", type=float)
    lim.add_argument("--mix", help="mixing law for generic_mixture, e.g. gamma:r=2,n=10")
    lim.add_argument("--sigma", type=float, default=1.0)
    lim.add_argument("--format", choices=("csv", "json"), default="csv")
    lim.add_argument("--out")
    lim.set_defaults(func=cmd_limit)

    v = sub.add_parser("verify", help="run a verification experiment")
    v.add_argument("theorem", nargs="?", choices=bounds.THEOREM_IDS, help="shipped default when --config is absent")
    v.add_argument("--config")
    v.add_argument("--seed", type=int)
    v.add_argument("--workers", type=int)
    v.add_argument("--out")
    v.add_argument("--format", choices=("csv", "json"), default="json")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("selfcheck", help="quick internal consistency checks")
    s.set_defaults(func=cmd_selfcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and not (args.config or args.theorem):
        parser.error("verify needs a theorem id or --config")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, MomentDivergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
