"""``banditlab`` command line: run, suite, verify-bic.

Exit codes: 0 success, 2 configuration or input error, 3 property violation.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .. import incentives
from ..errors import ConfigurationError, DataError, DomainError, PropertyViolation, ResourceLimitError
from .config import load_config
from .experiments import run_experiment
from .suites import SUITES

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROPERTY = 3


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    outdir, summ = run_experiment(cfg, args.out)
    mean = "n/a" if summ.mean_regret is None else f"{summ.mean_regret:.6g} (se {summ.se_regret:.3g})"
    print(f"wrote {len(cfg.seeds)} seed file(s) and summary.csv to {outdir}; mean final regret {mean}")
    return EXIT_OK


def _cmd_suite(args) -> int:
    if args.name not in SUITES:
        raise ConfigurationError(f"unknown suite {args.name!r}; choose from {', '.join(sorted(SUITES))}")
    checks = SUITES[args.name]()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_PROPERTY


def _cmd_verify_bic(args) -> int:
    prior = incentives.load_prior(args.prior)
    bound = incentives.bic_epsilon_bound(prior, args.n0)
    params = incentives.BicParams(args.n0, args.eps)
    rep = incentives.bic_verify(
        lambda: incentives.RepeatedHiddenExploration(prior, params, incentives.AlwaysArm(incentives.ARM2)),
        prior, args.T)
    print(f"epsilon bound for N0={args.n0}: {bound:.6g}")
    for (t, a), m in sorted(rep.margins.items()):
        print(f"round {t} arm {a + 1}: P[rec]={rep.rec_probs[(t, a)]:.6g} margin={m:.6g}")
    print(f"{'PASS' if rep.passed else 'FAIL'}: worst margin {rep.worst_margin:.6g}")
    return EXIT_OK if rep.passed else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="banditlab", description="Seeded online-learning experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config and write CSVs")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.set_defaults(func=_cmd_run)
    s = sub.add_parser("suite", help="run a named quick-check suite")
    s.add_argument("--name", required=True)
    s.set_defaults(func=_cmd_suite)
    v = sub.add_parser("verify-bic", help="exhaustively check hidden exploration for incentive compatibility")
    v.add_argument("--prior", required=True)
    v.add_argument("--n0", type=int, required=True)
    v.add_argument("--eps", type=float, required=True)
    v.add_argument("--T", type=int, required=True)
    v.set_defaults(func=_cmd_verify_bic)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigurationError, DataError, DomainError, ResourceLimitError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PropertyViolation as e:
        print(f"property violation: {e}", file=sys.stderr)
        return EXIT_PROPERTY
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
