"""Command-line front end.

Machine-readable JSON goes to stdout, a short human summary to stderr.
Exit codes: 0 pass/complete, 1 check failed, 2 resource budget, 64 usage.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from . import pqalgebra, protocol, states, witness
from ._rational import as_fraction, fraction_str

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 64
CLI_COEFF_BUDGET = 4 ** 6


class UsageError(Exception):
    pass


@dataclass
class CommandReport:
    command: str
    parameters: dict[str, Any]
    results: dict[str, Any]
    passed: bool | None = None
    seed: int | None = None
    schema: int = SCHEMA
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"schema": self.schema, "command": self.command, "parameters": self.parameters,
                "results": self.results, "pass": self.passed, "seed": self.seed,
                "warnings": self.warnings}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "CommandReport":
        return cls(command=d["command"], parameters=d["parameters"], results=d["results"],
                   passed=d["pass"], seed=d["seed"], schema=d["schema"],
                   warnings=list(d.get("warnings", [])))

    @classmethod
    def from_json(cls, text: str) -> "CommandReport":
        return cls.from_dict(json.loads(text))


def exact(q: Fraction) -> dict:
    return {"value": fraction_str(Fraction(q)), "exact": True}


def approx(x: float, tol: float) -> dict:
    return {"value": float(x), "tol": tol}


def _draw_seed() -> int:
    return int(np.random.SeedSequence().entropy % 2 ** 63)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


DEFAULTS = {
    "identities": {"d": 3},
    "coeffs": {"d": 3, "eps": "1/10", "n": 1},
    "epsilon": {"d": 3, "n": 1, "precision": "1/1000000"},
    "witness": {"d": 3, "alpha": None, "eps": None, "restarts": 64, "max_iters": 500},
    "simulate": {"d": 3, "eps": "1", "trials": 1, "target": "3", "max_rounds": 1_000_000},
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distillkit", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys supply flag values")
    common.add_argument("--workers", type=int, default=None,
                        help="parallel workers for restarts/trials (default: CPU count)")
    common.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", parents=[common], help="check projector and partial-transpose identities")
    p.add_argument("--d", type=int)

    p = sub.add_parser("coeffs", parents=[common], help="exact n-copy coefficient expansion")
    p.add_argument("--d", type=int)
    p.add_argument("--eps")
    p.add_argument("--n", type=int)

    p = sub.add_parser("epsilon", parents=[common], help="n-copy lower bound and epsilon threshold")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--precision")

    p = sub.add_parser("witness", parents=[common], help="Schmidt-rank-2 witness search")
    p.add_argument("target", choices=["werner", "rho", "alpha-state"])
    p.add_argument("--d", type=int)
    p.add_argument("--alpha")
    p.add_argument("--eps")
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo of the distillation loop")
    p.add_argument("--d", type=int)
    p.add_argument("--eps")
    p.add_argument("--trials", type=int)
    p.add_argument("--target")
    p.add_argument("--max-rounds", dest="max_rounds", type=int)
    p.add_argument("--jsonl", help="write one RunStats JSON object per line to this file")
    p.add_argument("--trajectory", action="store_true", help="include per-iteration trajectories in --jsonl")
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
    for key, default in DEFAULTS[args.command].items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, default))
    for key in ("seed", "workers"):
        if getattr(args, key) is None and key in config:
            setattr(args, key, config[key])
    if args.workers is None:
        args.workers = os.cpu_count() or 1
    return args


def _rational_arg(text, name: str) -> Fraction:
    if isinstance(text, str) and any(c in text for c in ".eE"):
        raise UsageError(f"{name}: write rationals as p/q, got {text!r}")
    try:
        return as_fraction(str(text), name)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_identities(args) -> CommandReport:
    d = args.d
    if not 2 <= d <= 6:
        raise UsageError(f"--d must be between 2 and 6, got {d}")
    report = states.verify_pt_relations(d)
    invariants = states.projector_set(d).invariant_errors()
    tol = report.tol
    ok = report.passed and all(v <= tol for v in invariants.values())
    results = {
        "pt_relations": {k: approx(v, tol) for k, v in report.deviations.items()},
        "projector_invariants": {k: approx(v, tol) for k, v in invariants.items()},
    }
    return CommandReport("identities", {"d": d}, results, passed=ok)


def cmd_coeffs(args) -> CommandReport:
    d, n = args.d, args.n
    eps = _rational_arg(args.eps, "--eps")
    if d < 3 or n < 1 or eps < 0:
        raise UsageError("need --d >= 3, --n >= 1 and --eps >= 0")
    coeffs = pqalgebra.n_copy_pt_coeffs(d, eps, n, budget=CLI_COEFF_BUDGET)
    claims = pqalgebra.check_coefficient_claims(d, eps, n, budget=CLI_COEFF_BUDGET)
    ml = pqalgebra.mu_lambda(d, eps)
    results = {
        "mu": exact(ml.mu),
        "lambda": exact(ml.lam),
        "count": len(coeffs),
        "coefficients": {x: exact(c) for x, c in coeffs.items()},
        "checks": {
            "alpha(0^2n) == mu^n": claims.all_zeros_equals_mu_n,
            "alpha(1^2n) == lambda^n": claims.all_ones_equals_lambda_n,
            "negative alpha(x) >= -eps mu^(n-1)": not claims.negative_bound_violations,
            "|alpha(x)| <= eps mu^(n-1), all other x": not claims.bound_violations,
        },
        "bound": exact(claims.bound),
        "all_other_words_violations": claims.bound_violations,
        "mixed_pair_words_nonzero": len(claims.mixed_pair_nonzero),
    }
    return CommandReport("coeffs", {"d": d, "eps": fraction_str(eps), "n": n}, results,
                         passed=claims.negative_claims_hold)


def _linear_root(d: int) -> Fraction:
    # n = 1: B(eps) = (lambda(eps)/4)(1-2/d)^2 - eps is affine in eps
    b0 = witness.n_copy_bound(witness.BoundParams(d, 1, 0))
    b1 = witness.n_copy_bound(witness.BoundParams(d, 1, 1))
    return b0 / (b0 - b1)


def cmd_epsilon(args) -> CommandReport:
    d, n = args.d, args.n
    if d < 3 or n < 1:
        raise UsageError("need --d >= 3 and --n >= 1")
    precision = _rational_arg(args.precision, "--precision")
    eps_star = witness.epsilon_threshold(d, n, precision)
    bound = lambda e: witness.n_copy_bound(witness.BoundParams(d, n, e))  # noqa: E731
    samples = {fraction_str(e): exact(bound(e))
               for e in (Fraction(0), eps_star / 2, eps_star, eps_star + precision, Fraction(1))}
    results = {"epsilon_star": exact(eps_star), "epsilon_star_float": float(eps_star),
               "precision": exact(precision), "bound_samples": samples}
    if n == 1:
        root = _linear_root(d)
        results["exact_root"] = exact(root)
        results["bound_at_root"] = exact(bound(root))
    ok = bound(eps_star) > 0 and bound(eps_star + precision) <= 0
    return CommandReport("epsilon", {"d": d, "n": n, "precision": fraction_str(precision)},
                         results, passed=ok)


def cmd_witness(args) -> CommandReport:
    d = args.d
    params: dict[str, Any] = {"target": args.target, "d": d, "restarts": args.restarts}
    if args.target == "rho":
        eps = _rational_arg(args.eps if args.eps is not None else "1/10", "--eps")
        params["eps"] = fraction_str(eps)
        state = states.rho_epsilon(states.RhoEpsilonParams(d, eps))
    else:
        if args.alpha is None:
            raise UsageError(f"witness {args.target} needs --alpha")
        alpha = _rational_arg(args.alpha, "--alpha")
        params["alpha"] = fraction_str(alpha)
        if args.target == "werner":
            state = states.werner(states.WernerParams(d, float(alpha)))
        else:
            state = states.alpha_state(d, alpha)
    result = witness.find_witness(state, restarts=args.restarts, seed=args.seed,
                                  max_iters=args.max_iters, workers=args.workers)
    found = result.best_value < 0
    results = {
        "best_value": approx(result.best_value, 1e-10),
        "verdict": ("negative certificate found: 1-distillable" if found else
                    "no certificate found (evidence, not proof, of non-1-distillability)"),
        "witness": result.to_dict(),
        "normalization": "unit-norm Schmidt-rank-2 vectors",
    }
    return CommandReport("witness", params, results, passed=None, seed=result.seed)


def cmd_simulate(args) -> CommandReport:
    eps = _rational_arg(args.eps, "--eps")
    if eps <= 0:
        raise UsageError("--eps must be positive")
    if args.d < 3:
        raise UsageError("--d must be >= 3")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    config = protocol.ProtocolConfig(args.d, eps, _rational_arg(args.target, "--target"),
                                     master_seed=args.seed, max_rounds=args.max_rounds)
    runs = protocol.simulate_many(config, args.trials, workers=args.workers,
                                  record=bool(args.jsonl and args.trajectory))
    if args.jsonl:
        with open(args.jsonl, "w") as fh:
            for r in runs:
                fh.write(r.to_json_line(args.trajectory) + "\n")
    done = [r for r in runs if r.terminated]
    copies = np.array([r.copies_consumed for r in done], dtype=float)
    warnings = []
    if len(done) < len(runs):
        warnings.append(f"{len(runs) - len(done)} of {len(runs)} runs hit max_rounds without terminating")
    results = {
        "k_needed": protocol.k_threshold(config.d, eps, config.target),
        "trials": len(runs),
        "terminated": len(done),
        "success_probability_fresh": approx(protocol.success_probability(config.beta, config.d, eps), 1e-12),
        "expected_copies_exact": exact(protocol.expected_copies_exact(config.d, eps, config.target)),
        "mean_copies": None if not len(done) else float(copies.mean()),
        "stderr_copies": None if len(done) < 2 else float(copies.std(ddof=1) / np.sqrt(len(done))),
        "final_alpha": sorted({fraction_str(r.final_alpha) for r in done}),
        "final_witness_values": sorted({approx(r.final_witness_value, 1e-12)["value"] for r in done}),
    }
    if len(runs) == 1:
        results["run"] = runs[0].to_dict()
    ok = all(r.final_witness_value is not None and r.final_witness_value < 0 for r in done)
    return CommandReport("simulate", protocol.config_to_dict(config), results,
                         passed=ok, seed=config.master_seed, warnings=warnings)


COMMANDS = {"identities": cmd_identities, "coeffs": cmd_coeffs, "epsilon": cmd_epsilon,
            "witness": cmd_witness, "simulate": cmd_simulate}


def _summarize(report: CommandReport) -> None:
    print(f"[{report.command}] pass={report.passed} seed={report.seed}", file=sys.stderr)
    for key, value in report.results.items():
        if key in ("coefficients", "witness", "run"):
            continue
        print(f"  {key:<40} {value}", file=sys.stderr)
    for w in report.warnings:
        print(f"  warning: {w}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args)
        if args.command in ("witness", "simulate") and args.seed is None:
            args.seed = _draw_seed()
            print(f"seed: {args.seed}", file=sys.stderr)
        report = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"distillkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except pqalgebra.BudgetExceeded as exc:
        print(f"distillkit: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, TypeError) as exc:
        print(f"distillkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(report.to_json())
    _summarize(report)
    return EXIT_FAIL if report.passed is False else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
