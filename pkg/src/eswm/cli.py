"""Command line entry point.

    eswm run --config cfg.yaml [--seed N] [--mode static|reselection] [--epochs N]
             [--replications N] [--oracle] [--out DIR] [--workers N]
    eswm verify --config cfg.yaml

Exit codes: 0 success, 1 configuration error, 2 runtime error or failed check.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from typing import Callable

import numpy as np
from scipy import stats

from eswm.config import MODES, ExperimentConfig, parse_config
from eswm.mechanism import compute_weights, realize_round, select_winners_greedy
from eswm.model import ConfigError, PopulationSpec, generate_population, validate_match_set
from eswm.oracle import matching_objective, solve_exact, solve_exact_by_subsets
from eswm.output import emit_results
from eswm.sim import run_experiment
from eswm.valuation import expected_value, expected_value_monte_carlo

log = logging.getLogger("eswm")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eswm", description="ESWM vs benchmark crowdsourcing mechanism simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment and write CSV/JSON results")
    run.add_argument("--config", help="YAML config file (omit for defaults)")
    run.add_argument("--seed", type=int)
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--epochs", type=int)
    run.add_argument("--replications", type=int)
    run.add_argument("--oracle", action="store_true",
                     help="cross-check greedy selections against exact enumeration where small enough")
    run.add_argument("--out", help="output directory")
    run.add_argument("--workers", type=int, default=1, help="processes for replications")

    verify = sub.add_parser("verify", help="run invariant and oracle checks on small instances")
    verify.add_argument("--config", help="YAML config file (omit for defaults)")
    verify.add_argument("--instances", type=int, default=300)
    return parser


def _small_spec(config: ExperimentConfig, n: int, m: int, capacity: int) -> PopulationSpec:
    return dataclasses.replace(config.population, requesters=n, providers=m, capacity=capacity)


def verify_checks(config: ExperimentConfig, instances: int = 300) -> list[tuple[str, bool, str]]:
    """Invariant checks on small random markets drawn from the configured ranges."""
    rng = np.random.default_rng(config.seed)
    policy = config.policy
    results = []

    feasible = bounded = exact_agree = budget = True
    worst_ratio = 1.0
    for k in range(instances):
        n, m, cap = (int(x) for x in rng.integers(1, [7, 7, 5]))
        market = generate_population(_small_spec(config, n, m, cap), int(rng.integers(2**32)))
        weights = compute_weights(market, policy)
        table = {(w.requester, w.provider): w.esw_weight for w in weights}
        for objective in ("esw", "platform"):
            ms = select_winners_greedy(market, weights, objective)
            feasible &= validate_match_set(market, ms).feasible
        greedy = select_winners_greedy(market, weights)
        exact = solve_exact(market, weights)
        feasible &= validate_match_set(market, exact.best).feasible
        g = matching_objective(table, greedy.pairs)
        bounded &= g <= exact.objective and g >= 0.5 * exact.objective
        if exact.objective > 0:
            worst_ratio = min(worst_ratio, g / exact.objective)
        if n <= 5 and m <= 5:
            exact_agree &= solve_exact_by_subsets(market, weights).objective == exact.objective
        out = realize_round(market, greedy, policy, np.random.default_rng(k))
        budget &= math.isclose(out.total_charges, out.platform_utility + out.total_payments,
                               rel_tol=1e-12, abs_tol=1e-9)
    results.append(("greedy and exact match sets satisfy 11.a-11.e", feasible, f"{instances} markets"))
    results.append(("oracle >= greedy >= 0.5 * oracle", bounded, f"worst ratio {worst_ratio:.4f}"))
    results.append(("two exhaustive enumerations agree", exact_agree, "markets up to 5x5"))
    results.append(("charges = platform utility + payments", budget, ""))

    market = generate_population(_small_spec(config, 8, 8, 4), config.seed)
    pairs = [(r, w) for r in market.requesters for w in market.providers[:3]]
    # family-wise 3-sigma level (two-sided 0.27%) split over all comparisons
    z_max = float(stats.norm.isf(0.0027 / (2 * len(pairs))))
    worst = 0.0
    for r, w in pairs:
        est = expected_value_monte_carlo(r, w, 100_000, rng)
        if est.stderr > 0:
            worst = max(worst, abs(expected_value(r, w) - est.mean) / est.stderr)
        elif expected_value(r, w) != est.mean:
            worst = math.inf
    results.append(("closed form agrees with Monte Carlo", worst <= z_max,
                    f"max |z| {worst:.2f} over {len(pairs)} pairs, limit {z_max:.2f}"))

    small = config.replace(epochs=min(config.epochs, 5), replications=3,
                           population=_small_spec(config, 12, 12, min(config.capacity, 4)))
    conserved = True

    def observer(rep, trace, outcomes, populations, pool):
        nonlocal conserved
        req = sorted(j for p in populations.values() for j in p.requesters)
        prov = sorted(i for p in populations.values() for i in p.providers)
        conserved &= req == [r.id for r in pool.requesters] and prov == [p.id for p in pool.providers]

    run_experiment(small.replace(mode="reselection"), observer=observer)
    results.append(("population conservation across reselection", conserved, ""))
    return results


def _cmd_run(args) -> int:
    config = parse_config(args.config, {
        "seed": args.seed, "mode": args.mode, "epochs": args.epochs,
        "replications": args.replications, "out": args.out,
    })
    log.info("running %s mode: %d epochs x %d replications, seed %d",
             config.mode, config.epochs, config.replications, config.seed)
    result = run_experiment(config, oracle=args.oracle, workers=args.workers)
    paths = emit_results(result)
    for name, path in paths.items():
        print(f"{name}: {path}")
    if result.oracle is not None:
        o = result.oracle
        print(f"oracle: checked {o.checked} rounds, skipped {o.skipped} (over size guard), "
              f"min greedy/exact {o.min_ratio:.4f}, violations {o.violations}")
        if o.violations or o.min_ratio < 0.5:
            return EXIT_RUNTIME
    return EXIT_OK


def _cmd_verify(args) -> int:
    config = parse_config(args.config)
    ok = True
    for name, passed, detail in verify_checks(config, args.instances):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    return EXIT_OK if ok else EXIT_RUNTIME


COMMANDS: dict[str, Callable] = {"run": _cmd_run, "verify": _cmd_verify}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure after validation is a runtime error
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
