"""Static comparison: equal random split, one round per seed, paired differences.

    python scripts/static_comparison.py [--replications 500] [--out results/static]
"""

import argparse
import math

from scipy import stats

from eswm.config import ExperimentConfig
from eswm.output import emit_results
from eswm.sim import BENCHMARK, ESWM, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--replications", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/static")
    args = parser.parse_args()

    config = ExperimentConfig(mode="static", epochs=1, replications=args.replications,
                              seed=args.seed, out=args.out)
    result = run_experiment(config)
    emit_results(result)
    print(f"{'metric':<24}{'ESWM':>10}{'benchmark':>11}{'paired t':>10}{'p (one-sided)':>15}")
    for metric in ("nsw", "esw", "realized_sw", "platform_utility", "avg_requester_utility",
                   "avg_provider_utility", "tasks_served"):
        a = result.metric(ESWM, metric)[:, 0]
        b = result.metric(BENCHMARK, metric)[:, 0]
        diff = a - b
        sd = diff.std(ddof=1)
        t = diff.mean() / (sd / math.sqrt(len(diff))) if sd > 0 else math.nan
        print(f"{metric:<24}{a.mean():>10.3f}{b.mean():>11.3f}{t:>10.2f}{stats.norm.sf(t):>15.4f}")
    print(f"results written to {args.out}")


if __name__ == "__main__":
    main()
