"""Reselection dynamics: participants migrate toward the mechanism with higher average utility.

    python scripts/reselection_dynamics.py [--epochs 30] [--replications 200] [--workers 4]
"""

import argparse

from eswm.config import ExperimentConfig
from eswm.output import emit_results
from eswm.sim import BENCHMARK, ESWM, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--replications", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default="results/reselection")
    args = parser.parse_args()

    config = ExperimentConfig(mode="reselection", epochs=args.epochs, replications=args.replications,
                              seed=args.seed, out=args.out)
    result = run_experiment(config, workers=args.workers)
    emit_results(result)

    count = {m: result.metric(m, "requesters") + result.metric(m, "providers") for m in (ESWM, BENCHMARK)}
    u_req = {m: result.metric(m, "avg_requester_utility") for m in (ESWM, BENCHMARK)}
    u_prov = {m: result.metric(m, "avg_provider_utility") for m in (ESWM, BENCHMARK)}
    esw = {m: result.metric(m, "esw") for m in (ESWM, BENCHMARK)}
    print(f"{'epoch':>5}{'n ESWM':>9}{'n bench':>9}{'u_req E':>10}{'u_req B':>10}"
          f"{'u_prov E':>10}{'u_prov B':>10}{'ESW E':>9}{'ESW B':>9}")
    for e in range(args.epochs):
        row = [count[ESWM], count[BENCHMARK], u_req[ESWM], u_req[BENCHMARK],
               u_prov[ESWM], u_prov[BENCHMARK], esw[ESWM], esw[BENCHMARK]]
        vals = [x[:, e].mean() for x in row]
        print(f"{e:>5}{vals[0]:>9.2f}{vals[1]:>9.2f}" + "".join(f"{v:>10.3f}" for v in vals[2:6])
              + "".join(f"{v:>9.2f}" for v in vals[6:]))
    print(f"results written to {args.out}")


if __name__ == "__main__":
    main()
