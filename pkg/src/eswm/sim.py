"""Multi-epoch competition between the benchmark and the ESWM mechanism.

Each replication draws one global pool of requesters and providers and
splits it evenly between the two mechanisms. Every epoch both mechanisms run
one round on their own share of the pool with their own capacity K. In
``static`` mode the split is kept fixed; in ``reselection`` mode every
participant re-chooses its mechanism after each epoch with probability
proportional to (average utility of its role there) ** exponent.

Seeding: replication ``r`` derives all of its randomness from
``SeedSequence(seed, spawn_key=(r, ...))``, so replications are independent
of one another and of execution order.
"""

from __future__ import annotations

import dataclasses
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from eswm.config import ExperimentConfig, ReselectionRule
from eswm.mechanism import (
    MechanismOutcome,
    Objective,
    PaymentPolicy,
    greedy_match,
    realize_round,
    weight_matrices,
)
from eswm.model import Market, generate_population
from eswm.oracle import MAX_SIDE, matching_objective, solve_exact
from eswm.valuation import expected_value_matrix

ESWM = "eswm"
BENCHMARK = "benchmark"
MECHANISMS = (BENCHMARK, ESWM)
OBJECTIVES = {BENCHMARK: Objective.PLATFORM, ESWM: Objective.ESW}

METRICS = (
    "requesters",
    "providers",
    "nsw",
    "esw",
    "realized_sw",
    "platform_utility",
    "avg_requester_utility",
    "avg_provider_utility",
    "tasks_served",
)

Z_95 = 1.959963984540054


@dataclass(frozen=True)
class Population:
    requesters: tuple[int, ...] = ()
    providers: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return len(self.requesters) + len(self.providers)


@dataclass(frozen=True)
class MechanismRecord:
    requesters: int = 0
    providers: int = 0
    nsw: float = 0.0
    esw: float = 0.0
    realized_sw: float = 0.0
    platform_utility: float = 0.0
    avg_requester_utility: float = 0.0
    avg_provider_utility: float = 0.0
    tasks_served: int = 0

    @classmethod
    def from_outcome(cls, outcome: MechanismOutcome) -> "MechanismRecord":
        return cls(
            requesters=outcome.n_requesters,
            providers=outcome.n_providers,
            nsw=outcome.nsw,
            esw=outcome.esw,
            realized_sw=outcome.realized_sw,
            platform_utility=outcome.platform_utility,
            avg_requester_utility=outcome.avg_requester_utility,
            avg_provider_utility=outcome.avg_provider_utility,
            tasks_served=outcome.tasks_served,
        )

    @property
    def participants(self) -> int:
        return self.requesters + self.providers


@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    records: Mapping[str, MechanismRecord]

    def __getitem__(self, mechanism: str) -> MechanismRecord:
        return self.records[mechanism]


class Arena:
    """Global pool of one replication plus its cached expected-value matrix."""

    def __init__(self, market: Market, expected: np.ndarray | None = None):
        self.market = market
        self.expected = (expected_value_matrix(market.requesters, market.providers)
                         if expected is None else expected)
        self._rpos = {r.id: a for a, r in enumerate(market.requesters)}
        self._ppos = {p.id: b for b, p in enumerate(market.providers)}

    def submarket(self, population: Population) -> tuple[Market, np.ndarray]:
        rows = [self._rpos[j] for j in population.requesters]
        cols = [self._ppos[i] for i in population.providers]
        sub = Market(tuple(self.market.requesters[a] for a in rows),
                     tuple(self.market.providers[b] for b in cols),
                     self.market.capacity)
        return sub, self.expected[np.ix_(rows, cols)]


def _child(seq: np.random.SeedSequence, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + keys)


def _mechanism_key(name: str) -> int:
    return zlib.crc32(name.encode())


def run_epoch(arena: Arena, populations: Mapping[str, Population], policy: PaymentPolicy,
              seed: np.random.SeedSequence, epoch: int = 0,
              objectives: Mapping[str, Objective] = OBJECTIVES,
              ) -> tuple[EpochTrace, dict[str, MechanismOutcome]]:
    """One selection + realization round for every mechanism on its own population.

    Each mechanism's random stream is keyed by its name, so reordering the
    mapping does not change any mechanism's results.
    """
    records, outcomes = {}, {}
    for name, pop in populations.items():
        market, expected = arena.submarket(pop)
        esw_w, platform_w = weight_matrices(market, policy, expected)
        weights = esw_w if Objective(objectives[name]) is Objective.ESW else platform_w
        matches = greedy_match(weights, pop.requesters, pop.providers, market.capacity)
        lookup = {(pop.requesters[a], pop.providers[b]): float(expected[a, b])
                  for a, b in _positions(matches.pairs, pop)}
        rng = np.random.default_rng(_child(seed, _mechanism_key(name)))
        outcome = realize_round(market, matches, policy, rng, expected=lookup)
        outcomes[name] = outcome
        records[name] = MechanismRecord.from_outcome(outcome)
    return EpochTrace(epoch, records), outcomes


def _positions(pairs, pop: Population):
    rpos = {j: a for a, j in enumerate(pop.requesters)}
    ppos = {i: b for b, i in enumerate(pop.providers)}
    return [(rpos[j], ppos[i]) for j, i in pairs]


def initial_split(market: Market, rng: np.random.Generator) -> dict[str, Population]:
    """Uniform random half/half partition; with an odd count the benchmark gets the extra one."""
    rids = np.array([r.id for r in market.requesters], dtype=int)
    pids = np.array([p.id for p in market.providers], dtype=int)
    rperm, pperm = rng.permutation(rids), rng.permutation(pids)
    hr, hp = len(rids) // 2, len(pids) // 2
    return {
        BENCHMARK: Population(tuple(sorted(rperm[hr:].tolist())), tuple(sorted(pperm[hp:].tolist()))),
        ESWM: Population(tuple(sorted(rperm[:hr].tolist())), tuple(sorted(pperm[:hp].tolist()))),
    }


def selection_probability(utility_a: float, utility_b: float, rule: ReselectionRule) -> float:
    """Probability of joining mechanism A given both mechanisms' average utilities."""
    ua = max(rule.floor, utility_a) ** rule.exponent
    ub = max(rule.floor, utility_b) ** rule.exponent
    return ua / (ua + ub)


def reselect(previous: EpochTrace, market: Market, rule: ReselectionRule, rng: np.random.Generator,
             mechanisms: tuple[str, str] = (ESWM, BENCHMARK)) -> dict[str, Population]:
    """Every participant independently picks a mechanism for the next epoch.

    Requesters weigh the requester averages, providers the provider averages.
    """
    a, b = mechanisms
    ra, rb = previous[a], previous[b]
    p_req = selection_probability(ra.avg_requester_utility, rb.avg_requester_utility, rule)
    p_prov = selection_probability(ra.avg_provider_utility, rb.avg_provider_utility, rule)
    rids = [r.id for r in market.requesters]
    pids = [p.id for p in market.providers]
    join_r = rng.random(len(rids)) < p_req
    join_p = rng.random(len(pids)) < p_prov
    return {
        a: Population(tuple(j for j, f in zip(rids, join_r) if f), tuple(i for i, f in zip(pids, join_p) if f)),
        b: Population(tuple(j for j, f in zip(rids, join_r) if not f),
                      tuple(i for i, f in zip(pids, join_p) if not f)),
    }


@dataclass
class OracleCheck:
    """Greedy-vs-exact comparison over the rounds small enough to enumerate."""

    checked: int = 0
    skipped: int = 0
    min_ratio: float = 1.0
    violations: int = 0

    def merge(self, other: "OracleCheck") -> None:
        self.checked += other.checked
        self.skipped += other.skipped
        self.min_ratio = min(self.min_ratio, other.min_ratio)
        self.violations += other.violations


def _oracle_check(check: OracleCheck, market: Market, expected: np.ndarray,
                  outcome: MechanismOutcome, policy: PaymentPolicy) -> None:
    if len(market.requesters) > MAX_SIDE or len(market.providers) > MAX_SIDE:
        check.skipped += 1
        return
    from eswm.mechanism import PairWeight

    esw_w, platform_w = weight_matrices(market, policy, expected)
    weights = [PairWeight(r.id, p.id, float(esw_w[a, b]), float(platform_w[a, b]), float(expected[a, b]))
               for a, r in enumerate(market.requesters) for b, p in enumerate(market.providers)]
    exact = solve_exact(market, weights)
    table = {(w.requester, w.provider): w.esw_weight for w in weights}
    greedy = matching_objective(table, outcome.matches.pairs)
    check.checked += 1
    if greedy > exact.objective + 1e-9:
        check.violations += 1
    if exact.objective > 0:
        check.min_ratio = min(check.min_ratio, greedy / exact.objective)


Observer = Callable[[int, EpochTrace, Mapping[str, MechanismOutcome], Mapping[str, Population], Market], None]


def run_replication(config: ExperimentConfig, replication: int, observer: Observer | None = None,
                    oracle: bool = False) -> tuple[list[EpochTrace], OracleCheck]:
    root = np.random.SeedSequence(config.seed, spawn_key=(replication,))
    market = generate_population(config.population, _child(root, 0))
    arena = Arena(market)
    populations = initial_split(market, np.random.default_rng(_child(root, 1)))
    check = OracleCheck()
    traces = []
    for epoch in range(config.epochs):
        trace, outcomes = run_epoch(arena, populations, config.policy, _child(root, 2, epoch), epoch)
        traces.append(trace)
        if observer is not None:
            observer(replication, trace, outcomes, populations, market)
        if oracle:
            outcome = outcomes[ESWM]
            sub, expected = arena.submarket(populations[ESWM])
            _oracle_check(check, sub, expected, outcome, config.policy)
        if config.mode == "reselection" and epoch + 1 < config.epochs:
            populations = reselect(trace, market, config.reselection,
                                   np.random.default_rng(_child(root, 3, epoch)))
    return traces, check


@dataclass(frozen=True)
class SummaryRow:
    epoch: int
    mechanism: str
    metric: str
    mean: float
    half_width: float
    replications: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: list[list[EpochTrace]]  # [replication][epoch]
    summary: list[SummaryRow]
    oracle: OracleCheck | None = None

    def metric(self, mechanism: str, metric: str) -> np.ndarray:
        """Array of shape (replications, epochs) for one mechanism's metric."""
        return np.array([[getattr(t[mechanism], metric) for t in rep] for rep in self.traces], dtype=float)


def summarize(traces: Sequence[Sequence[EpochTrace]]) -> list[SummaryRow]:
    """Per-epoch cross-replication means with normal-approximation 95% half-widths."""
    rows = []
    n = len(traces)
    epochs = len(traces[0]) if traces else 0
    for epoch in range(epochs):
        for mech in MECHANISMS:
            for metric in METRICS:
                vals = np.array([getattr(rep[epoch][mech], metric) for rep in traces], dtype=float)
                mean = float(vals.mean())
                half = float(Z_95 * vals.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
                rows.append(SummaryRow(epoch, mech, metric, mean, half, n))
    return rows


def _run_one(args):
    config, replication, oracle = args
    return run_replication(config, replication, oracle=oracle)


def run_experiment(config: ExperimentConfig, seed: int | None = None, observer: Observer | None = None,
                   oracle: bool = False, workers: int = 1) -> ExperimentResult:
    """Run all replications; ``workers > 1`` fans them out over processes (no observer then)."""
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    jobs = [(config, r, oracle) for r in range(config.replications)]
    if workers > 1:
        if observer is not None:
            raise ValueError("observer callbacks require workers=1")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [run_replication(config, r, observer, oracle) for _, r, _ in jobs]
    traces = [t for t, _ in results]
    check = None
    if oracle:
        check = OracleCheck()
        for _, c in results:
            check.merge(c)
    return ExperimentResult(config, traces, summarize(traces), check)
