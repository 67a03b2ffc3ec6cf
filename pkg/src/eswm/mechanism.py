"""Winner selection, payments and single-round outcomes.

Two greedy selectors share one implementation and differ only in the pair
weight they rank by:

* ``Objective.ESW``: expected surplus ``E_i(v_j) - c_i`` (the ESWM mechanism);
* ``Objective.PLATFORM``: the platform's expected margin
  ``gamma * E_i(v_j) - (1 + m) * c_i`` (the benchmark).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from eswm.model import Market, MatchSet, StructuralError, validate_match_set
from eswm.valuation import CompletionTime, depreciated_value, expected_value, sample_completion


class Objective(str, Enum):
    ESW = "esw"
    PLATFORM = "platform"


@dataclass(frozen=True)
class PaymentPolicy:
    requester_share: float = 0.8  # gamma: requester charged gamma * E
    provider_margin: float = 0.2  # m: provider paid c * (1 + m)
    charge_on_realized: bool = False
    average_over: str = "all"  # "all" participants or "winners" only

    def __post_init__(self):
        if not (self.provider_margin >= 0 and math.isfinite(self.provider_margin)):
            raise ValueError(f"provider_margin must be >= 0, got {self.provider_margin}")
        if not 0 < self.requester_share <= 1:
            raise ValueError(f"requester_share must lie in (0, 1], got {self.requester_share}")
        if self.average_over not in ("all", "winners"):
            raise ValueError(f"average_over must be 'all' or 'winners', got {self.average_over!r}")

    def charge(self, expected: float) -> float:
        return self.requester_share * expected

    def payment(self, cost: float) -> float:
        return cost * (1.0 + self.provider_margin)


@dataclass(frozen=True)
class PairWeight:
    requester: int
    provider: int
    esw_weight: float
    platform_weight: float
    expected_value: float

    def weight(self, objective: Objective) -> float:
        return self.esw_weight if Objective(objective) is Objective.ESW else self.platform_weight


def weight_matrices(market: Market, policy: PaymentPolicy,
                    expected: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """ESW and platform weight matrices (requester position x provider position).

    ``expected`` may supply a precomputed expected-value matrix for the market.
    """
    if expected is None:
        expected = np.array([[expected_value(r, w) for w in market.providers]
                             for r in market.requesters]).reshape(len(market.requesters),
                                                                  len(market.providers))
    costs = np.array([w.cost for w in market.providers], dtype=float)
    esw = expected - costs[None, :]
    platform = policy.requester_share * expected - (1.0 + policy.provider_margin) * costs[None, :]
    return esw, platform


def compute_weights(market: Market, policy: PaymentPolicy | None = None) -> list[PairWeight]:
    policy = policy or PaymentPolicy()
    out = []
    for r in market.requesters:
        for w in market.providers:
            e = expected_value(r, w)
            out.append(PairWeight(r.id, w.id, e - w.cost,
                                  policy.charge(e) - policy.payment(w.cost), e))
    return out


def greedy_match(weights: np.ndarray, requester_ids: Sequence[int], provider_ids: Sequence[int],
                 capacity: int) -> MatchSet:
    """Greedy maximum-weight matching capped at ``capacity`` pairs.

    Takes pairs in order of decreasing weight (ties: lower requester id, then
    lower provider id), skipping pairs whose requester or provider is already
    used and every pair with weight <= 0.
    """
    weights = np.asarray(weights, dtype=float)
    if capacity <= 0 or weights.size == 0:
        return MatchSet()
    rid = np.asarray(requester_ids)
    pid = np.asarray(provider_ids)
    rows, cols = np.nonzero(weights > 0)
    if rows.size == 0:
        return MatchSet()
    w = weights[rows, cols]
    order = np.lexsort((pid[cols], rid[rows], -w))
    used_r, used_p = set(), set()
    pairs = []
    for k in order:
        a, b = rows[k], cols[k]
        if a in used_r or b in used_p:
            continue
        used_r.add(a)
        used_p.add(b)
        pairs.append((int(rid[a]), int(pid[b])))
        if len(pairs) == capacity or len(used_r) == len(rid) or len(used_p) == len(pid):
            break
    return MatchSet(tuple(pairs))


def weights_to_matrix(market: Market, weights: Sequence[PairWeight],
                      objective: Objective) -> np.ndarray:
    rpos = {r.id: a for a, r in enumerate(market.requesters)}
    ppos = {p.id: b for b, p in enumerate(market.providers)}
    mat = np.full((len(rpos), len(ppos)), -np.inf)
    for pw in weights:
        mat[rpos[pw.requester], ppos[pw.provider]] = pw.weight(objective)
    return mat


def select_winners_greedy(market: Market, weights: Sequence[PairWeight],
                          objective: Objective = Objective.ESW) -> MatchSet:
    mat = weights_to_matrix(market, weights, Objective(objective))
    return greedy_match(mat, [r.id for r in market.requesters],
                        [p.id for p in market.providers], market.capacity)


@dataclass(frozen=True)
class MatchRecord:
    requester: int
    provider: int
    expected_value: float
    completion: CompletionTime
    realized_value: float
    charge: float
    payment: float
    requester_utility: float
    provider_utility: float


@dataclass(frozen=True)
class MechanismOutcome:
    matches: MatchSet
    records: tuple[MatchRecord, ...]
    nsw: float
    esw: float
    realized_sw: float
    platform_utility: float
    avg_requester_utility: float
    avg_provider_utility: float
    n_requesters: int
    n_providers: int

    @property
    def tasks_served(self) -> int:
        return len(self.records)

    @property
    def total_charges(self) -> float:
        return sum(r.charge for r in self.records)

    @property
    def total_payments(self) -> float:
        return sum(r.payment for r in self.records)


def realize_round(market: Market, matches: MatchSet, policy: PaymentPolicy,
                  rng: np.random.Generator,
                  expected: Mapping[tuple[int, int], float] | None = None) -> MechanismOutcome:
    """Draw completions for every match and settle charges, payments and utilities.

    Matches are processed in sorted (requester, provider) order so the random
    stream is consumed deterministically. ``expected`` optionally maps pairs to
    precomputed expected values.
    """
    verdict = validate_match_set(market, matches)
    if not verdict:
        raise StructuralError(f"infeasible match set, violates {', '.join(verdict.violations)}")

    records = []
    for j, i in matches.pairs:
        req, prov = market.requester(j), market.provider(i)
        e = expected[(j, i)] if expected is not None else expected_value(req, prov)
        completion = sample_completion(prov, rng)
        realized = depreciated_value(req, completion)
        charge = policy.charge(realized if policy.charge_on_realized else e)
        payment = policy.payment(prov.cost)
        records.append(MatchRecord(j, i, e, completion, realized, charge, payment,
                                   realized - charge, payment - prov.cost))

    n_req, n_prov = len(market.requesters), len(market.providers)
    req_total = sum(r.requester_utility for r in records)
    prov_total = sum(r.provider_utility for r in records)
    if policy.average_over == "all":
        req_den, prov_den = n_req, n_prov
    else:
        req_den = prov_den = len(records)
    return MechanismOutcome(
        matches=matches,
        records=tuple(records),
        nsw=sum(market.requester(r.requester).value for r in records),
        esw=sum(r.expected_value - market.provider(r.provider).cost for r in records),
        realized_sw=sum(r.realized_value - market.provider(r.provider).cost for r in records),
        platform_utility=sum(r.charge - r.payment for r in records),
        avg_requester_utility=req_total / req_den if req_den else 0.0,
        avg_provider_utility=prov_total / prov_den if prov_den else 0.0,
        n_requesters=n_req,
        n_providers=n_prov,
    )
