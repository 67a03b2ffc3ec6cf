"""Exhaustive solver for the capped requester-provider assignment problem.

Intended as ground truth for the greedy selector on small instances only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from eswm.mechanism import Objective, PairWeight
from eswm.model import Market, MatchSet

MAX_SIDE = 12


class SizeError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    best: MatchSet
    objective: float
    explored: int


def matching_objective(weights: Mapping[tuple[int, int], float], pairs: Sequence[tuple[int, int]]) -> float:
    """Sum of pair weights, accumulated left to right over the sorted pairs."""
    total = 0.0
    for pair in sorted(pairs):
        total += weights[pair]
    return total


def solve_exact(market: Market, weights: Sequence[PairWeight],
                objective: Objective = Objective.ESW) -> OracleResult:
    """Maximise the summed weight over all one-to-one pairings of at most K pairs.

    Only strictly positive pairs are enumerated; adding a non-positive pair
    can never raise the objective. Among optimal pairings the one whose
    sorted pair list is lexicographically smallest wins.
    """
    n, m = len(market.requesters), len(market.providers)
    if n > MAX_SIDE or m > MAX_SIDE:
        raise SizeError(f"exact enumeration is limited to {MAX_SIDE}x{MAX_SIDE} markets "
                        f"(got {n}x{m}); use the greedy selector only")

    table = {(pw.requester, pw.provider): pw.weight(objective) for pw in weights}
    requester_ids = sorted(r.id for r in market.requesters)
    provider_ids = sorted(p.id for p in market.providers)
    options = [[(i, table[(j, i)]) for i in provider_ids if table.get((j, i), 0.0) > 0]
               for j in requester_ids]
    cap = min(market.capacity, n, m)

    best_pairs: list[tuple[int, int]] = []
    best_value = 0.0
    explored = 0
    chosen: list[tuple[int, int]] = []
    used: set[int] = set()

    def visit(k: int, value: float) -> None:
        nonlocal best_pairs, best_value, explored
        if k == len(requester_ids) or len(chosen) == cap:
            explored += 1
            if value > best_value or (value == best_value and chosen < best_pairs):
                best_value, best_pairs = value, list(chosen)
            return
        j = requester_ids[k]
        for i, w in options[k]:
            if i in used:
                continue
            used.add(i)
            chosen.append((j, i))
            visit(k + 1, value + w)
            chosen.pop()
            used.discard(i)
        visit(k + 1, value)

    visit(0, 0.0)
    return OracleResult(MatchSet(tuple(best_pairs)), best_value, explored)


def solve_exact_by_subsets(market: Market, weights: Sequence[PairWeight],
                           objective: Objective = Objective.ESW) -> OracleResult:
    """Second exhaustive solver with a different iteration order.

    Walks pairing sizes k, requester subsets and ordered provider choices via
    itertools, including non-positive pairs. Used to cross-check
    :func:`solve_exact`. Optimal values agree; the chosen pairing can differ
    only when zero-weight pairs tie with their removal.
    """
    n, m = len(market.requesters), len(market.providers)
    if n > MAX_SIDE or m > MAX_SIDE:
        raise SizeError(f"exact enumeration is limited to {MAX_SIDE}x{MAX_SIDE} markets")
    table = {(pw.requester, pw.provider): pw.weight(objective) for pw in weights}
    rids = sorted(r.id for r in market.requesters)
    pids = sorted(p.id for p in market.providers)
    best_key = (0.0, ())
    explored = 0
    for k in range(min(market.capacity, n, m), -1, -1):
        for rsub in itertools.combinations(rids, k):
            for psub in itertools.permutations(pids, k):
                explored += 1
                pairs = tuple(zip(rsub, psub))
                value = matching_objective(table, pairs)
                # maximise value, then prefer the lexicographically smaller pair list
                if value > best_key[0] or (value == best_key[0] and list(pairs) < list(best_key[1])):
                    best_key = (value, pairs)
    return OracleResult(MatchSet(best_key[1]), best_key[0], explored)
