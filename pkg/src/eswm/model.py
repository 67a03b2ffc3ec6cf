"""Participants, markets, feasible match sets and seeded population generation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from enum import Enum
from typing import Iterable

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class StructuralError(ValueError):
    """A match set refers to unknown participants or is not feasible for its market."""


class CurveKind(str, Enum):
    STEP = "step"
    LINEAR = "linear"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class DepreciationCurve:
    kind: CurveKind
    rate: float = 0.0  # per time unit past the deadline; ignored for STEP

    def __post_init__(self):
        object.__setattr__(self, "kind", CurveKind(self.kind))
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ValueError(f"depreciation rate must be finite and >= 0, got {self.rate}")

    def factor(self, delay: float) -> float:
        """Fraction of the full valuation kept when the task finishes ``delay`` after the deadline."""
        if delay <= 0:
            return 1.0
        if self.kind is CurveKind.STEP:
            return 0.0
        if self.kind is CurveKind.LINEAR:
            return max(0.0, 1.0 - self.rate * delay)
        return math.exp(-self.rate * delay)


@dataclass(frozen=True)
class PunctualityModel:
    on_time_prob: float
    late_rate: float  # rate of the exponential lateness, mean lateness 1/late_rate

    def __post_init__(self):
        if not 0.0 <= self.on_time_prob <= 1.0:
            raise ValueError(f"on_time_prob must lie in [0, 1], got {self.on_time_prob}")
        if not (self.late_rate > 0 and math.isfinite(self.late_rate)):
            raise ValueError(f"late_rate must be finite and > 0, got {self.late_rate}")


@dataclass(frozen=True)
class Requester:
    id: int
    value: float
    deadline: float
    depreciation: DepreciationCurve

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"requester {self.id}: value must be > 0, got {self.value}")
        if not self.deadline > 0:
            raise ValueError(f"requester {self.id}: deadline must be > 0, got {self.deadline}")


@dataclass(frozen=True)
class Provider:
    id: int
    cost: float
    punctuality: PunctualityModel

    def __post_init__(self):
        if not self.cost >= 0:
            raise ValueError(f"provider {self.id}: cost must be >= 0, got {self.cost}")


@dataclass(frozen=True)
class Market:
    requesters: tuple[Requester, ...]
    providers: tuple[Provider, ...]
    capacity: int

    def __post_init__(self):
        object.__setattr__(self, "requesters", tuple(self.requesters))
        object.__setattr__(self, "providers", tuple(self.providers))
        if self.capacity < 0:
            raise ValueError(f"capacity must be >= 0, got {self.capacity}")
        for side, people in (("requester", self.requesters), ("provider", self.providers)):
            ids = [p.id for p in people]
            if len(set(ids)) != len(ids):
                raise ValueError(f"duplicate {side} ids in market")

    def requester(self, rid: int) -> Requester:
        return self._requester_index[rid]

    def provider(self, pid: int) -> Provider:
        return self._provider_index[pid]

    @cached_property
    def _requester_index(self) -> dict[int, Requester]:
        return {r.id: r for r in self.requesters}

    @cached_property
    def _provider_index(self) -> dict[int, Provider]:
        return {p.id: p for p in self.providers}


@dataclass(frozen=True)
class MatchSet:
    """Selected (requester id, provider id) pairs.

    Pairs are kept as a sorted tuple so that duplicates on either side stay
    visible to :func:`validate_match_set` and iteration order is stable.
    """

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(sorted((int(j), int(i)) for j, i in self.pairs)))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def requester_counts(self) -> dict[int, int]:
        """x_j for every requester appearing in the set (absent ids have x_j = 0)."""
        counts: dict[int, int] = {}
        for j, _ in self.pairs:
            counts[j] = counts.get(j, 0) + 1
        return counts

    @property
    def provider_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for _, i in self.pairs:
            counts[i] = counts.get(i, 0) + 1
        return counts


@dataclass(frozen=True)
class Verdict:
    violations: tuple[str, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def violated(self) -> str | None:
        return self.violations[0] if self.violations else None

    def __bool__(self) -> bool:
        return self.feasible


def validate_match_set(market: Market, matches: MatchSet) -> Verdict:
    """Check a match set against the capacity, one-to-one and binary constraints.

    Constraint identifiers: ``11.a`` capacity, ``11.b`` pair count equals the
    number of selected requesters and of selected providers, ``11.c`` each
    requester at most once, ``11.d`` each provider at most once, ``11.e``
    binary pair indicators (duplicated pairs).
    """
    requester_ids = {r.id for r in market.requesters}
    provider_ids = {p.id for p in market.providers}
    for j, i in matches.pairs:
        if j not in requester_ids:
            raise StructuralError(f"unknown requester id {j}")
        if i not in provider_ids:
            raise StructuralError(f"unknown provider id {i}")

    x = matches.requester_counts
    y = matches.provider_counts
    violations = []
    if any(c > 1 for c in x.values()):
        violations.append("11.c")
    if any(c > 1 for c in y.values()):
        violations.append("11.d")
    if len(set(matches.pairs)) != len(matches.pairs):
        violations.append("11.e")
    if len(matches.pairs) > market.capacity:
        violations.append("11.a")
    if not (len(x) == len(matches.pairs) == len(y)):
        violations.append("11.b")
    return Verdict(tuple(violations))


Range = tuple[float, float]


@dataclass(frozen=True)
class PopulationSpec:
    """Counts and uniform sampling ranges for a random market."""

    requesters: int = 60
    providers: int = 60
    capacity: int = 20
    value: Range = (5.0, 15.0)
    deadline: Range = (1.0, 5.0)
    depreciation_rate: Range = (0.2, 2.0)
    curves: tuple[CurveKind, ...] = (CurveKind.STEP, CurveKind.LINEAR, CurveKind.EXPONENTIAL)
    cost: Range = (2.0, 7.0)
    on_time_prob: Range = (0.6, 1.0)
    late_rate: Range = (0.5, 3.0)

    def __post_init__(self):
        for name in ("value", "deadline", "depreciation_rate", "cost", "on_time_prob", "late_rate"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        try:
            object.__setattr__(self, "curves", tuple(CurveKind(c) for c in self.curves))
        except ValueError as exc:
            raise ConfigError("curves", str(exc)) from None
        self.validate()

    def validate(self) -> None:
        for name in ("requesters", "providers"):
            if not _is_count(getattr(self, name)):
                raise ConfigError(name, "must be a non-negative integer")
        if not _is_count(self.capacity):
            raise ConfigError("capacity", "K must be a non-negative integer (constraint 11.a)")
        if not self.curves:
            raise ConfigError("curves", "at least one curve kind is required")
        lower_bounds = {
            "value": (0.0, False),
            "deadline": (0.0, False),
            "depreciation_rate": (0.0, True),
            "cost": (0.0, True),
            "on_time_prob": (0.0, True),
            "late_rate": (0.0, False),
        }
        for name, (bound, inclusive) in lower_bounds.items():
            rng = getattr(self, name)
            if len(rng) != 2:
                raise ConfigError(name, "range must be a [lo, hi] pair")
            lo, hi = rng
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(name, "range bounds must be finite")
            if lo > hi:
                raise ConfigError(name, f"lo={lo} exceeds hi={hi}")
            if lo < bound or (lo == bound and not inclusive):
                op = ">=" if inclusive else ">"
                raise ConfigError(name, f"lower bound must be {op} {bound}, got {lo}")
        if self.on_time_prob[1] > 1.0:
            raise ConfigError("on_time_prob", "upper bound must be <= 1")


def _is_count(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value >= 0


def _uniform(rng: np.random.Generator, bounds: Range, n: int) -> np.ndarray:
    lo, hi = bounds
    return rng.uniform(lo, hi, size=n)


def generate_population(spec: PopulationSpec, seed: int | np.random.SeedSequence) -> Market:
    """Sample a market with i.i.d. uniform participant attributes.

    The draw order is fixed, so the result is a pure function of ``(spec, seed)``.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    n, m = spec.requesters, spec.providers

    values = _uniform(rng, spec.value, n)
    deadlines = _uniform(rng, spec.deadline, n)
    rates = _uniform(rng, spec.depreciation_rate, n)
    kinds = rng.integers(0, len(spec.curves), size=n)
    costs = _uniform(rng, spec.cost, m)
    on_time = _uniform(rng, spec.on_time_prob, m)
    late = _uniform(rng, spec.late_rate, m)

    requesters = tuple(
        Requester(j, float(values[j]), float(deadlines[j]),
                  DepreciationCurve(spec.curves[kinds[j]], float(rates[j])))
        for j in range(n)
    )
    providers = tuple(
        Provider(i, float(costs[i]), PunctualityModel(float(on_time[i]), float(late[i])))
        for i in range(m)
    )
    return Market(requesters, providers, spec.capacity)


def submarket(market: Market, requester_ids: Iterable[int], provider_ids: Iterable[int],
              capacity: int | None = None) -> Market:
    """Restrict ``market`` to the given ids, keeping original ids for tie-breaking."""
    rset, pset = set(requester_ids), set(provider_ids)
    return Market(
        tuple(r for r in market.requesters if r.id in rset),
        tuple(p for p in market.providers if p.id in pset),
        market.capacity if capacity is None else capacity,
    )
