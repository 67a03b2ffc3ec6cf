"""Time-depreciated task value and its expectation under provider punctuality.

A provider finishes on time with probability ``p``; otherwise the task is
late by ``delta ~ Exponential(mu)``. The requester keeps ``v * f(delta)``
where ``f`` is its depreciation curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from eswm.model import CurveKind, DepreciationCurve, Provider, PunctualityModel, Requester

_QUAD_EPSABS = 1e-9
_TAIL = 60.0


@dataclass(frozen=True)
class CompletionTime:
    delay: float | None = None  # None marks on-time completion

    def __post_init__(self):
        if self.delay is not None and self.delay < 0:
            raise ValueError(f"late delay must be >= 0, got {self.delay}")

    @property
    def on_time(self) -> bool:
        return self.delay is None

    @property
    def effective_delay(self) -> float:
        return 0.0 if self.delay is None else self.delay


ON_TIME = CompletionTime()


def depreciated_value(requester: Requester, completion: CompletionTime) -> float:
    return requester.value * requester.depreciation.factor(completion.effective_delay)


def sample_completion(provider: Provider, rng: np.random.Generator) -> CompletionTime:
    punct = provider.punctuality
    if rng.random() < punct.on_time_prob:
        return ON_TIME
    return CompletionTime(float(rng.exponential(1.0 / punct.late_rate)))


def sample_delays(punctuality: PunctualityModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_completion`: effective delays, 0 for on-time draws."""
    on_time = rng.random(n) < punctuality.on_time_prob
    delays = rng.exponential(1.0 / punctuality.late_rate, size=n)
    delays[on_time] = 0.0
    return delays


def curve_factors(curve: DepreciationCurve, delays: np.ndarray) -> np.ndarray:
    delays = np.asarray(delays, dtype=float)
    if curve.kind is CurveKind.STEP:
        return np.where(delays > 0, 0.0, 1.0)
    if curve.kind is CurveKind.LINEAR:
        return np.clip(1.0 - curve.rate * delays, 0.0, 1.0)
    return np.exp(-curve.rate * delays)


def expected_late_factor_numeric(curve: DepreciationCurve, late_rate: float) -> float:
    """E[f(delta)] for delta ~ Exponential(late_rate) by adaptive quadrature.

    Works for any curve kind; the STEP curve is zero for every positive delay.
    """
    if curve.kind is CurveKind.STEP:
        return 0.0
    density = lambda d: curve.factor(d) * late_rate * math.exp(-late_rate * d)  # noqa: E731
    if curve.kind is CurveKind.LINEAR and curve.rate > 0:
        # support ends at 1/rate; past _TAIL mean lateness the density mass is < exp(-_TAIL)
        upper = min(1.0 / curve.rate, _TAIL / late_rate)
    else:
        upper = np.inf
    value, _ = integrate.quad(density, 0.0, upper, epsabs=_QUAD_EPSABS, epsrel=1e-10, limit=200)
    return min(1.0, max(0.0, value))


def expected_late_factor(curve: DepreciationCurve, late_rate: float) -> float:
    if curve.kind is CurveKind.STEP:
        return 0.0
    if curve.kind is CurveKind.EXPONENTIAL:
        return late_rate / (late_rate + curve.rate)
    return expected_late_factor_numeric(curve, late_rate)


def expected_value(requester: Requester, provider: Provider) -> float:
    """Expected task valuation E_i(v_j(t)) of ``requester``'s task done by ``provider``."""
    p = provider.punctuality.on_time_prob
    late = expected_late_factor(requester.depreciation, provider.punctuality.late_rate)
    return requester.value * (p + (1.0 - p) * late)


def _linear_late_factors(ratio: np.ndarray) -> np.ndarray:
    """E[max(0, 1 - lam*delta)] for delta ~ Exp(mu), as a function of ratio = mu / lam.

    With u = mu * delta this is the integral of (1 - u/ratio) * exp(-u) over
    [0, ratio], truncated at _TAIL and rescaled to [0, 1] so all ratios share
    one adaptive quadrature.
    """
    ratio = np.asarray(ratio, dtype=float)
    if ratio.size == 0:
        return ratio.copy()
    upper = np.minimum(ratio, _TAIL)
    value, _ = integrate.quad_vec(lambda t: upper * (1.0 - t * upper / ratio) * np.exp(-t * upper),
                                  0.0, 1.0, epsabs=_QUAD_EPSABS, epsrel=1e-10, norm="max")
    return np.clip(value, 0.0, 1.0)


def expected_value_matrix(requesters: Sequence[Requester], providers: Sequence[Provider]) -> np.ndarray:
    """Matrix of :func:`expected_value`, rows indexed by requester position, columns by provider."""
    n, m = len(requesters), len(providers)
    if n == 0 or m == 0:
        return np.zeros((n, m))
    values = np.array([r.value for r in requesters])[:, None]
    rates = np.array([r.depreciation.rate for r in requesters])[:, None]
    kinds = [r.depreciation.kind for r in requesters]
    p = np.array([w.punctuality.on_time_prob for w in providers])[None, :]
    mu = np.array([w.punctuality.late_rate for w in providers])[None, :]

    late = np.zeros((n, m))
    expo = np.array([k is CurveKind.EXPONENTIAL for k in kinds])
    late[expo] = (mu / (mu + rates))[expo]
    lin = np.array([k is CurveKind.LINEAR for k in kinds])
    if lin.any():
        lin_rates = np.broadcast_to(rates, (n, m))[lin]
        lin_mu = np.broadcast_to(mu, (n, m))[lin]
        block = np.ones_like(lin_mu)  # rate 0: the value never depreciates
        pos = lin_rates > 0
        block[pos] = _linear_late_factors(lin_mu[pos] / lin_rates[pos])
        late[lin] = block
    return values * (p + (1.0 - p) * late)


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float
    samples: int


def expected_value_monte_carlo(requester: Requester, provider: Provider, samples: int,
                               rng: np.random.Generator) -> MonteCarloEstimate:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    delays = sample_delays(provider.punctuality, samples, rng)
    values = requester.value * curve_factors(requester.depreciation, delays)
    stderr = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return MonteCarloEstimate(float(values.mean()), stderr, samples)
