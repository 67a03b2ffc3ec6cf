import math

import pytest

from eswm.model import CurveKind, DepreciationCurve, Provider, PunctualityModel, Requester


def make_requester(value=10.0, kind=CurveKind.STEP, rate=0.0, rid=0, deadline=1.0):
    return Requester(rid, value, deadline, DepreciationCurve(kind, rate))


def make_provider(p=1.0, mu=1.0, cost=0.0, pid=0):
    return Provider(pid, cost, PunctualityModel(p, mu))


def linear_late_factor(rate, mu):
    """Hand-derived E[max(0, 1 - rate*d)] for d ~ Exp(mu)."""
    if rate == 0:
        return 1.0
    return 1.0 - (rate / mu) * (1.0 - math.exp(-mu / rate))


@pytest.fixture
def requester():
    return make_requester


@pytest.fixture
def provider():
    return make_provider


@pytest.fixture(scope="session")
def default_reselection():
    """Default reselection experiment (60+60 pool, K=20, 30 epochs, 200 replications)."""
    from eswm.config import ExperimentConfig
    from eswm.sim import run_experiment

    return run_experiment(ExperimentConfig(mode="reselection"))


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, passed: bool, detail: str) -> bool:
    """Record one PASS/FAIL line for the acceptance summary."""
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
