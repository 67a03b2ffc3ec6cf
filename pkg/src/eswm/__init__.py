"""Expected-social-welfare-maximizing (ESWM) mechanism for deadline-sensitive crowdsourcing."""

from eswm.model import (
    ConfigError,
    CurveKind,
    DepreciationCurve,
    Market,
    MatchSet,
    PopulationSpec,
    Provider,
    PunctualityModel,
    Requester,
    StructuralError,
    Verdict,
    generate_population,
    validate_match_set,
)
from eswm.valuation import (
    CompletionTime,
    depreciated_value,
    expected_value,
    expected_value_monte_carlo,
    sample_completion,
)
from eswm.mechanism import (
    MechanismOutcome,
    Objective,
    PairWeight,
    PaymentPolicy,
    compute_weights,
    realize_round,
    select_winners_greedy,
)
from eswm.oracle import OracleResult, SizeError, solve_exact

__version__ = "0.1.0"

__all__ = [
    "CompletionTime",
    "ConfigError",
    "CurveKind",
    "DepreciationCurve",
    "Market",
    "MatchSet",
    "MechanismOutcome",
    "Objective",
    "OracleResult",
    "PairWeight",
    "PaymentPolicy",
    "PopulationSpec",
    "Provider",
    "PunctualityModel",
    "Requester",
    "SizeError",
    "StructuralError",
    "Verdict",
    "compute_weights",
    "depreciated_value",
    "expected_value",
    "expected_value_monte_carlo",
    "generate_population",
    "realize_round",
    "sample_completion",
    "select_winners_greedy",
    "solve_exact",
    "validate_match_set",
]
