"""corrbern: a success-rate-reinforced Bernoulli process toolkit.

Simulation, exact finite-n distributions and moments, and desk-scale
verification of the process's limit behaviour across its diffusive,
critical, and reinforced regimes.
"""

__version__ = "0.1.0"

from .process import (
    ExactPmf,
    ModelParams,
    ProcessState,
    Trajectory,
    exact_pmf,
    exact_pmf_many,
    simulate_path,
    step,
    success_probability,
)
from .gamma_seq import (
    GammaRatioTable,
    a_asymptotic,
    a_exact,
    build_table,
    lemma_b1_sum,
    v_asymptotic,
    v_limit,
)
from .montecarlo import ExperimentPlan, ReplicateSummary, merge, run
from .exceptions import ConfigurationError, ResourceLimitError

__all__ = [
    "__version__",
    "ConfigurationError",
    "ExactPmf",
    "ExperimentPlan",
    "GammaRatioTable",
    "ModelParams",
    "ProcessState",
    "ReplicateSummary",
    "ResourceLimitError",
    "Trajectory",
    "a_asymptotic",
    "a_exact",
    "build_table",
    "exact_pmf",
    "exact_pmf_many",
    "lemma_b1_sum",
    "merge",
    "run",
    "simulate_path",
    "step",
    "success_probability",
    "v_asymptotic",
    "v_limit",
]
