"""Instrumental-variable causal mediation with binary treatment, mediator and instrument."""
from .errors import (
    AllReplicatesFailed,
    DegeneracyError,
    DomainError,
    EmptyCell,
    InputError,
    InvalidPopulation,
    ScenarioError,
    SingularDesign,
    WeakInstrument,
)
from .estimators import bootstrap, estimate_effects_iv, estimate_effects_si, estimate_theta_iv
from .harness import McConfig, McReport, run_mc
from .oracle import (
    assumption_report,
    gap_report,
    iv_mediation_estimands,
    population_theta_iv,
    si_probability_limits,
    true_effect_set,
)
from .population import (
    MediatorResponse,
    OutcomeProfile,
    Population,
    Stratum,
    build_paper_counterexample,
    validate,
)
from .sampler import Dataset, draw

__version__ = "0.1.0"
