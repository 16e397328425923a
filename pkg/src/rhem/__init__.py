"""Relational hyperevent toolkit: simulate, censor, fit.

Multi-sender/single-receiver interaction histories can be generated
from an intensity model, collapsed into right-censored wave panels, and
fit with penalized binomial-cloglog or censored-Poisson GAMs.
"""

from .censoring import (
    CensoredPanel,
    WaveGrid,
    build_panel,
    covariate_at_strategy,
    right_censor,
    wave_counts,
)
from .design import (
    DesignSystem,
    LinearTerm,
    ModelSpec,
    RandomInterceptTerm,
    SmoothTerm,
    build_design,
)
from .errors import (
    DegenerateInputError,
    FitDiagnosticError,
    InvalidInputError,
    RhemError,
    UnsupportedModelError,
)
from .estimator import CensoredHazardGAM, EventPanelBuilder
from .events import (
    Actor,
    EventHistory,
    Hyperevent,
    RiskSet,
    Violation,
    enumerate_risk_set,
    validate_history,
)
from .fitting import (
    FitResult,
    fit_censored_poisson,
    fit_model,
    fit_poisson_counts,
    pirls,
    select_smoothing,
    smooth_effect,
)
from .simulate import (
    IntensityModel,
    SimConfig,
    intensity,
    simulate_gillespie,
    simulate_tau_leap,
)
from .splines import bspline_basis
from .statistics import (
    StatisticSpec,
    avg_age,
    compute_panel_statistics,
    cyclic_closure,
    girl_alter,
    girl_ego,
    hyper_degree,
    receiver_balance,
    receiver_degree,
    reciprocity,
    repetition,
    sender_balance,
    sender_degree,
    subset_repetition,
    transitive_closure,
)
from .survey import hyperevents_from_nominations, sender_groups_from_friendship

__version__ = "0.1.0"

__all__ = [
    "Actor",
    "CensoredHazardGAM",
    "CensoredPanel",
    "DegenerateInputError",
    "DesignSystem",
    "EventHistory",
    "EventPanelBuilder",
    "FitDiagnosticError",
    "FitResult",
    "Hyperevent",
    "IntensityModel",
    "InvalidInputError",
    "LinearTerm",
    "ModelSpec",
    "RandomInterceptTerm",
    "RhemError",
    "RiskSet",
    "SimConfig",
    "SmoothTerm",
    "StatisticSpec",
    "UnsupportedModelError",
    "Violation",
    "WaveGrid",
    "avg_age",
    "bspline_basis",
    "build_design",
    "build_panel",
    "compute_panel_statistics",
    "covariate_at_strategy",
    "cyclic_closure",
    "enumerate_risk_set",
    "fit_censored_poisson",
    "fit_model",
    "fit_poisson_counts",
    "girl_alter",
    "girl_ego",
    "hyper_degree",
    "hyperevents_from_nominations",
    "intensity",
    "pirls",
    "receiver_balance",
    "receiver_degree",
    "reciprocity",
    "repetition",
    "right_censor",
    "select_smoothing",
    "sender_balance",
    "sender_degree",
    "sender_groups_from_friendship",
    "simulate_gillespie",
    "simulate_tau_leap",
    "smooth_effect",
    "subset_repetition",
    "transitive_closure",
    "validate_history",
    "wave_counts",
]
