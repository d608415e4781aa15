"""Exact weighted norms on finitely generated groups, norm towers built by
central-power overrides, and finite-window dimension diagnostics."""

from .coins import LayeredCoins
from .construction import (
    HomSpec,
    LemmaCertificate,
    LemmaParams,
    LemmaStepResult,
    TowerState,
    TowerVerificationError,
    ZStageNorm,
    build_tower,
    choose_p,
    choose_params,
    find_h1,
    lemma_step,
    limit_norm,
    slope_lower_bound,
    verify_lemma_conditions,
)
from .dimlab import (
    CoverSolution,
    DilatationResult,
    WitnessReport,
    control_function_estimate,
    hom_dilatation,
    is_dilatation,
    validate_cover,
    witness_report,
)
from .errors import BudgetExceededError, CacheFormatError, ConfigError, GroupMismatchError
from .groups import Element, GroupDescriptor, center_generator, identity, parse_group
from .metrics import (
    AnalyticL1Norm,
    CentralOverrideNorm,
    EnvelopeReport,
    FiniteMetricSpace,
    NormHandle,
    ProperNormReport,
    WeightGeneratedNorm,
    WeightSystem,
    WordNorm,
    ball,
    closed_form_norm,
    coarse_envelopes,
    load_norm_cache,
    norm_from_weights,
    s_components,
    save_norm_cache,
    verify_proper_norm,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticL1Norm",
    "BudgetExceededError",
    "CacheFormatError",
    "CentralOverrideNorm",
    "ConfigError",
    "CoverSolution",
    "DilatationResult",
    "Element",
    "EnvelopeReport",
    "FiniteMetricSpace",
    "GroupDescriptor",
    "GroupMismatchError",
    "HomSpec",
    "LayeredCoins",
    "LemmaCertificate",
    "LemmaParams",
    "LemmaStepResult",
    "NormHandle",
    "ProperNormReport",
    "TowerState",
    "TowerVerificationError",
    "WeightGeneratedNorm",
    "WeightSystem",
    "WitnessReport",
    "WordNorm",
    "ZStageNorm",
    "ball",
    "build_tower",
    "center_generator",
    "choose_p",
    "choose_params",
    "closed_form_norm",
    "coarse_envelopes",
    "control_function_estimate",
    "find_h1",
    "hom_dilatation",
    "identity",
    "is_dilatation",
    "lemma_step",
    "limit_norm",
    "load_norm_cache",
    "norm_from_weights",
    "parse_group",
    "s_components",
    "save_norm_cache",
    "slope_lower_bound",
    "validate_cover",
    "verify_proper_norm",
    "witness_report",
]
