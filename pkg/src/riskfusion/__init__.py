"""Coupled-surprisal scoring rules and alpha-beta probability fusion."""

from .coupled import coupled_exp, coupled_log, coupled_moment, coupled_probability, kappa_power
from .entropy import (
    INFINITE,
    EntropyForm,
    generalized_mean,
    normalized_tsallis,
    renyi_entropy,
    tsallis_entropy,
    tsallis_via_mean,
)
from .fusion import FusionParams, RiskParams, fuse, fuse_from_risk, fuse_log, preset
from .scoring import (
    RiskProfile,
    ScoreSummary,
    brier_score,
    coupled_surprisal,
    effective_probability,
    named_metrics,
    risk_profile,
)

__version__ = "0.1.0"
