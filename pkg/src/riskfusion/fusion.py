"""Alpha-beta fusion of per-source class posteriors.

For each class the source probabilities are combined with a weighted power
mean (power ``alpha``), raised to ``W**beta`` with ``W`` the total source
weight, multiplied by the class prior and renormalised over classes.
``alpha`` sets how strongly disagreeing sources are smoothed; ``beta`` the
effective number of independent sources (0: one, 1: all of them).

Everything runs on log probabilities.  Arrays put sources on the first axis
and classes on the last, so a batch of samples is ``(sources, samples,
classes)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .entropy import log_power_mean

__all__ = [
    "DEFAULT_FLOOR",
    "DegenerateFusionError",
    "FusionParams",
    "RiskParams",
    "PRESETS",
    "preset",
    "fuse_log",
    "fuse",
    "fuse_from_risk",
]

DEFAULT_FLOOR = 1e-12


class DegenerateFusionError(ArithmeticError):
    """Every class scored zero, so the fused posterior cannot be normalised."""


@dataclass(frozen=True)
class FusionParams:
    alpha: float
    beta: float
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if any(not (v > 0 and math.isfinite(v)) for v in w):
                raise ValueError("source weights must be positive and finite")
            object.__setattr__(self, "weights", w)

    def source_weights(self, n_sources):
        if self.weights is None:
            return np.ones(n_sources)
        if len(self.weights) != n_sources:
            raise ValueError(f"{len(self.weights)} weights given for {n_sources} sources")
        return np.asarray(self.weights)


@dataclass(frozen=True)
class RiskParams:
    """Fusion expressed as risk biases on input, fusion and output.

    Source weights are ``1 - kappa_i``, the mean power is ``kappa_fusion``
    and the output confidence ``W**(beta - 1)`` equals ``1 - kappa_output``.
    """

    kappa_inputs: tuple[float, ...]
    kappa_fusion: float = 0.0
    kappa_output: float = 0.0

    def __post_init__(self):
        k = tuple(float(v) for v in self.kappa_inputs)
        if not k:
            raise ValueError("at least one input coupling is required")
        if any(not 1.0 - v > 0 for v in k):
            raise ValueError("every input coupling must be below 1")
        if not 1.0 - self.kappa_output > 0:
            raise ValueError("output coupling must be below 1")
        object.__setattr__(self, "kappa_inputs", k)

    @property
    def weights(self):
        return 1.0 - np.asarray(self.kappa_inputs)

    @property
    def total_weight(self):
        return float(self.weights.sum())

    def to_fusion_params(self):
        """Equivalent :class:`FusionParams`, solving ``W**(beta-1) = 1 - kappa_o``."""
        W = self.total_weight
        if W == 1.0:
            if self.kappa_output != 0.0:
                raise ValueError("with unit total weight only kappa_output = 0 has a beta")
            beta = 1.0
        else:
            beta = 1.0 + math.log(1.0 - self.kappa_output) / math.log(W)
        # clean up rounding at the ends of the admissible range
        if abs(beta) < 1e-12:
            beta = 0.0
        elif abs(beta - 1.0) < 1e-12:
            beta = 1.0
        return FusionParams(self.kappa_fusion, beta, tuple(self.weights.tolist()))


PRESETS = {
    "naive-bayes": FusionParams(0.0, 1.0),
    "log-average": FusionParams(0.0, 0.0),
    "average": FusionParams(1.0, 0.0),
}


def preset(name):
    """Fusion parameters of a classic combining rule.

    ``naive-bayes`` (0, 1), ``log-average`` (0, 0) or ``average`` (1, 0).
    """
    try:
        return PRESETS[name.lower().replace("_", "-")]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _prepare(log_posteriors, log_prior, floor):
    lp = np.asarray(log_posteriors, dtype=float)
    if lp.ndim < 2:
        raise ValueError("posteriors need a source axis and a class axis")
    if not 0 < floor < 1:
        raise ValueError("probability floor must lie in (0, 1)")
    lp = np.maximum(lp, math.log(floor))
    n_classes = lp.shape[-1]
    if log_prior is None:
        log_prior = np.full(n_classes, -math.log(n_classes))
    log_prior = np.asarray(log_prior, dtype=float)
    if log_prior.shape != (n_classes,):
        raise ValueError("prior and posteriors disagree on the number of classes")
    return lp, log_prior


def _normalise(scores):
    with np.errstate(invalid="ignore"):
        log_z = logsumexp(scores, axis=-1, keepdims=True)
    if np.any(~np.isfinite(log_z)):
        raise DegenerateFusionError("all classes have zero fused score")
    return scores - log_z


def _fused_scores(lp, log_prior, alpha, log_w, exponent):
    log_mean = log_power_mean(lp, alpha, log_w, axis=0)
    return exponent * log_mean + log_prior


def fuse_log(log_posteriors, params, log_prior=None, floor=DEFAULT_FLOOR):
    """Fuse log posteriors; returns the normalised log fused posterior.

    Parameters
    ----------
    log_posteriors : array_like, shape (S, ..., C)
        Per-source log posteriors.  Entries below ``log(floor)`` (including
        ``-inf``) are raised to it.
    params : FusionParams
    log_prior : array_like, shape (C,), optional
        Log class prior, uniform by default.  It multiplies the fused
        likelihood and is not raised to the fusion exponent.
    floor : float
        Probability floor applied to every source entry.
    """
    lp, log_prior = _prepare(log_posteriors, log_prior, floor)
    w = params.source_weights(lp.shape[0])
    W = w.sum()
    return _normalise(_fused_scores(lp, log_prior, params.alpha, np.log(w / W), W ** params.beta))


def fuse(posteriors, params, prior=None, floor=DEFAULT_FLOOR):
    """Fuse per-source posteriors given as probabilities.

    ``posteriors`` has shape ``(S, C)`` or ``(S, N, C)``; see
    :func:`fuse_log`.
    """
    with np.errstate(divide="ignore"):
        lp = np.log(np.asarray(posteriors, dtype=float))
        log_prior = None if prior is None else np.log(np.asarray(prior, dtype=float))
    return np.exp(fuse_log(lp, params, log_prior, floor))


def fuse_from_risk(posteriors, risk, prior=None, floor=DEFAULT_FLOOR):
    """Fuse using input/fusion/output couplings directly.

    The power mean with weights ``1 - kappa_i`` and power ``kappa_fusion`` is
    raised to ``W * (1 - kappa_output)``.
    """
    with np.errstate(divide="ignore"):
        lp = np.log(np.asarray(posteriors, dtype=float))
        log_prior = None if prior is None else np.log(np.asarray(prior, dtype=float))
    lp, log_prior = _prepare(lp, log_prior, floor)
    w = risk.weights
    if w.size != lp.shape[0]:
        raise ValueError(f"{w.size} input couplings given for {lp.shape[0]} sources")
    W = w.sum()
    exponent = W * (1.0 - risk.kappa_output)
    scores = _fused_scores(lp, log_prior, risk.kappa_fusion, np.log(w / W), exponent)
    return np.exp(_normalise(scores))
