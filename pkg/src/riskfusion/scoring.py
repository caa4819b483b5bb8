"""Scoring rules over the probabilities reported for the true class.

A batch is simply a 1-d array of ``p_true`` values, one per test sample,
equally weighted.  The coupled-surprisal averages are reported on the
probability scale as effective probabilities: the power mean of the batch
with the coupling as the power.
"""

import math
from dataclasses import dataclass

import numpy as np

from .coupled import KAPPA_EPS, check_kappa, coupled_exp
from .entropy import INFINITE, log_power_mean

__all__ = [
    "DECISIVE",
    "NEUTRAL",
    "ROBUST",
    "RiskProfile",
    "ScoreSummary",
    "as_batch",
    "coupled_surprisal",
    "shannon_score",
    "brier_score",
    "mean_coupled_surprisal",
    "effective_probability",
    "effective_probability_from_surprisal",
    "default_kappa_grid",
    "risk_profile",
    "score_summary",
    "named_metrics",
]

DECISIVE = 0.5
NEUTRAL = 0.0
ROBUST = -0.5


@dataclass(frozen=True)
class RiskProfile:
    """Effective probability as a function of the coupling."""

    kappas: np.ndarray
    p_eff: np.ndarray

    def __iter__(self):
        return iter(zip(self.kappas.tolist(), self.p_eff.tolist()))


@dataclass(frozen=True)
class ScoreSummary:
    """Mean score of a batch under one metric.

    ``kappa`` is ``None`` for the Brier score, which has no effective
    probability (``effective_probability`` is then ``None`` as well).
    """

    metric: str
    kappa: float | None
    mean_score: float
    effective_probability: float | None


def as_batch(true_probs):
    p = np.atleast_1d(np.asarray(true_probs, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise ValueError("a scored batch is a non-empty 1-d sequence")
    # NaN fails both comparisons
    if not (p.min() >= 0 and p.max() <= 1):
        raise ValueError("true-class probabilities must lie in [0, 1]")
    return p


def coupled_surprisal(p, kappa):
    """Cost ``-ln_k(p) = (1 - p**k) / k`` of reporting ``p`` for the true class.

    A zero report costs ``1/kappa`` under positive coupling and is infinite
    otherwise.
    """
    kappa = check_kappa(kappa)
    p = np.asarray(p, dtype=float)
    if p.size and not (p.min() >= 0 and p.max() <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
    if abs(kappa) < KAPPA_EPS:
        out = -log_p
    else:
        with np.errstate(invalid="ignore"):
            out = -np.expm1(kappa * log_p) / kappa
        if kappa < 0:
            out = np.where(p == 0, INFINITE, out)
    out = out + 0.0  # no -0.0 at p == 1
    return out[()] if out.ndim == 0 else out


def shannon_score(true_probs):
    """Mean surprisal ``-mean(ln p)``; infinite if any report is 0."""
    return mean_coupled_surprisal(true_probs, 0.0)


def brier_score(true_probs):
    """Mean squared error ``mean((1 - p)**2)`` of the true-class reports."""
    p = as_batch(true_probs)
    return float(np.mean((1.0 - p) ** 2))


def mean_coupled_surprisal(true_probs, kappa):
    p = as_batch(true_probs)
    return float(np.mean(coupled_surprisal(p, kappa)))


def effective_probability(true_probs, kappa):
    """Power mean ``(mean p**kappa) ** (1/kappa)`` of the batch.

    The geometric mean at zero coupling; 0 when a report is 0 and
    ``kappa <= 0``.
    """
    kappa = check_kappa(kappa)
    p = as_batch(true_probs)
    if kappa <= 0 and p.min() == 0:
        return 0.0
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
    return float(np.exp(log_power_mean(log_p, kappa)))


def effective_probability_from_surprisal(true_probs, kappa):
    """Effective probability as ``exp_k(-mean coupled surprisal)``.

    Mathematically identical to :func:`effective_probability`; computed from
    the cost side instead of the mean side.
    """
    s = mean_coupled_surprisal(true_probs, kappa)
    if math.isinf(s):
        return 0.0
    return float(coupled_exp(-s, kappa))


def default_kappa_grid(lo=-1.0, hi=1.0, step=0.05):
    n = int(round((hi - lo) / step))
    return np.array([round(lo + i * step, 10) + 0.0 for i in range(n + 1)])


def risk_profile(true_probs, kappa_grid=None):
    """Effective probability over a strictly increasing grid of couplings."""
    p = as_batch(true_probs)
    kappas = default_kappa_grid() if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    if kappas.ndim != 1 or kappas.size == 0:
        raise ValueError("kappa grid must be a non-empty 1-d sequence")
    if np.any(np.diff(kappas) <= 0):
        raise ValueError("kappa grid must be strictly increasing")
    p_eff = np.array([effective_probability(p, k) for k in kappas])
    return RiskProfile(kappas=kappas, p_eff=p_eff)


def score_summary(true_probs, metric, kappa=None):
    """Summarise a batch under ``"shannon"``, ``"brier"`` or ``"coupled"``.

    ``"coupled"`` requires ``kappa``.
    """
    p = as_batch(true_probs)
    if metric == "brier":
        return ScoreSummary("brier", None, brier_score(p), None)
    if metric == "shannon":
        kappa = 0.0
    elif metric != "coupled" or kappa is None:
        raise ValueError(f"unknown metric {metric!r} (coupled needs a kappa)")
    kappa = check_kappa(kappa)
    return ScoreSummary(
        metric, kappa, mean_coupled_surprisal(p, kappa), effective_probability(p, kappa)
    )


def named_metrics(true_probs, decisive=DECISIVE, robust=ROBUST):
    """Decisive, neutral (Shannon) and robust summaries, in that order."""
    return {
        "decisive": score_summary(true_probs, "coupled", decisive),
        "neutral": score_summary(true_probs, "shannon"),
        "robust": score_summary(true_probs, "coupled", robust),
    }
