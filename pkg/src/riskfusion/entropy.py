"""Generalized means and the Tsallis / Renyi entropies built on them."""

import enum
import math

import numpy as np

from .coupled import KAPPA_EPS, as_prob_vector, check_kappa, coupled_log, coupled_probability

__all__ = [
    "INFINITE",
    "EntropyForm",
    "log_power_mean",
    "generalized_mean",
    "tsallis_entropy",
    "normalized_tsallis",
    "renyi_entropy",
    "tsallis_via_mean",
]

# Returned where a cost is legitimately infinite (a zero probability under a
# non-positive coupling).  Callers branch on it with math.isinf.
INFINITE = math.inf


class EntropyForm(enum.Enum):
    """The three equivalent ways of writing the Tsallis entropy."""

    SURPRISAL_AVERAGE = "surprisal_average"  # sum p ln_k(1/p)
    NEG_LOG_AVERAGE = "neg_log_average"  # -sum p ln_{-k}(p)
    COUPLED_WEIGHTED = "coupled_weighted"  # -sum p^(1-k) ln_k(p)


def log_power_mean(log_x, alpha, log_w=None, axis=0):
    """Logarithm of the weighted power mean, computed from ``log(x)``.

    Parameters
    ----------
    log_x : array_like
        Logarithms of the samples.  ``-inf`` encodes a zero sample.
    alpha : float
        Power of the mean; 0 selects the geometric mean.
    log_w : array_like, optional
        Log of the normalised weights, broadcastable against ``log_x`` along
        ``axis``.  Uniform weights when omitted.
    axis : int
        Axis to average over.

    Returns
    -------
    ndarray
        ``log M_alpha``.  ``-inf`` where a zero sample meets ``alpha <= 0``.

    Notes
    -----
    For small ``|alpha * log x|`` the mean is evaluated as
    ``log1p(sum w expm1(alpha log x)) / alpha``, which stays accurate as
    ``alpha -> 0``.  Otherwise a max-shifted log-sum-exp is used.
    """
    log_x = np.asarray(log_x, dtype=float)
    if log_w is None and log_x.ndim == 1:
        return _log_power_mean_1d(log_x, alpha)
    n = log_x.shape[axis]
    if log_w is None:
        log_w = np.full(n, -math.log(n))
        has_weight = None
    else:
        log_w = np.asarray(log_w, dtype=float)
        has_weight = log_w > -np.inf
    if log_w.ndim == 1 and log_x.ndim > 1:
        shape = [1] * log_x.ndim
        shape[axis] = n
        log_w = log_w.reshape(shape)
        if has_weight is not None:
            has_weight = has_weight.reshape(shape)
    w = np.exp(log_w)

    def weighted(values, empty):
        # zero-weight samples drop out even where their value is inf or nan
        return values if has_weight is None else np.where(has_weight, values, empty)

    if abs(alpha) < KAPPA_EPS:
        with np.errstate(invalid="ignore"):
            return np.sum(weighted(w * log_x, 0.0), axis=axis)

    scaled = alpha * log_x
    # chosen per output slot so a result never depends on its batch neighbours
    small = weighted(np.abs(scaled) <= 1.0, True).all(axis=axis)
    s = np.sum(weighted(w * np.expm1(np.clip(scaled, -1.0, 1.0)), 0.0), axis=axis)
    out = np.log1p(s) / alpha
    if not small.all():
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            t = weighted(scaled + log_w, -np.inf)
            # log-sum-exp with a max shift; scipy's version costs more than
            # the arithmetic on the short vectors scored here
            m = np.max(t, axis=axis, keepdims=True)
            m = np.where(np.isfinite(m), m, 0.0)
            far = (np.log(np.sum(np.exp(t - m), axis=axis)) + np.squeeze(m, axis)) / alpha
        out = np.where(small, out, far)
    if alpha < 0:
        # a weighted zero sample drives a negative-power mean to zero
        zero_hit = weighted(log_x == -np.inf, False).any(axis=axis)
        out = np.where(zero_hit, -np.inf, out)
    return out


def _log_power_mean_1d(log_x, alpha):
    # uniform-weight vector case of log_power_mean; the scoring hot path
    if abs(alpha) < KAPPA_EPS:
        return np.float64(log_x.mean())
    if alpha < 0 and log_x.min() == -np.inf:
        return np.float64(-np.inf)
    scaled = alpha * log_x
    lo, hi = scaled.min(), scaled.max()
    if -1.0 <= lo and hi <= 1.0:
        return np.float64(math.log1p(np.expm1(scaled).mean()) / alpha)
    if hi == -np.inf:
        return np.float64(-np.inf)
    with np.errstate(under="ignore"):
        return np.float64((hi + math.log(np.exp(scaled - hi).mean())) / alpha)


def generalized_mean(values, alpha, weights=None, return_status=False):
    """Weighted power mean ``(sum (w/W) x**alpha) ** (1/alpha)``.

    ``alpha = 0`` gives the weighted geometric mean.  Zero-weight samples are
    ignored.

    If a positively weighted sample is 0 and ``alpha <= 0`` the mean is 0;
    with ``return_status=True`` a ``(value, degenerate)`` pair is returned so
    callers can tell this case apart.
    """
    alpha = check_kappa(alpha)
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("values must be a non-empty 1-d sequence")
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("values must be nonnegative")
    if weights is None:
        w = np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != x.shape:
            raise ValueError("weights and values differ in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if not total > 0:
        raise ValueError("total weight must be positive")

    with np.errstate(divide="ignore"):
        log_x = np.log(x)
        log_w = np.log(w / total)
    degenerate = bool(alpha <= 0 and np.any((x == 0) & (w > 0)))
    if degenerate:
        value = 0.0
    else:
        value = float(np.exp(log_power_mean(log_x, alpha, log_w)))
    if return_status:
        return value, degenerate
    return value


def tsallis_entropy(p, kappa, form=EntropyForm.SURPRISAL_AVERAGE):
    """Tsallis entropy in coupling notation.

    All three :class:`EntropyForm` variants give the same value.  Zero
    probabilities contribute nothing.
    """
    kappa = check_kappa(kappa)
    p = as_prob_vector(p)
    q = p[p > 0]
    form = EntropyForm(form)
    if form is EntropyForm.SURPRISAL_AVERAGE:
        terms = q * coupled_log(1.0 / q, kappa)
    elif form is EntropyForm.NEG_LOG_AVERAGE:
        terms = -q * coupled_log(q, -kappa)
    else:
        terms = -(q ** (1.0 - kappa)) * coupled_log(q, kappa)
    return float(np.sum(terms))


def normalized_tsallis(p, kappa):
    """Normalized Tsallis entropy ``-sum P_k,i ln_k(p_i)``.

    The averaging weights are the coupled probabilities.  A zero probability
    at ``kappa <= 0`` has unbounded coupled surprisal and the result is
    :data:`INFINITE`.
    """
    kappa = check_kappa(kappa)
    p = as_prob_vector(p)
    if kappa <= 0 and np.any(p == 0):
        return INFINITE
    weights = coupled_probability(p, kappa)
    support = p > 0
    return float(-np.sum(weights[support] * coupled_log(p[support], kappa)))


def renyi_entropy(p, kappa):
    """Renyi entropy ``-ln M_{-kappa}(p; weights=p)``.

    Equal to ``(1/kappa) ln sum p**(1-kappa)`` and to the Shannon entropy at
    zero coupling.  Zero probabilities carry zero weight and are ignored.
    """
    kappa = check_kappa(kappa)
    p = as_prob_vector(p)
    mean, degenerate = generalized_mean(p, -kappa, weights=p, return_status=True)
    if degenerate or mean == 0.0:
        return INFINITE
    # rounding can push a one-hot input a hair below zero
    return max(0.0, -math.log(mean))


def tsallis_via_mean(p, kappa):
    """Tsallis entropy as the coupled log of the power mean of ``1/p``.

    ``ln_k(M_k(1/p; weights=p))``.  Identical to :func:`tsallis_entropy`;
    kept as an independent route for checking it.
    """
    kappa = check_kappa(kappa)
    p = as_prob_vector(p)
    if np.any(p == 0):
        raise ValueError("tsallis_via_mean needs strictly positive probabilities")
    with np.errstate(over="raise"):
        m = generalized_mean(1.0 / p, kappa, weights=p)
    return float(coupled_log(m, kappa))
