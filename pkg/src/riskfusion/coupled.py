"""Coupled (deformed) logarithm, exponential and related functions.

Every function here is parametrised by the nonlinear statistical coupling
``kappa``.  ``kappa = 0`` recovers the ordinary ``log``/``exp``; the Tsallis
index is ``q = 1 - kappa``.  Positive coupling lowers the cost assigned to a
probability, negative coupling raises it.

Functions accept scalars or numpy arrays and return the same shape.
"""

import math

import numpy as np

__all__ = [
    "KAPPA_EPS",
    "check_kappa",
    "as_prob_vector",
    "coupled_log",
    "coupled_exp",
    "kappa_power",
    "coupled_probability",
    "coupled_moment",
]

# Below this magnitude the exact kappa = 0 forms are used.  The expm1/log1p
# formulations below are accurate well inside this, so the switch is only
# there to avoid a division by zero.
KAPPA_EPS = 1e-12

PROB_ATOL = 1e-9


def check_kappa(kappa):
    """Return ``kappa`` as a float, rejecting NaN and infinities."""
    kappa = float(kappa)
    if not math.isfinite(kappa):
        raise ValueError(f"coupling must be finite, got {kappa}")
    return kappa


def as_prob_vector(p, atol=PROB_ATOL):
    """Validate a discrete distribution and return it as a float array."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("a probability vector must be one-dimensional and non-empty")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    total = p.sum()
    if abs(total - 1.0) > atol:
        raise ValueError(f"probabilities must sum to 1 (sum={total!r})")
    return p


def coupled_log(x, kappa):
    """Coupled logarithm ``(x**kappa - 1) / kappa``.

    Evaluated as ``expm1(kappa * log(x)) / kappa`` so there is no
    cancellation as ``kappa`` approaches zero.

    Raises
    ------
    ValueError
        If any ``x <= 0``.
    """
    kappa = check_kappa(kappa)
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("coupled_log is defined for x > 0 only")
    log_x = np.log(x)
    if abs(kappa) < KAPPA_EPS:
        out = log_x
    else:
        with np.errstate(over="ignore"):
            out = np.expm1(kappa * log_x) / kappa
    return out[()] if out.ndim == 0 else out


def coupled_exp(x, kappa):
    """Coupled exponential ``(1 + kappa*x)_+ ** (1/kappa)``.

    The base is clamped at zero.  A clamped base gives 0 for positive
    coupling and ``inf`` for negative coupling (the pole of the negative
    branch).
    """
    kappa = check_kappa(kappa)
    x = np.asarray(x, dtype=float)
    if abs(kappa) < KAPPA_EPS:
        with np.errstate(over="ignore"):
            out = np.exp(x)
        return out[()] if out.ndim == 0 else out
    base = 1.0 + kappa * x
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.exp(np.log1p(kappa * x) / kappa)
    out = np.where(base > 0, out, 0.0 if kappa > 0 else np.inf)
    return out[()] if out.ndim == 0 else out


def kappa_power(x, n, kappa):
    """N-fold coupled product of ``x`` with itself.

    ``(n * x**kappa - (n - 1)) ** (1/kappa)``, with the bracket clamped at
    zero the same way :func:`coupled_exp` clamps its base.  At zero coupling
    this is ``x**n``.
    """
    kappa = check_kappa(kappa)
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("kappa_power is defined for x > 0 only")
    if abs(kappa) < KAPPA_EPS:
        out = x ** n
        return out[()] if out.ndim == 0 else out
    # n*x**k - (n-1) == 1 + n*(x**k - 1)
    shifted = n * np.expm1(kappa * np.log(x))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.exp(np.log1p(shifted) / kappa)
    out = np.where(1.0 + shifted > 0, out, 0.0 if kappa > 0 else np.inf)
    return out[()] if out.ndim == 0 else out


def _escort_weights(p, exponent):
    # zero probabilities are outside the support and keep zero weight for
    # every exponent
    support = p > 0
    w = np.zeros_like(p)
    logs = exponent * np.log(p[support])
    w[support] = np.exp(logs - logs.max())
    total = w.sum()
    if not total > 0:
        raise ArithmeticError("deformed distribution has no mass")
    return w / total


def coupled_probability(p, kappa):
    """Coupled (escort) distribution ``p**(1-kappa) / sum(p**(1-kappa))``."""
    kappa = check_kappa(kappa)
    p = as_prob_vector(p)
    return _escort_weights(p, 1.0 - kappa)


def coupled_moment(x, p, n, kappa):
    """Coupled moment of order ``n``.

    The averaging distribution is ``p**(1 - n*kappa)`` renormalised, i.e. the
    coupling is scaled by the moment order.
    """
    kappa = check_kappa(kappa)
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    x = np.asarray(x, dtype=float)
    p = as_prob_vector(p)
    if x.shape != p.shape:
        raise ValueError(f"x and p differ in length ({x.size} vs {p.size})")
    w = _escort_weights(p, 1.0 - n * kappa)
    support = w > 0
    return float(np.sum(x[support] ** n * w[support]))
