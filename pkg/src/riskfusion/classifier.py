"""Gaussian classifier with one covariance matrix shared by all classes.

A shared covariance makes the quadratic term of the class log-likelihoods
identical across classes, so the decision boundaries are linear.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

__all__ = [
    "FitError",
    "LabeledMatrix",
    "ClassifierModel",
    "default_ridge",
    "fit",
    "log_posterior",
    "posterior",
    "classify",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "riskfusion-pooled-gaussian/1"


class FitError(ArithmeticError):
    """The regularised pooled covariance is not positive definite."""


@dataclass(frozen=True)
class LabeledMatrix:
    """Feature rows with integer class labels.

    ``indices`` records which rows of the source matrix were taken, so two
    splits can be compared for alignment.
    """

    X: np.ndarray
    y: np.ndarray
    indices: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (n, d) and y must hold n labels")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.X.shape[0]


@dataclass(frozen=True)
class ClassifierModel:
    class_means: np.ndarray  # (C, d)
    chol: np.ndarray  # lower Cholesky factor of the regularised covariance
    log_prior: np.ndarray  # (C,)
    ridge: float

    @property
    def n_classes(self):
        return self.class_means.shape[0]

    @property
    def dim(self):
        return self.class_means.shape[1]

    @property
    def covariance(self):
        return self.chol @ self.chol.T


def default_ridge(cov):
    """``1e-6 * trace(cov) / d``."""
    return 1e-6 * float(np.trace(cov)) / cov.shape[0]


def fit(data, ridge=None, n_classes=None):
    """Estimate class means, pooled covariance and class frequencies.

    Parameters
    ----------
    data : LabeledMatrix
    ridge : float, optional
        Added to the covariance diagonal.  Defaults to
        :func:`default_ridge` of the pooled covariance.
    n_classes : int, optional
        Number of classes; ``max(label) + 1`` by default.

    Raises
    ------
    FitError
        If a class has fewer than two rows or the covariance is not positive
        definite after adding the ridge.
    """
    X, y = data.X, data.y
    C = int(y.max()) + 1 if n_classes is None else int(n_classes)
    if np.any(y < 0) or np.any(y >= C):
        raise ValueError(f"labels must lie in [0, {C})")
    counts = np.bincount(y, minlength=C)
    if np.any(counts < 2):
        raise FitError(f"every class needs at least two rows (counts: {counts.tolist()})")
    means = np.stack([X[y == c].mean(axis=0) for c in range(C)])
    dev = X - means[y]
    cov = dev.T @ dev / (X.shape[0] - C)
    if ridge is None:
        ridge = default_ridge(cov)
    elif ridge < 0:
        raise ValueError("ridge must be nonnegative")
    cov = cov + ridge * np.eye(cov.shape[0])
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise FitError(
            f"pooled covariance is not positive definite with ridge={ridge:g}; "
            "use a larger ridge"
        ) from None
    return ClassifierModel(means, chol, np.log(counts / counts.sum()), float(ridge))


def log_posterior(model, X):
    """Log class posteriors for one row ``(d,)`` or a matrix ``(n, d)``."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} features, got {X.shape[1]}")
    # whitened coordinates; the |z_x|^2 term is common to all classes and dropped
    z_x = solve_triangular(model.chol, X.T, lower=True).T
    z_mu = solve_triangular(model.chol, model.class_means.T, lower=True).T
    scores = z_x @ z_mu.T - 0.5 * np.sum(z_mu ** 2, axis=1) + model.log_prior
    out = scores - logsumexp(scores, axis=1, keepdims=True)
    return out[0] if single else out


def posterior(model, X):
    return np.exp(log_posterior(model, X))


def classify(model, X):
    """Most probable class; ties go to the lowest index."""
    return np.argmax(log_posterior(model, X), axis=-1)


def save_model(model, path):
    path = Path(path)
    with path.open("wb") as fh:
        np.savez(
            fh,
            format=np.array(MODEL_FORMAT),
            class_means=model.class_means,
            chol=model.chol,
            log_prior=model.log_prior,
            ridge=np.array(model.ridge),
        )


def load_model(path):
    with np.load(Path(path), allow_pickle=False) as data:
        fmt = str(data["format"])
        if fmt != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {fmt!r}")
        return ClassifierModel(
            data["class_means"], data["chol"], data["log_prior"], float(data["ridge"])
        )
