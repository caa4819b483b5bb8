"""Handwritten-digit fusion experiment.

One pooled-covariance classifier per mfeat feature set, their test
posteriors fused with the alpha-beta rule and the fused true-class
probabilities scored.  Results are plain records; :func:`write_csv` turns
them into the fixed CSV schemas used by the command line.
"""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifier, dataset
from .fusion import DEFAULT_FLOOR, PRESETS, FusionParams, fuse_log
from .scoring import DECISIVE, ROBUST, brier_score, default_kappa_grid, effective_probability

__all__ = [
    "METRICS",
    "RunConfig",
    "SourcePosteriors",
    "frange",
    "source_posteriors",
    "single_set_errors",
    "alpha_sweep",
    "grid",
    "optimal_cells",
    "risk_profiles",
    "histograms",
    "fused_true_probs",
    "format_value",
    "write_csv",
]

log = logging.getLogger(__name__)

# metric -> coupling of its effective probability (None: Brier, scored as is)
METRICS = {
    "shannon": 0.0,
    "brier": None,
    "decisive": DECISIVE,
    "robust": ROBUST,
}


def frange(lo, hi, step):
    """Inclusive arithmetic grid with values rounded to 10 decimals."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) + 0.0 for i in range(n + 1)]


@dataclass
class RunConfig:
    cache_dir: Path
    base_url: str = dataset.DEFAULT_BASE_URL
    split: dataset.SplitSpec = field(default_factory=dataset.SplitSpec)
    ridge: float | None = None
    floor: float = DEFAULT_FLOOR
    kappas: list = field(default_factory=lambda: default_kappa_grid().tolist())
    out_dir: Path = Path("results")
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.floor <= 1e-3:
            raise ValueError("probability floor must lie in (0, 1e-3]")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.cache_dir = Path(self.cache_dir)
        self.out_dir = Path(self.out_dir)


@dataclass(frozen=True)
class SourcePosteriors:
    """Test-set log posteriors of every feature-set classifier."""

    names: tuple
    log_post: np.ndarray  # (sources, samples, classes)
    labels: np.ndarray  # (samples,)
    dims: tuple

    def select(self, names):
        idx = [self.names.index(n) for n in names]
        return SourcePosteriors(
            tuple(names), self.log_post[idx], self.labels, tuple(self.dims[i] for i in idx)
        )


def source_posteriors(feature_sets, split=dataset.SplitSpec(), ridge=None):
    """Train one classifier per feature set and score the test rows."""
    names, logs, dims, labels = [], [], [], None
    for name, fs in feature_sets.items():
        train, test = dataset.split(fs, split)
        model = classifier.fit(train, ridge=ridge, n_classes=dataset.N_CLASSES)
        logs.append(classifier.log_posterior(model, test.X))
        names.append(name)
        dims.append(fs.dim)
        labels = test.y
    return SourcePosteriors(tuple(names), np.stack(logs), labels, tuple(dims))


def _errors(log_post, labels):
    return int(np.sum(np.argmax(log_post, axis=-1) != labels))


def single_set_errors(sp):
    """Test misclassifications of each source on its own."""
    return [
        {"set_name": n, "dim": d, "misclassified": _errors(lp, sp.labels)}
        for n, d, lp in zip(sp.names, sp.dims, sp.log_post)
    ]


def alpha_sweep(sp, alphas, beta=0.0, floor=DEFAULT_FLOOR):
    """Fused misclassifications for each alpha at fixed beta."""
    return [
        {"alpha": a, "misclassified": _errors(fuse_log(sp.log_post, FusionParams(a, beta), floor=floor), sp.labels)}
        for a in alphas
    ]


def _true_probs(log_fused, labels):
    return np.exp(log_fused[np.arange(labels.size), labels])


def _metric_value(p_true, metric):
    kappa = METRICS[metric]
    if kappa is None:
        return brier_score(p_true)
    return effective_probability(p_true, kappa)


def _grid_row(args):
    log_post, labels, alpha, betas, metrics, floor = args
    rows = []
    for beta in betas:
        fused = fuse_log(log_post, FusionParams(alpha, beta), floor=floor)
        errors = _errors(fused, labels)
        p_true = _true_probs(fused, labels)
        for metric in metrics:
            rows.append((metric, alpha, beta, _metric_value(p_true, metric), errors))
    return rows


def grid(sp, alphas, betas, metrics=tuple(METRICS), floor=DEFAULT_FLOOR, workers=1):
    """Evaluate every (alpha, beta) cell under each metric.

    Returns ``{metric: [record, ...]}`` with records ordered by alpha then
    beta.  ``value`` is the effective probability for the coupled metrics
    (higher is better) and the mean Brier score for ``brier`` (lower is
    better); ``is_optimal`` marks the best cell, the first one on ties.
    The result does not depend on ``workers``.
    """
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}")
    tasks = [(sp.log_post, sp.labels, a, list(betas), list(metrics), floor) for a in alphas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_grid_row, tasks))
    else:
        chunks = [_grid_row(t) for t in tasks]
    out = {m: [] for m in metrics}
    for chunk in chunks:
        for metric, a, b, value, errors in chunk:
            out[metric].append(
                {"alpha": a, "beta": b, "value": value, "misclassified": errors, "is_optimal": 0}
            )
    for metric, records in out.items():
        sign = 1.0 if METRICS[metric] is None else -1.0
        best = min(range(len(records)), key=lambda i: sign * records[i]["value"])
        records[best]["is_optimal"] = 1
    return out


def optimal_cells(grid_result):
    """``{metric: (alpha, beta)}`` of the marked optimum."""
    return {
        m: next((r["alpha"], r["beta"]) for r in records if r["is_optimal"])
        for m, records in grid_result.items()
    }


def fused_true_probs(sp, params, floor=DEFAULT_FLOOR):
    return _true_probs(fuse_log(sp.log_post, params, floor=floor), sp.labels)


def _methods(extra):
    methods = dict(PRESETS)
    if extra is not None:
        a, b = extra
        methods[f"alpha-beta({a:g},{b:g})"] = FusionParams(a, b)
    return methods


def risk_profiles(sp, kappas, extra=None, floor=DEFAULT_FLOOR):
    """Effective probability versus coupling for the presets plus ``extra``."""
    rows = []
    for name, params in _methods(extra).items():
        p = fused_true_probs(sp, params, floor)
        rows += [{"method": name, "kappa": k, "p_eff": effective_probability(p, k)} for k in kappas]
    return rows


def histograms(sp, extra=None, bins=20, floor=DEFAULT_FLOOR):
    """Counts of fused true-class probabilities on uniform bins of [0, 1]."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    rows = []
    for name, params in _methods(extra).items():
        counts, _ = np.histogram(fused_true_probs(sp, params, floor), bins=edges)
        rows += [
            {"method": name, "bin_lo": float(lo), "bin_hi": float(hi), "count": int(c)}
            for lo, hi, c in zip(edges[:-1], edges[1:], counts)
        ]
    return rows


def format_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, fieldnames, rows):
    """Write ``rows`` with a fixed header and round-trip float formatting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for r in rows:
        writer.writerow([format_value(r[f]) for f in fieldnames])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path
