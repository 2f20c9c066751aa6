"""Observables of a class distribution and ensemble statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinetic import ClassSystem


class DegenerateDistributionError(ValueError):
    pass


class DegenerateSeriesError(ValueError):
    pass


def total_income(x, incomes) -> float:
    return float(np.dot(x, incomes))


def gini(x, incomes) -> float:
    """Gini index of the grouped distribution: ``sum_{i<j} x_i x_j (r_j - r_i) / mu``."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(incomes, dtype=float)
    mu = x @ r
    if not mu > 0:
        raise DegenerateDistributionError(f"total income must be positive, got {mu}")
    diff = np.abs(r[:, None] - r[None, :])
    return float(0.5 * (x @ diff @ x) / mu)


def mobility(x, sys: ClassSystem, eps: float = 1e-9) -> float:
    """Average probability per unit time of moving up one class.

    Normalised by the population of the interior classes ``1 - x_1 - x_n``.
    """
    x = np.asarray(x, dtype=float)
    interior = 1.0 - x[0] - x[-1]
    if interior < eps:
        raise DegenerateDistributionError(
            f"x_1 + x_n = {x[0] + x[-1]:.17g}; mobility undefined without interior classes"
        )
    # sum over payers k = 1..n and receivers i = 2..n-1 of p_ki x_k x_i
    s = x @ sys.p[:, 1:-1] @ x[1:-1]
    return float(sys.ratio * s / interior)


def pearson(a, b, rtol: float = 1e-10) -> float:
    """Sample Pearson correlation.

    A series whose spread is below ``rtol`` times its magnitude counts as
    constant (e.g. total income under income-conserving noise, which only
    wanders at round-off level).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("series must be 1-d and of equal length")
    if a.size < 3:
        raise ValueError("need at least 3 samples")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("series contain non-finite values")
    for name, s in (("first", a), ("second", b)):
        if np.ptp(s) <= rtol * max(np.abs(s).max(), 1e-300):
            raise DegenerateSeriesError(f"{name} series is constant")
    da = a - a.mean()
    db = b - b.mean()
    r = (da @ db) / math.sqrt((da @ da) * (db @ db))
    return float(min(1.0, max(-1.0, r)))


@dataclass
class Histogram:
    """Counts on half-open bins ``[left, right)`` of a grid anchored at zero."""

    bin_width: float
    lefts: np.ndarray
    counts: np.ndarray

    @property
    def rights(self) -> np.ndarray:
        return self.lefts + self.bin_width

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def mode(self) -> float:
        """Left edge of the fullest bin."""
        return float(self.lefts[np.argmax(self.counts)])


def histogram(samples, bin_width: float) -> Histogram:
    if not bin_width > 0:
        raise ValueError(f"bin_width must be > 0, got {bin_width}")
    v = np.asarray(samples, dtype=float).ravel()
    if v.size == 0:
        return Histogram(bin_width, np.empty(0), np.empty(0, dtype=int))
    idx = np.floor(v / bin_width).astype(np.int64)
    # bin edges are idx * width; move samples sitting on the wrong side of an edge
    idx[v < idx * bin_width] -= 1
    idx[v >= (idx + 1) * bin_width] += 1
    lo = int(idx.min())
    counts = np.bincount(idx - lo)
    lefts = (np.arange(counts.size) + lo) * bin_width
    return Histogram(bin_width, lefts, counts)


def observables(states, sys: ClassSystem) -> dict[str, np.ndarray]:
    """``mu``, ``gini`` and ``mobility`` series for an array of states.

    Mobility is NaN where it is undefined.
    """
    states = np.atleast_2d(states)
    mu = states @ sys.incomes
    g = np.array([gini(x, sys.incomes) for x in states])
    m = np.empty(len(states))
    for j, x in enumerate(states):
        try:
            m[j] = mobility(x, sys)
        except DegenerateDistributionError:
            m[j] = np.nan
    return {"mu": mu, "gini": g, "mobility": m}


@dataclass
class EnsembleSummary:
    means: np.ndarray
    stds: np.ndarray
    n_samples: int
    realizations: int
    histograms: dict[int, Histogram] = field(default_factory=dict)
    correlations: dict[str, list[float | None]] = field(default_factory=dict)

    def mean_correlation(self, label: str) -> float | None:
        vals = [c for c in self.correlations.get(label, []) if c is not None]
        return float(np.mean(vals)) if vals else None


def _safe_pearson(a, b):
    try:
        return pearson(a, b)
    except (DegenerateSeriesError, ValueError):
        return None


def summarize_ensemble(trajectories, sys: ClassSystem | None = None,
                       hist_classes=(3,), bin_width: float = 0.005) -> EnsembleSummary:
    """Pool the sampled states of all trajectories into per-class statistics.

    Standard deviations are population (ddof=0) deviations of the pooled
    samples. Histograms are built for the 1-based classes in ``hist_classes``.
    With ``sys`` given, per-realization correlations ``mu~gini`` and
    ``gini~mobility`` are included (None where a series is constant).
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("need at least one trajectory")
    pooled = np.concatenate([t.states for t in trajectories])
    hists = {c: histogram(pooled[:, c - 1], bin_width) for c in hist_classes}
    corr: dict[str, list[float | None]] = {}
    if sys is not None:
        corr = {"mu~gini": [], "gini~mobility": []}
        for t in trajectories:
            obs = observables(t.states, sys)
            corr["mu~gini"].append(_safe_pearson(obs["mu"], obs["gini"]))
            corr["gini~mobility"].append(_safe_pearson(obs["gini"], obs["mobility"]))
    return EnsembleSummary(
        means=pooled.mean(axis=0),
        stds=pooled.std(axis=0),
        n_samples=len(pooled),
        realizations=len(trajectories),
        histograms=hists,
        correlations=corr,
    )
