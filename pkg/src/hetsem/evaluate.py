"""Graph-recovery metrics and the kernel conditional-variance diagnostic.

Directed-edge recovery is scored over ordered node pairs (j -> l and l -> j
count as separate decisions). The variance diagnostic estimates Var(X | z)
on a grid by Nadaraya-Watson smoothing; a flat curve for every node is the
observable signature of a z-independent data-generating mechanism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .model import EdgeIndicators


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    tpr: float
    fdr: float
    mcc: float

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "tpr": self.tpr, "fdr": self.fdr, "mcc": self.mcc,
        }


@dataclass(frozen=True)
class VarianceCurve:
    grid: np.ndarray
    estimate: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class FlatnessResult:
    flat: bool
    score: float
    lower: np.ndarray
    upper: np.ndarray


def _as_edge_matrix(g) -> np.ndarray:
    if isinstance(g, EdgeIndicators):
        return g.r
    return EdgeIndicators(np.asarray(g)).r


def structure_metrics(truth, estimate) -> MetricsReport:
    """Confusion counts and TPR/FDR/MCC over all ordered pairs j != l.

    Conventions: FDR = 0 when nothing is predicted, TPR = 0 when the true
    graph is empty, MCC = 0 when its denominator vanishes.
    """
    t = _as_edge_matrix(truth)
    e = _as_edge_matrix(estimate)
    if t.shape != e.shape:
        raise InvalidArgumentError(f"graph sizes differ: {t.shape} vs {e.shape}")
    p = t.shape[0]
    off = ~np.eye(p, dtype=bool)
    t_edges = t[off].astype(bool)
    e_edges = e[off].astype(bool)
    tp = int(np.sum(t_edges & e_edges))
    fp = int(np.sum(~t_edges & e_edges))
    fn = int(np.sum(t_edges & ~e_edges))
    tn = int(np.sum(~t_edges & ~e_edges))
    tpr = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    fdr = fp / (tp + fp) if (tp + fp) > 0 else 0.0
    denom = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = (tp * tn - fp * fn) / denom if denom > 0 else 0.0
    return MetricsReport(tp, fp, tn, fn, tpr, fdr, mcc)


def ppi_roc_auc(truth, scores: np.ndarray) -> float:
    """Area under the ROC curve of edge scores, swept over all thresholds.

    Equivalent to the probability that a random true edge outscores a random
    absent edge, with ties counted half. Scores on the diagonal are ignored.
    """
    t = _as_edge_matrix(truth)
    s = np.asarray(scores, dtype=float)
    if t.shape != s.shape:
        raise InvalidArgumentError(f"score matrix shape {s.shape} does not match graph {t.shape}")
    off = ~np.eye(t.shape[0], dtype=bool)
    labels = t[off].astype(bool)
    vals = s[off]
    pos, neg = vals[labels], vals[~labels]
    if pos.size == 0 or neg.size == 0:
        raise InvalidArgumentError("ROC AUC needs at least one true and one absent edge")
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((greater + 0.5 * ties) / (pos.size * neg.size))


def silverman_bandwidth(z: np.ndarray) -> float:
    """Silverman's rule-of-thumb bandwidth for a Gaussian kernel."""
    z = np.asarray(z, dtype=float)
    n = z.size
    sd = float(np.std(z, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(z, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread_candidates = [s for s in (sd, iqr / 1.34) if s > 0]
    if not spread_candidates:
        raise InvalidArgumentError("covariate has no spread; conditional structure undefined")
    return 0.9 * min(spread_candidates) * n ** (-0.2)


def _kernel_moments(x: np.ndarray, z: np.ndarray, grid: np.ndarray, bandwidth: float):
    u = (grid[:, None] - z[None, :]) / bandwidth
    w = np.exp(-0.5 * u * u)
    total = w.sum(axis=1)
    m1 = (w @ x) / total
    m2 = (w @ (x * x)) / total
    return m1, m2


def kernel_conditional_variance(
    x: np.ndarray,
    z: np.ndarray,
    grid: np.ndarray | None = None,
    bandwidth: float | None = None,
    grid_points: int = 40,
) -> VarianceCurve:
    """Nadaraya-Watson estimate of Var(X | z) on a grid.

    Var(X|z0) = m2(z0) - m1(z0)^2 with kernel-weighted moment estimates and a
    Gaussian kernel. The default grid spans the central 90% of the observed z.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if x.size != z.size:
        raise InvalidArgumentError("x and z must have equal length")
    if x.size < 10:
        raise InvalidArgumentError(f"need at least 10 observations, got {x.size}")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(z)
    if grid is None:
        lo, hi = np.percentile(z, [5.0, 95.0])
        if hi <= lo:
            raise InvalidArgumentError("covariate has no spread; conditional structure undefined")
        grid = np.linspace(lo, hi, grid_points)
    else:
        grid = np.asarray(grid, dtype=float).reshape(-1)
        if grid.min() < z.min() or grid.max() > z.max():
            raise InvalidArgumentError("grid must lie inside the observed covariate range")
    m1, m2 = _kernel_moments(x, z, grid, bandwidth)
    est = np.maximum(m2 - m1 * m1, 0.0)
    return VarianceCurve(grid=grid, estimate=est, bandwidth=float(bandwidth))


def flatness_test(
    curve: VarianceCurve,
    x: np.ndarray,
    z: np.ndarray,
    reps: int = 200,
    coverage: float = 0.95,
    rng: np.random.Generator | None = None,
) -> FlatnessResult:
    """Bootstrap band around the variance curve; flat iff a horizontal line fits.

    Resamples (x, z) pairs with replacement and re-estimates the curve with
    the same grid and bandwidth. The band is calibrated simultaneously over
    the grid (sup of studentized deviations), so "some constant lies inside
    the band everywhere" is a level-`coverage` statement about the whole
    curve, not one grid point at a time. The score is the curve's range
    divided by its median level.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if reps < 20:
        raise InvalidArgumentError("need at least 20 bootstrap replications")
    if x.size < 10:
        raise InvalidArgumentError("too few observations to bootstrap")
    if rng is None:
        rng = np.random.default_rng(0)
    boot = np.empty((reps, curve.grid.size))
    n = x.size
    for b in range(reps):
        idx = rng.integers(0, n, size=n)
        m1, m2 = _kernel_moments(x[idx], z[idx], curve.grid, curve.bandwidth)
        boot[b] = np.maximum(m2 - m1 * m1, 0.0)
    center = boot.mean(axis=0)
    sd = np.maximum(boot.std(axis=0, ddof=1), 1e-12)
    sup_dev = np.abs((boot - center) / sd).max(axis=1)
    width = float(np.quantile(sup_dev, coverage))
    lower = curve.estimate - width * sd
    upper = curve.estimate + width * sd
    flat = bool(lower.max() <= upper.min())
    level = float(np.median(curve.estimate))
    score = float((curve.estimate.max() - curve.estimate.min()) / max(abs(level), 1e-12))
    return FlatnessResult(flat=flat, score=score, lower=lower, upper=upper)
