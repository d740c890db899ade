"""Performance measures, AUC summaries, improvement percentages, and the
rank-based pairwise significance test with false-discovery-rate correction."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats as sps


@dataclass
class CurvePoint:
    M: int
    value: float


@dataclass
class PairwiseTestResult:
    method_a: str
    method_b: str
    z: float
    p_raw: float
    p_adjusted: float
    significant: bool


def rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def cc(pred, truth) -> float:
    """Pearson correlation; 0 by convention when either vector is constant.

    Constancy is detected via the range (max - min == 0): the std of a
    constant vector is not exactly zero in floating point because the mean
    rounds, which would otherwise turn 0/0 into correlation noise.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.size < 2:
        raise ValueError(f"need two equal-length vectors, got {pred.shape} vs {truth.shape}")
    if cc_degenerate(pred, truth):
        return 0.0
    return float(np.mean((pred - pred.mean()) * (truth - truth.mean()))
                 / (pred.std() * truth.std()))


def cc_degenerate(pred, truth) -> bool:
    """True when cc() hits the constant-vector convention."""
    return float(np.ptp(pred)) == 0.0 or float(np.ptp(truth)) == 0.0


def auc(curve: list[CurvePoint]) -> float:
    """Trapezoidal area under value(M) over the sample-budget grid."""
    if len(curve) < 2:
        raise ValueError("need at least 2 curve points")
    ms = np.asarray([p.M for p in curve], dtype=np.float64)
    vals = np.asarray([p.value for p in curve], dtype=np.float64)
    steps = np.diff(ms)
    if not (steps > 0).all():
        raise ValueError("curve points must have strictly increasing M")
    return float(0.5 * ((vals[1:] + vals[:-1]) * steps).sum())


def normalize_auc(aucs: dict[str, float], baseline: str) -> dict[str, float]:
    if baseline not in aucs:
        raise ValueError(f"baseline {baseline!r} missing from {sorted(aucs)}")
    ref = aucs[baseline]
    if ref == 0.0:
        raise ValueError("baseline AUC is zero")
    out = {method: value / ref for method, value in aucs.items()}
    out[baseline] = 1.0
    return out


def percentage_improvement(value: float, baseline: float,
                           smaller_is_better: bool) -> float:
    if baseline == 0.0:
        raise ValueError("baseline must be nonzero")
    if smaller_is_better:
        return 100.0 * (baseline - value) / baseline
    return 100.0 * (value - baseline) / baseline


def dunn_fdr(samples: dict[str, list[float]], alpha: float = 0.05
             ) -> list[PairwiseTestResult]:
    """All-pairs rank test (joint ranking, tie-corrected z) with step-up
    false-discovery-rate adjustment of the two-sided p-values.

    Significance follows the alpha/2 rejection convention on adjusted p.
    """
    methods = sorted(samples)
    if len(methods) < 2:
        raise ValueError("need at least 2 methods")
    sizes = {m: len(samples[m]) for m in methods}
    if min(sizes.values()) < 2:
        raise ValueError("every method needs at least 2 observations")
    values = np.concatenate([np.asarray(samples[m], dtype=np.float64)
                             for m in methods])
    ranks = sps.rankdata(values)
    n_tot = len(values)
    _, counts = np.unique(values, return_counts=True)
    tie_term = float(((counts ** 3) - counts).sum()) / (12.0 * (n_tot - 1))
    var_base = n_tot * (n_tot + 1) / 12.0 - tie_term
    mean_ranks = {}
    start = 0
    for m in methods:
        mean_ranks[m] = float(ranks[start:start + sizes[m]].mean())
        start += sizes[m]

    pairs = list(combinations(methods, 2))
    zs, raws = [], []
    for a, b in pairs:
        se_sq = var_base * (1.0 / sizes[a] + 1.0 / sizes[b])
        if se_sq <= 0.0:
            z = 0.0
        else:
            z = (mean_ranks[a] - mean_ranks[b]) / np.sqrt(se_sq)
        zs.append(float(z))
        raws.append(float(2.0 * sps.norm.sf(abs(z))))
    adjusted = _bh_adjust(raws)
    return [PairwiseTestResult(method_a=a, method_b=b, z=z, p_raw=p,
                               p_adjusted=q, significant=bool(q < alpha / 2.0))
            for (a, b), z, p, q in zip(pairs, zs, raws, adjusted)]


def _bh_adjust(p_values: list[float]) -> list[float]:
    """Benjamini-Hochberg step-up adjusted p-values (monotone, capped at 1)."""
    m = len(p_values)
    order = np.argsort(p_values, kind="stable")
    adjusted = np.empty(m)
    running = 1.0
    for rank in range(m - 1, -1, -1):
        idx = order[rank]
        running = min(running, p_values[idx] * m / (rank + 1))
        adjusted[idx] = running
    return adjusted.tolist()
