"""Least-squares fitting of the threshold models, plus the data-cleaning
steps used on raw staircase output (IQR outlier removal and per-subject
baseline adjustment)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .csf import AttentionLevel, ThresholdModel, UnifiedModel


class FitError(ValueError):
    """Fit is underdetermined or the normal equations are singular."""


@dataclass(frozen=True)
class ThresholdSample:
    """One measured contrast (or slope) threshold."""

    eccentricity: float
    attention: AttentionLevel
    contrast: float
    subject_id: str = ""
    repetition: int = 0

    def __post_init__(self):
        object.__setattr__(self, "attention", AttentionLevel.parse(self.attention))
        if not 0 < self.contrast <= 1:
            raise ValueError("contrast must lie in (0, 1]")
        if self.eccentricity <= 0:
            raise ValueError("eccentricity must be positive")


@dataclass(frozen=True)
class FitReport:
    parameters: ThresholdModel | UnifiedModel
    r_squared: float
    dof_adjusted_r_squared: float
    residuals: np.ndarray = field(repr=False)


def _cell_means(samples: Sequence[ThresholdSample]):
    """Mean contrast per (eccentricity, attention) cell, sorted."""
    cells: dict[tuple[float, AttentionLevel], list[float]] = {}
    for s in samples:
        cells.setdefault((s.eccentricity, s.attention), []).append(s.contrast)
    keys = sorted(cells, key=lambda k: (k[1].as_continuous, k[0]))
    return keys, np.array([np.mean(cells[k]) for k in keys])


def _r_squared(y, yhat):
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else -np.inf
    return 1.0 - ss_res / ss_tot


def _adjusted(r2, n, k):
    if n <= k:
        return float("nan")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - k)


def fit_per_condition(
    samples: Sequence[ThresholdSample],
    attention,
    on_means: bool = True,
) -> FitReport:
    """Fit threshold(e) = p0*sqrt(e) + p1 for one attention condition.

    By default the fit runs on the per-eccentricity cell means, which is
    what the published parameters were derived from; pass on_means=False
    to weight every sample individually.  Closed-form normal equations on
    the basis {sqrt(e), 1}.
    """
    attention = AttentionLevel.parse(attention)
    subset = [s for s in samples if s.attention is attention]
    if on_means:
        keys, y = _cell_means(subset)
        e = np.array([k[0] for k in keys])
    else:
        e = np.array([s.eccentricity for s in subset])
        y = np.array([s.contrast for s in subset])
    if len(np.unique(e)) < 2:
        raise FitError("need >= 2 distinct eccentricities for the given attention level")

    x = np.sqrt(e)
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise FitError("eccentricity design is rank deficient")
    p0 = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    p1 = float(y.mean() - p0 * x.mean())

    model = ThresholdModel(p0=p0, p1=p1, attention=attention)
    r2 = _r_squared(y, p0 * x + p1)
    sample_e = np.array([s.eccentricity for s in subset])
    sample_y = np.array([s.contrast for s in subset])
    residuals = sample_y - (p0 * np.sqrt(sample_e) + p1)
    return FitReport(model, r2, _adjusted(r2, len(y), 2), residuals)


def _unified_design(e, a_c, gamma_i):
    b = np.sqrt(e) - np.sqrt(7.0)
    ws = np.sqrt(a_c)
    wi = np.power(a_c, gamma_i)
    return np.column_stack([(1 - ws) * b, ws * b, 1 - wi, wi])


def _unified_solve(e, a_c, y, gamma_i):
    X = _unified_design(e, a_c, gamma_i)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < 4:
        raise FitError("unified fit is singular; need >= 2 attention levels and eccentricities")
    rss = float(np.sum((y - X @ coef) ** 2))
    return coef, rss


def fit_unified(
    samples: Sequence[ThresholdSample],
    on_means: bool = True,
    gamma_i_bracket: tuple[float, float] = (1e-3, 3.0),
    tol: float = 1e-4,
) -> FitReport:
    """Fit the joint eccentricity/attention model to threshold data.

    With the slope exponent fixed at 0.5 the model is linear in
    (s0, s1, i0, i1) for any given intercept exponent gamma_i, so the fit
    profiles gamma_i: a coarse grid over the bracket followed by
    golden-section refinement, with a closed-form least-squares solve
    inside.  The DoF-adjusted R^2 counts 5 free parameters.
    """
    if on_means:
        keys, y = _cell_means(list(samples))
        e = np.array([k[0] for k in keys])
        a_c = np.array([k[1].as_continuous for k in keys])
    else:
        e = np.array([s.eccentricity for s in samples])
        a_c = np.array([s.attention.as_continuous for s in samples])
        y = np.array([s.contrast for s in samples])

    if len({s.attention for s in samples}) < 2 or len(np.unique(e)) < 2:
        raise FitError("unified fit needs >= 2 attention levels and >= 2 eccentricities")

    lo, hi = gamma_i_bracket
    grid = np.linspace(lo, hi, 61)
    rss_grid = [_unified_solve(e, a_c, y, g)[1] for g in grid]
    g_best = grid[int(np.argmin(rss_grid))]
    step = grid[1] - grid[0]
    a, b = max(lo, g_best - step), min(hi, g_best + step)

    invphi = (np.sqrt(5.0) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _unified_solve(e, a_c, y, c)[1]
    fd = _unified_solve(e, a_c, y, d)[1]
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = _unified_solve(e, a_c, y, c)[1]
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = _unified_solve(e, a_c, y, d)[1]
    gamma_i = (a + b) / 2
    coef, _ = _unified_solve(e, a_c, y, gamma_i)

    model = UnifiedModel(
        s0=float(coef[0]), s1=float(coef[1]), i0=float(coef[2]), i1=float(coef[3]),
        gamma_i=float(gamma_i),
    )
    X = _unified_design(e, a_c, gamma_i)
    r2 = _r_squared(y, X @ coef)
    sample_e = np.array([s.eccentricity for s in samples])
    sample_a = np.array([s.attention.as_continuous for s in samples])
    sample_y = np.array([s.contrast for s in samples])
    residuals = sample_y - _unified_design(sample_e, sample_a, gamma_i) @ coef
    return FitReport(model, r2, _adjusted(r2, len(y), 5), residuals)


def detect_outliers_iqr(values: Sequence[float], k: float = 4.0):
    """Partition values into (kept, removed) by quartile offset.

    A value is removed when it lies more than k interquartile ranges
    below Q1 or above Q3.  With IQR = 0 (heavily tied data) the bounds
    degenerate to [Q1, Q3], so anything off the quartiles themselves is
    removed; that matches treating ties as the reference mass.  Returns
    index arrays into `values`.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        raise ValueError("need at least 4 values for quartile-based screening")
    q1, q3 = np.percentile(v, [25, 75])
    iqr = q3 - q1
    lo, hi = q1 - k * iqr, q3 + k * iqr
    keep = (v >= lo) & (v <= hi)
    return np.flatnonzero(keep), np.flatnonzero(~keep)


def baseline_adjust(
    samples: Sequence[ThresholdSample], baseline_prediction: float
) -> list[ThresholdSample]:
    """Rescale every subject's thresholds to a common low-attention base.

    Each subject's measurements are multiplied by
    baseline_prediction / (that subject's mean low-attention threshold),
    removing between-subject sensitivity offsets while preserving each
    subject's attention gain ratios exactly.
    """
    if baseline_prediction <= 0:
        raise ValueError("baseline_prediction must be positive")
    low_by_subject: dict[str, list[float]] = {}
    for s in samples:
        if s.attention is AttentionLevel.LOW:
            low_by_subject.setdefault(s.subject_id, []).append(s.contrast)

    out = []
    for s in samples:
        if s.subject_id not in low_by_subject:
            raise ValueError(f"subject {s.subject_id!r} has no low-attention measurement")
        factor = baseline_prediction / float(np.mean(low_by_subject[s.subject_id]))
        out.append(replace(s, contrast=s.contrast * factor))
    return out
