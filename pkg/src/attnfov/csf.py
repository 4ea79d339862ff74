"""Attention-aware contrast threshold and sensitivity models.

Peripheral contrast discrimination thresholds rise when the viewer has to
commit attention to a foveal task.  This module holds the threshold models
measured for three foveal-attention load levels, the multiplicative gain
they imply over the unattended baseline, the continuous-attention sweep
model between them, and the cortical-magnification scaling used to place
equivalent stimuli at different eccentricities.

Eccentricities are plain floats in degrees of visual angle, contrasts are
Michelson contrast in [0, 1], and sensitivities are reciprocal contrasts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import numpy as np

# Eccentricity range covered by the threshold measurements.  Evaluating the
# models outside it is allowed but flagged (see ExtrapolationWarning).
MEASURED_ECCENTRICITY_RANGE = (7.0, 21.0)


class ExtrapolationWarning(UserWarning):
    """Model evaluated outside the measured eccentricity range."""


class AttentionLevel(str, Enum):
    """Foveal attention load condition of the discrimination task."""

    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def as_continuous(self) -> float:
        """Continuous attention coordinate: low=0, medium=0.5, high=1."""
        return _ATTENTION_COORDINATE[self]

    @classmethod
    def parse(cls, value: "AttentionLevel | str") -> "AttentionLevel":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


_ATTENTION_COORDINATE = {
    AttentionLevel.LOW: 0.0,
    AttentionLevel.MEDIUM: 0.5,
    AttentionLevel.HIGH: 1.0,
}


def _flag_extrapolation(e) -> None:
    lo, hi = MEASURED_ECCENTRICITY_RANGE
    e = np.asarray(e, dtype=float)
    if np.any(e < lo) or np.any(e > hi):
        warnings.warn(
            "threshold model evaluated outside the measured eccentricity "
            f"range [{lo}, {hi}] deg; treat the value as an extrapolation",
            ExtrapolationWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class ThresholdModel:
    """Contrast threshold vs. eccentricity for one attention condition.

    threshold(e) = p0 * sqrt(e) + p1, with p0 in contrast per sqrt-degree
    and p1 in plain contrast units.
    """

    p0: float
    p1: float
    attention: AttentionLevel = AttentionLevel.LOW

    def threshold(self, e) -> np.ndarray | float:
        e = np.asarray(e, dtype=float)
        if np.any(e < 0):
            raise ValueError("eccentricity must be >= 0")
        _flag_extrapolation(e)
        t = self.p0 * np.sqrt(e) + self.p1
        return float(t) if t.ndim == 0 else t


def threshold_per_condition(model: ThresholdModel, e) -> np.ndarray | float:
    """Contrast threshold of one attention condition at eccentricity e."""
    return model.threshold(e)


@dataclass(frozen=True)
class ConditionModels:
    """The three per-condition threshold models as one record."""

    low: ThresholdModel
    medium: ThresholdModel
    high: ThresholdModel

    def __getitem__(self, attention) -> ThresholdModel:
        return getattr(self, AttentionLevel.parse(attention).value)


# Model parameters fitted to the mean measured thresholds of the main
# study (see fitting.fit_per_condition and data.MAIN_STUDY_THRESHOLDS).
DEFAULT_CONDITION_MODELS = ConditionModels(
    low=ThresholdModel(9.672e-4, 2.741e-2, AttentionLevel.LOW),
    medium=ThresholdModel(2.737e-2, -1.620e-2, AttentionLevel.MEDIUM),
    high=ThresholdModel(2.714e-2, 1.612e-2, AttentionLevel.HIGH),
)


def attention_gain(models: ConditionModels, attention, e) -> np.ndarray | float:
    """Threshold elevation of `attention` relative to the low condition.

    Returns t_a(e) / t_low(e); exactly 1.0 for the low condition.
    """
    attention = AttentionLevel.parse(attention)
    t_low = models.low.threshold(e)
    if np.any(np.asarray(t_low) <= 0):
        raise ValueError("low-attention threshold must be positive to form a gain")
    if attention is AttentionLevel.LOW:
        return np.ones_like(np.asarray(t_low, dtype=float)) if np.ndim(t_low) else 1.0
    t_a = models[attention].threshold(e)
    return t_a / t_low


class BaselineCsf(Protocol):
    """Attention-unaware contrast sensitivity provider.

    Any callable object mapping (spatial frequency cpd, eccentricity deg,
    adaptation luminance cd/m^2, stimulus area deg^2) to a unitless
    sensitivity can be plugged under the attention scaling.
    """

    def sensitivity(
        self, frequency_cpd: float, eccentricity_deg: float,
        luminance_cdm2: float = 28.0, area_deg2: float = 1.0,
    ) -> float: ...


def scale_sensitivity(
    baseline: BaselineCsf,
    models: ConditionModels,
    attention,
    e,
    frequency_cpd: float,
    luminance_cdm2: float = 28.0,
    area_deg2: float = 1.0,
):
    """Attention-aware sensitivity: baseline divided by the attention gain.

    For the low condition the baseline value is returned untouched.  The
    luminance dependence of the gain itself is not modeled; luminance only
    enters through the baseline provider (measurements hint at some gain
    compression at high adaptation luminance, so treat bright-display
    predictions as conservative).
    """
    s = baseline.sensitivity(frequency_cpd, e, luminance_cdm2, area_deg2)
    attention = AttentionLevel.parse(attention)
    if attention is AttentionLevel.LOW:
        return s
    return s / attention_gain(models, attention, e)


def lerp(alpha: float, beta: float, w):
    """Linear interpolation alpha*(1-w) + beta*w (endpoints exact)."""
    return alpha * (1.0 - np.asarray(w, dtype=float)) + beta * np.asarray(w, dtype=float)


@dataclass(frozen=True)
class UnifiedModel:
    """Joint eccentricity/attention threshold surface.

    Sweeps between the low and high curves with separate gamma-curve
    weights for the slope and intercept terms; the slope exponent is
    fixed at 0.5.  Parameterized relative to the lowest measured
    eccentricity of 7 degrees.
    """

    s0: float
    s1: float
    i0: float
    i1: float
    gamma_i: float
    gamma_s: float = 0.5

    def __post_init__(self):
        if self.gamma_s != 0.5:
            raise ValueError("gamma_s is fixed at 0.5")
        for name in ("s0", "s1", "i0", "i1", "gamma_i"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def threshold(self, e, a_c) -> np.ndarray | float:
        e = np.asarray(e, dtype=float)
        a_c = np.asarray(a_c, dtype=float)
        if np.any(e < 0):
            raise ValueError("eccentricity must be >= 0")
        if np.any(a_c < 0) or np.any(a_c > 1):
            raise ValueError("attention coordinate a_c must lie in [0, 1]")
        _flag_extrapolation(e)
        slope = lerp(self.s0, self.s1, a_c ** self.gamma_s)
        intercept = lerp(self.i0, self.i1, a_c ** self.gamma_i)
        t = slope * (np.sqrt(e) - np.sqrt(7.0)) + intercept
        return float(t) if t.ndim == 0 else t


# Parameters fitted jointly to the nine mean thresholds (fitting.fit_unified).
DEFAULT_UNIFIED_MODEL = UnifiedModel(
    s0=0.00243, s1=0.0307, i0=0.0285, i1=0.0844, gamma_i=0.771,
)


def unified_threshold(model: UnifiedModel, e, a_c) -> np.ndarray | float:
    """Contrast threshold of the joint model at (e, a_c)."""
    return model.threshold(e, a_c)


@dataclass(frozen=True)
class CorticalMagnification:
    """V1 cortical magnification M(e) = a0 / (e + e2), in mm per degree."""

    a0: float = 29.2
    e2: float = 3.67

    def mm_per_degree(self, e) -> np.ndarray | float:
        e = np.asarray(e, dtype=float)
        if np.any(e < 0):
            raise ValueError("eccentricity must be >= 0")
        m = self.a0 / (e + self.e2)
        return float(m) if m.ndim == 0 else m


def cortical_magnification(cm: CorticalMagnification, e) -> np.ndarray | float:
    return cm.mm_per_degree(e)


@dataclass(frozen=True)
class StimulusReference:
    """Anchor stimulus for cortical-magnification scaling."""

    eccentricity_deg: float
    frequency_cpd: float
    diameter_deg: float


def scale_stimulus(
    reference: StimulusReference, e, cm: CorticalMagnification = CorticalMagnification()
) -> tuple:
    """Scale a reference Gabor to eccentricity e.

    Frequency scales with M(e)/M(e_ref) and diameter with the inverse, so
    detectability stays approximately constant and the product
    frequency*diameter (cycles across the patch) is invariant.
    """
    ratio = cm.mm_per_degree(e) / cm.mm_per_degree(reference.eccentricity_deg)
    return reference.frequency_cpd * ratio, reference.diameter_deg / ratio


class CorticalFrequencyCsf:
    """Surrogate baseline CSF driven by cortically scaled frequency.

    Sensitivity depends only on phi = frequency / M(e), cycles per mm of
    cortex, falling off exponentially: S = amplitude * exp(-decay * phi).
    Calibrated so the low-attention study stimuli (2 cpd at 21 deg and its
    cortically scaled siblings, phi ~= 1.69 c/mm) sit at their measured
    threshold of ~0.031, and so sensitivity reaches 1 near the foveal
    acuity limit (30 cpd at e=0).  Luminance and area inputs are accepted
    for interface compatibility and ignored.
    """

    def __init__(self, amplitude: float | None = None, decay: float | None = None,
                 cm: CorticalMagnification = CorticalMagnification()):
        self.cm = cm
        if amplitude is None or decay is None:
            phi_ref = 2.0 / cm.mm_per_degree(21.0)      # study anchor
            s_ref = 1.0 / 0.0309                        # mean low threshold
            phi_cut = 30.0 / cm.mm_per_degree(0.0)      # S=1 at acuity limit
            decay = float(np.log(s_ref) / (phi_cut - phi_ref))
            amplitude = float(s_ref * np.exp(decay * phi_ref))
        self.amplitude = amplitude
        self.decay = decay

    def sensitivity(self, frequency_cpd, eccentricity_deg,
                    luminance_cdm2: float = 28.0, area_deg2: float = 1.0):
        phi = np.asarray(frequency_cpd, dtype=float) / self.cm.mm_per_degree(eccentricity_deg)
        s = self.amplitude * np.exp(-self.decay * phi)
        return float(s) if np.ndim(s) == 0 else s
