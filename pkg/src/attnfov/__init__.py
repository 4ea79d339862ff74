"""Attention-aware contrast sensitivity and foveated rendering toolkit."""

from .csf import (
    AttentionLevel,
    BaselineCsf,
    ConditionModels,
    CorticalFrequencyCsf,
    CorticalMagnification,
    DEFAULT_CONDITION_MODELS,
    DEFAULT_UNIFIED_MODEL,
    StimulusReference,
    ThresholdModel,
    UnifiedModel,
    attention_gain,
    cortical_magnification,
    scale_sensitivity,
    scale_stimulus,
    threshold_per_condition,
    unified_threshold,
)
from .fitting import (
    FitReport,
    ThresholdSample,
    baseline_adjust,
    detect_outliers_iqr,
    fit_per_condition,
    fit_unified,
)
from .geometry import DisplayGeometry, study_geometry
from .stimulus import (
    GaborSpec,
    RSVPSpec,
    encode_display,
    decode_display,
    gabor_image,
    rsvp_sequence,
)
from .foveation import (
    FoveationConfig,
    MarModel,
    blur_sigma,
    compose_split_screen,
    foveate_image,
    mar,
)
from .quality import PredictorConfig, QualityScore, optimize_mar_slope, predict_quality
from .bandwidth import DisplayProfile, computational_gain, gain_sweep
from .quest import SimulatedObserver, Staircase, StaircaseConfig, run_staircase
from .study import Session, SessionConfig, StudyKind

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
