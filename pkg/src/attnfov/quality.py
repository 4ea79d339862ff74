"""Attention-aware visual difference prediction and inverse blur search.

A deliberately small predictor: band-decompose reference and test images
with a decimated Laplacian pyramid, normalize per-band contrast errors by
the attention-scaled detection threshold at each pixel's eccentricity,
pool, and map to a JOD-style quality score (10 = no visible difference).
The attention model enters purely as the multiplicative threshold scaling,
so with low attention the predictor is exactly the attention-unaware
baseline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .csf import (
    AttentionLevel,
    BaselineCsf,
    ConditionModels,
    CorticalFrequencyCsf,
    DEFAULT_CONDITION_MODELS,
    MEASURED_ECCENTRICITY_RANGE,
    attention_gain,
)
from .foveation import FoveationConfig, MarModel, foveate_image
from .geometry import DisplayGeometry

_BURT_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _blur_burt(img: np.ndarray) -> np.ndarray:
    out = ndimage.convolve1d(img, _BURT_KERNEL, axis=0, mode="nearest")
    return ndimage.convolve1d(out, _BURT_KERNEL, axis=1, mode="nearest")


def _downsample(img: np.ndarray) -> np.ndarray:
    return _blur_burt(img)[::2, ::2]


def _upsample(img: np.ndarray, shape) -> np.ndarray:
    up = np.zeros(shape, dtype=img.dtype)
    up[::2, ::2] = img
    return _blur_burt(up) * 4.0


def laplacian_pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    """Decimated Laplacian pyramid; `levels` band-pass bands plus the
    low-pass residual appended last."""
    gauss = [np.asarray(img, dtype=np.float64)]
    for _ in range(levels):
        gauss.append(_downsample(gauss[-1]))
    bands = [g - _upsample(gn, g.shape) for g, gn in zip(gauss[:-1], gauss[1:])]
    bands.append(gauss[-1])
    return bands


def reconstruct_pyramid(bands: list[np.ndarray]) -> np.ndarray:
    img = bands[-1]
    for band in reversed(bands[:-1]):
        img = band + _upsample(img, band.shape)
    return img


@dataclass(frozen=True)
class QualityScore:
    """JOD-style score: 10 means imperceptible difference, lower is worse."""

    jod: float

    def __post_init__(self):
        if self.jod > 10.0 + 1e-9:
            raise ValueError("scores are anchored at 10 for identical images")


@dataclass
class PredictorConfig:
    band_count: int = 5
    attention: AttentionLevel = AttentionLevel.LOW
    baseline_csf: BaselineCsf = field(default_factory=CorticalFrequencyCsf)
    condition_models: ConditionModels = DEFAULT_CONDITION_MODELS
    pooling_exponent: float = 2.4
    gaze_center_px: tuple[float, float] | None = None
    # JOD drop for a threshold-level uniform contrast error covering 1 deg^2.
    # A calibration constant of this predictor, not a measured value.
    jod_per_unit_error: float = 0.25

    def __post_init__(self):
        if self.band_count < 3:
            raise ValueError("need at least 3 bands")
        self.attention = AttentionLevel.parse(self.attention)


def _band_frequency(ppd: float, level: int) -> float:
    # top band sits half an octave below Nyquist, then octave spacing
    return ppd / 2.0 / (2.0 ** (level + 0.5))


def predict_quality(
    reference: np.ndarray,
    test: np.ndarray,
    geom: DisplayGeometry,
    cfg: PredictorConfig,
) -> QualityScore:
    """Visibility-weighted difference between test and reference.

    Per band and pixel the luminance-contrast error is divided by the
    attention-aware detection threshold at that pixel's eccentricity, then
    Minkowski-pooled over space (area-weighted, in deg^2) and bands, and
    mapped affinely to JOD.  Identical inputs give exactly 10.
    """
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape or reference.ndim != 2:
        raise ValueError("reference and test must be equal-size grayscale images")
    if np.array_equal(reference, test):
        return QualityScore(10.0)

    gaze = cfg.gaze_center_px if cfg.gaze_center_px is not None else geom.center_px
    ppd = geom.pixels_per_degree
    l_adapt = geom.background_luminance

    ref_bands = laplacian_pyramid(reference, cfg.band_count)
    test_bands = laplacian_pyramid(test, cfg.band_count)

    e_lo, e_hi = MEASURED_ECCENTRICITY_RANGE
    p = cfg.pooling_exponent
    total = 0.0
    for level, (rb, tb) in enumerate(zip(ref_bands, test_bands)):
        freq = _band_frequency(ppd, level)
        scale = 2.0 ** level  # px stride of this level
        h, w = rb.shape
        xx = (np.arange(w) * scale + (scale - 1) / 2.0 - gaze[0]) / ppd
        yy = (np.arange(h) * scale + (scale - 1) / 2.0 - gaze[1]) / ppd
        ecc = np.hypot(xx[None, :], yy[:, None])

        sens = cfg.baseline_csf.sensitivity(freq, ecc, l_adapt)
        if cfg.attention is not AttentionLevel.LOW:
            # clamp to the measured range; beyond it the gain is held at
            # its edge value (conservative in the far periphery)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                gain = attention_gain(
                    cfg.condition_models, cfg.attention, np.clip(ecc, e_lo, e_hi)
                )
            sens = sens / gain
        threshold = 1.0 / np.maximum(sens, 1e-6)

        contrast_err = np.abs(tb - rb) / l_adapt
        visibility = contrast_err / threshold
        pixel_area = (scale / ppd) ** 2
        total += float(np.sum(visibility ** p)) * pixel_area

    pooled = total ** (1.0 / p)
    return QualityScore(10.0 - cfg.jod_per_unit_error * pooled)


class InfeasibleThresholdError(ValueError):
    """Even the least aggressive blur already violates the quality floor."""


def optimize_mar_slope(
    reference: np.ndarray,
    geom: DisplayGeometry,
    cfg: PredictorConfig,
    q_thr: float,
    bracket: tuple[float, float] = (0.0, 0.2),
    tol: float = 1e-4,
    fov_cfg: FoveationConfig | None = None,
) -> float:
    """Largest MAR slope whose foveated rendering still scores >= q_thr.

    Rendering cost falls monotonically with the slope, so the constrained
    minimum-cost problem reduces to a one-dimensional root bracket on the
    quality constraint, solved by bisection to `tol` on the slope.
    """
    m_lo, m_hi = bracket
    if m_hi <= m_lo:
        raise ValueError("degenerate bracket")
    fov_cfg = fov_cfg or FoveationConfig(gaze_center_px=cfg.gaze_center_px)

    def quality(m: float) -> float:
        blurred = foveate_image(reference, geom, MarModel(slope=m), fov_cfg)
        return predict_quality(reference, blurred, geom, cfg).jod

    if quality(m_lo) < q_thr:
        raise InfeasibleThresholdError(
            f"quality at the lower bracket m={m_lo} is below q_thr={q_thr}"
        )
    if quality(m_hi) >= q_thr:
        return m_hi
    lo, hi = m_lo, m_hi
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if quality(mid) >= q_thr:
            lo = mid
        else:
            hi = mid
    return lo
