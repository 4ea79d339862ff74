"""Acuity-driven peripheral blur: the linear MAR model, the induced
Gaussian-sigma field, spatially varying filtering, and the split-screen
composition used for side-by-side foveation comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import DisplayGeometry


@dataclass(frozen=True)
class MarModel:
    """Minimum angle of resolution omega(e) = slope * e + omega0 (degrees)."""

    slope: float
    omega0: float = 1.0 / 48.0

    def __post_init__(self):
        if self.slope < 0:
            raise ValueError("slope must be >= 0")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")

    def mar(self, e) -> np.ndarray | float:
        e = np.asarray(e, dtype=float)
        if np.any(e < 0):
            raise ValueError("eccentricity must be >= 0")
        w = self.slope * e + self.omega0
        return float(w) if w.ndim == 0 else w


def mar(model: MarModel, e):
    return model.mar(e)


@dataclass(frozen=True)
class FoveationConfig:
    """Display-side parameters of the blur field.

    omega_s is the peak MAR the display can show; None derives the
    Nyquist value 2/ppd from the geometry (0.0283 deg at 71 ppd).
    sigma_c sets the assumed filter bandwidth cut-off.
    """

    omega_s: float | None = None
    sigma_c: float = 2.0
    gaze_center_px: tuple[float, float] | None = None

    def __post_init__(self):
        if self.omega_s is not None and self.omega_s <= 0:
            raise ValueError("omega_s must be positive")
        if self.sigma_c <= 0:
            raise ValueError("sigma_c must be positive")

    def resolved_omega_s(self, geom: DisplayGeometry) -> float:
        return self.omega_s if self.omega_s is not None else 2.0 / geom.pixels_per_degree

    def resolved_gaze(self, geom: DisplayGeometry) -> tuple[float, float]:
        return self.gaze_center_px if self.gaze_center_px is not None else geom.center_px


def blur_sigma(model: MarModel, cfg: FoveationConfig, e, geom: DisplayGeometry | None = None,
               omega_s: float | None = None) -> np.ndarray | float:
    """Gaussian sigma (degrees) simulating the resolution drop at e.

    sigma(e) = max(0, (omega(e)/omega_s - 1) / (2 sigma_c)); zero wherever
    the display pixel grid is already the limiting factor.
    """
    if omega_s is None:
        if geom is None and cfg.omega_s is None:
            raise ValueError("need geometry or explicit omega_s to resolve the peak MAR")
        omega_s = cfg.omega_s if geom is None else cfg.resolved_omega_s(geom)
    w = model.mar(e)
    s = (w / omega_s - 1.0) / (2.0 * cfg.sigma_c)
    s = np.maximum(0.0, s)
    return float(s) if np.ndim(s) == 0 else s


def _gaze_eccentricity_map(geom: DisplayGeometry, gaze_px) -> np.ndarray:
    w, h = geom.resolution
    gx, gy = gaze_px
    xx, yy = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    r = np.hypot(xx - gx, yy - gy)
    return np.degrees(np.arctan(r * geom.pixel_pitch_m / geom.effective_distance_m))


def foveate_image(
    img: np.ndarray,
    geom: DisplayGeometry,
    model: MarModel,
    cfg: FoveationConfig = FoveationConfig(),
    steps_per_octave: int = 4,
    sigma_base_px: float = 0.5,
) -> np.ndarray:
    """Apply the eccentricity-dependent Gaussian blur field to an image.

    Approximates the exact per-pixel Gaussian with a stack of uniformly
    blurred copies at geometrically spaced sigmas, blended per pixel with
    weights linear in sigma^2 (so the local kernel's second moment is
    exact).  Pixels whose sigma is zero are passed through untouched.
    Boundaries are clamp-to-edge.
    """
    img = np.asarray(img, dtype=np.float64)
    gaze = cfg.resolved_gaze(geom)
    if not (0 <= gaze[0] < geom.resolution[0] and 0 <= gaze[1] < geom.resolution[1]):
        raise ValueError("gaze center must lie within the image")
    ecc = _gaze_eccentricity_map(geom, gaze)
    sigma_px = blur_sigma(model, cfg, ecc, geom) * geom.pixels_per_degree

    smax = float(sigma_px.max())
    if smax <= 0.0:
        return img.copy()

    sigmas = [0.0, sigma_base_px]
    while sigmas[-1] < smax:
        sigmas.append(sigma_base_px * 2.0 ** ((len(sigmas) - 1) / steps_per_octave))
    sig2 = np.square(sigmas)

    s2 = sigma_px ** 2
    idx = np.clip(np.searchsorted(sig2, s2, side="right") - 1, 0, len(sigmas) - 2)
    w_hi = (s2 - sig2[idx]) / (sig2[idx + 1] - sig2[idx])
    w_hi = np.clip(w_hi, 0.0, 1.0)

    out = np.zeros_like(img)
    for k, s in enumerate(sigmas):
        weight = np.where(idx == k, 1.0 - w_hi, 0.0) + np.where(idx + 1 == k, w_hi, 0.0)
        if not weight.any():
            continue
        level = img if s == 0.0 else ndimage.gaussian_filter(img, s, mode="nearest")
        out += level * weight
    return out


def compose_split_screen(
    left: np.ndarray,
    right: np.ndarray,
    geom: DisplayGeometry,
    bar_width_deg: float = 6.0,
    falloff_sigma_deg: float = 0.5,
    neutral_luminance: float | None = None,
) -> np.ndarray:
    """Join two half-screen images around a central neutral bar.

    The vertical bar (bar_width_deg wide, centered on the display center)
    is fully neutral; beyond its edge the neutral level fades into the
    content with a Gaussian weight exp(-d^2 / (2 falloff_sigma^2)) of the
    distance d in degrees past the edge.  Left of center the content comes
    from `left`, right of center from `right`.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape:
        raise ValueError("left and right images must share dimensions")
    if left.ndim != 2:
        raise ValueError("expected grayscale luminance images")
    h, w = left.shape
    if (w, h) != geom.resolution:
        raise ValueError("images do not match the display resolution")
    neutral = geom.background_luminance if neutral_luminance is None else neutral_luminance

    cx = geom.center_px[0]
    x_deg = (np.arange(w) - cx) / geom.pixels_per_degree
    content = np.where(x_deg[None, :] < 0, left, right)

    d = np.abs(x_deg) - bar_width_deg / 2.0
    wgt = np.where(d <= 0, 1.0, np.exp(-np.square(np.maximum(d, 0.0)) / (2.0 * falloff_sigma_deg ** 2)))
    return wgt[None, :] * neutral + (1.0 - wgt[None, :]) * content
