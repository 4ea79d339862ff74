"""Gabor and RSVP stimulus synthesis plus display encoding.

Images are numpy arrays of linear luminance in cd/m^2, (H, W) for
grayscale and (H, W, 3) for color.  encode_display turns them into the
gamma-encoded, spatially dithered 8-bit frames actually sent to a display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import font5x7
from .geometry import DisplayGeometry


class GamutError(ValueError):
    """Requested luminance falls outside the display range."""


@dataclass(frozen=True)
class GaborSpec:
    """Gaussian-windowed grating in display degree coordinates.

    The carrier is in cosine phase at the patch center (plus phase_deg),
    oriented along [cos(theta), sin(theta)]; sigma is the envelope SD in
    degrees.
    """

    center_x_deg: float
    center_y_deg: float
    sigma_deg: float
    frequency_cpd: float
    contrast: float
    orientation_deg: float = 0.0
    phase_deg: float = 0.0
    mean_luminance: float | None = None  # None: display background

    def __post_init__(self):
        if self.sigma_deg <= 0:
            raise ValueError("sigma must be positive")
        if not 0 <= self.contrast <= 1:
            raise ValueError("contrast must lie in [0, 1]")


def gabor_patch(spec: GaborSpec, geom: DisplayGeometry) -> np.ndarray:
    """Render the patch onto a background-filled canvas of the display size."""
    return gabor_image([spec], geom)


def gabor_image(specs: Sequence[GaborSpec] | GaborSpec, geom: DisplayGeometry) -> np.ndarray:
    """Render one or more Gabor patches into a full display frame."""
    if isinstance(specs, GaborSpec):
        specs = [specs]
    w, h = geom.resolution
    bg = geom.background_luminance
    img = np.full((h, w), bg, dtype=np.float64)
    ppd = geom.pixels_per_degree
    cx, cy = geom.center_px

    for spec in specs:
        mean = bg if spec.mean_luminance is None else spec.mean_luminance
        peak = mean * (1.0 + spec.contrast)
        trough = mean * (1.0 - spec.contrast)
        if peak > geom.luminance_max or trough < geom.luminance_min:
            raise GamutError(
                f"contrast {spec.contrast} at mean {mean} cd/m^2 exceeds the "
                f"display range [{geom.luminance_min}, {geom.luminance_max}]"
            )
        # only touch pixels within 4 sigma of the center
        px0 = cx + spec.center_x_deg * ppd
        py0 = cy + spec.center_y_deg * ppd
        r = int(math.ceil(4.0 * spec.sigma_deg * ppd)) + 1
        x_lo, x_hi = max(0, int(px0) - r), min(w, int(px0) + r + 1)
        y_lo, y_hi = max(0, int(py0) - r), min(h, int(py0) + r + 1)
        if x_lo >= x_hi or y_lo >= y_hi:
            continue
        xs = (np.arange(x_lo, x_hi) - px0) / ppd
        ys = (np.arange(y_lo, y_hi) - py0) / ppd
        dx, dy = np.meshgrid(xs, ys)
        envelope = np.exp(-(dx * dx + dy * dy) / (2.0 * spec.sigma_deg ** 2))
        th = math.radians(spec.orientation_deg)
        carrier = np.cos(
            2.0 * math.pi * spec.frequency_cpd * (dx * math.cos(th) + dy * math.sin(th))
            + math.radians(spec.phase_deg)
        )
        img[y_lo:y_hi, x_lo:x_hi] += mean * spec.contrast * envelope * carrier

    return img


def measured_michelson_contrast(img: np.ndarray) -> float:
    """(max - min) / (max + min) over the given region."""
    lo, hi = float(img.min()), float(img.max())
    return (hi - lo) / (hi + lo)


@dataclass(frozen=True)
class RSVPSpec:
    """Rapid serial letter stream shown at fixation.

    n_letters letters of 1x1 deg, back to back over duration_total_ms with
    no blank gaps, alternating red/green from a random initial color.  The
    target letter 'T' appears exactly once; for the harder streams it is
    kept out of the first third so its color cannot be grabbed early.
    """

    n_letters: int
    duration_total_ms: float = 500.0
    letter_size_deg: float = 1.0
    target: str = "T"
    exclude_first_third: bool | None = None  # None: auto (n_letters >= 4)

    def __post_init__(self):
        if self.n_letters < 1:
            raise ValueError("need at least one letter")

    @property
    def constraint_active(self) -> bool:
        if self.exclude_first_third is None:
            return self.n_letters >= 4
        return self.exclude_first_third


@dataclass(frozen=True)
class RsvpLetter:
    letter: str
    color: str  # "red" | "green"
    onset_ms: float
    offset_ms: float


def rsvp_sequence(spec: RSVPSpec, seed) -> list[RsvpLetter]:
    """Deterministic letter/color/timing schedule for one trial."""
    n = spec.n_letters
    if spec.constraint_active and n < 2:
        raise ValueError("first-third exclusion is infeasible with a single letter")
    rng = np.random.default_rng(seed)

    first_allowed = math.ceil(n / 3) if spec.constraint_active else 0
    target_index = int(rng.integers(first_allowed, n))

    distractors = [c for c in font5x7.LETTERS if c != spec.target.upper()]
    letters = [str(rng.choice(distractors)) for _ in range(n)]
    letters[target_index] = spec.target.upper()

    colors = ("red", "green") if rng.integers(2) == 0 else ("green", "red")
    dt = spec.duration_total_ms / n
    return [
        RsvpLetter(letter=letters[i], color=colors[i % 2],
                   onset_ms=i * dt, offset_ms=(i + 1) * dt)
        for i in range(n)
    ]


def rsvp_target_color(schedule: Sequence[RsvpLetter], target: str = "T") -> str:
    for item in schedule:
        if item.letter == target:
            return item.color
    raise ValueError("schedule has no target letter")


def render_letter_frame(
    letter: str, color: str, geom: DisplayGeometry,
    letter_size_deg: float = 1.0, saturation: float = 0.5,
) -> np.ndarray:
    """RGB luminance frame with one isoluminant letter at the center.

    The letter color is a chromaticity-only modulation: its luminance
    (under geom.luminance_weights) equals the background exactly, with
    `saturation` controlling how far the chosen channel is pushed.
    """
    if color not in ("red", "green"):
        raise ValueError("color must be 'red' or 'green'")
    w, h = geom.resolution
    bg = geom.background_luminance
    img = np.full((h, w, 3), bg, dtype=np.float64)

    weights = np.asarray(geom.luminance_weights)
    channel = 0 if color == "red" else 1
    unit = np.zeros(3)
    unit[channel] = 1.0 / weights[channel]  # unit-luminance pure channel
    letter_rgb = bg * (saturation * unit + (1.0 - saturation) * np.ones(3))
    if letter_rgb.max() > geom.luminance_max:
        raise GamutError("letter color exceeds the display range; reduce saturation")

    mask = font5x7.glyph_mask(letter)
    ppd = geom.pixels_per_degree
    cell = letter_size_deg * ppd / mask.shape[0]  # square cells, 7 rows high
    gh = int(round(mask.shape[0] * cell))
    gw = int(round(mask.shape[1] * cell))
    ys = (np.arange(gh) / cell).astype(int).clip(0, mask.shape[0] - 1)
    xs = (np.arange(gw) / cell).astype(int).clip(0, mask.shape[1] - 1)
    scaled = mask[np.ix_(ys, xs)]

    cx, cy = geom.center_px
    y0 = int(round(cy - gh / 2))
    x0 = int(round(cx - gw / 2))
    region = img[y0:y0 + gh, x0:x0 + gw]
    region[scaled] = letter_rgb
    return img


_BAYER2 = (np.array([[0, 2], [3, 1]], dtype=np.float64) + 0.5) / 4.0


def encode_display(img: np.ndarray, geom: DisplayGeometry) -> np.ndarray:
    """Gamma-encode luminance to 8 bits with 2x2 ordered spatial dithering.

    The dither distributes the fractional part of the ideal code over each
    2x2 pixel block, so the block average stays within 0.5 LSB of the
    ideal value and low-contrast gradients avoid banding.
    """
    img = np.asarray(img, dtype=np.float64)
    lo, hi = geom.luminance_min, geom.luminance_max
    if img.min() < lo - 1e-9 or img.max() > hi + 1e-9:
        raise GamutError(
            f"luminance [{img.min():.4g}, {img.max():.4g}] outside display "
            f"range [{lo}, {hi}]"
        )
    norm = np.clip((img - lo) / (hi - lo), 0.0, 1.0)
    code = norm ** (1.0 / geom.gamma) * 255.0

    base = np.floor(code)
    frac = code - base
    h, w = code.shape[:2]
    tile = np.tile(_BAYER2, (h // 2 + 1, w // 2 + 1))[:h, :w]
    if code.ndim == 3:
        tile = tile[..., None]
    out = base + (frac > tile)
    return np.clip(out, 0, 255).astype(np.uint8)


def decode_display(frame: np.ndarray, geom: DisplayGeometry) -> np.ndarray:
    """Inverse of encode_display (up to quantization): 8-bit to luminance."""
    lo, hi = geom.luminance_min, geom.luminance_max
    norm = np.asarray(frame, dtype=np.float64) / 255.0
    return norm ** geom.gamma * (hi - lo) + lo
