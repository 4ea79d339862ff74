"""Display geometry and pixel/degree conversions.

The bridge between raster space and visual-field space: a pixel at offset
r from the straight-ahead pixel subtends tan(e) = pitch*r / (distance/M),
where M is the lens magnification (1 for a plain monitor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kvformat


@dataclass(frozen=True)
class DisplayGeometry:
    pixel_pitch_m: float
    viewing_distance_m: float
    resolution: tuple[int, int]                 # (width, height) px
    lens_magnification: float = 1.0
    center_px: tuple[float, float] | None = None
    gamma: float = 1.89
    luminance_min: float = 0.6
    luminance_max: float = 104.0
    background_luminance: float = 28.0
    # linear-RGB luminance weights used for isoluminant letter colors
    luminance_weights: tuple[float, float, float] = (0.2126, 0.7152, 0.0722)

    def __post_init__(self):
        if min(self.pixel_pitch_m, self.viewing_distance_m, self.lens_magnification) <= 0:
            raise ValueError("physical quantities must be positive")
        if self.luminance_min >= self.luminance_max:
            raise ValueError("luminance_min must be below luminance_max")
        if not self.luminance_min <= self.background_luminance <= self.luminance_max:
            raise ValueError("background luminance outside the display range")
        if self.center_px is None:
            w, h = self.resolution
            object.__setattr__(self, "center_px", ((w - 1) / 2.0, (h - 1) / 2.0))

    @property
    def effective_distance_m(self) -> float:
        return self.viewing_distance_m / self.lens_magnification

    @property
    def pixels_per_degree(self) -> float:
        """Pixel density at the display center."""
        deg_per_px = math.degrees(math.atan(self.pixel_pitch_m / self.effective_distance_m))
        return 1.0 / deg_per_px

    @property
    def fov_degrees(self) -> tuple[float, float]:
        w, h = self.resolution
        half = lambda n: math.degrees(
            math.atan(n * self.pixel_pitch_m / 2.0 / self.effective_distance_m)
        )
        return 2 * half(w), 2 * half(h)

    @classmethod
    def from_ppd(cls, ppd: float, viewing_distance_m: float,
                 resolution: tuple[int, int], **kw) -> "DisplayGeometry":
        """Construct from a target center pixel density."""
        pitch = math.tan(math.radians(1.0 / ppd)) * viewing_distance_m
        return cls(pixel_pitch_m=pitch, viewing_distance_m=viewing_distance_m,
                   resolution=resolution, **kw)

    def pixel_to_eccentricity(self, px, py) -> np.ndarray | float:
        """Radial eccentricity in degrees of a pixel location."""
        cx, cy = self.center_px
        r = np.hypot(np.asarray(px, dtype=float) - cx, np.asarray(py, dtype=float) - cy)
        e = np.degrees(np.arctan(r * self.pixel_pitch_m / self.effective_distance_m))
        return float(e) if e.ndim == 0 else e

    def eccentricity_to_radius_px(self, e_deg) -> np.ndarray | float:
        """Inverse of pixel_to_eccentricity: pixel radius from center."""
        e = np.radians(np.asarray(e_deg, dtype=float))
        r = np.tan(e) * self.effective_distance_m / self.pixel_pitch_m
        return float(r) if r.ndim == 0 else r

    def degree_grid(self):
        """Per-pixel (x_deg, y_deg) display coordinates, linear in ppd.

        Stimulus synthesis uses this flat mapping (degrees = pixels/ppd
        relative to the center pixel), the convention of the study's
        rendering path; the exact tan() mapping above is for eccentricity
        bookkeeping.
        """
        w, h = self.resolution
        cx, cy = self.center_px
        ppd = self.pixels_per_degree
        x = (np.arange(w) - cx) / ppd
        y = (np.arange(h) - cy) / ppd
        return np.meshgrid(x, y)

    def eccentricity_map(self) -> np.ndarray:
        """Radial eccentricity of every pixel (height x width)."""
        w, h = self.resolution
        xx, yy = np.meshgrid(np.arange(w), np.arange(h))
        return self.pixel_to_eccentricity(xx, yy)

    def to_kv(self) -> str:
        return kvformat.dumps({
            "pixel_pitch_m": self.pixel_pitch_m,
            "viewing_distance_m": self.viewing_distance_m,
            "resolution": f"{self.resolution[0]}x{self.resolution[1]}",
            "lens_magnification": self.lens_magnification,
            "center_px": f"{self.center_px[0]},{self.center_px[1]}",
            "gamma": self.gamma,
            "luminance_min": self.luminance_min,
            "luminance_max": self.luminance_max,
            "background_luminance": self.background_luminance,
        })

    @classmethod
    def from_kv(cls, text: str) -> "DisplayGeometry":
        kv = kvformat.loads(text)
        w, h = kv["resolution"].split("x")
        cx, cy = (float(v) for v in kv["center_px"].split(","))
        return cls(
            pixel_pitch_m=float(kv["pixel_pitch_m"]),
            viewing_distance_m=float(kv["viewing_distance_m"]),
            resolution=(int(w), int(h)),
            lens_magnification=float(kv.get("lens_magnification", 1.0)),
            center_px=(cx, cy),
            gamma=float(kv.get("gamma", 1.89)),
            luminance_min=float(kv.get("luminance_min", 0.6)),
            luminance_max=float(kv.get("luminance_max", 104.0)),
            background_luminance=float(kv.get("background_luminance", 28.0)),
        )


def study_geometry(resolution: tuple[int, int] = (3440, 1440)) -> DisplayGeometry:
    """Geometry of the study display: 71 ppd at 94 cm, 46 x 20 deg FOV."""
    return DisplayGeometry.from_ppd(71.0, 0.94, resolution)
