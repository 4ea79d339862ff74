"""Procedural stand-ins for the four foveation study scenes.

Deterministic luminance images with distinct spectral character: smooth
blobs (tulips), rectangular edges (city), ridged terrain (mountain) and
fine texture (forest).  Values span most of the display range so blur
artifacts are visible at all eccentricities.
"""

from __future__ import annotations

import numpy as np

IMAGE_IDS = ("tulips", "city", "mountain", "forest")


def _fractal_noise(rng, shape, alpha):
    """Noise with a 1/f^alpha amplitude spectrum."""
    h, w = shape
    spectrum = rng.normal(size=(h, w)) + 1j * rng.normal(size=(h, w))
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.hypot(fx, fy)
    radius[0, 0] = 1.0
    spectrum /= radius ** alpha
    spectrum[0, 0] = 0.0
    return np.real(np.fft.ifft2(spectrum))


def _normalize(img, lo=2.0, hi=100.0):
    img = img - img.min()
    peak = img.max()
    if peak > 0:
        img = img / peak
    return lo + img * (hi - lo)


def _tulips(rng, shape):
    h, w = shape
    canvas = _fractal_noise(rng, shape, 2.0) * 0.5
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(60):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        radius = rng.uniform(0.02, 0.08) * min(h, w)
        amp = rng.uniform(-1.0, 1.5)
        canvas += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * radius ** 2))
    return canvas


def _city(rng, shape):
    h, w = shape
    canvas = np.zeros(shape)
    for _ in range(80):
        x0 = rng.integers(0, w)
        y0 = rng.integers(0, h)
        bw = int(rng.integers(4, max(5, w // 6)))
        bh = int(rng.integers(4, max(5, h // 4)))
        canvas[y0:y0 + bh, x0:x0 + bw] = rng.uniform(-1, 1)
    # window grid texture on top of the blocks
    yy, xx = np.mgrid[0:h, 0:w]
    canvas += 0.25 * ((xx // 3 + yy // 5) % 2) * (np.abs(canvas) > 0.05)
    canvas += 0.1 * _fractal_noise(rng, shape, 1.0)
    return canvas


def _mountain(rng, shape):
    base = _fractal_noise(rng, shape, 1.8)
    ridged = 1.0 - np.abs(base) / (np.abs(base).max() + 1e-12)
    return ridged ** 2 + 0.15 * _fractal_noise(rng, shape, 1.2)


def _forest(rng, shape):
    fine = _fractal_noise(rng, shape, 0.8)
    clumps = _fractal_noise(rng, shape, 2.2)
    return fine * (0.6 + 0.4 * np.tanh(3 * clumps / (np.abs(clumps).max() + 1e-12)))


_GENERATORS = {
    "tulips": _tulips,
    "city": _city,
    "mountain": _mountain,
    "forest": _forest,
}


def sample_image(image_id: str, shape: tuple[int, int] = (256, 256)) -> np.ndarray:
    """Luminance image (H, W) in cd/m^2 for one of the four scene ids."""
    if image_id not in _GENERATORS:
        raise KeyError(f"unknown image id {image_id!r}; choose from {IMAGE_IDS}")
    seed = sum(ord(c) for c in image_id) * 7919
    rng = np.random.default_rng(seed)
    return _normalize(_GENERATORS[image_id](rng, shape))
