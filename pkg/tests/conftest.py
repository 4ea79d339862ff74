import numpy as np
import pytest

from attnfov.geometry import DisplayGeometry


@pytest.fixture
def small_geometry() -> DisplayGeometry:
    """128x128 px patch of the study display (71 ppd, 94 cm)."""
    return DisplayGeometry.from_ppd(71.0, 0.94, (128, 128))


@pytest.fixture
def wide_geometry() -> DisplayGeometry:
    """128x128 px at 8 ppd: a 16-degree field for periphery-heavy tests."""
    return DisplayGeometry.from_ppd(8.0, 0.94, (128, 128))


@pytest.fixture
def noise_image() -> np.ndarray:
    rng = np.random.default_rng(42)
    img = rng.random((128, 128))
    from scipy import ndimage

    img = ndimage.gaussian_filter(img, 1.0)
    img = (img - img.min()) / (img.max() - img.min())
    return 2.0 + img * 98.0
