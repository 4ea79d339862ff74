"""Computational-gain analysis of acuity-driven foveation.

The retained fraction of pixel sampling density at field position x is
min(omega_s / omega(e(x)), 1)^2, the areal sampling ratio a renderer could
in principle drop to when every pixel's rate is controlled independently.
The gain over a field of view is uniform-area divided by retained-area.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .foveation import MarModel


@dataclass(frozen=True)
class DisplayProfile:
    """Rectangular field of view (degrees) and pixel density."""

    fov_deg: tuple[float, float]
    ppd: float
    omega_s: float | None = None  # None: Nyquist, 2/ppd

    def __post_init__(self):
        if min(self.fov_deg) <= 0 or self.ppd <= 0:
            raise ValueError("fov and ppd must be positive")

    @property
    def peak_mar(self) -> float:
        return self.omega_s if self.omega_s is not None else 2.0 / self.ppd


class QuadratureError(RuntimeError):
    """Tensor-grid refinement did not converge."""


def computational_gain(
    profile: DisplayProfile,
    model: MarModel,
    rel_tol: float = 1e-3,
    initial_cells: int = 32,
    max_refinements: int = 12,
) -> float:
    """Gain >= 1 of foveated over uniform sampling across the FOV.

    Midpoint tensor-grid quadrature over the rectangle, with eccentricity
    taken as radial angular distance from the (gazed-at) FOV center.  The
    grid is doubled until the gain moves by less than rel_tol between
    refinements.
    """
    fw, fh = profile.fov_deg
    ws = profile.peak_mar
    prev = None
    n = initial_cells
    for _ in range(max_refinements + 1):
        nx = n
        ny = max(4, int(round(n * fh / fw)))
        x = ((np.arange(nx) + 0.5) / nx - 0.5) * fw
        y = ((np.arange(ny) + 0.5) / ny - 0.5) * fh
        ecc = np.hypot(x[None, :], y[:, None])
        omega = model.mar(ecc)
        retained = np.minimum(ws / omega, 1.0) ** 2
        psi = 1.0 / float(retained.mean())
        if prev is not None and abs(psi - prev) <= rel_tol * abs(psi):
            return psi
        prev = psi
        n *= 2
    raise QuadratureError(
        f"gain quadrature did not reach {rel_tol:.1e} after {max_refinements} refinements"
    )


def gain_sweep(
    fovs_deg: Sequence[float],
    ppds: Sequence[float],
    models: dict[str, MarModel],
    aspect: float = 1.0,
    rel_tol: float = 1e-3,
) -> list[dict]:
    """Gain table over square-ish FOVs, densities and attention conditions.

    Returns one row per (fov, ppd, condition) as dicts with keys
    fov_deg, ppd, condition, slope, gain.  FOVs are square by default
    (aspect = height/width).
    """
    if list(fovs_deg) != sorted(fovs_deg):
        raise ValueError("fov range must be monotone increasing")
    rows = []
    for fov in fovs_deg:
        for ppd in ppds:
            profile = DisplayProfile(fov_deg=(fov, fov * aspect), ppd=ppd)
            for name, model in models.items():
                rows.append({
                    "fov_deg": fov,
                    "ppd": ppd,
                    "condition": name,
                    "slope": model.slope,
                    "gain": computational_gain(profile, model, rel_tol=rel_tol),
                })
    return rows


def sweep_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    buf.write("fov_deg,ppd,condition,slope,gain\n")
    for r in rows:
        buf.write(f"{r['fov_deg']:g},{r['ppd']:g},{r['condition']},{r['slope']:g},{r['gain']:.6g}\n")
    return buf.getvalue()
