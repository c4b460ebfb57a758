"""Figure presets: the two bench configurations and the plane/field each figure shows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import BenchGeometry, fit_two_frequency, sh_image_amplitude
from .errors import FitError
from .field import IntensityProfile, intensity, make_grid
from .gaussian_sum import fit_gaussian_sum, propagate_gaussian_sum
from .scene import crystal_state, parse_scene, run_scene

WAVELENGTH = 845e-9
SLIT_A = 0.2e-3
SLIT_D = 0.4e-3
FOCAL = 0.10
Z0_IMAGE = 0.123
ZD_FARFIELD = 0.434

# slits imaged 43.478 cm behind the crystal (lens focal plane)
IMAGE_SCENE = """\
# Slits 12.3 cm before the lens, crystal in the back focal plane,
# detector at the image plane 43.478 cm behind the crystal.
source    { wavelength_nm = 845 }
grid      { preset = default }
slit      { a_mm = 0.2, d_mm = 0.4 }
propagate { z_cm = 12.3 }
lens      { f_cm = 10 }
propagate { z_cm = 10 }
shg
detect    { label = crystal, range_mm = 3 }
propagate { z_cm = 43.478 }
detect    { label = image, range_mm = 5 }
"""

# slits 2 cm before the crystal, no real image of the slits
FARFIELD_SCENE = """\
# Second configuration: slits 2 cm before the crystal, which stays in the
# back focal plane of the lens; detector 43.4 cm behind the crystal.
source    { wavelength_nm = 845 }
grid      { preset = wide }
lens      { f_cm = 10 }
propagate { z_cm = 8 }
slit      { a_mm = 0.2, d_mm = 0.4 }
propagate { z_cm = 2 }
shg
detect    { label = crystal, range_mm = 0.8 }
propagate { z_cm = 43.4 }
detect    { label = farfield, range_mm = 20 }
"""

GAUSSIAN_TERMS = 12
GAUSSIAN_HALF_WIDTH = 0.25e-3


@dataclass(frozen=True)
class FigurePreset:
    name: str
    title: str
    scene: str | None
    label: str | None
    kind: str
    fit: bool = False


PRESETS = {p.name: p for p in [
    FigurePreset("fig3", "Self-convolution of the magnified double slit", None, None, "sh"),
    FigurePreset("fig4a", "Fundamental, far field (Gaussian-sum theory)", FARFIELD_SCENE, None, "fund"),
    FigurePreset("fig4b", "Second harmonic, far field (Gaussian-sum theory)", FARFIELD_SCENE, None, "sh"),
    FigurePreset("fig5a", "Fundamental, image plane", IMAGE_SCENE, "image", "fund"),
    FigurePreset("fig5b", "Second harmonic, image plane", IMAGE_SCENE, "image", "sh"),
    FigurePreset("fig6a", "Fundamental, crystal plane", IMAGE_SCENE, "crystal", "fund"),
    FigurePreset("fig6b", "Second harmonic, crystal plane", IMAGE_SCENE, "crystal", "sh"),
    FigurePreset("fig7a", "Fundamental, far field", FARFIELD_SCENE, "farfield", "fund", fit=True),
    FigurePreset("fig7b", "Second harmonic, far field", FARFIELD_SCENE, "farfield", "sh", fit=True),
    FigurePreset("fig8a", "Fundamental, crystal plane (slits 2 cm before the crystal)",
                 FARFIELD_SCENE, "crystal", "fund", fit=True),
    FigurePreset("fig8b", "Second harmonic, crystal plane (slits 2 cm before the crystal)",
                 FARFIELD_SCENE, "crystal", "sh", fit=True),
]}


def image_geometry() -> BenchGeometry:
    return BenchGeometry.at_image_plane(Z0_IMAGE, FOCAL, SLIT_A, SLIT_D, WAVELENGTH)


@dataclass(frozen=True, eq=False)
class FigureResult:
    preset: FigurePreset
    profile: IntensityProfile
    fit: object = None
    fit_error: str | None = None


def _self_convolution_profile() -> IntensityProfile:
    g = image_geometry()
    dx = 2e-6
    x = np.arange(-1250, 1251) * dx
    amp = sh_image_amplitude(x, g, dx)
    val = amp ** 2
    return IntensityProfile(x, val / val.max())


def _gaussian_sum_profile(kind: str) -> IntensityProfile:
    fund = crystal_state(parse_scene(FARFIELD_SCENE, "<fig4>")).fundamental
    gs = fit_gaussian_sum(fund, GAUSSIAN_TERMS, half_width=GAUSSIAN_HALF_WIDTH)
    if kind == "sh":
        gs = gs.square()
    grid = make_grid(16384, 2e-6)
    prof = intensity(propagate_gaussian_sum(gs, ZD_FARFIELD, grid))
    return prof.crop(10e-3)


def render(name: str) -> FigureResult:
    """Compute the profile (and fringe fit where the preset asks for one)."""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown figure preset {name!r}; choose from {', '.join(PRESETS)}") from None
    if preset.scene is None:
        return FigureResult(preset, _self_convolution_profile())
    if preset.label is None:
        return FigureResult(preset, _gaussian_sum_profile(preset.kind))
    results = run_scene(parse_scene(preset.scene, f"<{name}>"))
    det = next(r for r in results if r.label == preset.label and r.kind == preset.kind)
    if not preset.fit:
        return FigureResult(preset, det.profile)
    try:
        if preset.kind == "fund":
            fit = fit_two_frequency(det.profile, envelope_power=2, pin_mu2=True)
        else:
            fit = fit_two_frequency(det.profile)
    except FitError as err:
        return FigureResult(preset, det.profile, None, str(err))
    return FigureResult(preset, det.profile, fit)
