"""Angular-spectrum simulation of double-slit diffraction and second harmonic generation."""

from .analytics import (BenchGeometry, FringeFit, crystal_plane_field, fit_two_frequency, image_distance,
                        self_convolution, slit_image, slit_spectrum, visibility_evolution)
from .elements import CrystalUpconvert, DoubleSlit, ThinLens, apply_double_slit, apply_lens, upconvert
from .errors import AliasingError, AngspecError, FitError, GeometryError, SamplingError
from .field import (AngularSpectrum, Grid1D, IntensityProfile, SampledField, intensity, make_grid, power,
                    to_field, to_spectrum)
from .gaussian_sum import GaussianSum, fit_gaussian_sum, propagate_gaussian_sum
from .propagation import PropagationPlan, propagate, propagate_quadrature, propagate_spectrum
from .scene import format_scene, parse_scene, run_scene, validate_scene

__version__ = "0.1.0"

__all__ = [
    "AliasingError", "AngspecError", "AngularSpectrum", "BenchGeometry", "CrystalUpconvert", "DoubleSlit",
    "FitError", "FringeFit", "GaussianSum", "GeometryError", "Grid1D", "IntensityProfile", "PropagationPlan",
    "SampledField", "SamplingError", "ThinLens", "apply_double_slit", "apply_lens", "crystal_plane_field",
    "fit_gaussian_sum", "fit_two_frequency", "format_scene", "image_distance", "intensity", "make_grid",
    "parse_scene", "power", "propagate", "propagate_gaussian_sum", "propagate_quadrature",
    "propagate_spectrum", "run_scene", "self_convolution", "slit_image", "slit_spectrum", "to_field",
    "to_spectrum", "upconvert", "validate_scene", "visibility_evolution",
]
