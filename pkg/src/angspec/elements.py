"""Pointwise optical elements: double-slit aperture, thin lens and up-conversion crystal."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, SamplingError
from .field import SampledField

MIN_SAMPLES_PER_SLIT = 8
PARAXIAL_WARN_RATIO = 0.2

# relative slack so that samples lying exactly on a slit edge stay inside
_EDGE_RTOL = 1e-9


class ParaxialWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DoubleSlit:
    """Two slits of width ``a`` whose centers are ``d`` apart (meters)."""

    a: float
    d: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise GeometryError(f"slit width must be positive, got {self.a!r}")
        if not (np.isfinite(self.d) and self.d >= 0):
            raise GeometryError(f"slit separation must be non-negative, got {self.d!r}")
        if self.d < self.a:
            raise GeometryError(f"slits overlap: d < a ({self.d:g} m < {self.a:g} m)")

    def mask(self, x) -> np.ndarray:
        """Binary transmission, edges inclusive: ``|x -+ d/2| <= a/2``."""
        x = np.asarray(x, dtype=float)
        half = 0.5 * self.a * (1 + _EDGE_RTOL)
        return ((np.abs(x - 0.5 * self.d) <= half) | (np.abs(x + 0.5 * self.d) <= half)).astype(float)

    @property
    def extent(self) -> float:
        return self.d + self.a

    def sampled_width(self, x) -> float:
        """Width one slit actually covers on the uniform axis ``x`` (sample count times pitch)."""
        x = np.asarray(x, dtype=float)
        half = 0.5 * self.a * (1 + _EDGE_RTOL)
        return float(np.count_nonzero(np.abs(x - 0.5 * self.d) <= half) * (x[1] - x[0]))


@dataclass(frozen=True)
class ThinLens:
    f: float

    def __post_init__(self):
        if not np.isfinite(self.f) or self.f == 0:
            raise GeometryError(f"focal length must be finite and non-zero, got {self.f!r}")


@dataclass(frozen=True)
class CrystalUpconvert:
    """Thin nonlinear crystal; ``collinear`` is degenerate second harmonic generation."""

    mode: str = "collinear"

    def __post_init__(self):
        if self.mode not in ("collinear", "noncollinear"):
            raise ValueError(f"unknown crystal mode {self.mode!r}")

    def apply(self, field1: SampledField, field2: SampledField | None = None) -> SampledField:
        if self.mode == "collinear":
            return upconvert(field1, field1 if field2 is None else field2, mode="collinear")
        if field2 is None:
            raise ValueError("non-collinear up-conversion needs two pump fields")
        return upconvert(field1, field2)


def apply_double_slit(field: SampledField, slit: DoubleSlit) -> SampledField:
    """Multiply ``field`` by the binary double-slit mask."""
    grid = field.grid
    if slit.a / grid.dx < MIN_SAMPLES_PER_SLIT:
        raise SamplingError(
            f"{slit.a / grid.dx:.3g} samples per slit < {MIN_SAMPLES_PER_SLIT}; "
            f"use dx <= {slit.a / MIN_SAMPLES_PER_SLIT * 1e6:.3g} um")
    if grid.span <= slit.extent:
        raise SamplingError(f"grid span {grid.span:g} m does not cover the aperture ({slit.extent:g} m)")
    return field.replace(amp=field.amp * slit.mask(grid.x))


def illuminated_half_width(field: SampledField, rel_amp: float = 1e-3) -> float:
    """Largest ``|x|`` where ``|amp|`` exceeds ``rel_amp`` of its maximum."""
    mag = np.abs(field.amp)
    peak = mag.max()
    if peak == 0:
        return 0.0
    return float(np.abs(field.grid.x[mag >= rel_amp * peak]).max())


def apply_lens(field: SampledField, lens: ThinLens) -> SampledField:
    """Thin-lens phase ``exp(-i k x^2 / 2f)``; converging for ``f > 0``.

    Warns with :class:`ParaxialWarning` when the illuminated half-width exceeds
    ``PARAXIAL_WARN_RATIO * |f|``.
    """
    half_span = illuminated_half_width(field)
    if half_span / abs(lens.f) > PARAXIAL_WARN_RATIO:
        warnings.warn(f"illuminated half-width / |f| = {half_span / abs(lens.f):.2f} exceeds "
                      f"{PARAXIAL_WARN_RATIO}; paraxial lens model is doubtful", ParaxialWarning,
                      stacklevel=2)
    x = field.grid.x
    return field.replace(amp=field.amp * np.exp(-1j * field.k * x * x / (2 * lens.f)))


def upconvert(field1: SampledField, field2: SampledField, mode: str | None = None) -> SampledField:
    """Sum-frequency field at the crystal plane: pointwise product, ``k = k1 + k2``.

    With ``mode="collinear"`` both pumps must be the same field (second harmonic).
    """
    if mode == "collinear" and not (field1 is field2 or field1 == field2):
        raise ValueError("collinear up-conversion requires identical pump fields")
    if field1.grid != field2.grid:
        raise ValueError("pump fields live on different grids")
    if not math.isclose(field1.z, field2.z, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"pump fields are at different planes ({field1.z} m vs {field2.z} m)")
    label = "sh" if (mode == "collinear" or field1 is field2) else "sum"
    return SampledField(field1.grid, field1.amp * field2.amp, field1.k + field2.k, field1.z, label)
