"""Sampled 1D scalar fields and their angular spectra.

Transform convention
--------------------
The forward transform approximates

    v(q) = integral W(x) exp(-i q x) dx

by a Riemann sum on the centered grid, and the inverse is

    W(x) = (1 / 2 pi) integral v(q) exp(+i q x) dq.

With this pair, Parseval reads ``sum |v|^2 dq = 2 pi * sum |W|^2 dx``; the
constant ``PARSEVAL_CONSTANT`` records the 2 pi. Both directions are exact
inverses of each other on the grid (up to FFT rounding).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

PARSEVAL_CONSTANT = 2 * np.pi

NORMALIZATIONS = ("peak", "power", "raw")


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Grid1D:
    """Uniform, origin-centered sampling grid with ``x_j = (j - n/2) dx``."""

    n: int
    dx: float

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or int(n) != n:
            raise ValueError(f"grid size must be an integer, got {n!r}")
        n = int(n)
        if n < 16 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {n}")
        dx = float(self.dx)
        if not np.isfinite(dx) or dx <= 0:
            raise ValueError(f"sample pitch must be positive and finite, got {self.dx!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "dx", dx)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def dq(self) -> float:
        return 2 * np.pi / (self.n * self.dx)

    @property
    def q(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dq

    @property
    def q_nyquist(self) -> float:
        return np.pi / self.dx

    @property
    def span(self) -> float:
        return self.n * self.dx


def make_grid(n: int, dx: float) -> Grid1D:
    """Build a centered grid of ``n`` samples (power of two) at pitch ``dx`` meters."""
    return Grid1D(n, dx)


@dataclass(frozen=True)
class SampledField:
    """Complex transverse envelope sampled on a :class:`Grid1D`.

    ``k`` is the wavenumber of the carrier in rad/m and ``z`` the plane the
    samples belong to. ``amp`` is stored read-only.
    """

    grid: Grid1D
    amp: np.ndarray
    k: float
    z: float = 0.0
    label: str = dc_field(default="", compare=False)

    def __post_init__(self):
        amp = _frozen(self.amp, complex)
        if amp.shape != (self.grid.n,):
            raise ValueError(f"amplitude has shape {amp.shape}, grid expects ({self.grid.n},)")
        if not np.isfinite(self.k) or self.k <= 0:
            raise ValueError(f"wavenumber must be positive, got {self.k!r}")
        object.__setattr__(self, "amp", amp)
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "z", float(self.z))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def wavelength(self) -> float:
        return 2 * np.pi / self.k

    def replace(self, **changes) -> "SampledField":
        values = dict(grid=self.grid, amp=self.amp, k=self.k, z=self.z, label=self.label)
        values.update(changes)
        return SampledField(**values)

    def __eq__(self, other):
        if not isinstance(other, SampledField):
            return NotImplemented
        return (self.grid == other.grid and self.k == other.k and self.z == other.z
                and np.array_equal(self.amp, other.amp))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AngularSpectrum:
    """Plane-wave amplitudes ``v(q)`` on the conjugate axis of ``grid``."""

    grid: Grid1D
    amp: np.ndarray
    k: float
    z: float = 0.0

    def __post_init__(self):
        amp = _frozen(self.amp, complex)
        if amp.shape != (self.grid.n,):
            raise ValueError(f"spectrum has shape {amp.shape}, grid expects ({self.grid.n},)")
        object.__setattr__(self, "amp", amp)

    @property
    def q(self) -> np.ndarray:
        return self.grid.q

    def energy(self) -> float:
        """``sum |v|^2 dq / 2 pi``, equal to :func:`power` of the field."""
        return float(np.sum(np.abs(self.amp) ** 2) * self.grid.dq / PARSEVAL_CONSTANT)


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    """Non-negative intensity samples over a transverse axis."""

    x: np.ndarray
    values: np.ndarray
    normalization: str = "peak"

    def __post_init__(self):
        x = _frozen(self.x, float)
        values = _frozen(self.values, float)
        if x.shape != values.shape or x.ndim != 1:
            raise ValueError("x and intensity must be 1D arrays of equal length")
        if np.any(values < 0):
            raise ValueError("intensity samples must be non-negative")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x_m,intensity\n")
        for xi, vi in zip(self.x, self.values):
            buf.write("%.9e,%.9e\n" % (xi, vi))
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8", newline="\n")
        return path

    @classmethod
    def read_csv(cls, path, normalization="raw") -> "IntensityProfile":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["x_m", "intensity"]:
                raise ValueError(f"{path}: expected header 'x_m,intensity'")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        if not rows:
            raise ValueError(f"{path}: no samples")
        x, v = np.array(rows).T
        return cls(x, v, normalization)

    def resample(self, x_new) -> "IntensityProfile":
        return IntensityProfile(x_new, np.interp(x_new, self.x, self.values), self.normalization)

    def crop(self, half_width: float) -> "IntensityProfile":
        keep = np.abs(self.x) <= half_width
        return IntensityProfile(self.x[keep], self.values[keep], self.normalization)


def _check_finite(amp, what):
    if not np.all(np.isfinite(amp)):
        raise ValueError(f"{what} contains NaN or Inf")


def to_spectrum(field: SampledField) -> AngularSpectrum:
    """Forward transform with kernel ``exp(-i q x)`` (see module docstring)."""
    _check_finite(field.amp, "field")
    v = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(field.amp))) * field.grid.dx
    return AngularSpectrum(field.grid, v, field.k, field.z)


def to_field(spec: AngularSpectrum, label: str = "") -> SampledField:
    """Exact inverse of :func:`to_spectrum`."""
    _check_finite(spec.amp, "spectrum")
    w = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(spec.amp))) / spec.grid.dx
    return SampledField(spec.grid, w, spec.k, spec.z, label)


def power(field: SampledField) -> float:
    """Integrated power ``sum |amp|^2 dx``."""
    return float(np.sum(np.abs(field.amp) ** 2) * field.grid.dx)


def intensity(field: SampledField, normalization: str = "peak") -> IntensityProfile:
    """``|amp|^2`` normalized to unit peak, unit integral (``power``) or left ``raw``."""
    values = np.abs(field.amp) ** 2
    if normalization == "peak":
        peak = values.max()
        if peak == 0:
            raise ValueError("cannot peak-normalize an all-zero field")
        values = values / peak
    elif normalization == "power":
        total = values.sum() * field.grid.dx
        if total == 0:
            raise ValueError("cannot power-normalize an all-zero field")
        values = values / total
    elif normalization != "raw":
        raise ValueError(f"unknown normalization {normalization!r}; use one of {NORMALIZATIONS}")
    return IntensityProfile(field.x, values, normalization)


def edge_energy_fraction(field: SampledField, band: float = 0.1) -> float:
    """Fraction of spectral energy in the outermost ``band`` of q-bins.

    ``band=0.1`` selects ``|q| >= 0.9 q_nyquist``, i.e. 5% of the bins on each side.
    """
    v2 = np.abs(to_spectrum(field).amp) ** 2
    total = v2.sum()
    if total == 0:
        return 0.0
    outer = np.abs(field.grid.q) >= (1 - band) * field.grid.q_nyquist
    return float(v2[outer].sum() / total)


def band_limit(field: SampledField, start: float = 0.3, stop: float = 0.5) -> SampledField:
    """Raised-cosine low-pass in the angular spectrum.

    The pass band ends at ``start * q_nyquist`` and the response reaches zero at
    ``stop * q_nyquist``.
    """
    if not 0 < start < stop <= 1:
        raise ValueError("band edges must satisfy 0 < start < stop <= 1")
    r = np.abs(field.grid.q) / field.grid.q_nyquist
    taper = 0.5 * (1 + np.cos(np.pi * (r - start) / (stop - start)))
    response = np.where(r <= start, 1.0, np.where(r >= stop, 0.0, taper))
    spec = to_spectrum(field)
    out = to_field(AngularSpectrum(spec.grid, spec.amp * response, spec.k, spec.z))
    return out.replace(label=field.label)


def plane_wave(grid: Grid1D, k: float, window: float | None = None, taper: float = 0.2,
               label: str = "source") -> SampledField:
    """Unit plane wave, optionally confined to ``|x| <= window/2`` with Tukey edges.

    ``taper`` is the Tukey fraction of the window that is rolled off.
    """
    if window is None:
        return SampledField(grid, np.ones(grid.n), k, 0.0, label)
    from scipy.signal.windows import tukey

    x = grid.x
    inside = np.abs(x) <= window / 2
    m = int(inside.sum())
    amp = np.zeros(grid.n)
    amp[inside] = tukey(m, taper) if m > 1 else 1.0
    return SampledField(grid, amp, k, 0.0, label)
