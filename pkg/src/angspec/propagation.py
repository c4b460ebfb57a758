"""Paraxial free-space propagation.

Two independent numerical routes are provided:

* :func:`propagate_spectrum` multiplies the angular spectrum by the transfer
  function ``exp(-i q^2 z / 2k)`` (periodic, O(n log n));
* :func:`propagate_quadrature` evaluates the Fresnel integral

      U(x) = sqrt(k / (2 pi i z)) integral W(xi) exp(i k (x - xi)^2 / 2z) d xi

  directly with the trapezoid rule (non-periodic, O(n^2)).

The kernel prefactor is the one whose Fourier transform under the
``exp(-i q x)`` convention is exactly the spectral transfer function, so the two
routes agree without any extra scaling. Neither route carries the common
``exp(i k z)`` phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import AliasingError, SamplingError
from .field import AngularSpectrum, SampledField, edge_energy_fraction, to_field, to_spectrum

ALIASING_BAND = 0.1
ALIASING_THRESHOLD = 1e-6
QUADRATURE_MAX_N = 16384
_QUADRATURE_BLOCK = 128

METHODS = ("spectral", "quadrature", "gaussian-sum")


@dataclass(frozen=True)
class PropagationPlan:
    method: str
    z: float

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown propagation method {self.method!r}")
        if not np.isfinite(self.z):
            raise ValueError("propagation distance must be finite")
        if self.method == "quadrature" and self.z == 0:
            raise ValueError("quadrature propagation requires z != 0")

    def apply(self, field: SampledField) -> SampledField:
        if self.method == "spectral":
            return propagate_spectrum(field, self.z)
        if self.method == "quadrature":
            return propagate_quadrature(field, self.z)
        raise ValueError("gaussian-sum propagation starts from a GaussianSum; "
                         "use propagate_gaussian_sum")


def check_band_limit(field: SampledField, threshold: float = ALIASING_THRESHOLD) -> float:
    """Raise :class:`AliasingError` if the outer 10% of q-bins hold too much energy."""
    frac = edge_energy_fraction(field, ALIASING_BAND)
    if frac > threshold:
        raise AliasingError(
            f"{frac:.2e} of the spectral energy lies in the outer {ALIASING_BAND:.0%} of q-bins "
            f"(limit {threshold:.0e}); refine dx or band-limit the field")
    return frac


def transfer_function(q, z: float, k: float) -> np.ndarray:
    return np.exp(-1j * np.asarray(q) ** 2 * z / (2 * k))


def propagate_spectrum(field: SampledField, z: float, guard: bool = True) -> SampledField:
    """Propagate by ``z`` meters with the paraxial angular-spectrum transfer function.

    Power is conserved to rounding. With ``guard`` on, the input must pass
    :func:`check_band_limit`.
    """
    z = float(z)
    if not np.isfinite(z):
        raise ValueError(f"propagation distance must be finite, got {z!r}")
    if guard:
        check_band_limit(field)
    if z == 0:
        return field.replace()
    spec = to_spectrum(field)
    moved = AngularSpectrum(spec.grid, spec.amp * transfer_function(spec.q, z, field.k), field.k,
                            field.z + z)
    return to_field(moved, field.label)


def fresnel_kernel(lags, z: float, k: float) -> np.ndarray:
    """Sampled Fresnel impulse response ``sqrt(k/(2 pi i z)) exp(i k s^2 / 2z)``."""
    lags = np.asarray(lags, dtype=float)
    return np.sqrt(k / (2j * np.pi * z)) * np.exp(1j * k * lags ** 2 / (2 * z))


def resolved_lag(z: float, k: float, dx: float) -> float:
    """Largest lag at which the kernel chirp is still below the grid Nyquist rate."""
    return np.pi * abs(z) / (k * dx)


def propagate_quadrature(field: SampledField, z: float, max_n: int = QUADRATURE_MAX_N) -> SampledField:
    """Direct trapezoid-rule evaluation of the Fresnel integral on the field's grid.

    The kernel is rolled off (raised cosine) between 0.6 and 0.9 of
    :func:`resolved_lag`: beyond it the sampled chirp aliases, and the sum is
    only meaningful where the output does not depend on such lags. The sum is
    a faithful oracle (RMS below 1e-6 of peak for fields band-limited to
    0.3 of Nyquist) once the resolved lag spans a few hundred samples; at
    845 nm and 2 um pitch that is z >= 3 mm. For grids of ``n`` samples this
    costs ``n^2`` complex multiply-adds; ``max_n`` bounds it.
    """
    z = float(z)
    if z == 0 or not np.isfinite(z):
        raise ValueError("quadrature propagation requires a finite z != 0")
    grid = field.grid
    n = grid.n
    if n > max_n:
        raise SamplingError(f"grid of {n} samples exceeds the quadrature limit of {max_n}")
    dx = grid.dx

    lags = np.arange(-(n - 1), n) * dx
    kernel = fresnel_kernel(lags, z, field.k) * dx
    r = np.abs(lags) / resolved_lag(z, field.k, dx)
    kernel *= np.where(r <= 0.6, 1.0, np.where(r >= 0.9, 0.0, 0.5 * (1 + np.cos(np.pi * (r - 0.6) / 0.3))))

    weights = np.ones(n)
    weights[0] = weights[-1] = 0.5
    src = field.amp * weights

    # row i of the Toeplitz matrix is kernel[i - j + n - 1] for j = 0..n-1
    rows = sliding_window_view(kernel[::-1], n)
    out = np.empty(n, dtype=complex)
    for start in range(0, n, _QUADRATURE_BLOCK):
        stop = min(start + _QUADRATURE_BLOCK, n)
        block = rows[n - stop:n - start] @ src
        out[start:stop] = block[::-1]
    return SampledField(grid, out, field.k, field.z + z, field.label)


def propagate(field: SampledField, z: float, method: str = "spectral") -> SampledField:
    return PropagationPlan(method, z).apply(field)
