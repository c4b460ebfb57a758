"""Closed-form propagation of fields written as sums of Gaussians.

A field of the form ``W(x) = exp(-i chirp x^2) * sum_i c_i exp(-(x - x0_i)^2 / w_i^2)``
is fitted term by term and every term is carried through the Fresnel integral
analytically. Internally each term is the exponential of a complex quadratic
``-alpha x^2 + beta x + gamma``; the Fresnel transform maps that family onto
itself, and so does multiplication (which is how the second harmonic of a
Gaussian sum is formed).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, peak_widths

from .errors import FitError
from .field import Grid1D, SampledField

log = logging.getLogger(__name__)

FIT_RESIDUAL_LIMIT = 0.05


@dataclass(frozen=True)
class GaussianSum:
    """Sum of real-envelope Gaussians sharing one quadratic phase.

    ``terms`` holds ``(c, x0, w)`` triples: complex weight, center (m) and 1/e
    half-width (m). ``residual`` is the RMS fit error relative to the envelope
    peak (``nan`` when the sum was not produced by a fit).
    """

    terms: tuple
    k: float
    z: float = 0.0
    chirp: float = 0.0
    phase: float = 0.0
    residual: float = dc_field(default=float("nan"), compare=False)

    def __post_init__(self):
        terms = tuple((complex(c), float(x0), float(w)) for c, x0, w in self.terms)
        if not terms:
            raise ValueError("a Gaussian sum needs at least one term")
        if any(not (w > 0) for _, _, w in terms):
            raise ValueError("Gaussian widths must be positive")
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    def quadratics(self):
        """Per-term complex ``(alpha, beta, gamma)`` with the global phase folded in."""
        c = np.array([t[0] for t in self.terms])
        x0 = np.array([t[1] for t in self.terms])
        w = np.array([t[2] for t in self.terms])
        alpha = 1 / w ** 2 + 1j * self.chirp
        beta = (2 * x0 / w ** 2).astype(complex)
        gamma = np.log(c.astype(complex)) - x0 ** 2 / w ** 2 + 1j * self.phase
        return alpha, beta, gamma

    def envelope(self, x) -> np.ndarray:
        """The Gaussian sum alone, without the quadratic phase."""
        x = np.asarray(x, dtype=float)[:, None]
        c, x0, w = (np.array(v) for v in zip(*self.terms))
        return np.exp(-((x - x0) / w) ** 2) @ c

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _evaluate_quadratics(x, *self.quadratics())

    def to_field(self, grid: Grid1D, label: str = "gaussian-sum") -> SampledField:
        return SampledField(grid, self.evaluate(grid.x), self.k, self.z, label)

    def square(self) -> "GaussianSum":
        """The pointwise square, i.e. the collinear up-converted field at ``2k``."""
        out = []
        for i, (ci, xi, wi) in enumerate(self.terms):
            for j in range(i, len(self.terms)):
                cj, xj, wj = self.terms[j]
                inv = 1 / wi ** 2 + 1 / wj ** 2
                x0 = (xi / wi ** 2 + xj / wj ** 2) / inv
                weight = ci * cj * np.exp(-(xi - xj) ** 2 / (wi ** 2 + wj ** 2))
                out.append(((1 if i == j else 2) * weight, x0, inv ** -0.5))
        return GaussianSum(tuple(out), 2 * self.k, self.z, 2 * self.chirp, 2 * self.phase)


def _evaluate_quadratics(x, alpha, beta, gamma):
    # completing the square keeps the exponent well scaled far from the centers
    mu = beta / (2 * alpha)
    offset = gamma + beta ** 2 / (4 * alpha)
    expo = -alpha[None, :] * (x[:, None] - mu[None, :]) ** 2 + offset[None, :]
    return np.exp(expo).sum(axis=1)


def fresnel_quadratics(alpha, beta, gamma, z: float, k: float):
    """Map complex-quadratic exponents through a Fresnel propagation of ``z``."""
    if z == 0:
        return alpha, beta, gamma
    p = 1j * k / (2 * z)
    denom = p - alpha
    return (p * alpha / denom,
            p * beta / denom,
            gamma - beta ** 2 / (4 * denom) + 0.5 * np.log(p / denom))


def propagate_gaussian_sum(gs: GaussianSum, z: float, grid: Grid1D) -> SampledField:
    """Propagate every Gaussian analytically by ``z`` and sample the sum on ``grid``."""
    a, b, g = fresnel_quadratics(*gs.quadratics(), float(z), gs.k)
    return SampledField(grid, _evaluate_quadratics(grid.x, a, b, g), gs.k, gs.z + z,
                        "gaussian-sum")


def estimate_chirp(field: SampledField, rel_amp: float = 0.1):
    """Estimate ``(chirp, phase)`` such that ``amp ~ real * exp(i (phase - chirp x^2))``.

    Works on ``amp^2`` so the sign changes of the real envelope drop out. The
    curvature is regressed on the phase steps between neighbouring samples
    brighter than ``rel_amp`` of the peak amplitude; the dim wings are left out
    because their steps may wrap and carry most of the lever arm.
    """
    sq = field.amp ** 2
    mag = np.abs(sq)
    peak = int(np.argmax(mag))
    if mag[peak] == 0:
        return 0.0, 0.0
    strong = mag >= rel_amp ** 2 * mag[peak]
    pairs = np.flatnonzero(strong[:-1] & strong[1:])
    if pairs.size < 2:
        return 0.0, float(np.angle(field.amp[peak]))
    x = field.grid.x
    ratio = sq[pairs + 1] / sq[pairs]
    lever = x[pairs + 1] ** 2 - x[pairs] ** 2
    wts = np.sqrt(mag[pairs])
    steps = np.angle(ratio)
    chirp = float(-np.sum(wts * lever * steps) / np.sum(wts * lever * lever) / 2)
    rotated = sq[peak] * np.exp(2j * chirp * x[peak] ** 2)
    return chirp, float(np.angle(rotated) / 2)


def _initial_terms(x, env, n_terms):
    mag = np.abs(env)
    peaks, _ = find_peaks(np.concatenate([[0.0], mag, [0.0]]))
    peaks = peaks - 1
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(mag))])
    order = np.argsort(mag[peaks])[::-1]
    peaks = np.sort(peaks[order[:n_terms]])
    with warnings.catch_warnings():
        # flat-topped lobes report zero width; the floor below handles them
        warnings.simplefilter("ignore", RuntimeWarning)
        widths = peak_widths(mag, peaks, rel_height=0.5)[0] * (x[1] - x[0])
    widths = np.maximum(widths, 2 * (x[1] - x[0])) / (2 * np.sqrt(np.log(2)))
    centers = list(x[peaks])
    sigmas = list(widths)
    # spare terms start as broader copies of the strongest lobes
    rank = 0
    while len(centers) < n_terms:
        idx = np.argsort(mag[peaks])[::-1][rank % len(peaks)]
        centers.append(x[peaks[idx]])
        sigmas.append(widths[idx] * (2 + rank // len(peaks)))
        rank += 1
    return np.array(centers), np.array(sigmas)


def fit_gaussian_sum(field: SampledField, n_terms: int, chirp: float | None = None,
                     half_width: float | None = None, max_nfev: int = 400,
                     residual_limit: float = FIT_RESIDUAL_LIMIT) -> GaussianSum:
    """Least-squares fit of the real envelope of ``field`` by ``n_terms`` Gaussians.

    The quadratic phase ``exp(-i chirp x^2)`` is removed first (estimated from
    the field when ``chirp`` is None) and reattached to the result unchanged.
    Weights are solved linearly for given centers and widths; those are refined
    by Levenberg-Marquardt on the projected residual. ``half_width`` restricts
    the fit to ``|x| <= half_width``.

    Raises :class:`FitError` when the RMS residual exceeds ``residual_limit``
    times the envelope peak.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    x_all = field.grid.x
    if chirp is None:
        chirp, phase = estimate_chirp(field)
    else:
        prod = field.amp ** 2 * np.exp(2j * chirp * x_all ** 2)
        phase = 0.5 * float(np.angle(prod[np.argmax(np.abs(prod))]))
    rotated = field.amp * np.exp(1j * (chirp * x_all ** 2 - phase))
    peak = np.abs(rotated).max()
    if peak == 0:
        raise FitError("cannot fit a Gaussian sum to an all-zero field")
    imag = np.abs(rotated.imag).max() / peak
    if imag > 1e-2:
        log.warning("field is not real up to a quadratic phase (imaginary part %.1e of peak)", imag)

    sel = np.ones(x_all.size, bool) if half_width is None else np.abs(x_all) <= half_width
    x = x_all[sel]
    y = rotated.real[sel]
    scale = max(np.abs(x).max(), x[1] - x[0])

    centers, sigmas = _initial_terms(x, y, n_terms)
    theta0 = np.concatenate([centers / scale, np.log(sigmas / scale)])

    def basis(theta):
        c0 = theta[:n_terms] * scale
        w = np.exp(theta[n_terms:]) * scale
        return np.exp(-((x[:, None] - c0[None, :]) / w[None, :]) ** 2)

    def weights(g):
        return np.linalg.lstsq(g, y, rcond=None)[0]

    def residual(theta):
        g = basis(theta)
        return g @ weights(g) - y

    sol = least_squares(residual, theta0, method="lm", x_scale="jac", max_nfev=max_nfev * theta0.size,
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    g = basis(sol.x)
    c = weights(g)
    rms = float(np.sqrt(np.mean((g @ c - y) ** 2)) / np.abs(y).max())
    if rms > residual_limit:
        raise FitError(f"Gaussian-sum fit residual {rms:.2%} of peak exceeds "
                       f"{residual_limit:.0%} after {sol.nfev} evaluations", residual=rms)
    x0 = sol.x[:n_terms] * scale
    w = np.exp(sol.x[n_terms:]) * scale
    order = np.argsort(x0)
    terms = tuple((c[i], x0[i], w[i]) for i in order)
    return GaussianSum(terms, field.k, field.z, chirp, phase, residual=rms)
