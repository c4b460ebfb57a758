"""Closed-form references for the slit/lens/crystal bench and the fringe fitter.

The references describe a double slit (width ``a``, separation ``d``) a
distance ``z0`` before a thin lens of focal length ``f``, with the crystal in
the back focal plane and a detector ``zD`` behind it. The second harmonic
(SH) is the square of the fundamental at the crystal and travels with ``2k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import least_squares, lsq_linear

from .elements import DoubleSlit
from .errors import FitError, GeometryError
from .field import IntensityProfile

FIT_RESIDUAL_LIMIT = 0.10
MIN_FRINGES = 10
FRINGE_CSV_HEADER = "z_m,mu1,mu2,K1,K2,residual"


def _sinc(u):
    """Unnormalized ``sin(u)/u`` with ``sinc(0) = 1``."""
    return np.sinc(np.asarray(u, dtype=float) / np.pi)


@dataclass(frozen=True)
class BenchGeometry:
    """Distances and slit parameters of the bench, all in meters."""

    z0: float
    f: float
    zD: float
    a: float
    d: float
    wavelength: float

    def __post_init__(self):
        for name in ("z0", "f", "zD", "a", "d", "wavelength"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise GeometryError(f"{name} must be a positive length, got {value!r}")
        if self.z0 == self.f:
            raise GeometryError("z0 = f puts the image at infinity")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def slit(self) -> DoubleSlit:
        return DoubleSlit(self.a, self.d)

    @property
    def magnification(self) -> float:
        return self.zD / self.f

    @classmethod
    def at_image_plane(cls, z0, f, a, d, wavelength) -> "BenchGeometry":
        return cls(z0, f, image_distance(z0, f), a, d, wavelength)


def slit_spectrum(q, slit: DoubleSlit) -> np.ndarray:
    """Normalized double-slit angular spectrum ``sinc(q a/2) cos(q d/2)``."""
    q = np.asarray(q, dtype=float)
    return _sinc(q * slit.a / 2) * np.cos(q * slit.d / 2)


def crystal_plane_field(x, g: BenchGeometry) -> np.ndarray:
    """Fundamental in the back focal plane: the slit spectrum at ``q = kx/f`` times a chirp."""
    x = np.asarray(x, dtype=float)
    k, f = g.k, g.f
    return (_sinc(k / f * g.a / 2 * x) * np.cos(k / f * g.d / 2 * x)
            * np.exp(-1j * k * (g.z0 - f) * x ** 2 / (2 * f ** 2)))


def image_distance(z0: float, f: float) -> float:
    """Distance behind the focal plane where the slits are imaged: ``f^2 / (z0 - f)``.

    This is the thin-lens equation ``1/f = 1/i + 1/o`` with ``o = z0`` and
    ``i = f + zD``; the two forms are checked against each other.
    """
    z0, f = float(z0), float(f)
    if z0 == f:
        raise GeometryError("object in the front focal plane (z0 = f): the image is at infinity")
    zD = f * f / (z0 - f)
    if z0 != 0 and f + zD != 0:
        lhs, rhs = 1 / f, 1 / (f + zD) + 1 / z0
        if not math.isclose(lhs, rhs, rel_tol=1e-12):
            raise ArithmeticError(f"image condition inconsistent: 1/f = {lhs!r}, 1/i + 1/o = {rhs!r}")
    return zD


def slit_image(x, g: BenchGeometry, rtol: float = 1e-6) -> np.ndarray:
    """Magnified slit mask (widths ``a M``, separation ``d M``, ``M = zD/f``) at the image plane."""
    zi = image_distance(g.z0, g.f)
    if not math.isclose(g.zD, zi, rel_tol=rtol):
        raise GeometryError(f"detector at zD = {g.zD:g} m is not the image plane ({zi:g} m)")
    m = g.magnification
    return DoubleSlit(g.a * m, g.d * m).mask(x)


@dataclass(frozen=True, eq=False)
class ConvolutionProfile:
    """Real samples on a uniform axis, as produced by :func:`self_convolution`."""

    x: np.ndarray
    values: np.ndarray

    def __call__(self, x_new) -> np.ndarray:
        return np.interp(x_new, self.x, self.values, left=0.0, right=0.0)


def self_convolution(x, values) -> ConvolutionProfile:
    """Discrete ``(p * p)(x) = sum p(xi) p(x - xi) dxi`` on the doubled support."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(values, dtype=float)
    if x.shape != p.shape or x.ndim != 1 or x.size < 1:
        raise ValueError("x and values must be 1D arrays of equal, non-zero length")
    dx = x[1] - x[0] if x.size > 1 else 1.0
    out = np.convolve(p, p) * dx
    return ConvolutionProfile(2 * x[0] + dx * np.arange(out.size), out)


def sh_image_amplitude(x, g: BenchGeometry, dx: float) -> np.ndarray:
    """SH amplitude at the image plane: the slit image's self-convolution read at ``2x``.

    The SH carries ``2k`` while the fundamental image scales with ``k``, so the
    convolution coordinate maps to half the transverse position. ``dx`` is the
    sampling used for the convolution.
    """
    m = g.magnification
    half = (g.d + g.a) * m
    n = int(np.ceil(half / dx)) + 2
    xs = np.arange(-n, n + 1) * dx
    conv = self_convolution(xs, DoubleSlit(g.a * m, g.d * m).mask(xs))
    return conv(2 * np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# two-frequency fringe fit


@dataclass(frozen=True)
class FringeFit:
    """Parameters of ``A sinc^p((x-c)/s) [1 + mu1 cos K1 (x-c) + mu2 cos K2 (x-c)] + b``."""

    s: float
    K1: float
    K2: float
    mu1: float
    mu2: float
    amplitude: float
    baseline: float
    center: float
    residual: float
    envelope_power: int = 4
    lock_ratio: bool = False
    uncertainties: dict = dc_field(default_factory=dict, compare=False)

    @property
    def ratio(self) -> float:
        return self.K2 / self.K1

    @property
    def visibility_ratio(self) -> float:
        return self.mu1 / self.mu2 if self.mu2 > 0 else math.inf

    def visibility_ratio_sigma(self) -> float:
        """First-order uncertainty of ``mu1/mu2`` from the fit covariance."""
        s1 = self.uncertainties.get("mu1", math.nan)
        s2 = self.uncertainties.get("mu2", math.nan)
        if self.mu2 <= 0:
            return math.inf
        r = self.mu1 / self.mu2
        rel1 = s1 / self.mu1 if self.mu1 > 0 else math.inf
        return abs(r) * math.hypot(rel1, s2 / self.mu2)

    def evaluate(self, x) -> np.ndarray:
        return _model(np.asarray(x, dtype=float), self.s, self.K1, self.K2, self.center,
                      self.envelope_power, self.amplitude, self.mu1, self.mu2, self.baseline)

    def csv_row(self, z: float) -> str:
        return ",".join("%.9e" % v for v in (z, self.mu1, self.mu2, self.K1, self.K2, self.residual))


def _model(x, s, K1, K2, c, p, A, mu1, mu2, b):
    u = x - c
    return A * _sinc(u / s) ** p * (1 + mu1 * np.cos(K1 * u) + mu2 * np.cos(K2 * u)) + b


def _columns(x, s, K1, K2, c, p, with_mu2):
    u = x - c
    env = _sinc(u / s) ** p
    cols = [env, env * np.cos(K1 * u)]
    if with_mu2:
        cols.append(env * np.cos(K2 * u))
    cols.append(np.ones_like(x))
    return np.stack(cols, axis=1)


def _dominant_wavenumbers(x, y, count=3):
    """Strongest non-DC spatial frequencies of ``y`` (rad/m), strongest first."""
    dx = x[1] - x[0]
    n = 1 << int(np.ceil(np.log2(8 * x.size)))
    spec = np.abs(np.fft.rfft((y - y.mean()) * np.hanning(y.size), n))
    K = 2 * np.pi * np.fft.rfftfreq(n, dx)
    lo = int(np.ceil(n * dx / (x[-1] - x[0]) * 2))
    cand = []
    order = np.argsort(spec[lo:])[::-1] + lo
    for i in order:
        if not spec[i] > 1e-12 * spec[lo:].max(initial=0.0):
            break
        if all(abs(K[i] - c) > 4 * 2 * np.pi / (x[-1] - x[0]) for c in cand):
            cand.append(K[i])
        if len(cand) == count:
            break
    return cand


def _envelope_scale(x, y, c):
    """Width ``s`` of a sinc envelope from the intensity-weighted second moment."""
    w = np.clip(y - np.min(y), 0, None)
    var = np.sum(w * (x - c) ** 2) / max(np.sum(w), 1e-300)
    return max(np.sqrt(var) * 2, 4 * (x[1] - x[0]))


def fit_two_frequency(profile: IntensityProfile, lock_ratio: bool = False, envelope_power: int = 4,
                      pin_mu2: bool = False, min_fringes: int = MIN_FRINGES,
                      residual_limit: float = FIT_RESIDUAL_LIMIT) -> FringeFit:
    """Fit ``A sinc^p((x-c)/s)[1 + mu1 cos K1(x-c) + mu2 cos K2(x-c)] + b`` to ``profile``.

    Given ``(s, K1, K2, c)`` the model is linear in ``(A, A mu1, A mu2, b)``; those
    are solved by bounded linear least squares with ``mu >= 0``. The nonlinear
    parameters are seeded by a coarse scan around the dominant spatial
    frequencies and then refined jointly with the linear ones.

    ``lock_ratio`` ties ``K2 = 2 K1``. ``pin_mu2`` drops the second cosine (single
    frequency model); use ``envelope_power=2`` for a fundamental intensity.

    Raises :class:`FitError` when the fitted pattern has fewer than
    ``min_fringes`` periods of ``K1`` across the profile, the RMS residual
    exceeds ``residual_limit`` of the peak, or a fitted wavenumber lies above
    the sampling limit ``pi/dx``.
    """
    x = np.asarray(profile.x, dtype=float)
    y = np.asarray(profile.values, dtype=float)
    if x.size < 16:
        raise FitError("profile has fewer than 16 samples")
    peak = y.max()
    if not peak > 0:
        raise FitError("profile is identically zero")
    y = y / peak
    span = x[-1] - x[0]
    p = int(envelope_power)
    with_mu2 = not pin_mu2

    c0 = float(np.sum(x * y) / np.sum(y))
    s0 = _envelope_scale(x, y, c0)

    def project(s, K1, K2, c):
        g = _columns(x, s, K1, K2, c, p, with_mu2)
        coef, *_ = np.linalg.lstsq(g, y, rcond=None)
        return coef, g @ coef - y

    # coarse scan: for each candidate K1 (a dominant frequency or half of one)
    # try a ladder of envelope widths and keep the smallest projected residual
    dominant = _dominant_wavenumbers(x, y)
    candidates = []
    for K in dominant:
        candidates.extend([K, K / 2] if with_mu2 else [K])
    if not candidates:
        raise FitError("profile has no oscillating component")
    free_k2 = with_mu2 and not lock_ratio
    dK = 2 * np.pi / span
    tie = 1e-12 * float(y @ y)
    best = None
    for Kc in candidates:
        for K1 in Kc + dK * np.linspace(-1, 1, 9):
            if K1 <= 0:
                continue
            # an unlocked K2 may sit on another dominant frequency; a K1 too slow
            # to pass the fringe gate would only mimic the baseline there
            seeds = [2 * K1]
            if free_k2 and K1 * span / (2 * np.pi) >= min_fringes:
                seeds += [K for K in dominant if K > 1.2 * K1]
            for K2 in seeds:
                for s in s0 * np.geomspace(0.25, 4, 13):
                    _, r = project(s, K1, K2, c0)
                    cost = float(r @ r)
                    # ties go to the earlier, stronger candidate
                    if best is None or cost < best[0] - tie:
                        best = (cost, s, K1, K2)
    _, s_init, K1_init, K2_init = best

    # variable-projection refinement of the nonlinear parameters
    def unpack(theta):
        s, K1, c = theta[0], theta[1], theta[2]
        K2 = 2 * K1 if (lock_ratio or not with_mu2) else theta[3]
        return s, K1, K2, c

    theta0 = [s_init, K1_init, c0] + ([] if (lock_ratio or not with_mu2) else [K2_init])
    sol = least_squares(lambda t: project(*unpack(t))[1], theta0, x_scale="jac", method="lm",
                        max_nfev=2000)
    s, K1, K2, c = unpack(sol.x)

    # bounded linear solve, then a joint refinement for the covariance
    g = _columns(x, s, K1, K2, c, p, with_mu2)
    lin = lsq_linear(g, y, bounds=([0] * (g.shape[1] - 1) + [-np.inf], np.inf)).x
    A = lin[0]
    if A <= 0:
        raise FitError("fitted envelope amplitude vanished")
    mu1 = lin[1] / A
    mu2 = lin[2] / A if with_mu2 else 0.0
    b = lin[-1]

    names = ["s", "K1", "c"] + ([] if (lock_ratio or not with_mu2) else ["K2"]) + ["A", "mu1"] \
        + (["mu2"] if with_mu2 else []) + ["b"]

    def full(theta):
        s_, K1_, K2_, c_ = unpack(theta)
        A_, mu1_ = theta[len(theta0)], theta[len(theta0) + 1]
        mu2_ = theta[len(theta0) + 2] if with_mu2 else 0.0
        return _model(x, s_, K1_, K2_, c_, p, A_, mu1_, mu2_, theta[-1]) - y

    start = list(sol.x) + [A, mu1] + ([mu2] if with_mu2 else []) + [b]
    lower = [-np.inf] * len(start)
    lower[len(theta0) + 1] = 0.0
    if with_mu2:
        lower[len(theta0) + 2] = 0.0
    start = np.maximum(start, np.array(lower) + 0.0)
    joint = least_squares(full, start, bounds=(lower, np.inf), x_scale="jac", method="trf",
                          max_nfev=2000)
    th = joint.x
    s, K1, K2, c = unpack(th)
    K1, K2 = abs(K1), abs(K2)
    A, mu1 = th[len(theta0)], th[len(theta0) + 1]
    mu2 = th[len(theta0) + 2] if with_mu2 else 0.0
    b = th[-1]
    resid = joint.fun
    rms = float(np.sqrt(np.mean(resid ** 2)))

    dof = max(x.size - th.size, 1)
    try:
        cov = np.linalg.pinv(joint.jac.T @ joint.jac) * float(resid @ resid) / dof
        sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        sig = np.full(th.size, np.nan)
    unc = dict(zip(names, sig.tolist()))
    if "K2" not in unc:
        unc["K2"] = 2 * unc["K1"] if with_mu2 else 0.0
    unc.setdefault("mu2", 0.0)

    fit = FringeFit(float(abs(s)), float(K1), float(K2), float(mu1), float(mu2), float(A * peak),
                    float(b * peak), float(c), rms, p,
                    bool(lock_ratio), unc)
    fringes = abs(K1) * span / (2 * np.pi)
    if fringes < min_fringes:
        raise FitError(f"only {fringes:.1f} fringes across the profile (need >= {min_fringes})",
                       residual=rms)
    if rms > residual_limit:
        raise FitError(f"fringe fit residual {rms:.2%} of peak exceeds {residual_limit:.0%}",
                       residual=rms)
    nyquist = np.pi / (x[1] - x[0])
    if max(K1, K2 if with_mu2 else 0.0) > nyquist:
        raise FitError(f"fitted wavenumber {max(K1, K2):.3g} rad/m exceeds the sampling limit "
                       f"{nyquist:.3g} rad/m", residual=rms)
    return fit


# ---------------------------------------------------------------------------
# evolution of the visibilities behind the crystal

AUTO_ROI_LEVEL = 1e-4


@dataclass(frozen=True)
class EvolutionPoint:
    """Fringe fit of the SH intensity at distance ``z`` behind the crystal."""

    z: float
    fit: FringeFit | None
    error: str | None = None

    @property
    def mu1(self) -> float:
        return self.fit.mu1 if self.fit is not None else math.nan

    @property
    def mu2(self) -> float:
        return self.fit.mu2 if self.fit is not None else math.nan

    def csv_row(self) -> str:
        if self.fit is not None:
            return self.fit.csv_row(self.z)
        return ",".join(["%.9e" % self.z] + ["nan"] * 5)


def auto_half_width(profile: IntensityProfile, level: float = AUTO_ROI_LEVEL) -> float:
    """Largest ``|x|`` where the intensity reaches ``level`` of its peak."""
    v = np.asarray(profile.values)
    return float(np.abs(profile.x[v >= level * v.max()]).max())


def visibility_evolution(scene, z_list, half_width: float | None = None,
                         lock_ratio: bool = False) -> list:
    """Fit the SH pattern at each distance in ``z_list`` behind the crystal.

    ``scene`` (text-parsed or validated) must contain an ``shg`` element; the
    SH field right after it is propagated to every plane. ``half_width`` fixes
    the fitted window, otherwise each plane uses the region above
    ``AUTO_ROI_LEVEL`` of its peak. Fit failures are recorded per plane.
    """
    from .field import intensity
    from .propagation import propagate_spectrum
    from .scene import crystal_state

    z_values = [float(z) for z in z_list]
    if any(not (np.isfinite(z) and z >= 0) for z in z_values):
        raise ValueError("detection distances must be finite and >= 0")
    sh = crystal_state(scene).harmonic
    out = []
    for z in sorted(z_values):
        prof = intensity(propagate_spectrum(sh, z))
        hw = half_width if half_width is not None else auto_half_width(prof)
        try:
            out.append(EvolutionPoint(z, fit_two_frequency(prof.crop(hw), lock_ratio=lock_ratio)))
        except FitError as err:
            out.append(EvolutionPoint(z, None, str(err)))
    return out
