import numpy as np
import pytest

from angspec.analytics import BenchGeometry, crystal_plane_field, fit_two_frequency
from angspec.errors import FitError
from angspec.field import SampledField, intensity, make_grid
from angspec.gaussian_sum import GaussianSum, estimate_chirp, fit_gaussian_sum, propagate_gaussian_sum
from angspec.presets import render
from angspec.propagation import propagate_spectrum

K = 2 * np.pi / 845e-9


def _rel_rms(a, b):
    return float(np.sqrt(np.mean(np.abs(a - b) ** 2)) / np.abs(b).max())


class TestGaussianSum:
    def test_invalid(self):
        with pytest.raises(ValueError):
            GaussianSum((), K)
        with pytest.raises(ValueError):
            GaussianSum(((1.0, 0.0, 0.0),), K)

    def test_evaluate_with_chirp(self):
        gs = GaussianSum(((2.0, 1e-4, 5e-5),), K, chirp=3e6, phase=0.4)
        x = np.linspace(-3e-4, 3e-4, 101)
        expect = 2 * np.exp(-((x - 1e-4) / 5e-5) ** 2) * np.exp(1j * (0.4 - 3e6 * x ** 2))
        assert np.allclose(gs.evaluate(x), expect, rtol=1e-12, atol=1e-14)
        assert np.allclose(gs.envelope(x), expect.real * 0 + 2 * np.exp(-((x - 1e-4) / 5e-5) ** 2))

    def test_square(self):
        gs = GaussianSum(((1.0, -1e-4, 6e-5), (0.5 - 0.2j, 1.5e-4, 4e-5)), K, chirp=1e6, phase=0.3)
        x = np.linspace(-4e-4, 4e-4, 401)
        sq = gs.square()
        assert len(sq) == 3 and sq.k == 2 * K
        assert np.allclose(sq.evaluate(x), gs.evaluate(x) ** 2, rtol=1e-10, atol=1e-14)

    def test_zero_distance(self):
        grid = make_grid(256, 2e-6)
        gs = GaussianSum(((1.0, 0.0, 5e-5), (0.3, 1e-4, 3e-5)), K)
        assert np.allclose(propagate_gaussian_sum(gs, 0.0, grid).amp, gs.evaluate(grid.x))

    @pytest.mark.parametrize("z", [0.05, 0.3, 1.0])
    def test_textbook_waist(self, z):
        w0 = 0.1e-3
        zr = K * w0 ** 2 / 2
        grid = make_grid(8192, 4e-6)
        out = propagate_gaussian_sum(GaussianSum(((1.0, 0.0, w0),), K), z, grid)
        prof = intensity(out, "raw")
        width = 2 * np.sqrt(np.sum(prof.values * grid.x ** 2) / np.sum(prof.values))
        assert width == pytest.approx(w0 * np.sqrt(1 + (z / zr) ** 2), rel=1e-6)

    def test_matches_spectral_propagation(self):
        grid = make_grid(4096, 2e-6)
        gs = GaussianSum(((1.0, -1.5e-4, 8e-5), (0.7j, 2e-4, 6e-5)), K, chirp=2e6)
        closed = propagate_gaussian_sum(gs, 0.2, grid).amp
        numeric = propagate_spectrum(gs.to_field(grid), 0.2).amp
        # the periodic grid leaves ~1e-10 of wrapped wing in the numeric result
        assert _rel_rms(closed, numeric) < 1e-9


class TestFit:
    def test_fixed_point(self):
        grid = make_grid(2048, 2e-6)
        truth = GaussianSum(((1.0, -2e-4, 1e-4), (0.6, 2e-4, 8e-5)), K, chirp=5e5, phase=0.2)
        fit = fit_gaussian_sum(truth.to_field(grid), 2)
        assert fit.residual < 1e-6
        assert _rel_rms(fit.evaluate(grid.x), truth.evaluate(grid.x)) < 1e-6

    def test_two_centers(self):
        grid = make_grid(2048, 2e-6)
        truth = GaussianSum(((1.0, -3e-4, 7e-5), (1.0, 3e-4, 7e-5)), K)
        fit = fit_gaussian_sum(truth.to_field(grid), 2)
        centers = sorted(t[1] for t in fit.terms)
        assert centers == pytest.approx([-3e-4, 3e-4], abs=1e-9)

    def test_chirp_estimate(self):
        grid = make_grid(2048, 2e-6)
        truth = GaussianSum(((1.0, 0.0, 3e-4),), K, chirp=-7e5, phase=-0.5)
        chirp, phase = estimate_chirp(truth.to_field(grid))
        assert chirp == pytest.approx(-7e5, rel=1e-9)
        assert phase == pytest.approx(-0.5, abs=1e-9)

    def test_crystal_plane_envelope(self):
        g = BenchGeometry.at_image_plane(0.123, 0.10, 0.2e-3, 0.4e-3, 845e-9)
        grid = make_grid(4096, 2e-6)
        fld = SampledField(grid, crystal_plane_field(grid.x, g), K)
        fit = fit_gaussian_sum(fld, 12, half_width=1.3e-3)
        assert fit.residual <= 0.02
        assert fit.chirp == pytest.approx(K * (0.123 - 0.10) / (2 * 0.10 ** 2), rel=1e-6)

    def test_errors(self):
        grid = make_grid(256, 2e-6)
        with pytest.raises(ValueError):
            fit_gaussian_sum(SampledField(grid, np.ones(256), K), 0)
        with pytest.raises(FitError):
            fit_gaussian_sum(SampledField(grid, np.zeros(256), K), 2)
        box = (np.abs(grid.x) < 1e-4).astype(float)
        with pytest.raises(FitError) as info:
            fit_gaussian_sum(SampledField(grid, box, K), 1, residual_limit=0.01)
        assert info.value.residual > 0.01


def test_far_field_two_to_one():
    """A 12-term sum propagated 43.4 cm shows SH fringes at twice the fundamental frequency."""
    fund = fit_two_frequency(render("fig4a").profile, envelope_power=2, pin_mu2=True)
    sh = fit_two_frequency(render("fig4b").profile)
    assert sh.K1 / fund.K1 == pytest.approx(2, rel=0.02)
