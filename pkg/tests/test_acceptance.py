"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the ``acceptance criteria`` section of the pytest
terminal summary.
"""

import subprocess
import sys
import time

import numpy as np

from angspec.analytics import (BenchGeometry, crystal_plane_field, fit_two_frequency, image_distance,
                               sh_image_amplitude, visibility_evolution)
from angspec.elements import DoubleSlit
from angspec.errors import FitError
from angspec.field import band_limit, make_grid, plane_wave, power, SampledField
from angspec.gaussian_sum import fit_gaussian_sum, propagate_gaussian_sum
from angspec.presets import FARFIELD_SCENE, FOCAL, IMAGE_SCENE, SLIT_A, SLIT_D, WAVELENGTH, Z0_IMAGE
from angspec.propagation import propagate_quadrature, propagate_spectrum
from angspec.scene import crystal_state, parse_scene, run_scene

from conftest import record


def _rms(a, b):
    return float(np.sqrt(np.mean(np.abs(np.asarray(a) - np.asarray(b)) ** 2)))


def _effective_geometry(x):
    """Bench geometry with the slit width the grid actually samples."""
    a_eff = DoubleSlit(SLIT_A, SLIT_D).sampled_width(x)
    return BenchGeometry.at_image_plane(Z0_IMAGE, FOCAL, a_eff, SLIT_D, WAVELENGTH)


def test_criterion_1_image_condition():
    reps = 1000
    t0 = time.perf_counter()
    for _ in range(reps):
        zD = image_distance(0.123, 0.10)
    per_call = (time.perf_counter() - t0) / reps
    err_zD = abs(zD - 0.434) / 0.434
    err_i = abs((0.10 + zD) - 0.534) / 0.534
    ok = abs(zD - 0.43478) < 5e-6 and err_zD <= 3e-3 and err_i <= 3e-3 and per_call < 1e-3
    record(1, ok, f"zD = {zD * 100:.3f} cm (vs 43.4 cm: {err_zD:.2%}), i = {(0.1 + zD) * 100:.2f} cm "
                  f"(vs 53.4 cm: {err_i:.2%}), {per_call * 1e6:.1f} us/call")
    assert ok


def test_criterion_2_magnification():
    t0 = time.perf_counter()
    results = {(r.label, r.kind): r for r in run_scene(parse_scene(IMAGE_SCENE))}
    elapsed = time.perf_counter() - t0
    prof = results[("image", "fund")].profile
    x, v = prof.x, prof.values
    lobes = []
    for side in (x < 0, x > 0):
        sel = side & (v > 0.5)
        lobes.append(np.sum(x[sel] * v[sel]) / np.sum(v[sel]))
    m_meas = (lobes[1] - lobes[0]) / SLIT_D
    m_true = image_distance(Z0_IMAGE, FOCAL) / FOCAL
    err = abs(m_meas - m_true) / m_true
    ok = err <= 5e-3 and elapsed < 5.0
    record(2, ok, f"M = {m_meas:.4f} vs zD/f = {m_true:.4f} ({err:.3%}), separation "
                  f"{(lobes[1] - lobes[0]) * 1e3:.4f} mm, pipeline {elapsed:.2f} s")
    assert ok


def test_criterion_3_self_convolution(image_results):
    prof = image_results[("image", "sh")].profile
    g = _effective_geometry(crystal_state(parse_scene(IMAGE_SCENE)).fundamental.x)
    ref = sh_image_amplitude(prof.x, g, 2e-6) ** 2
    ref /= ref.max()
    rms = _rms(prof.values, ref)
    sep = g.magnification * SLIT_D / 2
    win = sep / 2
    center = prof.values[np.abs(prof.x) < win].max()
    left = prof.values[np.abs(prof.x + sep) < win].max()
    right = prof.values[np.abs(prof.x - sep) < win].max()
    ratio = center / (0.5 * (left + right))
    ok = rms <= 0.02 and abs(ratio - 4) <= 0.2
    record(3, ok, f"SH image vs |self-convolution|^2 RMS = {rms:.2%} of peak, "
                  f"center/side = {ratio:.3f} (lobes at 0, +-{sep * 1e3:.3f} mm)")
    assert ok


def test_criterion_4_two_frequency_far_field(farfield_results):
    sh = farfield_results[("farfield", "sh")].profile
    fund = farfield_results[("farfield", "fund")].profile
    notes, ok = [], True
    try:
        fit = fit_two_frequency(sh)
        good = abs(fit.ratio - 2) <= 0.02 and fit.residual <= 0.03
        notes.append(f"SH K2/K1 = {fit.ratio:.4f}, residual {fit.residual:.2%}")
        ok &= good
    except FitError as err:
        notes.append(f"SH fit failed: {err}")
        ok = False
    try:
        fit = fit_two_frequency(fund, envelope_power=2, pin_mu2=True)
        notes.append(f"fundamental residual {fit.residual:.2%}")
        ok &= fit.residual <= 0.03
    except FitError as err:
        notes.append(f"fundamental fit failed: {err}")
        ok = False
    record(4, ok, "; ".join(notes))
    assert ok, "; ".join(notes)


def test_criterion_5_visibility_evolution():
    points = visibility_evolution(parse_scene(FARFIELD_SCENE), [0.0, 0.434])
    detail = []
    for p in points:
        if p.fit is None:
            detail.append(f"z = {p.z:g} m: {p.error}")
        else:
            detail.append(f"z = {p.z:g} m: mu1/mu2 = {p.fit.visibility_ratio:.4f} "
                          f"+- {p.fit.visibility_ratio_sigma():.1e}")
    ok = all(p.fit is not None for p in points)
    if ok:
        a, b = points[0].fit, points[1].fit
        sigma = np.hypot(a.visibility_ratio_sigma(), b.visibility_ratio_sigma())
        ok = abs(a.visibility_ratio - b.visibility_ratio) > sigma
    record(5, ok, "; ".join(detail))
    assert ok, "; ".join(detail)


def _band_limited_random(grid, k, rng, support):
    amp = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * (np.abs(grid.x) <= support)
    fld = band_limit(SampledField(grid, amp, k), 0.2, 0.3)
    return fld.replace(amp=fld.amp * plane_wave(grid, k, 2.4 * support, 0.5).amp)


def test_criterion_6_propagator_properties(rng):
    t0 = time.perf_counter()
    k = 2 * np.pi / WAVELENGTH
    grid = make_grid(4096, 2e-6)
    worst = {}

    def note(name, value):
        worst[name] = max(worst.get(name, 0.0), value)

    for _ in range(5):
        w = _band_limited_random(grid, k, rng, 0.4e-3)
        peak = np.abs(w.amp).max()
        note("identity", np.abs(propagate_spectrum(w, 0.0).amp - w.amp).max() / peak)
        z1, z2 = rng.uniform(5e-3, 2e-2, 2)
        once = propagate_spectrum(w, z1 + z2).amp
        twice = propagate_spectrum(propagate_spectrum(w, z1), z2).amp
        note("semigroup", np.abs(once - twice).max() / peak)
        note("power", abs(power(propagate_spectrum(w, z1)) - power(w)) / power(w))
        fast = propagate_spectrum(w, z1).amp
        slow = propagate_quadrature(w, z1).amp
        note("spectral_vs_quadrature", _rms(fast, slow) / np.abs(slow).max())

    # Gaussian-sum closed form against quadrature of the reconstructed field
    g = BenchGeometry.at_image_plane(Z0_IMAGE, FOCAL, SLIT_A, SLIT_D, WAVELENGTH)
    grid4 = make_grid(4096, 2e-6)
    crystal = SampledField(grid4, crystal_plane_field(grid4.x, g), k)
    gs = fit_gaussian_sum(crystal, 12, half_width=1.3e-3)
    closed = propagate_gaussian_sum(gs, 0.2, grid4).amp
    direct = propagate_quadrature(gs.to_field(grid4), 0.2).amp
    gs_err = _rms(closed, direct) / np.abs(direct).max()
    elapsed = time.perf_counter() - t0

    ok = (worst["identity"] <= 1e-14 and worst["semigroup"] <= 1e-12 and worst["power"] <= 1e-10
          and worst["spectral_vs_quadrature"] <= 1e-6 and gs_err <= gs.residual + 1e-6 and elapsed < 60)
    record(6, ok, ", ".join(f"{k_} {v:.1e}" for k_, v in worst.items())
           + f", gaussian-sum {gs_err:.1e} (fit residual {gs.residual:.1%}), {elapsed:.1f} s")
    assert ok


def test_criterion_7_crystal_field():
    fund = crystal_state(parse_scene(IMAGE_SCENE)).fundamental
    g = _effective_geometry(fund.x)
    sel = np.abs(fund.x) <= 2e-3
    ref = crystal_plane_field(fund.x[sel], g)
    scale = np.vdot(ref, fund.amp[sel]) / np.vdot(ref, ref)
    rms = _rms(fund.amp[sel] / scale, ref)

    inten = np.abs(fund.amp) ** 2
    x = fund.x
    near = (x > 0.38e-3) & (x < 0.46e-3)
    zero = x[near][np.argmin(inten[near])]
    zero_eff = WAVELENGTH * FOCAL / g.a
    zero_nom = WAVELENGTH * FOCAL / SLIT_A
    # fringe period from the spacing of the minima of cos^2 inside the main lobe
    core = np.abs(x) < 0.3e-3
    xc, ic = x[core], inten[core]
    mins = xc[1:-1][(ic[1:-1] < ic[:-2]) & (ic[1:-1] < ic[2:])]
    period = float(np.mean(np.diff(mins)))
    dx = fund.grid.dx
    ok = rms <= 1e-4 and abs(zero - zero_eff) <= dx and abs(period - WAVELENGTH * FOCAL / SLIT_D) <= dx
    record(7, ok, f"field RMS {rms:.1e} of peak; envelope zero {zero * 1e3:.4f} mm (sampled slit "
                  f"{zero_eff * 1e3:.4f} mm, nominal {zero_nom * 1e3:.4f} mm); fringe period "
                  f"{period * 1e3:.4f} mm (lambda f/d = {WAVELENGTH * FOCAL / SLIT_D * 1e3:.4f} mm)")
    assert ok


def _cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "angspec.cli", *args], cwd=cwd, capture_output=True,
                          text=True)


def test_criterion_8_dsl_determinism(tmp_path):
    scene = tmp_path / "bench.scene"
    scene.write_text(IMAGE_SCENE, encoding="utf-8")
    outs = []
    for run in ("a", "b"):
        res = _cli("run", str(scene), "--out", str(tmp_path / run), cwd=tmp_path)
        assert res.returncode == 0, res.stderr
        outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / run).glob("*.csv"))})
    identical = outs[0] == outs[1] and {"image_fund.csv", "image_sh.csv"} <= set(outs[0])

    bad_parse = tmp_path / "parse.scene"
    bad_parse.write_text("source { wavelength_nm = 845 \n", encoding="utf-8")
    bad_valid = tmp_path / "valid.scene"
    bad_valid.write_text("source { wavelength_nm = 845 }\ngrid { n = 1024, dx_um = 50, pad = 4 }\n"
                         "slit { a_mm = 0.2, d_mm = 0.4 }\n", encoding="utf-8")
    bad_run = tmp_path / "run.scene"
    bad_run.write_text("source { wavelength_nm = 845 }\ndetect { label = flat, fit = fringes }\n",
                       encoding="utf-8")
    codes = {name: _cli("run", str(path), "--out", str(tmp_path / "x"), cwd=tmp_path).returncode
             for name, path in (("parse", bad_parse), ("validate", bad_valid), ("runtime", bad_run))}
    ok = identical and codes == {"parse": 1, "validate": 2, "runtime": 3}
    record(8, ok, f"{len(outs[0])} CSVs bit-identical across runs: {identical}; exit codes {codes}")
    assert ok
