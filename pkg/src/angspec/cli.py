"""Command-line front end.

Exit codes: 0 success, 1 unreadable or unparsable input, 2 scene validation
failure (including sampling and aliasing guards), 3 runtime failure (for
example a fit that does not converge), 4 an oracle comparison above its
threshold. Data and written paths go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import FRINGE_CSV_HEADER, fit_two_frequency, visibility_evolution
from .errors import AngspecError, FitError, SamplingError
from .field import IntensityProfile
from .presets import PRESETS, render
from .propagation import propagate_quadrature, propagate_spectrum
from .scene import (SceneRuntimeError, SceneSyntaxError, SceneValidationError, load_scene,
                    run_scene, state_before_final_propagation, validate_scene)
from .svgplot import write_profile_svg

EXIT_OK, EXIT_PARSE, EXIT_VALIDATE, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3, 4
ORACLE_THRESHOLD = 1e-5


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path):
    """Parse and validate a scene file, returning ``(plan, exit_code)``."""
    try:
        scene = load_scene(path)
    except OSError as exc:
        _err(f"{path}: cannot read scene: {exc.strerror or exc}")
        return None, EXIT_PARSE
    except UnicodeDecodeError as exc:
        _err(f"{path}: scene is not UTF-8 text: {exc}")
        return None, EXIT_PARSE
    except SceneSyntaxError as exc:
        _err(str(exc))
        return None, EXIT_PARSE
    try:
        plan = validate_scene(scene)
    except SceneValidationError as exc:
        _err(str(exc))
        return None, EXIT_VALIDATE
    for diag in plan.warnings:
        _err(diag.format(scene.filename))
    return plan, EXIT_OK


def _write_fit(path: Path, z: float, fit) -> Path:
    row = fit.csv_row(z) if fit is not None else ",".join(["%.9e" % z] + ["nan"] * 5)
    path.write_text(FRINGE_CSV_HEADER + "\n" + row + "\n", encoding="utf-8", newline="\n")
    return path


def cmd_run(args) -> int:
    plan, code = _load(args.scene)
    if plan is None:
        return code
    try:
        results = run_scene(plan)
    except SceneRuntimeError as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        csv_path = res.profile.write_csv(out / f"{res.stem}.csv")
        print(csv_path)
        if res.fit is not None:
            print(_write_fit(out / f"{res.stem}_fit.csv", res.z, res.fit))
        if args.svg:
            overlay = res.fit.evaluate(res.profile.x) if res.fit is not None else None
            print(write_profile_svg(out / f"{res.stem}.svg", res.profile.x, res.profile.values,
                                    f"{res.label} ({res.kind}), z = {res.z:.4g} m", overlay))
    return EXIT_OK


def cmd_figure(args) -> int:
    if args.name not in PRESETS:
        _err(f"unknown figure preset {args.name!r}; choose from {', '.join(PRESETS)}")
        return EXIT_PARSE
    try:
        fig = render(args.name)
    except AngspecError as exc:
        _err(f"{args.name}: {exc}")
        return EXIT_RUNTIME
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prof = fig.profile
    print(prof.write_csv(out / f"{args.name}.csv"))
    overlay = None
    if fig.preset.fit:
        print(_write_fit(out / f"{args.name}_fit.csv", 0.0, fig.fit))
        if fig.fit is None:
            _err(f"{args.name}: fringe fit failed: {fig.fit_error}")
        else:
            overlay = fig.fit.evaluate(prof.x)
    print(write_profile_svg(out / f"{args.name}.svg", prof.x, prof.values, fig.preset.title, overlay))
    return EXIT_OK


def cmd_oracle(args) -> int:
    plan, code = _load(args.scene)
    if plan is None:
        return code
    if args.z == 0:
        _err("oracle: quadrature propagation requires z != 0")
        return EXIT_VALIDATE
    state = state_before_final_propagation(plan)
    n, total = plan.grid.n, plan.grid.total
    roi = slice((total - n) // 2, (total + n) // 2)
    worst = 0.0
    for kind, fld in (("fund", state.fundamental), ("sh", state.harmonic)):
        if fld is None:
            continue
        try:
            fast = propagate_spectrum(fld, args.z)
            slow = propagate_quadrature(fld, args.z)
        except SamplingError as exc:
            _err(f"oracle: {exc}")
            return EXIT_VALIDATE
        except AngspecError as exc:
            _err(f"oracle: {kind}: {exc}")
            return EXIT_VALIDATE
        a, b = fast.amp[roi], slow.amp[roi]
        rms = float(np.sqrt(np.mean(np.abs(a - b) ** 2)) / np.abs(b).max())
        worst = max(worst, rms)
        verdict = "PASS" if rms <= args.threshold else "FAIL"
        print(f"{kind} z={args.z:.6g} m rms={rms:.3e} of peak threshold={args.threshold:.0e} {verdict}")
    return EXIT_OK if worst <= args.threshold else EXIT_CHECK


def cmd_fit(args) -> int:
    try:
        prof = IntensityProfile.read_csv(args.csv)
    except OSError as exc:
        _err(f"{args.csv}: cannot read: {exc.strerror or exc}")
        return EXIT_PARSE
    except ValueError as exc:
        _err(f"{args.csv}: {exc}")
        return EXIT_PARSE
    try:
        if args.single:
            fit = fit_two_frequency(prof, envelope_power=args.envelope_power or 2, pin_mu2=True)
        else:
            fit = fit_two_frequency(prof, lock_ratio=args.lock_ratio,
                                    envelope_power=args.envelope_power or 4)
    except FitError as exc:
        _err(f"{args.csv}: {exc}")
        return EXIT_RUNTIME
    print(FRINGE_CSV_HEADER)
    print(fit.csv_row(args.z))
    return EXIT_OK


def cmd_evolution(args) -> int:
    plan, code = _load(args.scene)
    if plan is None:
        return code
    hw = args.half_width_mm * 1e-3 if args.half_width_mm is not None else None
    try:
        points = visibility_evolution(plan, args.z, half_width=hw, lock_ratio=args.lock_ratio)
    except ValueError as exc:
        _err(f"evolution: {exc}")
        return EXIT_VALIDATE
    except AngspecError as exc:
        _err(f"evolution: {exc}")
        return EXIT_RUNTIME
    print(FRINGE_CSV_HEADER)
    for p in points:
        print(p.csv_row())
        if p.error:
            _err(f"z = {p.z:g} m: {p.error}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="angspec", description=(
        "Angular-spectrum simulator for a double slit, a thin lens and a second harmonic crystal."))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scene file and write one CSV per detected field")
    p.add_argument("scene")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--svg", action="store_true", help="also write an SVG plot per CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("figure", help="reproduce a figure geometry: " + ", ".join(PRESETS))
    p.add_argument("name")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("oracle", help="compare spectral and quadrature propagation by z meters")
    p.add_argument("scene")
    p.add_argument("--z", type=float, required=True, help="propagation distance in meters")
    p.add_argument("--threshold", type=float, default=ORACLE_THRESHOLD,
                   help="RMS limit relative to peak (default 1e-5)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fit", help="fit the two-frequency fringe model to an intensity CSV")
    p.add_argument("csv")
    p.add_argument("--lock-ratio", action="store_true", help="tie K2 = 2 K1")
    p.add_argument("--single", action="store_true", help="single frequency model (mu2 = 0)")
    p.add_argument("--envelope-power", type=int, default=None,
                   help="sinc power of the envelope (default 4, or 2 with --single)")
    p.add_argument("--z", type=float, default=0.0, help="plane coordinate written to the CSV row")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evolution", help="fit the SH fringes at several distances behind the crystal")
    p.add_argument("scene")
    p.add_argument("--z", type=float, nargs="+", required=True, help="distances in meters")
    p.add_argument("--half-width-mm", type=float, default=None,
                   help="fixed fit window half width (default: automatic per plane)")
    p.add_argument("--lock-ratio", action="store_true")
    p.set_defaults(func=cmd_evolution)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
