"""Bench description language: parser, pretty-printer, validator and runner.

A scene is one statement per line::

    # comment
    source    { wavelength_nm = 845 }
    grid      { preset = default }
    slit      { a_mm = 0.2, d_mm = 0.4 }
    propagate { z_cm = 12.3 }
    lens      { f_cm = 10 }
    propagate { z_cm = 10 }
    shg
    propagate { z_cm = 43.478 }
    detect    { label = image, range_mm = 5 }

Grammar (``#`` starts a comment that runs to the end of the line)::

    statement := keyword [ "{" [ pair { "," pair } [ "," ] ] "}" ]
    pair      := key "=" value
    value     := number | identifier | '"' text '"'

Lengths carry their unit in the key name (``_m``, ``_cm``, ``_mm``, ``_um``,
``_nm``) and are stored in meters. ``detect`` records every field present at
its plane: the fundamental, and the second harmonic once ``shg`` has run.
"""

from __future__ import annotations

import dataclasses
import math
import os
import re
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Iterator

import numpy as np

from .analytics import FringeFit, fit_two_frequency
from .elements import (MIN_SAMPLES_PER_SLIT, DoubleSlit, ParaxialWarning, ThinLens, apply_double_slit,
                       apply_lens, upconvert)
from .errors import AngspecError, GeometryError
from .field import NORMALIZATIONS, IntensityProfile, SampledField, band_limit, intensity, make_grid, plane_wave
from .propagation import propagate_spectrum

UNITS = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}

GRID_PRESETS = {
    "default": (4096, 2e-6, 4),
    "coarse": (1024, 4e-6, 4),
    "fine": (8192, 1e-6, 4),
    "wide": (4096, 2e-6, 16),
}
GRID_PRESET_ENV = "ANGSPEC_GRID_PRESET"

# raised-cosine roll-off applied to the field right after every aperture
APERTURE_ROLLOFF = (0.3, 0.5)
SOURCE_TAPER = 0.2

FIT_MODES = ("none", "fringes")


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    severity: str
    message: str

    def format(self, filename: str = "<scene>") -> str:
        return f"{filename}:{self.line}:{self.column}: {self.severity}: {self.message}"


class SceneError(AngspecError):
    """Carries the diagnostics that stopped a scene from compiling or running."""

    def __init__(self, diagnostics, filename="<scene>"):
        self.diagnostics = list(diagnostics)
        self.filename = filename
        super().__init__("\n".join(d.format(filename) for d in self.diagnostics))


class SceneSyntaxError(SceneError, ValueError):
    pass


class SceneValidationError(SceneError, ValueError):
    pass


class SceneRuntimeError(SceneError, RuntimeError):
    pass


# ---------------------------------------------------------------------------
# scene model


def _loc():
    return dc_field(default=(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class Source:
    wavelength: float
    kind: str = "plane"
    window: float | None = None
    loc: tuple = _loc()


@dataclass(frozen=True)
class GridSpec:
    n: int
    dx: float
    pad: int
    loc: tuple = _loc()

    @property
    def total(self) -> int:
        return self.n * self.pad


@dataclass(frozen=True)
class Slit:
    a: float
    d: float
    loc: tuple = _loc()

    @property
    def slit(self) -> DoubleSlit:
        return DoubleSlit(self.a, self.d)


@dataclass(frozen=True)
class Lens:
    f: float
    loc: tuple = _loc()


@dataclass(frozen=True)
class Propagate:
    z: float
    loc: tuple = _loc()


@dataclass(frozen=True)
class Shg:
    mode: str = "collinear"
    loc: tuple = _loc()


@dataclass(frozen=True)
class Detect:
    label: str
    range: float | None = None
    samples: int | None = None
    normalization: str = "peak"
    fit: str = "none"
    lock_ratio: bool = False
    loc: tuple = _loc()


@dataclass(frozen=True)
class BenchScene:
    source: Source
    grid: GridSpec | None
    elements: tuple
    filename: str = dc_field(default="<scene>", compare=False, repr=False)

    @property
    def detections(self):
        return [e for e in self.elements if isinstance(e, Detect)]


# key tables: name -> (kind, required); kind "length" takes a unit suffix
_SCHEMA = {
    "source": {"wavelength": ("length", True), "type": ("word", False), "window": ("length", False)},
    "grid": {"preset": ("word", False), "n": ("int", False), "dx": ("length", False), "pad": ("int", False)},
    "slit": {"a": ("length", True), "d": ("length", True)},
    "lens": {"f": ("length", True)},
    "propagate": {"z": ("length", True)},
    "shg": {"mode": ("word", False)},
    "detect": {"label": ("word", False), "range": ("length", False), "samples": ("int", False),
               "normalization": ("word", False), "fit": ("word", False), "lock_ratio": ("bool", False)},
}


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"""
    (?P<space>[ \t\r]+)
  | (?P<number>[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_\-\.]*)
  | (?P<string>"[^"\n]*")
  | (?P<punct>[{}=,])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _tokenize(line: str, lineno: int) -> list:
    toks, pos = [], 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise _Fail(lineno, pos + 1, f"unexpected character {line[pos]!r}")
        if m.lastgroup != "space":
            toks.append(_Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return toks


class _Fail(Exception):
    def __init__(self, line, col, message):
        super().__init__(message)
        self.diag = ParseDiagnostic(line, col, "error", message)


def _split_key(key: str, schema: dict):
    if key in schema:
        return key, None
    base, _, unit = key.rpartition("_")
    if base in schema and schema[base][0] == "length" and unit in UNITS:
        return base, unit
    return None, None


def _convert(kind, unit, tok, lineno):
    text = tok.text
    if kind == "length":
        if unit is None:
            raise _Fail(lineno, tok.col, "length keys need a unit suffix (_m, _cm, _mm, _um, _nm)")
        if tok.kind != "number":
            raise _Fail(lineno, tok.col, f"expected a number, got {text!r}")
        value = float(text) * UNITS[unit]
        if not math.isfinite(value):
            raise _Fail(lineno, tok.col, "value must be finite")
        return value
    if kind == "int":
        if tok.kind != "number" or not re.fullmatch(r"[-+]?\d+", text):
            raise _Fail(lineno, tok.col, f"expected an integer, got {text!r}")
        return int(text)
    if kind == "bool":
        if text not in ("true", "false"):
            raise _Fail(lineno, tok.col, f"expected true or false, got {text!r}")
        return text == "true"
    if tok.kind == "string":
        return text[1:-1]
    if tok.kind == "ident":
        return text
    raise _Fail(lineno, tok.col, f"expected a name, got {text!r}")


def _parse_statement(toks, lineno):
    head = toks[0]
    if head.kind != "ident":
        raise _Fail(lineno, head.col, f"expected a keyword, got {head.text!r}")
    keyword = head.text
    if keyword not in _SCHEMA:
        raise _Fail(lineno, head.col, f"unknown keyword {keyword!r}; expected one of "
                    + ", ".join(_SCHEMA))
    schema = _SCHEMA[keyword]
    values, where = {}, {}
    rest = toks[1:]
    if rest:
        if rest[0].text != "{":
            raise _Fail(lineno, rest[0].col, f"expected '{{' after {keyword!r}")
        if rest[-1].text != "}":
            raise _Fail(lineno, rest[-1].col + len(rest[-1].text), "expected '}' at end of statement")
        body, i = rest[1:-1], 0
        while i < len(body):
            key = body[i]
            if key.kind != "ident":
                raise _Fail(lineno, key.col, f"expected a key, got {key.text!r}")
            if i + 1 >= len(body) or body[i + 1].text != "=":
                col = body[i + 1].col if i + 1 < len(body) else rest[-1].col
                raise _Fail(lineno, col, f"expected '=' after {key.text!r}")
            if i + 2 >= len(body) or body[i + 2].kind == "punct":
                col = body[i + 2].col if i + 2 < len(body) else rest[-1].col
                raise _Fail(lineno, col, f"missing value for {key.text!r}")
            base, unit = _split_key(key.text, schema)
            if base is None:
                raise _Fail(lineno, key.col, f"unknown key {key.text!r} for {keyword!r}; allowed: "
                            + ", ".join(k + ("_<unit>" if v[0] == "length" else "") for k, v in schema.items()))
            if base in values:
                raise _Fail(lineno, key.col, f"duplicate key {key.text!r}")
            values[base] = _convert(schema[base][0], unit, body[i + 2], lineno)
            where[base] = key.col
            i += 3
            if i < len(body):
                if body[i].text != ",":
                    raise _Fail(lineno, body[i].col, f"expected ',' or '}}', got {body[i].text!r}")
                i += 1
    for name, (_, required) in schema.items():
        if required and name not in values:
            raise _Fail(lineno, head.col, f"{keyword!r} is missing required key {name!r}")
    return keyword, values, where


def _build(keyword, v, lineno, col, where):
    loc = (lineno, col)

    def at(key):
        return (lineno, where.get(key, col))

    try:
        if keyword == "source":
            kind = v.get("type", "plane")
            if kind != "plane":
                raise _Fail(*at("type"), f"unsupported source type {kind!r} (only 'plane')")
            if v["wavelength"] <= 0:
                raise _Fail(*at("wavelength"), "wavelength must be positive")
            if v.get("window") is not None and v["window"] <= 0:
                raise _Fail(*at("window"), "source window must be positive")
            return Source(v["wavelength"], kind, v.get("window"), loc)
        if keyword == "grid":
            if "preset" in v:
                if v["preset"] not in GRID_PRESETS:
                    raise _Fail(*at("preset"), f"unknown grid preset {v['preset']!r}; choose from "
                                + ", ".join(GRID_PRESETS))
                n, dx, pad = GRID_PRESETS[v["preset"]]
            else:
                n, dx, pad = GRID_PRESETS["default"]
            n, dx, pad = v.get("n", n), v.get("dx", dx), v.get("pad", pad)
            if pad < 1:
                raise _Fail(*at("pad"), "pad must be >= 1")
            try:
                make_grid(n * pad, dx)
                make_grid(n, dx)
            except ValueError as err:
                raise _Fail(lineno, col, str(err)) from None
            return GridSpec(n, dx, pad, loc)
        if keyword == "slit":
            DoubleSlit(v["a"], v["d"])
            return Slit(v["a"], v["d"], loc)
        if keyword == "lens":
            ThinLens(v["f"])
            return Lens(v["f"], loc)
        if keyword == "propagate":
            return Propagate(v["z"], loc)
        if keyword == "shg":
            mode = v.get("mode", "collinear")
            if mode != "collinear":
                raise _Fail(*at("mode"), f"unsupported shg mode {mode!r} (only 'collinear')")
            return Shg(mode, loc)
        norm = v.get("normalization", "peak")
        if norm not in NORMALIZATIONS:
            raise _Fail(*at("normalization"), f"unknown normalization {norm!r}")
        fit = v.get("fit", "none")
        if fit not in FIT_MODES:
            raise _Fail(*at("fit"), f"unknown fit mode {fit!r}; choose from {', '.join(FIT_MODES)}")
        label = v.get("label")
        if label is not None and not re.fullmatch(r"[A-Za-z0-9_\-\.]+", label):
            raise _Fail(*at("label"), f"label {label!r} must be a plain file-name stem")
        return Detect(label, v.get("range"), v.get("samples"), norm, fit, v.get("lock_ratio", False), loc)
    except GeometryError as err:
        raise _Fail(lineno, col, str(err)) from None


def parse_scene(text: str, filename: str = "<scene>") -> BenchScene:
    """Parse scene text; raise :class:`SceneSyntaxError` listing every error found."""
    diags, source, grid, elements = [], None, None, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        try:
            toks = _tokenize(line, lineno)
            if not toks:
                continue
            keyword, values, where = _parse_statement(toks, lineno)
            item = _build(keyword, values, lineno, toks[0].col, where)
        except _Fail as fail:
            diags.append(fail.diag)
            continue
        if isinstance(item, Source):
            if source is not None:
                diags.append(ParseDiagnostic(lineno, toks[0].col, "error",
                                             f"duplicate source (first defined on line {source.loc[0]})"))
            else:
                source = item
        elif isinstance(item, GridSpec):
            if grid is not None:
                diags.append(ParseDiagnostic(lineno, toks[0].col, "error",
                                             f"duplicate grid (first defined on line {grid.loc[0]})"))
            else:
                grid = item
        else:
            elements.append(item)
    if source is None and not any("source" in d.message for d in diags):
        diags.append(ParseDiagnostic(1, 1, "error", "missing source"))
    if diags:
        raise SceneSyntaxError(diags, filename)
    # unlabeled detections are numbered in order
    count = 0
    for i, el in enumerate(elements):
        if isinstance(el, Detect):
            count += 1
            if el.label is None:
                elements[i] = dataclasses.replace(el, label=f"detect{count}")
    return BenchScene(source, grid, tuple(elements), filename)


def _num(value: float) -> str:
    return repr(float(value))


def format_scene(scene: BenchScene) -> str:
    """Canonical text for ``scene``; parsing it back yields an equal scene."""
    out = ["source { " + ", ".join(
        [f"wavelength_m = {_num(scene.source.wavelength)}", f"type = {scene.source.kind}"]
        + ([f"window_m = {_num(scene.source.window)}"] if scene.source.window is not None else [])) + " }"]
    if scene.grid is not None:
        g = scene.grid
        out.append(f"grid {{ n = {g.n}, dx_m = {_num(g.dx)}, pad = {g.pad} }}")
    for el in scene.elements:
        if isinstance(el, Slit):
            out.append(f"slit {{ a_m = {_num(el.a)}, d_m = {_num(el.d)} }}")
        elif isinstance(el, Lens):
            out.append(f"lens {{ f_m = {_num(el.f)} }}")
        elif isinstance(el, Propagate):
            out.append(f"propagate {{ z_m = {_num(el.z)} }}")
        elif isinstance(el, Shg):
            out.append(f"shg {{ mode = {el.mode} }}")
        else:
            keys = [f'label = "{el.label}"']
            if el.range is not None:
                keys.append(f"range_m = {_num(el.range)}")
            if el.samples is not None:
                keys.append(f"samples = {el.samples}")
            keys += [f"normalization = {el.normalization}", f"fit = {el.fit}",
                     f"lock_ratio = {'true' if el.lock_ratio else 'false'}"]
            out.append("detect { " + ", ".join(keys) + " }")
    return "\n".join(out) + "\n"


def load_scene(path) -> BenchScene:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scene(text, str(path))


# ---------------------------------------------------------------------------
# validation


def resolve_grid(scene: BenchScene) -> GridSpec:
    """The scene's grid, else the ``ANGSPEC_GRID_PRESET`` preset, else ``default``."""
    if scene.grid is not None:
        return scene.grid
    name = os.environ.get(GRID_PRESET_ENV, "").strip() or "default"
    if name not in GRID_PRESETS:
        raise SceneValidationError([ParseDiagnostic(1, 1, "error", (
            f"{GRID_PRESET_ENV}={name!r} is not a grid preset; choose from " + ", ".join(GRID_PRESETS)))],
            scene.filename)
    return GridSpec(*GRID_PRESETS[name])


@dataclass(frozen=True)
class ScenePlan:
    """A validated scene with its resolved grid and the ordered operations."""

    scene: BenchScene
    grid: GridSpec
    warnings: tuple = ()

    @property
    def operations(self) -> list:
        ops, z = [], 0.0
        for el in self.scene.elements:
            if isinstance(el, Propagate):
                z += el.z
                ops.append(f"propagate {el.z:g} m -> z = {z:g} m")
            elif isinstance(el, Slit):
                ops.append(f"double slit a = {el.a:g} m, d = {el.d:g} m at z = {z:g} m")
            elif isinstance(el, Lens):
                ops.append(f"thin lens f = {el.f:g} m at z = {z:g} m")
            elif isinstance(el, Shg):
                ops.append(f"second harmonic generation at z = {z:g} m")
            else:
                ops.append(f"detect {el.label!r} at z = {z:g} m")
        return ops


def _fix_dx(a):
    return f"use a grid with dx <= {a / MIN_SAMPLES_PER_SLIT * 1e6:.3g} um (e.g. preset 'fine')"


def validate_scene(scene: BenchScene) -> ScenePlan:
    """Static checks plus a dry run of the anti-aliasing guards.

    Raises :class:`SceneValidationError` on errors; warnings are kept on the plan.
    """
    grid = resolve_grid(scene)
    errors, notes = [], []

    def err(el, message):
        errors.append(ParseDiagnostic(el.loc[0], el.loc[1], "error", message))

    span = grid.total * grid.dx
    window = scene.source.window if scene.source.window is not None else grid.n * grid.dx
    if window > span:
        err(scene.source, f"source window {window * 1e3:g} mm exceeds the grid span {span * 1e3:g} mm")
    seen_shg = seen_optic = False
    for el in scene.elements:
        if isinstance(el, Slit):
            per = el.a / grid.dx
            if per < MIN_SAMPLES_PER_SLIT:
                err(el, f"{per:.3g} samples per slit < {MIN_SAMPLES_PER_SLIT}; {_fix_dx(el.a)}")
            if el.a + el.d >= window:
                err(el, f"aperture ({(el.a + el.d) * 1e3:g} mm) does not fit the illuminated window "
                        f"({window * 1e3:g} mm); increase n")
            seen_optic = True
        elif isinstance(el, Lens):
            seen_optic = True
        elif isinstance(el, Propagate):
            if not el.z > 0:
                err(el, f"z must increase (propagate z = {el.z:g} m)")
        elif isinstance(el, Shg):
            if seen_shg:
                err(el, "at most one shg element is allowed")
            if not seen_optic:
                err(el, "shg needs a preceding slit or lens")
            seen_shg = True
        else:
            if el.range is not None:
                if el.range <= 0:
                    err(el, "detection range must be positive")
                elif el.range > span:
                    err(el, f"detection range {el.range * 1e3:g} mm exceeds the grid span "
                            f"{span * 1e3:g} mm; increase pad")
            if el.samples is not None and el.samples < 2:
                err(el, "detection needs at least 2 samples")
    if errors:
        raise SceneValidationError(errors, scene.filename)

    # dry run: every propagation must pass the band-limit guard
    plan = ScenePlan(scene, grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ParaxialWarning)
        try:
            for _ in _execute(plan):
                pass
        except _StepFailure as fail:
            el, cause = fail.element, fail.cause
            hint = "use a finer grid preset ('fine') or a larger pad" if "spectral energy" in str(cause) else ""
            err(el, f"{cause}" + (f"; {hint}" if hint else ""))
            raise SceneValidationError(errors, scene.filename) from cause
    for w in caught:
        if issubclass(w.category, ParaxialWarning):
            el = getattr(w.message, "element", None)
            loc = el.loc if el is not None else (1, 1)
            notes.append(ParseDiagnostic(loc[0], loc[1], "warning", str(w.message)))
    return ScenePlan(scene, grid, tuple(notes))


# ---------------------------------------------------------------------------
# execution


class _StepFailure(Exception):
    def __init__(self, element, cause):
        super().__init__(str(cause))
        self.element = element
        self.cause = cause


@dataclass
class BenchState:
    fundamental: SampledField
    harmonic: SampledField | None
    z: float


def _execute(plan: ScenePlan) -> Iterator[tuple]:
    """Yield ``(element, state)`` after every element of the scene."""
    spec = plan.grid
    src = plan.scene.source
    grid = make_grid(spec.total, spec.dx)
    k = 2 * math.pi / src.wavelength
    window = src.window if src.window is not None else spec.n * spec.dx
    state = BenchState(plane_wave(grid, k, window, SOURCE_TAPER), None, 0.0)
    for el in plan.scene.elements:
        try:
            fields = [state.fundamental, state.harmonic]
            if isinstance(el, Slit):
                fields = [None if f is None else band_limit(apply_double_slit(f, el.slit), *APERTURE_ROLLOFF)
                          for f in fields]
            elif isinstance(el, Lens):
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", ParaxialWarning)
                    fields = [None if f is None else apply_lens(f, ThinLens(el.f)) for f in fields]
                for w in caught[:1]:
                    msg = ParaxialWarning(f"lens at z = {state.z:g} m: {w.message}")
                    msg.element = el
                    warnings.warn(msg)
            elif isinstance(el, Propagate):
                fields = [None if f is None else propagate_spectrum(f, el.z) for f in fields]
                state.z += el.z
            elif isinstance(el, Shg):
                fields[1] = upconvert(fields[0], fields[0], mode="collinear")
            state = BenchState(fields[0], fields[1], state.z)
        except AngspecError as err:
            raise _StepFailure(el, err) from err
        yield el, state


@dataclass(frozen=True, eq=False)
class DetectionResult:
    label: str
    kind: str
    z: float
    profile: IntensityProfile
    fit: FringeFit | None = None

    @property
    def stem(self) -> str:
        return f"{self.label}_{self.kind}"


def detect(el: Detect, fld: SampledField, spec: GridSpec) -> IntensityProfile:
    prof = intensity(fld, el.normalization)
    half = (el.range if el.range is not None else spec.n * spec.dx) / 2
    prof = prof.crop(half * (1 + 1e-12))
    if el.samples is not None:
        prof = prof.resample(np.linspace(-half, half, el.samples))
    return prof


def _fit(el: Detect, kind: str, prof: IntensityProfile) -> FringeFit:
    if kind == "fund":
        return fit_two_frequency(prof, envelope_power=2, pin_mu2=True)
    return fit_two_frequency(prof, lock_ratio=el.lock_ratio, envelope_power=4)


def run_scene(scene: BenchScene | ScenePlan) -> list:
    """Execute a scene and return one :class:`DetectionResult` per detected field."""
    plan = scene if isinstance(scene, ScenePlan) else validate_scene(scene)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParaxialWarning)
        try:
            for el, state in _execute(plan):
                if not isinstance(el, Detect):
                    continue
                pairs = [("fund", state.fundamental)]
                if state.harmonic is not None:
                    pairs.append(("sh", state.harmonic))
                for kind, fld in pairs:
                    try:
                        prof = detect(el, fld, plan.grid)
                        fit = _fit(el, kind, prof) if el.fit == "fringes" else None
                    except (AngspecError, ValueError) as err:
                        raise _StepFailure(el, f"{el.label} ({kind}) at z = {state.z:g} m: {err}") from err
                    out.append(DetectionResult(el.label, kind, state.z, prof, fit))
        except _StepFailure as fail:
            loc = fail.element.loc
            raise SceneRuntimeError([ParseDiagnostic(loc[0], loc[1], "error", str(fail.cause))],
                                    plan.scene.filename) from fail
    return out


def crystal_state(scene: BenchScene | ScenePlan) -> BenchState:
    """The bench state right after the ``shg`` element."""
    plan = scene if isinstance(scene, ScenePlan) else validate_scene(scene)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParaxialWarning)
        for el, state in _execute(plan):
            if isinstance(el, Shg):
                return state
    raise ValueError("scene has no shg element")


def state_before_final_propagation(scene: BenchScene | ScenePlan) -> BenchState:
    """The bench state after the last element that is not a propagation or detection."""
    plan = scene if isinstance(scene, ScenePlan) else validate_scene(scene)
    last = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParaxialWarning)
        elements = plan.scene.elements
        idx = max((i for i, e in enumerate(elements) if isinstance(e, (Slit, Lens, Shg))), default=-1)
        if idx < 0:
            spec = plan.grid
            grid = make_grid(spec.total, spec.dx)
            src = plan.scene.source
            window = src.window if src.window is not None else spec.n * spec.dx
            return BenchState(plane_wave(grid, 2 * math.pi / src.wavelength, window, SOURCE_TAPER), None, 0.0)
        for i, (el, state) in enumerate(_execute(plan)):
            last = state
            if i == idx:
                break
    return last
