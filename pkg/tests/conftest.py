import functools

import numpy as np
import pytest

from angspec.presets import FARFIELD_SCENE, IMAGE_SCENE
from angspec.scene import parse_scene, run_scene

CRITERIA = []


def record(number: int, ok: bool, detail: str) -> None:
    """Remember one acceptance line; the terminal summary prints them all."""
    CRITERIA.append((number, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


@functools.lru_cache(maxsize=None)
def _run(text):
    return {(r.label, r.kind): r for r in run_scene(parse_scene(text))}


@pytest.fixture(scope="session")
def image_results():
    return _run(IMAGE_SCENE)


@pytest.fixture(scope="session")
def farfield_results():
    return _run(FARFIELD_SCENE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
