import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from refball.config import corpus_text  # noqa: E402
from refball.forward import forward_options, make_provider  # noqa: E402
from refball.geom import Scene, sample_polygon, unit_directions  # noqa: E402
from refball.phaseless import synth_dataset  # noqa: E402

# criterion number -> list of (part, passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def corpus_scene(name: str) -> Scene:
    return Scene.from_dict(json.loads(corpus_text(name))["scene"])


def make_dataset(scene: Scene, n_dirs=32, per_edge=3, delta=0.0, seed=7, options=None, return_fields=False):
    fwd = forward_options(scene, options)
    pts, labels = sample_polygon(scene.polygon, per_edge)
    return synth_dataset(make_provider(scene, fwd), scene, unit_directions(n_dirs), pts, labels, delta, seed, fwd,
                         return_fields=return_fields)


@pytest.fixture(scope="session")
def disk_scene():
    return corpus_scene("disk_obstacle")


@pytest.fixture(scope="session")
def kite_scene():
    return corpus_scene("kite_obstacle")


@pytest.fixture(scope="session")
def medium_scene():
    return corpus_scene("medium_disk")


@pytest.fixture(scope="session")
def disk_data(disk_scene):
    return make_dataset(disk_scene)


@pytest.fixture(scope="session")
def kite_data(kite_scene):
    return make_dataset(kite_scene)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {text}" for name, _, text in parts)
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {detail}")
