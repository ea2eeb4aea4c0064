"""Construction of far-field providers for a scene with recorded solver settings."""
from __future__ import annotations

from .bie import BIEScattering
from .geom import Scene
from .medium import MediumScattering

DEFAULTS = {
    "obstacle": {"solver": "bie", "nodes": 64},
    "medium": {"solver": "ls", "resolution": 64, "supersample": 4},
}


def forward_options(scene: Scene, options: dict | None = None) -> dict:
    out = dict(DEFAULTS[scene.kind])
    out.update(options or {})
    return out


def make_provider(scene: Scene, options: dict | None = None, include_ball: bool = True):
    """BIE provider for obstacle scenes, Lippmann-Schwinger provider for media."""
    opts = forward_options(scene, options)
    if scene.kind == "obstacle":
        return BIEScattering.from_scene(scene, nodes=int(opts["nodes"]), include_ball=include_ball)
    return MediumScattering.from_scene(scene, resolution=int(opts["resolution"]),
                                       supersample=int(opts["supersample"]), include_ball=include_ball)
