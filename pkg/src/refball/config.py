"""Run configuration: JSON schema, defaults, dot-path overrides and bundled corpus."""
from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import PreconditionError

_NUM = {"type": "number"}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_CPLX = {"oneOf": [_NUM, _PAIR]}

_COMPONENT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["center", "a0"],
    "properties": {
        "center": _PAIR,
        "a0": _NUM,
        "a": {"type": "array", "items": _NUM},
        "b": {"type": "array", "items": _NUM},
        "bc": {"oneOf": [
            {"enum": ["dirichlet", "neumann"]},
            {"type": "object", "additionalProperties": False, "required": ["type"],
             "properties": {"type": {"enum": ["dirichlet", "neumann", "impedance"]}, "lambda": _CPLX}},
        ]},
        "index": _CPLX,
    },
}

SCENE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "k", "components"],
    "properties": {
        "kind": {"enum": ["obstacle", "medium"]},
        "k": _NUM,
        "d0": _PAIR,
        "components": {"type": "array", "items": _COMPONENT},
        "ball": {"type": "object", "additionalProperties": False, "required": ["center", "radius"],
                 "properties": {"center": _PAIR, "radius": _NUM, "n0": _NUM}},
        "polygon": {"type": "array", "items": _PAIR, "minItems": 3},
    },
}

_INT = {"type": "integer"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scene"],
    "properties": {
        "scene": SCENE_SCHEMA,
        "grids": {"type": "object", "additionalProperties": False,
                  "properties": {"directions": {"type": "integer", "minimum": 1},
                                 "per_edge": {"type": "integer", "minimum": 1}}},
        "noise": {"type": "object", "additionalProperties": False,
                  "properties": {"delta": {"type": "number", "minimum": 0}, "seed": _INT}},
        "forward": {"type": "object", "additionalProperties": False,
                    "properties": {"nodes": _INT, "resolution": _INT, "supersample": _INT}},
        "inversion": {"type": "object", "additionalProperties": False,
                      "properties": {"M": _INT, "M0": _INT, "alpha": _NUM, "max_iter": _INT, "screen_iter": _INT,
                                     "n_starts": _INT, "seed": _INT, "lam_max": _NUM,
                                     "classify_bc": {"type": "boolean"},
                                     "init": {"type": "object", "additionalProperties": False,
                                              "properties": {"center": _PAIR, "radius": _NUM, "lambda": _CPLX,
                                                             "contrast": _CPLX}}}},
        "ambiguity": {"type": "object", "additionalProperties": False,
                      "properties": {"shifts": {"type": "array", "items": _PAIR}}},
        "output": {"type": "string"},
    },
}

DEFAULTS = {
    "grids": {"directions": 32, "per_edge": 3},
    "noise": {"delta": 0.0, "seed": 0},
    "forward": {},
    "inversion": {"M": 2, "n_starts": 5, "max_iter": 60, "screen_iter": 6, "seed": 0, "classify_bc": False,
                  "init": {"center": [0.0, 0.0], "radius": 1.0}},
    "ambiguity": {"shifts": [[0.1, 0.0], [0.0, 0.25], [0.5, 0.0], [-0.3, 0.2], [0.25, -0.25]]},
    "output": "out",
}


class ConfigError(PreconditionError):
    """Malformed configuration; ``messages`` holds one diagnostic per problem."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("\n".join(self.messages))


def corpus_names() -> list:
    return sorted(p.name[:-5] for p in resources.files("refball.corpus").iterdir() if p.name.endswith(".json"))


def corpus_text(name: str) -> str:
    return resources.files("refball.corpus").joinpath(name + ".json").read_text()


def _locate(text: str, path) -> str | None:
    """``line N`` of the last key of a JSON path, searching keys in order; None if absent."""
    keys = [p for p in path if isinstance(p, str)]
    lines = text.splitlines()
    start, line_no = 0, 1
    for key in keys:
        hit = next((i for i in range(start, len(lines)) if f'"{key}"' in lines[i]), None)
        if hit is None:
            return None
        start, line_no = hit, hit + 1
    return f"line {line_no}"


def parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(cfg: dict, overrides: dict) -> dict:
    out = copy.deepcopy(cfg)
    for dotted, value in overrides.items():
        node = out
        keys = dotted.split(".")
        for key in keys[:-1]:
            if not isinstance(node.get(key, {}), dict):
                raise ConfigError([f"override {dotted}: {key} is not an object"])
            node = node.setdefault(key, {})
        node[keys[-1]] = value
    return out


def _merge(base: dict, top: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in top.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else copy.deepcopy(v)
    return out


def validate_config(cfg: dict, text: str = "") -> dict:
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        msgs = []
        for e in errors:
            path = list(e.path)
            if e.validator == "additionalProperties" and isinstance(e.instance, dict):
                extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
                path += extra[:1]
            where = ".".join(str(p) for p in path) or "<root>"
            loc = _locate(text, path) or "command-line override"
            msgs.append(f"{loc}: {where}: {e.message}")
        raise ConfigError(msgs)
    return cfg


def load_config(source: str | None, overrides: dict | None = None) -> dict:
    """Read a config file (or a bundled corpus entry by name), apply overrides,
    fill defaults and validate against :data:`SCHEMA`."""
    text = "{}"
    if source is not None:
        path = Path(source)
        if path.exists():
            text = path.read_text()
        elif source in corpus_names():
            text = corpus_text(source)
        else:
            raise ConfigError([f"config {source!r} is neither a file nor a bundled scene ({', '.join(corpus_names())})"])
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["line 1: top level must be an object"])
    raw = apply_overrides(raw, overrides or {})
    validate_config(raw, text)
    return _merge(DEFAULTS, raw)
