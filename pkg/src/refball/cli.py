"""Command-line interface.

Subcommands: ``synth``, ``invert``, ``verify``, ``demo-ambiguity``, ``check-scene``.
Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 usage error.
Any config entry can be overridden with ``--dotted.key value`` (value parsed as
JSON when possible).  ``REFBALL_NUM_THREADS`` caps the BLAS/FFT thread pools.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, corpus_names, load_config, parse_value
from .errors import (AccuracyError, ClassificationError, ConvergenceError, DomainError, GeometryError,
                     NumericalError, ObjectiveError, PreconditionError, RangeError, ResolutionError)
from .forward import forward_options, make_provider
from .geom import Scene, StarBoundary, sample_polygon, unit_directions, validate_scene
from .inversion import (InversionOptions, ParamVector, ambiguity_scan, classify_bc, reconstruct,
                        write_result)
from .io import write_csv, write_json
from .phaseless import read_dataset, synth_dataset, write_dataset
from .verify import KITE, run_suite

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 4
THREADS_ENV = "REFBALL_NUM_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="refball", description="Phaseless inverse scattering with a reference ball.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    names = ", ".join(corpus_names())

    s = sub.add_parser("synth", help="synthesize a phaseless dataset")
    s.add_argument("--config", required=True, help=f"config file or bundled scene ({names})")
    s.add_argument("--out", help="output directory (default: config 'output')")
    s.add_argument("--seed", type=int, help="noise seed (same as --noise.seed)")
    s.add_argument("--delta", type=float, help="noise level (same as --noise.delta)")

    s = sub.add_parser("invert", help="reconstruct the obstacle or contrast from a dataset")
    s.add_argument("--data", required=True, help="dataset directory written by synth")
    s.add_argument("--config", help="config supplying inversion options")
    s.add_argument("--out", help="output directory")

    s = sub.add_parser("verify", help="run the identity check suite")
    s.add_argument("--suite", default="all", help="all, translation, reciprocity, mixed, gauge or cross")
    s.add_argument("--config", default="kite_obstacle", help="scene whose first component is the test kite")
    s.add_argument("--out", help="output directory")

    s = sub.add_parser("demo-ambiguity", help="objective landscape under translations of the truth")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory")

    s = sub.add_parser("check-scene", help="validate a scene")
    s.add_argument("--config", required=True)
    return p


def _split_overrides(extra: list) -> dict:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or tok == "--":
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"override {tok} needs a value")
            raw = extra[i + 1]
            i += 2
        out[key] = parse_value(raw)
    return out


def _sha256(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _file_hashes(directory: Path) -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())
            if p.is_file() and p.name != "manifest.json"}


def write_manifest(directory, command: str, cfg: dict, seeds: dict, extra: dict | None = None):
    directory = Path(directory)
    manifest = {
        "command": command,
        "config": cfg,
        "config_hash": _sha256(cfg),
        "versions": {"refball": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "seeds": seeds,
        "outputs": _file_hashes(directory),
    }
    manifest.update(extra or {})
    write_json(directory / "manifest.json", manifest)


def _out(args, cfg) -> Path:
    return Path(args.out or cfg.get("output", "out"))


def _scene(cfg) -> Scene:
    return Scene.from_dict(cfg["scene"])


def _synth(scene: Scene, cfg: dict):
    report = validate_scene(scene)
    if not report.ok:
        raise PreconditionError("scene failed validation:\n" + str(report))
    if scene.polygon is None:
        raise PreconditionError("scene needs a source polygon")
    fwd = forward_options(scene, cfg["forward"])
    pts, labels = sample_polygon(scene.polygon, cfg["grids"]["per_edge"])
    dirs = unit_directions(cfg["grids"]["directions"])
    provider = make_provider(scene, fwd)
    return synth_dataset(provider, scene, dirs, pts, labels, cfg["noise"]["delta"], cfg["noise"]["seed"], fwd)


def cmd_synth(args, overrides) -> int:
    if args.seed is not None:
        overrides["noise.seed"] = args.seed
    if args.delta is not None:
        overrides["noise.delta"] = args.delta
    cfg = load_config(args.config, overrides)
    out = _out(args, cfg)
    ds = _synth(_scene(cfg), cfg)
    write_dataset(ds, out)
    write_manifest(out, "synth", cfg, {"noise": cfg["noise"]["seed"]}, {"fingerprint": ds.fingerprint})
    print(f"wrote dataset {ds.fingerprint} ({ds.shape[0]} directions, {ds.shape[1]} sources) to {out}")
    return EXIT_OK


def _init_params(cfg: dict) -> ParamVector:
    init = cfg["inversion"]["init"]
    lam = init.get("lambda")
    contrast = init.get("contrast")
    as_c = (lambda v: complex(*v) if isinstance(v, list) else complex(v))
    return ParamVector.disk(init["center"], init["radius"], lam=None if lam is None else as_c(lam),
                            contrast=None if contrast is None else as_c(contrast))


def cmd_invert(args, overrides) -> int:
    data = read_dataset(args.data)
    if args.config is None:
        overrides = {"scene": data.scene, **overrides}
    cfg = load_config(args.config, overrides)
    out = _out(args, cfg)
    inv = cfg["inversion"]
    opts = InversionOptions(**{k: v for k, v in inv.items() if k in InversionOptions.__dataclass_fields__})
    init = _init_params(cfg)
    extra = {"dataset": data.fingerprint}
    if inv.get("classify_bc") and data.scene.get("kind") == "obstacle":
        c = classify_bc(data, init, opts)
        if c.label == "undetermined":
            best = min(c.results.values(), key=lambda r: r.J)
        else:
            best = c.results[c.label]
        extra["classification"] = {"label": c.label, "J_dirichlet": c.J_dirichlet, "J_impedance": c.J_impedance,
                                   "ratio": c.ratio,
                                   "lambda": None if c.lam is None else [c.lam.real, c.lam.imag]}
        result = best
    else:
        result = reconstruct(data, init, opts)
    write_result(result, out, extra)
    write_manifest(out, "invert", cfg, {"inversion": opts.seed}, {"dataset": data.fingerprint})
    print(f"J = {result.J:.3e}, converged = {result.converged} ({result.reason}); results in {out}")
    return EXIT_OK


def cmd_verify(args, overrides) -> int:
    cfg = load_config(args.config, overrides)
    comps = cfg["scene"]["components"]
    kite = StarBoundary.from_dict(comps[0]) if comps else KITE
    kite = StarBoundary((0.0, 0.0), kite.a0, kite.a, kite.b)
    out = _out(args, cfg)
    reports = run_suite(args.suite, out, kite)
    write_manifest(out, "verify", cfg, {}, {"suite": args.suite})
    failed = [r for r in reports if not r.passed]
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: abs {r.max_abs:.3e} rel {r.max_rel:.3e} tol {r.tol:.0e}")
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed; reports in {out}")
    return EXIT_OK if not failed else EXIT_NUMERICAL


def cmd_demo(args, overrides) -> int:
    cfg = load_config(args.config, overrides)
    out = _out(args, cfg)
    scene = _scene(cfg)
    cfg0 = {**cfg, "noise": {"delta": 0.0, "seed": cfg["noise"]["seed"]}}
    data = _synth(scene, cfg0)
    rows = ambiguity_scan(data, scene, cfg["ambiguity"]["shifts"])
    table = [(h[0], h[1], jp, jt, jt / max(jp, 1e-14)) for h, jp, jt in rows]
    write_csv(out / "landscape.csv", ["hx", "hy", "J_plane_only", "J_triple", "ratio"], table)
    write_manifest(out, "demo-ambiguity", cfg, {"noise": cfg["noise"]["seed"]})
    for hx, hy, jp, jt, ratio in table:
        print(f"h = ({hx:+.3f}, {hy:+.3f})  J_plane_only = {jp:.3e}  J_triple = {jt:.3e}  ratio = {ratio:.3e}")
    return EXIT_OK


def cmd_check_scene(args, overrides) -> int:
    cfg = load_config(args.config, overrides)
    report = validate_scene(_scene(cfg))
    print(report)
    return EXIT_OK if report.ok else EXIT_VALIDATION


COMMANDS = {"synth": cmd_synth, "invert": cmd_invert, "verify": cmd_verify, "demo-ambiguity": cmd_demo,
            "check-scene": cmd_check_scene}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args, extra = _parser().parse_known_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        overrides = _split_overrides(extra)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        threads = os.environ.get(THREADS_ENV)
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=int(threads)):
                return COMMANDS[args.command](args, overrides)
        return COMMANDS[args.command](args, overrides)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PreconditionError, GeometryError, DomainError, RangeError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, NumericalError, ObjectiveError, ClassificationError, ResolutionError,
            AccuracyError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(run())
