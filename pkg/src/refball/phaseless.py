"""Phaseless far-field datasets and the algebraic cross terms they determine.

A dataset holds three modulus tables for a fixed incident direction d0,
observation directions x_i and point sources z_j:

    A_i    = |u_inf(x_i, d0)|
    B_ij   = |v_inf(x_i, z_j)|
    C_ij   = |u_inf(x_i, d0) + v_inf(x_i, z_j)|

where u_inf is the plane-wave far field and v_inf the far field of the
scattered wave excited by a point source at z_j.

File layout
-----------
A dataset directory contains four files, all written atomically:

``meta.json``
    JSON object (sorted keys, 2-space indent) with ``format``, ``k``, ``d0``,
    ``directions`` (I x 2), ``sources`` (J x 2), ``labels`` (J edge labels,
    0-based), ``noise`` = {``delta``, ``seed``, ``model``}, ``fingerprint``,
    ``scene`` and ``forward`` (solver settings).
``A.csv``
    header ``i,x1,x2,modulus``; one row per direction.
``B.csv``, ``C.csv``
    header ``i,j,x1,x2,z1,z2,edge,modulus``; rows ordered with ``j`` varying
    fastest.

Indices and labels are written as integers and every float in scientific
notation with 17 significant digits (``format(v, ".16e")``), so a round trip
through the files is bit-exact.  Lines end in ``\\n``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, PreconditionError
from .fields import PlaneWave, PointSource, check_directions
from .geom import Scene, fingerprint
from .io import read_csv, write_csv, write_json

FORMAT = "refball-phaseless/1"
NOISE_MODEL = "multiplicative-uniform"


@dataclass(frozen=True)
class PhaselessDataset:
    k: float
    d0: tuple
    directions: np.ndarray
    sources: np.ndarray
    labels: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    delta: float = 0.0
    seed: int = 0
    fingerprint: str = ""
    scene: dict | None = None
    forward: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple:
        return self.B.shape

    def triangle_excess(self) -> np.ndarray:
        """Amount by which each C_ij violates |A_i - B_ij| <= C_ij <= A_i + B_ij."""
        A = self.A[:, None]
        return np.maximum(np.maximum(np.abs(A - self.B) - self.C, self.C - (A + self.B)), 0.0)

    def plane_only(self) -> "PhaselessDataset":
        """Copy with the point-source tables dropped."""
        empty = np.zeros((len(self.A), 0))
        return PhaselessDataset(self.k, self.d0, self.directions, np.zeros((0, 2)), np.zeros(0, dtype=int),
                                self.A, empty, empty, self.delta, self.seed, self.fingerprint, self.scene,
                                self.forward)


def synth_fields(provider, d0, directions, sources) -> tuple[np.ndarray, np.ndarray]:
    """Complex far fields u_inf(x_i, d0) and v_inf(x_i, z_j), shapes (I,), (I, J)."""
    dirs = check_directions(directions, 2)
    incs = [PlaneWave(tuple(d0))] + [PointSource(tuple(z)) for z in np.reshape(sources, (-1, 2))]
    F = provider.far_fields(incs, dirs)
    return F[:, 0], F[:, 1:]


def synth_dataset(provider, scene: Scene, directions, sources, labels, delta: float, seed: int,
                  forward: dict | None = None, require_ball: bool = True, return_fields: bool = False):
    """Synthesize the modulus triple for ``scene`` using ``provider``.

    Noise is multiplicative, ``|.| (1 + delta xi)`` with ``xi ~ U[-1, 1]`` drawn
    from ``numpy.random.default_rng(seed)`` for A, then B, then C.
    """
    if delta < 0:
        raise DomainError("noise level must be nonnegative")
    if require_ball and scene.ball is None:
        raise PreconditionError("phaseless triple requires a reference ball in the scene")
    sources = np.reshape(np.asarray(sources, dtype=float), (-1, 2))
    labels = np.asarray(labels if labels is not None else np.zeros(len(sources)), dtype=int)
    if len(labels) != len(sources):
        raise DomainError("one edge label per source point is required")
    dirs = check_directions(directions, 2)
    u, V = synth_fields(provider, scene.d0, dirs, sources)
    A, B, C = np.abs(u), np.abs(V), np.abs(u[:, None] + V)
    if delta > 0:
        rng = np.random.default_rng(seed)
        A = A * (1 + delta * rng.uniform(-1, 1, A.shape))
        B = B * (1 + delta * rng.uniform(-1, 1, B.shape))
        C = C * (1 + delta * rng.uniform(-1, 1, C.shape))
    forward = dict(forward or {})
    sd = scene.to_dict()
    ds = PhaselessDataset(scene.k, tuple(scene.d0), dirs.copy(), sources.copy(), labels, A, B, C,
                          float(delta), int(seed), fingerprint({"scene": sd, "forward": forward}), sd, forward)
    return (ds, u, V) if return_fields else ds


@dataclass(frozen=True)
class CrossField:
    """Real cross term ``re = Re{u_inf conj(v_inf)}`` and, optionally, the
    masked cosine of the relative phase (NaN where masked)."""

    re: np.ndarray
    mask: np.ndarray
    labels: np.ndarray
    cos: np.ndarray | None = None
    clip: float = 0.0
    n_clipped: int = 0


def extract_real_cross(d: PhaselessDataset) -> CrossField:
    re = 0.5 * (d.C ** 2 - d.A[:, None] ** 2 - d.B ** 2)
    return CrossField(re, np.ones(re.shape, dtype=bool), d.labels)


def extract_cosine(d: PhaselessDataset, eps: float | None = None) -> CrossField:
    """cos(arg u_inf - arg v_inf) where both moduli exceed ``eps``.

    Values outside [-1, 1] (possible under noise) are clipped; the largest
    excess is kept in ``clip`` and the count in ``n_clipped``.
    """
    if eps is None:
        eps = 1e-6 * max(d.A.max(initial=0.0), d.B.max(initial=0.0), d.C.max(initial=0.0))
    if not eps > 0:
        raise DomainError("mask threshold must be positive")
    rc = extract_real_cross(d)
    mask = (d.A[:, None] > eps) & (d.B > eps)
    cos = np.full(rc.re.shape, np.nan)
    cos[mask] = rc.re[mask] / (d.A[:, None] * d.B)[mask]
    excess = np.abs(cos[mask]) - 1.0
    over = excess > 0
    clip = float(excess[over].max()) if over.any() else 0.0
    cos[mask] = np.clip(cos[mask], -1.0, 1.0)
    return CrossField(rc.re, mask, d.labels, cos, clip, int(over.sum()))


def write_dataset(d: PhaselessDataset, directory) -> Path:
    directory = Path(directory)
    I, J = d.shape
    meta = {
        "format": FORMAT,
        "k": d.k,
        "d0": list(d.d0),
        "directions": d.directions.tolist(),
        "sources": d.sources.tolist(),
        "labels": [int(v) for v in d.labels],
        "noise": {"delta": d.delta, "seed": d.seed, "model": NOISE_MODEL},
        "fingerprint": d.fingerprint,
        "scene": d.scene,
        "forward": d.forward,
    }
    write_json(directory / "meta.json", meta)
    x = d.directions
    write_csv(directory / "A.csv", ["i", "x1", "x2", "modulus"],
              [(i, x[i, 0], x[i, 1], d.A[i]) for i in range(I)])
    header = ["i", "j", "x1", "x2", "z1", "z2", "edge", "modulus"]
    for name, table in (("B.csv", d.B), ("C.csv", d.C)):
        rows = [(i, j, x[i, 0], x[i, 1], d.sources[j, 0], d.sources[j, 1], int(d.labels[j]), table[i, j])
                for i in range(I) for j in range(J)]
        write_csv(directory / name, header, rows)
    return directory


def read_dataset(directory) -> PhaselessDataset:
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    if meta.get("format") != FORMAT:
        raise DomainError(f"unsupported dataset format {meta.get('format')!r}")
    dirs = np.asarray(meta["directions"], dtype=float).reshape(-1, 2)
    src = np.asarray(meta["sources"], dtype=float).reshape(-1, 2)
    I, J = len(dirs), len(src)
    _, rows = read_csv(directory / "A.csv")
    A = np.array([float(r[3]) for r in rows])
    tables = []
    for name in ("B.csv", "C.csv"):
        _, rows = read_csv(directory / name)
        tables.append(np.array([float(r[7]) for r in rows]).reshape(I, J))
    if A.shape != (I,):
        raise DomainError("A table does not match the direction grid")
    noise = meta["noise"]
    return PhaselessDataset(float(meta["k"]), tuple(meta["d0"]), dirs, src, np.asarray(meta["labels"], dtype=int),
                            A, tables[0], tables[1], float(noise["delta"]), int(noise["seed"]),
                            meta["fingerprint"], meta["scene"], meta.get("forward", {}))
