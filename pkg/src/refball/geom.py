"""Scene description, boundary and polygon sampling, scene validation."""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .errors import GeometryError

RADIUS_GRID = 1024
RADIUS_TOL = 1e-9


def _point(p) -> tuple:
    p = tuple(float(v) for v in p)
    if len(p) != 2:
        raise GeometryError(f"expected a 2D point, got {p}")
    return p


@dataclass(frozen=True)
class StarBoundary:
    """Closed curve x(t) = center + r(t) (cos t, sin t) with

    r(t) = a0 + sum_m (a[m-1] cos mt + b[m-1] sin mt).
    """

    center: tuple
    a0: float
    a: tuple = ()
    b: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        order = max(len(a), len(b))
        a += (0.0,) * (order - len(a))
        b += (0.0,) * (order - len(b))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a0", float(self.a0))
        rmin = self.min_radius()
        if not rmin > RADIUS_TOL:
            raise GeometryError(f"radial function not positive (min r = {rmin:.3e})")

    @classmethod
    def circle(cls, center, radius: float) -> "StarBoundary":
        return cls(center, radius)

    @property
    def order(self) -> int:
        return len(self.a)

    @property
    def is_circle(self) -> bool:
        return not any(self.a) and not any(self.b)

    def radius(self, t, deriv: int = 0):
        """r(t) or its first/second derivative."""
        t = np.asarray(t, dtype=float)
        if deriv == 0:
            out = np.full(t.shape, self.a0)
        else:
            out = np.zeros(t.shape)
        for m, (am, bm) in enumerate(zip(self.a, self.b), start=1):
            c, s = np.cos(m * t), np.sin(m * t)
            if deriv == 0:
                out = out + am * c + bm * s
            elif deriv == 1:
                out = out + m * (-am * s + bm * c)
            else:
                out = out - m * m * (am * c + bm * s)
        return out

    def min_radius(self, n: int = RADIUS_GRID) -> float:
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return float(self.radius(t).min())

    def max_radius(self, n: int = RADIUS_GRID) -> float:
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return float(self.radius(t).max())

    def points(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        r = self.radius(t)
        return np.stack([self.center[0] + r * np.cos(t), self.center[1] + r * np.sin(t)], axis=-1)

    def contains(self, p, tol: float = 0.0) -> np.ndarray:
        """True where points lie inside the closed curve (within ``tol``)."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        dx = p[:, 0] - self.center[0]
        dy = p[:, 1] - self.center[1]
        return np.hypot(dx, dy) <= self.radius(np.arctan2(dy, dx)) + tol

    def area(self) -> float:
        # Parseval on r^2 / 2 integrated over [0, 2pi)
        return float(np.pi * (self.a0 ** 2 + 0.5 * sum(am * am + bm * bm for am, bm in zip(self.a, self.b))))

    def to_dict(self) -> dict:
        return {"center": list(self.center), "a0": self.a0, "a": list(self.a), "b": list(self.b)}

    @classmethod
    def from_dict(cls, d: dict) -> "StarBoundary":
        return cls(d["center"], d["a0"], tuple(d.get("a", ())), tuple(d.get("b", ())))


def translate(b: StarBoundary, h) -> StarBoundary:
    h = _point(h)
    return replace(b, center=(b.center[0] + h[0], b.center[1] + h[1]))


@dataclass(frozen=True)
class Dirichlet:
    def to_dict(self):
        return {"type": "dirichlet"}


@dataclass(frozen=True)
class Impedance:
    """du/dnu + lam u = 0; lam = 0 is the sound-hard case."""

    lam: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))

    def to_dict(self):
        return {"type": "impedance", "lambda": [self.lam.real, self.lam.imag]}


Neumann = Impedance(0.0)
BoundaryCondition = Union[Dirichlet, Impedance]


@dataclass(frozen=True)
class Obstacle:
    boundary: StarBoundary
    bc: BoundaryCondition = field(default_factory=Dirichlet)


@dataclass(frozen=True)
class Inclusion:
    """Penetrable region with constant refractive index n_D."""

    boundary: StarBoundary
    index: complex

    def __post_init__(self):
        object.__setattr__(self, "index", complex(self.index))


@dataclass(frozen=True)
class ReferenceBall:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        if not self.radius > 0:
            raise GeometryError("reference ball radius must be positive")

    @property
    def boundary(self) -> StarBoundary:
        return StarBoundary.circle(self.center, self.radius)


@dataclass(frozen=True)
class SourcePolygon:
    vertices: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(_point(v) for v in self.vertices))
        if len(self.vertices) < 3:
            raise GeometryError("polygon needs at least three vertices")

    @property
    def edges(self) -> list:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def contains(self, p, tol: float = 0.0) -> np.ndarray:
        """Points inside or on the (convex) polygon."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        v = np.asarray(self.vertices)
        w = np.roll(v, -1, axis=0)
        e = w - v
        cross = e[None, :, 0] * (p[:, None, 1] - v[None, :, 1]) - e[None, :, 1] * (p[:, None, 0] - v[None, :, 0])
        cross /= np.linalg.norm(e, axis=1)[None, :]
        return np.all(cross >= -tol, axis=1) | np.all(cross <= tol, axis=1)


@dataclass(frozen=True)
class Scene:
    """Obstacle or medium scattering configuration.

    For obstacle scenes ``components`` holds :class:`Obstacle` entries and the
    reference ball is sound-soft.  For medium scenes it holds
    :class:`Inclusion` entries and the ball has refractive index ``n0**2``.
    """

    kind: str
    components: tuple
    k: float
    d0: tuple = (1.0, 0.0)
    ball: ReferenceBall | None = None
    polygon: SourcePolygon | None = None
    n0: float | None = None

    def __post_init__(self):
        if self.kind not in ("obstacle", "medium"):
            raise GeometryError(f"unknown scene kind {self.kind!r}")
        object.__setattr__(self, "components", tuple(self.components))
        d = np.asarray(_point(self.d0))
        object.__setattr__(self, "d0", tuple(d / np.linalg.norm(d)))
        object.__setattr__(self, "k", float(self.k))

    def with_ball(self, ball: ReferenceBall | None) -> "Scene":
        return replace(self, ball=ball)

    def with_components(self, components) -> "Scene":
        return replace(self, components=tuple(components))

    def bodies(self) -> list:
        """All closed curves in the scene (components first, then the ball)."""
        out = [c.boundary for c in self.components]
        if self.ball is not None:
            out.append(self.ball.boundary)
        return out

    def to_dict(self) -> dict:
        comps = []
        for c in self.components:
            d = c.boundary.to_dict()
            if isinstance(c, Obstacle):
                d["bc"] = c.bc.to_dict()
            else:
                d["index"] = [c.index.real, c.index.imag]
            comps.append(d)
        out = {"kind": self.kind, "k": self.k, "d0": list(self.d0), "components": comps}
        if self.ball is not None:
            out["ball"] = {"center": list(self.ball.center), "radius": self.ball.radius}
            if self.n0 is not None:
                out["ball"]["n0"] = self.n0
        if self.polygon is not None:
            out["polygon"] = [list(v) for v in self.polygon.vertices]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        kind = d["kind"]
        comps = []
        for c in d.get("components", []):
            b = StarBoundary.from_dict(c)
            if kind == "obstacle":
                comps.append(Obstacle(b, bc_from_dict(c.get("bc", {"type": "dirichlet"}))))
            else:
                comps.append(Inclusion(b, _complex(c["index"])))
        ball = n0 = None
        if d.get("ball") is not None:
            ball = ReferenceBall(d["ball"]["center"], d["ball"]["radius"])
            n0 = d["ball"].get("n0")
        poly = SourcePolygon(d["polygon"]) if d.get("polygon") is not None else None
        return cls(kind, comps, d["k"], tuple(d.get("d0", (1.0, 0.0))), ball, poly, n0)


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def bc_from_dict(d) -> BoundaryCondition:
    if isinstance(d, str):
        d = {"type": d}
    t = d["type"]
    if t == "dirichlet":
        return Dirichlet()
    if t == "neumann":
        return Impedance(0.0)
    if t == "impedance":
        return Impedance(_complex(d.get("lambda", 0.0)))
    raise GeometryError(f"unknown boundary condition {t!r}")


def fingerprint(obj: dict) -> str:
    """Stable short hash of a JSON-compatible description."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class BoundarySample:
    t: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    jacobian: np.ndarray
    dx: np.ndarray
    ddx: np.ndarray

    def __len__(self):
        return len(self.t)


def sample_boundary(b: StarBoundary, m: int) -> BoundarySample:
    """Equispaced parameter nodes t_j = 2 pi j / m with analytic normals."""
    if m < 4 or m % 2:
        raise GeometryError(f"node count must be even and >= 4, got {m}")
    t = 2 * np.pi * np.arange(m) / m
    r, r1, r2 = b.radius(t), b.radius(t, 1), b.radius(t, 2)
    if r.min() <= RADIUS_TOL:
        raise GeometryError("non-positive radius on the boundary")
    c, s = np.cos(t), np.sin(t)
    x = np.stack([b.center[0] + r * c, b.center[1] + r * s], axis=-1)
    dx = np.stack([r1 * c - r * s, r1 * s + r * c], axis=-1)
    ddx = np.stack([(r2 - r) * c - 2 * r1 * s, (r2 - r) * s + 2 * r1 * c], axis=-1)
    jac = np.hypot(dx[:, 0], dx[:, 1])
    normals = np.stack([dx[:, 1], -dx[:, 0]], axis=-1) / jac[:, None]
    return BoundarySample(t, x, normals, jac, dx, ddx)


def sample_polygon(p: SourcePolygon, per_edge: int):
    """Interior points of every edge at fractions j/(per_edge+1).

    Returns ``(points, labels)`` where ``labels[i]`` is the 0-based edge index.
    """
    if per_edge < 1:
        raise GeometryError("per_edge must be >= 1")
    pts, labels = [], []
    frac = np.arange(1, per_edge + 1) / (per_edge + 1)
    for ell, (v, w) in enumerate(p.edges):
        v, w = np.asarray(v), np.asarray(w)
        if np.linalg.norm(w - v) < 1e-12:
            raise GeometryError(f"degenerate polygon edge {ell}")
        pts.append(v[None, :] + frac[:, None] * (w - v)[None, :])
        labels.extend([ell] * per_edge)
    return np.concatenate(pts), np.asarray(labels)


def enclosing_radius(points) -> float:
    """Radius of the smallest circle containing ``points`` (brute force)."""
    pts = np.asarray(points, dtype=float)
    best = np.inf

    def covers(c, r):
        return np.all(np.linalg.norm(pts - c, axis=1) <= r * (1 + 1e-12) + 1e-14)

    for i, j in itertools.combinations(range(len(pts)), 2):
        c = 0.5 * (pts[i] + pts[j])
        r = 0.5 * np.linalg.norm(pts[i] - pts[j])
        if r < best and covers(c, r):
            best = r
    for i, j, l in itertools.combinations(range(len(pts)), 3):
        a, b, c = pts[i], pts[j], pts[l]
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-14:
            continue
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
        cc = np.array([ux, uy])
        r = np.linalg.norm(a - cc)
        if r < best and covers(cc, r):
            best = r
    return float(best)


def polygon_is_convex(p: SourcePolygon) -> bool:
    v = np.asarray(p.vertices)
    if len({tuple(x) for x in v}) != len(v):
        return False
    e = np.roll(v, -1, axis=0) - v
    if np.any(np.linalg.norm(e, axis=1) < 1e-12):
        return False
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    if np.any(np.abs(cross) < 1e-12):
        return False
    return bool(np.all(cross > 0) or np.all(cross < 0))


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in self.checks]
        return "\n".join(lines)


def _overlap(b1: StarBoundary, b2: StarBoundary, n: int = RADIUS_GRID) -> bool:
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return bool(b2.contains(b1.points(t), RADIUS_TOL).any() or b1.contains(b2.points(t), RADIUS_TOL).any())


def _polygon_overlap(p: SourcePolygon, b: StarBoundary, n: int = RADIUS_GRID) -> bool:
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    if p.contains(b.points(t), RADIUS_TOL).any():
        return True
    s = np.linspace(0, 1, 64, endpoint=False)
    edge_pts = np.concatenate([np.asarray(v) + s[:, None] * (np.asarray(w) - np.asarray(v)) for v, w in p.edges])
    return bool(b.contains(edge_pts, RADIUS_TOL).any())


def validate_scene(s: Scene) -> ValidationReport:
    checks = [Check("wavenumber", s.k > 0, f"k = {s.k}")]

    named = [(f"component {i}", c.boundary) for i, c in enumerate(s.components)]
    if s.ball is not None:
        named.append(("ball", s.ball.boundary))
    clashes = [f"{na}/{nb}" for (na, a), (nb, b) in itertools.combinations(named, 2) if _overlap(a, b)]
    if s.polygon is not None:
        clashes += [f"polygon/{nb}" for nb, b in named if _polygon_overlap(s.polygon, b)]
    checks.append(Check("disjointness", not clashes, "overlaps: " + ", ".join(clashes) if clashes else "all closures disjoint"))

    if s.kind == "obstacle":
        bad = [i for i, c in enumerate(s.components) if isinstance(c.bc, Impedance) and c.bc.lam.imag < 0]
        checks.append(Check("impedance_sign", not bad, f"Im lambda < 0 on components {bad}" if bad else "Im lambda >= 0"))
        wrong = [i for i, c in enumerate(s.components) if not isinstance(c, Obstacle)]
        checks.append(Check("component_types", not wrong, f"non-obstacle components {wrong}" if wrong else "ok"))
    else:
        bad = [i for i, c in enumerate(s.components)
               if not isinstance(c, Inclusion) or not (c.index.real > 0 and c.index.imag >= 0)]
        checks.append(Check("index_sign", not bad, f"invalid n_D on components {bad}" if bad else "Re n_D > 0, Im n_D >= 0"))
        if s.ball is not None:
            n0 = s.n0
            if n0 is None or not n0 > 0 or n0 == 1:
                checks.append(Check("ball_index", False, f"n0 = {n0} must be positive and != 1"))
            else:
                bound = np.pi / (2 * s.k * (n0 + 1))
                checks.append(Check("radius_rule", s.ball.radius < bound,
                                    f"R = {s.ball.radius:.6g} vs pi/(2k(n0+1)) = {bound:.6g}"))

    if s.polygon is not None:
        checks.append(Check("polygon_convex", polygon_is_convex(s.polygon), f"{len(s.polygon.vertices)} vertices"))
        r = enclosing_radius(s.polygon.vertices)
        checks.append(Check("polygon_circumradius", r < np.pi / s.k, f"{r:.6g} vs pi/k = {np.pi / s.k:.6g}"))
    return ValidationReport(checks)


def unit_directions(n: int, offset: float = 0.0) -> np.ndarray:
    """``n`` equispaced unit vectors in the plane, angle 2 pi j / n + offset."""
    th = offset + 2 * np.pi * np.arange(n) / n
    return np.stack([np.cos(th), np.sin(th)], axis=-1)
