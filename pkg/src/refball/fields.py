"""Incident fields and the free-space fundamental solution in 2D and 3D.

Far-field patterns use the normalisation
``u^s(x) = e^{ik|x|}/|x|^{(dim-1)/2} (u_inf(xhat) + O(1/|x|))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import hankel1


@dataclass(frozen=True)
class PlaneWave:
    d: tuple

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-12:
            raise DomainError(f"plane-wave direction must be a unit vector, |d| = {n}")
        object.__setattr__(self, "d", tuple(float(v) for v in d))

    @property
    def dim(self) -> int:
        return len(self.d)

    def to_dict(self):
        return {"type": "plane", "d": list(self.d)}


@dataclass(frozen=True)
class PointSource:
    z: tuple

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))

    @property
    def dim(self) -> int:
        return len(self.z)

    def to_dict(self):
        return {"type": "point", "z": list(self.z)}


Incident = PlaneWave | PointSource


def far_field_constant(k: float, dim: int = 2) -> complex:
    """Far-field amplitude of the fundamental solution: Phi_inf(xhat, y) = const * e^{-ik xhat.y}."""
    if dim == 3:
        return 1.0 / (4 * np.pi)
    return np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k)


def fundamental(x, y, k: float) -> np.ndarray:
    """Phi(x, y) = (i/4) H0(k|x-y|) in 2D, e^{ik|x-y|}/(4 pi |x-y|) in 3D."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    r = np.linalg.norm(x - y, axis=-1)
    if x.shape[-1] == 3:
        return np.exp(1j * k * r) / (4 * np.pi * r)
    return 0.25j * hankel1(0, k * r)


def incident_value(inc: Incident, x, k: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(inc, PlaneWave):
        return np.exp(1j * k * (x @ np.asarray(inc.d)))
    return fundamental(x, np.asarray(inc.z), k)


def incident_gradient(inc: Incident, x, k: float) -> np.ndarray:
    """Gradient of the incident field, shape (..., dim)."""
    x = np.asarray(x, dtype=float)
    if isinstance(inc, PlaneWave):
        d = np.asarray(inc.d)
        return 1j * k * np.exp(1j * k * (x @ d))[..., None] * d
    diff = x - np.asarray(inc.z)
    r = np.linalg.norm(diff, axis=-1)
    if x.shape[-1] == 3:
        g = np.exp(1j * k * r) / (4 * np.pi * r) * (1j * k - 1 / r)
    else:
        g = -0.25j * k * hankel1(1, k * r)
    return (g / r)[..., None] * diff


def incident_far_field(inc: Incident, directions, k: float) -> np.ndarray:
    """Far field of the incident point source (zero for plane waves)."""
    directions = np.asarray(directions, dtype=float)
    if isinstance(inc, PlaneWave):
        return np.zeros(directions.shape[0], dtype=complex)
    dim = directions.shape[-1]
    return far_field_constant(k, dim) * np.exp(-1j * k * directions @ np.asarray(inc.z))


def check_directions(directions, dim: int | None = None, tol: float = 1e-10) -> np.ndarray:
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if dim is not None and directions.shape[-1] != dim:
        raise DomainError(f"expected {dim}-dimensional directions")
    if np.any(np.abs(np.linalg.norm(directions, axis=-1) - 1.0) > tol):
        raise DomainError("observation directions must be unit vectors")
    return directions
