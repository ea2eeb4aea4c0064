"""Separation-of-variables solutions for the disk (2D) and sound-soft sphere (3D).

Modal coefficients are stored about the body center; far fields are reported
in the global frame, i.e. multiplied by ``exp(-ik xhat . c)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import AccuracyError, ConvergenceError, DomainError, NumericalError
from .fields import Incident, PlaneWave, PointSource, check_directions
from .geom import BoundaryCondition, Dirichlet, Impedance

TAIL_TOL = 1e-12
AUTO_TAIL_TOL = 1e-14
MAX_ORDER = 120
BOUNDARY_BAND = 1e-10


def default_order(ka: float) -> int:
    return int(np.ceil(ka + 6 * ka ** (1 / 3) + 12))


@dataclass(frozen=True)
class SeriesSolution:
    """Scattered-field modal expansion about ``center``.

    2D: ``u^s = sum_n coeffs[n] H_n(kr) e^{in theta}`` over ``orders``; for a
    penetrable disk the interior total field is
    ``sum_n interior[n] J_n(k_int r) e^{in theta}``.

    3D: ``u^s = sum_n coeffs[n] h_n(kr) P_n(rhat . axis)``.
    """

    dim: int
    orders: np.ndarray
    coeffs: np.ndarray
    center: tuple
    radius: float
    k: float
    incident: Incident
    body: dict
    interior: np.ndarray | None = None
    k_interior: complex | None = None
    axis: tuple | None = None

    def fingerprint_dict(self) -> dict:
        return {"k": self.k, "incident": self.incident.to_dict(), **self.body}


def _disk_incident_weights(incident: Incident, center, radius, k, orders):
    c = np.asarray(center, dtype=float)
    if isinstance(incident, PlaneWave):
        d = np.asarray(incident.d)
        th = np.arctan2(d[1], d[0])
        return np.exp(1j * k * (c @ d)) * (1j ** orders) * np.exp(-1j * orders * th)
    rel = np.asarray(incident.z) - c
    rho = np.hypot(*rel)
    if rho <= radius * (1 + BOUNDARY_BAND):
        raise DomainError("point source must lie outside the disk")
    th = np.arctan2(rel[1], rel[0])
    return 0.25j * specfun.hankel1(orders, k * rho) * np.exp(-1j * orders * th)


def _tail(terms: np.ndarray, ends) -> float:
    """Largest modal term at the truncation orders relative to the largest term."""
    scale = np.abs(terms).max()
    if scale == 0:
        return 0.0
    return float(np.abs(terms[ends]).max() / scale)


def _with_orders(build, ka: float, N: int | None):
    """Run ``build(N) -> (solution, tail)`` with the truncation policy."""
    if N is not None:
        sol, tail = build(N)
        if tail > TAIL_TOL:
            raise ConvergenceError(f"series tail {tail:.2e} above {TAIL_TOL} at N = {N}")
        return sol
    N = default_order(ka)
    while True:
        sol, tail = build(N)
        if tail <= AUTO_TAIL_TOL:
            return sol
        if N >= MAX_ORDER:
            raise ConvergenceError(f"series tail {tail:.2e} not resolved by N = {MAX_ORDER}")
        N = min(MAX_ORDER, int(1.5 * N) + 4)


def solve_disk(radius: float, center, bc: BoundaryCondition, incident: Incident, k: float,
               N: int | None = None) -> SeriesSolution:
    """Scattering by a disk with a Dirichlet or impedance (incl. Neumann) condition."""
    ka = k * radius

    def build(N):
        n = np.arange(-N, N + 1)
        b = _disk_incident_weights(incident, center, radius, k, n)
        J, H = specfun.besselj(n, ka), specfun.hankel1(n, ka)
        if isinstance(bc, Dirichlet):
            ratio = J / H
            body = {"shape": "disk", "radius": radius, "center": list(map(float, center)), "bc": "dirichlet"}
        else:
            lam = complex(bc.lam)
            ratio = (k * specfun.besselj_d(n, ka) + lam * J) / (k * specfun.hankel1_d(n, ka) + lam * H)
            body = {"shape": "disk", "radius": radius, "center": list(map(float, center)),
                    "bc": "impedance", "lambda": [lam.real, lam.imag]}
        a = -b * ratio
        sol = SeriesSolution(2, n, a, tuple(map(float, center)), float(radius), float(k), incident, body)
        return sol, _tail(a * H, [0, -1])

    return _with_orders(build, ka, N)


def solve_penetrable_disk(radius: float, center, index: complex, incident: Incident, k: float,
                          N: int | None = None) -> SeriesSolution:
    """Disk with constant refractive index ``index`` (the coefficient n in
    Delta u + k^2 n u = 0; a reference ball with parameter n0 has index n0**2)."""
    index = complex(index)
    k1 = k * np.sqrt(index)
    ka = k * radius

    def build(N):
        n = np.arange(-N, N + 1)
        b = _disk_incident_weights(incident, center, radius, k, n)
        J, Jd = specfun.besselj(n, ka), specfun.besselj_d(n, ka)
        H, Hd = specfun.hankel1(n, ka), specfun.hankel1_d(n, ka)
        J1, J1d = specfun.besselj(n, k1 * radius), specfun.besselj_d(n, k1 * radius)
        # [H, -J1; k H', -k1 J1'] [a; c] = -b [J; k J']
        det = -H * k1 * J1d + k * Hd * J1
        if np.any(np.abs(det) == 0) or not np.all(np.isfinite(det)):
            raise NumericalError("singular transmission system")
        rhs1, rhs2 = -b * J, -b * k * Jd
        a = (rhs1 * (-k1 * J1d) - (-J1) * rhs2) / det
        c = (H * rhs2 - k * Hd * rhs1) / det
        body = {"shape": "disk", "radius": radius, "center": list(map(float, center)),
                "index": [index.real, index.imag]}
        sol = SeriesSolution(2, n, a, tuple(map(float, center)), float(radius), float(k), incident, body,
                             interior=c, k_interior=k1)
        return sol, _tail(a * H, [0, -1])

    return _with_orders(build, ka, N)


def solve_sphere(radius: float, center, incident: Incident, k: float, N: int | None = None) -> SeriesSolution:
    """Sound-soft sphere under plane-wave or point-source incidence."""
    c = np.asarray(center, dtype=float)
    ka = k * radius
    if isinstance(incident, PlaneWave):
        axis = np.asarray(incident.d)
        phase = np.exp(1j * k * (c @ axis))
    else:
        rel = np.asarray(incident.z) - c
        rho = np.linalg.norm(rel)
        if rho <= radius * (1 + BOUNDARY_BAND):
            raise DomainError("point source must lie outside the sphere")
        axis = rel / rho

    def build(N):
        n = np.arange(N + 1)
        jn, hn = specfun.sph_jn(n, ka), specfun.sph_h1(n, ka)
        if isinstance(incident, PlaneWave):
            w = phase * (1j ** n) * (2 * n + 1)
        else:
            w = 1j * k / (4 * np.pi) * (2 * n + 1) * specfun.sph_h1(n, k * rho)
        coeffs = -w * jn / hn
        body = {"shape": "sphere", "radius": radius, "center": list(map(float, c)), "bc": "dirichlet"}
        sol = SeriesSolution(3, n, coeffs, tuple(map(float, c)), float(radius), float(k), incident, body,
                             axis=tuple(map(float, axis)))
        return sol, _tail(coeffs * hn, [-1])

    return _with_orders(build, ka, N)


def eval_far(sol: SeriesSolution, directions) -> np.ndarray:
    """Far-field pattern in the global frame at the given unit directions."""
    x = check_directions(directions, sol.dim)
    c = np.asarray(sol.center)
    shift = np.exp(-1j * sol.k * (x @ c))
    if sol.dim == 2:
        th = np.arctan2(x[:, 1], x[:, 0])
        n = sol.orders
        modal = (sol.coeffs * (-1j) ** n)[None, :] * np.exp(1j * np.outer(th, n))
        return np.sqrt(2 / (np.pi * sol.k)) * np.exp(-0.25j * np.pi) * modal.sum(axis=1) * shift
    cosg = np.clip(x @ np.asarray(sol.axis), -1.0, 1.0)
    P = specfun.legendre_table(len(sol.orders) - 1, cosg)
    w = sol.coeffs * (-1j) ** (sol.orders + 1) / sol.k
    return (w @ P) * shift


def eval_near(sol: SeriesSolution, points, allow_boundary: bool = False) -> np.ndarray:
    """Scattered field outside the body; interior total field inside a penetrable disk.

    Points within ``1e-10 * radius`` of the boundary raise unless
    ``allow_boundary`` is set, in which case the exterior expansion is used.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[-1] != sol.dim:
        raise DomainError(f"expected {sol.dim}D points")
    rel = p - np.asarray(sol.center)
    r = np.linalg.norm(rel, axis=-1)
    on_boundary = np.abs(r - sol.radius) <= BOUNDARY_BAND * sol.radius
    if on_boundary.any() and not allow_boundary:
        raise AccuracyError("evaluation point on the scatterer boundary")
    inside = (r < sol.radius) & ~on_boundary
    if inside.any() and sol.interior is None:
        raise DomainError("evaluation point inside an impenetrable scatterer")
    out = np.zeros(len(p), dtype=complex)
    outside = ~inside
    if sol.dim == 2:
        th = np.arctan2(rel[:, 1], rel[:, 0])
        n = sol.orders
        if outside.any():
            H = specfun.hankel1(n[None, :], sol.k * r[outside, None])
            out[outside] = (H * sol.coeffs[None, :] * np.exp(1j * np.outer(th[outside], n))).sum(axis=1)
        if inside.any():
            J = specfun.besselj(n[None, :], sol.k_interior * r[inside, None])
            out[inside] = (J * sol.interior[None, :] * np.exp(1j * np.outer(th[inside], n))).sum(axis=1)
        return out
    cosg = np.clip((rel @ np.asarray(sol.axis)) / r, -1.0, 1.0)
    P = specfun.legendre_table(len(sol.orders) - 1, cosg)
    h = specfun.sph_h1(sol.orders[:, None], sol.k * r[None, :])
    return np.sum(sol.coeffs[:, None] * h * P, axis=0)


class DiskSeries:
    """Far/near-field provider for a single disk backed by the series solution."""

    def __init__(self, radius, center, k, bc: BoundaryCondition | None = None, index=None, N=None):
        self.radius, self.center, self.k = float(radius), tuple(map(float, center)), float(k)
        self.bc, self.index, self.N = bc if bc is not None else Dirichlet(), index, N

    def solve(self, incident: Incident) -> SeriesSolution:
        if self.index is not None:
            return solve_penetrable_disk(self.radius, self.center, self.index, incident, self.k, self.N)
        return solve_disk(self.radius, self.center, self.bc, incident, self.k, self.N)

    def far_field(self, incident: Incident, directions) -> np.ndarray:
        return eval_far(self.solve(incident), directions)

    def far_fields(self, incidents, directions) -> np.ndarray:
        return np.stack([self.far_field(inc, directions) for inc in incidents], axis=-1)

    def near_field(self, incident: Incident, points) -> np.ndarray:
        return eval_near(self.solve(incident), points)


class SphereSeries:
    """Provider for a sound-soft sphere."""

    def __init__(self, radius, center, k, N=None):
        self.radius, self.center, self.k, self.N = float(radius), tuple(map(float, center)), float(k), N

    def solve(self, incident: Incident) -> SeriesSolution:
        return solve_sphere(self.radius, self.center, incident, self.k, self.N)

    def far_field(self, incident: Incident, directions) -> np.ndarray:
        return eval_far(self.solve(incident), directions)

    def near_field(self, incident: Incident, points) -> np.ndarray:
        return eval_near(self.solve(incident), points)
