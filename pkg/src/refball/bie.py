"""Nystrom combined-field solver for 2D exterior scattering by several smooth bodies.

Every body carries the representation

    u^s = D phi - i eta S phi,     eta = k,

with the standard layer potentials (kernels ``Phi = (i/4) H0(k|x-y|)``).
Using the factor-two operators S, K, K', T of the boundary traces, the rows are

    Dirichlet:  phi + (K - i eta S) phi = -2 u^i
    impedance:  (T - i eta K') phi + i eta phi + lam (phi + (K - i eta S) phi)
                    = -2 (du^i/dnu + lam u^i)

Self-interaction blocks use the logarithmic splitting with the trigonometric
product weights R_j on the 2n equispaced nodes; T is applied through Maue's
identity T = d/ds S d/ds + k^2 nu . S nu with spectral differentiation.
Cross-body blocks are smooth and use the trapezoidal rule.
"""
from __future__ import annotations

import functools
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import hankel1, j0, j1

from .errors import AccuracyError, DomainError, NumericalError, PreconditionError
from .fields import (Incident, PlaneWave, check_directions, far_field_constant, incident_gradient,
                     incident_value)
from .geom import (BoundaryCondition, BoundarySample, Dirichlet, Impedance, Obstacle, Scene, StarBoundary,
                   _overlap, sample_boundary, validate_scene)

EULER_GAMMA = 0.5772156649015329
NODES_PER_WAVELENGTH = 10
NEAR_SPACINGS = 3.0
RCOND_MIN = 1e-14


def kress_weights(n: int) -> np.ndarray:
    """R_l, l = 0..2n-1, for int_0^{2pi} ln(4 sin^2((t-s)/2)) f(s) ds on 2n nodes."""
    l = np.arange(2 * n)
    m = np.arange(1, n)
    R = -(2 * np.pi / n) * (np.cos(np.outer(l, m) * np.pi / n) / m).sum(axis=1)
    return R - (np.pi / n ** 2) * np.cos(l * np.pi)


def spectral_derivative(m: int) -> np.ndarray:
    """Periodic differentiation matrix on m (even) equispaced nodes of [0, 2pi)."""
    i = np.arange(m)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        D = 0.5 * (-1.0) ** d / np.tan(d * np.pi / m)
    D[d == 0] = 0.0
    return D


@dataclass(frozen=True)
class _SelfOps:
    S: np.ndarray
    K: np.ndarray
    Kp: np.ndarray
    T: np.ndarray


@functools.lru_cache(maxsize=128)
def _self_ops(boundary: StarBoundary, k: float, m: int) -> _SelfOps:
    smp = sample_boundary(boundary, m)
    n = m // 2
    x, dx, ddx, jac, nu = smp.nodes, smp.dx, smp.ddx, smp.jacobian, smp.normals
    diff = x[:, None, :] - x[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    off = ~np.eye(m, dtype=bool)
    r_safe = np.where(off, r, 1.0)
    kr = k * r_safe
    H0, H1, J0, J1 = hankel1(0, kr), hankel1(1, kr), j0(kr), j1(kr)
    idx = np.arange(m)
    lag = np.abs(idx[:, None] - idx[None, :])
    Rm = kress_weights(n)[lag]
    tdiff = (idx[:, None] - idx[None, :]) * np.pi / n
    with np.errstate(divide="ignore"):
        logm = np.where(off, np.log(np.where(off, 4 * np.sin(tdiff / 2) ** 2, 1.0)), 0.0)
    w = np.pi / n

    curv = (dx[:, 1] * ddx[:, 0] - dx[:, 0] * ddx[:, 1]) / (2 * np.pi * jac ** 2)

    def nystrom(full, log_part, diag_full, diag_log):
        K2 = np.where(off, full - log_part * logm, 0.0)
        K1 = np.where(off, log_part, 0.0)
        K2[idx, idx] = diag_full
        K1[idx, idx] = diag_log
        return Rm * K1 + w * K2

    # single layer
    M = 0.5j * H0 * jac[None, :]
    M1 = -J0 * jac[None, :] / (2 * np.pi)
    M2d = (0.5j - EULER_GAMMA / np.pi - np.log(k * jac / 2) / np.pi) * jac
    S = nystrom(M, M1, M2d, -jac / (2 * np.pi))

    # double layer (normal at source)
    A = dx[None, :, 1] * diff[..., 0] - dx[None, :, 0] * diff[..., 1]
    L = 0.5j * k * A * H1 / r_safe
    L1 = -k / (2 * np.pi) * A * J1 / r_safe
    K = nystrom(L, L1, curv, 0.0)

    # adjoint double layer (normal at target)
    B = dx[:, None, 1] * diff[..., 0] - dx[:, None, 0] * diff[..., 1]
    scale = jac[None, :] / jac[:, None]
    Lp = -0.5j * k * B * H1 / r_safe * scale
    Lp1 = k / (2 * np.pi) * B * J1 / r_safe * scale
    Kp = nystrom(Lp, Lp1, curv, 0.0)

    D = spectral_derivative(m)
    Ds = D / jac[:, None]
    T = Ds @ S @ Ds + k ** 2 * (nu[:, 0, None] * S * nu[None, :, 0] + nu[:, 1, None] * S * nu[None, :, 1])
    return _SelfOps(S, K, Kp, T)


def _cross_ops(tgt: BoundarySample, src: BoundarySample, k: float):
    """Trapezoidal S, K, K', T blocks for targets on a different curve."""
    w = 2 * np.pi / len(src)
    diff = tgt.nodes[:, None, :] - src.nodes[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    H0, H1 = hankel1(0, k * r), hankel1(1, k * r)
    jy = src.jacobian[None, :] * w
    q = np.einsum("ijk,jk->ij", diff, src.normals)
    p = np.einsum("ijk,ik->ij", diff, tgt.normals)
    S = 0.5j * H0 * jy
    K = 0.5j * k * H1 / r * q * jy
    Kp = -0.5j * k * H1 / r * p * jy
    nn = tgt.normals @ src.normals.T
    T = 0.5j * k * ((k * H0 - 2 * H1 / r) * p * q / r ** 2 + H1 * nn / r) * jy
    return _SelfOps(S, K, Kp, T)


@dataclass
class SystemOperator:
    """Assembled and LU-factorised combined-field system for a set of bodies."""

    bodies: list
    bcs: list
    samples: list
    k: float
    eta: float
    matrix: np.ndarray
    offsets: np.ndarray
    lu: tuple = field(repr=False, default=None)
    rcond: float = float("nan")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def fingerprint_dict(self) -> dict:
        out = []
        for b, bc in zip(self.bodies, self.bcs):
            d = {"shape": "disk", "radius": b.a0, "center": list(b.center)} if b.is_circle else {
                "shape": "star", **b.to_dict()}
            if isinstance(bc, Dirichlet):
                d["bc"] = "dirichlet"
            else:
                d["bc"] = "impedance"
                d["lambda"] = [bc.lam.real, bc.lam.imag]
            out.append(d)
        return out[0] if len(out) == 1 else {"bodies": out}


@dataclass
class DensitySolution:
    op: SystemOperator
    density: np.ndarray
    incident: Incident

    def fingerprint_dict(self) -> dict:
        return {"k": self.op.k, "incident": self.incident.to_dict(), **self.op.fingerprint_dict()}


def _check_resolution(b: StarBoundary, m: int, k: float, strict: bool):
    perim = sample_boundary(b, 256).jacobian.mean() * 2 * np.pi
    need = NODES_PER_WAVELENGTH * perim * k / (2 * np.pi)
    if m < need:
        msg = f"{m} nodes under-resolve a body of perimeter {perim:.3g} at k = {k} (need >= {need:.0f})"
        if strict:
            raise PreconditionError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def assemble_bodies(bodies, bcs, k: float, nodes, strict: bool = False) -> SystemOperator:
    """Assemble and factorise the system for explicit bodies and boundary conditions."""
    bodies, bcs = list(bodies), list(bcs)
    if isinstance(nodes, int):
        nodes = [nodes] * len(bodies)
    nodes = [int(m) for m in nodes]
    for a, b in itertools.combinations(bodies, 2):
        if _overlap(a, b):
            raise PreconditionError("bodies are not pairwise disjoint")
    for b, m in zip(bodies, nodes):
        _check_resolution(b, m, k, strict)
    eta = k
    samples = [sample_boundary(b, m) for b, m in zip(bodies, nodes)]
    offsets = np.concatenate([[0], np.cumsum(nodes)])
    N = offsets[-1]
    Amat = np.zeros((N, N), dtype=complex)
    for a, (ba, bca, sa) in enumerate(zip(bodies, bcs, samples)):
        ra = slice(offsets[a], offsets[a + 1])
        for b, sb in enumerate(samples):
            cb = slice(offsets[b], offsets[b + 1])
            ops = _self_ops(ba, k, nodes[a]) if a == b else _cross_ops(sa, sb, k)
            trace = ops.K - 1j * eta * ops.S
            if isinstance(bca, Dirichlet):
                block = trace
            else:
                block = ops.T - 1j * eta * ops.Kp + bca.lam * trace
            if a == b:
                lam = 0.0 if isinstance(bca, Dirichlet) else bca.lam
                diag = 1.0 if isinstance(bca, Dirichlet) else 1j * eta + lam
                block = block + diag * np.eye(nodes[a])
            Amat[ra, cb] = block
    op = SystemOperator(bodies, bcs, samples, k, eta, Amat, offsets)
    lu = linalg.lu_factor(Amat, check_finite=True)
    anorm = np.abs(Amat).sum(axis=0).max()
    rcond, info = linalg.lapack.zgecon(lu[0], anorm)
    if info != 0 or not rcond > RCOND_MIN:
        raise NumericalError(f"singular boundary system (rcond estimate {rcond:.2e})")
    op.lu, op.rcond = lu, float(rcond)
    return op


def assemble(scene: Scene, nodes, strict: bool = False, include_ball: bool = True) -> SystemOperator:
    """Assemble the system for an obstacle scene (components, then the sound-soft ball)."""
    if scene.kind != "obstacle":
        raise PreconditionError("BIE assembly needs an obstacle scene")
    report = validate_scene(scene)
    if not report.ok:
        raise PreconditionError("scene failed validation:\n" + str(report))
    bodies = [c.boundary for c in scene.components]
    bcs = [c.bc for c in scene.components]
    if include_ball and scene.ball is not None:
        bodies.append(scene.ball.boundary)
        bcs.append(Dirichlet())
    return assemble_bodies(bodies, bcs, scene.k, nodes, strict)


def _rhs(op: SystemOperator, incident: Incident) -> np.ndarray:
    parts = []
    for b, bc, smp in zip(op.bodies, op.bcs, op.samples):
        if isinstance(incident, PlaneWave):
            pass
        else:
            z = np.asarray(incident.z)
            if b.contains(z[None, :], 1e-12)[0]:
                raise DomainError("point source lies inside or on a scatterer")
        ui = incident_value(incident, smp.nodes, op.k)
        if isinstance(bc, Dirichlet):
            parts.append(-2 * ui)
        else:
            dui = np.einsum("ij,ij->i", incident_gradient(incident, smp.nodes, op.k), smp.normals)
            parts.append(-2 * (dui + bc.lam * ui))
    return np.concatenate(parts)


def solve(op: SystemOperator, incident: Incident) -> DensitySolution:
    return DensitySolution(op, linalg.lu_solve(op.lu, _rhs(op, incident)), incident)


def solve_many(op: SystemOperator, incidents) -> list:
    rhs = np.stack([_rhs(op, inc) for inc in incidents], axis=1)
    dens = linalg.lu_solve(op.lu, rhs)
    return [DensitySolution(op, dens[:, i], inc) for i, inc in enumerate(incidents)]


def _far_matrix(op: SystemOperator, directions) -> np.ndarray:
    x = check_directions(directions, 2)
    k, eta = op.k, op.eta
    blocks = []
    for smp in op.samples:
        w = 2 * np.pi / len(smp)
        phase = np.exp(-1j * k * x @ smp.nodes.T)
        blocks.append(-1j * (k * x @ smp.normals.T + eta) * phase * (smp.jacobian * w)[None, :])
    return far_field_constant(k, 2) * np.concatenate(blocks, axis=1)


def far_field(sol: DensitySolution, directions) -> np.ndarray:
    return _far_matrix(sol.op, directions) @ sol.density


def _near_matrix(op: SystemOperator, points, check: bool = True) -> np.ndarray:
    p = np.atleast_2d(np.asarray(points, dtype=float))
    k, eta = op.k, op.eta
    blocks = []
    for b, smp in zip(op.bodies, op.samples):
        w = 2 * np.pi / len(smp)
        diff = p[:, None, :] - smp.nodes[None, :, :]
        r = np.hypot(diff[..., 0], diff[..., 1])
        if check:
            if b.contains(p).any():
                raise DomainError("evaluation point inside a scatterer")
            spacing = smp.jacobian * w
            if (r / spacing[None, :]).min() < NEAR_SPACINGS:
                raise AccuracyError("evaluation point too close to a boundary for trapezoidal quadrature")
        q = np.einsum("ijk,jk->ij", diff, smp.normals)
        dl = 0.25j * k * hankel1(1, k * r) * q / r
        sl = 0.25j * hankel1(0, k * r)
        blocks.append((dl - 1j * eta * sl) * (smp.jacobian * w)[None, :])
    return np.concatenate(blocks, axis=1)


def near_field(sol: DensitySolution, points, check: bool = True) -> np.ndarray:
    """Scattered field at exterior points at least three node spacings from every boundary."""
    return _near_matrix(sol.op, points, check) @ sol.density


class BIEScattering:
    """Far/near-field provider for a fixed set of bodies; the factorisation is reused."""

    def __init__(self, bodies, bcs, k: float, nodes=64, strict: bool = False):
        self.op = assemble_bodies(bodies, bcs, k, nodes, strict)
        self.k = float(k)

    @classmethod
    def from_scene(cls, scene: Scene, nodes=64, include_ball: bool = True, strict: bool = False):
        obj = cls.__new__(cls)
        obj.op = assemble(scene, nodes, strict, include_ball)
        obj.k = scene.k
        return obj

    def far_field(self, incident: Incident, directions) -> np.ndarray:
        return far_field(solve(self.op, incident), directions)

    def far_fields(self, incidents, directions) -> np.ndarray:
        incidents = list(incidents)
        if not incidents:
            return np.zeros((len(np.atleast_2d(directions)), 0), dtype=complex)
        rhs = np.stack([_rhs(self.op, inc) for inc in incidents], axis=1)
        return _far_matrix(self.op, directions) @ linalg.lu_solve(self.op.lu, rhs)

    def near_field(self, incident: Incident, points, check: bool = True) -> np.ndarray:
        return near_field(solve(self.op, incident), points, check)
