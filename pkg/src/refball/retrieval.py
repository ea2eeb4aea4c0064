"""Relative-phase branches, the gauge gap and the conjugate-branch gap.

Given ``cos theta_ij`` with ``theta_ij = arg u_inf(x_i) - arg v_inf(x_i, z_j)``,
the phase is known up to a sign and a multiple of 2 pi.  Signs are chosen
greedily along each polygon edge so that consecutive values vary smoothly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResolutionError
from .phaseless import CrossField


@dataclass(frozen=True)
class PhaseField:
    """Resolved phases ``theta`` (NaN where masked) with per-entry sign choice,
    ambiguity flags and the largest jump along each (direction, edge) chain."""

    theta: np.ndarray
    sign: np.ndarray
    ambiguous: np.ndarray
    jumps: dict

    @property
    def resolved(self) -> np.ndarray:
        return np.isfinite(self.theta) & ~self.ambiguous


def _chain(c: np.ndarray, tau: float):
    """Greedy sign/branch choice for one ordered chain of cosines."""
    a = np.arccos(np.clip(c, -1.0, 1.0))
    n = len(a)
    theta, sign, amb = np.empty(n), np.ones(n, dtype=int), np.zeros(n, dtype=bool)
    theta[0] = a[0]
    worst = 0.0
    for m in range(1, n):
        pred = theta[m - 1] if m == 1 else 2 * theta[m - 1] - theta[m - 2]
        best = None
        for s in (1, -1):
            cand = s * a[m] + 2 * np.pi * np.round((pred - s * a[m]) / (2 * np.pi))
            score = abs(cand - pred)
            if best is None or score < best[0]:
                best = (score, cand, s)
        _, theta[m], sign[m] = best
        jumps = [abs(s * a[m] + 2 * np.pi * np.round((theta[m - 1] - s * a[m]) / (2 * np.pi)) - theta[m - 1])
                 for s in (1, -1)]
        amb[m] = min(jumps) > tau
        worst = max(worst, abs(theta[m] - theta[m - 1]))
    if n == 1:
        amb[0] = True
    return theta, sign, amb, worst


def unwrap_sign(c: CrossField, tau: float = 0.5) -> PhaseField:
    """Resolve ``theta = +-arccos(cos theta) + 2 pi m`` along each edge.

    Sources sharing an edge label are chained in their stored order.  The
    first entry of every chain takes the + sign, so the result is defined up to
    one global sign per (direction, edge).  An entry is flagged ambiguous when
    both sign choices jump by more than ``tau`` from the previous value.
    """
    if c.cos is None:
        raise DomainError("cross field carries no cosine values; use extract_cosine")
    I, J = c.cos.shape
    theta = np.full((I, J), np.nan)
    sign = np.zeros((I, J), dtype=int)
    amb = np.zeros((I, J), dtype=bool)
    jumps = {}
    for i in range(I):
        if not c.mask[i].any():
            raise ResolutionError(f"direction {i} is fully masked")
        for e in np.unique(c.labels):
            idx = np.flatnonzero((c.labels == e) & c.mask[i])
            if len(idx) == 0:
                continue
            th, s, am, worst = _chain(c.cos[i, idx], tau)
            theta[i, idx], sign[i, idx], amb[i, idx] = th, s, am
            jumps[(i, int(e))] = worst
    return PhaseField(theta, sign, amb, jumps)


def _congruent(F1, F2):
    F1, F2 = np.asarray(F1, dtype=complex), np.asarray(F2, dtype=complex)
    if F1.shape != F2.shape:
        raise DomainError(f"far-field grids differ in shape: {F1.shape} vs {F2.shape}")
    return F1.ravel(), F2.ravel()


def gauge_gap(F1, F2) -> tuple[float, float]:
    """Distance between two grids modulo a global phase.

    Returns ``(gap, eta)`` with ``gap = min_eta ||F1 - e^{i eta} F2||`` and
    ``eta = -arg <F1, F2>`` where ``<F1, F2> = sum F1 conj(F2)``; hence
    ``F2 = e^{i eta} F1`` gives ``(0, eta)``.  The gap is evaluated as a norm of
    the aligned difference rather than through the expanded quadratic, which
    would lose half the significant digits near zero.
    """
    F1, F2 = _congruent(F1, F2)
    inner = np.vdot(F2, F1)
    eta = -float(np.angle(inner)) if inner != 0 else 0.0
    gap = float(np.linalg.norm(F1 - np.exp(-1j * eta) * F2))
    return gap, eta


def conjugate_gap(F1, F2) -> float:
    """``min_eta ||F1 - e^{i eta} conj(F2)||``."""
    F1, F2 = _congruent(F1, F2)
    return gauge_gap(F1, np.conj(F2))[0]
