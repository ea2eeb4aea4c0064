"""Phaseless least-squares reconstruction.

The unknown obstacle (or the contrast of a penetrable inclusion) is fitted
directly to the modulus triple with Levenberg-Marquardt.  The reference ball,
wavenumber, incident direction and source points are taken from the dataset,
so the forward model is the same scene with the unknown component replaced.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ClassificationError, ObjectiveError, RefballError
from .forward import make_provider
from .geom import Dirichlet, Impedance, Inclusion, Obstacle, Scene, StarBoundary, validate_scene
from .io import write_csv, write_json
from .phaseless import PhaselessDataset, synth_dataset, synth_fields

BLOCKS = ("A", "B", "C")


@dataclass(frozen=True)
class ParamVector:
    """Star-shaped boundary ``center, a0..aM, b1..bM`` plus an optional
    impedance ``lam`` (obstacles) or refractive index ``contrast`` (media)."""

    center: tuple
    a: tuple
    b: tuple = ()
    lam: complex | None = None
    contrast: complex | None = None

    def __post_init__(self):
        a, b = tuple(map(float, self.a)), tuple(map(float, self.b))
        M = max(len(a) - 1, len(b))
        a, b = a + (0.0,) * (M + 1 - len(a)), b + (0.0,) * (M - len(b))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "center", tuple(map(float, self.center)))
        if self.lam is not None:
            object.__setattr__(self, "lam", complex(self.lam))
        if self.contrast is not None:
            object.__setattr__(self, "contrast", complex(self.contrast))

    @classmethod
    def disk(cls, center, radius, M: int = 0, lam=None, contrast=None) -> "ParamVector":
        return cls(center, (radius,) + (0.0,) * M, (0.0,) * M, lam, contrast)

    @classmethod
    def from_boundary(cls, b: StarBoundary, lam=None, contrast=None) -> "ParamVector":
        return cls(b.center, (b.a0,) + tuple(b.a), tuple(b.b), lam, contrast)

    @property
    def order(self) -> int:
        return len(self.a) - 1

    def with_order(self, M: int) -> "ParamVector":
        a = (self.a + (0.0,) * (M + 1))[:M + 1]
        b = (self.b + (0.0,) * M)[:M]
        return replace(self, a=a, b=b)

    def shifted(self, h) -> "ParamVector":
        return replace(self, center=(self.center[0] + h[0], self.center[1] + h[1]))

    def boundary(self) -> StarBoundary:
        return StarBoundary(self.center, self.a[0], self.a[1:], self.b)

    def coefficients(self) -> np.ndarray:
        """``[a0, a1, b1, a2, b2, ...]``."""
        out = [self.a[0]]
        for m in range(1, self.order + 1):
            out += [self.a[m], self.b[m - 1]]
        return np.array(out)

    def to_dict(self) -> dict:
        d = {"center": list(self.center), "a": list(self.a), "b": list(self.b)}
        if self.lam is not None:
            d["lambda"] = [self.lam.real, self.lam.imag]
        if self.contrast is not None:
            d["contrast"] = [self.contrast.real, self.contrast.imag]
        return d


def params_from_scene(scene: Scene) -> ParamVector:
    """Truth parameters of the single unknown component of ``scene``."""
    if len(scene.components) != 1:
        raise ObjectiveError("parametrized inversion supports exactly one unknown component")
    c = scene.components[0]
    if isinstance(c, Obstacle):
        lam = c.bc.lam if isinstance(c.bc, Impedance) else None
        return ParamVector.from_boundary(c.boundary, lam=lam)
    return ParamVector.from_boundary(c.boundary, contrast=c.index)


def scene_with(params: ParamVector, data_scene: Scene) -> Scene:
    b = params.boundary()
    if data_scene.kind == "medium":
        comp = Inclusion(b, params.contrast if params.contrast is not None else 1.0)
    else:
        comp = Obstacle(b, Dirichlet() if params.lam is None else Impedance(params.lam))
    return data_scene.with_components([comp])


def default_weights(data: PhaselessDataset) -> dict:
    I, J = data.shape
    w = 1.0 / np.sqrt(I * J) if I * J else 0.0
    return {"A": 1.0, "B": w, "C": w}


def predict(params: ParamVector, data: PhaselessDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Model moduli (A, B, C) for ``params`` with the dataset's known scene parts."""
    if data.scene is None:
        raise ObjectiveError("dataset carries no scene description")
    try:
        scene = scene_with(params, Scene.from_dict(data.scene))
        report = validate_scene(scene)
        if not report.ok:
            raise ObjectiveError("invalid parameter point: " + "; ".join(c.name for c in report.failures()))
        provider = make_provider(scene, data.forward)
        u, V = synth_fields(provider, scene.d0, data.directions, data.sources)
    except ObjectiveError:
        raise
    except (RefballError, np.linalg.LinAlgError, ValueError) as exc:
        raise ObjectiveError(f"forward model failed: {exc}") from exc
    return np.abs(u), np.abs(V), np.abs(u[:, None] + V)


def objective(params: ParamVector, data: PhaselessDataset, weights: dict | None = None,
              blocks=BLOCKS) -> tuple[float, np.ndarray]:
    """``J = 0.5 ||r||^2`` with ``r`` the weighted modulus misfits of the chosen blocks."""
    w = default_weights(data) if weights is None else weights
    A, B, C = predict(params, data)
    parts = {"A": w["A"] * (A - data.A), "B": w["B"] * (B - data.B).ravel(), "C": w["C"] * (C - data.C).ravel()}
    r = np.concatenate([parts[k] for k in BLOCKS if k in blocks])
    return 0.5 * float(r @ r), r


def block_split(params: ParamVector, data: PhaselessDataset, weights: dict | None = None) -> dict:
    return {k: objective(params, data, weights, (k,))[0] for k in BLOCKS}


# -- parameter layout -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class _Layout:
    """Which entries of a ParamVector are free, and how they map to a flat vector.

    With ``first_order=False`` the coefficients a1, b1 stay at their template
    values: to first order they describe a translation, which the center
    already parametrizes, and leaving both free makes the fit degenerate.
    """

    template: ParamVector
    shape: bool = True
    first_order: bool = False
    lam: bool = False
    contrast: bool = False
    fit_imag: bool = False

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1 if self.first_order else 2, self.template.order + 1)

    @property
    def n_shape(self) -> int:
        return 3 + 2 * len(self.orders) if self.shape else 0

    @property
    def lam_index(self) -> int:
        return self.n_shape

    def pack(self, p: ParamVector) -> np.ndarray:
        out = []
        if self.shape:
            m = self.orders
            out += list(p.center) + [p.a[0]] + [p.a[i] for i in m] + [p.b[i - 1] for i in m]
        if self.lam:
            out += [p.lam.real, p.lam.imag]
        if self.contrast:
            out += [p.contrast.real] + ([p.contrast.imag] if self.fit_imag else [])
        return np.array(out, dtype=float)

    def unpack(self, x: np.ndarray) -> ParamVector:
        p, i = self.template, self.n_shape
        if self.shape:
            m = self.orders
            a, b = list(p.a), list(p.b)
            a[0] = x[2]
            for j, order in enumerate(m):
                a[order] = x[3 + j]
                b[order - 1] = x[3 + len(m) + j]
            p = replace(p, center=tuple(x[0:2]), a=tuple(a), b=tuple(b))
        if self.lam:
            p = replace(p, lam=complex(x[i], x[i + 1]))
            i += 2
        if self.contrast:
            p = replace(p, contrast=complex(x[i], x[i + 1] if self.fit_imag else p.contrast.imag))
        return p

    def penalty_mask(self, M0: int) -> np.ndarray:
        """Free entries that are shape coefficients of order > M0."""
        mask = np.zeros(len(self.pack(self.template)), dtype=bool)
        if self.shape:
            m = self.orders
            mask[3:self.n_shape] = np.concatenate([m, m]) > M0
        return mask


@dataclass
class InversionOptions:
    M: int = 2
    M0: int = 2
    alpha: float = 1e-8
    max_iter: int = 60
    screen_iter: int = 6
    n_starts: int = 5
    start_spacing: float = 0.25
    seed: int = 0
    mu0: float = 1e-3
    gtol: float = 1e-15
    xtol: float = 1e-12
    ftol: float = 1e-28
    rel_step: float = 6e-6
    lam_max: float = 100.0
    fit_shape: bool = True
    fit_first_order: bool = False
    fit_imag: bool = False
    weights: dict | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


@dataclass
class InversionResult:
    params: ParamVector
    J: float
    history: list
    blocks: dict
    converged: bool
    reason: str
    wall_clock: float
    n_evals: int
    start: int = 0
    bc_residuals: dict = field(default_factory=dict)
    starts: list = field(default_factory=list)


class _Problem:
    def __init__(self, data, layout: _Layout, opts: InversionOptions):
        self.data, self.layout, self.opts = data, layout, opts
        self.weights = opts.weights or default_weights(data)
        self.pmask = layout.penalty_mask(opts.M0)
        self.n_evals = 0

    def project(self, x: np.ndarray) -> np.ndarray:
        x = x.copy()
        if self.layout.lam:
            i = self.layout.lam_index
            lam = complex(x[i], max(x[i + 1], 0.0))
            if abs(lam) > self.opts.lam_max:
                lam *= self.opts.lam_max / abs(lam)
            x[i], x[i + 1] = lam.real, lam.imag
        if self.layout.contrast and self.layout.fit_imag:
            x[-1] = max(x[-1], 0.0)
        return x

    def residual(self, x: np.ndarray) -> np.ndarray:
        self.n_evals += 1
        _, r = objective(self.layout.unpack(x), self.data, self.weights)
        pen = np.sqrt(self.opts.alpha) * x[self.pmask]
        return np.concatenate([r, pen])

    def jacobian(self, x: np.ndarray, r0: np.ndarray) -> np.ndarray:
        cols = []
        for i in range(len(x)):
            h = self.opts.rel_step * max(1.0, abs(x[i]))
            e = np.zeros_like(x)
            e[i] = h
            plus = minus = None
            try:
                plus = self.residual(x + e)
            except ObjectiveError:
                pass
            try:
                minus = self.residual(x - e)
            except ObjectiveError:
                pass
            if plus is not None and minus is not None:
                cols.append((plus - minus) / (2 * h))
            elif plus is not None:
                cols.append((plus - r0) / h)
            elif minus is not None:
                cols.append((r0 - minus) / h)
            else:
                cols.append(np.zeros_like(r0))
        return np.stack(cols, axis=1)


def _lm(problem: _Problem, x0: np.ndarray, max_iter: int, state: dict | None = None):
    """Levenberg-Marquardt with multiplicative damping; returns a state dict."""
    opts = problem.opts
    if state is None:
        x = problem.project(x0)
        r = problem.residual(x)
        state = {"x": x, "r": r, "J": 0.5 * float(r @ r), "mu": opts.mu0, "history": [], "iter": 0,
                 "converged": False, "reason": "iteration cap"}
        state["history"].append({"iter": 0, "J": state["J"], "mu": state["mu"], "step": 0.0, "accepted": True})
    x, r, J, mu = state["x"], state["r"], state["J"], state["mu"]
    for _ in range(max_iter):
        if J <= opts.ftol:
            state.update(converged=True, reason="objective at solver floor")
            break
        Jac = problem.jacobian(x, r)
        g = Jac.T @ r
        if np.abs(g).max() <= opts.gtol:
            state.update(converged=True, reason="gradient norm")
            break
        H = Jac.T @ Jac
        D = np.maximum(np.diag(H), 1e-12 * max(np.diag(H).max(), 1e-300))
        accepted = False
        while mu < 1e16:
            try:
                step = np.linalg.solve(H + mu * np.diag(D), -g)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            x_new = problem.project(x + step)
            try:
                r_new = problem.residual(x_new)
                J_new = 0.5 * float(r_new @ r_new)
            except ObjectiveError:
                J_new = np.inf
            if J_new < J:
                accepted = True
                break
            state["history"].append({"iter": state["iter"] + 1, "J": J_new, "mu": mu,
                                     "step": float(np.linalg.norm(x_new - x)), "accepted": False})
            mu *= 10
        state["iter"] += 1
        if not accepted:
            state.update(reason="damping limit reached", converged=J <= opts.ftol)
            break
        dx = float(np.linalg.norm(x_new - x))
        x, r, J, mu = x_new, r_new, J_new, max(mu / 3, 1e-12)
        state["history"].append({"iter": state["iter"], "J": J, "mu": mu, "step": dx, "accepted": True})
        state.update(x=x, r=r, J=J, mu=mu)
        if dx <= opts.xtol * (np.linalg.norm(x) + opts.xtol):
            state.update(converged=True, reason="step norm")
            break
    state.update(x=x, r=r, J=J, mu=mu)
    return state


def _starts(init: ParamVector, opts: InversionOptions) -> list:
    """``init`` followed by seeded picks from a coarse grid of center offsets."""
    s = opts.start_spacing
    grid = [(i * s, j * s) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
    rng = np.random.default_rng(opts.seed)
    picks = rng.permutation(len(grid))[:max(opts.n_starts - 1, 0)]
    return [init] + [init.shifted(grid[i]) for i in picks]


def reconstruct(data: PhaselessDataset, init: ParamVector, options: InversionOptions | None = None,
                **overrides) -> InversionResult:
    """Fit ``init`` (shape order ``options.M``) to the data from several starts.

    Every start runs ``screen_iter`` iterations; the best one is continued up
    to ``max_iter``.  The returned history belongs to that start.  For medium
    datasets only the contrast is fitted; the region stays at ``init`` because
    the rasterized forward model is piecewise constant in the geometry.
    """
    opts = replace(options or InversionOptions(), **overrides)
    t0 = time.perf_counter()
    medium = data.scene is not None and data.scene.get("kind") == "medium"
    init = init.with_order(opts.M)
    if medium and init.contrast is None:
        init = replace(init, contrast=2.0)
    layout = _Layout(init, shape=opts.fit_shape and not medium, first_order=opts.fit_first_order,
                     lam=init.lam is not None and not medium,
                     contrast=medium, fit_imag=opts.fit_imag)
    problem = _Problem(data, layout, opts)
    states = []
    for idx, p0 in enumerate(_starts(init, opts) if layout.shape else [init]):
        try:
            st = _lm(problem, layout.pack(p0), opts.screen_iter)
        except ObjectiveError:
            continue
        states.append((st["J"], idx, st))
    if not states:
        raise ObjectiveError("no admissible starting point")
    states.sort(key=lambda s: s[0])
    _, best_idx, best = states[0]
    remaining = opts.max_iter - best["iter"]
    if not best["converged"] and remaining > 0:
        best = _lm(problem, best["x"], remaining, best)
    params = layout.unpack(best["x"])
    return InversionResult(params, best["J"], best["history"], block_split(params, data, problem.weights),
                           bool(best["converged"]), best["reason"], time.perf_counter() - t0, problem.n_evals,
                           best_idx, starts=[{"start": i, "J": j} for j, i, _ in states])


@dataclass
class BCClassification:
    label: str
    lam: complex | None
    J_dirichlet: float
    J_impedance: float
    ratio: float
    results: dict


def classify_bc(data: PhaselessDataset, init: ParamVector, options: InversionOptions | None = None,
                threshold: float = 10.0, lam0: complex = 1.0, **overrides) -> BCClassification:
    """Fit under the Dirichlet and the impedance hypothesis and compare final objectives.

    The impedance fit has ``lam`` free (``lam = 0`` is the Neumann case).  A
    residual ratio below ``threshold`` yields the label ``"undetermined"``.
    """
    results = {}
    for name, lam in (("dirichlet", None), ("impedance", complex(lam0))):
        try:
            results[name] = reconstruct(data, replace(init, lam=lam), options, **overrides)
        except ObjectiveError:
            pass
    if not results:
        raise ClassificationError("neither boundary-condition hypothesis could be fitted")
    floor = 1e-300
    Jd = results["dirichlet"].J if "dirichlet" in results else np.inf
    Ji = results["impedance"].J if "impedance" in results else np.inf
    for r in results.values():
        r.bc_residuals = {"dirichlet": Jd, "impedance": Ji}
    if Ji < Jd:
        label, lam, ratio = "impedance", results["impedance"].params.lam, Jd / max(Ji, floor)
    else:
        label, lam, ratio = "dirichlet", None, Ji / max(Jd, floor)
    if ratio < threshold:
        label = "undetermined"
    return BCClassification(label, lam, Jd, Ji, ratio, results)


def ambiguity_scan(data: PhaselessDataset, truth: Scene, shifts, weights: dict | None = None) -> list:
    """Objective at translated copies of the truth.

    For every shift ``h`` returns ``(h, J_plane_only, J_triple)``: the first is
    the A-block objective against plane-wave phaseless data generated without
    the reference ball, the second the full objective against ``data``.
    Inadmissible shifts (overlaps) are reported as NaN.
    """
    p_true = params_from_scene(truth)
    no_ball = truth.with_ball(None)
    plane = synth_dataset(make_provider(no_ball, data.forward), no_ball, data.directions, np.zeros((0, 2)),
                          np.zeros(0, dtype=int), 0.0, 0, forward=data.forward, require_ball=False)
    rows = []
    for h in np.atleast_2d(np.asarray(shifts, dtype=float)):
        p = p_true.shifted(h)
        vals = []
        for ds, blocks in ((plane, ("A",)), (data, BLOCKS)):
            try:
                vals.append(objective(p, ds, weights if ds is data else None, blocks)[0])
            except ObjectiveError:
                vals.append(float("nan"))
        rows.append((tuple(map(float, h)), vals[0], vals[1]))
    return rows


def write_result(result: InversionResult, directory, extra: dict | None = None, n_polyline: int = 256) -> Path:
    """``report.json``, ``history.csv`` and ``boundary.csv`` (closed polyline)."""
    directory = Path(directory)
    p = result.params
    report = {
        "params": p.to_dict(),
        "J": result.J,
        "blocks": result.blocks,
        "converged": result.converged,
        "reason": result.reason,
        "n_evals": result.n_evals,
        "start": result.start,
        "starts": result.starts,
        "bc_residuals": result.bc_residuals,
        "iterations": sum(1 for h in result.history if h["accepted"]) - 1,
    }
    report.update(extra or {})
    write_json(directory / "report.json", report)
    write_csv(directory / "history.csv", ["iter", "J", "mu", "step", "accepted"],
              [(h["iter"], h["J"], h["mu"], h["step"], int(h["accepted"])) for h in result.history])
    t = 2 * np.pi * np.arange(n_polyline + 1) / n_polyline
    xy = p.boundary().points(t)
    write_csv(directory / "boundary.csv", ["t", "x", "y"], [(t[i], xy[i, 0], xy[i, 1]) for i in range(len(t))])
    return directory

