"""Acceptance criteria 1-11.

Every criterion records its sub-checks; the pytest terminal summary prints one
PASS/FAIL line per criterion.  Run alone with ``pytest tests/test_acceptance.py``.
"""
from dataclasses import replace

import numpy as np
import pytest

from refball.bie import BIEScattering, assemble_bodies, solve
from refball.cli import run
from refball.fields import PlaneWave
from refball.geom import Dirichlet, Impedance, Neumann, Obstacle, StarBoundary, unit_directions
from refball.inversion import ParamVector, ambiguity_scan, classify_bc, params_from_scene, reconstruct
from refball.medium import MediumSolution, rasterize, solve_ls
from refball.phaseless import extract_cosine, extract_real_cross
from refball.retrieval import conjugate_gap, gauge_gap
from refball.series import DiskSeries, SphereSeries, solve_disk, solve_penetrable_disk
from refball.verify import (KITE, check_ball_gauge_integral, check_mixed_reciprocity, check_reciprocity,
                            check_translation_invariance, cross_validate)

from conftest import ACCEPTANCE, corpus_scene, make_dataset


def record(n, part, ok, detail):
    ACCEPTANCE.setdefault(n, []).append((part, bool(ok), detail))
    print(f"criterion {n} [{part}] {'PASS' if ok else 'FAIL'}: {detail}")
    return bool(ok)


def unit_disk_start():
    return ParamVector.disk((0.0, 0.0), 1.0)


# 1 ------------------------------------------------------------------------------------------------------

def test_criterion_01_translation_invariance():
    dirs = unit_directions(64, 0.1)
    providers = {"disk series": (lambda b: DiskSeries(b.a0, b.center, 1.0), StarBoundary.circle((0.2, -0.1), 1.0)),
                 "kite BIE": (lambda b: BIEScattering([b], [Dirichlet()], 1.0, 96), KITE)}
    ok = True
    for name, (prov, body) in providers.items():
        for h in ((1.0, 0.0), (0.5, 0.25)):
            rep = check_translation_invariance(prov, body, h, (1.0, 0.0), dirs, 1.0, tol=1e-7)
            m, p = rep.detail["modulus_error"], rep.detail["phase_error"]
            ok &= record(1, f"{name} h={h}", m < 1e-7 and p < 1e-7, f"mod {m:.1e} phase {p:.1e}")
    assert ok


# 2 ------------------------------------------------------------------------------------------------------

def test_criterion_02_mixed_reciprocity_3d():
    dirs = np.array([[np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)]
                     for a, b in zip(np.linspace(0.3, 2.8, 8), np.linspace(0, 5, 8))])
    src = 3.0 * np.roll(dirs, 3, axis=0)
    rep = check_mixed_reciprocity(3, SphereSeries(1.0, (0, 0, 0), 1.0), src, dirs, 1e-9)
    assert record(2, "sphere a=1 k=1 8x8", rep.max_abs < 1e-9, f"max |4 pi v - u^s| = {rep.max_abs:.1e}")


# 3 ------------------------------------------------------------------------------------------------------

def test_criterion_03_mixed_reciprocity_2d():
    k = 2.0
    src, dirs = 3.0 * unit_directions(8, 0.2), unit_directions(8, 0.05)
    disk = check_mixed_reciprocity(2, DiskSeries(1.0, (0.0, 0.0), k), src, dirs, 1e-8)
    c2 = complex(*disk.constants["c2"])
    kite = check_mixed_reciprocity(2, BIEScattering([KITE], [Dirichlet()], k, 128), src, dirs, 1e-6, reference=c2)
    ok = record(3, "disk fit", disk.detail["fit_residual"] < 1e-8,
                f"c2 = {c2:.10f}, residual {disk.detail['fit_residual']:.1e}")
    ok &= record(3, "kite transfer", kite.detail["transfer"] < 1e-6, f"{kite.detail['transfer']:.1e}")
    assert ok


# 4 ------------------------------------------------------------------------------------------------------

def test_criterion_04_reciprocity():
    dirs = unit_directions(16)
    s = check_reciprocity(DiskSeries(1.0, (0.2, -0.1), 2.0), dirs, 1e-12)
    b = check_reciprocity(BIEScattering([KITE], [Impedance(1 + 0.5j)], 2.0, 96), dirs, 1e-8)
    ok = record(4, "series", s.max_abs < 1e-12, f"{s.max_abs:.1e}")
    ok &= record(4, "BIE kite", b.max_abs < 1e-8, f"{b.max_abs:.1e}")
    assert ok


# 5 ------------------------------------------------------------------------------------------------------

def test_criterion_05_cross_validation():
    dirs = unit_directions(32)
    inc = PlaneWave((1.0, 0.0))
    ok = True
    for ka in (1.0, 5.0):
        for label, bc in (("D", Dirichlet()), ("N", Neumann), ("imp", Impedance(1 + 0.5j))):
            ref = solve_disk(1.0, (0.0, 0.0), bc, inc, ka)
            cand = solve(assemble_bodies([StarBoundary.circle((0, 0), 1.0)], [bc], ka, 64), inc)
            rep = cross_validate(ref, cand, dirs, 1e-6)
            ok &= record(5, f"{label} ka={ka:g}", rep.max_rel < 1e-6, f"{rep.max_rel:.1e}")
    ref = solve_penetrable_disk(0.5, (0.0, 0.0), 4.0, inc, 1.0)
    grid = rasterize([(StarBoundary.circle((0.0, 0.0), 0.5), 4.0)], 1.0, 128, supersample=4)
    rep = cross_validate(ref, MediumSolution(grid, solve_ls(grid, inc), inc), dirs, 1e-3)
    ok &= record(5, "LS 128^2", rep.max_rel < 1e-3, f"{rep.max_rel:.1e}")
    assert ok


# 6 ------------------------------------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["disk_obstacle", "kite_obstacle", "medium_disk"])
def test_criterion_06_cross_term_identity(name):
    ds, u, V = make_dataset(corpus_scene(name), n_dirs=16, per_edge=3, return_fields=True)
    oracle = (u[:, None] * np.conj(V)).real
    re_err = np.abs(extract_real_cross(ds).re - oracle).max() / np.abs(oracle).max()
    c = extract_cosine(ds)
    cos_err = np.abs(c.cos[c.mask] - np.cos(np.angle(u)[:, None] - np.angle(V))[c.mask]).max()
    ok = record(6, name, re_err < 1e-12 and cos_err < 1e-10, f"re {re_err:.1e} cos {cos_err:.1e}")
    assert ok


# 7 ------------------------------------------------------------------------------------------------------

def test_criterion_07_ball_gauge_integral():
    ok, worst, cases = True, 0.0, 0
    for dim in (2, 3):
        d = (1.0,) + (0.0,) * (dim - 1)
        for k in (0.5, 1.0, 2.0):
            for n0 in (0.5, 1.5, 2.0, 3.0):
                bound = np.pi / (2 * k * (n0 + 1))
                for frac in (0.1, 0.5, 0.9, 0.999):
                    rep = check_ball_gauge_integral(k, n0, frac * bound, d, dim)
                    worst = max(worst, rep.max_rel)
                    ok &= rep.passed and rep.constants["closed_form"] > 0
                    cases += 1
    record(7, "positivity in regime", ok, f"{cases} cases, worst agreement {worst:.1e}")
    for dim in (2, 3):
        rep = check_ball_gauge_integral(1.0, 2.0, 0.5 * np.pi, (1.0,) + (0.0,) * (dim - 1), dim)
        neg = rep.constants["closed_form"] < 0 and rep.max_rel < 1e-10
        ok &= record(7, f"{dim}D kappa R = 3 pi/2", neg, f"value {rep.constants['closed_form']:.3e}")
    assert ok


# 8 ------------------------------------------------------------------------------------------------------

def test_criterion_08_ambiguity():
    scene = corpus_scene("kite_obstacle")
    data = make_dataset(scene)
    shifts = [(0.1, 0.0), (0.0, 0.25), (0.5, 0.0), (-0.3, 0.2), (0.25, -0.25)]
    ok = True
    for h, jp, jt in ambiguity_scan(data, scene, shifts):
        ok &= record(8, f"h=({h[0]:g},{h[1]:g})", jp <= 1e-12 and jt >= 1e3 * jp,
                     f"J_plane {jp:.1e} J_triple {jt:.1e}")
    assert ok


# 9 ------------------------------------------------------------------------------------------------------

def _center_radius_error(res, truth):
    dc = np.hypot(*np.subtract(res.params.center, truth.center))
    return dc, abs(res.params.a[0] - truth.a[0])


@pytest.mark.slow
def test_criterion_09a_disk_noiseless(disk_scene, disk_data):
    res = reconstruct(disk_data, unit_disk_start(), M=2)
    dc, dr = _center_radius_error(res, params_from_scene(disk_scene))
    assert record(9, "disk delta=0", dc < 1e-3 and dr < 1e-3, f"center {dc:.1e} radius {dr:.1e}")


@pytest.mark.slow
def test_criterion_09b_disk_noisy(disk_scene):
    data = make_dataset(disk_scene, delta=0.01, seed=7)
    res = reconstruct(data, unit_disk_start(), M=2)
    dc, dr = _center_radius_error(res, params_from_scene(disk_scene))
    assert record(9, "disk delta=0.01", dc < 5e-2 and dr < 5e-2, f"center {dc:.1e} radius {dr:.1e}")


@pytest.mark.slow
def test_criterion_09c_kite(kite_scene, kite_data):
    res = reconstruct(kite_data, unit_disk_start(), M=6)
    truth = params_from_scene(kite_scene).with_order(6)
    err = np.abs(res.params.coefficients() - truth.coefficients()).max()
    dc = np.hypot(*np.subtract(res.params.center, truth.center))
    assert record(9, "kite M=6", err < 1e-2, f"coefficients {err:.1e} center {dc:.1e} ({res.wall_clock:.0f} s)")


@pytest.mark.slow
@pytest.mark.parametrize("label,bc,expect", [("Dirichlet", Dirichlet(), "dirichlet"),
                                             ("Neumann", Neumann, "impedance"),
                                             ("impedance 1+0.5i", Impedance(1 + 0.5j), "impedance")])
def test_criterion_09d_classify(disk_scene, label, bc, expect):
    comp = disk_scene.components[0]
    scene = disk_scene.with_components([Obstacle(comp.boundary, bc)])
    data = make_dataset(scene)
    c = classify_bc(data, unit_disk_start(), M=2)
    ok = c.label == expect and c.ratio >= 1e2
    detail = f"label {c.label}, ratio {c.ratio:.1e}"
    if expect == "impedance":
        err = abs(c.lam - bc.lam)
        ok &= err < 5e-2
        detail += f", |lam - lam_true| {err:.1e}"
    assert record(9, f"BC {label}", ok, detail)


@pytest.mark.slow
def test_criterion_09e_medium_contrast(medium_scene):
    data = make_dataset(medium_scene, n_dirs=16, per_edge=2)
    res = reconstruct(data, ParamVector.disk((0.6, 0.2), 0.4, contrast=1.0))
    err = abs(res.params.contrast - medium_scene.components[0].index)
    assert record(9, "medium contrast", err < 1e-2, f"|n - n_true| {err:.1e}")


# 10 -----------------------------------------------------------------------------------------------------

def test_criterion_10_conjugate_branch():
    F = DiskSeries(1.0, (0.2, 0.1), 1.0).far_field(PlaneWave((1.0, 0.0)), unit_directions(32))
    cg = conjugate_gap(F, F)
    gg = max(gauge_gap(F, np.exp(1j * eta) * F)[0] for eta in np.linspace(-3, 3, 13))
    ok = record(10, "conjugate gap", cg > 1e-2, f"{cg:.3e}")
    ok &= record(10, "gauge gap", gg < 1e-12, f"{gg:.1e}")
    assert ok


# 11 -----------------------------------------------------------------------------------------------------

def _read_all(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_criterion_11_determinism(tmp_path):
    ok = True
    for cmd, args in (("synth", ["--config", "kite_obstacle", "--seed", "7", "--delta", "0.01"]),
                      ("synth", ["--config", "medium_disk", "--seed", "3", "--delta", "0.02"]),
                      ("verify", ["--suite", "all"])):
        outs = []
        for i in range(2):
            out = tmp_path / f"{cmd}{args[1]}{i}"
            code = run([cmd, *args, "--out", str(out)])
            outs.append((code, _read_all(out)))
        same = outs[0] == outs[1] and outs[0][0] == 0
        ok &= record(11, f"{cmd} {args[1]}", same, f"{len(outs[0][1])} files byte-identical" if same else "differ")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
