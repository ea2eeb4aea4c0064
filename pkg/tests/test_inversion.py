import json
from dataclasses import replace

import numpy as np
import pytest

from refball.errors import ObjectiveError
from refball.geom import StarBoundary
from refball.inversion import (InversionOptions, ParamVector, _Layout, _Problem, _starts, ambiguity_scan,
                               block_split, default_weights, objective, params_from_scene, reconstruct,
                               write_result)

from conftest import make_dataset


def test_param_vector_basics():
    p = ParamVector.disk((0.1, 0.2), 0.7, M=2, lam=1 + 0.5j)
    assert p.order == 2 and p.a == (0.7, 0.0, 0.0) and p.b == (0.0, 0.0)
    b = p.boundary()
    assert b.center == (0.1, 0.2) and b.a0 == 0.7 and b.area() == pytest.approx(np.pi * 0.49)
    q = ParamVector.from_boundary(StarBoundary((0, 0), 0.65, (0.0, 0.15), (0.0, 0.1)))
    np.testing.assert_allclose(q.coefficients(), [0.65, 0.0, 0.0, 0.15, 0.1])
    assert q.with_order(4).order == 4 and q.with_order(1).coefficients().tolist() == [0.65, 0.0, 0.0]
    assert p.shifted((1, -1)).center == (1.1, -0.8)
    assert p.to_dict()["lambda"] == [1.0, 0.5]


@pytest.mark.parametrize("first_order", [False, True])
def test_layout_round_trip(first_order):
    p = ParamVector((0.1, -0.2), (0.6, 0.01, 0.1, 0.02), (0.03, 0.05, -0.01), lam=0.5 + 0.2j)
    lay = _Layout(p, first_order=first_order, lam=True)
    x = lay.pack(p)
    assert len(x) == 3 + 2 * (3 if first_order else 2) + 2
    assert lay.unpack(x) == p
    mask = lay.penalty_mask(2)
    assert mask.sum() == 2


def test_projection():
    p = ParamVector.disk((0, 0), 1.0, lam=1.0)
    prob = _Problem(None, _Layout(p, lam=True), InversionOptions(lam_max=10.0, weights={"A": 1, "B": 1, "C": 1}))
    i = prob.layout.lam_index
    x = prob.layout.pack(p)
    x[i], x[i + 1] = 3.0, -2.0
    assert prob.project(x)[i + 1] == 0.0
    x[i], x[i + 1] = 30.0, 40.0
    y = prob.project(x)
    assert np.hypot(y[i], y[i + 1]) == pytest.approx(10.0)


def test_weights(disk_data):
    w = default_weights(disk_data)
    assert w["A"] == 1.0 and w["B"] == w["C"] == pytest.approx(1 / np.sqrt(32 * 12))


def test_objective_at_truth(disk_data, disk_scene):
    J, r = objective(params_from_scene(disk_scene), disk_data)
    assert J <= 1e-16
    assert len(r) == 32 + 2 * 32 * 12


def test_objective_shifted_truth(disk_data, disk_scene):
    J, _ = objective(params_from_scene(disk_scene).shifted((0.5, 0.0)), disk_data)
    assert J > 1e-4
    parts = block_split(params_from_scene(disk_scene).shifted((0.5, 0.0)), disk_data)
    # the plane-wave block sees the ball, so it is not translation invariant either
    assert parts["B"] > 1e-6 and parts["C"] > 1e-6


def test_plane_only_invariance(disk_scene):
    rows = ambiguity_scan(make_dataset(disk_scene, n_dirs=16, per_edge=1), disk_scene,
                          [(0.0, 0.0), (0.5, 0.0), (0.0, 0.3)])
    _, jp0, jt0 = rows[0]
    assert jp0 <= 1e-16 and jt0 <= 1e-16
    for _, jp, jt in rows[1:]:
        assert jp <= 1e-12
        assert jt >= 1e3 * max(jp, 1e-30)


def test_inadmissible_parameters(disk_data, disk_scene):
    p = params_from_scene(disk_scene)
    with pytest.raises(ObjectiveError):
        objective(replace(p, center=(-1.6, -1.2)), disk_data)  # overlaps the ball
    rows = ambiguity_scan(disk_data, disk_scene, [(-1.9, -1.0)])
    assert np.isnan(rows[0][1]) or np.isnan(rows[0][2])


def test_jacobian_matches_directional_derivative(disk_data, disk_scene):
    p = params_from_scene(disk_scene).with_order(2).shifted((0.05, -0.03))
    lay = _Layout(p)
    prob = _Problem(disk_data, lay, InversionOptions())
    x = lay.pack(p)
    r0 = prob.residual(x)
    Jac = prob.jacobian(x, r0)
    v = np.random.default_rng(0).standard_normal(len(x))
    v /= np.linalg.norm(v)
    t = 1e-4
    fd = (prob.residual(x + t * v) - prob.residual(x - t * v)) / (2 * t)
    assert np.linalg.norm(Jac @ v - fd) < 1e-5 * np.linalg.norm(fd)


def test_lm_monotone_and_seeded(disk_data):
    init = ParamVector.disk((0.0, 0.0), 1.0)
    opts = InversionOptions(max_iter=4, screen_iter=2, n_starts=2)
    res = reconstruct(disk_data, init, opts)
    Js = [h["J"] for h in res.history if h["accepted"]]
    assert all(b < a for a, b in zip(Js, Js[1:]))
    assert res.J == Js[-1]
    again = reconstruct(disk_data, init, opts)
    assert again.params == res.params and again.J == res.J
    assert [s.center for s in _starts(init, opts)] == [s.center for s in _starts(init, opts)]


def test_write_result(tmp_path, disk_data):
    res = reconstruct(disk_data, ParamVector.disk((0.0, 0.0), 1.0), InversionOptions(max_iter=2, screen_iter=1,
                                                                                      n_starts=1))
    write_result(res, tmp_path, {"note": 1})
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["J"] == res.J and rep["note"] == 1 and "wall_clock" not in rep
    rows = (tmp_path / "boundary.csv").read_text().splitlines()
    assert rows[0] == "t,x,y" and len(rows) == 258
    first, last = np.array(rows[1].split(","), float), np.array(rows[-1].split(","), float)
    np.testing.assert_allclose(first[1:], last[1:], atol=1e-12)  # closed polyline
    assert (tmp_path / "history.csv").read_text().startswith("iter,J,mu,step,accepted\n")


@pytest.mark.slow
def test_disk_reconstruction(disk_data, disk_scene):
    res = reconstruct(disk_data, ParamVector.disk((0.0, 0.0), 1.0), M=2)
    truth = params_from_scene(disk_scene)
    assert np.hypot(*np.subtract(res.params.center, truth.center)) < 1e-3
    assert abs(res.params.a[0] - 0.7) < 1e-3
    assert res.J < 1e-12


def test_medium_contrast(medium_scene):
    data = make_dataset(medium_scene, n_dirs=16, per_edge=2)
    init = ParamVector.disk((0.6, 0.2), 0.4, contrast=1.0)
    res = reconstruct(data, init)
    assert abs(res.params.contrast - 1.5) < 1e-2
    assert res.params.center == (0.6, 0.2)
