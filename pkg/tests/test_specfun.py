import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refball.errors import DomainError, RangeError
from refball.specfun import (BesselKind, cyl_bessel, hankel1, hankel1_d, besselj, besselj_d, legendre,
                             legendre_table, sph_bessel, sph_h1, sph_jn)

import oracles

# frozen from oracles.py at 30 digits
J0_1 = 0.765197686557966551449717526103
H0_1 = 0.765197686557966551449717526103 + 0.0882569642156769579829267660235j
FROZEN_CYL = [  # (n, x, J_n, Y_n)
    (5, 2.5, 0.0195016251345032198864719839259, -3.8301760007407518629589058145),
    (20, 30.0, 0.00483101999340406453856235521861, -0.168481539487426766943011879033),
    (60, 100.0, 0.00106315630422770308131637902435, -0.0891946941503777783072178781923),
    (0, 0.1, 0.997501562066040032004077942484, -1.53423865135036680826801785702),
]
FROZEN_SPH = [  # (n, x, j_n, Im h_n)
    (5, 2.5, 0.007357638737768936288406727228, -5.59910015480632427684234524916),
    (20, 30.0, -0.0147115933534290890102871189344, -0.0360780336066138947855733360199),
    (60, 100.0, -0.00487646910677040927936605045527, -0.0100894735157865730346834073958),
    (0, 0.1, 0.998334166468281522883289784434, -9.95004165278025710307548504382),
]


def test_oracle_values_match_frozen():
    assert float(oracles.j_series(0, 1)) == pytest.approx(J0_1, rel=1e-15)
    assert complex(oracles.hankel1(0, 1)) == pytest.approx(H0_1, rel=1e-15)


def test_j0_at_origin():
    assert cyl_bessel(BesselKind.FIRST, 0, 0.0) == 1.0


def test_j0_at_one():
    assert cyl_bessel(BesselKind.FIRST, 0, 1.0) == pytest.approx(J0_1, rel=1e-14)


def test_h0_at_one():
    assert cyl_bessel(BesselKind.HANKEL1, 0, 1.0) == pytest.approx(H0_1, rel=1e-14)


@pytest.mark.parametrize("n,x,J,Y", FROZEN_CYL)
def test_cyl_frozen(n, x, J, Y):
    assert cyl_bessel(BesselKind.FIRST, n, x) == pytest.approx(J, rel=1e-12)
    assert cyl_bessel(BesselKind.SECOND, n, x) == pytest.approx(Y, rel=1e-12)
    assert cyl_bessel(BesselKind.HANKEL1, n, x) == pytest.approx(J + 1j * Y, rel=1e-12)


@pytest.mark.parametrize("n,x,j,yh", FROZEN_SPH)
def test_sph_frozen(n, x, j, yh):
    assert sph_bessel(BesselKind.FIRST, n, x) == pytest.approx(j, rel=1e-12)
    assert sph_bessel(BesselKind.SECOND, n, x) == pytest.approx(yh, rel=1e-12)


def test_sph_examples():
    assert abs(sph_bessel(BesselKind.FIRST, 0, np.pi)) < 1e-16
    assert sph_bessel(BesselKind.HANKEL1, 0, 1.0) == pytest.approx(0.841470984807897 - 0.540302305868140j, abs=1e-15)
    assert sph_bessel(BesselKind.FIRST, 1, 0.0) == 0.0


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 40), x=st.floats(0.5, 80.0))
def test_cyl_against_mpmath(n, x):
    ref = complex(oracles.hankel1(n, x))
    assert complex(cyl_bessel(BesselKind.HANKEL1, n, x)) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 40), x=st.floats(0.5, 80.0))
def test_wronskian(n, x):
    # J_n Y_n' - J_n' Y_n = 2 / (pi x)
    J, Jd = besselj(n, x), besselj_d(n, x)
    Y, Yd = hankel1(n, x).imag, hankel1_d(n, x).imag
    assert J * Yd - Jd * Y == pytest.approx(2 / (np.pi * x), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), x=st.floats(0.5, 80.0))
def test_recurrence(n, x):
    H = hankel1(np.array([n - 1, n, n + 1]), x)
    assert H[0] + H[2] == pytest.approx(2 * n / x * H[1], rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(0, 30), x=st.floats(0.5, 60.0))
def test_spherical_wronskian(n, x):
    # j_n y_n' - j_n' y_n = 1 / x^2
    h, hd = sph_h1(n, x), sph_h1(n, x, derivative=True)
    j, jd = sph_jn(n, x), sph_jn(n, x, derivative=True)
    assert j * hd.imag - jd * h.imag == pytest.approx(1 / x ** 2, rel=1e-9)


@pytest.mark.parametrize("n,t,val", [(0, 0.3, 1.0), (1, -0.4, -0.4), (2, 0.5, -0.125)])
def test_legendre_examples(n, t, val):
    assert legendre(n, t) == pytest.approx(val, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(-1.0, 1.0))
def test_legendre_table_matches_mpmath(t):
    P = legendre_table(12, t)
    for n in (0, 3, 7, 12):
        assert P[n] == pytest.approx(float(mp.legendre(n, t)), abs=1e-13)


@pytest.mark.parametrize("kind", [BesselKind.SECOND, BesselKind.HANKEL1])
@pytest.mark.parametrize("x", [0.0, -1.0])
def test_nonpositive_argument(kind, x):
    with pytest.raises(DomainError):
        cyl_bessel(kind, 0, x)
    with pytest.raises(DomainError):
        sph_bessel(kind, 0, x)


def test_negative_order_rejected():
    with pytest.raises(DomainError):
        cyl_bessel(BesselKind.FIRST, -1, 1.0)


@pytest.mark.parametrize("n,x", [(61, 1.0), (0, 101.0)])
def test_out_of_envelope(n, x):
    with pytest.raises(RangeError):
        cyl_bessel(BesselKind.FIRST, n, x)


def test_legendre_domain():
    with pytest.raises(DomainError):
        legendre(2, 1.5)
