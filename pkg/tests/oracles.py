"""High-precision reference values computed with mpmath, independent of scipy.

These are used both live (for small cases) and to produce the frozen literals
in the tests.
"""
import mpmath as mp

mp.mp.dps = 30


def j_series(n, x, terms=80):
    """J_n(x) by its power series summed in extended precision."""
    x = mp.mpf(x)
    s = mp.mpf(0)
    for m in range(terms):
        s += (-1) ** m / (mp.factorial(m) * mp.factorial(m + n)) * (x / 2) ** (2 * m + n)
    return s


def hankel1(n, x):
    return mp.besselj(n, x) + 1j * mp.bessely(n, x)


def sph_j(n, x):
    return mp.sqrt(mp.pi / (2 * x)) * mp.besselj(n + mp.mpf(1) / 2, x)


def sph_h(n, x):
    return mp.sqrt(mp.pi / (2 * x)) * (mp.besselj(n + mp.mpf(1) / 2, x) + 1j * mp.bessely(n + mp.mpf(1) / 2, x))


def disk_dirichlet_far(a, k, theta, N=60):
    """Sound-soft disk at the origin, plane wave along +x."""
    s = 0
    for n in range(-N, N + 1):
        s += mp.besselj(n, k * a) / hankel1(n, k * a) * mp.expj(n * theta)
    return -mp.sqrt(2 / (mp.pi * k)) * mp.expj(-mp.pi / 4) * s


def disk_penetrable_far(a, k, index, theta, N=60):
    """Disk of refractive index ``index`` at the origin, plane wave along +x."""
    k1 = k * mp.sqrt(index)
    s = 0
    for n in range(-N, N + 1):
        J, Jd = mp.besselj(n, k * a), mp.besselj(n, k * a, 1)
        H = hankel1(n, k * a)
        Hd = mp.besselj(n, k * a, 1) + 1j * mp.bessely(n, k * a, 1)
        J1, J1d = mp.besselj(n, k1 * a), mp.besselj(n, k1 * a, 1)
        # a_n i^{-n}: (k1 J1' J - k J J1'... ) from continuity of u and du/dr
        an = -(k1 * J1d * J - k * Jd * J1) / (k1 * J1d * H - k * Hd * J1)
        s += an * mp.expj(n * theta)
    return mp.sqrt(2 / (mp.pi * k)) * mp.expj(-mp.pi / 4) * s


def sphere_far(a, k, cos_gamma, N=60):
    """Sound-soft sphere at the origin; ``cos_gamma`` = xhat . d."""
    s = 0
    for n in range(N + 1):
        s += (2 * n + 1) * sph_j(n, k * a) / sph_h(n, k * a) * mp.legendre(n, cos_gamma)
    return 1j / k * s
