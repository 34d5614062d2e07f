import math

import mpmath
import pytest

from dskg.bessel_oracle import bessel_basis, generic_pair, integer_pair, mode_wronskian_matrix
from dskg.errors import OracleUnavailable

mpmath.mp.dps = 40


def _g(nu, z):
    return mpmath.gamma(nu + 1) * mpmath.besselj(nu, z)


def _ref_generic(z, nu2):
    nu = mpmath.sqrt(mpmath.mpf(nu2))
    c = (_g(nu, z) + _g(-nu, z)) / 2
    s = (_g(nu, z) - _g(-nu, z)) / (2 * nu)
    dc = z * mpmath.diff(lambda x: (_g(nu, x) + _g(-nu, x)) / 2, z)
    ds = z * mpmath.diff(lambda x: (_g(nu, x) - _g(-nu, x)) / (2 * nu), z)
    return [complex(v).real for v in (c, dc, s, ds)]


@pytest.mark.parametrize("nu2", [0.3, 2.2, -0.75, -4.0])
@pytest.mark.parametrize("z", [0.05, 1.0, 4.0, 7.0])
def test_generic_pair_matches_mpmath(z, nu2):
    got = generic_pair(z, nu2)
    ref = _ref_generic(z, nu2)
    scale = max(abs(x) for x in ref)
    for a, b in zip(got, ref):
        assert abs(a - b) <= 1e-11 * scale


@pytest.mark.parametrize("z", [0.1, 2.0, 6.0])
def test_order_zero_log_solution(z):
    # S at nu = 0 equals d/dnu [Gamma(nu+1) J_nu] = (pi/2) Y_0 - gamma J_0
    c, _, s, _ = generic_pair(z, 0.0)
    assert c == pytest.approx(float(mpmath.besselj(0, z)), rel=1e-12, abs=1e-14)
    ref = float(mpmath.pi / 2 * mpmath.bessely(0, z) - mpmath.euler * mpmath.besselj(0, z))
    assert s == pytest.approx(ref, rel=1e-11, abs=1e-13)


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("z", [0.2, 1.5, 5.0])
def test_integer_pair_matches_mpmath(m, z):
    j, zj, y, zy = integer_pair(z, m)
    j_ref = mpmath.besselj(m, z)
    y_ref = mpmath.pi * mpmath.bessely(m, z) - 2 * mpmath.euler * j_ref
    zy_ref = z * mpmath.diff(lambda x: mpmath.pi * mpmath.bessely(m, x) - 2 * mpmath.euler * mpmath.besselj(m, x), z)
    assert j == pytest.approx(float(j_ref), rel=1e-12)
    assert zj == pytest.approx(float(z * mpmath.besselj(m, z, derivative=1)), rel=1e-11)
    assert y == pytest.approx(float(y_ref), rel=1e-11)
    assert zy == pytest.approx(float(zy_ref), rel=1e-10)


def test_domain_and_near_integer_errors():
    with pytest.raises(OracleUnavailable):
        bessel_basis(0.0, 0.5)
    with pytest.raises(OracleUnavailable):
        bessel_basis(31.0, 0.5)
    with pytest.raises(OracleUnavailable):
        bessel_basis(1.0, 1.0 + 5e-5)


def test_wronskian_solves_mode_ode():
    # residual of u'' + n u' + (lam + mu^2 e^{-2t}) u = 0 by central differences
    n, lam, mu = 3, 1.0, 5.0
    h = 1e-4
    for t in (1.0, 2.5):
        (u, _), (du, _) = mode_wronskian_matrix(t, mu, n, lam)
        up = mode_wronskian_matrix(t + h, mu, n, lam)[0][0]
        um = mode_wronskian_matrix(t - h, mu, n, lam)[0][0]
        d2 = (up - 2 * u + um) / h**2
        res = d2 + n * du + (lam + mu * mu * math.exp(-2 * t)) * u
        assert abs(res) < 1e-5 * max(abs(u), abs(du), abs(d2))
