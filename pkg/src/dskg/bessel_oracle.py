"""Power-series solutions of Bessel's equation for the unperturbed mode ODE.

With ``a = 0`` the mode equation ``u'' + n u' + (lam + mu^2 e^{-2t}) u = 0``
becomes Bessel's equation of order ``nu``, ``nu^2 = n^2/4 - lam``, after
``u = e^{-nt/2} v`` and ``z = mu e^{-t}``.  Two real solutions are summed
from their series about ``z = 0``:

* generic ``nu^2`` (positive, zero or negative): the even combinations

      C = (g_nu + g_{-nu}) / 2,    S = (g_nu - g_{-nu}) / (2 nu),

  with ``g_nu = Gamma(nu + 1) J_nu``.  Both are even in ``nu`` so their
  series coefficients are real polynomials in ``nu^2``; ``cosh(nu L)`` and
  ``sinh(nu L) / nu`` (``L = log(z/2)``) become ``cos``/``sin`` for
  imaginary order.  At ``nu = 0`` S is the logarithmic solution.
* positive integer ``nu = m``: ``J_m`` and a logarithmic second solution
  (``pi/2 Y_m`` up to a multiple of ``J_m``).

Everything is plain ``math`` on Python floats; no code is shared with the
adaptive integrator.
"""

from __future__ import annotations

import math

from .errors import OracleUnavailable

Z_MAX = 30.0
SERIES_TOL = 1e-17
INTEGER_TOL = 1e-10
NEAR_INTEGER_TOL = 1e-4
K_MAX = 600


def _even_odd_funcs(nu2: float, L: float):
    """``cosh(nu L)`` and ``sinh(nu L) / nu`` as real functions of ``nu^2``."""
    if nu2 > 0:
        nu = math.sqrt(nu2)
        return math.cosh(nu * L), math.sinh(nu * L) / nu
    if nu2 < 0:
        kappa = math.sqrt(-nu2)
        return math.cos(kappa * L), math.sin(kappa * L) / kappa
    return 1.0, L


def _integer_order(nu2: float):
    if nu2 <= 0:
        return None
    m = round(math.sqrt(nu2))
    if m >= 1 and abs(nu2 - m * m) <= INTEGER_TOL * max(1, m * m):
        return m
    for k in range(1, int(math.sqrt(nu2)) + 2):
        if abs(nu2 - k * k) < NEAR_INTEGER_TOL:
            raise OracleUnavailable(
                f"nu^2 = {nu2!r} is within {NEAR_INTEGER_TOL} of the integer order {k}; "
                "the series basis is ill-conditioned there"
            )
    return None


def _check_converged(k, q, terms, peaks):
    """Stop once the geometric tail bound is negligible against each series' scale.

    ``peaks`` holds the largest term magnitude seen per series, which is the
    scale that cancellation leaves behind in floating point.
    """
    for i, tm in enumerate(terms):
        peaks[i] = max(peaks[i], abs(tm))
    if k >= K_MAX:
        raise OracleUnavailable("Bessel series did not converge within K_MAX terms")
    if q >= 0.5:
        return False
    # term ratios are below q < 1/2 from here on; the bracket factors grow
    # at most like log k, absorbed by the factor 4
    tail = 4.0 * q / (1.0 - q)
    return all(abs(tm) * tail <= SERIES_TOL * max(pk, 1e-300) for tm, pk in zip(terms, peaks))


def generic_pair(z: float, nu2: float):
    """Values and ``z d/dz`` derivatives of the even-combination solutions.

    Returns ``(C, zC', S, zS')``.
    """
    half = 0.5 * z
    w = half * half
    L = math.log(half)
    ch, sh = _even_odd_funcs(nu2, L)
    g = 1.0
    e_hat, o_hat = 1.0, 0.0
    c_val = ch
    c_der = nu2 * sh
    s_val = sh
    s_der = ch
    peaks = [abs(c_val), abs(c_der), abs(s_val), abs(s_der)]
    k = 0
    while True:
        k += 1
        denom = k * k - nu2
        g = -g * w / denom
        e_hat, o_hat = e_hat - nu2 * o_hat / k, o_hat - e_hat / k
        tc = g * (ch * e_hat + nu2 * sh * o_hat)
        ts = g * (ch * o_hat + sh * e_hat)
        tcd = g * (2 * k * (ch * e_hat + nu2 * sh * o_hat) + nu2 * sh * e_hat + nu2 * ch * o_hat)
        tsd = g * (2 * k * (ch * o_hat + sh * e_hat) + nu2 * sh * o_hat + ch * e_hat)
        c_val += tc
        c_der += tcd
        s_val += ts
        s_der += tsd
        q = w / abs((k + 1) ** 2 - nu2)
        if _check_converged(k, q, (tc, tcd, ts, tsd), peaks):
            return c_val, c_der, s_val, s_der


def integer_pair(z: float, m: int):
    """``J_m`` and a logarithmic companion with ``z d/dz`` derivatives.

    The companion is

        Y~_m = 2 J_m log(z/2) - sum_{k<m} (m-k-1)!/k! (z/2)^{2k-m}
               - sum_k (H_k + H_{k+m}) (-1)^k (z/2)^{2k+m} / (k! (k+m)!)

    which equals ``pi Y_m - 2 gamma J_m``.
    """
    half = 0.5 * z
    w = half * half
    L = math.log(half)
    base = half**m / math.factorial(m)
    term = base
    j_val = term
    j_der = m * term
    h_k, h_km = 0.0, sum(1.0 / i for i in range(1, m + 1))
    r_val = -(h_k + h_km) * term
    r_der = -(h_k + h_km) * m * term
    peaks = [abs(j_val), abs(j_der), abs(r_val), abs(r_der)]
    k = 0
    while True:
        k += 1
        term = -term * w / (k * (k + m))
        h_k += 1.0 / k
        h_km += 1.0 / (k + m)
        p = 2 * k + m
        j_val += term
        j_der += p * term
        rt = -(h_k + h_km) * term
        r_val += rt
        r_der += p * rt
        q = w / ((k + 1) * (k + 1 + m))
        if _check_converged(k, q, (term, p * term, rt, p * rt), peaks):
            break
    fin_val = 0.0
    fin_der = 0.0
    for k in range(m):
        c = math.factorial(m - k - 1) / math.factorial(k) * half ** (2 * k - m)
        fin_val -= c
        fin_der -= (2 * k - m) * c
    y_val = 2.0 * j_val * L + fin_val + r_val
    y_der = 2.0 * j_der * L + 2.0 * j_val + fin_der + r_der
    return j_val, j_der, y_val, y_der


def bessel_basis(z: float, nu2: float):
    """Two independent solutions of Bessel's equation of order ``sqrt(nu2)``.

    Returns ``(v1, z v1', v2, z v2')``.
    """
    if not (0 < z <= Z_MAX):
        raise OracleUnavailable(f"series oracle restricted to 0 < z <= {Z_MAX}, got z = {z!r}")
    m = _integer_order(nu2)
    if m is not None:
        return integer_pair(z, m)
    return generic_pair(z, nu2)


def mode_wronskian_matrix(t: float, mu: float, n: int, lam: float):
    """Fundamental matrix ``[[u1, u2], [u1', u2']]`` of the unperturbed mode ODE at ``t``."""
    nu2 = n * n / 4.0 - lam
    z = mu * math.exp(-t)
    v1, zv1, v2, zv2 = bessel_basis(z, nu2)
    damp = math.exp(-n * t / 2.0)
    # u = e^{-nt/2} v(z), dz/dt = -z
    return (
        (damp * v1, damp * v2),
        (damp * (-0.5 * n * v1 - zv1), damp * (-0.5 * n * v2 - zv2)),
    )
