"""Pure NumPy Dormand-Prince 5(4) integrator for batches of mode ODEs.

Every mode ``i`` solves ``u'' + damp(t) u' + rest_i(t) u = 0`` with

    damp(t)   = c0 + c1 d(t)
    rest_i(t) = k0 + k1 d(t) + e^{-2t} mu2_i / c(t)^2

for the two basis initial conditions ``(1, 0)`` and ``(0, 1)``, restarted at
every output time.  The modes advance in lock step but each carries its own
step size, so the accepted step sequence of a mode does not depend on the
other members of the batch.  The compiled kernel in ``_core.pyx`` runs the
identical algorithm one mode at a time.
"""

import numpy as np

from .errors import StepSizeUnderflow

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40

SAFE = 0.9
FACMIN = 0.2
FACMAX = 10.0
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75
MAX_STEPS = 10_000_000


def _rhs(t, y, mu2, n, a, c0, c1, k0, k1):
    x = a * np.exp(-t)
    c = 1.0 + x
    d = -n * x / c
    damp = c0 + c1 * d
    rest = k0 + k1 * d + np.exp(-2.0 * t) * mu2 / (c * c)
    f = np.empty_like(y)
    f[:, 0] = y[:, 1]
    f[:, 1] = -damp * y[:, 1] - rest * y[:, 0]
    f[:, 2] = y[:, 3]
    f[:, 3] = -damp * y[:, 3] - rest * y[:, 2]
    return f


def initial_step(t, mu2, n, a, c0, c1, k0, k1, rtol):
    x = a * np.exp(-t)
    c = 1.0 + x
    d = -n * x / c
    rest = k0 + k1 * d + np.exp(-2.0 * t) * mu2 / (c * c)
    freq = np.sqrt(np.abs(rest)) + np.abs(c0 + c1 * d) + 1.0
    return 0.5 * rtol**0.2 / freq


def propagate_steps(mu2, times, n, a, c0, c1, k0, k1, rtol, atol):
    """Step matrices ``M(times[j+1], times[j])`` for every mode.

    Returns an array of shape ``(len(mu2), len(times) - 1, 4)`` holding
    ``(M11, M12, M21, M22)``.
    """
    mu2 = np.ascontiguousarray(mu2, dtype=float)
    times = np.ascontiguousarray(times, dtype=float)
    m = mu2.size
    nint = times.size - 1
    out = np.empty((m, max(nint, 0), 4))
    if m == 0 or nint <= 0:
        return out
    n = float(n)

    t = np.full(m, times[0])
    h = initial_step(t, mu2, n, a, c0, c1, k0, k1, rtol)
    y = np.tile(np.array([1.0, 0.0, 0.0, 1.0]), (m, 1))
    errold = np.full(m, 1e-4)
    reject = np.zeros(m, dtype=bool)
    seg = np.zeros(m, dtype=np.int64)
    nsteps = np.zeros(m, dtype=np.int64)
    active = np.ones(m, dtype=bool)
    args = (n, a, c0, c1, k0, k1)

    while active.any():
        idx = np.nonzero(active)[0]
        ti, hi, yi, mi = t[idx], h[idx], y[idx], mu2[idx]
        tend = times[seg[idx] + 1]
        last = ti + 1.01 * hi >= tend
        hi = np.where(last, tend - ti, hi)
        small = hi <= 1e-14 * np.maximum(1.0, np.abs(ti))
        if small.any() or (nsteps[idx] > MAX_STEPS).any():
            raise StepSizeUnderflow(
                f"step size underflow near t = {ti[small | (nsteps[idx] > MAX_STEPS)][0]:.6g}"
            )
        hc = hi[:, None]
        k1_ = _rhs(ti, yi, mi, *args)
        k2_ = _rhs(ti + C2 * hi, yi + hc * (A21 * k1_), mi, *args)
        k3_ = _rhs(ti + C3 * hi, yi + hc * (A31 * k1_ + A32 * k2_), mi, *args)
        k4_ = _rhs(ti + C4 * hi, yi + hc * (A41 * k1_ + A42 * k2_ + A43 * k3_), mi, *args)
        k5_ = _rhs(ti + C5 * hi, yi + hc * (A51 * k1_ + A52 * k2_ + A53 * k3_ + A54 * k4_), mi, *args)
        k6_ = _rhs(ti + hi, yi + hc * (A61 * k1_ + A62 * k2_ + A63 * k3_ + A64 * k4_ + A65 * k5_), mi, *args)
        ynew = yi + hc * (A71 * k1_ + A73 * k3_ + A74 * k4_ + A75 * k5_ + A76 * k6_)
        k7_ = _rhs(ti + hi, ynew, mi, *args)
        errv = hc * (E1 * k1_ + E3 * k3_ + E4 * k4_ + E5 * k5_ + E6 * k6_ + E7 * k7_)
        sk = atol + rtol * np.maximum(np.abs(yi), np.abs(ynew))
        err = np.sqrt(np.mean((errv / sk) ** 2, axis=1))
        nsteps[idx] += 1

        fac11 = err**EXPO1
        fac = fac11 / errold[idx] ** BETA
        fac = np.clip(fac / SAFE, 1.0 / FACMAX, 1.0 / FACMIN)
        ok = err <= 1.0
        hnew_ok = hi / fac
        hnew_ok = np.where(reject[idx], np.minimum(hnew_ok, hi), hnew_ok)
        hnew_bad = hi / np.minimum(1.0 / FACMIN, fac11 / SAFE)

        acc = idx[ok]
        if acc.size:
            errold[acc] = np.maximum(err[ok], 1e-4)
            reject[acc] = False
            h[acc] = hnew_ok[ok]
            t[acc] = ti[ok] + hi[ok]
            y[acc] = ynew[ok]
            fin = acc[last[ok]]
            if fin.size:
                t[fin] = times[seg[fin] + 1]
                out[fin, seg[fin]] = y[fin][:, [0, 2, 1, 3]]
                y[fin] = (1.0, 0.0, 0.0, 1.0)
                seg[fin] += 1
                done = fin[seg[fin] >= nint]
                active[done] = False
        rej = idx[~ok]
        if rej.size:
            reject[rej] = True
            h[rej] = hnew_bad[~ok]
    return out
