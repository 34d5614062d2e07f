# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) kernel for batches of mode ODEs.

Same algorithm and step control as ``dskg._dopri``; one mode at a time,
without the GIL so callers may split the batch across threads.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs, pow, fmax, fmin

cnp.import_array()

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFE = 0.9, FACMIN = 0.2, FACMAX = 10.0, BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75
cdef long MAX_STEPS = 10000000


cdef struct Coef:
    double n, a, c0, c1, k0, k1, mu2


cdef inline void rhs(double t, double* y, double* f, Coef* p) noexcept nogil:
    cdef double x = p.a * exp(-t)
    cdef double c = 1.0 + x
    cdef double d = -p.n * x / c
    cdef double damp = p.c0 + p.c1 * d
    cdef double rest = p.k0 + p.k1 * d + exp(-2.0 * t) * p.mu2 / (c * c)
    f[0] = y[1]
    f[1] = -damp * y[1] - rest * y[0]
    f[2] = y[3]
    f[3] = -damp * y[3] - rest * y[2]


cdef double initial_step(double t, Coef* p, double rtol) noexcept nogil:
    cdef double x = p.a * exp(-t)
    cdef double c = 1.0 + x
    cdef double d = -p.n * x / c
    cdef double rest = p.k0 + p.k1 * d + exp(-2.0 * t) * p.mu2 / (c * c)
    cdef double freq = sqrt(fabs(rest)) + fabs(p.c0 + p.c1 * d) + 1.0
    return 0.5 * pow(rtol, 0.2) / freq


cdef int integrate_mode(Coef* p, double* times, Py_ssize_t nint, double rtol,
                        double atol, double* out) noexcept nogil:
    """Write ``nint`` step matrices to ``out``; nonzero return on underflow."""
    cdef double y[4]
    cdef double yt[4]
    cdef double yn[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double k5[4]
    cdef double k6[4]
    cdef double k7[4]
    cdef double t = times[0], h, tend, err, e, sk, fac, fac11, hnew
    cdef double errold = 1e-4
    cdef bint reject = 0, last
    cdef long nsteps = 0
    cdef Py_ssize_t seg = 0, i

    h = initial_step(t, p, rtol)
    y[0] = 1.0; y[1] = 0.0; y[2] = 0.0; y[3] = 1.0
    while seg < nint:
        tend = times[seg + 1]
        last = t + 1.01 * h >= tend
        if last:
            h = tend - t
        if h <= 1e-14 * fmax(1.0, fabs(t)) or nsteps > MAX_STEPS:
            return 1
        rhs(t, y, k1, p)
        for i in range(4):
            yt[i] = y[i] + h * (A21 * k1[i])
        rhs(t + C2 * h, yt, k2, p)
        for i in range(4):
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        rhs(t + C3 * h, yt, k3, p)
        for i in range(4):
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(t + C4 * h, yt, k4, p)
        for i in range(4):
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(t + C5 * h, yt, k5, p)
        for i in range(4):
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        rhs(t + h, yt, k6, p)
        for i in range(4):
            yn[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
        rhs(t + h, yn, k7, p)
        err = 0.0
        for i in range(4):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sk = atol + rtol * fmax(fabs(y[i]), fabs(yn[i]))
            err += (e / sk) * (e / sk)
        err = sqrt(err / 4.0)
        nsteps += 1

        fac11 = pow(err, EXPO1)
        fac = fac11 / pow(errold, BETA)
        fac = fmin(fmax(fac / SAFE, 1.0 / FACMAX), 1.0 / FACMIN)
        if err <= 1.0:
            errold = fmax(err, 1e-4)
            hnew = h / fac
            if reject:
                hnew = fmin(hnew, h)
            reject = 0
            if last:
                t = tend
                out[4 * seg + 0] = yn[0]
                out[4 * seg + 1] = yn[2]
                out[4 * seg + 2] = yn[1]
                out[4 * seg + 3] = yn[3]
                y[0] = 1.0; y[1] = 0.0; y[2] = 0.0; y[3] = 1.0
                seg += 1
            else:
                t = t + h
                for i in range(4):
                    y[i] = yn[i]
            h = hnew
        else:
            reject = 1
            h = h / fmin(1.0 / FACMIN, fac11 / SAFE)
    return 0


def propagate_steps(mu2, times, double n, double a, double c0, double c1,
                    double k0, double k1, double rtol, double atol):
    """Compiled counterpart of ``dskg._dopri.propagate_steps``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mu = np.ascontiguousarray(mu2, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ts = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t m = mu.shape[0], nint = ts.shape[0] - 1, j
    if nint < 0:
        nint = 0
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((m, nint, 4))
    if m == 0 or nint == 0:
        return out
    cdef Coef p
    cdef int status = 0
    cdef double* tp = &ts[0]
    cdef double* op = &out[0, 0, 0]
    cdef double* mp = &mu[0]
    p.n = n; p.a = a; p.c0 = c0; p.c1 = c1; p.k0 = k0; p.k1 = k1
    with nogil:
        for j in range(m):
            p.mu2 = mp[j]
            status = integrate_mode(&p, tp, nint, rtol, atol, op + 4 * nint * j)
            if status:
                break
    if status:
        from .errors import StepSizeUnderflow
        raise StepSizeUnderflow(f"step size underflow for mode mu2 = {mu[j]:.6g}")
    return out
