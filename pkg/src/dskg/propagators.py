"""Full-field linear solution operators assembled from per-mode matrices.

Homogeneous traces are lazy: they keep the Cauchy data and the cumulative
mode matrices (one per distinct ``|xi_phys|^2``) and build slices on demand,
so long time grids on ``64^3`` tori stay cheap.  Inhomogeneous traces come
from Duhamel's formula with a cubic-exact quadrature on the trace grid and
are stored in full.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import EmptyTrace, GridTooCoarse, ShapeMismatch
from .fields_norms import CauchyData, SpectralField, mode_index
from .geometry import ModelParams, damping_coefficient, mu2_multiplier
from .spectral_modes import DEFAULT_TOL, ModeTable, mode_table

__all__ = [
    "SolutionTrace",
    "KernelSnapshot",
    "solve_homogeneous",
    "solve_inhomogeneous",
    "propagator_kernel",
    "kernel_sup_series",
    "kernel_series",
    "KernelSeries",
    "residual_check",
    "KERNEL_KINDS",
]

KERNEL_KINDS = ("dtUv", "sqrtLapUv")


def _check_grid(t_grid) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise EmptyTrace("time grid is empty")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t_grid


class SolutionTrace:
    """Cauchy data ``(u, du/dt)`` sampled on a time grid.

    Backed by coefficient arrays of shape ``(len(times),) + grid``.
    """

    def __init__(self, times, params: ModelParams, u_hat: np.ndarray, du_hat: np.ndarray):
        self.times = _check_grid(times)
        self.params = params
        if u_hat.shape != du_hat.shape or u_hat.shape[0] != self.times.size:
            raise ShapeMismatch("trace arrays disagree with the time grid")
        self._u = u_hat
        self._du = du_hat

    @property
    def lam(self) -> float:
        return self.params.lam

    def __len__(self) -> int:
        return self.times.size

    def u_coeffs(self, i: int) -> np.ndarray:
        return self._u[i]

    def du_coeffs(self, i: int) -> np.ndarray:
        return self._du[i]

    def slice(self, i: int) -> CauchyData:
        t = float(self.times[i])
        return CauchyData(SpectralField(self.u_coeffs(i), t, self.params),
                          SpectralField(self.du_coeffs(i), t, self.params))

    @property
    def slices(self) -> list[CauchyData]:
        return [self.slice(i) for i in range(len(self))]

    def u_fields(self) -> Iterator[SpectralField]:
        for i in range(len(self)):
            yield SpectralField(self.u_coeffs(i), float(self.times[i]), self.params)

    def du_fields(self) -> Iterator[SpectralField]:
        for i in range(len(self)):
            yield SpectralField(self.du_coeffs(i), float(self.times[i]), self.params)

    def materialize(self) -> "SolutionTrace":
        return self

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.materialize()
        return m._u, m._du

    def _combine(self, other: "SolutionTrace", alpha, beta) -> "SolutionTrace":
        if not np.array_equal(self.times, other.times):
            raise ShapeMismatch("traces live on different time grids")
        u1, d1 = self.arrays()
        u2, d2 = other.arrays()
        return SolutionTrace(self.times, self.params, alpha * u1 + beta * u2, alpha * d1 + beta * d2)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, scalar):
        u, d = self.arrays()
        return SolutionTrace(self.times, self.params, scalar * u, scalar * d)

    __rmul__ = __mul__


class HomogeneousTrace(SolutionTrace):
    """Lazy trace ``U(t, t0) (phi, psi)`` built from a mode table."""

    def __init__(self, data: CauchyData, table: ModeTable):
        self.times = table.times
        self.params = data.params
        self.data = data
        self.table = table
        self._inverse = mode_index(data.params).inverse
        self._cum = table.cumulative()

    def _row(self, i: int, row: int) -> np.ndarray:
        a = self._cum[:, i, row, 0][self._inverse]
        b = self._cum[:, i, row, 1][self._inverse]
        return a * self.data.phi.coeffs + b * self.data.psi.coeffs

    def u_coeffs(self, i: int) -> np.ndarray:
        return self._row(i, 0)

    def du_coeffs(self, i: int) -> np.ndarray:
        return self._row(i, 1)

    def materialize(self) -> SolutionTrace:
        u = np.stack([self.u_coeffs(i) for i in range(len(self))])
        du = np.stack([self.du_coeffs(i) for i in range(len(self))])
        return SolutionTrace(self.times, self.params, u, du)


def solve_homogeneous(d: CauchyData, t_grid, params: ModelParams | None = None,
                      tol: float = DEFAULT_TOL) -> SolutionTrace:
    """Solve ``P(lam) u = 0`` with data ``d`` at ``t_grid[0]``.

    ``params`` (mass, perturbation, grid) defaults to the data's own.
    """
    t_grid = _check_grid(t_grid)
    params = d.params if params is None else params
    if d.t != t_grid[0]:
        raise ValueError(f"data time {d.t} differs from t_grid[0] = {t_grid[0]}")
    if d.phi.coeffs.shape != (params.N,) * params.n:
        raise ShapeMismatch("data grid does not match params")
    d = CauchyData(SpectralField(d.phi.coeffs, d.t, params), SpectralField(d.psi.coeffs, d.t, params))
    table = mode_table(mode_index(params).mu2, t_grid, params, tol)
    return HomogeneousTrace(d, table)


def _forcing_array(f, t_grid: np.ndarray, params: ModelParams) -> np.ndarray:
    shape = (params.N,) * params.n
    if callable(f):
        f = [f(float(t)) for t in t_grid]
    if isinstance(f, np.ndarray):
        arr = np.asarray(f, dtype=complex)
    else:
        f = list(f)
        if not f:
            raise EmptyTrace("forcing has no samples")
        arr = np.stack([np.asarray(x.coeffs if isinstance(x, SpectralField) else x, dtype=complex)
                        for x in f])
    if arr.shape != (t_grid.size,) + shape:
        raise ShapeMismatch(f"forcing must have shape {(t_grid.size,) + shape}, got {arr.shape}")
    return arr


def _uniform_step(t_grid: np.ndarray) -> float:
    h = np.diff(t_grid)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("this operation needs a uniform time grid")
    return float(h[0])


# weights for int over one interval from four equispaced nodes (cubic exact);
# the row index is the position of the interval among the three it spans
_CUBIC_WEIGHTS = (
    np.array([9.0, 19.0, -5.0, 1.0]) / 24.0,
    np.array([-1.0, 13.0, 13.0, -1.0]) / 24.0,
    np.array([1.0, -5.0, 19.0, 9.0]) / 24.0,
)
_QUADRATIC_WEIGHTS = (np.array([5.0, 8.0, -1.0]) / 12.0, np.array([-1.0, 8.0, 5.0]) / 12.0)


def solve_inhomogeneous(f, t_grid, params: ModelParams, tol: float = DEFAULT_TOL) -> SolutionTrace:
    """Duhamel solution of ``P(lam) u = f`` with zero data at ``t_grid[0]``.

    ``f`` is an array of spectral coefficients with leading time axis, a
    sequence of SpectralFields, or a callable ``t -> SpectralField``.  The
    solution advances interval by interval,

        U_{i+1} = M(t_{i+1}, t_i) U_i + int_{t_i}^{t_{i+1}} M(t_{i+1}, tau) (0, f(tau)) dtau,

    with the integral taken from the cubic interpolant through four
    neighbouring samples (the same degree of exactness as Simpson's rule).
    Using one rule per interval keeps the quadrature error smooth in time.
    """
    t_grid = _check_grid(t_grid)
    k = t_grid.size
    fa = _forcing_array(f, t_grid, params)
    u = np.zeros_like(fa)
    du = np.zeros_like(fa)
    if k == 1:
        return SolutionTrace(t_grid, params, u, du)
    h = _uniform_step(t_grid)
    idx = mode_index(params)
    table = mode_table(idx.mu2, t_grid, params, tol)
    st = table.steps
    det = st[:, :, 0, 0] * st[:, :, 1, 1] - st[:, :, 0, 1] * st[:, :, 1, 0]
    inv_st = np.empty_like(st)
    inv_st[:, :, 0, 0] = st[:, :, 1, 1] / det
    inv_st[:, :, 0, 1] = -st[:, :, 0, 1] / det
    inv_st[:, :, 1, 0] = -st[:, :, 1, 0] / det
    inv_st[:, :, 1, 1] = st[:, :, 0, 0] / det
    inv = idx.inverse

    def apply(mats, j, x, y):
        m = mats[:, j][inv]
        return m[..., 0, 0] * x + m[..., 0, 1] * y, m[..., 1, 0] * x + m[..., 1, 1] * y

    def transported(j, target):
        # M(t_target, t_j) (0, f_j)
        x, y = 0.0, fa[j]
        for step in range(j, target):
            x, y = apply(st, step, x, y)
        for step in range(j - 1, target - 1, -1):
            x, y = apply(inv_st, step, x, y)
        return x, y

    if k == 2:
        nodes, weights = [(0, 2)], [np.array([0.5, 0.5])]
    elif k == 3:
        nodes, weights = [(0, 3), (0, 3)], list(_QUADRATIC_WEIGHTS)
    else:
        nodes, weights = [], []
        for i in range(k - 1):
            lo = min(max(i - 1, 0), k - 4)
            nodes.append((lo, lo + 4))
            weights.append(_CUBIC_WEIGHTS[i - lo])

    for i in range(k - 1):
        x, y = apply(st, i, u[i], du[i])
        lo, hi = nodes[i]
        for w, j in zip(weights[i], range(lo, hi)):
            gx, gy = transported(j, i + 1)
            x = x + h * w * gx
            y = y + h * w * gy
        u[i + 1], du[i + 1] = x, y
    return SolutionTrace(t_grid, params, u, du)


@dataclass(frozen=True)
class KernelSnapshot:
    t: float
    s: float
    values: np.ndarray
    r: float
    which: str

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _kernel_multiplier(cum_row: np.ndarray, which: str, mu2: np.ndarray, t: float, params: ModelParams):
    """Per-unique-mode multiplier of the chosen operator at time ``t``."""
    if which == "dtUv":
        return cum_row[:, 1, 1]
    if which == "sqrtLapUv":
        return np.sqrt(mu2_multiplier(mu2, t, params)) * cum_row[:, 0, 1]
    raise ValueError(f"which must be one of {KERNEL_KINDS}, got {which!r}")


def _kernel_values(mult_grid: np.ndarray, y0, params: ModelParams) -> np.ndarray:
    coeffs = mult_grid.astype(complex) / params.torus_period**params.n
    if any(y0):
        axes = mode_index(params).int_modes
        phase = sum(ax * j for ax, j in zip(axes, y0)) * (2.0 * np.pi / params.N)
        coeffs = coeffs * np.exp(-1j * phase)
    return (np.fft.ifftn(coeffs) * coeffs.size).real


@dataclass(frozen=True)
class KernelSeries:
    """Kernel sup-norms along a ladder of times ``t`` for a fixed source time ``s``.

    ``antipodal`` is ``|K|`` at the point opposite the source and
    ``zero_mode`` the constant (``xi = 0``) part of the kernel.
    """

    s: float
    times: np.ndarray
    sup: np.ndarray
    antipodal: np.ndarray
    zero_mode: np.ndarray


def kernel_series(s: float, ts, r: float, which: str, params: ModelParams,
                  tol: float = DEFAULT_TOL) -> KernelSeries:
    """Regularized kernel sup-norms for every ``t`` in the increasing array ``ts``."""
    if which not in KERNEL_KINDS:
        raise ValueError(f"which must be one of {KERNEL_KINDS}, got {which!r}")
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < s) or np.any(np.diff(ts) <= 0):
        raise ValueError("kernel times must be increasing with t >= s")
    idx = mode_index(params)
    later = ts[ts > s]
    cum = mode_table(idx.mu2, np.concatenate([[s], later]), params, tol).cumulative() if later.size else None
    eye = np.broadcast_to(np.eye(2), (idx.mu2.size, 2, 2))
    half = (params.N // 2,) * params.n
    sup, anti, zero = (np.empty(ts.size) for _ in range(3))
    j = 0
    for i, t in enumerate(ts):
        if t > s:
            j += 1
            row = cum[:, j]
        else:
            row = eye
        mult = _kernel_multiplier(row, which, idx.mu2, t, params)
        mult = mult * (1.0 + mu2_multiplier(idx.mu2, t, params)) ** (-r)
        vals = _kernel_values(mult[idx.inverse], (), params)
        sup[i] = np.max(np.abs(vals))
        anti[i] = abs(vals[half])
        zero[i] = abs(mult[0]) / params.torus_period**params.n
    return KernelSeries(s, ts, sup, anti, zero)


def kernel_sup_series(s: float, ts, r: float, which: str, params: ModelParams,
                      tol: float = DEFAULT_TOL) -> np.ndarray:
    """``sup_y |K(t, y; s, 0)|`` for each ``t`` in ``ts``."""
    return kernel_series(s, ts, r, which, params, tol).sup


def propagator_kernel(t: float, s: float, r: float, which: str = "dtUv", y0=None,
                      params: ModelParams | None = None, tol: float = DEFAULT_TOL) -> KernelSnapshot:
    """Regularized kernel column ``y -> (1 + Delta_{k_t})^{-r} A(t, s) delta_{y0}``.

    ``A`` is ``d/dt U_v`` (``which="dtUv"``) or ``Delta^{1/2} U_v``
    (``which="sqrtLapUv"``); ``y0`` is a grid index tuple.  The delta has
    coefficients ``1 / L^n`` so its integral against ``dy`` is one.
    """
    if params is None:
        raise ValueError("params is required")
    if which not in KERNEL_KINDS:
        raise ValueError(f"which must be one of {KERNEL_KINDS}, got {which!r}")
    if t < s:
        raise ValueError("kernel needs t >= s")
    y0 = tuple(y0) if y0 is not None else (0,) * params.n
    idx = mode_index(params)
    if t == s:
        row = np.broadcast_to(np.eye(2), (idx.mu2.size, 2, 2))
    else:
        row = mode_table(idx.mu2, [s, t], params, tol).steps[:, 0]
    mult = _kernel_multiplier(row, which, idx.mu2, t, params)
    mult = mult * (1.0 + mu2_multiplier(idx.mu2, t, params)) ** (-r)
    return KernelSnapshot(t, s, _kernel_values(mult[idx.inverse], y0, params), r, which)


def residual_check(trace: SolutionTrace, f=None, params: ModelParams | None = None) -> float:
    """Relative residual of ``P(lam) u = f`` on the interior of a uniform trace.

    ``d^2u/dt^2`` comes from the 5-point fourth-order stencil on stored
    ``u``; the stored ``du/dt`` supplies the first-order term, so the check
    also catches inconsistent ``(u, du/dt)`` pairs.  The result is the
    ``l^2`` norm of the residual over interior slices and all modes divided
    by the ``l^2`` norm of the individual terms.
    """
    params = trace.params if params is None else params
    times = trace.times
    k = times.size
    if k < 5:
        raise GridTooCoarse("residual_check needs at least 5 time samples")
    h = _uniform_step(times)
    fa = None if f is None else _forcing_array(f, times, params)
    grid_mu2 = mode_index(params).grid_mu2
    res2 = 0.0
    scale2 = 0.0
    window = [trace.u_coeffs(i) for i in range(4)]
    for i in range(2, k - 2):
        window.append(trace.u_coeffs(i + 2))
        um2, um1, u0, up1, up2 = window[-5:]
        d2u = (-um2 + 16.0 * um1 - 30.0 * u0 + 16.0 * up1 - up2) / (12.0 * h * h)
        t = times[i]
        damp = (params.n + damping_coefficient(t, params)) * trace.du_coeffs(i)
        mass = (params.lam + mu2_multiplier(grid_mu2, t, params)) * u0
        rhs = 0.0 if fa is None else fa[i]
        r = d2u + damp + mass - rhs
        res2 += float(np.sum(np.abs(r) ** 2))
        scale2 += float(np.sum(np.abs(d2u) ** 2 + np.abs(damp) ** 2 + np.abs(mass) ** 2))
        if fa is not None:
            scale2 += float(np.sum(np.abs(fa[i]) ** 2))
        window.pop(0)
    if scale2 == 0.0:
        return 0.0 if res2 == 0.0 else float("inf")
    return float(np.sqrt(res2 / scale2))
