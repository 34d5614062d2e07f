"""Per-mode solution operators of the Klein-Gordon equation.

Restricted to a torus Fourier mode with ``|xi_phys|^2 = mu2`` the equation
``(box_g + lam) u = 0`` reads

    u'' + (n + d(t)) u' + (lam + e^{-2t} c(t)^{-2} mu2) u = 0.

A :class:`PropagatorMatrix` maps ``(u, u')`` at time ``s`` to time ``t``.
Its first column is the "even" solution (data ``(1, 0)``), its second the
"odd" one (data ``(0, 1)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bessel_oracle import mode_wronskian_matrix
from .errors import OracleUnavailable
from .geometry import AlphaChoice, ModelParams, damping_coefficient, mu2_multiplier

__all__ = [
    "ModeState",
    "PropagatorMatrix",
    "ModeTable",
    "mode_ode_coefficients",
    "mode_propagator",
    "mode_oracle",
    "mode_table",
    "conjugation_check",
    "abel_determinant",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10
# longest span integrated without a basis reset; solutions decay like
# e^{-n t / 2}, so a mixed abs/rel error test stays relative only over O(1) spans
MAX_SPAN = 1.0


@dataclass(frozen=True)
class ModeState:
    u: float
    du: float
    t: float


@dataclass(frozen=True)
class PropagatorMatrix:
    m11: float
    m12: float
    m21: float
    m22: float
    s: float
    t: float
    mu2: float

    @classmethod
    def identity(cls, s, mu2):
        return cls(1.0, 0.0, 0.0, 1.0, s, s, mu2)

    @classmethod
    def from_array(cls, arr, s, t, mu2):
        arr = np.asarray(arr, dtype=float)
        return cls(arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1], s, t, mu2)

    def as_array(self):
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def __matmul__(self, other: "PropagatorMatrix") -> "PropagatorMatrix":
        # M(t, r) @ M(r, s) = M(t, s)
        return PropagatorMatrix.from_array(self.as_array() @ other.as_array(), other.s, self.t, self.mu2)

    def apply(self, state: ModeState) -> ModeState:
        return ModeState(
            self.m11 * state.u + self.m12 * state.du,
            self.m21 * state.u + self.m22 * state.du,
            self.t,
        )


def mode_ode_coefficients(t, mu2, params: ModelParams):
    """``(damping, restoring) = (n + d(t), lam + e^{-2t} c^{-2} mu2)``."""
    if np.any(np.asarray(mu2) < 0):
        raise ValueError("mu2 must be nonnegative")
    damping = params.n + damping_coefficient(t, params)
    restoring = params.lam + mu2_multiplier(mu2, t, params)
    return damping, restoring


def _operator_coefficients(params: ModelParams, alpha: float = 0.0):
    """``(c0, c1, k0, k1)`` of the kernel ODE for ``e^{alpha t} u``.

    Substituting ``u = e^{-alpha t} v`` gives damping ``n - 2 alpha + d`` and
    potential ``lam - n alpha + alpha^2 - alpha d + lambda_xi``.
    """
    n, lam = params.n, params.lam
    return n - 2.0 * alpha, 1.0, lam - n * alpha + alpha * alpha, -alpha


@dataclass
class ModeTable:
    """Step matrices of many modes on a shared time grid.

    ``steps[i, j]`` is ``M(times[j+1], times[j])`` for mode ``mu2[i]`` as a
    2x2 array.
    """

    mu2: np.ndarray
    times: np.ndarray
    steps: np.ndarray
    params: ModelParams
    _cumulative: np.ndarray | None = None

    def cumulative(self) -> np.ndarray:
        """``M(times[j], times[0])`` for all modes, shape ``(m, k, 2, 2)``."""
        if self._cumulative is None:
            m, k = self.mu2.size, self.times.size
            cum = np.empty((m, k, 2, 2))
            cum[:, 0] = np.eye(2)
            for j in range(k - 1):
                cum[:, j + 1] = self.steps[:, j] @ cum[:, j]
            self._cumulative = cum
        return self._cumulative

    def matrix(self, i: int, j: int) -> PropagatorMatrix:
        return PropagatorMatrix.from_array(
            self.cumulative()[i, j], self.times[0], self.times[j], self.mu2[i]
        )


def mode_table(mu2, times, params: ModelParams, tol: float = DEFAULT_TOL, alpha: float = 0.0,
               backend: str | None = None) -> ModeTable:
    """Integrate every mode in ``mu2`` across the increasing grid ``times``."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("times must be a nonempty 1-d array")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if times[0] < params.t0 - 1:
        raise ValueError(f"times must start at or after t0 - 1 = {params.t0 - 1}")
    if not (1e-14 <= tol <= 1e-6):
        raise ValueError(f"tol must lie in [1e-14, 1e-6], got {tol}")
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=float))
    c0, c1, k0, k1 = _operator_coefficients(params, alpha)
    pieces = np.maximum(1, np.ceil(np.diff(times) / MAX_SPAN).astype(int))
    if times.size == 1:
        return ModeTable(mu2, times, np.empty((mu2.size, 0, 2, 2)), params)
    fine = np.concatenate(
        [np.linspace(a, b, k, endpoint=False) for a, b, k in zip(times[:-1], times[1:], pieces)]
        + [times[-1:]]
    )
    flat = kernels.propagate_steps(mu2, fine, params.n, params.a, c0, c1, k0, k1, tol, tol, backend=backend)
    flat = flat.reshape(mu2.size, fine.size - 1, 2, 2)
    if fine.size == times.size:
        return ModeTable(mu2, times, flat, params)
    steps = np.empty((mu2.size, times.size - 1, 2, 2))
    pos = 0
    for j, k in enumerate(pieces):
        acc = flat[:, pos]
        for i in range(1, k):
            acc = flat[:, pos + i] @ acc
        steps[:, j] = acc
        pos += k
    return ModeTable(mu2, times, steps, params)


def mode_propagator(s: float, t: float, mu2: float, params: ModelParams,
                    tol: float = DEFAULT_TOL) -> PropagatorMatrix:
    """Fundamental matrix from ``s`` to ``t`` by adaptive Dormand-Prince 5(4).

    Raises :class:`~dskg.errors.StepSizeUnderflow` when the step controller
    cannot meet ``tol``.
    """
    if mu2 < 0:
        raise ValueError("mu2 must be nonnegative")
    if t == s:
        return PropagatorMatrix.identity(s, mu2)
    lo, hi = min(s, t), max(s, t)
    table = mode_table([mu2], [lo, hi], params, tol)
    fwd = table.steps[0, 0]
    if t < s:
        return PropagatorMatrix.from_array(np.linalg.inv(fwd), s, t, mu2)
    return PropagatorMatrix.from_array(fwd, s, t, mu2)


def mode_oracle(s: float, t: float, mu: float, params: ModelParams) -> PropagatorMatrix:
    """Fundamental matrix of the unperturbed mode ODE from Bessel series.

    Only available for ``a = 0`` and ``mu > 0`` with ``mu e^{-s}``,
    ``mu e^{-t}`` inside the series range.
    """
    if params.a != 0:
        raise OracleUnavailable("Bessel oracle requires a = 0 (time-independent h)")
    if not mu > 0:
        raise OracleUnavailable("Bessel oracle requires mu > 0")
    if t == s:
        return PropagatorMatrix.identity(s, mu * mu)
    ws = np.array(mode_wronskian_matrix(s, mu, params.n, params.lam))
    wt = np.array(mode_wronskian_matrix(t, mu, params.n, params.lam))
    # M = W(t) W(s)^{-1} with the 2x2 inverse written out
    det = ws[0, 0] * ws[1, 1] - ws[0, 1] * ws[1, 0]
    inv = np.array([[ws[1, 1], -ws[0, 1]], [-ws[1, 0], ws[0, 0]]]) / det
    return PropagatorMatrix.from_array(wt @ inv, s, t, mu * mu)


def conjugation_check(s: float, t: float, mu2: float, alpha, params: ModelParams,
                      tol: float = DEFAULT_TOL, samples: int = 21) -> float:
    """Compare ``e^{alpha t} u`` with an independent solve for ``v``.

    ``u`` solves the original mode equation; ``v`` solves the conjugated
    equation with damping ``n - 2 alpha + d(t)`` and potential
    ``lam - n alpha + alpha^2 - alpha d(t) + lambda_xi(t)``.  Data are matched
    at ``s`` for both basis vectors.  Returns the largest deviation on a
    uniform grid of ``samples`` times, relative to ``max(1, max |v|)``.
    """
    if isinstance(alpha, AlphaChoice):
        alpha = alpha.alpha
    grid = np.linspace(s, t, samples)
    mu = mode_table([mu2], grid, params, tol).cumulative()[0]
    mv = mode_table([mu2], grid, params, tol, alpha=alpha).cumulative()[0]
    worst = 0.0
    scale = 1.0
    for x in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        u = (mu @ x)[:, 0]
        xv = np.array([x[0], x[1] + alpha * x[0]])
        v = (mv @ xv)[:, 0]
        worst = max(worst, float(np.max(np.abs(np.exp(alpha * (grid - s)) * u - v))))
        scale = max(scale, float(np.max(np.abs(v))))
    return worst / scale


def abel_determinant(s: float, t: float, params: ModelParams) -> float:
    """``exp(-int_s^t (n + d))`` = ``e^{-n(t-s)} (c(s)/c(t))^n``."""
    cs = 1.0 + params.a * math.exp(-s)
    ct = 1.0 + params.a * math.exp(-t)
    return math.exp(-params.n * (t - s)) * (cs / ct) ** params.n
