"""Model asymptotically de Sitter metrics on R_t x T^n.

The metric is ``-dt^2 + e^{2t} h_t`` with a conformally perturbed flat
torus metric ``h_t = c(t)^2 h_flat`` where ``c(t) = 1 + a e^{-t}``.  In
this family every Fourier mode of the torus is an eigenfunction of the
slice Laplacian, so the Klein-Gordon operator decouples mode by mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams

__all__ = [
    "ModelParams",
    "AlphaChoice",
    "conformal_factor",
    "damping_coefficient",
    "laplacian_multiplier",
    "volume_scale",
    "verify_commutator",
    "commutator_q",
]


@dataclass(frozen=True)
class ModelParams:
    """Spacetime and discretisation configuration.

    Attributes
    ----------
    n : int
        Spatial dimension.
    lam : float
        Klein-Gordon mass parameter (``lambda`` in the operator
        ``box_g + lambda``); must be positive.
    a : float
        Conformal perturbation amplitude; ``a = 0`` makes ``h`` independent
        of ``t``.
    N : int
        Even number of Fourier modes per axis.
    t0 : float
        Initial slice.
    torus_period : float
        Side length of the flat torus.
    """

    n: int = 3
    lam: float = 13.0 / 4.0
    a: float = 0.0
    N: int = 32
    t0: float = 1.0
    torus_period: float = 2.0 * math.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParams(f"n must be a positive integer, got {self.n!r}")
        if not self.lam > 0:
            raise InvalidParams(
                f"lam must be > 0, got {self.lam!r}: at lam = 0 the energy norm "
                "does not control the L^2 norm of the field, so that case is excluded"
            )
        if not self.a >= 0:
            raise InvalidParams(f"a must be >= 0, got {self.a!r}")
        if int(self.N) != self.N or self.N < 4 or self.N % 2:
            raise InvalidParams(f"N must be an even integer >= 4, got {self.N!r}")
        if not self.t0 >= 1:
            raise InvalidParams(f"t0 must be >= 1, got {self.t0!r}")
        if not self.torus_period > 0:
            raise InvalidParams(f"torus_period must be > 0, got {self.torus_period!r}")

    @property
    def critical_mass(self) -> float:
        """The threshold ``n^2 / 4`` separating the two mass regimes."""
        return self.n * self.n / 4.0

    @property
    def wavenumber_unit(self) -> float:
        return 2.0 * math.pi / self.torus_period

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class AlphaChoice:
    """Weight exponent used in the energy and Strichartz bounds."""

    alpha: float

    def validate(self, lam: float, n: int) -> "AlphaChoice":
        crit = n * n / 4.0
        if lam > crit:
            if not math.isclose(self.alpha, n / 2.0, rel_tol=0, abs_tol=1e-12):
                raise InvalidParams(
                    f"alpha must equal n/2 = {n / 2} when lam > n^2/4, got {self.alpha}"
                )
        elif not (0 <= self.alpha < math.sqrt(lam)):
            raise InvalidParams(
                f"alpha must lie in [0, sqrt(lam)) = [0, {math.sqrt(lam):.6g}) "
                f"when lam <= n^2/4, got {self.alpha}"
            )
        return self

    def weight_rate(self, n: int) -> float:
        """Exponent ``n - 2 alpha`` of the weights."""
        return n - 2.0 * self.alpha

    @classmethod
    def default(cls, lam: float, n: int) -> "AlphaChoice":
        if lam > n * n / 4.0:
            return cls(n / 2.0)
        return cls(0.0)


def conformal_factor(t, params: ModelParams):
    """``c(t) = 1 + a e^{-t}``; accepts scalars or arrays."""
    return 1.0 + params.a * np.exp(-np.asarray(t, dtype=float))[()]


def damping_coefficient(t, params: ModelParams):
    """``d/dt log sqrt(det h_t) = -n a e^{-t} / (1 + a e^{-t})``."""
    x = params.a * np.exp(-np.asarray(t, dtype=float))
    return (-params.n * x / (1.0 + x))[()]


def _xi_phys_sq(xi, params: ModelParams) -> float:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape[-1] != params.n:
        raise InvalidParams(f"mode vector must have {params.n} components, got {xi.shape[-1]}")
    return float(np.sum(xi * xi)) * params.wavenumber_unit**2


def laplacian_multiplier(xi, t, params: ModelParams):
    """Eigenvalue of the slice Laplacian of ``k_t`` on the Fourier mode ``xi``.

    ``xi`` is an integer mode vector; the physical wavevector is
    ``(2 pi / torus_period) xi``.
    """
    mu2 = _xi_phys_sq(xi, params)
    return mu2_multiplier(mu2, t, params)


def mu2_multiplier(mu2, t, params: ModelParams):
    """Slice Laplacian eigenvalue ``e^{-2t} c(t)^{-2} mu2`` for ``|xi_phys|^2 = mu2``."""
    t = np.asarray(t, dtype=float)
    c = 1.0 + params.a * np.exp(-t)
    return (np.exp(-2.0 * t) * np.asarray(mu2, dtype=float) / (c * c))[()]


def volume_scale(t, params: ModelParams):
    """Density of ``dk_t`` against flat Lebesgue measure: ``e^{nt} c(t)^n``."""
    t = np.asarray(t, dtype=float)
    c = 1.0 + params.a * np.exp(-t)
    return (np.exp(params.n * t) * c**params.n)[()]


def commutator_q(mu2, t, params: ModelParams):
    """Multiplier ``q`` with ``d/dt lambda_xi = -2 lambda_xi + e^{-3t} q``.

    Differentiating ``e^{-2t} (1 + a e^{-t})^{-2} mu2`` gives
    ``q = 2 a mu2 / c(t)^3``.
    """
    c = 1.0 + params.a * np.exp(-np.asarray(t, dtype=float))
    return (2.0 * params.a * np.asarray(mu2, dtype=float) / c**3)[()]


@dataclass(frozen=True)
class CommutatorCheck:
    q_multiplier: float
    residual: float
    derivative: float = field(default=0.0, repr=False)

    def __iter__(self):
        yield self.q_multiplier
        yield self.residual


def verify_commutator(xi, t: float, params: ModelParams, step: float = 1e-5) -> CommutatorCheck:
    """Check the commutator identity for one mode.

    Returns ``(q, residual)`` where ``residual`` is the defect of
    ``d/dt lambda_xi + 2 lambda_xi - e^{-3t} q`` with the time derivative
    replaced by a central difference of width ``2 * step``.  The residual is
    scaled by ``max(1, lambda_xi(t))`` so that it measures relative accuracy
    for high modes.
    """
    mu2 = _xi_phys_sq(xi, params)
    q = float(commutator_q(mu2, t, params))
    lam_t = float(mu2_multiplier(mu2, t, params))
    fd = (float(mu2_multiplier(mu2, t + step, params)) - float(mu2_multiplier(mu2, t - step, params))) / (2 * step)
    defect = fd + 2.0 * lam_t - math.exp(-3.0 * t) * q
    return CommutatorCheck(q, abs(defect) / max(1.0, lam_t), fd)
