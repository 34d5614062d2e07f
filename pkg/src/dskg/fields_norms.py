"""Spectral fields on the flat torus and the norms used by the estimate harness.

A field on ``T^n`` with period ``L`` is stored by Fourier coefficients

    f(y) = sum_xi c_xi exp(i xi_phys . y),     xi_phys = (2 pi / L) xi,

with ``xi`` ranging over ``[-N/2, N/2)^n`` in FFT order, so
``c = fftn(values) / N^n``.  The spatial measure at time ``t`` is the
Riemannian volume of ``e^{2t} c(t)^2 h_flat``, i.e. ``volume_scale(t) dy``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import EmptyTrace, GridTooCoarse, ShapeMismatch
from .geometry import ModelParams, mu2_multiplier, volume_scale

__all__ = [
    "ModeIndex",
    "mode_index",
    "SpectralField",
    "CauchyData",
    "EnergyValue",
    "to_physical",
    "to_spectral",
    "lq_norm",
    "sobolev_norm",
    "energy_norm",
    "mixed_norm",
    "random_field",
    "random_cauchy_data",
    "dealias_mask",
]


@dataclass(frozen=True)
class ModeIndex:
    """Distinct values of ``|xi_phys|^2`` on the grid.

    ``mu2[inverse]`` reproduces the full grid of squared frequencies.
    """

    mu2: np.ndarray
    inverse: np.ndarray
    grid_mu2: np.ndarray
    int_modes: tuple


@functools.lru_cache(maxsize=16)
def _mode_index(n: int, N: int, period: float) -> ModeIndex:
    k = np.fft.fftfreq(N, 1.0 / N)
    axes = np.meshgrid(*([k] * n), indexing="ij")
    int2 = sum(ax * ax for ax in axes).astype(np.int64)
    uniq, inv = np.unique(int2.ravel(), return_inverse=True)
    scale = (2.0 * np.pi / period) ** 2
    idx = ModeIndex(uniq * scale, inv.reshape(int2.shape), int2 * scale, tuple(axes))
    for arr in (idx.mu2, idx.inverse, idx.grid_mu2):
        arr.flags.writeable = False
    return idx


def mode_index(params: ModelParams) -> ModeIndex:
    return _mode_index(params.n, params.N, float(params.torus_period))


def dealias_mask(params: ModelParams) -> np.ndarray:
    """Boolean mask of modes kept by the 2/3 rule (``|xi_i| <= N/3`` on every axis)."""
    cut = params.N / 3.0
    axes = mode_index(params).int_modes
    mask = np.ones(axes[0].shape, dtype=bool)
    for ax in axes:
        mask &= np.abs(ax) <= cut
    return mask


def _check_shape(arr: np.ndarray, params: ModelParams):
    want = (params.N,) * params.n
    if arr.shape != want:
        raise ShapeMismatch(f"expected grid shape {want}, got {arr.shape}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a field at a fixed time."""

    coeffs: np.ndarray
    t: float
    params: ModelParams

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        _check_shape(coeffs, self.params)
        object.__setattr__(self, "coeffs", coeffs)

    def to_physical(self) -> np.ndarray:
        return to_physical(self)

    def is_real(self, rtol: float = 1e-12) -> bool:
        """Hermitian symmetry ``c_{-xi} = conj(c_xi)``."""
        c = self.coeffs
        flipped = np.conj(np.roll(np.flip(c), 1, axis=tuple(range(c.ndim))))
        return bool(np.allclose(c, flipped, rtol=0, atol=rtol * max(np.max(np.abs(c)), 1e-300)))

    def _like(self, coeffs):
        return SpectralField(coeffs, self.t, self.params)

    def __add__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return self._like(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._like(self.coeffs * scalar)

    __rmul__ = __mul__


def to_physical(field: SpectralField) -> np.ndarray:
    """Grid values at ``y_j = j L / N``.  Real when the coefficients are Hermitian."""
    vals = np.fft.ifftn(field.coeffs) * field.coeffs.size
    if field.is_real():
        return vals.real
    return vals


def to_spectral(values, t: float, params: ModelParams) -> SpectralField:
    values = np.asarray(values)
    _check_shape(values, params)
    return SpectralField(np.fft.fftn(values) / values.size, t, params)


@dataclass(frozen=True, eq=False)
class CauchyData:
    """Data ``(phi, psi) = (u, du/dt)`` at a common time."""

    phi: SpectralField
    psi: SpectralField

    def __post_init__(self):
        if self.phi.t != self.psi.t:
            raise ValueError(f"phi and psi live at different times {self.phi.t} != {self.psi.t}")
        if self.phi.coeffs.shape != self.psi.coeffs.shape:
            raise ShapeMismatch("phi and psi grids differ")

    @property
    def t(self) -> float:
        return self.phi.t

    @property
    def params(self) -> ModelParams:
        return self.phi.params

    def __add__(self, other):
        return CauchyData(self.phi + other.phi, self.psi + other.psi)

    def __mul__(self, scalar):
        return CauchyData(self.phi * scalar, self.psi * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class EnergyValue:
    """Halved energy integrals; ``total`` is the squared energy norm."""

    kinetic: float
    gradient: float
    mass: float
    nonlinear: float = 0.0

    @property
    def total(self) -> float:
        return self.kinetic + self.gradient + self.mass + self.nonlinear

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.total))


def _physical_measure(t: float, params: ModelParams) -> float:
    return (params.torus_period / params.N) ** params.n * volume_scale(t, params)


def lq_norm(f: SpectralField, q: float, t: float | None = None) -> float:
    """``L^q`` norm with respect to the time-``t`` volume (``t`` defaults to ``f.t``).

    ``q = inf`` gives the grid sup.  Uses the physical grid without padding.
    """
    t = f.t if t is None else t
    vals = np.abs(to_physical(f))
    if np.isinf(q):
        return float(vals.max())
    if q <= 0:
        raise ValueError("q must be positive")
    return float((np.sum(vals**q) * _physical_measure(t, f.params)) ** (1.0 / q))


def bessel_potential(coeffs: np.ndarray, s: float, t: float, params: ModelParams) -> np.ndarray:
    """Apply ``(1 + Delta_{h_t})^{s/2}`` as a Fourier multiplier."""
    lam_xi = mu2_multiplier(mode_index(params).grid_mu2, t, params)
    return coeffs * (1.0 + lam_xi) ** (0.5 * s)


def sobolev_norm(f: SpectralField, s: float, q: float, t: float | None = None) -> float:
    """``|| (1 + Delta_{h_t})^{s/2} f ||_{L^q}`` at time ``t``."""
    t = f.t if t is None else t
    if s == 0:
        return lq_norm(f, q, t)
    return lq_norm(SpectralField(bessel_potential(f.coeffs, s, t, f.params), t, f.params), q, t)


def energy_norm(data: CauchyData, mu: float, t: float | None = None) -> EnergyValue:
    """``1/2 int (|grad_{h_t} phi|^2 + |psi|^2 + mu |phi|^2) dvol_t``.

    Evaluated by Plancherel: ``int |f|^2 dy = L^n sum |c|^2``.
    """
    t = data.t if t is None else t
    params = data.params
    lam_xi = mu2_multiplier(mode_index(params).grid_mu2, t, params)
    weight = 0.5 * params.torus_period**params.n * volume_scale(t, params)
    p2 = np.abs(data.phi.coeffs) ** 2
    kinetic = weight * float(np.sum(np.abs(data.psi.coeffs) ** 2))
    gradient = weight * float(np.sum(lam_xi * p2))
    mass = weight * mu * float(np.sum(p2))
    return EnergyValue(kinetic, gradient, mass)


def _iter_fields(trace):
    """Fields of a SolutionTrace (its ``u`` component) or of any iterable."""
    if hasattr(trace, "u_fields"):
        return trace.u_fields()
    return iter(trace)


def mixed_norm(trace, p: float, q: float, s: float, weight_rate: float = 0.0,
               t0: float | None = None) -> float:
    """``|| e^{w (t - t0)} ||u(t)||_{W^{s,q}(dk_t)} ||_{L^p_t}`` over the sample times.

    ``trace`` is a SolutionTrace (its ``u`` component is used) or an iterable
    of SpectralFields on a uniform time grid.  The time integral is composite
    Simpson; ``t0`` defaults to the first sample time.
    """
    times, g = [], []
    for f in _iter_fields(trace):
        times.append(f.t)
        g.append(sobolev_norm(f, s, q, f.t))
    if not times:
        raise EmptyTrace("mixed norm of an empty trace")
    times = np.asarray(times, dtype=float)
    t0 = times[0] if t0 is None else t0
    g = np.asarray(g) * np.exp(weight_rate * (times - t0))
    if np.isinf(p):
        return float(g.max())
    if times.size < 2:
        raise EmptyTrace("a finite-p time norm needs at least two samples")
    return float(simpson(g**p, x=times) ** (1.0 / p))


def _envelope(params: ModelParams, power: float) -> np.ndarray:
    int2 = mode_index(params).grid_mu2 / params.wavenumber_unit**2
    return (1.0 + int2) ** (-power)


def random_field(params: ModelParams, rng: np.random.Generator, t: float | None = None,
                 power: float | None = None, amplitude: float = 1.0) -> SpectralField:
    """Real Gaussian random field with coefficient envelope ``(1 + |xi|^2)^{-power}``.

    ``power`` defaults to ``(n + 1) / 2``.  Built from white noise in physical
    space so the coefficients are Hermitian; Nyquist planes are zeroed.
    """
    t = params.t0 if t is None else t
    power = (params.n + 1) / 2.0 if power is None else power
    if params.N < 4:
        raise GridTooCoarse("random fields need N >= 4")
    noise = rng.standard_normal((params.N,) * params.n)
    coeffs = np.fft.fftn(noise) / params.N ** (params.n / 2.0)
    coeffs *= _envelope(params, power)
    for ax in mode_index(params).int_modes:
        coeffs[ax == -params.N // 2] = 0.0
    return SpectralField(amplitude * coeffs, t, params)


def random_cauchy_data(params: ModelParams, rng: np.random.Generator, t: float | None = None,
                       power: float | None = None, amplitude: float = 1.0) -> CauchyData:
    phi = random_field(params, rng, t, power, amplitude)
    psi = random_field(params, rng, t, power, amplitude)
    return CauchyData(phi, psi)
