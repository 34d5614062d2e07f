import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dskg.errors import EmptyTrace, ShapeMismatch
from dskg.fields_norms import (
    CauchyData,
    SpectralField,
    dealias_mask,
    energy_norm,
    lq_norm,
    mixed_norm,
    mode_index,
    random_cauchy_data,
    random_field,
    sobolev_norm,
    to_physical,
    to_spectral,
)
from dskg.geometry import ModelParams, mu2_multiplier, volume_scale

P2 = ModelParams(n=2, N=16, t0=1.0)


def _grid(params):
    y = np.arange(params.N) * params.torus_period / params.N
    return np.meshgrid(*([y] * params.n), indexing="ij")


def _field(values, params, t=None):
    return to_spectral(values, params.t0 if t is None else t, params)


def test_mode_index_reconstructs_grid():
    idx = mode_index(P2)
    assert np.array_equal(idx.mu2[idx.inverse], idx.grid_mu2)
    assert idx.mu2[0] == 0.0 and np.all(np.diff(idx.mu2) > 0)


def test_dealias_mask_counts():
    mask = dealias_mask(ModelParams(n=1, N=12))
    # |xi| <= 4 out of -6..5
    assert mask.sum() == 9


@settings(max_examples=25)
@given(arrays(np.float64, (8, 8), elements=st.floats(-5, 5)))
def test_roundtrip(values):
    p = ModelParams(n=2, N=8)
    f = to_spectral(values, 1.0, p)
    assert f.is_real()
    np.testing.assert_allclose(to_physical(f), values, atol=1e-12)


def test_shape_checks():
    with pytest.raises(ShapeMismatch):
        SpectralField(np.zeros((4, 4)), 1.0, P2)
    with pytest.raises(ValueError):
        CauchyData(SpectralField(np.zeros((16, 16)), 1.0, P2), SpectralField(np.zeros((16, 16)), 2.0, P2))


def test_lq_of_constant():
    t = 1.3
    f = _field(np.full((16, 16), 2.0), P2, t)
    area = (2 * math.pi) ** 2 * volume_scale(t, P2)
    for q in (1.0, 2.0, 4.0):
        assert lq_norm(f, q) == pytest.approx(2.0 * area ** (1 / q), rel=1e-12)
    assert lq_norm(f, math.inf) == pytest.approx(2.0)


def test_sobolev_of_single_mode():
    # cos(3 y_1) is an eigenfunction of the slice Laplacian
    y1, _ = _grid(P2)
    t = 1.0
    f = _field(np.cos(3 * y1), P2, t)
    lam = mu2_multiplier(9.0, t, P2)
    l2 = math.sqrt((2 * math.pi) ** 2 / 2 * volume_scale(t, P2))
    for s in (-1.0, 0.5, 2.0):
        assert sobolev_norm(f, s, 2.0) == pytest.approx((1 + lam) ** (s / 2) * l2, rel=1e-12)


def test_energy_by_physical_quadrature():
    # gradient by finite differences of a trigonometric polynomial on a fine grid
    p = ModelParams(n=2, N=32, a=0.4)
    y1, y2 = _grid(p)
    phi = np.sin(y1) + 0.3 * np.cos(2 * y1 + y2)
    psi = 0.5 * np.cos(y2)
    t = 1.7
    d = CauchyData(_field(phi, p, t), _field(psi, p, t))
    e = energy_norm(d, 2.0)
    gx = np.cos(y1) - 0.6 * np.sin(2 * y1 + y2)
    gy = -0.3 * np.sin(2 * y1 + y2)
    c = 1 + 0.4 * math.exp(-t)
    cell = (2 * math.pi / 32) ** 2 * volume_scale(t, p)
    grad = 0.5 * np.sum((gx**2 + gy**2) * math.exp(-2 * t) / c**2) * cell
    assert e.gradient == pytest.approx(grad, rel=1e-12)
    assert e.kinetic == pytest.approx(0.5 * np.sum(psi**2) * cell, rel=1e-12)
    assert e.mass == pytest.approx(0.5 * 2.0 * np.sum(phi**2) * cell, rel=1e-12)
    assert e.norm == pytest.approx(math.sqrt(e.total))


def test_mixed_norm_constant_in_time():
    f = _field(np.full((16, 16), 1.0), P2, 1.0)
    fields = [SpectralField(f.coeffs, t, P2) for t in np.linspace(1.0, 3.0, 21)]
    # ||f(t)||_{L^2(dk_t)} = 2 pi e^{t}; time integral of its square is pi^2 (e^6 - e^2) * 2
    ref = math.sqrt(4 * math.pi**2 * (math.exp(6) - math.exp(2)) / 2)
    assert mixed_norm(fields, 2.0, 2.0, 0.0) == pytest.approx(ref, rel=1e-4)
    # a weight e^{-t} cancels the volume growth exactly: ||.||_{L^p_t} = 2 pi * 2^{1/p}
    assert mixed_norm(fields, 4.0, 2.0, 0.0, weight_rate=-1.0) == pytest.approx(
        2 * math.pi * math.e * 2 ** 0.25, rel=1e-10)
    assert mixed_norm(fields, math.inf, 2.0, 0.0) == pytest.approx(2 * math.pi * math.exp(3))


def test_mixed_norm_errors():
    with pytest.raises(EmptyTrace):
        mixed_norm([], 2.0, 2.0, 0.0)
    f = _field(np.ones((16, 16)), P2)
    with pytest.raises(EmptyTrace):
        mixed_norm([f], 2.0, 2.0, 0.0)


def test_random_field_reproducible_and_real():
    a = random_field(P2, np.random.default_rng(5))
    b = random_field(P2, np.random.default_rng(5))
    assert np.array_equal(a.coeffs, b.coeffs)
    assert a.is_real()
    nyq = mode_index(P2).int_modes[0] == -8
    assert np.all(a.coeffs[nyq] == 0)


def test_field_algebra():
    d = random_cauchy_data(P2, np.random.default_rng(1))
    two = d + d
    np.testing.assert_allclose(two.phi.coeffs, (2 * d).phi.coeffs)
    assert energy_norm(2 * d, 1.0).total == pytest.approx(4 * energy_norm(d, 1.0).total)
