import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dskg.errors import OracleUnavailable
from dskg.geometry import ModelParams
from dskg.spectral_modes import (
    ModeState,
    PropagatorMatrix,
    abel_determinant,
    conjugation_check,
    mode_ode_coefficients,
    mode_oracle,
    mode_propagator,
    mode_table,
)

# M(3, 1) for mu^2 = 25, n = 3, lam = 13/4, frozen from an mpmath Taylor ODE
# solve at 30 digits
FROZEN = {
    0.0: [[-0.036754485375114505, 0.021050281633585399],
          [-0.01523496590760168, -0.058715333152084649]],
    1.0: [[-0.068520211404589204, 0.023590564957360248],
          [0.0057037089895729401, -0.081993967950875036]],
}


@pytest.mark.parametrize("a", [0.0, 1.0])
def test_frozen_fundamental_matrix(a):
    m = mode_propagator(1.0, 3.0, 25.0, ModelParams(a=a)).as_array()
    np.testing.assert_allclose(m, FROZEN[a], rtol=1e-8, atol=1e-11)


def test_identity_and_trivial_mode():
    p = ModelParams()
    m = mode_propagator(2.0, 2.0, 4.0, p)
    assert m.as_array().tolist() == [[1.0, 0.0], [0.0, 1.0]]
    # mu = 0, lam = 13/4: u = e^{-3t/2}(A cos t + B sin t) in t - s
    m = mode_propagator(1.0, 2.0, 0.0, p).as_array()
    d = math.exp(-1.5)
    ref = [[d * (math.cos(1) + 1.5 * math.sin(1)), d * math.sin(1)],
           [d * (-3.25 * math.sin(1)), d * (math.cos(1) - 1.5 * math.sin(1))]]
    np.testing.assert_allclose(m, ref, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("lam", [1.25, 2.25, 3.25])
@pytest.mark.parametrize("mu", [1.0, 5.0, 20.0])
def test_oracle_agreement(lam, mu):
    p = ModelParams(lam=lam)
    for dt in (0.5, 2.0, 4.0):
        num = mode_propagator(1.0, 1.0 + dt, mu * mu, p).as_array()
        ref = mode_oracle(1.0, 1.0 + dt, mu, p).as_array()
        assert np.max(np.abs(num - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_oracle_unavailable():
    with pytest.raises(OracleUnavailable):
        mode_oracle(1.0, 2.0, 3.0, ModelParams(a=0.5))
    with pytest.raises(OracleUnavailable):
        mode_oracle(1.0, 2.0, 0.0, ModelParams())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.1, 4.0), st.floats(0.0, 400.0), st.floats(0.0, 2.0))
def test_abel_identity(s, span, mu2, a):
    p = ModelParams(a=a)
    m = mode_propagator(s, s + span, mu2, p)
    assert abs(m.det - abel_determinant(s, s + span, p)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 3.0), st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(0.0, 200.0))
def test_composition(s, d1, d2, mu2):
    p = ModelParams(a=0.7)
    r, t = s + d1, s + d1 + d2
    whole = mode_propagator(s, t, mu2, p).as_array()
    parts = (mode_propagator(r, t, mu2, p) @ mode_propagator(s, r, mu2, p)).as_array()
    np.testing.assert_allclose(parts, whole, rtol=1e-8, atol=1e-12)


def test_backward_is_inverse():
    p = ModelParams(a=0.3)
    fwd = mode_propagator(1.0, 2.5, 9.0, p).as_array()
    back = mode_propagator(2.5, 1.0, 9.0, p).as_array()
    np.testing.assert_allclose(back @ fwd, np.eye(2), atol=1e-9)


def test_apply_and_matmul_bookkeeping():
    m = PropagatorMatrix(1.0, 2.0, 3.0, 4.0, 0.0, 1.0, 1.0)
    st_ = m.apply(ModeState(1.0, 1.0, 0.0))
    assert (st_.u, st_.du, st_.t) == (3.0, 7.0, 1.0)
    assert m.det == -2.0


def test_table_matches_single_propagators():
    p = ModelParams(a=0.5)
    mu2 = np.array([0.0, 2.0, 50.0])
    times = np.array([1.0, 1.4, 2.9, 3.0])
    cum = mode_table(mu2, times, p).cumulative()
    for i, m2 in enumerate(mu2):
        for j, t in enumerate(times):
            ref = mode_propagator(1.0, t, m2, p).as_array()
            np.testing.assert_allclose(cum[i, j], ref, rtol=1e-8, atol=1e-12)


def test_table_validation():
    p = ModelParams()
    with pytest.raises(ValueError):
        mode_table([1.0], [2.0, 1.0], p)
    with pytest.raises(ValueError):
        mode_table([1.0], [-1.0, 1.0], p)
    with pytest.raises(ValueError):
        mode_table([1.0], [1.0, 2.0], p, tol=1e-3)
    with pytest.raises(ValueError):
        mode_ode_coefficients(1.0, -1.0, p)


@pytest.mark.parametrize("alpha", [0.0, 0.9, 1.5, 2.3])
@pytest.mark.parametrize("a", [0.0, 1.0])
def test_conjugated_equation(alpha, a):
    p = ModelParams(lam=1.0, a=a)
    assert conjugation_check(1.0, 3.0, 16.0, alpha, p) < 1e-8
