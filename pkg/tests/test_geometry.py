import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dskg.errors import InvalidParams
from dskg.geometry import (
    AlphaChoice,
    ModelParams,
    commutator_q,
    conformal_factor,
    damping_coefficient,
    laplacian_multiplier,
    mu2_multiplier,
    verify_commutator,
    volume_scale,
)


def test_params_defaults_and_validation():
    p = ModelParams()
    assert (p.n, p.lam, p.N, p.t0) == (3, 3.25, 32, 1.0)
    for bad in ({"lam": 0.0}, {"lam": -1.0}, {"n": 0}, {"N": 5}, {"N": 2}, {"a": -0.1}):
        with pytest.raises(InvalidParams):
            ModelParams(**bad)


def test_lam_zero_message_names_exclusion():
    with pytest.raises(InvalidParams, match="excluded"):
        ModelParams(lam=0.0)


def test_alpha_rules():
    AlphaChoice(1.5).validate(3.25, 3)
    AlphaChoice(0.9).validate(1.0, 3)
    with pytest.raises(InvalidParams):
        AlphaChoice(1.0).validate(3.25, 3)
    with pytest.raises(InvalidParams):
        AlphaChoice(1.0).validate(1.0, 3)
    assert AlphaChoice.default(3.25, 3).alpha == 1.5
    assert AlphaChoice(0.9).weight_rate(3) == pytest.approx(1.2)


def test_conformal_factor_examples():
    assert conformal_factor(5.0, ModelParams(a=0.0)) == 1.0
    assert conformal_factor(0.0, ModelParams(a=1.0)) == pytest.approx(2.0)
    assert conformal_factor(60.0, ModelParams(a=1.0)) == pytest.approx(1.0)


def test_damping_examples():
    assert damping_coefficient(2.0, ModelParams(a=0.0)) == 0.0
    assert damping_coefficient(0.0, ModelParams(a=1.0, n=3)) == pytest.approx(-1.5)
    assert damping_coefficient(10.0, ModelParams(a=1.0, n=3)) == pytest.approx(-3 * math.exp(-10), rel=1e-4)


def test_laplacian_multiplier_examples():
    p = ModelParams(a=0.0)
    assert laplacian_multiplier((0, 0, 0), 0.0, p) == 0.0
    assert laplacian_multiplier((1, 0, 0), 0.0, p) == pytest.approx(1.0)
    assert laplacian_multiplier((1, 0, 0), math.log(2), p) == pytest.approx(0.25)
    q = ModelParams(torus_period=math.pi)
    assert laplacian_multiplier((1, 0, 0), 0.0, q) == pytest.approx(4.0)


def test_volume_scale_examples():
    assert volume_scale(0.0, ModelParams(a=0.0)) == pytest.approx(1.0)
    assert volume_scale(1.0, ModelParams(a=0.0, n=3)) == pytest.approx(math.e**3)
    assert volume_scale(0.0, ModelParams(a=1.0, n=2)) == pytest.approx(4.0)


@given(st.floats(0.0, 30.0), st.floats(0.0, 3.0), st.floats(0.0, 1e4))
def test_multiplier_nonnegative_and_bounded(t, a, mu2):
    p = ModelParams(a=a)
    val = mu2_multiplier(mu2, t, p)
    assert val >= 0
    assert val <= math.exp(-2 * t) * mu2 * (1 + 1e-12)


@given(st.floats(0.0, 40.0), st.floats(0.0, 5.0))
def test_damping_is_order_e_minus_t(t, a):
    p = ModelParams(a=a, n=3)
    assert abs(damping_coefficient(t, p)) * math.exp(t) <= 3 * a * (1 + 1e-12)


def test_commutator_vanishes_for_flat_slices():
    p = ModelParams(a=0.0)
    for xi in ((1, 0, 0), (3, 2, 1)):
        for t in (0.5, 2.0, 5.0):
            chk = verify_commutator(xi, t, p)
            assert chk.q_multiplier == 0.0
            assert chk.residual < 1e-8


def test_commutator_zero_mode():
    q, res = verify_commutator((0, 0, 0), 2.0, ModelParams(a=1.0))
    assert q == 0.0 and res == 0.0


def test_commutator_against_mpmath_derivative():
    # independent oracle: q = e^{3t} (d/dt lam_xi + 2 lam_xi)
    p = ModelParams(a=1.0)
    mu2 = 1.0
    mpmath.mp.dps = 30
    for t in (1.0, 2.0, 4.0):
        lam = lambda s: mpmath.e ** (-2 * s) * (1 + mpmath.e ** (-s)) ** (-2) * mu2
        q_ref = float(mpmath.e ** (3 * t) * (mpmath.diff(lam, t) + 2 * lam(t)))
        assert commutator_q(mu2, t, p) == pytest.approx(q_ref, rel=1e-12)
    chk = verify_commutator((1, 0, 0), 2.0, p)
    assert chk.residual < 1e-8


@settings(max_examples=50)
@given(st.floats(1.0, 12.0), st.integers(1, 12))
def test_commutator_q_bounded_by_mode(t, k):
    p = ModelParams(a=1.0)
    mu2 = float(k * k)
    assert abs(commutator_q(mu2, t, p)) <= 2.0 * mu2


def test_fd_residual_at_coarse_step_is_truncation_error():
    # central difference at step h has relative error about 4 h^2 / 3 for e^{-2t}
    p = ModelParams(a=0.0)
    chk = verify_commutator((5, 0, 0), 0.0, p, step=1e-4)
    assert chk.residual == pytest.approx(4e-8 / 3, rel=1e-3)
    assert verify_commutator((5, 0, 0), 0.0, p).residual < 1e-9
