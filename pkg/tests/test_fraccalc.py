"""Special functions and discrete fractional operators."""

import math

import numpy as np
import pytest

from fracstab import (
    FractionalOrder,
    MLEvalPolicy,
    beta_fn,
    gamma_fn,
    ml_matrix,
    ml_scalar,
    rl_derivative_grid,
    rl_integral_grid,
)
from fracstab.errors import AccuracyWarning, ConditioningWarning, ConvergenceError

from oracle_fixtures import (
    BETA_0625_0625,
    GAMMA_0_75,
    ML_A06_B075_ZM40,
    ML_A06_B1_ZM8,
    ML_A075_B075_ZM1,
    ML_A075_B075_ZM15,
    ML_A075_B075_ZM30,
    ML_A075_B15_ZM12,
    ML_A075_B1_ZM25,
    ML_A09_B09_ZM10,
    RECIP_GAMMA_0_75,
    RL_INT_T_A075_AT1,
)


# ---------------------------------------------------------------- gamma/beta

def test_gamma_basic_values():
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma_fn(0.75) == pytest.approx(GAMMA_0_75, rel=1e-12)


def test_gamma_reflection_region():
    # Gamma(-1/2) = -2 sqrt(pi), Gamma(-3/2) = 4 sqrt(pi) / 3
    assert gamma_fn(-0.5) == pytest.approx(-2.0 * math.sqrt(math.pi), rel=1e-12)
    assert gamma_fn(-1.5) == pytest.approx(4.0 * math.sqrt(math.pi) / 3.0, rel=1e-12)


def test_gamma_recurrence_over_range():
    # Gamma(x+1) = x Gamma(x) across [-50, 50] away from poles
    for x in np.arange(-49.6, 49.6, 0.73):
        if abs(x - round(x)) < 1e-6:
            continue
        assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=5e-12)


def test_gamma_rejects_poles():
    for x in (0.0, -1.0, -7.0):
        with pytest.raises(ValueError):
            gamma_fn(x)


def test_beta_values_and_symmetry():
    assert beta_fn(1.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert beta_fn(0.5, 0.5) == pytest.approx(math.pi, rel=1e-13)
    assert beta_fn(0.625, 0.625) == pytest.approx(BETA_0625_0625, rel=1e-12)
    assert beta_fn(2.3, 0.7) == pytest.approx(beta_fn(0.7, 2.3), rel=1e-14)


def test_beta_domain_errors():
    with pytest.raises(ValueError):
        beta_fn(0.0, 1.0)
    with pytest.raises(ValueError):
        beta_fn(1.0, -2.0)


# ---------------------------------------------------------------- ml_scalar

def test_ml_reduces_to_exponential():
    for z in np.linspace(-20.0, 20.0, 41):
        assert ml_scalar(1.0, 1.0, float(z)) == pytest.approx(math.exp(z), rel=1e-10)


def test_ml_at_zero_and_cosh():
    assert ml_scalar(0.75, 0.75, 0.0) == pytest.approx(RECIP_GAMMA_0_75, rel=1e-13)
    assert ml_scalar(2.0, 1.0, 1.0) == pytest.approx(math.cosh(1.0), rel=1e-13)
    # E_{2,1}(z) = cosh(sqrt(z)); at z = -1 that is cos(1)
    assert ml_scalar(2.0, 1.0, -1.0) == pytest.approx(math.cos(1.0), rel=1e-13)


def test_ml_against_frozen_oracle():
    cases = [
        (0.75, 0.75, -1.0, ML_A075_B075_ZM1),
        (0.75, 0.75, -15.0, ML_A075_B075_ZM15),
        (0.75, 0.75, -30.0, ML_A075_B075_ZM30),
        (0.6, 1.0, -8.0, ML_A06_B1_ZM8),
        (0.9, 0.9, -10.0, ML_A09_B09_ZM10),
        (0.6, 0.75, -40.0, ML_A06_B075_ZM40),
        (0.75, 1.0, -2.5, ML_A075_B1_ZM25),
        (0.75, 1.5, -12.0, ML_A075_B15_ZM12),  # exercises the beta reduction
    ]
    for alpha, beta, z, expected in cases:
        assert ml_scalar(alpha, beta, z) == pytest.approx(expected, rel=2e-8), (alpha, beta, z)


def test_ml_recurrence_identity():
    # E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)
    zs = np.linspace(-10.0, 10.0, 41)
    for alpha in (0.6, 0.75, 0.9):
        for beta in (0.75, 1.0):
            for z in zs:
                left = ml_scalar(alpha, beta, float(z))
                right = 1.0 / gamma_fn(beta) + z * ml_scalar(alpha, alpha + beta, float(z))
                assert abs(left - right) <= 1e-9 * (1.0 + abs(left)), (alpha, beta, z)


def test_ml_branch_continuity():
    # adjacent branches agree to 1e-6 relative across both hand-off radii
    policy = MLEvalPolicy()
    for alpha in (0.6, 0.75, 0.9):
        for beta in (0.75, 1.0, alpha):
            # series vs integral around the series safety radius
            for z in (-1.8, -1.99, -2.01, -2.4):
                via_series = _series_only(alpha, beta, z)
                via_integral = _integral_only(alpha, beta, z)
                assert via_integral == pytest.approx(via_series, rel=1e-6), (alpha, beta, z)
            # integral vs asymptotic around the switch radius
            r = policy.asymptotic_switch_radius
            for z in (-r * 0.9, -r, -r * 1.1):
                via_integral = _integral_only(alpha, beta, z)
                via_asymptotic = _asymptotic_only(alpha, beta, z, policy.asymptotic_terms)
                assert via_asymptotic == pytest.approx(via_integral, rel=1e-6), (alpha, beta, z)


def _series_only(alpha, beta, z):
    from fracstab.fraccalc import _ml_series

    value, _, converged = _ml_series(alpha, beta, complex(z), 1e-14, 600)
    assert converged
    return value.real


def _integral_only(alpha, beta, z):
    from fracstab.fraccalc import _ml_neg_real_integral

    return _ml_neg_real_integral(alpha, beta, -z)


def _asymptotic_only(alpha, beta, z, n_terms):
    from fracstab.fraccalc import _ml_asymptotic_neg

    return _ml_asymptotic_neg(alpha, beta, z, n_terms)


def test_ml_complex_input_returns_complex():
    val = ml_scalar(0.75, 1.0, 0.3 + 0.2j)
    assert isinstance(val, complex)
    # conjugate symmetry for real coefficients
    conj = ml_scalar(0.75, 1.0, 0.3 - 0.2j)
    assert conj == pytest.approx(val.conjugate(), rel=1e-12)


def test_ml_series_cap_raises():
    policy = MLEvalPolicy(series_max_terms=50)
    with pytest.raises(ConvergenceError):
        ml_scalar(0.75, 1.0, 20.0, policy)


def test_ml_warns_on_cancelling_complex_argument():
    with pytest.warns(AccuracyWarning):
        ml_scalar(0.75, 1.0, complex(-18.0, 0.5))


def test_policy_validation():
    with pytest.raises(ValueError):
        MLEvalPolicy(series_tol=0.0)
    with pytest.raises(ValueError):
        MLEvalPolicy(series_max_terms=10)
    with pytest.raises(ValueError):
        MLEvalPolicy(asymptotic_switch_radius=-1.0)
    with pytest.raises(ValueError):
        MLEvalPolicy(asymptotic_terms=1)


def test_fractional_order_validation():
    FractionalOrder(0.75, 2)
    FractionalOrder(1.0, 4)
    with pytest.raises(ValueError):
        FractionalOrder(0.5, 2)
    with pytest.raises(ValueError):
        FractionalOrder(1.2, 2)
    with pytest.raises(ValueError):
        FractionalOrder(0.75, 1)


# ---------------------------------------------------------------- ml_matrix

def test_ml_matrix_zero_matrix():
    out = ml_matrix(0.75, 0.9, np.zeros((3, 3)))
    np.testing.assert_allclose(out, np.eye(3) / gamma_fn(0.9), rtol=1e-14)


def test_ml_matrix_diagonal_consistency():
    d = np.diag([-1.0, -2.0])
    out = ml_matrix(0.75, 0.75, d)
    expect = np.diag([ml_scalar(0.75, 0.75, -1.0), ml_scalar(0.75, 0.75, -2.0)])
    np.testing.assert_allclose(out, expect, rtol=1e-10, atol=1e-14)


def test_ml_matrix_rotation_generator():
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = ml_matrix(1.0, 1.0, rot)
    expect = np.array([[math.cos(1.0), math.sin(1.0)], [-math.sin(1.0), math.cos(1.0)]])
    np.testing.assert_allclose(out, expect, atol=1e-9)


def test_ml_matrix_similarity_invariance():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(4, 4)) * 0.6
    p = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
    lhs = ml_matrix(0.75, 1.0, p @ m @ np.linalg.inv(p))
    rhs = p @ ml_matrix(0.75, 1.0, m) @ np.linalg.inv(p)
    norm = np.max(np.sum(np.abs(rhs), axis=1))
    assert np.max(np.sum(np.abs(lhs - rhs), axis=1)) <= 1e-7 * norm


def test_ml_matrix_fast_path_matches_series():
    m = np.array([[-1.0, 0.4], [0.2, -2.0]])
    w, v = np.linalg.eig(m)
    fast = ml_matrix(0.75, 0.75, m, decomposition=(w, v))
    series = ml_matrix(0.75, 0.75, m)
    np.testing.assert_allclose(fast, series, rtol=1e-10, atol=1e-13)


def test_ml_matrix_conditioning_warning():
    m = np.array([[1.0, 1.0], [0.0, 1.0 + 1e-13]])  # nearly defective
    w, v = np.linalg.eig(m)
    with pytest.warns(ConditioningWarning):
        out = ml_matrix(0.75, 1.0, m, decomposition=(w, v))
    np.testing.assert_allclose(out, ml_matrix(0.75, 1.0, m), rtol=1e-12)


def test_ml_matrix_input_validation():
    with pytest.raises(ValueError):
        ml_matrix(0.75, 1.0, np.ones((2, 3)))
    with pytest.raises(ValueError):
        ml_matrix(0.75, 1.0, np.array([[np.inf]]))


# ------------------------------------------------------- grid operators

def test_rl_integral_constant_exact():
    n_steps = 200
    dt = 1.0 / n_steps
    t = np.arange(n_steps + 1) * dt
    out = rl_integral_grid(np.ones(n_steps + 1), 0.5, dt)
    np.testing.assert_allclose(out[1:], t[1:] ** 0.5 / gamma_fn(1.5), rtol=1e-12)
    assert out[0] == 0.0


def test_rl_integral_zero_and_linear():
    n_steps = 512
    dt = 1.0 / n_steps
    assert not rl_integral_grid(np.zeros(n_steps + 1), 0.75, dt).any()
    t = np.arange(n_steps + 1) * dt
    out = rl_integral_grid(t, 0.75, dt)
    # I^a t = Gamma(2)/Gamma(2+a) t^{1+a}; first-order scheme
    assert out[-1] == pytest.approx(RL_INT_T_A075_AT1, abs=5e-3)
    finer = rl_integral_grid(np.arange(2 * n_steps + 1) / (2 * n_steps), 0.75, dt / 2)
    assert abs(finer[-1] - RL_INT_T_A075_AT1) < abs(out[-1] - RL_INT_T_A075_AT1)


def test_rl_derivative_of_integral_recovers_f():
    n_steps = 512
    dt = 1.0 / n_steps
    t = np.arange(n_steps + 1) * dt
    f = np.sin(t) + 1.5
    for alpha in (0.6, 0.75, 0.9):
        back = rl_derivative_grid(rl_integral_grid(f, alpha, dt), alpha, dt)
        sel = t >= 0.25
        assert np.max(np.abs(back[sel] - f[sel])) < 0.02, alpha


def test_rl_composition_error_shrinks_under_refinement():
    for alpha in (0.6, 0.75, 0.9):
        errs = []
        for n_steps in (128, 256):
            dt = 1.0 / n_steps
            t = np.arange(n_steps + 1) * dt
            f = 1.0 + t + t**2
            back = rl_derivative_grid(rl_integral_grid(f, alpha, dt), alpha, dt)
            sel = t >= 0.25
            errs.append(np.max(np.abs(back[sel] - f[sel])))
        assert errs[1] < errs[0]


def test_rl_derivative_annihilates_singular_mode():
    # D^a t^(a-1) = 0; the discrete residual shrinks under refinement
    alpha = 0.75
    prev = None
    for n_steps in (256, 512, 1024):
        dt = 1.0 / n_steps
        t = np.arange(n_steps + 1) * dt
        f = np.zeros(n_steps + 1)
        f[1:] = t[1:] ** (alpha - 1.0)
        out = rl_derivative_grid(f, alpha, dt)
        resid = np.max(np.abs(out[t >= 0.5]))
        if prev is not None:
            assert resid < prev
        prev = resid
    assert prev < 0.05


def test_rl_operator_validation():
    with pytest.raises(ValueError):
        rl_integral_grid(np.ones(8), 1.5, 0.1)
    with pytest.raises(ValueError):
        rl_integral_grid(np.ones(8), 0.5, 0.0)
    with pytest.raises(ValueError):
        rl_derivative_grid(np.ones(2), 0.75, 0.1)
    with pytest.raises(ValueError):
        rl_derivative_grid(np.ones(8), 1.0, 0.1)


def test_rl_integral_vector_valued():
    n_steps = 64
    dt = 1.0 / n_steps
    f = np.stack([np.ones(n_steps + 1), np.zeros(n_steps + 1)], axis=1)
    out = rl_integral_grid(f, 0.5, dt)
    assert out.shape == f.shape
    assert not out[:, 1].any()
    t = np.arange(n_steps + 1) * dt
    np.testing.assert_allclose(out[1:, 0], t[1:] ** 0.5 / gamma_fn(1.5), rtol=1e-12)
