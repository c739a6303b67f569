"""Moment curves, weighted norms, decay fits, and stability verdicts."""

import numpy as np
import pytest

from fracstab import (
    DecayVerdict,
    FractionalOrder,
    MomentCurve,
    SystemSpec,
    TimeGrid,
    brownian_increments,
    closed_form_homogeneous,
    decay_fit,
    gamma_fn,
    weighted_moment_sup,
    make_additive_noise,
    make_linear,
    pth_moment_curve,
    simulate_mild,
    stability_verdict,
)
from fracstab.simulator import PathEnsemble

ORDER = FractionalOrder(0.75, 2)


def make_ensemble(weighted_values, grid):
    """Build a PathEnsemble from given weighted values (paths, N+1, n)."""
    w = np.asarray(weighted_values, dtype=float)
    t = grid.nodes
    vals = np.empty_like(w)
    vals[:, 0] = np.nan
    vals[:, 1:] = w[:, 1:] / (t[None, 1:, None] ** (1.0 - ORDER.alpha))
    return PathEnsemble(values=vals, weighted=w, grid=grid, scheme_tag="synthetic",
                        master_seed=0, n_paths=w.shape[0])


def test_zero_ensemble_gives_zero_curves():
    z = np.zeros((1, 1))
    system = SystemSpec(A=np.array([[-1.0]]), rho=np.array([0.0]),
                        coeffs=make_linear(z, z, z), order=ORDER)
    grid = TimeGrid(T=1.0, N=32)
    out = simulate_mild(system, grid, brownian_increments(grid, 5, 0))
    for weighted in (True, False):
        curve = pth_moment_curve(out, 2, weighted=weighted)
        assert not curve.m.any()
    assert weighted_moment_sup(out, 2) == 0.0


def test_deterministic_replicated_paths_zero_half_width():
    grid = TimeGrid(T=1.0, N=16)
    single = closed_form_homogeneous(np.array([[-1.0]]), np.array([1.0]), 0.75, grid)
    stacked = PathEnsemble(values=np.repeat(single.values, 40, axis=0),
                           weighted=np.repeat(single.weighted, 40, axis=0),
                           grid=grid, scheme_tag="closed_form", master_seed=0, n_paths=40)
    curve = pth_moment_curve(stacked, 2, weighted=False)
    assert np.all(curve.half_width <= 1e-12 * np.maximum(curve.m, 1e-300))
    np.testing.assert_allclose(
        curve.m, np.linalg.norm(single.values[0, 1:], axis=1) ** 2, rtol=1e-14
    )


def test_unweighted_curve_excludes_origin():
    grid = TimeGrid(T=1.0, N=8)
    single = closed_form_homogeneous(np.array([[-1.0]]), np.array([1.0]), 0.75, grid)
    curve = pth_moment_curve(single, 2, weighted=False)
    assert curve.nodes[0] > 0.0
    assert len(curve.nodes) == grid.N
    weighted = pth_moment_curve(single, 2, weighted=True)
    assert weighted.nodes[0] == 0.0
    assert len(weighted.nodes) == grid.N + 1


def test_small_ensembles_report_nan_half_width():
    grid = TimeGrid(T=1.0, N=8)
    single = closed_form_homogeneous(np.array([[-1.0]]), np.array([1.0]), 0.75, grid)
    curve = pth_moment_curve(single, 2, weighted=True)
    assert np.all(np.isnan(curve.half_width))


def test_additive_noise_moment_curve_matches_ito_isometry():
    s, alpha = 0.3, 0.75
    system = SystemSpec(A=np.zeros((1, 1)), rho=np.zeros(1),
                        coeffs=make_additive_noise(s), order=ORDER)
    grid = TimeGrid(T=1.0, N=128)
    out = simulate_mild(system, grid, brownian_increments(grid, 4000, 31))
    curve = pth_moment_curve(out, 2, weighted=False)
    expected = s**2 * curve.nodes ** (2 * alpha - 1) / ((2 * alpha - 1) * gamma_fn(alpha) ** 2)
    # every node within 3 half-widths of the closed form
    assert np.all(np.abs(curve.m - expected) <= 3.0 * curve.half_width / 1.96 * 3.0)


def test_fourth_moment_inequality_additive_benchmark():
    # E|I(T)|^4 <= C_4 (int (E|f|^4)^{1/2})^2 = 36 v^2; Gaussian value is 3 v^2
    s = 0.3
    system = SystemSpec(A=np.zeros((1, 1)), rho=np.zeros(1),
                        coeffs=make_additive_noise(s), order=ORDER)
    grid = TimeGrid(T=1.0, N=128)
    out = simulate_mild(system, grid, brownian_increments(grid, 4000, 13))
    curve4 = pth_moment_curve(out, 4, weighted=False)
    v = s**2 * grid.T ** 0.5 / (0.5 * gamma_fn(0.75) ** 2)
    emp = curve4.m[-1]
    ci = curve4.half_width[-1] * 3.0 / 1.96
    assert emp <= 36.0 * v**2 + ci
    assert abs(emp - 3.0 * v**2) <= ci


def test_weighted_sup_homogeneous_at_origin_and_scaling():
    grid = TimeGrid(T=5.0, N=256)
    single = closed_form_homogeneous(np.array([[-1.0]]), np.array([1.0]), 0.75, grid)
    val = weighted_moment_sup(single, 2)
    assert val == pytest.approx((1.0 / gamma_fn(0.75)) ** 2, rel=1e-12)
    curve = pth_moment_curve(single, 2, weighted=True)
    assert int(np.argmax(curve.m)) == 0  # monotone decay confirmed by scan
    for c in (0.0, 0.5, 3.0):
        scaled = PathEnsemble(values=c * single.values, weighted=c * single.weighted,
                              grid=grid, scheme_tag="closed_form", master_seed=0, n_paths=1)
        assert weighted_moment_sup(scaled, 2) == pytest.approx(c**2 * val, rel=1e-12)


def test_moment_monotonicity_in_p():
    grid = TimeGrid(T=1.0, N=8)
    big = make_ensemble(np.full((3, 9, 1), 2.0), grid)
    small = make_ensemble(np.full((3, 9, 1), 0.5), grid)
    m_big = [pth_moment_curve(big, p, weighted=True).m for p in (2, 3, 4)]
    m_small = [pth_moment_curve(small, p, weighted=True).m for p in (2, 3, 4)]
    assert np.all(m_big[0] <= m_big[1]) and np.all(m_big[1] <= m_big[2])
    assert np.all(m_small[0] >= m_small[1]) and np.all(m_small[1] >= m_small[2])


def test_decay_fit_exact_power_law():
    t = np.linspace(0.0, 10.0, 101)
    m = np.zeros_like(t)
    m[1:] = t[1:] ** -2.0
    curve = MomentCurve(nodes=t, m=m, half_width=np.zeros_like(t), p=2, n_paths=100)
    fit = decay_fit(curve, 0.5)
    assert fit.slope == pytest.approx(-2.0, abs=1e-9)
    assert fit.slope_ci[1] - fit.slope_ci[0] < 1e-8
    assert fit.stable_p is None


def test_decay_fit_constant_curve():
    t = np.linspace(0.0, 10.0, 101)
    m = np.full_like(t, 3.0)
    curve = MomentCurve(nodes=t, m=m, half_width=np.zeros_like(t), p=2, n_paths=100)
    fit = decay_fit(curve, 0.5)
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_decay_fit_homogeneous_benchmark_slope():
    # kernel bound ||X(t)|| <~ t^(-a-1): the second moment decays at least
    # like t^(-2(a+1)) = t^(-3.5); recorded against the closed-form curve
    grid = TimeGrid(T=50.0, N=2000)
    single = closed_form_homogeneous(np.array([[-1.0]]), np.array([1.0]), 0.75, grid)
    curve = pth_moment_curve(single, 2, weighted=False)
    fit = decay_fit(curve, 0.5)
    assert fit.slope <= -1.0
    # leading asymptote is t^(-3.5); the next-order t^(-a) correction still
    # steepens the fit on this horizon
    assert -4.2 < fit.slope < -3.3


def test_decay_fit_degenerate_window():
    t = np.linspace(0.0, 1.0, 5)
    curve = MomentCurve(nodes=t, m=np.ones_like(t), half_width=np.zeros_like(t),
                        p=2, n_paths=100)
    with pytest.raises(ValueError):
        decay_fit(curve, 0.2)
    with pytest.raises(ValueError):
        decay_fit(curve, 1.2)


def test_stability_verdict_closed_form_benchmark():
    # zero-coefficient stable scalar system, ||rho|| below the admissible delta
    delta = 0.6
    rho = 0.5
    grid = TimeGrid(T=50.0, N=2000)
    single = closed_form_homogeneous(np.array([[-1.0]]), np.array([rho]), 0.75, grid)
    curve = pth_moment_curve(single, 2, weighted=True, rho_norm=rho)
    verdict = stability_verdict([curve], epsilon=1.0, delta=delta, tail_tol=1e-3)
    assert verdict.stable_p
    assert verdict.asymptotically_stable_p
    assert verdict.slope_ci[1] < 0.0


def test_stability_verdict_growth_fails_asymptotics():
    grid = TimeGrid(T=10.0, N=400)
    single = closed_form_homogeneous(np.array([[1.0]]), np.array([0.1]), 0.75, grid)
    curve = pth_moment_curve(single, 2, weighted=True, rho_norm=0.1)
    verdict = stability_verdict([curve], epsilon=1.0, delta=0.5, tail_tol=1e-3)
    assert not verdict.asymptotically_stable_p
    assert not verdict.stable_p  # the curve blows past epsilon


def test_stability_verdict_zero_initial_datum():
    z = np.zeros((1, 1))
    system = SystemSpec(A=np.array([[-1.0]]), rho=np.array([0.0]),
                        coeffs=make_linear(z, z, z), order=ORDER)
    grid = TimeGrid(T=10.0, N=256)
    out = simulate_mild(system, grid, brownian_increments(grid, 40, 0))
    curve = pth_moment_curve(out, 2, weighted=True, rho_norm=0.0)
    verdict = stability_verdict([curve], epsilon=0.1, delta=0.5, tail_tol=1e-12)
    assert verdict.stable_p and verdict.asymptotically_stable_p


def test_stability_verdict_preconditions():
    t = np.linspace(0, 1, 64)
    curve = MomentCurve(nodes=t, m=np.ones_like(t), half_width=np.zeros_like(t),
                        p=2, n_paths=100)
    with pytest.raises(ValueError):
        stability_verdict([curve], 1.0, 0.5, 1e-3)  # untagged
    tagged = MomentCurve(nodes=t, m=np.ones_like(t), half_width=np.zeros_like(t),
                         p=2, n_paths=100, rho_norm=0.9)
    with pytest.raises(ValueError):
        stability_verdict([tagged], 1.0, 0.5, 1e-3)  # ||rho|| >= delta
    with pytest.raises(ValueError):
        stability_verdict([], 1.0, 0.5, 1e-3)


def test_verdict_implication_enforced_structurally():
    with pytest.raises(ValueError):
        DecayVerdict(slope=-1.0, slope_ci=(-1.1, -0.9), window=(1.0, 2.0),
                     stable_p=False, asymptotically_stable_p=True)


def test_curve_length_validation():
    with pytest.raises(ValueError):
        MomentCurve(nodes=np.arange(3.0), m=np.arange(2.0),
                    half_width=np.arange(3.0), p=2, n_paths=10)
