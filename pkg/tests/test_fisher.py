import dataclasses

import numpy as np
import pytest

from infocap.fisher import (NonCausalChannelError, SingularFisherError,
                            channel_capacity, channel_fisher, constant_estimator,
                            capacity_over_rank, crlb_check, estimator_variance,
                            expected_fisher, identity_estimator, invert_fisher,
                            noisy_estimator, observed_fisher, outer_form_fisher,
                            stam_capacity_check, stam_information)
from infocap.metric import MetricSignature
from infocap.statmodel import (ParameterVector, gaussian_location_model,
                               sample, truncated_gaussian_model)

EUCLID1 = MetricSignature.euclidean(1)
EUCLID3 = MetricSignature.euclidean(3)
MINK4 = MetricSignature.minkowski(4)


def theta_zeros(n, k):
    return ParameterVector(np.zeros((n, k)))


def test_observed_fisher_unit_gaussian():
    model = gaussian_location_model(1.0, channel_count=2)
    fm = observed_fisher(model, theta_zeros(2, 1), [[0.3], [5.0]])
    np.testing.assert_allclose(fm.matrix, np.eye(2), atol=1e-12)


def test_observed_fisher_variance_four():
    model = gaussian_location_model(4.0)
    fm = observed_fisher(model, theta_zeros(1, 1), [[1.7]])
    assert fm.matrix[0, 0] == pytest.approx(0.25, abs=1e-12)


def test_observed_fisher_finite_difference_oracle():
    # drop the analytic Hessian: the central-difference path must agree
    model = gaussian_location_model([[1.0, 0.5], [0.5, 2.0]])
    fd_model = dataclasses.replace(model, point_hessian=None)
    theta = ParameterVector([[0.4, -0.2]])
    y = np.array([[1.0, 0.5]])
    a = observed_fisher(model, theta, y).matrix
    b = observed_fisher(fd_model, theta, y).matrix
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_cross_channel_blocks_exactly_zero():
    model = gaussian_location_model(1.0, channel_count=3, obs_dim=1)
    fm = observed_fisher(model, theta_zeros(3, 1), np.ones((3, 1)))
    off = fm.matrix - np.diag(np.diag(fm.matrix))
    assert np.all(off == 0.0)


def test_expected_fisher_quadrature_matches_analytic():
    cases = [(2.0, 1), (np.eye(4), 4), ([[1.0, 0.5], [0.5, 1.0]], 2)]
    for cov, k in cases:
        model = gaussian_location_model(cov, obs_dim=k)
        fa = expected_fisher(model, theta_zeros(1, k), "analytic").matrix
        fq = expected_fisher(model, theta_zeros(1, k), "quadrature").matrix
        np.testing.assert_allclose(fa, fq, atol=1e-10)


def test_expected_fisher_sigma2_closed_form():
    model = gaussian_location_model(4.0)
    fm = expected_fisher(model, theta_zeros(1, 1), "quadrature")
    assert fm.matrix[0, 0] == pytest.approx(0.25, abs=1e-10)


def test_outer_form_matches_hessian_form():
    model = gaussian_location_model([[1.0, 0.3], [0.3, 1.5]], channel_count=2)
    theta = ParameterVector([[0.0, 0.0], [1.0, -1.0]])
    fe = expected_fisher(model, theta, "quadrature").matrix
    fo = outer_form_fisher(model, theta, "quadrature").matrix
    assert np.max(np.abs(fe - fo)) < 1e-8


def test_outer_form_mc_within_standard_errors():
    model = gaussian_location_model(1.0, channel_count=2)
    theta = theta_zeros(2, 1)
    fo = outer_form_fisher(model, theta, "mc", draws=20_000, seed=3)
    fa = expected_fisher(model, theta, "analytic").matrix
    err = np.abs(fo.matrix - fa)
    assert np.all(err <= 5.0 * fo.std_error + 1e-12)


def test_misnormalized_model_breaks_form_equivalence():
    # theta-dependent box mass: E[-hess] and E[s s^T] genuinely disagree
    model = truncated_gaussian_model([-1.0], [3.0], sigma=1.0,
                                     renormalize=False)
    theta = ParameterVector([[0.5]])
    fe = expected_fisher(model, theta, "mc", draws=20_000, seed=4)
    fo = outer_form_fisher(model, theta, "mc", draws=20_000, seed=4)
    gap = abs(fe.matrix[0, 0] - fo.matrix[0, 0])
    noise = 5.0 * float(fe.std_error[0, 0] + fo.std_error[0, 0])
    assert gap > max(noise, 0.05)


def test_fisher_matrices_symmetric():
    model = gaussian_location_model([[1.0, 0.4], [0.4, 2.0]], channel_count=2)
    theta = ParameterVector([[0.1, -0.2], [1.0, 0.5]])
    y = np.array([[0.3, 0.1], [0.9, 0.2]])
    assert observed_fisher(model, theta, y).asymmetry <= 1e-12
    assert expected_fisher(model, theta, "quadrature").asymmetry <= 1e-12
    assert outer_form_fisher(model, theta, "quadrature").asymmetry <= 1e-12


def test_quadrature_requires_unbounded_support():
    model = truncated_gaussian_model([-2.0], [2.0])
    theta = ParameterVector([[0.0]])
    with pytest.raises(ValueError, match="unbounded"):
        expected_fisher(model, theta, "quadrature")


def test_channel_fisher_values():
    model = gaussian_location_model(np.eye(3))
    assert channel_fisher(model, theta_zeros(1, 3), 0, EUCLID3,
                          "quadrature") == pytest.approx(3.0, abs=1e-9)
    model4 = gaussian_location_model(np.eye(4))
    assert channel_fisher(model4, theta_zeros(1, 4), 0, MINK4,
                          "quadrature") == pytest.approx(-2.0, abs=1e-9)
    model1 = gaussian_location_model(4.0)
    assert channel_fisher(model1, theta_zeros(1, 1), 0, EUCLID1,
                          "analytic") == pytest.approx(0.25, abs=1e-12)


def test_channel_fisher_dimension_mismatch():
    model = gaussian_location_model(np.eye(3))
    with pytest.raises(ValueError):
        channel_fisher(model, theta_zeros(1, 3), 0, MINK4)


def test_estimator_variance_minkowski_indefinite():
    model = gaussian_location_model(np.eye(4))
    theta = theta_zeros(1, 4)
    batch = sample(model, theta, 11, 50_000)
    cv = estimator_variance(identity_estimator, model, theta, MINK4, batch)[0]
    assert abs(cv.sigma2 - (-2.0)) <= 4.0 * cv.std_error
    assert not cv.causal


def test_estimator_variance_euclidean():
    model = gaussian_location_model(np.eye(3))
    theta = theta_zeros(1, 3)
    batch = sample(model, theta, 12, 50_000)
    cv = estimator_variance(identity_estimator, model, theta, EUCLID3, batch)[0]
    assert abs(cv.sigma2 - 3.0) <= 4.0 * cv.std_error
    assert cv.causal


def test_estimator_variance_oracle_constant():
    model = gaussian_location_model(np.eye(3))
    theta = ParameterVector([[1.0, 2.0, 3.0]])
    batch = sample(model, theta, 13, 1000)
    cv = estimator_variance(constant_estimator([1.0, 2.0, 3.0]), model, theta,
                            EUCLID3, batch)[0]
    assert cv.sigma2 == 0.0 and cv.causal


def test_estimator_shape_mismatch():
    model = gaussian_location_model(1.0)
    theta = theta_zeros(1, 1)
    batch = sample(model, theta, 14, 100)
    with pytest.raises(ValueError, match="shape"):
        estimator_variance(lambda d: d[..., 0], model, theta, EUCLID1, batch)


def test_crlb_triple_unit_gaussian():
    model = gaussian_location_model(1.0)
    theta = theta_zeros(1, 1)
    batch = sample(model, theta, 15, 100_000)
    rep = crlb_check(model, theta, identity_estimator, 0, batch)
    assert rep.applicable and rep.cr_holds and rep.chain_holds
    assert rep.inverse_diag == pytest.approx(1.0, abs=1e-12)
    assert rep.reciprocal_diag == pytest.approx(1.0, abs=1e-12)
    assert rep.sigma2 == pytest.approx(1.0, abs=4.0 * rep.sigma2_se)


def test_crlb_correlated_gap():
    # rho = 0.5: [I^-1]_11 = Sigma_11 = 1, 1/I_11 = 0.75; oracle: numpy inverse
    cov = np.array([[1.0, 0.5], [0.5, 1.0]])
    model = gaussian_location_model(cov)
    theta = theta_zeros(1, 2)
    fm = expected_fisher(model, theta, "analytic")
    oracle_inv = np.linalg.inv(fm.matrix)
    assert abs(oracle_inv[0, 0] - 1.0) < 1e-10
    assert abs(1.0 / fm.matrix[0, 0] - 0.75) < 1e-10
    np.testing.assert_allclose(invert_fisher(fm), oracle_inv, atol=1e-12)
    batch = sample(model, theta, 16, 100_000)
    rep = crlb_check(model, theta, identity_estimator, 0, batch)
    assert rep.cr_holds and rep.chain_holds
    assert rep.inverse_diag > rep.reciprocal_diag


def test_crlb_biased_estimator_not_applicable():
    model = gaussian_location_model(1.0)
    theta = ParameterVector([[5.0]])
    batch = sample(model, theta, 17, 10_000)
    rep = crlb_check(model, theta, constant_estimator([0.0]), 0, batch)
    assert not rep.applicable
    assert rep.bias == pytest.approx(-5.0, abs=0.01)


def test_singular_fisher_raises():
    model = gaussian_location_model(np.diag([1.0, 1e14]))
    theta = theta_zeros(1, 2)
    batch = sample(model, theta, 18, 100)
    with pytest.raises(SingularFisherError, match="CRLB undefined"):
        crlb_check(model, theta, identity_estimator, 0, batch)


def test_stam_information_values():
    assert stam_information([3.0, 3.0]) == pytest.approx(2.0 / 3.0)
    assert stam_information([1.0]) == 1.0
    with pytest.raises(NonCausalChannelError) as err:
        stam_information([1.0, -2.0, 0.0])
    assert err.value.channels == [1, 2]


def test_stam_chain_efficient_equality():
    model = gaussian_location_model(1.0, channel_count=2)
    theta = ParameterVector([[0.0], [4.0]])
    batch = sample(model, theta, 19, 100_000)
    sc = stam_capacity_check(model, theta, EUCLID1, identity_estimator, batch)
    assert sc.passed
    assert abs(sc.stam - sc.capacity) <= 4.0 * sc.stam_se


def test_stam_chain_inflated_strict():
    model = gaussian_location_model(1.0, channel_count=2)
    theta = theta_zeros(2, 1)
    batch = sample(model, theta, 20, 100_000)
    sc = stam_capacity_check(model, theta, EUCLID1,
                             noisy_estimator(0.5, seed=2), batch)
    assert sc.passed
    assert sc.stam < sc.capacity - 4.0 * sc.stam_se


def test_stam_spatial_only_remark2():
    model = gaussian_location_model(np.eye(4), channel_count=2)
    theta = theta_zeros(2, 4)
    batch = sample(model, theta, 21, 50_000)
    sc = stam_capacity_check(model, theta, MINK4, identity_estimator, batch,
                             spatial_only=True)
    assert sc.passed
    assert sc.capacity == pytest.approx(6.0, abs=1e-9)
    assert sc.stam == pytest.approx(2.0 / 3.0, rel=0.05)


def test_capacity_additive_channels():
    model = gaussian_location_model(np.eye(3), channel_count=2)
    res = channel_capacity(model, theta_zeros(2, 3), EUCLID3)
    assert res.total == pytest.approx(6.0, abs=1e-12)
    np.testing.assert_allclose(res.per_channel, [3.0, 3.0], atol=1e-12)


def test_capacity_minkowski_value():
    model = gaussian_location_model(np.eye(4))
    res = channel_capacity(model, theta_zeros(1, 4), MINK4, "quadrature")
    assert res.total == pytest.approx(-2.0, abs=1e-9)


def test_capacity_density_integrates_to_capacity():
    # independent trapezoid oracle over +-10 sigma
    model = gaussian_location_model(1.0)
    theta = theta_zeros(1, 1)
    res = channel_capacity(model, theta, EUCLID1)
    ys = np.linspace(-10, 10, 4001)
    vals = np.array([res.density([[y]]) for y in ys])
    integral = np.trapezoid(vals, ys)
    assert abs(integral - res.total) < 1e-8


def test_euclidean_channel_fisher_nonnegative():
    # sum-of-squares contraction: every channel contribution is >= 0
    rng = np.random.default_rng(9)
    for _ in range(5):
        a = rng.normal(size=(3, 3))
        cov = a @ a.T + 0.5 * np.eye(3)
        model = gaussian_location_model(cov, channel_count=2)
        theta = ParameterVector(rng.normal(size=(2, 3)))
        for n in range(2):
            assert channel_fisher(model, theta, n, EUCLID3,
                                  "quadrature") >= 0.0


def test_estimation_report_definitional_sums():
    from infocap.fisher import build_estimation_report

    model = gaussian_location_model(np.eye(3), channel_count=2)
    theta = theta_zeros(2, 3)
    batch = sample(model, theta, 22, 20_000)
    rep = build_estimation_report(model, theta, EUCLID3, identity_estimator,
                                  batch)
    assert rep.stam_total == pytest.approx(
        sum(ce.stam for ce in rep.channels), rel=1e-15)
    assert rep.capacity == pytest.approx(
        sum(ce.fisher_eta for ce in rep.channels), rel=1e-15)
    assert rep.capacity == pytest.approx(6.0, abs=1e-12)
    assert rep.causality_flags == [True, True]
    np.testing.assert_allclose(rep.crlb_inverse_diag, np.ones(6), atol=1e-12)
    np.testing.assert_allclose(rep.crlb_reciprocal_diag, np.ones(6), atol=1e-12)


def test_estimation_report_minkowski_stam_undefined():
    from infocap.fisher import build_estimation_report

    model = gaussian_location_model(np.eye(4))
    theta = theta_zeros(1, 4)
    batch = sample(model, theta, 23, 20_000)
    rep = build_estimation_report(model, theta, MINK4, identity_estimator,
                                  batch)
    assert rep.stam_total is None
    assert rep.channels[0].stam is None
    assert rep.causality_flags == [False]
    assert rep.capacity == pytest.approx(-2.0, abs=1e-9)


def test_capacity_over_rank_monotone():
    build = lambda n: gaussian_location_model(np.eye(3), channel_count=n)
    theta = lambda n: theta_zeros(n, 3)
    rows, monotone = capacity_over_rank(build, theta, EUCLID3, 4)
    assert [r[0] for r in rows] == [1, 2, 3, 4]
    np.testing.assert_allclose([r[1] for r in rows], [3.0, 6.0, 9.0, 12.0],
                               atol=1e-12)
    assert monotone is True


def test_capacity_over_rank_not_applicable_for_minkowski():
    build = lambda n: gaussian_location_model(np.eye(4), channel_count=n)
    theta = lambda n: theta_zeros(n, 4)
    rows, monotone = capacity_over_rank(build, theta, MINK4, 2)
    assert monotone is None
    assert rows[0][1] == pytest.approx(-2.0, abs=1e-12)
