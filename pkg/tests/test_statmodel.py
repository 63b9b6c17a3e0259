import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infocap.statmodel import (ChannelEvaluationError, ParameterVector,
                               exponential_rate_model, expected_parameter_check,
                               gaussian_location_model, log_likelihood,
                               point_mass_model, sample, score,
                               score_mean_check, truncated_gaussian_model)

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def unit_gaussian(n=1):
    return gaussian_location_model(1.0, channel_count=n)


def test_parameter_vector_layout():
    theta = ParameterVector(np.arange(6.0).reshape(3, 2))
    assert theta.channel_count == 3 and theta.obs_dim == 2
    assert theta.flat_index(2, 1) == 5
    np.testing.assert_array_equal(theta.flat, np.arange(6.0))
    back = ParameterVector.from_flat(theta.flat, 3, 2)
    np.testing.assert_array_equal(back.channels, theta.channels)


@given(st.integers(1, 5), st.integers(1, 4))
def test_flat_index_bijection(n, k):
    theta = ParameterVector(np.zeros((n, k)))
    seen = {theta.flat_index(i, nu) for i in range(n) for nu in range(k)}
    assert seen == set(range(n * k))


def test_log_likelihood_two_unit_gaussians():
    model = unit_gaussian(2)
    theta = ParameterVector(np.zeros((2, 1)))
    val = log_likelihood(model, theta, np.zeros((2, 1)))
    assert val == pytest.approx(-2.0 * HALF_LOG_2PI, abs=1e-12)
    assert val == pytest.approx(-1.837877066409345, abs=1e-9)


def test_log_likelihood_single_offset():
    model = unit_gaussian(1)
    theta = ParameterVector([[0.0]])
    val = log_likelihood(model, theta, [[2.0]])
    assert val == pytest.approx(-HALF_LOG_2PI - 2.0, abs=1e-12)


def test_log_likelihood_sums_channels():
    model = gaussian_location_model(2.0, channel_count=3)
    theta = ParameterVector([[0.5], [-1.0], [2.0]])
    y = np.array([[0.1], [0.2], [0.3]])
    total = log_likelihood(model, theta, y)
    parts = sum(model.point_log_density(n, y[n], theta.channels[n])
                for n in range(3))
    assert total == pytest.approx(parts, rel=1e-15)


def test_score_unit_gaussian():
    model = unit_gaussian(1)
    theta = ParameterVector([[0.0]])
    np.testing.assert_allclose(score(model, theta, [[1.5]]), [1.5])
    np.testing.assert_allclose(score(model, theta, [[0.0]]), [0.0])


def test_finite_difference_score_matches_analytic():
    covs = [1.0, 4.0, np.diag([0.5, 2.0]), [[1.0, 0.5], [0.5, 1.0]]]
    rng = np.random.default_rng(3)
    for cov in covs:
        model = gaussian_location_model(cov, channel_count=2)
        fd_model = dataclasses.replace(model, point_score=None)
        theta = ParameterVector(rng.normal(size=(2, model.obs_dim)))
        y = rng.normal(size=(2, model.obs_dim))
        np.testing.assert_allclose(score(fd_model, theta, y),
                                   score(model, theta, y), atol=1e-6)


def test_score_channel_independence():
    model = gaussian_location_model(1.0, channel_count=3)
    theta = ParameterVector(np.zeros((3, 1)))
    y = np.array([[0.3], [1.0], [-0.4]])
    s0 = score(model, theta, y)
    y2 = y.copy()
    y2[1, 0] = 7.7  # perturb a different channel
    s1 = score(model, theta, y2)
    assert s0[0] == s1[0] and s0[2] == s1[2]
    assert s0[1] != s1[1]


@given(st.permutations(list(range(4))))
@settings(max_examples=20)
def test_loglik_invariant_under_joint_permutation(perm):
    model = gaussian_location_model(1.5, channel_count=4)
    rng = np.random.default_rng(11)
    theta = rng.normal(size=(4, 1))
    y = rng.normal(size=(4, 1))
    base = log_likelihood(model, ParameterVector(theta), y)
    permuted = log_likelihood(model, ParameterVector(theta[perm]), y[perm])
    assert permuted == pytest.approx(base, rel=1e-12)


def test_sampling_deterministic_and_unbiased():
    model = unit_gaussian(1)
    theta = ParameterVector([[3.0]])
    a = sample(model, theta, 2024, 100_000)
    b = sample(model, theta, 2024, 100_000)
    np.testing.assert_array_equal(a.draws, b.draws)
    assert abs(a.draws.mean() - 3.0) < 4.0 / np.sqrt(100_000)


def test_channel_streams_independent():
    # changing one channel's parameter must not disturb the other's draws
    model = unit_gaussian(2)
    a = sample(model, ParameterVector([[0.0], [0.0]]), 5, 500)
    b = sample(model, ParameterVector([[0.0], [9.0]]), 5, 500)
    np.testing.assert_array_equal(a.draws[:, 0, :], b.draws[:, 0, :])
    assert not np.array_equal(a.draws[:, 1, :], b.draws[:, 1, :])


def test_sample_rejects_empty_batch():
    model = unit_gaussian(1)
    with pytest.raises(ValueError):
        sample(model, ParameterVector([[0.0]]), 1, 0)


def test_builtin_densities_normalized():
    # independent oracle: plain grid integration over +-10 sigma
    for cov, pts_per_axis in ((1.0, 801), (4.0, 801),
                              ([[1.0, 0.5], [0.5, 1.0]], 301)):
        model = gaussian_location_model(cov)
        k = model.obs_dim
        axes = [np.linspace(-10 * np.sqrt(model.covariances[0][i, i]),
                            10 * np.sqrt(model.covariances[0][i, i]),
                            pts_per_axis) for i in range(k)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        vals = np.array([model.point_log_density(0, p, np.zeros(k)) for p in pts])
        vol = np.prod([ax[1] - ax[0] for ax in axes])
        assert abs(np.exp(vals).sum() * vol - 1.0) < 1e-6


def test_registration_rejects_miscaled_density():
    with pytest.raises(ValueError):
        gaussian_location_model(-1.0)  # not a covariance at all


def test_out_of_support_is_minus_infinity():
    model = exponential_rate_model(1)
    theta = ParameterVector([[2.0]])
    assert log_likelihood(model, theta, [[-1.0]]) == -np.inf


def test_expected_parameter_check_gaussian_passes():
    model = unit_gaussian(2)
    theta = ParameterVector([[0.0], [5.0]])
    batch = sample(model, theta, 7, 50_000)
    reports = expected_parameter_check(model, theta, batch)
    assert all(r.passed for r in reports)


def test_expected_parameter_check_point_mass_exact():
    model = point_mass_model(2, 3)
    theta = ParameterVector(np.arange(6.0).reshape(2, 3))
    batch = sample(model, theta, 1, 100)
    reports = expected_parameter_check(model, theta, batch)
    for r in reports:
        assert r.passed
        np.testing.assert_array_equal(r.mc_mean, r.target)


def test_expected_parameter_check_rejects_rate_model():
    model = exponential_rate_model(1)
    theta = ParameterVector([[2.0]])
    batch = sample(model, theta, 1, 100)
    with pytest.raises(ValueError, match="mean-parameterized"):
        expected_parameter_check(model, theta, batch)


def test_score_mean_quadrature_gaussian():
    model = gaussian_location_model([[1.0, 0.3], [0.3, 2.0]], channel_count=2)
    theta = ParameterVector([[0.0, 1.0], [2.0, -1.0]])
    rep = score_mean_check(model, theta, "quadrature")
    assert rep.passed
    assert np.max(rep.score_residuals) < 1e-10
    assert np.max(rep.mass_residuals) < 1e-12


def test_score_mean_mc_gaussian():
    model = unit_gaussian(2)
    theta = ParameterVector([[0.0], [3.0]])
    rep = score_mean_check(model, theta, "mc", draws=50_000, seed=5)
    assert rep.passed


def test_score_mean_mc_truncated_renormalized():
    # finite-difference score path plus rejection sampling
    model = truncated_gaussian_model([-2.0], [2.0], sigma=1.0)
    theta = ParameterVector([[0.3]])
    rep = score_mean_check(model, theta, "mc", draws=20_000, seed=6)
    assert rep.passed


def test_score_mean_detects_broken_normalization():
    # fixed-box truncation without renormalization makes the box mass depend
    # on theta, so E[score] = d log Z / d theta != 0
    model = truncated_gaussian_model([-1.0], [3.0], sigma=1.0,
                                     renormalize=False)
    theta = ParameterVector([[0.5]])
    rep = score_mean_check(model, theta, "mc", draws=40_000, seed=8)
    assert not rep.passed
    assert rep.score_residuals[0] > 0.05


def test_scaled_density_fails_mass_residual():
    # a constant x1.1 scaling leaves the score mean at zero (the scaling is
    # theta-independent) but the unit-mass side of the regularity condition
    # catches it
    base = gaussian_location_model(1.0)
    scaled = dataclasses.replace(
        base,
        point_log_density=lambda n, y, t: base.point_log_density(n, y, t)
        + np.log(1.1),
        point_score=None, point_hessian=None, fisher_block=None)
    theta = ParameterVector([[0.0]])
    rep = score_mean_check(scaled, theta, "quadrature")
    assert not rep.passed
    assert abs(rep.mass_residuals[0] - 0.1) < 1e-6
    assert np.max(rep.score_residuals) < 1e-8


def test_score_mean_quadrature_needs_gaussian_weight():
    model = exponential_rate_model(1)
    theta = ParameterVector([[2.0]])
    with pytest.raises(ValueError, match="Gauss-Hermite|unbounded"):
        score_mean_check(model, theta, "quadrature")


def test_nonfinite_score_raises_with_channel():
    model = unit_gaussian(2)
    bad = dataclasses.replace(
        model, point_score=lambda n, y, t: np.array([np.nan]))
    theta = ParameterVector(np.zeros((2, 1)))
    with pytest.raises(ChannelEvaluationError, match="channel 0"):
        score(bad, theta, np.zeros((2, 1)))


def test_batch_csv_roundtrip(tmp_path):
    model = unit_gaussian(2)
    theta = ParameterVector([[0.0], [1.0]])
    batch = sample(model, theta, 3, 50)
    path = tmp_path / "draws.csv"
    batch.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data, batch.draws.reshape(50, 2))
