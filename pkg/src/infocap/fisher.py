"""Fisher information matrices, the Cramér-Rao chain, Stam information, and
the per-channel metric-contracted channel information capacity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .metric import MetricSignature
from .quadrature import gauss_hermite_points
from .statmodel import (ChannelEvaluationError, ParameterVector,
                        ParametricModel, SampleBatch, log_likelihood, sample,
                        score)

CONDITION_LIMIT = 1e12


class SingularFisherError(ValueError):
    pass


class NonCausalChannelError(ValueError):
    """Stam information undefined: some channel has sigma^2 <= 0."""

    def __init__(self, channels):
        self.channels = list(channels)
        super().__init__(
            f"Stam undefined: non-causal channel(s) {self.channels}")


@dataclass(frozen=True)
class FisherMatrix:
    """d x d Fisher information with provenance tags."""

    matrix: np.ndarray
    kind: str            # "observed" | "expected"
    method: str          # "analytic" | "quadrature" | "mc(M=...)"
    theta: ParameterVector
    std_error: Optional[np.ndarray] = None  # entrywise, MC only

    @property
    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))

    def channel_block(self, n: int, obs_dim: int) -> np.ndarray:
        s = slice(n * obs_dim, (n + 1) * obs_dim)
        return self.matrix[s, s]


def invert_fisher(fm: FisherMatrix) -> np.ndarray:
    """Inverse via symmetric eigendecomposition with a condition-number guard."""
    sym = 0.5 * (fm.matrix + fm.matrix.T)
    vals, vecs = np.linalg.eigh(sym)
    if np.min(vals) <= 0.0 or np.max(vals) / np.min(vals) > CONDITION_LIMIT:
        raise SingularFisherError(
            f"CRLB undefined: Fisher matrix singular or ill-conditioned "
            f"(eigenvalues {vals.min():.3e}..{vals.max():.3e})")
    return (vecs / vals) @ vecs.T


def _fd_channel_hessian(model: ParametricModel, n: int, y_n, theta_n) -> np.ndarray:
    """Central second differences of the channel log-density in theta."""
    k = model.obs_dim
    f0 = model.point_log_density(n, y_n, theta_n)
    hess = np.empty((k, k))
    hs = np.array([max(model.fd_step, model.fd_step * abs(t)) for t in theta_n])

    def f(offset):
        return model.point_log_density(n, y_n, theta_n + offset)

    for i in range(k):
        ei = np.zeros(k)
        ei[i] = hs[i]
        hess[i, i] = (f(2 * ei) - 2.0 * f0 + f(-2 * ei)) / (4.0 * hs[i] ** 2)
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = hs[j]
            val = (f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)) \
                / (4.0 * hs[i] * hs[j])
            hess[i, j] = val
            hess[j, i] = val
    return hess


def _channel_hessian(model, n, y_n, theta_n) -> np.ndarray:
    if model.point_hessian is not None:
        h = np.asarray(model.point_hessian(n, y_n, theta_n), dtype=float)
    else:
        h = _fd_channel_hessian(model, n, y_n, theta_n)
    if not np.all(np.isfinite(h)):
        raise ChannelEvaluationError("non-finite log-density Hessian", n)
    return h


def observed_fisher(model: ParametricModel, theta: ParameterVector, y) -> FisherMatrix:
    """Negative Hessian of ln P at theta for one realization y.

    Cross-channel blocks are exactly zero: the joint log-likelihood is a sum
    of per-channel terms.
    """
    model.check_theta(theta)
    y = model.check_observation(y)
    d, k = model.parameter_size, model.obs_dim
    mat = np.zeros((d, d))
    for n in range(model.channel_count):
        blk = -_channel_hessian(model, n, y[n], theta.channels[n])
        mat[n * k:(n + 1) * k, n * k:(n + 1) * k] = blk
    return FisherMatrix(mat, "observed", "analytic" if model.point_hessian
                        else "finite-difference", theta)


def _gh_channel_expectations(model, theta, n, integrands: list, nodes):
    """Gauss-Hermite importance expectations of per-channel integrands.

    Integrates against the model's actual density (not the weight), so
    broken normalization shows up honestly.
    """
    if model.support.kind != "unbounded" or model.covariances is None:
        raise ValueError(
            "quadrature expectation requires unbounded support with a "
            "Gaussian-weight reference covariance")
    k = model.obs_dim
    z, w = gauss_hermite_points(k, nodes)
    chol = np.linalg.cholesky(model.covariances[n])
    y = theta.channels[n] + np.sqrt(2.0) * z @ chol.T
    jac = np.sqrt(2.0) ** k * np.prod(np.diag(chol))
    logp = np.array([model.point_log_density(n, yy, theta.channels[n]) for yy in y])
    dens = np.exp(logp + np.sum(z * z, axis=1)) * jac
    out = []
    for g in integrands:
        vals = np.array([g(n, yy, theta.channels[n]) for yy in y])
        out.append(np.tensordot(w * dens, vals, axes=(0, 0)))
    return out


def expected_fisher(model: ParametricModel, theta: ParameterVector,
                    method: str = "analytic", draws: int = 100_000,
                    seed: int = 0, nodes: int | None = None) -> FisherMatrix:
    """Expectation of the observed Fisher matrix (negative-Hessian form)."""
    model.check_theta(theta)
    d, k = model.parameter_size, model.obs_dim
    if method == "analytic":
        if model.fisher_block is None:
            raise ValueError("model has no analytic Fisher block; use "
                             "quadrature or mc")
        mat = np.zeros((d, d))
        for n in range(model.channel_count):
            mat[n * k:(n + 1) * k, n * k:(n + 1) * k] = \
                model.fisher_block(n, theta.channels[n])
        return FisherMatrix(mat, "expected", "analytic", theta)
    if method == "quadrature":
        mat = np.zeros((d, d))
        for n in range(model.channel_count):
            neg_hess = lambda nn, yy, tt: -_channel_hessian(model, nn, yy, tt)
            (blk,) = _gh_channel_expectations(model, theta, n, [neg_hess], nodes)
            mat[n * k:(n + 1) * k, n * k:(n + 1) * k] = blk
        return FisherMatrix(mat, "expected", "quadrature", theta)
    if method == "mc":
        batch = sample(model, theta, seed, draws)
        acc = np.zeros((d, d))
        acc2 = np.zeros((d, d))
        for m in range(batch.size):
            obs = observed_fisher(model, theta, batch.draws[m]).matrix
            acc += obs
            acc2 += obs * obs
        mean = acc / batch.size
        var = np.maximum(acc2 / batch.size - mean * mean, 0.0)
        se = np.sqrt(var / batch.size)
        return FisherMatrix(mean, "expected", f"mc(M={batch.size})", theta, se)
    raise ValueError(f"unknown method {method!r}")


def outer_form_fisher(model: ParametricModel, theta: ParameterVector,
                      method: str = "quadrature", draws: int = 100_000,
                      seed: int = 0, nodes: int | None = None) -> FisherMatrix:
    """Expected score outer product E[s s^T].

    Agreement with expected_fisher is the executable regularity identity.
    Off-diagonal channel blocks are E[s_n] E[s_m]^T (independence), which
    vanish exactly for regular models.
    """
    model.check_theta(theta)
    d, k = model.parameter_size, model.obs_dim
    if method == "analytic":
        # by regularity equals the negative-Hessian form for built-ins
        return FisherMatrix(expected_fisher(model, theta, "analytic").matrix,
                            "expected", "analytic", theta)
    if method == "quadrature":
        firsts = np.zeros((model.channel_count, k))
        mat = np.zeros((d, d))
        from .statmodel import _fd_channel_score
        score_fn = model.point_score or (
            lambda nn, yy, tt: _fd_channel_score(model, nn, yy, tt))
        outer_fn = lambda nn, yy, tt: np.outer(score_fn(nn, yy, tt),
                                               score_fn(nn, yy, tt))
        for n in range(model.channel_count):
            blk, first = _gh_channel_expectations(
                model, theta, n, [outer_fn, score_fn], nodes)
            mat[n * k:(n + 1) * k, n * k:(n + 1) * k] = blk
            firsts[n] = first
        for n in range(model.channel_count):
            for m in range(model.channel_count):
                if n != m:
                    mat[n * k:(n + 1) * k, m * k:(m + 1) * k] = \
                        np.outer(firsts[n], firsts[m])
        return FisherMatrix(mat, "expected", "quadrature", theta)
    if method == "mc":
        batch = sample(model, theta, seed, draws)
        acc = np.zeros((d, d))
        acc2 = np.zeros((d, d))
        for m in range(batch.size):
            s = score(model, theta, batch.draws[m])
            op = np.outer(s, s)
            acc += op
            acc2 += op * op
        mean = acc / batch.size
        var = np.maximum(acc2 / batch.size - mean * mean, 0.0)
        se = np.sqrt(var / batch.size)
        return FisherMatrix(mean, "expected", f"mc(M={batch.size})", theta, se)
    raise ValueError(f"unknown method {method!r}")


def channel_fisher(model: ParametricModel, theta: ParameterVector, n: int,
                   metric: MetricSignature, method: str = "analytic",
                   **kwargs) -> float:
    """Metric contraction of the channel-n block of the expected outer form.

    Euclidean signs give the block trace (nonnegative); Minkowski signs can
    make it negative.
    """
    if metric.dim != model.obs_dim:
        raise ValueError(
            f"metric dim {metric.dim} != observation dim {model.obs_dim}")
    if not 0 <= n < model.channel_count:
        raise IndexError(f"channel {n} out of range")
    fm = outer_form_fisher(model, theta, method, **kwargs)
    blk = fm.channel_block(n, model.obs_dim)
    return float(np.sum(metric.signs * np.diag(blk)))


@dataclass(frozen=True)
class CapacityResult:
    total: float
    per_channel: np.ndarray
    density: Callable[[np.ndarray], float]
    metric_kind: str
    method: str


def channel_capacity(model: ParametricModel, theta: ParameterVector,
                     metric: MetricSignature, method: str = "analytic",
                     **kwargs) -> CapacityResult:
    """I = sum over channels of the contracted per-channel Fisher information.

    The returned density handle evaluates i(y) = P(y) * sum_n tr_eta iF_nn(y),
    whose integral over the sample space is I.
    """
    if metric.dim != model.obs_dim:
        raise ValueError(
            f"metric dim {metric.dim} != observation dim {model.obs_dim}")
    fm = outer_form_fisher(model, theta, method, **kwargs)
    per = np.array([
        float(np.sum(metric.signs * np.diag(fm.channel_block(n, model.obs_dim))))
        for n in range(model.channel_count)])
    signs = metric.signs

    def density(y) -> float:
        ll = log_likelihood(model, theta, y)
        if ll == -np.inf:
            return 0.0
        yy = model.check_observation(y)
        tr = 0.0
        for n in range(model.channel_count):
            blk = -_channel_hessian(model, n, yy[n], theta.channels[n])
            tr += float(np.sum(signs * np.diag(blk)))
        return np.exp(ll) * tr

    return CapacityResult(float(np.sum(per)), per, density, metric.kind, method)


# ---------------------------------------------------------------------------
# Estimators and estimation reports
# ---------------------------------------------------------------------------

def identity_estimator(draws: np.ndarray) -> np.ndarray:
    """theta_hat = y: the sample-mean estimator for a sample of size one."""
    return draws


def constant_estimator(value) -> Callable[[np.ndarray], np.ndarray]:
    value = np.asarray(value, dtype=float)

    def est(draws: np.ndarray) -> np.ndarray:
        return np.broadcast_to(value, draws.shape).copy()

    return est


def noisy_estimator(tau: float, seed: int = 7) -> Callable[[np.ndarray], np.ndarray]:
    """Identity estimator inflated by N(0, tau^2) noise (deterministic per shape)."""

    def est(draws: np.ndarray) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(seed, spawn_key=(998,))))
        return draws + tau * rng.standard_normal(draws.shape)

    return est


@dataclass(frozen=True)
class ChannelVariance:
    channel: int
    sigma2: float
    std_error: float
    bias: np.ndarray
    bias_se: np.ndarray
    causal: bool


def estimator_variance(estimator, model: ParametricModel, theta: ParameterVector,
                       metric: MetricSignature, batch: SampleBatch,
                       spatial_only: bool = False) -> list[ChannelVariance]:
    """Metric-contracted second moment of theta_hat about theta, per channel.

    Under the Minkowski signature the contraction can be negative; the causal
    flag records sigma^2 >= 0.  Unbiasedness is not assumed: the report
    carries a Monte-Carlo bias estimate per component.
    """
    if metric.dim != model.obs_dim:
        raise ValueError(
            f"metric dim {metric.dim} != observation dim {model.obs_dim}")
    hats = np.asarray(estimator(batch.draws), dtype=float)
    if hats.shape != batch.draws.shape:
        raise ValueError(
            f"estimator output shape {hats.shape} != batch shape {batch.draws.shape}")
    if spatial_only:
        signs = np.ones(model.obs_dim)
        signs[0] = 0.0  # drop the temporal subchannel, Euclidean signs on the rest
    else:
        signs = metric.signs
    dev = hats - theta.channels[None, :, :]
    m = batch.size
    out = []
    for n in range(model.channel_count):
        v = np.sum(signs * dev[:, n, :] ** 2, axis=1)
        sigma2 = float(v.mean())
        se = float(v.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
        bias = dev[:, n, :].mean(axis=0)
        bias_se = dev[:, n, :].std(axis=0, ddof=1) / np.sqrt(m) if m > 1 \
            else np.zeros(model.obs_dim)
        out.append(ChannelVariance(n, sigma2, se, bias, bias_se,
                                   causal=sigma2 >= 0.0))
    return out


def stam_information(sigma2s) -> float:
    """Sum of reciprocal per-channel variances; requires every sigma^2 > 0."""
    sigma2s = [float(s) for s in sigma2s]
    bad = [n for n, s in enumerate(sigma2s) if s <= 0.0]
    if bad:
        raise NonCausalChannelError(bad)
    return float(sum(1.0 / s for s in sigma2s))


@dataclass(frozen=True)
class CRLBReport:
    index: int
    sigma2: float
    sigma2_se: float
    inverse_diag: float      # [I_F^{-1}]_{ii}
    reciprocal_diag: float   # 1 / [I_F]_{ii}
    bias: float
    bias_se: float
    unbiased: bool
    cr_holds: bool           # sigma2 >= inverse_diag at 4 SE
    chain_holds: bool        # inverse_diag >= reciprocal_diag

    @property
    def triple(self):
        return (self.sigma2, self.inverse_diag, self.reciprocal_diag)

    @property
    def applicable(self) -> bool:
        return self.unbiased


def crlb_check(model: ParametricModel, theta: ParameterVector, estimator,
               index: int, batch: SampleBatch,
               fisher_method: str = "analytic", **kwargs) -> CRLBReport:
    """Per-coordinate Cramér-Rao chain sigma^2_i >= [I_F^{-1}]_ii >= 1/[I_F]_ii.

    The coordinate variance here is the plain squared deviation of the flat
    component i (no metric contraction); a biased estimator marks the chain
    not-applicable instead of failing it.
    """
    model.check_theta(theta)
    fm = expected_fisher(model, theta, fisher_method, **kwargs)
    inv = invert_fisher(fm)
    d = model.parameter_size
    if not 0 <= index < d:
        raise IndexError(f"flat index {index} out of range for d={d}")
    hats = np.asarray(estimator(batch.draws), dtype=float)
    if hats.shape != batch.draws.shape:
        raise ValueError("estimator output shape mismatch")
    n, nu = divmod(index, model.obs_dim)
    dev = hats[:, n, nu] - theta.channels[n, nu]
    m = batch.size
    sigma2 = float(np.mean(dev ** 2))
    sigma2_se = float(np.std(dev ** 2, ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    bias = float(dev.mean())
    bias_se = float(dev.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    middle = float(inv[index, index])
    right = 1.0 / float(fm.matrix[index, index])
    unbiased = abs(bias) <= 4.0 * bias_se
    cr_holds = sigma2 >= middle - 4.0 * sigma2_se
    chain_holds = middle >= right - 1e-12 * max(1.0, abs(right))
    return CRLBReport(index, sigma2, sigma2_se, middle, right, bias, bias_se,
                      unbiased, cr_holds, chain_holds)


@dataclass(frozen=True)
class ChannelEstimate:
    channel: int
    sigma2: float
    sigma2_se: float
    stam: Optional[float]        # 1/sigma2 when sigma2 > 0
    fisher_eta: float            # I_Fn, metric-contracted
    causal: bool


@dataclass(frozen=True)
class EstimationReport:
    """Per-channel estimation summary plus the definitional totals."""

    channels: list
    stam_total: Optional[float]  # None when any channel is non-causal
    capacity: float
    crlb_inverse_diag: np.ndarray    # [I_F^{-1}]_ii per flat index
    crlb_reciprocal_diag: np.ndarray  # 1 / [I_F]_ii per flat index
    metric_kind: str

    @property
    def causality_flags(self) -> list:
        return [ce.causal for ce in self.channels]


def build_estimation_report(model: ParametricModel, theta: ParameterVector,
                            metric: MetricSignature, estimator,
                            batch: SampleBatch,
                            fisher_method: str = "analytic",
                            **kwargs) -> EstimationReport:
    """Assemble variances, Stam terms, contracted Fisher, and CRLB diagonals."""
    variances = estimator_variance(estimator, model, theta, metric, batch)
    fm = outer_form_fisher(model, theta, fisher_method, **kwargs)
    k = model.obs_dim
    per_eta = [float(np.sum(metric.signs * np.diag(fm.channel_block(n, k))))
               for n in range(model.channel_count)]
    inv = invert_fisher(expected_fisher(model, theta, fisher_method, **kwargs))
    channels = [
        ChannelEstimate(cv.channel, cv.sigma2, cv.std_error,
                        1.0 / cv.sigma2 if cv.sigma2 > 0 else None,
                        per_eta[cv.channel], cv.causal)
        for cv in variances]
    stam_total = (float(sum(ce.stam for ce in channels))
                  if all(ce.stam is not None for ce in channels) else None)
    return EstimationReport(
        channels, stam_total, float(sum(per_eta)),
        np.diag(inv).copy(), 1.0 / np.diag(fm.matrix), metric.kind)


@dataclass(frozen=True)
class StamCheck:
    stam: float
    stam_se: float
    capacity: float
    lower_ok: bool   # 0 <= I_S
    upper_ok: bool   # I_S <= I within tolerance
    margin: float    # I - I_S
    spatial_only: bool

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok


def stam_capacity_check(model: ParametricModel, theta: ParameterVector,
                        metric: MetricSignature, estimator, batch: SampleBatch,
                        fisher_method: str = "analytic",
                        spatial_only: bool = False, **kwargs) -> StamCheck:
    """Verify 0 <= I_S <= I at Monte-Carlo tolerance.

    ``spatial_only`` restricts both the estimator variance and the capacity
    contraction to the spatial subchannels (indices 1..k-1) with plain plus
    signs before comparing.
    """
    variances = estimator_variance(estimator, model, theta, metric, batch,
                                   spatial_only=spatial_only)
    sig2 = [cv.sigma2 for cv in variances]
    stam = stam_information(sig2)  # raises NonCausalChannelError if undefined
    # delta-method SE of sum 1/sigma^2
    stam_se = float(np.sqrt(sum((cv.std_error / cv.sigma2 ** 2) ** 2
                                for cv in variances)))
    fm = outer_form_fisher(model, theta, fisher_method, **kwargs)
    if spatial_only:
        signs = np.ones(model.obs_dim)
        signs[0] = 0.0
    else:
        signs = metric.signs
    cap = float(sum(np.sum(signs * np.diag(fm.channel_block(n, model.obs_dim)))
                    for n in range(model.channel_count)))
    lower_ok = stam >= -4.0 * stam_se
    upper_ok = stam <= cap + 4.0 * stam_se
    return StamCheck(stam, stam_se, cap, lower_ok, upper_ok, cap - stam,
                     spatial_only)


def capacity_over_rank(build_model, theta_for, metric: MetricSignature,
                       n_max: int, method: str = "analytic", **kwargs):
    """Capacity I tabulated for N = 1..n_max (reporting sweep, no selection).

    ``build_model(N)`` and ``theta_for(N)`` supply the scaled scenario.
    Returns rows (N, I, per-channel array) plus a monotonicity flag that is
    only meaningful when every channel contribution is nonnegative.
    """
    rows = []
    monotone = True
    applicable = True
    prev = None
    for n in range(1, n_max + 1):
        model = build_model(n)
        res = channel_capacity(model, theta_for(n), metric, method, **kwargs)
        if np.any(res.per_channel < 0):
            applicable = False
        if prev is not None and res.total < prev - 1e-12:
            monotone = False
        prev = res.total
        rows.append((n, res.total, res.per_channel))
    return rows, (monotone if applicable else None)
