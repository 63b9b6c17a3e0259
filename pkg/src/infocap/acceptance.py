"""Acceptance battery: the identity- and property-based exit criteria.

Each criterion returns a list of named checks with the measured value, its
bound, and the verdict.  ``run_all`` executes the battery (optionally
filtered by tag) and is the engine behind ``infocap verify`` and the
acceptance test module.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import loads_config
from .fisher import (channel_fisher, crlb_check, estimator_variance,
                     expected_fisher, identity_estimator, invert_fisher,
                     noisy_estimator, outer_form_fisher, stam_capacity_check)
from .fourier import (conjugate_symmetry_defect, euclidean_mass_squared,
                      forward_transform, fourier_information,
                      free_particle_capacity, inverse_transform, mass_squared,
                      momentum_capacity, parseval_check)
from .kinematic import (GridSpec, boost_field, capacity_from_amplitudes,
                        gauge_mode_field, gauge_normalization_check,
                        gaussian_amplitude_field, lorentz_condition_residual,
                        maxwell_capacity, measured_orders, plane_wave_field,
                        statistical_kinematic_consistency)
from .metric import BoostParameters, MetricSignature, contract
from .scenarios import run_scenario
from .statmodel import ParameterVector, gaussian_location_model, sample

SEED = 20260809
MC_DRAWS = 100_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    bound: float
    passed: bool
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "passed", bool(self.passed))

    @property
    def margin(self) -> float:
        return self.bound - self.value


def _leq(name: str, value: float, bound: float, note: str = "") -> CheckResult:
    return CheckResult(name, float(value), float(bound),
                       bool(value <= bound), note)


def _within(name: str, value: float, target: float, tol: float,
            note: str = "") -> CheckResult:
    return CheckResult(name, float(abs(value - target)), float(tol),
                       bool(abs(value - target) <= tol), note)


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------

_COV2 = [[1.0, 0.5], [0.5, 1.0]]
_COV4 = [[1.0, 0.2, 0.0, 0.0],
         [0.2, 1.5, 0.1, 0.0],
         [0.0, 0.1, 0.8, 0.0],
         [0.0, 0.0, 0.0, 2.0]]

_GAUSSIAN_BATTERY = [
    (1, 1, 2.0), (1, 2, _COV2), (1, 4, _COV4),
    (2, 1, 0.5), (2, 2, _COV2), (2, 4, np.diag([0.5, 1.0, 2.0, 4.0]).tolist()),
    (4, 1, 1.0), (4, 2, [[2.0, -0.3], [-0.3, 1.0]]), (4, 4, _COV4),
]

_battery_cache = None


def battery_fields():
    """Named normalized fields exercised by the Fourier-side criteria."""
    global _battery_cache
    if _battery_cache is not None:
        return _battery_cache
    two_pi = 2.0 * np.pi
    fields = []
    g1 = GridSpec([(0.0, two_pi)], [256], "periodic")
    fields.append(("mode_1d", plane_wave_field(g1, [[3]])))
    g2 = GridSpec([(-10.0, 10.0)] * 2, [96] * 2, "periodic")
    fields.append(("gauss_2d", gaussian_amplitude_field(g2, [0.9, 1.3])))
    g2m = GridSpec([(-12.0, 12.0)] * 2, [96] * 2, "periodic")
    fields.append(("mixture_2d", gaussian_amplitude_field(
        g2m, [1.0, 1.0], centers=[[-2.5, 0.0], [2.5, 0.5]])))
    g4 = GridSpec([(0.0, two_pi)] * 4, [16] * 4, "periodic")
    fields.append(("mode_4d", plane_wave_field(g4, [[5, 3, 0, 0]])))
    g4g = GridSpec([(-8.0, 8.0)] * 4, [24] * 4, "periodic")
    fields.append(("gauss_4d", gaussian_amplitude_field(g4g, [1.0, 0.8, 1.2, 1.0])))
    g4m = GridSpec([(0.0, two_pi)] * 4, [12] * 4, "periodic")
    gauge = gauge_mode_field(g4m, [0.5, 1.0, 0.0, 0.25], [2, 1, 0, 0])
    fields.append(("gauge_4d", gauge.amplitude_view()))
    _battery_cache = fields
    return fields


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

def criterion_regularity() -> list[CheckResult]:
    """expected_fisher == outer_form_fisher entrywise via quadrature."""
    out = []
    for n_ch, k, cov in _GAUSSIAN_BATTERY:
        model = gaussian_location_model(cov, channel_count=n_ch, obs_dim=k)
        theta = ParameterVector(0.3 * np.arange(n_ch * k).reshape(n_ch, k))
        fe = expected_fisher(model, theta, "quadrature")
        fo = outer_form_fisher(model, theta, "quadrature")
        diff = float(np.max(np.abs(fe.matrix - fo.matrix)))
        out.append(_leq(f"N={n_ch},k={k}", diff, 1e-8))
    return out


def criterion_cr_chain() -> list[CheckResult]:
    """sigma2_i >= [I^-1]_ii >= 1/I_ii at 4 MC standard errors."""
    out = []
    scenarios = [("identity", gaussian_location_model(1.0), [[0.0]]),
                 ("correlated", gaussian_location_model(_COV2), [[1.0, -0.5]])]
    for label, model, th in scenarios:
        theta = ParameterVector(np.asarray(th))
        batch = sample(model, theta, SEED, MC_DRAWS)
        for i in range(model.parameter_size):
            rep = crlb_check(model, theta, identity_estimator, i, batch)
            out.append(CheckResult(
                f"{label}_cr_i{i}", rep.inverse_diag - 4.0 * rep.sigma2_se,
                rep.sigma2, rep.cr_holds and rep.applicable,
                f"triple=({rep.sigma2:.5f},{rep.inverse_diag},"
                f"{rep.reciprocal_diag})"))
            out.append(CheckResult(
                f"{label}_chain_i{i}", rep.reciprocal_diag, rep.inverse_diag,
                rep.chain_holds))
    # analytic middle-vs-right gap for rho = 0.5
    model = gaussian_location_model(_COV2)
    theta = ParameterVector([[0.0, 0.0]])
    fm = expected_fisher(model, theta, "analytic")
    inv = invert_fisher(fm)
    out.append(_within("rho05_inverse_diag", float(inv[0, 0]), 1.0, 1e-10))
    out.append(_within("rho05_reciprocal_diag",
                       1.0 / float(fm.matrix[0, 0]), 0.75, 1e-10))
    return out


def criterion_stam_chain() -> list[CheckResult]:
    """0 <= I_S <= I; efficiency attains equality; Remark-2 spatial variant."""
    out = []
    model = gaussian_location_model(1.0, channel_count=3)
    theta = ParameterVector(np.array([[0.0], [1.0], [-2.0]]))
    metric = MetricSignature.euclidean(1)
    batch = sample(model, theta, SEED + 1, MC_DRAWS)
    sc = stam_capacity_check(model, theta, metric, identity_estimator, batch)
    out.append(CheckResult("efficient_lower", -4.0 * sc.stam_se, sc.stam,
                           sc.lower_ok))
    out.append(CheckResult("efficient_upper", sc.stam,
                           sc.capacity + 4.0 * sc.stam_se, sc.upper_ok))
    out.append(_leq("efficient_equality", abs(sc.stam - sc.capacity),
                    4.0 * sc.stam_se, f"I_S={sc.stam:.5f} I={sc.capacity}"))
    inflated = noisy_estimator(0.5, seed=SEED)
    sc2 = stam_capacity_check(model, theta, metric, inflated, batch)
    out.append(CheckResult("inflated_strict", sc2.stam,
                           sc2.capacity - 4.0 * sc2.stam_se,
                           sc2.stam < sc2.capacity - 4.0 * sc2.stam_se))
    model4 = gaussian_location_model(np.eye(4), channel_count=2)
    theta4 = ParameterVector(np.zeros((2, 4)))
    mink = MetricSignature.minkowski(4)
    batch4 = sample(model4, theta4, SEED + 2, MC_DRAWS // 2)
    sp = stam_capacity_check(model4, theta4, mink, identity_estimator, batch4,
                             spatial_only=True)
    out.append(CheckResult("spatial_lower", -4.0 * sp.stam_se, sp.stam,
                           sp.lower_ok))
    out.append(CheckResult("spatial_upper", sp.stam,
                           sp.capacity + 4.0 * sp.stam_se, sp.upper_ok))
    return out


def criterion_minkowski_indefinite() -> list[CheckResult]:
    """k=4 identity Gaussian: I_Fn = -2, estimator variance -2, flag raised."""
    model = gaussian_location_model(np.eye(4))
    theta = ParameterVector(np.zeros((1, 4)))
    mink = MetricSignature.minkowski(4)
    ifn = channel_fisher(model, theta, 0, mink, "quadrature")
    out = [_within("channel_fisher", ifn, -2.0, 1e-2)]
    batch = sample(model, theta, SEED + 3, MC_DRAWS)
    cv = estimator_variance(identity_estimator, model, theta, mink, batch)[0]
    out.append(_within("estimator_variance", cv.sigma2, -2.0,
                       4.0 * cv.std_error))
    out.append(CheckResult("causality_flag_raised", float(cv.causal), 0.0,
                           not cv.causal, "sigma2 < 0 must raise the flag"))
    return out


def criterion_form_triangle() -> list[CheckResult]:
    """Statistical, probability-form, and amplitude-form capacities agree."""
    out = []
    model = gaussian_location_model(1.0, channel_count=2)
    theta = ParameterVector(np.array([[0.7], [-1.2]]))
    metric = MetricSignature.euclidean(1)
    grid = GridSpec([(-10.0, 10.0)], [512], "truncated")
    rep = statistical_kinematic_consistency(
        model, theta, grid, metric, centers=[[0.7], [-1.2]])
    out.append(_leq("amplitude_vs_probability", rep.form_identity_diff, 1e-9))
    out.append(_leq("grid_vs_quadrature", rep.stat_kinematic_diff, 5e-3))
    errs = []
    for pts in (128, 256, 512):
        g = GridSpec([(-10.0, 10.0)], [pts], "truncated")
        r = statistical_kinematic_consistency(model, theta, g, metric,
                                              centers=[[0.7], [-1.2]])
        errs.append(abs(r.probability_form - r.statistical))
    orders = measured_orders(errs)
    for i, order in enumerate(orders):
        ok = 1.8 <= order <= 2.2
        out.append(CheckResult(f"convergence_order_{i}", order, 2.2, ok,
                               "O(h^2) window [1.8, 2.2]"))
    return out


def criterion_parseval() -> list[CheckResult]:
    """Measure preservation and round trip for every battery field."""
    out = []
    for name, f in battery_fields():
        mom = forward_transform(f)
        rep = parseval_check(f, mom)
        out.append(_leq(f"{name}_parseval", max(rep.diff, rep.gram_diff), 1e-10))
        back = inverse_transform(mom)
        rt = float(np.max(np.abs(back.components - f.components)))
        out.append(_leq(f"{name}_roundtrip", rt, 1e-12))
        out.append(_leq(f"{name}_conjugate_symmetry",
                        conjugate_symmetry_defect(mom), 1e-12))
    return out


def criterion_mass_identity() -> list[CheckResult]:
    """Single-mode mass/capacity chain and the lightlike boundary case."""
    two_pi = 2.0 * np.pi
    grid = GridSpec([(0.0, two_pi)] * 4, [16] * 4, "periodic")
    f = plane_wave_field(grid, [[5, 3, 0, 0]])
    mom = forward_transform(f)
    m2 = mass_squared(mom)
    cap = momentum_capacity(mom)
    out = [_within("mode_mass_squared", m2, 16.0, 1e-10),
           _within("mode_capacity", cap, 64.0, 1e-10)]
    free = free_particle_capacity(np.sqrt(m2), 1)
    out.append(_leq("free_particle_identity", abs(free - cap) / abs(cap), 1e-14))
    fl = plane_wave_field(grid, [[1, 1, 0, 0]])
    mol = forward_transform(fl)
    # the null weight annihilates the mode bins exactly; what remains is
    # FFT rounding crumbs, bounded at the double-precision noise floor
    out.append(_leq("lightlike_mass", abs(mass_squared(mol)), 1e-28,
                    "null dot zero at the mode bins"))
    out.append(_leq("lightlike_capacity", abs(momentum_capacity(mol)), 1e-28))
    return out


def criterion_fourier_information() -> list[CheckResult]:
    """K_F vanishes with the self-consistent mass; wrong mass gives the
    closed-form offset."""
    out = []
    for name, f in battery_fields():
        rep = fourier_information(f)
        bound = 1e-8 * max(1.0, abs(rep.position_capacity))
        out.append(_leq(f"{name}_kf", abs(rep.total), bound))
    grid = GridSpec([(0.0, 2.0 * np.pi)] * 4, [16] * 4, "periodic")
    f = plane_wave_field(grid, [[5, 3, 0, 0]])
    m_ext2 = 10.0
    rep = fourier_information(f, external_mass_squared=m_ext2)
    expected = 4.0 * 1 * (rep.mass_squared - m_ext2)
    out.append(_within("external_mass_offset", rep.total, expected,
                       1e-10 * max(1.0, abs(expected))))
    return out


def criterion_boost_invariance() -> list[CheckResult]:
    """Kinematic capacity of a 2D bump is boost invariant to 1% at 256^2."""
    mink = MetricSignature.minkowski(2)
    rels = []
    for pts in (128, 256):
        grid = GridSpec([(-12.0, 12.0)] * 2, [pts] * 2, "periodic")
        f = gaussian_amplitude_field(grid, [0.8, 1.25])
        before = capacity_from_amplitudes(f, mink)
        after = capacity_from_amplitudes(
            boost_field(f, BoostParameters(0.3, 1)), mink)
        rels.append(abs(after - before) / abs(before))
    return [
        _leq("relative_change_256", rels[1], 1e-2),
        CheckResult("error_shrinks_with_refinement", rels[1], rels[0],
                    rels[1] < rels[0], f"128^2: {rels[0]:.2e}"),
    ]


def criterion_maxwell() -> list[CheckResult]:
    """Gauge-mode capacity, Lorentz residuals, and a=2 normalization."""
    two_pi = 2.0 * np.pi
    grid = GridSpec([(0.0, two_pi)] * 4, [12] * 4, "periodic")
    mink = MetricSignature.minkowski(4)
    out = []
    eps = np.array([0.5, 1.0, 0.0, 0.25])
    mode = [2, 1, 0, 0]
    gf = gauge_mode_field(grid, eps, mode)
    i_val = maxwell_capacity(gf)
    epsn = eps / np.linalg.norm(eps)
    kvec = two_pi * np.asarray(mode, dtype=float) / np.asarray(grid.lengths)
    closed = 4.0 * gf.a ** 2 * contract(mink, epsn, epsn) \
        * contract(mink, kvec, kvec)
    out.append(_leq("mode_capacity", abs(i_val - closed) / abs(closed), 1e-3))
    gt = gauge_mode_field(grid, [0.0, 0.0, 1.0, 0.0], [1, 1, 0, 0])
    _, l2t = lorentz_condition_residual(gt)
    out.append(_leq("transverse_residual", l2t, 1e-6))
    gl = gauge_mode_field(grid, [1.0, 0.0, 0.0, 0.0], [1, 1, 0, 0])
    _, l2l = lorentz_condition_residual(gl)
    omega = two_pi / grid.lengths[0]
    expected = abs(omega) * np.sqrt(2.0 / grid.volume) * np.sqrt(grid.volume / 2.0)
    out.append(_leq("longitudinal_residual",
                    abs(l2l - expected) / expected, 1e-3))
    norm = gauge_normalization_check(gf)
    out.append(CheckResult("a2_equivalence_exact",
                           abs(norm.amplitude_integral - norm.gauge_integral),
                           0.0, norm.amplitude_integral == norm.gauge_integral,
                           "bitwise for a = 2"))
    return out


def criterion_euclidean_mass() -> list[CheckResult]:
    """All-plus spectral sum strictly positive for every battery field."""
    out = []
    for name, f in battery_fields():
        m2e = euclidean_mass_squared(forward_transform(f))
        out.append(CheckResult(f"{name}_allplus", 0.0, m2e, m2e > 0.0,
                               f"euclidean m^2 = {m2e:.6f}"))
    return out


_DETERMINISM_CONFIG = """
kind = "fisher"
seed = 11

[model]
family = "gaussian"
channels = 2
obs_dim = 1
theta = [[0.0], [1.0]]
covariance = 1.0

[metric]
kind = "euclidean"
dim = 1

[method]
name = "analytic"
draws = 20000
"""


def criterion_determinism() -> list[CheckResult]:
    """Identical config + seed produce byte-identical reports (sans timestamp)."""
    cfg = loads_config(_DETERMINISM_CONFIG)

    def render():
        rep = run_scenario(cfg)
        rep.pop("_csv_rows", None)
        rep.pop("timestamp_utc", None)
        return json.dumps(rep, indent=2, sort_keys=True)

    a, b = render(), render()
    return [CheckResult("byte_identical_reports", float(a != b), 0.0, a == b)]


@dataclass
class Criterion:
    number: int
    tag: str
    title: str
    fn: Callable[[], list]


CRITERIA = [
    Criterion(1, "regularity", "expected vs outer-form Fisher (quadrature 1e-8)",
              criterion_regularity),
    Criterion(2, "cr-chain", "CR chain sigma2 >= [I^-1]_ii >= 1/I_ii at 4 SE",
              criterion_cr_chain),
    Criterion(3, "stam", "Stam chain 0 <= I_S <= I with efficiency equality",
              criterion_stam_chain),
    Criterion(4, "minkowski", "Minkowski indefiniteness and causality flag",
              criterion_minkowski_indefinite),
    Criterion(5, "forms", "statistical/probability/amplitude form triangle",
              criterion_form_triangle),
    Criterion(6, "parseval", "measure preservation and round trip",
              criterion_parseval),
    Criterion(7, "mass", "mass/capacity identity chain for single modes",
              criterion_mass_identity),
    Criterion(8, "fourier-information", "K_F tautology and external-mass offset",
              criterion_fourier_information),
    Criterion(9, "boost", "boost invariance of the kinematic capacity",
              criterion_boost_invariance),
    Criterion(10, "maxwell", "gauge-mode capacity, residuals, a=2 normalization",
              criterion_maxwell),
    Criterion(11, "euclidean-mass", "no massless fields under all-plus signature",
              criterion_euclidean_mass),
    Criterion(12, "determinism", "deterministic reports and runtime budget",
              criterion_determinism),
]

RUNTIME_BUDGET_SECONDS = 300.0


@dataclass
class CriterionOutcome:
    criterion: Criterion
    checks: list
    elapsed: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst(self):
        failing = [c for c in self.checks if not c.passed]
        pool = failing or list(self.checks)
        return min(pool, key=lambda c: c.margin)


def run_all(filter_tag: str | None = None) -> tuple[list, float, bool]:
    """Run the battery; returns (outcomes, total elapsed, runtime_ok)."""
    outcomes = []
    start = time.monotonic()
    for crit in CRITERIA:
        if filter_tag and filter_tag not in crit.tag:
            continue
        t0 = time.monotonic()
        checks = crit.fn()
        outcomes.append(CriterionOutcome(crit, checks, time.monotonic() - t0))
    total = time.monotonic() - start
    runtime_ok = total < RUNTIME_BUDGET_SECONDS
    return outcomes, total, runtime_ok
