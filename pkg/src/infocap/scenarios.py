"""Scenario execution: build objects from a validated config, run the
requested computation, and emit a structured report with pass/fail checks."""
from __future__ import annotations

import datetime
import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ScenarioConfig
from .fisher import (build_estimation_report, channel_capacity,
                     constant_estimator, crlb_check, expected_fisher,
                     identity_estimator, noisy_estimator, outer_form_fisher,
                     stam_capacity_check)
from .fourier import (PhysicalConstants, conjugate_symmetry_defect,
                      forward_transform, fourier_information,
                      free_particle_capacity, inverse_transform, mass_squared,
                      momentum_capacity, parseval_check, tachyon_check)
from .kinematic import (AmplitudeField, GridSpec, boost_field,
                        capacity_from_amplitudes, capacity_from_probabilities,
                        gauge_mode_field, gauge_normalization_check,
                        gaussian_amplitude_field, grid_integral,
                        lorentz_condition_residual, maxwell_capacity,
                        mixture_density, plane_wave_field,
                        statistical_kinematic_consistency,
                        wrap_continuity_report)
from .metric import BoostParameters, MetricSignature, contract
from .statmodel import ParameterVector, gaussian_location_model, sample

DEFAULT_TOLERANCES = {
    "mc_se_factor": 4.0,
    "regularity": 1e-8,
    "form_identity": 1e-9,
    "consistency": 5e-3,
    "parseval": 1e-10,
    "roundtrip": 1e-12,
    "fourier_information": 1e-8,
    "capacity_rel": 1e-3,
    "residual": 1e-6,
    "normalization": 1e-6,
    "boost_rel": 1e-2,
    "identity_rel": 1e-14,
    "external_offset": 1e-10,
}


def _check(name, lhs, rhs, tol):
    margin = tol - abs(lhs - rhs)
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs),
            "tolerance": float(tol), "margin": float(margin),
            "pass": bool(margin >= 0.0)}


def _check_ge(name, lhs, rhs, tol):
    margin = lhs - rhs + tol
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs),
            "tolerance": float(tol), "margin": float(margin),
            "pass": bool(margin >= 0.0)}


def _matrix_payload(fm):
    return {"kind": fm.kind, "method": fm.method, "rows": fm.matrix.shape[0],
            "data": [float(v) for v in fm.matrix.reshape(-1)]}


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_metric(cfg: ScenarioConfig) -> MetricSignature:
    t = cfg.table("metric", required=True)
    try:
        return MetricSignature.from_name(t["kind"], int(t["dim"]))
    except KeyError as exc:
        raise ConfigError(f"[metric] missing key {exc}") from exc


def build_model(cfg: ScenarioConfig, channels_override=None):
    t = cfg.table("model", required=True)
    family = t.get("family", "gaussian")
    if family != "gaussian":
        raise ConfigError(f"unsupported model family {family!r} (v1: gaussian)")
    try:
        channels = int(channels_override or t["channels"])
        theta_raw = t["theta"]
        cov = t["covariance"]
    except KeyError as exc:
        raise ConfigError(f"[model] missing key {exc}") from exc
    obs_dim = int(t.get("obs_dim", 0)) or None
    theta = np.asarray(theta_raw, dtype=float)
    if theta.ndim == 1:
        theta = np.tile(theta, (channels, 1))
    elif theta.shape[0] != channels:
        if channels_override is not None:
            theta = np.tile(theta[0], (channels, 1))
        else:
            raise ConfigError("[model] theta rows must match channels")
    if isinstance(cov, list) and cov and isinstance(cov[0], list) \
            and cov and isinstance(cov[0][0], list):
        covs = list(cov)
        if channels_override is not None:
            covs = [covs[0]] * channels
        model = gaussian_location_model(covs, obs_dim=obs_dim)
    else:
        model = gaussian_location_model(cov, channel_count=channels,
                                        obs_dim=obs_dim)
    if model.obs_dim != theta.shape[1]:
        raise ConfigError("[model] theta component count != obs_dim")
    return model, ParameterVector(theta)


def build_grid(cfg: ScenarioConfig) -> GridSpec:
    t = cfg.table("grid", required=True)
    try:
        return GridSpec(tuple(tuple(e) for e in t["extents"]),
                        tuple(t["points"]), t.get("boundary", "truncated"))
    except KeyError as exc:
        raise ConfigError(f"[grid] missing key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from exc


def build_field(cfg: ScenarioConfig, grid: GridSpec):
    t = cfg.table("field", required=True)
    ctor = t.get("constructor")
    try:
        if ctor == "gaussian":
            widths = [None if w == 0 else float(w) for w in t["widths"]]
            centers = t.get("centers")
            return gaussian_amplitude_field(grid, widths, centers)
        if ctor == "plane_wave":
            return plane_wave_field(grid, t["modes"],
                                    phase=float(t.get("phase", 0.35)))
        if ctor == "gauge_mode":
            return gauge_mode_field(grid, t["epsilon"], t["mode"],
                                    a=float(t.get("proportionality", 2.0)),
                                    phase=float(t.get("phase", 0.35)))
    except KeyError as exc:
        raise ConfigError(f"[field] {ctor} constructor missing key {exc}") from exc
    raise ConfigError(f"unknown field constructor {ctor!r} "
                      "(gaussian|plane_wave|gauge_mode)")


def build_estimator(cfg: ScenarioConfig, seed: int):
    t = cfg.table("estimator")
    name = t.get("name", "identity")
    if name == "identity":
        return identity_estimator, "identity"
    if name == "constant":
        if "value" not in t:
            raise ConfigError("[estimator] constant needs 'value'")
        return constant_estimator(np.asarray(t["value"], dtype=float)), "constant"
    if name == "noisy":
        return noisy_estimator(float(t.get("tau", 0.5)), seed=seed), "noisy"
    raise ConfigError(f"unknown estimator {name!r} (identity|constant|noisy)")


def tolerances(cfg: ScenarioConfig) -> dict:
    tols = dict(DEFAULT_TOLERANCES)
    tols.update({k: float(v) for k, v in cfg.table("tolerances").items()})
    return tols


def _method(cfg: ScenarioConfig):
    t = cfg.table("method")
    name = t.get("name", "analytic")
    if name not in ("analytic", "quadrature", "mc"):
        raise ConfigError(f"unknown method {name!r}")
    kwargs = {}
    if name == "mc":
        kwargs["draws"] = int(t.get("draws", 100_000))
    if name == "quadrature" and "nodes" in t:
        kwargs["nodes"] = int(t["nodes"])
    return name, kwargs, int(t.get("draws", 100_000))


# ---------------------------------------------------------------------------
# Scenario runners
# ---------------------------------------------------------------------------

def _run_fisher(cfg: ScenarioConfig, seed: int, tols: dict):
    model, theta = build_model(cfg)
    metric = build_metric(cfg)
    if metric.dim != model.obs_dim:
        raise ConfigError("[metric] dim must equal [model] obs_dim")
    method, mkw, draws = _method(cfg)
    if method == "mc":
        mkw["seed"] = seed
    estimator, est_name = build_estimator(cfg, seed)
    checks, findings = [], []

    fe = expected_fisher(model, theta, method, **mkw)
    fo = outer_form_fisher(model, theta, method, **mkw)
    reg_tol = tols["regularity"] if method != "mc" else \
        tols["mc_se_factor"] * float(np.max(fo.std_error + fe.std_error))
    checks.append(_check("regularity_identity",
                         float(np.max(np.abs(fe.matrix - fo.matrix))), 0.0,
                         reg_tol))

    batch = sample(model, theta, seed, draws)
    report = build_estimation_report(model, theta, metric, estimator, batch,
                                     method, **mkw)
    for ce in report.channels:
        if not ce.causal:
            findings.append({"name": "causality_violation", "channel": ce.channel,
                             "sigma2": ce.sigma2,
                             "note": "metric-contracted variance negative"})

    stam_payload = None
    if report.stam_total is not None:
        sc = stam_capacity_check(model, theta, metric, estimator, batch,
                                 "analytic")
        checks.append(_check_ge("stam_nonnegative", sc.stam, 0.0,
                                tols["mc_se_factor"] * sc.stam_se))
        checks.append(_check_ge("stam_below_capacity", sc.capacity, sc.stam,
                                tols["mc_se_factor"] * sc.stam_se))
        stam_payload = {"stam": sc.stam, "stam_se": sc.stam_se,
                        "capacity": sc.capacity, "margin": sc.margin}
    else:
        findings.append({"name": "stam_undefined",
                         "channels": [ce.channel for ce in report.channels
                                      if ce.stam is None],
                         "note": "reciprocal variance meaningless"})

    crlb_rows = []
    for i in range(model.parameter_size):
        rep = crlb_check(model, theta, estimator, i, batch, "analytic")
        row = {"index": i, "sigma2": rep.sigma2, "inverse_diag": rep.inverse_diag,
               "reciprocal_diag": rep.reciprocal_diag, "bias": rep.bias,
               "applicable": rep.applicable}
        crlb_rows.append(row)
        if rep.applicable:
            checks.append(_check_ge(f"cr_inequality_i{i}", rep.sigma2,
                                    rep.inverse_diag,
                                    tols["mc_se_factor"] * rep.sigma2_se))
            checks.append(_check_ge(f"cr_chain_i{i}", rep.inverse_diag,
                                    rep.reciprocal_diag,
                                    1e-12 * max(1.0, abs(rep.reciprocal_diag))))
        else:
            findings.append({"name": "cr_not_applicable", "index": i,
                             "bias": rep.bias,
                             "note": "estimator bias detected; CR chain skipped"})

    results = {
        "expected_fisher": _matrix_payload(fe),
        "outer_form_fisher": _matrix_payload(fo),
        "capacity": report.capacity,
        "per_channel_fisher": [ce.fisher_eta for ce in report.channels],
        "crlb_inverse_diag": [float(v) for v in report.crlb_inverse_diag],
        "crlb_reciprocal_diag": [float(v) for v in report.crlb_reciprocal_diag],
        "estimator": est_name,
        "per_channel": [{
            "channel": ce.channel, "sigma2": ce.sigma2,
            "sigma2_se": ce.sigma2_se, "stam": ce.stam,
            "fisher_eta": ce.fisher_eta, "causal": ce.causal}
            for ce in report.channels],
        "stam": stam_payload,
        "crlb": crlb_rows,
        "draws": draws,
    }
    csv_rows = [("channel", "fisher_eta", "sigma2", "sigma2_se", "stam", "causal")]
    for ce in report.channels:
        csv_rows.append((ce.channel, ce.fisher_eta, ce.sigma2, ce.sigma2_se,
                         ce.stam if ce.stam is not None else "",
                         int(ce.causal)))
    return results, checks, findings, csv_rows


def _run_kinematic(cfg: ScenarioConfig, seed: int, tols: dict):
    grid = build_grid(cfg)
    metric = build_metric(cfg)
    field = build_field(cfg, grid)
    if not isinstance(field, AmplitudeField):
        raise ConfigError("kinematic scenarios need an amplitude field "
                          "(gaussian or plane_wave constructor)")
    checks, findings = [], []
    checks.append(_check("field_normalization", field.norm(), 1.0,
                         tols["normalization"]))
    i_amp = capacity_from_amplitudes(field, metric)
    i_prob, details = capacity_from_probabilities(field.probabilities(), metric,
                                                  grid, return_details=True)
    scale = max(1.0, abs(i_amp))
    checks.append(_check("form_identity", i_prob, i_amp,
                         tols["form_identity"] * scale))
    mix = mixture_density(field)
    checks.append(_check("mixture_integral", grid_integral(grid, mix), 1.0,
                         tols["normalization"]))
    boost_payload = None
    if "boost" in cfg.data:
        b = cfg.table("boost")
        boost = BoostParameters(float(b.get("beta", 0.0)), int(b.get("axis", 1)))
        boosted = boost_field(field, boost)
        i_after = capacity_from_amplitudes(boosted, metric)
        rel = abs(i_after - i_amp) / max(abs(i_amp), 1e-30)
        checks.append(_check("boost_invariance", rel, 0.0, tols["boost_rel"]))
        boost_payload = {"beta": boost.beta, "axis": boost.axis,
                         "capacity_before": i_amp, "capacity_after": i_after,
                         "relative_change": rel}
    if grid.boundary == "periodic":
        wrap, interior = wrap_continuity_report(field)
        findings.append({"name": "wrap_continuity", "wrap_jump": wrap,
                         "max_interior_step": interior})
    results = {"amplitude_capacity": i_amp, "probability_capacity": i_prob,
               "skip_fraction": details["skip_fraction"],
               "channels": field.channel_count, "boost": boost_payload}
    axes_rows = [("axis", "coordinate", "mixture_density")]
    center = tuple(p // 2 for p in grid.points)
    for axis in range(grid.dim):
        idx = list(center)
        for j in range(grid.points[axis]):
            idx[axis] = j
            axes_rows.append((axis, float(grid.axis_coords(axis)[j]),
                              float(mix[tuple(idx)])))
    return results, checks, findings, axes_rows


def _run_consistency(cfg: ScenarioConfig, seed: int, tols: dict):
    model, theta = build_model(cfg)
    metric = build_metric(cfg)
    grid = build_grid(cfg)
    method, mkw, _ = _method(cfg)
    if method == "mc":
        mkw["seed"] = seed
    rep = statistical_kinematic_consistency(model, theta, grid, metric,
                                            fisher_method=method, **mkw)
    scale = max(1.0, abs(rep.statistical))
    checks = [
        _check("statistical_vs_kinematic", rep.probability_form,
               rep.statistical, tols["consistency"] * scale),
        _check("form_identity", rep.probability_form, rep.amplitude_form,
               tols["form_identity"] * scale),
    ]
    results = {"statistical": rep.statistical,
               "probability_form": rep.probability_form,
               "amplitude_form": rep.amplitude_form,
               "mass_coverage": [float(v) for v in rep.mass_coverage],
               "skip_fraction": rep.skip_fraction}
    return results, checks, [], None


def _run_fourier(cfg: ScenarioConfig, seed: int, tols: dict):
    grid = build_grid(cfg)
    field = build_field(cfg, grid)
    ct = cfg.table("constants")
    consts = PhysicalConstants(float(ct.get("hbar", 1.0)), float(ct.get("c", 1.0)))
    checks, findings = [], []
    momentum = forward_transform(field, consts)
    if momentum.leakage is not None:
        findings.append({"name": "spectral_leakage", "value": momentum.leakage,
                         "note": "truncated grid transformed by zero-extension"})
    pr = parseval_check(field, momentum)
    checks.append(_check("parseval_norm", pr.position_total, pr.momentum_total,
                         tols["parseval"]))
    checks.append(_check("parseval_gram", pr.gram_diff, 0.0, tols["parseval"]))
    back = inverse_transform(momentum)
    checks.append(_check("round_trip",
                         float(np.max(np.abs(back.components - field.components))),
                         0.0, tols["roundtrip"]))
    checks.append(_check("conjugate_symmetry",
                         conjugate_symmetry_defect(momentum), 0.0,
                         tols["roundtrip"]))
    m2 = mass_squared(momentum)
    i_mom = momentum_capacity(momentum)
    tach = tachyon_check(momentum)
    if tach.tachyonic:
        findings.append({"name": "tachyon", "mass_squared": m2,
                         "note": "spacelike-dominated spectrum"})
    if m2 >= 0:
        free = free_particle_capacity(np.sqrt(m2), field.channel_count, consts)
        checks.append(_check("free_particle_identity", free, i_mom,
                             tols["identity_rel"] * max(1.0, abs(i_mom))))
    fi = fourier_information(field, consts)
    checks.append(_check("fourier_information_tautology", fi.total, 0.0,
                         tols["fourier_information"]
                         * max(1.0, abs(fi.position_capacity))))
    ext_payload = None
    ft = cfg.table("fourier")
    if "external_mass_squared" in ft:
        m_ext2 = float(ft["external_mass_squared"])
        fi_ext = fourier_information(field, consts, external_mass_squared=m_ext2)
        expected = 4.0 * field.channel_count * (m2 - m_ext2) \
            * consts.c ** 2 / consts.hbar ** 2
        checks.append(_check("external_mass_offset", fi_ext.total, expected,
                             tols["external_offset"] * max(1.0, abs(expected))))
        ext_payload = {"mass_squared": m_ext2, "fourier_information": fi_ext.total,
                       "closed_form": expected}
    results = {"mass_squared": m2, "momentum_capacity": i_mom,
               "position_capacity": fi.position_capacity,
               "fourier_information": fi.total,
               "tachyonic": tach.tachyonic, "external": ext_payload,
               "constants": {"hbar": consts.hbar, "c": consts.c}}
    return results, checks, findings, None


def _run_maxwell(cfg: ScenarioConfig, seed: int, tols: dict):
    grid = build_grid(cfg)
    t = cfg.table("field", required=True)
    if t.get("constructor") != "gauge_mode":
        raise ConfigError("maxwell scenarios use the gauge_mode constructor")
    gf = build_field(cfg, grid)
    checks, findings = [], []
    norm = gauge_normalization_check(gf, tols["normalization"])
    checks.append(_check("gauge_normalization", norm.gauge_integral, 1.0,
                         tols["normalization"]))
    checks.append(_check("amplitude_gauge_equivalence", norm.amplitude_integral,
                         norm.gauge_integral, 0.0 if gf.a == 2.0
                         else tols["normalization"]))
    i_val = maxwell_capacity(gf)
    mink = MetricSignature.minkowski(4)
    eps = np.asarray(t["epsilon"], dtype=float)
    epsn = eps / np.linalg.norm(eps)
    kvec = 2.0 * np.pi * np.asarray(t["mode"], dtype=float) \
        / np.asarray(grid.lengths)
    closed = 4.0 * gf.a ** 2 * contract(mink, epsn, epsn) \
        * contract(mink, kvec, kvec)
    checks.append(_check("mode_capacity_closed_form", i_val, closed,
                         tols["capacity_rel"] * max(1.0, abs(closed))))
    res, l2 = lorentz_condition_residual(gf)
    eps_dot_k = contract(mink, epsn, kvec)
    expected_l2 = abs(eps_dot_k) * np.sqrt(2.0 / grid.volume) \
        * np.sqrt(grid.volume / 2.0)
    if abs(expected_l2) < tols["residual"]:
        checks.append(_check("lorentz_residual_transverse", l2, 0.0,
                             tols["residual"]))
    else:
        checks.append(_check("lorentz_residual_closed_form", l2, expected_l2,
                             tols["capacity_rel"] * expected_l2))
    results = {"capacity": i_val, "closed_form_capacity": closed,
               "lorentz_residual_l2": l2,
               "lorentz_residual_closed_form": expected_l2,
               "proportionality": gf.a,
               "amplitude_integral": norm.amplitude_integral,
               "gauge_integral": norm.gauge_integral}
    return results, checks, findings, None


def _run_sweep(cfg: ScenarioConfig, seed: int, tols: dict, n_max=None):
    metric = build_metric(cfg)
    if n_max is None:
        n_max = int(cfg.table("sweep").get("n_max", 4))
    if n_max < 1:
        raise ConfigError("sweep n_max must be >= 1")
    method, mkw, _ = _method(cfg)
    if method == "mc":
        mkw["seed"] = seed
    rows_payload = []
    csv_rows = [("channels", "capacity", "per_channel")]
    prev = None
    monotone = True
    applicable = True
    for n in range(1, n_max + 1):
        model, theta = build_model(cfg, channels_override=n)
        cap = channel_capacity(model, theta, metric, method, **mkw)
        if np.any(cap.per_channel < 0):
            applicable = False
        if prev is not None and cap.total < prev - 1e-12:
            monotone = False
        prev = cap.total
        rows_payload.append({"channels": n, "capacity": cap.total,
                             "per_channel": [float(v) for v in cap.per_channel]})
        csv_rows.append((n, cap.total,
                         ";".join(f"{v:.12g}" for v in cap.per_channel)))
    findings = []
    checks = []
    if applicable:
        checks.append({"name": "capacity_monotone_in_rank", "lhs": float(prev),
                       "rhs": 0.0, "tolerance": 0.0,
                       "margin": 0.0 if monotone else -1.0,
                       "pass": bool(monotone)})
    else:
        findings.append({"name": "monotonicity_not_applicable",
                         "note": "sign-indefinite channel contributions"})
    results = {"rows": rows_payload,
               "monotone": monotone if applicable else None}
    return results, checks, findings, csv_rows


_RUNNERS = {
    "fisher": _run_fisher,
    "kinematic": _run_kinematic,
    "consistency": _run_consistency,
    "fourier": _run_fourier,
    "maxwell": _run_maxwell,
    "sweep": _run_sweep,
}


def run_scenario(cfg: ScenarioConfig, seed_override=None, n_max=None) -> dict:
    """Execute one scenario and return the full report dictionary."""
    seed = int(seed_override) if seed_override is not None else cfg.seed
    tols = tolerances(cfg)
    runner = _RUNNERS[cfg.kind]
    if cfg.kind == "sweep":
        results, checks, findings, csv_rows = runner(cfg, seed, tols, n_max=n_max)
    else:
        results, checks, findings, csv_rows = runner(cfg, seed, tols)
    report = {
        "tool": {"name": "infocap", "version": __version__},
        "scenario": cfg.data,
        "seed": seed,
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "tolerances": tols,
        "results": results,
        "checks": checks,
        "findings": findings,
        "passed": bool(all(c["pass"] for c in checks)),
    }
    report["_csv_rows"] = csv_rows
    return report


def write_report(report: dict, json_path=None, csv_path=None) -> None:
    csv_rows = report.pop("_csv_rows", None)
    if json_path is not None:
        Path(json_path).write_text(json.dumps(report, indent=2, sort_keys=True)
                                   + "\n")
    if csv_path is not None and csv_rows:
        lines = [",".join(str(v) for v in row) for row in csv_rows]
        Path(csv_path).write_text("\n".join(lines) + "\n")
