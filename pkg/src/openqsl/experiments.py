"""Experiment runners behind the ``qsl`` command.

Each runner takes a fully resolved parameter dict (see ``DEFAULTS``) and a
seed and returns an :class:`ExperimentResult`; writing files is the CLI's job.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bd
from . import dynamics as dy
from .core import split_seed, validate_density
from .errors import QSLError

DEFAULTS: dict[str, dict] = {
    "fig2": {"samples": 1000, "tau": 1.0, "grid_points": 256, "diagonal_h": True, "workers": 1},
    "fig3a": {
        "c": 0.5,
        "rho11_points": 51,
        "tau_points": 50,
        "tau_max": 100.0,
        "p_scale": 100.0,
        "grid_points": 257,
        "geodesic_tol": 1e-6,
    },
    "fig3b": {
        "c": 0.0,
        "rho11_points": 51,
        "tau_points": 50,
        "tau_max": 100.0,
        "p_scale": 100.0,
        "grid_points": 257,
        "order_tol": 1e-8,
    },
    "gad-saturation": {"excited": 0.6, "gamma": 1.0, "q_tau": 0.5, "dt": 1e-3, "rate_csv": None, "tau": None},
    "dephasing-saturation": {"ratio": 1.0, "gamma_tau": 1.0, "tau": 1.0, "dt": 1e-3},
    "nonmarkov": {"excited": 0.6, "gamma0": 5.0, "lam": 1.0, "tau": None, "grid_points": 1025},
    "appendix-b": {
        "theta": math.pi / 4,
        "omega_l": 2.0,
        "gamma": 0.5,
        "r0": [0.5, 0.0, 0.5],
        "tau": 2.0,
        "grid_points": 257,
        "dt": 1e-3,
        "tol": 1e-6,
        "scan": True,
    },
}

SATURATION_TOL = 1e-6
LENGTH_TOL = 1e-7

SCAN_THETAS = (math.pi / 8, math.pi / 4, 3 * math.pi / 8)
SCAN_R0 = ((0.5, 0.0, 0.5), (0.5, 0.0, 0.3), (0.5, 0.2, 0.5))


@dataclass
class ExperimentResult:
    experiment: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    errors: list[dict] = field(default_factory=list)
    plot: dict | None = None


def resolve_params(experiment: str, overrides: dict | None) -> dict:
    from .errors import ConfigError

    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(DEFAULTS)}")
    params = dict(DEFAULTS[experiment])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r} for {experiment}; allowed: {sorted(params)}")
        params[key] = value
    return params


# --------------------------------------------------------------------------- #
# Fig. 2: random bipartite dynamics
# --------------------------------------------------------------------------- #


def _fig2_sample(args) -> tuple[dict | None, dict | None]:
    seed, tau, grid_points, diagonal_h = args
    try:
        traj = dy.bipartite_sample(seed, tau, grid_points, diagonal_h)
        rep = bd.report(traj)
    except QSLError as exc:
        return None, {"seed": seed, "reason": f"{type(exc).__name__}: {exc}"}
    if rep.length_d == 0.0:
        return None, {"seed": seed, "reason": "constant trajectory"}
    row = {
        "seed": seed,
        "purity": traj.meta["initial_purity"],
        "tau_qsl": rep.tau_qsl,
        "tau_e": rep.tau_e,
        "gap": rep.gap,
    }
    return row, None


def run_fig2(params: dict, seed: int) -> ExperimentResult:
    samples = int(params["samples"])
    if samples < 1:
        raise ValueError("samples must be >= 1")
    jobs = [
        (split_seed(seed, i), float(params["tau"]), int(params["grid_points"]), bool(params["diagonal_h"]))
        for i in range(samples)
    ]
    workers = int(params.get("workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_fig2_sample, jobs, chunksize=max(1, samples // (4 * workers))))
    else:
        outcomes = [_fig2_sample(job) for job in jobs]

    result = ExperimentResult("fig2", ["seed", "purity", "tau_qsl", "tau_e", "gap"])
    for row, err in outcomes:
        if row is not None:
            result.rows.append(row)
        else:
            result.errors.append(err)
    gaps = np.array([r["gap"] for r in result.rows])
    done = max(len(gaps), 1)
    result.summary = {
        "samples": samples,
        "completed": len(result.rows),
        "failures": len(result.errors),
        "positive_gap": int(np.sum(gaps > 0)),
        "negative_gap": int(np.sum(gaps < 0)),
        "zero_gap": int(np.sum(gaps == 0)),
        "positive_fraction": float(np.sum(gaps > 0) / done),
        "negative_fraction": float(np.sum(gaps < 0) / done),
        "mean_gap": float(gaps.mean()) if gaps.size else 0.0,
    }
    result.plot = {
        "kind": "scatter",
        "x": [r["purity"] for r in result.rows],
        "y": [r["gap"] for r in result.rows],
        "xlabel": "initial purity",
        "ylabel": "tau_qsl - tau_E",
        "title": f"{samples} random bipartite dynamics",
    }
    return result


# --------------------------------------------------------------------------- #
# Fig. 3: thermal Kraus channel
# --------------------------------------------------------------------------- #


def _fig3_grid(params: dict) -> tuple[np.ndarray, np.ndarray, float]:
    rho11s = np.linspace(0.0, 1.0, int(params["rho11_points"]))
    tau_max = float(params["tau_max"])
    taus = np.linspace(tau_max / int(params["tau_points"]), tau_max, int(params["tau_points"]))
    horizon = float(params["p_scale"]) * (math.e - 1.0)
    return rho11s, taus, horizon


def run_fig3a(params: dict, seed: int = 0) -> ExperimentResult:
    rho11s, taus, horizon = _fig3_grid(params)
    c = float(params["c"])
    tol = float(params["geodesic_tol"])
    result = ExperimentResult("fig3a", ["rho11", "tau", "ratio", "is_geodesic", "max_residual"])
    ratio_grid = np.full((rho11s.size, taus.size), np.nan)
    for i, r11 in enumerate(rho11s):
        kp = dy.ThermalKrausParams.pure(c, float(r11), float(params["p_scale"]))
        for j, tau in enumerate(taus):
            if tau > horizon:
                result.errors.append({"rho11": r11, "tau": tau, "reason": "tau beyond p(t) <= 1 horizon"})
                continue
            traj = dy.kraus_trajectory(kp, float(tau), int(params["grid_points"]))
            try:
                ratio = bd.tau_qsl(traj) / tau
                check = bd.is_geodesic(traj, tol)
            except QSLError as exc:
                result.errors.append({"rho11": r11, "tau": tau, "reason": f"{type(exc).__name__}: {exc}"})
                continue
            ratio_grid[i, j] = ratio
            result.rows.append(
                {
                    "rho11": float(r11),
                    "tau": float(tau),
                    "ratio": ratio,
                    "is_geodesic": int(check.is_geodesic),
                    "max_residual": check.max_residual,
                }
            )
    ratios = np.array([r["ratio"] for r in result.rows])
    geo_cols = sorted({r["rho11"] for r in result.rows if r["is_geodesic"]})
    full_cols = [
        r11
        for r11 in geo_cols
        if all(r["is_geodesic"] for r in result.rows if r["rho11"] == r11)
    ]
    result.summary = {
        "c": c,
        "points": len(result.rows),
        "skipped": len(result.errors),
        "max_ratio": float(ratios.max()) if ratios.size else 0.0,
        "min_ratio": float(ratios.min()) if ratios.size else 0.0,
        "geodesic_columns": full_cols,
        "geodesic_points": int(sum(r["is_geodesic"] for r in result.rows)),
    }
    result.plot = {
        "kind": "heatmap",
        "x": taus.tolist(),
        "y": rho11s.tolist(),
        "z": ratio_grid.tolist(),
        "xlabel": "tau",
        "ylabel": "rho11",
        "title": f"tau_qsl / tau, c = {c:g}",
    }
    return result


def run_fig3b(params: dict, seed: int = 0) -> ExperimentResult:
    rho11s, taus, horizon = _fig3_grid(params)
    c = float(params["c"])
    order_tol = float(params["order_tol"])
    result = ExperimentResult("fig3b", ["rho11", "tau", "ratio_qsl", "ratio_e", "difference"])
    grid_q = np.full((rho11s.size, taus.size), np.nan)
    grid_e = np.full_like(grid_q, np.nan)
    for i, r11 in enumerate(rho11s):
        kp = dy.ThermalKrausParams.pure(c, float(r11), float(params["p_scale"]))
        for j, tau in enumerate(taus):
            if tau > horizon:
                result.errors.append({"rho11": r11, "tau": tau, "reason": "tau beyond p(t) <= 1 horizon"})
                continue
            traj = dy.kraus_trajectory(kp, float(tau), int(params["grid_points"]))
            rep = bd.report(traj)
            if rep.length_d == 0.0 and rep.length_e == 0.0:
                result.errors.append({"rho11": r11, "tau": tau, "reason": "constant trajectory (fixed point)"})
                continue
            grid_q[i, j], grid_e[i, j] = rep.ratio_qsl, rep.ratio_e
            result.rows.append(
                {
                    "rho11": float(r11),
                    "tau": float(tau),
                    "ratio_qsl": rep.ratio_qsl,
                    "ratio_e": rep.ratio_e,
                    "difference": rep.ratio_qsl - rep.ratio_e,
                }
            )
    diffs = np.array([r["difference"] for r in result.rows])
    violations = [r for r in result.rows if r["ratio_qsl"] < r["ratio_e"] - order_tol]
    result.summary = {
        "c": c,
        "points": len(result.rows),
        "skipped": len(result.errors),
        "min_difference": float(diffs.min()) if diffs.size else 0.0,
        "ordering_violations": len(violations),
        "violating_rho11": sorted({r["rho11"] for r in violations}),
        "expectation_ratio_qsl_ge_ratio_e": not violations,
    }
    result.plot = {
        "kind": "dual-heatmap",
        "x": taus.tolist(),
        "y": rho11s.tolist(),
        "z": [grid_q.tolist(), grid_e.tolist()],
        "titles": ["tau_qsl / tau", "tau_E / tau"],
        "xlabel": "tau",
        "ylabel": "rho11",
        "title": f"bound ratios, c = {c:g}",
    }
    return result


# --------------------------------------------------------------------------- #
# Saturation examples
# --------------------------------------------------------------------------- #


def _saturation_result(name: str, payload: dict) -> ExperimentResult:
    result = ExperimentResult(name, list(payload))
    result.rows.append(payload)
    result.summary = dict(payload)
    return result


def run_gad_saturation(params: dict, seed: int = 0) -> ExperimentResult:
    excited = float(params["excited"])
    assertion = True
    if params.get("rate_csv"):
        rate = dy.load_rate_csv(params["rate_csv"])
        if not rate.monotone:
            warnings.warn("tabulated decay rate changes sign: q_t is not monotone, saturation check disabled")
            assertion = False
        gp = dy.GADParams.qubit(excited, rate)
        tau = float(params["tau"] or rate.times[-1])
    else:
        gamma = float(params["gamma"])
        gp = dy.GADParams.qubit(excited, gamma)
        tau = float(params["tau"] or -math.log(float(params["q_tau"])) / gamma)
    traj = dy.integrate(dy.gad_generator(gp), dy.gad_initial(gp), tau, float(params["dt"]), model_tag="gad")
    q_tau = float(np.real(traj.states[-1][1, 1]) / excited)
    rep = bd.report(traj)
    closed_len, closed_dist = bd.gad_arc_closed_form(gp, q_tau) if assertion else (None, None)
    payload = {
        "tau": tau,
        "q_tau": q_tau,
        "tau_qsl": rep.tau_qsl,
        "ratio": rep.ratio_qsl,
        "tau_e": rep.tau_e,
        "closed_form_length": closed_len,
        "closed_form_distance": closed_dist,
        "quadrature_length": rep.length_d,
        "endpoint_distance": rep.dist_d,
        "saturation_check": _verdict(assertion, rep.ratio_qsl, closed_len, rep.length_d),
    }
    return _saturation_result("gad-saturation", payload)


def run_dephasing_saturation(params: dict, seed: int = 0) -> ExperimentResult:
    ratio = float(params["ratio"])
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("qubit coherence ratio must lie in [0, 1]")
    tau = float(params["tau"])
    gamma_tau = float(params["gamma_tau"])
    rho0 = validate_density(np.array([[0.5, ratio / 2], [ratio / 2, 0.5]], dtype=complex))
    dp = dy.DephasingParams.linear(rho0, gamma_tau / tau)
    traj = dy.integrate(dy.dephasing_generator(dp), rho0, tau, float(params["dt"]), model_tag="dephasing")
    rep = bd.report(traj)
    closed_len, closed_dist = bd.dephasing_arc_closed_form(dy.dephasing_ratio(rho0), gamma_tau)
    payload = {
        "tau": tau,
        "gamma_tau": gamma_tau,
        "tau_qsl": rep.tau_qsl,
        "ratio": rep.ratio_qsl,
        "tau_e": rep.tau_e,
        "closed_form_length": closed_len,
        "closed_form_distance": closed_dist,
        "quadrature_length": rep.length_d,
        "endpoint_distance": rep.dist_d,
        "saturation_check": _verdict(True, rep.ratio_qsl, closed_len, rep.length_d),
    }
    return _saturation_result("dephasing-saturation", payload)


def nonmarkov_period(rate: dy.NonMarkovRate) -> float:
    """One period ``2 pi / |d|`` of the non-Markovian rate, which depends on ``t`` through ``cot(|d| t / 2)``."""
    if rate.markovian:
        raise ValueError("rate is Markovian; no oscillation")
    return 2 * math.pi / math.sqrt(-rate.disc)


def run_nonmarkov(params: dict, seed: int = 0) -> ExperimentResult:
    rate = dy.NonMarkovRate(float(params["gamma0"]), float(params["lam"]))
    tau = float(params["tau"] or nonmarkov_period(rate))
    gp = dy.GADParams.qubit(float(params["excited"]), rate)
    traj = dy.gad_trajectory(gp, tau, int(params["grid_points"]))
    rep = bd.report(traj, refine=True)
    if not rate.markovian:
        warnings.warn("non-Markovian decay rate: q_t is not monotone, saturation check disabled")
    payload = {
        "tau": tau,
        "q_tau": float(gp.q(tau)),
        "tau_qsl": rep.tau_qsl,
        "ratio": rep.ratio_qsl,
        "tau_e": rep.tau_e,
        "closed_form_length": None,
        "quadrature_length": rep.length_d,
        "endpoint_distance": rep.dist_d,
        "poles": rate.poles(tau),
        "saturation_check": "disabled" if not rate.markovian else _verdict(True, rep.ratio_qsl, None, None),
    }
    return _saturation_result("nonmarkov", payload)


def _verdict(enabled: bool, ratio: float, closed: float | None, quad: float | None) -> str:
    if not enabled:
        return "disabled"
    ok = abs(ratio - 1.0) <= SATURATION_TOL
    if closed is not None and quad is not None:
        ok = ok and abs(closed - quad) <= LENGTH_TOL
    return "pass" if ok else "fail"


# --------------------------------------------------------------------------- #
# Driven-damped qubit
# --------------------------------------------------------------------------- #


def appendix_b_check(ab: dy.AppendixBParams, tau: float, grid_points: int, dt: float, tol: float) -> dict:
    """Geodesic verdict on the closed form plus its deviation from RK4."""
    traj = dy.appendix_b_trajectory(ab, tau, grid_points)
    rk4 = dy.integrate(dy.appendix_b_generator(ab), dy.appendix_b_initial(ab), tau, dt, model_tag="appendix-b")
    closed_on_rk4 = dy._bloch_to_states(dy.appendix_b_bloch(ab, rk4.times))
    deviation = float(np.max(np.abs(closed_on_rk4 - rk4.states)))
    check = bd.is_geodesic(traj, tol)
    return {
        "theta": ab.theta,
        "rx0": ab.r0[0],
        "ry0": ab.r0[1],
        "rz0": ab.r0[2],
        "is_geodesic": int(check.is_geodesic),
        "max_residual": check.max_residual,
        "monotone": int(check.monotone),
        "closed_vs_rk4": deviation,
    }


def run_appendix_b(params: dict, seed: int = 0) -> ExperimentResult:
    if params["scan"]:
        cases = [(th, r0) for th in SCAN_THETAS for r0 in SCAN_R0]
    else:
        cases = [(float(params["theta"]), tuple(params["r0"]))]
    result = ExperimentResult(
        "appendix-b",
        ["theta", "rx0", "ry0", "rz0", "is_geodesic", "max_residual", "monotone", "closed_vs_rk4"],
    )
    for theta, r0 in cases:
        ab = dy.AppendixBParams(theta, float(params["omega_l"]), float(params["gamma"]), r0)
        try:
            row = appendix_b_check(ab, float(params["tau"]), int(params["grid_points"]), float(params["dt"]), float(params["tol"]))
        except QSLError as exc:
            result.errors.append({"theta": theta, "r0": list(r0), "reason": f"{type(exc).__name__}: {exc}"})
            continue
        result.rows.append(row)
    result.summary = {
        "cases": len(cases),
        "checked": len(result.rows),
        "skipped": len(result.errors),
        "geodesic_cases": [[r["theta"], [r["rx0"], r["ry0"], r["rz0"]]] for r in result.rows if r["is_geodesic"]],
        "max_closed_vs_rk4": max((r["closed_vs_rk4"] for r in result.rows), default=0.0),
    }
    return result


RUNNERS = {
    "fig2": run_fig2,
    "fig3a": run_fig3a,
    "fig3b": run_fig3b,
    "gad-saturation": run_gad_saturation,
    "dephasing-saturation": run_dephasing_saturation,
    "nonmarkov": run_nonmarkov,
    "appendix-b": run_appendix_b,
}


def run(experiment: str, params: dict, seed: int) -> ExperimentResult:
    return RUNNERS[experiment](params, seed)
