"""Acceptance checks, one per criterion, each printing a single PASS/FAIL line."""

import contextlib
import io
import json
import math
import time

import numpy as np
import pytest

from openqsl import bounds as bd
from openqsl import dynamics as dy
from openqsl import experiments as ex
from openqsl.cli import main
from openqsl.core import random_density
from openqsl.metric import distance_d, fidelity_gm, speed_d, speed_from_normalized


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail, elapsed, limit):
        fast = elapsed < limit
        passed = bool(ok) and fast
        line = f"[{'PASS' if passed else 'FAIL'}] AC{number:02d} {title}: {detail}; runtime {elapsed:.2f}s (limit {limit:g}s)"
        with capsys.disabled():
            print("\n" + line)
        assert passed, line

    return emit


def test_ac01_gad_saturation(verdict):
    t0 = time.perf_counter()
    res = ex.run_gad_saturation(ex.resolve_params("gad-saturation", {"dt": 1e-3}))
    elapsed = time.perf_counter() - t0
    s = res.summary
    dev = abs(s["ratio"] - 1)
    gap = abs(s["closed_form_length"] - s["quadrature_length"])
    ok = dev <= 1e-6 and gap <= 1e-7 and abs(s["q_tau"] - 0.5) < 1e-9
    verdict(1, "GAD saturation", ok, f"|ratio-1|={dev:.2e} (<=1e-6), |closed-quad|={gap:.2e} (<=1e-7)", elapsed, 1.0)


def test_ac02_dephasing_saturation(verdict):
    t0 = time.perf_counter()
    res = ex.run_dephasing_saturation(ex.resolve_params("dephasing-saturation", {"ratio": 1.0, "gamma_tau": 1.0}))
    elapsed = time.perf_counter() - t0
    s = res.summary
    dev = abs(s["ratio"] - 1)
    gap = max(
        abs(s["closed_form_length"] - s["quadrature_length"]),
        abs(s["closed_form_distance"] - s["closed_form_length"]),
    )
    ok = dev <= 1e-6 and gap <= 1e-9
    verdict(2, "dephasing saturation", ok, f"|ratio-1|={dev:.2e} (<=1e-6), length agreement {gap:.2e} (<=1e-9)", elapsed, 1.0)


def test_ac03_geodesic_family(verdict):
    t0 = time.perf_counter()
    worst_ratio = worst_cos = 0.0
    rng = np.random.default_rng(2024)
    for dim in (2, 3, 4):
        for _ in range(100):
            a, b = random_density(dim, seed=rng), random_density(dim, seed=rng)
            overlap = fidelity_gm(a, b)
            for law in bd.BETA_LAWS:
                rep = bd.report(bd.geodesic_path(a, b, law, 257))
                worst_ratio = max(worst_ratio, abs(rep.ratio_qsl - 1), abs(rep.ratio_e - 1))
                worst_cos = max(worst_cos, abs(math.cos(rep.length_d) - overlap))
    elapsed = time.perf_counter() - t0
    ok = worst_ratio <= 1e-6 and worst_cos <= 1e-7
    verdict(3, "geodesic family", ok, f"max|ratio-1|={worst_ratio:.2e} (<=1e-6), max|cos L - <P0,Pt>|={worst_cos:.2e} (<=1e-7)", elapsed, 10.0)


def test_ac04_unitary_strictness(verdict):
    t0 = time.perf_counter()
    tau = math.pi / 2
    plus = np.full((2, 2), 0.5, dtype=complex)
    rep = bd.report(dy.unitary_trajectory(np.diag([0.5, -0.5]), plus, tau, 1025))
    elapsed = time.perf_counter() - t0
    margin = 1e-3 * tau
    ok = (
        rep.tau_phi - rep.tau_qsl > margin
        and rep.tau_phi <= tau * (1 + 1e-6)
        and rep.tau_qsl - rep.tau_e > margin
    )
    detail = f"tau_E={rep.tau_e:.6f} < tau_qsl={rep.tau_qsl:.6f} < tau_Phi={rep.tau_phi:.6f} <= tau={tau:.6f}"
    verdict(4, "unitary strictness", ok, detail, elapsed, 1.0)


def test_ac05_nonmarkov(verdict):
    t0 = time.perf_counter()
    with pytest.warns(UserWarning, match="not monotone"):
        res = ex.run_nonmarkov(ex.resolve_params("nonmarkov", {"gamma0": 5.0, "lam": 1.0}))
    elapsed = time.perf_counter() - t0
    ratio = res.summary["ratio"]
    verdict(5, "non-Markovian non-saturation", ratio < 1 - 1e-3, f"ratio={ratio:.6f} (<1-1e-3), poles={res.summary['poles']}", elapsed, 1.0)


def test_ac06_thermal_kraus_saturation(verdict):
    t0 = time.perf_counter()
    res = ex.run_fig3a(ex.resolve_params("fig3a", {"c": 0.5}))
    elapsed = time.perf_counter() - t0
    rows = res.rows
    max_ratio = max(r["ratio"] for r in rows)
    anchor_dev = max(abs(r["ratio"] - 1) for r in rows if r["rho11"] in (0.0, 0.5))
    geo_cols = sorted({r["rho11"] for r in rows if r["is_geodesic"]})
    full = len(rows) == 51 * 50 and not res.errors
    ok = full and max_ratio <= 1 + 1e-6 and anchor_dev <= 1e-4 and geo_cols == [0.0, 0.5]
    detail = (
        f"max ratio={max_ratio:.12f} (<=1+1e-6), max|ratio-1| on rho11 in {{0,0.5}}={anchor_dev:.2e} (<=1e-4), "
        f"geodesic columns={geo_cols} (expected [0.0, 0.5])"
    )
    verdict(6, "thermal Kraus saturation condition", ok, detail, elapsed, 30.0)


def test_ac07_fig3b_ordering(verdict):
    t0 = time.perf_counter()
    res = ex.run_fig3b(ex.resolve_params("fig3b", {"c": 0.0}))
    elapsed = time.perf_counter() - t0
    worst = min(r["ratio_qsl"] - r["ratio_e"] for r in res.rows)
    bad = [r for r in res.rows if r["ratio_qsl"] < r["ratio_e"] - 1e-8]
    detail = f"{len(bad)}/{len(res.rows)} points with tau_qsl < tau_E - 1e-8, worst difference {worst:.3e}"
    if bad:
        detail += f" at rho11 in [{min(r['rho11'] for r in bad):.2f}, {max(r['rho11'] for r in bad):.2f}]"
    verdict(7, "thermal Kraus c = 0 ordering", not bad, detail, elapsed, 30.0)


def test_ac08_fig2(verdict, tmp_path):
    t0 = time.perf_counter()
    for name in ("a", "b"):
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            code = main(["fig2", "--samples", "1000", "--seed", "0", "--out", str(tmp_path / name)])
        assert code == 0
    elapsed = (time.perf_counter() - t0) / 2

    summary = json.loads((tmp_path / "a/fig2/summary.json").read_text())
    errors = (tmp_path / "a/fig2/errors.csv").read_text().strip().splitlines()
    same = (tmp_path / "a/fig2/data.csv").read_bytes() == (tmp_path / "b/fig2/data.csv").read_bytes()
    ok = (
        summary["completed"] == 1000
        and len(errors) == 1
        and summary["positive_fraction"] > 0
        and summary["negative_fraction"] > 0
        and same
    )
    detail = (
        f"completed={summary['completed']}, failures={len(errors) - 1}, positive={summary['positive_fraction']:.3f}, "
        f"negative={summary['negative_fraction']:.3f}, rerun identical={same}"
    )
    verdict(8, "random bipartite gap signs", ok, detail, elapsed, 60.0)


def _speed_explicit(rho, x):
    p, v, w = np.vdot(rho, rho).real, np.vdot(x, x).real, np.vdot(rho, x).real
    return math.sqrt(max(v * p - w * w, 0.0)) / p


def test_ac09_metric_properties(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    sym = rng_err = tri = 0.0
    fd_ok = True
    speed_gap = 0.0
    for dim in (2, 3, 4):
        for _ in range(1000):
            a, b, c = (random_density(dim, seed=rng).matrix for _ in range(3))
            ab, ba, bc, ac = distance_d(a, b), distance_d(b, a), distance_d(b, c), distance_d(a, c)
            sym = max(sym, abs(ab - ba))
            rng_err = max(rng_err, -min(ab, 0.0), ab - math.pi / 2)
            tri = max(tri, ac - ab - bc)
        for _ in range(20):
            rho = 0.8 * random_density(dim, seed=rng).matrix + 0.2 * np.eye(dim) / dim
            g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            x = (g + g.conj().T) / 2
            x = 0.05 * (x - np.trace(x) / dim * np.eye(dim))
            v = speed_d(rho, x)
            errs = [abs(distance_d(rho, rho + h * x) / h - v) for h in (4e-3, 2e-3, 1e-3)]
            fd_ok &= all(1.6 < errs[i] / errs[i + 1] < 2.4 for i in range(2))
            pur = np.vdot(rho, rho).real
            p_dot = x / math.sqrt(pur) - np.vdot(rho, x).real / pur**1.5 * rho
            speed_gap = max(speed_gap, abs(speed_from_normalized(p_dot) - _speed_explicit(rho, x)), abs(v - _speed_explicit(rho, x)))
    elapsed = time.perf_counter() - t0
    ok = sym <= 1e-10 and rng_err <= 1e-10 and tri <= 1e-10 and fd_ok and speed_gap <= 1e-6
    detail = (
        f"symmetry {sym:.1e}, range excess {max(rng_err, 0):.1e}, triangle excess {max(tri, 0):.1e} (<=1e-10), "
        f"first-order FD decay={fd_ok}, speed-form agreement {speed_gap:.1e} (<=1e-6)"
    )
    verdict(9, "metric property suite", ok, detail, elapsed, 30.0)


def test_ac10_appendix_b_classifier(verdict):
    t0 = time.perf_counter()
    res = ex.run_appendix_b(ex.resolve_params("appendix-b", {"scan": True}))
    elapsed = time.perf_counter() - t0
    positives = [(r["theta"], (r["rx0"], r["ry0"], r["rz0"])) for r in res.rows if r["is_geodesic"]]
    expected = [(math.pi / 4, (0.5, 0.0, 0.5))]
    dev = res.summary["max_closed_vs_rk4"]
    ok = len(res.rows) == 9 and positives == expected and dev <= 1e-8
    verdict(10, "driven-qubit geodesic classifier", ok, f"geodesic cases={positives}, closed vs RK4 {dev:.1e} (<=1e-8)", elapsed, 5.0)


def _rk4_error(gen, rho0, tau, exact, dt):
    traj = dy.integrate(gen, rho0, tau, dt)
    return float(np.max(np.abs(traj.states[-1] - exact)))


def test_ac11_rk4_order(verdict):
    t0 = time.perf_counter()
    gp = dy.GADParams.qubit(0.6, 1.0)
    tau_g = math.log(2.0)
    exact_g = dy.gad_solution(gp, tau_g).matrix
    ab = dy.AppendixBParams(math.pi / 4, 2.0, 0.5, (0.5, 0.0, 0.5))
    exact_b = dy.appendix_b_solution(ab, 2.0).matrix
    ratios = {
        "GAD": _rk4_error(dy.gad_generator(gp), dy.gad_initial(gp), tau_g, exact_g, 0.05)
        / _rk4_error(dy.gad_generator(gp), dy.gad_initial(gp), tau_g, exact_g, 0.025),
        "AppB": _rk4_error(dy.appendix_b_generator(ab), dy.appendix_b_initial(ab), 2.0, exact_b, 0.1)
        / _rk4_error(dy.appendix_b_generator(ab), dy.appendix_b_initial(ab), 2.0, exact_b, 0.05),
    }
    elapsed = time.perf_counter() - t0
    ok = all(12 <= r <= 20 for r in ratios.values())
    verdict(11, "integrator convergence", ok, ", ".join(f"{k} err(dt)/err(dt/2)={v:.2f}" for k, v in ratios.items()) + " (in [12, 20])", elapsed, 5.0)
