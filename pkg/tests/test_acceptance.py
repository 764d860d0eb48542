"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""
import time
import warnings

import numpy as np
import pytest

from cglphase.coercive_functional import (build_phi, coercivity_check, eps_binding, gamma_hs_norm,
                                          hs_envelope, inner)
from cglphase.experiments import (dispersion_experiment, formulation_equivalence, ks_attractor_sweep,
                                  slaving_sweep)
from cglphase.nonlinear_terms import StateSM, decomposition_residual
from cglphase.norm_lab import (NormParams, c_infinity, estimate_product_constant, norm_inequality_checks,
                               quotient_check)
from cglphase.operator_symbols import (LM_asymptote_defect, SymbolParams, critical_wavenumber,
                                       verify_symbol_bounds)
from cglphase.spectral_grid import (Grid, SpectralField, enforce_parity, parity_defect, project_high,
                                    project_low, to_coeffs, to_values)

from conftest import random_real_field, record_criterion

SWEEP_EPS = [0.1, 0.05, 0.025]


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    out = slaving_sweep(SWEEP_EPS, L=40.0, N=512, alpha=0.1, dt=0.005, t_end=10.0, every=0.1, window=1.0)
    out["seconds"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def attractor():
    t0 = time.perf_counter()
    out = ks_attractor_sweep((25.0, 50.0, 100.0), seeds=range(6), t_end=500.0)
    out["seconds"] = time.perf_counter() - t0
    return out


def test_criterion_01_spectral_core():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = {"round_trip": 0.0, "parseval": 0.0, "projector": 0.0, "parity": 0.0}
    for _ in range(1000):
        g = Grid(float(rng.uniform(2 * np.pi, 200.0)), int(2 ** rng.integers(4, 10)))
        f = random_real_field(g, rng, decay=float(rng.uniform(0.5, 3.0)))
        v = to_values(f.coeffs, g)
        worst["round_trip"] = max(worst["round_trip"],
                                  np.linalg.norm(to_coeffs(v.real, g) - f.coeffs) / np.linalg.norm(f.coeffs))
        l2_sq = g.L * np.mean(np.abs(v) ** 2)
        worst["parseval"] = max(worst["parseval"], abs(l2_sq - g.L * np.sum(np.abs(f.coeffs) ** 2)) / l2_sq)
        delta = float(rng.uniform(2.0, 10.0))
        lo, hi = project_low(f, delta), project_high(f, delta)
        err = max(np.max(np.abs(lo.coeffs + hi.coeffs - f.coeffs)),
                  np.max(np.abs(project_low(lo, delta).coeffs - lo.coeffs)),
                  np.max(np.abs(project_low(hi, delta).coeffs)))
        worst["projector"] = max(worst["projector"], err / np.linalg.norm(f.coeffs))
        ev, od = enforce_parity(f, "even"), enforce_parity(f, "odd")
        split = np.linalg.norm(ev.coeffs + od.coeffs - np.where(g.n == -(g.N // 2), f.coeffs.real, f.coeffs))
        worst["parity"] = max(worst["parity"], parity_defect(ev, "even"), parity_defect(od, "odd"),
                              split / np.linalg.norm(f.coeffs))
    dt = time.perf_counter() - t0
    ok = (worst["round_trip"] <= 1e-12 and worst["parseval"] <= 1e-10 and worst["projector"] == 0
          and worst["parity"] <= 1e-12 and dt < 10)
    record_criterion(1, "spectral core", ok,
                     ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {dt:.1f} s")
    assert ok


def test_criterion_02_symbol_bounds():
    t0 = time.perf_counter()
    g = Grid(40.0, 1024)
    worst, fails = 0.0, []
    for eps in np.linspace(0.2, 1.0, 5):
        for alpha in np.linspace(0.0, 0.7, 5):
            rep = verify_symbol_bounds(g, SymbolParams(float(eps), float(alpha)), raise_on_fail=False)
            worst = max(worst, max(r["max_ratio"] for r in rep.values()))
            fails += [f"{n}@({eps:.2f},{alpha:.3f})" for n, r in rep.items() if not r["pass"]]
    dt = time.perf_counter() - t0
    ok = not fails and dt < 5
    record_criterion(2, "symbol bounds", ok, f"worst ratio {worst:.4f} over 25 (eps, alpha), {dt:.2f} s"
                     + (f", failed {fails}" if fails else ""))
    assert ok


@pytest.mark.slow
def test_criterion_03_dispersion():
    eps, alpha = 0.1, 0.1
    kc = critical_wavenumber(eps, alpha)
    ks = [f * kc for f in (0.25, 0.5, 0.75, 1.25, 1.5, 2.0)]
    t0 = time.perf_counter()
    table = dispersion_experiment(eps, alpha, ks, tol=0.01)
    dt = time.perf_counter() - t0
    errs = [max(r["rel_err_cgl"], r["rel_err_coupled"]) for r in table]
    ok = all(r["pass"] for r in table) and dt < 120
    detail = ", ".join(f"k/kc={k / kc:.2f}: {e:.2%}" for k, e in zip(ks, errs))
    record_criterion(3, "dispersion vs lambda(k)", ok, f"{detail}, {dt:.0f} s")
    assert ok


def test_criterion_04_decomposition_identity():
    rng = np.random.default_rng(4)
    g = Grid(20.0, 128)
    t0 = time.perf_counter()
    worst = 0.0
    for eps in (0.1, 0.5, 1.0):
        for alpha in (0.0, 0.3, 0.7):
            p = SymbolParams(eps, alpha)
            for _ in range(50):
                s = random_real_field(g, rng, 3.0, "even") * 0.3
                mu = random_real_field(g, rng, 3.0, "odd") * 0.5
                for f in (s, mu):
                    f.coeffs[np.abs(g.n) > g.N // 6] = 0
                worst = max(worst, decomposition_residual(StateSM(s, mu, p)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 30
    record_criterion(4, "decomposition identity", ok, f"max relative residual {worst:.2e}, {dt:.1f} s")
    assert ok


def test_criterion_05_LM_asymptotics():
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (0.1, 0.5):
        for eps in (0.05, 0.1, 0.5, 1.0):
            worst = max(worst, *LM_asymptote_defect(eps, alpha))
    dt = time.perf_counter() - t0
    ok = worst < 0.05 and dt < 1
    record_criterion(5, "L_M asymptotics", ok, f"max defect {worst:.2e} at k = 200/eps, {dt:.3f} s")
    assert ok


def test_criterion_06_coercive_functional():
    t0 = time.perf_counter()
    parts = []
    ok = True
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for L in (2 * np.pi, 10.0, 25.0, 50.0):
            phi = build_phi(L)
            eps, binding = eps_binding(L)
            pp = inner(phi.phi, phi.phi)
            hs, tail = gamma_hs_norm(L, eps)
            slack = min(coercivity_check(200, L, eps, gamma, seed=6, phi=phi, raise_on_fail=False)["min_lower_slack"]
                        for gamma in (0.25, 1.0))
            good = pp <= 4 / 3 * L ** 3 and hs + tail < 1 / 16 and hs + tail <= hs_envelope(L) and slack >= 0
            ok &= bool(good)
            parts.append(f"L={L:.3g}: (phi,phi)/L^3={pp / L ** 3:.3f} HS={hs + tail:.2e} slack={slack:.3f}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    record_criterion(6, "coercive functional", ok, "; ".join(parts) + f", {dt:.1f} s")
    assert ok


def test_criterion_07_norm_machinery():
    t0 = time.perf_counter()
    p = NormParams(6.0, 2.0, Grid(40.0, 256))
    checks = norm_inequality_checks(p, trials=500, seed=7)
    c1 = estimate_product_constant(p, 500, seed=1)
    c2 = estimate_product_constant(p, 500, seed=2)
    stable = abs(c1 - c2) <= 0.1 * max(c1, c2) and np.isfinite(c1)
    q = quotient_check(p, max(c1, c2, c_infinity()), 500, seed=7)
    dt = time.perf_counter() - t0
    ok = all(v["pass"] for v in checks.values()) and stable and q["pass"] and dt < 60
    worst = max(v["max_ratio"] for v in checks.values())
    record_criterion(7, "norm machinery", ok,
                     f"worst inequality ratio {worst:.3f}, C_m {c1:.3f}/{c2:.3f}, "
                     f"quotient ratio {q['max_ratio']:.3f} <= 2, {dt:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_08_ks_attractor(attractor):
    a = attractor
    ok = a["bounded"] and 0.4 <= a["exponent"] <= 1.7 and a["seconds"] < 1200
    means = ", ".join(f"L={L:g}: {m:.2f}" for L, m in zip(a["L"], a["tail_mean"]))
    record_criterion(8, "KS attractor", ok,
                     f"tail means {means}; exponent {a['exponent']:.3f} "
                     f"(per seed {min(a['per_seed_exponent']):.2f}..{max(a['per_seed_exponent']):.2f}); "
                     f"bounded {a['bounded']}, {a['seconds']:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_09_slaving(sweep):
    r = sweep["residual_ratios"]
    ok = all(x >= 3 for x in r) and sweep["seconds"] < 1800
    res = ", ".join(f"{e:g}: {m:.2e}" for e, m in zip(sweep["eps_hat"], sweep["mean_residual"]))
    record_criterion(9, "slaving residual", ok,
                     f"mean residual {res}; ratios {', '.join(f'{x:.1f}' for x in r)}, {sweep['seconds']:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_10_ks_approximation(sweep):
    ks = sweep["ks_sup_rel_error"]
    ok = all(ks[i] > ks[i + 1] for i in range(len(ks) - 1))
    record_criterion(10, "KS approximation", ok,
                     "sup relative error " + ", ".join(f"{e:g}: {x:.2e}" for e, x in zip(sweep["eps_hat"], ks)))
    assert ok


@pytest.mark.slow
def test_criterion_11_formulation_equivalence():
    t0 = time.perf_counter()
    r = formulation_equivalence(eps_hat=0.05, alpha=0.1, L=40.0, N=256, dt_hat=0.001, t_end=1.0)
    dt = time.perf_counter() - t0
    ok = r["max_mu_rel_err"] < 1e-3 and r["max_s_rel_err"] < 1e-3 and r["max_r2_rel_err"] < 1e-4 and dt < 1200
    record_criterion(11, "formulation equivalence", ok,
                     f"mu {r['max_mu_rel_err']:.2e}, s {r['max_s_rel_err']:.2e}, "
                     f"r2 {r['max_r2_rel_err']:.2e}, {dt:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_12_unscaled_exponents(sweep):
    ag = sweep["appendixG"]
    s, e = ag["s_Linf_unscaled_slope"], ag["eta_Linf_unscaled_slope"]
    ok = 3.5 <= s <= 4.5 and 1.6 <= e <= 2.2
    record_criterion(12, "eps exponents", ok, f"slope ||s||_Linf {s:.3f}, ||eta||_Linf {e:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_13_structure(sweep, attractor):
    rows = [r for ser in sweep["runs"].values() for r in ser.rows]
    mu_mean = max(r["mu_mean"] for r in rows)
    tri = max(abs(r["trilinear"]) for r in rows)
    s2mu = max(abs(r["s2mu_prime"]) for r in rows)
    par = max(r["parity_defect"] for r in rows)
    ks = [run["checks"] for runs in attractor["runs"].values() for run in runs]
    mu_mean = max(mu_mean, max(c["mu_mean"] for c in ks))
    tri = max(tri, max(c["trilinear"] for c in ks))
    par = max(par, max(c["parity"] for c in ks))
    ok = mu_mean <= 1e-13 and tri <= 1e-12 and s2mu <= 1e-12 and par <= 1e-12
    record_criterion(13, "structure", ok,
                     f"mu mean {mu_mean:.1e}, int mu^2 mu' {tri:.1e}, int (s^2 mu)' {s2mu:.1e}, "
                     f"parity defect {par:.1e} over {len(rows) + len(ks)} records")
    assert ok
