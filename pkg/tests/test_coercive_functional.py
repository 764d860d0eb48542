import numpy as np
import pytest

from cglphase.coercive_functional import (Lv_norm_sq, M_of_L, ResolutionError, build_phi,
                                          coercivity_check, cv_min_ratio, cv_squared, eps_binding,
                                          gamma_hs_norm, hs_envelope, inner, inner_gamma_phi,
                                          phi_prime_sup, phi_summary, profile, profile_prime,
                                          random_antisymmetric, support_check)
from cglphase.operator_symbols import SymbolParams, symbol_Lmu
from cglphase.spectral_grid import Grid, GridMismatchError, parity_defect, zeros


def test_profile_constraints():
    k = np.linspace(0, 10, 100001)
    assert profile(0.0) == 1.0 and profile_prime(0.0) == 0.0
    assert np.all(np.diff(profile(k)) <= 0)
    assert np.max(np.abs(profile_prime(k))) == pytest.approx(np.sqrt(2 / np.e), rel=1e-8)
    assert np.max(np.abs(profile_prime(k))) < 1
    # finite difference of the profile matches its derivative
    np.testing.assert_allclose(np.gradient(profile(k), k)[1:-1], profile_prime(k)[1:-1], atol=1e-8)


@pytest.mark.parametrize("L, M", [(2 * np.pi, 7), (10.0, 13), (50.0, 120)])
def test_M_of_L(L, M):
    assert M_of_L(L) == M
    assert M > L ** 1.4 / 2 >= M - 1


@pytest.mark.parametrize("L", [2 * np.pi, 10.0, 50.0])
def test_phi_examples(L):
    phi = build_phi(L)
    g = phi.grid
    assert inner(phi.phi, phi.phi) <= 4 / 3 * L ** 3
    assert parity_defect(phi.phi, "odd") < 1e-12 * phi.phi.l2()
    assert phi.phi.coeffs[0] == 0
    assert phi.phi.coeffs[1] == pytest.approx(4j / g.q, rel=1e-15)
    n = 2 * phi.M
    assert phi.phi.coeffs[n] == pytest.approx(4j / (g.q * n), rel=1e-15)
    assert abs(phi.phi.coeffs[n + 1]) < 4 / (g.q * (n + 1))


def test_phi_resolution_error():
    with pytest.raises(ResolutionError):
        build_phi(50.0, N=64)
    with pytest.raises(ValueError):
        build_phi(3.0)


def test_inner_gamma_phi(rng):
    L, eps = 10.0, 0.1
    phi = build_phi(L)
    g = phi.grid
    assert inner_gamma_phi(zeros(g, "odd"), zeros(g, "odd"), 0.25, eps, phi) == 0
    v = random_antisymmetric(g, rng)
    n = g.n
    pos = (n > 0) & (n < g.N // 2)
    direct = 2 * L * float(np.sum(symbol_Lmu(g.k[pos], SymbolParams(eps, 0.0)) * np.abs(v.coeffs[pos]) ** 2))
    assert inner_gamma_phi(v, v, 0.0, eps, phi) == pytest.approx(direct, rel=1e-10)
    base = inner_gamma_phi(phi.phi, phi.phi, 0.0, eps, phi)
    for gamma in (0.25, 1.0):
        assert inner_gamma_phi(phi.phi, phi.phi, gamma, eps, phi) == pytest.approx(base, rel=1e-10)
    with pytest.raises(GridMismatchError):
        inner_gamma_phi(zeros(Grid(L, 64), "odd"), v, 0.25, eps, phi)


def test_hs_norm_small_L():
    L = 4 * np.pi
    total, tail = gamma_hs_norm(L, 0.0)
    assert total + tail < 1 / 16
    assert total <= hs_envelope(L)
    assert tail <= 0.01 * total


def test_hs_truncation_error():
    with pytest.raises(ResolutionError):
        gamma_hs_norm(4 * np.pi, 0.0, N_trunc=2 * M_of_L(4 * np.pi) + 2)
    with pytest.raises(ValueError):
        gamma_hs_norm(4 * np.pi, 1.0)


def test_hs_norm_uniform_in_L():
    # q^-7 M^-5 tends to the constant 32/(2 pi)^7, so the norm saturates rather than decays
    vals = []
    for L in (2 * np.pi, 10.0, 25.0, 50.0, 100.0):
        total, tail = gamma_hs_norm(L, 0.0)
        assert total + tail < 1 / 16 and total <= hs_envelope(L)
        vals.append(total)
    assert max(vals) < 1.5 * min(vals)
    assert hs_envelope(1e4) == pytest.approx((80 * np.pi / 3) * 32 / (2 * np.pi) ** 7, rel=0.01)


def test_support(rng):
    L = 25.0
    pairs = rng.integers(1, 4 * M_of_L(L), size=(5000, 2))
    assert support_check(L, pairs)


def test_coercivity_phi_itself():
    L = 10.0
    eps, _ = eps_binding(L)
    phi = build_phi(L)
    g = phi.grid
    for gamma in (0.25, 1.0):
        form = inner_gamma_phi(phi.phi, phi.phi, gamma, eps, phi)
        v2 = g.L * float(np.sum(np.abs(g.k ** 2 * phi.phi.coeffs) ** 2))
        assert 0.75 * Lv_norm_sq(phi.phi, eps) <= form <= phi_prime_sup(phi) * inner(phi.phi, phi.phi) + v2


def test_coercivity_random():
    rep = coercivity_check(200, 10.0, eps=0.1, gamma=0.25)
    assert rep["violations"] == 0 and rep["min_lower_slack"] >= 0


def test_coercivity_argument_checks():
    with pytest.raises(ValueError):
        coercivity_check(1, 10.0, gamma=0.1)
    with pytest.raises(ValueError):
        coercivity_check(1, 10.0, eps=1.0)


def test_cv_squared():
    assert cv_squared(0.0) == pytest.approx(1 / 3)
    assert cv_squared(1e-3) == pytest.approx(1 / 3, rel=1e-6)
    for eps in (0.05, 0.3, 1.0):
        e4 = eps ** 4
        assert cv_squared(eps) == pytest.approx(4 / 3 * (np.sqrt(e4 + 4) - 2) / e4, rel=1e-12)
        # the quoted constant never exceeds the sharp one on a fine grid
        assert cv_squared(eps) <= cv_min_ratio(Grid(200.0, 4096), eps) * (1 + 1e-12)


def test_eps_binding():
    for L in (2 * np.pi, 10.0, 50.0):
        b, name = eps_binding(L)
        q = 2 * np.pi / L
        assert b == min(L ** -0.4, 1 / (M_of_L(L) * q), 1 / (np.pi * L ** 0.4))
        assert name in ("L^(-2/5)", "1/(Mq)", "1/(pi L^(2/5))")


def test_K_and_phi_prime_bounded():
    rows = [phi_summary(L) for L in (2 * np.pi, 10.0, 25.0, 50.0, 100.0)]
    K = [r["K_ratio"] for r in rows]
    D = [r["phi_prime_sup_ratio"] for r in rows]
    assert max(K) < 10 * min(K) and max(D) < 10 * min(D)
    for r in rows:
        assert abs(r["phi_phi_phi"]) < 1e-8 * r["phi_norm_sq"] ** 1.5
