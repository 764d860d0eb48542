import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from cglphase.norm_lab import (ClassCParams, NormParams, c_infinity, check_class_C, derivative_cost_ratios,
                               estimate_K, estimate_product_constant, norm_inequality_checks, norm_L2,
                               norm_Linf, norm_lp, norm_N_sigma, norm_report, norm_sigma, norm_W_sigma,
                               product_ratio, quotient_check, random_field, tail_weight)
from cglphase.operator_symbols import SymbolParams
from cglphase.phase_system import slaved_s
from cglphase.spectral_grid import Grid, GridMismatchError, SpectralField, derivative, from_function, zeros


@pytest.fixture
def p():
    return NormParams(6.0, 2.0, Grid(40.0, 256))


def test_c_infinity_from_quadrature():
    a = integrate.quad(lambda x: 2 * np.pi / (1 + x * x), -np.inf, np.inf)[0]
    b = integrate.quad(lambda x: (1 + x * x) ** -0.75, -np.inf, np.inf)[0]
    assert c_infinity() == pytest.approx(1 + max(np.sqrt(a), b), rel=1e-10)
    assert c_infinity() == pytest.approx(6.2441, abs=1e-4)


def test_basic_norms(p):
    g = p.grid
    z = zeros(g)
    assert norm_L2(z) == 0 and norm_Linf(z) == 0 and norm_sigma(z, p) == 0 and norm_N_sigma(z, p) == 0
    one = from_function(lambda x: np.ones_like(x), g)
    assert norm_L2(one) == pytest.approx(np.sqrt(g.L))
    f = random_field(p, np.random.default_rng(1))
    assert norm_L2(f) == pytest.approx(np.sqrt(g.L) * f.l2(), rel=1e-10)
    # L^4 against quadrature of the explicit trigonometric sum
    n, c = f.ordered()
    val = integrate.quad(lambda x: abs(np.sum(c * np.exp(1j * g.q * n * x))) ** 4, -g.L / 2, g.L / 2,
                         limit=400)[0]
    assert norm_lp(f, 4) == pytest.approx(val ** 0.25, rel=1e-6)


def test_W_sigma_examples(p):
    g = p.grid
    lo = SpectralField(np.where(np.abs(g.n) <= p.delta / g.q, 1.0, 0.0), g)
    assert norm_W_sigma(lo, p) == 0
    g2 = Grid(np.pi * 10, 128)  # q = 0.2, delta = 2: q m = 2 delta at m = 20
    p2 = NormParams(3.0, 2.0, g2)
    c = np.zeros(128, complex)
    c[20] = 1
    assert norm_W_sigma(SpectralField(c, g2), p2) == pytest.approx(np.sqrt(2) / 0.2 * 5 ** 1.5)


def test_grid_mismatch(p):
    with pytest.raises(GridMismatchError):
        norm_sigma(zeros(Grid(10.0, 32)), p)
    with pytest.raises(ValueError):
        NormParams(3.0, 1.0, p.grid)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.5, 7.0), st.floats(-3, 3))
def test_seminorm_properties(seed, s, a):
    p = NormParams(s, 2.5, Grid(30.0, 128))
    rng = np.random.default_rng(seed)
    f, h = random_field(p, rng), random_field(p, rng)
    assert norm_sigma(f * a, p) == pytest.approx(abs(a) * norm_sigma(f, p), rel=1e-12)
    assert norm_sigma(f + h, p) <= norm_sigma(f, p) + norm_sigma(h, p) + 1e-12
    assert norm_W_sigma(f + h, p) <= norm_W_sigma(f, p) + norm_W_sigma(h, p) + 1e-12


def test_inequality_sweep(p):
    rep = norm_inequality_checks(p, trials=60, seed=3)
    assert all(v["pass"] for v in rep.values()), rep


def test_derivative_costs(p):
    f = random_field(p, np.random.default_rng(5))
    r = derivative_cost_ratios(f, p)
    assert set(r) == {"sigma_1", "sigma_2", "Linf_1", "Linf_2"}
    assert max(r.values()) <= 1


def test_tail_weight_flags_resolution(p):
    g = p.grid
    c = np.zeros(g.N, complex)
    c[g.N // 2 - 1] = c[-(g.N // 2 - 1)] = 1e-3
    assert tail_weight(SpectralField(c, g), p) > 0
    rep = norm_report(SpectralField(c, g), p)
    assert {"L2", "W_sigma", "N_sigma", "sigma_norm", "tail_weight"} <= set(rep)


def test_product_constant(p):
    g = p.grid
    one = from_function(lambda x: np.ones_like(x), g)
    assert product_ratio(one, one, p) == pytest.approx(1 / (np.sqrt(p.delta) * np.sqrt(g.L)))
    a = estimate_product_constant(p, trials=100, seed=1)
    b = estimate_product_constant(p, trials=100, seed=2)
    assert np.isfinite(a) and abs(a - b) <= 0.1 * max(a, b)
    with pytest.raises(ValueError):
        estimate_product_constant(p, trials=10)
    with pytest.raises(ValueError):
        estimate_product_constant(NormParams(1.0, 2.0, g), trials=100)
    q = quotient_check(p, max(a, c_infinity()), trials=40)
    assert q["pass"] and q["min_1_plus_v"] > 0


def test_estimate_K():
    assert estimate_K([1.0, 3.0, 2.0], 10.0) == pytest.approx(3.0 / 10 ** 1.6)


def _eta(g, amp):
    """Even eta with eta(0) = 0."""
    c = np.zeros(g.N, complex)
    for m, a in ((1, amp), (2, -0.4 * amp), (3, 0.2 * amp)):
        c[m] = c[-m] = a / 2
    c[0] = -np.sum(c)
    return SpectralField(c, g, "even")


def test_class_C_examples():
    cp = ClassCParams(L=40.0, eps_hat=0.05)
    g = Grid(40.0, 128)
    z = zeros(g, "even")
    rep = check_class_C(z, z, cp)
    assert rep.member and all(c.lhs == 0 for c in rep.conditions)
    assert ClassCParams(K=2.0, L=10.0).rho == pytest.approx(2 * 10 ** 1.6)
    # slaved data: the slaving left side is a higher-order remainder and passes
    eta = _eta(g, 0.5)
    s0 = slaved_s(derivative(eta), SymbolParams(cp.eps_hat, cp.alpha))
    rep = check_class_C(eta, s0, cp)
    assert rep.member, rep.as_dict()
    slav = [c for c in rep.conditions if c.name == "slaving_condition"][0]
    assert slav.lhs < 1e-3 * slav.rhs
    # eta(0) != 0 fails and names the condition
    bad = eta.with_coeffs(eta.coeffs + np.eye(1, g.N, 0)[0] * 0.1)
    rep = check_class_C(bad, s0, cp)
    assert not rep.member and rep.failed() == ["eta0(0)=0"]
    # both s0 thresholds are reported
    assert len(rep.extra) == 1
    with pytest.raises(GridMismatchError):
        check_class_C(eta, zeros(Grid(40.0, 64), "even"), cp)
    with pytest.raises(GridMismatchError):
        check_class_C(zeros(Grid(30.0, 64)), zeros(Grid(30.0, 64)), cp)
