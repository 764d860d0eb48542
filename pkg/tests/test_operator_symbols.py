import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cglphase.operator_symbols import (BoundViolation, LM_asymptote_defect, SymbolParams, ValidityWarning,
                                       apply_symbol, cgl_plane_wave_rate, critical_wavenumber,
                                       dispersion_lambda, matrix_LM, matrix_LM_eigenvalues, symbol_G,
                                       symbol_Lmu, symbol_Lmuc, symbol_Lmur, symbol_Lr, symbol_Ls, symbol_Lv,
                                       symbol_table, verify_symbol_bounds)
from cglphase.spectral_grid import Grid

from conftest import random_real_field

ALL = [symbol_G, symbol_Ls, symbol_Lmu, symbol_Lr, symbol_Lmur, symbol_Lv]


def test_G_examples():
    p = SymbolParams(1.0, 0.1)
    assert symbol_G(0.0, p) == 1.0
    assert symbol_G(np.sqrt(2), p) == pytest.approx(0.5)
    for eps in (0.1, 0.5, 1.0):
        k = 100 / eps
        assert symbol_G(k, SymbolParams(eps, 0.1)) * k ** 2 == pytest.approx(2 / eps ** 2, rel=0.01)


def test_Lmu_examples():
    p = SymbolParams(0.5, 0.2)
    assert symbol_Lmu(0.0, p) == 0 and symbol_Lmu(1.0, p) == 0 and symbol_Lmu(-1.0, p) == 0
    assert symbol_Lmu(2.0, SymbolParams(0.0, 0.2)) == 12
    k = np.linspace(0.01, 0.99, 50)
    assert np.all(symbol_Lmu(k, p) < 0)
    kk = np.linspace(2, 500, 5000)
    for eps in (0.1, 0.5, 1.0):
        assert np.all(symbol_Lmu(kk, SymbolParams(eps, 0.3)) >= 4 - 1e-12)


def test_other_symbols_at_zero():
    for eps, a in [(0.3, 0.1), (1.0, 0.6)]:
        p = SymbolParams(eps, a)
        assert symbol_Ls(0.0, p) == 1 and symbol_Lr(0.0, p) == 1
        assert symbol_Lv(0.0, p) == pytest.approx(np.sqrt(1 / 3))
        assert symbol_Lmur(0.0, p) / 8 == pytest.approx((2 + eps ** 2 * (1 + a ** 2)) / 4)
    assert symbol_Lmur(0.0, SymbolParams(0.0, 0.4)) == pytest.approx(4.0)
    k = np.linspace(-3, 3, 61)
    assert symbol_Lmuc(k).min() >= -0.25 - 1e-15
    assert symbol_Lmuc(1 / np.sqrt(2)) == pytest.approx(-0.25)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-0.7, 0.7))
def test_symbols_even_and_positive(eps, a):
    p = SymbolParams(eps, a)
    k = np.linspace(0, 50, 301)
    for f in ALL:
        assert np.allclose(f(k, p), f(-k, p), rtol=1e-15, atol=0)
    assert np.all(symbol_Ls(k, p) >= 1) and np.all(symbol_Lr(k, p) >= 1) and np.all(symbol_Lv(k, p) > 0)
    G = symbol_G(k, p)
    assert np.all((G > 0) & (G <= 1))
    assert np.allclose(symbol_Lmu(k, p), G * symbol_Lmuc(k), rtol=1e-14, atol=0)


def test_G_tends_to_identity():
    k = Grid(40.0, 256).k
    devs = [np.max(np.abs(symbol_G(k, SymbolParams(e, 0.1)) - 1)) for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(a > b for a, b in zip(devs, devs[1:])) and devs[-1] < 1e-5


def test_tables_cached_and_reciprocal(rng):
    g = Grid(30.0, 64)
    p = SymbolParams(0.4, 0.2)
    t = symbol_table("Lr", g, p)
    assert symbol_table("Lr", g, p) is t
    with pytest.raises(ValueError):
        t.values[0] = 2.0
    F = random_real_field(g, rng)
    for name in ("G", "Ls", "Lr", "Lv"):
        vals = symbol_table(name, g, p).values
        back = apply_symbol(name, F, p).with_coeffs(apply_symbol(name, F, p).coeffs / vals)
        assert np.allclose(back.coeffs, F.coeffs, rtol=1e-12, atol=0)
    inv = symbol_table("Lmu_inv", Grid(2 * np.pi, 32), p).values
    assert inv[0] == 0 and inv[1] == 0 and inv[-1] == 0 and np.isfinite(inv).all()


def test_dispersion_relation():
    for eps, a in [(0.1, 0.1), (0.05, 0.3)]:
        kc = critical_wavenumber(eps, a)
        assert kc == pytest.approx(eps * np.sqrt(2 / (1 + a ** 2)))
        assert dispersion_lambda(0.0, eps, a) == 0
        assert abs(dispersion_lambda(kc, eps, a)) < 1e-18
        k = np.linspace(1e-4, 5 * kc, 2000)
        lam = dispersion_lambda(k, eps, a)
        assert np.all(lam[k < kc * (1 - 1e-9)] > 0) and np.all(lam[k > kc * (1 + 1e-9)] < 0)
        # at most like e^{C eps^4 t}; the maximum is eps^4/(2(1+a^2)) to leading order
        assert lam.max() / eps ** 4 <= 1 / (2 * (1 + a ** 2)) + 1e-6


def test_plane_wave_rate_against_eigvals():
    # oracle: eigenvalues of the linearization about the plane wave, perturbation (Re, Im)
    for eps, a in [(0.1, 0.1), (0.3, 0.5)]:
        beta = -(1 + eps ** 2) / a
        for k in np.linspace(0.01, 2.0, 13):
            J = np.array([[-k ** 2 - 2, a * k ** 2], [-a * k ** 2 - 2 * beta, -k ** 2]])
            oracle = np.max(np.linalg.eigvals(J).real)
            assert cgl_plane_wave_rate(k, eps, a) == pytest.approx(oracle, abs=1e-13)
            # small-k reduction
        k = np.array([1e-3, 2e-3])
        assert np.allclose(cgl_plane_wave_rate(k, eps, a), dispersion_lambda(k, eps, a), rtol=1e-4)


def test_LM_eigenvalues():
    for eps, a in [(0.2, 0.1), (0.7, 0.5), (0.5, -0.3)]:
        p = SymbolParams(eps, a)
        for k in (0.3, 1.7, 20.0, 400.0):
            lp, lm = matrix_LM_eigenvalues(k, p)
            ev = np.linalg.eigvals(matrix_LM(k, p))
            for lam in (lp, lm):
                assert np.min(np.abs(ev - lam)) <= 1e-9 * np.max(np.abs(ev))
            m = matrix_LM(k, p)
            tr = -symbol_Lmu(k, p) - p.chi / eps ** 4 * symbol_G(k, p) * symbol_Lr(k, p)
            assert (lp + lm).real == pytest.approx(tr, rel=1e-10)
            assert np.trace(m).real == pytest.approx(tr, rel=1e-14)
            assert lp.imag <= lm.imag
    # alpha = 0: real spectrum at large k
    lp, lm = matrix_LM_eigenvalues(1e3, SymbolParams(0.3, 0.0))
    assert abs(lp.imag) < 1e-9 * abs(lp) and abs(lm.imag) < 1e-9 * abs(lm)


def test_LM_asymptote():
    for a in (0.1, 0.5):
        for eps in (0.1, 0.5, 1.0):
            assert max(LM_asymptote_defect(eps, a)) < 0.05


def test_symbol_bound_examples():
    rep = verify_symbol_bounds(Grid(2 * np.pi * 10, 256), SymbolParams(0.5, 0.3))
    assert all(v["pass"] for v in rep.values())
    assert set(rep) == {"Lmur_le_8", "k_over_Lv_le_2", "Lv_over_1pk2_le_1", "F1_multiplier"}
    rep = verify_symbol_bounds(Grid(2 * np.pi * 10, 256), SymbolParams(1.0, 0.7))
    assert all(v["pass"] for v in rep.values())
    with pytest.warns(ValidityWarning), pytest.raises(ValueError):
        verify_symbol_bounds(Grid(20.0, 64), SymbolParams(0.5, 0.75))


def test_alpha_warning_is_soft():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        p = SymbolParams(0.5, 0.8)
        assert symbol_G(1.0, p) > 0
    assert any(issubclass(x.category, ValidityWarning) for x in w)
    assert BoundViolation.__mro__[1] is AssertionError
