"""Nonlinear maps of the scaled (s, mu) system.

All fields are scaled ("hatted") quantities with eps standing for eps_hat.
Products and the quotient by 1 + eps^4 alpha^2 s are taken pointwise on a
3/2-padded grid and truncated back, so every quadratic product is alias free.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .operator_symbols import SymbolParams, symbol_G, symbol_Lmu, symbol_Lmur, symbol_Lr, symbol_Ls
from .spectral_grid import (Grid, ParityError, SpectralField, check_parity, pad_coeffs, to_coeffs,
                            to_real_values)


class SingularDenominatorError(ArithmeticError):
    pass


DENOM_TOL = 1e-6


class Pseudo:
    """Spectral derivatives and padded pseudo-spectral products on one grid."""

    def __init__(self, grid: Grid, p: SymbolParams):
        self.grid, self.p = grid, p
        M = (3 * grid.N + 1) // 2
        self.big = Grid(grid.L, M + (M % 2))
        k = grid.k
        self.ik = 1j * k
        self.ik[grid.N // 2] = 0.0  # odd derivatives drop the Nyquist mode
        self.k2 = k ** 2
        self.G = symbol_G(k, p)
        self.Ls = symbol_Ls(k, p)
        self.Lmu = symbol_Lmu(k, p)
        self.Lmur = symbol_Lmur(k, p)
        self.Lr = symbol_Lr(k, p)

    def d(self, c, m: int = 1):
        if m % 2:
            return c * self.ik * (-self.k2) ** (m // 2)
        return c * (-self.k2) ** (m // 2)

    def phys(self, c):
        return to_real_values(pad_coeffs(c, self.big.N), self.big)

    def spec(self, v):
        return pad_coeffs(to_coeffs(v, self.big), self.grid.N)

    def denom(self, s_phys):
        p = self.p
        D = 1.0 + p.eps ** 4 * p.alpha ** 2 * s_phys
        m = float(np.min(np.abs(D)))
        if m < DENOM_TOL:
            raise SingularDenominatorError(f"min |1 + eps^4 alpha^2 s| = {m:.3e} < {DENOM_TOL:g}")
        return D


# -- raw coefficient-array terms ---------------------------------------------

def r1_c(P: Pseudo, mu):
    e2 = P.p.eps ** 2
    return -(4 * P.d(mu) + e2 * P.spec(P.phys(mu) ** 2)) / 32


def F0_c(P: Pseudo, s, mu):
    p = P.p
    e2, a2, chi = p.eps ** 2, p.alpha ** 2, p.chi
    S, Sx, Sxx, M = P.phys(s), P.phys(P.d(s)), P.phys(P.d(s, 2)), P.phys(mu)
    D = P.denom(S)
    mu2 = P.spec(M ** 2)
    a = a2 * chi * P.spec((2 + e2 * (1 + a2)) * S ** 2 + Sx * M / D - 2 * e2 * a2 * S * Sxx / D)
    return a - 0.25 * P.G * mu2 - 0.25 * P.G * P.d(mu2, 2)


def F1_c(P: Pseudo, s, mu):
    p = P.p
    e2, a2, chi = p.eps ** 2, p.alpha ** 2, p.chi
    S, Sx, Sxx, M = P.phys(s), P.phys(P.d(s)), P.phys(P.d(s, 2)), P.phys(mu)
    D = P.denom(S)
    return chi * a2 * P.spec((2 + e2 * (1 + a2)) * S ** 2 - a2 * e2 ** 2 * Sx * S * M / D
                             - 2 * a2 * S * e2 * Sxx / D)


def F2_c(P: Pseudo, s, r, mu):
    p = P.p
    e2, a2, chi = p.eps ** 2, p.alpha ** 2, p.chi
    M, Mx, Mxx = P.phys(mu), P.phys(P.d(mu)), P.phys(P.d(mu, 2))
    R, Rx, S, Sx = P.phys(r), P.phys(P.d(r)), P.phys(s), P.phys(P.d(s))
    mu2 = P.spec(M ** 2)
    return (-0.25 * mu2 - 0.25 * P.d(mu2, 2)
            + (chi * a2 / 2) * P.spec(2 * M * Rx + 4 * Mx * R - 4 * Mx * S - Mxx * e2 * Sx))


def F3_c(P: Pseudo, s, mu):
    p = P.p
    e2, a2, chi = p.eps ** 2, p.alpha ** 2, p.chi
    S, M = P.phys(s), P.phys(mu)
    return -a2 * chi * P.spec(1.5 * S ** 2 + e2 * S * M ** 2 / 32 + (a2 / 2) * e2 ** 2 * S ** 3)


def F4_c(P: Pseudo, s, mu):
    a2, chi = P.p.alpha ** 2, P.p.chi
    S, Sx, M, Mx = P.phys(s), P.phys(P.d(s)), P.phys(mu), P.phys(P.d(mu))
    return -(a2 * chi / 8) * P.spec(2 * Sx * M + S * Mx)


def _d_plus_mu(P: Pseudo, f, mu):
    """(d/dx + eps^2 mu / 2) f."""
    e2 = P.p.eps ** 2
    return P.d(f) + (e2 / 2) * P.spec(P.phys(mu) * P.phys(f))


def F7_c(P: Pseudo, s, mu):
    return (P.p.eps ** 2 / 8) * _d_plus_mu(P, P.d(F0_c(P, s, mu)), mu)


def F8_c(P: Pseudo, mu):
    M = P.phys(mu)
    inner = P.Lmu * mu + P.spec(M * P.phys(P.d(mu)))
    return -_d_plus_mu(P, inner, mu) / 8


def F6_c(P: Pseudo, s, mu):
    return P.Ls * (F3_c(P, s, mu) + F4_c(P, s, mu)) + F7_c(P, s, mu) + F8_c(P, mu)


def r2_c(P: Pseudo, s, mu):
    e4 = P.p.eps ** 4
    if e4 == 0:
        raise ValueError("r2 needs eps > 0")
    return (P.Ls * s - r1_c(P, mu)) / e4


def Ftotal_c(P: Pseudo, s, mu):
    return F0_c(P, s, mu) + P.p.chi * P.Lmur * r2_c(P, s, mu)


# -- field-level API ----------------------------------------------------------

_PSEUDO: dict = {}


def pseudo(grid: Grid, p: SymbolParams) -> Pseudo:
    key = (grid.L, grid.N, p.eps, p.alpha)
    if key not in _PSEUDO:
        if len(_PSEUDO) > 32:
            _PSEUDO.clear()
        _PSEUDO[key] = Pseudo(grid, p)
    return _PSEUDO[key]


@dataclass(frozen=True)
class StateSM:
    s: SpectralField
    mu: SpectralField
    params: SymbolParams

    def __post_init__(self):
        if not self.s.grid.same_as(self.mu.grid):
            from .spectral_grid import GridMismatchError
            raise GridMismatchError("s and mu live on different grids")

    def validate(self, tol: float = 1e-8) -> None:
        """Check parity tags and the zero-mean condition on mu."""
        check_parity(self.s, "even", tol)
        check_parity(self.mu, "odd", tol)
        if abs(self.mu.coeffs[0]) > tol * max(1.0, self.mu.l2()):
            raise ParityError(f"mu has nonzero mean {self.mu.coeffs[0]:.3e}")

    @cached_property
    def P(self) -> Pseudo:
        return pseudo(self.s.grid, self.params)

    def _wrap(self, c, parity="even") -> SpectralField:
        return SpectralField(c, self.s.grid, parity)


def r1(mu: SpectralField, params: SymbolParams) -> SpectralField:
    return SpectralField(r1_c(pseudo(mu.grid, params), mu.coeffs), mu.grid, "even")


def s1(mu: SpectralField) -> SpectralField:
    """Unscaled slaved amplitude -(1/2) G (mu' + mu^2) with G = (1 + k^2/2)^-1."""
    P = pseudo(mu.grid, SymbolParams(1.0, 0.0))
    c = mu.coeffs
    return SpectralField(-0.5 * P.G * (P.d(c) + P.spec(P.phys(c) ** 2)), mu.grid, "even")


def F0(st: StateSM) -> SpectralField:
    return st._wrap(F0_c(st.P, st.s.coeffs, st.mu.coeffs))


def F1(st: StateSM) -> SpectralField:
    return st._wrap(F1_c(st.P, st.s.coeffs, st.mu.coeffs))


def r_of(st: StateSM) -> SpectralField:
    """r = (1 - (eps^2/2) d^2) s."""
    return st._wrap(st.P.Ls * st.s.coeffs)


def F2(st: StateSM) -> SpectralField:
    return st._wrap(F2_c(st.P, st.s.coeffs, st.P.Ls * st.s.coeffs, st.mu.coeffs))


def F3(st: StateSM) -> SpectralField:
    return st._wrap(F3_c(st.P, st.s.coeffs, st.mu.coeffs))


def F4(st: StateSM) -> SpectralField:
    return st._wrap(F4_c(st.P, st.s.coeffs, st.mu.coeffs))


def F7(st: StateSM) -> SpectralField:
    return st._wrap(F7_c(st.P, st.s.coeffs, st.mu.coeffs))


def F8(st: StateSM) -> SpectralField:
    return st._wrap(F8_c(st.P, st.mu.coeffs))


def F6(st: StateSM) -> SpectralField:
    return st._wrap(F6_c(st.P, st.s.coeffs, st.mu.coeffs))


def r2_from_state(st: StateSM) -> SpectralField:
    return st._wrap(r2_c(st.P, st.s.coeffs, st.mu.coeffs))


def F_total(st: StateSM) -> SpectralField:
    return st._wrap(Ftotal_c(st.P, st.s.coeffs, st.mu.coeffs))


def decomposition_residual(st: StateSM) -> float:
    """||F0 - F1 - G F2|| / (||F1|| + ||F2||); zero up to round-off."""
    f0, f1, f2 = F0(st).coeffs, F1(st).coeffs, F2(st).coeffs
    den = np.linalg.norm(f1) + np.linalg.norm(f2)
    res = np.linalg.norm(f0 - f1 - st.P.G * f2)
    return 0.0 if den == 0 else float(res / den)
