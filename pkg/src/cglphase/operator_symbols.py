"""Fourier multipliers of the scaled phase/amplitude system."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .spectral_grid import Grid, SpectralField


class BoundViolation(AssertionError):
    pass


class ValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SymbolParams:
    eps: float
    alpha: float

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.alpha ** 2 >= 0.5:
            warnings.warn(f"alpha^2 = {self.alpha ** 2:.3g}: outside theorem validity "
                          "alpha^2 < 1/2", ValidityWarning, stacklevel=3)

    @property
    def chi(self) -> float:
        return 4.0 / (1.0 + self.alpha ** 2)

    def require_theorem_range(self) -> None:
        if self.alpha ** 2 >= 0.5:
            raise ValueError(f"alpha^2 = {self.alpha ** 2:.3g} violates alpha^2 < 1/2")
        if self.eps ** 2 > 1:
            raise ValueError(f"eps^2 = {self.eps ** 2:.3g} violates eps^2 <= 1")


def symbol_G(k, p: SymbolParams):
    k = np.asarray(k, dtype=float)
    return 1.0 / (1.0 + p.eps ** 2 * k ** 2 / 2)


def symbol_Ls(k, p: SymbolParams):
    k = np.asarray(k, dtype=float)
    return 1.0 + p.eps ** 2 * k ** 2 / 2


def symbol_Lmuc(k):
    k = np.asarray(k, dtype=float)
    return k ** 4 - k ** 2


def symbol_Lmu(k, p: SymbolParams):
    return symbol_Lmuc(k) * symbol_G(k, p)


def symbol_Lr(k, p: SymbolParams):
    k = np.asarray(k, dtype=float)
    e2, a2 = p.eps ** 2, p.alpha ** 2
    return 1 + (1.5 + e2 * (1 + a2) / 4) * e2 * k ** 2 + ((1 - a2) / 4) * e2 ** 2 * k ** 4


def symbol_Lmur(k, p: SymbolParams):
    k = np.asarray(k, dtype=float)
    e2, a2 = p.eps ** 2, p.alpha ** 2
    return 2 * (2 + e2 * (1 + a2) - a2 * e2 * k ** 2) * symbol_G(k, p)


def symbol_Lv(k, p: SymbolParams):
    k = np.asarray(k, dtype=float)
    return np.sqrt((1 + k ** 4) * symbol_G(k, p) / 3)


SYMBOLS = {
    "G": symbol_G,
    "Ls": symbol_Ls,
    "Lmu": symbol_Lmu,
    "Lmuc": lambda k, p: symbol_Lmuc(k),
    "Lr": symbol_Lr,
    "Lmur": symbol_Lmur,
    "Lv": symbol_Lv,
}


@dataclass(frozen=True)
class SymbolTable:
    name: str
    values: np.ndarray

    def apply(self, F: SpectralField) -> SpectralField:
        return F.with_coeffs(F.coeffs * self.values)


_TABLE_CACHE: dict = {}


def symbol_table(name: str, grid: Grid, p: SymbolParams) -> SymbolTable:
    """Symbol sampled at k = qn in FFT order.  'Lmu_inv' stores 0 at its poles."""
    key = (name, grid.L, grid.N, p.eps, p.alpha)
    if key in _TABLE_CACHE:
        return _TABLE_CACHE[key]
    if name == "Lmu_inv":
        lm = symbol_Lmu(grid.k, p)
        pole = np.abs(lm) < 1e-12 * np.maximum(1.0, grid.k ** 2)
        vals = np.where(pole, 0.0, 1.0 / np.where(pole, 1.0, lm))
    else:
        vals = SYMBOLS[name](grid.k, p)
    vals = np.asarray(vals, dtype=float)
    vals.setflags(write=False)
    table = SymbolTable(name, vals)
    _TABLE_CACHE[key] = table
    return table


def apply_symbol(name: str, F: SpectralField, p: SymbolParams) -> SpectralField:
    return symbol_table(name, F.grid, p).apply(F)


# -- linear stability ---------------------------------------------------------

def dispersion_lambda(k, eps: float, alpha: float):
    """Growth rate of the phase mode k (unscaled variables)."""
    k = np.asarray(k, dtype=float)
    return (eps ** 2 * k ** 2 - k ** 4 * (1 + alpha ** 2) / 2) / (1 + k ** 2 / 2)


def critical_wavenumber(eps: float, alpha: float) -> float:
    return eps * np.sqrt(2.0 / (1 + alpha ** 2))


def cgl_plane_wave_rate(k, eps: float, alpha: float):
    """Largest real eigenvalue of CGL linearized about the p = 0 plane wave.

    Uses 1 + alpha*beta = -eps^2.  This is the exact rate a direct simulation
    measures; `dispersion_lambda` is its small-k reduction.
    """
    k = np.asarray(k, dtype=float)
    det = (1 + alpha ** 2) * k ** 4 - 2 * eps ** 2 * k ** 2
    return -(k ** 2 + 1) + np.sqrt((k ** 2 + 1) ** 2 - det + 0j).real


def matrix_LM(k, p: SymbolParams) -> np.ndarray:
    """Symbol of the (mu, r2) linear operator, shape k.shape + (2, 2)."""
    k = np.asarray(k, dtype=float)
    e4, chi = p.eps ** 4, p.chi
    ik = 1j * k
    m = np.empty(k.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = -symbol_Lmu(k, p)
    m[..., 0, 1] = p.eps ** 2 * chi * symbol_Lmur(k, p) * ik
    m[..., 1, 0] = -symbol_Lmu(k, p) * ik / (8 * e4)
    m[..., 1, 1] = -(chi / e4) * symbol_G(k, p) * symbol_Lr(k, p)
    return m


def matrix_LM_eigenvalues(k, p: SymbolParams):
    """Eigenvalues (lambda_+, lambda_-) of matrix_LM.

    lambda_+ is the root with the smaller imaginary part, so that for large k
    lambda_+ eps^2/k^2 -> -(1 + i|alpha|).
    """
    m = matrix_LM(k, p)
    tr = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(tr ** 2 / 4 - det + 0j)
    # avoid cancellation: larger-magnitude root first, the other via det
    big = np.where(np.real(np.conj(tr) * disc) >= 0, tr / 2 + disc, tr / 2 - disc)
    small = np.where(big != 0, det / np.where(big != 0, big, 1), tr / 2)
    lp = np.where(np.imag(big) <= np.imag(small), big, small)
    lm = np.where(np.imag(big) <= np.imag(small), small, big)
    return lp, lm


def LM_asymptote_defect(eps: float, alpha: float, k_factor: float = 200.0) -> tuple[float, float]:
    """|lambda_pm eps^2/k^2 + (1 pm i|alpha|)| at k = k_factor/eps.

    eps is the unscaled amplitude parameter; the matrix itself is built with
    eps_hat = sqrt(chi/2) eps, in which units the limit carries no chi factor.
    """
    eps_hat = eps * np.sqrt(2.0 / (1.0 + alpha ** 2))
    k = k_factor / eps
    lp, lm = matrix_LM_eigenvalues(k, SymbolParams(eps_hat, alpha))
    a = abs(alpha)
    return (float(abs(lp * eps ** 2 / k ** 2 + (1 + 1j * a))),
            float(abs(lm * eps ** 2 / k ** 2 + (1 - 1j * a))))


# -- multiplier bounds ---------------------------------------------------------

def verify_symbol_bounds(grid: Grid, p: SymbolParams, raise_on_fail: bool = True) -> dict:
    """Check the four multiplier bounds at every grid wavenumber."""
    p.require_theorem_range()
    k = grid.k
    a2 = p.alpha ** 2
    limit_F1 = max(1 / 3, a2 / (1 - a2))
    with np.errstate(divide="ignore", invalid="ignore"):
        k_over_Lv = np.abs(k) / symbol_Lv(k, p)
    ratios = {
        "Lmur_le_8": np.abs(symbol_Lmur(k, p)) / 8,
        "k_over_Lv_le_2": k_over_Lv / 2,
        "Lv_over_1pk2_le_1": np.abs(symbol_Lv(k, p)) / (1 + k ** 2),
        "F1_multiplier": (p.eps ** 2 * k ** 2 / 8)
        * np.abs(symbol_Lmur(k, p) / (symbol_G(k, p) * symbol_Lr(k, p))) / limit_F1,
    }
    report = {}
    failed = []
    for name, r in ratios.items():
        i = int(np.argmax(r))
        ok = bool(np.all(r <= 1 + 1e-12))
        report[name] = {"max_ratio": float(r[i]), "argmax_k": float(k[i]), "pass": ok}
        if not ok:
            bad = k[r > 1 + 1e-12]
            failed.append(f"{name} at k={bad[:5].tolist()}")
    if failed and raise_on_fail:
        raise BoundViolation("; ".join(failed))
    return report
