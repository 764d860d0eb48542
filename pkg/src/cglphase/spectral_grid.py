"""Periodic grid and Fourier coefficients.

Coefficients use the convention f_n = (1/N) sum_j exp(-i q n x_j) f(x_j) on the
grid x_j = -L/2 + j L/N, so that f(x) = sum_n f_n exp(i q n x).  Arrays are kept
in numpy FFT order (n = 0, 1, ..., N/2-1, -N/2, ..., -1); `ordered()` gives the
n = -N/2..N/2-1 view used for serialization.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

PARITIES = ("even", "odd", None)


class RealityError(ValueError):
    """Coefficients do not describe a real function."""


class ParityError(ValueError):
    """Field does not have the requested parity."""


class GridMismatchError(ValueError):
    """Two fields live on different grids."""


@dataclass(frozen=True)
class Grid:
    L: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        if self.N < 16 or self.N % 2:
            raise ValueError(f"N must be even and >= 16, got {self.N}")

    @property
    def q(self) -> float:
        return 2 * np.pi / self.L

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L / 2 + np.arange(self.N) * (self.L / self.N)

    @cached_property
    def n(self) -> np.ndarray:
        """Integer mode numbers in FFT order."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).astype(int)

    @cached_property
    def k(self) -> np.ndarray:
        return self.q * self.n

    @cached_property
    def sign(self) -> np.ndarray:
        # exp(i q n L/2) = (-1)^n, the shift from x_0 = -L/2
        return np.where(self.n % 2 == 0, 1.0, -1.0)

    @cached_property
    def neg(self) -> np.ndarray:
        """Index of mode -n for every stored n (Nyquist maps to itself)."""
        return (-np.arange(self.N)) % self.N

    @cached_property
    def alias_mask(self) -> np.ndarray:
        return np.abs(self.n) <= self.N // 3

    def same_as(self, other: "Grid") -> bool:
        return self.N == other.N and abs(self.L - other.L) <= 1e-12 * self.L


# -- raw coefficient helpers (used by solvers for speed) ---------------------

def to_coeffs(values: np.ndarray, grid: Grid) -> np.ndarray:
    return grid.sign * np.fft.fft(values, axis=-1) / grid.N


def to_values(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Complex samples of sum_n c_n exp(i q n x_j)."""
    return np.fft.ifft(grid.sign * coeffs, axis=-1) * grid.N


def to_real_values(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return to_values(coeffs, grid).real


def pad_coeffs(coeffs: np.ndarray, N_new: int) -> np.ndarray:
    """Zero-pad (or truncate) FFT-ordered coefficients to N_new modes.

    The Nyquist mode of the smaller grid is split evenly between +-N/2 when
    padding so real fields stay real; it is dropped when truncating.
    """
    N = coeffs.shape[-1]
    if N_new == N:
        return coeffs.copy()
    out = np.zeros(coeffs.shape[:-1] + (N_new,), dtype=complex)
    if N_new > N:
        h = N // 2
        out[..., :h] = coeffs[..., :h]
        out[..., N_new - h + 1:] = coeffs[..., h + 1:]
        out[..., h] = coeffs[..., h] / 2
        out[..., N_new - h] = coeffs[..., h] / 2
    else:
        h = N_new // 2
        out[..., :h] = coeffs[..., :h]
        out[..., h + 1:] = coeffs[..., N - h + 1:]
    return out


def padded_integral(factors: list[np.ndarray], L: float, pad: int = 2) -> float:
    """Exact periodic integral of a product of band-limited real fields.

    The product is evaluated on a grid `pad` times finer, which integrates
    the zero mode without aliasing as long as the total bandwidth fits.
    """
    N = factors[0].shape[-1]
    big = Grid(L, pad * N)
    prod = np.ones(big.N)
    for c in factors:
        prod = prod * to_real_values(pad_coeffs(c, big.N), big)
    return float(prod.mean() * L)


def l2_coeffs(coeffs: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2)))


def reality_defect(coeffs: np.ndarray, grid: Grid) -> float:
    return float(np.max(np.abs(coeffs - np.conj(coeffs[..., grid.neg]))))


# -- field types -------------------------------------------------------------

@dataclass(frozen=True)
class RealField:
    samples: np.ndarray
    grid: Grid

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {s.shape}")
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True)
class SpectralField:
    coeffs: np.ndarray
    grid: Grid
    parity: str | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} coefficients, got shape {c.shape}")
        if self.parity not in PARITIES:
            raise ValueError(f"unknown parity {self.parity!r}")
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self) -> np.ndarray:
        return self.grid.n

    def ordered(self) -> tuple[np.ndarray, np.ndarray]:
        """Modes n = -N/2..N/2-1 and the matching coefficients."""
        idx = np.argsort(self.grid.n)
        return self.grid.n[idx], self.coeffs[idx]

    def coeff(self, n: int) -> complex:
        return complex(self.coeffs[n % self.grid.N])

    def l2(self) -> float:
        return l2_coeffs(self.coeffs)

    def values(self) -> np.ndarray:
        """Complex samples on the grid (no reality check)."""
        return to_values(self.coeffs, self.grid)

    def with_coeffs(self, coeffs: np.ndarray, parity: str | None = "same") -> "SpectralField":
        p = self.parity if parity == "same" else parity
        return SpectralField(coeffs, self.grid, p)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self, other)
        p = self.parity if self.parity == other.parity else None
        return SpectralField(self.coeffs + other.coeffs, self.grid, p)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self, other)
        p = self.parity if self.parity == other.parity else None
        return SpectralField(self.coeffs - other.coeffs, self.grid, p)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(self.coeffs * a, self.grid, self.parity)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * -1.0


def _check_same(a: SpectralField, b: SpectralField) -> None:
    if not a.grid.same_as(b.grid):
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


def zeros(grid: Grid, parity: str | None = None) -> SpectralField:
    return SpectralField(np.zeros(grid.N, dtype=complex), grid, parity)


def from_function(fn, grid: Grid, parity: str | None = None) -> SpectralField:
    return forward(RealField(fn(grid.x), grid), parity)


# -- operations --------------------------------------------------------------

def forward(f: RealField, parity: str | None = None) -> SpectralField:
    c = to_coeffs(f.samples, f.grid)
    # exact Hermitian symmetry, Nyquist kept real
    c = 0.5 * (c + np.conj(c[f.grid.neg]))
    return SpectralField(c, f.grid, parity)


def inverse(F: SpectralField) -> RealField:
    tol = 1e-8 * F.l2()
    defect = reality_defect(F.coeffs, F.grid)
    if defect > tol:
        raise RealityError(f"max |f_n - conj f_-n| = {defect:.3e} exceeds {tol:.3e}")
    return RealField(to_real_values(F.coeffs, F.grid), F.grid)


def derivative(F: SpectralField, m: int = 1) -> SpectralField:
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    if m == 0:
        return F
    mult = (1j * F.grid.k) ** m
    if m % 2:
        mult = mult.copy()
        mult[F.grid.N // 2] = 0.0
    parity = F.parity
    if m % 2 and parity is not None:
        parity = "odd" if parity == "even" else "even"
    return SpectralField(F.coeffs * mult, F.grid, parity)


def _low_mask(grid: Grid, delta: float) -> np.ndarray:
    if delta < 2:
        raise ValueError(f"delta must be >= 2, got {delta}")
    return np.abs(grid.n) <= delta / grid.q


def project_low(F: SpectralField, delta: float) -> SpectralField:
    return F.with_coeffs(np.where(_low_mask(F.grid, delta), F.coeffs, 0))


def project_high(F: SpectralField, delta: float) -> SpectralField:
    return F.with_coeffs(np.where(_low_mask(F.grid, delta), 0, F.coeffs))


def enforce_parity(F: SpectralField, p: str) -> SpectralField:
    """Project onto real fields of parity p: real even or imaginary odd coefficients."""
    c, neg = F.coeffs, F.grid.neg
    if p == "even":
        out = (0.5 * (c + c[neg])).real.astype(complex)
    elif p == "odd":
        out = 1j * (0.5 * (c - c[neg])).imag
        out[F.grid.N // 2] = 0.0
    else:
        raise ValueError(f"parity must be 'even' or 'odd', got {p!r}")
    return SpectralField(out, F.grid, p)


def parity_defect(F: SpectralField, p: str) -> float:
    """Relative size of the part of F with the wrong parity."""
    c = F.coeffs
    other = c - enforce_parity(F, p).coeffs
    norm = l2_coeffs(c)
    return 0.0 if norm == 0 else l2_coeffs(other) / norm


def check_parity(F: SpectralField, p: str, tol: float = 1e-8) -> None:
    d = parity_defect(F, p)
    if d > tol:
        raise ParityError(f"field is not {p}: relative defect {d:.3e} > {tol:.1e}")


def dealias(F: SpectralField) -> SpectralField:
    return F.with_coeffs(np.where(F.grid.alias_mask, F.coeffs, 0))


def multiply(a: SpectralField, b: SpectralField) -> SpectralField:
    """Dealiased product of two real fields."""
    _check_same(a, b)
    prod = to_real_values(a.coeffs, a.grid) * to_real_values(b.coeffs, b.grid)
    c = to_coeffs(prod, a.grid) * a.grid.alias_mask
    parity = None
    if a.parity and b.parity:
        parity = "even" if a.parity == b.parity else "odd"
    return SpectralField(c, a.grid, parity)


# -- serialization -----------------------------------------------------------

def to_text(F: SpectralField) -> str:
    lines = [f"L={F.grid.L!r} N={F.grid.N}"]
    for n, c in zip(*F.ordered()):
        lines.append(f"{n} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


def from_text(text: str, parity: str | None = None) -> SpectralField:
    rows = [ln for ln in text.splitlines() if ln.strip()]
    head = dict(tok.split("=", 1) for tok in rows[0].split())
    grid = Grid(float(head["L"]), int(head["N"]))
    c = np.zeros(grid.N, dtype=complex)
    for ln in rows[1:]:
        n, re, im = ln.split()
        c[int(n) % grid.N] = complex(float(re), float(im))
    return SpectralField(c, grid, parity)


def save(F: SpectralField, path: str | Path) -> None:
    Path(path).write_text(to_text(F))


def load(path: str | Path, parity: str | None = None) -> SpectralField:
    return from_text(Path(path).read_text(), parity)
