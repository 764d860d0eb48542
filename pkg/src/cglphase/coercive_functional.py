"""The antisymmetric comparison function phi, its quadratic forms and the Gamma operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operator_symbols import SymbolParams, symbol_Lmu, symbol_Lv
from .spectral_grid import (Grid, GridMismatchError, SpectralField, pad_coeffs, padded_integral,
                            to_real_values)


class ResolutionError(ValueError):
    pass


class CoercivityViolation(AssertionError):
    pass


def profile(k):
    """Cutoff profile f(k) = exp(-k^2)."""
    return np.exp(-np.asarray(k, dtype=float) ** 2)


def profile_prime(k):
    k = np.asarray(k, dtype=float)
    return -2 * k * np.exp(-k ** 2)


def M_of_L(L: float) -> int:
    """Smallest integer strictly larger than L^(7/5)/2."""
    return int(np.floor(L ** 1.4 / 2)) + 1


def psi(n, M: int):
    """psi_n = -i q n phi_n = 4 f(max(0, |n|/(2M) - 1))."""
    n = np.abs(np.asarray(n, dtype=float))
    return 4 * profile(np.maximum(0.0, n / (2 * M) - 1))


def default_N(L: float) -> int:
    """Power of two resolving phi's Gaussian tail to well below 1e-10."""
    need = 2 * (2 * M_of_L(L) * 7)
    return int(2 ** np.ceil(np.log2(max(need, 64))))


@dataclass(frozen=True)
class PhiFunction:
    phi: SpectralField
    M: int
    L: float
    f_profile: str = "exp(-k^2)"

    @property
    def grid(self) -> Grid:
        return self.phi.grid


def _phi_coeffs(grid: Grid, M: int) -> np.ndarray:
    n = grid.n
    c = np.zeros(grid.N, dtype=complex)
    nz = n != 0
    c[nz] = 1j * psi(n[nz], M) / (grid.q * n[nz])
    c[grid.N // 2] = 0.0
    return c


def build_phi(L: float, N: int | None = None, tol: float = 1e-10) -> PhiFunction:
    if L < 2 * np.pi - 1e-12:
        raise ValueError(f"L must be >= 2 pi, got {L}")
    N = default_N(L) if N is None else N
    grid = Grid(L, N)
    M = M_of_L(L)
    # tail of (phi, phi) = L sum |phi_n|^2 beyond the stored modes
    n_all = np.arange(1, 40 * M + N)
    w = (psi(n_all, M) / (grid.q * n_all)) ** 2
    total = 2 * w.sum()
    tail = 2 * w[n_all >= N // 2].sum()
    if tail > tol * total:
        raise ResolutionError(f"N={N} misses {tail / total:.2e} of (phi, phi); need larger N")
    return PhiFunction(SpectralField(_phi_coeffs(grid, M), grid, "odd"), M, L)


# -- inner products ---------------------------------------------------------------

def inner(v: SpectralField, w: SpectralField) -> float:
    """(v, w) = int v w for real fields."""
    return float(v.grid.L * np.sum(v.coeffs * np.conj(w.coeffs)).real)


def phi_prime_sup(phi: PhiFunction, refine: int = 4) -> float:
    g = phi.grid
    big = Grid(g.L, refine * g.N)
    d = pad_coeffs(1j * g.k * phi.phi.coeffs, big.N)
    return float(np.max(np.abs(to_real_values(d, big))))


def inner_gamma_phi(v: SpectralField, w: SpectralField, gamma: float, eps: float,
                    phi: PhiFunction, alpha: float = 0.0) -> float:
    """int v (L_mu + gamma phi') w; L_mu spectral, the phi' term exact on a padded grid."""
    if not (v.grid.same_as(phi.grid) and w.grid.same_as(phi.grid)):
        raise GridMismatchError("v, w must live on phi's grid")
    g = phi.grid
    p = SymbolParams(eps, alpha)
    lin = g.L * float(np.sum(v.coeffs * np.conj(symbol_Lmu(g.k, p) * w.coeffs)).real)
    if gamma == 0:
        return lin
    dphi = 1j * g.k * phi.phi.coeffs
    dphi[g.N // 2] = 0
    return lin + gamma * padded_integral([v.coeffs, dphi, w.coeffs], g.L, pad=2)


def Lv_norm_sq(v: SpectralField, eps: float) -> float:
    """(L_v v, L_v v)."""
    g = v.grid
    lv = symbol_Lv(g.k, SymbolParams(eps, 0.0))
    return g.L * float(np.sum(np.abs(lv * v.coeffs) ** 2))


def cv_squared(eps: float) -> float:
    """c_v^2 = (4/3)(sqrt(eps^4 + 4) - 2)/eps^4, with limit 1/3 at eps = 0."""
    e4 = eps ** 4
    if e4 < 1e-6:
        return 1 / 3 - e4 / 48
    return (4 / 3) * (np.sqrt(e4 + 4) - 2) / e4


def cv_min_ratio(grid: Grid, eps: float) -> float:
    """min_k L_v(k)^2, the sharp constant in (L_v v, L_v v) >= c (v, v)."""
    return float(np.min(symbol_Lv(grid.k, SymbolParams(eps, 0.0)) ** 2))


# -- Hilbert-Schmidt norm of Gamma ---------------------------------------------------

def tau_sq(k, eps: float):
    k = np.asarray(k, dtype=float)
    return 0.5 * (1 + k ** 4) / (1 + eps ** 2 * k ** 2 / 2)


def _inv_tau_sq_tail(K, q: float, eps: float):
    """Upper bound on sum_{k > K} 1/tau(qk)^2 (vectorized in K)."""
    K = np.asarray(K, dtype=float)
    return 2 / (3 * q ** 4 * K ** 3) + eps ** 2 / (q ** 2 * K)


def _row_tail_bound(K: int, q: float, eps: float, M: int) -> float:
    """Upper bound on the rows k > K of the Gamma double sum.

    For m <= k/2 both indices exceed k/2, so |psi_{k+m} - psi_{k-m}| <= 2 psi_{k/2};
    for m > k/2 the difference is at most 4 and 1/tau_m^2 is summed from k/2.
    """
    cap = 64 * K
    mm = np.arange(1, cap + 1)
    S_all = float(np.sum(1 / tau_sq(q * mm, eps)) + _inv_tau_sq_tail(cap, q, eps))
    k = np.arange(K + 1, cap + 1)
    half = k // 2
    row = (4 * psi(half, M) ** 2 * S_all + 16 * _inv_tau_sq_tail(half, q, eps)) / tau_sq(q * k, eps)
    far = 4 * psi(cap // 2, M) ** 2 * S_all + 16 * _inv_tau_sq_tail(cap // 2, q, eps)
    return float(np.sum(row)) + float(far) * _inv_tau_sq_tail(cap, q, eps)


def hs_envelope(L: float) -> float:
    q, M = 2 * np.pi / L, M_of_L(L)
    return (80 * np.pi / 3) / (q ** 7 * M ** 5) + (440 / 9) / (q ** 8 * M ** 6)


def gamma_hs_norm(L: float, eps: float, N_trunc: int | None = None, rel_tail: float = 0.01,
                  max_doublings: int = 4) -> tuple[float, float]:
    """(sum over 0 < m < k <= N_trunc, rigorous bound on the remainder)."""
    q, M = 2 * np.pi / L, M_of_L(L)
    if eps > 1 / (M * q) * (1 + 1e-12):
        raise ValueError(f"eps={eps} exceeds 1/(Mq)={1 / (M * q):.4g}")
    K = 8 * M if N_trunc is None else int(N_trunc)
    for _ in range(max_doublings + 1):
        total = 0.0
        inv_t = 1 / tau_sq(q * np.arange(K + 1), eps)
        psi_all = psi(np.arange(2 * K + 1), M)
        # row by row in k keeps memory linear; fixed order for reproducibility
        for k in range(M + 1, K + 1):
            m = np.arange(max(1, 2 * M + 1 - k), k)
            if m.size == 0:
                continue
            d = psi_all[k + m] - psi_all[k - m]
            total += float(np.sum(d ** 2 * inv_t[k] * inv_t[m]))
        tail = _row_tail_bound(K, q, eps, M)
        if tail <= rel_tail * max(total, 1e-300) or N_trunc is not None:
            if tail > rel_tail * max(total, 1e-300):
                raise ResolutionError(f"N_trunc={K}: tail bound {tail:.3e} exceeds "
                                      f"{rel_tail:.0%} of sum {total:.3e}")
            return total, float(tail)
        K *= 2
    raise ResolutionError(f"tail bound {tail:.3e} still above {rel_tail:.0%} of {total:.3e} at K={K // 2}")


def support_check(L: float, pairs: np.ndarray) -> bool:
    """psi_{k+m} = psi_{k-m} whenever k + m <= 2M."""
    M = M_of_L(L)
    k, m = pairs[:, 0], pairs[:, 1]
    sel = k + m <= 2 * M
    return bool(np.all(psi(k[sel] + m[sel], M) == psi(np.abs(k[sel] - m[sel]), M)))


# -- coercivity --------------------------------------------------------------------

def eps_binding(L: float) -> tuple[float, str]:
    """Most restrictive of the admissible-eps bounds, with its name."""
    q, M = 2 * np.pi / L, M_of_L(L)
    bounds = {"L^(-2/5)": L ** -0.4, "1/(Mq)": 1 / (M * q), "1/(pi L^(2/5))": 1 / (np.pi * L ** 0.4)}
    name = min(bounds, key=bounds.get)
    return bounds[name], name


def random_antisymmetric(grid: Grid, rng: np.random.Generator, band: int | None = None) -> SpectralField:
    """Odd field with decaying random coefficients, band-limited to N/4 by default."""
    band = grid.N // 4 if band is None else band
    n = grid.n
    decay = rng.uniform(0.5, 3.0)
    scale = rng.uniform(0.5, 4.0)
    amp = (1 + (grid.k / scale) ** 2) ** (-decay)
    c = 1j * rng.normal(size=grid.N) * amp
    c = np.where((np.abs(n) <= band) & (n != 0), c, 0)
    c = 0.5 * (c - c[grid.neg])  # odd and real: purely imaginary, c_-n = -c_n
    return SpectralField(c, grid, "odd")


def coercivity_check(trials: int, L: float, eps: float | None = None, gamma: float = 0.25,
                     seed: int = 0, phi: PhiFunction | None = None, raise_on_fail: bool = True) -> dict:
    if not 0.25 <= gamma <= 1:
        raise ValueError(f"gamma must be in [1/4, 1], got {gamma}")
    bound, binding = eps_binding(L)
    eps = bound if eps is None else eps
    if eps > bound * (1 + 1e-12):
        raise ValueError(f"eps={eps} exceeds admissible {bound:.4g} ({binding})")
    phi = build_phi(L) if phi is None else phi
    g = phi.grid
    rng = np.random.default_rng(seed)
    dsup = phi_prime_sup(phi)
    lower_slack, upper_slack = np.inf, np.inf
    fails = 0
    for _ in range(trials):
        v = random_antisymmetric(g, rng)
        form = inner_gamma_phi(v, v, gamma, eps, phi)
        low = 0.75 * Lv_norm_sq(v, eps)
        vv = inner(v, v)
        v2 = g.L * float(np.sum(np.abs(g.k ** 2 * v.coeffs) ** 2))
        up = dsup * vv + v2
        ls, us = (form - low) / low, (up - form) / up
        lower_slack, upper_slack = min(lower_slack, ls), min(upper_slack, us)
        fails += (ls < 0) or (us < 0)
    rep = {"L": L, "eps": eps, "eps_binding": binding, "gamma": gamma, "trials": trials,
           "violations": int(fails), "min_lower_slack": float(lower_slack),
           "min_upper_slack": float(upper_slack)}
    if fails and raise_on_fail:
        raise CoercivityViolation(f"{fails} violations: {rep}")
    return rep


def phi_summary(L: float, eps: float | None = None, gamma: float = 1.0) -> dict:
    """Scalar quantities of phi used by the coercive-functional report."""
    phi = build_phi(L)
    g = phi.grid
    eps = eps_binding(L)[0] if eps is None else eps
    c = phi.phi.coeffs
    dphi = 1j * g.k * c
    dphi[g.N // 2] = 0
    phi_sq = inner(phi.phi, phi.phi)
    ppp = padded_integral([c, c, dphi], g.L, pad=2)
    form = inner_gamma_phi(phi.phi, phi.phi, gamma, eps, phi)
    return {"L": L, "M": phi.M, "N": g.N, "eps": eps, "phi_norm_sq": phi_sq,
            "phi_bound": 4 / 3 * L ** 3, "phi_phi_phi": ppp, "phi_form": form,
            "K_ratio": form / L ** 3.2, "phi_prime_sup": phi_prime_sup(phi),
            "phi_prime_sup_ratio": phi_prime_sup(phi) / L ** 1.4}
