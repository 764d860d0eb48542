"""Weighted Fourier norms, the class-C membership test and empirical norm constants."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import beta as beta_fn

from .spectral_grid import (Grid, GridMismatchError, SpectralField, derivative, pad_coeffs,
                            to_coeffs, to_real_values, to_values)


def c_infinity() -> float:
    """1 + max(sqrt(int 2 pi/(1+x^2)), int (1+x^2)^(-3/4)) over the real line."""
    return 1.0 + max(np.sqrt(2 * np.pi ** 2), float(beta_fn(0.5, 0.25)))


@dataclass(frozen=True)
class NormParams:
    sigma: float
    delta: float
    grid: Grid
    sigma_max: float = 8.0

    def __post_init__(self):
        if self.delta < 2:
            raise ValueError(f"delta must be >= 2, got {self.delta}")
        if not 0 <= self.sigma <= self.sigma_max:
            raise ValueError(f"sigma must lie in [0, {self.sigma_max}], got {self.sigma}")

    def with_sigma(self, sigma: float) -> "NormParams":
        return NormParams(sigma, self.delta, self.grid, max(self.sigma_max, sigma))


# -- basic norms ----------------------------------------------------------------

def norm_lp(f: SpectralField, p: float) -> float:
    """L^p norm by the periodic rectangle rule on the grid samples."""
    v = np.abs(to_values(f.coeffs, f.grid))
    if np.isinf(p):
        return float(v.max())
    return float((np.mean(v ** p) * f.grid.L) ** (1.0 / p))


def norm_L2(f: SpectralField) -> float:
    return norm_lp(f, 2)


def norm_Linf(f: SpectralField) -> float:
    return norm_lp(f, np.inf)


def norm_l2(f: SpectralField) -> float:
    return f.l2()


def norm_lp_coeffs(f: SpectralField, p: float) -> float:
    a = np.abs(f.coeffs)
    if np.isinf(p):
        return float(a.max())
    return float(np.sum(a ** p) ** (1.0 / p))


def _weights(grid: Grid, p: NormParams, sigma: float | None = None) -> np.ndarray:
    s = p.sigma if sigma is None else sigma
    return (1 + (grid.k / p.delta) ** 2) ** (s / 2)


def _check_grid(f: SpectralField, p: NormParams) -> None:
    # the product and quotient estimators evaluate on refined grids with equal L
    if abs(f.grid.L - p.grid.L) > 1e-12 * p.grid.L:
        raise GridMismatchError(f"field period {f.grid.L} != norm period {p.grid.L}")


def norm_W_sigma(f: SpectralField, p: NormParams, sigma: float | None = None) -> float:
    _check_grid(f, p)
    g = f.grid
    high = np.abs(g.n) > p.delta / g.q
    if not np.any(high):
        return 0.0
    w = _weights(g, p, sigma)
    return float(np.sqrt(p.delta) / g.q * np.max(w[high] * np.abs(f.coeffs[high])))


def norm_N_sigma(f: SpectralField, p: NormParams, sigma: float | None = None) -> float:
    _check_grid(f, p)
    g = f.grid
    return float(np.sqrt(p.delta) / g.q * np.max(_weights(g, p, sigma) * np.abs(f.coeffs)))


def norm_sigma(f: SpectralField, p: NormParams, sigma: float | None = None) -> float:
    return float(np.sqrt(f.grid.L) * f.l2() + norm_W_sigma(f, p, sigma))


def tail_weight(f: SpectralField, p: NormParams, sigma: float | None = None) -> float:
    """Weighted magnitude at the largest stored |n|; large values flag under-resolution."""
    g = f.grid
    top = np.abs(g.n) >= g.N // 2 - 1  # Nyquist is usually zeroed
    w = _weights(g, p, sigma)
    return float(np.sqrt(p.delta) / g.q * np.max(w[top] * np.abs(f.coeffs[top])))


def norm_report(f: SpectralField, p: NormParams) -> dict:
    return {
        "sigma": p.sigma, "delta": p.delta, "L": f.grid.L, "N": f.grid.N,
        "L2": norm_L2(f), "Linf": norm_Linf(f), "l2": norm_l2(f),
        "l1": norm_lp_coeffs(f, 1), "linf": norm_lp_coeffs(f, np.inf),
        "W_sigma": norm_W_sigma(f, p), "N_sigma": norm_N_sigma(f, p),
        "sigma_norm": norm_sigma(f, p), "tail_weight": tail_weight(f, p),
    }


# -- random test fields ---------------------------------------------------------

def random_field(p: NormParams, rng: np.random.Generator, parity: str | None = None,
                 sigma: float | None = None, grid: Grid | None = None) -> SpectralField:
    """Real field with |f_n| ~ (1 + (qn/delta)^2)^(-(sigma+1)/2) and random phases."""
    g = p.grid if grid is None else grid
    s = p.sigma if sigma is None else sigma
    amp = (1 + (g.k / p.delta) ** 2) ** (-(s + 1) / 2)
    c = amp * np.exp(2j * np.pi * rng.random(g.N))
    c = 0.5 * (c + np.conj(c[g.neg]))
    c[g.N // 2] = 0.0
    if parity == "even":
        c = c.real.astype(complex)
    elif parity == "odd":
        c = 1j * c.imag
    return SpectralField(c, g, parity)


# -- class C ----------------------------------------------------------------------

@dataclass(frozen=True)
class ClassCParams:
    K: float = 1.0
    L: float = 40.0
    alpha: float = 0.1
    eps_hat: float = 0.05
    eps_hat0: float = 0.05
    c_s0: float = 1.0
    c_eta0: float = 1.0
    sigma: float = 6.0
    delta: float = 2.0

    @property
    def rho(self) -> float:
        return self.K * self.L ** 1.6


@dataclass
class Condition:
    name: str
    lhs: float
    rhs: float
    passed: bool
    strict: bool = False


@dataclass
class MembershipReport:
    conditions: list[Condition] = field(default_factory=list)
    member: bool = True
    extra: list[Condition] = field(default_factory=list)

    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.passed]

    def as_dict(self) -> dict:
        def d(c):
            return {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "pass": c.passed}
        return {"member": self.member, "conditions": [d(c) for c in self.conditions],
                "extra": [d(c) for c in self.extra]}


def check_class_C(eta0: SpectralField, s0: SpectralField, p: ClassCParams) -> MembershipReport:
    if not eta0.grid.same_as(s0.grid):
        raise GridMismatchError(f"eta0 grid {eta0.grid} != s0 grid {s0.grid}")
    g = eta0.grid
    if abs(g.L - p.L) > 1e-9 * p.L:
        raise GridMismatchError(f"grid period {g.L} != class period L={p.L}")
    np_ = NormParams(p.sigma, p.delta, g, max(8.0, p.sigma))
    e2, rho, a2 = p.eps_hat ** 2, p.rho, p.alpha ** 2
    rep = MembershipReport()

    # eta0 at x = 0 is sum_n eta_n
    eta_at_0 = abs(complex(np.sum(eta0.coeffs)))
    scale = max(1.0, float(np.sum(np.abs(eta0.coeffs))))
    rep.conditions.append(Condition("eta0(0)=0", eta_at_0, 1e-10 * scale, eta_at_0 <= 1e-10 * scale))

    deta = derivative(eta0)
    lhs = norm_sigma(deta, np_)
    rep.conditions.append(Condition("||eta0'||_sigma<=c_eta0*rho", lhs, p.c_eta0 * rho,
                                    lhs <= p.c_eta0 * rho))

    k2 = g.k ** 2
    rs = s0.with_coeffs(s0.coeffs * (1 + e2 * k2 / 2))  # s0 - eps^2 s0''/2
    lhs = norm_sigma(rs, np_, p.sigma - 1)
    rep.conditions.append(Condition("||s0-eps^2 s0''/2||_{sigma-1}<=c_s0*rho^3", lhs,
                                    p.c_s0 * rho ** 3, lhs <= p.c_s0 * rho ** 3))

    # slaving condition; the square is taken on a padded grid
    big = Grid(g.L, 2 * g.N)
    dv = to_real_values(pad_coeffs(deta.coeffs, big.N), big)
    sq = pad_coeffs(to_coeffs(dv ** 2, big), g.N)
    comb = rs.coeffs + (-k2 * eta0.coeffs) / 8 + (e2 / 32) * sq
    lhs = norm_sigma(SpectralField(comb, g), np_, p.sigma - 1)
    rhs = (2.0 ** -8 * min(1 / 3, (1 - 2 * a2) / (1 - a2)) * (p.eps_hat / p.eps_hat0) ** 2
           * e2 * p.c_eta0 * rho)
    rep.conditions.append(Condition("slaving_condition", lhs, rhs, lhs < rhs, strict=True))

    # alternative s0 threshold for the slaved amplitude
    lhs = norm_sigma(s0, np_, p.sigma - 1)
    rep.extra.append(Condition("||s0||_{sigma-1}<c_s0*delta*rho", lhs, p.c_s0 * p.delta * rho,
                               lhs < p.c_s0 * p.delta * rho, strict=True))
    rep.member = all(c.passed for c in rep.conditions)
    return rep


def estimate_K(mu_l2_series, L: float) -> float:
    """sup_t ||mu||_{L2} / L^(8/5)."""
    return float(np.max(np.asarray(mu_l2_series)) / L ** 1.6)


# -- empirical product / quotient constants --------------------------------------

def _product_on_fine_grid(u: SpectralField, v: SpectralField, factor: int = 2) -> SpectralField:
    big = Grid(u.grid.L, factor * u.grid.N)
    uv = to_real_values(pad_coeffs(u.coeffs, big.N), big) * to_real_values(pad_coeffs(v.coeffs, big.N), big)
    return SpectralField(to_coeffs(uv, big), big)


def product_ratio(u: SpectralField, v: SpectralField, p: NormParams) -> float:
    """||uv||_sigma / (sqrt(delta) ||u||_sigma ||v||_sigma) with the exact product."""
    uv = _product_on_fine_grid(u, v)
    return norm_sigma(uv, p) / (np.sqrt(p.delta) * norm_sigma(u, p) * norm_sigma(v, p))


def estimate_product_constant(p: NormParams, trials: int = 200, seed: int = 0) -> float:
    if p.sigma < 1.5:
        raise ValueError("product estimate needs sigma >= 3/2")
    if trials < 100:
        raise ValueError("need at least 100 trials")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        # vary the decay so that both low- and high-mode-dominated pairs occur
        su, sv = p.sigma * rng.uniform(0.5, 1.5), p.sigma * rng.uniform(0.5, 1.5)
        u = random_field(p, rng, sigma=su)
        v = random_field(p, rng, sigma=sv)
        best = max(best, product_ratio(u, v, p))
    return best


def quotient_check(p: NormParams, C_m: float, trials: int = 100, seed: int = 0,
                   refine: int = 4) -> dict:
    """Ratio ||u/(1+v)||_sigma / ||u||_sigma with v scaled so C_m sqrt(delta) ||v||_sigma = 1/2."""
    rng = np.random.default_rng(seed)
    big = Grid(p.grid.L, refine * p.grid.N)
    worst, min_denominator = 0.0, np.inf
    for _ in range(trials):
        u = random_field(p, rng)
        v = random_field(p, rng)
        v = v * (0.5 / (C_m * np.sqrt(p.delta) * norm_sigma(v, p)))
        vv = to_real_values(pad_coeffs(v.coeffs, big.N), big)
        uu = to_real_values(pad_coeffs(u.coeffs, big.N), big)
        min_denominator = min(min_denominator, float(np.min(1 + vv)))
        w = SpectralField(to_coeffs(uu / (1 + vv), big), big)
        worst = max(worst, norm_sigma(w, p) / norm_sigma(u, p))
    return {"max_ratio": float(worst), "bound": 2.0, "min_1_plus_v": min_denominator,
            "pass": bool(worst <= 2.0)}


# -- derivative costs ------------------------------------------------------------

def derivative_cost_ratios(f: SpectralField, p: NormParams, orders=(1, 2)) -> dict:
    """Ratios against c_inf delta^m ||f||_sigma (sigma-norm) and c_inf delta^(n+1/2) (sup norm)."""
    c = c_infinity()
    fs = norm_sigma(f, p)
    out = {}
    for m in orders:
        fm = derivative(f, m)
        out[f"sigma_{m}"] = norm_sigma(fm, p, p.sigma - m) / (c * p.delta ** m * fs)
        if p.sigma - m >= 1.5:
            out[f"Linf_{m}"] = norm_Linf(fm) / (c * p.delta ** (m + 0.5) * fs)
    return out


# -- inequality sweep -------------------------------------------------------------

def norm_inequality_checks(p: NormParams, trials: int = 500, seed: int = 0) -> dict:
    """Worst observed ratio (lhs / rhs) for each norm inequality over random fields.

    A ratio <= 1 means the inequality held in every trial.
    """
    rng = np.random.default_rng(seed)
    g, d = p.grid, p.delta
    c = c_infinity()
    worst = {k: 0.0 for k in ("sandwich_lower", "sandwich_upper", "delta_monotone", "sigma_monotone",
                              "triangle", "derivative_sigma_1", "derivative_sigma_2",
                              "derivative_Linf_1", "derivative_Linf_2")}
    p2 = NormParams(2.0, d, g, max(8.0, p.sigma))
    p3 = NormParams(3.0, d, g, max(8.0, p.sigma))
    p3b = NormParams(3.0, 2 * d, g, max(8.0, p.sigma))
    p6 = NormParams(6.0, d, g, max(8.0, p.sigma))
    for _ in range(trials):
        s = rng.uniform(1.0, 8.0)
        f = random_field(p, rng, sigma=s)
        h = random_field(p, rng, sigma=rng.uniform(1.0, 8.0))
        fs2 = norm_sigma(f, p2)
        worst["sandwich_lower"] = max(worst["sandwich_lower"], fs2 / ((1 + np.pi * np.sqrt(2)) * norm_N_sigma(f, p2)))
        sg = p.sigma
        worst["sandwich_upper"] = max(worst["sandwich_upper"],
                                      norm_N_sigma(f, p) / ((1 + np.sqrt(2 ** sg * g.L * d)) * norm_sigma(f, p)))
        w0 = norm_W_sigma(f, p3)
        if w0 > 0:
            bound = 2 ** 1.5 * 0.5 ** 2.5 * w0
            worst["delta_monotone"] = max(worst["delta_monotone"], norm_W_sigma(f, p3b) / bound)
        s0, s1 = sorted(rng.uniform(0, p.sigma_max, 2))
        worst["sigma_monotone"] = max(worst["sigma_monotone"], norm_sigma(f, p, s0) / norm_sigma(f, p, s1))
        worst["triangle"] = max(worst["triangle"], norm_sigma(f + h, p) / (norm_sigma(f, p) + norm_sigma(h, p)))
        for m, r in derivative_cost_ratios(f, p6).items():
            key = {"sigma_1": "derivative_sigma_1", "sigma_2": "derivative_sigma_2",
                   "Linf_1": "derivative_Linf_1", "Linf_2": "derivative_Linf_2"}[m]
            worst[key] = max(worst[key], r)
    return {k: {"max_ratio": float(v), "pass": bool(v <= 1 + 1e-12)} for k, v in worst.items()}
