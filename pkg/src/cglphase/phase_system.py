"""Solvers for the scaled phase dynamics: KS in both forms and the coupled (s, mu[, r2]) system."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .etd import ETDRK4, BlowUpError, DiagBlock, PairBlock
from .nonlinear_terms import F0_c, F3_c, F4_c, F6_c, Pseudo, pseudo, r1_c, r2_c
from .operator_symbols import SymbolParams
from .spectral_grid import Grid, SpectralField, enforce_parity, padded_integral

BLOWUP = 1e6


def _guard(c: np.ndarray, grid: Grid, what: str, limit: float = BLOWUP) -> None:
    if not np.all(np.isfinite(c)):
        raise BlowUpError(f"{what}: non-finite coefficients")
    bound = float(np.sum(np.abs(c)))  # bounds the sup norm
    if bound > limit:
        vmax = float(np.max(np.abs(np.fft.ifft(grid.sign * c) * grid.N)))
        if vmax > limit:
            raise BlowUpError(f"{what}: max |field| = {vmax:.3e} > {limit:g}")


# -- Kuramoto-Sivashinsky --------------------------------------------------------

@dataclass(frozen=True)
class KSState:
    field: SpectralField
    t: float = 0.0
    form: str = "derivative"  # "derivative": mu; "phase": eta

    def __post_init__(self):
        if self.form not in ("derivative", "phase"):
            raise ValueError(f"form must be 'derivative' or 'phase', got {self.form!r}")

    @property
    def mu(self) -> SpectralField:
        if self.form == "derivative":
            return self.field
        g = self.field.grid
        ik = 1j * g.k
        ik[g.N // 2] = 0
        par = {"even": "odd", "odd": "even"}.get(self.field.parity)
        return SpectralField(self.field.coeffs * ik, g, par)


class KSSolver:
    """ETDRK4 for mu_t = -mu'''' - mu'' - mu mu' or eta_t = -eta'''' - eta'' - (eta')^2/2."""

    def __init__(self, grid: Grid, dt: float, form: str = "derivative", pin: bool = False,
                 symmetric: bool = True, blowup: float = BLOWUP):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid, self.dt, self.form, self.pin = grid, dt, form, pin
        self.symmetric, self.blowup = symmetric, blowup
        self.P = Pseudo(grid, SymbolParams(0.0, 0.0))
        self.etd = ETDRK4([DiagBlock(0, grid.k ** 2 - grid.k ** 4)], dt)

    def _N(self, u):
        P = self.P
        c = u[0]
        if self.form == "derivative":
            return (-0.5 * P.d(P.spec(P.phys(c) ** 2)))[None]
        return (-0.5 * P.spec(P.phys(P.d(c)) ** 2))[None]

    def step(self, st: KSState) -> KSState:
        if st.form != self.form:
            raise ValueError(f"solver form {self.form} != state form {st.form}")
        c = self.etd.step(st.field.coeffs[None], self._N)[0]
        if self.pin and self.form == "phase":
            c[0] -= np.sum(c)  # eta(0) = sum_n eta_n
        F = SpectralField(c, self.grid, st.field.parity)
        if self.symmetric and F.parity is not None:
            F = enforce_parity(F, F.parity)
        _guard(F.coeffs, self.grid, "KS", self.blowup)
        return KSState(F, st.t + self.dt, st.form)

    def run(self, st: KSState, t_end: float, every: float | None = None, callback=None):
        """Advance to t_end; calls callback(state) at t0 and every `every` time units."""
        n_steps = int(round((t_end - st.t) / self.dt))
        stride = None if every is None else max(1, int(round(every / self.dt)))
        if callback and stride:
            callback(st)
        for i in range(1, n_steps + 1):
            st = self.step(st)
            if callback and stride and i % stride == 0:
                callback(st)
        return st


def step_ks(state: KSState, dt: float, pin: bool = False) -> KSState:
    return KSSolver(state.field.grid, dt, state.form, pin).step(state)


# -- coupled (s, mu) system -------------------------------------------------------

@dataclass(frozen=True)
class CoupledState:
    s: SpectralField
    mu: SpectralField
    t: float = 0.0
    r2: SpectralField | None = None


def coupled_linear_block(grid: Grid, p: SymbolParams) -> np.ndarray:
    """Per-mode 2x2 linear symbol acting on (s, mu)."""
    P = pseudo(grid, p)
    e2, e4, chi = p.eps ** 2, p.eps ** 4, p.chi
    A = np.zeros((grid.N, 2, 2), dtype=complex)
    A[:, 0, 0] = -(chi / e4) * P.Ls
    A[:, 0, 1] = -(chi / (8 * e4)) * P.ik
    A[:, 1, 0] = (chi / e2) * P.Lmur * P.ik * P.Ls
    A[:, 1, 1] = -P.Lmu - (chi / (8 * e2)) * P.Lmur * P.k2
    return A


class CoupledSolver:
    """Simultaneous ETD step of the slaved amplitude s and the phase derivative mu.

    The stiff slaving rate chi/eps^4 enters the exponential exactly.  With
    evolve_r2 the auxiliary r2 equation is integrated alongside for comparison
    with the algebraic r2.  eps = 0 reduces to KS with s = -mu'/8.
    """

    def __init__(self, grid: Grid, p: SymbolParams, dt: float, evolve_r2: bool = False,
                 symmetric: bool = True, blowup: float = BLOWUP):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid, self.p, self.dt = grid, p, dt
        self.evolve_r2 = evolve_r2 and p.eps > 0
        self.symmetric, self.blowup = symmetric, blowup
        self.P = pseudo(grid, p)
        if p.eps == 0:
            self.etd = ETDRK4([DiagBlock(0, -self.P.Lmu)], dt)
        else:
            blocks = [PairBlock(0, 1, coupled_linear_block(grid, p))]
            if self.evolve_r2:
                blocks.append(DiagBlock(2, -(p.chi / p.eps ** 4) * self.P.G * self.P.Lr))
            self.etd = ETDRK4(blocks, dt)

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        P, p = self.P, self.p
        e2, chi = p.eps ** 2, p.chi
        s, mu = u[0], u[1]
        mu2 = P.spec(P.phys(mu) ** 2)
        Ns = -(chi / (32 * e2)) * mu2 + F4_c(P, s, mu) + F3_c(P, s, mu)
        Nmu = -0.5 * P.d(mu2) + e2 * P.d(F0_c(P, s, mu)) + (chi / 32) * P.Lmur * P.d(mu2)
        out = [Ns, Nmu]
        if u.shape[0] == 3:
            r2 = u[2]
            adv = P.spec(P.phys(mu) * P.phys(P.Lmur * P.d(r2)))
            out.append((chi / 16) * adv + F6_c(P, s, mu) / p.eps ** 4)
        return np.array(out)

    def _ks_N(self, u):
        P = self.P
        return (-0.5 * P.d(P.spec(P.phys(u[0]) ** 2)))[None]

    def step(self, st: CoupledState) -> CoupledState:
        g = self.grid
        if self.p.eps == 0:
            mu = self.etd.step(st.mu.coeffs[None], self._ks_N)[0]
            s = -self.P.d(mu) / 8
            new = [s, mu]
        else:
            rows = [st.s.coeffs, st.mu.coeffs]
            if self.evolve_r2:
                r2 = st.r2.coeffs if st.r2 is not None else r2_c(self.P, st.s.coeffs, st.mu.coeffs)
                rows.append(r2)
            new = list(self.etd.step(np.array(rows), self.nonlinear))
        fields = [SpectralField(c, g, par) for c, par in zip(new, ("even", "odd", "even"))]
        if self.symmetric:
            fields = [enforce_parity(f, f.parity) for f in fields]
        for f, name in zip(fields, ("s", "mu", "r2")):
            _guard(f.coeffs, g, f"coupled {name}", self.blowup)
        r2f = fields[2] if len(fields) == 3 else None
        return CoupledState(fields[0], fields[1], st.t + self.dt, r2f)

    def r2_algebraic(self, st: CoupledState) -> SpectralField:
        return SpectralField(r2_c(self.P, st.s.coeffs, st.mu.coeffs), self.grid, "even")

    def run(self, st: CoupledState, t_end: float, every: float | None = None, callback=None):
        n_steps = int(round((t_end - st.t) / self.dt))
        stride = None if every is None else max(1, int(round(every / self.dt)))
        if callback and stride:
            callback(st)
        for i in range(1, n_steps + 1):
            st = self.step(st)
            if callback and stride and i % stride == 0:
                callback(st)
        return st


def step_coupled(state: CoupledState, dt: float, params: SymbolParams,
                 evolve_r2: bool = False) -> CoupledState:
    return CoupledSolver(state.s.grid, params, dt, evolve_r2).step(state)


def evolve_r2(state: CoupledState, dt: float, params: SymbolParams,
              freeze: bool = True) -> SpectralField:
    """One ETD step of the r2 equation.

    With freeze=True, s and mu are held fixed over the step; otherwise they are
    co-evolved with the coupled system.
    """
    g = state.s.grid
    P = pseudo(g, params)
    r2 = state.r2 if state.r2 is not None else SpectralField(
        r2_c(P, state.s.coeffs, state.mu.coeffs), g, "even")
    if not freeze:
        return CoupledSolver(g, params, dt, evolve_r2=True).step(replace(state, r2=r2)).r2
    chi, e4 = params.chi, params.eps ** 4
    s, mu = state.s.coeffs, state.mu.coeffs
    F6 = F6_c(P, s, mu) / e4
    M = P.phys(mu)

    def N(u):
        return ((chi / 16) * P.spec(M * P.phys(P.Lmur * P.d(u[0]))) + F6)[None]

    etd = ETDRK4([DiagBlock(0, -(chi / e4) * P.G * P.Lr)], dt)
    c = etd.step(r2.coeffs[None], N)[0]
    return SpectralField(c, g, "even")


def slaved_s(mu: SpectralField, p: SymbolParams) -> SpectralField:
    """Leading-order slaved amplitude G r1(mu)."""
    P = pseudo(mu.grid, p)
    return SpectralField(P.G * r1_c(P, mu.coeffs), mu.grid, "even")


# -- diagnostics -------------------------------------------------------------------

def attractor_diagnostic(times, norms) -> dict:
    """Summary of a ||mu(t)||_{L2} series: sup, its time, and the mean over the second half."""
    times, norms = np.asarray(times, float), np.asarray(norms, float)
    if len(norms) < 100:
        raise ValueError(f"need >= 100 snapshots, got {len(norms)}")
    i = int(np.argmax(norms))
    half = norms[len(norms) // 2:]
    return {"sup_L2": float(norms[i]), "time_of_sup": float(times[i]),
            "tail_mean": float(half.mean()), "tail_sup": float(half.max())}


def trilinear(mu: SpectralField) -> float:
    """Exact discrete value of int mu^2 mu'."""
    g = mu.grid
    ik = 1j * g.k
    ik[g.N // 2] = 0
    return padded_integral([mu.coeffs, mu.coeffs, mu.coeffs * ik], g.L, pad=2)


def coercivity_form(r2: SpectralField, mu: SpectralField, p: SymbolParams) -> dict:
    """int r2 G L_r r2 - (eps^4/16) int r2 mu L_mur r2' against (3/4) int r2^2."""
    g = r2.grid
    P = pseudo(g, p)
    c = r2.coeffs
    quad = g.L * float(np.sum(np.abs(c) ** 2 * P.G * P.Lr))
    tri = padded_integral([c, mu.coeffs, P.Lmur * P.d(c)], g.L, pad=2)
    lhs = quad - p.eps ** 4 / 16 * tri
    rhs = 0.75 * g.L * float(np.sum(np.abs(c) ** 2))
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs else np.inf, "pass": lhs >= rhs}
