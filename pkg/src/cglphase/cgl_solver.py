"""Direct pseudo-spectral integration of the 1D complex Ginzburg-Landau equation.

u_t = (1 + i alpha) u'' + u - (1 + i beta) u |u|^2 on a periodic interval of length L0.

Two schemes are provided.  "standard" integrates u itself with the diagonal
linear symbol 1 - (1 + i alpha) k^2.  "rotating" (default) writes
u = exp(-i beta t) exp(i theta) (1 + w) and integrates the small complex
deviation w = a + i b, whose linear part couples a and b per mode; the global
phase theta is re-centred after every step.  The plane wave is then an exact
fixed point and time steps can follow the slow phase dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .etd import ETDRK4, BlowUpError, DiagBlock, PairBlock
from .nonlinear_terms import pseudo, r1_c
from .operator_symbols import SymbolParams
from .spectral_grid import (Grid, ParityError, SpectralField, check_parity, pad_coeffs,
                            parity_defect, to_coeffs, to_values)

U_MAX = 100.0


class PhaseSlipError(ValueError):
    pass


class DegenerateAlphaError(ValueError):
    pass


@dataclass(frozen=True)
class CGLParams:
    alpha: float
    eps_hat: float
    L0: float
    phi0: float = 0.0

    def __post_init__(self):
        if self.alpha == 0:
            raise DegenerateAlphaError("beta = -(2 + (1+alpha^2) eps_hat^2)/(2 alpha) needs alpha != 0")
        if self.eps_hat < 0 or self.L0 <= 0:
            raise ValueError("need eps_hat >= 0 and L0 > 0")

    @property
    def beta(self) -> float:
        a = self.alpha
        return -(2 + (1 + a ** 2) * self.eps_hat ** 2) / (2 * a)

    @property
    def chi(self) -> float:
        return 4 / (1 + self.alpha ** 2)

    @property
    def eps(self) -> float:
        """Unscaled eps with 1 + alpha beta = -eps^2."""
        return self.eps_hat * np.sqrt((1 + self.alpha ** 2) / 2)

    @property
    def L(self) -> float:
        return self.eps_hat * self.L0

    def time_scale(self) -> float:
        """CGL time per unit of scaled time: t = time_scale * t_hat."""
        return self.chi / (2 * self.eps_hat ** 4)

    def symbol_params(self) -> SymbolParams:
        return SymbolParams(self.eps_hat, self.alpha)


@dataclass(frozen=True)
class ComplexState:
    """u as complex Fourier coefficients at time t.

    `frame` optionally carries the rotating-frame representation (theta, a, b)
    so that phase and amplitude can be extracted without cancellation.
    """
    u: SpectralField
    t: float = 0.0
    frame: tuple | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PhaseAmplitudeState:
    s: SpectralField
    eta: SpectralField
    mu: SpectralField
    t: float = 0.0
    scaled: bool = False


def _deriv(c: np.ndarray, grid: Grid) -> np.ndarray:
    ik = 1j * grid.k
    ik[grid.N // 2] = 0
    return ik * c


def _frame_to_u(theta: float, a: np.ndarray, b: np.ndarray, t: float, p: CGLParams, grid: Grid):
    w = to_values(a, grid).real + 1j * to_values(b, grid).real
    u = np.exp(1j * (theta - p.beta * t)) * (1 + w)
    return SpectralField(to_coeffs(u, grid), grid)


class CGLSolver:
    def __init__(self, grid: Grid, params: CGLParams, dt: float, scheme: str = "rotating",
                 symmetric: bool = True):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if scheme not in ("rotating", "standard"):
            raise ValueError(f"unknown scheme {scheme!r}")
        if abs(grid.L - params.L0) > 1e-9 * params.L0:
            raise ValueError(f"grid period {grid.L} != L0 = {params.L0}")
        self.grid, self.p, self.dt, self.scheme = grid, params, dt, scheme
        self.symmetric = symmetric
        self.big = Grid(grid.L, 2 * grid.N)  # cubic products are alias free on 2N
        k2 = grid.k ** 2
        a, b = params.alpha, params.beta
        if scheme == "standard":
            self.etd = ETDRK4([DiagBlock(0, 1 - (1 + 1j * a) * k2)], dt)
        else:
            A = np.zeros((grid.N, 2, 2), dtype=complex)
            A[:, 0, 0] = -k2 - 2
            A[:, 0, 1] = a * k2
            A[:, 1, 0] = -a * k2 - 2 * b
            A[:, 1, 1] = -k2
            self.etd = ETDRK4([PairBlock(0, 1, A)], dt)

    # -- transforms on the padded grid
    def _up(self, c):
        return to_values(pad_coeffs(c, self.big.N), self.big)

    def _down(self, v):
        return pad_coeffs(to_coeffs(v, self.big), self.grid.N)

    def _N_standard(self, U):
        v = self._up(U[0])
        return (-(1 + 1j * self.p.beta) * self._down(v * np.abs(v) ** 2))[None]

    def _N_rotating(self, U):
        a = self._up(U[0]).real
        b = self._up(U[1]).real
        w = a + 1j * b
        w2 = a * a + b * b
        n = (1 + 1j * self.p.beta) * (-w2 - 2 * a * w - w * w2)
        return np.array([self._down(n.real), self._down(n.imag)])

    def _hermitian(self, c):
        c = 0.5 * (c + np.conj(c[self.grid.neg]))
        if self.symmetric:
            c = c.real.astype(complex)  # even real field
        return c

    def init_frame(self, st: ComplexState):
        if st.frame is not None:
            return st.frame
        g = self.grid
        v = to_values(st.u.coeffs, g) * np.exp(1j * self.p.beta * st.t)
        theta = float(np.angle(np.mean(v)))
        w = v * np.exp(-1j * theta) - 1
        return theta, self._hermitian(to_coeffs(w.real, g)), self._hermitian(to_coeffs(w.imag, g))

    def step(self, st: ComplexState) -> ComplexState:
        g, t1 = self.grid, st.t + self.dt
        if self.scheme == "standard":
            c = self.etd.step(st.u.coeffs[None], self._N_standard)[0]
            if self.symmetric:
                c = 0.5 * (c + c[g.neg])
            new = ComplexState(SpectralField(c, g), t1)
            self._guard(to_values(c, g))
            return new
        theta, a, b = self.init_frame(st)
        U = self.etd.step(np.array([a, b]), self._N_rotating)
        a, b = self._hermitian(U[0]), self._hermitian(U[1])
        # re-centre the global phase so that mean(1 + w) stays real
        wv = to_values(a, g).real + 1j * to_values(b, g).real
        delta = float(np.angle(np.mean(1 + wv)))
        if delta != 0.0:
            wv = (1 + wv) * np.exp(-1j * delta) - 1
            a, b = self._hermitian(to_coeffs(wv.real, g)), self._hermitian(to_coeffs(wv.imag, g))
            theta += delta
        self._guard(1 + wv)
        return ComplexState(_frame_to_u(theta, a, b, t1, self.p, g), t1, (theta, a, b))

    @staticmethod
    def _guard(v):
        if not np.all(np.isfinite(v)):
            raise BlowUpError("CGL: non-finite values")
        m = float(np.max(np.abs(v)))
        if m > U_MAX:
            raise BlowUpError(f"CGL: max |u| = {m:.3e} > {U_MAX:g}")

    def run(self, st: ComplexState, t_end: float, every: float | None = None, callback=None):
        n_steps = int(round((t_end - st.t) / self.dt))
        stride = None if every is None else max(1, int(round(every / self.dt)))
        if callback and stride:
            callback(st)
        for i in range(1, n_steps + 1):
            st = self.step(st)
            if callback and stride and i % stride == 0:
                callback(st)
        return st


def step_cgl(state: ComplexState, dt: float, params: CGLParams, scheme: str = "rotating") -> ComplexState:
    return CGLSolver(state.u.grid, params, dt, scheme, symmetric=False).step(state)


# -- phase / amplitude ---------------------------------------------------------------

def extract_phase_amplitude(state: ComplexState, params: CGLParams, pin: bool = False,
                            prev_eta0: float | None = None) -> PhaseAmplitudeState:
    """s = (|u| - 1)/alpha^2 and eta = arg(u exp(i beta t - i phi0))/alpha, mu = eta'."""
    a = params.alpha
    if abs(a) < 1e-3:
        raise DegenerateAlphaError(f"|alpha| = {abs(a):.2e} < 1e-3")
    g = state.u.grid
    if state.frame is not None:
        theta, ca, cb = state.frame
        w = to_values(ca, g).real + 1j * to_values(cb, g).real
        mod = np.abs(1 + w)
        if mod.min() <= 0.1:
            raise PhaseSlipError(f"min |u| = {mod.min():.3e} <= 0.1")
        s = (2 * w.real + np.abs(w) ** 2) / (mod + 1) / a ** 2
        phase = theta - params.phi0 + np.unwrap(np.angle(1 + w))
    else:
        v = to_values(state.u.coeffs, g) * np.exp(1j * (params.beta * state.t - params.phi0))
        mod = np.abs(v)
        if mod.min() <= 0.1:
            raise PhaseSlipError(f"min |u| = {mod.min():.3e} <= 0.1")
        s = (mod - 1) / a ** 2
        phase = np.unwrap(np.angle(v))
    j0 = g.N // 2  # x = 0
    if prev_eta0 is not None:
        # continuity in time of the global branch
        phase = phase - 2 * np.pi * np.round((phase[j0] - a * prev_eta0) / (2 * np.pi))
    eta = phase / a
    if pin:
        eta = eta - eta[j0]
    sc = to_coeffs(s, g)
    ec = to_coeffs(eta, g)
    sc = 0.5 * (sc + np.conj(sc[g.neg]))
    ec = 0.5 * (ec + np.conj(ec[g.neg]))
    return PhaseAmplitudeState(SpectralField(sc, g), SpectralField(ec, g),
                               SpectralField(_deriv(ec, g), g), state.t, scaled=False)


def assemble_u(s: SpectralField, eta: SpectralField, params: CGLParams, t: float = 0.0) -> ComplexState:
    """u = (1 + alpha^2 s) exp(i phi0 - i beta t) exp(i alpha eta), with the rotating frame attached."""
    g = s.grid
    a = params.alpha
    sv = to_values(s.coeffs, g).real
    ev = to_values(eta.coeffs, g).real
    w = a ** 2 * sv * np.exp(1j * a * ev) + np.expm1(1j * a * ev)
    ca = 0.5 * (to_coeffs(w.real, g) + np.conj(to_coeffs(w.real, g)[g.neg]))
    cb = 0.5 * (to_coeffs(w.imag, g) + np.conj(to_coeffs(w.imag, g)[g.neg]))
    frame = (params.phi0, ca, cb)
    return ComplexState(_frame_to_u(params.phi0, ca, cb, t, params, g), t, frame)


# -- scalings -----------------------------------------------------------------------

def to_scaled(pa: PhaseAmplitudeState, params: CGLParams) -> PhaseAmplitudeState:
    if pa.scaled:
        return pa
    e = params.eps_hat
    g = Grid(pa.s.grid.L * e, pa.s.grid.N)
    return PhaseAmplitudeState(
        SpectralField(pa.s.coeffs / e ** 4, g, pa.s.parity),
        SpectralField(pa.eta.coeffs * 4 / e ** 2, g, pa.eta.parity),
        SpectralField(pa.mu.coeffs * 4 / e ** 3, g, pa.mu.parity),
        pa.t / params.time_scale(), scaled=True)


def from_scaled(pa: PhaseAmplitudeState, params: CGLParams) -> PhaseAmplitudeState:
    if not pa.scaled:
        return pa
    e = params.eps_hat
    g = Grid(pa.s.grid.L / e, pa.s.grid.N)
    return PhaseAmplitudeState(
        SpectralField(pa.s.coeffs * e ** 4, g, pa.s.parity),
        SpectralField(pa.eta.coeffs * e ** 2 / 4, g, pa.eta.parity),
        SpectralField(pa.mu.coeffs * e ** 3 / 4, g, pa.mu.parity),
        pa.t * params.time_scale(), scaled=False)


def slaved_s0(eta0_hat: SpectralField, params: CGLParams) -> SpectralField:
    """-(1/8) G eta0'' - (eps^2/32) G (eta0')^2 in scaled variables."""
    P = pseudo(eta0_hat.grid, params.symbol_params())
    mu = _deriv(eta0_hat.coeffs, eta0_hat.grid)
    return SpectralField(P.G * r1_c(P, mu), eta0_hat.grid, "even")


def build_initial_data(eta0_hat: SpectralField, params: CGLParams, mode: str = "slaved",
                       s0_hat: SpectralField | None = None, tol: float = 1e-8) -> tuple[ComplexState, PhaseAmplitudeState]:
    """Initial CGL state from scaled phase data; returns (u0, scaled (s0, eta0, mu0))."""
    g = eta0_hat.grid
    if abs(g.L - params.L) > 1e-9 * params.L:
        raise ValueError(f"eta0 grid period {g.L} != eps_hat * L0 = {params.L}")
    check_parity(eta0_hat, "even", tol)
    e0 = abs(complex(np.sum(eta0_hat.coeffs)))
    if e0 > tol * max(1.0, float(np.sum(np.abs(eta0_hat.coeffs)))):
        raise ParityError(f"eta0(0) = {e0:.3e} != 0")
    if mode == "slaved":
        s0 = slaved_s0(eta0_hat, params)
    elif mode == "custom":
        if s0_hat is None:
            raise ValueError("custom mode needs s0_hat")
        check_parity(s0_hat, "even", tol)
        s0 = s0_hat
    else:
        raise ValueError(f"mode must be 'slaved' or 'custom', got {mode!r}")
    mu0 = SpectralField(_deriv(eta0_hat.coeffs, g), g, "odd")
    hat = PhaseAmplitudeState(s0, eta0_hat, mu0, 0.0, scaled=True)
    un = from_scaled(hat, params)
    return assemble_u(un.s, un.eta, params, 0.0), hat


def parity_report(pa: PhaseAmplitudeState) -> dict:
    return {"s_odd_part": parity_defect(pa.s, "even"), "eta_odd_part": parity_defect(pa.eta, "even")}
