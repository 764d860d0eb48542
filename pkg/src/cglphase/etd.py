"""Fourth-order exponential time differencing (ETDRK4) for stiff spectral ODEs.

The linear part may be diagonal per Fourier mode or couple two fields through a
2x2 block per mode.  phi-functions are evaluated by Taylor series near the
origin and by their closed form elsewhere; 2x2 matrix functions use Sylvester's
formula, or a contour mean when the two eigenvalues nearly coincide.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, Sequence

import numpy as np

_TAYLOR_TERMS = 24
_CONTOUR_POINTS = 64


class BlowUpError(FloatingPointError):
    """The solution left the admissible range."""


def phi_functions(z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(phi1, phi2, phi3)(z) for complex z, accurate uniformly in z."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0.0)
    out = []
    for k in (1, 2, 3):
        # Horner on sum_j z^j / (j+k)!
        t = np.zeros_like(zs)
        for j in range(_TAYLOR_TERMS, -1, -1):
            t = t * zs + 1.0 / factorial(j + k)
        out.append(t)
    zb = np.where(small, 1.0, z)
    with np.errstate(over="ignore", invalid="ignore"):
        ez = np.exp(zb)
        p1 = (ez - 1) / zb
        p2 = (ez - 1 - zb) / zb ** 2
        p3 = (ez - 1 - zb - zb ** 2 / 2) / zb ** 3
    return (np.where(small, out[0], p1), np.where(small, out[1], p2),
            np.where(small, out[2], p3))


def _etd_scalar_funcs(z):
    """E, E2, phi1(z/2), phi1, phi2, phi3 at z."""
    p1h, _, _ = phi_functions(z / 2)
    p1, p2, p3 = phi_functions(z)
    return [np.exp(z), np.exp(z / 2), p1h, p1, p2, p3]


def _eig2(A):
    tr = A[..., 0, 0] + A[..., 1, 1]
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    d = np.sqrt(tr ** 2 / 4 - det + 0j)
    return tr / 2 + d, tr / 2 - d


def matrix_functions_2x2(A: np.ndarray, funcs: Callable) -> list[np.ndarray]:
    """Apply the scalar functions returned by `funcs(z)` to 2x2 matrices A[..., 2, 2].

    `funcs` maps a complex array to a list of arrays of the same shape.
    """
    A = np.asarray(A, dtype=complex)
    a, b = _eig2(A)
    I = np.eye(2)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    sep = np.abs(a - b) > 0.1 * scale
    # Sylvester on separated eigenvalues
    fa, fb = funcs(np.where(sep, a, 0.0)), funcs(np.where(sep, b, 1.0))
    den = np.where(sep, a - b, 1.0)[..., None, None]
    Ama = A - a[..., None, None] * I
    Amb = A - b[..., None, None] * I
    res = [(x[..., None, None] * Amb - y[..., None, None] * Ama) / den for x, y in zip(fa, fb)]
    if not np.all(sep):
        idx = np.nonzero(~sep)
        Ac = A[idx]
        c = (a[idx] + b[idx]) / 2
        r = np.maximum(1.0, 2 * np.abs(a[idx] - b[idx]))
        theta = 2 * np.pi * (np.arange(_CONTOUR_POINTS) + 0.5) / _CONTOUR_POINTS
        w = c[:, None] + r[:, None] * np.exp(1j * theta)[None, :]  # (m, P)
        fw = funcs(w)
        # (wI - A)^{-1} = adj / det
        p, q_, s_, t = (Ac[:, i, j][:, None] for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
        det = (w - p) * (w - t) - q_ * s_
        adj = np.empty(w.shape + (2, 2), dtype=complex)
        adj[..., 0, 0] = w - t
        adj[..., 0, 1] = q_ * np.ones_like(w)
        adj[..., 1, 0] = s_ * np.ones_like(w)
        adj[..., 1, 1] = w - p
        weight = ((w - c[:, None]) / det)[..., None, None] * adj
        for out, f in zip(res, fw):
            out[idx] = np.mean(f[..., None, None] * weight, axis=1)
    return res


@dataclass
class DiagBlock:
    """Field `index` evolves under the diagonal symbol `L` (shape (n,))."""
    index: int
    L: np.ndarray


@dataclass
class PairBlock:
    """Fields (i, j) evolve under the 2x2 symbol `L` (shape (n, 2, 2))."""
    i: int
    j: int
    L: np.ndarray


class _DiagCoef:
    def __init__(self, blk: DiagBlock, h: float):
        self.idx = [blk.index]
        z = h * np.asarray(blk.L, dtype=complex)
        E, E2, p1h, p1, p2, p3 = _etd_scalar_funcs(z)
        self.E, self.E2, self.Q = E, E2, (h / 2) * p1h
        self.f1 = h * (p1 - 3 * p2 + 4 * p3)
        self.f2 = h * (p2 - 2 * p3)
        self.f3 = h * (-p2 + 4 * p3)

    @staticmethod
    def mul(c, v):
        return c * v[0]


class _PairCoef:
    def __init__(self, blk: PairBlock, h: float):
        self.idx = [blk.i, blk.j]
        E, E2, p1h, p1, p2, p3 = matrix_functions_2x2(h * np.asarray(blk.L), _etd_scalar_funcs)
        self.E, self.E2, self.Q = E, E2, (h / 2) * p1h
        self.f1 = h * (p1 - 3 * p2 + 4 * p3)
        self.f2 = h * (p2 - 2 * p3)
        self.f3 = h * (-p2 + 4 * p3)

    @staticmethod
    def mul(c, v):
        return np.einsum("nij,jn->in", c, v)


class ETDRK4:
    """Cox-Matthews ETDRK4 for u' = L u + N(u) with u of shape (d, n).

    Each row of u must appear in exactly one block.
    """

    def __init__(self, blocks: Sequence[DiagBlock | PairBlock], h: float, d: int | None = None):
        self.h = float(h)
        self.coefs = [(_DiagCoef if isinstance(b, DiagBlock) else _PairCoef)(b, self.h) for b in blocks]
        rows = sorted(i for c in self.coefs for i in c.idx)
        d = len(rows) if d is None else d
        if rows != list(range(d)):
            raise ValueError(f"blocks must partition rows 0..{d - 1}, got {rows}")
        self.d = d

    def _apply(self, name, v):
        out = np.empty_like(v)
        for c in self.coefs:
            r = c.mul(getattr(c, name), v[c.idx])
            out[c.idx] = r if r.ndim == 2 else r[None]
        return out

    def step(self, u: np.ndarray, N: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return self.stages(u, N)[0]

    def stages(self, u: np.ndarray, N: Callable[[np.ndarray], np.ndarray]):
        """Like `step` but also returns the four stage states (u, a, b, c)."""
        u = np.asarray(u, dtype=complex)
        Nu = N(u)
        Eu2 = self._apply("E2", u)
        a = Eu2 + self._apply("Q", Nu)
        Na = N(a)
        b = Eu2 + self._apply("Q", Na)
        Nb = N(b)
        c = self._apply("E2", a) + self._apply("Q", 2 * Nb - Nu)
        Nc = N(c)
        new = (self._apply("E", u) + self._apply("f1", Nu)
               + 2 * self._apply("f2", Na + Nb) + self._apply("f3", Nc))
        return new, (u, a, b, c)
