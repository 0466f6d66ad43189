"""Husimi Q and spherical Wigner distributions on a (theta, phi) grid.

The Wigner function uses the multipole expansion

    W(theta, phi) = sum_{k=0}^{2j} sum_{q=-k}^{k} rho_kq Y_kq(theta, phi),
    rho_kq = tr(rho T_kq^+),
    <j m|T_kq|j m'> = (-1)^(j-m) sqrt(2k+1) (j k j; -m q m'),

which for |j,m><j,m| keeps only the q = 0 terms.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np
from scipy.integrate import trapezoid

from .errors import NumericalError
from .spin_core import SpinOperators, _as_array


@dataclass(frozen=True)
class SphereGrid:
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError("grid needs at least 2 points per axis")

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.n_theta)

    @property
    def phi(self) -> np.ndarray:
        return np.linspace(0.0, 2 * np.pi, self.n_phi, endpoint=False)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def integrate(self, values: np.ndarray) -> float:
        """Surface integral: trapezoid in theta (with sin weight), periodic sum in phi."""
        per_theta = values.sum(axis=1) * (2 * np.pi / self.n_phi)
        return float(trapezoid(per_theta * np.sin(self.theta), self.theta))


@dataclass(frozen=True)
class PhaseField:
    grid: SphereGrid
    values: np.ndarray

    def argmax_node(self) -> tuple[float, float]:
        i, k = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.grid.theta[i]), float(self.grid.phi[k])

    def rows(self):
        """(theta, phi, value) rows, theta-major."""
        th, ph = self.grid.mesh()
        return zip(th.ravel(), ph.ravel(), self.values.ravel())


def _css_kets(ops: SpinOperators, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Coherent kets for flattened angle arrays, shape (nodes, dim)."""
    n = ops.n_spins
    up = n - np.arange(n + 1)
    log_binom = np.array([np.log(float(comb(n, int(k)))) for k in up])
    c = np.cos(theta / 2)[:, None]
    s = np.sin(theta / 2)[:, None]
    with np.errstate(divide="ignore"):
        amp = np.exp(0.5 * log_binom) * c ** up * s ** (n - up)
    return amp * np.exp(1j * np.outer(phi, ops.j - ops.m_values))


def husimi_q(rho, ops: SpinOperators, grid: SphereGrid) -> PhaseField:
    r = _as_array(rho)
    th, ph = grid.mesh()
    kets = _css_kets(ops, th.ravel(), ph.ravel())
    q = np.einsum("ni,ij,nj->n", kets.conj(), r, kets).real
    return PhaseField(grid, q.reshape(th.shape))


def _check_half_integer(x) -> int:
    two = 2 * x
    if abs(two - round(two)) > 1e-9:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(round(two))


@lru_cache(maxsize=None)
def _wigner_3j_doubled(tj1, tj2, tj3, tm1, tm2, tm3) -> float:
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return 0.0
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if abs(tm) > tj or (tj - tm) % 2:
            return 0.0
    f = factorial
    # all quantities below are integers after halving
    a1, a2, a3 = (tj1 + tj2 - tj3) // 2, (tj1 - tj2 + tj3) // 2, (-tj1 + tj2 + tj3) // 2
    total = (tj1 + tj2 + tj3) // 2
    p1, n1 = (tj1 + tm1) // 2, (tj1 - tm1) // 2
    p2, n2 = (tj2 + tm2) // 2, (tj2 - tm2) // 2
    p3, n3 = (tj3 + tm3) // 2, (tj3 - tm3) // 2
    d1 = (tj3 - tj2 + tm1) // 2
    d2 = (tj3 - tj1 - tm2) // 2
    kmin = max(0, -d1, -d2)
    kmax = min(a1, n1, p2)
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = f(k) * f(d1 + k) * f(d2 + k) * f(a1 - k) * f(n1 - k) * f(p2 - k)
        s += Fraction(-1 if k % 2 else 1, den)
    if s == 0:
        return 0.0
    sq = Fraction(f(a1) * f(a2) * f(a3), f(total + 1)) * (
        f(p1) * f(n1) * f(p2) * f(n2) * f(p3) * f(n3))
    phase = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    sign = phase * (1 if s > 0 else -1)
    return sign * float(np.sqrt(float(s * s * sq)))


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol by the Racah formula in exact rational arithmetic."""
    doubled = [_check_half_integer(x) for x in (j1, j2, j3, m1, m2, m3)]
    return _wigner_3j_doubled(*doubled)


def spherical_harmonics(kmax: int, theta: np.ndarray, phi: np.ndarray) -> dict:
    """Y_kq for 0 <= k <= kmax, |q| <= k (Condon-Shortley phase).

    Fully normalized associated Legendre functions by the standard
    three-term recurrence in k, seeded from the sectoral terms.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x, sx = np.cos(theta), np.sin(theta)
    pbar = {(0, 0): np.full(theta.shape, np.sqrt(1.0 / (4 * np.pi)))}
    for q in range(1, kmax + 1):
        pbar[(q, q)] = -np.sqrt((2 * q + 1) / (2 * q)) * sx * pbar[(q - 1, q - 1)]
    for q in range(0, kmax):
        pbar[(q + 1, q)] = np.sqrt(2 * q + 3) * x * pbar[(q, q)]
        for k in range(q + 2, kmax + 1):
            a = np.sqrt((4 * k * k - 1) / (k * k - q * q))
            b = np.sqrt(((k - 1) ** 2 - q * q) / (4 * (k - 1) ** 2 - 1))
            pbar[(k, q)] = a * (x * pbar[(k - 1, q)] - b * pbar[(k - 2, q)])
    ylm = {}
    for (k, q), p in pbar.items():
        y = p * np.exp(1j * q * phi)
        ylm[(k, q)] = y
        if q:
            ylm[(k, -q)] = (-1) ** q * y.conj()
    return ylm


@lru_cache(maxsize=64)
def multipole_tensors(n_spins: int) -> tuple:
    """T_kq matrices for spin j = n/2, as a tuple of (k, q, matrix)."""
    j2 = n_spins
    dim = n_spins + 1
    m2 = j2 - 2 * np.arange(dim)  # doubled m, ordered +j..-j
    out = []
    for k in range(0, n_spins + 1):
        for q in range(-k, k + 1):
            t = np.zeros((dim, dim))
            for a in range(dim):
                for b in range(dim):
                    if m2[a] - m2[b] != 2 * q:
                        continue
                    sign = -1 if ((j2 - m2[a]) // 2) % 2 else 1
                    t[a, b] = sign * np.sqrt(2 * k + 1) * _wigner_3j_doubled(
                        j2, 2 * k, j2, -int(m2[a]), 2 * q, int(m2[b]))
            out.append((k, q, t))
    return tuple(out)


def multipole_coefficients(rho, ops: SpinOperators) -> dict:
    r = _as_array(rho)
    return {(k, q): np.sum(r * t) for k, q, t in multipole_tensors(ops.n_spins)}


def wigner_function(rho, ops: SpinOperators, grid: SphereGrid, imag_tol: float = 1e-10) -> PhaseField:
    th, ph = grid.mesh()
    ylm = spherical_harmonics(ops.n_spins, th, ph)
    w = np.zeros(th.shape, dtype=complex)
    for (k, q), c in multipole_coefficients(rho, ops).items():
        if c != 0:
            w += c * ylm[(k, q)]
    worst = np.max(np.abs(w.imag))
    if worst >= imag_tol:
        raise NumericalError(f"Wigner field has imaginary part {worst:.3e}")
    return PhaseField(grid, w.real)
