"""Collective spin operators in the Dicke basis, coherent spin states and
expectation primitives.

Basis ordering is the J_z eigenbasis with m = +j, j-1, ..., -j, so index
``k`` corresponds to ``m = j - k``. hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import NumericalError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class SpinOperators:
    n_spins: int
    j: float
    dim: int
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    jplus: np.ndarray
    jminus: np.ndarray

    @property
    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers along the diagonal of ``jz``."""
        return self.j - np.arange(self.dim)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)


@dataclass(frozen=True)
class DensityMatrix:
    data: np.ndarray

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def check(self, hermitian_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL,
              positivity_tol=POSITIVITY_TOL) -> None:
        """Raise ``NumericalError`` if the state is not a valid density matrix."""
        rho = self.data
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > hermitian_tol:
            raise NumericalError(f"density matrix not Hermitian: {herm:.3e}")
        tr = np.trace(rho)
        if abs(tr - 1.0) > trace_tol:
            raise NumericalError(f"density matrix trace {tr} != 1")
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lam < -positivity_tol:
            raise NumericalError(f"density matrix not positive: min eigenvalue {lam:.3e}")

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))

    @classmethod
    def from_ket(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


def build_spin_operators(n_spins: int) -> SpinOperators:
    """Spin-N/2 matrices from the ladder action J_+|j,m> = sqrt(j(j+1) - m(m+1))|j,m+1>."""
    if int(n_spins) != n_spins or n_spins < 1:
        raise ValueError(f"n_spins must be a positive integer, got {n_spins!r}")
    n_spins = int(n_spins)
    j = n_spins / 2
    dim = n_spins + 1
    m = j - np.arange(dim)
    jz = np.diag(m).astype(complex)
    # <m+1|J+|m> sits at row k-1, column k
    ladder = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jplus = np.diag(ladder, k=1).astype(complex)
    jminus = jplus.conj().T.copy()
    jx = 0.5 * (jplus + jminus)
    jy = -0.5j * (jplus - jminus)
    return SpinOperators(n_spins, j, dim, jx, jy, jz, jplus, jminus)


def coherent_ket(ops: SpinOperators, theta: float, phi: float) -> np.ndarray:
    """Normalized CSS amplitudes with mean spin along (sin t cos p, sin t sin p, cos t)."""
    n = ops.n_spins
    m = ops.m_values
    up = n - np.arange(n + 1)  # j + m
    binom = np.sqrt(np.array([float(comb(n, int(k))) for k in up]))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    amp = binom * c ** up * s ** (n - up) * np.exp(1j * (ops.j - m) * phi)
    return amp / np.linalg.norm(amp)


def coherent_spin_state(ops: SpinOperators, theta: float, phi: float) -> DensityMatrix:
    return DensityMatrix.from_ket(coherent_ket(ops, theta, phi))


def _as_array(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)


def expectation(op: np.ndarray, rho) -> float:
    """Re tr(op rho); the imaginary part must vanish for Hermitian ``op``."""
    r = _as_array(rho)
    op = np.asarray(op)
    if op.shape != r.shape:
        raise ValueError(f"dimension mismatch: operator {op.shape} vs state {r.shape}")
    val = np.einsum("ij,ji->", op, r)
    if abs(val.imag) >= 1e-8:
        raise NumericalError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def variance(op: np.ndarray, rho) -> float:
    """<op^2> - <op>^2, clamped at zero for roundoff-sized negatives."""
    op = np.asarray(op)
    var = expectation(op @ op, rho) - expectation(op, rho) ** 2
    if var < 0:
        if var < -1e-10:
            raise NumericalError(f"negative variance {var:.3e}")
        var = 0.0
    return var


def rotate_about_z(rho, ops: SpinOperators, angle: float) -> DensityMatrix:
    """exp(-i angle J_z) rho exp(+i angle J_z)."""
    phase = np.exp(-1j * angle * ops.m_values)
    return DensityMatrix(phase[:, None] * _as_array(rho) * phase.conj()[None, :])


def random_pure_state(dim: int, rng: np.random.Generator) -> DensityMatrix:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return DensityMatrix.from_ket(psi)


def random_mixed_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real)
