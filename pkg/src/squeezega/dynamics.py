"""Lindblad evolution of the collective spin under piecewise-constant pulses.

The generator is

    d rho/dt = -i[H, rho] + gamma (n_th + 1) D[J-] rho + gamma n_th D[J+] rho
               + gamma_z D[J_z] rho,

    H = kappa J_z^2 + omega J_x,    D[X] rho = 2 X rho X^+ - X^+ X rho - rho X^+ X.

Segments are integrated with fixed-step classical RK4. Because the generator
is constant inside a segment, the whole RK4 segment map is linear in rho and
is precomputed once per amplitude level (``rk4_segment_map``); applying it is
the same arithmetic as stepping, up to roundoff.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import CostGuardError, IntegrationAccuracyError
from .spin_core import DensityMatrix, SpinOperators, _as_array
from .squeezing import xi_z_from_populations, xi_z_squared

log = logging.getLogger(__name__)

TRACE_WARN = 1e-8
TRACE_FAIL = 1e-6
ORACLE_MAX_DIM = 16


@dataclass(frozen=True)
class NoiseParams:
    gamma: float = 1e-3
    gamma_z: float = 1e-3
    n_th: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "gamma_z", "n_th"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


CLOSED = NoiseParams(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PulseSchedule:
    t_total: float
    levels: tuple
    sequence: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))
        object.__setattr__(self, "sequence", tuple(int(x) for x in self.sequence))
        if len(self.sequence) < 1:
            raise ValueError("schedule needs at least one segment")
        if self.t_total <= 0:
            raise ValueError("t_total must be positive")
        bad = [k for k in self.sequence if not 0 <= k < len(self.levels)]
        if bad:
            raise ValueError(f"level indices out of range: {bad[:5]}")

    @property
    def m(self) -> int:
        return len(self.sequence)

    @property
    def dt(self) -> float:
        return self.t_total / self.m

    @property
    def omegas(self) -> np.ndarray:
        return np.array([self.levels[k] for k in self.sequence])


@dataclass
class Trajectory:
    """Samples at t = 0 and after every segment.

    ``states`` is None for score-only simulations (``keep_states=False``).
    """
    times: np.ndarray
    xi_z_samples: np.ndarray
    states: list | None = None
    max_trace_drift: float = 0.0

    def __len__(self):
        return len(self.times)


def hamiltonian(ops: SpinOperators, omega: float, kappa: float) -> np.ndarray:
    return kappa * ops.jz @ ops.jz + omega * ops.jx


def jump_operators(ops: SpinOperators, noise: NoiseParams) -> list[tuple[float, np.ndarray]]:
    """(rate, X) pairs with nonzero rate."""
    terms = [
        (noise.gamma * (noise.n_th + 1.0), ops.jminus),
        (noise.gamma * noise.n_th, ops.jplus),
        (noise.gamma_z, ops.jz),
    ]
    return [(r, x) for r, x in terms if r > 0]


def liouvillian_apply(ops: SpinOperators, omega: float, kappa: float,
                      noise: NoiseParams, rho) -> np.ndarray:
    r = _as_array(rho)
    if r.shape != (ops.dim, ops.dim):
        raise ValueError(f"state shape {r.shape} does not match spin dimension {ops.dim}")
    h = hamiltonian(ops, omega, kappa)
    out = -1j * (h @ r - r @ h)
    for rate, x in jump_operators(ops, noise):
        xd = x.conj().T
        xdx = xd @ x
        out += rate * (2.0 * x @ r @ xd - xdx @ r - r @ xdx)
    return out


def _rk4_step(f, r, h):
    k1 = f(r)
    k2 = f(r + 0.5 * h * k1)
    k3 = f(r + 0.5 * h * k2)
    k4 = f(r + h * k3)
    return r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _finalize(r: np.ndarray) -> tuple[np.ndarray, float]:
    """Re-Hermitize and renormalize; return the pre-normalization trace drift."""
    r = 0.5 * (r + r.conj().T)
    tr = np.trace(r).real
    drift = abs(tr - 1.0)
    if not drift < TRACE_FAIL:
        raise IntegrationAccuracyError(
            f"trace drift {drift:.3e} over one segment; increase substeps")
    if drift >= TRACE_WARN:
        log.warning("trace drift %.3e exceeds %.0e", drift, TRACE_WARN)
    return r / tr, drift


def evolve_segment(rho, ops: SpinOperators, omega: float, kappa: float,
                   noise: NoiseParams, dt: float, substeps: int = 100) -> DensityMatrix:
    """Integrate one constant-amplitude segment by stepping RK4 directly."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    h = dt / substeps
    r = np.array(_as_array(rho), dtype=complex)

    def f(x):
        return liouvillian_apply(ops, omega, kappa, noise, x)

    for _ in range(substeps):
        r = _rk4_step(f, r, h)
    out, _ = _finalize(r)
    return DensityMatrix(out)


def liouvillian_matrix(ops: SpinOperators, omega: float, kappa: float,
                       noise: NoiseParams) -> np.ndarray:
    """Superoperator acting on row-major ``rho.reshape(-1)``.

    Built from Kronecker products, independently of ``liouvillian_apply``:
    vec(A rho B) = (A kron B^T) vec(rho).
    """
    d = ops.dim
    eye = np.eye(d)
    h = hamiltonian(ops, omega, kappa)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, x in jump_operators(ops, noise):
        xdx = x.conj().T @ x
        sup += rate * (2.0 * np.kron(x, x.conj()) - np.kron(xdx, eye) - np.kron(eye, xdx.T))
    return sup


def oracle_evolve_exact(rho, ops: SpinOperators, omega: float, kappa: float,
                        noise: NoiseParams, dt: float) -> DensityMatrix:
    """exp(L dt) applied to vec(rho); reference for tests only."""
    if ops.dim > ORACLE_MAX_DIM:
        raise CostGuardError(f"oracle limited to dim <= {ORACLE_MAX_DIM}, got {ops.dim}")
    r = _as_array(rho)
    prop = expm(liouvillian_matrix(ops, omega, kappa, noise) * dt)
    return DensityMatrix((prop @ r.reshape(-1)).reshape(ops.dim, ops.dim))


def rk4_segment_map(ops: SpinOperators, omega: float, kappa: float, noise: NoiseParams,
                    dt: float, substeps: int) -> np.ndarray:
    """Matrix of ``substeps`` RK4 steps of size dt/substeps on row-major vec(rho).

    Columns come from stepping each basis matrix with ``liouvillian_apply``.
    """
    if dt <= 0 or substeps < 1:
        raise ValueError("need dt > 0 and substeps >= 1")
    d = ops.dim
    h = dt / substeps

    def f(x):
        return liouvillian_apply(ops, omega, kappa, noise, x)

    step = np.empty((d * d, d * d), dtype=complex)
    for c in range(d * d):
        e = np.zeros((d, d), dtype=complex)
        e.flat[c] = 1.0
        step[:, c] = _rk4_step(f, e, h).reshape(-1)
    return np.linalg.matrix_power(step, substeps)


@dataclass
class SequenceSimulator:
    """Evaluates gene sequences (level indices) into trajectories.

    Segment maps are cached per level, so a population of sequences over the
    same level table shares a handful of precomputed propagators. Callable on
    a gene sequence; usable as the GA evaluator.
    """
    ops: SpinOperators
    rho0: DensityMatrix
    levels: tuple
    t_total: float
    m: int
    kappa: float = 1.0
    noise: NoiseParams = field(default_factory=NoiseParams)
    substeps: int = 100
    keep_states: bool = False
    _maps: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.levels = tuple(float(x) for x in self.levels)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        d = self.ops.dim
        self._diag = np.arange(d) * (d + 1)
        self._transpose = np.arange(d * d).reshape(d, d).T.reshape(-1)

    @property
    def dt(self) -> float:
        return self.t_total / self.m

    def segment_map(self, level: int) -> np.ndarray:
        if level not in self._maps:
            self._maps[level] = rk4_segment_map(
                self.ops, self.levels[level], self.kappa, self.noise, self.dt, self.substeps)
        return self._maps[level]

    def trajectory(self, genes: Sequence[int], keep_states: bool | None = None) -> Trajectory:
        keep = self.keep_states if keep_states is None else keep_states
        genes = [int(g) for g in genes]
        if len(genes) != self.m:
            raise ValueError(f"expected {self.m} genes, got {len(genes)}")
        n = self.ops.n_spins
        mvals = self.ops.m_values
        d = self.ops.dim
        v = np.array(self.rho0.data, dtype=complex).reshape(-1)
        xi = np.empty(self.m + 1)
        xi[0] = xi_z_from_populations(v[self._diag].real, mvals, n)
        states = [DensityMatrix(v.reshape(d, d).copy())] if keep else None
        worst = 0.0
        for k, level in enumerate(genes):
            w = self.segment_map(level) @ v
            w = 0.5 * (w + w[self._transpose].conj())
            tr = w[self._diag].real.sum()
            drift = abs(tr - 1.0)
            if not drift < TRACE_FAIL:
                raise IntegrationAccuracyError(
                    f"trace drift {drift:.3e} in segment {k}; increase substeps")
            worst = max(worst, drift)
            v = w / tr
            xi[k + 1] = xi_z_from_populations(v[self._diag].real, mvals, n)
            if keep:
                states.append(DensityMatrix(v.reshape(d, d).copy()))
        if worst >= TRACE_WARN:
            log.warning("trace drift %.3e exceeds %.0e", worst, TRACE_WARN)
        times = self.dt * np.arange(self.m + 1)
        return Trajectory(times, xi, states, worst)

    def __call__(self, genes: Sequence[int]) -> Trajectory:
        return self.trajectory(genes)


def evolve_sequence(rho0, schedule: PulseSchedule, ops: SpinOperators, kappa: float,
                    noise: NoiseParams, substeps_per_segment: int = 100,
                    keep_states: bool = True) -> Trajectory:
    """Evolve through every segment, sampling the state and xi_Z^2 after each."""
    rho0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(np.asarray(rho0))
    sim = SequenceSimulator(ops, rho0, schedule.levels, schedule.t_total, schedule.m,
                            kappa, noise, substeps_per_segment, keep_states)
    return sim.trajectory(schedule.sequence)


def evolve_sequence_stepwise(rho0, schedule: PulseSchedule, ops: SpinOperators, kappa: float,
                             noise: NoiseParams, substeps_per_segment: int = 100) -> Trajectory:
    """Same as ``evolve_sequence`` but stepping RK4 segment by segment (no cached maps)."""
    rho = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(np.asarray(rho0))
    states = [rho]
    for omega in schedule.omegas:
        rho = evolve_segment(rho, ops, omega, kappa, noise, schedule.dt, substeps_per_segment)
        states.append(rho)
    xi = np.array([xi_z_squared(s, ops) for s in states])
    return Trajectory(schedule.dt * np.arange(schedule.m + 1), xi, states)
