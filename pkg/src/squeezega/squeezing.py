"""Spin squeezing parameters.

``xi_z_squared`` is the number-squeezing parameter 4 Var(J_z) / N used as the
optimization target. ``xi_perp_squared`` is the minimum transverse variance
relative to the mean spin length, N min Var(J_perp) / |<J>|^2, evaluated with
the closed-form minimum over the plane orthogonal to the mean spin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpinError, NumericalError
from .spin_core import SpinOperators, expectation, variance

SPIN_EPS_PER_SPIN = 1e-9


@dataclass(frozen=True)
class MeanSpinFrame:
    theta: float
    phi: float
    magnitude: float
    n1: np.ndarray
    n2: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


def xi_z_from_populations(pops: np.ndarray, m_values: np.ndarray, n_spins: int) -> float:
    """xi_Z^2 from the J_z-basis populations (the diagonal of rho)."""
    mean = pops @ m_values
    var = pops @ (m_values * m_values) - mean * mean
    if var < 0:
        if var < -1e-10:
            raise NumericalError(f"negative variance {var:.3e}")
        var = 0.0
    return 4.0 * var / n_spins


def xi_z_squared(rho, ops: SpinOperators) -> float:
    return 4.0 * variance(ops.jz, rho) / ops.n_spins


def mean_spin_vector(rho, ops: SpinOperators) -> np.ndarray:
    return np.array([expectation(ops.jx, rho), expectation(ops.jy, rho), expectation(ops.jz, rho)])


def mean_spin_frame(rho, ops: SpinOperators) -> MeanSpinFrame:
    """Polar/azimuth angles of <J> and the two unit vectors spanning the orthogonal plane."""
    jx, jy, jz = mean_spin_vector(rho, ops)
    mag = float(np.sqrt(jx * jx + jy * jy + jz * jz))
    if mag <= SPIN_EPS_PER_SPIN * ops.n_spins:
        raise DegenerateSpinError(f"mean spin length {mag:.3e} too small for a frame")
    theta = float(np.arccos(np.clip(jz / mag, -1.0, 1.0)))
    st = np.sin(theta)
    if st * mag <= SPIN_EPS_PER_SPIN * ops.n_spins:
        phi = 0.0
    else:
        sign = 1.0 if jy >= 0 else -1.0
        phi = float(sign * np.arccos(np.clip(jx / (mag * st), -1.0, 1.0)))
    n1 = np.array([-np.sin(phi), np.cos(phi), 0.0])
    n2 = np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)])
    return MeanSpinFrame(theta, phi, mag, n1, n2)


def optimal_phi(a: float, b: float) -> float:
    """Angle in the (n1, n2) plane minimizing the variance, given
    a = <J_n1^2 - J_n2^2> and b = <{J_n1, J_n2}>."""
    r = np.hypot(a, b)
    if r == 0:
        return 0.0
    half = 0.5 * float(np.arccos(np.clip(-a / r, -1.0, 1.0)))
    return half if b <= 0 else np.pi - half


def spin_component(ops: SpinOperators, n: np.ndarray) -> np.ndarray:
    return n[0] * ops.jx + n[1] * ops.jy + n[2] * ops.jz


def _transverse_moments(rho, ops, frame):
    j1 = spin_component(ops, frame.n1)
    j2 = spin_component(ops, frame.n2)
    s11 = expectation(j1 @ j1, rho)
    s22 = expectation(j2 @ j2, rho)
    anti = expectation(j1 @ j2 + j2 @ j1, rho)
    return s11, s22, anti


def xi_perp_squared(rho, ops: SpinOperators) -> float:
    frame = mean_spin_frame(rho, ops)
    s11, s22, anti = _transverse_moments(rho, ops, frame)
    a = s11 - s22
    num = ops.n_spins * (s11 + s22 - np.sqrt(a * a + anti * anti))
    return max(float(num / (2.0 * frame.magnitude ** 2)), 0.0)


def perp_direction(rho, ops: SpinOperators) -> np.ndarray:
    """Unit vector n1 cos(phi*) + n2 sin(phi*) of minimal transverse variance."""
    frame = mean_spin_frame(rho, ops)
    s11, s22, anti = _transverse_moments(rho, ops, frame)
    ang = optimal_phi(s11 - s22, anti)
    return frame.n1 * np.cos(ang) + frame.n2 * np.sin(ang)


def xi_perp_along(rho, ops: SpinOperators, angle: float) -> float:
    """N Var(J_n) / |<J>|^2 for n = n1 cos(angle) + n2 sin(angle)."""
    frame = mean_spin_frame(rho, ops)
    n = frame.n1 * np.cos(angle) + frame.n2 * np.sin(angle)
    return ops.n_spins * variance(spin_component(ops, n), rho) / frame.magnitude ** 2
