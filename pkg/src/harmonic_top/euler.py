"""zxz Euler-angle chart, separated Hamiltonian and its theta derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import _axis
from .params import ChartSingularityError, ModelParams, PhasePoint

SIN_GUARD = 1e-8


@dataclass(frozen=True)
class EulerPoint:
    """Angles ``(phi, theta, psi)`` and conjugate momenta."""

    phi: float
    theta: float
    psi: float
    p_phi: float = 0.0
    p_theta: float = 0.0
    p_psi: float = 0.0


def Rx(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def Rz(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_rotation(phi, theta, psi) -> np.ndarray:
    return Rz(phi) @ Rx(theta) @ Rz(psi)


def euler_to_quaternion(phi, theta, psi) -> np.ndarray:
    """Unit quaternion whose attitude matrix is ``Rz(phi) Rx(theta) Rz(psi)``.

    With ``R = x+ x-^t`` the vector part enters with the opposite sign to
    the usual Hamilton convention.
    """
    ch, sh = np.cos(theta / 2), np.sin(theta / 2)
    sp, dp = (phi + psi) / 2, (phi - psi) / 2
    return np.array([ch * np.cos(sp), -sh * np.cos(dp), -sh * np.sin(dp), -ch * np.sin(sp)])


def quaternion_to_euler(x):
    """Inverse of :func:`euler_to_quaternion` away from ``sin(theta) = 0``."""
    x0, x1, x2, x3 = x
    theta = 2.0 * np.arctan2(np.hypot(x1, x2), np.hypot(x0, x3))
    sp = np.arctan2(-x3, x0)
    dp = np.arctan2(-x2, -x1)
    return sp + dp, theta, sp - dp


def _guard(theta):
    s = np.sin(theta)
    if abs(s) < SIN_GUARD:
        raise ChartSingularityError(f"Euler chart singular at theta={theta!r}")
    return s


def momentum_frame(phi, theta, psi) -> np.ndarray:
    """Rows map ``l`` to ``(p_phi, p_theta, p_psi)``: ``e_z``, line of nodes, axis."""
    R = euler_rotation(phi, theta, psi)
    return np.vstack([[0.0, 0.0, 1.0], Rz(phi)[:, 0], R[:, 2]])


def to_phase_point(e: EulerPoint) -> PhasePoint:
    """Global state ``(x, l)`` of an Euler-chart point."""
    _guard(e.theta)
    A = momentum_frame(e.phi, e.theta, e.psi)
    l = np.linalg.solve(A, [e.p_phi, e.p_theta, e.p_psi])
    return PhasePoint(euler_to_quaternion(e.phi, e.theta, e.psi), l)


def from_phase_point(p: PhasePoint) -> EulerPoint:
    phi, theta, psi = quaternion_to_euler(p.x)
    _guard(theta)
    pp = momentum_frame(phi, theta, psi) @ p.l
    return EulerPoint(phi, theta, psi, *pp)


def t_round(e: EulerPoint) -> float:
    """Kinetic energy of the spherical top in Euler coordinates (unit inertia)."""
    s = _guard(e.theta)
    N = e.p_phi ** 2 + e.p_psi ** 2 - 2.0 * e.p_phi * e.p_psi * np.cos(e.theta)
    return 0.5 * (e.p_theta ** 2 + N / (s * s))


def hamiltonian_euler(e: EulerPoint, params: ModelParams) -> float:
    T = t_round(e)
    return float((2.0 * T + params.delta * e.p_psi ** 2) / (2.0 * params.I1) + params.V(np.cos(e.theta)))


def _G_derivs(e: EulerPoint):
    s = _guard(e.theta)
    c = np.cos(e.theta)
    pp = e.p_phi * e.p_psi
    N = e.p_phi ** 2 + e.p_psi ** 2 - 2.0 * pp * c
    G1 = 2.0 * pp / s - 2.0 * N * c / s ** 3
    G2 = -6.0 * pp * c / s ** 2 + 2.0 * N / s ** 2 + 6.0 * N * c * c / s ** 4
    return s, c, G1, G2


def h_theta(e: EulerPoint, params: ModelParams) -> float:
    """``dH/dtheta`` at fixed momenta."""
    s, c, G1, _ = _G_derivs(e)
    return float(G1 / (2.0 * params.I1) - s * params.dV(c))


def h_thetatheta(e: EulerPoint, params: ModelParams) -> float:
    """``d^2H/dtheta^2`` at fixed momenta."""
    s, c, _, G2 = _G_derivs(e)
    return float(G2 / (2.0 * params.I1) + s * s * params.d2V(c) - c * params.dV(c))


def sheet_euler_point(beta: float, az: float, params: ModelParams) -> EulerPoint:
    """Euler point of the rank-2 sheet in the gauge ``phi = pi/2, psi = 0``.

    In this gauge the axis is ``(sqrt(1 - az^2), 0, az)`` and ``p_theta = 0``.
    """
    a = np.array([np.sqrt(max(0.0, 1.0 - az * az)), 0.0, az])
    l = params.I1 * params.dV(az) / beta * a + beta * np.array([0.0, 0.0, 1.0])
    return EulerPoint(np.pi / 2, float(np.arccos(az)), 0.0, float(l[2]), 0.0, float(l @ a))


def check_axis(e: EulerPoint) -> np.ndarray:
    return _axis(euler_to_quaternion(e.phi, e.theta, e.psi))
