"""Reduced systems and linear stability of sleeping tops.

Two reductions of the symmetric top are provided: the spatial one in
``(a, l)`` obtained by quotienting the ``L3`` flow, and the body-frame
Euler-Poisson system in ``(Gamma, L)``.  Both fields are quadratic
polynomials, which makes their central-difference Jacobians exact up
to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import _axis
from .params import DomainError, ModelParams, PhasePoint

E3 = np.array([0.0, 0.0, 1.0])


class HopfClass(str, Enum):
    EllipticStable = "EllipticStable"
    DegenerateCollision = "DegenerateCollision"
    FocusFocusUnstable = "FocusFocusUnstable"


@dataclass(frozen=True)
class SpatialReduced:
    """Figure axis ``a`` and angular momentum ``l`` in the space frame."""

    a: np.ndarray
    l: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.l])


@dataclass(frozen=True)
class BodyReduced:
    """Gravity direction ``Gamma`` and angular momentum ``L`` in the body frame."""

    Gamma: np.ndarray
    L: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.Gamma, self.L])


@dataclass
class StabilityData:
    kappa: float
    f: float
    omega: float
    eigenvalues: np.ndarray
    classification: HopfClass = HopfClass.EllipticStable
    details: dict = field(default_factory=dict)


def _unit3(v, name="a"):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise DomainError(f"{name} must be a unit 3-vector")
    return v


def reduce_spatial(p: PhasePoint) -> SpatialReduced:
    return SpatialReduced(_axis(p.x), np.array(p.l))


def hamiltonian_spatial_reduced(s: SpatialReduced, params: ModelParams) -> float:
    a, l = np.asarray(s.a), np.asarray(s.l)
    L3 = a @ l
    return float((l @ l + params.delta * L3 * L3) / (2.0 * params.I1) + params.V(a[2]))


def hamiltonian_body_reduced(b: BodyReduced, params: ModelParams) -> float:
    L = np.asarray(b.L)
    T = (L[0] ** 2 + L[1] ** 2) / (2.0 * params.I1) + L[2] ** 2 / (2.0 * params.I3)
    return float(T + params.V(b.Gamma[2]))


def _spatial_rhs(y, params: ModelParams):
    a, l = y[:3], y[3:]
    L3 = a @ l
    grad_l = (l + params.delta * L3 * a) / params.I1
    grad_a = params.delta * L3 * l / params.I1 + params.dV(a[2]) * E3
    return np.concatenate([-np.cross(a, grad_l), -np.cross(a, grad_a) - np.cross(l, grad_l)])


def _body_rhs(y, params: ModelParams):
    G, L = y[:3], y[3:]
    Om = np.array([L[0] / params.I1, L[1] / params.I1, L[2] / params.I3])
    grad_G = params.dV(G[2]) * E3
    return np.concatenate([np.cross(G, Om), np.cross(L, Om) + np.cross(G, grad_G)])


def reduced_field_spatial(s: SpatialReduced, params: ModelParams) -> np.ndarray:
    """Reduced field ``a' = -a x dH/dl``, ``l' = -a x dH/da - l x dH/dl``."""
    a = _unit3(s.a)
    return _spatial_rhs(np.concatenate([a, s.l]), params)


def reduced_field_body(b: BodyReduced, params: ModelParams) -> np.ndarray:
    """Euler-Poisson field ``Gamma' = Gamma x Omega``, ``L' = L x Omega + Gamma x dV``."""
    G = _unit3(b.Gamma, "Gamma")
    return _body_rhs(np.concatenate([G, b.L]), params)


def body_from_phase(p: PhasePoint) -> BodyReduced:
    """Body-frame variables ``Gamma = R^t e_z`` and ``L = R^t l``."""
    from .core import rotation

    R = rotation(p.x)
    return BodyReduced(R.T @ E3, R.T @ p.l)


def integrate_reduced(y0, params: ModelParams, T: float, frame: str = "spatial",
                      tol: float = 1e-10, t_eval=None):
    """Integrate a reduced system; returns ``(t, Y)`` with rows of 6-vectors."""
    from scipy.integrate import solve_ivp

    rhs = _spatial_rhs if frame == "spatial" else _body_rhs
    if frame not in ("spatial", "body"):
        raise DomainError(f"unknown frame {frame!r}")
    sol = solve_ivp(lambda t, y: rhs(y, params), (0.0, T), np.asarray(y0, dtype=float),
                    method="DOP853", rtol=tol, atol=tol, t_eval=t_eval)
    if not sol.success:
        from .params import IntegrationError

        raise IntegrationError(sol.message, partial=(sol.t, sol.y.T))
    return sol.t, sol.y.T


def _check_az(az):
    if az not in (-1, 1, -1.0, 1.0):
        raise DomainError("az must be +1 or -1")
    return float(az)


def spin_parameters(params: ModelParams, lz: float, az: float):
    """Return ``(kappa, f, omega)`` for the sleeping top ``a = az e_z``."""
    az = _check_az(az)
    kappa = lz / params.I1
    f = az * params.dV(az) / params.I1
    omega = lz / params.I3
    return kappa, f, omega


def charpoly_sleeping(params: ModelParams, lz: float, az: float, frame: str = "spatial") -> np.ndarray:
    """Coefficients (highest degree first) of the quartic characteristic polynomial.

    In the space frame ``P+ = lam^4 + lam^2 (kappa^2 - 2 f) + f^2``.  The
    body-frame polynomial is ``P- = P+ + mu (2 lam^2 + 2 f + mu)`` with
    ``mu = omega (omega - kappa)``.
    """
    kappa, f, omega = spin_parameters(params, lz, az)
    c = np.array([1.0, 0.0, kappa * kappa - 2.0 * f, 0.0, f * f])
    if frame == "spatial":
        return c
    if frame != "body":
        raise DomainError(f"unknown frame {frame!r}")
    mu = omega * (omega - kappa)
    return c + np.array([0.0, 0.0, 2.0 * mu, 0.0, 2.0 * f * mu + mu * mu])


def sleeping_eigenvalues(params: ModelParams, lz: float, az: float, frame: str = "spatial") -> np.ndarray:
    """Roots of the biquadratic characteristic polynomial in closed form.

    The discriminant in ``lam^2`` is evaluated in factorised form,
    ``(kappa^2 - 4 f)(kappa^2 + 4 mu)`` with ``mu = 0`` in the space frame,
    so eigenvalue collisions are resolved without the square-root loss of a
    generic polynomial solver.
    """
    kappa, f, omega = spin_parameters(params, lz, az)
    if frame == "spatial":
        mu = 0.0
    elif frame == "body":
        mu = omega * (omega - kappa)
    else:
        raise DomainError(f"unknown frame {frame!r}")
    b = kappa * kappa - 2.0 * f + 2.0 * mu
    disc = complex((kappa * kappa - 4.0 * f) * (kappa * kappa + 4.0 * mu))
    s = np.array([(-b + np.sqrt(disc)) / 2.0, (-b - np.sqrt(disc)) / 2.0])
    lam = np.sqrt(s.astype(complex))
    return np.concatenate([lam, -lam])


def hopf_classify(params: ModelParams, lz: float, az: float, rel_band: float = 1e-12) -> HopfClass:
    """Stability class of the sleeping top from the sign of ``kappa^2 - 4 f``."""
    kappa, f, _ = spin_parameters(params, lz, az)
    if f <= 0:
        return HopfClass.EllipticStable
    k2 = kappa * kappa
    if abs(k2 - 4.0 * f) <= rel_band * max(k2, 4.0 * f):
        return HopfClass.DegenerateCollision
    return HopfClass.EllipticStable if k2 > 4.0 * f else HopfClass.FocusFocusUnstable


def hopf_threshold(params: ModelParams, az: float = 1.0) -> float:
    """Non-negative ``lz`` at which ``kappa^2 = 4 f``; NaN when ``f <= 0``."""
    _, f, _ = spin_parameters(params, 0.0, az)
    return float(params.I1 * 2.0 * np.sqrt(f)) if f > 0 else float("nan")


def _jacobian(rhs, y0, params, h=1e-4):
    n = len(y0)
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (rhs(y0 + e, params) - rhs(y0 - e, params)) / (2.0 * h)
    return J


def linearize_sleeping(params: ModelParams, lz: float, az: float, frame: str = "spatial"):
    """Linearisation of the reduced field at a sleeping top.

    Returns
    -------
    M : ndarray, shape (6, 6)
    eigenvalues : ndarray, shape (6,)
        Sorted with the two Casimir zero modes first.
    """
    az = _check_az(az)
    if frame == "spatial":
        y0 = np.array([0.0, 0.0, az, 0.0, 0.0, lz])
        M = _jacobian(_spatial_rhs, y0, params)
    elif frame == "body":
        y0 = np.array([0.0, 0.0, az, 0.0, 0.0, az * lz])
        M = _jacobian(_body_rhs, y0, params)
    else:
        raise DomainError(f"unknown frame {frame!r}")
    ev = np.linalg.eigvals(M)
    order = np.argsort(np.abs(ev), kind="stable")
    ev = ev[order]
    zero_tol = 1e-9 * max(np.linalg.norm(M), 1.0)
    nz = ev[np.abs(ev) >= zero_tol]
    ev = np.concatenate([ev[np.abs(ev) < zero_tol], nz[np.lexsort((nz.real, nz.imag))]])
    return M, ev


def stability(params: ModelParams, lz: float, az: float) -> StabilityData:
    kappa, f, omega = spin_parameters(params, lz, az)
    return StabilityData(kappa, f, omega, sleeping_eigenvalues(params, lz, az),
                         hopf_classify(params, lz, az),
                         {"discriminant": kappa ** 2 * (kappa ** 2 - 4.0 * f)})


def floquet_multipliers(eigenvalues, period: float) -> np.ndarray:
    return np.exp(np.asarray(eigenvalues) * period)
