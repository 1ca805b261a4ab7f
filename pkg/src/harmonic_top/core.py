"""Global space-frame dynamics of the harmonic Lagrange top on T*S^3.

The state is a unit quaternion ``x`` together with the spatial angular
momentum ``l``.  The Poisson structure is the Lie-Poisson matrix ``B+``
built from the half-frame matrices ``x+``; ``|x|^2`` is its Casimir.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import DOP853

from .params import (
    DomainError,
    IntegrationError,
    ModelParams,
    PhasePoint,
    check_unit,
)

E3 = np.array([0.0, 0.0, 1.0])


def hat(v) -> np.ndarray:
    """Cross-product matrix, ``hat(v) @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _xpm(x, s: float) -> np.ndarray:
    x0, x1, x2, x3 = x
    return np.array([
        [x1, -x0, -s * x3, s * x2],
        [x2, s * x3, -x0, -s * x1],
        [x3, -s * x2, s * x1, -x0],
    ])


def half_frame_matrices(x) -> tuple[np.ndarray, np.ndarray]:
    """Return the 3x4 matrices ``(x+, x-)`` of a unit quaternion.

    Both have orthonormal rows, and ``x+ @ x-.T`` is the attitude matrix.
    """
    x = check_unit(x)
    return _xpm(x, 1.0), _xpm(x, -1.0)


def rotation(x) -> np.ndarray:
    """Rotation matrix ``R = x+ x-^t``; ``x`` and ``-x`` give the same R."""
    xp, xm = half_frame_matrices(x)
    return xp @ xm.T


def _axis(x) -> np.ndarray:
    x0, x1, x2, x3 = x
    return np.array([
        2.0 * (x1 * x3 - x0 * x2),
        2.0 * (x0 * x1 + x2 * x3),
        x0 * x0 + x3 * x3 - x1 * x1 - x2 * x2,
    ])


def axis(x) -> np.ndarray:
    """Figure axis ``a = R e3`` in the space frame."""
    return _axis(check_unit(x))


def axis_jacobian(x) -> np.ndarray:
    """Jacobian ``da/dx`` (3x4) of the axis with respect to the quaternion."""
    x0, x1, x2, x3 = np.asarray(x, dtype=float)
    return 2.0 * np.array([
        [-x2, x3, -x0, x1],
        [x1, x0, x3, x2],
        [x0, -x1, -x2, x3],
    ])


def l3_integral(p: PhasePoint) -> float:
    """Angular momentum about the figure axis, ``L3 = l . a``."""
    return float(p.l @ _axis(p.x))


def lz_integral(p: PhasePoint) -> float:
    return float(p.l[2])


def hamiltonian(p: PhasePoint, params: ModelParams) -> float:
    a = _axis(p.x)
    L3 = p.l @ a
    kin = (p.l @ p.l + params.delta * L3 * L3) / (2.0 * params.I1)
    return float(kin + params.V(a[2]))


def poisson_matrix_spatial(p: PhasePoint) -> np.ndarray:
    """Lie-Poisson matrix ``B+`` (7x7) in coordinates ``(x, l)``."""
    xp = _xpm(p.x, 1.0)
    B = np.zeros((7, 7))
    B[:4, 4:] = 0.5 * xp.T
    B[4:, :4] = -0.5 * xp
    B[4:, 4:] = -hat(p.l)
    return B


# analytic gradients of the three integrals, as 7-vectors

def grad_lz(p: PhasePoint) -> np.ndarray:
    g = np.zeros(7)
    g[6] = 1.0
    return g


def grad_L3(p: PhasePoint) -> np.ndarray:
    J = axis_jacobian(p.x)
    return np.concatenate([J.T @ p.l, _axis(p.x)])


def grad_H(p: PhasePoint, params: ModelParams) -> np.ndarray:
    a = _axis(p.x)
    J = axis_jacobian(p.x)
    L3 = p.l @ a
    cL = params.delta * L3 / params.I1
    gx = cL * (J.T @ p.l) + params.dV(a[2]) * J[2]
    gl = p.l / params.I1 + cL * a
    return np.concatenate([gx, gl])


def hamiltonian_vector_field(p: PhasePoint, params: ModelParams) -> np.ndarray:
    """Hamiltonian vector field ``B+ grad H`` as a 7-vector."""
    return poisson_matrix_spatial(p) @ grad_H(p, params)


def symmetry_vector_fields(p: PhasePoint):
    """Vector fields of ``L3``, ``lz`` and ``|l|^2`` in closed form.

    Returns
    -------
    X_L3, X_lz, X_l2 : ndarray, shape (7,)
    """
    xp, xm = _xpm(p.x, 1.0), _xpm(p.x, -1.0)
    X_L3 = np.concatenate([0.5 * xm.T @ E3, np.zeros(3)])
    X_lz = np.concatenate([0.5 * xp.T @ E3, -np.cross(p.l, E3)])
    X_l2 = np.concatenate([xp.T @ p.l, np.zeros(3)])
    return X_L3, X_lz, X_l2


def _rot2(u, v, ang):
    c, s = np.cos(ang), np.sin(ang)
    return u * c + v * s, v * c - u * s


def flow_L3(p: PhasePoint, psi: float) -> PhasePoint:
    """Time-``psi`` flow of ``L3``: rotates (x0, x3) and (x1, x2) by psi/2."""
    x0, x1, x2, x3 = p.x
    y0, y3 = _rot2(x0, x3, 0.5 * psi)
    y1, y2 = _rot2(x1, x2, 0.5 * psi)
    return PhasePoint(np.array([y0, y1, y2, y3]), p.l)


def flow_lz(p: PhasePoint, phi: float) -> PhasePoint:
    """Time-``phi`` flow of ``lz``: rotates the frame and ``l`` about e_z."""
    x0, x1, x2, x3 = p.x
    y0, y3 = _rot2(x0, x3, 0.5 * phi)
    y2, y1 = _rot2(x2, x1, 0.5 * phi)
    c, s = np.cos(phi), np.sin(phi)
    lx, ly, lz = p.l
    return PhasePoint(np.array([y0, y1, y2, y3]), np.array([c * lx - s * ly, s * lx + c * ly, lz]))


def flow_norml(p: PhasePoint, alpha: float) -> PhasePoint:
    """Time-``alpha`` flow of ``|l|``: rotation of the body by alpha about ``l``."""
    n = np.linalg.norm(p.l)
    if n == 0.0:
        raise DomainError("flow of |l| is undefined at l = 0")
    w = _xpm(p.x, 1.0).T @ p.l / n
    y = np.cos(0.5 * alpha) * p.x + np.sin(0.5 * alpha) * w
    return PhasePoint(y, p.l)


def _fd_gradient(f: Callable[[PhasePoint], float], p: PhasePoint, h: float = 1e-6) -> np.ndarray:
    v = p.as_vector()
    scale = max(1.0, np.max(np.abs(v)))
    step = h * scale
    g = np.empty(7)
    for i in range(7):
        e = np.zeros(7)
        e[i] = step
        g[i] = (f(PhasePoint.from_vector(v + e, check=False))
                - f(PhasePoint.from_vector(v - e, check=False))) / (2.0 * step)
    return g


def poisson_bracket_numeric(f, g, p: PhasePoint, grad_f=None, grad_g=None) -> float:
    """Bracket ``{f, g} = grad f^t B+ grad g`` at ``p``.

    Analytic gradients are used when supplied; otherwise central
    differences with step ``1e-6`` (relative to the state scale).
    """
    gf = grad_f(p) if grad_f is not None else _fd_gradient(f, p)
    gg = grad_g(p) if grad_g is not None else _fd_gradient(g, p)
    return float(gf @ poisson_matrix_spatial(p) @ gg)


@dataclass
class Trajectory:
    """Sampled trajectory with conserved-quantity diagnostics."""

    t: np.ndarray
    y: np.ndarray  # shape (n, 7): columns x0..x3, lx, ly, lz
    H: np.ndarray
    lz: np.ndarray
    L3: np.ndarray
    xnorm_err: np.ndarray
    nfev: int = 0

    @property
    def drift(self) -> dict:
        return {
            "H": float(np.max(np.abs(self.H - self.H[0]))),
            "lz": float(np.max(np.abs(self.lz - self.lz[0]))),
            "L3": float(np.max(np.abs(self.L3 - self.L3[0]))),
            "xnorm": float(np.max(np.abs(self.xnorm_err))),
        }


def _diagnostics(t, Y, params, nfev=0) -> Trajectory:
    Y = np.asarray(Y)
    H = np.empty(len(t))
    L3 = np.empty(len(t))
    for i, y in enumerate(Y):
        p = PhasePoint.from_vector(y, check=False)
        H[i] = hamiltonian(p, params)
        L3[i] = l3_integral(p)
    return Trajectory(np.asarray(t), Y, H, Y[:, 6].copy(), L3,
                      np.linalg.norm(Y[:, :4], axis=1) - 1.0, nfev)


def integrate(p0: PhasePoint, params: ModelParams, T: float, tol: float = 1e-10,
              n_samples: int = 201, project: bool = False, max_step: float = np.inf) -> Trajectory:
    """Integrate the Hamiltonian flow with an adaptive 8(5,3) Runge-Kutta scheme.

    Parameters
    ----------
    p0 : PhasePoint
        Initial state.
    T : float
        Final time (may be negative).
    tol : float
        Relative and absolute local error tolerance.
    n_samples : int
        Number of equally spaced output samples including both ends.
    project : bool
        Renormalise ``x`` after every accepted step.  Off by default so that
        the drift of ``|x|`` remains visible as a diagnostic.

    Raises
    ------
    IntegrationError
        If the step size underflows; ``partial`` carries the samples so far.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")

    def rhs(t, y):
        return hamiltonian_vector_field(PhasePoint.from_vector(y, check=False), params)

    t_out = np.linspace(0.0, T, n_samples)
    Y = [p0.as_vector()]
    ts = [0.0]
    nfev_done = 0
    if T == 0:
        return _diagnostics(np.zeros(2), np.array([Y[0], Y[0]]), params)

    def new_solver(t0, y0, first_step=None):
        return DOP853(rhs, t0, y0, T, rtol=tol, atol=tol, max_step=max_step,
                      first_step=first_step)

    solver = new_solver(0.0, Y[0])
    idx = 1
    while idx < n_samples:
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed at t={solver.t:.6g}: {msg}",
                                   partial=_diagnostics(ts, Y, params, nfev_done + solver.nfev))
        dense = solver.dense_output()
        t_new = solver.t
        while idx < n_samples and (t_out[idx] - t_new) * np.sign(T) <= 0:
            ts.append(t_out[idx])
            Y.append(dense(t_out[idx]))
            idx += 1
        if project and solver.status == "running":
            y = solver.y.copy()
            y[:4] /= np.linalg.norm(y[:4])
            nfev_done += solver.nfev
            solver = new_solver(t_new, y, first_step=min(abs(solver.step_size), abs(T - t_new)))
        if solver.status == "finished":
            while idx < n_samples:
                ts.append(t_out[idx])
                Y.append(dense(t_out[idx]))
                idx += 1
    return _diagnostics(np.array(ts), np.array(Y), params, nfev_done + solver.nfev)
