"""Quantum harmonic Lagrange top.

In the basis of Wigner functions with fixed ``(m, k)`` the Hamiltonian is
the symmetric pentadiagonal matrix ``H0 + c1 H1 + c2 H1^2``, where ``H0``
is diagonal and ``H1`` is the tridiagonal representation of ``cos(theta)``.
The truncated ``H1`` is squared exactly, so the truncated operator is
positive whenever ``V`` is.

An independent route solves the separated ODE in ``theta`` with a
finite-volume scheme and Richardson extrapolation.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eig_banded, eigh_tridiagonal
from scipy.special import eval_jacobi

from .params import ConvergenceError, DomainError, ModelParams


@dataclass(frozen=True)
class QuantumNumbers:
    """Eigenvalues ``m`` of ``l_z`` and ``k`` of ``L3``."""

    m: int
    k: int

    def __post_init__(self):
        for name in ("m", "k"):
            v = getattr(self, name)
            if int(v) != v:
                raise DomainError(f"{name} must be an integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def j_min(self) -> int:
        return max(abs(self.m), abs(self.k))


@dataclass
class BandMatrix:
    """Symmetric pentadiagonal matrix stored by its three distinct bands."""

    diag: np.ndarray
    off1: np.ndarray
    off2: np.ndarray

    def __post_init__(self):
        self.diag = np.asarray(self.diag, dtype=float)
        n = self.diag.size
        self.off1 = np.asarray(self.off1, dtype=float)
        self.off2 = np.asarray(self.off2, dtype=float)
        if self.off1.size != max(n - 1, 0) or self.off2.size != max(n - 2, 0):
            raise DomainError("band lengths must be (n, n-1, n-2)")
        if not (np.all(np.isfinite(self.diag)) and np.all(np.isfinite(self.off1))
                and np.all(np.isfinite(self.off2))):
            raise DomainError("band entries must be finite")

    @property
    def dim(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return (np.diag(self.diag) + np.diag(self.off1, 1) + np.diag(self.off1, -1)
                + np.diag(self.off2, 2) + np.diag(self.off2, -2))

    def lower_banded(self) -> np.ndarray:
        """LAPACK lower band storage, shape (3, dim)."""
        n = self.dim
        ab = np.zeros((3, n))
        ab[0] = self.diag
        ab[1, : n - 1] = self.off1
        ab[2, : max(n - 2, 0)] = self.off2
        return ab

    def norm_bound(self) -> float:
        """Row-sum bound on the spectral norm."""
        r = np.abs(self.diag).copy()
        r[:-1] += np.abs(self.off1)
        r[1:] += np.abs(self.off1)
        r[:-2] += np.abs(self.off2)
        r[2:] += np.abs(self.off2)
        return float(r.max()) if r.size else 0.0


@dataclass
class SpectrumResult:
    m: int
    k: int
    energies: np.ndarray
    lambdas: np.ndarray
    jmax_used: int
    converged: np.ndarray
    est_error: np.ndarray
    history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("energies", "lambdas", "converged", "est_error"):
            d[key] = np.asarray(d[key]).tolist()
        return d


def h0_diagonal(j, k, params: ModelParams):
    """Free symmetric-top energy ``hbar^2/(2 I1) (j(j+1) + delta k^2)``."""
    j = np.asarray(j)
    if np.any(j < abs(k)):
        raise DomainError(f"j must be >= |k| = {abs(k)}")
    return params.hbar ** 2 / (2.0 * params.I1) * (j * (j + 1.0) + params.delta * k * k)


def _h1_bands(q: QuantumNumbers, jmax: int):
    m, k = q.m, q.k
    j = np.arange(q.j_min, jmax + 1, dtype=float)
    safe = np.where(j > 0, j * (j + 1.0), 1.0)
    a = np.where(j > 0, k * m / safe, 0.0)
    jj = j[1:]
    b = -np.sqrt((jj * jj - k * k) * (jj * jj - m * m) / (jj * jj * (4.0 * jj * jj - 1.0)))
    return a, b


def h1_matrix(q: QuantumNumbers, jmax: int) -> BandMatrix:
    """Tridiagonal matrix of ``cos(theta)`` on ``j = j_min .. jmax``.

    The diagonal is ``km / (j(j+1))`` (zero at ``j = 0``) and the entry
    coupling ``j-1`` with ``j`` is
    ``b_j = -sqrt((j^2 - k^2)(j^2 - m^2) / (j^2 (4 j^2 - 1)))``.
    """
    if jmax < q.j_min:
        raise DomainError("jmax must be >= j_min")
    a, b = _h1_bands(q, jmax)
    return BandMatrix(a, b, np.zeros(max(a.size - 2, 0)))


def build_matrix(params: ModelParams, q: QuantumNumbers, jmax: int) -> BandMatrix:
    """Pentadiagonal ``H0 + c1 H1 + c2 H1^2`` with the truncated ``H1`` squared exactly."""
    if jmax < q.j_min + 2:
        raise DomainError("jmax must be >= j_min + 2")
    a, b = _h1_bands(q, jmax)
    j = np.arange(q.j_min, jmax + 1)
    sq_d = a * a
    sq_d[:-1] += b * b
    sq_d[1:] += b * b
    sq_1 = b * (a[:-1] + a[1:])
    sq_2 = b[:-1] * b[1:]
    c1, c2 = params.c1, params.c2
    return BandMatrix(h0_diagonal(j, q.k, params) + c1 * a + c2 * sq_d, c1 * b + c2 * sq_1, c2 * sq_2)


def eigenvalues_band(mat: BandMatrix, n: int | None = None) -> np.ndarray:
    """Lowest ``n`` eigenvalues of a symmetric band matrix, ascending (LAPACK ``*sbevx``)."""
    if n is None:
        n = mat.dim
    if not 1 <= n <= mat.dim:
        raise DomainError(f"need 1 <= n <= dim = {mat.dim}, got {n}")
    if mat.dim == 1:
        return mat.diag.copy()
    return eig_banded(mat.lower_banded(), lower=True, eigvals_only=True,
                      select="i", select_range=(0, n - 1))


def lambda_of_energy(E, params: ModelParams, k: int):
    """Spectral parameter ``lambda = 2 I1 E / hbar^2 - delta k^2``."""
    return 2.0 * params.I1 * np.asarray(E) / params.hbar ** 2 - params.delta * k * k


def energy_of_lambda(lam, params: ModelParams, k: int):
    return params.hbar ** 2 / (2.0 * params.I1) * (np.asarray(lam) + params.delta * k * k)


def spectrum(params: ModelParams, q: QuantumNumbers, n_levels: int, tol: float = 1e-10,
             max_doublings: int = 6) -> SpectrumResult:
    """Lowest eigenvalues with automatic truncation.

    Starts from ``jmax = j_min + 2 n_levels`` and doubles the number of
    basis states above ``j_min`` until the lowest levels move by less than
    ``tol`` in units of ``hbar^2/(2 I1)``.

    Raises
    ------
    ConvergenceError
        After ``max_doublings`` doublings; ``partial`` holds the last result.
    """
    if n_levels < 1:
        raise DomainError("n_levels must be >= 1")
    scale = params.hbar ** 2 / (2.0 * params.I1)
    added = max(2 * n_levels, 2)
    prev = eigenvalues_band(build_matrix(params, q, q.j_min + added), n_levels)
    jmax = q.j_min + added
    history = [(jmax, prev.tolist())]
    res = SpectrumResult(q.m, q.k, prev, lambda_of_energy(prev, params, q.k), jmax,
                         np.zeros(n_levels, bool), np.full(n_levels, np.inf), history)
    for _ in range(max_doublings):
        added *= 2
        jmax = q.j_min + added
        cur = eigenvalues_band(build_matrix(params, q, jmax), n_levels)
        history.append((jmax, cur.tolist()))
        err = np.abs(cur - prev) / scale
        res = SpectrumResult(q.m, q.k, cur, lambda_of_energy(cur, params, q.k), jmax,
                             err < tol, err, history)
        if np.all(err < tol):
            return res
        prev = cur
    raise ConvergenceError(f"spectrum for (m, k) = ({q.m}, {q.k}) not converged at jmax = {jmax}",
                           partial=res)


def _spectrum_task(args):
    params, m, k, n, tol = args
    return spectrum(params, QuantumNumbers(m, k), n, tol)


def spectrum_sweep(params: ModelParams, pairs, n_levels: int, tol: float = 1e-10,
                   jobs: int | None = None) -> list[SpectrumResult]:
    """Spectra for many ``(m, k)`` pairs, sorted by ``(m, k)`` regardless of scheduling."""
    pairs = sorted({(int(m), int(k)) for m, k in pairs})
    tasks = [(params, m, k, n_levels, tol) for m, k in pairs]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        return [_spectrum_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_spectrum_task, tasks))


@dataclass(frozen=True)
class CheCoefficients:
    c1t: float
    c2t: float
    index_plus1: tuple  # exponents at z = +1
    index_minus1: tuple  # exponents at z = -1


def che_coefficients(params: ModelParams, q: QuantumNumbers) -> CheCoefficients:
    """Scaled potential coefficients and characteristic exponents of the ODE

    ``-((1-z^2) w')' + [(k^2 + m^2 - 2km z)/(1-z^2) + c1t z + c2t z^2] w = lambda w``.
    """
    s = 2.0 * params.I1 / params.hbar ** 2
    ip = abs(q.m - q.k) / 2.0
    im = abs(q.m + q.k) / 2.0
    return CheCoefficients(params.c1 * s, params.c2 * s, (ip, -ip), (im, -im))


def _fv_operator(q: QuantumNumbers, c1t: float, c2t: float, N: int):
    A, B = abs(q.m - q.k), abs(q.m + q.k)
    h = np.pi / N
    th = (np.arange(N) + 0.5) * h
    thh = np.arange(N + 1) * h

    def rho(t):
        return np.sin(t) * np.sin(t / 2) ** (2 * A) * np.cos(t / 2) ** (2 * B)

    rc = rho(th)
    rh = rho(thh)
    rh[0] = rh[-1] = 0.0
    z = np.cos(th)
    j0 = q.j_min
    d = (rh[1:] + rh[:-1]) / (h * h * rc) + j0 * (j0 + 1) + c1t * z + c2t * z * z
    e = -rh[1:-1] / (h * h * np.sqrt(rc[1:] * rc[:-1]))
    return th, rc, d, e


def ode_oracle(params: ModelParams, q: QuantumNumbers, n_levels: int, grid_size: int = 4000,
               return_vectors: bool = False):
    """Eigenvalues of the separated ODE by finite volumes in ``theta``.

    The substitution ``w = sin^|m-k|(theta/2) cos^|m+k|(theta/2) u`` removes
    the singular centrifugal term; the remaining operator on ``u`` is
    self-adjoint with weight ``rho = sin(theta) w-prefactor^2`` and is
    discretised on cell centres, which makes the regularity conditions at
    the poles natural.  Richardson extrapolation over ``grid_size`` and
    ``2 grid_size`` cells removes the leading ``O(h^2)`` error.

    Returns
    -------
    lambdas, energies : ndarray
    vectors : tuple, optional
        ``(theta, w)`` on the finer grid, with ``w`` the ODE eigenfunctions.
    """
    if grid_size < 256:
        raise DomainError("grid_size must be >= 256")
    che = che_coefficients(params, q)
    lams = []
    for N in (grid_size, 2 * grid_size):
        th, rc, d, e = _fv_operator(q, che.c1t, che.c2t, N)
        if return_vectors and N == 2 * grid_size:
            lam, v = eigh_tridiagonal(d, e, select="i", select_range=(0, n_levels - 1))
            # undo the symmetrisation and the regularising prefactor
            A, B = abs(q.m - q.k), abs(q.m + q.k)
            u = v / np.sqrt(rc)[:, None]
            vec = (th, u * (np.sin(th / 2) ** A * np.cos(th / 2) ** B)[:, None])
        else:
            lam = eigh_tridiagonal(d, e, select="i", select_range=(0, n_levels - 1), eigvals_only=True)
        lams.append(lam)
    lam = (4.0 * lams[1] - lams[0]) / 3.0
    E = energy_of_lambda(lam, params, q.k)
    if return_vectors:
        return lam, E, vec
    return lam, E


def jacobi_poly(n: int, alpha: float, beta: float, z):
    """Jacobi polynomial ``P_n^(alpha, beta)(z)``."""
    if n < 0:
        raise DomainError("n must be >= 0")
    if alpha <= -1 or beta <= -1:
        raise DomainError("alpha and beta must exceed -1")
    return eval_jacobi(n, alpha, beta, z)


def basis_function(j: int, q: QuantumNumbers, theta):
    """Theta part of the Wigner function with quantum numbers ``(j, m, k)``.

    ``sin^|m-k|(theta/2) cos^|m+k|(theta/2) P_{j-j_min}^(|m-k|, |m+k|)(cos theta)``,
    an eigenfunction of ``-(1/sin) d(sin d) + (m^2 + k^2 - 2km cos)/sin^2``
    with eigenvalue ``j(j+1)``.
    """
    if j < q.j_min:
        raise DomainError("j must be >= j_min")
    A, B = abs(q.m - q.k), abs(q.m + q.k)
    theta = np.asarray(theta, dtype=float)
    return (np.sin(theta / 2) ** A * np.cos(theta / 2) ** B
            * jacobi_poly(j - q.j_min, A, B, np.cos(theta)))


@dataclass
class GaugeRecord:
    """Parameters of the ODE in standard confluent Heun form.

    With ``t = (z + 1)/2`` and ``w = t^mu0 (1 - t)^mu1 exp(nu t) W``,

    ``W'' + (gamma/t + delta/(t - 1) + eps) W' + (alpha t - q)/(t (t - 1)) W = 0``.
    """

    mu0: float
    mu1: float
    nu: complex
    gamma: float
    delta: float
    eps: complex
    alpha: complex
    q: complex
    lam: float
    complex_gauge: bool
    residual: float = float("nan")
    form_error: float = float("nan")


def _gauge_coeffs(t, mu0, mu1, nu, m, k, c1t, c2t, lam):
    """Coefficients ``(A1, A0)`` of ``W'' + A1 W' + A0 W = 0`` after the gauge."""
    p = t * (1.0 - t)
    dp = 1.0 - 2.0 * t
    z = 2.0 * t - 1.0
    Q = (k * k + m * m - 2.0 * k * m * z) / (4.0 * p) + c1t * z + c2t * z * z - lam
    L = mu0 / t - mu1 / (1.0 - t) + nu
    dL = -mu0 / t ** 2 - mu1 / (1.0 - t) ** 2
    return 2.0 * L + dp / p, dL + L * L + dp / p * L - Q / p


def cheun_parameters(m, k, c1t, c2t, lam):
    """Closed-form standard-form parameters for given ODE data."""
    mu0, mu1 = abs(m + k) / 2.0, abs(m - k) / 2.0
    nu = np.sqrt(complex(-4.0 * c2t))
    if nu.imag == 0:
        nu = nu.real
    alpha = 2.0 * c1t + 2.0 * nu * (mu0 + mu1 + 1.0)
    qq = (c1t - c2t + k * m + lam - 2.0 * mu0 ** 2 - 2.0 * mu0 * mu1 + 2.0 * mu0 * nu
          - mu0 - mu1 + nu)
    return mu0, mu1, nu, alpha, qq


def inverse_cheun_gauge(rec: GaugeRecord) -> dict:
    """Recover ``(c1t, c2t, km, m^2 + k^2, lambda)`` from the standard form."""
    mu0 = (rec.gamma - 1.0) / 2.0
    mu1 = (rec.delta - 1.0) / 2.0
    nu = rec.eps / 2.0
    c2t = -nu * nu / 4.0
    c1t = rec.alpha / 2.0 - nu * (mu0 + mu1 + 1.0)
    km = mu0 ** 2 - mu1 ** 2
    lam = rec.q - (c1t - c2t + km - 2.0 * mu0 ** 2 - 2.0 * mu0 * mu1 + 2.0 * mu0 * nu - mu0 - mu1 + nu)
    return {"c1t": c1t, "c2t": c2t, "km": km, "m2_plus_k2": 2.0 * (mu0 ** 2 + mu1 ** 2), "lam": lam}


def standard_cheun_gauge(params: ModelParams, q: QuantumNumbers, level: int = 0,
                         grid_size: int = 2000) -> GaugeRecord:
    """Transform to standard confluent Heun form and verify it numerically.

    The exponential factor needs ``nu^2 = -4 c2t``: it is real for
    ``c2 <= 0`` and imaginary otherwise (``complex_gauge``).

    Two checks are attached.  ``form_error`` compares the gauge-transformed
    coefficients, evaluated directly, with the standard form built from the
    closed-form parameters.  ``residual`` applies the standard-form operator
    to the transformed oracle eigenfunction of the requested level, away
    from the poles, relative to the size of its terms plus ``max |W|``.
    """
    che = che_coefficients(params, q)
    lam_all, _, (th, w) = ode_oracle(params, q, level + 1, grid_size, return_vectors=True)
    lam = float(lam_all[level])
    mu0, mu1, nu, alpha, qq = cheun_parameters(q.m, q.k, che.c1t, che.c2t, lam)
    rec = GaugeRecord(mu0, mu1, nu, 2.0 * mu0 + 1.0, 2.0 * mu1 + 1.0, 2.0 * nu, alpha, qq, lam,
                      bool(np.iscomplexobj(nu) and np.imag(nu) != 0))

    tt = np.linspace(0.05, 0.95, 37)
    A1, A0 = _gauge_coeffs(tt, mu0, mu1, nu, q.m, q.k, che.c1t, che.c2t, lam)
    S1 = rec.gamma / tt + rec.delta / (tt - 1.0) + rec.eps
    S0 = (rec.alpha * tt - rec.q) / (tt * (tt - 1.0))
    rec.form_error = float(max(np.max(np.abs(A1 - S1) / (1.0 + np.abs(S1))),
                               np.max(np.abs(A0 - S0) / (1.0 + np.abs(S0)))))

    # oracle eigenfunction in the standard gauge, differentiated in theta
    wl = w[:, level]
    t = np.cos(th / 2) ** 2
    W = wl / (t ** mu0 * (1.0 - t) ** mu1 * np.exp(nu * t))
    h = th[1] - th[0]
    Wth = (W[2:] - W[:-2]) / (2.0 * h)
    Wthth = (W[2:] - 2.0 * W[1:-1] + W[:-2]) / (h * h)
    ti = t[1:-1]
    thi = th[1:-1]
    t1 = -0.5 * np.sin(thi)  # dt/dtheta
    t2 = -0.5 * np.cos(thi)
    Wt = Wth / t1
    Wtt = (Wthth - Wt * t2) / (t1 * t1)
    S1 = rec.gamma / ti + rec.delta / (ti - 1.0) + rec.eps
    S0 = (rec.alpha * ti - rec.q) / (ti * (ti - 1.0))
    terms = np.abs(Wtt) + np.abs(S1 * Wt) + np.abs(S0 * W[1:-1])
    r = np.abs(Wtt + S1 * Wt + S0 * W[1:-1])
    inner = (thi > 0.1 * np.pi) & (thi < 0.9 * np.pi)
    # the extra max|W| keeps the ratio meaningful when W is nearly constant
    rec.residual = float(np.max(r[inner]) / (np.max(terms[inner]) + np.max(np.abs(W[1:-1][inner]))))
    return rec
