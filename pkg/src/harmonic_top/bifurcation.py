"""Critical values of the energy-momentum map ``(lz, L3, H)``.

Rank-1 critical values are the two parabolas of sleeping tops.  The
rank-2 values form a sheet with a rational parametrisation in
``(beta, az)``: the angular momentum is

    l(beta, az) = (I1 V'(az) / beta) a + beta e_z,  a = (sqrt(1 - az^2), 0, az).

The sign of ``H_thth`` on the sheet separates elliptic from hyperbolic
tori; its zero set gives the cusp edges of the triangular tubes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import hamiltonian_vector_field, symmetry_vector_fields
from .euler import h_theta, sheet_euler_point, to_phase_point
from .params import DomainError, EMTriple, ExistenceError, ModelParams, PhasePoint
from .reduction import HopfClass, hopf_classify

THRESHOLDS = (-0.5, -0.25, 0.5)


class TopoTag(str, Enum):
    TriangularTube = "TriangularTube"
    ShrinkingTube = "ShrinkingTube"
    OneThread = "OneThread"
    TwoThreads = "TwoThreads"
    DegenerateFreeOrFlat = "DegenerateFreeOrFlat"


@dataclass(frozen=True)
class TopologyClass:
    tag: TopoTag
    ratio: float | None
    boundary: float | None = None


@dataclass(frozen=True)
class SheetPoint:
    beta: float
    az: float
    em: EMTriple
    l_vec: np.ndarray
    h_tt: float

    @property
    def elliptic(self) -> bool:
        return self.h_tt > 0


def rank1_parabolas(params: ModelParams, m: float) -> tuple[EMTriple, EMTriple]:
    """Upright and hanging sleeping-top values for spin ``m``."""
    h = m * m * (1.0 + params.delta) / (2.0 * params.I1)
    return EMTriple(m, m, h + params.V(1.0)), EMTriple(m, -m, h + params.V(-1.0))


def sheet_axis(az: float) -> np.ndarray:
    return np.array([np.sqrt(max(0.0, 1.0 - az * az)), 0.0, az])


def h_thetatheta_sheet(params: ModelParams, beta, az):
    """Second theta derivative of H on the rank-2 sheet.

    ``beta^2/I1 + I1 V'^2/beta^2 - 2 az V' + (1 - az^2) V''``
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta == 0):
        raise DomainError("beta must be nonzero")
    dv = params.dV(az)
    b2 = beta * beta
    return b2 / params.I1 + params.I1 * dv * dv / b2 - 2.0 * az * dv + (1.0 - az * az) * params.d2V(az)


def h_thetathetatheta_sheet(params: ModelParams, beta, az):
    """Third theta derivative of H on the sheet (quadratic potentials), ``|az| < 1``."""
    t = np.asarray(beta, dtype=float) ** 2
    dv = params.dV(az)
    I1 = params.I1
    num = az * t * t + I1 * t * (-2.0 * dv - az * (1.0 - az * az) * params.d2V(az)) + I1 * I1 * az * dv * dv
    return -3.0 * num / (I1 * t * np.sqrt(1.0 - az * az))


def rank2_value(params: ModelParams, beta: float, az: float) -> SheetPoint:
    """Critical value of the energy-momentum map on the rank-2 sheet."""
    if beta == 0:
        raise DomainError("beta must be nonzero")
    if not -1.0 <= az <= 1.0:
        raise DomainError("az must lie in [-1, 1]")
    a = sheet_axis(az)
    l = params.I1 * params.dV(az) / beta * a + beta * np.array([0.0, 0.0, 1.0])
    L3 = float(l @ a)
    H = (l @ l + params.delta * L3 * L3) / (2.0 * params.I1) + params.V(az)
    return SheetPoint(float(beta), float(az), EMTriple(float(l[2]), L3, float(H)), l,
                      float(h_thetatheta_sheet(params, beta, az)))


def _sheet_em(params: ModelParams, beta, az):
    """Vectorised ``(lz, L3, H)`` on the sheet."""
    beta = np.asarray(beta, dtype=float)
    az = np.asarray(az, dtype=float)
    g = params.I1 * params.dV(az) / beta
    lz = g * az + beta
    L3 = g + beta * az
    l2 = g * g + 2.0 * g * beta * az + beta * beta
    H = (l2 + params.delta * L3 * L3) / (2.0 * params.I1) + params.V(az)
    return lz, L3, H


def _special_vertex(params: ModelParams) -> float:
    c1, c2 = params.c1, params.c2
    if c2 == 0 or abs(c1) >= 2.0 * abs(c2):
        raise ExistenceError("special parabolas need |c1| < 2|c2|")
    return -c1 / (2.0 * c2)


def special_parabola_case2(params: ModelParams, m: float) -> EMTriple:
    """Family with ``l`` parallel to e_z at the potential extremum ``V'(az0) = 0``."""
    a0 = _special_vertex(params)
    return EMTriple(m, m * a0, m * m * (1.0 + params.delta * a0 * a0) / (2.0 * params.I1) + params.V(a0))


def special_parabola_case3(params: ModelParams, k: float) -> EMTriple:
    """Family with ``l`` parallel to the axis at ``V'(az0) = 0``."""
    a0 = _special_vertex(params)
    return EMTriple(k * a0, k, k * k * (1.0 + params.delta) / (2.0 * params.I1) + params.V(a0))


def cusp_edges(params: ModelParams, az_grid) -> list[np.ndarray]:
    """Zero set of ``H_thth`` on the sheet as curves of ``(az, beta^2)``.

    With ``u = beta^2 / I1`` the condition reads ``u^2 + C u + V'^2 = 0``,
    ``C = -2 az V' + (1 - az^2) V''``.  Only real positive roots are kept.
    Returns one array of shape (n, 2) per contiguous run of each root branch.
    """
    az = np.asarray(az_grid, dtype=float)
    dv = params.dV(az)
    C = -2.0 * az * dv + (1.0 - az * az) * params.d2V(az)
    disc = C * C - 4.0 * dv * dv
    curves = []
    with np.errstate(invalid="ignore"):
        sq = np.sqrt(disc)
    for sgn in (1.0, -1.0):
        u = (-C + sgn * sq) / 2.0
        ok = (disc >= 0) & (u > 0) & (np.abs(az) < 1.0)
        for run in _runs(ok):
            curves.append(np.column_stack([az[run], params.I1 * u[run]]))
    return curves


def _runs(mask) -> list[np.ndarray]:
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    splits = np.flatnonzero(np.diff(idx) > 1) + 1
    return [r for r in np.split(idx, splits)]


def degenerate_points(params: ModelParams) -> dict:
    """Sheet points where ``H_thth`` and ``H_ththth`` vanish together.

    Solving both conditions for quadratic potentials gives
    ``az = -c1/(4 c2)`` with ``beta^2 = -I1 c1^2/(8 c2)`` or ``beta^2 = -2 I1 c2``.
    Only points with ``|az| < 1`` and ``beta^2 > 0`` are returned.

    Returns
    -------
    dict
        ``points``: list of ``(az, beta2)``; ``rejected``: the inadmissible
        solutions; ``alternative_candidates``: an alternative printed pair
        of closed forms with their ``H_thth`` residuals, flagged when they
        fail to lie on a cusp edge.
    """
    c1, c2, I1 = params.c1, params.c2, params.I1
    out = {"points": [], "rejected": [], "alternative_candidates": []}
    if c2 == 0:
        return out
    az = -c1 / (4.0 * c2)
    for b2 in (-I1 * c1 * c1 / (8.0 * c2), -2.0 * I1 * c2):
        target = out["points"] if (abs(az) < 1.0 and b2 > 0) else out["rejected"]
        target.append((float(az), float(b2)))
    out["points"].sort(key=lambda p: p[1])
    for a, b2 in ((-c1 / (2.0 * c2), -c1 * c1 / (8.0 * c2 * I1)),
                  (-c1 / (4.0 * c2), c1 * c1 / (2.0 * c2 * I1) - 2.0 * c2 / I1)):
        admissible = abs(a) < 1.0 and b2 > 0
        res = float(h_thetatheta_sheet(params, np.sqrt(b2), a)) if admissible else float("nan")
        out["alternative_candidates"].append({
            "az": float(a), "beta2": float(b2), "admissible": admissible,
            "h_tt": res, "consistent": bool(admissible and abs(res) < 1e-10),
        })
    return out


def classify_topology(params: ModelParams) -> TopologyClass:
    """Four-way classification of the bifurcation diagram from ``c2/c1``."""
    c1, c2 = params.c1, params.c2
    if c1 < 0:  # az -> -az symmetry
        c1 = -c1
    if c1 == 0:
        if c2 > 0:
            return TopologyClass(TopoTag.TwoThreads, None)
        if c2 < 0:
            return TopologyClass(TopoTag.TriangularTube, None)
        return TopologyClass(TopoTag.DegenerateFreeOrFlat, None)
    r = c2 / c1
    for t in THRESHOLDS:
        if r == t:
            return TopologyClass(TopoTag.DegenerateFreeOrFlat, r, boundary=t)
    if r < -0.5:
        tag = TopoTag.TriangularTube
    elif r < -0.25:
        tag = TopoTag.ShrinkingTube
    elif r < 0.5:
        tag = TopoTag.OneThread
    else:
        tag = TopoTag.TwoThreads
    return TopologyClass(tag, r)


# ---------------------------------------------------------------- slices

@dataclass
class Polyline:
    """Curve in the (coordinate, H) plane of a slice."""

    kind: str  # "sheet", "rank1_upright", "rank1_hanging"
    coord: np.ndarray
    H: np.ndarray
    az: np.ndarray
    beta: np.ndarray
    elliptic: np.ndarray  # bool per vertex


@dataclass
class MarkedPoint:
    kind: str  # "rank1_upright", "rank1_hanging", "case2", "case3"
    coord: float
    H: float
    stability: str = ""


@dataclass
class SliceResult:
    mode: str
    value: float
    curves: list = field(default_factory=list)
    points: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def isolated_points(self, tol: float = 1e-6) -> list:
        """Focus-focus rank-1 points not lying on any curve of the slice."""
        out = []
        for p in self.points:
            if p.stability != HopfClass.FocusFocusUnstable.value:
                continue
            d = np.inf
            for c in self.curves:
                if len(c.coord):
                    d = min(d, np.min(np.hypot(c.coord - p.coord, c.H - p.H)))
            if d > tol:
                out.append(p)
        return out

    def thread_values(self, tol: float = 1e-6) -> np.ndarray:
        """Focus-focus critical values off every sheet curve, shape (n, 2).

        Collects focus-focus vertices of rank-1 curves lying in the slice
        plane as well as the isolated marked points.
        """
        sheets = [c for c in self.curves if c.kind == "sheet" and len(c.coord)]
        pts = [(p.coord, p.H) for p in self.isolated_points(tol)]
        for c in self.curves:
            if not c.kind.startswith("rank1"):
                continue
            for x, h in zip(c.coord[~c.elliptic], c.H[~c.elliptic]):
                if all(np.min(np.hypot(s.coord - x, s.H - h)) > tol for s in sheets):
                    pts.append((x, h))
        return np.array(pts, dtype=float).reshape(-1, 2)


def slice_beta(params: ModelParams, mode: str, value: float, az):
    """Closed-form roots in ``beta`` of the slice constraint.

    ``K = lz - L3 = (1 - az)(beta - I1 V'/beta)`` and
    ``M = lz + L3 = (1 + az)(beta + I1 V'/beta)``; both are quadratics in
    ``beta`` once multiplied through.  Returns an array of shape (2, n)
    with NaN where no real nonzero root exists.
    """
    az = np.asarray(az, dtype=float)
    g = params.I1 * params.dV(az)
    if mode == "K":
        fac, s = 1.0 - az, -1.0
    elif mode == "M":
        fac, s = 1.0 + az, 1.0
    else:
        raise DomainError(f"slice mode must be 'M' or 'K', got {mode!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(value == 0, 0.0, value / fac)
        disc = w * w - 4.0 * s * g
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        # stable pair: larger-magnitude root first, the other from the product
        q = 0.5 * (w + np.where(w >= 0, 1.0, -1.0) * sq)
        r1 = q
        r2 = np.where(q != 0, s * g / q, np.nan)
        r2 = np.where((w == 0) & np.isfinite(sq), -q, r2)
    roots = np.vstack([np.maximum(r1, r2), np.minimum(r1, r2)])
    roots[~np.isfinite(roots) | (roots == 0)] = np.nan
    return roots


def _slice_coords(mode, lz, L3):
    return (lz + L3) if mode == "K" else (lz - L3)


def slice_curves(params: ModelParams, mode: str, value: float, resolution: int = 400,
                 m_extent: float | None = None) -> SliceResult:
    """Critical values of the energy-momentum map in a plane ``K = v`` or ``M = v``.

    The abscissa is the complementary combination (``M`` for a ``K`` slice
    and vice versa) and the ordinate is ``H``.  Rank-1 and special parabola
    intersections are appended as marked points; a whole rank-1 parabola
    lying in the slice plane is added as a curve.
    """
    if resolution < 16:
        raise DomainError("resolution must be >= 16")
    if mode not in ("M", "K"):
        raise DomainError(f"slice mode must be 'M' or 'K', got {mode!r}")
    value = float(value)
    # Chebyshev nodes cluster near the parabola endpoints az = +-1
    az = -np.cos(np.pi * (np.arange(resolution) + 0.5) / resolution)
    res = SliceResult(mode, value, meta={"resolution": resolution, "az_nodes": "chebyshev"})
    roots = slice_beta(params, mode, value, az)
    for bi, branch in enumerate(("upper", "lower")):
        beta = roots[bi]
        ok = np.isfinite(beta)
        for run in _runs(ok):
            b, a = beta[run], az[run]
            lz, L3, H = _sheet_em(params, b, a)
            htt = h_thetatheta_sheet(params, b, a)
            res.curves.append(Polyline("sheet", _slice_coords(mode, lz, L3), H, a, b, htt > 0))

    if m_extent is None:
        m_extent = 2.0 * max(abs(value), 2.0 * params.I1 * np.sqrt(abs(params.dV(1.0)) / params.I1)
                             + 2.0 * params.I1 * np.sqrt(abs(params.dV(-1.0)) / params.I1), 1.0)
    upright_in_plane = mode == "K" and value == 0
    hanging_in_plane = mode == "M" and value == 0
    for az0, kind, in_plane in ((1.0, "rank1_upright", upright_in_plane),
                                (-1.0, "rank1_hanging", hanging_in_plane)):
        if in_plane:
            m = np.linspace(-m_extent, m_extent, 2 * resolution + 1)
            em = [rank1_parabolas(params, mi)[0 if az0 > 0 else 1] for mi in m]
            lz = np.array([e.lz for e in em])
            L3 = np.array([e.L3 for e in em])
            H = np.array([e.H for e in em])
            stab = np.array([hopf_classify(params, mi, az0) != HopfClass.FocusFocusUnstable for mi in m])
            res.curves.append(Polyline(kind, _slice_coords(mode, lz, L3), H,
                                       np.full(m.shape, az0), np.full(m.shape, np.nan), stab))
            continue
        # the parabola crosses the plane at a single spin
        if mode == "K" and az0 < 0:
            m = value / 2.0
        elif mode == "M" and az0 > 0:
            m = value / 2.0
        else:
            continue
        e = rank1_parabolas(params, m)[0 if az0 > 0 else 1]
        res.points.append(MarkedPoint(kind, float(_slice_coords(mode, e.lz, e.L3)), e.H,
                                      hopf_classify(params, m, az0).value))

    try:
        a0 = _special_vertex(params)
    except ExistenceError:
        a0 = None
    if a0 is not None:
        # case 2: (m, m a0), case 3: (k a0, k)
        fac2 = (1.0 - a0) if mode == "K" else (1.0 + a0)
        fac3 = (a0 - 1.0) if mode == "K" else (a0 + 1.0)
        e2 = special_parabola_case2(params, value / fac2)
        e3 = special_parabola_case3(params, value / fac3)
        res.points.append(MarkedPoint("case2", float(_slice_coords(mode, e2.lz, e2.L3)), e2.H))
        res.points.append(MarkedPoint("case3", float(_slice_coords(mode, e3.lz, e3.L3)), e3.H))
    return res


# ---------------------------------------------------------------- surface

@dataclass
class SurfaceMesh:
    """Triangulated samples of the rank-2 sheet."""

    sheet: np.ndarray  # +1 or -1: sign of beta
    beta: np.ndarray
    az: np.ndarray
    em: np.ndarray  # (n, 3): lz, L3, H
    h_tt: np.ndarray
    elliptic: np.ndarray
    triangles: np.ndarray  # (t, 3) vertex indices


def surface_samples(params: ModelParams, n_beta: int = 40, n_az: int = 41) -> SurfaceMesh:
    """Sample both beta-sign sheets on a grid in ``(arctan(beta), az)``.

    ``arctan(beta)`` uses cell-centred nodes in ``(0, pi/2)`` so that
    ``beta = 0`` and infinity are excluded; ``az`` includes the endpoints.
    """
    u = (np.arange(n_beta) + 0.5) * (np.pi / 2) / n_beta
    az_nodes = np.linspace(-1.0, 1.0, n_az)
    sheets, betas, azs, tris = [], [], [], []
    offset = 0
    for sgn in (1.0, -1.0):
        B, A = np.meshgrid(sgn * np.tan(u), az_nodes, indexing="ij")
        sheets.append(np.full(B.size, sgn))
        betas.append(B.ravel())
        azs.append(A.ravel())
        idx = np.arange(B.size).reshape(B.shape) + offset
        a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
        c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
        tris.append(np.column_stack([a, b, c]))
        tris.append(np.column_stack([a, c, d]))
        offset += B.size
    beta = np.concatenate(betas)
    az = np.concatenate(azs)
    lz, L3, H = _sheet_em(params, beta, az)
    htt = h_thetatheta_sheet(params, beta, az)
    return SurfaceMesh(np.concatenate(sheets), beta, az, np.column_stack([lz, L3, H]), htt,
                       htt > 0, np.vstack(tris))


# ---------------------------------------------------------------- rank test

def sheet_phase_point(params: ModelParams, beta: float, az: float) -> PhasePoint:
    """Phase point on the rank-2 sheet in the gauge with ``a_y = 0``."""
    return to_phase_point(sheet_euler_point(beta, az, params))


def field_rank_ratio(p: PhasePoint, params: ModelParams) -> float:
    """``sigma_3 / sigma_1`` of the stacked fields ``[X_H, X_L3, X_lz]``."""
    XL3, Xlz, _ = symmetry_vector_fields(p)
    M = np.column_stack([hamiltonian_vector_field(p, params), XL3, Xlz])
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[2] / s[0]) if s[0] > 0 else 0.0


def rank_check(params: ModelParams, beta: float, az: float, beta_offset: float = 0.0):
    """Rank diagnostics at a sheet point.

    Parameters
    ----------
    beta_offset : float
        Added to the ``e_z`` coefficient of ``l`` only, which moves the
        state off the sheet for control checks.

    Returns
    -------
    ratio : float
        ``sigma_3 / sigma_1`` of ``[X_H, X_L3, X_lz]``.
    h_theta_residual : float
        ``|H_theta|`` at the reconstructed Euler point.
    """
    if beta == 0:
        raise DomainError("beta must be nonzero")
    if not abs(az) < 1:
        raise DomainError("rank_check needs |az| < 1")
    e = sheet_euler_point(beta, az, params)
    p = to_phase_point(e)
    if beta_offset:
        p = PhasePoint(p.x, p.l + np.array([0.0, 0.0, beta_offset]))
    return field_rank_ratio(p, params), abs(h_theta(e, params))
