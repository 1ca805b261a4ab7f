"""Parameter records, phase-space points and error types."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

UNIT_TOL = 1e-9


class DomainError(ValueError):
    """Input outside the domain of an operation."""


class ChartSingularityError(DomainError):
    """Euler-angle chart evaluated too close to sin(theta) = 0."""


class ExistenceError(DomainError):
    """Requested object does not exist for the given parameters."""


class IntegrationError(RuntimeError):
    """Integrator failure; ``partial`` holds the trajectory computed so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConvergenceError(RuntimeError):
    """Truncation loop failed to converge; ``partial`` holds the last result."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the harmonic Lagrange top.

    Parameters
    ----------
    I1 : float
        Equatorial moment of inertia, positive.
    delta : float
        Anisotropy ``I1/I3 - 1``, greater than -1.
    c1, c2 : float
        Coefficients of the potential ``V(a_z) = c1*a_z + c2*a_z**2``.
    hbar : float
        Quantum scale, positive. Only the quantum routines use it.
    """

    I1: float = 1.0
    delta: float = 0.0
    c1: float = 1.0
    c2: float = 0.4
    hbar: float = 0.15

    def __post_init__(self):
        for name in ("I1", "delta", "c1", "c2", "hbar"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.I1 <= 0:
            raise DomainError(f"I1 must be positive, got {self.I1}")
        if self.delta <= -1:
            raise DomainError(f"delta must exceed -1, got {self.delta}")
        if self.hbar <= 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")

    @property
    def I3(self) -> float:
        return self.I1 / (1.0 + self.delta)

    def V(self, az):
        return self.c1 * az + self.c2 * az * az

    def dV(self, az):
        return self.c1 + 2.0 * self.c2 * az

    def d2V(self, az=None):
        return 2.0 * self.c2

    def as_dict(self) -> dict:
        return asdict(self)


def check_unit(x, tol: float = UNIT_TOL) -> np.ndarray:
    """Return ``x`` as a float array, raising if it is not a unit 4-vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise DomainError(f"quaternion must have shape (4,), got {x.shape}")
    if abs(np.linalg.norm(x) - 1.0) > tol:
        raise DomainError(f"quaternion not unit: |x| = {np.linalg.norm(x):.3e}")
    return x


@dataclass(frozen=True)
class PhasePoint:
    """State on T*S^3: unit quaternion ``x`` and spatial angular momentum ``l``."""

    x: np.ndarray
    l: np.ndarray
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        l = np.asarray(self.l, dtype=float).copy()
        if x.shape != (4,) or l.shape != (3,):
            raise DomainError("PhasePoint needs x of shape (4,) and l of shape (3,)")
        if self.check:
            check_unit(x)
        x.setflags(write=False)
        l.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "l", l)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.l])

    @classmethod
    def from_vector(cls, v, check: bool = True) -> "PhasePoint":
        v = np.asarray(v, dtype=float)
        return cls(v[:4], v[4:7], check=check)


@dataclass(frozen=True)
class EMTriple:
    """Value of the energy-momentum map."""

    lz: float
    L3: float
    H: float

    def as_array(self) -> np.ndarray:
        return np.array([self.lz, self.L3, self.H])
