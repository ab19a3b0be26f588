"""Partially observed LTI plant and structural validation.

The plant is

    x_{t+1} = A x_t + B u_t + w_{t+1},    y_t = C x_t + eps_t,

with x in R^n, u in R^m, y in R^q. Stabilizability/detectability are decided
by eigenvector (PBH) rank tests on the unstable modes; all types are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    IndefinitePenalty,
    InfeasibleTarget,
    NonSymmetricPenalty,
)

# Singular values below RANK_RTOL * sigma_max count as zero in PBH rank tests.
RANK_RTOL = 1e-8
SYM_TOL = 1e-10
PSD_EIG_TOL = -1e-10
PD_EIG_TOL = 1e-10


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    arr.flags.writeable = False
    return arr


def as_vector(a, dim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    if arr.shape != (dim,):
        raise DimensionMismatch(f"{name} must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    arr.flags.writeable = False
    return arr


def check_penalty(mat, name: str, *, positive_definite: bool = False) -> np.ndarray:
    """Validate a symmetric PSD (or PD) penalty matrix and return its symmetrized copy."""
    m = _as_matrix(mat, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > SYM_TOL * scale:
        raise NonSymmetricPenalty(f"{name} is not symmetric to {SYM_TOL} relative")
    sym = (m + m.T) / 2.0
    eigs = np.linalg.eigvalsh(sym)
    bound = PD_EIG_TOL if positive_definite else PSD_EIG_TOL
    if np.min(eigs) < bound:
        kind = "positive definite" if positive_definite else "positive semi-definite"
        raise IndefinitePenalty(f"{name} is not {kind}: min eigenvalue {np.min(eigs):.3e}")
    sym.flags.writeable = False
    return sym


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition (tiny negatives clipped)."""
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return vecs @ np.diag(np.sqrt(vals)) @ vecs.T


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


def _numerical_rank(mat: np.ndarray) -> int:
    svals = np.linalg.svd(mat, compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > RANK_RTOL * svals[0]))


def pbh_stabilizable(a: np.ndarray, b: np.ndarray) -> bool:
    """PBH test: rank [lam*I - A, B] = n for every eigenvalue with |lam| >= 1."""
    n = a.shape[0]
    for lam in np.linalg.eigvals(a):
        if abs(lam) >= 1.0 - 1e-12:
            test = np.hstack([lam * np.eye(n) - a, b.astype(complex)])
            if _numerical_rank(test) < n:
                return False
    return True


def pbh_detectable(a: np.ndarray, c: np.ndarray) -> bool:
    """PBH test: rank [lam*I - A; C] = n for every eigenvalue with |lam| >= 1."""
    n = a.shape[0]
    for lam in np.linalg.eigvals(a):
        if abs(lam) >= 1.0 - 1e-12:
            test = np.vstack([lam * np.eye(n) - a, c.astype(complex)])
            if _numerical_rank(test) < n:
                return False
    return True


@dataclass(frozen=True)
class LtiSystem:
    """Discrete-time LTI plant matrices (A: n x n, B: n x m, C: q x n)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _as_matrix(self.a, "A"))
        object.__setattr__(self, "b", _as_matrix(self.b, "B"))
        object.__setattr__(self, "c", _as_matrix(self.c, "C"))
        n = self.a.shape[0]
        if self.a.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {self.a.shape}")
        if self.b.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {self.b.shape}")
        if self.c.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} columns, got {self.c.shape}")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def q(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class RegulationTarget:
    """Consistent fixed point (x*, u*) with implied output target y* = C x*.

    The output-noise mean is deliberately excluded from y*; reports may display
    y* + eps_bar separately.
    """

    x_star: np.ndarray
    u_star: np.ndarray
    y_star: np.ndarray
    residual: float = 0.0


@dataclass(frozen=True)
class StructureReport:
    stabilizable: bool
    detectable_via_q_sqrt: bool
    spectral_radius_a: float
    unstable_eigenvalues: tuple = field(default_factory=tuple)


def validate_system(sys: LtiSystem, q_penalty, r_penalty) -> StructureReport:
    """Check the standing structural assumptions for the given penalty pair.

    Q must be symmetric PSD (n x n), R symmetric PD (m x m). Returns PBH-based
    stabilizability of (A, B) and detectability of (A, Q^{1/2}), plus the
    spectral radius of A. Pure and deterministic.
    """
    q_sym = check_penalty(q_penalty, "Q")
    r_sym = check_penalty(r_penalty, "R", positive_definite=True)
    if q_sym.shape != (sys.n, sys.n):
        raise DimensionMismatch(f"Q must be {sys.n}x{sys.n}, got {q_sym.shape}")
    if r_sym.shape != (sys.m, sys.m):
        raise DimensionMismatch(f"R must be {sys.m}x{sys.m}, got {r_sym.shape}")
    eigs = np.linalg.eigvals(sys.a)
    unstable = tuple(complex(lam) for lam in eigs if abs(lam) >= 1.0 - 1e-12)
    return StructureReport(
        stabilizable=pbh_stabilizable(sys.a, sys.b),
        detectable_via_q_sqrt=pbh_detectable(sys.a, psd_sqrt(q_sym)),
        spectral_radius_a=spectral_radius(sys.a),
        unstable_eigenvalues=unstable,
    )


def make_regulation_target(sys: LtiSystem, x_star, tol: float = 1e-8) -> RegulationTarget:
    """Solve (I - A) x* = B u* for u* by least squares.

    Raises InfeasibleTarget when the residual exceeds tol relative to the
    target scale, i.e. when x* is not an equilibrium for any input.
    """
    x = as_vector(x_star, sys.n, "x_star")
    rhs = (np.eye(sys.n) - sys.a) @ x
    u, *_ = np.linalg.lstsq(sys.b, rhs, rcond=None)
    residual = float(np.linalg.norm(rhs - sys.b @ u))
    scale = max(1.0, float(np.linalg.norm(x)))
    if residual > tol * scale:
        raise InfeasibleTarget(
            f"x_star is not a fixed point of (A, B): least-squares residual "
            f"{residual:.3e} exceeds {tol:.1e} (relative)"
        )
    u = np.array(u, dtype=float).reshape(-1)
    u.flags.writeable = False
    y = sys.c @ x
    y.flags.writeable = False
    return RegulationTarget(x_star=x, u_star=u, y_star=y, residual=residual)


def equilibrium_target(sys: LtiSystem, u_star) -> RegulationTarget:
    """Derive the exact equilibrium x* = (I - A)^{-1} B u* for a chosen input."""
    u = as_vector(u_star, sys.m, "u_star")
    x = np.linalg.solve(np.eye(sys.n) - sys.a, sys.b @ u)
    x.flags.writeable = False
    y = sys.c @ x
    y.flags.writeable = False
    return RegulationTarget(x_star=x, u_star=u, y_star=y, residual=0.0)
