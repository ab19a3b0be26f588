"""Linear Exponential Quadratic Gaussian baseline with breakdown detection.

Certainty-equivalent risk-sensitive regulator: the backward recursion replaces
the value matrix by its theta-modified version before the LQ step,

    Vtilde_t = (V_t^{-1} + theta W)^{-1}  (computed as a solve, never inverted)

with theta < 0 risk-averse. Well-posedness requires I + theta W V_t > 0; the
step at which positive definiteness is lost is the "neurotic breakdown" and is
returned as a typed report instead of a schedule. Gaussian noise is assumed by
the method; for mixtures the surrogate covariance is the mixture's total W.

Estimates come from the same Kalman filter as the risk-averse controller. For
nonzero-mean noise the schedule carries a mean-compensation offset h_t from the
affine recursion driven by the LEQG value matrices (baseline choice, documented
here); the risk offset l_t is identically zero since LEQG carries no
third-moment statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .controller import PolicySchedule, _solve_spd
from .errors import NoConvergence, NonFiniteRecursion
from .model import LtiSystem, check_penalty
from .noise import NoiseMoments

BREAKDOWN_EIG_TOL = 1e-12


@dataclass(frozen=True)
class LeqgConfig:
    """Risk-sensitivity parameter and horizon (n_steps=None iterates to steady state)."""

    theta: float
    n_steps: Optional[int] = None
    max_iter: int = 100_000
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not np.isfinite(self.theta):
            raise ValueError("theta must be finite")


@dataclass(frozen=True)
class BreakdownReport:
    """Loss of well-posedness of the theta-modified recursion."""

    step: int
    theta: float
    min_eigenvalue: float


def _theta_modified(v: np.ndarray, w_cov: np.ndarray, theta: float):
    """Return (Vtilde, min_eig of I + theta W^{1/2} V W^{1/2}) or breakdown info.

    The symmetric form W^{1/2} V W^{1/2} shares eigenvalues with W V, so the
    positivity test is numerically robust; Vtilde = V (I + theta W V)^{-1}.
    """
    n = v.shape[0]
    vals, vecs = np.linalg.eigh((w_cov + w_cov.T) / 2.0)
    w_half = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    test = np.eye(n) + theta * w_half @ v @ w_half
    min_eig = float(np.min(np.linalg.eigvalsh((test + test.T) / 2.0)))
    if min_eig <= BREAKDOWN_EIG_TOL:
        return None, min_eig
    vtilde = np.linalg.solve(np.eye(n) + theta * v @ w_cov, v)
    return (vtilde + vtilde.T) / 2.0, min_eig


def synthesize_leqg(
    sys: LtiSystem,
    q,
    r,
    moments: NoiseMoments,
    cfg: LeqgConfig,
) -> Union[PolicySchedule, BreakdownReport]:
    """Risk-sensitive Riccati recursion; typed BreakdownReport on breakdown."""
    q = check_penalty(q, "Q")
    r = check_penalty(r, "R", positive_definite=True)
    a, b = sys.a, sys.b
    n, m = sys.n, sys.m
    w_cov = moments.w_cov
    w_bar = moments.w_bar

    if cfg.n_steps is not None:
        n_steps = cfg.n_steps
        v = q.copy()
        t_mat = np.zeros((n, n))
        k_sched = np.zeros((n_steps, m, n))
        h_sched = np.zeros((n_steps, m))
        # Backward index: step counts recursions from the terminal condition.
        for step in range(1, n_steps + 1):
            vtilde, min_eig = _theta_modified(v, w_cov, cfg.theta)
            if vtilde is None:
                return BreakdownReport(step=step, theta=cfg.theta, min_eigenvalue=min_eig)
            g = b.T @ vtilde @ b + r
            k = -_solve_spd(g, b.T @ vtilde @ a)
            h = -_solve_spd(g, b.T @ (vtilde + t_mat) @ w_bar)
            t = n_steps - step
            k_sched[t] = k
            h_sched[t] = h
            f_cl = a + b @ k
            t_mat = f_cl.T @ (vtilde + t_mat)
            v_new = a.T @ vtilde @ a + q - (b.T @ vtilde @ a).T @ _solve_spd(g, b.T @ vtilde @ a)
            v = (v_new + v_new.T) / 2.0
            if not np.all(np.isfinite(v)):
                raise NonFiniteRecursion(f"non-finite LEQG iterate at step {step}")
        return PolicySchedule(k=k_sched, h=h_sched, l=np.zeros((n_steps, m)))

    # Infinite horizon: iterate to the fixed point, then emit a 1-step schedule.
    v = q.copy()
    for it in range(1, cfg.max_iter + 1):
        vtilde, min_eig = _theta_modified(v, w_cov, cfg.theta)
        if vtilde is None:
            return BreakdownReport(step=it, theta=cfg.theta, min_eigenvalue=min_eig)
        g = b.T @ vtilde @ b + r
        bva = b.T @ vtilde @ a
        v_new = a.T @ vtilde @ a + q - bva.T @ _solve_spd(g, bva)
        v_new = (v_new + v_new.T) / 2.0
        change = np.max(np.abs(v_new - v)) / max(1.0, np.max(np.abs(v)))
        v = v_new
        if change <= cfg.rel_tol:
            break
    else:
        raise NoConvergence(f"LEQG iteration did not converge within {cfg.max_iter} iterations")
    vtilde, min_eig = _theta_modified(v, w_cov, cfg.theta)
    if vtilde is None:
        return BreakdownReport(step=-1, theta=cfg.theta, min_eigenvalue=min_eig)
    g = b.T @ vtilde @ b + r
    k = -_solve_spd(g, b.T @ vtilde @ a)
    f_cl = a + b @ k
    t_mat = np.linalg.solve(np.eye(n) - f_cl.T, f_cl.T @ vtilde)
    h = -_solve_spd(g, b.T @ (vtilde + t_mat) @ w_bar)
    return PolicySchedule(k=k[None, :, :], h=h[None, :], l=np.zeros((1, m)))


def find_breakdown_theta(
    sys: LtiSystem,
    q,
    r,
    moments: NoiseMoments,
    n_steps: Optional[int],
    lo: float,
    hi: float = 0.0,
    tol: float = 1e-9,
) -> float:
    """Bisect for the breakdown boundary theta* in (lo, hi]: breaks for theta < theta*."""
    def breaks(theta: float) -> bool:
        res = synthesize_leqg(sys, q, r, moments, LeqgConfig(theta=theta, n_steps=n_steps))
        return isinstance(res, BreakdownReport)

    if not breaks(lo):
        raise ValueError(f"no breakdown at lo={lo}; widen the bracket")
    if breaks(hi):
        raise ValueError(f"breakdown already at hi={hi}; widen the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if breaks(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
