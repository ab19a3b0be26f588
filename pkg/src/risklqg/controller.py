"""Backward value recursions and affine risk-averse policy synthesis.

The dualized problem has stage cost x'Q_mu x + x'M_mu + u'R u, and its optimal
policy is affine in the filtered estimate:

    u_t = K_t xhat_{t|t} + h_t + l_t.

With G_t = B'V_t B + R and F_{t-1} = A + B K_{t-1}, the recursions derived
from the Bellman step (and pinned by a brute-force oracle on a non-symmetric
instance, where the transpose convention matters) are, for t = N..1:

    V_{t-1} = A'V_t A + Q_mu - A'V_t B G_t^{-1} B'V_t A        V_N = Q_mu
    K_{t-1} = -G_t^{-1} B'V_t A
    T_{t-1} = F_{t-1}' (V_t + T_t)                              T_N = 0
    S_{t-1} = F_{t-1}' S_t + I                                  S_N = I
    h_{t-1} = -G_t^{-1} B' (V_t + T_t) wbar
    l_{t-1} = -1/2 G_t^{-1} B' S_t M_mu

and the value constant (cost-to-go = xhat'V xhat + 2 xhat'T wbar + xhat'S M_mu + p)

    p_{t-1} = p_t - (h+l)'G_t(h+l) + wbar'(V_t + 2T_t) wbar + wbar'S_t M_mu
              + tr(A'V_t A Sigma_{t-1|t-1}) + tr(V_t W) + tr(Q_mu Sigma_{t-1|t-1})
              - tr(V_t Sigma_{t|t})                             p_N = tr(Q_mu Sigma_{N|N})

where the last trace combines -2 tr(V_t H_{t|t-1}) + tr(V_t E{e_t e_t'|F_{t-1}}):
for the optimal-gain linear filter both reduce to Sigma_{t|t}. p never enters
the policy; without a covariance plan the filter-dependent traces are omitted
and flagged. The value is exact for the Kalman (best linear) filter under any
finite-fourth-moment noise, approximate for the true mmse filter.

Steady state: V solves the algebraic Riccati equation (backward iteration is
the reference solver), S = (I - F')^{-1}, T = (I - F')^{-1} F'V, and (h, l)
follow from the same formulas at the fixed point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    NoConvergence,
    NonFiniteRecursion,
    NotDetectable,
    NotStabilizable,
    SingularInnerMatrix,
)
from .estimator import FilterCovariancePlan
from .model import LtiSystem, pbh_detectable, pbh_stabilizable, psd_sqrt, spectral_radius
from .noise import NoiseMoments
from .risk_transform import RiskWeights, TransformedProblem

GAIN_FILE_VERSION = "risklqg-gains-v1"


@dataclass(frozen=True)
class PolicySchedule:
    """Per-step gains and offsets u_t = K[t] xhat + h[t] + l[t], t = 0..N-1."""

    k: np.ndarray
    h: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        for arr in (self.k, self.h, self.l):
            arr.flags.writeable = False

    @property
    def horizon(self) -> int:
        return self.k.shape[0]

    def control(self, x_hat: np.ndarray, t: int) -> np.ndarray:
        return self.k[t] @ x_hat + self.h[t] + self.l[t]

    def offsets(self) -> np.ndarray:
        """Combined affine offsets c_t = h_t + l_t."""
        return self.h + self.l


@dataclass(frozen=True)
class ValueParams:
    """Value-function parameters, arrays indexed t = 0..N."""

    v: np.ndarray
    t_mat: np.ndarray
    s_mat: np.ndarray
    p: np.ndarray
    p_includes_filter_terms: bool

    def value(self, x_hat0: np.ndarray, m_mu: np.ndarray, w_bar: np.ndarray) -> float:
        """Optimal cost-to-go at t=0 for a known initial estimate."""
        x = np.asarray(x_hat0, dtype=float).reshape(-1)
        return float(
            x @ self.v[0] @ x + 2.0 * x @ self.t_mat[0] @ w_bar + x @ self.s_mat[0] @ m_mu + self.p[0]
        )


@dataclass(frozen=True)
class SteadyStatePolicy:
    v: np.ndarray
    k: np.ndarray
    s_mat: np.ndarray
    t_mat: np.ndarray
    h: np.ndarray
    l: np.ndarray
    closed_loop_spectral_radius: float
    iterations: int

    def as_schedule(self, n_steps: int) -> PolicySchedule:
        return PolicySchedule(
            k=np.repeat(self.k[None, :, :], n_steps, axis=0),
            h=np.repeat(self.h[None, :], n_steps, axis=0),
            l=np.repeat(self.l[None, :], n_steps, axis=0),
        )


def _solve_spd(g: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve G x = rhs for symmetric PD G via Cholesky; no explicit inverse."""
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularInnerMatrix(f"B'VB + R ill-conditioned (cond={cond:.2e})")
    chol = np.linalg.cholesky((g + g.T) / 2.0)
    y = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.T, y)


def synthesize_finite(
    sys: LtiSystem,
    tp: TransformedProblem,
    weights: RiskWeights,
    moments: NoiseMoments,
    filter_plan: Optional[FilterCovariancePlan] = None,
) -> tuple[PolicySchedule, ValueParams]:
    """Run the backward recursion over the horizon in `weights.n_horizon`.

    The schedule depends only on (A, B, weights, moments); it never touches
    simulated data, so repeated synthesis is bit-identical.
    """
    a, b = sys.a, sys.b
    n, m = sys.n, sys.m
    n_steps = weights.n_horizon
    q_mu, m_mu = tp.q_mu, tp.m_mu
    w_bar = moments.w_bar
    w_cov = moments.w_cov
    r = weights.r

    use_plan = filter_plan is not None
    if use_plan and filter_plan.horizon < n_steps:
        raise SingularInnerMatrix(
            f"filter plan covers {filter_plan.horizon} steps, need {n_steps}"
        )

    v = np.zeros((n_steps + 1, n, n))
    t_mat = np.zeros((n_steps + 1, n, n))
    s_mat = np.zeros((n_steps + 1, n, n))
    p = np.zeros(n_steps + 1)
    k_sched = np.zeros((n_steps, m, n))
    h_sched = np.zeros((n_steps, m))
    l_sched = np.zeros((n_steps, m))

    v[n_steps] = q_mu
    s_mat[n_steps] = np.eye(n)
    if use_plan:
        p[n_steps] = float(np.trace(q_mu @ filter_plan.sigma_filt[n_steps]))

    for t in range(n_steps, 0, -1):
        vt, tt, st = v[t], t_mat[t], s_mat[t]
        g = b.T @ vt @ b + r
        bva = b.T @ vt @ a
        k = -_solve_spd(g, bva)
        h = -_solve_spd(g, b.T @ (vt + tt) @ w_bar)
        l = -0.5 * _solve_spd(g, b.T @ st @ m_mu)
        f_cl = a + b @ k

        v_new = a.T @ vt @ a + q_mu - bva.T @ _solve_spd(g, bva)
        asym = np.max(np.abs(v_new - v_new.T))
        if asym > 1e-10 * max(1.0, np.max(np.abs(v_new))):
            raise NonFiniteRecursion(f"V asymmetry {asym:.2e} at t={t}")
        v[t - 1] = (v_new + v_new.T) / 2.0
        t_mat[t - 1] = f_cl.T @ (vt + tt)
        s_mat[t - 1] = f_cl.T @ st + np.eye(n)

        hl = h + l
        p_new = (
            p[t]
            - float(hl @ g @ hl)
            + float(w_bar @ (vt + 2.0 * tt) @ w_bar)
            + float(w_bar @ st @ m_mu)
            + float(np.trace(vt @ w_cov))
        )
        if use_plan:
            sig_prev = filter_plan.sigma_filt[t - 1]
            sig_now = filter_plan.sigma_filt[t]
            p_new += (
                float(np.trace(a.T @ vt @ a @ sig_prev))
                + float(np.trace(q_mu @ sig_prev))
                - 2.0 * float(np.trace(vt @ filter_plan.h_cross[t]))
                + float(np.trace(vt @ sig_now))
            )
        p[t - 1] = p_new

        k_sched[t - 1] = k
        h_sched[t - 1] = h
        l_sched[t - 1] = l
        if not np.all(np.isfinite(v[t - 1])):
            raise NonFiniteRecursion(f"non-finite V at t={t - 1}")

    schedule = PolicySchedule(k=k_sched, h=h_sched, l=l_sched)
    for arr in (v, t_mat, s_mat, p):
        arr.flags.writeable = False
    params = ValueParams(v=v, t_mat=t_mat, s_mat=s_mat, p=p, p_includes_filter_terms=use_plan)
    return schedule, params


def solve_dare(
    a: np.ndarray,
    b: np.ndarray,
    q: np.ndarray,
    r: np.ndarray,
    rel_tol: float = 1e-12,
    max_iter: int = 100_000,
) -> tuple[np.ndarray, int]:
    """Backward-iteration DARE solver with relative-change stopping."""
    v = q.copy()
    for it in range(1, max_iter + 1):
        g = b.T @ v @ b + r
        bva = b.T @ v @ a
        v_new = a.T @ v @ a + q - bva.T @ _solve_spd(g, bva)
        v_new = (v_new + v_new.T) / 2.0
        if not np.all(np.isfinite(v_new)):
            raise NonFiniteRecursion(f"non-finite Riccati iterate at iteration {it}")
        change = np.max(np.abs(v_new - v)) / max(1.0, np.max(np.abs(v)))
        v = v_new
        if change <= rel_tol:
            return v, it
    raise NoConvergence(f"Riccati iteration did not converge within {max_iter} iterations")


def synthesize_infinite(
    sys: LtiSystem,
    tp: TransformedProblem,
    weights: RiskWeights,
    moments: NoiseMoments,
) -> SteadyStatePolicy:
    """Stabilizing steady-state policy via the algebraic Riccati fixed point.

    Requires (A, B) stabilizable and (A, Q_mu^{1/2}) detectable; detectability
    of (A, Q^{1/2}) suffices since Q_mu dominates Q in the PSD order.
    """
    a, b = sys.a, sys.b
    if not pbh_stabilizable(a, b):
        raise NotStabilizable("(A, B) is not stabilizable")
    if not pbh_detectable(a, psd_sqrt(tp.q_mu)):
        raise NotDetectable("(A, Q_mu^{1/2}) is not detectable")

    v, iterations = solve_dare(a, b, tp.q_mu, weights.r)
    g = b.T @ v @ b + weights.r
    k = -_solve_spd(g, b.T @ v @ a)
    f_cl = a + b @ k
    rho = spectral_radius(f_cl)
    eye = np.eye(sys.n)
    s_mat = np.linalg.solve(eye - f_cl.T, eye)
    t_mat = np.linalg.solve(eye - f_cl.T, f_cl.T @ v)
    h = -_solve_spd(g, b.T @ (v + t_mat) @ moments.w_bar)
    l = -0.5 * _solve_spd(g, b.T @ s_mat @ tp.m_mu)
    residual = np.max(np.abs(v - (a.T @ v @ a + tp.q_mu - (b.T @ v @ a).T @ _solve_spd(g, b.T @ v @ a))))
    if residual > 1e-9 * max(1.0, np.max(np.abs(v))):
        raise NoConvergence(f"DARE residual {residual:.2e} too large")
    return SteadyStatePolicy(
        v=v, k=k, s_mat=s_mat, t_mat=t_mat, h=h, l=l,
        closed_loop_spectral_radius=rho, iterations=iterations,
    )


def convergence_profile(
    sys: LtiSystem,
    tp: TransformedProblem,
    weights: RiskWeights,
    n_steps: int,
) -> np.ndarray:
    """Frobenius distances ||V_t - V_inf|| along the finite recursion, t = N..0."""
    ss = synthesize_infinite(sys, tp, weights, tp.moments)
    horizon_weights = RiskWeights(
        q=weights.q, r=weights.r, qs=weights.qs, qo=weights.qo, n_horizon=n_steps,
        mu_s=weights.mu_s, mu_o=weights.mu_o, eps_s=weights.eps_s, eps_o=weights.eps_o,
    )
    _, params = synthesize_finite(sys, tp, horizon_weights, tp.moments)
    dists = [float(np.linalg.norm(params.v[t] - ss.v, ord="fro")) for t in range(n_steps, -1, -1)]
    return np.array(dists)


def save_gains(path, schedule: PolicySchedule, config_hash: str = "") -> None:
    """Write the schedule as a versioned CSV: one row per t with vec(K_t), h_t, l_t."""
    n_steps, m, n = schedule.k.shape
    with open(path, "w", newline="") as fh:
        tag = f" config={config_hash}" if config_hash else ""
        fh.write(f"# {GAIN_FILE_VERSION} m={m} n={n}{tag}\n")
        writer = csv.writer(fh)
        header = (
            ["t"]
            + [f"K_{i + 1}{j + 1}" for i in range(m) for j in range(n)]
            + [f"h_{i + 1}" for i in range(m)]
            + [f"l_{i + 1}" for i in range(m)]
        )
        writer.writerow(header)
        for t in range(n_steps):
            row = [t] + [repr(float(v)) for v in schedule.k[t].reshape(-1)]
            row += [repr(float(v)) for v in schedule.h[t]]
            row += [repr(float(v)) for v in schedule.l[t]]
            writer.writerow(row)


def load_gains(path) -> PolicySchedule:
    with open(path, newline="") as fh:
        head = fh.readline()
        if GAIN_FILE_VERSION not in head:
            raise ValueError(f"unrecognized gain file header: {head.strip()!r}")
        parts = dict(tok.split("=") for tok in head.strip().split()[2:])
        m, n = int(parts["m"]), int(parts["n"])
        reader = csv.reader(fh)
        next(reader)  # header row
        ks, hs, ls = [], [], []
        for row in reader:
            vals = [float(v) for v in row[1:]]
            ks.append(np.array(vals[: m * n]).reshape(m, n))
            hs.append(np.array(vals[m * n : m * n + m]))
            ls.append(np.array(vals[m * n + m :]))
    return PolicySchedule(k=np.array(ks), h=np.array(hs), l=np.array(ls))
