"""Conversion of the risk-constrained problem into an inflated-penalty LQ problem.

The predictive-variance constraints

    sum_t E{ [ ||x_t||^2_{Qs} - E(||x_t||^2_{Qs} | x_{t-1}, u_{t-1}) ]^2 } <= eps_s
    sum_t E{ [ ||y_t||^2_{Qo} - E(||y_t||^2_{Qo} | x_{t-1}, u_{t-1}) ]^2 } <= eps_o

are equivalent to quadratic constraints on the state trajectory. Dualizing
with multipliers (mu_s, mu_o) folds them into the stage cost via an inflated
state penalty Q_mu and an affine statistic M_mu:

    Q_mu = Q + 4 mu_s Qs W Qs + 4 mu_o C'Qo P Qo C
    M_mu = 4 mu_s Qs M_w + 4 mu_o (C'Qo M + 2 C'Qo P Qo epsbar)

with adjusted tolerances

    eps_bar_s = eps_s - N m_w + 4 N tr((Qs W)^2)
    eps_bar_o = eps_o - N m_weps - 4 N epsbar'Qo M + 8 N tr(C'Qo P Qo C W) - 4 N tr(Qo P Qo Z).

Note on constants: the per-step expected squared deviations are

    E{D2_s,t} = E{4 x'QsWQs x + 4 x'Qs M_w} + m_w - 4 tr((Qs W)^2)
    E{D2_o,t} = E{4 x'C'QoPQoC x + 4 x'C'Qo(M + 2 P Qo epsbar)}
                + m_weps + 4 epsbar'Qo M - 8 tr(C'QoPQoCW) + 4 tr(QoPQoZ)

(realized-state form; expectations over the closed loop). tr((Qs W)^2)
coincides with (tr(Qs W))^2 only for scalar or rank-1 W; the general trace
form here is the one the Monte-Carlo oracle validates. eps_bar values may be
negative for tight tolerances; they are reported as-is and infeasibility is
flagged downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, MomentMismatch
from .model import check_penalty
from .noise import NoiseMoments


@dataclass(frozen=True)
class RiskWeights:
    """Penalty matrices, multipliers, tolerances, and horizon of one problem instance."""

    q: np.ndarray
    r: np.ndarray
    qs: np.ndarray
    qo: np.ndarray
    n_horizon: int
    mu_s: float = 0.0
    mu_o: float = 0.0
    eps_s: Optional[float] = None
    eps_o: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "q", check_penalty(self.q, "Q"))
        object.__setattr__(self, "r", check_penalty(self.r, "R", positive_definite=True))
        object.__setattr__(self, "qs", check_penalty(self.qs, "Q_s"))
        object.__setattr__(self, "qo", check_penalty(self.qo, "Q_o"))
        if self.mu_s < 0 or self.mu_o < 0:
            raise ValueError("multipliers mu_s, mu_o must be nonnegative")
        if self.n_horizon < 1:
            raise ValueError("horizon N must be a positive integer")
        for name in ("eps_s", "eps_o"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ValueError(f"{name} must be positive when given")

    def with_multipliers(self, mu_s: float, mu_o: float) -> "RiskWeights":
        return RiskWeights(
            q=self.q, r=self.r, qs=self.qs, qo=self.qo, n_horizon=self.n_horizon,
            mu_s=mu_s, mu_o=mu_o, eps_s=self.eps_s, eps_o=self.eps_o,
        )

    def with_tolerances(self, eps_s: Optional[float], eps_o: Optional[float]) -> "RiskWeights":
        return RiskWeights(
            q=self.q, r=self.r, qs=self.qs, qo=self.qo, n_horizon=self.n_horizon,
            mu_s=self.mu_s, mu_o=self.mu_o, eps_s=eps_s, eps_o=eps_o,
        )


@dataclass(frozen=True)
class TransformedProblem:
    """Inflated penalty, affine statistic, and adjusted tolerances for fixed multipliers."""

    q_mu: np.ndarray
    m_mu: np.ndarray
    eps_bar_s: Optional[float]
    eps_bar_o: Optional[float]
    moments: NoiseMoments
    weights: RiskWeights


def _check_provenance(weights: RiskWeights, moments: NoiseMoments, c: np.ndarray):
    for got, want, name in (
        (moments.qs, weights.qs, "Q_s"),
        (moments.qo, weights.qo, "Q_o"),
        (moments.c, c, "C"),
    ):
        if got.shape != want.shape or not np.allclose(got, want, rtol=0.0, atol=1e-12):
            raise MomentMismatch(
                f"moments were computed with a different {name} than the supplied weights"
            )


def state_constant(moments: NoiseMoments) -> float:
    """Constant part of E{D2_s,t} in the realized-state form."""
    qsw = moments.qs @ moments.w_cov
    return moments.m_w - 4.0 * float(np.trace(qsw @ qsw))


def output_constant(moments: NoiseMoments) -> float:
    """Constant part of E{D2_o,t} in the realized-state form."""
    qo, c = moments.qo, moments.c
    qpq = qo @ moments.p_cov @ qo
    return (
        moments.m_weps
        + 4.0 * float(moments.eps_bar @ qo @ moments.m3_p)
        - 8.0 * float(np.trace(c.T @ qpq @ c @ moments.w_cov))
        + 4.0 * float(np.trace(qpq @ moments.z_cov))
    )


def transform(weights: RiskWeights, moments: NoiseMoments, c) -> TransformedProblem:
    """Build Q_mu, M_mu, eps_bar_s, eps_bar_o for the given multipliers.

    Raises MomentMismatch when the moment bundle was computed with different
    Qs/Qo/C than the weights carry.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    _check_provenance(weights, moments, c)
    q, qs, qo = weights.q, weights.qs, weights.qo
    n = q.shape[0]
    if moments.w_cov.shape != (n, n):
        raise DimensionMismatch("moments dimension does not match Q")

    ctqo = c.T @ qo
    qpq_c = ctqo @ moments.p_cov @ qo @ c
    q_mu = q + 4.0 * weights.mu_s * qs @ moments.w_cov @ qs + 4.0 * weights.mu_o * qpq_c
    q_mu = (q_mu + q_mu.T) / 2.0
    m_mu = 4.0 * weights.mu_s * qs @ moments.m3_w + 4.0 * weights.mu_o * (
        ctqo @ moments.m3_p + 2.0 * ctqo @ moments.p_cov @ qo @ moments.eps_bar
    )

    n_steps = weights.n_horizon
    eps_bar_s = None if weights.eps_s is None else weights.eps_s - n_steps * state_constant(moments)
    eps_bar_o = None if weights.eps_o is None else weights.eps_o - n_steps * output_constant(moments)
    return TransformedProblem(
        q_mu=q_mu, m_mu=m_mu, eps_bar_s=eps_bar_s, eps_bar_o=eps_bar_o,
        moments=moments, weights=weights,
    )


def constraint_increment_state(x, moments: NoiseMoments, qs=None) -> float:
    """Per-step state-risk integrand as a function of the realized state.

    Averaging this over closed-loop trajectories estimates J_s: the expectation
    over x_t equals E{D2_s,t}. Pointwise it is NOT the realized squared
    deviation (see evaluation.simulate for that).
    """
    qs = moments.qs if qs is None else check_penalty(qs, "Q_s")
    x = np.asarray(x, dtype=float).reshape(-1)
    qsw_qs = qs @ moments.w_cov @ qs
    return float(4.0 * x @ qsw_qs @ x + 4.0 * x @ qs @ moments.m3_w + state_constant(moments))


def constraint_increment_output(x, moments: NoiseMoments, qo=None, c=None) -> float:
    """Per-step output-risk integrand as a function of the realized state."""
    qo = moments.qo if qo is None else check_penalty(qo, "Q_o")
    c = moments.c if c is None else np.atleast_2d(np.asarray(c, dtype=float))
    x = np.asarray(x, dtype=float).reshape(-1)
    ctqo = c.T @ qo
    quad = ctqo @ moments.p_cov @ qo @ c
    lin = ctqo @ (moments.m3_p + 2.0 * moments.p_cov @ qo @ moments.eps_bar)
    return float(4.0 * x @ quad @ x + 4.0 * x @ lin + output_constant(moments))


def expected_sq_deviation_state(x_pred_mean, moments: NoiseMoments) -> float:
    """E{D2_s,t | previous state and input} at the frozen conditional mean xtilde.

    xtilde = A x_{t-1} + B u_{t-1} + wbar. This is the quantity the
    frozen-predecessor Monte-Carlo oracle estimates directly.
    """
    xt = np.asarray(x_pred_mean, dtype=float).reshape(-1)
    qs = moments.qs
    return float(4.0 * xt @ qs @ moments.w_cov @ qs @ xt + 4.0 * xt @ qs @ moments.m3_w + moments.m_w)


def expected_sq_deviation_output(x_pred_mean, moments: NoiseMoments) -> float:
    """E{D2_o,t | previous state and input} at the frozen conditional mean xtilde."""
    xt = np.asarray(x_pred_mean, dtype=float).reshape(-1)
    qo = moments.qo
    ytilde = moments.c @ xt + moments.eps_bar
    return float(
        4.0 * ytilde @ qo @ moments.p_cov @ qo @ ytilde
        + 4.0 * ytilde @ qo @ moments.m3_p
        + moments.m_weps
    )
