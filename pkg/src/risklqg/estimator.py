"""Time-varying Kalman filter with cross-correlated process/output noise.

The same-index correlation H = E{(w_t - wbar)(eps_t - epsbar)'} couples the
process noise already inside x_t with the noise in y_t = C x_t + eps_t, so the
gain needs the correlated-noise correction. With prediction error
rho_t = x_t - xhat_{t|t-1} = A e_{t-1} + (w_t - wbar):

    Theta_t = A Sigma_{t-1|t-1} A' + W            (Cov rho_t)
    S_t     = C Theta_t C' + C H + H'C' + E       (innovation covariance)
    U_t     = Theta_t C' + H                      (Cov(rho_t, innovation))
    L_t     = U_t S_t^{-1}
    e_t     = (I - L_t C) rho_t - L_t (eps_t - epsbar)
    Sigma_{t|t} = Theta_t - U_t S_t^{-1} U_t'     (Joseph form used numerically)
    H_{t|t-1} = E{e_t rho_t'} = (I - L_t C) Theta_t - L_t H'

For the optimal gain, orthogonality of e_t to the innovation gives the identity
H_{t|t-1} = Sigma_{t|t} exactly; the plan stores both and tests confirm the
identity against Monte-Carlo error statistics. The paper's conditional quantity
E{e_t e_t' | F_{t-1}} equals Sigma_{t|t} for the linear-filter plan by the
tower property; the `sigma_pred` field stores the classic prediction
covariance Theta_t, which dominates Sigma_{t|t} in the PSD order.

Everything here is offline-computable: covariances never depend on data, and
the filter error path is identical under any control policy (pathwise form of
the control-independence lemma), which the evaluation module tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PlanExhausted, SingularInnovation
from .model import LtiSystem
from .noise import NoiseMoments


@dataclass
class FilterState:
    """Current filtered estimate xhat_{t|t} with its planned covariance."""

    x_hat: np.ndarray
    sigma: np.ndarray
    t: int


@dataclass(frozen=True)
class FilterCovariancePlan:
    """Offline covariance schedule, arrays indexed t = 0..N.

    Index 0 holds the prior (sigma_filt[0] = Sigma_0, gain unused); index t >= 1
    holds the quantities of the measurement update at time t.
    """

    sigma_filt: np.ndarray
    sigma_pred: np.ndarray
    h_cross: np.ndarray
    gains: np.ndarray
    innovation_cov: np.ndarray

    @property
    def horizon(self) -> int:
        return self.sigma_filt.shape[0] - 1


def plan_covariances(sys: LtiSystem, moments: NoiseMoments, sigma0, n_steps: int) -> FilterCovariancePlan:
    """Run the correlated-noise covariance recursion for t = 1..n_steps.

    Raises SingularInnovation when C Theta C' + CH + (CH)' + E is numerically
    singular at any step.
    """
    n, q = sys.n, sys.q
    a, c = sys.a, sys.c
    w_cov, e_cov, h = moments.w_cov, moments.e_cov, moments.h_cross
    sigma0 = np.asarray(sigma0, dtype=float)
    if sigma0.ndim == 0:
        sigma0 = float(sigma0) * np.eye(n)
    sigma0 = np.atleast_2d(sigma0)
    if sigma0.shape != (n, n):
        raise SingularInnovation(f"Sigma_0 must be {n}x{n}, got {sigma0.shape}")

    sigma_filt = np.zeros((n_steps + 1, n, n))
    sigma_pred = np.zeros((n_steps + 1, n, n))
    h_cross = np.zeros((n_steps + 1, n, n))
    gains = np.zeros((n_steps + 1, n, q))
    innov = np.zeros((n_steps + 1, q, q))

    sigma_filt[0] = (sigma0 + sigma0.T) / 2.0
    sigma_pred[0] = sigma_filt[0]
    h_cross[0] = sigma_filt[0]

    for t in range(1, n_steps + 1):
        theta = a @ sigma_filt[t - 1] @ a.T + w_cov
        theta = (theta + theta.T) / 2.0
        s_inn = c @ theta @ c.T + c @ h + h.T @ c.T + e_cov
        s_inn = (s_inn + s_inn.T) / 2.0
        cond = np.linalg.cond(s_inn)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularInnovation(
                f"innovation covariance singular at t={t} (cond={cond:.2e})"
            )
        u_cross = theta @ c.T + h
        gain = np.linalg.solve(s_inn, u_cross.T).T
        ilc = np.eye(n) - gain @ c
        # Joseph form keeps Sigma PSD for any gain.
        filt = (
            ilc @ theta @ ilc.T
            + gain @ e_cov @ gain.T
            - ilc @ h @ gain.T
            - gain @ h.T @ ilc.T
        )
        sigma_pred[t] = theta
        sigma_filt[t] = (filt + filt.T) / 2.0
        h_cross[t] = ilc @ theta - gain @ h.T
        gains[t] = gain
        innov[t] = s_inn

    for arr in (sigma_filt, sigma_pred, h_cross, gains, innov):
        arr.flags.writeable = False
    return FilterCovariancePlan(
        sigma_filt=sigma_filt, sigma_pred=sigma_pred, h_cross=h_cross,
        gains=gains, innovation_cov=innov,
    )


def filter_step(
    state: FilterState,
    u_prev: np.ndarray,
    y: np.ndarray,
    sys: LtiSystem,
    moments: NoiseMoments,
    plan: FilterCovariancePlan,
) -> FilterState:
    """Advance the filter from t to t+1 with the precomputed gain.

    Predict with xhat_{t+1|t} = A xhat_{t|t} + B u_t + wbar; the innovation is
    y_{t+1} - C xhat_{t+1|t} - epsbar (noise means enter explicitly).
    """
    t_next = state.t + 1
    if t_next > plan.horizon:
        raise PlanExhausted(f"plan covers t <= {plan.horizon}, requested t = {t_next}")
    u_prev = np.asarray(u_prev, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    x_pred = sys.a @ state.x_hat + sys.b @ u_prev + moments.w_bar
    innovation = y - sys.c @ x_pred - moments.eps_bar
    x_new = x_pred + plan.gains[t_next] @ innovation
    return FilterState(x_hat=x_new, sigma=plan.sigma_filt[t_next], t=t_next)
