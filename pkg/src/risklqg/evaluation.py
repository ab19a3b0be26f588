"""Closed-loop Monte-Carlo simulation and cost/constraint estimation.

Replications are independent work units: replication r of a run with master
seed s draws its noise from the counter-based stream keyed by s XOR r, so any
execution order (or parallel schedule) yields identical trajectories. Policy
comparisons reuse the same (seed, replication) streams, giving common random
numbers across policies.

The realized per-step risk integrands use the conditional mean
xtilde_t = A x_{t-1} + B u_{t-1} + wbar:

    ds2_t = ( ||x_t||^2_{Qs} - ||xtilde_t||^2_{Qs} - tr(Qs W) )^2
    do2_t = ( ||y_t||^2_{Qo} - ||ytilde_t||^2_{Qo} - tr(Qo P) )^2,  ytilde = C xtilde + epsbar

so averaging their sums over replications estimates J_s and J_o exactly as
defined, for any policy and any noise law.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .controller import PolicySchedule, synthesize_finite
from .errors import DimensionMismatch, PlanExhausted
from .estimator import FilterCovariancePlan, plan_covariances
from .model import LtiSystem, spectral_radius
from .noise import JointNoiseModel, NoiseMoments, sample
from .risk_transform import RiskWeights, TransformedProblem, transform


@dataclass(frozen=True)
class TrajectoryRecord:
    """One replication's time series; arrays indexed t = 0..N (u has N rows)."""

    x: np.ndarray
    x_hat: np.ndarray
    u: np.ndarray
    y: np.ndarray
    w: np.ndarray
    eps: np.ndarray
    stage_cost: np.ndarray
    state_penalty: np.ndarray
    output_penalty: np.ndarray
    ds2: np.ndarray
    do2: np.ndarray
    seed: int
    replication: int

    @property
    def horizon(self) -> int:
        return self.u.shape[0]

    def total_cost(self) -> float:
        return float(np.sum(self.stage_cost))

    def js_sum(self) -> float:
        return float(np.sum(self.ds2))

    def jo_sum(self) -> float:
        return float(np.sum(self.do2))


@dataclass(frozen=True)
class EvaluationSummary:
    """Replication-level estimates: SEs come from across-replication variation."""

    label: str
    replications: int
    j_mean: float
    j_se: float
    js_mean: float
    js_se: float
    jo_mean: float
    jo_se: float
    stage_cost_var: np.ndarray
    state_penalty_var: np.ndarray
    lagrangian_mean: Optional[float] = None
    lagrangian_se: Optional[float] = None

    def as_dict(self) -> dict:
        out = {
            "label": self.label,
            "replications": self.replications,
            "J": {"mean": self.j_mean, "se": self.j_se},
            "Js": {"mean": self.js_mean, "se": self.js_se},
            "Jo": {"mean": self.jo_mean, "se": self.jo_se},
            "stage_cost_var_profile": [float(v) for v in self.stage_cost_var],
            "state_penalty_var_profile": [float(v) for v in self.state_penalty_var],
        }
        if self.lagrangian_mean is not None:
            out["lagrangian"] = {"mean": self.lagrangian_mean, "se": self.lagrangian_se}
        return out


def _rep_seed(seed: int, replication: int) -> int:
    return (seed ^ replication) & 0xFFFFFFFFFFFFFFFF


def simulate(
    sys: LtiSystem,
    schedule: PolicySchedule,
    model: JointNoiseModel,
    plan: FilterCovariancePlan,
    x0,
    seed: int,
    replications: int,
    moments: NoiseMoments,
    weights: RiskWeights,
    x0_hat=None,
) -> list[TrajectoryRecord]:
    """Run `replications` closed loops of horizon = schedule.horizon."""
    n_steps = schedule.horizon
    if plan.horizon < n_steps:
        raise PlanExhausted(f"plan covers {plan.horizon} steps, schedule needs {n_steps}")
    n, m, q_dim = sys.n, sys.m, sys.q
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (n,):
        raise DimensionMismatch(f"x0 must have shape ({n},)")
    x0_hat = x0 if x0_hat is None else np.asarray(x0_hat, dtype=float).reshape(-1)

    a, b, c = sys.a, sys.b, sys.c
    q_pen, r_pen, qs, qo = weights.q, weights.r, weights.qs, weights.qo
    w_bar, eps_bar = moments.w_bar, moments.eps_bar
    tr_qs_w = moments.tr_qs_w
    tr_qo_p = moments.tr_qo_p

    records = []
    for rep in range(replications):
        stream = _rep_seed(seed, rep)
        w_draws, eps_draws = sample(model, n_steps + 1, stream)

        x = np.zeros((n_steps + 1, n))
        x_hat = np.zeros((n_steps + 1, n))
        u = np.zeros((n_steps, m))
        y = np.zeros((n_steps + 1, q_dim))
        ds2 = np.zeros(n_steps + 1)
        do2 = np.zeros(n_steps + 1)
        stage = np.zeros(n_steps + 1)
        state_pen = np.zeros(n_steps + 1)
        out_pen = np.zeros(n_steps + 1)

        x[0] = x0
        x_hat[0] = x0_hat
        y[0] = c @ x0 + eps_draws[0]
        for t in range(n_steps):
            u[t] = schedule.control(x_hat[t], t)
            x[t + 1] = a @ x[t] + b @ u[t] + w_draws[t + 1]
            y[t + 1] = c @ x[t + 1] + eps_draws[t + 1]
            x_pred = a @ x_hat[t] + b @ u[t] + w_bar
            innovation = y[t + 1] - c @ x_pred - eps_bar
            x_hat[t + 1] = x_pred + plan.gains[t + 1] @ innovation

            x_tilde = a @ x[t] + b @ u[t] + w_bar
            y_tilde = c @ x_tilde + eps_bar
            ds2[t + 1] = (x[t + 1] @ qs @ x[t + 1] - x_tilde @ qs @ x_tilde - tr_qs_w) ** 2
            do2[t + 1] = (y[t + 1] @ qo @ y[t + 1] - y_tilde @ qo @ y_tilde - tr_qo_p) ** 2

        for t in range(n_steps + 1):
            state_pen[t] = x[t] @ q_pen @ x[t]
            out_pen[t] = y[t] @ qo @ y[t]
            stage[t] = state_pen[t] + (u[t] @ r_pen @ u[t] if t < n_steps else 0.0)

        w_store = w_draws.copy()
        w_store[0] = 0.0  # no process shock enters x_0
        records.append(
            TrajectoryRecord(
                x=x, x_hat=x_hat, u=u, y=y, w=w_store, eps=eps_draws,
                stage_cost=stage, state_penalty=state_pen, output_penalty=out_pen,
                ds2=ds2, do2=do2, seed=seed, replication=rep,
            )
        )
    return records


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    r = values.size
    se = float(values.std(ddof=1) / np.sqrt(r)) if r > 1 else 0.0
    return float(values.mean()), se


def lagrangian_stage_sums(records: Sequence[TrajectoryRecord], tp: TransformedProblem) -> np.ndarray:
    """Per-replication sums of the dualized stage costs g_t (policy-relevant part).

    sum_{t=0}^{N-1} (x'Q_mu x + x'M_mu + u'Ru) + x_N'Q_mu x_N + x_N'M_mu,
    the quantity whose minimal expectation the value recursion predicts.
    """
    q_mu, m_mu, r_pen = tp.q_mu, tp.m_mu, tp.weights.r
    out = np.zeros(len(records))
    for i, rec in enumerate(records):
        quad = np.einsum("ti,ij,tj->t", rec.x, q_mu, rec.x)
        lin = rec.x @ m_mu
        ctrl = np.einsum("ti,ij,tj->t", rec.u, r_pen, rec.u)
        out[i] = float(np.sum(quad) + np.sum(lin) + np.sum(ctrl))
    return out


def summarize(
    records: Sequence[TrajectoryRecord],
    label: str = "",
    tp: Optional[TransformedProblem] = None,
) -> EvaluationSummary:
    j = np.array([rec.total_cost() for rec in records])
    js = np.array([rec.js_sum() for rec in records])
    jo = np.array([rec.jo_sum() for rec in records])
    stage = np.stack([rec.stage_cost for rec in records])
    pen = np.stack([rec.state_penalty for rec in records])
    j_mean, j_se = _mean_se(j)
    js_mean, js_se = _mean_se(js)
    jo_mean, jo_se = _mean_se(jo)
    lag_mean = lag_se = None
    if tp is not None:
        lag_mean, lag_se = _mean_se(lagrangian_stage_sums(records, tp))
    ddof = 1 if len(records) > 1 else 0
    return EvaluationSummary(
        label=label,
        replications=len(records),
        j_mean=j_mean, j_se=j_se,
        js_mean=js_mean, js_se=js_se,
        jo_mean=jo_mean, jo_se=jo_se,
        stage_cost_var=stage.var(axis=0, ddof=ddof),
        state_penalty_var=pen.var(axis=0, ddof=ddof),
        lagrangian_mean=lag_mean, lagrangian_se=lag_se,
    )


@dataclass(frozen=True)
class KktCondition:
    passed: Optional[bool]
    margin: Optional[float]
    detail: str

    def as_dict(self) -> dict:
        return {"passed": self.passed, "margin": self.margin, "detail": self.detail}


@dataclass(frozen=True)
class KktReport:
    """Sufficient-optimality check: minimization, feasibility, slackness."""

    lagrangian_minimized: KktCondition
    feasible_s: KktCondition
    feasible_o: KktCondition
    slackness_s: KktCondition
    slackness_o: KktCondition

    @property
    def all_passed(self) -> bool:
        conds = (self.lagrangian_minimized, self.feasible_s, self.feasible_o,
                 self.slackness_s, self.slackness_o)
        return all(c.passed is not False for c in conds)

    def as_dict(self) -> dict:
        return {
            "lagrangian_minimized": self.lagrangian_minimized.as_dict(),
            "feasible_s": self.feasible_s.as_dict(),
            "feasible_o": self.feasible_o.as_dict(),
            "slackness_s": self.slackness_s.as_dict(),
            "slackness_o": self.slackness_o.as_dict(),
            "all_passed": self.all_passed,
        }


def verify_kkt(
    summary: EvaluationSummary,
    tp: TransformedProblem,
    weights: RiskWeights,
    predicted_value: Optional[float] = None,
) -> KktReport:
    """Check the duality conditions from the Monte-Carlo estimates.

    Feasibility and slackness are evaluated in the original tolerance
    coordinates (Js vs eps_s); the slack Js - eps_s equals the transformed
    slack exactly, so the two readings agree. The minimization condition
    compares the MC Lagrangian stage sum against the value recursion's
    prediction when both are available, else it holds by construction.
    """
    if predicted_value is not None and summary.lagrangian_mean is not None:
        gap = summary.lagrangian_mean - predicted_value
        tol = 3.0 * (summary.lagrangian_se or 0.0)
        cond1 = KktCondition(
            passed=bool(abs(gap) <= max(tol, 1e-9)),
            margin=float(gap),
            detail=f"MC Lagrangian {summary.lagrangian_mean:.6g} vs predicted {predicted_value:.6g} (3SE={tol:.3g})",
        )
    else:
        cond1 = KktCondition(passed=True, margin=None,
                             detail="closed-form minimizer of the dualized cost (by construction)")

    def feas(j_mean, j_se, eps, name):
        if eps is None:
            return KktCondition(passed=None, margin=None, detail=f"eps_{name} not specified")
        slack = j_mean - eps
        ok = slack <= 3.0 * j_se + 1e-12
        return KktCondition(passed=bool(ok), margin=float(slack),
                            detail=f"J_{name}={j_mean:.6g} vs eps_{name}={eps:.6g} (3SE={3 * j_se:.3g})")

    def slackness(mu, j_mean, j_se, eps, name):
        if mu == 0.0:
            return KktCondition(passed=True, margin=0.0, detail=f"mu_{name}=0: trivially slack")
        if eps is None:
            return KktCondition(passed=None, margin=None, detail=f"eps_{name} not specified")
        product = mu * (j_mean - eps)
        tol = 3.0 * mu * j_se + 1e-12
        return KktCondition(passed=bool(abs(product) <= tol), margin=float(product),
                            detail=f"mu_{name}*(J_{name}-eps_{name})={product:.4g} (tol={tol:.3g})")

    return KktReport(
        lagrangian_minimized=cond1,
        feasible_s=feas(summary.js_mean, summary.js_se, weights.eps_s, "s"),
        feasible_o=feas(summary.jo_mean, summary.jo_se, weights.eps_o, "o"),
        slackness_s=slackness(weights.mu_s, summary.js_mean, summary.js_se, weights.eps_s, "s"),
        slackness_o=slackness(weights.mu_o, summary.jo_mean, summary.jo_se, weights.eps_o, "o"),
    )


@dataclass(frozen=True)
class MultiplierRow:
    mu_s: float
    mu_o: float
    j_mean: float
    j_se: float
    js_mean: float
    js_se: float
    jo_mean: float
    jo_se: float
    closed_loop_spectral_radius: float

    def as_dict(self) -> dict:
        return {
            "mu_s": self.mu_s, "mu_o": self.mu_o,
            "J": self.j_mean, "J_se": self.j_se,
            "Js": self.js_mean, "Js_se": self.js_se,
            "Jo": self.jo_mean, "Jo_se": self.jo_se,
            "spectral_radius": self.closed_loop_spectral_radius,
        }


def tabulate_multipliers(
    sys: LtiSystem,
    model: JointNoiseModel,
    weights_base: RiskWeights,
    mu_grid: Sequence[tuple[float, float]],
    seed: int,
    moments: NoiseMoments,
    x0,
    replications: int = 200,
    sigma0=0.0,
) -> list[MultiplierRow]:
    """Synthesize and evaluate each grid point with common random numbers."""
    if len(mu_grid) == 0:
        raise ValueError("mu_grid must be nonempty")
    plan = plan_covariances(sys, moments, sigma0, weights_base.n_horizon)
    rows = []
    for mu_s, mu_o in mu_grid:
        weights = weights_base.with_multipliers(mu_s, mu_o)
        tp = transform(weights, moments, sys.c)
        schedule, _ = synthesize_finite(sys, tp, weights, moments, filter_plan=plan)
        records = simulate(sys, schedule, model, plan, x0, seed, replications, moments, weights)
        summary = summarize(records, label=f"mu=({mu_s:g},{mu_o:g})")
        rows.append(
            MultiplierRow(
                mu_s=mu_s, mu_o=mu_o,
                j_mean=summary.j_mean, j_se=summary.j_se,
                js_mean=summary.js_mean, js_se=summary.js_se,
                jo_mean=summary.jo_mean, jo_se=summary.jo_se,
                closed_loop_spectral_radius=spectral_radius(sys.a + sys.b @ schedule.k[0]),
            )
        )
    return rows


def lemma2_check(
    sys: LtiSystem,
    model: JointNoiseModel,
    plan: FilterCovariancePlan,
    policy_a: PolicySchedule,
    policy_b: PolicySchedule,
    seed: int,
    x0,
    moments: NoiseMoments,
    weights: RiskWeights,
) -> float:
    """max_t ||e_t^A - e_t^B|| over one shared noise realization.

    The filter error e_t = x_t - xhat_{t|t} is pathwise control-independent
    for a linear filter, so the contract is <= 1e-10 up to float roundoff.
    """
    if policy_a.horizon != policy_b.horizon:
        raise DimensionMismatch("policies must share the horizon")
    rec_a = simulate(sys, policy_a, model, plan, x0, seed, 1, moments, weights)[0]
    rec_b = simulate(sys, policy_b, model, plan, x0, seed, 1, moments, weights)[0]
    err_a = rec_a.x - rec_a.x_hat
    err_b = rec_b.x - rec_b.x_hat
    return float(np.max(np.linalg.norm(err_a - err_b, axis=1)))


@dataclass(frozen=True)
class DualAscentStep:
    iteration: int
    mu_s: float
    mu_o: float
    js_mean: float
    jo_mean: float
    slack_s: float
    slack_o: float


def dual_ascent(
    sys: LtiSystem,
    model: JointNoiseModel,
    weights_base: RiskWeights,
    eps_s: float,
    eps_o: float,
    seed: int,
    moments: NoiseMoments,
    x0,
    replications: int = 100,
    iterations: int = 10,
    step0: tuple[float, float] = (1.0, 1.0),
    sigma0=0.0,
) -> list[DualAscentStep]:
    """Projected subgradient on the multipliers with diminishing steps.

    mu <- max(0, mu + alpha_k (Jhat - eps)), alpha_k = step0 / sqrt(k).
    Exposed as a tuning aid; the duality theorem is a verification device.
    """
    plan = plan_covariances(sys, moments, sigma0, weights_base.n_horizon)
    mu_s, mu_o = weights_base.mu_s, weights_base.mu_o
    steps = []
    for k in range(1, iterations + 1):
        weights = weights_base.with_multipliers(mu_s, mu_o)
        tp = transform(weights, moments, sys.c)
        schedule, _ = synthesize_finite(sys, tp, weights, moments, filter_plan=plan)
        records = simulate(sys, schedule, model, plan, x0, seed, replications, moments, weights)
        summary = summarize(records)
        slack_s = summary.js_mean - eps_s
        slack_o = summary.jo_mean - eps_o
        steps.append(DualAscentStep(k, mu_s, mu_o, summary.js_mean, summary.jo_mean, slack_s, slack_o))
        alpha = 1.0 / np.sqrt(k)
        mu_s = float(max(0.0, mu_s + step0[0] * alpha * slack_s))
        mu_o = float(max(0.0, mu_o + step0[1] * alpha * slack_o))
    return steps


# ---------------------------------------------------------------------------
# Artifact writers. Floats are serialized with repr() (shortest round-trip
# decimal) so identical runs produce byte-identical files.

def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectories_csv(path, records: Sequence[TrajectoryRecord]) -> None:
    if not records:
        raise ValueError("no trajectories to write")
    n = records[0].x.shape[1]
    m = records[0].u.shape[1]
    q_dim = records[0].y.shape[1]
    cols = (
        ["rep", "t"]
        + [f"x_{i + 1}" for i in range(n)]
        + [f"xhat_{i + 1}" for i in range(n)]
        + [f"u_{i + 1}" for i in range(m)]
        + [f"y_{i + 1}" for i in range(q_dim)]
        + [f"w_{i + 1}" for i in range(n)]
        + [f"eps_{i + 1}" for i in range(q_dim)]
        + ["stage_cost", "state_penalty", "output_penalty", "ds2", "do2"]
    )
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in records:
            n_steps = rec.horizon
            for t in range(n_steps + 1):
                u_part = [_fmt(v) for v in rec.u[t]] if t < n_steps else [""] * m
                row = (
                    [str(rec.replication), str(t)]
                    + [_fmt(v) for v in rec.x[t]]
                    + [_fmt(v) for v in rec.x_hat[t]]
                    + u_part
                    + [_fmt(v) for v in rec.y[t]]
                    + [_fmt(v) for v in rec.w[t]]
                    + [_fmt(v) for v in rec.eps[t]]
                    + [_fmt(rec.stage_cost[t]), _fmt(rec.state_penalty[t]),
                       _fmt(rec.output_penalty[t]), _fmt(rec.ds2[t]), _fmt(rec.do2[t])]
                )
                fh.write(",".join(row) + "\n")


def write_summary_json(path, summaries: dict, extra: Optional[dict] = None) -> None:
    payload = {label: s.as_dict() for label, s in summaries.items()}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
