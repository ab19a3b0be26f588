"""Config-driven experiment runner.

Subcommands:

    risklqg run   --preset case1 | --config cfg.json [--seed S] [--replications R]
                  [--out DIR] [--override key=value ...]
    risklqg gains --preset case1 | --config cfg.json [--out DIR] ...
    risklqg tune  --preset case1 [--mu-grid "0,0;1,0;10,0"] [--eps-s X --eps-o Y] ...

Configs are JSON (the single supported format). Regulation runs in
target-relative coordinates: the simulator state is x_t - x*, the input is
u_t - u*, and the noise models are NOT re-centered. Artifacts per run:
manifest.json, gains_<policy>.csv, traj_<policy>.csv, summary.json, kkt.json.
Identical config + seed produce byte-identical CSVs (floats are written as
shortest round-trip decimals).
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys as _sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .controller import (
    PolicySchedule,
    save_gains,
    synthesize_finite,
    synthesize_infinite,
)
from .errors import ConfigError, RiskLqgError
from .estimator import plan_covariances
from .evaluation import (
    dual_ascent,
    simulate,
    summarize,
    tabulate_multipliers,
    verify_kkt,
    write_summary_json,
    write_trajectories_csv,
)
from .leqg import BreakdownReport, LeqgConfig, synthesize_leqg
from .model import (
    LtiSystem,
    RegulationTarget,
    equilibrium_target,
    make_regulation_target,
    spectral_radius,
    validate_system,
)
from .noise import (
    EmpiricalSource,
    GaussianMixture,
    JointNoiseModel,
    moments_analytic,
    moments_empirical,
)
from .risk_transform import RiskWeights, transform

OPAMP_A = [[0.172, 0.0], [1.046, 0.8869]]
OPAMP_B = [[0.1882], [0.2762]]
OPAMP_C = [[0.05, -1.0]]

# Scalar shock mixtures of the op-amp case studies; variances, not std devs.
_PROC_RISKY = {"weights": [0.8, 0.2], "means": [0.0, 10.0], "variances": [0.01, 0.001]}
_PROC_NOMINAL = {"weights": [1.0], "means": [0.0], "variances": [0.1]}
_OUT_NOMINAL = {"weights": [1.0], "means": [0.0], "variances": [0.01]}
_OUT_RISKY = {"weights": [0.7, 0.3], "means": [0.0, 20.0], "variances": [0.01, 0.005]}
_PROC_RARE = {"weights": [0.95, 0.05], "means": [0.0, 10.0], "variances": [0.01, 0.001]}
_OUT_RARE = {"weights": [0.95, 0.05], "means": [0.0, 20.0], "variances": [0.01, 0.005]}


def _base_preset() -> dict:
    return {
        "system": {"preset": "opamp"},
        "target": {"u_star": [1.0]},
        "noise": {
            "process": dict(_PROC_RISKY, input_channel=True),
            "output": dict(_OUT_NOMINAL),
            "coupling": "independent",
        },
        "weights": {
            "Q": [[1.0, 0.0], [0.0, 1.0]],
            "R": [[1.0]],
            "Qs": [[1.0, 0.0], [0.0, 0.1]],
            "Qo": [[1.0]],
            "N": 100,
            "mu_pairs": [[10.0, 0.0]],
            "eps_s": None,
            "eps_o": None,
        },
        "baselines": {"risk_neutral": True, "leqg_thetas": [-0.05]},
        "run": {
            "seed": 0,
            "replications": 200,
            "x0": "target",
            "sigma0": 0.0,
            "fourth_moment": "mc",
            "mc_count": 1_000_000,
        },
    }


def preset_config(name: str) -> dict:
    cfg = _base_preset()
    if name == "case1":
        pass  # skewed process, Gaussian output, mu = (10, 0)
    elif name == "case2":
        cfg["noise"]["process"] = dict(_PROC_NOMINAL, input_channel=True)
        cfg["noise"]["output"] = dict(_OUT_RISKY)
        cfg["weights"]["mu_pairs"] = [[1e6, 0.0], [0.0, 5e-4]]
        cfg["baselines"]["leqg_thetas"] = [-0.05]
    elif name == "case3":
        cfg["noise"]["process"] = dict(_PROC_RARE, input_channel=True)
        cfg["noise"]["output"] = dict(_OUT_RARE)
        cfg["weights"]["mu_pairs"] = [[0.005, 0.0], [0.0, 0.05]]
        cfg["baselines"]["leqg_thetas"] = [-0.0031]
    else:
        raise ConfigError("preset", f"unknown preset {name!r} (case1|case2|case3)")
    return cfg


@dataclass
class Experiment:
    """Fully validated experiment, ready to synthesize and simulate."""

    sys: LtiSystem
    target: RegulationTarget
    model: JointNoiseModel
    weights_base: RiskWeights
    mu_pairs: list
    leqg_thetas: list
    risk_neutral: bool
    seed: int
    replications: int
    x0_shifted: np.ndarray
    sigma0: float
    fourth_moment: str
    mc_count: int
    resolved: dict


def _matrix(cfg: dict, key: str, field: str) -> np.ndarray:
    if key not in cfg:
        raise ConfigError(field, "missing required matrix")
    try:
        return np.array(cfg[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, f"not a numeric matrix: {exc}") from None


def _build_source(cfg: dict, field: str, injection: Optional[np.ndarray]):
    if "csv" in cfg:
        path = Path(cfg["csv"])
        if not path.exists():
            raise ConfigError(field + ".csv", f"file not found: {path}")
        return EmpiricalSource(np.loadtxt(path, delimiter=",", ndmin=2))
    for key in ("weights", "means"):
        if key not in cfg:
            raise ConfigError(f"{field}.{key}", "missing")
    try:
        if "variances" in cfg:
            mix = GaussianMixture.scalar(cfg["weights"], cfg["means"], cfg["variances"])
        elif "covariances" in cfg:
            mix = GaussianMixture(
                weights=np.asarray(cfg["weights"], dtype=float),
                means=np.asarray(cfg["means"], dtype=float),
                covariances=np.asarray(cfg["covariances"], dtype=float),
            )
        else:
            raise ConfigError(f"{field}.variances", "need variances or covariances")
    except RiskLqgError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(field, str(exc)) from None
    if cfg.get("input_channel"):
        if injection is None:
            raise ConfigError(f"{field}.input_channel", "no injection matrix available")
        if mix.dim != injection.shape[1]:
            raise ConfigError(
                f"{field}.input_channel",
                f"source dim {mix.dim} incompatible with injection columns {injection.shape[1]}",
            )
        mix = mix.expand(injection)
    return mix


def build_experiment(cfg: dict) -> Experiment:
    cfg = copy.deepcopy(cfg)
    sys_cfg = cfg.get("system", {})
    if sys_cfg.get("preset") == "opamp":
        a, b, c = np.array(OPAMP_A), np.array(OPAMP_B), np.array(OPAMP_C)
    elif sys_cfg.get("preset"):
        raise ConfigError("system.preset", f"unknown system preset {sys_cfg['preset']!r}")
    else:
        a = _matrix(sys_cfg, "A", "system.A")
        b = _matrix(sys_cfg, "B", "system.B")
        c = _matrix(sys_cfg, "C", "system.C")
    try:
        system = LtiSystem(a=a, b=b, c=c)
    except RiskLqgError as exc:
        raise ConfigError("system", str(exc)) from None

    tgt_cfg = cfg.get("target", {"zero": True})
    try:
        if tgt_cfg.get("zero"):
            target = RegulationTarget(
                x_star=np.zeros(system.n), u_star=np.zeros(system.m), y_star=np.zeros(system.q)
            )
        elif "x_star" in tgt_cfg:
            target = make_regulation_target(system, tgt_cfg["x_star"])
        elif "u_star" in tgt_cfg:
            target = equilibrium_target(system, tgt_cfg["u_star"])
        else:
            raise ConfigError("target", "need one of zero / x_star / u_star")
    except RiskLqgError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("target.x_star", str(exc)) from None

    noise_cfg = cfg.get("noise", {})
    injection = system.b
    if "injection" in noise_cfg:
        injection = _matrix(noise_cfg, "injection", "noise.injection")
    if noise_cfg.get("coupling", "independent") == "independent":
        process = _build_source(noise_cfg.get("process", {}), "noise.process", injection)
        output = _build_source(noise_cfg.get("output", {}), "noise.output", None)
        try:
            model = JointNoiseModel.independent(process, output)
        except RiskLqgError as exc:
            raise ConfigError("noise", str(exc)) from None
    elif noise_cfg.get("coupling") == "joint":
        joint = _build_source(noise_cfg.get("joint", {}), "noise.joint", None)
        try:
            model = JointNoiseModel.coupled(joint, n=system.n, q=system.q)
        except RiskLqgError as exc:
            raise ConfigError("noise.joint", str(exc)) from None
    else:
        raise ConfigError("noise.coupling", f"unknown coupling {noise_cfg.get('coupling')!r}")
    if model.n != system.n or model.q != system.q:
        raise ConfigError("noise", f"noise dims ({model.n},{model.q}) do not match system ({system.n},{system.q})")

    w_cfg = cfg.get("weights", {})
    try:
        weights_base = RiskWeights(
            q=_matrix(w_cfg, "Q", "weights.Q"),
            r=_matrix(w_cfg, "R", "weights.R"),
            qs=_matrix(w_cfg, "Qs", "weights.Qs"),
            qo=_matrix(w_cfg, "Qo", "weights.Qo"),
            n_horizon=int(w_cfg.get("N", 100)),
            eps_s=w_cfg.get("eps_s"),
            eps_o=w_cfg.get("eps_o"),
        )
    except (RiskLqgError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("weights", str(exc)) from None
    report = validate_system(system, weights_base.q, weights_base.r)
    if not report.stabilizable:
        raise ConfigError("system", "(A, B) is not stabilizable")

    if "mu_pairs" in w_cfg:
        mu_pairs = [(float(p[0]), float(p[1])) for p in w_cfg["mu_pairs"]]
    elif "mu_s" in w_cfg or "mu_o" in w_cfg:
        mu_pairs = [(float(w_cfg.get("mu_s", 0.0)), float(w_cfg.get("mu_o", 0.0)))]
    else:
        mu_pairs = []
    for pair in mu_pairs:
        if pair[0] < 0 or pair[1] < 0:
            raise ConfigError("weights.mu_pairs", f"multipliers must be nonnegative, got {pair}")

    base_cfg = cfg.get("baselines", {})
    run_cfg = cfg.get("run", {})
    x0_cfg = run_cfg.get("x0", "target")
    if isinstance(x0_cfg, str):
        if x0_cfg != "target":
            raise ConfigError("run.x0", f"expected 'target' or an n-vector, got {x0_cfg!r}")
        x0_shifted = np.zeros(system.n)
    else:
        x0_abs = np.asarray(x0_cfg, dtype=float).reshape(-1)
        if x0_abs.shape != (system.n,):
            raise ConfigError("run.x0", f"expected length {system.n}")
        x0_shifted = x0_abs - target.x_star

    return Experiment(
        sys=system,
        target=target,
        model=model,
        weights_base=weights_base,
        mu_pairs=mu_pairs,
        leqg_thetas=[float(t) for t in base_cfg.get("leqg_thetas", [])],
        risk_neutral=bool(base_cfg.get("risk_neutral", True)),
        seed=int(run_cfg.get("seed", 0)),
        replications=int(run_cfg.get("replications", 200)),
        x0_shifted=x0_shifted,
        sigma0=run_cfg.get("sigma0", 0.0),
        fourth_moment=run_cfg.get("fourth_moment", "mc"),
        mc_count=int(run_cfg.get("mc_count", 1_000_000)),
        resolved=cfg,
    )


def policy_label(mu_s: float, mu_o: float) -> str:
    return f"mu_{mu_s:g}_{mu_o:g}".replace("+", "")


def leqg_label(theta: float) -> str:
    return f"leqg_{theta:g}".replace("+", "")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()


def _compute_moments(exp: Experiment):
    if exp.model.is_analytic:
        return moments_analytic(
            exp.model, exp.weights_base.qs, exp.weights_base.qo, exp.sys.c,
            fourth_moment=exp.fourth_moment, mc_count=exp.mc_count,
        )
    if exp.model.joint is not None:
        samples = exp.model.joint.samples
        return moments_empirical(
            samples[:, : exp.sys.n], samples[:, exp.sys.n :],
            exp.weights_base.qs, exp.weights_base.qo, exp.sys.c,
        )
    return moments_empirical(
        exp.model.process.samples, exp.model.output.samples,
        exp.weights_base.qs, exp.weights_base.qo, exp.sys.c,
    )


def run_experiment(exp: Experiment, out_dir: Path, simulate_policies: bool = True) -> dict:
    """Synthesize all requested policies, simulate with CRN, write artifacts."""
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_hash = config_hash(exp.resolved)
    moments = _compute_moments(exp)
    plan = plan_covariances(exp.sys, moments, exp.sigma0, exp.weights_base.n_horizon)

    policies: dict[str, dict] = {}
    schedules: dict[str, PolicySchedule] = {}
    kkt_inputs = {}

    mu_list = list(exp.mu_pairs)
    if exp.risk_neutral and (0.0, 0.0) not in mu_list:
        mu_list.insert(0, (0.0, 0.0))
    for mu_s, mu_o in mu_list:
        label = "risk_neutral" if mu_s == 0.0 and mu_o == 0.0 else policy_label(mu_s, mu_o)
        weights = exp.weights_base.with_multipliers(mu_s, mu_o)
        tp = transform(weights, moments, exp.sys.c)
        schedule, params = synthesize_finite(exp.sys, tp, weights, moments, filter_plan=plan)
        ss = synthesize_infinite(exp.sys, tp, weights, moments)
        gains_path = out_dir / f"gains_{label}.csv"
        save_gains(gains_path, schedule, config_hash=cfg_hash)
        inflation = float(np.trace(tp.q_mu - weights.q))
        policies[label] = {
            "type": "risk_averse" if (mu_s, mu_o) != (0.0, 0.0) else "risk_neutral",
            "mu_s": mu_s,
            "mu_o": mu_o,
            "gains_csv": gains_path.name,
            "spectral_radius": ss.closed_loop_spectral_radius,
            "q_mu_trace_inflation": inflation,
        }
        schedules[label] = schedule
        kkt_inputs[label] = (weights, tp, params)

    for theta in exp.leqg_thetas:
        label = leqg_label(theta)
        result = synthesize_leqg(
            exp.sys, exp.weights_base.q, exp.weights_base.r, moments,
            LeqgConfig(theta=theta, n_steps=exp.weights_base.n_horizon),
        )
        if isinstance(result, BreakdownReport):
            policies[label] = {
                "type": "leqg_breakdown",
                "theta": theta,
                "breakdown_step": result.step,
                "min_eigenvalue": result.min_eigenvalue,
            }
            continue
        gains_path = out_dir / f"gains_{label}.csv"
        save_gains(gains_path, result, config_hash=cfg_hash)
        policies[label] = {
            "type": "leqg",
            "theta": theta,
            "gains_csv": gains_path.name,
            "spectral_radius": spectral_radius(exp.sys.a + exp.sys.b @ result.k[0]),
        }
        schedules[label] = result

    summaries = {}
    kkt_reports = {}
    if simulate_policies:
        for label, schedule in schedules.items():
            records = simulate(
                exp.sys, schedule, exp.model, plan, exp.x0_shifted,
                exp.seed, exp.replications, moments, exp.weights_base,
            )
            traj_path = out_dir / f"traj_{label}.csv"
            write_trajectories_csv(traj_path, records)
            policies[label]["traj_csv"] = traj_path.name
            tp_for_label = kkt_inputs.get(label)
            summaries[label] = summarize(
                records, label=label, tp=tp_for_label[1] if tp_for_label else None
            )
        for label, (weights, tp, params) in kkt_inputs.items():
            summary = summaries.get(label)
            if summary is None:
                continue
            eff_weights = weights
            reverse = False
            if weights.eps_s is None and weights.eps_o is None:
                # "In reverse": adopt the measured constraint values as tolerances.
                eff_weights = weights.with_tolerances(summary.js_mean, summary.jo_mean)
                tp = transform(eff_weights, moments, exp.sys.c)
                reverse = True
            predicted = params.value(exp.x0_shifted, tp.m_mu, moments.w_bar)
            report = verify_kkt(summary, tp, eff_weights, predicted_value=predicted)
            kkt_reports[label] = dict(report.as_dict(), reverse_mode=reverse,
                                      eps_s=eff_weights.eps_s, eps_o=eff_weights.eps_o)

        write_summary_json(
            out_dir / "summary.json", summaries,
            extra={"config_hash": cfg_hash, "hero_replication": 0},
        )
        with open(out_dir / "kkt.json", "w") as fh:
            json.dump(dict(kkt_reports, config_hash=cfg_hash), fh, indent=2, sort_keys=True)
            fh.write("\n")

    manifest = {
        "config": exp.resolved,
        "config_hash": cfg_hash,
        "hero_replication": 0,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "seed": exp.seed,
        "replications": exp.replications,
        "coordinates": "target-relative (x column = x_t - x_star, u column = u_t - u_star)",
        "target": {
            "x_star": [float(v) for v in exp.target.x_star],
            "u_star": [float(v) for v in exp.target.u_star],
            "y_star": [float(v) for v in exp.target.y_star],
        },
        "moments": {
            "fourth_moment_method": moments.fourth_moment_method,
            "mc_seed": moments.mc_seed,
            "mc_count": moments.mc_count,
            "m_w": moments.m_w,
            "m_weps": moments.m_weps,
        },
        "policies": policies,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=repr)
        fh.write("\n")
    return manifest


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError("override", f"expected key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError("override", f"path {key!r} crosses a non-object")
        node[parts[-1]] = value
    return cfg


def _load_config(args) -> dict:
    if args.preset and args.config:
        raise ConfigError("preset", "give either --preset or --config, not both")
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError("config", f"file not found: {path}")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
    else:
        raise ConfigError("config", "one of --preset or --config is required")
    cfg = apply_overrides(cfg, args.override or [])
    if args.seed is not None:
        cfg.setdefault("run", {})["seed"] = args.seed
    if args.replications is not None:
        cfg.setdefault("run", {})["replications"] = args.replications
    return cfg


def _add_common(parser):
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--preset", choices=["case1", "case2", "case3"], help="built-in op-amp scenario")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--replications", type=int, default=None)
    parser.add_argument("--out", default="runs/latest", help="artifact directory")
    parser.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="dotted-path config override, value parsed as JSON")


def _parse_mu_grid(text: str) -> list[tuple[float, float]]:
    grid = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError("mu-grid", f"expected 'mu_s,mu_o' pairs, got {chunk!r}")
        grid.append((float(parts[0]), float(parts[1])))
    if not grid:
        raise ConfigError("mu-grid", "grid is empty")
    return grid


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="risklqg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="synthesize, simulate, and write artifacts")
    _add_common(p_run)

    p_gains = sub.add_parser("gains", help="synthesis only: write gain files")
    _add_common(p_gains)

    p_tune = sub.add_parser("tune", help="multiplier tabulation / dual ascent")
    _add_common(p_tune)
    p_tune.add_argument("--mu-grid", help="semicolon-separated mu_s,mu_o pairs")
    p_tune.add_argument("--eps-s", type=float, default=None, help="state risk target (dual ascent)")
    p_tune.add_argument("--eps-o", type=float, default=None, help="output risk target (dual ascent)")
    p_tune.add_argument("--iterations", type=int, default=8)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        exp = build_experiment(cfg)
        out_dir = Path(args.out)
        if args.command == "run":
            manifest = run_experiment(exp, out_dir)
            print(f"wrote artifacts for {len(manifest['policies'])} policies to {out_dir}")
        elif args.command == "gains":
            manifest = run_experiment(exp, out_dir, simulate_policies=False)
            for label, info in manifest["policies"].items():
                rho = info.get("spectral_radius")
                infl = info.get("q_mu_trace_inflation")
                line = f"{label}: "
                if info["type"] == "leqg_breakdown":
                    line += f"neurotic breakdown at step {info['breakdown_step']}"
                else:
                    line += f"spectral radius {rho:.6f}"
                    if infl is not None:
                        line += f", tr(Q_mu - Q) = {infl:.6g}"
                print(line)
        else:  # tune
            out_dir.mkdir(parents=True, exist_ok=True)
            moments = _compute_moments(exp)
            if args.eps_s is not None or args.eps_o is not None:
                if args.eps_s is None or args.eps_o is None:
                    raise ConfigError("eps", "dual ascent needs both --eps-s and --eps-o")
                steps = dual_ascent(
                    exp.sys, exp.model, exp.weights_base, args.eps_s, args.eps_o,
                    exp.seed, moments, exp.x0_shifted,
                    replications=exp.replications, iterations=args.iterations,
                    sigma0=exp.sigma0,
                )
                table_path = out_dir / "dual_ascent.csv"
                with open(table_path, "w") as fh:
                    fh.write("iteration,mu_s,mu_o,Js,Jo,slack_s,slack_o\n")
                    for s in steps:
                        vals = (s.mu_s, s.mu_o, s.js_mean, s.jo_mean, s.slack_s, s.slack_o)
                        fh.write(f"{s.iteration}," + ",".join(repr(float(v)) for v in vals) + "\n")
                print(f"wrote {table_path}")
            else:
                if not args.mu_grid:
                    raise ConfigError("mu-grid", "tune needs --mu-grid or --eps-s/--eps-o targets")
                grid = _parse_mu_grid(args.mu_grid)
                rows = tabulate_multipliers(
                    exp.sys, exp.model, exp.weights_base, grid, exp.seed, moments,
                    exp.x0_shifted, replications=exp.replications, sigma0=exp.sigma0,
                )
                table_path = out_dir / "multiplier_table.csv"
                with open(table_path, "w") as fh:
                    fh.write("mu_s,mu_o,J,J_se,Js,Js_se,Jo,Jo_se,spectral_radius\n")
                    for row in rows:
                        vals = (row.mu_s, row.mu_o, row.j_mean, row.j_se, row.js_mean,
                                row.js_se, row.jo_mean, row.jo_se,
                                row.closed_loop_spectral_radius)
                        fh.write(",".join(repr(float(v)) for v in vals) + "\n")
                print(f"wrote {table_path}")
        return 0
    except RiskLqgError as exc:
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, ConfigError):
            payload["error"]["field"] = exc.field
        print(json.dumps(payload), file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
