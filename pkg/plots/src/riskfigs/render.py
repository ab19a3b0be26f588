"""Batch figure renderer for risklqg run artifacts.

Consumes long-format trajectory CSVs (columns rep, t, x_*, xhat_*, u_*, y_*,
w_*, eps_*, stage_cost, state_penalty, output_penalty, ds2, do2) and draws
multi-panel comparison figures:

    case1: state-penalty traces (top), process-shock energy (bottom)
    case2: output-penalty traces (top), output-shock energy (bottom)
    case3: output-penalty traces (top), process-shock energy (middle),
           output-shock energy (bottom)

Shock energies are squared shock magnitudes per step, derived from the w_*
and eps_* columns of the first listed trajectory (identical across policies
under common random numbers). Figures use a fixed style and carry no
timestamps; rendering is a pure function of the inputs.

Usage:
    render --spec spec.json
    render --from-run RUNDIR --figure case1 [--out fig.png] [--replication 0]
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class RenderError(Exception):
    pass


class SchemaMismatch(RenderError):
    pass


class MissingColumn(RenderError):
    pass


FIGURE_LAYOUTS = {
    "case1": ("state_penalty", ("w",)),
    "case2": ("output_penalty", ("eps",)),
    "case3": ("output_penalty", ("w", "eps")),
}

TRACE_LABELS = {
    "state_penalty": "state penalty",
    "output_penalty": "output penalty",
}
SHOCK_LABELS = {
    "w": "process shock energy",
    "eps": "output shock energy",
}

REQUIRED_COLUMNS = ("rep", "t", "stage_cost", "ds2", "do2")

_STYLE = {
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.3,
    "legend.framealpha": 0.9,
    "font.size": 10,
}


@dataclass
class Trajectory:
    """One policy's long-format trajectory table, column name -> float array."""

    label: str
    columns: dict

    def series(self, name: str, replication: int) -> np.ndarray:
        if name not in self.columns:
            raise MissingColumn(f"{self.label}: column {name!r} not in trajectory CSV")
        mask = self.columns["rep"] == replication
        if not np.any(mask):
            raise SchemaMismatch(
                f"{self.label}: replication {replication} not present"
            )
        order = np.argsort(self.columns["t"][mask], kind="stable")
        return self.columns[name][mask][order]

    def shock_energy(self, kind: str, replication: int) -> np.ndarray:
        prefix = f"{kind}_"
        names = sorted(c for c in self.columns if c.startswith(prefix))
        if not names:
            raise MissingColumn(f"{self.label}: no {prefix}* shock columns")
        parts = np.stack([self.series(name, replication) for name in names])
        return np.sum(parts**2, axis=0)


@dataclass
class PlotSpec:
    """Inputs of one figure: trajectory CSVs with labels, layout, output path."""

    trajectories: list
    figure: str
    output: str
    replication: int = 0
    logy: bool = False
    title: str = ""

    @classmethod
    def from_json(cls, path) -> "PlotSpec":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"spec is not valid JSON: {exc}") from None
        for key in ("trajectories", "figure", "output"):
            if key not in raw:
                raise SchemaMismatch(f"spec is missing {key!r}")
        base = Path(path).parent
        trajectories = []
        for item in raw["trajectories"]:
            if "path" not in item or "label" not in item:
                raise SchemaMismatch("each trajectory needs 'path' and 'label'")
            p = Path(item["path"])
            trajectories.append({"path": p if p.is_absolute() else base / p,
                                 "label": item["label"]})
        return cls(
            trajectories=trajectories,
            figure=raw["figure"],
            output=raw["output"],
            replication=int(raw.get("replication", 0)),
            logy=bool(raw.get("logy", False)),
            title=raw.get("title", ""),
        )


def load_trajectory(path, label: str) -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise SchemaMismatch(f"trajectory CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        rows = list(reader)
    if not rows:
        raise SchemaMismatch(f"{path}: no data rows")
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise MissingColumn(f"{path}: required column {col!r} missing")
    data = {name: np.empty(len(rows)) for name in header}
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaMismatch(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        for name, valstr in zip(header, row):
            data[name][i] = float(valstr) if valstr != "" else np.nan
    return Trajectory(label=label, columns=data)


def render(spec: PlotSpec):
    """Draw the figure described by `spec`, save it, and return the Figure."""
    if spec.figure not in FIGURE_LAYOUTS:
        raise SchemaMismatch(
            f"unknown figure layout {spec.figure!r}; expected one of {sorted(FIGURE_LAYOUTS)}"
        )
    if not spec.trajectories:
        raise SchemaMismatch("spec lists no trajectories")
    trace_col, shock_kinds = FIGURE_LAYOUTS[spec.figure]
    loaded = [load_trajectory(item["path"], item["label"]) for item in spec.trajectories]

    n_panels = 1 + len(shock_kinds)
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(
            n_panels, 1, figsize=(7.0, 2.6 * n_panels), sharex=True,
            gridspec_kw={"height_ratios": [2.0] + [1.0] * len(shock_kinds)},
        )
        axes = np.atleast_1d(axes)
        top = axes[0]
        for traj in loaded:
            series = traj.series(trace_col, spec.replication)
            top.plot(np.arange(series.size), series, label=traj.label)
        top.set_ylabel(TRACE_LABELS[trace_col])
        if spec.logy:
            top.set_yscale("log")
        top.legend(loc="upper right")
        if spec.title:
            top.set_title(spec.title)

        for ax, kind in zip(axes[1:], shock_kinds):
            energy = loaded[0].shock_energy(kind, spec.replication)
            ax.plot(np.arange(energy.size), energy, color="#444444")
            ax.set_ylabel(SHOCK_LABELS[kind])
        axes[-1].set_xlabel("t")
        fig.align_ylabels(axes)
        fig.tight_layout()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out)
    return fig


def spec_from_run(run_dir, figure: str, output=None, replication: int = 0) -> PlotSpec:
    """Build a PlotSpec from a run directory's manifest.json."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise SchemaMismatch(f"no manifest.json under {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    trajectories = []
    for label, info in sorted(manifest.get("policies", {}).items()):
        traj = info.get("traj_csv")
        if traj:
            trajectories.append({"path": run_dir / traj, "label": label})
    if not trajectories:
        raise SchemaMismatch(f"{run_dir}: manifest lists no simulated policies")
    out = output or (run_dir / f"figure_{figure}.png")
    return PlotSpec(trajectories=trajectories, figure=figure, output=str(out),
                    replication=replication)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="render", description=__doc__)
    parser.add_argument("--spec", help="JSON plot spec")
    parser.add_argument("--from-run", dest="from_run", help="risklqg run directory")
    parser.add_argument("--figure", choices=sorted(FIGURE_LAYOUTS), default="case1")
    parser.add_argument("--out", help="output image path (PNG/SVG by extension)")
    parser.add_argument("--replication", type=int, default=0)
    parser.add_argument("--logy", action="store_true")
    args = parser.parse_args(argv)
    try:
        if bool(args.spec) == bool(args.from_run):
            raise SchemaMismatch("give exactly one of --spec or --from-run")
        if args.spec:
            spec = PlotSpec.from_json(args.spec)
            if args.out:
                spec.output = args.out
        else:
            spec = spec_from_run(args.from_run, args.figure, output=args.out,
                                 replication=args.replication)
        if args.logy:
            spec.logy = True
        fig = render(spec)
        plt.close(fig)
        print(f"wrote {spec.output}")
        return 0
    except RenderError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
