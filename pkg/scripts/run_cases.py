#!/usr/bin/env python3
"""Reproduce the three op-amp case studies end to end.

Runs the case1/case2/case3 presets with a shared seed, writes artifacts under
runs/<case>/, prints the headline cost/risk estimates, and (when the riskfigs
package is installed) renders the comparison figures next to the artifacts.

Usage: python scripts/run_cases.py [--seed 0] [--replications 200] [--out runs]
"""

import argparse
import json
from pathlib import Path

from risklqg.cli import main as risklqg_main


def run(seed: int, replications: int, out_root: Path) -> None:
    for preset in ("case1", "case2", "case3"):
        out = out_root / preset
        code = risklqg_main([
            "run", "--preset", preset,
            "--seed", str(seed),
            "--replications", str(replications),
            "--out", str(out),
        ])
        if code != 0:
            raise SystemExit(code)
        summary = json.loads((out / "summary.json").read_text())
        print(f"\n{preset}: seed={seed}, replications={replications}")
        for label, stats in sorted(summary.items()):
            if not isinstance(stats, dict) or "J" not in stats:
                continue
            print(
                f"  {label:>16}: J = {stats['J']['mean']:10.2f} +- {stats['J']['se']:.2f}   "
                f"Js = {stats['Js']['mean']:9.3f}   Jo = {stats['Jo']['mean']:10.3f}"
            )
        try:
            from riskfigs import render, spec_from_run
        except ImportError:
            print("  (riskfigs not installed; skipping figure)")
            continue
        import matplotlib.pyplot as plt

        fig = render(spec_from_run(out, preset))
        plt.close(fig)
        print(f"  figure: {out / f'figure_{preset}.png'}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replications", type=int, default=200)
    parser.add_argument("--out", default="runs")
    args = parser.parse_args()
    run(args.seed, args.replications, Path(args.out))
