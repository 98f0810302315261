"""Steady-state entropy against inverse temperature for a few frequencies.

Writes the table as CSV and, if matplotlib is installed, a PNG next to it.

    python scripts/entropy_figure.py --output out/entropy.csv
"""
from __future__ import annotations

import argparse
from pathlib import Path

from rsfield.cli import entropy_sweep, run_sweep_entropy


def plot(betas, omegas, table, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for j, w in enumerate(omegas):
        ax.plot(betas, table[:, j], label=f"omega = {w:g}")
    ax.set_xlabel("beta")
    ax.set_ylabel("S / kB")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--output", type=Path, default=Path("entropy_vs_beta.csv"))
    ap.add_argument("--beta-min", type=float, default=0.1)
    ap.add_argument("--beta-max", type=float, default=5.0)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--omega", default="0.5,1,2,4")
    args = ap.parse_args()
    omegas = [float(x) for x in args.omega.split(",")]
    args.output.parent.mkdir(parents=True, exist_ok=True)
    run_sweep_entropy(args.beta_min, args.beta_max, args.steps, omegas, args.output)
    print(f"wrote {args.output}")
    try:
        betas, ws, table = entropy_sweep(args.beta_min, args.beta_max, args.steps, omegas)
        png = args.output.with_suffix(".png")
        plot(betas, ws, table, png)
        print(f"wrote {png}")
    except ImportError:
        print("matplotlib not installed; skipped the plot")


if __name__ == "__main__":
    main()
