"""Deviation between the reduced dynamics and the truncated Fock-space
master equation as the cutoff grows.

    python scripts/oracle_cutoff.py [--zeta 0.3] [--t-final 5]
"""
from __future__ import annotations

import argparse

from rsfield import GeneratorSpec, ModeSet, SimulationConfig, ThermalBath
from rsfield.fock import CutoffOverflowError, FockSpec, compare_trajectories


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--zeta", type=float, default=0.3)
    ap.add_argument("--t-final", type=float, default=5.0)
    ap.add_argument("--cutoffs", default="3,4,6,8,10,14")
    args = ap.parse_args()

    g = GeneratorSpec(ModeSet([1.0]), [args.zeta], ThermalBath(2.0, [0.3]))
    cfg = SimulationConfig(0.01, args.t_final, output_stride=10)
    print(f"{'cutoff':>6} {'max |dr|':>10} {'max |da|':>10} {'top level':>10}")
    for cutoff in (int(c) for c in args.cutoffs.split(",")):
        spec = FockSpec(1, cutoff=cutoff, overflow_tol=1.0)
        try:
            rep = compare_trajectories(g, spec, cfg)
        except CutoffOverflowError as exc:
            print(f"{cutoff:6d} {exc}")
            continue
        print(f"{cutoff:6d} {rep.max_r_deviation:10.2e} {rep.max_alpha_deviation:10.2e} {rep.max_top_population:10.2e}")


if __name__ == "__main__":
    main()
