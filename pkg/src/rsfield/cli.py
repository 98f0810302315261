"""Command-line entry point.

Subcommands::

    rsfield simulate --config F --output F [--dump-state]
    rsfield sweep-entropy --beta-min X --beta-max X --steps N --omega w1,w2,... --output F
    rsfield steady --config F [--verify]
    rsfield oracle-compare --config F

Exit codes: 0 success, 1 oracle comparison failed, 2 configuration or domain
error, 3 numerical failure. Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, Scenario, load_scenario
from .core import ModeSet, StateConsistencyError, correlation_matrix
from .fock import CutoffOverflowError, compare_trajectories
from .generators import ThermalBath
from .integrator import IntegrationError, NoSteadyStateError, SimulationConfig, evolve, steady_state
from .numkernel import ConvergenceError, DimensionError, DomainError
from .thermo import ThermoSample, annotate, entropy, equilibrium_free_energy, internal_energy, \
    steady_entropy_vs_beta

log = logging.getLogger("rsfield")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
MAX_ORACLE_MODES = 2


class UsageError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _state_header(n: int) -> list[str]:
    cols = []
    for k in range(n):
        for kp in range(n):
            cols += [f"r_{k}_{kp}_re", f"r_{k}_{kp}_im"]
    for k in range(n):
        cols += [f"alpha_{k}_re", f"alpha_{k}_im"]
    return cols


def _state_row(s) -> list[float]:
    out = []
    for z in s.r.ravel():
        out += [z.real, z.imag]
    for z in s.alpha:
        out += [z.real, z.imag]
    return out


def run_simulate(config: Path, output: Path, dump_state: bool = False) -> int:
    sc = load_scenario(config)
    g = sc.generator
    traj = evolve(sc.initial, g, sc.simulation)
    annotate(traj, g, kB=sc.simulation.kB)
    header = list(ThermoSample.FIELDS)
    if dump_state:
        header += _state_header(g.n_modes)
    with open(output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for smp, s in zip(traj.samples, traj.states):
            row = smp.as_row() + (_state_row(s) if dump_state else [])
            w.writerow([fmt(x) for x in row])
    log.info("wrote %d samples to %s", len(traj), output)
    return EXIT_OK


def entropy_sweep(beta_min: float, beta_max: float, steps: int, omegas, hbar: float = 1.0, kB: float = 1.0):
    """Steady-state entropy on a beta grid, one column per frequency (ascending)."""
    if not (beta_min > 0 and beta_max > beta_min):
        raise DomainError("need 0 < beta_min < beta_max")
    if steps < 2:
        raise DomainError("steps must be >= 2")
    omegas = sorted(float(w) for w in omegas)
    modes = [ModeSet([w], hbar=hbar) for w in omegas]
    betas = np.linspace(beta_min, beta_max, steps)
    table = np.array([[steady_entropy_vs_beta(b, m, kB) for m in modes] for b in betas])
    return betas, omegas, table


def run_sweep_entropy(beta_min, beta_max, steps, omegas, output: Path, hbar=1.0, kB=1.0) -> int:
    betas, omegas, table = entropy_sweep(beta_min, beta_max, steps, omegas, hbar, kB)
    with open(output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beta"] + [f"S(omega={w:g})" for w in omegas])
        for b, row in zip(betas, table):
            w.writerow([fmt(b)] + [fmt(x) for x in row])
    log.info("wrote %d rows to %s", len(betas), output)
    return EXIT_OK


def _complex_str(z: complex) -> str:
    return f"{z.real:+.12g}{z.imag:+.12g}j"


def _matrix_lines(m) -> list[str]:
    return ["  [" + ", ".join(_complex_str(z) for z in row) + "]" for row in np.atleast_2d(m)]


def steady_report(sc: Scenario, verify: bool = False) -> str:
    g = sc.generator
    if sc.kind != "thermal" or not isinstance(g.bath, ThermalBath):
        raise UsageError("steady requires a 'thermal' scenario")
    ss = steady_state(g)
    c = correlation_matrix(ss)
    kB = sc.simulation.kB
    lines = [
        f"beta        {g.bath.beta:.12g}",
        "alpha_steady",
        "  [" + ", ".join(_complex_str(z) for z in ss.alpha) + "]",
        "r_steady",
        *_matrix_lines(ss.r),
        "correlation_matrix",
        *_matrix_lines(c),
        "bose_einstein  [" + ", ".join(f"{x:.12g}" for x in g.bath.occupations(g.modes)) + "]",
        f"S           {entropy(c, kB):.12g}",
        f"U           {internal_energy(ss, g.modes):.12g}",
        f"F_eq        {equilibrium_free_energy(g.bath.beta, g.modes):.12g}",
    ]
    if verify:
        rate = float(np.min(g.bath.damping(g.modes)))
        t_end = 50.0 / rate
        dt = min(0.05 / g.fastest_rate(), t_end / 10)
        cfg = SimulationConfig(dt, t_end, output_stride=max(1, int(round(t_end / dt))))
        final = evolve(sc.initial, g, cfg).final
        dev = max(np.linalg.norm(final.r - ss.r), np.linalg.norm(final.alpha - ss.alpha))
        lines.append(f"verify      evolve to t = {cfg.n_steps * dt:.6g}: max deviation {dev:.3e}")
    return "\n".join(lines)


def run_steady(config: Path, verify: bool = False) -> int:
    print(steady_report(load_scenario(config), verify))
    return EXIT_OK


def run_oracle_compare(config: Path) -> int:
    sc = load_scenario(config)
    if sc.generator.n_modes > MAX_ORACLE_MODES:
        raise UsageError(f"oracle-compare supports at most {MAX_ORACLE_MODES} modes")
    if sc.fock is None:
        raise UsageError("oracle-compare needs a 'fock' section with the cutoff")
    if sc.initial_kind != "vacuum":
        raise UsageError("oracle-compare starts from the vacuum; set 'initial: vacuum'")
    report = compare_trajectories(sc.generator, sc.fock, sc.simulation, sc.fock_tolerance)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_FAIL


def _omega_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid frequency list {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("frequencies must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rsfield", description="Reduced-state field dynamics and thermodynamics.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a scenario and write a thermodynamic time series")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--dump-state", action="store_true", help="append r and alpha entries to each row")

    p = sub.add_parser("sweep-entropy", help="steady-state entropy versus beta for several frequencies")
    p.add_argument("--beta-min", required=True, type=float)
    p.add_argument("--beta-max", required=True, type=float)
    p.add_argument("--steps", required=True, type=int)
    p.add_argument("--omega", required=True, type=_omega_list)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--kB", type=float, default=1.0)

    p = sub.add_parser("steady", help="print the thermal steady state of a scenario")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--verify", action="store_true", help="also integrate to t = 50 / min damping and compare")

    p = sub.add_parser("oracle-compare", help="compare against the truncated Fock-space master equation")
    p.add_argument("--config", required=True, type=Path)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "simulate":
            return run_simulate(args.config, args.output, args.dump_state)
        if args.command == "sweep-entropy":
            return run_sweep_entropy(args.beta_min, args.beta_max, args.steps, args.omega, args.output,
                                     args.hbar, args.kB)
        if args.command == "steady":
            return run_steady(args.config, args.verify)
        if args.command == "oracle-compare":
            return run_oracle_compare(args.config)
    except (IntegrationError, ConvergenceError, StateConsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UsageError, DomainError, DimensionError, NoSteadyStateError,
            CutoffOverflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
