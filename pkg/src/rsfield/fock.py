"""Brute-force check of the reduced dynamics on a truncated Fock space.

The full master equation is integrated for a density matrix over
``(cutoff + 1) ** n_modes`` occupation-number states, then reduced to
``r_kk' = Tr[rho a_k'^dagger a_k]`` and ``alpha_k = Tr[rho a_k]``.
Only meant for one or two modes at small cutoffs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, reduce as _fold

import numpy as np
from scipy.linalg import expm, logm

from .core import ReducedState
from .generators import GeneratorSpec
from .integrator import SimulationConfig, _record_indices, evolve
from .numkernel import DimensionError, hermitize

__all__ = [
    "MAX_FOCK_DIM",
    "CutoffOverflowError",
    "CutoffWarning",
    "FockSpec",
    "build_ladder_operators",
    "vacuum",
    "lift_unitary",
    "rhs_master",
    "reduce",
    "evolve_master",
    "ComparisonReport",
    "compare_trajectories",
]

MAX_FOCK_DIM = 4096


class CutoffOverflowError(ArithmeticError):
    pass


class CutoffWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FockSpec:
    n_modes: int
    cutoff: int = 10
    # population allowed in the top Fock level of any mode
    overflow_tol: float = 1e-6

    def __post_init__(self):
        if self.n_modes < 1 or self.cutoff < 1:
            raise ValueError("n_modes and cutoff must be positive")
        if self.dim > MAX_FOCK_DIM:
            raise DimensionError(
                f"Fock space dimension {self.dim} exceeds the limit {MAX_FOCK_DIM}"
            )

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.n_modes

    @cached_property
    def ladder(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return build_ladder_operators(self)

    @cached_property
    def top_projectors(self) -> list[np.ndarray]:
        """Diagonal masks of the states with mode k at the cutoff."""
        out = []
        for a, ad in self.ladder:
            num = np.real(np.diagonal(ad @ a))
            out.append(np.isclose(num, self.cutoff))
        return out


def build_ladder_operators(spec: FockSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    """``(a_k, a_k^dagger)`` for every mode, as dense matrices on the product basis.

    Mode 0 is the most significant tensor factor.
    """
    d = spec.cutoff + 1
    a1 = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    eye = np.eye(d, dtype=complex)
    ops = []
    for k in range(spec.n_modes):
        factors = [a1 if j == k else eye for j in range(spec.n_modes)]
        a = _fold(np.kron, factors)
        ops.append((a, a.conj().T.copy()))
    return ops


def vacuum(spec: FockSpec) -> np.ndarray:
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def lift_unitary(u, spec: FockSpec) -> np.ndarray:
    """Fock-space unitary ``exp(i B)`` with ``B = sum b_kk' a_k^dagger a_k'`` and
    ``u = exp(i b)`` (principal matrix logarithm)."""
    b = hermitize(-1j * logm(np.asarray(u, dtype=complex)))
    ops = spec.ladder
    B = np.zeros((spec.dim, spec.dim), dtype=complex)
    for k, (_, adk) in enumerate(ops):
        for kp, (akp, _) in enumerate(ops):
            if b[k, kp] != 0:
                B += b[k, kp] * (adk @ akp)
    return expm(1j * B)


@dataclass
class _MasterTerms:
    """Precomputed operators of the master equation for one generator."""

    H: np.ndarray
    drive: np.ndarray
    jumps: list  # (rate, left, right, anticomm) with D(rho) = rate (L rho R - 1/2 {A, rho})
    scatter: list  # (weight, U)

    @classmethod
    def build(cls, g: GeneratorSpec, spec: FockSpec) -> "_MasterTerms":
        if g.n_modes != spec.n_modes:
            raise DimensionError(f"generator has {g.n_modes} modes, Fock space has {spec.n_modes}")
        ops = spec.ladder
        dim = spec.dim
        H = np.zeros((dim, dim), dtype=complex)
        drive = np.zeros((dim, dim), dtype=complex)
        for w, z, (a, ad) in zip(g.modes.omega, g.zeta, ops):
            H += w * (ad @ a)  # H / hbar
            drive += z * ad - np.conj(z) * a
        jumps = []
        gd, gu = g.gamma_down, g.gamma_up
        n = g.n_modes
        for k in range(n):
            for kp in range(n):
                a_k, ad_k = ops[k]
                a_kp, ad_kp = ops[kp]
                # emission: Gamma_down^{k'k} (a_k rho a_k'^dag - 1/2 {a_k'^dag a_k, rho})
                if gd[kp, k] != 0:
                    jumps.append((gd[kp, k], a_k, ad_kp, ad_kp @ a_k))
                # absorption: Gamma_up^{k'k} (a_k'^dag rho a_k - 1/2 {a_k a_k'^dag, rho})
                if gu[kp, k] != 0:
                    jumps.append((gu[kp, k], ad_kp, a_k, a_k @ ad_kp))
        scatter = [(w, lift_unitary(u, spec)) for w, u in g.scattering.channels]
        return cls(H, drive, jumps, scatter)

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.H @ rho - rho @ self.H)
        out += self.drive @ rho - rho @ self.drive
        for rate, L, R, A in self.jumps:
            out += rate * (L @ rho @ R - 0.5 * (A @ rho + rho @ A))
        for w, U in self.scatter:
            out += w * (U @ rho @ U.conj().T - rho)
        return out


def rhs_master(rho, g: GeneratorSpec, spec: FockSpec) -> np.ndarray:
    """Right-hand side of the full master equation at ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (spec.dim, spec.dim):
        raise DimensionError(f"rho has shape {rho.shape}, expected {(spec.dim, spec.dim)}")
    return _MasterTerms.build(g, spec).rhs(rho)


def reduce(rho, spec: FockSpec, check: bool = True) -> ReducedState:
    """First and second moments of a Fock-space density matrix."""
    ops = spec.ladder
    n = spec.n_modes
    alpha = np.array([np.trace(rho @ a) for a, _ in ops])
    r = np.empty((n, n), dtype=complex)
    for k in range(n):
        for kp in range(n):
            r[k, kp] = np.trace(rho @ ops[kp][1] @ ops[k][0])
    return ReducedState(r, alpha) if check else ReducedState.unchecked(r, alpha)


def top_population(rho, spec: FockSpec) -> float:
    """Largest population sitting in the cutoff level of any mode."""
    p = np.real(np.diagonal(rho))
    return max(float(np.sum(p[mask])) for mask in spec.top_projectors)


def evolve_master(rho0, g: GeneratorSpec, spec: FockSpec, cfg: SimulationConfig):
    """Fixed-step RK4 on rho. Returns ``(times, rhos)`` at the recorded steps.

    Warns with CutoffWarning if any recorded state puts more than
    ``spec.overflow_tol`` population in a top Fock level.
    """
    terms = _MasterTerms.build(g, spec)
    f = terms.rhs
    dt = cfg.dt
    idx = _record_indices(cfg.n_steps, cfg.output_stride)
    record = set(idx)
    rho = np.asarray(rho0, dtype=complex)
    rhos = [rho]
    warned = False
    for k in range(1, cfg.n_steps + 1):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = hermitize(rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        if k in record:
            rhos.append(rho)
            if not warned and top_population(rho, spec) > spec.overflow_tol:
                warnings.warn(
                    f"population {top_population(rho, spec):.2e} at the Fock cutoff {spec.cutoff}",
                    CutoffWarning,
                    stacklevel=2,
                )
                warned = True
    return np.array(idx, dtype=float) * dt, rhos


@dataclass
class ComparisonReport:
    times: np.ndarray
    r_deviation: np.ndarray  # ||r_rsf - r_fock||_F per recorded time
    alpha_deviation: np.ndarray
    trace_drift: float
    min_eigenvalue: float
    max_top_population: float
    tolerance: float
    final_rsf: ReducedState = field(repr=False)
    final_fock: ReducedState = field(repr=False)

    @property
    def max_r_deviation(self) -> float:
        return float(np.max(self.r_deviation))

    @property
    def max_alpha_deviation(self) -> float:
        return float(np.max(self.alpha_deviation))

    @property
    def passed(self) -> bool:
        return max(self.max_r_deviation, self.max_alpha_deviation) <= self.tolerance

    def format(self) -> str:
        lines = [
            f"samples                 {len(self.times)}",
            f"t_final                 {self.times[-1]:.6g}",
            f"max ||r_rsf - r_fock||  {self.max_r_deviation:.3e}",
            f"max |alpha_rsf - alpha_fock|  {self.max_alpha_deviation:.3e}",
            f"trace drift of rho      {self.trace_drift:.3e}",
            f"min eigenvalue of rho   {self.min_eigenvalue:.3e}",
            f"max top-level population  {self.max_top_population:.3e}",
            f"tolerance               {self.tolerance:.1e}",
            f"result                  {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines)


def compare_trajectories(g: GeneratorSpec, spec: FockSpec, cfg: SimulationConfig,
                         tolerance: float = 1e-4) -> ComparisonReport:
    """Run the reduced and the Fock-space dynamics from the vacuum side by side.

    Raises CutoffOverflowError if the Fock run pushes more than
    ``spec.overflow_tol`` population into a cutoff level, since the
    comparison is meaningless then.
    """
    traj = evolve(ReducedState.vacuum(g.n_modes), g, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CutoffWarning)
        times, rhos = evolve_master(vacuum(spec), g, spec, cfg)
    top = max(top_population(rho, spec) for rho in rhos)
    if top > spec.overflow_tol:
        raise CutoffOverflowError(
            f"population {top:.2e} reached the Fock cutoff {spec.cutoff}; raise the cutoff "
            f"or weaken the drive"
        )
    reduced = [reduce(rho, spec, check=False) for rho in rhos]
    dr = np.array([np.linalg.norm(s.r - f.r) for s, f in zip(traj.states, reduced)])
    da = np.array([np.linalg.norm(s.alpha - f.alpha) for s, f in zip(traj.states, reduced)])
    drift = max(abs(np.trace(rho).real - 1.0) for rho in rhos)
    min_eig = min(float(np.linalg.eigvalsh(rho)[0]) for rho in rhos)
    return ComparisonReport(times, dr, da, drift, min_eig, top, tolerance, traj.final, reduced[-1])
