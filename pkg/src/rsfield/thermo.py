"""Thermodynamic functionals of a reduced state.

All of them are functions of the correlation matrix ``c = r - |alpha><alpha|``
and the mode energies. Entropies are returned in units of kB (i.e. they
include the factor ``kB``), energies in units of ``hbar * omega``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import PSD_TOL, ModeSet, ReducedState, StateConsistencyError, total_particle_number
from .generators import GeneratorSpec, ThermalBath, bose_occupation, rhs_correlation
from .numkernel import DomainError, EigenSystem, eig_hermitian, hermitize

__all__ = [
    "ZERO_EIG_TOL",
    "UnsupportedRegimeError",
    "SingularEntropyRateError",
    "ThermoSample",
    "bose_entropy",
    "entropy",
    "internal_energy",
    "heat_rate",
    "entropy_rate",
    "thermal_correlation",
    "equilibrium_free_energy",
    "free_energies",
    "nonequilibrium_trace",
    "steady_entropy_vs_beta",
    "sample",
    "annotate",
]

# eigenvalues of the correlation matrix below this count as zero in the
# entropy rate, and so do derivative components below it
ZERO_EIG_TOL = 1e-12


class UnsupportedRegimeError(ValueError):
    """Heat is only defined here for generators without scattering."""


class SingularEntropyRateError(ArithmeticError):
    """A zero eigenvalue of the correlation matrix has a nonzero derivative."""


@dataclass(frozen=True)
class ThermoSample:
    t: float
    S: float
    U: float
    heat_rate: float
    entropy_rate: float
    F: float
    F_eq: float
    F_neq: float
    N: float
    alpha_norm2: float

    FIELDS = ("t", "S", "U", "heat_rate", "entropy_rate", "F", "F_eq", "F_neq", "N", "alpha_norm2")

    def as_row(self) -> list[float]:
        d = asdict(self)
        return [d[k] for k in self.FIELDS]


def _spectrum(c) -> EigenSystem:
    es = eig_hermitian(hermitize(np.atleast_2d(np.asarray(c, dtype=complex))))
    if es.values[0] < -PSD_TOL:
        raise StateConsistencyError(
            f"correlation matrix is not positive semi-definite (min eigenvalue {es.values[0]:.3e})"
        )
    return EigenSystem(np.clip(es.values, 0.0, None), es.vectors)


def bose_entropy(n):
    """``(n + 1) ln(n + 1) - n ln n`` elementwise, with ``0 ln 0 = 0``."""
    n = np.asarray(n, dtype=float)
    pos = n > 0
    out = np.zeros_like(n)
    x = n[pos]
    # same quantity as (x+1) ln(x+1) - x ln x, without the cancellation at large x
    out[pos] = np.log1p(x) + x * np.log1p(1.0 / x)
    return out


def _log_ratio(lam):
    """``x ln((x + 1) / x)`` elementwise, which vanishes as x -> 0."""
    out = np.zeros_like(lam)
    pos = lam > 0
    out[pos] = lam[pos] * np.log1p(1.0 / lam[pos])
    return out


def entropy(c, kB: float = 1.0) -> float:
    """``kB tr[(c + 1) ln(c + 1) - c ln c]`` of a correlation matrix.

    Eigenvalues in [-1e-9, 0) are clipped to zero; anything more negative
    raises StateConsistencyError.
    """
    return kB * float(np.sum(bose_entropy(_spectrum(c).values)))


def _corr(s: ReducedState) -> np.ndarray:
    return s.corr


def internal_energy(s: ReducedState, m: ModeSet) -> float:
    """``tr[h (r - |alpha><alpha|)]``, the energy held in the correlation matrix."""
    return float(np.sum(m.energies * np.real(np.diagonal(s.corr))))


def heat_rate(s: ReducedState, g: GeneratorSpec) -> float:
    """Heat current from the bath, ``tr[h dc/dt]`` with scattering absent.

    Written out as ``hbar sum_kk' (w_k + w_k')/2 c_kk' (G_up - G_down)^{k'k}
    + hbar sum_k w_k G_up^{kk}``.
    """
    if len(g.scattering):
        raise UnsupportedRegimeError("heat rate is not defined for generators with random scattering")
    c = _corr(s)
    e = g.modes.energies
    net = g.gamma_up - g.gamma_down
    pair = 0.5 * (e[:, None] + e[None, :])
    flow = np.sum(pair * c * net.T)
    spont = np.sum(e * np.real(np.diagonal(g.gamma_up)))
    return float(np.real(flow) + spont)


def entropy_rate(s: ReducedState, g: GeneratorSpec, kB: float = 1.0, strict: bool = False) -> float:
    """``kB tr[(dc/dt) ln((c + 1)/c)]`` evaluated in the eigenbasis of c.

    A zero eigenvalue contributes nothing when its derivative component
    vanishes too. When it does not, the rate is singular: with
    ``strict=True`` SingularEntropyRateError is raised, otherwise +inf (or
    -inf) is returned.
    """
    es = _spectrum(_corr(s))
    dc = rhs_correlation(s, g)
    d = np.real(np.einsum("ji,jk,ki->i", es.vectors.conj(), dc, es.vectors))
    lam = es.values
    zero = lam <= ZERO_EIG_TOL
    singular = zero & (np.abs(d) > ZERO_EIG_TOL)
    if np.any(singular):
        k = int(np.argmax(singular))
        if strict:
            raise SingularEntropyRateError(
                f"eigenvalue {lam[k]:.3e} of the correlation matrix has derivative {d[k]:.3e}"
            )
        return math.copysign(math.inf, float(np.sum(d[singular])))
    live = ~zero
    return kB * float(np.sum(d[live] * np.log1p(1.0 / lam[live])))


def thermal_correlation(beta: float, m: ModeSet) -> np.ndarray:
    """Bose-Einstein correlation matrix ``(exp(beta h) - 1)^{-1}``."""
    if not (beta > 0):
        raise DomainError(f"beta must be > 0, got {beta}")
    return np.diag(bose_occupation(beta * m.energies)).astype(complex)


def _check_beta(beta) -> None:
    if not (beta is not None and math.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be > 0, got {beta}")


def equilibrium_free_energy(beta: float, m: ModeSet) -> float:
    """``-(1/beta) sum_k ln Z_k``."""
    _check_beta(beta)
    return float(np.sum(np.log(-np.expm1(-beta * m.energies))) / beta)


def free_energies(s: ReducedState, beta: float, m: ModeSet) -> tuple[float, float, float]:
    """Return ``(F, F_eq, F_neq)`` at inverse temperature beta.

    ``F = U - S/(kB beta)``; ``F_eq`` is the equilibrium value
    ``-(1/beta) sum ln Z_k`` and ``F_neq = F - F_eq``, which is
    ``(1/beta)`` times the relative entropy of c with respect to the
    Bose-Einstein state, hence nonnegative and zero only at equilibrium.
    """
    _check_beta(beta)
    lam = _spectrum(_corr(s)).values
    U = internal_energy(s, m)
    F = U - float(np.sum(bose_entropy(lam))) / beta
    F_eq = equilibrium_free_energy(beta, m)
    return F, F_eq, F - F_eq


def nonequilibrium_trace(s: ReducedState, beta: float, m: ModeSet) -> float:
    """``tr[c (h - (1/beta) ln((c + 1)/c))]``.

    Equals ``F - (-(1/beta) tr ln(c + 1))``; it coincides with ``F_neq`` from
    :func:`free_energies` whenever ``tr ln(c + 1) = sum ln Z_k``, in
    particular at the Bose-Einstein state where both vanish.
    """
    _check_beta(beta)
    lam = _spectrum(_corr(s)).values
    return internal_energy(s, m) - float(np.sum(_log_ratio(lam))) / beta


def steady_entropy_vs_beta(beta: float, m: ModeSet, kB: float = 1.0) -> float:
    """Entropy of the thermal steady state, ``beta U + tr ln(c + 1)``."""
    _check_beta(beta)
    x = beta * m.energies
    nbar = bose_occupation(x)
    return kB * float(np.sum(x * nbar) - np.sum(np.log(-np.expm1(-x))))


def sample(s: ReducedState, g: GeneratorSpec, t: float = 0.0, kB: float = 1.0,
           beta: Optional[float] = None) -> ThermoSample:
    """Evaluate every functional at one state.

    Free energies use ``beta`` if given, else the bath temperature; they are
    NaN when neither exists. The heat rate is NaN with scattering present.
    """
    m = g.modes
    if beta is None and isinstance(g.bath, ThermalBath):
        beta = g.bath.beta
    S = entropy(_corr(s), kB)
    U = internal_energy(s, m)
    try:
        q = heat_rate(s, g)
    except UnsupportedRegimeError:
        q = math.nan
    sr = entropy_rate(s, g, kB)
    if beta is not None:
        F, F_eq, F_neq = free_energies(s, beta, m)
    else:
        F = F_eq = F_neq = math.nan
    return ThermoSample(
        t=float(t), S=S, U=U, heat_rate=q, entropy_rate=sr, F=F, F_eq=F_eq, F_neq=F_neq,
        N=total_particle_number(s), alpha_norm2=float(np.sum(np.abs(s.alpha) ** 2)),
    )


def annotate(traj, g: GeneratorSpec, kB: float = 1.0, beta: Optional[float] = None):
    """Fill ``traj.samples`` and return the trajectory."""
    traj.samples = [sample(s, g, t, kB, beta) for t, s in zip(traj.times, traj.states)]
    return traj
