"""Generator of the (r, alpha) dynamics.

Four channels: free evolution under h, a coherent source zeta, a bath with
absorption/emission rate matrices gamma_up/gamma_down, and random
scattering by a finite weighted mixture of single-particle unitaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .core import ModeSet, ReducedState
from .numkernel import DimensionError, eig_hermitian, is_hermitian

__all__ = [
    "UNITARY_TOL",
    "bose_occupation",
    "ThermalBath",
    "GeneralBath",
    "ScatteringSpec",
    "GeneratorSpec",
    "rhs_r",
    "rhs_alpha",
    "rhs_correlation",
]

UNITARY_TOL = 1e-10


def bose_occupation(x):
    """``1 / (e^x - 1)``, written so that large x underflows to 0 quietly."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x) / -np.expm1(-x)


@dataclass(frozen=True)
class ThermalBath:
    """Diagonal bath at inverse temperature ``beta``.

    ``gamma_down`` holds the emission rate of each mode; absorption rates
    follow from detailed balance, ``gamma_up = gamma_down * exp(-beta*hbar*omega)``.
    """

    beta: float
    gamma_down: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma_down, dtype=float)).copy()
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("gamma_down rates must be finite and >= 0")
        g.setflags(write=False)
        object.__setattr__(self, "gamma_down", g)

    def boltzmann(self, modes: ModeSet) -> np.ndarray:
        return np.exp(-self.beta * modes.energies)

    def partition(self, modes: ModeSet) -> np.ndarray:
        """Single-mode partition functions ``Z_k = 1 / (1 - exp(-beta hbar omega_k))``."""
        return -1.0 / np.expm1(-self.beta * modes.energies)

    def occupations(self, modes: ModeSet) -> np.ndarray:
        """Bose-Einstein occupations ``1 / (exp(beta hbar omega) - 1)``."""
        return bose_occupation(self.beta * modes.energies)

    def damping(self, modes: ModeSet) -> np.ndarray:
        """Net amplitude damping rate ``Gamma_down / Z`` of each mode."""
        return self.gamma_down / self.partition(modes)

    def rates(self, modes: ModeSet) -> tuple[np.ndarray, np.ndarray]:
        if self.gamma_down.size != modes.n_modes:
            raise DimensionError(
                f"bath has {self.gamma_down.size} rates for {modes.n_modes} modes"
            )
        up = self.gamma_down * self.boltzmann(modes)
        return np.diag(up).astype(complex), np.diag(self.gamma_down).astype(complex)


@dataclass(frozen=True)
class GeneralBath:
    """Arbitrary Hermitian PSD rate matrices."""

    gamma_up: np.ndarray
    gamma_down: np.ndarray

    def __post_init__(self):
        for name in ("gamma_up", "gamma_down"):
            m = np.atleast_2d(np.asarray(getattr(self, name), dtype=complex)).copy()
            if m.shape[0] != m.shape[1]:
                raise DimensionError(f"{name} must be square, got {m.shape}")
            if not is_hermitian(m):
                raise ValueError(f"{name} must be Hermitian")
            if eig_hermitian(m).values[0] < -1e-12:
                raise ValueError(f"{name} must be positive semi-definite")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        if self.gamma_up.shape != self.gamma_down.shape:
            raise DimensionError("gamma_up and gamma_down must have the same shape")

    def rates(self, modes: ModeSet) -> tuple[np.ndarray, np.ndarray]:
        if self.gamma_up.shape[0] != modes.n_modes:
            raise DimensionError(
                f"bath matrices are {self.gamma_up.shape[0]}-dimensional, "
                f"mode set has {modes.n_modes} modes"
            )
        return np.array(self.gamma_up), np.array(self.gamma_down)


@dataclass(frozen=True)
class ScatteringSpec:
    """Discrete scattering measure: ``sum_j w_j delta(u - u_j)``."""

    weights: tuple = ()
    unitaries: tuple = ()

    def __post_init__(self):
        ws = tuple(float(w) for w in self.weights)
        us = []
        if len(ws) != len(self.unitaries):
            raise ValueError("weights and unitaries must have the same length")
        for j, (w, u) in enumerate(zip(ws, self.unitaries)):
            if not (np.isfinite(w) and w >= 0):
                raise ValueError(f"scattering weight {j} must be >= 0, got {w}")
            u = np.atleast_2d(np.asarray(u, dtype=complex)).copy()
            if u.shape[0] != u.shape[1]:
                raise DimensionError(f"scattering unitary {j} must be square")
            err = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
            if err > UNITARY_TOL:
                raise ValueError(f"scattering matrix {j} is not unitary (||u^dagger u - I|| = {err:.2e})")
            u.setflags(write=False)
            us.append(u)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "unitaries", tuple(us))

    @classmethod
    def from_channels(cls, channels: Sequence[tuple[float, np.ndarray]]) -> "ScatteringSpec":
        channels = list(channels)
        return cls(tuple(w for w, _ in channels), tuple(u for _, u in channels))

    @property
    def channels(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.weights, self.unitaries))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total_rate(self) -> float:
        return float(sum(self.weights))


@dataclass(frozen=True)
class GeneratorSpec:
    modes: ModeSet
    zeta: Optional[np.ndarray] = None
    bath: Optional[ThermalBath | GeneralBath] = None
    scattering: ScatteringSpec = field(default_factory=ScatteringSpec)

    def __post_init__(self):
        n = self.modes.n_modes
        z = np.zeros(n, dtype=complex) if self.zeta is None else np.atleast_1d(
            np.asarray(self.zeta, dtype=complex)).copy()
        if z.shape != (n,):
            raise DimensionError(f"zeta has {z.size} entries for {n} modes")
        z.setflags(write=False)
        object.__setattr__(self, "zeta", z)
        if self.bath is not None:
            self.bath.rates(self.modes)  # dimension check
        for j, u in enumerate(self.scattering.unitaries):
            if u.shape != (n, n):
                raise DimensionError(f"scattering unitary {j} has shape {u.shape}, expected {(n, n)}")

    @property
    def n_modes(self) -> int:
        return self.modes.n_modes

    @cached_property
    def _rates(self) -> tuple[np.ndarray, np.ndarray]:
        if self.bath is None:
            z = np.zeros((self.n_modes, self.n_modes), dtype=complex)
            return z, z.copy()
        return self.bath.rates(self.modes)

    @property
    def gamma_up(self) -> np.ndarray:
        return self._rates[0]

    @property
    def gamma_down(self) -> np.ndarray:
        return self._rates[1]

    @property
    def is_thermal(self) -> bool:
        return isinstance(self.bath, ThermalBath)

    @property
    def beta(self) -> Optional[float]:
        return self.bath.beta if self.is_thermal else None

    def with_zeta(self, zeta) -> "GeneratorSpec":
        return GeneratorSpec(self.modes, zeta, self.bath, self.scattering)

    def fastest_rate(self) -> float:
        """Largest rate in the generator, used by the step-size guard."""
        rates = [float(np.max(self.modes.omega))]
        if self.bath is not None:
            net = self.gamma_up - self.gamma_down
            rates.append(float(np.max(np.abs(eig_hermitian(net).values))))
            if self.is_thermal:
                rates.append(float(np.max(self.bath.damping(self.modes))))
        rates.append(self.scattering.total_rate)
        return max(rates)


def _check(s: ReducedState, g: GeneratorSpec) -> None:
    if s.n_modes != g.n_modes:
        raise DimensionError(f"state has {s.n_modes} modes, generator has {g.n_modes}")


def _commutator_h(omega: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``-(i/hbar)[h, m]`` for diagonal h."""
    return -1j * (omega[:, None] - omega[None, :]) * m


def _rhs_r(r, alpha, g: GeneratorSpec) -> np.ndarray:
    net = g.gamma_up - g.gamma_down
    za = np.outer(g.zeta, alpha.conj())
    out = _commutator_h(g.modes.omega, r) + za + za.conj().T
    out = out + 0.5 * (net @ r + r @ net) + g.gamma_up
    for w, u in g.scattering.channels:
        out = out + w * (u @ r @ u.conj().T - r)
    return out


def _rhs_alpha(r, alpha, g: GeneratorSpec) -> np.ndarray:
    net = g.gamma_up - g.gamma_down
    out = -1j * g.modes.omega * alpha + g.zeta + 0.5 * (net @ alpha)
    for w, u in g.scattering.channels:
        out = out + w * (u @ alpha - alpha)
    return out


def _rhs_corr(c, alpha, g: GeneratorSpec) -> np.ndarray:
    net = g.gamma_up - g.gamma_down
    out = _commutator_h(g.modes.omega, c) + 0.5 * (net @ c + c @ net) + g.gamma_up
    for w, u in g.scattering.channels:
        d = u @ alpha - alpha
        out = out + w * (u @ c @ u.conj().T - c) + w * np.outer(d, d.conj())
    return out


def rhs_r(s: ReducedState, g: GeneratorSpec) -> np.ndarray:
    """Time derivative of r."""
    _check(s, g)
    return _rhs_r(s.r, s.alpha, g)


def rhs_alpha(s: ReducedState, g: GeneratorSpec) -> np.ndarray:
    """Time derivative of alpha."""
    _check(s, g)
    return _rhs_alpha(s.r, s.alpha, g)


def rhs_correlation(s: ReducedState, g: GeneratorSpec) -> np.ndarray:
    """Time derivative of the correlation matrix. The drive never enters."""
    _check(s, g)
    return _rhs_corr(s.corr, s.alpha, g)
