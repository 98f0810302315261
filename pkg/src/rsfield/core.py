"""State objects of the reduced description: the mode set, the pair (r, alpha),
and the correlation matrix r - |alpha><alpha|."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .numkernel import DimensionError, eig_hermitian, hermitize

__all__ = [
    "HERMITIAN_TOL",
    "PSD_TOL",
    "StateConsistencyError",
    "ModeSet",
    "ReducedState",
    "correlation_matrix",
    "total_particle_number",
    "additive_expectation",
    "clip_psd",
]

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9


class StateConsistencyError(ValueError):
    """r or r - |alpha><alpha| fails to be positive semi-definite."""


@dataclass(frozen=True)
class ModeSet:
    """Angular frequencies of the field modes; ``h = hbar * diag(omega)``."""

    omega: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.omega, dtype=float)).copy()
        if w.ndim != 1 or w.size < 1:
            raise DimensionError("omega must be a non-empty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError(f"all mode frequencies must be finite and > 0, got {w.tolist()}")
        if not (np.isfinite(self.hbar) and self.hbar > 0):
            raise ValueError("hbar must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    @property
    def n_modes(self) -> int:
        return self.omega.size

    @cached_property
    def h(self) -> np.ndarray:
        """Single-particle Hamiltonian matrix."""
        return np.diag(self.hbar * self.omega).astype(complex)

    @property
    def energies(self) -> np.ndarray:
        return self.hbar * self.omega


def _min_eig(m: np.ndarray) -> float:
    return float(eig_hermitian(m).values[0])


@dataclass(frozen=True, eq=False)
class ReducedState:
    """Mean occupations/coherences ``r`` and mean amplitudes ``alpha``.

    Construction checks Hermiticity of r (1e-10) and positivity of both r
    and r - |alpha><alpha| (eigenvalues >= -1e-9). ``r`` is stored
    hermitized.
    """

    r: np.ndarray
    alpha: np.ndarray
    _checked: bool = field(default=True, repr=False, compare=False)
    # correlation matrix as integrated, when the state was built from one
    _corr: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.r, dtype=complex))
        a = np.atleast_1d(np.asarray(self.alpha, dtype=complex)).ravel()
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise DimensionError(f"r must be square, got shape {r.shape}")
        if a.size != r.shape[0]:
            raise DimensionError(f"alpha has {a.size} entries but r is {r.shape[0]}x{r.shape[0]}")
        if self._checked:
            if not np.all(np.isfinite(r)) or not np.all(np.isfinite(a)):
                raise StateConsistencyError("state contains non-finite entries")
            skew = float(np.max(np.abs(r - r.conj().T)))
            if skew > HERMITIAN_TOL:
                raise StateConsistencyError(f"r is not Hermitian (max |r - r^dagger| = {skew:.3e})")
        r = hermitize(r)
        c = self._corr
        if c is not None:
            c = hermitize(c)
            if c.shape != r.shape:
                raise DimensionError("correlation matrix and r differ in shape")
        else:
            c = hermitize(r - np.outer(a, a.conj()))
        if self._checked:
            # r = c + |alpha><alpha| >= c, so r only needs a look when c fails
            lo = _min_eig(c)
            if lo < -PSD_TOL:
                lo_r = _min_eig(r)
                if lo_r < -PSD_TOL:
                    raise StateConsistencyError(f"r is not positive semi-definite (min eigenvalue {lo_r:.3e})")
                raise StateConsistencyError(
                    f"r - |alpha><alpha| is not positive semi-definite (min eigenvalue {lo:.3e})"
                )
        for arr in (r, a, c):
            arr.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "_corr", c)

    @classmethod
    def unchecked(cls, r, alpha) -> "ReducedState":
        """Build without the positivity checks (r is still hermitized)."""
        return cls(r, alpha, _checked=False)

    @classmethod
    def vacuum(cls, n_modes: int) -> "ReducedState":
        return cls.unchecked(np.zeros((n_modes, n_modes)), np.zeros(n_modes))

    @classmethod
    def coherent(cls, alpha) -> "ReducedState":
        a = np.atleast_1d(np.asarray(alpha, dtype=complex))
        return cls.unchecked(np.outer(a, a.conj()), a)

    @classmethod
    def from_correlation(cls, corr, alpha, check: bool = True) -> "ReducedState":
        """Build from ``c = r - |alpha><alpha|``; ``c`` is kept as given (hermitized)
        rather than recomputed from r."""
        a = np.atleast_1d(np.asarray(alpha, dtype=complex)).ravel()
        c = np.atleast_2d(np.asarray(corr, dtype=complex))
        return cls(c + np.outer(a, a.conj()), a, _checked=check, _corr=c)

    @property
    def n_modes(self) -> int:
        return self.alpha.size

    @property
    def corr(self) -> np.ndarray:
        """Correlation matrix ``r - |alpha><alpha|`` (unclipped)."""
        return self._corr


def clip_psd(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Hermitize and clip eigenvalues in [-1e-9, 0) to zero.

    Raises StateConsistencyError for eigenvalues below -1e-9. Returns the
    hermitized input untouched when it is already PSD.
    """
    m = hermitize(m)
    es = eig_hermitian(m)
    if es.values[0] < -PSD_TOL:
        raise StateConsistencyError(
            f"{what} is not positive semi-definite (min eigenvalue {es.values[0]:.3e})"
        )
    if es.values[0] >= 0.0:
        return m
    lam = np.clip(es.values, 0.0, None)
    return hermitize((es.vectors * lam) @ es.vectors.conj().T)


def correlation_matrix(s: ReducedState) -> np.ndarray:
    """``r - |alpha><alpha|``, checked and clipped to be PSD."""
    return clip_psd(s.corr, "correlation matrix")


def total_particle_number(s: ReducedState) -> float:
    return float(np.real(np.trace(s.r)))


def additive_expectation(s: ReducedState, b) -> float:
    """``tr[r b]`` -- the mean of the additive Fock-space observable built from b."""
    b = np.asarray(b, dtype=complex)
    if b.shape != s.r.shape:
        raise DimensionError(f"observable has shape {b.shape}, state has {s.r.shape}")
    val = np.trace(s.r @ b)
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"tr[r b] has imaginary part {val.imag:.3e}; is b Hermitian?")
    return float(val.real)
