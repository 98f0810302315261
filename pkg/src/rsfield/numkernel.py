"""Dense Hermitian linear algebra for small matrices.

Everything here works on plain ``numpy`` arrays. Mode counts are small
(tens at most), so matrices are stored densely and the eigensolver is a
Jacobi iteration written out in full rather than a LAPACK call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DimensionError",
    "ConvergenceError",
    "DomainError",
    "EigenSystem",
    "hermitize",
    "is_hermitian",
    "eig_hermitian",
    "matrix_function",
    "xlogx",
]

OFF_DIAGONAL_TOL = 1e-13
MAX_SWEEPS = 60


class DimensionError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray  # real, ascending
    vectors: np.ndarray  # unitary, eigenvectors in columns

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def _as_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionError("matrix dimension must be at least 1")
    return a


def hermitize(m) -> np.ndarray:
    """Return the Hermitian part ``(M + M^dagger) / 2`` of a square matrix."""
    a = _as_square(m)
    return 0.5 * (a + a.conj().T)


def is_hermitian(m, tol: float = 1e-10) -> bool:
    a = _as_square(m)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: n-1 rounds (n even) of n/2 disjoint index pairs
    that together visit every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


_SCHEDULES: dict[int, list] = {}


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diagonal(a))
    return float(np.linalg.norm(off))


def eig_hermitian(h, tol: float = OFF_DIAGONAL_TOL, max_sweeps: int = MAX_SWEEPS) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix by complex Jacobi rotations.

    Sweeps follow a round-robin ordering: each round annihilates n/2
    disjoint off-diagonal entries at once with one block rotation. Sweeping
    stops once the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||H||_F)``.

    Raises ConvergenceError if ``max_sweeps`` is exhausted.
    """
    a = _as_square(h)
    if not is_hermitian(a, 1e-10 * max(1.0, float(np.linalg.norm(a)))):
        raise DomainError("eig_hermitian requires a Hermitian matrix")
    a = hermitize(a)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return EigenSystem(np.real(np.diagonal(a)).copy(), v)

    schedule = _SCHEDULES.get(n)
    if schedule is None:
        schedule = _SCHEDULES[n] = _round_robin(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    off = _off_norm(a)
    sweeps = 0
    while off > threshold:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi iteration did not converge after {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e}, threshold {threshold:.3e}, dim {n})"
            )
        for p, q in schedule:
            apq = a[p, q]
            g = np.abs(apq)
            live = g > 1e-300
            if not np.any(live):
                continue
            safe_g = np.where(live, g, 1.0)
            phase = np.where(live, apq / safe_g, 1.0)
            app = a[p, p].real
            aqq = a[q, q].real
            zeta = (aqq - app) / (2.0 * safe_g)
            sign = np.where(zeta >= 0.0, 1.0, -1.0)
            az = np.abs(zeta)
            # hypot avoids overflow of zeta**2 when the pivot is tiny
            t = np.where(live, sign / (az + np.hypot(1.0, az)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            pc = phase.conj()

            j = np.eye(n, dtype=complex)
            j[p, p] = c
            j[p, q] = s
            j[q, p] = -s * pc
            j[q, q] = c * pc
            a = j.conj().T @ a @ j
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ j
        a = hermitize(a)
        off = _off_norm(a)
        sweeps += 1

    values = np.real(np.diagonal(a))
    order = np.argsort(values, kind="stable")
    return EigenSystem(values[order].copy(), v[:, order].copy())


def matrix_function(h, f: Callable, eig: EigenSystem | None = None) -> np.ndarray:
    """Apply a real scalar function to a Hermitian matrix, ``V f(Lambda) V^dagger``.

    ``f`` is called once on the array of eigenvalues and may be any numpy
    ufunc or vectorised callable. A NaN or infinite result is reported as a
    DomainError naming the offending eigenvalue. Limits at special points
    (e.g. ``x log x`` at 0) are the caller's business.
    """
    es = eig if eig is not None else eig_hermitian(h)
    lam = es.values
    with np.errstate(all="ignore"):
        try:
            fl = np.asarray(f(lam), dtype=float)
        except (ValueError, ZeroDivisionError, OverflowError):
            fl = np.array([_scalar(f, x) for x in lam])
    if fl.shape != lam.shape:
        fl = np.broadcast_to(fl, lam.shape).astype(float)
    bad = ~np.isfinite(fl)
    if np.any(bad):
        raise DomainError(f"function undefined at eigenvalue {lam[bad][0]!r}")
    return (es.vectors * fl) @ es.vectors.conj().T


def _scalar(f, x) -> float:
    try:
        return float(f(x))
    except (ValueError, ZeroDivisionError, OverflowError):
        return float("nan")


def xlogx(x):
    """``x log x`` extended continuously by 0 at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    out[x < 0] = np.nan
    return out
