"""Random draws and small utilities shared by the test modules."""
from __future__ import annotations

import numpy as np

from rsfield import GeneratorSpec, ModeSet, ReducedState, ScatteringSpec, ThermalBath

# acceptance lines collected during the run, printed by conftest
ACCEPTANCE: list[str] = []


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None, scale: float = 1.0) -> np.ndarray:
    k = n if rank is None else rank
    g = (rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))) * np.sqrt(scale / max(k, 1))
    return g @ g.conj().T


def random_state(n: int, rng: np.random.Generator, scale: float = 0.5) -> ReducedState:
    alpha = scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return ReducedState.from_correlation(random_psd(n, rng, scale=scale), alpha)


def beam_splitter(theta: float, phase: float = 0.0) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -np.exp(-1j * phase) * s], [np.exp(1j * phase) * s, c]])


def random_generator(n: int, rng: np.random.Generator, drive=True, bath=True, scattering=0) -> GeneratorSpec:
    modes = ModeSet(rng.uniform(0.5, 2.0, n))
    zeta = 0.3 * (rng.normal(size=n) + 1j * rng.normal(size=n)) if drive else None
    b = ThermalBath(rng.uniform(0.5, 3.0), rng.uniform(0.05, 0.5, n)) if bath else None
    sc = ScatteringSpec.from_channels([(rng.uniform(0.01, 0.3), random_unitary(n, rng)) for _ in range(scattering)])
    return GeneratorSpec(modes, zeta, b, sc)


def record(number: int, title: str, passed: bool, detail: str, seconds: float) -> None:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number} [{status}] {title}: {detail} ({seconds:.2f} s)"
    ACCEPTANCE.append(line)
    print(line)
