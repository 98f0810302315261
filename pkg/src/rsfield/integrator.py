"""Time evolution of reduced states: fixed-step RK4, closed-form propagators
for the free / driven / thermal regimes, and the thermal steady state."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ModeSet, ReducedState, StateConsistencyError
from .generators import GeneratorSpec, ThermalBath, _rhs_alpha, _rhs_corr, _rhs_r
from .numkernel import hermitize

__all__ = [
    "IntegrationError",
    "NoSteadyStateError",
    "StabilityWarning",
    "SimulationConfig",
    "Trajectory",
    "step_rk4",
    "rk4_propagator",
    "evolve",
    "closed_form_free",
    "closed_form_coherent",
    "closed_form_thermal",
    "complex_frequencies",
    "steady_state",
]

STABILITY_LIMIT = 0.1
# largest mode count for which evolve() builds the dense one-step map
PROPAGATOR_MAX_MODES = 12


class IntegrationError(ArithmeticError):
    pass


class NoSteadyStateError(ValueError):
    pass


class StabilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    dt: float
    t_final: float
    output_stride: int = 1
    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.t_final) and self.t_final >= 0):
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if self.t_final > 0 and self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ValueError("output_stride must be a positive integer")
        if not (self.hbar > 0 and self.kB > 0):
            raise ValueError("hbar and kB must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def check_stability(self, g: GeneratorSpec) -> float:
        """Return ``dt * fastest_rate`` and warn when it exceeds 0.1."""
        x = self.dt * g.fastest_rate()
        if x > STABILITY_LIMIT:
            warnings.warn(
                f"dt * fastest rate = {x:.3g} exceeds {STABILITY_LIMIT}; RK4 results may be inaccurate",
                StabilityWarning,
                stacklevel=3,
            )
        return x


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    samples: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> ReducedState:
        return self.states[-1]


COORDS = ("correlation", "moments")


def _rk4_raw(x, alpha, g: GeneratorSpec, dt: float, rhs_x=_rhs_r):
    k1x, k1a = rhs_x(x, alpha, g), _rhs_alpha(None, alpha, g)
    x2, a2 = x + 0.5 * dt * k1x, alpha + 0.5 * dt * k1a
    k2x, k2a = rhs_x(x2, a2, g), _rhs_alpha(None, a2, g)
    x3, a3 = x + 0.5 * dt * k2x, alpha + 0.5 * dt * k2a
    k3x, k3a = rhs_x(x3, a3, g), _rhs_alpha(None, a3, g)
    x4, a4 = x + dt * k3x, alpha + dt * k3a
    k4x, k4a = rhs_x(x4, a4, g), _rhs_alpha(None, a4, g)
    x_new = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    a_new = alpha + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    return hermitize(x_new), a_new


def _split(s: ReducedState, coords: str):
    """Matrix part of the integration variables and the matching rhs."""
    if coords == "correlation":
        return s.corr, _rhs_corr
    if coords == "moments":
        return s.r, _rhs_r
    raise ValueError(f"coords must be one of {COORDS}, got {coords!r}")


def _join(x, a, coords: str, check: bool = True) -> ReducedState:
    if coords == "correlation":
        return ReducedState.from_correlation(x, a, check=check)
    return ReducedState(x, a) if check else ReducedState.unchecked(x, a)


def step_rk4(s: ReducedState, g: GeneratorSpec, dt: float, coords: str = "correlation") -> ReducedState:
    """One classical RK4 step of the coupled moment equations.

    By default the step advances ``(r - |alpha><alpha|, alpha)``; the
    correlation equation has no drive term, so the correlation matrix
    (and with it the entropy) is unaffected by zeta to the last bit.
    ``coords="moments"`` steps (r, alpha) directly. Both are fourth-order
    discretisations of the same flow. The matrix variable is re-hermitized;
    a result that is not positive semi-definite raises IntegrationError.
    """
    x, rhs = _split(s, coords)
    x, a = _rk4_raw(x, s.alpha, g, dt, rhs)
    try:
        return _join(x, a, coords)
    except StateConsistencyError as exc:
        raise IntegrationError(f"{exc}; try a smaller dt (dt = {dt})") from exc


def _pack(r, alpha) -> np.ndarray:
    return np.concatenate([r.real.ravel(), r.imag.ravel(), alpha.real, alpha.imag])


def _unpack(y, n):
    n2 = n * n
    r = (y[:n2] + 1j * y[n2:2 * n2]).reshape(n, n)
    a = y[2 * n2:2 * n2 + n] + 1j * y[2 * n2 + n:]
    return r, a


def rk4_propagator(g: GeneratorSpec, dt: float, coords: str = "correlation") -> np.ndarray:
    """Augmented real matrix ``[[T, c], [0, 1]]`` of one RK4 step.

    The right-hand side is real-affine in the integration variables, so an
    RK4 step is ``y -> T y + c``. The map is read off the stepper itself by
    probing it on the zero state and on each basis vector. In correlation
    coordinates scattering adds a term quadratic in alpha, so that case is
    refused.
    """
    if not _affine(g, coords):
        raise ValueError("the RK4 step is not affine in correlation coordinates when scattering is present")
    n = g.n_modes
    dim = 2 * n * n + 2 * n
    _, rhs = _split(ReducedState.vacuum(n), coords)
    zr, za = np.zeros((n, n), complex), np.zeros(n, complex)
    c = _pack(*_rk4_raw(zr, za, g, dt, rhs))
    aug = np.zeros((dim + 1, dim + 1))
    eye = np.eye(dim)
    for i in range(dim):
        x, a = _unpack(eye[i], n)
        # hermitize() inside the stepper is linear, so probing stays exact
        aug[:dim, i] = _pack(*_rk4_raw(x, a, g, dt, rhs)) - c
    aug[:dim, dim] = c
    aug[dim, dim] = 1.0
    return aug


def _affine(g: GeneratorSpec, coords: str) -> bool:
    return coords == "moments" or len(g.scattering) == 0


def _apply(aug: np.ndarray, x, a):
    y = _pack(x, a)
    out = aug[:-1, :-1] @ y + aug[:-1, -1]
    return _unpack(out, a.size)


def _record_indices(n_steps: int, stride: int) -> list[int]:
    idx = list(range(0, n_steps + 1, stride))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return idx


def evolve(s0: ReducedState, g: GeneratorSpec, cfg: SimulationConfig, method: str = "auto",
           coords: str = "correlation") -> Trajectory:
    """Fixed-step RK4 from ``s0`` to ``cfg.t_final``.

    States are recorded every ``output_stride`` steps and at the last step.
    ``method="loop"`` calls :func:`step_rk4` step by step (checking
    positivity every step); ``method="propagator"`` applies powers of the
    exact one-step RK4 map and checks positivity at recorded states only.
    ``"auto"`` picks the propagator for up to 12 modes whenever the step is
    affine. ``coords`` is passed on to the stepper.
    """
    if s0.n_modes != g.n_modes:
        raise ValueError("state and generator mode counts differ")
    _split(s0, coords)
    cfg.check_stability(g)
    n_steps = cfg.n_steps
    idx = _record_indices(n_steps, cfg.output_stride)
    times = np.array(idx, dtype=float) * cfg.dt
    if method == "auto":
        use = g.n_modes <= PROPAGATOR_MAX_MODES and _affine(g, coords)
        method = "propagator" if use else "loop"

    states = [s0]
    if method == "loop":
        record = set(idx)
        s = s0
        for k in range(1, n_steps + 1):
            s = step_rk4(s, g, cfg.dt, coords)
            if k in record:
                states.append(s)
    elif method == "propagator":
        step = rk4_propagator(g, cfg.dt, coords)
        cache: dict[int, np.ndarray] = {}
        x, a = _split(s0, coords)[0], s0.alpha
        for prev, k in zip(idx[:-1], idx[1:]):
            m = k - prev
            if m not in cache:
                cache[m] = np.linalg.matrix_power(step, m)
            x, a = _apply(cache[m], x, a)
            x = hermitize(x)
            try:
                states.append(_join(x, a, coords))
            except StateConsistencyError as exc:
                raise IntegrationError(
                    f"state left the physical set at t = {k * cfg.dt:.6g}: {exc}; try a smaller dt"
                ) from exc
    else:
        raise ValueError(f"unknown method {method!r}")
    return Trajectory(times, states)


def _phase_matrix(w, t):
    """``exp(-i (w_k - conj(w_k')) t)`` for complex frequencies w."""
    return np.exp(-1j * (w[:, None] - np.conj(w)[None, :]) * t)


def _driven_alpha(alpha0, zeta, w, t):
    e = np.exp(-1j * w * t)
    return e * alpha0 - 1j * (zeta / w) * (1.0 - e)


def closed_form_free(s0: ReducedState, m: ModeSet, t: float) -> ReducedState:
    """Exact solution without drive, bath or scattering: pure phase rotation."""
    w = m.omega.astype(complex)
    r = _phase_matrix(w, t) * s0.r
    return ReducedState(r, np.exp(-1j * m.omega * t) * s0.alpha)


def closed_form_coherent(s0: ReducedState, m: ModeSet, zeta, t: float) -> ReducedState:
    """Exact solution under a coherent source, no bath or scattering.

    The correlation matrix only rotates, ``r(t) = R(t) o (r0 - a0 a0^dagger) +
    a(t) a(t)^dagger``, with ``a_k(t) = e^{-i w_k t} a_k(0) - i (zeta_k / w_k)(1 - e^{-i w_k t})``.
    """
    zeta = np.asarray(zeta, dtype=complex)
    w = m.omega.astype(complex)
    a = _driven_alpha(s0.alpha, zeta, w, t)
    return ReducedState.from_correlation(_phase_matrix(w, t) * s0.corr, a)


def complex_frequencies(g: GeneratorSpec) -> np.ndarray:
    """``omega_k - i Gamma_down^k / (2 Z_k)`` for a thermal bath."""
    if not isinstance(g.bath, ThermalBath):
        raise ValueError("complex frequencies need a thermal (diagonal) bath")
    return g.modes.omega - 0.5j * g.bath.damping(g.modes)


def _require_thermal(g: GeneratorSpec, what: str) -> None:
    if not isinstance(g.bath, ThermalBath):
        raise ValueError(f"{what} requires a thermal bath")
    if len(g.scattering):
        raise ValueError(f"{what} is only available without scattering")


def closed_form_thermal(s0: ReducedState, g: GeneratorSpec, t: float) -> ReducedState:
    """Exact solution with drive and a diagonal thermal bath.

    Same structure as the driven case with complex frequencies; the
    correlation matrix additionally relaxes towards the Bose-Einstein
    occupations ``n_k = e^{-beta hbar w_k} Z_k`` at rate ``Gamma_down^k / Z_k``.
    """
    _require_thermal(g, "closed_form_thermal")
    w = complex_frequencies(g)
    a = _driven_alpha(s0.alpha, g.zeta, w, t)
    bath = g.bath
    nbar = bath.occupations(g.modes)
    relax = nbar * -np.expm1(-bath.damping(g.modes) * t)
    return ReducedState.from_correlation(_phase_matrix(w, t) * s0.corr + np.diag(relax), a)


def steady_state(g: GeneratorSpec) -> ReducedState:
    """Fixed point of the driven, thermally damped dynamics.

    ``alpha_k = -i zeta_k / w~_k`` and ``r = |alpha><alpha| + diag(n_k)``, so
    the correlation matrix is the Bose-Einstein diagonal whatever the drive.
    """
    _require_thermal(g, "steady_state")
    if np.any(g.bath.gamma_down <= 0):
        k = int(np.argmin(g.bath.gamma_down))
        raise NoSteadyStateError(f"mode {k} has zero damping; no steady state exists")
    w = complex_frequencies(g)
    a = -1j * g.zeta / w
    nbar = g.bath.occupations(g.modes)
    return ReducedState.from_correlation(np.diag(nbar), a)
