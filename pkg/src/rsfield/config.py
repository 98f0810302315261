"""Scenario files.

A scenario is a YAML document::

    scenario: thermal            # free | coherent | thermal | custom
    modes:
      omega: [1.0, 2.0]          # optional `count:` must match
    zeta: [[0.1, 0.0], 0.05]     # complex entries as [re, im] or plain numbers
    bath:
      type: thermal              # or `general` with gamma_up / gamma_down matrices
      beta: 1.0
      gamma_down: [0.2, 0.3]
    scattering:
      - weight: 0.1
        unitary: [[[0.6, 0], [-0.8, 0]], [[0.8, 0], [0.6, 0]]]
    initial: vacuum              # vacuum | thermal | {r: matrix, alpha: vector}
    simulation: {dt: 0.01, t_final: 20, output_stride: 10, hbar: 1, kB: 1}
    fock: {cutoff: 10, tolerance: 1.0e-4}   # oracle-compare only

Matrices are lists of rows (or a flat row-major list). Every validation
error carries the line of the offending entry.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .core import ModeSet, ReducedState, StateConsistencyError
from .fock import FockSpec
from .generators import GeneralBath, GeneratorSpec, ScatteringSpec, ThermalBath
from .integrator import SimulationConfig
from .numkernel import DimensionError
from .thermo import thermal_correlation

__all__ = ["ConfigError", "Scenario", "load_scenario", "parse_scenario"]

SCENARIOS = ("free", "coherent", "thermal", "custom")
TOP_KEYS = {"scenario", "modes", "zeta", "bath", "scattering", "initial", "simulation", "fock"}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>", key: str = ""):
        self.message = message
        self.line = line
        self.source = source
        self.key = key
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {key + ': ' if key else ''}{message}")


@dataclass(frozen=True)
class Scenario:
    kind: str
    generator: GeneratorSpec
    initial: ReducedState
    initial_kind: str
    simulation: SimulationConfig
    fock: Optional[FockSpec] = None
    fock_tolerance: float = 1e-4
    source: str = "<config>"


def _line_map(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_map(v, path + (k.value,), out)
            out[path + (k.value,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


class _Reader:
    def __init__(self, data: dict, lines: dict, source: str):
        self.data = data
        self.lines = lines
        self.source = source

    def error(self, path: tuple, message: str) -> ConfigError:
        p = tuple(path)
        while p and p not in self.lines:
            p = p[:-1]
        key = ".".join(str(x) for x in path)
        return ConfigError(message, self.lines.get(p), self.source, key)

    def get(self, path: tuple, default: Any = KeyError):
        cur: Any = self.data
        for i, k in enumerate(path):
            if isinstance(cur, dict) and k in cur:
                cur = cur[k]
            elif isinstance(cur, list) and isinstance(k, int) and k < len(cur):
                cur = cur[k]
            else:
                if default is KeyError:
                    raise self.error(path[: i + 1], "missing required entry")
                return default
        return cur

    def number(self, path, default: Any = KeyError, positive=False, nonneg=False) -> float:
        v = self.get(path, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.error(path, f"expected a number, got {v!r}")
        v = float(v)
        if not np.isfinite(v):
            raise self.error(path, "must be finite")
        if positive and v <= 0:
            raise self.error(path, f"must be > 0, got {v}")
        if nonneg and v < 0:
            raise self.error(path, f"must be >= 0, got {v}")
        return v

    def integer(self, path, default: Any = KeyError, minimum=1) -> int:
        v = self.get(path, default)
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
            raise self.error(path, f"expected an integer >= {minimum}, got {v!r}")
        return v

    def complex_entry(self, path, v) -> complex:
        if isinstance(v, bool):
            raise self.error(path, f"expected a number or [re, im], got {v!r}")
        if isinstance(v, (int, float)):
            return complex(float(v), 0.0)
        if (isinstance(v, list) and len(v) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            return complex(float(v[0]), float(v[1]))
        raise self.error(path, f"expected a number or [re, im] pair, got {v!r}")

    def vector(self, path, n: int, default: Any = KeyError, real=False) -> Optional[np.ndarray]:
        v = self.get(path, default)
        if v is None:
            return None
        if not isinstance(v, list) or len(v) != n:
            raise self.error(path, f"expected a list of {n} entries")
        if real:
            return np.array([self.number(path + (i,)) for i in range(n)])
        return np.array([self.complex_entry(path + (i,), x) for i, x in enumerate(v)])

    def matrix(self, path, n: int) -> np.ndarray:
        v = self.get(path)
        if not isinstance(v, list):
            raise self.error(path, f"expected a {n}x{n} matrix")
        if len(v) == n and all(isinstance(row, list) and len(row) == n for row in v):
            rows = [[self.complex_entry(path + (i, j), x) for j, x in enumerate(row)] for i, row in enumerate(v)]
            return np.array(rows, dtype=complex)
        if len(v) == n * n:
            flat = [self.complex_entry(path + (i,), x) for i, x in enumerate(v)]
            return np.array(flat, dtype=complex).reshape(n, n)
        raise self.error(path, f"expected a {n}x{n} matrix (list of rows or flat row-major list)")


def parse_scenario(text: str, source: str = "<config>") -> Scenario:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line, source) from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    rd = _Reader(data, _line_map(node), source)

    for key in data:
        if key not in TOP_KEYS:
            raise rd.error((key,), f"unknown section (expected one of {sorted(TOP_KEYS)})")

    kind = rd.get(("scenario",))
    if kind not in SCENARIOS:
        raise rd.error(("scenario",), f"must be one of {list(SCENARIOS)}, got {kind!r}")

    # simulation first: hbar enters the mode set
    sim_path = ("simulation",)
    try:
        sim = SimulationConfig(
            dt=rd.number(sim_path + ("dt",), positive=True),
            t_final=rd.number(sim_path + ("t_final",), nonneg=True),
            output_stride=rd.integer(sim_path + ("output_stride",), 1),
            hbar=rd.number(sim_path + ("hbar",), 1.0, positive=True),
            kB=rd.number(sim_path + ("kB",), 1.0, positive=True),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise rd.error(sim_path, str(exc)) from exc

    omega_v = rd.get(("modes", "omega"))
    if not isinstance(omega_v, list) or not omega_v:
        raise rd.error(("modes", "omega"), "expected a non-empty list of frequencies")
    n = len(omega_v)
    omega = rd.vector(("modes", "omega"), n, real=True)
    count = rd.get(("modes", "count"), None)
    if count is not None and count != n:
        raise rd.error(("modes", "count"), f"count {count} does not match {n} frequencies")
    for i, w in enumerate(omega):
        if w <= 0:
            raise rd.error(("modes", "omega", i), f"frequencies must be > 0, got {w}")
    modes = ModeSet(omega, hbar=sim.hbar)

    zeta = rd.vector(("zeta",), n, None)

    bath = None
    if rd.get(("bath",), None) is not None:
        btype = rd.get(("bath", "type"), "thermal")
        if btype == "thermal":
            gd = rd.vector(("bath", "gamma_down"), n, real=True)
            for i, x in enumerate(gd):
                if x < 0:
                    raise rd.error(("bath", "gamma_down", i), "rates must be >= 0")
            bath = ThermalBath(rd.number(("bath", "beta"), positive=True), gd)
        elif btype == "general":
            try:
                bath = GeneralBath(rd.matrix(("bath", "gamma_up"), n), rd.matrix(("bath", "gamma_down"), n))
            except (ValueError, DimensionError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise rd.error(("bath",), str(exc)) from exc
        else:
            raise rd.error(("bath", "type"), f"must be 'thermal' or 'general', got {btype!r}")

    channels = []
    scat = rd.get(("scattering",), None) or []
    if not isinstance(scat, list):
        raise rd.error(("scattering",), "expected a list of {weight, unitary} entries")
    for j in range(len(scat)):
        w = rd.number(("scattering", j, "weight"), nonneg=True)
        u = rd.matrix(("scattering", j, "unitary"), n)
        err = np.linalg.norm(u.conj().T @ u - np.eye(n))
        if err > 1e-10:
            raise rd.error(("scattering", j, "unitary"), f"not unitary (||u^dagger u - I|| = {err:.2e})")
        channels.append((w, u))

    if kind == "free":
        if zeta is not None and np.any(zeta != 0):
            raise rd.error(("zeta",), "a 'free' scenario has no drive")
    if kind in ("free", "coherent"):
        if bath is not None:
            raise rd.error(("bath",), f"a '{kind}' scenario has no bath")
    if kind == "thermal" and not isinstance(bath, ThermalBath):
        raise rd.error(("bath",) if bath is not None else ("scenario",), "a 'thermal' scenario needs a thermal bath")
    if kind != "custom" and channels:
        raise rd.error(("scattering",), f"a '{kind}' scenario has no scattering; use 'custom'")

    gen = GeneratorSpec(modes, zeta, bath, ScatteringSpec.from_channels(channels))

    init = rd.get(("initial",), "vacuum")
    if init == "vacuum":
        s0, init_kind = ReducedState.vacuum(n), "vacuum"
    elif init == "thermal":
        if not isinstance(bath, ThermalBath):
            raise rd.error(("initial",), "'thermal' initial state needs a thermal bath")
        s0, init_kind = ReducedState(thermal_correlation(bath.beta, modes), np.zeros(n)), "thermal"
    elif isinstance(init, dict):
        r = rd.matrix(("initial", "r"), n)
        a = rd.vector(("initial", "alpha"), n, None)
        a = np.zeros(n, complex) if a is None else a
        try:
            s0 = ReducedState(r, a)
        except (StateConsistencyError, DimensionError) as exc:
            raise rd.error(("initial",), str(exc)) from exc
        init_kind = "explicit"
    else:
        raise rd.error(("initial",), "expected 'vacuum', 'thermal' or a mapping with r and alpha")

    fock = None
    tol = 1e-4
    if rd.get(("fock",), None) is not None:
        try:
            fock = FockSpec(n, rd.integer(("fock", "cutoff"), 10),
                            rd.number(("fock", "overflow_tol"), 1e-6, positive=True))
        except (ValueError, DimensionError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise rd.error(("fock",), str(exc)) from exc
        tol = rd.number(("fock", "tolerance"), 1e-4, positive=True)

    return Scenario(kind, gen, s0, init_kind, sim, fock, tol, source)


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(p)) from exc
    return parse_scenario(text, str(p))
