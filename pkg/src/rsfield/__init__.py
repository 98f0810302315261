"""Reduced state of a bosonic field: dynamics, closed-form solutions and
thermodynamic functionals, with a truncated Fock-space cross-check."""
from .core import ModeSet, ReducedState, additive_expectation, correlation_matrix, total_particle_number
from .generators import GeneralBath, GeneratorSpec, ScatteringSpec, ThermalBath, rhs_alpha, rhs_correlation, rhs_r
from .integrator import (
    SimulationConfig,
    Trajectory,
    closed_form_coherent,
    closed_form_free,
    closed_form_thermal,
    evolve,
    steady_state,
    step_rk4,
)
from .thermo import (
    ThermoSample,
    entropy,
    entropy_rate,
    free_energies,
    heat_rate,
    internal_energy,
    steady_entropy_vs_beta,
    thermal_correlation,
)

__version__ = "0.1.0"
