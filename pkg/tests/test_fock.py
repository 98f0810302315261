import math
import warnings

import numpy as np
import pytest

from rsfield.core import ModeSet, ReducedState
from rsfield.fock import (
    CutoffOverflowError,
    CutoffWarning,
    FockSpec,
    build_ladder_operators,
    compare_trajectories,
    evolve_master,
    lift_unitary,
    reduce,
    rhs_master,
    vacuum,
)
from rsfield.generators import GeneratorSpec, ScatteringSpec, ThermalBath, rhs_alpha, rhs_r
from rsfield.integrator import SimulationConfig, closed_form_coherent
from rsfield.numkernel import DimensionError

from helpers import beam_splitter, random_unitary

NBAR_BETA2 = 0.15651764274966565  # 1/(e^2 - 1), mpmath


class TestLadder:
    def test_single_mode_matrix(self):
        (a, ad), = build_ladder_operators(FockSpec(1, cutoff=3))
        assert np.allclose(a, np.diag(np.sqrt([1.0, 2.0, 3.0]), k=1))
        assert np.array_equal(ad, a.conj().T)

    def test_truncated_commutator(self):
        (a, ad), = build_ladder_operators(FockSpec(1, cutoff=4))
        comm = a @ ad - ad @ a
        expected = np.eye(5)
        expected[-1, -1] = -4.0
        assert np.allclose(comm, expected)

    def test_modes_commute(self):
        (a0, ad0), (a1, ad1) = FockSpec(2, cutoff=3).ladder
        assert np.allclose(a0 @ a1 - a1 @ a0, 0)
        assert np.allclose(a0 @ ad1 - ad1 @ a0, 0)

    def test_dimension_limit(self):
        with pytest.raises(DimensionError):
            FockSpec(4, cutoff=10)


class TestLift:
    def test_beam_splitter_moves_one_photon(self):
        spec = FockSpec(2, cutoff=2)
        u = beam_splitter(0.3, 0.4)
        U = lift_unitary(u, spec)
        assert np.allclose(U.conj().T @ U, np.eye(spec.dim), atol=1e-12)
        # |1, 0> is the basis state with index 1 * (cutoff + 1) = 3; it goes to u_00 |1,0> + u_10 |0,1>
        psi = U[:, 3]
        assert psi[3] == pytest.approx(u[0, 0], abs=1e-12)
        assert psi[1] == pytest.approx(u[1, 0], abs=1e-12)

    def test_conjugation_of_ladder(self, rng):
        # U^dag a_k U = sum_k' u_kk' a_k' on states below the cutoff
        spec = FockSpec(2, cutoff=4)
        u = random_unitary(2, rng)
        U = lift_unitary(u, spec)
        ops = spec.ladder
        low = np.zeros(spec.dim, dtype=complex)
        low[[0, 1, 5, 6]] = [0.5, 0.5j, -0.5, 0.5]  # n0 + n1 <= 2
        for k in range(2):
            lhs = U.conj().T @ ops[k][0] @ U @ low
            rhs = sum(u[k, kp] * ops[kp][0] @ low for kp in range(2))
            assert np.allclose(lhs, rhs, atol=1e-10)


class TestMasterEquation:
    def test_hamiltonian_leaves_vacuum(self):
        spec = FockSpec(1, cutoff=5)
        assert np.allclose(rhs_master(vacuum(spec), GeneratorSpec(ModeSet([1.3])), spec), 0)

    def test_bath_populates_first_level(self):
        spec = FockSpec(1, cutoff=5)
        g = GeneratorSpec(ModeSet([1.0]), bath=ThermalBath(1.0, [0.2]))
        d = rhs_master(vacuum(spec), g, spec)
        up = g.gamma_up[0, 0].real
        assert d[1, 1].real == pytest.approx(up, abs=1e-15)
        assert d[0, 0].real == pytest.approx(-up, abs=1e-15)

    def test_shape_check(self):
        spec = FockSpec(1, cutoff=3)
        with pytest.raises(DimensionError):
            rhs_master(np.eye(3), GeneratorSpec(ModeSet([1.0])), spec)

    def test_trace_and_positivity(self):
        spec = FockSpec(2, cutoff=6)
        g = GeneratorSpec(ModeSet([1.0, 1.5]), zeta=[0.1, 0.05j], bath=ThermalBath(3.0, [0.3, 0.4]),
                          scattering=ScatteringSpec.from_channels([(0.2, beam_splitter(math.pi / 5))]))
        _, rhos = evolve_master(vacuum(spec), g, spec, SimulationConfig(0.02, 10.0, output_stride=50))
        for rho in rhos:
            assert abs(np.trace(rho).real - 1) < 1e-8
            assert np.linalg.eigvalsh(rho)[0] >= -1e-8

    def test_moments_obey_reduced_equations(self):
        # finite-difference d/dt of the reduced moments against rhs_r / rhs_alpha
        spec = FockSpec(2, cutoff=8)
        g = GeneratorSpec(ModeSet([1.0, 1.4]), zeta=[0.1, -0.05j], bath=ThermalBath(2.5, [0.2, 0.3]),
                          scattering=ScatteringSpec.from_channels([(0.15, beam_splitter(0.5, 0.3))]))
        _, rhos = evolve_master(vacuum(spec), g, spec, SimulationConfig(0.02, 2.0, output_stride=25))
        for rho in rhos[1:]:
            s = reduce(rho, spec)
            # the moments are linear in rho, so this is their exact time derivative
            d = reduce(rhs_master(rho, g, spec), spec, check=False)
            assert np.max(np.abs(d.r - rhs_r(s, g))) < 1e-8
            assert np.max(np.abs(d.alpha - rhs_alpha(s, g))) < 1e-8
        # and a one-sided second-order difference over two short RK4 steps
        h = 1e-3
        _, near = evolve_master(rhos[-1], g, spec, SimulationConfig(h, 2 * h))
        m = [reduce(x, spec, check=False) for x in near]
        s = m[0]
        dr = (-3 * m[0].r + 4 * m[1].r - m[2].r) / (2 * h)
        da = (-3 * m[0].alpha + 4 * m[1].alpha - m[2].alpha) / (2 * h)
        assert np.max(np.abs(dr - rhs_r(s, g))) < 1e-6
        assert np.max(np.abs(da - rhs_alpha(s, g))) < 1e-6


class TestReduce:
    def test_vacuum(self):
        spec = FockSpec(2, cutoff=3)
        s = reduce(vacuum(spec), spec)
        assert np.all(s.r == 0) and np.all(s.alpha == 0)

    def test_single_photon(self):
        spec = FockSpec(1, cutoff=3)
        rho = np.zeros((4, 4), dtype=complex)
        rho[1, 1] = 1
        s = reduce(rho, spec)
        assert s.r[0, 0] == pytest.approx(1.0) and s.alpha[0] == 0

    def test_driven_amplitude(self):
        spec = FockSpec(1, cutoff=10)
        g = GeneratorSpec(ModeSet([1.0]), zeta=[0.1])
        with warnings.catch_warnings():
            warnings.simplefilter("error", CutoffWarning)
            _, rhos = evolve_master(vacuum(spec), g, spec, SimulationConfig(0.01, 3.0, output_stride=300))
        ref = closed_form_coherent(ReducedState.vacuum(1), g.modes, g.zeta, 3.0)
        assert abs(reduce(rhos[-1], spec).alpha[0] - ref.alpha[0]) < 1e-4


class TestComparison:
    def test_hamiltonian_only(self):
        spec = FockSpec(1, cutoff=4)
        rep = compare_trajectories(GeneratorSpec(ModeSet([1.0])), spec, SimulationConfig(0.05, 2.0, output_stride=10))
        assert rep.max_r_deviation == 0 and rep.max_alpha_deviation == 0
        assert np.all(rep.final_rsf.r == 0)

    def test_weak_drive(self):
        spec = FockSpec(1, cutoff=10)
        g = GeneratorSpec(ModeSet([1.0]), zeta=[0.1])
        rep = compare_trajectories(g, spec, SimulationConfig(0.01, 5.0, output_stride=10), tolerance=1e-6)
        assert rep.passed
        assert "PASS" in rep.format()

    def test_thermal_occupation(self):
        spec = FockSpec(1, cutoff=10)
        g = GeneratorSpec(ModeSet([1.0]), bath=ThermalBath(2.0, [0.5]))
        rep = compare_trajectories(g, spec, SimulationConfig(0.01, 20.0, output_stride=100))
        assert abs(rep.final_rsf.r[0, 0].real - NBAR_BETA2) < 1e-4
        assert abs(rep.final_fock.r[0, 0].real - NBAR_BETA2) < 1e-4

    def test_overflow(self):
        spec = FockSpec(1, cutoff=3)
        g = GeneratorSpec(ModeSet([1.0]), zeta=[1.0])
        with pytest.raises(CutoffOverflowError):
            compare_trajectories(g, spec, SimulationConfig(0.01, 3.0, output_stride=50))

    def test_failure_is_reported(self):
        spec = FockSpec(1, cutoff=10)
        g = GeneratorSpec(ModeSet([1.0]), zeta=[0.1])
        rep = compare_trajectories(g, spec, SimulationConfig(0.01, 1.0), tolerance=0.0)
        rep.r_deviation[0] = 1.0  # force a failing sample
        assert not rep.passed and "FAIL" in rep.format()
