import math

import numpy as np
import pytest
import scipy.constants as const
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from chargegate.analysis import average_gate_fidelity, equal_up_to_phase, wrap_angle
from chargegate.cphase import (
    EPS_STEP2,
    HADAMARD_SPEC,
    U1_EPS2,
    U1_MU23,
    U2_EPS2,
    ConfigurationError,
    GateParams,
    LocalGateSpec,
    analytic_composed,
    analytic_step2,
    analytic_swap1,
    brute_force_params,
    build_cphase_timeline,
    build_step2_timeline,
    compose_local,
    gate_report,
    hadamard,
    local_correction,
    local_phase_unitary,
    one_step_hadamard,
    select_gate_params,
    step2_phases,
    target_unitary,
    time_unit_ps,
    tunnel_unitary,
)
from chargegate.model import LocalControls, basis_index, build_local_hamiltonian, build_total_hamiltonian, ideal_device
from chargegate.propagate import project_qubit_subspace, propagate_timeline
from chargegate.schedule import ControlTimeline, Pulse, pulse_area

NK = [(1, 1), (2, 1), (5, 5), (7, 7)]


def swap_hamiltonian(mu):
    return build_total_hamiltonian(LocalControls(), LocalControls(mu=(0, 0, mu)), ideal_device())


def step2_hamiltonian(n, k):
    mu = GateParams(n, k).mu23_1
    return build_total_hamiltonian(LocalControls(eps=(0, EPS_STEP2, 0), mu=(0, 0, mu)), LocalControls(), ideal_device())


class TestLocalGates:
    def test_phase_unitary(self):
        assert np.allclose(local_phase_unitary(0.0), np.eye(3))
        assert np.allclose(local_phase_unitary(math.pi), np.diag([1, -1, 1]), atol=1e-15)

    def test_phase_from_sampled_pulse(self):
        # unit 1 alone: a smooth eps2 pulse gives a pure phase equal to its area
        tl = ControlTimeline([Pulse(U1_EPS2, 0.5, 4.0, 0.8, tau_s=1.0)], 5.0)
        u = propagate_timeline(tl, None, dt=0.005).unitary
        local = u[np.ix_([0, 3, 6], [0, 3, 6])]
        phi = pulse_area(tl, U1_EPS2, 0.0, 5.0)
        assert np.max(np.abs(local - local_phase_unitary(phi))) < 1e-8

    def test_tunnel_unitary(self):
        assert np.allclose(tunnel_unitary(0.0), np.eye(3))
        expected = np.array([[0, -1j, 0], [-1j, 0, 0], [0, 0, 1]])
        assert np.allclose(tunnel_unitary(math.pi / 2), expected, atol=1e-15)

    def test_tunnel_matches_exponential(self):
        mu, t = 0.7, 0.9
        h = build_local_hamiltonian(LocalControls(mu=(mu, 0, 0)))
        assert np.allclose(tunnel_unitary(mu * t), expm(-1j * h * t), atol=1e-14)

    def test_compose_identity(self):
        assert np.allclose(compose_local(LocalGateSpec(0, 0, 0)), np.eye(3))

    def test_hadamard_entrywise(self):
        u = compose_local(HADAMARD_SPEC)
        assert np.max(np.abs(u[:2, :2] - hadamard())) < 1e-12

    @given(st.floats(-7, 7), st.floats(-7, 7), st.floats(-7, 7))
    def test_compose_structure(self, p1, a, p2):
        u = compose_local(LocalGateSpec(p1, a, p2))
        assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-12)
        assert u[2, 2] == pytest.approx(1.0)
        assert np.allclose(u[2, :2], 0) and np.allclose(u[:2, 2], 0)

    def test_one_step_hadamard(self):
        controls, t = one_step_hadamard(1.0)
        assert t == pytest.approx(math.pi / (2 * math.sqrt(2)))
        assert t == pytest.approx(1.1107, abs=1e-4)
        u = expm(-1j * build_local_hamiltonian(controls) * t)
        assert equal_up_to_phase(u[:2, :2], hadamard()) < 1e-8
        _, t2 = one_step_hadamard(2.0)
        assert t2 == pytest.approx(t / 2)
        with pytest.raises(ValueError):
            one_step_hadamard(0.0)


class TestParameterSolver:
    def test_unconstrained(self):
        p = select_gate_params()
        assert (p.n, p.k) == (1, 1)
        assert p.mu23_1 == pytest.approx(math.sqrt(3) / 4, abs=1e-15)
        assert p.tau2 == pytest.approx(2 * math.pi)

    def test_min_pulse_length(self):
        p = select_gate_params(tau_min=50)
        assert (p.n, p.k) == (5, 5)
        assert p.tau2 == pytest.approx(18 * math.pi)
        assert p.tau1 == pytest.approx(50) and p.tau4 == 50

    def test_min_length_and_rate(self):
        p = select_gate_params(tau_min=50, mu_max=0.1)
        assert (p.n, p.k) == (7, 7)
        assert p.mu23_1 == pytest.approx(math.sqrt(27) / 52, abs=1e-12)
        assert p.tau2 == pytest.approx(26 * math.pi)
        assert p.mu23_2 <= 0.1

    @pytest.mark.parametrize(
        "tau_min, mu_max",
        [(None, None), (50, None), (50, 0.1), (None, 0.1), (None, 0.05), (10, 0.2), (100, 0.3), (None, 1.0), (7, None)],
    )
    def test_brute_force_agrees(self, tau_min, mu_max):
        p = select_gate_params(tau_min, mu_max)
        assert brute_force_params(tau_min, mu_max) == (p.n, p.k)

    @given(st.one_of(st.none(), st.floats(0.5, 150)), st.one_of(st.none(), st.floats(0.02, 2.0)))
    @settings(max_examples=60, deadline=None)
    def test_feasible(self, tau_min, mu_max):
        p = select_gate_params(tau_min, mu_max)
        if tau_min is not None:
            assert p.tau2 >= tau_min - 1e-9
        if mu_max is not None:
            assert p.mu23_1 <= mu_max + 1e-12
        assert 2 * p.n > 2 * p.k - 1

    @pytest.mark.parametrize("tau_min, mu_max", [(0, None), (-1, None), (None, 0), (None, -0.1)])
    def test_rejects(self, tau_min, mu_max):
        with pytest.raises(ConfigurationError):
            select_gate_params(tau_min, mu_max)

    def test_invalid_params(self):
        with pytest.raises(ConfigurationError):
            GateParams(1, 2)
        with pytest.raises(ConfigurationError):
            GateParams(1, 1, mu23_2=0)


class TestTimeline:
    def test_default_durations(self):
        p = GateParams()
        tl = build_cphase_timeline(p)
        assert tl.total_duration == pytest.approx(math.pi / 2 + 2 * math.pi + math.pi / 2 + math.pi / 2)
        assert tl.channel_value(U1_EPS2, math.pi / 2 + 1.0) == EPS_STEP2

    def test_corrected_tunnel_area(self):
        p = GateParams(tau_s=1.0, corrected=True, mu23_2=0.25, tau4=2 * math.pi)
        tl = build_cphase_timeline(p)
        area = pulse_area(tl, U1_MU23, tl.marks["dphi_start"], tl.marks["dphi_end"])
        assert area == pytest.approx(p.mu23_1 * p.tau2, rel=5e-3)

    def test_no_correction_without_rise(self):
        p = GateParams(n=2, k=1, tau_s=0.0, corrected=True)
        tl = build_cphase_timeline(p)
        assert tl.marks["dphi"] == 0.0
        step4 = [x for x in tl.pulses if x.channel == U1_EPS2][-1]
        assert step4.A == pytest.approx(p.ell * math.pi / p.tau4)
        assert [x for x in tl.pulses if x.channel == U2_EPS2][0].A == pytest.approx(math.pi / p.tau4)

    def test_rise_too_long(self):
        with pytest.raises(ConfigurationError):
            build_cphase_timeline(GateParams(tau_s=1.0, corrected=True))

    def test_step2_timeline(self):
        p = GateParams(5, 5)
        tl = build_step2_timeline(p)
        assert tl.total_duration == pytest.approx(p.tau2)


class TestClosedForms:
    def test_target(self):
        t = target_unitary()
        assert np.trace(t) == 2
        assert np.allclose(t @ t, np.eye(4))

    def test_cnot_from_hadamard(self):
        h2 = np.kron(np.eye(2), hadamard())
        cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
        assert np.allclose(h2 @ target_unitary() @ h2, cnot, atol=1e-15)

    @pytest.mark.parametrize("mu", [0.5, 1.0, 2.0])
    def test_swap1_matches_exponential(self, mu):
        oracle = expm(-1j * swap_hamiltonian(mu) * math.pi / (2 * mu))
        assert np.max(np.abs(analytic_swap1(mu) - oracle)) < 1e-10

    def test_swap1_structure(self):
        u = analytic_swap1(0.8)
        w = u[7:9, 7:9]
        assert np.allclose(w, w.T)
        assert np.allclose(w.conj().T @ w, np.eye(2))
        i12, i13 = basis_index("12"), basis_index("13")
        assert abs(u[i13, i12]) ** 2 == pytest.approx(1.0)
        assert abs(u[i12, i13]) ** 2 == pytest.approx(1.0)

    @pytest.mark.parametrize("n, k", NK)
    def test_step2_matches_exponential(self, n, k):
        oracle = expm(-1j * step2_hamiltonian(n, k) * GateParams(n, k).tau2)
        assert np.max(np.abs(analytic_step2(n, k) - oracle)) < 1e-10
        # B = 0: nothing left in |31> or |33>
        assert abs(oracle[basis_index("31"), basis_index("21")]) < 1e-12
        assert abs(oracle[basis_index("33"), basis_index("23")]) < 1e-12

    def test_step2_phases_n1_k1(self):
        a, a2 = step2_phases(1, 1)
        assert a == pytest.approx(1j, abs=1e-15)
        assert a2 == pytest.approx(-1j, abs=1e-15)

    @pytest.mark.parametrize("n, k", NK + [(3, 2), (4, 1)])
    def test_conditional_phases(self, n, k):
        a, a2 = step2_phases(n, k)
        expected = (2 * n - (2 * k - 1)) * math.pi / 2
        assert abs(wrap_angle(np.angle(a) - expected)) < 1e-12
        assert abs(wrap_angle(np.angle(a2) - np.angle(a) - math.pi)) < 1e-12

    def test_composed(self):
        u = analytic_composed(1, 1)
        assert np.allclose(u, np.diag([1, -1, 1j, 1j]), atol=1e-14)
        assert np.allclose(local_correction(1, 1), np.diag([1, -1, -1j, 1j]), atol=1e-14)
        assert np.allclose(local_correction(1, 1) * u, target_unitary(), atol=1e-14)

    @pytest.mark.parametrize("n, k", NK + [(3, 2)])
    def test_composed_corrected_is_cphase(self, n, k):
        assert equal_up_to_phase(local_correction(n, k) @ analytic_composed(n, k), target_unitary()) < 1e-12

    @pytest.mark.parametrize("n, k", [(1, 1), (2, 1), (5, 5)])
    def test_swap_step2_swap_matches_timeline(self, n, k):
        p = GateParams(n, k, mu23_2=0.7)
        tl = build_cphase_timeline(p)
        u = propagate_timeline(tl, ideal_device(), dt=0.01, t_end=tl.marks["step3_end"]).unitary
        s = analytic_swap1(0.7)
        assert np.max(np.abs(u - s @ analytic_step2(n, k) @ s)) < 1e-8


class TestEndToEnd:
    @pytest.mark.parametrize("n, k", [(1, 1), (2, 1), (3, 2), (5, 5), (4, 3)])
    def test_ideal_gate(self, n, k):
        u = propagate_timeline(build_cphase_timeline(GateParams(n, k)), ideal_device()).unitary
        assert equal_up_to_phase(project_qubit_subspace(u), target_unitary()) < 1e-6
        rep = average_gate_fidelity(u)
        assert rep.leakage < 1e-9
        leak = [basis_index(s) for s in ("13", "31", "33", "23", "32")]
        assert np.max(np.abs(u[np.ix_(leak, [0, 1, 3, 4])]) ** 2) < 1e-9


class TestUnits:
    def test_time_unit(self):
        oracle = const.hbar / (0.718e-3 * const.e) * 1e12
        assert time_unit_ps(0.718) == pytest.approx(oracle, rel=1e-9)
        assert time_unit_ps(0.718) == pytest.approx(0.917, abs=1e-3)

    def test_round_trip(self):
        unit = time_unit_ps(0.718)
        for t in (0.1, 2 * math.pi, 206.55):
            assert (t * unit) / unit == pytest.approx(t, rel=1e-12)

    def test_report(self):
        p = select_gate_params(50)
        rep = gate_report(p, 0.718)
        assert rep["gate_time_ps"] == pytest.approx(150 + 18 * math.pi)
        assert rep["gate_time_ps"] == pytest.approx(206.55, abs=0.01)
        assert rep["mu23_1_radps"] == pytest.approx(1.21e11, rel=1e-3)
        assert rep["mu23_1_radps_exact"] == pytest.approx(1.32e11, rel=5e-3)
        with pytest.raises(ValueError):
            time_unit_ps(0)
