import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakfree.errors import NoBranch, ZeroCoupling, ZeroEpsQ, ZetaNotOne
from leakfree.linalg3 import unitary_distance
from leakfree.synth import (
    Circuit,
    PulseKind,
    PulseStep,
    arbitrary_rotation_circuit,
    bare_x_circuit,
    default_zxz_angles,
    ideal_x_circuit,
    ideal_x_unitary,
    ideal_z_circuit,
    logical_rx,
    logical_zxz,
    propagator,
    solve_x_constraints,
    theta_eff_of,
    theta_for_effective_angle,
    zxz_composite_circuit,
)
import oracles

g_st = st.floats(1.0, 5.0)
delta_st = st.floats(0.05, 1.0)
theta_st = st.floats(0.1, 2 * math.pi - 0.1)


def leak_entries(U):
    return max(abs(U[0, 2]), abs(U[1, 2]), abs(U[2, 0]), abs(U[2, 1]))


@settings(max_examples=200)
@given(g_st, delta_st, theta_st)
def test_x_circuit_is_exact_rotation(g, delta, theta):
    circuit, res = ideal_x_circuit(g, delta, theta)
    U = circuit.unitary()
    assert np.max(np.abs(U - ideal_x_unitary(res.theta_eff))) < 1e-10
    assert leak_entries(U) < 1e-10
    assert res.theta_eff == pytest.approx(-4 * math.pi * g * res.beta2)


@settings(max_examples=100)
@given(g_st, delta_st, theta_st)
def test_x_circuit_against_step_exponentials(g, delta, theta):
    # rebuild the propagator from the schedule with scipy expm
    circuit, res = ideal_x_circuit(g, delta, theta)
    U = np.eye(3, dtype=complex)
    for s in circuit.steps:
        U = oracles.step_unitary(s.duration, g=s.amplitude if s.kind is PulseKind.X_PULSE else 0.0, delta=delta) @ U
    assert np.max(np.abs(U - ideal_x_unitary(res.theta_eff))) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_betas_match_brute_force_operator_matching(seed):
    rng = np.random.default_rng(seed)
    g, delta, theta = rng.uniform(1, 5), rng.uniform(0.05, 1), rng.uniform(0.1, 2 * math.pi - 0.1)
    res = solve_x_constraints(g, delta, theta)
    sols = oracles.brute_force_betas(g, delta, theta)
    assert sols, "oracle found no solution"
    p1 = 2 * math.pi * delta * res.beta1
    p2 = 2 * math.pi * g * res.beta2

    def wrapped(x):
        return abs((x + math.pi) % (2 * math.pi) - math.pi)

    gaps = [max(wrapped(2 * math.pi * delta * b1 - p1), wrapped(2 * math.pi * g * b2 - p2)) for b1, b2 in sols]
    assert min(gaps) < 1e-8


def test_noiseless_limit_is_plain_x_rotation():
    res = solve_x_constraints(3.0, 0.0, 1.0)
    assert res.beta1 == 0.0 and res.phi1 == 0.0
    assert res.theta_eff == pytest.approx(1.0, abs=1e-14)


def test_theta_eff_is_continuous_as_delta_vanishes():
    effs = [theta_eff_of(3.0, d, 1.2) for d in (1e-6, 1e-4, 1e-2)]
    assert all(abs(e - 1.2) < 0.01 for e in effs)


def test_solver_input_errors():
    with pytest.raises(ZeroCoupling):
        solve_x_constraints(0.0, 0.3, 1.0)
    with pytest.raises(ValueError):
        solve_x_constraints(3.0, -0.1, 1.0)
    with pytest.raises(ValueError):
        solve_x_constraints(3.0, 0.3, 7.0)


@settings(max_examples=200)
@given(st.floats(0.2, 5.0), delta_st, st.floats(-10, 10))
def test_z_circuit_is_diagonal(eps_q, delta, phi):
    U = ideal_z_circuit(eps_q, delta, phi).unitary()
    assert np.max(np.abs(U - np.diag(np.diag(U)))) < 1e-12
    logical = U[:2, :2]
    target = np.diag(np.exp(-1j * phi / 2 * np.array([1, -1])))
    assert unitary_distance(np.pad(logical, ((0, 1), (0, 1))), np.pad(target, ((0, 1), (0, 1)))) < 1e-12


def test_z_circuit_guards():
    with pytest.raises(ZetaNotOne):
        ideal_z_circuit(1.0, 0.3, 1.0, zeta=1.5)
    with pytest.raises(ZeroEpsQ):
        ideal_z_circuit(0.0, 0.3, 1.0)
    with pytest.raises(ValueError):
        ideal_z_circuit(1.0, 0.3, 1.0, mode="bogus")


def test_z_duration_mode_leaves_leakage():
    U = ideal_z_circuit(1.0, 0.35, math.pi, mode="duration").unitary()
    assert np.max(np.abs(U - np.diag(np.diag(U)))) > 0.1


def test_step_counts():
    assert len(ideal_x_circuit(3.0, 0.35, 1.5708)[0].steps) == 3
    assert len(ideal_z_circuit(1.0, 0.35, 3.1416).steps) == 2


def test_effective_angle_inversion():
    theta = theta_for_effective_angle(3.0, 0.35, math.pi / 2)
    assert theta_eff_of(3.0, 0.35, theta) == pytest.approx(math.pi / 2, abs=1e-12)
    with pytest.raises(NoBranch):
        theta_for_effective_angle(3.0, 0.0, 0.0)


@pytest.mark.parametrize("angles", [(0.3, 1.1, -0.7), (math.pi, 2.0, math.pi), (1.0, 0.0, 2.0)])
def test_arbitrary_rotation_matches_logical_zxz(angles):
    U = arbitrary_rotation_circuit(angles, 3.0, 1.0, 0.35).unitary()
    assert leak_entries(U) < 1e-10
    full = np.zeros((3, 3), dtype=complex)
    full[:2, :2] = logical_zxz(angles)
    block = np.zeros((3, 3), dtype=complex)
    block[:2, :2] = U[:2, :2]
    assert unitary_distance(block, full) < 1e-10


def test_default_zxz_baseline_is_rx_without_noise():
    theta = math.pi / 2
    U = zxz_composite_circuit(3.0, 1.0, default_zxz_angles(theta), 0.0).unitary()
    block = np.zeros((3, 3), dtype=complex)
    block[:2, :2] = U[:2, :2]
    target = np.zeros((3, 3), dtype=complex)
    target[:2, :2] = logical_rx(theta)
    assert unitary_distance(block, target) < 1e-12


def test_bare_circuit_is_noisy_x_gate():
    c = bare_x_circuit(3.0, 1.0)
    assert np.max(np.abs(c.unitary(0.4) - oracles.step_unitary(c.duration, g=3.0, delta=0.4))) < 1e-12


def test_propagator_general_case():
    ref = oracles.step_unitary(0.3, g=1.0, eps_q=2.0, delta=0.5)
    assert np.max(np.abs(propagator(0.5, 0.3, g=1.0, eps_q=2.0) - ref)) < 1e-12


def test_circuit_json_round_trip():
    circuit, _ = ideal_x_circuit(3.0, 0.35, 1.0)
    doc = json.loads(json.dumps(circuit.to_json()))
    back = Circuit.from_json(doc)
    assert back == circuit
    assert set(doc["steps"][0]) == {"kind", "amplitude_ghz", "duration_ns", "nominal_angle_rad"}


def test_pulse_step_rejects_negative_duration():
    with pytest.raises(ValueError):
        PulseStep(PulseKind.X_PULSE, 1.0, -0.1, 0.0)
    with pytest.raises(ValueError):
        Circuit((), 0.0, "")
