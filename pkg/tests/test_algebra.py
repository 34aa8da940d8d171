import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakfree.algebra import (
    M1,
    M2,
    M3,
    AxisAngle,
    EulerAngles,
    Generator,
    commutator,
    euler_from_axis,
    euler_lhs_matrix,
    euler_product,
    euler_relations_residual,
    generator_matrix,
    power_identity_check,
)
from leakfree.errors import NotNormalized
from leakfree.linalg3 import unitary_distance
import oracles


def test_generators_match_displayed_matrices():
    assert np.array_equal(generator_matrix(1), np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]]))
    assert np.array_equal(generator_matrix("M2"), np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]]))
    assert np.array_equal(generator_matrix(Generator.M3), np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]]))


def test_commutators_cyclic_and_exact():
    assert np.array_equal(commutator(M1, M2), 1j * M3)
    assert np.array_equal(commutator(M2, M3), 1j * M1)
    assert np.array_equal(commutator(M3, M1), 1j * M2)


@pytest.mark.parametrize("index", [1, 2, 3])
@pytest.mark.parametrize("n", range(1, 9))
def test_power_identities(index, n):
    assert power_identity_check(index, n)


def test_power_identity_rejects_bad_input():
    with pytest.raises(ValueError):
        power_identity_check(1, 0)
    with pytest.raises(NotNormalized):
        power_identity_check(1, 2, ab=(1.0, 1.0))


def test_squares_are_projectors_onto_coupled_pairs():
    assert np.array_equal(M1 @ M1, np.diag([1, 1, 0]))
    assert np.array_equal(M2 @ M2, np.diag([0, 1, 1]))
    assert np.array_equal(M3 @ M3, np.diag([1, 0, 1]))


@given(st.floats(-7, 7), st.floats(-7, 7), st.floats(-7, 7))
def test_literal_entries_match_product(p1, p2, p3):
    ref = oracles.expm(1j * p1 * oracles.M2) @ oracles.expm(1j * p2 * oracles.M1) @ oracles.expm(1j * p3 * oracles.M2)
    assert np.max(np.abs(euler_lhs_matrix(p1, p2, p3) - ref)) < 1e-12
    assert np.max(np.abs(euler_product(EulerAngles(p1, p2, p3)) - ref)) < 1e-12


@settings(max_examples=300)
@given(st.floats(0.02, math.pi / 2 - 0.02), st.floats(0.05, 2 * math.pi - 0.05), st.booleans(), st.booleans())
def test_euler_solution_reproduces_axis_angle(phi, alpha, neg_a, neg_b):
    a = -math.cos(phi) if neg_a else math.cos(phi)
    b = -math.sin(phi) if neg_b else math.sin(phi)
    ax = AxisAngle(a, b, alpha)
    sol = euler_from_axis(ax)
    assert sol.angles.phi1 == sol.angles.phi3
    assert unitary_distance(euler_product(sol.angles), ax.matrix()) < 1e-10
    assert np.max(np.abs(euler_relations_residual(sol.angles.phi1, sol.angles.phi2, a, b, alpha))) < 1e-10


def test_pure_m1_axis_gives_zero_phi1():
    sol = euler_from_axis(AxisAngle(1.0, 0.0, 0.8))
    assert sol.angles.phi1 == 0.0
    assert sol.angles.phi2 == pytest.approx(0.8)


def test_pure_m2_axis_is_degenerate():
    sol = euler_from_axis(AxisAngle(0.0, 1.0, 1.2))
    assert sol.degenerate
    assert np.max(np.abs(euler_product(sol.angles) - AxisAngle(0.0, 1.0, 1.2).matrix())) < 1e-12


def test_axis_angle_validates_normalization():
    with pytest.raises(NotNormalized):
        AxisAngle(1.0, 0.1, 1.0)


def test_smallest_phi1_branch_is_chosen():
    # The other branch (phi1 + pi, -phi2) also reproduces the rotation.
    ax = AxisAngle(-0.99, -math.sqrt(1 - 0.99**2), 1.3)
    sol = euler_from_axis(ax)
    alt = EulerAngles(sol.angles.phi1 + math.pi, -sol.angles.phi2, sol.angles.phi1 + math.pi)
    assert np.max(np.abs(euler_product(alt) - ax.matrix())) < 1e-12
    assert abs(sol.angles.phi1) < math.pi / 2
