"""
===============================================================================
    Program Name: Transitions Unit Tests
    Description:  Tests for majorization certificates, the Schur-Horn Givens
                  chain and every verified transition construction: noisy,
                  catalytic, truncated-spectrum and probabilistic.

    Created Date: 2024-09-24
    Last Updated: 2024-10-08
    Version:      1.0.2

    License:      GNU General Public License v3.0

    Usage:        pytest test_transitions.py

    Requirements: Python 3.10.12
                  pytest
                  hypothesis
                  numpy
===============================================================================
"""

import itertools
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from loguru import logger

# Add the src directory to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from channels import computational_basis, haar_basis, random_density
from qcore import (
    CatalyticEntropyError,
    DensityMatrix,
    Distribution,
    density_from_vector,
    maximally_mixed,
    partial_trace_array,
    unitarity_residual,
)
from transitions import (
    TransitionError,
    approx_transition_truncated,
    compose_catalytic,
    construct_noisy_transition,
    construct_noisy_transition_d2,
    geometric_stream,
    identity_oracle,
    majorizes,
    noisy_oracle,
    probabilistic_bound,
    probabilistic_conversion,
    schur_horn_rotation,
    search_catalyst,
    thermal_stream,
)


def diagonal_state(*probs):
    return DensityMatrix(np.diag(probs).astype(complex))


def distributions(size):
    return st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=size, max_size=size) \
        .map(lambda w: np.asarray(w) / np.sum(w))


def test_majorization_certificate():
    cert = majorizes([0.9, 0.1], [0.6, 0.4])
    assert cert.holds and cert.first_failure is None
    np.testing.assert_allclose(cert.partial_sum_gaps, [0.3, 0.0], atol=1e-15)

    reverse = majorizes([0.6, 0.4], [0.9, 0.1])
    assert not reverse.holds
    assert reverse.first_failure == 1


def test_majorization_pads_shorter_vector():
    cert = majorizes([1.0], [0.5, 0.5])
    assert cert.holds
    assert cert.to_dict()["p"] == [1.0, 0.0]


def test_schur_horn_two_level_angle():
    w = schur_horn_rotation([0.7, 0.3], [0.5, 0.5]).columns.real
    np.testing.assert_allclose(np.diag(w @ np.diag([0.7, 0.3]) @ w.T), [0.5, 0.5], atol=1e-12)
    assert abs(abs(w[0, 0]) - np.sqrt(0.5)) < 1e-9


def test_schur_horn_three_levels():
    p, q = np.array([0.6, 0.3, 0.1]), np.array([0.4, 0.35, 0.25])
    w = schur_horn_rotation(p, q).columns.real
    assert unitarity_residual(w) < 1e-12
    np.testing.assert_allclose(np.diag(w @ np.diag(p) @ w.T), q, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(distributions(4), st.floats(min_value=0.0, max_value=1.0))
def test_schur_horn_hits_any_majorized_diagonal(p, mix):
    # convex mixtures of permutations of p are majorized by p
    q = mix * p + (1.0 - mix) * p[::-1]
    w = schur_horn_rotation(p, q).columns.real
    np.testing.assert_allclose(np.diag(w @ np.diag(p) @ w.T), q, atol=1e-10)


def test_schur_horn_rejects_non_majorized():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        schur_horn_rotation([0.6, 0.4], [0.9, 0.1])
    assert excinfo.value.error == TransitionError.NOT_MAJORIZED
    assert excinfo.value.details["first_failure"] == 1


@pytest.mark.parametrize("source, target", [
    ((0.9, 0.1), (0.6, 0.4)),
    ((1.0, 0.0), (0.5, 0.5)),
    ((0.6, 0.3, 0.1), (0.4, 0.35, 0.25)),
    ((0.75, 0.25), (0.75, 0.25)),
])
def test_noisy_transition_between_diagonal_states(source, target):
    plan = construct_noisy_transition(diagonal_state(*source), diagonal_state(*target))
    d = len(source)
    assert plan.mode == "noisy"
    assert plan.ancilla_dims == [d]
    assert plan.total_dim == d * d
    assert plan.within(1e-8)
    assert unitarity_residual(plan.global_unitary) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=4))
def test_noisy_transition_to_maximally_mixed_from_random_state(seed, dim):
    rho = random_density(dim, seed)
    plan = construct_noisy_transition(rho, maximally_mixed(dim))
    assert plan.within(1e-8)


def test_noisy_transition_between_rotated_states():
    rho = density_from_vector(np.array([1.0, 1.0j, 0.0]))
    frame = haar_basis(3, 5).columns
    target = DensityMatrix(frame @ np.diag([0.5, 0.3, 0.2]) @ frame.conj().T)
    plan = construct_noisy_transition(rho, target)
    assert plan.residual_target < 1e-8 and plan.residual_marginal < 1e-8


def test_noisy_transition_refuses_non_majorized_target():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        construct_noisy_transition(diagonal_state(0.6, 0.4), diagonal_state(0.9, 0.1))
    assert excinfo.value.error == TransitionError.NOT_MAJORIZED


def test_noisy_transition_dimension_mismatch():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        construct_noisy_transition(maximally_mixed(2), maximally_mixed(3))
    assert excinfo.value.error == TransitionError.DIMENSION_MISMATCH


def test_noisy_transition_with_square_ancilla():
    plan = construct_noisy_transition_d2(diagonal_state(0.9, 0.1), diagonal_state(0.6, 0.4))
    assert plan.mode == "noisy_d2"
    assert plan.ancilla_dims == [4]
    assert plan.total_dim == 8
    assert plan.within(1e-8)


def test_plan_serialization():
    plan = construct_noisy_transition(diagonal_state(0.9, 0.1), diagonal_state(0.6, 0.4))
    data = plan.to_dict()
    assert data["mode"] == "noisy"
    assert "global_unitary" not in data
    assert data["source_spectrum"] == pytest.approx([0.9, 0.1])
    with_unitary = plan.to_dict(emit_unitary=True)
    assert with_unitary["global_unitary"]["dim"] == 4
    assert len(with_unitary["global_unitary"]["re"]) == 4


def test_oracles():
    rho_c = diagonal_state(0.9, 0.1)
    tau, u2 = identity_oracle(rho_c, rho_c)
    assert tau.dim == 1 and np.allclose(u2, np.eye(2))
    tau, u2 = noisy_oracle(rho_c, diagonal_state(0.6, 0.4))
    assert tau.dim == 2 and u2.shape == (4, 4)


def test_catalytic_transition_with_noisy_oracle():
    rho = density_from_vector(np.array([np.sqrt(0.9), np.sqrt(0.1)]))
    J = computational_basis(2)
    target = diagonal_state(0.6, 0.4)
    plan = compose_catalytic(rho, J, target, noisy_oracle)
    assert plan.mode == "catalytic"
    assert plan.ancilla_dims == [2, 2]
    assert plan.total_dim == 8
    assert plan.within(1e-8)
    assert plan.details["preconditions"]["entropy_target"] > plan.details["preconditions"]["entropy_dephased"]


def test_catalytic_transition_with_identity_oracle():
    rho = density_from_vector(np.array([1.0, 1.0]))
    target = maximally_mixed(2)
    plan = compose_catalytic(rho, computational_basis(2), target, identity_oracle)
    assert plan.ancilla_dims == [2, 1]
    assert plan.within(1e-8)


def test_catalytic_transition_rejects_bad_oracle():
    def wrong_oracle(rho_c, rho_target):
        return maximally_mixed(2), np.eye(4, dtype=complex)

    with pytest.raises(CatalyticEntropyError) as excinfo:
        compose_catalytic(diagonal_state(0.9, 0.1), computational_basis(2), diagonal_state(0.6, 0.4), wrong_oracle)
    assert excinfo.value.error == TransitionError.ORACLE_INVALID


def test_search_catalyst_shortcuts():
    rho_c = diagonal_state(0.9, 0.1)
    tau, _ = search_catalyst(rho_c, rho_c, 2)
    assert tau.dim == 1
    tau, u2 = search_catalyst(rho_c, diagonal_state(0.6, 0.4), 2)
    assert tau.dim == 2 and u2.shape == (4, 4)


def test_search_catalyst_stops_on_request():
    rho_c = diagonal_state(0.6, 0.4)
    assert search_catalyst(rho_c, diagonal_state(0.9, 0.1), 3, iteration_budget=50, should_stop=lambda: True) is None


def test_search_catalyst_exhausts_budget_on_unreachable_target():
    # a catalyst with an unchanged dephased marginal cannot lower the entropy
    calls = []
    warnings = []
    handler = logger.add(lambda message: warnings.append(message.record["message"]), level="WARNING")
    try:
        found = search_catalyst(
            diagonal_state(0.6, 0.4), diagonal_state(0.9, 0.1), 4,
            iteration_budget=25, rng_seed=3, should_stop=lambda: calls.append(1) or False
        )
    finally:
        logger.remove(handler)
    assert found is None
    assert len(calls) == 25
    assert any("precondition" in text for text in warnings)


def test_search_catalyst_loop_result_verifies():
    rho_c, target = diagonal_state(0.6, 0.4), diagonal_state(0.4, 0.6)
    calls = []
    found = search_catalyst(rho_c, target, 3, iteration_budget=400, rng_seed=5, should_stop=lambda: calls.append(1) or False)
    assert len(calls) >= 1
    if found is None:
        assert len(calls) == 400
    else:
        tau, u2 = found
        assert tau.dim == 3 and u2.shape == (6, 6)
        assert unitarity_residual(u2) < 1e-8
        evolved = u2 @ np.kron(rho_c.entries, tau.entries) @ u2.conj().T
        np.testing.assert_allclose(partial_trace_array(evolved, (2, 3), [0]), target.entries, atol=1e-5)
        np.testing.assert_allclose(np.real(np.diag(partial_trace_array(evolved, (2, 3), [1]))), tau.diagonal(), atol=1e-5)


def test_search_catalyst_rejects_bad_input():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        search_catalyst(maximally_mixed(2), maximally_mixed(2), 0)
    assert excinfo.value.error == TransitionError.BAD_INPUT


def test_streams():
    head = list(itertools.islice(geometric_stream(0.5), 4))
    assert head == pytest.approx([0.5, 0.25, 0.125, 0.0625])
    thermal = list(itertools.islice(thermal_stream(1.0), 3))
    assert thermal == pytest.approx([0.5, 0.25, 0.125])
    with pytest.raises(CatalyticEntropyError):
        next(geometric_stream(1.0))


def test_truncated_geometric_transition():
    epsilon = 0.01
    plan = approx_transition_truncated(geometric_stream(0.2), geometric_stream(0.5), epsilon)
    truncation = plan.details["truncation"]
    assert plan.mode == "approx"
    assert truncation["tail_source"] < epsilon / 4 and truncation["tail_target"] < epsilon / 4
    assert plan.residual_target < epsilon and plan.residual_marginal < epsilon
    # 0.5^(n+1) < 0.0025 first holds at n = 8
    assert truncation["level"] == 8


def test_truncated_finite_spectra():
    plan = approx_transition_truncated([0.9, 0.1], [0.6, 0.4], 0.05)
    assert plan.details["truncation"]["level"] == 1
    assert plan.details["truncation"]["tail_source"] == pytest.approx(0.0, abs=1e-15)


def test_truncation_rejects_bad_epsilon_and_heavy_tails():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        approx_transition_truncated(geometric_stream(0.5), geometric_stream(0.5), 1.5)
    assert excinfo.value.error == TransitionError.BAD_INPUT

    def half_mass_stream():
        k = 1
        while True:
            yield 1.0 / ((k + 1) * (k + 2))
            k += 1

    with pytest.raises(CatalyticEntropyError) as excinfo:
        approx_transition_truncated(half_mass_stream(), geometric_stream(0.5), 1e-4)
    assert excinfo.value.error == TransitionError.TAIL_NOT_SUMMABLE


@pytest.mark.parametrize("source, target, expected", [
    ((0.6, 0.4), (0.9, 0.1), 0.6 / 0.9),
    ((0.9, 0.1), (0.6, 0.4), 1.0),
    ((0.5, 0.5), (1.0, 0.0), 0.5),
])
def test_probabilistic_bound(source, target, expected):
    assert probabilistic_bound(source, target) == pytest.approx(expected)


def test_probabilistic_conversion_to_purer_state():
    plan = probabilistic_conversion(diagonal_state(0.6, 0.4), diagonal_state(0.9, 0.1))
    assert plan.mode == "probabilistic"
    assert plan.success_probability == pytest.approx(2.0 / 3.0, abs=1e-9)
    assert plan.details["success_measured"] == pytest.approx(plan.success_probability, abs=1e-8)
    assert plan.residual_target < 1e-8
    assert plan.details["padding_levels"] == 1


def test_probabilistic_conversion_of_majorized_pair_is_certain():
    plan = probabilistic_conversion(diagonal_state(0.9, 0.1), diagonal_state(0.6, 0.4))
    assert plan.success_probability == pytest.approx(1.0)


def test_probabilistic_conversion_with_too_few_padding_levels():
    # a pure target from a uniform qutrit needs two padding levels; one level admits no weight at all
    source = diagonal_state(1 / 3, 1 / 3, 1 / 3)
    target = diagonal_state(1.0, 0.0, 0.0)
    full = probabilistic_conversion(source, target)
    assert full.success_probability == pytest.approx(1 / 3, abs=1e-9)
    assert full.details["padding_levels"] == 2

    with pytest.raises(CatalyticEntropyError) as excinfo:
        probabilistic_conversion(source, target, k=1)
    assert excinfo.value.error == TransitionError.NOT_MAJORIZED


def test_distribution_spectra_are_accepted():
    assert majorizes(Distribution([0.9, 0.1]), Distribution([0.5, 0.5])).holds
    partial = partial_trace_array(np.eye(4) / 4, (2, 2), [0])
    np.testing.assert_allclose(partial, np.eye(2) / 2)
