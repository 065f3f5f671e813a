"""
===============================================================================
    Program Name: Maximum-Entropy Unit Tests
    Description:  Tests for the relaxed and full maximum-entropy solvers and
                  their agreement with the brute-force grid oracle.

    Created Date: 2024-09-21
    Last Updated: 2024-10-05
    Version:      1.0.1

    License:      GNU General Public License v3.0

    Usage:        pytest test_maxent.py

    Requirements: Python 3.10.12
                  pytest
                  hypothesis
                  numpy
===============================================================================
"""

import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add the src directory to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from entropy import EntropyMeasure
from maxent import (
    MaxEntError,
    MaxEntProblem,
    brute_force_maxent,
    problem_from_state,
    relaxed_coefficients,
    solve_maxent_full,
    solve_maxent_relaxed,
)
from qcore import Basis, CatalyticEntropyError, DensityMatrix


VN = EntropyMeasure.von_neumann()
ALPHA_3 = [[0.5, 0.5, 0.0], [0.25, 0.25, 0.5], [0.25, 0.25, 0.5]]
Q_3 = [0.4, 0.35, 0.25]


@pytest.fixture(scope='module')
def identity_problem():
    return MaxEntProblem([0.7, 0.3], np.eye(2), VN)


@pytest.mark.parametrize("q, alpha", [
    ([0.5, 0.5], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    ([0.5, 0.5], [[0.8, 0.8], [0.0, 1.0]]),
    ([0.7, 0.7], [[1.0, 0.0], [0.0, 1.0]]),
    ([0.5, 0.5], [[0.9, 0.0], [0.0, 1.0]]),
])
def test_problem_validation(q, alpha):
    with pytest.raises(CatalyticEntropyError) as excinfo:
        MaxEntProblem(q, alpha, VN)
    assert excinfo.value.error == MaxEntError.BAD_PROBLEM


def test_generalized_measure_rejected():
    measure = EntropyMeasure.generalized(lambda s: s, lambda x: x - x * x)
    with pytest.raises(CatalyticEntropyError) as excinfo:
        MaxEntProblem([0.5, 0.5], np.eye(2), measure)
    assert excinfo.value.error == MaxEntError.BAD_MEASURE


@pytest.mark.parametrize("measure", [VN, EntropyMeasure.renyi(2.0), EntropyMeasure.tsallis(0.5)])
def test_full_solver_recovers_fully_determined_distribution(measure):
    problem = MaxEntProblem([0.7, 0.3], np.eye(2), measure)
    solution = solve_maxent_full(problem)
    assert solution.converged
    np.testing.assert_allclose(solution.p.probs, [0.7, 0.3], atol=1e-7)
    assert solution.method == ("gibbs_dual" if measure is VN else "slsqp")


def test_relaxed_solver_on_identity_observation(identity_problem):
    coefficients, target, dropped = relaxed_coefficients(identity_problem)
    np.testing.assert_allclose(coefficients, [1 / 0.7, 1 / 0.3])
    assert target == 2 and dropped == []
    solution = solve_maxent_relaxed(identity_problem)
    assert solution.converged
    np.testing.assert_allclose(solution.p.probs, [0.7, 0.3], atol=1e-9)


def test_inconsistent_observations_are_infeasible():
    problem = MaxEntProblem(Q_3, ALPHA_3, VN)
    with pytest.raises(CatalyticEntropyError) as excinfo:
        solve_maxent_full(problem)
    assert excinfo.value.error == MaxEntError.INFEASIBLE
    assert excinfo.value.details["min_violation"] > 1e-3
    assert len(excinfo.value.details["closest_p"]) == 3


def test_relaxed_solution_of_inconsistent_observations():
    problem = MaxEntProblem(Q_3, ALPHA_3, VN)
    coefficients, target, _ = relaxed_coefficients(problem)
    np.testing.assert_allclose(coefficients, [2.678571428571, 3.339285714286, 3.339285714286], atol=1e-10)
    assert target == 3

    solution = solve_maxent_relaxed(problem)
    assert solution.converged
    # rows 2 and 3 coincide, so the single constraint pins p_1 = 19/37
    np.testing.assert_allclose(solution.p.probs, [19 / 37, 9 / 37, 9 / 37], atol=1e-8)
    assert solution.residuals["relaxed"] < 1e-9

    oracle = brute_force_maxent(problem, relaxed=True)
    assert oracle.method == "grid_oracle"
    assert oracle.objective == pytest.approx(solution.objective, abs=1e-4)


@pytest.mark.parametrize("measure", [EntropyMeasure.renyi(2.0), EntropyMeasure.tsallis(2.0), EntropyMeasure.tsallis(3.0)])
def test_relaxed_solver_power_families(measure):
    problem = MaxEntProblem(Q_3, ALPHA_3, measure)
    solution = solve_maxent_relaxed(problem)
    assert solution.converged
    assert abs(solution.p.probs @ relaxed_coefficients(problem)[0] - 3.0) < 1e-8
    np.testing.assert_allclose(solution.p.probs, [19 / 37, 9 / 37, 9 / 37], atol=1e-8)
    oracle = brute_force_maxent(problem, relaxed=True)
    assert oracle.objective == pytest.approx(solution.objective, abs=1e-4)


def test_relaxed_target_outside_family_range():
    # for exponents below one the positive-base family only reaches p_1 < 0.44 here
    problem = MaxEntProblem(Q_3, ALPHA_3, EntropyMeasure.renyi(0.5))
    with pytest.raises(CatalyticEntropyError) as excinfo:
        solve_maxent_relaxed(problem)
    assert excinfo.value.error == MaxEntError.NO_BRACKET


def test_full_solver_with_lost_outcome():
    # three latent levels, only two outcomes observed
    alpha = [[0.6, 0.2], [0.1, 0.7], [0.3, 0.3]]
    q = [0.3, 0.4]
    problem = MaxEntProblem(q, alpha, VN)
    solution = solve_maxent_full(problem)
    assert solution.converged
    assert problem.constraint_residual(solution.p.probs) < 1e-8
    # two observed outcomes plus normalization pin all three weights
    np.testing.assert_allclose(solution.p.probs, [0.2, 0.3, 0.5], atol=1e-7)
    oracle = brute_force_maxent(problem)
    assert oracle.objective == pytest.approx(solution.objective, abs=1e-4)


def test_observation_in_unbiased_basis_gives_uniform_estimate():
    rho = DensityMatrix(np.diag([0.75, 0.25]).astype(complex))
    hadamard = Basis(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0))
    problem = problem_from_state(rho, hadamard, VN)
    np.testing.assert_allclose(problem.alpha, np.full((2, 2), 0.5), atol=1e-12)
    solution = solve_maxent_full(problem)
    np.testing.assert_allclose(solution.p.probs, [0.5, 0.5], atol=1e-9)
    assert solution.objective == pytest.approx(1.0)


def test_oracle_refuses_large_problems():
    problem = MaxEntProblem(np.full(5, 0.2), np.eye(5), VN)
    with pytest.raises(CatalyticEntropyError) as excinfo:
        brute_force_maxent(problem)
    assert excinfo.value.error == MaxEntError.TOO_LARGE


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=3, max_size=3),
       st.integers(min_value=0, max_value=1000))
def test_full_solution_is_feasible_and_beats_random_feasible_points(weights, seed):
    rng = np.random.default_rng(seed)
    alpha = rng.dirichlet(np.ones(2), size=3)
    p_true = np.asarray(weights) / np.sum(weights)
    q = alpha.T @ p_true
    problem = MaxEntProblem(q, alpha, VN)
    solution = solve_maxent_full(problem)
    assert problem.constraint_residual(solution.p.probs) < 1e-7
    # the generating distribution is feasible, so it cannot score higher
    entropy_true = -sum(x * math.log2(x) for x in p_true)
    assert solution.objective >= entropy_true - 1e-7
