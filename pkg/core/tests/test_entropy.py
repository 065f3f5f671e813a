"""
===============================================================================
    Program Name: Entropy Unit Tests
    Description:  Tests for the entropy families, conditional entropies, mutual
                  information, observed joint distributions and the
                  generalized-axiom checker. Reference values for single states
                  are loaded from test_data_mappings.yml.

    Created Date: 2024-09-16
    Last Updated: 2024-10-03
    Version:      1.0.1

    License:      GNU General Public License v3.0

    Usage:        pytest test_entropy.py

    Requirements: Python 3.10.12
                  pytest
                  hypothesis
                  pyyaml
                  numpy
===============================================================================
"""

import json
import math
import os
import sys
from typing import Dict

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

# Add the src directory to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from channels import computational_basis, dephase, haar_basis, random_density
from entropy import (
    AxiomStatus,
    EntropyError,
    EntropyMeasure,
    JointDistribution,
    check_generalized_axioms,
    classical_entropy,
    conditional_entropy,
    joint_entropy,
    joint_from_state,
    mutual_information,
    parse_measure,
    quantum_entropy,
    quantum_mutual_information,
    relative_entropy,
)
from qcore import CatalyticEntropyError, Distribution, density_from_vector, tensor, validate_density


def load_test_cases(file_path: str) -> Dict:
    with open(file_path, 'r') as file:
        return yaml.safe_load(file)


# Load all test cases from the configuration file
test_cases_path = os.path.join(os.path.dirname(__file__), 'test_data_mappings.yml')
test_cases = load_test_cases(test_cases_path)

BASES = {'2': 2.0, 'e': math.e}


def shannon_G(x: float) -> float:
    return -x * math.log(x) if x > 0 else 0.0


@pytest.mark.parametrize("case", test_cases['entropy_cases'])
def test_entropy_reference_values(case):
    with open(os.path.join(os.path.dirname(__file__), case['input']), 'r') as file:
        raw = json.load(file)
    matrix = np.array(raw['re']) + 1j * np.array(raw.get('im', np.zeros_like(raw['re'])))
    rho = validate_density(matrix)
    value = quantum_entropy(rho, parse_measure(case['measure']), BASES[case['base']])
    assert value == pytest.approx(case['expected'], abs=1e-12), \
        f"{case['input']} {case['measure']}: expected {case['expected']}, got {value}"


@pytest.mark.parametrize("text", ["foo", "renyi:", "renyi:1", "tsallis:-1", "renyi:x", "tsallis:0"])
def test_parse_measure_rejects(text):
    with pytest.raises(CatalyticEntropyError) as excinfo:
        parse_measure(text)
    assert excinfo.value.error == EntropyError.BAD_PARAMETER


def test_parse_measure_round_trips_label():
    for text in ("vn", "renyi:2", "tsallis:0.5", "renyi:0.5"):
        assert str(parse_measure(text)) == text


def test_renyi_and_tsallis_approach_von_neumann():
    p = Distribution([0.5, 0.3, 0.2])
    vn_bits = classical_entropy(p, EntropyMeasure.von_neumann())
    vn_nats = classical_entropy(p, EntropyMeasure.von_neumann(), math.e)
    assert classical_entropy(p, EntropyMeasure.renyi(1.0 + 1e-6)) == pytest.approx(vn_bits, abs=1e-5)
    assert classical_entropy(p, EntropyMeasure.tsallis(1.0 + 1e-6)) == pytest.approx(vn_nats, abs=1e-5)


def test_tsallis_ignores_base():
    p = Distribution([0.75, 0.25])
    m = EntropyMeasure.tsallis(2.0)
    assert classical_entropy(p, m, 2.0) == classical_entropy(p, m, math.e)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=5))
def test_entropy_is_unitarily_invariant(seed, dim):
    rho = random_density(dim, seed)
    frame = haar_basis(dim, seed + 1).columns
    rotated = validate_density(frame @ rho.entries @ frame.conj().T)
    for m in (EntropyMeasure.von_neumann(), EntropyMeasure.renyi(2.0), EntropyMeasure.tsallis(0.5)):
        assert quantum_entropy(rotated, m) == pytest.approx(quantum_entropy(rho, m), abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=5))
def test_renyi_entropy_does_not_increase_with_order(seed, dim):
    rho = random_density(dim, seed)
    below = [quantum_entropy(rho, EntropyMeasure.renyi(a)) for a in (0.25, 0.5, 0.9)]
    above = [quantum_entropy(rho, EntropyMeasure.renyi(a)) for a in (1.5, 2.0, 3.0)]
    ordered = below + [quantum_entropy(rho, EntropyMeasure.von_neumann())] + above
    for higher, lower in zip(ordered, ordered[1:]):
        assert lower <= higher + 1e-10, f"seed={seed} dim={dim}: {ordered}"


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.sampled_from([0.5, 2.0, 3.0]))
def test_tsallis_pseudo_additivity(seed, q):
    rho, sigma = random_density(2, seed), random_density(3, seed + 1)
    m = EntropyMeasure.tsallis(q)
    a, b = quantum_entropy(rho, m), quantum_entropy(sigma, m)
    assert quantum_entropy(tensor(rho, sigma), m) == pytest.approx(a + b + (1.0 - q) * a * b, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=4))
def test_dephasing_never_decreases_entropy(seed, dim):
    rho = random_density(dim, seed)
    dephased = dephase(rho, haar_basis(dim, seed + 1))
    for m in (EntropyMeasure.renyi(0.5), EntropyMeasure.renyi(2.0), EntropyMeasure.tsallis(0.5), EntropyMeasure.tsallis(2.0)):
        assert quantum_entropy(dephased, m) >= quantum_entropy(rho, m) - 1e-10, f"{m} seed={seed} dim={dim}"


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=6))
def test_vn_entropy_bounded_by_log_dimension(weights):
    p = Distribution.normalized(weights)
    value = classical_entropy(p, EntropyMeasure.von_neumann())
    assert -1e-12 <= value <= math.log2(len(weights)) + 1e-12


def test_product_table_has_zero_mutual_information():
    p, q = Distribution([0.7, 0.3]), Distribution([0.2, 0.5, 0.3])
    j = JointDistribution.product(p, q)
    vn = EntropyMeasure.von_neumann()
    assert mutual_information(j, vn) == pytest.approx(0.0, abs=1e-12)
    assert conditional_entropy(j, 0, vn) == pytest.approx(classical_entropy(q, vn), abs=1e-12)
    assert conditional_entropy(j, 1, vn) == pytest.approx(classical_entropy(p, vn), abs=1e-12)


def test_renyi_conditional_on_product_table():
    p, q = Distribution([0.7, 0.3]), Distribution([0.2, 0.8])
    j = JointDistribution.product(p, q)
    m = EntropyMeasure.renyi(2.0)
    assert conditional_entropy(j, 0, m) == pytest.approx(classical_entropy(q, m), abs=1e-12)


def test_conditional_entropy_rejects_bad_axis():
    j = JointDistribution([[0.5, 0.0], [0.0, 0.5]])
    with pytest.raises(CatalyticEntropyError):
        conditional_entropy(j, 2, EntropyMeasure.von_neumann())


def test_joint_table_rejects_non_distribution():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        JointDistribution([[0.5, 0.5], [0.5, 0.5]])
    assert excinfo.value.error == EntropyError.BAD_TABLE


def test_bell_state_observed_in_computational_bases():
    bell = density_from_vector(np.array([1.0, 0.0, 0.0, 1.0]))
    J = computational_basis(2)
    j = joint_from_state(bell, (2, 2), J, J)
    np.testing.assert_allclose(j.table, [[0.5, 0.0], [0.0, 0.5]], atol=1e-12)
    vn = EntropyMeasure.von_neumann()
    assert joint_entropy(j, vn) == pytest.approx(1.0)
    assert mutual_information(j, vn) == pytest.approx(1.0)
    assert quantum_mutual_information(bell, (2, 2), vn) == pytest.approx(2.0)


def test_tsallis_mutual_information_forms():
    j = JointDistribution([[0.5, 0.0], [0.0, 0.5]])
    m = EntropyMeasure.tsallis(2.0)
    # marginals and joint all have T_2 = 0.5
    assert mutual_information(j, m, tsallis_form="subtraction") == pytest.approx(0.5)
    assert mutual_information(j, m, tsallis_form="normalized") == pytest.approx((0.5 + 0.5 - 0.25 - 0.5) / 0.5)


def test_relative_entropy_against_uniform():
    p = Distribution([0.5, 0.25, 0.25])
    uniform = Distribution.uniform(3)
    expected = math.log2(3) - 1.5
    assert relative_entropy(p, uniform) == pytest.approx(expected, abs=1e-12)
    assert relative_entropy(p, p) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(CatalyticEntropyError):
        relative_entropy(p, Distribution.uniform(2))


def test_generalized_shannon_passes_axioms():
    m = EntropyMeasure.generalized(lambda s: s, shannon_G, name="shannon")
    report = check_generalized_axioms(m, sample_budget=300, rng_seed=7)
    assert report.passed, f"unexpected failures: {report.to_dict()['axioms']}"
    assert report.status("AE1") == AxiomStatus.ASSUMED.value
    value = classical_entropy(Distribution([0.5, 0.5]), m)
    assert value == pytest.approx(math.log(2.0))


def test_generalized_tsallis_form_passes_axioms():
    m = EntropyMeasure.generalized(lambda s: s, lambda x: x - x * x, name="tsallis2")
    report = check_generalized_axioms(m, sample_budget=300, rng_seed=3)
    assert report.passed
    assert classical_entropy(Distribution([0.75, 0.25]), m) == pytest.approx(0.375)


def test_decreasing_outer_function_fails_monotonicity():
    m = EntropyMeasure.generalized(lambda s: 1.0 - s, lambda x: x * x, name="decreasing")
    report = check_generalized_axioms(m, sample_budget=200, rng_seed=0)
    assert not report.passed
    assert report.status("AE5") == AxiomStatus.FAIL.value
    assert report.status("AE2") == AxiomStatus.FAIL.value
    assert "counterexample" in report.results["AE5"]


def test_convex_inner_function_fails_concavity():
    m = EntropyMeasure.generalized(lambda s: s, lambda x: x * x, name="convex")
    report = check_generalized_axioms(m, sample_budget=200, rng_seed=0)
    assert report.status("AE2") == AxiomStatus.FAIL.value


def test_axiom_checker_requires_generalized_measure():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        check_generalized_axioms(EntropyMeasure.von_neumann())
    assert excinfo.value.error == EntropyError.NOT_GENERALIZED
