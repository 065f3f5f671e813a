"""
===============================================================================
    Program Name: Quantum Core Unit Tests
    Description:  Tests for density-matrix validation, spectra, partial traces,
                  purification and the distance measures in qcore.

    Created Date: 2024-09-12
    Last Updated: 2024-10-03
    Version:      1.0.1

    License:      GNU General Public License v3.0

    Usage:        pytest test_qcore.py

    Requirements: Python 3.10.12
                  pytest
                  hypothesis
                  numpy
===============================================================================
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add the src directory to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from channels import haar_basis, random_density
from qcore import (
    CatalyticEntropyError,
    DensityMatrix,
    Distribution,
    QCoreError,
    basis_state,
    check_dense_dim,
    density_from_vector,
    eigenbasis,
    fidelity,
    maximally_mixed,
    partial_trace,
    purify,
    spectrum,
    tensor,
    trace_distance,
    validate_density,
)
from settings import Tolerances


BELL = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)


@pytest.mark.parametrize("raw, error", [
    ([[0.5, 0.3], [0.0, 0.5]], QCoreError.NOT_HERMITIAN),
    ([[1.5, 0.0], [0.0, -0.5]], QCoreError.NOT_PSD),
    ([[0.5, 0.0], [0.0, 0.4]], QCoreError.TRACE_NOT_ONE),
    ([[0.5, 0.5, 0.0]], QCoreError.NOT_SQUARE),
])
def test_validate_density_rejects(raw, error):
    with pytest.raises(CatalyticEntropyError) as excinfo:
        validate_density(raw)
    assert excinfo.value.error == error, f"Expected {error.value[0]}, got {excinfo.value.code}"


def test_validate_density_accepts_within_tolerance():
    raw = [[0.75 + 1e-12, 0.0], [0.0, 0.25]]
    rho = validate_density(raw)
    assert rho.dim == 2
    np.testing.assert_allclose(rho.diagonal(), [0.75, 0.25], atol=1e-11)


def test_loose_tolerance_accepts_what_default_rejects():
    raw = [[0.75, 0.0], [0.0, 0.2500001]]
    with pytest.raises(CatalyticEntropyError):
        validate_density(raw)
    rho = validate_density(raw, Tolerances.uniform(1e-6))
    assert rho.dim == 2


def test_error_to_dict_carries_code_and_details():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        validate_density([[0.5, 0.0], [0.0, 0.4]])
    data = excinfo.value.to_dict()
    assert data["code"] == "Q004"
    assert "trace" in data["details"]


def test_distribution_rejects_bad_vectors():
    for probs in ([0.6, 0.6], [1.2, -0.2], []):
        with pytest.raises(CatalyticEntropyError) as excinfo:
            Distribution(probs)
        assert excinfo.value.error == QCoreError.NOT_DISTRIBUTION


@given(st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=1, max_size=8).filter(lambda w: sum(w) > 1e-6))
def test_normalized_distribution_sums_to_one(weights):
    p = Distribution.normalized(weights)
    assert abs(p.probs.sum() - 1.0) < 1e-12
    assert np.all(p.probs >= 0.0)


def test_spectrum_is_sorted_descending():
    rho = DensityMatrix(np.diag([0.1, 0.6, 0.3]).astype(complex))
    np.testing.assert_allclose(spectrum(rho).probs, [0.6, 0.3, 0.1], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=5))
def test_eigenbasis_reconstructs_state(seed, dim):
    rho = random_density(dim, seed)
    probs, frame = eigenbasis(rho)
    rebuilt = (frame.columns * probs.probs) @ frame.columns.conj().T
    np.testing.assert_allclose(rebuilt, rho.entries, atol=1e-10)


def test_partial_trace_of_bell_state_is_maximally_mixed():
    bell = density_from_vector(BELL)
    for keep in ("a", "b"):
        reduced = partial_trace(bell, (2, 2), keep)
        np.testing.assert_allclose(reduced.entries, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_of_product_state():
    rho = DensityMatrix(np.diag([0.75, 0.25]).astype(complex))
    sigma = maximally_mixed(3)
    joint = tensor(rho, sigma)
    np.testing.assert_allclose(partial_trace(joint, (2, 3), "a").entries, rho.entries, atol=1e-12)
    np.testing.assert_allclose(partial_trace(joint, (2, 3), "b").entries, sigma.entries, atol=1e-12)


def test_partial_trace_rejects_unknown_subsystem():
    with pytest.raises(CatalyticEntropyError) as excinfo:
        partial_trace(maximally_mixed(4), (2, 2), "c")
    assert excinfo.value.error == QCoreError.BAD_SUBSYSTEM


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=4), st.integers(min_value=1, max_value=4))
def test_purification_reduces_to_source(seed, dim, rank):
    rho = random_density(dim, seed, rank=rank)
    purification = purify(rho)
    joint = purification.density()
    reduced = partial_trace(joint, (purification.dim_a, purification.dim_b), "a")
    assert trace_distance(reduced, rho) < 1e-9, f"seed={seed} dim={dim} rank={rank}"
    assert purification.dim_b <= dim


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=4))
def test_trace_distance_is_a_unitarily_invariant_metric(seed, dim):
    rho, sigma, omega = (random_density(dim, seed + shift) for shift in range(3))
    assert trace_distance(rho, omega) <= trace_distance(rho, sigma) + trace_distance(sigma, omega) + 1e-12
    assert trace_distance(rho, sigma) == pytest.approx(trace_distance(sigma, rho), abs=1e-12)
    assert 0.0 <= trace_distance(rho, sigma) <= 1.0 + 1e-12

    frame = haar_basis(dim, seed + 3).columns
    rotated_rho = DensityMatrix(frame @ rho.entries @ frame.conj().T)
    rotated_sigma = DensityMatrix(frame @ sigma.entries @ frame.conj().T)
    assert trace_distance(rotated_rho, rotated_sigma) == pytest.approx(trace_distance(rho, sigma), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=3), st.integers(min_value=2, max_value=4))
def test_tensor_spectrum_is_sorted_product_of_spectra(seed, dim_a, dim_b):
    rho, sigma = random_density(dim_a, seed), random_density(dim_b, seed + 1)
    expected = np.sort(np.outer(spectrum(rho).probs, spectrum(sigma).probs).ravel())[::-1]
    np.testing.assert_allclose(spectrum(tensor(rho, sigma)).probs, expected, atol=1e-10)


def test_trace_distance_and_fidelity_of_orthogonal_states():
    zero, one = basis_state(2, 0), basis_state(2, 1)
    assert trace_distance(zero, one) == pytest.approx(1.0)
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(zero, zero) == pytest.approx(1.0)


def test_fidelity_of_mixed_against_pure():
    plus = density_from_vector(np.array([1.0, 1.0]))
    assert fidelity(maximally_mixed(2), plus) == pytest.approx(0.5)


def test_dense_dimension_cap():
    check_dense_dim(4096)
    with pytest.raises(CatalyticEntropyError) as excinfo:
        check_dense_dim(4097, "test operator")
    assert excinfo.value.error == QCoreError.TOO_LARGE
