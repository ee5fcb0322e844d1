import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_hamiltonian
from qite.errors import DimensionError, NonHermitianError
from qite.pauli import Hamiltonian
from qite.spectral import eigen_coeffs, eigendecompose, fidelity, spectrum_from_matrix
from qite.state import basis_state, equal_superposition, random_state, StateVector


def test_single_z():
    spec = eigendecompose(Hamiltonian.from_terms([(1.0, "Z")]))
    np.testing.assert_allclose(spec.eigenvalues, [-1, 1])
    assert spec.ground_multiplicity == 1
    assert spec.gap == pytest.approx(2.0)
    assert spec.N == 1


def test_xor_hamiltonian():
    spec = eigendecompose(Hamiltonian.from_terms([(0.5, "II"), (-0.5, "ZZ")]))
    np.testing.assert_allclose(spec.eigenvalues, [0, 0, 1, 1], atol=1e-15)
    assert spec.ground_multiplicity == 2
    assert spec.gap == pytest.approx(1.0)


def test_identity_multiple_is_flagged():
    spec = eigendecompose(Hamiltonian.from_terms([(0.0, "ZZ")]))
    assert spec.identity_multiple
    assert spec.gap is None
    assert spec.ground_multiplicity == 4


def test_non_hermitian_matrix_rejected():
    with pytest.raises(NonHermitianError):
        spectrum_from_matrix(np.array([[0, 1], [0, 0]], dtype=complex))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(1, 5))
def test_spectrum_invariants(seed, q):
    spec = eigendecompose(random_hamiltonian(np.random.default_rng(seed), q))
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    v = spec.eigenvectors
    assert np.abs(v.conj().T @ v - np.eye(2**q)).max() <= 1e-10
    assert spec.ground_multiplicity >= 1
    if spec.gap is not None:
        assert spec.gap > 0


def test_degeneracy_tolerance_is_relative():
    spec = eigendecompose(Hamiltonian.from_terms([(1e-12, "Z")]))
    assert spec.ground_multiplicity == 2
    assert eigendecompose(Hamiltonian.from_terms([(1e-12, "Z")]), degeneracy_tol=1e-15).ground_multiplicity == 1


def test_fidelity_examples():
    z = eigendecompose(Hamiltonian.from_terms([(1.0, "Z")]))
    ground = StateVector(z.eigenvectors[:, 0])
    assert fidelity(ground, z) == pytest.approx(1.0)
    assert fidelity(equal_superposition(1), z) == pytest.approx(0.5)
    diag = eigendecompose(Hamiltonian.from_terms([(0.5, "III"), (-0.5, "ZZI")]))
    assert fidelity(equal_superposition(3), diag) == pytest.approx(diag.ground_multiplicity * 2**-3)


def test_fidelity_dimension_mismatch():
    z = eigendecompose(Hamiltonian.from_terms([(1.0, "Z")]))
    with pytest.raises(DimensionError):
        fidelity(basis_state(2, "00"), z)


def test_eigen_coeffs_examples():
    h = Hamiltonian.from_terms([(0.3, "XZ"), (-0.8, "ZI"), (0.2, "YY")])
    spec = eigendecompose(h)
    for k in range(4):
        c = eigen_coeffs(StateVector(spec.eigenvectors[:, k]), spec)
        np.testing.assert_allclose(np.abs(c), np.eye(4)[k], atol=1e-12)
    z = eigendecompose(Hamiltonian.from_terms([(1.0, "Z")]))
    np.testing.assert_allclose(np.abs(eigen_coeffs(equal_superposition(1), z)), [1 / math.sqrt(2)] * 2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(1, 5))
def test_parseval(seed, q):
    r = np.random.default_rng(seed)
    spec = eigendecompose(random_hamiltonian(r, q))
    psi = random_state(q, r)
    assert np.sum(np.abs(eigen_coeffs(psi, spec)) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert -1e-12 <= fidelity(psi, spec) <= 1 + 1e-10
