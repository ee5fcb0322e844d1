"""Dense eigendecomposition with ground-space bookkeeping.

The ground multiplicity and gap are what every convergence statement in the
package is measured against, so they are computed once here and carried around
in an immutable :class:`Spectrum`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NonHermitianError
from .pauli import Hamiltonian, to_dense
from .state import StateVector

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues, orthonormal eigenvector columns, ``mu`` and gap.

    ``gap`` is ``None`` when every eigenvalue sits in the ground cluster, i.e.
    the Hamiltonian is a multiple of the identity (``identity_multiple``).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ground_multiplicity: int
    gap: float | None
    degeneracy_tol: float = DEGENERACY_TOL

    @property
    def qubits(self) -> int:
        return self.eigenvalues.size.bit_length() - 1

    @property
    def N(self) -> int:
        return self.eigenvalues.size - 1

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def identity_multiple(self) -> bool:
        return self.gap is None

    @property
    def ground_vectors(self) -> np.ndarray:
        return self.eigenvectors[:, : self.ground_multiplicity]

    def levels(self) -> list[tuple[int, int]]:
        """``(start, stop)`` index ranges of degenerate eigenvalue clusters."""
        return _clusters(self.eigenvalues, self.degeneracy_tol)


def _clusters(evals: np.ndarray, tol: float) -> list[tuple[int, int]]:
    out = []
    start = 0
    for k in range(1, evals.size + 1):
        if k == evals.size or evals[k] - evals[start] > tol * max(1.0, abs(evals[start])):
            out.append((start, k))
            start = k
    return out


def spectrum_from_matrix(m: np.ndarray, degeneracy_tol: float = DEGENERACY_TOL) -> Spectrum:
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(m), initial=0.0)):
        raise NonHermitianError("matrix is not Hermitian")
    evals, evecs = np.linalg.eigh(m)
    lam0 = evals[0]
    mu = int(np.count_nonzero(evals - lam0 <= degeneracy_tol * max(1.0, abs(lam0))))
    gap = None if mu == evals.size else float(evals[mu] - lam0)
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return Spectrum(evals, evecs, mu, gap, degeneracy_tol)


def eigendecompose(h: Hamiltonian, degeneracy_tol: float = DEGENERACY_TOL, cap: int | None = None) -> Spectrum:
    """Full spectrum of ``h`` via a dense Hermitian eigensolver."""
    return spectrum_from_matrix(to_dense(h, cap=cap), degeneracy_tol)


def _check(state: StateVector, spec: Spectrum) -> None:
    if state.amps.size != spec.eigenvalues.size:
        raise DimensionError(f"state has {state.qubits} qubits, spectrum {spec.qubits}")


def eigen_coeffs(state: StateVector, spec: Spectrum) -> np.ndarray:
    """Coefficients ``alpha_j = <psi_j|psi>`` in the eigenbasis."""
    _check(state, spec)
    return spec.eigenvectors.conj().T @ state.amps


def fidelity(state: StateVector, spec: Spectrum) -> float:
    """Squared overlap of ``state`` with the ground eigenspace."""
    _check(state, spec)
    overlaps = spec.ground_vectors.conj().T @ state.amps
    return float(np.sum(np.abs(overlaps) ** 2))
