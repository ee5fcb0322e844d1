"""Dense statevectors, rotation gates and computational-basis sampling.

Basis ordering is big-endian: qubit 0 is the most significant bit of the
amplitude index, so ``basis_state(3, "101")`` has its weight at index 5.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionError, ResourceError, StateError

if TYPE_CHECKING:
    from .pauli import PauliString

STATE_CAP = 20
_ZERO_NORM = 1e-300


def state_cap() -> int:
    return int(os.environ.get("QITE_STATE_CAP", STATE_CAP))


def _check_cap(qubits: int, cap: int | None) -> None:
    cap = state_cap() if cap is None else cap
    if qubits > cap:
        raise ResourceError(
            f"{qubits} qubits exceeds the statevector cap of {cap}; "
            "pass cap=... or set QITE_STATE_CAP to override"
        )


class StateVector:
    """Amplitudes of a ``qubits``-qubit pure state.

    The amplitude buffer is owned by the instance. Every operation in this
    package returns a new ``StateVector``; nothing mutates ``amps`` in place.
    """

    __slots__ = ("qubits", "amps")

    def __init__(self, amps, qubits: int | None = None, *, cap: int | None = None):
        amps = np.array(amps, dtype=np.complex128).reshape(-1)
        n = amps.size
        if n == 0 or n & (n - 1):
            raise DimensionError(f"amplitude count {n} is not a power of two")
        q = n.bit_length() - 1
        if qubits is not None and qubits != q:
            raise DimensionError(f"{n} amplitudes do not describe {qubits} qubits")
        _check_cap(q, cap)
        self.qubits = q
        self.amps = amps

    def __repr__(self) -> str:
        return f"StateVector(qubits={self.qubits}, norm={self.norm():.6g})"

    def __len__(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def copy(self) -> StateVector:
        return StateVector(self.amps.copy())


def _require_same(a: StateVector, b_qubits: int) -> None:
    if a.qubits != b_qubits:
        raise DimensionError(f"qubit count mismatch: {a.qubits} vs {b_qubits}")


def basis_state(qubits: int, bits: str) -> StateVector:
    if len(bits) != qubits or any(ch not in "01" for ch in bits):
        raise DimensionError(f"bitstring {bits!r} is not a {qubits}-qubit basis label")
    _check_cap(qubits, None)
    amps = np.zeros(2**qubits, dtype=np.complex128)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


def equal_superposition(qubits: int) -> StateVector:
    if qubits < 1:
        raise DimensionError("need at least one qubit")
    _check_cap(qubits, None)
    return StateVector(np.full(2**qubits, 2.0 ** (-qubits / 2), dtype=np.complex128))


def random_state(qubits: int, rng: np.random.Generator, real: bool = False) -> StateVector:
    """Haar-like random state (normalized complex Gaussian vector)."""
    _check_cap(qubits, None)
    v = rng.standard_normal(2**qubits)
    if not real:
        v = v + 1j * rng.standard_normal(2**qubits)
    return normalize(StateVector(v))


def normalize(state: StateVector) -> StateVector:
    nrm = state.norm()
    if not np.isfinite(nrm) or nrm < _ZERO_NORM:
        raise StateError(f"cannot normalize a state of norm {nrm!r}")
    return StateVector(state.amps / nrm)


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _require_same(a, b.qubits)
    return complex(np.vdot(a.amps, b.amps))


def apply_rotation(state: StateVector, generator: PauliString, angle: float) -> StateVector:
    """Apply ``exp(-i angle/2 P)`` using ``P^2 = I``."""
    _require_same(state, generator.qubits)
    if angle == 0.0:
        return state.copy()
    p_amps = generator.act(state.amps)
    half = 0.5 * angle
    return StateVector(np.cos(half) * state.amps - 1j * np.sin(half) * p_amps)


@dataclass
class SampleCounts:
    shots: int
    counts: dict[str, int] = field(default_factory=dict)
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(self.counts, sort_keys=True)

    def frequency(self, bits: str) -> float:
        return self.counts.get(bits, 0) / self.shots


def sample_z(state: StateVector, shots: int, seed: int) -> SampleCounts:
    """Draw ``shots`` i.i.d. computational-basis outcomes from ``|amps|^2``.

    Deterministic for a fixed ``seed``; outcomes are big-endian bitstrings.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities()
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-6:
        raise StateError(f"state is not normalized (norm^2 = {total:.3g})")
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs / total)
    nz = np.flatnonzero(draws)
    q = state.qubits
    counts = {format(int(i), f"0{q}b"): int(draws[i]) for i in nz}
    return SampleCounts(shots=shots, counts=counts, seed=seed)
