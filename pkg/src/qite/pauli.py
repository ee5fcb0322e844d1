"""Pauli strings, real-coefficient Pauli-sum Hamiltonians and their action on states.

Qubit 0 is the leftmost character of a Pauli string and the most significant
bit of a basis index. Strings act on amplitude arrays through X/Z bit masks;
``to_dense`` builds explicit Kronecker products and exists as a reference path.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DimensionError, NonHermitianError, OrderBoundError, ParseError, ResourceError
from .state import StateVector

DENSE_CAP = 12
PAULI_LABELS = "IXYZ"

_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def dense_cap() -> int:
    return int(os.environ.get("QITE_DENSE_CAP", DENSE_CAP))


@lru_cache(maxsize=32)
def _indices(dim: int) -> np.ndarray:
    idx = np.arange(dim, dtype=np.int64)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=4096)
def _action(x: int, z: int, n_y: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Gather indices and phases with ``(P v)[i] = phase[i] * v[perm[i]]``."""
    idx = _indices(dim)
    perm = idx ^ x
    sign = 1 - 2 * (np.bitwise_count(perm & z).astype(np.int64) & 1)
    phase = (1j**n_y) * sign.astype(np.complex128)
    perm.setflags(write=False)
    phase.setflags(write=False)
    return perm, phase


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("XIZY")``."""

    ops: str

    def __post_init__(self):
        if not self.ops:
            raise ParseError("empty Pauli string")
        for pos, ch in enumerate(self.ops):
            if ch not in PAULI_LABELS:
                raise ParseError(f"invalid Pauli label {ch!r}", position=pos)

    def __str__(self) -> str:
        return self.ops

    @property
    def qubits(self) -> int:
        return len(self.ops)

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.ops)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, ch in enumerate(self.ops) if ch != "I")

    def is_identity(self) -> bool:
        return self.weight == 0

    @cached_property
    def _masks(self) -> tuple[int, int, int]:
        q = self.qubits
        x = z = 0
        for k, ch in enumerate(self.ops):
            bit = 1 << (q - 1 - k)
            if ch in "XY":
                x |= bit
            if ch in "ZY":
                z |= bit
        return x, z, self.ops.count("Y")

    @property
    def x_mask(self) -> int:
        return self._masks[0]

    @property
    def z_mask(self) -> int:
        return self._masks[1]

    def act(self, amps: np.ndarray) -> np.ndarray:
        """Return ``P @ amps`` for a raw amplitude array, without building ``P``.

        ``P|b> = i^{#Y} (-1)^{popcount(b & z)} |b ^ x>``.
        """
        perm, phase = _action(*self._masks, amps.size)
        return phase * amps[perm]

    def to_matrix(self) -> np.ndarray:
        """Dense ``2^Q x 2^Q`` matrix by explicit Kronecker products."""
        _check_dense(self.qubits, None)
        return _kron(self)


def parse_pauli(text: str) -> PauliString:
    return PauliString(text)


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: PauliString

    def __post_init__(self):
        if isinstance(self.string, str):
            object.__setattr__(self, "string", PauliString(self.string))
        c = self.coefficient
        if isinstance(c, complex) or (isinstance(c, np.ndarray) and np.iscomplexobj(c)):
            raise NonHermitianError(f"complex coefficient {c!r} is not allowed")
        c = float(c)
        if not math.isfinite(c):
            raise ValueError(f"non-finite coefficient {c!r}")
        object.__setattr__(self, "coefficient", c)

    @property
    def weight(self) -> int:
        return self.string.weight

    def __str__(self) -> str:
        return f"{self.coefficient:.17g} {self.string}"


@dataclass(frozen=True)
class Hamiltonian:
    """``H = sum_i a_i S_i`` with real ``a_i``; term order is preserved."""

    qubits: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.qubits < 1:
            raise DimensionError("a Hamiltonian needs at least one qubit")
        for t in self.terms:
            if t.string.qubits != self.qubits:
                raise DimensionError(
                    f"term {t.string} acts on {t.string.qubits} qubits, expected {self.qubits}"
                )

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str]]) -> Hamiltonian:
        """Build from ``[(coefficient, "ZZ"), ...]``."""
        pts = [PauliTerm(c, PauliString(s)) for c, s in terms]
        if not pts:
            raise ValueError("no terms given; use Hamiltonian(qubits, ()) for H = 0")
        return cls(pts[0].string.qubits, tuple(pts))

    @classmethod
    def parse(cls, text: str) -> Hamiltonian:
        terms = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected '<coefficient> <pauli-string>', got {raw!r}", line=lineno)
            coef_txt, ops = parts
            try:
                coef = float(coef_txt)
            except ValueError:
                raise ParseError(f"bad coefficient {coef_txt!r}", line=lineno) from None
            if not math.isfinite(coef):
                raise ParseError(f"non-finite coefficient {coef_txt!r}", line=lineno)
            try:
                ps = PauliString(ops)
            except ParseError as err:
                raise ParseError(f"bad Pauli string {ops!r}", line=lineno, position=err.position) from None
            if terms and ps.qubits != terms[0].string.qubits:
                raise ParseError(
                    f"string length {ps.qubits} differs from {terms[0].string.qubits}", line=lineno
                )
            terms.append(PauliTerm(coef, ps))
        if not terms:
            raise ParseError("no terms found")
        return cls(terms[0].string.qubits, tuple(terms))

    def to_text(self) -> str:
        return "".join(f"{t}\n" for t in self.terms)

    @property
    def order_bound(self) -> int:
        return max((t.weight for t in self.terms), default=0)

    def is_diagonal(self) -> bool:
        return all(set(t.string.ops) <= {"I", "Z"} for t in self.terms)

    def scaled(self, factor: float) -> Hamiltonian:
        return Hamiltonian(self.qubits, tuple(PauliTerm(factor * t.coefficient, t.string) for t in self.terms))

    def apply(self, amps: np.ndarray) -> np.ndarray:
        out = np.zeros(amps.size, dtype=np.complex128)
        for t in self.terms:
            if t.coefficient:
                out += t.coefficient * t.string.act(amps)
        return out

    def diagonal(self) -> np.ndarray:
        """Diagonal of a Z-only Hamiltonian, one entry per basis index."""
        if not self.is_diagonal():
            raise ValueError("Hamiltonian has off-diagonal terms")
        idx = _indices(2**self.qubits)
        diag = np.zeros(idx.size)
        for t in self.terms:
            sign = 1 - 2 * (np.bitwise_count(idx & t.string.z_mask).astype(np.int64) & 1)
            diag += t.coefficient * sign
        return diag


def load_hamiltonian(path: str | os.PathLike) -> Hamiltonian:
    return Hamiltonian.parse(Path(path).read_text(encoding="utf-8"))


def check_order_bound(h: Hamiltonian, bound: int) -> None:
    """Reject terms heavier than ``bound`` and implausibly many distinct strings."""
    for i, t in enumerate(h.terms):
        if t.weight > bound:
            raise OrderBoundError(f"term {i} ({t.string}) has weight {t.weight} > {bound}")
    distinct = len({t.string.ops for t in h.terms})
    limit = math.comb(h.qubits, min(bound, h.qubits)) * 4**bound
    if distinct > limit:
        raise OrderBoundError(f"{distinct} distinct strings exceed C(Q,B)*4^B = {limit}")


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    if state.qubits != p.qubits:
        raise DimensionError(f"state has {state.qubits} qubits, Pauli string {p.qubits}")
    return StateVector(p.act(state.amps))


def expectation(state: StateVector, h: Hamiltonian) -> float:
    """Energy ``<psi|H|psi>`` evaluated matrix-free."""
    if state.qubits != h.qubits:
        raise DimensionError(f"state has {state.qubits} qubits, Hamiltonian {h.qubits}")
    val = complex(np.vdot(state.amps, h.apply(state.amps)))
    if abs(val.imag) > 1e-8:
        raise NonHermitianError(f"expectation has imaginary part {val.imag:.3g}")
    return val.real


def _check_dense(qubits: int, cap: int | None) -> None:
    cap = dense_cap() if cap is None else cap
    if qubits > cap:
        raise ResourceError(
            f"dense matrix for {qubits} qubits exceeds the cap of {cap}; "
            "pass cap=... or set QITE_DENSE_CAP to override"
        )


def to_dense(h: Hamiltonian, cap: int | None = None) -> np.ndarray:
    _check_dense(h.qubits, cap)
    dim = 2**h.qubits
    m = np.zeros((dim, dim), dtype=np.complex128)
    for t in h.terms:
        m += t.coefficient * _kron(t.string)
    return m


def _kron(p: PauliString) -> np.ndarray:
    m = np.ones((1, 1), dtype=np.complex128)
    for ch in p.ops:
        m = np.kron(m, _MATRICES[ch])
    return m
