"""First-order Trotterized imaginary time evolution.

One layer applies ``e^{-delta a_i S_i} = cosh(delta a_i) - sinh(delta a_i) S_i``
for every term in file order; the state is renormalized after every factor.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import DimensionError, DomainError, StateError
from .ite_exact import EvolutionTrace, fidelity_lower_bound, gradient_norm_sq
from .pauli import Hamiltonian, PauliTerm, dense_cap, expectation
from .spectral import Spectrum, eigendecompose, fidelity
from .state import StateVector, normalize


def factor_apply(state: StateVector, term: PauliTerm, delta: float) -> tuple[StateVector, float]:
    """Apply ``e^{-delta a S}`` without renormalizing; return the state and its norm."""
    x = delta * term.coefficient
    if not math.isfinite(x):
        raise DomainError(f"delta * coefficient = {x!r} is not finite")
    if state.qubits != term.string.qubits:
        raise DimensionError(f"state has {state.qubits} qubits, term {term.string.qubits}")
    if x == 0.0:
        out = state.copy()
    elif term.string.is_identity():
        out = StateVector(math.exp(-x) * state.amps)
    else:
        out = StateVector(math.cosh(x) * state.amps - math.sinh(x) * term.string.act(state.amps))
    return out, out.norm()


def layer_count(t: float, delta: float) -> int:
    return int(round(t / delta))


def trotter_evolve(
    state0: StateVector,
    h: Hamiltonian,
    t: float,
    delta: float,
    spectrum: Spectrum | None = None,
) -> tuple[EvolutionTrace, StateVector]:
    """Run ``round(t / delta)`` Trotter layers, sampling the trace after every layer.

    Fidelities are reported against the ground space when a spectrum is given
    or the system fits under the dense cap, and as NaN otherwise. The time
    actually evolved is ``layers * delta``; the difference to ``t`` is stored
    in ``trace.extra["residual_time"]``.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    if not delta > 0:
        raise DomainError("delta must be positive")
    if abs(state0.norm() - 1.0) > 1e-10:
        raise StateError("initial state must be normalized")

    notes = []
    layers = layer_count(t, delta)
    if delta > t > 0:
        layers = 1
        msg = f"delta={delta} exceeds t={t}; running a single layer"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)

    spec = spectrum
    if spec is None and h.qubits <= dense_cap():
        spec = eigendecompose(h)

    def measure(psi: StateVector) -> tuple[float, float, float]:
        fid = fidelity(psi, spec) if spec is not None else float("nan")
        return expectation(psi, h), fid, gradient_norm_sq(psi, h)

    psi = state0.copy()
    times = [0.0]
    e0, f0, g0 = measure(psi)
    energies, fids, grads, logs = [e0], [f0], [g0], [0.0]
    log_norm = 0.0
    for k in range(1, layers + 1):
        for term in h.terms:
            psi, nrm = factor_apply(psi, term, delta)
            log_norm += math.log(nrm)
            psi = normalize(psi)
        e, f, g = measure(psi)
        times.append(k * delta)
        energies.append(e)
        fids.append(f)
        grads.append(g)
        logs.append(log_norm)

    times = np.array(times)
    gap = None if spec is None else spec.gap
    mu = 0 if spec is None else spec.ground_multiplicity
    if spec is None or f0 <= 0:
        bound = np.full(times.size, np.nan) if spec is None else np.zeros(times.size)
    else:
        bound = fidelity_lower_bound(f0, gap, times)
    trace = EvolutionTrace(
        times=times,
        energy=np.array(energies),
        fidelity=np.array(fids),
        gradient_norm_sq=np.array(grads),
        fidelity_bound=bound,
        norm_log=np.array(logs),
        f0=f0,
        gap=gap,
        mu=mu,
        orthogonal_start=bool(spec is not None and f0 < 1e-14),
        target_energy=float("nan") if spec is None else spec.ground_energy,
        warnings=notes,
        extra={
            "delta": delta,
            "layers": layers,
            "factors_total": layers * len(h.terms),
            "residual_time": t - layers * delta,
        },
    )
    return trace, psi
