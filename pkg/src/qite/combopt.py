"""QUBO instances as diagonal Pauli-Z Hamiltonians, and success-probability guarantees.

Binary variables map to spins by ``x_i = (1 - Z_i) / 2``: bit 0 is the ``Z = +1``
eigenstate, so sampled bitstrings read directly as assignments. The constant
part of the substitution is kept as an identity term, which makes every
eigenvalue equal to the objective value of its bitstring.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, ResourceError
from .ite_exact import exact_evolve
from .ite_trotter import trotter_evolve
from .pauli import Hamiltonian, PauliString, PauliTerm
from .spectral import eigendecompose
from .state import StateVector, equal_superposition, sample_z
from .varqite import compile_evolution

BRUTE_FORCE_CAP = 20
BACKENDS = ("exact", "trotter", "varqite")


@dataclass
class QuboInstance:
    """Minimize ``offset + sum_i linear[i] x_i + sum_{i<j} quadratic[i, j] x_i x_j``.

    Diagonal entries of ``quadratic`` are folded into ``linear`` (``x^2 = x``)
    and entries below the diagonal into their mirror above it.
    """

    n: int
    linear: np.ndarray
    quadratic: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a QUBO needs at least one variable")
        lin = np.array(self.linear, dtype=float).reshape(self.n)
        quad = np.array(self.quadratic, dtype=float).reshape(self.n, self.n)
        lin = lin + np.diag(quad)
        quad = np.triu(quad, 1) + np.tril(quad, -1).T
        self.linear = lin
        self.quadratic = quad

    @classmethod
    def from_dicts(cls, n: int, linear: dict | None = None, quadratic: dict | None = None, offset: float = 0.0):
        lin = np.zeros(n)
        quad = np.zeros((n, n))
        for i, v in (linear or {}).items():
            lin[i] += v
        for (i, j), v in (quadratic or {}).items():
            quad[min(i, j), max(i, j)] += v
        return cls(n, lin, quad, offset)

    def objective(self, bits) -> float:
        x = np.array([int(b) for b in bits], dtype=float)
        return float(self.offset + self.linear @ x + x @ self.quadratic @ x)

    def objective_values(self) -> np.ndarray:
        """Objective for every assignment, indexed big-endian like basis states."""
        if self.n > BRUTE_FORCE_CAP:
            raise ResourceError(f"enumeration of {self.n} variables exceeds the cap of {BRUTE_FORCE_CAP}")
        idx = np.arange(2**self.n)
        shifts = self.n - 1 - np.arange(self.n)
        x = ((idx[:, None] >> shifts[None, :]) & 1).astype(float)
        return self.offset + x @ self.linear + np.einsum("bi,ij,bj->b", x, self.quadratic, x)


def parse_qubo(text: str) -> QuboInstance:
    """Read ``lin <i> <value>`` / ``quad <i> <j> <value>`` lines (0-based, ``i < j``)."""
    lin: dict[int, float] = {}
    quad: dict[tuple[int, int], float] = {}
    n = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "lin" and len(parts) == 3:
                i, v = int(parts[1]), float(parts[2])
                if i < 0:
                    raise ValueError
                lin[i] = lin.get(i, 0.0) + v
                n = max(n, i + 1)
            elif parts[0] == "quad" and len(parts) == 4:
                i, j, v = int(parts[1]), int(parts[2]), float(parts[3])
                if not 0 <= i < j:
                    raise ParseError(f"quad indices must satisfy 0 <= i < j, got {i} {j}", line=lineno)
                quad[(i, j)] = quad.get((i, j), 0.0) + v
                n = max(n, j + 1)
            else:
                raise ValueError
        except ParseError:
            raise
        except ValueError:
            raise ParseError(f"malformed QUBO line {raw!r}", line=lineno) from None
        if not math.isfinite(v):
            raise ParseError("non-finite value", line=lineno)
    if n == 0:
        raise ParseError("no QUBO terms found")
    return QuboInstance.from_dicts(n, lin, quad)


def load_qubo(path: str | os.PathLike) -> QuboInstance:
    return parse_qubo(Path(path).read_text(encoding="utf-8"))


def qubo_to_hamiltonian(q: QuboInstance) -> Hamiltonian:
    """Diagonal I/Z Hamiltonian whose eigenvalue on ``|x>`` is the objective at ``x``."""
    n = q.n
    const = q.offset
    z = np.zeros(n)
    zz = {}
    for i in range(n):
        const += 0.5 * q.linear[i]
        z[i] -= 0.5 * q.linear[i]
    for i in range(n):
        for j in range(i + 1, n):
            v = q.quadratic[i, j]
            if v == 0:
                continue
            const += 0.25 * v
            z[i] -= 0.25 * v
            z[j] -= 0.25 * v
            zz[(i, j)] = 0.25 * v

    def string(*sites):
        ops = ["I"] * n
        for s in sites:
            ops[s] = "Z"
        return PauliString("".join(ops))

    terms = [PauliTerm(const, string())]
    terms += [PauliTerm(z[i], string(i)) for i in range(n) if z[i] != 0]
    terms += [PauliTerm(v, string(i, j)) for (i, j), v in zz.items() if v != 0]
    return Hamiltonian(n, tuple(terms))


def brute_force_minima(q: QuboInstance, rel_tol: float = 1e-9) -> tuple[list[str], float]:
    """All minimizing bitstrings by exhaustive enumeration, with the minimum value."""
    vals = q.objective_values()
    vmin = float(vals.min())
    hits = np.flatnonzero(vals - vmin <= rel_tol * max(1.0, abs(vmin)))
    return [format(int(i), f"0{q.n}b") for i in hits], vmin


def success_probability(state: StateVector, minima) -> float:
    idx = [int(b, 2) for b in minima]
    return float(np.sum(np.abs(state.amps[idx]) ** 2))


def success_bound(Q: int, mu: int, gap: float, t) -> float:
    """Lower bound ``1 / (1 + 2^Q e^{-2 t gap} / mu)`` on ``p(t)`` from the uniform start."""
    if mu < 1:
        raise DomainError("mu must be >= 1")
    if not gap > 0:
        raise DomainError("gap must be positive")
    if np.any(np.asarray(t) < 0):
        raise DomainError("t must be non-negative")
    val = 1.0 / (1.0 + np.exp(Q * math.log(2.0) - math.log(mu) - 2.0 * np.asarray(t, dtype=float) * gap))
    return float(val) if np.ndim(val) == 0 else val


def threshold_time(Q: int, mu: int, gap: float, epsilon: float) -> float:
    """Smallest ``t`` at which :func:`success_bound` reaches ``epsilon`` (clamped at 0)."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if mu < 1:
        raise DomainError("mu must be >= 1")
    if not gap > 0:
        raise DomainError("gap must be positive")
    t = (Q * math.log(2.0) - math.log(mu) + math.log(epsilon) - math.log1p(-epsilon)) / (2.0 * gap)
    return max(t, 0.0)


def shot_success(epsilon: float, shots: int) -> float:
    """Probability that at least one of ``shots`` samples hits, at per-shot probability ``epsilon``."""
    if not 0 <= epsilon <= 1:
        raise DomainError("epsilon must lie in [0, 1]")
    if shots < 1:
        raise DomainError("shots must be >= 1")
    return 1.0 - (1.0 - epsilon) ** shots


@dataclass
class SuccessReport:
    t: float
    p_measured: float
    p_bound: float
    epsilon: float
    shots: int
    success_prob_shots: float
    minima: list[str]
    mu: int
    gap: float | None = None
    seed: int | None = None
    backend: str = "exact"
    repeats: int = 0
    empirical_success: float = float("nan")
    empirical_sigma: float = float("nan")
    success_prob_shots_at_epsilon: float = float("nan")
    bound_ok: bool = True
    trace_bound_ok: bool = True
    within_5sigma: bool = True
    minimum_value: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_json(self, **header) -> str:
        return json.dumps({**header, **asdict(self)}, indent=1, sort_keys=True)


def empirical_shot_success(state: StateVector, minima, shots: int, seed: int, repeats: int) -> float:
    """Fraction of ``repeats`` seeded experiments in which any of ``shots`` samples is a minimum."""
    targets = set(minima)
    child_seeds = np.random.SeedSequence(seed).generate_state(repeats)
    hits = 0
    for s in child_seeds:
        counts = sample_z(state, shots, int(s))
        hits += any(b in targets for b in counts.counts)
    return hits / repeats


def run_combinatorial(
    q: QuboInstance,
    epsilon: float,
    shots: int,
    seed: int,
    backend: str = "exact",
    repeats: int = 200,
    delta: float = 0.01,
    samples: int = 100,
) -> SuccessReport:
    """Evolve the uniform superposition until the bound guarantees ``epsilon``, then sample.

    Checks ``p_measured >= success_bound`` at the evolved time and along the
    sampled trace, and compares the empirical hit rate over ``repeats`` seeded
    experiments with ``1 - (1 - p_measured)^shots``.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    h = qubo_to_hamiltonian(q)
    minima, vmin = brute_force_minima(q)
    spec = eigendecompose(h)
    mu = spec.ground_multiplicity
    gap = spec.gap
    extra = {}
    if mu != len(minima):
        extra["mu_mismatch"] = f"eigendecompose mu={mu}, brute force {len(minima)}"
    t = 0.0 if gap is None else threshold_time(q.n, mu, gap, epsilon)
    psi0 = equal_superposition(q.n)

    if backend == "exact":
        trace, final = exact_evolve(psi0, h, t, samples=samples, spectrum=spec)
    elif backend == "trotter":
        trace, final = trotter_evolve(psi0, h, t, delta, spectrum=spec)
    else:
        compiled, final, trace = compile_evolution(psi0, h, t, delta, spectrum=spec)
        extra["total_gates"] = compiled.total_gates
        extra["min_step_fidelity"] = compiled.min_step_fidelity
    t_done = float(trace.times[-1])

    p = success_probability(final, minima)
    if gap is None:
        p_bound = 1.0
        trace_ok = True
    else:
        p_bound = success_bound(q.n, mu, gap, t_done)
        trace_ok = bool(np.all(trace.fidelity >= success_bound(q.n, mu, gap, trace.times) - 1e-9))

    expected = shot_success(min(max(p, 0.0), 1.0), shots)
    rate = empirical_shot_success(final, minima, shots, seed, repeats) if repeats > 0 else float("nan")
    sigma = math.sqrt(expected * (1 - expected) / repeats) if repeats > 0 else float("nan")
    within = repeats == 0 or abs(rate - expected) <= max(5 * sigma, 1e-12)
    return SuccessReport(
        t=t_done,
        p_measured=p,
        p_bound=p_bound,
        epsilon=epsilon,
        shots=shots,
        success_prob_shots=expected,
        minima=minima,
        mu=mu,
        gap=gap,
        seed=seed,
        backend=backend,
        repeats=repeats,
        empirical_success=rate,
        empirical_sigma=sigma,
        success_prob_shots_at_epsilon=shot_success(epsilon, shots),
        bound_ok=p >= p_bound - 1e-9,
        trace_bound_ok=trace_ok,
        within_5sigma=bool(within),
        minimum_value=vmin,
        extra=extra,
    )
