"""Compile Trotter factors ``e^{-delta a S}`` into Pauli-rotation circuits.

Each factor acting on the current state ``psi`` is replaced by a unitary
``C(theta) = R_{m-1}(theta_{m-1}) ... R_0(theta_0)`` with ``R_j(x) =
exp(-i x P_j / 2)``. The angles maximize

    Re Omega(delta, theta) = Re <psi| (cosh(delta a) - sinh(delta a) S) C(theta) |psi>,

found as a root of the gradient by Newton's method and continued in ``delta``
from the trivial solution ``theta = 0`` at ``delta = 0``. All derivatives use
parameter shifts.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CompilationError, DimensionError, PathFailure, StateError
from .homotopy import PathDiagnostics, newton_correct, track_path
from .ite_exact import EvolutionTrace, fidelity_lower_bound, gradient_norm_sq
from .ite_trotter import factor_apply, layer_count
from .pauli import Hamiltonian, PauliString, PauliTerm, dense_cap, expectation
from .spectral import Spectrum, eigendecompose, fidelity
from .state import StateVector

HESSIAN_SHIFT = 1e-12
RANK_TOL = 1e-8
POLICIES = ("full", "reduced")


@dataclass(frozen=True)
class ParametricCircuit:
    """Ordered Pauli-rotation generators acting only on ``support``."""

    generators: tuple[PauliString, ...]
    support: tuple[int, ...]
    qubits: int

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if len(self.generators) > 4 ** len(self.support):
            raise ValueError(f"{len(self.generators)} gates exceed 4^{len(self.support)}")
        for g in self.generators:
            if g.qubits != self.qubits:
                raise DimensionError(f"generator {g} does not act on {self.qubits} qubits")
            if not set(g.support) <= set(self.support):
                raise ValueError(f"generator {g} leaves the support {self.support}")

    def __len__(self) -> int:
        return len(self.generators)

    def apply(self, amps: np.ndarray, theta) -> np.ndarray:
        """``C(theta) @ amps``; gate 0 acts first."""
        out = amps
        for g, x in zip(self.generators, theta):
            if x != 0.0:
                half = 0.5 * x
                out = math.cos(half) * out - 1j * math.sin(half) * g.act(out)
        return out

    def gate_list(self, theta) -> list[str]:
        return [f"R({g}, {float(x)!r})" for g, x in zip(self.generators, theta)]

    def subset(self, keep) -> ParametricCircuit:
        return ParametricCircuit(tuple(self.generators[k] for k in keep), self.support, self.qubits)


@dataclass(frozen=True)
class TrigPoint:
    """Angles in the polynomial chart ``s_j = sin(theta_j/2)``, ``c_j = cos(theta_j/2)``."""

    s: np.ndarray
    c: np.ndarray

    @classmethod
    def from_angles(cls, theta) -> TrigPoint:
        half = 0.5 * np.asarray(theta, dtype=float)
        return cls(np.sin(half), np.cos(half))

    def to_angles(self) -> np.ndarray:
        return 2.0 * np.arctan2(self.s, self.c)

    def on_circle(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.s**2 + self.c**2 - 1.0) <= tol))


def build_ansatz(term: PauliTerm, generator_set: str = "full", state: StateVector | None = None) -> ParametricCircuit:
    """All non-identity Pauli strings on the support of ``term``, ordered I<X<Y<Z.

    With ``generator_set="reduced"`` and a ``state``, generators whose tangent
    direction at ``theta = 0`` is dependent on earlier ones are dropped
    (see :func:`prune_generators`).
    """
    if generator_set not in POLICIES:
        raise ValueError(f"unknown generator set {generator_set!r}")
    q = term.string.qubits
    support = term.string.support
    gens = []
    for labels in itertools.product("IXYZ", repeat=len(support)):
        if all(ch == "I" for ch in labels):
            continue
        ops = ["I"] * q
        for k, ch in zip(support, labels):
            ops[k] = ch
        gens.append(PauliString("".join(ops)))
    circuit = ParametricCircuit(tuple(gens), support, q)
    if generator_set == "reduced":
        if state is None:
            raise ValueError("the reduced generator set needs the current state")
        circuit = prune_generators(circuit, state)
    return circuit


def _tangent_columns(circuit: ParametricCircuit, amps: np.ndarray) -> np.ndarray:
    """Real-stacked columns ``d C(theta) psi / d theta_j`` at ``theta = 0``."""
    cols = [-0.5j * g.act(amps) for g in circuit.generators]
    if not cols:
        return np.zeros((2 * amps.size, 0))
    m = np.stack(cols, axis=1)
    return np.vstack([m.real, m.imag])


def tangent_rank(circuit: ParametricCircuit, state: StateVector, tol: float = RANK_TOL) -> int:
    cols = _tangent_columns(circuit, state.amps)
    if cols.shape[1] == 0:
        return 0
    sv = np.linalg.svd(cols, compute_uv=False)
    return int(np.count_nonzero(sv > tol * max(1.0, sv[0])))


def prune_generators(circuit: ParametricCircuit, state: StateVector, tol: float = RANK_TOL) -> ParametricCircuit:
    """Greedily keep generators whose tangent column raises the rank."""
    cols = _tangent_columns(circuit, state.amps)
    keep: list[int] = []
    rank = 0
    for j in range(cols.shape[1]):
        trial = cols[:, keep + [j]]
        sv = np.linalg.svd(trial, compute_uv=False)
        r = int(np.count_nonzero(sv > tol * max(1.0, sv[0])))
        if r > rank:
            keep.append(j)
            rank = r
    return circuit.subset(keep)


class StepProblem:
    """``Re Omega`` and its parameter-shift derivatives for one compilation step.

    ``Omega(delta, theta) = cosh(delta a) <psi|C psi> - sinh(delta a) <S psi|C psi>``,
    so the state-dependent pieces are computed once and ``delta`` stays free.
    """

    def __init__(self, state: StateVector, term: PauliTerm, circuit: ParametricCircuit):
        if state.qubits != term.string.qubits or state.qubits != circuit.qubits:
            raise DimensionError("state, term and circuit must act on the same qubits")
        self.psi = state.amps
        self.a = term.coefficient
        self.identity = term.string.is_identity()
        self.s_psi = self.psi if self.identity else term.string.act(self.psi)
        self.circuit = circuit

    def bra(self, delta: float) -> np.ndarray:
        x = delta * self.a
        if self.identity:
            return math.exp(-x) * self.psi
        return math.cosh(x) * self.psi - math.sinh(x) * self.s_psi

    def target_norm(self, delta: float) -> float:
        return float(np.linalg.norm(self.bra(delta)))

    def omega(self, delta: float, theta) -> complex:
        return complex(np.vdot(self.bra(delta), self.circuit.apply(self.psi, theta)))

    def _re(self, bra: np.ndarray, theta) -> float:
        return float(np.vdot(bra, self.circuit.apply(self.psi, theta)).real)

    def gradient(self, delta: float, theta) -> np.ndarray:
        """Shift rule for the half-frequency dependence ``b cos(x/2) + c sin(x/2)``.

        ``Omega`` is linear (not quadratic) in the circuit output, so each
        angle enters with frequency 1/2: ``f' = (f(x + pi) - f(x - pi)) / 4``.
        """
        theta = np.asarray(theta, dtype=float)
        bra = self.bra(delta)
        g = np.empty(theta.size)
        for j in range(theta.size):
            e = np.zeros_like(theta)
            e[j] = math.pi
            g[j] = 0.25 * (self._re(bra, theta + e) - self._re(bra, theta - e))
        return g

    def hessian(self, delta: float, theta) -> np.ndarray:
        """Second-order shifts: ``(f(x+pi) + f(x-pi) - 2 f(x)) / 8`` on the diagonal,
        ``(f(++) - f(+-) - f(-+) + f(--)) / 16`` off it."""
        theta = np.asarray(theta, dtype=float)
        bra = self.bra(delta)
        m = theta.size
        f0 = self._re(bra, theta)
        hess = np.empty((m, m))

        def shifted(j, sj, k=None, sk=0.0):
            x = theta.copy()
            x[j] += sj
            if k is not None:
                x[k] += sk
            return self._re(bra, x)

        pi = math.pi
        for j in range(m):
            hess[j, j] = (shifted(j, pi) + shifted(j, -pi) - 2.0 * f0) / 8.0
            for k in range(j + 1, m):
                val = (shifted(j, pi, k, pi) - shifted(j, pi, k, -pi) - shifted(j, -pi, k, pi) + shifted(j, -pi, k, -pi)) / 16.0
                hess[j, k] = hess[k, j] = val
        return hess

    def step_fidelity(self, delta: float, theta) -> float:
        """``Re Omega / ||(cosh - sinh S) psi||``: overlap of the circuit output with the exact step."""
        return self.omega(delta, theta).real / self.target_norm(delta)

    def trig_residual(self, delta: float, point: TrigPoint) -> np.ndarray:
        """Polynomial system ``h(delta, (s, c))``: ``d Re Omega / d theta_j`` then ``s_j^2 + c_j^2 - 1``.

        Each gate is ``c_j - i s_j P_j``, so ``Omega`` is multilinear in the
        pairs ``(s_j, c_j)`` and the angle derivative is
        ``(c_j dOmega/ds_j - s_j dOmega/dc_j) / 2``.
        """
        bra = self.bra(delta)
        gens = self.circuit.generators
        m = len(gens)
        deriv = np.empty(m)
        for j in range(m):
            d_s = self._sc_apply(point, j, "s")
            d_c = self._sc_apply(point, j, "c")
            deriv[j] = 0.5 * (point.c[j] * np.vdot(bra, d_s) - point.s[j] * np.vdot(bra, d_c)).real
        return np.concatenate([deriv, point.s**2 + point.c**2 - 1.0])

    def _sc_apply(self, point: TrigPoint, j: int, wrt: str) -> np.ndarray:
        out = self.psi
        for k, g in enumerate(self.circuit.generators):
            if k == j:
                out = -1j * g.act(out) if wrt == "s" else out
            else:
                out = point.c[k] * out - 1j * point.s[k] * g.act(out)
        return out


def omega(state, delta, term, circuit, theta) -> complex:
    return StepProblem(state, term, circuit).omega(delta, theta)


def omega_gradient(state, delta, term, circuit, theta) -> np.ndarray:
    """Parameter-shift gradient of ``Re Omega`` with respect to ``theta``."""
    return StepProblem(state, term, circuit).gradient(delta, theta)


def omega_hessian(state, delta, term, circuit, theta) -> np.ndarray:
    return StepProblem(state, term, circuit).hessian(delta, theta)


def _regularized_solve(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # redundant generators make the Hessian rank deficient; take the minimum-norm step
    shifted = jac + HESSIAN_SHIFT * np.eye(jac.shape[0])
    return np.linalg.lstsq(shifted, rhs, rcond=1e-10)[0]


@dataclass
class StepResult:
    theta: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    step_fidelity: float
    omega: complex
    path: PathDiagnostics | None = None
    sub_step_fidelities: list[tuple[float, float]] = field(default_factory=list)


def solve_step(
    state: StateVector,
    delta: float,
    term: PauliTerm,
    circuit: ParametricCircuit,
    init_theta=None,
    tol: float = 1e-9,
    max_iter: int = 50,
) -> StepResult:
    """Newton on ``grad Re Omega = 0`` started from ``init_theta`` (zeros by default).

    A non-converged result still carries the best iterate; callers may retry
    with a smaller ``delta``.
    """
    if abs(state.norm() - 1.0) > 1e-10:
        raise StateError("state must be normalized")
    prob = StepProblem(state, term, circuit)
    x0 = np.zeros(len(circuit)) if init_theta is None else np.asarray(init_theta, dtype=float)
    if len(circuit) == 0:
        return StepResult(x0, True, 0, 0.0, prob.step_fidelity(delta, x0), prob.omega(delta, x0))
    res = newton_correct(
        lambda th: prob.gradient(delta, th),
        lambda th: prob.hessian(delta, th),
        x0,
        tol=tol,
        max_iter=max_iter,
        linear_solve=_regularized_solve,
    )
    return StepResult(
        theta=res.x,
        converged=res.converged,
        iterations=res.iterations,
        grad_norm=res.residual_norms[-1],
        step_fidelity=prob.step_fidelity(delta, res.x),
        omega=prob.omega(delta, res.x),
    )


def continuation_solve(
    state: StateVector,
    term: PauliTerm,
    circuit: ParametricCircuit,
    delta_target: float,
    delta_min: float | None = None,
    tol: float = 1e-9,
    predictor: str = "zero",
    max_iter: int = 50,
) -> StepResult:
    """Track the maximizer from ``(delta=0, theta=0)`` to ``delta_target``.

    The first attempt is a single Newton solve at ``delta_target``; failed
    sub-steps are halved down to ``delta_min`` (default ``delta_target/2^10``).

    Raises:
        PathFailure: the sub-step dropped below ``delta_min``.
    """
    if abs(state.norm() - 1.0) > 1e-10:
        raise StateError("state must be normalized")
    prob = StepProblem(state, term, circuit)
    x0 = np.zeros(len(circuit))
    if delta_target == 0 or len(circuit) == 0:
        return StepResult(x0, True, 0, 0.0, prob.step_fidelity(delta_target, x0), prob.omega(delta_target, x0), PathDiagnostics())
    theta, path = track_path(
        prob.gradient,
        x0,
        delta_target,
        delta_min=delta_min,
        tol=tol,
        jacobian_fn=prob.hessian,
        predictor=predictor,
        max_iter=max_iter,
        linear_solve=_regularized_solve,
        max_jump=math.pi / 2,
    )
    return StepResult(
        theta=theta,
        converged=True,
        iterations=path.total_iterations,
        grad_norm=path.sub_steps[-1].residual,
        step_fidelity=prob.step_fidelity(delta_target, theta),
        omega=prob.omega(delta_target, theta),
        path=path,
        sub_step_fidelities=[(s.delta, prob.step_fidelity(s.delta, s.point)) for s in path.sub_steps],
    )


@dataclass
class CompiledStep:
    layer: int
    term_index: int
    circuit: ParametricCircuit
    angles: np.ndarray
    step_fidelity: float
    newton_iters: int
    generator_set: str = "full"

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "term_index": self.term_index,
            "generators": [str(g) for g in self.circuit.generators],
            "angles": [float(x) for x in self.angles],
            "step_fidelity": self.step_fidelity,
            "newton_iters": self.newton_iters,
            "generator_set": self.generator_set,
        }


@dataclass
class CompiledEvolution:
    steps: list[CompiledStep] = field(default_factory=list)
    delta: float = 0.0
    layers: int = 0

    @property
    def total_gates(self) -> int:
        return sum(len(s.circuit) for s in self.steps)

    @property
    def min_step_fidelity(self) -> float:
        return min((s.step_fidelity for s in self.steps), default=1.0)

    def gate_list(self) -> str:
        lines = []
        for s in self.steps:
            lines.extend(s.circuit.gate_list(s.angles))
        return "".join(f"{ln}\n" for ln in lines)

    def to_json(self, **extra) -> str:
        doc = {
            **extra,
            "delta": self.delta,
            "layers": self.layers,
            "total_gates": self.total_gates,
            "steps": [s.to_dict() for s in self.steps],
        }
        return json.dumps(doc, indent=1)

    def apply(self, state: StateVector) -> StateVector:
        amps = state.amps
        for s in self.steps:
            amps = s.circuit.apply(amps, s.angles)
        return StateVector(amps)


def _compile_one(psi, term, delta, generator_set, tol, predictor):
    circuit = build_ansatz(term, generator_set, psi)
    try:
        return circuit, generator_set, continuation_solve(psi, term, circuit, delta, tol=tol, predictor=predictor)
    except PathFailure:
        if generator_set == "reduced" or tangent_rank(circuit, psi) == len(circuit):
            raise
    # dependent generators in the full set: retry with the pruned set
    circuit = prune_generators(circuit, psi)
    return circuit, "reduced", continuation_solve(psi, term, circuit, delta, tol=tol, predictor=predictor)


def compile_evolution(
    state0: StateVector,
    h: Hamiltonian,
    t: float,
    delta: float,
    policy: str = "full",
    spectrum: Spectrum | None = None,
    tol: float = 1e-9,
    predictor: str = "zero",
) -> tuple[CompiledEvolution, StateVector, EvolutionTrace]:
    """Compile ``round(t/delta)`` Trotter layers into rotation circuits.

    Every step is solved on the state produced by the circuits compiled so
    far, then its circuit is applied unitarily. Identity terms only rescale
    the state and get an empty circuit.

    Raises:
        CompilationError: a step's continuation failed; ``partial`` carries the
            :class:`CompiledEvolution` up to that step.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if abs(state0.norm() - 1.0) > 1e-10:
        raise StateError("initial state must be normalized")
    if not delta > 0:
        raise ValueError("delta must be positive")
    layers = max(layer_count(t, delta), 1 if t > 0 else 0)
    spec = spectrum
    if spec is None and h.qubits <= dense_cap():
        spec = eigendecompose(h)

    def measure(psi):
        fid = fidelity(psi, spec) if spec is not None else float("nan")
        return expectation(psi, h), fid, gradient_norm_sq(psi, h)

    compiled = CompiledEvolution(delta=delta, layers=layers)
    psi = state0.copy()
    e0, f0, g0 = measure(psi)
    energies, fids, grads, logs = [e0], [f0], [g0], [0.0]
    log_norm = 0.0
    for layer in range(layers):
        for i, term in enumerate(h.terms):
            log_norm += math.log(factor_apply(psi, term, delta)[1])
            try:
                circuit, used, res = _compile_one(psi, term, delta, policy, tol, predictor)
            except PathFailure as err:
                raise CompilationError(
                    f"continuation failed at layer {layer}, term {i}: {err}", partial=compiled
                ) from err
            compiled.steps.append(
                CompiledStep(layer, i, circuit, res.theta, res.step_fidelity, res.iterations, used)
            )
            psi = StateVector(circuit.apply(psi.amps, res.theta))
        e, f, g = measure(psi)
        energies.append(e)
        fids.append(f)
        grads.append(g)
        logs.append(log_norm)

    times = delta * np.arange(layers + 1, dtype=float)
    gap = None if spec is None else spec.gap
    if spec is None:
        bound = np.full(times.size, np.nan)
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
        mu=0 if spec is None else spec.ground_multiplicity,
        target_energy=float("nan") if spec is None else spec.ground_energy,
        extra={
            "delta": delta,
            "layers": layers,
            "factors_total": layers * len(h.terms),
            "total_gates": compiled.total_gates,
            "min_step_fidelity": compiled.min_step_fidelity,
        },
    )
    return compiled, psi, trace
