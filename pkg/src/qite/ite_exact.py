"""Closed-form imaginary time evolution in the eigenbasis, traces and convergence bounds."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StateError
from .pauli import Hamiltonian
from .spectral import Spectrum, eigen_coeffs, eigendecompose
from .state import StateVector

ORTHOGONAL_TOL = 1e-14
CSV_COLUMNS = ("t", "energy", "fidelity", "grad_norm_sq", "fidelity_bound", "norm_log")


@dataclass
class EvolutionTrace:
    """Sampled energy, fidelity and bound values along one evolution.

    ``fidelity`` is measured against the target level: the ground space, or
    for an orthogonal start (``orthogonal_start``) the lowest level the initial
    state overlaps with. ``f0``, ``gap`` and ``mu`` describe that same level.
    """

    times: np.ndarray
    energy: np.ndarray
    fidelity: np.ndarray
    gradient_norm_sq: np.ndarray
    fidelity_bound: np.ndarray
    norm_log: np.ndarray
    f0: float = float("nan")
    gap: float | None = None
    mu: int = 0
    orthogonal_start: bool = False
    target_energy: float = float("nan")
    warnings: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def fidelity_bound_ok(self, slack: float = 1e-9) -> bool:
        return bool(np.all(self.fidelity >= self.fidelity_bound - slack))

    def energy_monotone(self, slack: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.energy) <= slack))

    def rows(self):
        cols = (self.times, self.energy, self.fidelity, self.gradient_norm_sq, self.fidelity_bound, self.norm_log)
        return zip(*(c.tolist() for c in cols))

    def to_csv(self, path=None, header: dict | None = None) -> str:
        """CSV text with an optional leading ``# {json}`` comment line."""
        buf = io.StringIO()
        if header is not None:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def summary(self) -> dict:
        return {
            "samples": len(self),
            "t_final": float(self.times[-1]),
            "energy_final": float(self.energy[-1]),
            "fidelity_final": float(self.fidelity[-1]),
            "f0": self.f0,
            "gap": self.gap,
            "mu": self.mu,
            "orthogonal_start": self.orthogonal_start,
            "fidelity_bound_ok": self.fidelity_bound_ok(),
            "warnings": list(self.warnings),
            **self.extra,
        }


def fidelity_lower_bound(f0: float, gap: float | None, t):
    """``1 / (1 + e^{-2 t gap} / f0)``; equals ``f0`` identically when there is no gap."""
    t = np.asarray(t, dtype=float)
    if f0 <= 0:
        return np.zeros_like(t)
    if gap is None:
        return np.full_like(t, f0)
    return 1.0 / (1.0 + np.exp(-2.0 * t * gap) / f0)


def exact_ite_coeffs(alpha0, eigenvalues, t: float) -> np.ndarray:
    """Eigenbasis coefficients of the normalized state ``e^{-tH} psi(0)``.

    Uses ``alpha_j(t) = alpha_j(0) e^{-t(l_j - l_ref)} / sqrt(sum_k |alpha_k(0)|^2
    e^{-2t(l_k - l_ref)})`` with ``l_ref`` the lowest eigenvalue carrying weight,
    so no exponential in the sum exceeds one. Zero coefficients stay exactly zero.
    """
    if t < 0:
        raise DomainError(f"imaginary time must be non-negative, got {t}")
    alpha0 = np.asarray(alpha0, dtype=np.complex128)
    lam = np.asarray(eigenvalues, dtype=float)
    w = np.abs(alpha0) ** 2
    total = w.sum()
    if total == 0:
        raise DomainError("initial coefficient vector is zero")
    if abs(total - 1.0) > 1e-10:
        raise StateError(f"initial coefficients are not normalized (sum |a|^2 = {total!r})")
    if t == 0:
        return alpha0.copy()
    support = w > 0
    lam_ref = lam[support].min()
    out = np.zeros_like(alpha0)
    damp = np.exp(-t * (lam[support] - lam_ref))
    denom = math.sqrt(float(np.sum(w[support] * damp**2)))
    out[support] = alpha0[support] * damp / denom
    return out


def _target_level(alpha0: np.ndarray, spec: Spectrum):
    """Return ``(start, stop, next_start)`` of the lowest populated eigenvalue cluster."""
    w = np.abs(alpha0) ** 2
    levels = spec.levels()
    for n, (a, b) in enumerate(levels):
        if w[a:b].sum() >= ORTHOGONAL_TOL:
            nxt = levels[n + 1][0] if n + 1 < len(levels) else None
            return a, b, nxt
    return levels[0][0], levels[0][1], (levels[1][0] if len(levels) > 1 else None)


def exact_evolve(
    state0: StateVector,
    h: Hamiltonian,
    t: float,
    samples: int = 100,
    spectrum: Spectrum | None = None,
) -> tuple[EvolutionTrace, StateVector]:
    """Evolve ``state0`` to imaginary time ``t`` exactly; sample the trace uniformly on ``[0, t]``."""
    if t < 0:
        raise DomainError(f"imaginary time must be non-negative, got {t}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if abs(state0.norm() - 1.0) > 1e-10:
        raise StateError("initial state must be normalized")
    spec = eigendecompose(h) if spectrum is None else spectrum
    alpha0 = eigen_coeffs(state0, spec)
    lam = spec.eigenvalues

    ground_f0 = float(np.sum(np.abs(alpha0[: spec.ground_multiplicity]) ** 2))
    orthogonal = ground_f0 < ORTHOGONAL_TOL
    if orthogonal:
        start, stop, nxt = _target_level(alpha0, spec)
    else:
        start, stop = 0, spec.ground_multiplicity
        nxt = None if spec.gap is None else stop
    f0 = float(np.sum(np.abs(alpha0[start:stop]) ** 2))
    gap = None if nxt is None else float(lam[nxt] - lam[start])

    if t == 0 or samples == 1:
        times = np.array([float(t)])
    else:
        times = np.linspace(0.0, t, samples)

    w = np.abs(alpha0) ** 2
    support = w > 0
    lam_ref = lam[support].min()
    shifted = lam - lam_ref
    # weights |alpha_j(t)|^2 for every sampled time, rows = times
    log_w = np.full((times.size, lam.size), -np.inf)
    log_w[:, support] = np.log(w[support])[None, :] - 2.0 * times[:, None] * shifted[None, support]
    log_norm_sq = np.logaddexp.reduce(log_w, axis=1)
    probs = np.exp(log_w - log_norm_sq[:, None])

    energy = probs @ lam
    variance = np.sum(probs * (lam[None, :] - energy[:, None]) ** 2, axis=1)
    fid = probs[:, start:stop].sum(axis=1)
    norm_log = -times * lam_ref + 0.5 * log_norm_sq

    trace = EvolutionTrace(
        times=times,
        energy=energy,
        fidelity=fid,
        gradient_norm_sq=variance,
        fidelity_bound=fidelity_lower_bound(f0, gap, times),
        norm_log=norm_log,
        f0=f0,
        gap=gap,
        mu=stop - start,
        orthogonal_start=orthogonal,
        target_energy=float(lam[start]),
    )
    if orthogonal:
        trace.warnings.append(
            "initial state is orthogonal to the ground space; fidelity refers to the "
            f"lowest populated level at energy {lam[start]:.12g}"
        )
    alpha_t = exact_ite_coeffs(alpha0, lam, float(times[-1]))
    final = StateVector(spec.eigenvectors @ alpha_t)
    return trace, final


def gradient_norm_sq(state: StateVector, h: Hamiltonian) -> float:
    """``||H psi - <H> psi||^2``, the squared norm of the tangent-space projection of ``H psi``.

    Equal to the energy variance; zero exactly at eigenstates.
    """
    h_psi = h.apply(state.amps)
    e = np.vdot(state.amps, h_psi).real
    r = h_psi - e * state.amps
    return float(np.vdot(r, r).real)


def fidelity_threshold_time(f_target: float, f0: float, gap: float) -> float:
    """Time after which the fidelity lower bound guarantees ``f_target``."""
    if not 0 < f_target < 1:
        raise DomainError("f_target must lie in (0, 1)")
    if not 0 < f0 <= 1:
        raise DomainError("f0 must lie in (0, 1]")
    if not gap > 0:
        raise DomainError("gap must be positive")
    t = (math.log(f_target) - math.log1p(-f_target) - math.log(f0)) / (2.0 * gap)
    return max(t, 0.0)


def error_bound(state0_fidelity: float, gap: float, t: float) -> float:
    """Leading-order bound ``e^{-2t gap} / f0^3`` on ``||psi(t) - psi(inf)||^2``.

    The neglected factor is ``|1 + O(e^{-2t gap})|^2`` (see
    :func:`error_bound_correction`), so the bound is only meaningful once
    ``e^{-2t gap}`` is small; callers validate it for ``e^{-2t gap} <= 0.1``.
    """
    if not state0_fidelity > 0:
        raise DomainError("initial ground-space fidelity must be positive")
    if not gap > 0:
        raise DomainError("gap must be positive")
    if t < 0:
        raise DomainError("t must be non-negative")
    return math.exp(-2.0 * t * gap) / state0_fidelity**3


def error_bound_correction(gap: float, t: float) -> float:
    """Size ``e^{-2t gap}`` of the relative correction hidden in :func:`error_bound`."""
    return math.exp(-2.0 * t * gap)


def limit_state(state0: StateVector, spec: Spectrum) -> StateVector:
    """``lim_{t->inf} psi(t)``: projection onto the lowest populated level, normalized."""
    alpha0 = eigen_coeffs(state0, spec)
    start, stop, _ = _target_level(alpha0, spec)
    vecs = spec.eigenvectors[:, start:stop]
    proj = vecs @ alpha0[start:stop]
    return StateVector(proj / np.linalg.norm(proj))
