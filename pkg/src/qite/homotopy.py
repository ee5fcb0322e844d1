"""Damped Newton corrector and parameter-path tracker for smooth nonlinear systems.

``track_path`` follows the solution ``x(delta)`` of ``h(delta, x) = 0`` from a
known point at ``delta = 0`` to a target value, correcting with Newton at every
sub-step and halving the sub-step when the corrector fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import PathFailure, SingularJacobianError

FD_STEP = 1e-6
COND_LIMIT = 1e12


@dataclass
class NewtonResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norms: list[float] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return min(self.residual_norms)


@dataclass
class SubStep:
    delta: float
    iterations: int
    residual: float
    point: np.ndarray | None = None


@dataclass
class PathDiagnostics:
    sub_steps: list[SubStep] = field(default_factory=list)
    failures: int = 0

    @property
    def deltas(self) -> list[float]:
        return [s.delta for s in self.sub_steps]

    @property
    def total_iterations(self) -> int:
        return sum(s.iterations for s in self.sub_steps)


def finite_difference_jacobian(fn: Callable, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of ``fn`` at ``x``."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(fn(x))
    jac = np.empty((f0.size, x.size))
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        jac[:, k] = (np.atleast_1d(fn(x + e)) - np.atleast_1d(fn(x - e))) / (2 * step)
    return jac


def solve_checked(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``jac @ dx = rhs``, refusing numerically singular Jacobians."""
    cond = np.linalg.cond(jac)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularJacobianError(f"Jacobian condition number {cond:.3g} exceeds {COND_LIMIT:.0e}")
    return np.linalg.solve(jac, rhs)


def newton_correct(
    residual_fn: Callable,
    jacobian_fn: Callable | None,
    x0,
    tol: float = 1e-10,
    max_iter: int = 50,
    linear_solve: Callable = solve_checked,
    max_backtracks: int = 20,
) -> NewtonResult:
    """Damped Newton iteration for ``residual_fn(x) = 0``.

    A full step is tried first and halved (up to ``max_backtracks`` times)
    while it increases the residual norm. Returns the best iterate; check
    ``converged``. ``jacobian_fn=None`` falls back to central differences.

    Raises:
        SingularJacobianError: from the default ``linear_solve`` when the
            Jacobian condition estimate exceeds ``1e12``.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    r = np.atleast_1d(residual_fn(x))
    rn = float(np.linalg.norm(r))
    norms = [rn]
    it = 0
    while rn > tol and it < max_iter:
        it += 1
        jac = finite_difference_jacobian(residual_fn, x) if jacobian_fn is None else np.atleast_2d(jacobian_fn(x))
        step = linear_solve(jac, -r)
        lam = 1.0
        for _ in range(max_backtracks + 1):
            x_new = x + lam * step
            r_new = np.atleast_1d(residual_fn(x_new))
            rn_new = float(np.linalg.norm(r_new))
            if rn_new <= rn:
                break
            lam *= 0.5
        else:
            return NewtonResult(x, False, it, norms)
        x, r, rn = x_new, r_new, rn_new
        norms.append(rn)
    return NewtonResult(x, rn <= tol, it, norms)


def track_path(
    residual_fn: Callable,
    x_at_zero,
    delta_target: float,
    delta_min: float | None = None,
    tol: float = 1e-10,
    jacobian_fn: Callable | None = None,
    predictor: str = "zero",
    max_iter: int = 50,
    linear_solve: Callable = solve_checked,
    max_jump: float | None = None,
) -> tuple[np.ndarray, PathDiagnostics]:
    """Continue the root of ``residual_fn(delta, x)`` from ``delta = 0`` to ``delta_target``.

    Args:
        residual_fn: ``h(delta, x) -> residual vector``.
        x_at_zero: root at ``delta = 0``.
        delta_target: end of the path.
        delta_min: smallest admissible sub-step; defaults to ``delta_target / 2**10``.
        tol: residual tolerance for accepting a sub-step.
        jacobian_fn: ``(delta, x) -> d h / d x``; finite differences when omitted.
        predictor: ``"zero"`` reuses the previous solution, ``"euler"`` adds
            a tangent step ``-J^{-1} dh/ddelta * step``.
        max_jump: reject corrected points farther than this from the predictor.

    Raises:
        PathFailure: the sub-step fell below ``delta_min``; ``diagnostics`` attached.
    """
    x = np.atleast_1d(np.asarray(x_at_zero, dtype=float)).copy()
    r0 = float(np.linalg.norm(np.atleast_1d(residual_fn(0.0, x))))
    if r0 > tol:
        raise ValueError(f"x_at_zero is not a root at delta=0 (residual {r0:.3g})")
    diag = PathDiagnostics()
    if delta_target == 0:
        return x, diag
    if delta_target < 0:
        raise ValueError("delta_target must be non-negative")
    if predictor not in ("zero", "euler"):
        raise ValueError(f"unknown predictor {predictor!r}")
    if delta_min is None:
        delta_min = delta_target / 2**10

    delta = 0.0
    step = delta_target
    while delta < delta_target:
        nxt = delta_target if delta + step >= delta_target else delta + step
        step = nxt - delta
        jac = None if jacobian_fn is None else (lambda y, d=nxt: jacobian_fn(d, y))
        guess = x
        ok = False
        try:
            if predictor == "euler":
                guess = x + step * _tangent(residual_fn, jacobian_fn, delta, x, linear_solve)
            res = newton_correct(lambda y, d=nxt: residual_fn(d, y), jac, guess, tol, max_iter, linear_solve)
            ok = res.converged and (max_jump is None or np.linalg.norm(res.x - guess) <= max_jump)
        except (SingularJacobianError, np.linalg.LinAlgError):
            ok = False
        if ok:
            x = res.x
            delta = nxt
            diag.sub_steps.append(SubStep(nxt, res.iterations, res.residual_norms[-1], res.x.copy()))
            step = min(2 * step, delta_target)
        else:
            diag.failures += 1
            step *= 0.5
            if step < delta_min:
                raise PathFailure(
                    f"sub-step {step:.3g} fell below delta_min={delta_min:.3g} at delta={delta:.6g}",
                    diag,
                )
    return x, diag


def _tangent(residual_fn, jacobian_fn, delta, x, linear_solve) -> np.ndarray:
    """``dx/ddelta = -J^{-1} dh/ddelta`` with a forward difference in ``delta``."""
    dh = (np.atleast_1d(residual_fn(delta + FD_STEP, x)) - np.atleast_1d(residual_fn(delta, x))) / FD_STEP
    if jacobian_fn is None:
        jac = finite_difference_jacobian(lambda y: residual_fn(delta, y), x)
    else:
        jac = np.atleast_2d(jacobian_fn(delta, x))
    return linear_solve(jac, -dh)
