"""Small first-order optimizers shared by the IK, completion and RL code."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class NumericalError(RuntimeError):
    """Raised when a loss or gradient evaluation produces NaN/inf."""


@dataclass
class DescentResult:
    x: np.ndarray
    loss: float
    iterations: int
    loss_history: list[float]
    grad_norm: float
    stopped_by: str


def minimize_scaled_descent(
    fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    max_steps: int,
    step_size: float,
    grad_tol: float = 1e-6,
    should_stop: Callable[[np.ndarray], bool] | None = None,
    on_step: Callable[[int, np.ndarray], None] | None = None,
) -> DescentResult:
    """Gradient descent with per-coordinate RMS scaling and backtracking.

    Steps follow -lr * g / sqrt(v), where v is a running second moment of
    the gradient; a step that would increase the loss halves lr and is
    retried, so the best-iterate loss never increases. Returns the best
    iterate seen.
    """
    x = np.asarray(x0, dtype=float).copy()
    loss, grad = fn(x)
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite loss/gradient at the initial point")
    best_x, best_loss = x.copy(), loss
    history = [loss]
    v = np.zeros_like(x)
    lr = step_size
    beta2, eps = 0.999, 1e-12
    stopped_by = "max_steps"
    steps = 0

    for step in range(1, max_steps + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < grad_tol:
            stopped_by = "grad_tol"
            break
        if should_stop is not None and should_stop(x):
            stopped_by = "should_stop"
            break
        v = beta2 * v + (1.0 - beta2) * grad * grad
        vhat = v / (1.0 - beta2**step)
        direction = grad / (np.sqrt(vhat) + eps)

        accepted = False
        for _ in range(40):
            cand = x - lr * direction
            cand_loss, cand_grad = fn(cand)
            if not np.isfinite(cand_loss) or not np.all(np.isfinite(cand_grad)):
                raise NumericalError(f"non-finite loss/gradient at step {step}")
            if cand_loss <= loss:
                accepted = True
                break
            lr *= 0.5
            if lr < 1e-15:
                break
        if not accepted:
            stopped_by = "line_search"
            break
        x, loss, grad = cand, cand_loss, cand_grad
        lr = min(lr * 1.3, step_size * 10.0)
        steps = step
        history.append(loss)
        if loss < best_loss:
            best_loss, best_x = loss, x.copy()
        if on_step is not None:
            on_step(step, x)

    return DescentResult(
        best_x, best_loss, steps, history, float(np.linalg.norm(grad)), stopped_by
    )


@dataclass
class LeastSquaresResult:
    x: np.ndarray
    loss: float
    iterations: int
    grad_norm: float
    stopped_by: str


def minimize_least_squares(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    jacobian_fn: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    max_steps: int,
    grad_tol: float = 1e-6,
    should_stop: Callable[[np.ndarray], bool] | None = None,
    damping: float = 1e-3,
) -> LeastSquaresResult:
    """Levenberg-Marquardt minimization of ||residual(x)||^2.

    Accepted steps shrink the damping, rejected ones grow it, so the
    best-iterate loss is non-increasing. Returns the best iterate seen.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = residual_fn(x)
    loss = float(r @ r)
    if not np.isfinite(loss):
        raise NumericalError("non-finite residual at the initial point")
    best_x, best_loss = x.copy(), loss
    lam = damping
    stopped_by = "max_steps"
    steps = 0
    grad_norm = np.inf

    for step in range(1, max_steps + 1):
        jac = jacobian_fn(x)
        grad = 2.0 * jac.T @ r
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < grad_tol:
            stopped_by = "grad_tol"
            break
        if should_stop is not None and should_stop(x):
            stopped_by = "should_stop"
            break
        jtj = jac.T @ jac
        accepted = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(jtj.shape[0]), -jac.T @ r)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            cand = x + delta
            r_cand = residual_fn(cand)
            cand_loss = float(r_cand @ r_cand)
            if not np.isfinite(cand_loss):
                raise NumericalError(f"non-finite residual at step {step}")
            if cand_loss <= loss:
                x, r, loss = cand, r_cand, cand_loss
                lam = max(lam * 0.5, 1e-12)
                accepted = True
                break
            lam *= 4.0
            if lam > 1e12:
                break
        steps = step
        if not accepted:
            stopped_by = "damping_limit"
            break
        if loss < best_loss:
            best_loss, best_x = loss, x.copy()

    return LeastSquaresResult(best_x, best_loss, steps, grad_norm, stopped_by)


@dataclass
class AdamState:
    """Classic Adam accumulator for stochastic objectives (no backtracking)."""

    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t: int = 0

    def step(
        self,
        params: np.ndarray,
        grad: np.ndarray,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> np.ndarray:
        if self.m.size != params.size:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
            self.t = 0
        self.t += 1
        self.m = beta1 * self.m + (1 - beta1) * grad
        self.v = beta2 * self.v + (1 - beta2) * grad * grad
        mhat = self.m / (1 - beta1**self.t)
        vhat = self.v / (1 - beta2**self.t)
        return params - lr * mhat / (np.sqrt(vhat) + eps)
