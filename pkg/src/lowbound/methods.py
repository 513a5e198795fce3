"""Deterministic first-order methods driven by an oracle callable.

An oracle is any callable ``oracle(x) -> OracleAnswer``.  Every method
queries it exactly once per step, so the budget T counts oracle calls.  The
reported ``final_point`` is the queried feasible point with the lowest
observed value, never an unqueried iterate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .space import Ball, lmo, lp_norm, project

__all__ = [
    "Method",
    "MethodTrace",
    "run_cg",
    "run_accelerated",
    "run_subgradient",
    "hoelder_to_lipschitz",
    "default_step_constant",
    "METHOD_NAMES",
]

METHOD_NAMES = ("cg", "accelerated", "subgradient")


@dataclass
class MethodTrace:
    queries: list = field(default_factory=list)
    answers: list = field(default_factory=list)
    final_point: np.ndarray | None = None
    best_value: float = math.inf

    def record(self, x, answer):
        self.queries.append(np.array(x, dtype=float, copy=True))
        self.answers.append(answer)

    def close(self, ball: Ball):
        best = None
        for x, a in zip(self.queries, self.answers):
            if ball.contains(x) and (best is None or a.value < self.best_value):
                best, self.best_value = x, a.value
        self.final_point = best
        return self


def run_cg(oracle, ball: Ball, T: int) -> MethodTrace:
    """Conditional gradient, open-loop step 2/(k+2), started at the center."""
    trace = MethodTrace()
    x = ball.center.copy()
    for k in range(1, T + 1):
        ans = oracle(x)
        trace.record(x, ans)
        if k == T:
            break
        s = lmo(ball, ans.gradient)
        gamma = 2.0 / (k + 2.0)
        x = (1.0 - gamma) * x + gamma * s
    return trace.close(ball)


def run_accelerated(oracle, ball: Ball, T: int, L_est: float) -> MethodTrace:
    """Accelerated projected gradient in similar-triangles form.

    Queries ``y_k = (1 - a_k) x_k + a_k z_k`` with ``a_k = 2/(k+1)`` are
    convex combinations of feasible points, so every query is feasible.
    """
    if not L_est > 0:
        raise ValueError("L_est must be positive")
    trace = MethodTrace()
    x = ball.center.copy()
    z = ball.center.copy()
    for k in range(1, T + 1):
        a = 2.0 / (k + 1.0)
        y = (1.0 - a) * x + a * z
        ans = oracle(y)
        trace.record(y, ans)
        if k == T:
            break
        z = project(ball, z - ans.gradient / (a * L_est))
        x = (1.0 - a) * x + a * z
    return trace.close(ball)


def run_subgradient(oracle, ball: Ball, T: int) -> MethodTrace:
    """Projected (sub)gradient with step ``R / (||g||_2 sqrt(T))``; stays put on a zero gradient."""
    trace = MethodTrace()
    x = ball.center.copy()
    step = ball.radius / math.sqrt(T)
    for k in range(1, T + 1):
        ans = oracle(x)
        trace.record(x, ans)
        if k == T:
            break
        gn = lp_norm(ans.gradient, 2.0)
        if gn > 0.0:
            x = project(ball, x - (step / gn) * ans.gradient)
    return trace.close(ball)


def hoelder_to_lipschitz(L: float, kappa: float, eps: float) -> float:
    """Lipschitz constant of the inexact quadratic model of a (kappa, L)-smooth
    function with accuracy ``eps``; equals L at kappa = 2."""
    nu = kappa - 1.0
    if nu >= 1.0:
        return L
    return ((1.0 - nu) / ((1.0 + nu) * eps)) ** ((1.0 - nu) / (1.0 + nu)) * L ** (2.0 / (1.0 + nu))


def default_step_constant(kappa: float, L: float, R: float, T: int, p: float, n: int) -> float:
    """Deterministic Euclidean step constant for ``run_accelerated``.

    L is measured in (||.||_p, ||.||_q); it is converted to the Euclidean
    pair (a no-op for p >= 2), then to a Lipschitz model at the accuracy of
    the accelerated Hölder rate ``L (2R)^kappa / T^((3 kappa - 2)/2)``.
    """
    if p < 2:
        q = math.inf if p == 1 else p / (p - 1.0)
        inv_q = 0.0 if math.isinf(q) else 1.0 / q
        L = L * n ** (0.5 - inv_q) * n ** ((1.0 / p - 0.5) * (kappa - 1.0))
    eps = L * (2.0 * R) ** kappa / T ** ((3.0 * kappa - 2.0) / 2.0)
    return hoelder_to_lipschitz(L, kappa, eps)


@dataclass(frozen=True)
class Method:
    """A named deterministic method with its budget.

    ``L_est`` is only used by the accelerated variant.
    """

    name: str
    T: int
    L_est: float | None = None

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ValueError(f"unknown method {self.name!r}; choose from {METHOD_NAMES}")
        if self.T < 1:
            raise ValueError("budget T must be positive")
        if self.name == "accelerated" and not (self.L_est and self.L_est > 0):
            raise ValueError("the accelerated method needs a positive L_est")

    def run(self, oracle, ball: Ball) -> MethodTrace:
        if self.name == "cg":
            return run_cg(oracle, ball, self.T)
        if self.name == "accelerated":
            return run_accelerated(oracle, ball, self.T, self.L_est)
        return run_subgradient(oracle, ball, self.T)
