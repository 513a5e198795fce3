"""Resisting oracle for smooth convex minimization over l_p balls, p >= 2.

The adversary answers a method's queries one by one.  At query t it picks
the unused coordinate ``sigma(t)`` among the first T on which the query is
largest in magnitude, the sign ``xi_t`` of that coordinate, and appends the
piece ``xi_t * x[sigma(t)] - (t-1) delta`` to the max-affine core.  The
answer is the smoothed t-piece instance at the query, which agrees with the
final T-piece instance near every earlier query.  After T queries the
final instance, a certificate point and the lower bound are fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BudgetExhausted, IncompleteRun, InvalidConfig
from .kernel import SmoothingKernel, make_kernel
from .methods import Method, MethodTrace
from .smoothing import MaxAffine, OracleAnswer, SmoothedInstance, smooth_eval
from .space import Ball, NormSpec

__all__ = [
    "AdversaryConfig",
    "AdversaryState",
    "HardInstance",
    "adversary_new",
    "answer_query",
    "finalize",
    "replay_check",
    "lower_bound",
    "run_session",
]


@dataclass(frozen=True)
class AdversaryConfig:
    space: NormSpec
    T: int
    kappa: float = 2.0
    L: float = 1.0
    kernel: SmoothingKernel | None = None
    R: float = 1.0

    def __post_init__(self):
        if self.kernel is None:
            if self.space.p < 2:
                raise InvalidConfig("the adversary needs p >= 2; use lowbound.reductions for p < 2")
            object.__setattr__(self, "kernel", make_kernel(self.space))
        if self.kernel.space != self.space:
            raise InvalidConfig("kernel was built for a different space")
        if int(self.T) != self.T or self.T < 1:
            raise InvalidConfig(f"T must be a positive integer, got {self.T}")
        if self.T > self.space.n:
            raise InvalidConfig(f"T={self.T} exceeds n={self.space.n}")
        if not (1.0 < self.kappa <= 2.0):
            raise InvalidConfig(f"kappa must lie in (1, 2], got {self.kappa}")
        if not (self.L > 0 and self.R > 0):
            raise InvalidConfig("L and R must be positive")

    @property
    def rho(self) -> float:
        return self.kernel.rho

    @property
    def M(self) -> float:
        return self.kernel.m_phi

    @property
    def Delta(self) -> float:
        p = self.space.p
        return 1.0 if math.isinf(p) else self.T ** (-1.0 / p)

    @property
    def delta(self) -> float:
        return self.Delta / (2.0 * self.T)

    @property
    def chi(self) -> float:
        return self.Delta / (4.0 * self.T * self.rho)

    @property
    def beta(self) -> float:
        # unit-ball instance built for L R^kappa, then rescaled to radius R
        k = self.kappa
        L_unit = self.L * self.R**k
        return L_unit * self.Delta ** (k - 1.0) / (2.0**k * (self.T * self.rho * self.M) ** (k - 1.0))

    def ball(self) -> Ball:
        return Ball(self.space, self.R)


def lower_bound(config: AdversaryConfig) -> float:
    """``R^k Delta^k L / (2^(k+1) (rho M)^(k-1) T^(k-1))``."""
    k, T = config.kappa, config.T
    return (
        config.R**k * config.Delta**k * config.L
        / (2.0 ** (k + 1.0) * (config.rho * config.M) ** (k - 1.0) * T ** (k - 1.0))
    )


@dataclass
class AdversaryState:
    config: AdversaryConfig
    t: int = 0
    sigma: list = field(default_factory=list)
    xi: list = field(default_factory=list)
    queries: list = field(default_factory=list)
    answers: list = field(default_factory=list)
    g: MaxAffine | None = None

    def instance(self, g: MaxAffine) -> SmoothedInstance:
        c = self.config
        return SmoothedInstance(g, c.kernel, c.chi, c.beta, c.kappa, c.L, c.R)

    def __call__(self, x) -> OracleAnswer:
        return answer_query(self, x)


def adversary_new(config: AdversaryConfig) -> AdversaryState:
    return AdversaryState(config)


def _pick(x: np.ndarray, used: set, T: int) -> tuple[int, float]:
    mags = np.abs(x[:T])
    if used:
        mags[list(used)] = -1.0
    i = int(np.argmax(mags))  # first maximizer, i.e. smallest index
    return i, (-1.0 if x[i] < 0 else 1.0)


def answer_query(state: AdversaryState, x) -> OracleAnswer:
    c = state.config
    if state.t >= c.T:
        raise BudgetExhausted(f"all {c.T} queries have been answered")
    x = c.space.check(x)
    i, s = _pick(x, set(state.sigma), c.T)
    offset = -state.t * c.delta
    if state.g is None:
        g = MaxAffine.sparse(c.space.n, [i], [s], [offset])
    else:
        g = state.g.append(i, s, offset)
    ans = smooth_eval(state.instance(g), x)
    state.g = g
    state.sigma.append(i)
    state.xi.append(s)
    state.queries.append(x.copy())
    state.answers.append(ans)
    state.t += 1
    return ans


@dataclass
class HardInstance:
    f: SmoothedInstance
    certificate: np.ndarray
    bound: float
    trace: AdversaryState

    @property
    def config(self) -> AdversaryConfig:
        return self.trace.config

    def __call__(self, x) -> OracleAnswer:
        return smooth_eval(self.f, x)

    def certified_gap(self, x) -> float:
        """``f(x) - f(x_*)``, a lower bound on ``f(x) - Opt``."""
        return smooth_eval(self.f, x).value - smooth_eval(self.f, self.certificate).value


def finalize(state: AdversaryState) -> HardInstance:
    c = state.config
    if state.t < c.T:
        raise IncompleteRun(f"only {state.t} of {c.T} queries answered")
    f = state.instance(state.g)
    x_star = np.zeros(c.space.n)
    x_star[state.sigma] = -np.asarray(state.xi) * c.R * c.Delta
    v = smooth_eval(f, x_star).value
    if v > -c.beta * c.Delta + 1e-10 * max(1.0, c.beta):
        raise AssertionError(f"certificate value {v} exceeds -beta*Delta = {-c.beta * c.Delta}")
    return HardInstance(f=f, certificate=x_star, bound=lower_bound(c), trace=state)


def replay_check(hi: HardInstance, method: Method) -> bool:
    """Rerun ``method`` on the static final instance and compare trajectories bitwise."""
    trace = method.run(hi, hi.config.ball())
    rec = hi.trace.queries
    return len(trace.queries) == len(rec) and all(
        np.array_equal(a, b) for a, b in zip(trace.queries, rec)
    )


def run_session(config: AdversaryConfig, method: Method) -> tuple[HardInstance, MethodTrace]:
    """Play ``method`` against a fresh adversary and finalize the instance."""
    if method.T != config.T:
        raise InvalidConfig(f"method budget {method.T} differs from T={config.T}")
    state = adversary_new(config)
    trace = method.run(state, config.ball())
    return finalize(state), trace
