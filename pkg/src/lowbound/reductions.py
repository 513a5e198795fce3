"""Lower bounds for 1 <= p < 2 via random near-Euclidean sections, and the
Schatten-norm embedding of vector instances.

A random T-dimensional subspace of (R^n, ||.||_p) is spanned by an
orthonormal basis U.  On it, ||U c||_p / ||c||_2 stays within a small
ratio.  For each coordinate form ``c -> c_i`` we compute a minimal dual
norm extension ``g_i`` to all of R^n (``U^T g_i = e_i``), then rescale so
that every ``||g_i||_q <= 1``.  The map ``x -> G x`` sends the unit l_p
ball onto a set containing an l_inf ball of radius ``effective_R``, and
``f(G x)`` inherits the (kappa, L) smoothness of any f that is smooth
for the l_inf norm on R^T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .adversary import AdversaryConfig, HardInstance, adversary_new, finalize
from .exceptions import DistortionFailure, InvalidConfig
from .kernel import make_kernel
from .methods import Method, MethodTrace, default_step_constant
from .smoothing import MembershipReport, OracleAnswer, holder_ratio
from .space import Ball, NormSpec, lp_norm

__all__ = [
    "LiftMap",
    "LiftedOracle",
    "LiftedInstance",
    "random_section",
    "lift_oracle",
    "lower_bound_small_p",
    "run_lifted_session",
    "verify_radius",
    "SchattenOracle",
    "schatten_embed",
    "schatten_norm",
    "schatten_lower_bound",
    "schatten_membership",
    "ALPHA",
    "replay_lifted",
    "lift_membership",
]

ALPHA = 1.0 / 20.0  # desk proxy for the admissible aspect ratio T / n


def _dual_exponent(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1.0)


@dataclass(frozen=True)
class LiftMap:
    G: np.ndarray                    # (m, n), rows beyond T are zero
    basis: np.ndarray                # (n, T) orthonormal basis of the section
    scale: float                     # gamma(U c) = scale * c
    p: float
    T: int
    measured_distortion: tuple       # (inner, outer) of ||y||_p over sum gamma_i(y)^2 = 1
    effective_R: float
    seed: int
    attempt: int = 0

    @property
    def n(self) -> int:
        return self.G.shape[1]

    @property
    def m(self) -> int:
        return self.G.shape[0]

    @property
    def ratio(self) -> float:
        inner, outer = self.measured_distortion
        return outer / inner

    def preimage(self, y: np.ndarray) -> np.ndarray:
        """A point x of the section with ``G x = y`` (first T coordinates)."""
        return self.basis @ (np.asarray(y, dtype=float)[: self.T] / self.scale)


def _extension(U: np.ndarray, V: np.ndarray, i: int, p: float) -> np.ndarray:
    """Small-``||.||_q`` vector g with ``U^T g = e_i``."""
    n, T = U.shape
    e = np.zeros(T)
    e[i] = 1.0
    if p == 2:
        return U[:, i].copy()
    if p == 1:
        # min t  s.t. |g_j| <= t,  U^T g = e_i
        c = np.zeros(n + 1)
        c[-1] = 1.0
        eye = np.eye(n)
        A_ub = np.block([[eye, -np.ones((n, 1))], [-eye, -np.ones((n, 1))]])
        A_eq = np.hstack([U.T, np.zeros((T, 1))])
        res = optimize.linprog(c, A_ub=A_ub, b_ub=np.zeros(2 * n), A_eq=A_eq, b_eq=e,
                               bounds=[(None, None)] * (n + 1), method="highs")
        g = res.x[:n] if res.status == 0 else U[:, i].copy()
    else:
        q = _dual_exponent(p)
        base = U[:, i]

        def obj(w):
            g = base + V @ w
            a = np.abs(g)
            return float(np.sum(a**q)) / q, V.T @ (np.sign(g) * a ** (q - 1.0))

        res = optimize.minimize(obj, np.zeros(V.shape[1]), jac=True, method="L-BFGS-B",
                                options={"maxiter": 500, "gtol": 1e-12, "ftol": 1e-15})
        g = base + V @ res.x
    # restore U^T g = e_i exactly up to rounding; V is orthogonal to U
    return g + U @ (e - U.T @ g)


def _probe_norms(U: np.ndarray, p: float, rng, probes: int) -> np.ndarray:
    n, T = U.shape
    out = []
    chunk = 2048
    left = probes
    while left > 0:
        k = min(chunk, left)
        C = rng.standard_normal((T, k))
        C /= np.linalg.norm(C, axis=0)
        Y = U @ C
        out.append(_col_norms(Y, p))
        left -= k
    return np.concatenate(out) if out else np.zeros(0)


def _col_norms(Y: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(Y)
    if math.isinf(p):
        return a.max(axis=0)
    if p == 1:
        return a.sum(axis=0)
    m = a.max(axis=0)
    m = np.where(m == 0.0, 1.0, m)
    return m * np.sum((a / m) ** p, axis=0) ** (1.0 / p)


def random_section(n: int, T: int, p: float, seed: int, probes: int = 10_000,
                   max_ratio: float = 4.0, retries: int = 5) -> LiftMap:
    """Random T-dimensional section of the l_p ball with measured distortion.

    Probes are ``probes`` random unit directions plus ``probes`` sign
    vectors (the l_inf vertices that ``effective_R`` must reach).
    """
    if not (1.0 <= p <= 2.0):
        raise InvalidConfig(f"random sections are used for 1 <= p <= 2, got p={p}")
    if T < 1 or T > max(1, n // 20):
        raise InvalidConfig(f"need 1 <= T <= n/20, got T={T}, n={n}")
    m = max(T, 3)
    last = None
    for attempt in range(retries + 1):
        rng = np.random.default_rng([seed, attempt])
        A = rng.standard_normal((n, T))
        Q, Rq = np.linalg.qr(A, mode="complete")
        signs = np.sign(np.diag(Rq))
        signs[signs == 0] = 1.0
        U = Q[:, :T] * signs
        V = Q[:, T:]
        norms = _probe_norms(U, p, rng, probes)
        S = rng.choice([-1.0, 1.0], size=(T, probes)) / math.sqrt(T)
        norms = np.concatenate([norms, _col_norms(U @ S, p), _col_norms(U, p)])
        a, b = float(norms.min()), float(norms.max())
        if b / a > max_ratio:
            last = b / a
            continue
        ext = np.stack([_extension(U, V, i, p) for i in range(T)])
        q = _dual_exponent(p)
        mu = max(lp_norm(row, q) for row in ext)
        scale = 1.0 / mu
        G = np.zeros((m, n))
        G[:T] = scale * ext
        for i in range(T):  # rounding guard: ||g_i||_q <= 1 exactly
            nq = lp_norm(G[i], q)
            if nq > 1.0:
                G[i] /= nq
        effective_R = scale / (b * math.sqrt(T))
        return LiftMap(G=G, basis=U, scale=scale, p=float(p), T=T,
                       measured_distortion=(a / scale, b / scale), effective_R=effective_R,
                       seed=seed, attempt=attempt)
    raise DistortionFailure(f"sandwich ratio {last:.3f} > {max_ratio} after {retries + 1} draws")


def verify_radius(lift: LiftMap, samples: int = 1000, seed: int = 1) -> float:
    """Largest ``||x||_p`` over preimages of random vertices of the l_inf
    ball of radius ``effective_R``; containment holds when it is <= 1."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        v = lift.effective_R * rng.choice([-1.0, 1.0], size=lift.T)
        x = lift.preimage(v)
        worst = max(worst, lp_norm(x, lift.p))
    return worst


class LiftedOracle:
    """``x -> f(G x)`` with gradient ``G^T grad f(G x)``."""

    def __init__(self, base_oracle, lift: LiftMap):
        self.base = base_oracle
        self.lift = lift

    def __call__(self, x) -> OracleAnswer:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.lift.n,):
            raise ValueError(f"expected a vector of length {self.lift.n}, got shape {x.shape}")
        ans = self.base(self.lift.G @ x)
        return OracleAnswer(ans.value, self.lift.G.T @ ans.gradient, ans.inner_point)


def lift_oracle(base_oracle, lift: LiftMap) -> LiftedOracle:
    return LiftedOracle(base_oracle, lift)


def _base_kernel_dim(T: int) -> int:
    return max(T, 3)


def lower_bound_small_p(n: int, T: int, p: float, kappa: float, L: float) -> float:
    """``R^k L / (2^(k+1) M^(k-1) T^(k-1))`` with ``R = 1/(2 sqrt T)`` and M
    the certified kernel constant of (R^T, l_inf)."""
    if not (1.0 <= p <= 2.0):
        raise InvalidConfig(f"need 1 <= p <= 2, got {p}")
    if not (kappa > 1.0 and kappa <= 2.0):
        raise InvalidConfig(f"kappa must lie in (1, 2], got {kappa}")
    if T < 1 or T > max(1, n // 20):
        raise InvalidConfig(f"need 1 <= T <= n/20, got T={T}, n={n}")
    R = 1.0 / (2.0 * math.sqrt(T))
    M = make_kernel(NormSpec(math.inf, _base_kernel_dim(T))).m_phi
    return R**kappa * L / (2.0 ** (kappa + 1.0) * M ** (kappa - 1.0) * T ** (kappa - 1.0))


@dataclass
class LiftedInstance:
    base: HardInstance
    lift: LiftMap
    effective_R: float
    certificate: np.ndarray
    bound: float
    queries: list = field(default_factory=list)  # method queries in R^n

    @property
    def space(self) -> NormSpec:
        return NormSpec(self.lift.p, self.lift.n)

    def __call__(self, x) -> OracleAnswer:
        return LiftedOracle(self.base, self.lift)(x)

    def certified_gap(self, x) -> float:
        return self(x).value - self(self.certificate).value


def run_lifted_session(n: int, T: int, p: float, kappa: float, L: float, method_name: str,
                       seed: int = 0, probes: int = 10_000, lift: LiftMap | None = None
                       ) -> tuple[LiftedInstance, MethodTrace, Method]:
    """Adversary over (R^T, l_inf) played through the lift against a method
    on the unit l_p ball of R^n.

    The base ball radius is ``1/(2 sqrt T)`` when the measured section
    supports it, else the smaller certified ``effective_R``.
    """
    if lift is None:
        lift = random_section(n, T, p, seed, probes)
    R_base = min(1.0 / (2.0 * math.sqrt(T)), lift.effective_R)
    config = AdversaryConfig(NormSpec(math.inf, lift.m), T, kappa, L, R=R_base)
    state = adversary_new(config)
    L_est = default_step_constant(kappa, L, 1.0, T, p, n) if method_name == "accelerated" else None
    method = Method(method_name, T, L_est)
    ball = Ball(NormSpec(p, n), 1.0)
    trace = method.run(LiftedOracle(state, lift), ball)
    hi = finalize(state)
    x_star = lift.preimage(hi.certificate)
    inst = LiftedInstance(base=hi, lift=lift, effective_R=lift.effective_R,
                          certificate=x_star, bound=hi.bound, queries=list(trace.queries))
    return inst, trace, method


def replay_lifted(inst: LiftedInstance, method: Method, recorded: list) -> bool:
    trace = method.run(inst, Ball(inst.space, 1.0))
    return len(trace.queries) == len(recorded) and all(
        np.array_equal(a, b) for a, b in zip(trace.queries, recorded)
    )


def lift_membership(inst: LiftedInstance, samples: int, seed: int, tol: float = 1e-10
                    ) -> MembershipReport:
    f = inst.base.f
    return holder_ratio(inst, inst.space, f.kappa, f.L, samples, seed, radius=1.0, tol=tol,
                        local_scale=1e-2 * f.chi * f.radius)


def schatten_norm(X, p: float) -> float:
    return lp_norm(np.linalg.svd(np.asarray(X, dtype=float), compute_uv=False), p)


class SchattenOracle:
    """``F(X) = f(diag X)`` with gradient ``Diag(grad f(diag X))``."""

    def __init__(self, vector_oracle, m: int, p: float):
        self.f = vector_oracle
        self.m = m
        self.p = p

    def __call__(self, X) -> OracleAnswer:
        X = np.asarray(X, dtype=float)
        if X.shape != (self.m, self.m):
            raise ValueError(f"expected a {self.m}x{self.m} matrix, got shape {X.shape}")
        ans = self.f(np.diagonal(X).copy())
        return OracleAnswer(ans.value, np.diag(ans.gradient), ans.inner_point)


def schatten_embed(vector_oracle, m: int, p: float) -> SchattenOracle:
    return SchattenOracle(vector_oracle, m, p)


def schatten_lower_bound(m: int, T: int, p: float, kappa: float, L: float) -> float:
    """Bound for the m x m Schatten-p ball: the vector bound at dimension m."""
    from .adversary import lower_bound

    if p >= 2:
        return lower_bound(AdversaryConfig(NormSpec(p, m), T, kappa, L))
    return lower_bound_small_p(m, T, p, kappa, L)


def schatten_membership(oracle: SchattenOracle, kappa: float, L: float, samples: int,
                        seed: int) -> float:
    """Largest Hölder ratio over random dense matrix pairs, measured in
    Schatten norms (dual exponent for gradients)."""
    rng = np.random.default_rng(seed)
    q = _dual_exponent(oracle.p)
    worst = 0.0
    for _ in range(samples):
        X = rng.standard_normal((oracle.m, oracle.m))
        X *= 2.0 * rng.random() / schatten_norm(X, oracle.p)
        D = rng.standard_normal((oracle.m, oracle.m))
        D *= math.exp(rng.uniform(math.log(1e-4), 0.0)) / schatten_norm(D, oracle.p)
        Y = X + D
        dist = schatten_norm(X - Y, oracle.p)
        num = schatten_norm(oracle(X).gradient - oracle(Y).gradient, q)
        worst = max(worst, num / dist ** (kappa - 1.0))
    return worst
