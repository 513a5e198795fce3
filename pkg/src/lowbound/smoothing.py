"""Local inf-convolution smoothing of max-affine functions.

``S_chi[g](x) = min_h g(x + h) + chi * phi(h / chi)`` with gradient
``-phi'(h*/chi)`` at the minimizer ``h*``.

Two inner solvers are provided:

* When every term of g is supported on a single coordinate and no two
  terms share a coordinate (the adversary's instances), the problem
  collapses to the level ``tau = g(x + h)``: each coordinate moves just
  far enough to push its term down to ``tau``, and ``tau`` solves a 1-D
  convex problem.  It is bracketed in ``[g(x) - chi, g(x)]`` and solved
  with Brent's method to a few ulp.
* Otherwise the saddle-point dual over the simplex of term weights is
  maximized by entropic mirror ascent with backtracking, stopping at the
  requested duality gap.

Terms inactive on the whole bracket contribute exact zeros and are removed
before any reduction, so adding far-away terms leaves answers bitwise
unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import optimize

from .exceptions import DimensionError, NumericalFailure
from .kernel import SmoothingKernel
from .space import lp_norm

__all__ = [
    "MaxAffine",
    "SmoothedInstance",
    "OracleAnswer",
    "MembershipReport",
    "smooth_eval",
    "check_membership",
    "holder_ratio",
    "check_locality",
    "coincide_near",
    "default_tol",
    "sample_ball",
]

_EPS = np.finfo(float).eps


class MaxAffine:
    """``g(x) = max_i <w_i, x> + b_i``.

    Sparse terms are one coordinate each: ``w_i = coef_i * e_{index_i}``,
    with ``index_i = -1`` meaning a constant term.  Dense terms are rows of
    a ``(k, n)`` matrix.
    """

    def __init__(self, n, offsets, index=None, coef=None, dense=None):
        self.n = int(n)
        self.offsets = np.array(offsets, dtype=float).reshape(-1)
        k = self.offsets.size
        if k == 0:
            raise ValueError("a max-affine function needs at least one term")
        if dense is not None:
            W = np.array(dense, dtype=float)
            if W.shape != (k, self.n):
                raise DimensionError(f"dense terms must have shape ({k}, {self.n}), got {W.shape}")
            self.dense = W
            self.index = self.coef = None
        else:
            idx = np.array(index, dtype=np.int64).reshape(-1)
            c = np.array(coef, dtype=float).reshape(-1)
            if idx.shape != (k,) or c.shape != (k,):
                raise DimensionError("index, coef and offsets must have equal length")
            if np.any(idx >= self.n) or np.any(idx < -1):
                raise DimensionError("term index out of range")
            c = np.where(idx < 0, 0.0, c)
            idx = np.where(c == 0.0, -1, idx)
            self.index, self.coef, self.dense = idx, c, None
        for arr in (self.offsets, self.index, self.coef, self.dense):
            if arr is not None:
                arr.setflags(write=False)

    @classmethod
    def sparse(cls, n, index, coef, offsets):
        return cls(n, offsets, index=index, coef=coef)

    @classmethod
    def from_dense(cls, W, offsets):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        return cls(W.shape[1], offsets, dense=W)

    @property
    def is_sparse(self) -> bool:
        return self.dense is None

    def __len__(self):
        return self.offsets.size

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"MaxAffine(n={self.n}, terms={len(self)}, {kind})"

    def append(self, index: int, coef: float, offset: float) -> "MaxAffine":
        """New function with one extra sparse term."""
        if not self.is_sparse:
            raise TypeError("append is only defined for sparse max-affine functions")
        return MaxAffine.sparse(
            self.n,
            np.append(self.index, index),
            np.append(self.coef, coef),
            np.append(self.offsets, offset),
        )

    def dual_norms(self, q: float) -> np.ndarray:
        if self.is_sparse:
            return np.abs(self.coef)
        return np.array([lp_norm(w, q) for w in self.dense])

    def values(self, x: np.ndarray) -> np.ndarray:
        """Affine pieces ``<w_i, x> + b_i``."""
        if self.is_sparse:
            return self.coef * x[np.maximum(self.index, 0)] + self.offsets
        return self.dense @ x + self.offsets

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got shape {x.shape}")
        return float(np.max(self.values(x)))

    def dense_matrix(self) -> np.ndarray:
        if not self.is_sparse:
            return self.dense
        W = np.zeros((len(self), self.n))
        rows = np.nonzero(self.index >= 0)[0]
        W[rows, self.index[rows]] = self.coef[rows]
        return W

    @cached_property
    def _separable(self):
        """Sorted coordinate layout for the 1-D solver, or None."""
        if not self.is_sparse:
            return None
        active = np.nonzero(self.index >= 0)[0]
        cols = self.index[active]
        if np.unique(cols).size != cols.size:
            return None
        order = active[np.argsort(cols, kind="stable")]
        const = np.nonzero(self.index < 0)[0]
        return order, const


@dataclass(frozen=True)
class OracleAnswer:
    value: float
    gradient: np.ndarray
    inner_point: np.ndarray


@dataclass(frozen=True)
class SmoothedInstance:
    """``f(x) = beta * S_chi[g](x / radius)``.

    ``radius != 1`` realizes the rescaling of a unit-ball instance to a ball
    of that radius; ``L`` is the Hölder constant claimed in the rescaled
    coordinates.
    """

    g: MaxAffine
    kernel: SmoothingKernel
    chi: float
    beta: float
    kappa: float = 2.0
    L: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        if self.g.n != self.kernel.space.n:
            raise DimensionError("max-affine dimension differs from the kernel space")
        if not (self.chi > 0 and self.beta > 0 and self.radius > 0):
            raise ValueError("chi, beta and radius must be positive")
        if not (1.0 < self.kappa <= 2.0):
            raise ValueError(f"kappa must lie in (1, 2], got {self.kappa}")
        if np.any(self.g.dual_norms(self.kernel.space.q) > 1.0 + 1e-12):
            raise ValueError("every term must have dual norm <= 1")
        if self.holder_constant() > self.L * (1.0 + 1e-12):
            raise ValueError(
                f"beta too large: Hölder constant {self.holder_constant():.6g} exceeds L={self.L:.6g}"
            )

    @property
    def n(self) -> int:
        return self.g.n

    def holder_constant(self) -> float:
        """Certified Hölder constant of the gradient in the scaled coordinates."""
        k = self.kappa
        base = self.beta * 2.0 ** (2.0 - k) * (self.kernel.m_phi / self.chi) ** (k - 1.0)
        return base / self.radius**k

    def with_terms(self, g: MaxAffine) -> "SmoothedInstance":
        return replace(self, g=g)

    def __call__(self, x) -> OracleAnswer:
        return smooth_eval(self, x)


def default_tol(gx: float) -> float:
    return 1e-10 * max(1.0, abs(gx))


def _solve_separable(g: MaxAffine, kernel: SmoothingKernel, chi: float, x: np.ndarray):
    order, const = g._separable
    a_all = g.values(x)
    gx = float(np.max(a_all))
    a = a_all[order]
    c = np.abs(g.coef[order])
    sgn = -np.sign(g.coef[order])
    cols = g.index[order]
    tau_const = float(np.max(a_all[const])) if const.size else -math.inf

    def moves(tau):
        return np.maximum(a - tau, 0.0) / c

    def slope(tau):
        mag = moves(tau)
        nz = mag > 0.0
        if not np.any(nz):
            return 1.0
        u = mag[nz] / chi
        gphi = np.abs(kernel.grad(u))
        return 1.0 - float(np.sum(gphi / c[nz]))

    hi = gx
    lo = max(gx - chi, tau_const)
    if lo >= hi or slope(lo) >= 0.0:
        tau = lo if lo < hi else hi
    else:
        tau = optimize.brentq(slope, lo, hi, xtol=1e-15 * chi, rtol=4 * _EPS, maxiter=500)
    mag = moves(tau)
    nz = mag > 0.0
    h = np.zeros(g.n)
    grad = np.zeros(g.n)
    if np.any(nz):
        hn = sgn[nz] * mag[nz]
        h[cols[nz]] = hn
        un = hn / chi
        grad[cols[nz]] = -kernel.grad(un)
        phi = kernel.value(un)
    else:
        phi = 0.0
    return h, grad, phi, gx


def _solve_dual(g: MaxAffine, kernel: SmoothingKernel, chi: float, x: np.ndarray, tol: float):
    """Entropic mirror ascent on the saddle dual over the term simplex."""
    W = g.dense_matrix()
    a = g.values(x)
    k = a.size
    gx = float(np.max(a))

    def inner(lam):
        h = chi * kernel.grad_inverse(-(W.T @ lam))
        slopes = a + W @ h
        dual = float(lam @ slopes) + chi * kernel.value(h / chi)
        return h, slopes, dual

    lam = np.full(k, 1.0 / k)
    h, slopes, dual = inner(lam)
    step = 1.0 / chi
    budget = int(50 * k * k * max(1.0, math.log(1.0 / tol))) + 100
    gap = math.inf
    for _ in range(budget):
        gap = float(np.max(slopes) - lam @ slopes)
        if gap <= tol:
            break
        while True:
            z = step * (slopes - np.max(slopes))
            cand = lam * np.exp(z)
            cand /= cand.sum()
            h_c, slopes_c, dual_c = inner(cand)
            kl = float(np.sum(np.where(cand > 0, cand * np.log(np.maximum(cand, 1e-300) / lam), 0.0)))
            if dual_c >= dual + float(slopes @ (cand - lam)) - kl / step:
                break
            step *= 0.5
            if step < 1e-30:
                raise NumericalFailure("mirror ascent step collapsed", gap)
        lam, h, slopes, dual = cand, h_c, slopes_c, dual_c
        step *= 1.5
    else:
        raise NumericalFailure("inner solver did not reach the duality-gap tolerance", gap)
    grad = -kernel.grad(h / chi)
    return h, grad, kernel.value(h / chi), gx


def smooth_eval(inst: SmoothedInstance, x, tol: float | None = None) -> OracleAnswer:
    """Value, gradient and inner minimizer of ``beta * S_chi[g](x / radius)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n,):
        raise DimensionError(f"expected a vector of length {inst.n}, got shape {x.shape}")
    xs = x / inst.radius if inst.radius != 1.0 else x
    g, kernel, chi = inst.g, inst.kernel, inst.chi
    if g._separable is not None:
        h, grad, phi, _ = _solve_separable(g, kernel, chi, xs)
    else:
        gx = float(np.max(g.values(xs)))
        h, grad, phi, _ = _solve_dual(g, kernel, chi, xs, default_tol(gx) if tol is None else tol)
    level = float(np.max(g.values(xs + h)))
    value = inst.beta * (level + chi * phi)
    gradient = inst.beta * grad
    if inst.radius != 1.0:
        gradient = gradient / inst.radius
    return OracleAnswer(value=value, gradient=gradient, inner_point=h)


def sample_ball(rng: np.random.Generator, n: int, p: float, radius: float, size: int) -> np.ndarray:
    """``size`` points in the l_p ball: random directions, radii uniform in [0, radius]."""
    d = rng.standard_normal((size, n))
    norms = np.array([lp_norm(row, p) for row in d])
    r = radius * rng.random(size)
    return d * (r / norms)[:, None]


@dataclass
class MembershipReport:
    samples: int
    max_ratio: float
    L: float
    kappa: float
    within_slack: bool = True
    ratios: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def passed(self) -> bool:
        return self.within_slack


def holder_ratio(oracle, space, kappa: float, L: float, samples: int, seed: int,
                 radius: float = 1.0, tol: float = 1e-10, local_scale: float | None = None
                 ) -> MembershipReport:
    """Empirical Hölder ratio ``||grad f(x) - grad f(y)||_q / ||x - y||_p^(kappa-1)``.

    Half of the pairs are independent points of the ball of radius
    ``2 * radius``; the other half are perturbations of size down to
    ``local_scale`` (default ``1e-3 * radius``), where the ratio of a
    Lipschitz gradient is largest.  Every ratio must stay below
    ``L * (1 + 10 tol / ||x - y||_p)``.
    """
    if samples <= 0:
        return MembershipReport(0, 0.0, L, kappa)
    p, q, n = space.p, space.q, space.n
    rng = np.random.default_rng(seed)
    xs = sample_ball(rng, n, p, 2.0 * radius, samples)
    n_far = samples // 2
    ys = sample_ball(rng, n, p, 2.0 * radius, samples)
    lo = math.log(local_scale if local_scale is not None else 1e-3 * radius)
    for i in range(n_far, samples):
        d = sample_ball(rng, n, p, 1.0, 1)[0]
        d *= math.exp(rng.uniform(lo, math.log(radius))) / max(lp_norm(d, p), 1e-300)
        y = xs[i] + d
        ny = lp_norm(y, p)
        ys[i] = y if ny <= 2.0 * radius else y * (2.0 * radius / ny)
    ratios = np.zeros(samples)
    ok = True
    for i in range(samples):
        dist = lp_norm(xs[i] - ys[i], p)
        if dist == 0.0:
            continue
        gx = oracle(xs[i]).gradient
        gy = oracle(ys[i]).gradient
        ratios[i] = lp_norm(gx - gy, q) / dist ** (kappa - 1.0)
        if ratios[i] > L * (1.0 + 10.0 * tol / dist):
            ok = False
    return MembershipReport(samples, float(ratios.max()), L, kappa, ok, ratios)


def check_membership(inst: SmoothedInstance, samples: int, seed: int, tol: float = 1e-10
                     ) -> MembershipReport:
    """Hölder-ratio check of ``inst`` against its own (kappa, L)."""
    return holder_ratio(inst, inst.kernel.space, inst.kappa, inst.L, samples, seed,
                        radius=inst.radius, tol=tol, local_scale=inst.chi * inst.radius * 1e-2)


def coincide_near(g1: MaxAffine, g2: MaxAffine, x, radius: float, p: float,
                  samples: int = 256, seed: int = 0) -> bool:
    """Sampled check that g1 and g2 agree on the l_p ball of ``radius`` about x."""
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    pts = x + sample_ball(rng, x.size, p, radius, samples)
    return all(abs(g1(y) - g2(y)) <= 1e-12 * max(1.0, abs(g1(y))) for y in pts)


def check_locality(g1: MaxAffine, g2: MaxAffine, inst: SmoothedInstance, x,
                   tol: float | None = None) -> bool:
    """True when the smoothings of g1 and g2 (with ``inst``'s parameters)
    agree at x in value and gradient within ``10 * tol``."""
    a1 = smooth_eval(inst.with_terms(g1), x, tol)
    a2 = smooth_eval(inst.with_terms(g2), x, tol)
    if tol is None:
        tol = default_tol(g1(np.asarray(x, dtype=float) / inst.radius))
    slack = 10.0 * tol
    q = inst.kernel.space.q
    return abs(a1.value - a2.value) <= slack and lp_norm(a1.gradient - a2.gradient, q) <= slack
