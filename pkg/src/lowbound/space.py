"""Norm and ball geometry for the l_p spaces.

Everything here is a pure function of its inputs. ``p = 1`` and ``p = inf``
are explicit branches, never limits of the generic formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import DimensionError

__all__ = ["NormSpec", "Ball", "norm", "dual_norm", "lp_norm", "lmo", "project"]


def _conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormSpec:
    """The space (R^n, ||.||_p)."""

    p: float
    n: int

    def __post_init__(self):
        p = float(self.p)
        if not (p >= 1.0):
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "n", int(self.n))

    @property
    def q(self) -> float:
        """Dual exponent, 1/p + 1/q = 1."""
        return _conjugate(self.p)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got shape {x.shape}")
        return x


@dataclass(frozen=True)
class Ball:
    space: NormSpec
    radius: float = 1.0
    center: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.center is None:
            c = np.zeros(self.space.n)
        else:
            c = self.space.check(self.center).copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, x, rtol: float = 1e-12) -> bool:
        return norm(self.space, np.asarray(x) - self.center) <= self.radius * (1.0 + rtol)


def lp_norm(x: np.ndarray, p: float) -> float:
    """||x||_p with max-factoring, so large p neither overflows nor underflows."""
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum())
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return m * float(np.sum((a / m) ** p)) ** (1.0 / p)


def norm(space: NormSpec, x) -> float:
    return lp_norm(space.check(x), space.p)


def dual_norm(space: NormSpec, x) -> float:
    return lp_norm(space.check(x), space.q)


def lmo(ball: Ball, c) -> np.ndarray:
    """Minimizer of <c, x> over ``ball``.

    Coordinates with ``c_j == 0`` stay at the center for p = inf; for
    p = 1 ties in ``|c_j|`` go to the smallest index. ``c = 0`` returns the
    center.
    """
    space = ball.space
    c = space.check(c)
    x = ball.center.copy()
    cmax = float(np.max(np.abs(c))) if c.size else 0.0
    if cmax == 0.0:
        return x
    p, R = space.p, ball.radius
    if math.isinf(p):
        x -= R * np.sign(c)
    elif p == 1:
        j = int(np.argmax(np.abs(c)))
        x[j] -= R * np.sign(c[j])
    elif p == 2:
        x -= R * (c / lp_norm(c, 2.0))
    else:
        q = space.q
        a = np.abs(c) / cmax
        w = a ** (q - 1.0)
        w /= lp_norm(w, p)
        x -= R * np.sign(c) * w
    return x


def _project_l1(y: np.ndarray, R: float) -> np.ndarray:
    # sort-based projection onto the l1 ball (simplex projection of |y|)
    a = np.abs(y)
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, a.size + 1)
    rho = np.nonzero(u * k > css - R)[0][-1]
    tau = (css[rho] - R) / (rho + 1.0)
    return np.sign(y) * np.maximum(a - tau, 0.0)


_EPS = float(np.finfo(float).eps)


def _shrink(alpha: np.ndarray, lam: float, p: float, iters: int = 80) -> np.ndarray:
    """Solve v + lam * p * v**(p-1) = alpha for v in [0, alpha], elementwise."""
    c = lam * p
    if p >= 2.0:
        # convex increasing in v: Newton from any upper bound decreases monotonically
        v = np.minimum(alpha, (alpha / c) ** (1.0 / (p - 1.0))) if c > 0 else alpha.copy()
        for _ in range(iters):
            f = v + c * v ** (p - 1.0) - alpha
            step = f / (1.0 + c * (p - 1.0) * v ** (p - 2.0))
            nv = np.maximum(v - step, 0.0)
            if np.all(np.abs(nv - v) <= 4.0 * _EPS * v):
                return nv
            v = nv
        return v
    lo = np.zeros_like(alpha)
    hi = alpha.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        over = mid + c * mid ** (p - 1.0) > alpha
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
    return 0.5 * (lo + hi)


def _project_lp(y: np.ndarray, R: float, p: float) -> np.ndarray:
    scale = R
    alpha = np.abs(y) / scale

    def excess(lam):
        return float(np.sum(_shrink(alpha, lam, p) ** p)) - 1.0

    hi = 1.0
    while excess(hi) > 0.0:
        hi *= 4.0
    lam = optimize.brentq(excess, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    v = _shrink(alpha, lam, p)
    out = np.sign(y) * v * scale
    nrm = lp_norm(out, p)
    if nrm > R:
        out *= R / nrm
    return out


def project(ball: Ball, x) -> np.ndarray:
    """Euclidean projection onto ``ball``.

    Points within ``radius * (1 + 1e-12)`` are returned unchanged, which
    makes the map exactly idempotent.
    """
    space = ball.space
    x = space.check(x)
    y = x - ball.center
    R, p = ball.radius, space.p
    if lp_norm(y, p) <= R * (1.0 + 1e-12):
        return x.copy()
    if math.isinf(p):
        y = np.clip(y, -R, R)
    elif p == 2:
        y = y * (R / lp_norm(y, 2.0))
    elif p == 1:
        y = _project_l1(y, R)
    else:
        y = _project_lp(y, R, p)
    return ball.center + y
