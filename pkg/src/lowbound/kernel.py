"""Smoothing kernels for (R^n, ||.||_p), 2 <= p <= inf.

For p > 2 the kernel is ``phi(h) = 2 * (sum_j |h_j|^r) ** (2*theta/r)``
with ``r = min(p, 3 ln n)`` and ``theta`` slightly above one; for p = 2 it
is ``2 ||h||_2^2``.  Both are paired with G = unit l_p ball, so rho = 1.

Powers are evaluated after factoring out ``max |h_j|``: ratios lie in
[0, 1] and underflow harmlessly to zero even for r > 20.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalFailure, TooSmallDimension, UnsupportedOperation
from .space import NormSpec, lp_norm

__all__ = [
    "SmoothingKernel",
    "make_kernel",
    "phi_value",
    "phi_grad",
    "phi_grad_invert",
    "hessian_quadform",
]

PNORM = "pnorm"
EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class SmoothingKernel:
    variant: str
    space: NormSpec
    r: float
    theta: float
    m_phi: float
    rho: float = 1.0

    def __post_init__(self):
        if self.variant == EUCLIDEAN:
            if self.space.p != 2:
                raise ValueError("the Euclidean kernel needs p = 2")
        elif self.variant == PNORM:
            r, th = self.r, self.theta
            if not (2.0 < r <= self.space.p):
                raise ValueError(f"need 2 < r <= p, got r={r}, p={self.space.p}")
            if not (th > 1.0 and 2.0 * th / r < 1.0):
                raise ValueError(f"need theta > 1 and 2*theta/r < 1, got theta={th}, r={r}")
        else:
            raise ValueError(f"unknown kernel variant {self.variant!r}")

    # The methods below accept vectors of any length; the smoothing solver
    # calls them on the compressed support of h.

    def value(self, h: np.ndarray) -> float:
        if self.variant == EUCLIDEAN:
            return 2.0 * float(np.dot(h, h))
        a = np.abs(h)
        m = float(a.max()) if a.size else 0.0
        if m == 0.0:
            return 0.0
        s = float(np.sum((a / m) ** self.r))
        return 2.0 * m ** (2.0 * self.theta) * s ** (2.0 * self.theta / self.r)

    def grad(self, h: np.ndarray) -> np.ndarray:
        if self.variant == EUCLIDEAN:
            return 4.0 * h
        a = np.abs(h)
        m = float(a.max()) if a.size else 0.0
        if m == 0.0:
            return np.zeros_like(h, dtype=float)
        r, th = self.r, self.theta
        ratio = a / m
        s = float(np.sum(ratio ** r))
        scale = 4.0 * th * m ** (2.0 * th - 1.0) * s ** (2.0 * th / r - 1.0)
        return scale * ratio ** (r - 1.0) * np.sign(h)

    def grad_inverse(self, v: np.ndarray) -> np.ndarray:
        if self.variant == EUCLIDEAN:
            return v / 4.0
        a = np.abs(v)
        m = float(a.max()) if a.size else 0.0
        if m == 0.0:
            return np.zeros_like(v, dtype=float)
        r, th = self.r, self.theta
        u = (a / m) ** (1.0 / (r - 1.0))
        s = float(np.sum(u ** r))
        # h = t * sign(v) |v|^(1/(r-1)) with t = (4 theta S^(2 theta/r - 1))^(-1/(2 theta - 1))
        log_scale = (
            -math.log(4.0 * th) / (2.0 * th - 1.0)
            + (1.0 - 2.0 * th / r) / (2.0 * th - 1.0) * (r / (r - 1.0) * math.log(m) + math.log(s))
            + math.log(m) / (r - 1.0)
        )
        return math.exp(log_scale) * u * np.sign(v)

    def quadform(self, h: np.ndarray, e: np.ndarray) -> float:
        if self.variant == EUCLIDEAN:
            return 4.0 * float(np.dot(e, e))
        a = np.abs(h)
        m = float(a.max()) if a.size else 0.0
        if m == 0.0:
            return 0.0
        r, th = self.r, self.theta
        ratio = a / m
        s = float(np.sum(ratio ** r))
        lin = float(np.sum(ratio ** (r - 1.0) * np.sign(h) * e))
        diag = float(np.sum(ratio ** (r - 2.0) * e * e))
        mpow = m ** (2.0 * th - 2.0)
        first = 4.0 * r * th * (2.0 * th / r - 1.0) * s ** (2.0 * th / r - 2.0) * lin * lin
        second = 4.0 * th * (r - 1.0) * s ** (2.0 * th / r - 1.0) * diag
        return mpow * (first + second)


def make_kernel(space: NormSpec) -> SmoothingKernel:
    """Kernel for ``space`` with its certified Hessian constant ``m_phi``.

    ``m_phi = 4 theta (r - 1) n^(2 theta (1/r - 1/p))`` bounds
    ``<e, phi''(h) e> / ||e||_p^2`` on the unit l_p ball.  The Euclidean
    kernel has Hessian ``4 I``, so its constant is 4.
    """
    p, n = space.p, space.n
    if p < 2:
        raise UnsupportedOperation("kernels exist only for p >= 2; use lowbound.reductions for p < 2")
    if p == 2:
        return SmoothingKernel(EUCLIDEAN, space, r=2.0, theta=1.0, m_phi=4.0)
    if n <= 2:
        raise TooSmallDimension(f"the l_p kernel needs n >= 3, got n={n}")
    # n >= 3 gives 3 ln n > 3.29, so r > 2 whenever p > 2
    r = min(p, 3.0 * math.log(n))
    theta = 1.0 + min(0.25, (r / 2.0 - 1.0) / 2.0) / math.log(max(n, 3))
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    m_phi = 4.0 * theta * (r - 1.0) * n ** (2.0 * theta * (1.0 / r - inv_p))
    return SmoothingKernel(PNORM, space, r=r, theta=theta, m_phi=m_phi)


def phi_value(k: SmoothingKernel, h) -> float:
    return k.value(k.space.check(h))


def phi_grad(k: SmoothingKernel, h) -> np.ndarray:
    return k.grad(k.space.check(h))


def phi_grad_invert(k: SmoothingKernel, v) -> np.ndarray:
    """Solve ``phi_grad(k, h) = v`` for h.

    The l_p kernel's gradient map is a power map times a scalar, so the
    scalar equation has a closed-form root; the residual is still checked.
    """
    v = k.space.check(v)
    h = k.grad_inverse(v)
    vq = lp_norm(v, k.space.q)
    res = lp_norm(k.grad(h) - v, k.space.q)
    if res > 1e-10 * max(1.0, vq):
        raise NumericalFailure("gradient inversion missed its tolerance", res)
    return h


def hessian_quadform(k: SmoothingKernel, h, e) -> float:
    """``<e, phi''(h) e>``; zero at h = 0 for the l_p kernel (the form is
    (2 theta - 2)-homogeneous in h)."""
    return k.quadform(k.space.check(h), k.space.check(e))
