"""Continuous nondecreasing nonlinearities ``φ`` with ``φ(0) = 0``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError


class Nonlinearity:
    #: mollification radius the function was built with (0 for the raw map)
    eta: float = 0.0

    def __call__(self, r):
        raise NotImplementedError

    def lipschitz_on(self, M: float) -> float:
        raise NotImplementedError

    def satisfies_linear_bound_near_zero(self) -> bool:
        """Whether ``|φ(r)| <= L|r|`` for small ``|r|`` with finite L."""
        return math.isfinite(self.lipschitz_on(1e-8))


@dataclass(frozen=True)
class Power(Nonlinearity):
    """``φ(r) = r|r|^{m-1}``: porous medium for m > 1, fast diffusion for m < 1."""

    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError("exponent m must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.sign(r) * np.abs(r) ** self.m

    def lipschitz_on(self, M):
        if self.m < 1:
            return math.inf
        return self.m * M ** (self.m - 1)


@dataclass(frozen=True)
class Stefan(Nonlinearity):
    """``c2 r`` for r < 0 and ``c1 (r - latent)^+`` for r >= 0."""

    c1: float
    c2: float
    latent: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0 and self.latent > 0):
            raise DomainError("Stefan parameters must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < 0, self.c2 * r, self.c1 * np.maximum(r - self.latent, 0.0))

    def lipschitz_on(self, M):
        return max(self.c1, self.c2)


@dataclass(frozen=True)
class Linear(Nonlinearity):
    a: float

    def __post_init__(self):
        if self.a < 0:
            raise DomainError("slope must be nonnegative")

    def __call__(self, r):
        return self.a * np.asarray(r, dtype=float)

    def lipschitz_on(self, M):
        return self.a


@dataclass(frozen=True, eq=False)
class MonotoneTable(Nonlinearity):
    """Piecewise linear interpolation through ``(breakpoints, values)``.

    Constant beyond the end breakpoints.  Construction rejects unsorted
    breakpoints, decreasing values and ``φ(0) != 0``.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise DomainError("table needs matching 1-d breakpoints and values (at least two)")
        if np.any(np.diff(x) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(np.diff(y) < 0):
            k = int(np.argmax(np.diff(y) < 0))
            raise DomainError(f"table values decrease between breakpoints {x[k]} and {x[k + 1]}")
        if not (x[0] <= 0 <= x[-1]):
            raise DomainError("table must cover r = 0")
        if abs(float(np.interp(0.0, x, y))) > 1e-14 * max(1.0, float(np.abs(y).max())):
            raise DomainError("table must satisfy φ(0) = 0")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", y)

    def __call__(self, r):
        return np.interp(np.asarray(r, dtype=float), self.breakpoints, self.values)

    def lipschitz_on(self, M):
        return float(np.max(np.diff(self.values) / np.diff(self.breakpoints)))

    def satisfies_linear_bound_near_zero(self):
        return True


def eval(phi: Nonlinearity, r):  # noqa: A001 - operation name
    return phi(r)


def lipschitz_on(phi: Nonlinearity, M: float) -> float:
    """Upper bound on the slope of φ over ``[-M, M]`` (``inf`` if unbounded)."""
    if not M > 0:
        raise DomainError("range bound M must be positive")
    return phi.lipschitz_on(M)


def _bump(y):
    out = np.zeros_like(y)
    inside = np.abs(y) < 1
    out[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2))
    return out


_BUMP_MASS = integrate.quad(lambda y: float(_bump(np.array([y]))[0]), -1, 1, epsabs=0, epsrel=1e-13)[0]


def mollifier(y):
    """Even smooth bump supported in [-1, 1] with unit integral."""
    return _bump(np.asarray(y, dtype=float)) / _BUMP_MASS


def mollify(phi: Nonlinearity, eta: float, r_range=(-1.0, 1.0)) -> MonotoneTable:
    """Tabulate ``φ_η(x) = (φ*ω_η)(x) - (φ*ω_η)(0)`` on a grid of step ``η/8``."""
    if not eta > 0:
        raise DomainError("mollification radius must be positive")
    a, b = float(r_range[0]), float(r_range[1])
    if not a < 0 < b:
        raise DomainError("mollification range must contain 0 in its interior")
    step = eta / 8.0
    left = np.arange(0.0, -a + step, step)
    right = np.arange(step, b + step, step)
    x = np.concatenate([-left[::-1], right])
    # keep x = 0 exactly on the grid so that φ_η(0) = 0 holds bit for bit
    pts = np.concatenate([x, [0.0]])

    def integrand(y):
        return phi(pts - eta * y) * mollifier(y)

    conv, _ = integrate.quad_vec(integrand, -1.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=2000,
                                 points=(0.0,))
    vals = conv[:-1] - conv[-1]
    vals[x == 0.0] = 0.0
    # quadrature noise of order 1e-15 must not break monotonicity
    vals = np.maximum.accumulate(vals)
    zero = int(np.flatnonzero(x == 0.0)[0])
    vals[zero] = 0.0
    vals[:zero] = np.minimum(vals[:zero], 0.0)
    return MonotoneTable(x, vals, eta=float(eta))
