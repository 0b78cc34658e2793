"""Smooth test functions with reference images under the continuous operators.

Local images are analytic.  Fractional images ``-(-Δ)^{s/2} ψ`` are computed
by quadrature: a Hankel transform for the Gaussian, the singular integral
itself for the compact bump.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma, jv

from .levy_measure import fractional_constant


@dataclass(frozen=True)
class Gaussian:
    """``ψ(x) = amplitude * exp(-|x - center|^2 / (2 width^2))``."""

    dim: int = 1
    width: float = 1.0
    amplitude: float = 1.0
    center: tuple = ()

    def _shift(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        c = np.asarray(self.center if self.center else (0.0,) * self.dim, dtype=float)
        return pts - c[None, :]

    def __call__(self, pts):
        y = self._shift(pts)
        return self.amplitude * np.exp(-np.sum(y ** 2, axis=1) / (2 * self.width ** 2))

    def local_image(self, sigma=None):
        """``tr[σσᵀ D²ψ]``; identity σ gives the Laplacian."""
        S = np.eye(self.dim) if sigma is None else np.atleast_2d(sigma) @ np.atleast_2d(sigma).T
        w2 = self.width ** 2

        def image(pts):
            y = self._shift(pts)
            quad = np.einsum("mi,ij,mj->m", y, S, y)
            return self(pts) * (quad / w2 ** 2 - np.trace(S) / w2)

        return image

    def fractional_image(self, s):
        """``-(-Δ)^{s/2} ψ`` by Hankel-transform quadrature."""
        N = self.dim
        nu = N / 2 - 1
        at_zero = None

        def profile(r):
            # (-Δ)^{s/2} of exp(-|x|^2/2) at radius r
            nonlocal at_zero
            if r == 0.0:
                if at_zero is None:
                    val, _ = integrate.quad(lambda k: k ** (N - 1 + s) * np.exp(-k * k / 2),
                                            0, np.inf, epsabs=0, epsrel=1e-13, limit=200)
                    at_zero = val / (2 ** nu * gamma(N / 2))
                return at_zero
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                if N == 1:
                    val, _ = integrate.quad(lambda k: k ** s * np.exp(-k * k / 2), 0, 40.0,
                                            weight="cos", wvar=r, epsabs=1e-15, limit=400)
                    return math.sqrt(2 / math.pi) * val
                val, _ = integrate.quad(lambda k: k ** (N / 2 + s) * np.exp(-k * k / 2) * jv(nu, k * r),
                                        0, 40.0, epsabs=1e-15, epsrel=1e-12, limit=2000)
                return r ** (-nu) * val

        cache = {}

        def image(pts):
            y = self._shift(pts) / self.width
            r = np.round(np.linalg.norm(y, axis=1), 14)
            out = np.empty(r.size)
            for k, rk in enumerate(r):
                if rk not in cache:
                    cache[rk] = profile(float(rk))
                out[k] = cache[rk]
            return -self.amplitude * self.width ** (-s) * out

        return image


@dataclass(frozen=True)
class Bump:
    """One-dimensional ``exp(1 - 1/(1 - (x/radius)^2))`` supported in ``|x| < radius``."""

    radius: float = 1.0
    amplitude: float = 1.0
    dim: int = 1

    def value(self, x):
        x = np.asarray(x, dtype=float) / self.radius
        out = np.zeros_like(x)
        inside = np.abs(x) < 1
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
        return out

    def __call__(self, pts):
        return self.value(np.atleast_2d(pts)[:, 0])

    def local_image(self, sigma=None):
        a = 1.0 if sigma is None else float(np.atleast_2d(sigma) @ np.atleast_2d(sigma).T)

        def image(pts):
            x = np.atleast_2d(pts)[:, 0] / self.radius
            out = np.zeros_like(x)
            i = np.abs(x) < 1
            q = 1.0 - x[i] ** 2
            # d²/dx² exp(1 - 1/q) for q = 1 - x²
            out[i] = np.exp(1.0 - 1.0 / q) * ((2 * x[i] / q ** 2) ** 2 - (2 / q ** 2 + 8 * x[i] ** 2 / q ** 3))
            return a * self.amplitude * out / self.radius ** 2

        return image

    def fractional_image(self, s):
        """``c_{1,s} ∫_0^∞ (ψ(x+z) + ψ(x-z) - 2ψ(x)) z^{-1-s} dz`` by quadrature."""
        c = fractional_constant(1, s)
        R = self.radius

        def at(x):
            f = lambda z: (self.value(x + z) + self.value(x - z) - 2 * self.value(x)) * z ** (-1 - s)
            far = abs(x) + R
            brk = sorted({p for p in (abs(R - x), abs(R + x), abs(x - R), abs(x + R)) if 0 < p < far})
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, _ = integrate.quad(lambda z: float(f(np.array([z]))[0]), 0.0, far,
                                        points=brk or None, epsabs=1e-13, epsrel=1e-11, limit=400)
            tail = -2.0 * float(self.value(np.array([x]))[0]) * far ** (-s) / s
            return c * (val + tail)

        def image(pts):
            return np.array([at(float(x)) for x in np.atleast_2d(pts)[:, 0]])

        return image
