"""Symmetric Lévy measures and the quantities the discretisation needs from them.

A measure is queried for the mass of axis-aligned cells, for the mass
outside a ball, for second moments over the origin cell, and for the Lévy
functional ``∫ min(|z|^2, 1) dμ``.  Absolutely continuous measures are radial
(density ``f(|z|)``); the integrals are evaluated by quadrature, never by the
closed forms that the tests use as oracles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma

from ._cubature import integrate_boxes
from .errors import (DomainError, NotLevyMeasureError, QuadratureError,
                     SingularCellError)

CELL_RTOL = 1e-10


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^dim (2 for dim = 1)."""
    return 2.0 * math.pi ** (dim / 2) / gamma(dim / 2)


def _quad(f, a, b, what, epsrel=1e-12, **kw):
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info, *rest = integrate.quad(f, a, b, epsabs=0.0, epsrel=epsrel,
                                               limit=400, full_output=True, **kw)
    ier = rest[0] if rest else 0
    if not np.isfinite(val) or ier == 5:
        raise NotLevyMeasureError(f"not a Lévy measure: {what} diverges")
    if ier in (1, 2, 3, 4) and err > 1e-8 * max(abs(val), 1e-300):
        if ier == 4 or (ier == 1 and err > 1e-2 * max(abs(val), 1e-300)):
            raise NotLevyMeasureError(f"not a Lévy measure: {what} appears divergent")
        raise QuadratureError(f"quadrature of {what} did not converge", achieved=err)
    return val


def _quad_nonneg(f, a, b, what, epsrel=1e-12):
    """``_quad`` for a nonnegative integrand, with a divergence guard.

    Extrapolating quadrature can return a finite (even negative) value for a
    divergent integral.  The result must dominate the integral over any
    truncated range, which is checked on ranges shrinking toward the
    singular endpoint.
    """
    val = _quad(f, a, b, what, epsrel)
    if val < 0:
        raise NotLevyMeasureError(f"not a Lévy measure: {what} diverges")
    if a == 0.0:
        cuts = [(10.0 ** -k * b, b) for k in (4, 8, 12)]
    elif np.isinf(b):
        cuts = [(a, a * 10.0 ** k) for k in (4, 8, 12)]
    else:
        cuts = []
    # r = e^t keeps the quadrature accurate across many decades
    parts = [_quad(lambda t: f(np.exp(t)) * np.exp(t), math.log(lo), math.log(hi), what, epsrel)
             for lo, hi in cuts]
    if any(p > val * (1 + 1e-6) + 1e-300 for p in parts):
        raise NotLevyMeasureError(f"not a Lévy measure: {what} diverges")
    if parts:
        # equal gains over each further factor 10^4 signal a logarithmic divergence
        gains = np.diff([0.0] + parts)
        if gains[2] > 1e-12 * val and gains[2] >= 0.999 * gains[1]:
            raise NotLevyMeasureError(f"not a Lévy measure: {what} diverges")
    return val


# ---------------------------------------------------------------------------
# fractional normalisation


def fractional_constant(N: int, s: float) -> float:
    """Normalisation ``c_{N,s}`` of the fractional Laplacian ``(-Δ)^{s/2}``.

    ``1/c = ∫_{R^N} (1 - cos z_1) |z|^{-N-s} dz``.  Integrating out the
    transverse coordinates reduces this to a transverse factor times the
    one-dimensional integral; the latter is split at 1 into a power series
    (near the origin) and a Fourier-weighted tail.
    """
    if not (0.0 < s < 2.0):
        raise DomainError(f"order s must lie in (0, 2), got {s}")
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be a positive integer, got {N}")
    return _fractional_constant(int(N), float(s))


@lru_cache(maxsize=None)
def _fractional_constant(N, s):
    # ∫_0^1 (1 - cos t) t^{-1-s} dt, termwise from the cosine series
    inner = 0.0
    fact = 1.0
    for k in range(1, 40):
        fact *= (2 * k - 1) * (2 * k)
        term = (-1) ** (k + 1) / (fact * (2 * k - s))
        inner += term
        if abs(term) < 1e-18 * abs(inner):
            break
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        osc, _ = integrate.quad(lambda t: t ** (-1.0 - s), 1.0, np.inf, weight="cos",
                                wvar=1.0, epsabs=1e-15, limlst=200)
    one_dim = 2.0 * (inner + 1.0 / s - osc)
    if N == 1:
        transverse = 1.0
    else:
        # ∫_{R^{N-1}} (1 + |w|^2)^{-(N+s)/2} dw in polar form
        radial = _quad(lambda r: r ** (N - 2) * (1.0 + r * r) ** (-(N + s) / 2), 0.0, np.inf,
                       "transverse integral")
        transverse = sphere_area(N - 1) * radial
    return 1.0 / (transverse * one_dim)


def unit_ball_second_moment(N: int, s: float) -> float:
    """``c_{N,s} ∫_{|z|<=1} |z|^2 |z|^{-N-s} dz`` by radial quadrature."""
    c = fractional_constant(N, s)
    return c * sphere_area(N) * _quad(lambda r: r ** (1.0 - s), 0.0, 1.0, "second moment")


def local_limit_normalization(N: int, s: float) -> float:
    """Unit-ball second moment divided by ``2N``.

    This is the coefficient multiplying ``Δψ`` in the small-jump part of the
    fractional operator; it tends to 1 as ``s -> 2``.
    """
    return unit_ball_second_moment(N, s) / (2.0 * N)


# ---------------------------------------------------------------------------
# measures


def _as_boxes(lo, hi, dim):
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or lo.shape[1] != dim:
        raise DomainError(f"cell corners must have shape (K, {dim})")
    if np.any(hi <= lo):
        raise DomainError("cell must have hi > lo in every coordinate")
    return lo, hi


def _closed_box_contains_origin(lo, hi):
    return np.all((lo <= 0.0) & (hi >= 0.0), axis=1)


def _box_distance_range(lo, hi):
    """Smallest and largest |z| over each box."""
    near = np.where(lo > 0, lo, np.where(hi < 0, hi, 0.0))
    far = np.maximum(np.abs(lo), np.abs(hi))
    return np.linalg.norm(near, axis=1), np.linalg.norm(far, axis=1)


class LevyMeasure:
    """Common interface; concrete variants are the dataclasses below."""

    dim: int
    singular: bool = True

    def cell_masses(self, lo, hi) -> np.ndarray:
        raise NotImplementedError

    def mass_outside(self, radius: float) -> float:
        """μ({|z| > radius})."""
        raise NotImplementedError

    def origin_cell_moments(self, h: float) -> np.ndarray:
        """``∫_{R_h} z_i^2 dμ`` for each axis i, ``R_h = (h/2)[-1, 1)^N``."""
        raise NotImplementedError

    def levy_functional(self) -> float:
        raise NotImplementedError

    def cell_mass(self, lo, hi) -> float:
        return float(self.cell_masses(lo, hi)[0])


class _Radial(LevyMeasure):

    def density(self, r):
        raise NotImplementedError

    def _tail_primitive(self, rho):
        """``∫_rho^∞ f(r) r^{N-1} dr``."""
        N = self.dim
        return _quad(lambda r: self.density(r) * r ** (N - 1), rho, np.inf, "tail mass")

    def mass_outside(self, radius):
        if radius <= 0:
            raise DomainError("radius must be positive")
        return sphere_area(self.dim) * self._tail_primitive(float(radius))

    def levy_functional(self):
        N = self.dim
        near = _quad_nonneg(lambda r: self.density(r) * r ** (N + 1), 0.0, 1.0, "∫_{|z|<=1}|z|^2 dμ")
        far = _quad_nonneg(lambda r: self.density(r) * r ** (N - 1), 1.0, np.inf, "∫_{|z|>1} dμ")
        return sphere_area(N) * (near + far)

    def _integrand(self, pts):
        return self.density(np.linalg.norm(pts, axis=1))

    def cell_masses(self, lo, hi):
        lo, hi = _as_boxes(lo, hi, self.dim)
        bad = _closed_box_contains_origin(lo, hi)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SingularCellError(lo[k], hi[k])
        vals, _ = integrate_boxes(self._integrand, lo, hi, rtol=CELL_RTOL)
        return vals

    def origin_cell_moments(self, h):
        N = self.dim

        @lru_cache(maxsize=None)
        def prim(rho):
            return _quad(lambda r: self.density(r) * r ** (N + 1), 0.0, rho, "origin moment")

        P = np.vectorize(prim, otypes=[float])
        a = 0.5 * h
        total = _flux_integral(P, np.full(N, -a), np.full(N, a))
        return np.full(N, total / N)


@dataclass(frozen=True)
class FractionalLaplacian(_Radial):
    """Measure ``c_{N,s} |z|^{-N-s} dz`` of the operator ``-(-Δ)^{s/2}``."""

    dim: int
    order: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dim}")
        if not (0.0 < self.order < 2.0):
            raise DomainError(f"order s must lie in (0, 2), got {self.order}")

    @cached_property
    def constant(self):
        return fractional_constant(self.dim, self.order)

    def density(self, r):
        r = np.asarray(r, dtype=float)
        return self.constant * r ** (-self.dim - self.order)


@dataclass(frozen=True)
class RadialDensity(_Radial):
    """Measure ``f(|z|) dz`` for a user-supplied vectorised density ``f``.

    ``integrable_tail`` records the caller's claim that ``f`` is integrable
    away from the origin; the claim is checked together with the rest of the
    Lévy condition when the measure is built.
    """

    dim: int
    density_fn: Callable = field(compare=False)
    integrable_tail: bool = True
    name: str = "radial"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dim}")
        if not self.integrable_tail:
            raise NotLevyMeasureError("not a Lévy measure: density declared non-integrable at infinity")
        self.levy_functional()

    def density(self, r):
        return np.asarray(self.density_fn(np.asarray(r, dtype=float)), dtype=float)


def tempered_stable(dim: int, order: float, rate: float) -> RadialDensity:
    """CGMY-type density ``c_{N,s} e^{-rate |z|} |z|^{-N-s}``."""
    if rate < 0:
        raise DomainError("rate must be nonnegative")
    c = fractional_constant(dim, order)

    def f(r):
        return c * np.exp(-rate * r) * r ** (-dim - order)

    return RadialDensity(dim, f, True, name=f"tempered(s={order}, rate={rate})")


@dataclass(frozen=True)
class DiracSum(LevyMeasure):
    """Finite sum of point masses, closed under ``z -> -z``."""

    offsets: tuple
    masses: tuple
    singular = False

    def __init__(self, atoms):
        atoms = list(atoms)
        if not atoms:
            raise DomainError("DiracSum needs at least one atom")
        z = np.array([np.atleast_1d(np.asarray(a[0], dtype=float)) for a in atoms])
        m = np.array([float(a[1]) for a in atoms])
        if np.any(m <= 0):
            raise DomainError("atom masses must be positive")
        if np.any(np.all(z == 0.0, axis=1)):
            raise DomainError("atoms must be away from the origin")
        for zk in z:
            same = np.all(np.isclose(z, zk, rtol=1e-12, atol=0.0), axis=1)
            mirror = np.all(np.isclose(z, -zk, rtol=1e-12, atol=0.0), axis=1)
            if not np.isclose(m[same].sum(), m[mirror].sum(), rtol=1e-12, atol=0.0):
                raise DomainError(f"atom set is not symmetric under z -> -z at {zk.tolist()}")
        object.__setattr__(self, "offsets", tuple(map(tuple, z.tolist())))
        object.__setattr__(self, "masses", tuple(m.tolist()))

    @property
    def dim(self):
        return len(self.offsets[0])

    @property
    def _z(self):
        return np.array(self.offsets)

    @property
    def _m(self):
        return np.array(self.masses)

    def cell_masses(self, lo, hi):
        lo, hi = _as_boxes(lo, hi, self.dim)
        z = self._z
        inside = np.all((z[None, :, :] >= lo[:, None, :]) & (z[None, :, :] < hi[:, None, :]), axis=2)
        return inside @ self._m

    def mass_outside(self, radius):
        return float(self._m[np.linalg.norm(self._z, axis=1) > radius].sum())

    def origin_cell_moments(self, h):
        a = 0.5 * h
        z = self._z
        inside = np.all((z >= -a) & (z < a), axis=1)
        mirror = np.all((z > -a) & (z <= a), axis=1)
        w = 0.5 * (inside.astype(float) + mirror.astype(float)) * self._m
        return (w[:, None] * z ** 2).sum(axis=0)

    def levy_functional(self):
        r2 = np.sum(self._z ** 2, axis=1)
        return float(np.sum(self._m * np.minimum(r2, 1.0)))

    @property
    def total_mass(self):
        return float(self._m.sum())


@dataclass(frozen=True)
class Truncated(LevyMeasure):
    """Restriction of ``base`` to ``{|z| > radius}``."""

    base: LevyMeasure
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("truncation radius must be positive")

    singular = False

    @property
    def dim(self):
        return self.base.dim

    def _tail(self, rho):
        return self.base._tail_primitive(max(float(rho), self.radius))

    def cell_masses(self, lo, hi):
        lo, hi = _as_boxes(lo, hi, self.dim)
        if isinstance(self.base, DiracSum):
            z = self.base._z
            keep = np.linalg.norm(z, axis=1) > self.radius
            inside = np.all((z[None, :, :] >= lo[:, None, :]) & (z[None, :, :] < hi[:, None, :]), axis=2)
            return (inside & keep[None, :]) @ self.base._m
        near, far = _box_distance_range(lo, hi)
        out = np.zeros(lo.shape[0])
        outside = near >= self.radius
        if np.any(outside):
            out[outside] = self.base.cell_masses(lo[outside], hi[outside])
        straddle = (~outside) & (far > self.radius)
        if np.any(straddle):
            T = np.vectorize(lru_cache(maxsize=None)(self._tail), otypes=[float])
            S = sphere_area(self.dim)
            for k in np.flatnonzero(straddle):
                val = _flux_integral(lambda rho: -T(rho), lo[k], hi[k])
                touching = (lo[k] <= 0) & (hi[k] >= 0)
                if np.all(touching):
                    on_face = np.count_nonzero((lo[k] == 0) | (hi[k] == 0))
                    val += S * T(0.0) * 0.5 ** on_face
                out[k] = val
        return out

    def mass_outside(self, radius):
        return self.base.mass_outside(max(radius, self.radius))

    def origin_cell_moments(self, h):
        N = self.dim
        if isinstance(self.base, DiracSum):
            a = 0.5 * h
            z = self.base._z
            keep = np.linalg.norm(z, axis=1) > self.radius
            inside = np.all((z >= -a) & (z < a), axis=1) & keep
            mirror = np.all((z > -a) & (z <= a), axis=1) & keep
            w = 0.5 * (inside.astype(float) + mirror.astype(float)) * self.base._m
            return (w[:, None] * z ** 2).sum(axis=0)
        if self.radius >= 0.5 * h * math.sqrt(N):
            return np.zeros(N)
        r0 = self.radius

        @lru_cache(maxsize=None)
        def prim(rho):
            if rho <= r0:
                return 0.0
            return _quad(lambda r: self.base.density(r) * r ** (N + 1), r0, rho, "origin moment")

        P = np.vectorize(prim, otypes=[float])
        a = 0.5 * h
        total = _flux_integral(P, np.full(N, -a), np.full(N, a))
        return np.full(N, total / N)

    def levy_functional(self):
        if isinstance(self.base, DiracSum):
            z = self.base._z
            keep = np.linalg.norm(z, axis=1) > self.radius
            r2 = np.sum(z[keep] ** 2, axis=1)
            return float(np.sum(self.base._m[keep] * np.minimum(r2, 1.0)))
        N = self.dim
        f = self.base.density
        near = 0.0
        if self.radius < 1.0:
            near = _quad(lambda r: f(r) * r ** (N + 1), self.radius, 1.0, "∫_{|z|<=1}|z|^2 dμ")
        far = _quad(lambda r: f(r) * r ** (N - 1), max(1.0, self.radius), np.inf, "∫_{|z|>1} dμ")
        return sphere_area(N) * (near + far)

    def density(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r > self.radius, self.base.density(r), 0.0)

    def _tail_primitive(self, rho):
        return self._tail(rho)


def _flux_integral(P, lo, hi):
    """``∫_box g(|z|) dz`` through the boundary flux of ``z |z|^{-N} P(|z|)``.

    ``P`` is any radial primitive with ``P'(ρ) = g(ρ) ρ^{N-1}``.  The caller
    accounts for a nonzero flux through a vanishing sphere around the origin.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    N = lo.size

    def phi(y):
        r = np.linalg.norm(y, axis=-1)
        return P(r) / r ** N

    if N == 1:
        total = 0.0
        for c, sign in ((hi[0], 1.0), (lo[0], -1.0)):
            if c != 0.0:
                total += sign * c * float(phi(np.array([[c]]))[0])
        return total
    total = 0.0
    for i in range(N):
        rest = [j for j in range(N) if j != i]
        for c, sign in ((hi[i], 1.0), (lo[i], -1.0)):
            if c == 0.0:
                continue

            def face(t, c=c, i=i):
                y = np.insert(t, i, c, axis=1)
                return phi(y)

            val, _ = integrate_boxes(face, lo[rest][None, :], hi[rest][None, :], rtol=CELL_RTOL)
            total += sign * c * val[0]
    return total


# ---------------------------------------------------------------------------
# module-level operations


def cell_mass(measure: LevyMeasure, lo, hi) -> float:
    """μ of the half-open box ``[lo, hi)``."""
    return measure.cell_mass(lo, hi)


def levy_functional(measure: LevyMeasure) -> float:
    """``∫ min(|z|^2, 1) dμ``; raises NotLevyMeasureError when divergent."""
    return float(measure.levy_functional())


def symbol(weights, xi) -> np.ndarray:
    """Fourier symbol ``Σ_α w_α (1 - cos(z_α·ξ))`` of a stencil.

    ``xi`` is a single frequency of length N or an array of shape (M, N).
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim <= 1
    xi = np.atleast_2d(xi.reshape(1, -1) if single else xi)
    z = weights.offsets * weights.h
    vals = (1.0 - np.cos(xi @ z.T)) @ weights.weights
    return float(vals[0]) if single else vals
