"""Lattice stencils for the local and nonlocal operators and their application.

A stencil is a symmetric table ``α -> w_α`` on ``hZ^N``; applying it to a
grid function gives ``Σ_α w_α (u_{i+α} - u_i)``, optionally minus an absorbed
tail ``tail_mass * u_i`` that stands for jumps beyond the cut-off radius.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DomainError, GridCompatibilityError
from .levy_measure import DiracSum, LevyMeasure, Truncated

BOUNDARIES = ("periodic", "zero_extension")
TAIL_POLICIES = ("drop", "absorb")
INNER_CELL = ("drop", "moment")
GATHER_LIMIT = 2_000_000


@dataclass(frozen=True, eq=False)
class StencilWeights:
    h: float
    dim: int
    offsets: np.ndarray
    weights: np.ndarray
    tail_mass: float = 0.0
    tail_policy: str = "drop"

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("spacing h must be positive")
        if self.tail_policy not in TAIL_POLICIES:
            raise DomainError(f"tail_policy must be one of {TAIL_POLICIES}")
        off = np.asarray(self.offsets, dtype=np.int64).reshape(-1, self.dim)
        w = np.asarray(self.weights, dtype=float).ravel()
        if off.shape[0] != w.size:
            raise DomainError("one weight per offset required")
        if np.any(np.all(off == 0, axis=1)):
            raise DomainError("the zero offset is not part of a stencil")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("weights must be finite and nonnegative")
        if not (np.isfinite(self.tail_mass) and self.tail_mass >= 0):
            raise DomainError("tail mass must be finite and nonnegative")
        # canonical order, duplicates merged
        if off.shape[0]:
            uniq, inv = np.unique(off, axis=0, return_inverse=True)
            merged = np.zeros(uniq.shape[0])
            np.add.at(merged, inv.ravel(), w)
            off, w = uniq, merged
        table = {tuple(a): x for a, x in zip(off.tolist(), w.tolist())}
        for a, x in table.items():
            if table.get(tuple(-v for v in a)) != x:
                raise DomainError(f"stencil is not symmetric at offset {a}")
        off.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "weights", w)

    @property
    def total(self) -> float:
        """``W = Σ_α w_α``."""
        return float(self.weights.sum())

    @property
    def effective_total(self) -> float:
        return self.total + (self.tail_mass if self.tail_policy == "absorb" else 0.0)

    def as_dict(self) -> dict:
        return {tuple(a): x for a, x in zip(self.offsets.tolist(), self.weights.tolist())}

    def __add__(self, other: "StencilWeights") -> "StencilWeights":
        if not isinstance(other, StencilWeights):
            return NotImplemented
        if other.dim != self.dim or not np.isclose(other.h, self.h, rtol=1e-14, atol=0):
            raise DomainError("cannot add stencils with different spacing or dimension")
        policy = self.tail_policy
        if self.tail_mass and other.tail_mass and other.tail_policy != policy:
            raise DomainError("cannot add stencils with different tail policies")
        if not self.tail_mass:
            policy = other.tail_policy
        return StencilWeights(self.h, self.dim,
                              np.concatenate([self.offsets, other.offsets]),
                              np.concatenate([self.weights, other.weights]),
                              self.tail_mass + other.tail_mass, policy)

    @classmethod
    def empty(cls, h, dim, tail_policy="drop"):
        return cls(h, dim, np.zeros((0, dim), dtype=np.int64), np.zeros(0), 0.0, tail_policy)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on the lattice points ``h*i`` for ``lo[k] <= i_k < lo[k] + shape[k]``."""

    h: float
    lo: tuple
    values: np.ndarray
    boundary: str = "zero_extension"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 0:
            raise DomainError("grid function needs at least one axis")
        lo = tuple(int(x) for x in np.atleast_1d(self.lo))
        if len(lo) != vals.ndim:
            raise DomainError("index box dimension does not match the value array")
        if not self.h > 0:
            raise DomainError("spacing h must be positive")
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"boundary must be one of {BOUNDARIES}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "lo", lo)

    @property
    def dim(self):
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    @property
    def cell_volume(self):
        return self.h ** self.dim

    def coords(self):
        return [self.h * (l + np.arange(n)) for l, n in zip(self.lo, self.shape)]

    def points(self):
        grids = np.meshgrid(*self.coords(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def with_values(self, values):
        return GridFunction(self.h, self.lo, np.asarray(values).reshape(self.shape), self.boundary)

    def mass(self):
        return self.cell_volume * float(self.values.sum())

    def l1(self):
        return self.cell_volume * float(np.abs(self.values).sum())

    def linf(self):
        return float(np.abs(self.values).max())

    @classmethod
    def from_function(cls, f, h, lo, hi, boundary="zero_extension"):
        """Sample ``f`` (points of shape (M, N) -> M values) on ``lo <= i < hi``."""
        lo = tuple(int(x) for x in np.atleast_1d(lo))
        hi = tuple(int(x) for x in np.atleast_1d(hi))
        shape = tuple(b - a for a, b in zip(lo, hi))
        if any(n <= 0 for n in shape):
            raise DomainError("empty index box")
        tmp = cls(h, lo, np.zeros(shape), boundary)
        return tmp.with_values(np.asarray(f(tmp.points()), dtype=float))

    @classmethod
    def on_box(cls, f, h, x_lo, x_hi, boundary="zero_extension"):
        """Sample ``f`` on the lattice points of the physical box ``[x_lo, x_hi)``."""
        lo = [int(round(a / h)) for a in np.atleast_1d(x_lo)]
        hi = [int(round(b / h)) for b in np.atleast_1d(x_hi)]
        return cls.from_function(f, h, lo, hi, boundary)


# ---------------------------------------------------------------------------
# assembly


def _integer_columns(sigma):
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    rounded = np.rint(sigma)
    if not np.allclose(sigma, rounded, rtol=0, atol=1e-12):
        raise GridCompatibilityError("not grid-compatible; apply grid_normalize")
    return rounded.astype(np.int64)


def assemble_local(sigma, h: float) -> StencilWeights:
    """Stencil of ``Σ_i (ψ(x+hσ_i) + ψ(x-hσ_i) - 2ψ(x)) / h^2``.

    ``sigma`` is N x P with integer entries; zero columns are ignored.
    """
    cols = _integer_columns(sigma)
    dim = cols.shape[0]
    cols = cols[:, np.any(cols != 0, axis=0)]
    offsets = np.concatenate([cols.T, -cols.T]) if cols.size else np.zeros((0, dim), np.int64)
    weights = np.full(offsets.shape[0], 1.0 / h ** 2)
    return StencilWeights(h, dim, offsets, weights)


def grid_normalize(sigma, threshold=1e-12):
    """Coordinate map that turns ``tr[σσᵀ D²]`` into unit second differences.

    Returns ``(A, I0)`` with ``Aᵀ σσᵀ A = I0 = diag(1, .., 1, 0, .., 0)``; in the
    coordinates ``y = Aᵀ x`` the operator is the sum of ``∂²/∂y_i²`` over the
    first ``rank`` axes.  ``A = Q J`` with Q orthonormal (eigenvectors of
    ``σσᵀ``, positive eigenvalues first) and ``J = diag(λ_i^{-1/2} or 1)``.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    lam, vec = np.linalg.eigh(sigma @ sigma.T)
    scale = max(1.0, float(np.max(np.abs(lam)))) if lam.size else 1.0
    positive = lam > threshold * scale
    order = np.lexsort((-lam, ~positive))
    lam, vec, positive = lam[order], vec[:, order], positive[order]
    # deterministic sign: largest component of each eigenvector positive
    pivot = vec[np.argmax(np.abs(vec), axis=0), np.arange(vec.shape[1])]
    vec = vec * np.where(pivot < 0, -1.0, 1.0)[None, :]
    J = np.where(positive, 1.0 / np.sqrt(np.where(positive, lam, 1.0)), 1.0)
    A = vec * J[None, :]
    I0 = np.diag(positive.astype(float))
    return A, I0


def _lattice_ball(kmax, dim, r_cut_units):
    rng = np.arange(-kmax, kmax + 1)
    alpha = np.array(list(itertools.product(rng, repeat=dim)), dtype=np.int64)
    norm2 = np.sum(alpha.astype(float) ** 2, axis=1)
    keep = (norm2 > 0) & (norm2 <= r_cut_units ** 2 * (1 + 1e-12))
    alpha = alpha[keep]
    # lexicographically positive half
    first = np.argmax(alpha != 0, axis=1)
    positive = alpha[np.arange(alpha.shape[0]), first] > 0
    return alpha[positive]


def assemble_nonlocal(measure: LevyMeasure, h: float, r_cut: float = 10.0,
                      tail_policy: str = "drop", inner_cell: str = "drop") -> StencilWeights:
    """Cell-mass stencil ``w_α = μ(z_α + R_h)`` for ``0 < |z_α| <= r_cut``.

    The origin cell is skipped.  With ``inner_cell="moment"`` its second
    moment ``∫_{R_h} z_i^2 dμ`` is put back as a centred second difference,
    adding ``m_i / (2h^2)`` to ``w_{±e_i}``.
    """
    if r_cut < h:
        raise DomainError("r_cut must be at least h")
    if tail_policy not in TAIL_POLICIES:
        raise DomainError(f"tail_policy must be one of {TAIL_POLICIES}")
    if inner_cell not in INNER_CELL:
        raise DomainError(f"inner_cell must be one of {INNER_CELL}")
    dim = measure.dim
    units = r_cut / h
    kmax = int(np.floor(units * (1 + 1e-12)))
    half = _lattice_ball(kmax, dim, units)
    lo = (half - 0.5) * h
    hi = (half + 0.5) * h
    w = measure.cell_masses(lo, hi)
    if not measure.singular:
        # mirror cell; differs from the original only through atoms on faces
        w = 0.5 * (w + measure.cell_masses(-hi, -lo))
    nz = w > 0
    offsets = np.concatenate([half[nz], -half[nz]])
    weights = np.concatenate([w[nz], w[nz]])

    if _is_atomic(measure):
        origin = _atomic_origin_mass(measure, h)
        tail = max(0.0, _atomic_total(measure) - float(weights.sum()) - origin)
    elif dim == 1:
        tail = measure.mass_outside((kmax + 0.5) * h)
    else:
        tail = measure.mass_outside(r_cut + 0.5 * h)

    if inner_cell == "moment":
        m = np.asarray(measure.origin_cell_moments(h), dtype=float)
        eye = np.eye(dim, dtype=np.int64)
        offsets = np.concatenate([offsets, eye, -eye])
        extra = m / (2.0 * h ** 2)
        weights = np.concatenate([weights, extra, extra])
    return StencilWeights(h, dim, offsets, weights, float(tail), tail_policy)


def _is_atomic(measure):
    return isinstance(measure, DiracSum) or (isinstance(measure, Truncated)
                                             and isinstance(measure.base, DiracSum))


def _atomic_total(measure):
    if isinstance(measure, DiracSum):
        return measure.total_mass
    z = measure.base._z
    keep = np.linalg.norm(z, axis=1) > measure.radius
    return float(measure.base._m[keep].sum())


def _atomic_origin_mass(measure, h):
    dim = measure.dim
    a = 0.5 * h
    lo = np.full((1, dim), -a)
    hi = np.full((1, dim), a)
    # half-open box and its mirror image, averaged as for every other cell
    base = measure if isinstance(measure, DiracSum) else measure.base
    z = base._z
    m = base._m
    if isinstance(measure, Truncated):
        m = np.where(np.linalg.norm(z, axis=1) > measure.radius, m, 0.0)
    inside = np.all((z >= lo) & (z < hi), axis=1)
    mirror = np.all((z > lo) & (z <= hi), axis=1)
    return float(0.5 * (m[inside].sum() + m[mirror].sum()))


# ---------------------------------------------------------------------------
# application


class DiscreteOperator:
    """``L_h`` bound to a fixed grid shape and boundary policy.

    Small problems gather all neighbours through a precomputed index table
    and sum ``w_α (v_{i+α} - v_i)`` directly, so constants are mapped to 0
    exactly.  Larger ones loop over folded shifts (periodic) or use a direct
    correlation with the stencil kernel (zero extension).
    """

    def __init__(self, weights: StencilWeights, shape, boundary: str):
        shape = tuple(int(n) for n in shape)
        if len(shape) != weights.dim:
            raise DomainError("stencil and grid dimensions differ")
        if boundary not in BOUNDARIES:
            raise DomainError(f"boundary must be one of {BOUNDARIES}")
        self.weights = weights
        self.shape = shape
        self.boundary = boundary
        self.diag = weights.effective_total
        self.absorb = self.diag - weights.total
        n = np.array(shape)
        off = weights.offsets
        w = weights.weights
        if boundary == "periodic":
            res = np.mod(off, n[None, :]) if off.size else off
            if res.size:
                uniq, inv = np.unique(res, axis=0, return_inverse=True)
                folded = np.zeros(uniq.shape[0])
                np.add.at(folded, inv.ravel(), w)
            else:
                uniq, folded = res, w
            self._shifts = uniq
            self._shift_w = folded
        else:
            inside = np.all(np.abs(off) < n[None, :], axis=1) if off.size else np.zeros(0, bool)
            self._shifts = off[inside]
            self._shift_w = w[inside]
        self._neighbors = None
        self._kernel = None
        size = int(np.prod(shape))
        if size * max(len(self._shift_w), 1) <= GATHER_LIMIT:
            self._neighbors = self._neighbor_table()
        elif boundary == "zero_extension":
            self._kernel = self._kernel_nd()

    def _neighbor_table(self):
        """Flat index of ``i + α`` for every point and shift; ``size`` marks outside."""
        n = np.array(self.shape)
        size = int(np.prod(n))
        idx = np.indices(self.shape).reshape(len(self.shape), -1).T
        nb = idx[:, None, :] + self._shifts[None, :, :]
        if self.boundary == "periodic":
            nb = np.mod(nb, n)
            outside = np.zeros(nb.shape[:2], bool)
        else:
            outside = np.any((nb < 0) | (nb >= n), axis=2)
            nb = np.clip(nb, 0, n - 1)
        flat = np.ravel_multi_index(tuple(np.moveaxis(nb, -1, 0)), self.shape)
        flat[outside] = size
        return flat

    def _kernel_nd(self):
        if self._shifts.size == 0:
            return None
        reach = np.max(np.abs(self._shifts), axis=0)
        K = np.zeros(tuple(2 * reach + 1))
        K[tuple((self._shifts + reach[None, :]).T)] = self._shift_w
        return K

    def neighbor_sum(self, v):
        """``Σ_α w_α v_{i+α}`` with the boundary policy applied."""
        v = np.asarray(v, dtype=float).reshape(self.shape)
        if self._neighbors is not None:
            ext = np.append(v.ravel(), 0.0)
            return (ext[self._neighbors] @ self._shift_w).reshape(self.shape)
        if self.boundary == "periodic":
            out = np.zeros_like(v)
            axes = tuple(range(v.ndim))
            for a, wa in zip(self._shifts, self._shift_w):
                out += wa * np.roll(v, tuple(-a), axis=axes)
            return out
        if self._kernel is None:
            return np.zeros_like(v)
        return ndimage.correlate(v, self._kernel, mode="constant", cval=0.0)

    def __call__(self, v):
        v = np.asarray(v, dtype=float).reshape(self.shape)
        if self._neighbors is not None:
            flat = v.ravel()
            ext = np.append(flat, 0.0)
            out = ((ext[self._neighbors] - flat[:, None]) @ self._shift_w).reshape(self.shape)
        elif self.boundary == "periodic":
            out = np.zeros_like(v)
            axes = tuple(range(v.ndim))
            for a, wa in zip(self._shifts, self._shift_w):
                out += wa * (np.roll(v, tuple(-a), axis=axes) - v)
        else:
            out = self.neighbor_sum(v) - self._shift_w.sum() * v
        if self.boundary == "zero_extension":
            # stencil entries reaching beyond the whole box were filtered out above
            out = out - (self.weights.total - self._shift_w.sum()) * v
        if self.absorb:
            out = out - self.absorb * v
        return out


def _check_compatible(weights, u):
    if weights.dim != u.dim:
        raise DomainError(f"dimension mismatch: stencil {weights.dim}, grid {u.dim}")
    if not np.isclose(weights.h, u.h, rtol=1e-12, atol=0.0):
        raise DomainError(f"spacing mismatch: stencil h={weights.h}, grid h={u.h}")


def apply(weights: StencilWeights, u: GridFunction) -> GridFunction:
    """``(L_h u)_i = Σ_α w_α (u_{i+α} - u_i) - [absorb] tail_mass u_i``."""
    _check_compatible(weights, u)
    op = DiscreteOperator(weights, u.shape, u.boundary)
    return u.with_values(op(u.values))


def consistency_error(weights: StencilWeights, psi, exact, grid: GridFunction) -> float:
    """Discrete L¹ distance ``h^N Σ_i |(L_h ψ)_i - (Lψ)(x_i)|`` over ``grid``'s box.

    ``psi`` and ``exact`` map an (M, N) array of points to M values; ``grid``
    only supplies spacing, index box and boundary policy.
    """
    _check_compatible(weights, grid)
    pts = grid.points()
    u = grid.with_values(np.asarray(psi(pts), dtype=float))
    approx = apply(weights, u).values.ravel()
    ref = np.asarray(exact(pts), dtype=float).ravel()
    return grid.cell_volume * float(np.abs(approx - ref).sum())
