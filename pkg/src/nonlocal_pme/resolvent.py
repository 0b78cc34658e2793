"""Fixed-point solution of the resolvent equation ``ε v - L_h[v] = g``.

The map ``T[v] = (Σ_α w_α v(· + α h) + g) / (ε + W)`` is a sup-norm
contraction with factor ``q = W / (ε + W)``; its fixed point solves the
equation because ``L_h[v] = Σ w_α v(·+αh) - W v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discrete_operator import DiscreteOperator, GridFunction, StencilWeights, _check_compatible
from .errors import DomainError


@dataclass
class ResolventResult:
    v: GridFunction
    iterations: int
    residual: float   # ‖ε v - L_h v - g‖_∞
    q: float
    predicted: int


def contraction_factor(weights: StencilWeights, eps: float) -> float:
    W = weights.effective_total
    return W / (eps + W)


class ContractionMap:
    """The map ``T`` for fixed ``g``; call on a value array."""

    def __init__(self, weights: StencilWeights, eps: float, g: GridFunction):
        if not eps > 0:
            raise DomainError("ε must be positive")
        self.op = DiscreteOperator(weights, g.shape, g.boundary)
        self.denom = eps + weights.effective_total
        self.g = np.asarray(g.values, dtype=float)
        self.q = contraction_factor(weights, eps)

    def __call__(self, v):
        return (self.op.neighbor_sum(v) + self.g) / self.denom


def iteration_bound(eps: float, W: float, tol: float, g_norm: float) -> int:
    """Predicted sweep count ``ceil(log(tol (1-q) / ‖g‖_∞) / log q)``, at least 1."""
    if not eps > 0:
        raise DomainError("ε must be positive")
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    q = W / (eps + W)
    if q == 0 or g_norm == 0:
        return 1
    arg = tol * (1 - q) / g_norm
    if arg >= 1:
        return 1
    return max(1, int(math.ceil(math.log(arg) / math.log(q) - 1e-12)))


def solve_resolvent(g: GridFunction, weights: StencilWeights, eps: float, tol: float = 1e-10,
                    max_iter: int | None = None) -> ResolventResult:
    """Iterate ``v <- T[v]`` from ``v = 0`` until ``‖Δv‖_∞ <= tol (1-q)/q``."""
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    _check_compatible(weights, g)
    T = ContractionMap(weights, eps, g)
    q = T.q
    g_norm = float(np.abs(T.g).max())
    predicted = iteration_bound(eps, weights.effective_total, tol, g_norm)
    limit = max_iter if max_iter is not None else max(10 * predicted, 1000)
    stop = tol * (1 - q) / q if q > 0 else math.inf
    v = np.zeros_like(T.g)
    it = 0
    while True:
        nxt = T(v)
        it += 1
        diff = float(np.abs(nxt - v).max())
        v = nxt
        if diff <= stop or it >= limit:
            break
    residual = float(np.abs(eps * v - T.op(v) - T.g).max())
    return ResolventResult(g.with_values(v), it, residual, q, predicted)


def residual_bound(eps: float, q: float, tol: float) -> float:
    """Guaranteed bound ``ε tol (1 + 2q/(1-q))`` on the returned residual."""
    return eps * tol * (1 + 2 * q / (1 - q))


def verify_selfadjoint(weights: StencilWeights, eps: float, f: GridFunction, g: GridFunction,
                       tol: float = 1e-13) -> float:
    """``|h^N Σ f·solve(g) - h^N Σ g·solve(f)|`` on a periodic grid."""
    if f.boundary != "periodic" or g.boundary != "periodic":
        raise DomainError("self-adjointness check needs periodic grid functions")
    if f.shape != g.shape:
        raise DomainError("f and g live on different grids")
    vol = f.cell_volume
    vg = solve_resolvent(g, weights, eps, tol).v.values
    vf = solve_resolvent(f, weights, eps, tol).v.values
    return abs(vol * float(np.sum(f.values * vg)) - vol * float(np.sum(g.values * vf)))
