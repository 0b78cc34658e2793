"""Batched adaptive tensor Gauss-Legendre cubature over axis-aligned boxes.

Every box is integrated with an ``order``-point product rule and compared with
the same rule applied to its ``2**d`` children.  Boxes whose two estimates
disagree by more than their share of the tolerance are split and revisited.
All boxes of a batch are processed together so the integrand is evaluated on
large arrays.
"""

import numpy as np

from .errors import QuadratureError

_RULES = {}


def _rule(order, dim):
    key = (order, dim)
    if key not in _RULES:
        x, w = np.polynomial.legendre.leggauss(order)
        x = 0.5 * (x + 1.0)
        w = 0.5 * w
        grids = np.meshgrid(*([x] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([w] * dim), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        _RULES[key] = (nodes, weights)
    return _RULES[key]


def _children(lo, hi):
    d = lo.shape[1]
    mid = 0.5 * (lo + hi)
    corners = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T
    clo = np.where(corners[None, :, :] == 0, lo[:, None, :], mid[:, None, :])
    chi = np.where(corners[None, :, :] == 0, mid[:, None, :], hi[:, None, :])
    return clo.reshape(-1, d), chi.reshape(-1, d)


def _estimate(func, lo, hi, order):
    nodes, weights = _rule(order, lo.shape[1])
    span = hi - lo
    pts = lo[:, None, :] + span[:, None, :] * nodes[None, :, :]
    vals = np.asarray(func(pts.reshape(-1, lo.shape[1])), dtype=float)
    vals = vals.reshape(lo.shape[0], nodes.shape[0])
    return np.prod(span, axis=1) * (vals @ weights)


def integrate_boxes(func, lo, hi, rtol=1e-10, atol=0.0, order=6, max_level=48,
                    max_boxes=2_000_000):
    """Integrate ``func`` over each box ``[lo[k], hi[k]]``.

    Parameters
    ----------
    func : callable
        Maps an ``(M, d)`` array of points to ``M`` values.
    lo, hi : array_like, shape (K, d)
        Box corners.
    rtol, atol : float
        Per-box acceptance: ``|I_children - I_parent|`` must not exceed
        ``max(atol, rtol * |I_cell|)`` scaled by the box's volume fraction.

    Returns
    -------
    values, errors : ndarray, shape (K,)
    """
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    ncell = lo.shape[0]
    cell_vol = np.prod(hi - lo, axis=1)
    result = np.zeros(ncell)
    error = np.zeros(ncell)
    if ncell == 0:
        return result, error

    owner = np.arange(ncell)
    coarse = _estimate(func, lo, hi, order)
    total = coarse.copy()
    for _level in range(max_level):
        clo, chi = _children(lo, hi)
        nchild = clo.shape[0] // lo.shape[0]
        child_est = _estimate(func, clo, chi, order).reshape(-1, nchild)
        fine = child_est.sum(axis=1)
        # running estimate of each cell's integral drives the relative tolerance
        total = result.copy()
        np.add.at(total, owner, fine)
        vol_frac = np.prod(hi - lo, axis=1) / cell_vol[owner]
        tol = np.maximum(atol, rtol * np.abs(total[owner])) * vol_frac
        diff = np.abs(fine - coarse)
        done = diff <= tol
        np.add.at(result, owner[done], fine[done])
        np.add.at(error, owner[done], diff[done])
        if done.all():
            return result, error
        keep = ~done
        lo = clo.reshape(-1, nchild, clo.shape[1])[keep].reshape(-1, clo.shape[1])
        hi = chi.reshape(-1, nchild, chi.shape[1])[keep].reshape(-1, chi.shape[1])
        coarse = child_est[keep].ravel()
        owner = np.repeat(owner[keep], nchild)
        if lo.shape[0] > max_boxes:
            break
    pending = np.zeros(ncell)
    np.add.at(pending, owner, np.abs(coarse))
    worst = float(np.max(pending / np.maximum(np.abs(total), 1e-300)))
    raise QuadratureError("adaptive cubature did not converge", achieved=worst)
