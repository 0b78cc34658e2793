import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nonlocal_pme.discrete_operator import (DiscreteOperator, GridFunction, StencilWeights, apply,
                                            assemble_local, assemble_nonlocal, consistency_error,
                                            grid_normalize)
from nonlocal_pme.errors import DomainError, GridCompatibilityError
from nonlocal_pme.levy_measure import DiracSum, FractionalLaplacian, Truncated
from nonlocal_pme.probes import Bump, Gaussian

finite = st.floats(-10, 10, allow_nan=False)


def brute_apply(weights, u):
    """Direct loop over lattice points and stencil entries."""
    vals = u.values
    out = np.zeros_like(vals)
    n = np.array(vals.shape)
    for idx in np.ndindex(*vals.shape):
        i = np.array(idx)
        acc = 0.0
        for a, w in zip(weights.offsets, weights.weights):
            j = i + a
            if u.boundary == "periodic":
                nb = vals[tuple(np.mod(j, n))]
            else:
                nb = vals[tuple(j)] if np.all((j >= 0) & (j < n)) else 0.0
            acc += w * (nb - vals[idx])
        if weights.tail_policy == "absorb":
            acc -= weights.tail_mass * vals[idx]
        out[idx] = acc
    return out


def test_identity_sigma_gives_standard_laplacian():
    w = assemble_local(np.eye(2), 0.5)
    assert w.as_dict() == {(-1, 0): 4.0, (0, -1): 4.0, (0, 1): 4.0, (1, 0): 4.0}
    assert w.tail_mass == 0


def test_zero_sigma_gives_empty_stencil():
    w = assemble_local(np.zeros((1, 2)), 0.1)
    assert w.offsets.shape == (0, 1)
    u = GridFunction(0.1, (0,), np.arange(5.0))
    assert np.all(apply(w, u).values == 0)


def test_sigma_two_puts_atoms_at_two_h():
    w = assemble_local(np.array([[2.0]]), 0.1)
    assert w.as_dict() == pytest.approx({(-2,): 100.0, (2,): 100.0})


def test_coinciding_columns_accumulate():
    w = assemble_local(np.array([[1.0, 1.0]]), 1.0)
    assert w.as_dict() == {(-1,): 2.0, (1,): 2.0}


def test_non_integer_sigma_rejected():
    with pytest.raises(GridCompatibilityError, match="grid_normalize"):
        assemble_local(np.array([[0.5]]), 0.1)


def test_grid_normalize_examples():
    A, I0 = grid_normalize(np.eye(3))
    assert np.allclose(np.abs(A), np.eye(3)) and np.allclose(I0, np.eye(3))
    A, I0 = grid_normalize(np.array([[2.0], [0.0]]))     # σσᵀ = diag(4, 0)
    assert np.allclose(np.abs(A), np.diag([0.5, 1.0]))
    assert np.allclose(I0, np.diag([1.0, 0.0]))
    A, I0 = grid_normalize(np.zeros((2, 2)))
    assert np.allclose(I0, 0)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (2, 3), elements=st.floats(-3, 3)), arrays(float, (2, 2), elements=st.floats(-2, 2)))
def test_grid_normalize_preserves_operator_on_quadratics(sigma, H):
    # ψ(x) = xᵀHx/2 has tr[σσᵀD²ψ] = tr[σσᵀ Hs]; in y = Aᵀx the same function is
    # ψ(A⁻ᵀ y), whose Hessian is A⁻¹ Hs A⁻ᵀ, and L^{I0} sums its first diagonal entries.
    Hs = 0.5 * (H + H.T)
    A, I0 = grid_normalize(sigma)
    S = sigma @ sigma.T
    Ainv = np.linalg.inv(A)
    lhs = np.trace(I0 @ (Ainv @ Hs @ Ainv.T))
    assert np.isclose(np.trace(I0 @ A.T @ S @ A), np.trace(I0)) or np.trace(I0) == 0
    assert np.isclose(lhs, np.trace(S @ Hs), rtol=1e-7, atol=1e-7 * (1 + np.abs(S).max() * np.abs(Hs).max()))


def test_dirac_assembly_example():
    w = assemble_nonlocal(DiracSum([((2 * math.pi,), 1.0), ((-2 * math.pi,), 1.0)]), 1.0)
    assert w.as_dict() == {(-6,): 1.0, (6,): 1.0}


def test_fractional_first_weight_closed_form():
    mu = FractionalLaplacian(1, 0.5)
    w = assemble_nonlocal(mu, 0.5).as_dict()
    assert w[(1,)] == pytest.approx(mu.constant * 2 * (1 / math.sqrt(0.25) - 1 / math.sqrt(0.75)), rel=1e-10)


@pytest.mark.parametrize("dim,h,r_cut", [(1, 0.1, 3.0), (2, 0.25, 2.0)])
def test_partition_additivity(dim, h, r_cut):
    mu = FractionalLaplacian(dim, 1.2)
    w = assemble_nonlocal(mu, h, r_cut)
    beyond = mu.mass_outside(h / 2) if dim == 1 else None
    if dim == 1:
        assert w.total + w.tail_mass == pytest.approx(beyond, rel=1e-9)
    assert w.total <= mu.mass_outside(h / 2 * (1 if dim == 1 else 1.0)) * (1 + 1e-9) or dim > 1


def test_truncated_dirac_drops_inner_atoms():
    mu = Truncated(DiracSum([((1.0,), 1.0), ((-1.0,), 1.0), ((3.0,), 2.0), ((-3.0,), 2.0)]), 2.0)
    assert assemble_nonlocal(mu, 1.0).as_dict() == {(-3,): 2.0, (3,): 2.0}


def test_weights_exactly_symmetric_2d():
    w = assemble_nonlocal(FractionalLaplacian(2, 0.8), 0.5, r_cut=2.5)
    table = w.as_dict()
    assert all(table[tuple(-np.array(a))] == x for a, x in table.items())


def test_stencil_rejects_asymmetry_and_negatives():
    with pytest.raises(DomainError):
        StencilWeights(1.0, 1, [[1], [-1]], [1.0, 2.0])
    with pytest.raises(DomainError):
        StencilWeights(1.0, 1, [[1], [-1]], [-1.0, -1.0])
    with pytest.raises(DomainError):
        StencilWeights(1.0, 1, [[0]], [1.0])


def test_apply_examples():
    h = 0.1
    w = assemble_local(np.eye(1), h)
    u = GridFunction(h, (0,), np.full(30, 2.5), "periodic")
    assert np.all(apply(w, u).values == 0)
    x = GridFunction.from_function(lambda p: p[:, 0] ** 2, h, (-20,), (20,))
    assert np.allclose(apply(w, x).values[1:-1], 2.0, rtol=0, atol=1e-9)


def test_apply_rejects_mismatch():
    w = assemble_local(np.eye(1), 0.1)
    with pytest.raises(DomainError):
        apply(w, GridFunction(0.2, (0,), np.zeros(4)))
    with pytest.raises(DomainError):
        apply(w, GridFunction(0.1, (0, 0), np.zeros((3, 3))))


@pytest.mark.parametrize("boundary", ["periodic", "zero_extension"])
@pytest.mark.parametrize("policy", ["drop", "absorb"])
@pytest.mark.parametrize("shape", [(9,), (5, 6)])
def test_apply_matches_brute_force(rng, boundary, policy, shape):
    dim = len(shape)
    mu = FractionalLaplacian(dim, 1.0)
    w = assemble_nonlocal(mu, 0.5, r_cut=2.0 if dim == 2 else 6.0, tail_policy=policy) \
        + assemble_local(np.eye(dim), 0.5)
    u = GridFunction(0.5, (0,) * dim, rng.standard_normal(shape), boundary)
    assert np.allclose(apply(w, u).values, brute_apply(w, u), rtol=1e-12, atol=1e-12)


def test_large_1d_grid_uses_sparse_path(rng):
    w = assemble_nonlocal(FractionalLaplacian(1, 1.0), 0.1, r_cut=1.0)
    n = 5000
    u = GridFunction(0.1, (0,), rng.standard_normal(n), "periodic")
    small = GridFunction(0.1, (0,), u.values[:50], "periodic")
    assert np.allclose(apply(w, small).values, brute_apply(w, small), atol=1e-10)
    assert abs(apply(w, u).values.sum()) < 1e-9 * w.total * np.abs(u.values).sum()


def periodic_stencils():
    return st.sampled_from([
        ("laplacian", lambda: assemble_local(np.eye(1), 0.25)),
        ("fractional 0.5", lambda: assemble_nonlocal(FractionalLaplacian(1, 0.5), 0.25, r_cut=3.0)),
        ("fractional 1.5", lambda: assemble_nonlocal(FractionalLaplacian(1, 1.5), 0.25, r_cut=3.0)),
        ("dirac", lambda: assemble_nonlocal(DiracSum([((0.9,), 1.0), ((-0.9,), 1.0), ((2.1,), 0.3), ((-2.1,), 0.3)]), 0.25)),
    ])


vectors = arrays(float, 32, elements=finite)


@settings(max_examples=60, deadline=None)
@given(periodic_stencils(), vectors, vectors, finite, finite)
def test_linearity(stencil, u, v, a, b):
    op = DiscreteOperator(stencil[1](), (32,), "periodic")
    scale = 1 + np.abs(op(u)).max() * abs(a) + np.abs(op(v)).max() * abs(b)
    assert np.abs(op(a * u + b * v) - a * op(u) - b * op(v)).max() <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(periodic_stencils(), vectors, vectors)
def test_selfadjoint_and_nonpositive(stencil, u, v):
    w = stencil[1]()
    op = DiscreteOperator(w, (32,), "periodic")
    scale = w.total * (1 + np.linalg.norm(u)) * (1 + np.linalg.norm(v))
    assert abs(u @ op(v) - v @ op(u)) <= 1e-10 * scale
    assert u @ op(u) <= 1e-12 * w.total * (u @ u) + 1e-300
    assert abs(op(u).sum()) <= 1e-13 * w.total * (1 + np.abs(u).sum())


ZETAS = {"sign+": lambda r: np.tanh(np.maximum(r, 0) / 0.1), "cube": lambda r: r ** 3, "arctan": np.arctan}


@settings(max_examples=60, deadline=None)
@given(periodic_stencils(), vectors, st.sampled_from(sorted(ZETAS)))
def test_stroock_varopoulos(stencil, u, zname):
    w = stencil[1]()
    op = DiscreteOperator(w, (32,), "periodic")
    z = ZETAS[zname](u)
    assert 0.25 * (z @ op(u)) <= 1e-12 * w.total * (1 + np.abs(z) @ np.abs(u))


def test_consistency_local_second_order():
    g = Gaussian(1)
    errs = []
    for h in (0.4, 0.2, 0.1, 0.05):
        grid = GridFunction.on_box(lambda p: 0 * p[:, 0], h, (-8.0,), (8.0,))
        errs.append(consistency_error(assemble_local(np.eye(1), h), g, g.local_image(), grid))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 <= r <= 4.5 for r in ratios)


def test_consistency_zero_probe():
    w = assemble_local(np.eye(1), 0.1)
    grid = GridFunction.on_box(lambda p: 0 * p[:, 0], 0.1, (-1.0,), (1.0,))
    zero = lambda p: np.zeros(len(p))
    assert consistency_error(w, zero, zero, grid) == 0


def test_consistency_fractional_bump_decreases():
    b = Bump(1.0)
    exact = b.fractional_image(0.5)
    errs = []
    for h in (0.4, 0.2, 0.1, 0.05):
        grid = GridFunction.on_box(lambda p: 0 * p[:, 0], h, (-8.0,), (8.0,))
        w = assemble_nonlocal(FractionalLaplacian(1, 0.5), h, r_cut=20.0, tail_policy="absorb")
        errs.append(consistency_error(w, b, exact, grid))
    assert all(b_ < a for a, b_ in zip(errs, errs[1:]))


def test_grid_function_rejects_nonfinite():
    with pytest.raises(DomainError):
        GridFunction(0.1, (0,), np.array([0.0, np.nan]))
