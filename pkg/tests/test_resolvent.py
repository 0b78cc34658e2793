import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nonlocal_pme.discrete_operator import GridFunction, StencilWeights, apply, assemble_local, assemble_nonlocal
from nonlocal_pme.errors import DomainError
from nonlocal_pme.levy_measure import DiracSum, FractionalLaplacian
from nonlocal_pme.resolvent import (ContractionMap, iteration_bound, residual_bound, solve_resolvent,
                                    verify_selfadjoint)

H = 10 / 64


def stencils():
    return [assemble_local(np.eye(1), H),
            assemble_nonlocal(FractionalLaplacian(1, 0.5), H),
            assemble_nonlocal(FractionalLaplacian(1, 1.5), H, r_cut=3.0, tail_policy="absorb"),
            assemble_nonlocal(DiracSum([((1.0,), 1.0), ((-1.0,), 1.0)]), H)]


def grid(values, boundary="periodic"):
    return GridFunction(H, (0,), values, boundary)


def test_constant_rhs():
    for w in stencils()[:2] + stencils()[3:]:
        r = solve_resolvent(grid(np.full(64, 3.0)), w, 2.0, 1e-12)
        assert np.allclose(r.v.values, 1.5, rtol=1e-11)


def test_empty_stencil_one_iteration():
    w = StencilWeights.empty(H, 1)
    g = grid(np.linspace(-1, 1, 64))
    r = solve_resolvent(g, w, 4.0, 1e-10)
    assert r.iterations == 1 and np.array_equal(r.v.values, g.values / 4.0)
    assert iteration_bound(4.0, 0.0, 1e-10, 1.0) == 1


def test_iteration_bound_half_contraction():
    for tol, g in ((1e-3, 1.0), (1e-8, 5.0)):
        assert iteration_bound(1.0, 1.0, tol, g) == math.ceil(math.log2(g / (tol / 2)))


def test_rejects_bad_tolerance():
    with pytest.raises(DomainError):
        solve_resolvent(grid(np.ones(64)), stencils()[0], 1.0, 0.0)
    with pytest.raises(DomainError):
        solve_resolvent(grid(np.ones(64)), stencils()[0], 0.0, 1e-8)


def test_random_instances(rng):
    tol = 1e-10
    for k in range(100):
        w = stencils()[k % 4]
        eps = float(10 ** rng.uniform(-1, 1))
        boundary = "periodic" if k % 2 else "zero_extension"
        g = grid(rng.standard_normal(64), boundary)
        r = solve_resolvent(g, w, eps, tol)
        v = r.v.values
        assert eps * np.abs(v).max() <= np.abs(g.values).max() * (1 + 1e-12) + eps * tol
        assert eps * np.abs(v).sum() <= np.abs(g.values).sum() * (1 + 1e-12) + eps * tol * 64
        assert r.iterations <= iteration_bound(eps, w.effective_total, tol, np.abs(g.values).max())
        assert r.residual <= residual_bound(eps, r.q, tol)
        # independent residual through apply
        direct = eps * v - apply(w, r.v).values - g.values
        assert np.abs(direct).max() <= residual_bound(eps, r.q, tol)


def test_selfadjoint(rng):
    for w in stencils():
        f = grid(rng.standard_normal(64))
        g = grid(rng.standard_normal(64))
        gap = verify_selfadjoint(w, 0.7, f, g)
        assert gap <= 1e-10 * np.linalg.norm(f.values) * np.linalg.norm(g.values)
        assert verify_selfadjoint(w, 0.7, f, f) == 0.0


def test_positive_rhs_gives_nonnegative_solution(rng):
    tol = 1e-10
    for w in stencils():
        g = grid(np.abs(rng.standard_normal(64)))
        eps = 0.3
        assert solve_resolvent(g, w, eps, tol).v.values.min() >= -tol / eps


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(range(4)), arrays(float, 64, elements=st.floats(-5, 5)),
       arrays(float, 64, elements=st.floats(0, 5)), st.floats(0.05, 20))
def test_comparison_and_scaling(si, g, bump, eps):
    w = stencils()[si]
    tol = 1e-10
    lo = solve_resolvent(grid(g), w, eps, tol).v.values
    hi = solve_resolvent(grid(g + bump), w, eps, tol).v.values
    assert np.all(lo <= hi + 2 * tol / eps)
    a = solve_resolvent(grid(-2.5 * g), w, eps, 1e-13).v.values
    b = -2.5 * solve_resolvent(grid(g), w, eps, 1e-13).v.values
    # each solve is within tol of the exact solution, so the gap is at most (1 + 2.5) tol
    assert np.abs(a - b).max() <= 1e-12 * max(np.abs(b).max(), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(range(4)), arrays(float, 64, elements=st.floats(-5, 5)),
       arrays(float, 64, elements=st.floats(-5, 5)), st.floats(0.05, 20))
def test_contraction(si, x, y, eps):
    w = stencils()[si]
    T = ContractionMap(w, eps, grid(np.zeros(64)))
    assert np.abs(T(x) - T(y)).max() <= T.q * np.abs(x - y).max() * (1 + 1e-12) + 1e-300
