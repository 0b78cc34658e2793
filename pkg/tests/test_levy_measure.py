import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from nonlocal_pme.errors import DomainError, NotLevyMeasureError, SingularCellError
from nonlocal_pme.levy_measure import (DiracSum, FractionalLaplacian, RadialDensity, Truncated,
                                       cell_mass, fractional_constant, levy_functional,
                                       local_limit_normalization, symbol, tempered_stable)
from nonlocal_pme.discrete_operator import assemble_local, assemble_nonlocal


def gamma_closed_form(N, s):
    # standard normalization of -(-Δ)^{s/2}, independent of the quadrature
    return s * 2 ** (s - 1) * gamma((N + s) / 2) / (math.pi ** (N / 2) * gamma(1 - s / 2))


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("s", [0.3, 0.5, 1.0, 1.5, 1.9])
def test_fractional_constant_matches_gamma_formula(N, s):
    assert fractional_constant(N, s) == pytest.approx(gamma_closed_form(N, s), rel=1e-8)


def test_fractional_constant_reference_values():
    assert abs(fractional_constant(1, 1.0) - 1 / math.pi) < 1e-6
    assert abs(fractional_constant(2, 1.0) - 1 / (2 * math.pi)) < 1e-6


def test_fractional_constant_vanishes_as_order_tends_to_two():
    vals = [fractional_constant(1, s) for s in (1.9, 1.99, 1.999)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 2e-3


@pytest.mark.parametrize("s", [0.0, 2.0, -1.0, 2.5])
def test_fractional_constant_rejects_bad_order(s):
    with pytest.raises(DomainError):
        fractional_constant(1, s)


def test_local_limit_normalization_increases_to_one():
    vals = [local_limit_normalization(1, s) for s in (1.9, 1.95, 1.99)]
    assert vals[0] < vals[1] < vals[2]
    assert abs(vals[2] - 1) < 0.05


def test_cell_mass_closed_form():
    mu = FractionalLaplacian(1, 0.5)
    exact = mu.constant * 2 * (1 / math.sqrt(0.25) - 1 / math.sqrt(0.75))
    assert cell_mass(mu, [0.25], [0.75]) == pytest.approx(exact, rel=1e-10)


def test_cell_mass_2d_against_polar_oracle():
    # annular sector |z| in [1, 2], all angles: mass = c * 2π ∫ r^{-1-s} dr
    mu = FractionalLaplacian(2, 1.0)
    # box ring [-2,2]^2 minus [-1,1]^2 split in four cells, compared with direct polar sum of the box
    lo = np.array([[1.0, -2.0], [-2.0, -2.0], [-1.0, 1.0], [-1.0, -2.0]])
    hi = np.array([[2.0, 2.0], [-1.0, 2.0], [1.0, 2.0], [1.0, -1.0]])
    total = mu.cell_masses(lo, hi).sum()
    # same quantity via the tail function: μ(|z|>1) - μ(|z|>2) restricted to the box equals
    # the box-ring mass computed by a polar scipy integral
    from scipy import integrate

    def box_ring(theta):
        c, s = abs(math.cos(theta)), abs(math.sin(theta))
        r_in, r_out = 1 / max(c, s), 2 / max(c, s)
        return mu.constant * (r_in ** -1 - r_out ** -1)

    ref, _ = integrate.quad(box_ring, 0, 2 * math.pi, limit=200, points=[math.pi / 4 * k for k in range(1, 8)])
    assert total == pytest.approx(ref, rel=1e-9)


def test_dirac_cell_membership():
    mu = DiracSum([((2 * math.pi,), 1.0), ((-2 * math.pi,), 1.0)])
    assert cell_mass(mu, [5.5], [6.5]) == 1.0
    assert cell_mass(mu, [-6.5], [-5.5]) == 1.0
    assert levy_functional(mu) == 2.0


def test_dirac_rejects_asymmetric_atoms():
    with pytest.raises(DomainError):
        DiracSum([((1.0,), 1.0), ((-1.0,), 2.0)])


def test_singular_cell_is_rejected():
    with pytest.raises(SingularCellError, match="singular cell"):
        cell_mass(FractionalLaplacian(1, 1.0), [-0.5], [0.5])


def test_radial_density_too_singular_is_not_levy():
    with pytest.raises(NotLevyMeasureError):
        RadialDensity(1, lambda r: r ** -3.5)
    with pytest.raises(NotLevyMeasureError):
        RadialDensity(1, lambda r: np.ones_like(r), integrable_tail=False)


def test_truncation_lowers_levy_functional():
    mu = FractionalLaplacian(1, 1.2)
    assert levy_functional(Truncated(mu, 0.5)) <= levy_functional(mu)
    assert levy_functional(Truncated(mu, 2.0)) == pytest.approx(mu.mass_outside(2.0), rel=1e-9)


def test_tempered_measure_is_lighter():
    a = cell_mass(tempered_stable(1, 1.0, 2.0), [1.0], [2.0])
    b = cell_mass(FractionalLaplacian(1, 1.0), [1.0], [2.0])
    assert 0 < a < b


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.01, 1.0), st.sampled_from([0.5, 1.0, 1.7]))
def test_cell_mass_symmetry(lo, width, s):
    mu = FractionalLaplacian(1, s)
    a = cell_mass(mu, [lo], [lo + width])
    b = cell_mass(mu, [-lo - width], [-lo])
    assert a == pytest.approx(b, rel=1e-12)


def test_symbol_examples():
    h = 0.1
    w = assemble_local(np.eye(1), h)
    for xi in (0.3, 2.0, 17.0):
        assert symbol(w, [xi]) == pytest.approx((2 - 2 * math.cos(h * xi)) / h ** 2, rel=1e-12)
    assert symbol(w, [0.0]) == 0.0
    dirac = assemble_nonlocal(DiracSum([((2 * math.pi,), 1.0), ((-2 * math.pi,), 1.0)]), h=2 * math.pi / 7)
    assert abs(symbol(dirac, [1.0])) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=25), st.sampled_from([0.5, 1.0, 1.5]))
def test_symbol_nonnegative(xis, s):
    w = assemble_nonlocal(FractionalLaplacian(1, s), 0.25, r_cut=3.0)
    assert np.all(symbol(w, np.array(xis)[:, None]) >= -1e-12)
