import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_pme.errors import DomainError
from nonlocal_pme.nonlinearity import (Linear, MonotoneTable, Power, Stefan, eval as phi_eval,
                                       lipschitz_on, mollifier, mollify)

VARIANTS = {
    "power2": Power(2.0), "power0.3": Power(0.3), "power1.5": Power(1.5),
    "stefan": Stefan(1.0, 2.0, 0.5), "linear": Linear(0.7),
    "table": MonotoneTable(np.array([-2.0, -1.0, 0.0, 1.0, 3.0]), np.array([-1.0, -1.0, 0.0, 4.0, 4.5])),
}
MOLLIFIED = {"mollified power0.5": mollify(Power(0.5), 0.05, (-2.0, 2.0)),
             "mollified stefan": mollify(Stefan(1.0, 1.0, 1.0), 0.1, (-2.0, 2.0))}
ALL = {**VARIANTS, **MOLLIFIED}


def test_eval_examples():
    assert phi_eval(Power(2), -3.0) == -9.0
    assert np.all(Stefan(1, 1, 1)(np.linspace(0, 1, 11)) == 0)
    for phi in ALL.values():
        assert float(phi(np.array([0.0]))[0]) == 0.0


def test_lipschitz_examples():
    assert lipschitz_on(Power(2), 1.0) == 2.0
    assert math.isinf(lipschitz_on(Power(0.5), 1.0))
    assert lipschitz_on(Stefan(2, 3, 1), 10.0) == 3.0
    assert lipschitz_on(Linear(0.25), 5.0) == 0.25
    with pytest.raises(DomainError):
        lipschitz_on(Linear(1), 0.0)


@pytest.mark.parametrize("name", sorted(ALL))
def test_monotone_on_random_pairs(name, rng):
    phi = ALL[name]
    r = np.sort(rng.uniform(-2, 2, size=(10_000, 2)), axis=1)
    assert np.all(phi(r[:, 0]) <= phi(r[:, 1]))


@pytest.mark.parametrize("name", sorted(ALL))
def test_lipschitz_bound_is_valid(name, rng):
    phi = ALL[name]
    M = 1.8
    L = lipschitz_on(phi, M)
    if math.isinf(L):
        pytest.skip("unbounded slope")
    r = rng.uniform(-M, M, size=(10_000, 2))
    gap = np.abs(phi(r[:, 0]) - phi(r[:, 1]))
    assert np.all(gap <= L * np.abs(r[:, 0] - r[:, 1]) * (1 + 1e-12) + 1e-15)


def test_table_rejects_bad_input():
    with pytest.raises(DomainError, match="decrease"):
        MonotoneTable(np.array([-1.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]))
    with pytest.raises(DomainError):
        MonotoneTable(np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 2.0]))
    with pytest.raises(DomainError):
        MonotoneTable(np.array([0.0, -1.0]), np.array([0.0, 1.0]))


def test_constructors_validate():
    with pytest.raises(DomainError):
        Power(0.0)
    with pytest.raises(DomainError):
        Stefan(1, 0, 1)
    with pytest.raises(DomainError):
        Linear(-1)


def test_mollifier_is_even_probability_density():
    from scipy import integrate
    total, _ = integrate.quad(lambda y: mollifier(np.array([y]))[0], -1, 1)
    assert total == pytest.approx(1.0, abs=1e-12)
    y = np.linspace(-1.2, 1.2, 101)
    assert np.array_equal(mollifier(y), mollifier(-y))
    assert np.all(mollifier(np.array([-1.0, 1.0, 1.5])) == 0)


def test_mollify_keeps_linear_maps():
    phi = mollify(Linear(1.3), 0.1, (-1, 1))
    x = np.linspace(-1, 1, 333)
    assert np.allclose(phi(x), 1.3 * x, rtol=0, atol=1e-13)


def test_mollified_fast_diffusion_is_lipschitz():
    assert math.isfinite(lipschitz_on(mollify(Power(0.5), 1e-2, (-1, 1)), 1.0))


def test_mollify_converges_uniformly():
    x = np.linspace(-1, 1, 4001)
    errs = [np.abs(mollify(Power(0.5), eta, (-1, 1))(x) - Power(0.5)(x)).max() for eta in (0.1, 0.05, 0.025)]
    assert errs[0] > errs[1] > errs[2]
    # uniform error is controlled by the modulus of continuity √η of √r
    assert all(e <= math.sqrt(eta) for e, eta in zip(errs, (0.1, 0.05, 0.025)))


def test_mollify_grid_step():
    phi = mollify(Stefan(1, 1, 0.5), 0.08, (-1, 1))
    assert np.allclose(np.diff(phi.breakpoints), 0.01)
    assert phi.eta == 0.08
    with pytest.raises(DomainError):
        mollify(Linear(1), 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(-5, 5), st.floats(-5, 5))
def test_power_monotone_property(m, a, b):
    lo, hi = min(a, b), max(a, b)
    phi = Power(m)
    assert phi(np.array([lo]))[0] <= phi(np.array([hi]))[0]
