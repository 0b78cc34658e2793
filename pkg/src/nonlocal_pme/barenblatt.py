"""Self-similar source solution of the one-dimensional porous medium equation.

``U(x, t) = t^{-β} (C - k x² t^{-2β})_+^{1/(m-1)}`` solves ``U_t = (U^m)_xx``
with ``β = 1/(m+1)``, ``k = (m-1)β/(2m)`` and ``C`` chosen for unit mass.
"""

import math

import numpy as np
from scipy.special import beta as beta_fn

from .errors import DomainError


def exponents(m):
    if not m > 1:
        raise DomainError("Barenblatt profile needs m > 1")
    b = 1.0 / (m + 1)
    k = (m - 1) * b / (2 * m)
    return b, k


def unit_mass_constant(m):
    """``C`` with ``∫ U(x, t) dx = 1``.

    With ``p = 1/(m-1)``, ``∫ (C - k y²)_+^p dy = C^{p+1/2} k^{-1/2} B(1/2, p+1)``.
    """
    _, k = exponents(m)
    p = 1.0 / (m - 1)
    return (math.sqrt(k) / beta_fn(0.5, p + 1)) ** (1.0 / (p + 0.5))


def support_radius(m, t, mass=1.0):
    b, k = exponents(m)
    C = unit_mass_constant(m) * mass ** (2 * (m - 1) / (m + 1))
    return math.sqrt(C / k) * t ** b


def barenblatt(m, t, x, mass=1.0):
    """Exact value of the source solution with total ``mass`` at time ``t > 0``."""
    if not t > 0:
        raise DomainError("time must be positive")
    b, k = exponents(m)
    C = unit_mass_constant(m) * mass ** (2 * (m - 1) / (m + 1))
    x = np.asarray(x, dtype=float)
    core = np.maximum(C - k * x ** 2 * t ** (-2 * b), 0.0)
    return t ** (-b) * core ** (1.0 / (m - 1))
