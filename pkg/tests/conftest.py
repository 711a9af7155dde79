"""Shared fixtures and independent reference solutions.

The flat-space reference kernel is computed two ways that share no code with
the package under test: a closed form built from erf, and direct quadrature
of the spherically reduced Gauss kernel.  Tests cross-check the two routes
against each other before using either against the solver, so a bug in the
reference cannot silently excuse a bug in the code.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erf

from heatlab import SolveControls, euclidean, power_exp_weight, warped_cone


def ball_heat_closed_form(r, t, r0=1.0):
    """Heat evolution of a unit-ball indicator in flat 3-space, closed form.

    Exact up to erf/exp rounding.  The r -> 0 limit is taken analytically
    because the generic expression loses digits to cancellation at the pole.
    """
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    s = 2.0 * math.sqrt(t)
    if r < 1e-10:
        return erf(r0 / s) - (r0 / math.sqrt(math.pi * t)) * math.exp(-r0 ** 2 / (4 * t))
    a = 0.5 * (erf((r0 + r) / s) + erf((r0 - r) / s))
    b = (math.sqrt(t / math.pi) / r) * (
        math.exp(-(r - r0) ** 2 / (4 * t)) - math.exp(-(r + r0) ** 2 / (4 * t)))
    return a - b


def ball_heat_quadrature(r, t, r0=1.0):
    """Same kernel by adaptive quadrature of the reduced Gaussian.

    The angular integral of the 3-d Gauss kernel collapses to a difference of
    two exponentials; that form is used directly since the sinh expression
    overflows for large r*s/t.
    """
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    norm = (4.0 * math.pi * t) ** -1.5

    if r < 1e-10:
        def integrand(s):
            return norm * 4.0 * math.pi * s * s * math.exp(-s * s / (4 * t))
    else:
        def integrand(s):
            gap = math.exp(-(r - s) ** 2 / (4 * t)) - math.exp(-(r + s) ** 2 / (4 * t))
            return norm * 4.0 * math.pi * s * (t / r) * gap

    val, err = quad(integrand, 0.0, r0, epsabs=1e-13, epsrel=1e-13, limit=400)
    if err > 1e-9:
        raise ArithmeticError(f"reference quadrature error {err:.2e} too large")
    return val


def ball_heat_tv(t, r0=1.0):
    """Weighted variation of the evolved ball indicator, by parts.

    The radial profile is nonincreasing, so integrating |u'| against 4 pi r^2
    equals 8 pi * integral of r * u(r).  Quadrature is split at the jump
    radius where the profile has a kink.
    """
    cut = r0 + 14.0 * math.sqrt(t)
    inner, e1 = quad(lambda r: r * ball_heat_closed_form(r, t, r0), 0.0, r0,
                     epsabs=1e-13, epsrel=1e-13, limit=400)
    outer, e2 = quad(lambda r: r * ball_heat_closed_form(r, t, r0), r0, cut,
                     epsabs=1e-13, epsrel=1e-13, limit=400)
    if e1 + e2 > 1e-9:
        raise ArithmeticError(f"reference quadrature error {e1 + e2:.2e} too large")
    return 8.0 * math.pi * (inner + outer)


@pytest.fixture(scope="session")
def euclid3():
    return euclidean(3)


@pytest.fixture(scope="session")
def pe4():
    """Superexponential weight exp(+r^4); heat flow loses mass through infinity."""
    return power_exp_weight(4, 1, 3)


@pytest.fixture(scope="session")
def gauss():
    """Gaussian weight exp(-r^2); a well-behaved control model."""
    return power_exp_weight(2, -1, 3)


@pytest.fixture(scope="session")
def cone3():
    return warped_cone(3)


@pytest.fixture()
def fast_controls():
    """Small grids and loose step tolerance for structural unit tests."""
    return SolveControls(n_cells=192, step_tol=1e-5, exhaustion=(3.0,))
