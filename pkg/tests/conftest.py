import math
import warnings

import numpy as np
import pytest

from levyapprox.chaos import ChaosSeq, gaussian_chaos, poisson_chaos
from levyapprox.exceptions import TruncationWarning
from levyapprox.levy_model import Atoms, LevyModel
from levyapprox.payoffs import Digital, Polynomial


@pytest.fixture(scope="session")
def gauss():
    return LevyModel(1.0)


@pytest.fixture(scope="session")
def atom11():
    return LevyModel(0.0, Atoms((1.0,), (1.0,)))


@pytest.fixture(scope="session")
def quadratic(gauss):
    """F = W_1^2 - 1, chaos norms (0, 0, 2)."""
    return gaussian_chaos(Polynomial((-1.0, 0.0, 1.0)), 1.0)


@pytest.fixture(scope="session")
def h01():
    """h = (0, 1) with mu(R) = 1: phi_t = 2 X_t and b = (0, 0, 2)."""
    return ChaosSeq.from_h([0.0, 1.0], 1.0)


@pytest.fixture(scope="session")
def digital():
    """Chaos of 1_{(0, inf)}(W_1) at the 4096 cap."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return gaussian_chaos(Digital(0.0), 1.0)


def digital_b_closed_form(n_max):
    """b_n = n! (phi(0) He_{n-1}(0) / n!)^2, evaluated in log space."""
    b = np.zeros(n_max + 1)
    for n in range(1, n_max + 1, 2):
        m = (n - 1) // 2
        # He_{2m}(0) = (-1)^m (2m)! / (2^m m!)
        log_he = math.lgamma(2 * m + 1) - m * math.log(2.0) - math.lgamma(m + 1)
        log_c = -0.5 * math.log(2.0 * math.pi) + log_he - math.lgamma(n + 1)
        b[n] = math.exp(math.lgamma(n + 1) + 2.0 * log_c)
    return b


def arcsin_curvature_sq(points):
    """Oracle A^2 for the digital: T(t) = arcsin(t) / (2 pi) in closed form."""
    p = np.asarray(points, dtype=float)
    s, t = p[:-1], p[1:]
    T = lambda x: np.arcsin(x) / (2.0 * math.pi)
    dT = lambda x: 1.0 / (2.0 * math.pi * np.sqrt(1.0 - x * x))
    return float(np.sum(T(t) - T(s) - dT(s) * (t - s)))


@pytest.fixture(scope="session")
def atom_quadratic(atom11):
    return poisson_chaos(Polynomial((-1.0, 0.0, 1.0)), (1.0, 1.0))
