"""Upper bounds for difference quotients of mollified digitals and the closure of phi.

The quantities bound ``int E |(f(X_1 + x) - f(X_1)) / x|^2 mu(dx)``, which
controls the D_{1,2} norm of ``f_{K,eps}(X_1)``, in terms of moments of nu and
the small-ball function ``psi``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .exceptions import MomentInfinite, NonDifferentiable, UnsupportedModel
from .levy_model import Atoms, NoJumps, TemperedStable, nu_moment, psi_smallball


@dataclass(frozen=True)
class BoundReport:
    """Numeric right-hand sides; inapplicable bounds are ``None`` with a reason."""

    K: float
    eps: float
    psi_cap: object
    small_ball: object = None        # 4 psi(2 eps)/eps^2 int_{|x|<=eps} x^2 nu + int_{|x|>eps} psi(|x|) nu
    total_mass: object = None        # nu(R)
    linear_small_ball: object = None  # 9 c min(eps^-1 int x^2 nu, int |x| nu)
    projected_digital: object = None  # (c/2) (int |x|^{3/2} nu)^2
    reasons: dict = field(default_factory=dict)

    def require(self, name):
        val = getattr(self, name)
        if val is None:
            raise MomentInfinite(self.reasons.get(name, f"{name} is inapplicable"))
        return val

    def to_dict(self):
        return {"K": self.K, "eps": self.eps, "psi_cap": self.psi_cap,
                "small_ball": self.small_ball, "total_mass": self.total_mass,
                "linear_small_ball": self.linear_small_ball,
                "projected_digital": self.projected_digital, "reasons": dict(self.reasons)}


def fit_psi_cap(model, deltas=(0.05, 0.1, 0.2), paths=100_000, seed=0, lambda_grid=None):
    """Empirical ``c = max_delta psi(delta) / delta`` over the given radii."""
    if lambda_grid is None:
        lambda_grid = np.linspace(-3.0, 3.0, 61)
    return max(psi_smallball(model, d, paths, lambda_grid, seed).value / d for d in deltas)


def _split_moment(model, p, eps, inner):
    r"""``\int_{|x|<=eps} |x|^p nu`` (inner) or ``\int_{|x|>eps}`` (outer)."""
    j = model.jumps
    if isinstance(j, NoJumps):
        return 0.0
    if isinstance(j, Atoms):
        sel = [(x, r) for x, r in zip(j.x, j.rate) if (abs(x) <= eps) == inner]
        return math.fsum(r * abs(x) ** p for x, r in sel)
    if inner:
        if p - j.alpha <= 0:
            return math.inf
        return 2.0 * j.half_moment(p, 0.0, eps)
    if p - j.alpha - j.m >= 0:
        return math.inf
    return 2.0 * j.half_moment(p, eps, math.inf)


def _outer_psi_integral(model, eps, psi):
    r"""``\int_{|x|>eps} psi(|x|) nu(dx)`` with a nondecreasing ``psi``."""
    j = model.jumps
    if isinstance(j, NoJumps):
        return 0.0
    if isinstance(j, Atoms):
        return math.fsum(r * psi(abs(x)) for x, r in zip(j.x, j.rate) if abs(x) > eps)
    # upper sum over a geometric partition of (eps, inf); psi <= 1 beyond the last cell
    edges = eps * 2.0 ** np.arange(0, 40)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += psi(b) * 2.0 * j.half_moment(0.0, a, b)
    total += 2.0 * j.half_moment(0.0, edges[-1], math.inf)
    return total


def smoothness_bounds(model, K, eps, psi_cap=None, paths=100_000, seed=0):
    """Evaluate the difference-quotient bounds for ``f_{K,eps}`` and the digital at ``K``.

    Parameters
    ----------
    model : LevyModel
    K, eps : float
        Strike and mollification width.
    psi_cap : float, optional
        A constant ``c`` with ``psi(delta) <= c delta``.  Without it ``psi`` is
        estimated by Monte Carlo and the bounds needing a cap are skipped.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    reasons = {}
    if psi_cap is not None:
        psi = lambda d: min(1.0, psi_cap * d)
    else:
        grid = np.linspace(-4.0, 4.0, 81)
        cache = {}

        def psi(d):
            if d not in cache:
                cache[d] = psi_smallball(model, d, paths, grid, seed).value
            return cache[d]

    x2_in = _split_moment(model, 2.0, eps, True)
    outer = _outer_psi_integral(model, eps, psi)
    small_ball = 4.0 * psi(2.0 * eps) / eps ** 2 * x2_in + outer

    nu_R = nu_moment(model, 0.0)
    total_mass = nu_R if math.isfinite(nu_R) else None
    if total_mass is None:
        reasons["total_mass"] = "nu(R) is infinite"

    linear = None
    if psi_cap is None:
        reasons["linear_small_ball"] = "needs a linear small-ball constant"
    else:
        m1 = nu_moment(model, 1.0)
        m2 = nu_moment(model, 2.0)
        linear = 9.0 * psi_cap * min(m2 / eps, m1)

    projected = None
    m32 = nu_moment(model, 1.5)
    if model.sigma != 0.0:
        reasons["projected_digital"] = "needs sigma = 0"
    elif not math.isfinite(m32):
        reasons["projected_digital"] = "int |x|^{3/2} nu(dx) is infinite"
    elif psi_cap is None:
        reasons["projected_digital"] = "needs a linear small-ball constant"
    else:
        projected = 0.5 * psi_cap * m32 ** 2
    return BoundReport(float(K), float(eps), psi_cap, small_ball, total_mass, linear,
                       projected, reasons)


def phi1_difference_quotient(payoff, model, x1_sample):
    """Closure ``phi_1`` of the integrand martingale at ``X_1 = x1_sample``.

    ``sum_i (f(x + x_i) - f(x)) / x_i * x_i^2 rate_i / mu(R)``, plus
    ``sigma^2 f'(x) / mu(R)`` when there is a Brownian part.
    """
    j = model.jumps
    if isinstance(j, TemperedStable):
        raise UnsupportedModel("difference quotients need atomic jumps")
    x = np.asarray(x1_sample, dtype=float)
    mu = model.mu_total
    out = np.zeros_like(x)
    if isinstance(j, Atoms):
        for xi, r in zip(j.x, j.rate):
            out = out + (payoff(x + xi) - payoff(x)) / xi * (xi * xi * r) / mu
    if model.sigma > 0.0:
        if not hasattr(payoff, "derivative"):
            raise NonDifferentiable("payoff has no derivative")
        out = out + model.sigma ** 2 * payoff.derivative(x) / mu
    return float(out) if out.ndim == 0 else out
