"""Convergence rates of the digital payoff 1{W_1 > 0} on theta-nets.

The curvature of this payoff has a closed form, T(t) = arcsin(t) / (2 pi),
so the optimal error on any net is available without chaos truncation.
Printed are the truncated chaos result, the tail-extrapolated result and
the closed form, along with fitted log-log slopes.
"""
import math
import warnings

import numpy as np

from levyapprox.chaos import gaussian_chaos
from levyapprox.error_functionals import a_x_opt_exact, dyadic, fit_slope
from levyapprox.exceptions import TruncationWarning
from levyapprox.levy_model import LevyModel
from levyapprox.nets import theta_net
from levyapprox.payoffs import Digital


def arcsin_error(tau):
    t = np.asarray(tau.points)
    T = np.arcsin(t) / (2 * math.pi)
    with np.errstate(divide="ignore"):
        dT = 1.0 / (2 * math.pi * np.sqrt(1.0 - t[:-1] ** 2))
    return math.sqrt(np.sum(T[1:] - T[:-1] - dT * np.diff(t)))


model = LevyModel(1.0)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", TruncationWarning)
    c = gaussian_chaos(Digital(0.0), 1.0)

Ns = dyadic(4, 1024)
for theta in (1.0, 0.5):
    trunc, tail, exact = [], [], []
    print(f"\ntheta = {theta}")
    print(f"{'N':>5} {'truncated':>11} {'with tail':>11} {'closed form':>11}")
    for N in Ns:
        tau = theta_net(N, theta)
        trunc.append(a_x_opt_exact(c, model, tau))
        tail.append(a_x_opt_exact(c, model, tau, extrapolate_tail=True))
        exact.append(arcsin_error(tau))
        print(f"{N:5d} {trunc[-1]:11.6f} {tail[-1]:11.6f} {exact[-1]:11.6f}")
    print("slopes:", ", ".join(f"{name} {fit_slope(Ns, v):.4f}"
                               for name, v in (("truncated", trunc), ("tail", tail),
                                               ("closed form", exact))))
