"""Exact versus simulated Riemann error for F = W_1^2 - 1 under Brownian motion.

For this payoff the exact error on an equidistant net is sqrt(2/N). The
script compares that value with the chaos-based exact functional and with a
Monte Carlo estimate on the same nets.
"""
import math

from levyapprox.chaos import gaussian_chaos
from levyapprox.error_functionals import a_x_opt_exact
from levyapprox.levy_model import LevyModel
from levyapprox.montecarlo import sim_error_mc
from levyapprox.nets import equidistant
from levyapprox.payoffs import Polynomial

model = LevyModel(1.0)
c = gaussian_chaos(Polynomial((-1.0, 0.0, 1.0)), 1.0)

print(f"{'N':>4} {'sqrt(2/N)':>10} {'exact':>10} {'MC':>10} {'se':>8}")
for N in (1, 2, 4, 8, 16):
    tau = equidistant(N)
    exact = a_x_opt_exact(c, model, tau)
    mc = sim_error_mc(c, model, tau, "X", paths=50_000, seed=N)
    print(f"{N:4d} {math.sqrt(2 / N):10.6f} {exact:10.6f} {mc.value:10.6f} {mc.std_error:8.5f}")
