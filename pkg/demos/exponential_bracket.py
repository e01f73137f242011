"""Error for the stochastic exponential S on a single-atom Poisson model.

Compares the Monte Carlo error of the simple Riemann scheme driven by S with
the two-sided bracket from the exact functional, and with the regression
estimate of the optimal scheme.
"""
import math
import warnings

from levyapprox.chaos import poisson_chaos
from levyapprox.error_functionals import a_s_sim_bracket, gap_bound
from levyapprox.exceptions import IllConditioned
from levyapprox.levy_model import Atoms, LevyModel
from levyapprox.montecarlo import opt_error_mc_regression, sim_error_mc
from levyapprox.nets import equidistant
from levyapprox.payoffs import Polynomial

# on a lattice the polynomial features are collinear; the minimum-norm fit is fine
warnings.simplefilter("ignore", IllConditioned)

model = LevyModel(0.0, Atoms((1.0,), (1.0,)))
c = poisson_chaos(Polynomial((-1.0, 0.0, 1.0)), (1.0, 1.0))

for N in (4, 8, 16):
    tau = equidistant(N)
    br = a_s_sim_bracket(c, model, tau)
    sim = sim_error_mc(c, model, tau, "S", paths=50_000, seed=N)
    reg = opt_error_mc_regression(c, model, tau, "S", paths=50_000, basis_size=5, seed=N)
    se = math.hypot(sim.std_error, reg.std_error)
    print(f"N={N}: bracket [{br.low:.5f}, {br.high:.5f}]  "
          f"sim {sim.value:.5f} +- {sim.std_error:.5f}  "
          f"in bracket: {br.contains(sim.value, 3 * sim.std_error)}")
    print(f"      regression {reg.value:.5f}  sim - gap {sim.value - gap_bound(c, model, tau):.5f}"
          f"  (combined se {se:.5f})")
