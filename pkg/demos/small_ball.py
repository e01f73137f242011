"""Small-ball function psi(delta) of X_1 for a Gaussian and a tempered stable model.

For standard Brownian motion psi(delta) = 2 Phi(delta) - 1 at the centre, so
the estimate can be checked directly. The tempered stable case shows the
linear decay psi(delta) <= c delta that drives the digital smoothness bounds.
"""
import numpy as np
from scipy import stats

from levyapprox.levy_model import LevyModel, TemperedStable, psi_smallball

grid = np.linspace(-1.0, 1.0, 41)
models = {"gaussian": LevyModel(1.0),
          "tempered stable": LevyModel(0.0, TemperedStable(1.0, 0.8, 2.0, 0.1))}

for name, model in models.items():
    print(f"\n{name}")
    for delta in (0.05, 0.1, 0.2):
        est = psi_smallball(model, delta, 100_000, grid, seed=1)
        line = f"  delta={delta:.2f}  psi={est.value:.5f} +- {est.std_error:.5f}  psi/delta={est.value / delta:.3f}"
        if model.is_gaussian:
            line += f"  closed form {2 * stats.norm.cdf(delta) - 1:.5f}"
        print(line)
