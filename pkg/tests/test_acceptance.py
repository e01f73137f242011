"""Acceptance checks, one test per criterion, with the stated tolerances.

Two of them are expected to fail because their targets are not attainable
(see the decisions ledger): the theta = 1/2 slope window of criterion 4 and
the second-moment target of criterion 8.
"""
import math
import time
import warnings

import numpy as np
import pytest

from conftest import digital_b_closed_form
from levyapprox.chaos import (ChaosSeq, KernelSeq, besov_flip_theta, d12_norm_sq, gaussian_chaos,
                              gkw_project, poisson_kernels, symmetrize)
from levyapprox.error_functionals import (H_sq, T_eval, a_s_sim_bracket, a_x_opt_exact,
                                          curvature_flip_theta, dyadic, gap_bound, limit_constant,
                                          lower_bound_probe, rate_sweep)
from levyapprox.estimates import mean_and_se
from levyapprox.exceptions import InconclusiveWarning, TruncationWarning
from levyapprox.levy_model import Atoms, LevyModel, psi_smallball, sample_increments
from levyapprox.montecarlo import opt_error_mc_regression, sim_error_mc, simulate_S
from levyapprox.nets import TimeNet, equidistant, refine_union, theta_net
from levyapprox.payoffs import Digital, Polynomial
from scipy import stats

GAUSS = LevyModel(1.0)
ATOM = LevyModel(0.0, Atoms((1.0,), (1.0,)))


def test_criterion_01_exact_rate_identity():
    c = ChaosSeq.from_scaled([0.0, 1.0], 1.0)   # b = (0, 0, 2)
    assert np.allclose(c.chaos_norms(), [0.0, 0.0, 2.0])
    start = time.perf_counter()
    vals = [a_x_opt_exact(c, GAUSS, equidistant(N)) for N in range(1, 1025)]
    elapsed = time.perf_counter() - start
    ref = np.sqrt(2.0 / np.arange(1, 1025))
    assert np.max(np.abs(np.array(vals) / ref - 1.0)) <= 1e-12
    assert elapsed < 1.0


def test_criterion_02_mc_agreement():
    c = gaussian_chaos(Polynomial((-1.0, 0.0, 1.0)), 1.0)
    start = time.perf_counter()
    est = sim_error_mc(c, GAUSS, equidistant(2), "X", 200_000, seed=2024)
    elapsed = time.perf_counter() - start
    assert abs(est.value - 1.0) <= 3 * est.std_error
    assert elapsed < 30.0


def test_criterion_03_one_step_identity():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        c = ChaosSeq.from_h(rng.normal(size=20), float(rng.uniform(0.1, 3.0)))
        b = c.chaos_norms()
        lhs = a_x_opt_exact(c, None, TimeNet([0.0, 1.0])) ** 2
        worst = max(worst, abs(lhs / b[2:].sum() - 1.0))
    assert time.perf_counter() - start < 1.0
    assert worst <= 1e-10


def test_criterion_04_digital_rates():
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        c = gaussian_chaos(Digital(0.0), 1.0)
    b = c.chaos_norms()
    ref = digital_b_closed_form(b.size - 1)
    assert np.max(np.abs(b - ref)) <= 1e-12
    slope_eq = rate_sweep(c, GAUSS, 1.0, dyadic(4, 1024)).slope
    slope_half = rate_sweep(c, GAUSS, 0.5, dyadic(4, 1024)).slope
    assert time.perf_counter() - start < 10.0
    assert -0.27 <= slope_eq <= -0.23
    # not attainable: the exact slope on this range is about -0.38 (arcsin
    # closed form), because theta = 1/2 is the critical exponent itself
    assert -0.52 <= slope_half <= -0.48, f"theta=1/2 slope {slope_half:.4f}"


def test_criterion_05_limit_constant(digital):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InconclusiveWarning)
        lim = float(limit_constant(digital, GAUSS, 0.5))
    N = 1024
    scaled = N * a_x_opt_exact(digital, GAUSS, theta_net(N, 0.5)) ** 2
    assert abs(scaled - lim) / lim <= 0.02


def test_criterion_06_curvature_identity():
    rng = np.random.default_rng(6)
    for _ in range(50):
        c = ChaosSeq.from_h(rng.normal(size=int(rng.integers(1, 15))), float(rng.uniform(0.1, 3)))
        t = rng.uniform(0.0, 1.0, 20)
        hx = H_sq(c, None, t, "X")
        tpp = T_eval(c.chaos_norms(), t, 2)
        assert np.allclose(hx, tpp, rtol=1e-10, atol=0.0)


def test_criterion_07_refinement_monotonicity():
    rng = np.random.default_rng(7)
    for _ in range(100):
        c = ChaosSeq.from_h(rng.normal(size=int(rng.integers(2, 12))), float(rng.uniform(0.1, 3)))
        inner = np.sort(rng.uniform(0.0, 1.0, int(rng.integers(0, 10))))
        tau = TimeNet(np.concatenate([[0.0], inner, [1.0]]))
        refined = refine_union(tau, int(rng.integers(1, 50)))
        assert a_x_opt_exact(c, None, refined) <= a_x_opt_exact(c, None, tau) * (1 + 1e-12)


def test_criterion_08_exponential_moments():
    m = LevyModel(0.0, Atoms((0.5,), (2.0,)))
    S1 = simulate_S(sample_increments(m, equidistant(4), 100_000, seed=8), m)[:, -1]
    assert np.all(S1 > 0.0)
    mean, se = mean_and_se(S1)
    assert abs(mean - 1.0) < 3 * se
    mean2, se2 = mean_and_se(S1 ** 2)
    # the second moment is exp(mu(R)) = exp(0.5) for this model, not e
    assert abs(mean2 - math.e) < 3 * se2, f"E S_1^2 = {mean2:.4f} +- {se2:.4f}"


def _atom_quadratic():
    from levyapprox.chaos import poisson_chaos
    return poisson_chaos(Polynomial((-1.0, 0.0, 1.0)), (1.0, 1.0))


def test_criterion_09_bracket_containment():
    c = _atom_quadratic()
    tau = equidistant(4)
    est = sim_error_mc(c, ATOM, tau, "S", 100_000, seed=9)
    assert a_s_sim_bracket(c, ATOM, tau).contains(est.value, 3 * est.std_error)


def test_criterion_10_gap_bound():
    c = _atom_quadratic()
    tau = equidistant(4)
    sim = sim_error_mc(c, ATOM, tau, "S", 100_000, seed=10)
    reg = opt_error_mc_regression(c, ATOM, tau, "S", 100_000, 5, seed=10)
    se = math.hypot(sim.std_error, reg.std_error)
    assert reg.value >= sim.value - gap_bound(c, ATOM, tau) - 4 * se


def test_criterion_11_lower_bound_probe(digital):
    Ns = range(2, 257)
    quad = lower_bound_probe(ChaosSeq.from_h([0.0, 1.0], 1.0), GAUSS, Ns)
    assert np.all(np.abs(np.array(quad.values) - math.sqrt(2.0)) <= 1e-3)
    assert lower_bound_probe(digital, GAUSS, Ns).minimum >= 0.1


def test_criterion_12_projection_suite():
    k = poisson_kernels(Digital(0.5), (1.0, 1.0))
    c = gkw_project(k, ATOM)
    # centred coefficients pass through unchanged, up to the rounding of the
    # rescaling h_{n-1} = g_n / sqrt(n mu) and back (at most 2 ulp)
    got, want = c.chaos_norms()[1:], k.chaos_norms()[1:]
    assert np.array_equal(got == 0.0, want == 0.0)
    assert np.all(np.abs(got - want) <= 2 * np.spacing(np.abs(want)))
    assert gkw_project(c, ATOM) is c
    rng = np.random.default_rng(12)
    ok = 0
    for _ in range(100):
        w = tuple(rng.uniform(0.2, 3.0, 2))
        x = tuple(rng.uniform(-1.0, 1.0, 2))
        g = [float(rng.normal())] + [symmetrize(rng.normal(size=(2,) * n))
                                     / math.sqrt(math.factorial(n)) for n in range(1, 7)]
        kern = KernelSeq("tensor", math.fsum(w), tuple(g), x, w)
        ok += float(d12_norm_sq(gkw_project(kern))) <= kern.d12_norm_sq() * (1 + 1e-12)
    assert ok == 100


def test_criterion_13_small_ball():
    grid = np.linspace(-1.0, 1.0, 41)
    est = psi_smallball(GAUSS, 0.1, 100_000, grid, seed=13)
    assert abs(est.value - 0.0797) <= 3 * est.std_error
    assert abs(2 * stats.norm.cdf(0.1) - 1 - 0.0797) < 5e-5
    for d in (0.05, 0.1, 0.2):
        assert psi_smallball(GAUSS, d, 100_000, grid, seed=13).value / d <= 0.9


def test_criterion_14_classifier_consistency(digital):
    cf = curvature_flip_theta(digital)
    bf = besov_flip_theta(digital)
    assert abs(cf - bf) <= 0.05
    assert abs(cf - 0.5) <= 0.05 and abs(bf - 0.5) <= 0.05
