import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import arcsin_curvature_sq
from levyapprox.chaos import ChaosSeq
from levyapprox.error_functionals import (A_functional, H_sq, T_eval, a_s_sim_bracket,
                                          a_x_opt_exact, bracket_constant, curvature_flip_theta,
                                          dyadic, error_report, gap_bound, h_gap_bound,
                                          h_integral, limit_constant, lower_bound_probe,
                                          rate_sweep, smoothness_criteria)
from levyapprox.exceptions import (DegenerateF, InconclusiveWarning, MeshTooCoarse, ModelError,
                                   PositivityViolated)
from levyapprox.levy_model import Atoms, LevyModel
from levyapprox.nets import equidistant, theta_net

scalar_h = st.lists(st.floats(-2, 2), min_size=1, max_size=8)


class TestT:
    def test_quadratic(self):
        b = [0.0, 0.0, 2.0]
        assert T_eval(b, 0.5) == 0.5
        assert np.allclose(T_eval(b, np.linspace(0, 1, 7), 2), 4.0)

    def test_zero(self):
        assert T_eval([0.0, 0.0, 0.0], 0.3) == 0.0

    def test_second_derivative_at_zero(self):
        b = [0.1, 0.4, 0.7, 0.2]
        assert T_eval(b, 0.0, 2) == pytest.approx(1.4)


class TestA:
    @pytest.mark.parametrize("N", [1, 2, 3, 10, 100])
    def test_quadratic(self, N):
        assert A_functional([0.0, 0.0, 2.0], equidistant(N)) == pytest.approx(math.sqrt(2 / N),
                                                                            rel=1e-13)

    @given(st.lists(st.floats(0.0, 3.0), min_size=3, max_size=12))
    def test_one_step(self, b):
        assert A_functional(b, [0.0, 1.0]) ** 2 == pytest.approx(sum(b[2:]), rel=1e-12, abs=1e-300)

    def test_first_chaos(self):
        assert A_functional([0.0, 1.3], theta_net(7, 0.4)) == 0.0

    def test_digital_against_arcsin(self, digital):
        # the truncated series is exact for itself; the tail model restores the full value
        for theta in (1.0, 0.5):
            for N in (1, 4, 64, 1024):
                tau = theta_net(N, theta)
                exact = math.sqrt(arcsin_curvature_sq(tau.points))
                assert a_x_opt_exact(digital, None, tau, extrapolate_tail=True) == pytest.approx(
                    exact, rel=1e-3)
        assert a_x_opt_exact(digital, None, [0.0, 1.0]) == pytest.approx(
            math.sqrt(arcsin_curvature_sq([0.0, 1.0]) - digital.tail), rel=1e-6)

    def test_tail_option_noop_for_polynomials(self, quadratic):
        tau = theta_net(16, 0.5)
        assert a_x_opt_exact(quadratic, None, tau, True) == a_x_opt_exact(quadratic, None, tau)


class TestH:
    def test_h01(self, h01):
        for t in (0.0, 0.3, 0.9):
            assert H_sq(h01, None, t, "X") == pytest.approx(4.0)
            assert H_sq(h01, None, t, "S") == pytest.approx(4.0 + 4.0 * t)

    def test_exponential_has_zero_curvature(self):
        h = [1.0 / math.factorial(n + 1) for n in range(25)]
        c = ChaosSeq.from_h(h, 1.0)
        for t in (0.1, 0.5, 0.9):
            hx = H_sq(c, None, t, "X")
            assert hx > 1.0 and H_sq(c, None, t, "S") < 1e-20 * hx

    @settings(max_examples=50, deadline=None)
    @given(scalar_h, st.floats(0.2, 3.0))
    def test_hx_is_T_second_derivative(self, h, mu):
        c = ChaosSeq.from_h(h, mu)
        t = np.linspace(0.01, 0.99, 20)
        lhs = H_sq(c, None, t, "X")
        rhs = T_eval(c.chaos_norms(), t, 2)
        assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-300)

    def test_model_mismatch(self, h01):
        with pytest.raises(ModelError):
            H_sq(h01, LevyModel(2.0), 0.5)


class TestOptimal:
    def test_quadratic(self, quadratic, gauss):
        assert a_x_opt_exact(quadratic, gauss, equidistant(2)) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("tau", [equidistant(1), theta_net(9, 0.3)])
    def test_first_chaos(self, tau):
        assert a_x_opt_exact(ChaosSeq.from_h([0.7], 1.5), None, tau) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(scalar_h, st.floats(0.2, 3.0))
    def test_one_step(self, h, mu):
        c = ChaosSeq.from_h(h, mu)
        b = c.chaos_norms()
        assert a_x_opt_exact(c, None, [0.0, 1.0]) ** 2 == pytest.approx(
            c.norm_sq() - b[1], rel=1e-10, abs=1e-13 * c.norm_sq())


class TestBracket:
    def test_h01_n4(self, h01, atom11):
        br = a_s_sim_bracket(h01, atom11, equidistant(4))
        # v^2 = sum_k int (t_k - t)(4 + 4t) dt
        t = equidistant(4).points
        v2 = sum(2 * (b - a) ** 2 + 4 * ((b - a) ** 2 * (a / 2 + (b - a) / 6)) for a, b in
                 zip(t[:-1], t[1:]))
        assert br.value == pytest.approx(math.sqrt(v2), rel=1e-12)
        assert br.constant == pytest.approx(2.0)
        assert br.low == pytest.approx(br.value / 2) and br.high == pytest.approx(2 * br.value)

    def test_zero_curvature(self):
        c = ChaosSeq.from_h([1.0 / math.factorial(n + 1) for n in range(30)], 1.0)
        br = a_s_sim_bracket(c, None, equidistant(4))
        assert br.high < 1e-14

    def test_mesh_too_coarse(self, h01):
        with pytest.raises(MeshTooCoarse):
            a_s_sim_bracket(h01, None, equidistant(1))
        with pytest.raises(MeshTooCoarse):
            bracket_constant(1.0, 1.0)

    def test_positivity(self, h01):
        with pytest.raises(PositivityViolated):
            a_s_sim_bracket(h01, LevyModel(0.0, Atoms((-1.0,), (1.0,))), equidistant(4))


class TestGap:
    def test_zero(self):
        c = ChaosSeq.from_h([0.0, 0.0], 1.0)
        assert gap_bound(c, None, equidistant(3)) == 0.0

    def test_quadratic_closed_form(self, quadratic):
        for N in (1, 4, 16):
            e = math.exp(0.5)
            ref = e * math.sqrt(2) / N + (1 / math.sqrt(N)) * (1 / math.sqrt(2)) * e * math.sqrt(2 / N)
            assert gap_bound(quadratic, None, equidistant(N)) == pytest.approx(ref, rel=1e-12)

    def test_monotone(self, quadratic):
        vals = [gap_bound(quadratic, None, equidistant(N)) for N in range(1, 257)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_h_gap(self, h01):
        assert h_gap_bound(h01, None, 0.0) == 0.0
        assert math.sqrt(H_sq(h01, None, 0.0, "S")) == math.sqrt(H_sq(h01, None, 0.0, "X")) == 2.0

    def test_h_gap_constant(self):
        c = ChaosSeq.from_h([0.8], 2.0)
        assert h_gap_bound(c, None, 0.6) == pytest.approx(2.0 * 0.8)

    @settings(max_examples=30, deadline=None)
    @given(scalar_h, st.floats(0.2, 3.0))
    def test_h_gap_property(self, h, mu):
        c = ChaosSeq.from_h(h, mu)
        for t in np.arange(1, 10) / 10:
            h_gap_bound(c, None, float(t))


class TestLimit:
    def test_quadratic(self, quadratic):
        assert float(limit_constant(quadratic, None, 1.0)) == pytest.approx(2.0)
        N = 64
        assert N * a_x_opt_exact(quadratic, None, equidistant(N)) ** 2 == pytest.approx(2.0)

    def test_zero(self):
        assert float(limit_constant(ChaosSeq.from_h([1.0], 1.0), None, 0.5)) == 0.0

    def test_digital_half(self, digital):
        with pytest.warns(InconclusiveWarning):
            lim = limit_constant(digital, None, 0.5)
        assert math.isfinite(lim)

    def test_curvature_flip(self, digital):
        assert abs(curvature_flip_theta(digital) - 0.5) < 0.05


class TestRates:
    def test_quadratic(self, quadratic):
        assert rate_sweep(quadratic, None, 1.0, dyadic(4, 1024)).slope == pytest.approx(-0.5,
                                                                                    abs=1e-6)

    def test_digital_equidistant(self, digital):
        s = rate_sweep(digital, None, 1.0, dyadic(4, 1024)).slope
        assert -0.27 <= s <= -0.23

    def test_digital_equidistant_with_tail(self, digital):
        # the arcsin closed form gives -0.2293 on this range
        s = rate_sweep(digital, None, 1.0, dyadic(4, 1024), extrapolate_tail=True).slope
        assert s == pytest.approx(-0.2293, abs=2e-3)

    def test_table(self, quadratic):
        t = rate_sweep(quadratic, None, 1.0, dyadic(2, 16))
        lines = t.to_csv().splitlines()
        assert lines[0] == "N,error,sqrtN_error,N_error_sq" and len(lines) == 5

    def test_needs_four(self, quadratic):
        with pytest.raises(ValueError):
            rate_sweep(quadratic, None, 1.0, [2, 4, 8])


class TestProbe:
    def test_quadratic(self, quadratic):
        res = lower_bound_probe(quadratic, None, [2, 5, 16])
        assert np.allclose(res.values, math.sqrt(2), atol=1e-3)

    def test_first_chaos(self):
        with pytest.raises(DegenerateF):
            lower_bound_probe(ChaosSeq.from_h([1.0], 1.0), None, [2, 4])

    def test_digital(self, digital):
        assert lower_bound_probe(digital, None, dyadic(4, 256)).minimum >= 0.1


class TestSmoothness:
    def test_quadratic(self, quadratic):
        rep = smoothness_criteria(quadratic, 0.7)
        assert rep.curvature.finite and rep.besov.finite

    @pytest.mark.parametrize("theta,verdict", [(0.3, "convergent"), (0.8, "divergent")])
    def test_digital(self, digital, theta, verdict):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InconclusiveWarning)
            rep = smoothness_criteria(digital, theta)
        assert rep.curvature.verdict == verdict and rep.besov.verdict == verdict

    def test_digital_boundary_not_claimed_finite(self, digital):
        # at theta = 1/2 the integrand is (1-t)^{-1}: a logarithmic divergence
        with pytest.warns(InconclusiveWarning):
            rep = smoothness_criteria(digital, 0.5)
        assert rep.curvature.verdict != "convergent"

    def test_flips_agree(self, digital):
        rep = smoothness_criteria(digital, 0.3)
        assert abs(rep.curvature_flip - rep.besov_flip) < 0.05

    def test_h_integral(self, digital):
        s = h_integral(digital, "X")
        assert s.verdict == "convergent" and s.exponent == pytest.approx(-0.25, abs=0.03)


class TestReport:
    def test_round_trip(self, h01, atom11):
        rep = error_report(h01, atom11, equidistant(4), theta=1.0)
        d = json.loads(rep.to_json())
        assert d["schema"] == "levyapprox.report/1"
        assert d["a_x_opt"] == pytest.approx(1.0 / math.sqrt(2))
        assert rep.to_csv().splitlines()[0].startswith("N,mesh,a_x_opt")

    def test_bracket_unavailable_note(self, h01):
        rep = error_report(h01, None, equidistant(1))
        assert rep.a_s_sim_bracket is None and rep.notes
