import math

import numpy as np
import pytest
from scipy import integrate, stats

from levyapprox.exceptions import GridTooCoarse, ModelError, ZeroMass
from levyapprox.levy_model import (Atoms, LevyModel, NoJumps, TemperedStable,
                                   check_exponential_positive, load_model, mu_total, nu_moment,
                                   psi_smallball, sample_increments, sample_x1)
from levyapprox.nets import theta_net


def ts_oracle(d, alpha, m, p):
    # independent: substitute x = e^s and integrate over the real line
    # log-space integrand so large |s| cannot overflow
    f = lambda s: d * math.exp((p - alpha) * s - m * np.logaddexp(0.0, s))
    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-12, limit=500)
    return 2.0 * val


class TestMass:
    def test_gaussian(self):
        assert mu_total(LevyModel(1.0)) == 1.0

    def test_single_atom(self):
        assert mu_total(LevyModel(0.0, Atoms((1.0,), (1.0,)))) == 1.0

    def test_tempered_stable_against_oracle(self):
        m = LevyModel(0.0, TemperedStable(1.0, 0.5, 2.0))
        assert m.mu_total == pytest.approx(ts_oracle(1.0, 0.5, 2.0, 2.0), rel=1e-8)
        # closed form 2 B(1.5, 0.5) = pi
        assert m.mu_total == pytest.approx(math.pi, rel=1e-10)

    def test_zero_mass_rejected(self):
        with pytest.raises(ZeroMass):
            LevyModel(0.0, NoJumps())

    @pytest.mark.parametrize("bad", [dict(x=(0.0,), rate=(1.0,)), dict(x=(1.0,), rate=(-1.0,)),
                                     dict(x=(1.0, 1.0), rate=(1.0, 1.0))])
    def test_bad_atoms(self, bad):
        with pytest.raises(ModelError):
            Atoms(**bad)

    def test_bad_tempered_stable(self):
        with pytest.raises(ModelError):
            TemperedStable(1.0, 1.5, 0.2)


class TestMoments:
    def test_atom_three_halves(self):
        assert nu_moment(LevyModel(0.0, Atoms((1.0,), (2.0,))), 1.5) == 2.0

    def test_origin_divergence(self):
        assert nu_moment(LevyModel(0.0, TemperedStable(1.0, 1.4, 1.0)), 0.5) == math.inf

    def test_finite_against_oracle(self):
        m = LevyModel(0.0, TemperedStable(1.0, 0.5, 2.0))
        assert nu_moment(m, 1.5) == pytest.approx(ts_oracle(1.0, 0.5, 2.0, 1.5), rel=1e-6)

    def test_infinite_at_infinity(self):
        assert nu_moment(LevyModel(0.0, TemperedStable(1.0, 0.5, 2.0)), 2.6) == math.inf

    def test_no_jumps(self):
        assert nu_moment(LevyModel(2.0), 1.0) == 0.0


class TestPositivity:
    @pytest.mark.parametrize("model,expected", [
        (LevyModel(0.0, Atoms((0.5,), (2.0,))), True),
        (LevyModel(0.0, Atoms((-1.5,), (1.0,))), False),
        (LevyModel(1.0), True),
        (LevyModel(0.0, TemperedStable(1.0, 0.5, 2.0)), False),
    ])
    def test_examples(self, model, expected):
        assert check_exponential_positive(model) is expected


class TestSerialization:
    @pytest.mark.parametrize("model", [LevyModel(1.0), LevyModel(0.3, Atoms((1.0, -0.5), (1.0, 2.0))),
                                       LevyModel(0.0, TemperedStable(1.0, 0.5, 2.0, 0.05))])
    def test_round_trip(self, model, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(model.to_json())
        assert load_model(p) == model


class TestSampling:
    def test_gaussian_variance(self):
        x = sample_x1(LevyModel(1.0), 100_000, seed=1)
        se = math.sqrt(2.0 / x.size)
        assert abs(x.var(ddof=1) - 1.0) < 3 * se

    def test_compensated_mean(self):
        x = sample_x1(LevyModel(0.0, Atoms((0.5,), (2.0,))), 100_000, seed=2)
        assert abs(x.mean()) < 3 * x.std(ddof=1) / math.sqrt(x.size)

    def test_degenerate_net(self):
        b = sample_increments(LevyModel(1.0), (0.0, 1.0), 10, seed=0)
        assert b.x_increments.shape == (10, 1)

    def test_tempered_stable_variance(self):
        m = LevyModel(0.0, TemperedStable(1.0, 0.5, 4.0))
        x = sample_x1(m, 100_000, seed=3)
        # Var X_1 = mu(R); fourth moment finite here so the SE is meaningful
        k4 = np.mean((x - x.mean()) ** 4)
        se = math.sqrt((k4 - x.var() ** 2) / x.size)
        assert abs(x.var() - m.mu_total) < 4 * se

    def test_reproducible_across_workers(self):
        m = LevyModel(0.5, Atoms((1.0, -0.3), (1.0, 2.0)))
        net = theta_net(5, 0.5)
        a = sample_increments(m, net, 20_000, seed=7, workers=1)
        b = sample_increments(m, net, 20_000, seed=7, workers=4)
        assert np.array_equal(a.x_increments, b.x_increments)
        assert np.array_equal(a.jump_size, b.jump_size)

    def test_jump_records_sum_to_jump_part(self):
        m = LevyModel(0.0, Atoms((1.0,), (3.0,)))
        b = sample_increments(m, (0.0, 0.5, 1.0), 50, seed=4)
        X1 = b.x_values()[:, -1]
        for path in range(5):
            jumps = sum(s for _, s in b.jump_records(path))
            assert X1[path] == pytest.approx(jumps - 3.0, abs=1e-12)


class TestSmallBall:
    def test_gaussian(self):
        est = psi_smallball(LevyModel(1.0), 0.1, 100_000, np.linspace(-1, 1, 41), seed=0)
        exact = 2 * stats.norm.cdf(0.1) - 1
        # the supremum over centres biases upward by a few SE at most
        assert est.value >= exact - 3 * est.std_error
        assert est.value <= exact + 6 * est.std_error

    def test_zero_radius_continuous(self):
        assert psi_smallball(LevyModel(1.0), 0.0, 1000, [0.0], seed=0).value == 0.0

    def test_atom_mass(self):
        est = psi_smallball(LevyModel(0.0, Atoms((1.0,), (1.0,))), 0.4, 100_000,
                            np.linspace(-2, 2, 81), seed=0)
        assert est.value >= math.exp(-1) - 3 * est.std_error

    def test_monotone_in_delta(self):
        m = LevyModel(1.0)
        vals = [psi_smallball(m, d, 5000, np.linspace(-1, 1, 11), seed=5).value
                for d in (0.05, 0.1, 0.2, 0.4)]
        assert vals == sorted(vals)

    def test_grid_boundary_warning(self):
        with pytest.warns(GridTooCoarse):
            psi_smallball(LevyModel(1.0), 0.1, 5000, np.linspace(2.0, 3.0, 5), seed=0)
