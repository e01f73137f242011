import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyapprox.exceptions import DegenerateObjective, InvalidNet
from levyapprox.error_functionals import A_functional
from levyapprox.nets import (TimeNet, equidistant, load_net, mesh, mesh_bound_check, optimize_net,
                             optimize_nets, refine_union, theta_net)

nets_st = st.lists(st.floats(0.001, 0.999), min_size=0, max_size=12).map(
    lambda xs: TimeNet([0.0] + sorted(set(xs)) + [1.0]))


class TestThetaNet:
    def test_equidistant(self):
        assert np.allclose(theta_net(4, 1.0).points, [0, 0.25, 0.5, 0.75, 1])

    def test_half(self):
        assert np.allclose(theta_net(2, 0.5).points, [0, 0.75, 1])

    @pytest.mark.parametrize("theta", [0.1, 0.5, 1.0])
    def test_single_step(self, theta):
        assert np.array_equal(theta_net(1, theta).points, [0.0, 1.0])

    @pytest.mark.parametrize("N,theta", [(0, 1.0), (3, 0.0), (3, 1.5)])
    def test_invalid(self, N, theta):
        with pytest.raises(ValueError):
            theta_net(N, theta)


class TestMesh:
    def test_examples(self):
        assert mesh(equidistant(4)) == 0.25
        assert mesh(theta_net(2, 0.5)) == pytest.approx(0.75)
        assert mesh(TimeNet([0.0, 1.0])) == 1.0

    @pytest.mark.parametrize("N,theta", [(4, 1.0), (8, 0.5), (64, 0.3), (1000, 0.7)])
    def test_bound(self, N, theta):
        ok, margin = mesh_bound_check(N, theta)
        assert ok and margin >= 0.0

    def test_half_eight_ratios(self):
        tau = theta_net(8, 0.5)
        ratios = np.diff(tau.points) / (1.0 - tau.points[:-1]) ** 0.5
        assert np.all(ratios <= 2.0 / 8 + 1e-12)


class TestRefine:
    def test_example(self):
        assert np.allclose(refine_union(TimeNet([0.0, 1.0]), 2).points, [0, 0.5, 1])

    @given(nets_st, st.integers(1, 40))
    def test_idempotent_and_mesh(self, tau, N):
        r = refine_union(tau, N)
        assert refine_union(r, N) == r
        assert r.mesh <= 1.0 / N + 1e-12
        assert set(tau.points) <= set(r.points)


class TestOptimize:
    def test_constant_curvature(self):
        tau = optimize_net([0.0, 0.0, 2.0], 8, 4096)
        assert np.max(np.abs(tau.points - equidistant(8).points)) <= 1.0 / 4096 + 1e-12

    def test_digital_beats_theta_net(self, digital):
        b = digital.chaos_norms()
        assert A_functional(b, optimize_net(b, 8)) <= A_functional(b, theta_net(8, 0.5)) + 1e-6

    def test_single_interval(self):
        assert optimize_net([0.0, 0.0, 2.0], 1) == TimeNet([0.0, 1.0])

    def test_degenerate(self):
        with pytest.raises(DegenerateObjective) as info:
            optimize_net([0.0, 1.0], 4)
        assert info.value.net == equidistant(4)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=8), st.integers(2, 6))
    def test_never_worse_than_equidistant(self, b, N):
        b = [0.0, 0.0] + b
        tau = optimize_net(b, N, 512)
        assert A_functional(b, tau) <= A_functional(b, equidistant(N)) * (1 + 1e-12) + 1e-15


class TestOptimizeMany:
    def test_matches_single_on_same_grid(self, digital):
        b = digital.chaos_norms()[:200]
        many = optimize_nets(b, [3, 5, 8], 2400)
        for N in (3, 5, 8):
            single = optimize_net(b, N, 2400)
            assert A_functional(b, many[N]) == pytest.approx(A_functional(b, single), rel=1e-12)

    def test_contains_every_N(self):
        out = optimize_nets([0.0, 0.0, 1.0, 0.5], [1, 4, 7])
        assert sorted(out) == [1, 4, 7] and all(out[N].N == N for N in out)

    def test_resolution_check(self):
        with pytest.raises(ValueError):
            optimize_nets([0.0, 0.0, 1.0], [100], 500)


class TestIO:
    def test_csv_round_trip(self, tmp_path):
        tau = theta_net(7, 0.3)
        p = tmp_path / "n.csv"
        p.write_text(tau.to_csv())
        assert load_net(p) == tau

    @pytest.mark.parametrize("pts", [[0.0, 0.5, 0.5, 1.0], [0.1, 1.0], [0.0, 0.9]])
    def test_invalid(self, pts):
        with pytest.raises(InvalidNet):
            TimeNet(pts)
