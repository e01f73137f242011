"""Monte Carlo verification of the exact error formulas.

Paths come from :func:`levyapprox.levy_model.sample_increments`, so every
estimate is a deterministic function of ``(seed, paths)`` and the inputs.
"""
import math
import warnings

import numpy as np

from ._orthopoly import charlier_table, hermite_series
from .chaos import ChaosSeq
from .estimates import root_estimate
from .exceptions import (IllConditioned, PositivityViolated, TruncationDominates,
                         UnsupportedModel)
from .levy_model import check_exponential_positive, sample_increments
from .nets import as_net


def kappa(model, a, b):
    r"""``\int_a^b E (S_t^a)^2 dt = (e^{mu (b-a)} - 1) / mu`` for ``mu = mu(R)``."""
    if not 0.0 <= a <= b <= 1.0:
        raise ValueError("need 0 <= a <= b <= 1")
    mu = model.mu_total if hasattr(model, "mu_total") else float(model)
    x = mu * (b - a)
    if abs(x) < 1e-5:
        # series of expm1(x)/x; the closed form loses digits for tiny mass
        return (b - a) * (1.0 + x / 2.0 + x * x / 6.0 + x ** 3 / 24.0)
    return math.expm1(x) / mu


def simulate_S(bundle, model, assert_positive=None):
    """Stochastic exponential ``S = E(X)`` at the knots of ``bundle.net``, shape (paths, N+1).

    On each interval ``S`` is multiplied by
    ``exp(G - v dt / 2 - drift dt) * prod_jumps (1 + x_j)`` where ``G`` is the
    Gaussian increment with variance ``v dt``; this is exact given the
    simulated jumps.
    """
    if assert_positive is None:
        assert_positive = check_exponential_positive(model)
    dt = np.diff(bundle.net.points)
    log_fac = bundle.gauss_increments - (0.5 * bundle.gauss_var + bundle.drift) * dt
    N = dt.size
    sign = np.ones_like(log_fac)
    if bundle.jump_size.size:
        factor = 1.0 + bundle.jump_size
        if assert_positive and np.any(factor <= 0.0):
            raise PositivityViolated("a jump factor 1 + x is not positive")
        flat = bundle.jump_path * N + bundle.jump_interval
        with np.errstate(divide="ignore"):
            lj = np.log(np.abs(factor))
        log_fac = log_fac + np.bincount(flat, weights=lj, minlength=log_fac.size).reshape(
            log_fac.shape)
        neg = np.bincount(flat, weights=(factor < 0).astype(float), minlength=log_fac.size)
        sign = np.where(neg.reshape(log_fac.shape) % 2 == 1, -1.0, 1.0)
        zero = np.bincount(flat, weights=(factor == 0).astype(float), minlength=log_fac.size)
        sign = np.where(zero.reshape(log_fac.shape) > 0, 0.0, sign)
    S = np.ones((bundle.paths, N + 1))
    S[:, 1:] = np.exp(np.cumsum(log_fac, axis=1)) * np.cumprod(sign, axis=1)
    if assert_positive and not np.all(S > 0.0):
        raise PositivityViolated("simulated stochastic exponential is not positive")
    return S


def _require_scalar(c, model):
    if not isinstance(c, ChaosSeq) or c.mode != "scalar":
        raise UnsupportedModel("state evaluation needs a scalar chaos sequence")
    if model.is_gaussian:
        kind = "gauss"
    elif model.is_single_atom:
        kind = "atom"
    else:
        raise UnsupportedModel("state evaluation needs a Gaussian-only or single-atom model")
    if not math.isclose(model.mu_total, c.mu_total, rel_tol=1e-10):
        raise UnsupportedModel("the chaos sequence was built for a different mu(R)")
    return kind


def _multiple_integral_sum(a, model, kind, t, state):
    """``sum_n a_n t^{n/2} P_n(state)`` where ``t^{n/2} P_n`` is the normalized
    ``I_n(1_{(0,t]}^n)`` (Hermite for Brownian motion, Charlier for one atom)."""
    state = np.asarray(state, dtype=float)
    a = np.asarray(a, dtype=float)
    if t == 0.0:
        return np.full(state.shape, a[0] if a.size else 0.0)
    n = np.arange(a.size, dtype=float)
    coef = a * np.exp(0.5 * n * math.log(t))
    if kind == "gauss":
        w = state / (model.sigma * math.sqrt(t))
        return hermite_series(w, coef)
    x0, rate = model.jumps.x[0], model.jumps.rate[0]
    counts = np.rint(state / x0 + rate * t).astype(np.int64)
    if np.any(counts < 0):
        raise ValueError("state is not on the jump lattice")
    uniq, inv = np.unique(counts, return_inverse=True)
    if x0 < 0:
        coef = coef * np.where(np.arange(a.size) % 2 == 0, 1.0, -1.0)
    vals = coef @ charlier_table(uniq, rate * t, a.size - 1)
    return vals[inv].reshape(state.shape)


def phi_eval(c, model, t, state):
    """Integrand martingale ``phi_t = h_0 + sum_n (n+1) h_n I_n(1_{(0,t]}^n)`` at ``X_t = state``."""
    kind = _require_scalar(c, model)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    n = np.arange(c.n_max, dtype=float)
    out = _multiple_integral_sum((n + 1.0) * c.coeffs, model, kind, t, state)
    return float(out) if np.ndim(out) == 0 else out


def chaos_value(c, model, state):
    """``F = sum_{n>=1} I_n(f_n)`` at ``X_1 = state`` from the truncated chaos."""
    kind = _require_scalar(c, model)
    n = np.arange(1, c.n_max + 1, dtype=float)
    a = np.concatenate([[0.0], c.coeffs * np.sqrt(n * c.mu_total)])
    return _multiple_integral_sum(a, model, kind, 1.0, state)


def _payoff_or_series(c, model, x1):
    if c.payoff is not None:
        return c.payoff(x1) - c.mean, "payoff"
    return chaos_value(c, model, x1), "chaos series"


def _paths_setup(c, model, tau, paths, seed, workers, Y):
    kind = _require_scalar(c, model)
    del kind
    Y = str(Y).upper()
    if Y not in ("X", "S"):
        raise ValueError("Y must be 'X' or 'S'")
    if Y == "S" and not check_exponential_positive(model):
        raise PositivityViolated("S-mode needs nu((-inf, -1]) = 0")
    tau = as_net(tau)
    bundle = sample_increments(model, tau, paths, seed, workers)
    X = bundle.x_values()
    phi = np.stack([phi_eval(c, model, float(t), X[:, k])
                    for k, t in enumerate(tau.points[:-1])], axis=1)
    F, source = _payoff_or_series(c, model, X[:, -1])
    if Y == "X":
        Z = X
        v = phi
    else:
        Z = simulate_S(bundle, model, assert_positive=True)
        v = phi / Z[:, :-1]
    return tau, X, Z, v, F, source, Y


def _check_truncation(c, source, est):
    if source == "chaos series" and math.isfinite(c.tail):
        if math.sqrt(max(c.tail, 0.0)) > 0.1 * est.value and c.tail > 0.0:
            raise TruncationDominates(
                f"chaos tail {math.sqrt(c.tail):.3g} exceeds 10% of the error {est.value:.3g}")


def sim_error_mc(c, model, tau, Y="X", paths=100_000, seed=0, workers=1):
    """Monte Carlo ``|| F - sum_k v_{k-1} (Y_{t_k} - Y_{t_{k-1}}) ||_{L2}``.

    ``v_{k-1} = phi_{t_{k-1}}`` against X and ``phi_{t_{k-1}} / S_{t_{k-1}}``
    against S (the integrand of ``F = int phi_- dX = int (phi_- / S_-) dS``).
    F is the centered payoff when the sequence carries one, otherwise the
    truncated chaos sum.
    """
    tau, X, Z, v, F, source, Y = _paths_setup(c, model, tau, paths, seed, workers, Y)
    resid = F - np.sum(v * np.diff(Z, axis=1), axis=1)
    est = root_estimate(resid ** 2, paths, seed, f"sim-{Y}", F_source=source, N=tau.N)
    _check_truncation(c, source, est)
    return est


def _standard_features(x, ratio, basis_size):
    feats = [ratio, np.ones_like(x), x, x * x, x ** 3]
    return feats[:basis_size]


def opt_error_mc_regression(c, model, tau, Y="S", paths=100_000, basis_size=5, seed=0,
                            workers=1):
    """Least-squares proxy for the optimal approximation error.

    ``F`` is regressed jointly on the increments ``e_j(state_{k-1}) (Y_{t_k} - Y_{t_{k-1}})``
    with features ``e = (phi/S, 1, x, x^2, x^3)[:basis_size]`` of the state
    ``x = X_{t_{k-1}}``.  The span contains the simple strategy, so the
    in-sample residual never exceeds :func:`sim_error_mc`'s value on the same
    paths.  Rank deficiency is reported with :class:`IllConditioned` and
    handled by a minimum-norm solve.
    """
    if not 1 <= basis_size <= 5:
        raise ValueError("basis_size must be between 1 and 5")
    tau, X, Z, v, F, source, Y = _paths_setup(c, model, tau, paths, seed, workers, Y)
    dZ = np.diff(Z, axis=1)
    cols = []
    for k in range(tau.N):
        if k == 0:
            # the state at t = 0 is deterministic: every feature is a constant
            cols.append(dZ[:, 0])
            continue
        for f in _standard_features(X[:, k], v[:, k], basis_size):
            cols.append(f * dZ[:, k])
    A = np.column_stack(cols)
    scale = np.sqrt(np.mean(A * A, axis=0))
    keep = scale > 0.0
    A = A[:, keep] / scale[keep]
    coef, _, rank, sv = np.linalg.lstsq(A, F, rcond=1e-10)
    if rank < A.shape[1]:
        warnings.warn(f"regression design has rank {rank} < {A.shape[1]}; minimum-norm fit",
                      IllConditioned, stacklevel=2)
    resid = F - A @ coef
    est = root_estimate(resid ** 2, paths, seed, f"regression-{Y}", F_source=source,
                        N=tau.N, basis_size=basis_size, columns=int(A.shape[1]))
    _check_truncation(c, source, est)
    return est
