"""Deterministic error calculus on time-nets.

For ``F`` with chaos norms ``b_n`` let ``T(t) = sum_n b_n t^n``.  The optimal
L2 error of approximating ``F`` by Riemann sums against X on a net ``tau`` is

    a_X^opt(F; tau)^2 = sum_k int_{t_{k-1}}^{t_k} (t_k - t) T''(t) dt,

and the simple strategy against the stochastic exponential S is bracketed by
the same functional with ``H_S^2`` in place of ``T'' = H_X^2``.  Both
curvatures are power series, so every time integral here is evaluated in
closed form from monomial antiderivatives or Beta functions.
"""
from dataclasses import dataclass
import io
import json
import math
import warnings

import numpy as np

from . import _series
from ._series import CONVERGENT, DIVERGENT, INCONCLUSIVE, BlockTrend, block_trend
from .chaos import ChaosSeq, SeriesSum, _flip, _verdict, chaos_norms
from .exceptions import (DegenerateF, InconclusiveWarning, IntegralDivergent,
                         MeshTooCoarse, ModelError, NumericalFailure, PositivityViolated)
from .levy_model import check_exponential_positive
from .nets import as_net, optimize_nets, theta_net

SCHEMA = "levyapprox.report/1"
PROCESSES = ("X", "S")


def _process(Y):
    Y = str(Y).upper()
    if Y not in PROCESSES:
        raise ValueError("Y must be 'X' or 'S'")
    return Y


def _check_model(c, model):
    if model is not None and not math.isclose(model.mu_total, c.mu_total, rel_tol=1e-10):
        raise ModelError("the chaos sequence and the model disagree on mu(R)")


def curvature_coeffs(c, Y="X"):
    """Coefficients ``u`` of a series ``U`` with ``U'' = H_Y^2``.

    For X this is ``b`` itself.  For S, ``u_m = mu(R) r_{m-1} / m``.
    Plain arrays are treated as chaos norms (X only).
    """
    Y = _process(Y)
    if not isinstance(c, ChaosSeq):
        if Y == "S":
            raise TypeError("H_S needs a ChaosSeq, not bare chaos norms")
        return np.asarray(c, dtype=float)
    if Y == "X":
        return c.chaos_norms()
    r = c.r()
    m = np.arange(1, r.size + 1, dtype=float)
    return np.concatenate([[0.0], c.mu_total * r / m])


def T_eval(b, t, derivative=0):
    """``T(t) = sum b_n t^n`` or its first or second derivative."""
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0.0) | (t_arr > 1.0)):
        raise ValueError("t must lie in [0, 1]")
    out = _series.poly_eval(chaos_norms(b), t_arr, derivative)
    return float(out) if out.ndim == 0 else out


def A_functional(b, tau):
    """``A(b, tau) = (sum_k int (t_k - t) T''(t) dt)^{1/2}``, exact for the truncated series."""
    tau = as_net(tau)
    return math.sqrt(max(_series.curvature_integral(chaos_norms(b), tau.points), 0.0))


def H_sq(c, model, t, Y="X"):
    """``H_Y(t)^2`` for ``t`` in [0, 1).

    ``H_X^2 = mu(R) sum_n n n! t^{n-1} ||(n+1) h_n||^2`` and
    ``H_S^2 = mu(R) sum_n n n! t^{n-1} ||(n+1) h_n - h_{n-1}||^2``.
    """
    _check_model(c, model)
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0.0) | (t_arr >= 1.0)):
        raise ValueError("t must lie in [0, 1)")
    out = _series.poly_eval(curvature_coeffs(c, Y), t_arr, 2)
    return float(out) if out.ndim == 0 else out


def _net_integral(c, tau, Y, extrapolate_tail=False):
    tau = as_net(tau)
    u = curvature_coeffs(c, Y)
    total = _series.curvature_integral(u, tau.points)
    if extrapolate_tail:
        total += _series.tail_curvature_integral(u, tau.points)
    return math.sqrt(max(total, 0.0))


def a_x_opt_exact(c, model, tau, extrapolate_tail=False):
    """Exact optimal L2 error of Riemann approximation against X on ``tau``.

    The value is exact for the truncated sequence.  With
    ``extrapolate_tail=True`` the chaos norms beyond ``n_max`` are modelled by
    a power law fitted to the last dyadic blocks and their contribution is
    added; this matters on nets that crowd near t = 1, where the truncated
    series underestimates the curvature.
    """
    _check_model(c, model)
    return _net_integral(c, tau, "X", extrapolate_tail)


@dataclass(frozen=True)
class Bracket:
    low: float
    high: float
    value: float          # the H_S functional v, with low = v / c and high = c v
    constant: float

    def contains(self, x, slack=0.0):
        return self.low - slack <= x <= self.high + slack

    def to_dict(self):
        return {"low": self.low, "high": self.high, "value": self.value,
                "constant": self.constant}


def bracket_constant(mu_total, mesh):
    """``(1 - sqrt(mu(R) |tau|))^{-1}``; requires ``|tau| < 1 / mu(R)``."""
    if not mesh * mu_total < 1.0:
        raise MeshTooCoarse(f"mesh {mesh:g} is not below 1/mu(R) = {1.0 / mu_total:g}")
    return 1.0 / (1.0 - math.sqrt(mu_total * mesh))


def a_s_sim_bracket(c, model, tau):
    """Two-sided bound ``(v / c, c v)`` for the simple approximation error against S."""
    _check_model(c, model)
    if model is not None and not check_exponential_positive(model):
        raise PositivityViolated("the stochastic exponential of this model can hit zero")
    tau = as_net(tau)
    const = bracket_constant(c.mu_total, tau.mesh)
    v = _net_integral(c, tau, "S")
    return Bracket(v / const, const * v, v, const)


def _F_norm(c):
    tail = c.tail if math.isfinite(c.tail) else 0.0
    return math.sqrt(c.norm_sq() + tail)


def gap_bound(c, model, tau):
    """Upper bound for ``a_S^sim - a_S^opt`` with the constants of the proof.

    ``|tau| mu e^{mu/2} ||F|| + sqrt(|tau|) sqrt(mu/2) e^{mu/2} a_X^opt(F; tau)``.
    This is a proof constant, not an optimal one.
    """
    _check_model(c, model)
    tau = as_net(tau)
    mu = c.mu_total
    e = math.exp(mu / 2.0)
    return (tau.mesh * mu * e * _F_norm(c)
            + math.sqrt(tau.mesh) * math.sqrt(mu / 2.0) * e * a_x_opt_exact(c, None, tau))


def h_gap_bound(c, model, t):
    """``mu(R) ||phi_t||``, a bound for ``|H_S(t) - H_X(t)|``; the bound is verified."""
    _check_model(c, model)
    if not 0.0 <= t < 1.0:
        raise ValueError("t must lie in [0, 1)")
    bound = c.mu_total * math.sqrt(float(c.phi_norm_sq(t)))
    hx = math.sqrt(H_sq(c, None, t, "X"))
    hs = math.sqrt(H_sq(c, None, t, "S"))
    if abs(hs - hx) > bound * (1.0 + 1e-9) + 1e-12 * (hs + hx):
        raise NumericalFailure(f"|H_S - H_X| = {abs(hs - hx):g} exceeds {bound:g} at t={t}")
    return bound


def _beta_terms(c, theta, Y):
    u = curvature_coeffs(c, Y)
    return u * _series.beta_weights(u.size - 1, theta)


def limit_constant(c, model, theta, Y="X"):
    r"""``(1 / 2 theta) \int_0^1 (1-t)^{1-theta} H_Y(t)^2 dt`` as a Beta series.

    This is the limit of ``N a^2`` along the nets ``theta_net(N, theta)``.
    Raises :class:`IntegralDivergent` when the Beta-weighted terms fail the
    dyadic block test; a flat trend only warns.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    _check_model(c, model)
    terms = _beta_terms(c, theta, Y)
    trend = _verdict(terms)
    if trend.verdict == DIVERGENT:
        raise IntegralDivergent(
            f"Beta-weighted curvature series diverges (block exponent {trend.exponent:.3f})")
    if trend.verdict == INCONCLUSIVE:
        warnings.warn(f"limit constant at theta={theta}: flat block trend, value is a "
                      "truncated sum", InconclusiveWarning, stacklevel=2)
    return SeriesSum(float(terms.sum()) / (2.0 * theta), math.nan, trend.verdict,
                     trend.exponent, terms)


def curvature_flip_theta(c, Y="X"):
    """theta where ``int (1-t)^{1-theta} H_Y^2`` switches from finite to infinite."""
    return _flip(lambda th: block_trend(_beta_terms(c, th, Y)).exponent, 1e-6, 1.0)


@dataclass(frozen=True)
class RateTable:
    theta: float
    process: str
    Ns: tuple
    errors: tuple
    slope: float

    def to_csv(self):
        buf = io.StringIO()
        buf.write("N,error,sqrtN_error,N_error_sq\n")
        for N, a in zip(self.Ns, self.errors):
            a = float(a)
            buf.write(f"{N},{a!r},{math.sqrt(N) * a!r},{N * a * a!r}\n")
        return buf.getvalue()

    def to_dict(self):
        return {"theta": self.theta, "process": self.process, "N": list(self.Ns),
                "error": list(self.errors), "slope": self.slope}


def fit_slope(Ns, values):
    """Least-squares slope of ``log values`` against ``log Ns``."""
    x = np.log(np.asarray(Ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def rate_sweep(c, model, theta, Ns, Y="X", extrapolate_tail=False):
    """``a_X^opt`` on ``theta_net(N, theta)`` for each N and the fitted log-log slope.

    For ``Y="S"`` the H_S functional (the centre of the bracket) is swept instead.
    ``extrapolate_tail`` is passed on to :func:`a_x_opt_exact`.
    """
    Ns = [int(N) for N in Ns]
    if len(Ns) < 4 or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("Ns must be increasing with at least four values")
    _check_model(c, model)
    Y = _process(Y)
    errs = tuple(_net_integral(c, theta_net(N, theta), Y, extrapolate_tail) for N in Ns)
    if min(errs) <= 0.0:
        slope = -math.inf
    else:
        slope = fit_slope(Ns, errs)
    return RateTable(float(theta), Y, tuple(Ns), errs, slope)


def dyadic(n_min, n_max):
    """Powers of two in ``[n_min, n_max]``."""
    out, N = [], 1
    while N <= n_max:
        if N >= n_min:
            out.append(N)
        N *= 2
    return out


@dataclass(frozen=True)
class ProbeResult:
    minimum: float
    Ns: tuple
    values: tuple
    nets: tuple

    def to_dict(self):
        return {"minimum": self.minimum, "N": list(self.Ns), "sqrtN_error": list(self.values)}


def lower_bound_probe(c, model, Ns, grid_resolution=None):
    """``min_N sqrt(N) a_X^opt`` over DP-optimized nets; bounded below unless F is affine in X_1.

    The nets for all N come from one DP pass on a shared grid (see
    :func:`levyapprox.nets.optimize_nets`).
    """
    _check_model(c, model)
    b = chaos_norms(c)
    if b.size < 3 or not np.any(b[2:] > 0.0):
        raise DegenerateF("only the first chaos is present; the probe would be zero")
    Ns = [int(N) for N in Ns]
    shared = optimize_nets(b, Ns, grid_resolution)
    nets = [shared[N] for N in Ns]
    sq = _series.curvature_integrals(b, [tau.points for tau in nets])
    vals = [math.sqrt(N) * math.sqrt(max(v, 0.0)) for N, v in zip(Ns, sq)]
    return ProbeResult(float(min(vals)), tuple(int(N) for N in Ns), tuple(vals), tuple(nets))


# -------------------------------------------------------------- smoothness

def _endpoint_pieces(fun, j_max, order=32):
    """``int fun`` over ``[1 - 2^-j, 1 - 2^-(j+1)]`` for j = 0..j_max (Gauss-Legendre)."""
    x0, w0 = np.polynomial.legendre.leggauss(order)
    out = np.empty(j_max + 1)
    for j in range(j_max + 1):
        a, b = 1.0 - 2.0 ** -j, 1.0 - 2.0 ** -(j + 1)
        t = 0.5 * (a + b) + 0.5 * (b - a) * x0
        out[j] = 0.5 * (b - a) * (w0 @ fun(t))
    return out


def h_integral(c, Y="X"):
    """``int_0^1 H_Y dt`` with a convergence verdict from dyadic pieces towards t = 1.

    Pieces finer than ``8 / n_max`` are not resolved by a series truncated at
    ``n_max`` and are left out of the trend fit.
    """
    u = curvature_coeffs(c, Y)
    n = max(u.size - 1, 1)
    j_max = max(int(math.floor(math.log2(n))) - 3, 0)
    fun = lambda t: np.sqrt(np.maximum(_series.poly_eval(u, t, 2), 0.0))
    pieces = _endpoint_pieces(fun, j_max)
    if j_max < 3 or pieces[-1] <= 0.0:
        return SeriesSum(float(pieces.sum()), 0.0, CONVERGENT, -math.inf, pieces)
    tail = pieces[-4:]
    if np.any(tail <= 0.0):
        return SeriesSum(float(pieces.sum()), math.nan, INCONCLUSIVE, math.nan, pieces)
    slope = float(np.polyfit(np.arange(tail.size, dtype=float), np.log2(tail), 1)[0])
    verdict = (CONVERGENT if slope < -_series.BLOCK_TOL else
               DIVERGENT if slope > _series.BLOCK_TOL else INCONCLUSIVE)
    return SeriesSum(float(pieces.sum()), math.nan, verdict, slope, pieces)


@dataclass(frozen=True)
class SmoothnessReport:
    theta: float
    curvature: SeriesSum        # int (1-t)^{1-theta} T''(t) dt
    besov: SeriesSum            # sum (n+1)^theta b_n
    h_x: SeriesSum              # int H_X dt
    h_s: object                 # int H_S dt, or None without a ChaosSeq
    curvature_flip: float
    besov_flip: float

    def to_dict(self):
        return {"theta": self.theta, "curvature_integral": self.curvature.to_dict(),
                "besov_sum": self.besov.to_dict(), "h_x_integral": self.h_x.to_dict(),
                "h_s_integral": self.h_s.to_dict() if self.h_s is not None else None,
                "curvature_flip_theta": _jf(self.curvature_flip),
                "besov_flip_theta": _jf(self.besov_flip)}


def _jf(x):
    return float(x) if math.isfinite(x) else None


def smoothness_criteria(c, theta):
    """Convergence verdicts tied to fractional smoothness of order ``theta``.

    * ``int_0^1 (1-t)^{1-theta} T''(t) dt`` (Beta-series block test),
    * ``sum_n (n+1)^theta b_n`` (block test on the chaos norms),
    * ``int_0^1 H_X dt`` and ``int_0^1 H_S dt`` (dyadic endpoint pieces),

    together with the theta at which the first two switch to divergence.
    Flat trends are reported as inconclusive with a warning.
    """
    from .chaos import besov_flip_theta, besov_weighted_sum

    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    terms = _beta_terms(c, theta, "X")
    trend = _verdict(terms)
    curv = SeriesSum(float(terms.sum()), math.nan, trend.verdict, trend.exponent, terms)
    besov = besov_weighted_sum(c, theta, warn=False)
    hx = h_integral(c, "X")
    hs = h_integral(c, "S") if isinstance(c, ChaosSeq) else None
    for name, s in (("curvature integral", curv), ("Besov sum", besov)):
        if s.verdict == INCONCLUSIVE:
            warnings.warn(f"{name} at theta={theta}: flat block trend", InconclusiveWarning,
                          stacklevel=2)
    return SmoothnessReport(float(theta), curv, besov, hx, hs,
                            curvature_flip_theta(c), besov_flip_theta(c))


# ------------------------------------------------------------------ report

@dataclass(frozen=True)
class ErrorReport:
    net: object
    a_x_opt: float
    a_s_sim_bracket: object      # Bracket or None when unavailable
    bracket_constant: object     # float or None
    gap_bound: float
    limit_constant_theta: object = None
    theta: object = None
    notes: tuple = ()

    def to_dict(self):
        br = self.a_s_sim_bracket
        return {"schema": SCHEMA, "N": self.net.N, "mesh": self.net.mesh,
                "a_x_opt": self.a_x_opt,
                "a_s_sim_bracket": br.to_dict() if br is not None else None,
                "bracket_constant": self.bracket_constant,
                "gap_bound": self.gap_bound, "gap_bound_kind": "proof constant",
                "theta": self.theta,
                "limit_constant_theta": (float(self.limit_constant_theta)
                                         if self.limit_constant_theta is not None else None),
                "notes": list(self.notes)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self):
        d = self.to_dict()
        br = d["a_s_sim_bracket"] or {}
        cols = ["N", "mesh", "a_x_opt", "bracket_low", "bracket_high", "bracket_constant",
                "gap_bound", "limit_constant_theta"]
        vals = [d["N"], d["mesh"], d["a_x_opt"], br.get("low"), br.get("high"),
                d["bracket_constant"], d["gap_bound"], d["limit_constant_theta"]]
        cells = ["" if v is None else str(v) if isinstance(v, int) else repr(float(v))
                 for v in vals]
        return ",".join(cols) + "\n" + ",".join(cells) + "\n"


def error_report(c, model, tau, theta=None):
    """Collect the exact error quantities for one net."""
    tau = as_net(tau)
    notes = []
    a_x = a_x_opt_exact(c, model, tau)
    br = const = None
    if isinstance(c, ChaosSeq):
        try:
            br = a_s_sim_bracket(c, model, tau)
            const = br.constant
        except MeshTooCoarse as exc:
            notes.append(f"bracket unavailable: {exc}")
        except PositivityViolated as exc:
            notes.append(f"bracket unavailable: {exc}")
    lim = None
    if theta is not None:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", InconclusiveWarning)
                lim = limit_constant(c, model, theta, "X")
            if lim.verdict == INCONCLUSIVE:
                notes.append("limit constant: flat block trend, truncated value")
        except IntegralDivergent as exc:
            notes.append(f"limit constant unavailable: {exc}")
    return ErrorReport(tau, a_x, br, const, gap_bound(c, model, tau), lim, theta, tuple(notes))
