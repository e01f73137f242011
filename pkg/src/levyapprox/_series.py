"""Power-series calculus shared by the chaos and error modules.

Everything here acts on a coefficient vector ``g`` of a series
``G(t) = sum_m g[m] t^m`` with nonnegative coefficients.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate
from scipy.special import gammaln

# fitted-exponent tolerance for convergence verdicts on dyadic blocks
BLOCK_TOL = 0.02
CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"


def interval_weights(points, m_max):
    r"""Return ``W[m] = sum_k \int_{t_{k-1}}^{t_k} (t_k - u) m (m-1) u^{m-2} du``.

    Uses ``t^m - s^m - m s^{m-1} (t-s) = (t-s)^2 P_m(s, t)`` where
    ``P_{m+1} = s P_m + Q_m`` and ``Q_{m+1} = s Q_m + t^m``.  Every update adds
    nonnegative numbers, so there is no cancellation even for tiny intervals.
    """
    pts = np.asarray(points, dtype=float)
    s, t = pts[:-1], pts[1:]
    d2 = (t - s) ** 2
    W = np.zeros(m_max + 1)
    P = np.zeros_like(s)
    Q = np.ones_like(s)
    tm = t.copy()
    for m in range(1, m_max):
        P = s * P + Q
        Q = s * Q + tm
        tm = tm * t
        W[m + 1] = d2 @ P
    return W


def interval_costs(g, s, t):
    r"""Per-interval ``\int_s^t (t - u) G''(u) du`` for arrays of interval endpoints.

    Same cancellation-free recurrence as :func:`interval_weights`, summed over
    the coefficients instead of over the intervals.
    """
    g = np.asarray(g, dtype=float)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    acc = np.zeros_like(s)
    P = np.zeros_like(s)
    Q = np.ones_like(s)
    tm = t.copy()
    for m in range(1, g.size - 1):
        P = s * P + Q
        Q = s * Q + tm
        tm = tm * t
        if g[m + 1] != 0.0:
            acc += g[m + 1] * P
    return (t - s) ** 2 * acc


def curvature_integral(g, points):
    """``sum_k int (t_k - u) G''(u) du`` over the net, exact for the truncated series."""
    g = np.asarray(g, dtype=float)
    if g.size < 3:
        return 0.0
    return float(g @ interval_weights(points, g.size - 1))


def curvature_integrals(g, nets):
    """:func:`curvature_integral` for several nets in one vectorized pass."""
    pts = [np.asarray(p, dtype=float) for p in nets]
    g = np.asarray(g, dtype=float)
    if g.size < 3:
        return np.zeros(len(pts))
    s = np.concatenate([p[:-1] for p in pts])
    t = np.concatenate([p[1:] for p in pts])
    costs = interval_costs(g, s, t)
    bounds = np.cumsum([0] + [p.size - 1 for p in pts])
    return np.add.reduceat(costs, bounds[:-1])


def poly_eval(g, t, derivative=0):
    """Evaluate the series or its first/second derivative at ``t`` (Horner)."""
    g = np.asarray(g, dtype=float)
    if derivative:
        m = np.arange(g.size, dtype=float)
        if derivative == 1:
            g = (g * m)[1:]
        elif derivative == 2:
            g = (g * m * (m - 1.0))[2:]
        else:
            raise ValueError("derivative must be 0, 1 or 2")
    t = np.asarray(t, dtype=float)
    acc = np.zeros_like(t)
    for c in g[::-1]:
        acc = acc * t + c
    return acc


def beta_weights(m_max, theta):
    r"""``m (m-1) B(m-1, 2-theta)`` for m = 0..m_max, i.e. ``\int_0^1 (1-t)^{1-theta} (t^m)'' dt``."""
    out = np.zeros(m_max + 1)
    if m_max < 2:
        return out
    m = np.arange(2, m_max + 1, dtype=float)
    a = 2.0 - theta
    logB = gammaln(m - 1.0) + gammaln(a) - gammaln(m - 1.0 + a)
    out[2:] = m * (m - 1.0) * np.exp(logB)
    return out


def dyadic_block_sums(terms, start=1):
    """Sums of ``terms[n]`` over complete blocks ``[2^j, 2^{j+1})``, ``2^j >= start``."""
    terms = np.asarray(terms, dtype=float)
    n = terms.size
    sums = []
    j = max(0, math.ceil(math.log2(max(start, 1))))
    while 2 ** (j + 1) <= n:
        sums.append(terms[2 ** j: 2 ** (j + 1)].sum())
        j += 1
    return np.array(sums), j - len(sums)


@dataclass(frozen=True)
class BlockTrend:
    verdict: str
    exponent: float       # fitted log2-slope of the block sums
    blocks: int

    @property
    def finite(self):
        return self.verdict == CONVERGENT


def block_trend(terms, n_fit=4, tol=BLOCK_TOL):
    """Convergence verdict for ``sum terms`` from the trend of its last dyadic blocks.

    Block sums of a term sequence ``~ n^p`` scale as ``2^{j(p+1)}``; the fitted
    slope is compared with ``tol``.  A sequence whose last blocks vanish is a
    finite sum and therefore convergent.
    """
    sums, j0 = dyadic_block_sums(terms)
    if sums.size == 0:
        return BlockTrend(CONVERGENT, -math.inf, 0)
    tail = sums[-n_fit:]
    if np.all(tail <= 0.0) or tail[-1] <= 0.0:
        return BlockTrend(CONVERGENT, -math.inf, int(sums.size))
    if np.any(tail <= 0.0) or tail.size < 2:
        return BlockTrend(INCONCLUSIVE, math.nan, int(sums.size))
    j = np.arange(tail.size, dtype=float)
    slope = float(np.polyfit(j, np.log2(tail), 1)[0])
    if slope < -tol:
        verdict = CONVERGENT
    elif slope > tol:
        verdict = DIVERGENT
    else:
        verdict = INCONCLUSIVE
    return BlockTrend(verdict, slope, int(sums.size))


def _corrected_block_tail(sums, r0):
    """Tail of block sums modelled as ``alpha r^j + beta (r/2)^j`` through the last three.

    A term ``C n^{-p} (1 + a/n)`` gives exactly this shape with ``r = 2^{1-p}``;
    the second root absorbs the ``1/n`` correction.  Returns ``(tail, backcast)``
    where ``backcast`` predicts the block before the three fitted ones, or
    ``None`` when the fit is not a plausible refinement of the ratio ``r0``.
    """
    s0, s1, s2 = (float(v) for v in sums[-3:])
    # s_{j+2} - (3r/2) s_{j+1} + (r^2/2) s_j = 0
    disc = 2.25 * s1 * s1 - 2.0 * s0 * s2
    if disc < 0.0:
        return None
    roots = [(1.5 * s1 + sg * math.sqrt(disc)) / s0 for sg in (1.0, -1.0)]
    r = min(roots, key=lambda x: abs(x - r0))
    if not 0.0 < r < 1.0 or abs(r - r0) > 0.25 * r0:
        return None
    # solve s1 = alpha r + beta r/2, s2 = alpha r^2 + beta r^2/4 (j counted from s0)
    beta = (4.0 * s1 * r - 4.0 * s2) / (r * r)
    alpha = (s1 - beta * r / 2.0) / r
    h = r / 2.0
    return alpha * r ** 3 / (1.0 - r) + beta * h ** 3 / (1.0 - h), alpha / r + beta / h


def tail_estimate(terms, n_fit=3):
    """Extrapolated ``sum_{n >= len(terms)} terms[n]`` from the decay of the dyadic blocks.

    The last blocks are fitted by a geometric ratio with a first-order
    correction (see :func:`_corrected_block_tail`), falling back to the plain
    geometric fit when the correction is implausible.  Returns ``inf`` when
    the blocks are not decreasing.
    """
    all_sums, _ = dyadic_block_sums(terms)
    sums = all_sums[all_sums.size - n_fit:] if all_sums.size >= n_fit else all_sums
    if sums.size == 0:
        return 0.0
    if sums[-1] <= 0.0:
        return 0.0
    if sums.size < 2 or np.any(sums <= 0.0):
        return math.inf
    slope, icpt = np.polyfit(np.arange(sums.size, dtype=float), np.log(sums), 1)
    r = math.exp(slope)
    if r >= 1.0:
        return math.inf
    plain = sums[-1] * r / (1.0 - r)
    blocks = plain
    if sums.size >= 3 and all_sums.size > sums.size:
        fit = _corrected_block_tail(sums, r)
        if fit is not None and 0.5 * plain <= fit[0] <= 2.0 * plain:
            # keep the correction only if it explains the previous block better
            prev = all_sums[all_sums.size - sums.size - 1]
            plain_back = math.exp(icpt - slope)
            if abs(fit[1] - prev) < abs(plain_back - prev):
                blocks = fit[0]
    # the extrapolation starts where the last complete block ends; terms
    # already present after that point are subtracted
    terms = np.asarray(terms, dtype=float)
    last_end = 2 ** int(math.floor(math.log2(terms.size)))
    partial = terms[last_end:].sum()
    return float(max(blocks - partial, 0.0))


def power_tail(terms, n_fit=3):
    """Fit ``terms[n] ~ C n^{-p}`` beyond the last index from the trailing dyadic blocks.

    Returns ``(C, p)``, or ``None`` when the blocks vanish (a polynomial-type
    sequence with no tail) or are too few to fit.
    """
    terms = np.asarray(terms, dtype=float)
    sums, j0 = dyadic_block_sums(terms)
    if sums.size < max(n_fit, 2) or sums[-1] <= 0.0:
        return None
    tail = sums[-n_fit:]
    if np.any(tail <= 0.0):
        return None
    r = math.exp(np.polyfit(np.arange(tail.size, dtype=float), np.log(tail), 1)[0])
    p = 1.0 - math.log2(r)
    j = j0 + sums.size - 1
    C = tail[-1] / np.sum(np.arange(2 ** j, 2 ** (j + 1), dtype=float) ** -p)
    return float(C), p


def _tail_interval(C, p, x0, s, t):
    """``sum_{n > x0} C n^{-p} (t^n - s^n - n s^{n-1} (t - s))`` by Euler-Maclaurin."""
    lt = math.log(t) if t < 1.0 else 0.0
    if s > 0.0:
        ls = math.log(s)
        d = (t - s) / s
        L = math.log1p(d)
    else:
        ls, d, L = -math.inf, 0.0, 0.0

    def f(x):
        if s == 0.0:
            return x ** -p * math.exp(x * lt)
        if x * L < 1.0:
            # s^x (expm1(x L) - x d) avoids cancellation on short intervals
            return x ** -p * math.exp(x * ls) * (math.expm1(x * L) - x * d)
        return x ** -p * (math.exp(x * lt) - math.exp(x * ls) * (1.0 + x * d))

    rate = -lt if t < 1.0 else -ls
    end = max(2.0 * x0, 45.0 / rate) if rate > 0.0 else 2.0 * x0
    edges = x0 * np.geomspace(1.0, end / x0, max(2, int(math.log2(end / x0)) + 2))
    v = math.fsum(integrate.quad(f, a, b, limit=200, epsrel=1e-12)[0]
                  for a, b in zip(edges[:-1], edges[1:]))
    if t >= 1.0:
        v += end ** (1.0 - p) / (p - 1.0)
    return C * v


def tail_curvature_integral(g, points, n_fit=3):
    """Contribution of the extrapolated power-law tail of ``g`` to :func:`curvature_integral`.

    Zero when the sequence shows no tail; ``inf`` when the fitted tail is not
    summable.
    """
    g = np.asarray(g, dtype=float)
    fit = power_tail(g, n_fit)
    if fit is None:
        return 0.0
    C, p = fit
    if p <= 1.0:
        return math.inf
    pts = np.asarray(points, dtype=float)
    x0 = g.size - 0.5
    return math.fsum(_tail_interval(C, p, x0, float(s), float(t))
                     for s, t in zip(pts[:-1], pts[1:]))
