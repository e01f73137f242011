"""Deterministic time-nets on [0, 1]: generation, refinement and optimization."""
from dataclasses import dataclass
import io
import math

import numpy as np

from ._series import curvature_integrals, poly_eval
from .exceptions import DegenerateObjective, InvalidNet

DEFAULT_GRID = 2048


@dataclass(frozen=True, eq=False)
class TimeNet:
    """Strictly increasing knots ``0 = t_0 < ... < t_N = 1``.

    Construct from any sequence of floats.  The endpoints are forced to be
    exactly 0 and 1 only if they already agree to within rounding.
    """

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float).ravel()
        if p.size < 2:
            raise InvalidNet("a net needs at least the two endpoints")
        if abs(p[0]) > 1e-12 or abs(p[-1] - 1.0) > 1e-12:
            raise InvalidNet("a net must start at 0 and end at 1")
        p[0], p[-1] = 0.0, 1.0
        if not np.all(np.isfinite(p)) or np.any(np.diff(p) <= 0.0):
            raise InvalidNet("knots must be strictly increasing")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def N(self):
        return self.points.size - 1

    @property
    def mesh(self):
        return float(np.max(np.diff(self.points)))

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        return isinstance(other, TimeNet) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def __repr__(self):
        return f"TimeNet(N={self.N}, mesh={self.mesh:.6g})"

    def to_csv(self):
        buf = io.StringIO()
        buf.write("t\n")
        for t in self.points:
            buf.write(f"{float(t)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = [r.strip() for r in text.splitlines() if r.strip()]
        if rows and not _is_number(rows[0].split(",")[0]):
            rows = rows[1:]
        return cls([float(r.split(",")[0]) for r in rows])


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def as_net(tau):
    """Accept a :class:`TimeNet` or any increasing sequence of knots."""
    return tau if isinstance(tau, TimeNet) else TimeNet(tau)


def load_net(path):
    with open(path) as fh:
        return TimeNet.from_csv(fh.read())


def _guarded(points, N):
    # drop duplicates produced by rounding; losing an interval is an error
    p = np.asarray(points, dtype=float)
    keep = np.concatenate([[True], np.diff(p) > 0.0])
    p = p[keep]
    if p.size - 1 != N:
        raise InvalidNet(f"knots collapse in floating point: {N} intervals requested, "
                         f"{p.size - 1} distinct")
    return TimeNet(p)


def theta_net(N, theta):
    """Adapted net ``t_k = 1 - (1 - k/N)^{1/theta}``; ``theta = 1`` is equidistant.

    Examples
    --------
    >>> theta_net(2, 0.5).points.tolist()
    [0.0, 0.75, 1.0]
    """
    N = _check_N(N)
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    k = np.arange(N + 1, dtype=float)
    if theta == 1.0:
        p = k / N
    else:
        # (N - k)/N is exact for the integers involved, which keeps the knots
        # near t = 1 separated as long as the power does not underflow
        p = 1.0 - ((N - k) / N) ** (1.0 / theta)
    p[0], p[-1] = 0.0, 1.0
    return _guarded(p, N)


def equidistant(N):
    return theta_net(N, 1.0)


def _check_N(N):
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    return int(N)


def mesh(tau):
    return as_net(tau).mesh


def mesh_bound_check(N, theta):
    """Check ``(t_k - t_{k-1}) / (1 - t_{k-1})^{1-theta} <= 1/(theta N)`` for every k.

    Returns ``(ok, margin)`` where ``margin = min_k (1/(theta N) - ratio_k)``;
    a relative rounding allowance of ``1e-12`` is granted, which matters for
    the equidistant case where every interval attains the bound.
    """
    tau = theta_net(N, theta)
    p = tau.points
    ratio = np.diff(p) / (1.0 - p[:-1]) ** (1.0 - theta)
    bound = 1.0 / (theta * tau.N)
    margin = float(np.min(bound - ratio))
    return bool(margin >= -1e-12 * bound), margin


def refine_union(tau, N):
    """Sorted union of ``tau`` with the equidistant knots ``k/N``."""
    tau = as_net(tau)
    N = _check_N(N)
    base = tau.points
    extra = np.arange(1, N) / N
    # drop equidistant knots that agree with a knot of tau up to rounding, so
    # the result contains tau and stays strictly increasing
    pos = np.searchsorted(base, extra)
    near = np.minimum(np.abs(extra - base[np.clip(pos - 1, 0, base.size - 1)]),
                      np.abs(base[np.clip(pos, 0, base.size - 1)] - extra))
    return TimeNet(np.union1d(base, extra[near > 1e-15]))


def _min_plus_layer(V, T, dT, g):
    """One DP step ``V'[j] = min_{i<j} V[i] + C(g_i, g_j)`` with leftmost argmins.

    ``C(s, t) = T(t) - T(s) - T'(s)(t - s)`` is the integral of a nonnegative
    weight over the triangle ``s < u < v < t``, hence a Monge array, and the
    leftmost argmin is nondecreasing in j.  The columns are resolved by
    bisection, level by level, so every level costs O(G) vectorized work.
    """
    G = V.size - 1
    out_v = np.full(G + 1, np.inf)
    out_i = np.zeros(G + 1, dtype=np.int64)
    a = np.array([1])
    b = np.array([G])
    lo = np.array([0])
    hi = np.array([G - 1])
    while a.size:
        m = (a + b) // 2
        top = np.minimum(hi, m - 1)
        lens = top - lo + 1
        seg = np.repeat(np.arange(m.size), lens)
        starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
        rows = lo[seg] + np.arange(seg.size) - starts[seg]
        cols = m[seg]
        vals = V[rows] + (T[cols] - T[rows] - dT[rows] * (g[cols] - g[rows]))
        best = np.minimum.reduceat(vals, starts)
        hit = np.where(vals == best[seg], rows, G + 1)
        arg = np.minimum.reduceat(hit, starts)
        arg = np.where(arg > G, lo, arg)        # all-infinite windows
        out_v[m] = best
        out_i[m] = arg
        left = a <= m - 1
        right = m + 1 <= b
        a, b, lo, hi = (np.concatenate([a[left], (m + 1)[right]]),
                        np.concatenate([(m - 1)[left], b[right]]),
                        np.concatenate([lo[left], arg[right]]),
                        np.concatenate([arg[left], hi[right]]))
    return out_v, out_i


def _degenerate(b, N):
    if b.size < 3 or not np.any(b[2:] > 0.0):
        err = DegenerateObjective("T'' is identically zero; every net is optimal")
        err.net = equidistant(N)
        raise err


def _dp_nets(b, Ns, G):
    """Optimal nets on the uniform grid of ``G`` cells for every N in ``Ns`` from one DP pass.

    Layer k of the recursion holds the least cost of reaching each grid point
    in k steps, so all requested N share the same layers.
    """
    grid = np.arange(G + 1) / G
    T = poly_eval(b, grid)
    dT = poly_eval(b, grid, 1)
    n_top = max(Ns)
    V = T - T[0] - dT[0] * grid
    V[0] = np.inf
    choice = np.zeros((n_top + 1, G + 1), dtype=np.int64)
    for k in range(2, n_top + 1):
        V, choice[k] = _min_plus_layer(V, T, dT, grid)
    found = {}
    for N in Ns:
        if N == 1:
            found[N] = TimeNet([0.0, 1.0])
            continue
        idx = [G]
        for k in range(N, 1, -1):
            idx.append(int(choice[k][idx[-1]]))
        idx.append(0)
        found[N] = TimeNet(grid[idx[::-1]])
    eqs = {N: equidistant(N) for N in Ns}
    cost = curvature_integrals(b, [found[N].points for N in Ns] + [eqs[N].points for N in Ns])
    n = len(Ns)
    return {N: eqs[N] if cost[n + i] <= cost[i] else found[N] for i, N in enumerate(Ns)}


def optimize_net(b, N, grid_resolution=None):
    """Net of ``N`` intervals minimizing ``A(b, tau)^2`` over knots on a uniform grid.

    The objective is a sum of interval costs, so dynamic programming over the
    grid is exact there.  The grid size is a multiple of ``N``, hence the
    equidistant net is always a candidate and the result is never worse than
    it.  Ties go to the leftmost knot.

    Parameters
    ----------
    b : array_like
        Chaos norms ``b_0, b_1, ...``.
    N : int
        Number of intervals.
    grid_resolution : int, optional
        Requested number of grid cells; at least ``10 N`` (default
        ``max(10 N, 2048)`` rounded up to a multiple of ``N``).
    """
    N = _check_N(N)
    b = np.asarray(b, dtype=float)
    if N == 1:
        return TimeNet([0.0, 1.0])
    if grid_resolution is None:
        grid_resolution = max(10 * N, DEFAULT_GRID)
    if grid_resolution < 10 * N:
        raise ValueError("grid_resolution must be at least 10 N")
    _degenerate(b, N)
    G = N * math.ceil(grid_resolution / N)
    return _dp_nets(b, [N], G)[N]


def optimize_nets(b, Ns, grid_resolution=None):
    """Optimized nets for several N at once, as a dict ``{N: TimeNet}``.

    All N share one grid of ``max(10 max(Ns), 2048)`` cells (or
    ``grid_resolution``) and one DP pass, which is far cheaper than calling
    :func:`optimize_net` per N.  The equidistant net is still compared as a
    fallback, but it lies on the shared grid only when N divides its size.
    """
    Ns = sorted({_check_N(N) for N in Ns})
    if not Ns:
        raise ValueError("Ns must be nonempty")
    b = np.asarray(b, dtype=float)
    n_top = Ns[-1]
    if grid_resolution is None:
        grid_resolution = max(10 * n_top, DEFAULT_GRID)
    if grid_resolution < 10 * n_top:
        raise ValueError("grid_resolution must be at least 10 max(Ns)")
    _degenerate(b, n_top)
    return _dp_nets(b, Ns, int(grid_resolution))
