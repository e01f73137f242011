"""Square-integrable mean-zero Lévy processes on [0, 1].

A model is a diffusion coefficient ``sigma`` plus a jump specification.  The
second-moment measure ``mu(dx) = sigma^2 delta_0 + x^2 nu(dx)`` and its total
mass drive every formula in the package.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import json
import math
import warnings

import numpy as np
from scipy import integrate

from .estimates import McEstimate
from .exceptions import GridTooCoarse, ModelError, ZeroMass

BLOCK_PATHS = 4096


@dataclass(frozen=True)
class NoJumps:
    kind = "none"


@dataclass(frozen=True)
class Atoms:
    """Finite Lévy measure ``nu = sum_i rate_i delta_{x_i}``; stored as given."""

    x: tuple
    rate: tuple
    kind = "atoms"

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        rate = tuple(float(v) for v in self.rate)
        if len(x) != len(rate) or not x:
            raise ModelError("atoms need matching, nonempty position and rate lists")
        if any(v == 0.0 for v in x):
            raise ModelError("atom positions must be nonzero")
        if len(set(x)) != len(x):
            raise ModelError("atom positions must be distinct")
        if any(not (r > 0.0) or not math.isfinite(r) for r in rate):
            raise ModelError("atom rates must be positive and finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "rate", rate)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


@dataclass(frozen=True)
class TemperedStable:
    """``nu(dx) = d |x|^{-1-alpha} (1+|x|)^{-m} dx``; jumps below ``eps_trunc`` are
    replaced by a Gaussian of matched variance when sampling."""

    d: float
    alpha: float
    m: float
    eps_trunc: float = 0.1
    kind = "tempered_stable"

    def __post_init__(self):
        if not self.d > 0:
            raise ModelError("d must be positive")
        if not 0 < self.alpha < 2:
            raise ModelError("alpha must lie in (0, 2)")
        if not self.m > 2 - self.alpha:
            raise ModelError("m must exceed 2 - alpha for a finite second moment")
        if not 0 < self.eps_trunc <= 1:
            raise ModelError("eps_trunc must lie in (0, 1]")

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            return self.d * ax ** (-1.0 - self.alpha) * (1.0 + ax) ** (-self.m)

    def half_moment(self, p, lower=0.0, upper=math.inf):
        r"""``\int_lower^upper x^p nu(dx)`` over the positive half-line by adaptive quadrature.

        Power singularities at 0 and the algebraic tail are absorbed into
        quadrature weights, so the integrand handed to QUADPACK is smooth.
        """
        e0 = p - 1.0 - self.alpha
        f = lambda x: (1.0 + x) ** (-self.m)
        total = 0.0
        a, b = lower, min(upper, 1.0)
        if b > a:
            if a == 0.0:
                val, _ = integrate.quad(f, 0.0, b, weight="alg", wvar=(e0, 0.0),
                                        epsabs=0.0, epsrel=1e-13, limit=200)
            else:
                val, _ = integrate.quad(lambda x: x ** e0 * f(x), a, b,
                                        epsabs=0.0, epsrel=1e-13, limit=200)
            total += val
        a = max(lower, 1.0)
        if upper > a:
            # x = 1/y maps [a, upper] onto [1/upper, 1/a]
            e1 = self.m - p + self.alpha - 1.0
            g = lambda y: (1.0 + y) ** (-self.m)
            ylo = 0.0 if math.isinf(upper) else 1.0 / upper
            yhi = 1.0 / a
            if ylo == 0.0:
                val, _ = integrate.quad(g, 0.0, yhi, weight="alg", wvar=(e1, 0.0),
                                        epsabs=0.0, epsrel=1e-13, limit=200)
            else:
                val, _ = integrate.quad(lambda y: y ** e1 * g(y), ylo, yhi,
                                        epsabs=0.0, epsrel=1e-13, limit=200)
            total += val
        return self.d * total

    def moment_finite(self, p):
        return p - self.alpha > 0 and p - self.alpha - self.m < 0


@dataclass(frozen=True)
class LevyModel:
    sigma: float = 0.0
    jumps: object = field(default_factory=NoJumps)

    def __post_init__(self):
        if not (self.sigma >= 0.0) or not math.isfinite(self.sigma):
            raise ModelError("sigma must be a nonnegative real")
        if not isinstance(self.jumps, (NoJumps, Atoms, TemperedStable)):
            raise ModelError(f"unknown jump specification {self.jumps!r}")
        if self.mu_total <= 0.0:
            raise ZeroMass("mu(R) = 0: the process is identically zero")

    @property
    def mu_total(self):
        return mu_total(self)

    @property
    def is_gaussian(self):
        return isinstance(self.jumps, NoJumps)

    @property
    def is_single_atom(self):
        return (self.sigma == 0.0 and isinstance(self.jumps, Atoms)
                and len(self.jumps.x) == 1)

    def atoms_of_mu(self):
        """Positions and masses of ``mu`` when it is atomic (the Gaussian part sits at 0)."""
        xs, ws = [], []
        if self.sigma > 0.0:
            xs.append(0.0)
            ws.append(self.sigma ** 2)
        if isinstance(self.jumps, Atoms):
            for x, r in zip(self.jumps.x, self.jumps.rate):
                xs.append(x)
                ws.append(x * x * r)
        elif isinstance(self.jumps, TemperedStable):
            raise ModelError("tempered stable measures are not atomic")
        return np.array(xs), np.array(ws)

    # serialization

    def to_dict(self):
        j = self.jumps
        if isinstance(j, NoJumps):
            jd = {"type": "none"}
        elif isinstance(j, Atoms):
            jd = {"type": "atoms", "atoms": [{"x": x, "rate": r} for x, r in zip(j.x, j.rate)]}
        else:
            jd = {"type": "tempered_stable", "d": j.d, "alpha": j.alpha, "m": j.m,
                  "eps_trunc": j.eps_trunc}
        return {"sigma": self.sigma, "jumps": jd}

    @classmethod
    def from_dict(cls, d):
        try:
            sigma = float(d.get("sigma", 0.0))
            jd = d.get("jumps", {"type": "none"}) or {"type": "none"}
            kind = jd.get("type", "none")
            if kind == "none":
                jumps = NoJumps()
            elif kind == "atoms":
                pairs = [(a["x"], a["rate"]) if isinstance(a, dict) else (a[0], a[1])
                         for a in jd["atoms"]]
                jumps = Atoms.from_pairs(pairs)
            elif kind == "tempered_stable":
                jumps = TemperedStable(float(jd["d"]), float(jd["alpha"]), float(jd["m"]),
                                       float(jd.get("eps_trunc", 0.1)))
            else:
                raise ModelError(f"unknown jump type {kind!r}")
        except (KeyError, TypeError, IndexError) as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
        return cls(sigma, jumps)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def load_model(path):
    with open(path) as fh:
        return LevyModel.from_json(fh.read())


def mu_total(model):
    """Total mass ``sigma^2 + int x^2 nu(dx)`` of the second-moment measure."""
    j = model.jumps
    if isinstance(j, NoJumps):
        jump_part = 0.0
    elif isinstance(j, Atoms):
        jump_part = math.fsum(r * x * x for x, r in zip(j.x, j.rate))
    else:
        jump_part = 2.0 * j.half_moment(2.0)
    total = model.sigma ** 2 + jump_part
    if total <= 0.0:
        raise ZeroMass("mu(R) = 0")
    return total


def nu_moment(model, p):
    r"""``\int |x|^p nu(dx)``; ``math.inf`` when the integral diverges.

    For the tempered stable density divergence is decided from the power laws at
    the origin (``|x|^{p-1-alpha}``) and at infinity (``|x|^{p-1-alpha-m}``).
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    j = model.jumps
    if isinstance(j, NoJumps):
        return 0.0
    if isinstance(j, Atoms):
        return math.fsum(r * abs(x) ** p for x, r in zip(j.x, j.rate))
    if not j.moment_finite(p):
        return math.inf
    return 2.0 * j.half_moment(p)


def nu_total(model):
    """``nu(R)``, infinite for the tempered stable family."""
    return nu_moment(model, 0.0)


def check_exponential_positive(model):
    """True iff ``nu((-inf, -1]) = 0``, which makes the stochastic exponential positive."""
    j = model.jumps
    if isinstance(j, NoJumps):
        return True
    if isinstance(j, Atoms):
        return all(x > -1.0 for x in j.x)
    return False


# --------------------------------------------------------------------- sampling

@dataclass(frozen=True)
class _JumpLaw:
    gauss_var: float      # variance per unit time of the continuous part
    intensity: float      # rate of simulated (finite-activity) jumps
    drift: float          # compensator per unit time subtracted from X
    atoms: tuple = ()
    probs: tuple = ()
    ts: object = None


def _jump_law(model):
    j = model.jumps
    v = model.sigma ** 2
    if isinstance(j, NoJumps):
        return _JumpLaw(v, 0.0, 0.0)
    if isinstance(j, Atoms):
        lam = math.fsum(j.rate)
        drift = math.fsum(x * r for x, r in zip(j.x, j.rate))
        return _JumpLaw(v, lam, drift, j.x, tuple(r / lam for r in j.rate))
    eps = j.eps_trunc
    small_var = 2.0 * j.half_moment(2.0, 0.0, eps)
    lam = 2.0 * j.half_moment(0.0, eps, math.inf)
    # symmetric measure: the large-jump compensator vanishes
    return _JumpLaw(v + small_var, lam, 0.0, ts=j)


def _sample_ts_sizes(rng, ts, n):
    """Jump sizes from ``nu`` restricted to ``|x| > eps`` (Pareto proposal, rejection)."""
    eps, a, m = ts.eps_trunc, ts.alpha, ts.m
    out = np.empty(n)
    filled = 0
    while filled < n:
        k = max(2 * (n - filled), 64)
        u = rng.random(k)
        x = eps * u ** (-1.0 / a)
        accept = rng.random(k) < ((1.0 + eps) / (1.0 + x)) ** m
        x = x[accept][: n - filled]
        out[filled:filled + x.size] = x
        filled += x.size
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return sign * out


@dataclass(frozen=True)
class PathBundle:
    """Increments of X on a net for many independent paths.

    ``x_increments`` has shape (paths, N).  Jumps are stored flat: entry ``i`` of
    ``jump_path``, ``jump_interval``, ``jump_time`` and ``jump_size`` describes
    one simulated jump.  ``gauss_increments`` is the continuous Gaussian part,
    needed to build the stochastic exponential exactly.
    """

    net: object
    x_increments: np.ndarray
    gauss_increments: np.ndarray
    jump_path: np.ndarray
    jump_interval: np.ndarray
    jump_time: np.ndarray
    jump_size: np.ndarray
    seed: int
    gauss_var: float
    drift: float

    @property
    def paths(self):
        return self.x_increments.shape[0]

    def x_values(self):
        """X at every knot, shape (paths, N+1), starting from 0."""
        out = np.zeros((self.paths, self.x_increments.shape[1] + 1))
        np.cumsum(self.x_increments, axis=1, out=out[:, 1:])
        return out

    def jump_records(self, path):
        sel = self.jump_path == path
        return list(zip(self.jump_time[sel].tolist(), self.jump_size[sel].tolist()))


def _block_rng(seed, block):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def _sample_block(law, dt, starts, seed, block, p):
    rng = _block_rng(seed, block)
    n_int = dt.size
    gauss = np.zeros((p, n_int))
    if law.gauss_var > 0.0:
        gauss = rng.standard_normal((p, n_int)) * np.sqrt(law.gauss_var * dt)
    incr = gauss - law.drift * dt
    if law.intensity > 0.0:
        counts = rng.poisson(law.intensity * dt, size=(p, n_int))
        total = int(counts.sum())
        flat = np.repeat(np.arange(p * n_int), counts.ravel())
        jp, ji = np.divmod(flat, n_int)
        times = starts[ji] + rng.random(total) * dt[ji]
        if law.ts is None:
            idx = rng.choice(len(law.atoms), size=total, p=np.array(law.probs))
            sizes = np.asarray(law.atoms)[idx]
        else:
            sizes = _sample_ts_sizes(rng, law.ts, total)
        jump_sum = np.bincount(flat, weights=sizes, minlength=p * n_int).reshape(p, n_int)
        incr = incr + jump_sum
    else:
        jp = ji = np.zeros(0, dtype=np.int64)
        times = sizes = np.zeros(0)
    return incr, gauss, jp, ji, times, sizes


def sample_increments(model, net, paths, seed, workers=1):
    """Simulate ``paths`` independent paths of X on ``net``.

    Paths are generated in fixed blocks of ``BLOCK_PATHS``, each with its own
    counter-based Philox stream keyed by ``(seed, block index)``; the output is
    therefore bit-identical for any ``workers``.
    """
    from .nets import as_net

    net = as_net(net)
    if paths < 1:
        raise ValueError("paths must be at least 1")
    law = _jump_law(model)
    dt = np.diff(net.points)
    starts = net.points[:-1]
    sizes = [min(BLOCK_PATHS, paths - b0) for b0 in range(0, paths, BLOCK_PATHS)]

    def run(b):
        return _sample_block(law, dt, starts, seed, b, sizes[b])

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    offsets = np.cumsum([0] + sizes[:-1])
    return PathBundle(
        net=net,
        x_increments=np.concatenate([p[0] for p in parts]),
        gauss_increments=np.concatenate([p[1] for p in parts]),
        jump_path=np.concatenate([p[2] + off for p, off in zip(parts, offsets)]),
        jump_interval=np.concatenate([p[3] for p in parts]),
        jump_time=np.concatenate([p[4] for p in parts]),
        jump_size=np.concatenate([p[5] for p in parts]),
        seed=int(seed),
        gauss_var=law.gauss_var,
        drift=law.drift,
    )


def sample_x1(model, paths, seed, workers=1):
    return sample_increments(model, (0.0, 1.0), paths, seed, workers).x_increments[:, 0]


def _window_counts(xs, centers, delta, tol):
    hi = np.searchsorted(xs, centers + delta + tol, side="right")
    lo = np.searchsorted(xs, centers - delta - tol, side="left")
    return hi - lo


def psi_smallball(model, delta, paths, lambda_grid, seed, workers=1):
    """Estimate ``sup_lambda P(|X_1 - lambda| <= delta)``.

    The supremum is first taken over ``lambda_grid`` and then refined exactly
    over every centre in the grid's hull: the empirical window count only
    changes when a window edge crosses a sample, so the candidates
    ``x_i + delta`` (clipped to the hull) are exhaustive.  Because the candidate
    set does not depend on the argmax, the estimate is nondecreasing in delta.
    """
    if paths < 1000:
        raise ValueError("psi_smallball needs at least 1000 paths")
    grid = np.sort(np.asarray(lambda_grid, dtype=float).ravel())
    if grid.size == 0:
        raise ValueError("lambda_grid must be nonempty")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    continuous = model.sigma > 0.0 or isinstance(model.jumps, TemperedStable)
    if delta == 0.0 and continuous:
        return McEstimate(0.0, 0.0, paths, seed, "psi", {"argmax": float(grid[0])})
    xs = np.sort(sample_x1(model, paths, seed, workers))
    tol = 1e-12 * (1.0 + float(np.max(np.abs(xs))))
    lo, hi = grid[0], grid[-1]
    cand = np.concatenate([grid, np.clip(xs + delta, lo, hi)])
    counts = _window_counts(xs, cand, delta, tol)
    best = int(np.argmax(counts))
    lam = float(cand[best])
    p = counts[best] / paths
    se = math.sqrt(max(p * (1.0 - p), 0.0) / paths)
    if grid.size > 1 and (lam - lo < delta or hi - lam < delta):
        # the best window pokes out of the searched hull
        warnings.warn(f"small-ball maximizer {lam:g} is within delta of the grid boundary",
                      GridTooCoarse, stacklevel=2)
    grid_counts = counts[: grid.size]
    return McEstimate(float(p), se, paths, seed, "psi",
                      {"argmax": lam, "delta": float(delta),
                       "grid_value": float(grid_counts.max() / paths)})
