"""Payoff functions f with F = f(X_1)."""
from dataclasses import dataclass

import numpy as np

from .exceptions import NonDifferentiable


def mollifier_eval(K, eps, x):
    """Clamped cubic smoothstep: 0 below ``K``, 1 above ``K + eps``.

    The slope peaks at ``1.5 / eps`` in the middle of the ramp, inside the
    admissible ``2 / eps``.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    s = np.clip((np.asarray(x, dtype=float) - K) / eps, 0.0, 1.0)
    out = s * s * (3.0 - 2.0 * s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Digital:
    K: float = 0.0
    kind = "digital"

    def __call__(self, x):
        return (np.asarray(x, dtype=float) > self.K).astype(float)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x == self.K):
            raise NonDifferentiable(f"the digital payoff jumps at {self.K}")
        return np.zeros_like(x)

    @property
    def breakpoints(self):
        return (self.K,)

    def to_dict(self):
        return {"type": "digital", "K": self.K}


@dataclass(frozen=True)
class MollifiedDigital:
    K: float = 0.0
    eps: float = 0.5
    kind = "mollified"

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")

    def __call__(self, x):
        return np.asarray(mollifier_eval(self.K, self.eps, x), dtype=float)

    def derivative(self, x):
        s = np.clip((np.asarray(x, dtype=float) - self.K) / self.eps, 0.0, 1.0)
        return 6.0 * s * (1.0 - s) / self.eps

    @property
    def breakpoints(self):
        return (self.K, self.K + self.eps)

    def to_dict(self):
        return {"type": "mollified", "K": self.K, "eps": self.eps}


@dataclass(frozen=True)
class Polynomial:
    """``f(x) = sum_j coefficients[j] x^j``."""

    coefficients: tuple
    kind = "polynomial"

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.coefficients))
        object.__setattr__(self, "coefficients", c or (0.0,))

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coefficients)

    def derivative(self, x):
        d = np.polynomial.polynomial.polyder(self.coefficients)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), d)

    @property
    def breakpoints(self):
        return ()

    @property
    def degree(self):
        nz = np.nonzero(self.coefficients)[0]
        return int(nz[-1]) if nz.size else 0

    def to_dict(self):
        return {"type": "polynomial", "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolation of ``values`` on ``grid``, constant outside."""

    grid: tuple
    values: tuple
    kind = "tabulated"

    def __post_init__(self):
        g = tuple(float(v) for v in self.grid)
        v = tuple(float(v) for v in self.values)
        if len(g) != len(v) or len(g) < 2:
            raise ValueError("grid and values need equal length >= 2")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        g = np.asarray(self.grid)
        slopes = np.diff(self.values) / np.diff(g)
        if np.any(np.isin(x, g)):
            k = np.searchsorted(g, x[np.isin(x, g)])
            left = np.concatenate([[0.0], slopes])[k]
            right = np.concatenate([slopes, [0.0]])[k]
            if np.any(left != right):
                raise NonDifferentiable("tabulated payoff has a kink at a grid point")
        idx = np.searchsorted(g, x, side="right") - 1
        inside = (idx >= 0) & (idx < slopes.size)
        return np.where(inside, slopes[np.clip(idx, 0, slopes.size - 1)], 0.0)

    @property
    def breakpoints(self):
        return self.grid

    def to_dict(self):
        return {"type": "tabulated", "grid": list(self.grid), "values": list(self.values)}


def payoff_from_dict(d):
    if d is None:
        return None
    kind = d.get("type")
    if kind == "digital":
        return Digital(float(d["K"]))
    if kind == "mollified":
        return MollifiedDigital(float(d["K"]), float(d["eps"]))
    if kind == "polynomial":
        return Polynomial(tuple(d["coefficients"]))
    if kind == "tabulated":
        return Tabulated(tuple(d["grid"]), tuple(d["values"]))
    raise ValueError(f"unknown payoff type {kind!r}")


def is_affine(payoff):
    return isinstance(payoff, Polynomial) and payoff.degree <= 1


def growth_degree(payoff):
    """Polynomial degree of growth; 0 for bounded payoffs."""
    return payoff.degree if isinstance(payoff, Polynomial) else 0

