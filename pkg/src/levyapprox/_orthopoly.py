"""Normalized Hermite and Charlier polynomials.

Both families are evaluated by three-term recurrences in orthonormal form, so
``psi_n`` and ``charlier_n`` have unit second moment under N(0, 1) and
Poisson(a) respectively.  The chaos code never forms n! explicitly.
"""
import math

import numpy as np
from scipy.special import gammaln

_RESCALE = 1e150


def hermite_table(w, n_max):
    """Return ``psi_n(w)`` for ``n = 0..n_max`` as an array of shape (n_max+1, len(w)).

    ``psi_n = He_n / sqrt(n!)``.  Only use for moderate ``|w|`` and ``n_max``;
    see :func:`hermite_projections` for large problems.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.empty((n_max + 1, w.size))
    out[0] = 1.0
    if n_max >= 1:
        out[1] = w
    for n in range(1, n_max):
        out[n + 1] = (w * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def hermite_series(w, coeffs):
    """Evaluate ``sum_n coeffs[n] psi_n(w)`` without storing the table."""
    w = np.asarray(w, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    acc = np.zeros_like(w)
    prev = np.zeros_like(w)
    cur = np.ones_like(w)
    for n, a in enumerate(coeffs):
        if a != 0.0:
            acc += a * cur
        nxt = (w * cur - math.sqrt(n) * prev) / math.sqrt(n + 1)
        prev, cur = cur, nxt
    return acc


def hermite_projections(w, weights, n_max):
    """Return ``sum_i weights[i] * psi_n(w[i]) * sqrt(phi(w[i]))`` for n = 0..n_max.

    The recurrence runs on the Hermite functions ``psi_n sqrt(phi)``, which stay
    bounded, so nodes far in the tails neither overflow nor underflow while n is
    in the thousands.  ``weights`` is expected to carry the other ``sqrt(phi)``
    factor together with the payoff and quadrature weights.
    """
    w = np.asarray(w, dtype=float)
    weights = np.asarray(weights, dtype=float)
    out = np.empty(n_max + 1)
    prev = np.zeros_like(w)
    cur = np.exp(-0.25 * w * w) / (2.0 * math.pi) ** 0.25
    for n in range(n_max + 1):
        out[n] = weights @ cur
        nxt = (w * cur - math.sqrt(n) * prev) / math.sqrt(n + 1)
        prev, cur = cur, nxt
    return out


def _charlier_primal(k, a, n_max):
    # forward in degree at fixed lattice points; accurate while n <= k
    k = np.asarray(k, dtype=float)
    out = np.empty((n_max + 1, k.size))
    out[0] = 1.0
    if n_max >= 1:
        out[1] = (k - a) / math.sqrt(a)
    # entries with n > k may overflow; charlier_table replaces them
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_max):
            out[n + 1] = ((k - n - a) * out[n] / math.sqrt((n + 1) * a)
                          - math.sqrt(n / (n + 1)) * out[n - 1])
    return out


def _charlier_dual_log(x, a, j_max):
    """log|D_j(x)| and sign for degrees j = 0..j_max at points x (normalized Charlier)."""
    x = np.asarray(x, dtype=float)
    logmag = np.empty((j_max + 1, x.size))
    sign = np.empty((j_max + 1, x.size))
    scale = np.zeros_like(x)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for j in range(j_max + 1):
        with np.errstate(divide="ignore"):
            logmag[j] = np.log(np.abs(cur)) + scale
        sign[j] = np.sign(cur)
        nxt = ((x - j - a) * cur - math.sqrt(j * a) * prev) / math.sqrt((j + 1) * a)
        big = np.abs(nxt) > _RESCALE
        if np.any(big):
            prev = np.where(big, cur / _RESCALE, cur)
            nxt = np.where(big, nxt / _RESCALE, nxt)
            scale = scale + np.where(big, math.log(_RESCALE), 0.0)
        else:
            prev = cur
        cur = nxt
    return logmag, sign


def charlier_table(k, a, n_max):
    """Normalized Charlier polynomials ``c_n(k; a)`` at integer lattice points.

    Returns an array of shape (n_max+1, len(k)).  For ``n > k`` the forward
    recurrence in n loses all accuracy (the wanted solution is minimal), so
    those entries come from the self-duality ``C_n(k) = (-a)^(n-k) C_k(n)`` of
    the monic polynomials, evaluated forward in the degree k at the point n.
    """
    k = np.atleast_1d(np.asarray(k)).astype(np.int64)
    if np.any(k < 0):
        raise ValueError("lattice points must be nonnegative")
    if a <= 0:
        raise ValueError("Poisson parameter must be positive")
    out = _charlier_primal(k, a, n_max)
    k_max = int(k.max()) if k.size else 0
    if n_max > int(k.min()):
        n_vals = np.arange(n_max + 1)
        logmag, sign = _charlier_dual_log(n_vals, a, min(k_max, n_max))
        log_a = math.log(a)
        lg = gammaln(np.arange(max(n_max, k_max) + 2) + 1.0)  # log n!
        for col, kk in enumerate(k):
            if kk >= n_max:
                continue
            n = n_vals[kk + 1:]
            lm = (logmag[kk, kk + 1:] + 0.5 * (lg[kk] - lg[n])
                  + 0.5 * (n - kk) * log_a)
            sgn = sign[kk, kk + 1:] * np.where((n - kk) % 2 == 0, 1.0, -1.0)
            out[kk + 1:, col] = sgn * np.exp(lm)
    return out
