"""Hot inner loops over the sample.

Each kernel exists twice: a plain-numpy version and a loop version that
numba compiles.  ``cell_stats`` and ``em_accumulate`` point at the compiled
loop unless numba is disabled (see ``_accel``).
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def cell_stats_numpy(x, breakpoints, labels, k):
    # side="left": a point equal to a breakpoint belongs to the interval on its left
    interval = np.searchsorted(breakpoints, x, side="left")
    comp = labels[interval]
    counts = np.bincount(comp, minlength=k).astype(np.int64)
    sums = np.bincount(comp, weights=x, minlength=k)
    return counts, sums


def _cell_stats_loop(x, breakpoints, labels, k):
    counts = np.zeros(k, dtype=np.int64)
    sums = np.zeros(k, dtype=np.float64)
    m = breakpoints.shape[0]
    for i in range(x.shape[0]):
        xi = x[i]
        j = 0
        while j < m and xi > breakpoints[j]:
            j += 1
        c = labels[j]
        counts[c] += 1
        sums[c] += xi
    return counts, sums


def em_accumulate_numpy(x, means, log_weights):
    logp = log_weights[None, :] - 0.5 * (x[:, None] - means[None, :]) ** 2 - _LOG_SQRT_2PI
    top = logp.max(axis=1)
    r = np.exp(logp - top[:, None])
    tot = r.sum(axis=1)
    r /= tot[:, None]
    loglik = float(np.sum(top + np.log(tot)))
    return r.sum(axis=0), r.T @ x, loglik


def _em_accumulate_loop(x, means, log_weights):
    k = means.shape[0]
    rsum = np.zeros(k)
    rxsum = np.zeros(k)
    logp = np.empty(k)
    loglik = 0.0
    for i in range(x.shape[0]):
        xi = x[i]
        top = -np.inf
        for l in range(k):
            d = xi - means[l]
            logp[l] = log_weights[l] - 0.5 * d * d - _LOG_SQRT_2PI
            if logp[l] > top:
                top = logp[l]
        tot = 0.0
        for l in range(k):
            logp[l] = math.exp(logp[l] - top)
            tot += logp[l]
        for l in range(k):
            r = logp[l] / tot
            rsum[l] += r
            rxsum[l] += r * xi
        loglik += top + math.log(tot)
    return rsum, rxsum, loglik


def loglik_numpy(x, means, log_weights):
    return em_accumulate_numpy(x, means, log_weights)[2]


def _loglik_loop(x, means, log_weights):
    k = means.shape[0]
    out = 0.0
    for i in range(x.shape[0]):
        xi = x[i]
        top = -np.inf
        for l in range(k):
            d = xi - means[l]
            v = log_weights[l] - 0.5 * d * d
            if v > top:
                top = v
        tot = 0.0
        for l in range(k):
            d = xi - means[l]
            tot += math.exp(log_weights[l] - 0.5 * d * d - top)
        out += top + math.log(tot) - _LOG_SQRT_2PI
    return out


if HAVE_NUMBA:
    cell_stats_jit = njit(cache=True)(_cell_stats_loop)
    em_accumulate_jit = njit(cache=True)(_em_accumulate_loop)
    loglik_jit = njit(cache=True)(_loglik_loop)
    cell_stats = cell_stats_jit
    em_accumulate = em_accumulate_jit
    loglik = loglik_jit
else:
    cell_stats_jit = em_accumulate_jit = loglik_jit = None
    cell_stats = cell_stats_numpy
    em_accumulate = em_accumulate_numpy
    loglik = loglik_numpy


def _cell_moments_loop(breakpoints, labels, means, weights, exact):
    """Per-cell sum_i p_i * mass_i and sum_i p_i * first-moment_i (own component only when not exact)."""
    k = means.shape[0]
    m = breakpoints.shape[0]
    mass = np.zeros(k)
    first = np.zeros(k)
    for j in range(m + 1):
        a = -np.inf if j == 0 else breakpoints[j - 1]
        b = np.inf if j == m else breakpoints[j]
        l = labels[j]
        for i in range(k):
            if not exact and i != l:
                continue
            mu = means[i]
            za = a - mu
            zb = b - mu
            if za > 0.0:
                q = 0.5 * (math.erfc(za / _SQRT2) - math.erfc(zb / _SQRT2))
            else:
                q = 0.5 * (math.erfc(-zb / _SQRT2) - math.erfc(-za / _SQRT2))
            pa = 0.0 if za == -np.inf else math.exp(-0.5 * za * za) * _INV_SQRT_2PI
            pb = 0.0 if zb == np.inf else math.exp(-0.5 * zb * zb) * _INV_SQRT_2PI
            mass[l] += weights[i] * q
            first[l] += weights[i] * (mu * q - (pb - pa))
    return mass, first


cell_moments_py = _cell_moments_loop
if HAVE_NUMBA:
    cell_moments_jit = njit(cache=True)(_cell_moments_loop)
    cell_moments = cell_moments_jit
else:
    cell_moments_jit = None
    cell_moments = _cell_moments_loop
