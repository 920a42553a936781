"""Scalar normal functions, unit-variance truncated moments and a bracketing root finder."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-12
    rel_tol: float = 0.0
    max_eval: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol >= 0:
            raise ValueError("rel_tol must be nonnegative")
        if self.max_eval < 1:
            raise ValueError("max_eval must be at least 1")


def std_normal_pdf(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_normal_cdf(x):
    # erfc keeps full relative precision in the lower tail; Phi(+-inf) is exactly 1/0
    return 0.5 * math.erfc(-x / SQRT2)


def std_normal_sf(x):
    return 0.5 * math.erfc(x / SQRT2)


def _check_interval(a, b):
    if a > b:
        raise ValueError(f"empty interval: lower bound {a} exceeds upper bound {b}")


def truncated_mass(m, a, b):
    """P(a < X < b) for X ~ N(m, 1)."""
    _check_interval(a, b)
    za, zb = a - m, b - m
    if za > 0.0:
        return std_normal_sf(za) - std_normal_sf(zb)
    return std_normal_cdf(zb) - std_normal_cdf(za)


def truncated_first_moment(m, a, b):
    """Integral of x * phi(x - m) over (a, b)."""
    _check_interval(a, b)
    if a == b:
        return 0.0
    za, zb = a - m, b - m
    pa = 0.0 if math.isinf(za) else std_normal_pdf(za)
    pb = 0.0 if math.isinf(zb) else std_normal_pdf(zb)
    return m * truncated_mass(m, a, b) - (pb - pa)


def log_truncated_mass(m, a, b):
    """log P(a < X < b) for X ~ N(m, 1), accurate far into either tail.

    Works on numpy arrays (broadcasting m, a, b); returns -inf for empty intervals.
    """
    m, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (m, a, b)))
    za, zb = a - m, b - m
    # reflect so that the interval never lies entirely in the lower tail
    flip = zb <= 0.0
    lo = np.where(flip, -zb, za)
    hi = np.where(flip, -za, zb)
    out = np.full(lo.shape, -np.inf)
    upper = lo > 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # both ends in the upper tail: Q(lo) - Q(hi) = Q(lo) * (1 - Q(hi)/Q(lo))
        ex_lo = special.erfcx(lo / SQRT2)
        ratio = np.where(np.isinf(hi), 0.0,
                         special.erfcx(hi / SQRT2) / ex_lo * np.exp(-0.5 * (hi * hi - lo * lo)))
        tail = np.log(0.5) - 0.5 * lo * lo + np.log(ex_lo) + np.log1p(-ratio)
        straddle = np.log(special.ndtr(hi) - special.ndtr(lo))
    out = np.where(upper, tail, straddle)
    out = np.where(hi <= lo, -np.inf, out)
    return out if out.ndim else float(out)


def truncated_conditional_mean(m, a, b):
    """E[X | a < X < b] for X ~ N(m, 1), stable in the tails; nan for empty intervals.

    Array-friendly like ``log_truncated_mass``.
    """
    m, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (m, a, b)))
    za, zb = a - m, b - m
    flip = zb <= 0.0
    lo = np.where(flip, -zb, za)
    hi = np.where(flip, -za, zb)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ex_lo = special.erfcx(lo / SQRT2)
        gap = np.where(np.isinf(hi), np.inf, 0.5 * (hi * hi - lo * lo))
        decay = np.exp(-gap)
        ratio = np.where(np.isinf(hi), 0.0, special.erfcx(hi / SQRT2) / ex_lo * decay)
        # (phi(lo) - phi(hi)) / (Q(lo) - Q(hi)) with the common exp(-lo^2/2) cancelled
        tail_shift = 2.0 * INV_SQRT_2PI * (1.0 - decay) / (ex_lo * (1.0 - ratio))
        phi_lo = np.where(np.isinf(lo), 0.0, INV_SQRT_2PI * np.exp(-0.5 * lo * lo))
        phi_hi = np.where(np.isinf(hi), 0.0, INV_SQRT_2PI * np.exp(-0.5 * hi * hi))
        mid_shift = (phi_lo - phi_hi) / (special.ndtr(hi) - special.ndtr(lo))
    shift = np.where(lo > 0.0, tail_shift, mid_shift)
    out = m + np.where(flip, -shift, shift)
    out = np.where(hi <= lo, np.nan, out)
    return out if out.ndim else float(out)


def find_root_monotone(f, lo, hi, tol=Tolerance()):
    """Root of a continuous function with a sign change on [lo, hi].

    Bisection safeguarded secant: a secant point is accepted only while it
    keeps shrinking the bracket by at least half, so convergence is never
    slower than bisection.  Returns None when f(lo) and f(hi) share a sign.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    flo, fhi = f(lo), f(hi)
    evals = 2
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        return None
    use_secant = True
    while evals < tol.max_eval:
        width = hi - lo
        if width <= tol.abs_tol + tol.rel_tol * min(abs(lo), abs(hi)):
            break
        x = 0.5 * (lo + hi)
        if use_secant and fhi != flo:
            s = hi - fhi * (hi - lo) / (fhi - flo)
            if lo < s < hi:
                x = s
        fx = f(x)
        evals += 1
        if fx == 0.0:
            return x
        if (fx < 0.0) == (flo < 0.0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        use_secant = (hi - lo) <= 0.5 * width
    # the endpoint with the smaller residual
    return lo if abs(flo) <= abs(fhi) else hi
