"""Data-independent corrections for Viterbi training of unit-variance mixtures.

``mu_bar`` is the large-sample limit of the per-cell sample means when the
data follow the mixture whose parameters also define the partition.  The
first-order adjustment adds ``theta - mu_bar`` to the cell means; the
second-order one inverts ``mu_bar`` along the one-parameter family of
two-component parameters that share a decision boundary.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .numerics import (Tolerance, find_root_monotone, log_truncated_mass,
                       truncated_conditional_mean)
from .partition import voronoi_partition

# below this cell mass the direct moment ratio loses digits; switch to log space
_TINY_MASS = 1e-100

_TWO_CELLS = np.array([0, 1], dtype=np.int64)

DEFAULT_BRACKET = (1e-6, 50.0)
DEFAULT_SCAN_POINTS = 64
INVERT_TOL = Tolerance(abs_tol=1e-12, rel_tol=1e-14, max_eval=200)


class AdjustmentMode(enum.Enum):
    EXACT = "exact"        # full mixture density inside each cell
    ISOLATED = "isolated"  # only the cell's own component (well-separated approximation)


def _stable_cell_mean(means, weights, intervals):
    lm = []
    cm = []
    for a, b in intervals:
        lm.append(np.log(weights) + log_truncated_mass(means, a, b))
        cm.append(truncated_conditional_mean(means, a, b))
    lm = np.concatenate(lm)
    cm = np.concatenate(cm)
    ok = np.isfinite(lm)
    if not ok.any():
        return math.nan
    w = np.exp(lm[ok] - lm[ok].max())
    return float(np.dot(w, cm[ok]) / w.sum())


def _cell_moments(params, part, exact):
    return _kernels.cell_moments(part.breakpoints, part.labels, params.means, params.weights, exact)


def mu_bar(params, mode=AdjustmentMode.EXACT, partition=None):
    """Limiting cell means; nan for a cell with no mass (possible only for K > 2)."""
    part = voronoi_partition(params) if partition is None else partition
    exact = mode is AdjustmentMode.EXACT
    mass, first = _cell_moments(params, part, exact)
    if (mass > _TINY_MASS).all():
        return first / mass
    with np.errstate(invalid="ignore", divide="ignore"):
        out = first / mass
    for l in np.flatnonzero(~(mass > _TINY_MASS)):
        cell = part.cells[l]
        if not cell:
            out[l] = np.nan
            continue
        idx = list(range(params.k)) if exact else [l]
        out[l] = _stable_cell_mean(params.means[idx], params.weights[idx], cell)
    return out


def adjustment_delta(params, mode=AdjustmentMode.EXACT, partition=None):
    """theta - mu_bar(theta); zero for cells with no mass."""
    mu = mu_bar(params, mode, partition)
    delta = params.means - mu
    delta[np.isnan(mu)] = 0.0
    return delta


def cell_masses(params, partition=None):
    """Mixture probability of each cell: sum_i p_i * P_i(S_l)."""
    part = voronoi_partition(params) if partition is None else partition
    return _cell_moments(params, part, True)[0]


def weight_correction(params, partition=None):
    """p_l minus the mixture mass of cell l; the entries sum to zero."""
    return params.weights - cell_masses(params, partition)


@dataclass(frozen=True)
class IsoPartitionFamily:
    """Two-component parameters theta(a) = (c(a) - a, c(a) + a) whose boundary is t.

    c(a) = t - log(p1/p2) / (2a); with equal weights c(a) = t.
    """

    t: float
    weights: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) != 2 or min(w) <= 0:
            raise ValueError("need two positive weights")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_params(cls, params):
        if params.k != 2:
            raise ValueError("iso-partition family needs K = 2")
        return cls(voronoi_partition(params).boundary(), tuple(params.weights))

    @property
    def log_ratio(self):
        return math.log(self.weights[0] / self.weights[1])

    def center(self, a):
        return self.t - self.log_ratio / (2.0 * np.asarray(a, dtype=float))

    def means(self, a):
        c = self.center(a)
        return c - a, c + a

    def means_array(self, a):
        c = self.t - self.log_ratio / (2.0 * a)
        return np.array([c - a, c + a])

    @property
    def breakpoints(self):
        return np.array([self.t])

    @property
    def weight_array(self):
        return np.array(self.weights)


def mu_restricted(family, a, l):
    """Limiting mean of cell l (0 = left of t, 1 = right) at theta(a); array-friendly in a."""
    if l not in (0, 1):
        raise ValueError("component index must be 0 or 1")
    if np.ndim(a) == 0:
        if not a > 0:
            raise ValueError("half-gap must be positive")
        mass, first = _kernels.cell_moments(family.breakpoints, _TWO_CELLS,
                                            family.means_array(a), family.weight_array, True)
        if mass[l] > _TINY_MASS:
            return float(first[l] / mass[l])
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 0):
        raise ValueError("half-gap must be positive")
    m1, m2 = family.means(a_arr)
    t = family.t
    lo, hi = (-np.inf, t) if l == 0 else (t, np.inf)
    lw = np.log(family.weights)
    l1 = lw[0] + log_truncated_mass(m1, lo, hi)
    l2 = lw[1] + log_truncated_mass(m2, lo, hi)
    c1 = truncated_conditional_mean(m1, lo, hi)
    c2 = truncated_conditional_mean(m2, lo, hi)
    top = np.maximum(l1, l2)
    w1 = np.exp(l1 - top)
    w2 = np.exp(l2 - top)
    out = (w1 * c1 + w2 * c2) / (w1 + w2)
    return out if out.ndim else float(out)


def va2_invert(family, mu_hat, l, bracket=DEFAULT_BRACKET, tol=INVERT_TOL,
               scan_points=DEFAULT_SCAN_POINTS, multiple="outer"):
    """Half-gap a with mu_restricted(family, a, l) == mu_hat, or None.

    A log-spaced pre-scan locates sign changes.  None when there is no sign
    change.  With unequal weights the map of the heavier component rises
    and then falls, so two crossings are common; ``multiple="outer"`` takes
    the crossing on the large-a branch (the one that depends on the
    partition alone), ``multiple="reject"`` returns None instead.
    """
    a_min, a_max = bracket
    if not 0 < a_min < a_max:
        raise ValueError("bracket must satisfy 0 < a_min < a_max")
    if multiple not in ("outer", "reject"):
        raise ValueError(f"unknown multiple-root policy {multiple!r}")
    if not math.isfinite(mu_hat):
        return None
    grid = np.geomspace(a_min, a_max, scan_points)
    g = mu_restricted(family, grid, l) - mu_hat
    s = np.sign(g)
    exact = np.flatnonzero(s == 0)
    changes = np.flatnonzero(s[:-1] * s[1:] < 0)
    n_roots = changes.size + exact.size
    if n_roots == 0:
        return None
    if n_roots > 1 and multiple == "reject":
        return None
    last_change = changes[-1] if changes.size else -1
    if exact.size and exact[-1] > last_change:
        return float(grid[exact[-1]])
    lo, hi = grid[last_change], grid[last_change + 1]
    return find_root_monotone(lambda a: mu_restricted(family, a, l) - mu_hat, float(lo), float(hi), tol)
