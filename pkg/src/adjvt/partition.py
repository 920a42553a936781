"""Decision regions of the weighted-density argmax rule on the real line."""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels


def pairwise_boundary(theta_i, theta_j, p_i, p_j):
    """Point where p_i*phi(x - theta_i) equals p_j*phi(x - theta_j)."""
    if theta_i == theta_j:
        raise ValueError("equal means have no finite boundary")
    if p_i <= 0 or p_j <= 0:
        raise ValueError("weights must be positive")
    return 0.5 * (theta_i + theta_j) + math.log(p_i / p_j) / (theta_j - theta_i)


def _scores(means, log_weights, x):
    d = np.asarray(x, dtype=float)[..., None] - means
    return log_weights - 0.5 * d * d


def argmax_component(params, x):
    """Direct pointwise argmax of p_l*phi(x - theta_l); ties go to the lowest index."""
    return np.argmax(_scores(params.means, np.log(params.weights), x), axis=-1)


@dataclass(frozen=True, eq=False)
class Partition1D:
    """Labelled intervals (-inf, b_0], (b_0, b_1], ..., (b_{M-1}, inf)."""

    breakpoints: np.ndarray
    labels: np.ndarray
    k: int

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).reshape(-1)
        lab = np.array(self.labels, dtype=np.int64).reshape(-1)
        if lab.size != bp.size + 1:
            raise ValueError("need one more label than breakpoints")
        if bp.size and not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def _trusted(cls, breakpoints, labels, k):
        obj = object.__new__(cls)
        object.__setattr__(obj, "breakpoints", breakpoints)
        object.__setattr__(obj, "labels", labels)
        object.__setattr__(obj, "k", k)
        return obj

    @cached_property
    def cells(self):
        """Per component, the tuple of (lower, upper) intervals it owns."""
        edges = np.concatenate(([-np.inf], self.breakpoints, [np.inf]))
        cells = [[] for _ in range(self.k)]
        for idx, lab_i in enumerate(self.labels):
            cells[lab_i].append((float(edges[idx]), float(edges[idx + 1])))
        return tuple(tuple(c) for c in cells)

    def is_empty(self, l):
        return not self.cells[l]

    def boundary(self):
        """The single breakpoint of a two-cell partition."""
        if self.breakpoints.size != 1:
            raise ValueError(f"partition has {self.breakpoints.size} breakpoints, not 1")
        return float(self.breakpoints[0])


_ORDERED = np.array([0, 1], dtype=np.int64)
_SWAPPED = np.array([1, 0], dtype=np.int64)


def voronoi_partition(params):
    means = params.means
    k = params.k
    if k == 1:
        return Partition1D(np.empty(0), [0], 1)
    w = params.weights
    if k == 2:
        if means[0] == means[1]:
            raise ValueError("duplicate means give a degenerate partition")
        # the component with the smaller mean owns the left half-line
        b = pairwise_boundary(float(means[0]), float(means[1]), float(w[0]), float(w[1]))
        return Partition1D._trusted(np.array([b]), _ORDERED if means[0] < means[1] else _SWAPPED, 2)
    if np.unique(means).size != k:
        raise ValueError("duplicate means give a degenerate partition")
    cands = sorted({pairwise_boundary(means[i], means[j], w[i], w[j])
                    for i in range(k) for j in range(i + 1, k)})
    cands = np.array(cands)
    # one probe inside every open interval between candidate boundaries
    span = max(1.0, float(np.ptp(means)), float(np.ptp(cands)))
    probes = np.concatenate(([cands[0] - span], 0.5 * (cands[:-1] + cands[1:]), [cands[-1] + span]))
    lab = argmax_component(params, probes)
    keep = np.flatnonzero(lab[1:] != lab[:-1])
    return Partition1D(cands[keep], np.concatenate(([lab[0]], lab[keep + 1])), k)


def classify(partition, x):
    """Component index of the interval containing x (breakpoints go left)."""
    idx = np.searchsorted(partition.breakpoints, x, side="left")
    out = partition.labels[idx]
    return int(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class SubsampleStats:
    counts: np.ndarray
    sums: np.ndarray

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def empty(self):
        return self.counts == 0

    @property
    def cell_means(self):
        """Subsample MLEs; nan marks an empty cell."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    @property
    def cell_fractions(self):
        return self.counts / self.counts.sum()


def subsample_stats(partition, sample):
    x = np.ascontiguousarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    counts, sums = _kernels.cell_stats(x, partition.breakpoints, partition.labels, partition.k)
    return SubsampleStats(counts, sums)
