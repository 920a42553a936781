"""One-step updates and the iteration driver for VT, VA1, VA2 and EM."""
import enum
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .adjustment import (AdjustmentMode, IsoPartitionFamily, adjustment_delta, va2_invert,
                         weight_correction)
from .model import MixtureParams
from .partition import subsample_stats, voronoi_partition

WEIGHT_FLOOR = 1e-6


class Algorithm(enum.Enum):
    VT = "vt"
    VA1 = "va1"
    VA2 = "va2"
    EM = "em"

    @property
    def label(self):
        return self.name


class Termination(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class RunConfig:
    step_tol: float = 1e-3
    max_iter: int = 1000
    weights_known: bool = True
    mode: AdjustmentMode = AdjustmentMode.EXACT
    va2_multiple: str = "outer"
    # unknown weights: VT also adds the weight correction D, the same weight update VA1 uses
    vt_weight_correction: bool = True
    keep_trajectory: bool = False

    def __post_init__(self):
        if not self.step_tol > 0:
            raise ValueError("step_tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass(frozen=True)
class EstimationResult:
    algorithm: Algorithm
    final: MixtureParams
    iterations: int
    per_iter_seconds: float
    total_seconds: float
    terminated: Termination
    trajectory: tuple = None


def _as_array(sample):
    x = np.ascontiguousarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    return x


def _finish_weights(w, old, empty, floor=WEIGHT_FLOOR):
    """Freeze empty cells, clip to [floor, 1] and renormalize when anything was touched."""
    touched = bool(empty.any())
    if touched:
        w = np.where(empty, old, w)
    if touched or w.min() < floor or w.max() > 1.0 or abs(w.sum() - 1.0) > 1e-13:
        w = np.clip(w, floor, 1.0)
        w = w / w.sum()
    return w


def _viterbi_pass(params, x):
    part = voronoi_partition(params)
    stats = subsample_stats(part, x)
    empty = stats.counts == 0
    if empty.any():
        mu_hat = np.where(empty, params.means, stats.sums / np.maximum(stats.counts, 1))
    else:
        mu_hat = stats.sums / stats.counts
    return part, stats, empty, mu_hat


def vt_step(params, sample, weights_known=True, correct_weights=False):
    """Cell means of the current partition; an empty cell keeps its mean (and weight).

    Unknown weights become the cell fractions, plus D(params) when
    ``correct_weights`` is set.
    """
    x = _as_array(sample)
    part, stats, empty, mu_hat = _viterbi_pass(params, x)
    if weights_known:
        weights = params.weights
    else:
        w = stats.cell_fractions
        if correct_weights:
            w = w + weight_correction(params, part)
        weights = _finish_weights(w, params.weights, empty)
    return MixtureParams._trusted(mu_hat, weights)


def va1_step(params, sample, weights_known=True, mode=AdjustmentMode.EXACT):
    """vt_step plus the data-independent corrections Delta(params) and D(params)."""
    x = _as_array(sample)
    part, stats, empty, mu_hat = _viterbi_pass(params, x)
    delta = adjustment_delta(params, mode, part)
    means = mu_hat + delta
    if empty.any():
        means[empty] = params.means[empty]
    if weights_known:
        weights = params.weights
    else:
        weights = _finish_weights(stats.cell_fractions + weight_correction(params, part),
                                  params.weights, empty)
    return MixtureParams._trusted(means, weights)


def va2_step(params, sample, weights_known=True, multiple="outer", mode=AdjustmentMode.EXACT):
    """Invert the limiting cell-mean map along the iso-partition family, per component.

    A component whose inversion fails gets the VA1 update instead.
    """
    if params.k != 2:
        raise ValueError(f"VA2 needs K = 2, got K = {params.k}")
    x = _as_array(sample)
    part, stats, empty, mu_hat = _viterbi_pass(params, x)
    means = mu_hat.copy()
    ordered = part.labels[0] == 0
    family = IsoPartitionFamily(part.boundary(), tuple(params.weights)) if ordered else None
    delta = None
    for l in range(2):
        if empty[l]:
            continue
        a = va2_invert(family, float(mu_hat[l]), l, multiple=multiple) if ordered else None
        if a is not None:
            means[l] = family.means_array(a)[l]
            continue
        if delta is None:
            delta = adjustment_delta(params, mode, part)
        means[l] = mu_hat[l] + delta[l]
    if weights_known:
        weights = params.weights
    else:
        weights = _finish_weights(stats.cell_fractions + weight_correction(params, part),
                                  params.weights, empty)
    return MixtureParams._trusted(means, weights)


def em_responsibility_sums(params, sample):
    """(sum_k r_kl, sum_k r_kl x_k, log-likelihood) with r_kl proportional to p_l phi(x_k - theta_l)."""
    x = _as_array(sample)
    return _kernels.em_accumulate(x, params.means, np.log(params.weights))


def em_step(params, sample, weights_known=True):
    x = _as_array(sample)
    rsum, rxsum, _ = _kernels.em_accumulate(x, params.means, np.log(params.weights))
    dead = rsum <= 0.0
    if dead.any():
        means = np.where(dead, params.means, rxsum / np.where(dead, 1.0, rsum))
    else:
        means = rxsum / rsum
    weights = params.weights if weights_known else _finish_weights(rsum / x.size, params.weights, dead)
    return MixtureParams._trusted(means, weights)


def make_step(algorithm, config=RunConfig()):
    wk = config.weights_known
    if algorithm is Algorithm.VT:
        corr = config.vt_weight_correction
        return lambda p, x: vt_step(p, x, wk, corr)
    if algorithm is Algorithm.VA1:
        return lambda p, x: va1_step(p, x, wk, config.mode)
    if algorithm is Algorithm.VA2:
        return lambda p, x: va2_step(p, x, wk, config.va2_multiple, config.mode)
    if algorithm is Algorithm.EM:
        return lambda p, x: em_step(p, x, wk)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_estimator(algorithm, init, sample, config=RunConfig()):
    """Iterate until the L2 change of the means drops below ``config.step_tol``.

    The step that falls below the threshold is counted.  Weights never enter
    the stopping rule.
    """
    if algorithm is Algorithm.VA2 and init.k != 2:
        raise ValueError(f"VA2 needs K = 2, got K = {init.k}")
    x = _as_array(sample)
    step = make_step(algorithm, config)
    cur = init
    traj = [init] if config.keep_trajectory else None
    status = Termination.MAX_ITER
    iterations = 0
    t0 = time.perf_counter()
    while iterations < config.max_iter:
        new = step(cur, x)
        iterations += 1
        moved = float(np.linalg.norm(new.means - cur.means))
        cur = new
        if traj is not None:
            traj.append(cur)
        if moved < config.step_tol:
            status = Termination.CONVERGED
            break
    total = time.perf_counter() - t0
    return EstimationResult(
        algorithm=algorithm,
        final=cur,
        iterations=iterations,
        per_iter_seconds=total / iterations if iterations else 0.0,
        total_seconds=total,
        terminated=status,
        trajectory=tuple(traj) if traj is not None else None,
    )


def warmup():
    """Trigger kernel compilation so the first timed iteration is not charged for it."""
    p = MixtureParams([-1.0, 1.0], [0.6, 0.4])
    x = np.array([-2.0, -0.5, 0.5, 2.0])
    # several steps: read-only (user) and writable (internal) arrays compile separately
    for alg in Algorithm:
        for known in (False, True):
            run_estimator(alg, p, x, RunConfig(weights_known=known, step_tol=1e-300, max_iter=3))
