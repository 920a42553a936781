"""Unit-variance univariate Gaussian mixtures: parameters, density, likelihood, sampling."""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .numerics import INV_SQRT_2PI

WEIGHT_SUM_TOL = 1e-12
SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class MixtureParams:
    """Component means and mixture weights; every component has variance 1."""

    means: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=float).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if means.size < 1:
            raise ValueError("need at least one component")
        if weights.shape != means.shape:
            raise ValueError(f"{means.size} means but {weights.size} weights")
        if not np.all(np.isfinite(means)):
            raise ValueError("means must be finite")
        if not np.all(weights > 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        means.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def _trusted(cls, means, weights):
        """Skip validation; for arrays produced by the estimators themselves."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "means", means)
        object.__setattr__(obj, "weights", weights)
        return obj

    @classmethod
    def equal_weights(cls, means):
        means = np.asarray(means, dtype=float)
        return cls(means, np.full(means.size, 1.0 / means.size))

    @property
    def k(self):
        return self.means.size

    def with_means(self, means):
        return MixtureParams(means, self.weights)

    def __eq__(self, other):
        if not isinstance(other, MixtureParams):
            return NotImplemented
        return np.array_equal(self.means, other.means) and np.array_equal(self.weights, other.weights)

    def __repr__(self):
        return f"MixtureParams(means={self.means.tolist()}, weights={self.weights.tolist()})"


def normalize_weights(w):
    w = np.asarray(w, dtype=float)
    return w / w.sum()


#: the data-generating model of the simulation study
TRUE_PARAMS = MixtureParams([-2.5, 0.0], [0.7, 0.3])


@dataclass(frozen=True)
class SeedSpec:
    base_seed: int
    replication_index: int = 0

    def __post_init__(self):
        if self.replication_index < 0:
            raise ValueError("replication_index must be nonnegative")

    def generator(self):
        """Counter-based Philox stream keyed by (base_seed, replication_index).

        Streams are derived directly from the pair, so replication i can be
        regenerated without touching any other replication.
        """
        ss = np.random.SeedSequence(self.base_seed & SEED_MASK, spawn_key=(self.replication_index,))
        return np.random.Generator(np.random.Philox(ss))


def mixture_pdf(params, x):
    """Mixture density at x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    d = x[..., None] - params.means
    out = INV_SQRT_2PI * np.exp(-0.5 * d * d) @ params.weights
    return out if out.ndim else float(out)


def log_likelihood(params, sample):
    x = np.ascontiguousarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("log-likelihood of an empty sample")
    return float(_kernels.loglik(x, params.means, np.log(params.weights)))


def simulate_sample(true_params, n, seed, return_labels=False):
    """Draw n observations: a component index from the weights, then N(mean, 1).

    With ``return_labels`` the hidden component indices are returned too.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = seed.generator() if isinstance(seed, SeedSpec) else SeedSpec(int(seed)).generator()
    labels = rng.choice(true_params.k, size=n, p=true_params.weights)
    x = true_params.means[labels] + rng.standard_normal(n)
    if return_labels:
        return x, labels
    return x


def write_sample_csv(path, sample):
    """One value per line, 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(sample, dtype=float):
            fh.write(f"{v:.17g}\n")


def read_sample_csv(path):
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            v = float(line.split(",")[0])
            if not math.isfinite(v):
                raise ValueError(f"{path}:{lineno}: non-finite value")
            values.append(v)
    return np.array(values, dtype=float)
