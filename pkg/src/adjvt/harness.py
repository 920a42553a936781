"""Replicated simulation experiments: presets, per-replication runs, aggregation, tables."""
import enum
import hashlib
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .adjustment import IsoPartitionFamily
from .estimators import Algorithm, RunConfig, Termination, run_estimator, warmup
from .mle import maximize_loglik
from .model import TRUE_PARAMS, MixtureParams, SeedSpec, mixture_pdf, simulate_sample
from .partition import voronoi_partition

BOUNDARY_TOL = 1e-3
MLE_LABEL = "MLE"


class InitRegime(enum.Enum):
    ARBITRARY = "arbitrary"
    TRUE = "true"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    true_params: MixtureParams = TRUE_PARAMS
    replications: int = 1000
    n: int = 1000
    base_seed: int = 0
    algorithms: tuple = (Algorithm.VT, Algorithm.VA1, Algorithm.VA2, Algorithm.EM)
    mle: bool = True
    regime: InitRegime = InitRegime.ARBITRARY
    init_means: tuple = (-1.0, 2.0)
    # starting weights when weights are estimated; None means the true weights
    init_weights: tuple = None
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.n < 1:
            raise ValueError("sample size must be positive")
        if Algorithm.VA2 in self.algorithms and self.true_params.k != 2:
            raise ValueError("VA2 needs K = 2")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "init_means", tuple(float(v) for v in self.init_means))
        if self.init_weights is not None:
            object.__setattr__(self, "init_weights", tuple(float(v) for v in self.init_weights))
        resolve_init(self)

    @property
    def weights_known(self):
        return self.run.weights_known

    @property
    def columns(self):
        cols = [a.label for a in self.algorithms]
        if self.mle:
            cols.append(MLE_LABEL)
        return tuple(cols)


def resolve_init(config):
    """Starting parameters for a configuration.

    Known weights always start (and stay) at the true weights.  BOUNDARY
    takes the half-gap of ``init_means`` and places it exactly on the family
    of parameters sharing the true decision boundary, after checking that
    ``init_means`` already reproduce that boundary to ``BOUNDARY_TOL``.
    """
    truth = config.true_params
    if config.weights_known or config.init_weights is None:
        w = truth.weights
    else:
        w = np.asarray(config.init_weights, dtype=float)
    if config.regime is InitRegime.TRUE:
        return MixtureParams(truth.means, w)
    init = MixtureParams(config.init_means, w)
    if init.k != truth.k:
        raise ValueError(f"init has {init.k} components, model has {truth.k}")
    if config.regime is InitRegime.ARBITRARY:
        return init
    if truth.k != 2:
        raise ValueError("BOUNDARY initialization needs K = 2")
    t_true = voronoi_partition(MixtureParams(truth.means, w)).boundary()
    t_init = voronoi_partition(init).boundary()
    if abs(t_init - t_true) > BOUNDARY_TOL:
        raise ValueError(f"init boundary {t_init:.6f} is not the true boundary {t_true:.6f}")
    half_gap = 0.5 * abs(init.means[1] - init.means[0])
    return MixtureParams(IsoPartitionFamily(t_true, tuple(w)).means_array(half_gap), w)


_TABLE_REGIMES = {
    1: (InitRegime.ARBITRARY, (-1.0, 2.0), True, None),
    2: (InitRegime.TRUE, (-2.5, 0.0), True, None),
    3: (InitRegime.BOUNDARY, (-3.1229, 0.8771), True, None),
    4: (InitRegime.ARBITRARY, (-1.0, 2.0), False, (0.5, 0.5)),
    5: (InitRegime.TRUE, (-2.5, 0.0), False, (0.7, 0.3)),
    6: (InitRegime.BOUNDARY, (-3.1229, 0.8771), False, (0.7, 0.3)),
}
PRESETS = tuple(f"table{i}" for i in _TABLE_REGIMES)


def preset(name, **overrides):
    """Configuration of one of the six simulation tables (``table1`` .. ``table6``)."""
    try:
        idx = int(name.removeprefix("table"))
        regime, init, known, init_w = _TABLE_REGIMES[idx]
    except (ValueError, KeyError):
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    run = overrides.pop("run", RunConfig(weights_known=known))
    cfg = ExperimentConfig(name=name, regime=regime, init_means=init, init_weights=init_w, run=run)
    return replace(cfg, **overrides) if overrides else cfg


def error_norms(estimate, truth):
    """(L1, L2) distance between the means, matched by position."""
    if estimate.k != truth.k:
        raise ValueError(f"K mismatch: {estimate.k} vs {truth.k}")
    d = estimate.means - truth.means
    return float(np.abs(d).sum()), float(math.sqrt(float(d @ d)))


def sample_checksum(x):
    return hashlib.sha256(np.ascontiguousarray(x, dtype="<f8").tobytes()).hexdigest()


@lru_cache(maxsize=4096)
def _cached_mle(true_key, n, base_seed, index, weights_known):
    truth = MixtureParams(*true_key)
    x = simulate_sample(truth, n, SeedSpec(base_seed, index))
    return maximize_loglik(x, truth, weights_known)


def stat_names(k, weights_known):
    names = [f"theta_{l + 1}" for l in range(k)]
    if not weights_known:
        names.append("p")
    return names + ["l1", "l2", "n", "t", "T", "failed"]


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    checksum: str
    rows: dict


def run_replication(config, index):
    """Every algorithm on the same sample from the same start; one stats row each."""
    truth = config.true_params
    x = simulate_sample(truth, config.n, SeedSpec(config.base_seed, index))
    init = resolve_init(config)
    wk = config.weights_known
    rows = {}
    for alg in config.algorithms:
        res = run_estimator(alg, init, x, config.run)
        rows[alg.label] = _row(res.final, truth, wk, res.iterations, res.per_iter_seconds * 1e3,
                               res.total_seconds * 1e3, res.terminated is not Termination.CONVERGED)
    if config.mle:
        key = (tuple(truth.means.tolist()), tuple(truth.weights.tolist()))
        m = _cached_mle(key, config.n, config.base_seed, index, wk)
        rows[MLE_LABEL] = _row(m.params, truth, wk, math.nan, math.nan, math.nan, not m.converged)
    return ReplicationResult(index, sample_checksum(x), rows)


def _row(est, truth, weights_known, iterations, t_ms, total_ms, failed):
    l1, l2 = error_norms(est, truth)
    vals = list(est.means)
    if not weights_known:
        vals.append(est.weights[0])
    vals += [l1, l2, iterations, t_ms, total_ms, float(failed)]
    return np.array(vals, dtype=float)


def _run_chunk(config, indices):
    warmup()
    return [run_replication(config, i) for i in indices]


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    columns: tuple
    stat_names: tuple
    raw: dict          # column label -> (R, n_stats) array, rows ordered by replication index
    checksums: tuple

    def mean_std(self, column, stat):
        v = self.raw[column][:, self.stat_names.index(stat)]
        return aggregate(v)

    def failures(self, column):
        return int(self.raw[column][:, self.stat_names.index("failed")].sum())


def aggregate(values):
    """Two-pass mean and sample standard deviation (n - 1); std is 0 for one value."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.all(np.isnan(v)):
        return math.nan, math.nan
    mean = float(np.sum(v) / v.size)
    if v.size == 1:
        return mean, 0.0
    dev = v - mean
    return mean, float(math.sqrt(float(np.sum(dev * dev)) / (v.size - 1)))


def run_experiment(config, workers=1, progress=None):
    """Run all replications and gather them by index.

    ``workers > 1`` spreads contiguous blocks of replications over
    processes; the gathered result does not depend on the schedule.
    """
    indices = list(range(config.replications))
    results = []
    if workers <= 1:
        warmup()
        for i in indices:
            results.append(run_replication(config, i))
            if progress:
                progress(i + 1, config.replications)
    else:
        chunks = [indices[j::workers] for j in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = 0
            for part in pool.map(_run_chunk, [config] * len(chunks), chunks):
                results.extend(part)
                done += len(part)
                if progress:
                    progress(done, config.replications)
    results.sort(key=lambda r: r.index)
    names = tuple(stat_names(config.true_params.k, config.weights_known))
    raw = {col: np.vstack([r.rows[col] for r in results]) for col in config.columns}
    return ExperimentReport(config, config.columns, names, raw, tuple(r.checksum for r in results))


def stderr_progress(done, total):
    print(f"\rreplication {done}/{total}", end="\n" if done == total else "", file=sys.stderr, flush=True)


# -- rendering -------------------------------------------------------------

_MD_LABELS = {"p": "p", "l1": "‖θ−θ*‖₁", "l2": "‖θ−θ*‖₂", "n": "n", "t": "t", "T": "T",
              "failed": "failures"}
_TIMING = ("t", "T")
_COUNTS = ("n", "t", "T")


def _md_label(stat):
    if stat.startswith("theta_"):
        return "θ" + "".join("₀₁₂₃₄₅₆₇₈₉"[int(c)] for c in stat[len("theta_"):])
    return _MD_LABELS[stat]


def _cell(stat, mean, std):
    if stat == "failed":
        return "N/A" if math.isnan(mean) else str(int(round(mean)))
    if math.isnan(mean):
        return "N/A"
    digits = 2 if stat in _COUNTS else 4
    return f"{mean:.{digits}f}±{std:.{digits}f}"


def _report_rows(report, timing):
    rows = []
    for stat in report.stat_names:
        if stat in _TIMING and not timing:
            continue
        cells = []
        for col in report.columns:
            if stat == "failed":
                m = float(report.failures(col))
                cells.append((m, 0.0))
            else:
                cells.append(report.mean_std(col, stat))
        rows.append((stat, cells))
    return rows


def render_report(report, fmt="markdown", timing=False):
    """Table with one row per statistic and one column per algorithm.

    Timing rows are wall-clock measurements and are left out unless
    ``timing`` is set, which keeps the default output reproducible.
    """
    fmt = fmt.lower()
    rows = _report_rows(report, timing)
    out = io.StringIO()
    if fmt == "markdown":
        out.write("| | " + " | ".join(report.columns) + " |\n" if report.columns else "| |\n")
        out.write("|---|" + "---|" * len(report.columns) + "\n")
        if report.columns:
            for stat, cells in rows:
                out.write(f"| {_md_label(stat)} | "
                          + " | ".join(_cell(stat, m, s) for m, s in cells) + " |\n")
    elif fmt == "csv":
        header = ["statistic"]
        for col in report.columns:
            header += [f"{col}_mean", f"{col}_std", col]
        out.write(",".join(header) + "\n")
        if report.columns:
            for stat, cells in rows:
                fields = [stat]
                for m, s in cells:
                    if math.isnan(m):
                        fields += ["", "", "N/A"]
                    else:
                        fields += [f"{m:.17g}", f"{s:.17g}", _cell(stat, m, s)]
                out.write(",".join(fields) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return out.getvalue()


def render_raw(report, timing=False):
    """Per-replication dump: one row per (replication, column)."""
    names = [s for s in report.stat_names if timing or s not in _TIMING]
    keep = [report.stat_names.index(s) for s in names]
    out = io.StringIO()
    out.write("replication,algorithm," + ",".join(names) + "\n")
    for i in range(report.config.replications):
        for col in report.columns:
            vals = report.raw[col][i, keep]
            out.write(f"{i},{col}," + ",".join("" if math.isnan(v) else f"{v:.17g}" for v in vals) + "\n")
    return out.getvalue()


def parse_report_csv(text):
    """Inverse of ``render_report(..., "csv")``: (columns, [(stat, [(mean, std), ...]), ...])."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header[0] != "statistic" or (len(header) - 1) % 3:
        raise ValueError("not a report CSV")
    columns = tuple(header[i] for i in range(3, len(header), 3))
    rows = []
    for ln in lines[1:]:
        f = ln.split(",")
        cells = []
        for j in range(len(columns)):
            m, s = f[1 + 3 * j], f[2 + 3 * j]
            cells.append((float(m) if m else math.nan, float(s) if s else math.nan))
        rows.append((f[0], cells))
    return columns, rows


def render_rows(columns, rows, fmt):
    """Render parsed report rows (see ``parse_report_csv``) in another format."""
    fake = _RowsReport(columns, rows)
    return render_report(fake, fmt, timing=True)


class _RowsReport:
    def __init__(self, columns, rows):
        self.columns = columns
        self.stat_names = tuple(stat for stat, _ in rows)
        self._cells = {stat: cells for stat, cells in rows}

    def mean_std(self, col, stat):
        return self._cells[stat][self.columns.index(col)]

    def failures(self, col):
        return self._cells["failed"][self.columns.index(col)][0]


def write_density(path, params, lo=-7.0, hi=4.0, num=1101):
    """Whitespace-separated density table (x, mixture, weighted components) for gnuplot."""
    xs = np.linspace(lo, hi, num)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# x mixture " + " ".join(f"component_{l + 1}" for l in range(params.k)) + "\n")
        for x in xs:
            comps = [w * mixture_pdf(MixtureParams([m], [1.0]), x)
                     for m, w in zip(params.means, params.weights)]
            fh.write(f"{x:.17g} {mixture_pdf(params, x):.17g} "
                     + " ".join(f"{c:.17g}" for c in comps) + "\n")
