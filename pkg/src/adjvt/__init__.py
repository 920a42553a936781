"""Viterbi training, its adjusted variants VA1 and VA2, and EM for unit-variance Gaussian mixtures."""
from ._accel import backend
from .adjustment import (AdjustmentMode, IsoPartitionFamily, adjustment_delta, mu_bar, mu_restricted,
                         va2_invert, weight_correction)
from .estimators import (Algorithm, EstimationResult, RunConfig, Termination, em_step, run_estimator,
                         va1_step, va2_step, vt_step)
from .harness import ExperimentConfig, ExperimentReport, InitRegime, preset, render_report, run_experiment
from .mle import MLEResult, maximize_loglik
from .model import TRUE_PARAMS, MixtureParams, SeedSpec, log_likelihood, mixture_pdf, simulate_sample
from .partition import Partition1D, classify, subsample_stats, voronoi_partition

__version__ = "0.1.0"

__all__ = [
    "AdjustmentMode", "Algorithm", "EstimationResult", "ExperimentConfig", "ExperimentReport",
    "InitRegime", "IsoPartitionFamily", "MLEResult", "MixtureParams", "Partition1D", "RunConfig",
    "SeedSpec", "TRUE_PARAMS", "Termination", "adjustment_delta", "backend", "classify", "em_step",
    "log_likelihood", "maximize_loglik", "mixture_pdf", "mu_bar", "mu_restricted", "preset",
    "render_report", "run_estimator", "run_experiment", "simulate_sample", "subsample_stats",
    "va1_step", "va2_invert", "va2_step", "voronoi_partition", "vt_step", "weight_correction",
]
