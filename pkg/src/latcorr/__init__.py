"""Estimation of the integrated correlation between latent intensity
processes observed through high-frequency counts, with consistent
asymptotic-variance estimators, confidence intervals, and a Monte Carlo
harness for their mean-squared-error study."""

from .estimators import (
    PAIRS,
    BandwidthSpec,
    ConfidenceInterval,
    CovEstimate,
    DegenerateDataError,
    GammaMatrix,
    TildeSeries,
    XiValue,
    confidence_interval,
    estimate_S,
    estimate_correlation,
    estimate_xi,
    gamma_kernel,
    gamma_v1,
    gamma_v2,
    tilde_series,
)
from .harness import ExperimentConfig, MseRow, rate_check, run_mse_table, run_replication
from .oracle import TruthRecord, true_U, true_gamma, true_xi, truth_record
from .sim import (
    CountPath,
    LatentPath,
    ModelParams,
    SamplingDesign,
    integrated_intensity,
    replication_rng,
    simulate_counts,
    simulate_latent,
    validate_regime,
)

__version__ = "0.1.0"
