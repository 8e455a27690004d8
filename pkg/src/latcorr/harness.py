"""Monte Carlo harness: replication runner, MSE tables, rate checks.

A grid cell is one (b_n, r) pair with ``a_n = b_n**r``.  Every replication
owns an RNG substream derived from ``(seed, b_n, r, index)``, simulates one
latent path and one count path, computes the correlation estimate, every
requested asymptotic-variance estimate, and the path-wise truth.  Cell
aggregation is a fixed-order fold over replication indices, so tables are
bit-identical regardless of the number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import estimators, oracle, sim

__all__ = [
    "VARIANTS",
    "ExperimentConfig",
    "VariantResult",
    "ReplicationRecord",
    "MseRow",
    "gamma_for_variant",
    "run_replication",
    "run_cell",
    "aggregate_cell",
    "run_mse_table",
    "fit_rate_slope",
    "rate_check",
]

VARIANTS = ("1", "2", "w", "m", "n")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment grid: model x b_n list x rate exponents x variants."""

    model: sim.ModelParams
    b_n: tuple[int, ...]
    r: tuple[float, ...]
    variants: tuple[str, ...] = VARIANTS
    replications: int = 1000
    seed: int = 0
    refinement: int = 8
    ci_level: float = 0.95
    bandwidth_overrides: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "b_n", tuple(int(b) for b in self.b_n))
        object.__setattr__(self, "r", tuple(float(x) for x in self.r))
        object.__setattr__(self, "variants", tuple(self.variants))
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.b_n:
            raise ValueError("b_n list must be nonempty")
        if any(b < 4 for b in self.b_n):
            raise ValueError("every b_n must be at least 4")
        if not self.r:
            raise ValueError("r list must be nonempty")
        if not self.variants:
            raise ValueError("variants list must be nonempty")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ValueError(f"unknown variants: {unknown}")
        if self.refinement < 1:
            raise ValueError("refinement must be at least 1")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie strictly between 0 and 1")
        bad = [v for v in self.bandwidth_overrides if v not in ("w", "m", "n")]
        if bad:
            raise ValueError(f"bandwidth_overrides only apply to kernel variants, got {bad}")


@dataclass(frozen=True)
class VariantResult:
    xi: float
    clamped: bool
    ci: estimators.ConfidenceInterval


@dataclass(frozen=True)
class ReplicationRecord:
    """Everything measured on one replication."""

    index: int
    b_n: int
    r: float
    degenerate: bool
    C: float | None
    results: dict[str, VariantResult]
    true_R: float
    true_xi: float


@dataclass(frozen=True)
class MseRow:
    """One cell of the MSE table for one estimator variant."""

    variant: str
    b_n: int
    r: float
    mse: float
    bn_times_mse: float
    degenerate_count: int
    clamped_count: int
    n_effective: int

    @property
    def valid(self) -> bool:
        return self.n_effective > 0


def gamma_for_variant(
    tilde: estimators.TildeSeries,
    T: float,
    variant: str,
    bandwidth_overrides: dict[str, float] | None = None,
) -> estimators.GammaMatrix:
    """Dispatch to the Gamma estimator named by ``variant``.

    Kernel variants use ``h = T * b_n**(-e)`` with the standard exponents
    (w: 0.25, m: 0.5, n: 0.75) unless overridden.
    """
    if variant == "1":
        return estimators.gamma_v1(tilde, T)
    if variant == "2":
        return estimators.gamma_v2(tilde, T)
    if variant in estimators.VARIANT_EXPONENTS:
        e = (bandwidth_overrides or {}).get(variant, estimators.VARIANT_EXPONENTS[variant])
        return estimators.gamma_kernel(tilde, T, estimators.BandwidthSpec.from_exponent(e))
    raise ValueError(f"unknown variant {variant!r}")


def _check_model_not_degenerate(model: sim.ModelParams) -> None:
    if model.sigma1 == 0.0 or model.sigma2 == 0.0:
        raise estimators.DegenerateDataError(
            "model has a zero volatility: true correlation targets are undefined"
        )


def run_replication(
    config: ExperimentConfig, b_n: int, r: float, index: int
) -> ReplicationRecord:
    """Simulate and estimate one replication of one grid cell.

    Deterministic given ``(config.seed, b_n, r, index)``.  A replication with
    degenerate count data (S11*S22 = 0) is flagged, not fatal; a degenerate
    model (zero volatility) aborts immediately.
    """
    _check_model_not_degenerate(config.model)
    a_n = float(b_n) ** r
    design = sim.SamplingDesign(b_n=b_n, a_n=a_n, m=config.refinement, T=config.model.T)
    rng = sim.replication_rng(config.seed, b_n, r, index)

    path = sim.simulate_latent(config.model, design, rng)
    lam = sim.integrated_intensity(path, design)
    counts = sim.simulate_counts(lam, a_n, rng)
    truth = oracle.truth_record(path, config.model)

    tilde = estimators.tilde_series(counts, a_n, design.delta_n)
    S = estimators.estimate_S(tilde)
    try:
        C = estimators.estimate_correlation(S)
    except estimators.DegenerateDataError:
        return ReplicationRecord(
            index=index, b_n=b_n, r=r, degenerate=True, C=None, results={},
            true_R=truth.R, true_xi=truth.xi,
        )

    results = {}
    for variant in config.variants:
        G = gamma_for_variant(tilde, config.model.T, variant, config.bandwidth_overrides)
        xi = estimators.estimate_xi(S, G)
        ci = estimators.confidence_interval(C, xi, b_n, config.model.T, config.ci_level)
        results[variant] = VariantResult(xi=xi.xi, clamped=xi.clamped, ci=ci)

    return ReplicationRecord(
        index=index, b_n=b_n, r=r, degenerate=False, C=C, results=results,
        true_R=truth.R, true_xi=truth.xi,
    )


def _resolve_workers(n_workers: int) -> int:
    if n_workers < 0:
        raise ValueError("n_workers must be nonnegative")
    return n_workers or os.cpu_count() or 1


def run_cell(
    config: ExperimentConfig, b_n: int, r: float, n_workers: int = 1
) -> list[ReplicationRecord]:
    """All replications of one cell, ordered by replication index."""
    indices = range(config.replications)
    workers = _resolve_workers(n_workers)
    if workers == 1:
        return [run_replication(config, b_n, r, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_replication(config, b_n, r, i), indices))


def aggregate_cell(
    records: list[ReplicationRecord], config: ExperimentConfig, b_n: int, r: float
) -> list[MseRow]:
    """Fold one cell's replication records into per-variant MSE rows."""
    degenerate = sum(rec.degenerate for rec in records)
    live = [rec for rec in records if not rec.degenerate]  # index order preserved
    rows = []
    for variant in config.variants:
        n_eff = len(live)
        if n_eff == 0:
            rows.append(
                MseRow(variant=variant, b_n=b_n, r=r, mse=math.nan, bn_times_mse=math.nan,
                       degenerate_count=degenerate, clamped_count=0, n_effective=0)
            )
            continue
        sq = np.array([(rec.results[variant].xi - rec.true_xi) ** 2 for rec in live])
        mse = float(np.sum(sq) / n_eff)
        clamped = sum(rec.results[variant].clamped for rec in live)
        rows.append(
            MseRow(variant=variant, b_n=b_n, r=r, mse=mse, bn_times_mse=b_n * mse,
                   degenerate_count=degenerate, clamped_count=clamped, n_effective=n_eff)
        )
    return rows


def run_mse_table(config: ExperimentConfig, n_workers: int = 1) -> list[MseRow]:
    """MSE of every variant against path-wise truth on the full grid.

    Rows are ordered (r, b_n, variant) with r and b_n in config order.
    ``mse = mean((xi_hat - xi_true)^2)`` over non-degenerate replications;
    aggregation follows replication-index order, so the result does not
    depend on ``n_workers``.
    """
    rows: list[MseRow] = []
    for r in config.r:
        for b_n in config.b_n:
            records = run_cell(config, b_n, r, n_workers=n_workers)
            rows.extend(aggregate_cell(records, config, b_n, r))
    return rows


def fit_rate_slope(rows: list[MseRow], variant: str, r: float) -> float:
    """Least-squares slope of log(mse) against log(b_n) for one variant.

    Invalid rows are excluded; fewer than three remaining points is an error.
    """
    pts = [
        (row.b_n, row.mse)
        for row in rows
        if row.variant == variant and row.r == r and row.valid and row.mse > 0
    ]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 valid rows for variant {variant!r}, got {len(pts)}")
    logb = np.log([b for b, _ in pts])
    logm = np.log([m for _, m in pts])
    slope, _ = np.polyfit(logb, logm, 1)
    return float(slope)


def rate_check(config: ExperimentConfig, variant: str, n_workers: int = 1) -> float:
    """Run the grid (single r required) and fit the MSE decay slope."""
    if len(config.r) != 1:
        raise ValueError("rate_check needs a config with exactly one rate exponent")
    if len(config.b_n) < 3:
        raise ValueError("rate_check needs at least 3 grid sizes")
    rows = run_mse_table(config, n_workers=n_workers)
    return fit_rate_slope(rows, variant, config.r[0])
