"""Evaluation statistics for comparing allocation strategies.

All aggregates run over ordered off-diagonal pairs only: the channel is
directional (interference lands at the receiver), so delays are directional
too.  Variance is the population variance, recorded in the output metadata.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .allocator import (
    AllocationProblem,
    GeneticConfig,
    GreedyConfig,
    default_pa,
    genetic_pa,
    greedy_pa,
)
from .channel import ChannelParams, offdiag_values
from .errors import DimensionMismatchError, DomainError, SimulationError
from .scenario import ScenarioSpec, generate_scene
from .seeds import derive_seed

VARIANCE_CONVENTION = "population variance over ordered off-diagonal pairs"

REFERENCE_STRATEGY = "genetic"


def delay_rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root-mean-square difference between two delay matrices, in seconds."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = offdiag_values(a) - offdiag_values(b)
    return float(np.sqrt(np.mean(diff**2)))


def delay_variance(d: np.ndarray) -> float:
    """Population variance of the off-diagonal delays, in seconds squared."""
    vals = offdiag_values(d)
    if vals.max() == vals.min():  # exactly zero, not mean-rounding dust
        return 0.0
    return float(np.var(vals))


def delay_mean(d: np.ndarray) -> float:
    """Arithmetic mean of the off-diagonal delays, in seconds."""
    return float(np.mean(offdiag_values(d)))


@dataclass(frozen=True)
class ComparisonConfig:
    """Solver settings for one comparison batch.

    The greedy solver runs once per entry of greedy_epoch_ladder so the
    epoch-count ablation lands in the same table.  rate_factor rescales
    every delay after solving (delay is exactly linear in payload size).
    """

    params: ChannelParams = ChannelParams()
    greedy: GreedyConfig = GreedyConfig()
    genetic: GeneticConfig = GeneticConfig()
    greedy_epoch_ladder: tuple = (5000, 500, 50)
    rate_factor: float = 1.0

    def __post_init__(self):
        if not (0 < self.rate_factor <= 1):
            raise DomainError(f"rate_factor must be in (0, 1], got {self.rate_factor}")
        if not self.greedy_epoch_ladder:
            raise DomainError("greedy_epoch_ladder must not be empty")


@dataclass(frozen=True)
class StrategyTrial:
    strategy_name: str
    delay_s: np.ndarray
    min_snr: float
    epochs_used: int
    rmse_vs_reference: float


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    scene_seed: int
    distances: np.ndarray
    strategies: tuple


@dataclass(frozen=True)
class StrategyAggregate:
    strategy_name: str
    rmse_vs_reference: float
    delay_variance: float
    delay_mean: float


@dataclass(frozen=True)
class StrategyComparison:
    n_vehicles: int
    trials: tuple
    aggregates: tuple
    reference_strategy: str = REFERENCE_STRATEGY
    variance_convention: str = VARIANCE_CONVENTION


def _run_trial(spec: ScenarioSpec, cfg: ComparisonConfig, trial: int) -> TrialRecord:
    scene_seed = derive_seed(spec.rng_seed, trial, 0)
    dist, _ = generate_scene(replace(spec, rng_seed=scene_seed))
    problem = AllocationProblem(cfg.params, dist)

    results = {"default": default_pa(problem)}
    for epochs in cfg.greedy_epoch_ladder:
        results[f"greedy_epoch{epochs}"] = greedy_pa(
            problem, replace(cfg.greedy, max_epochs=epochs)
        )
    genetic_seed = derive_seed(spec.rng_seed, trial, 1)
    results[REFERENCE_STRATEGY] = genetic_pa(
        problem, replace(cfg.genetic, rng_seed=genetic_seed)
    )

    reference_delay = results[REFERENCE_STRATEGY].metrics.delay_s * cfg.rate_factor
    strategies = []
    for name, result in results.items():
        scaled = result.metrics.delay_s * cfg.rate_factor
        strategies.append(
            StrategyTrial(
                strategy_name=name,
                delay_s=scaled,
                min_snr=result.objective_min_snr,
                epochs_used=result.epochs_used,
                rmse_vs_reference=delay_rmse(scaled, reference_delay),
            )
        )
    return TrialRecord(
        trial_index=trial,
        scene_seed=scene_seed,
        distances=dist.d,
        strategies=tuple(strategies),
    )


def run_comparison(
    spec: ScenarioSpec,
    trials: int,
    config: ComparisonConfig | None = None,
    jobs: int = 1,
) -> StrategyComparison:
    """Run every strategy over repeated scenes and average the statistics.

    Per-trial scene and solver seeds derive from spec.rng_seed (the master
    seed), so results are reproducible and, because trials are aggregated
    in index order, independent of how many worker threads run them.
    Solver errors abort the batch, tagged with the failing trial index.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    config = config or ComparisonConfig()

    def worker(t: int) -> TrialRecord:
        try:
            return _run_trial(spec, config, t)
        except SimulationError as exc:
            raise SimulationError(f"trial {t} failed: {exc}") from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(worker, range(trials)))
    else:
        records = [worker(t) for t in range(trials)]

    names = [s.strategy_name for s in records[0].strategies]
    aggregates = []
    for idx, name in enumerate(names):
        per_trial = [rec.strategies[idx] for rec in records]
        aggregates.append(
            StrategyAggregate(
                strategy_name=name,
                rmse_vs_reference=float(
                    np.mean([s.rmse_vs_reference for s in per_trial])
                ),
                delay_variance=float(
                    np.mean([delay_variance(s.delay_s) for s in per_trial])
                ),
                delay_mean=float(np.mean([delay_mean(s.delay_s) for s in per_trial])),
            )
        )
    return StrategyComparison(
        n_vehicles=spec.n_vehicles,
        trials=tuple(records),
        aggregates=tuple(aggregates),
    )
