"""Replicated simulation experiments and an exact enumeration oracle.

Replication ``r`` of a cell always draws its log with seed ``base_seed + r``,
so every (exponent, window) cell sharing a stay probability is scored on the
same logs. Results therefore do not depend on grid shape, evaluation order
or the number of worker processes.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .clicks import TOY_EXPONENTS, TOY_N, TOY_STAY_PROBS, Scenario, power_curve, simulate_batch, true_value
from .core import EstimatorConfig, Family, PositionBiasCurve, interpol_weight, weight_matrix
from .errors import ConfigurationError
from .logging_policy import enumerate_outcomes, outcome_count, propensity_matrix

logger = logging.getLogger(__name__)

DEFAULT_REPLICATIONS = 500
MAX_ORACLE_OUTCOMES = 50_000


@dataclass(frozen=True)
class ExperimentGrid:
    exponents: tuple = TOY_EXPONENTS
    stay_probs: tuple = TOY_STAY_PROBS
    windows: tuple = tuple(range(11))
    n: int = TOY_N
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "exponents", tuple(float(x) for x in self.exponents))
        object.__setattr__(self, "stay_probs", tuple(float(q) for q in self.stay_probs))
        object.__setattr__(self, "windows", tuple(int(t) for t in self.windows))
        if self.replications < 2:
            raise ConfigurationError("replications must be at least 2")
        if self.n < 1:
            raise ConfigurationError("n must be at least 1")
        if any(x <= 0 for x in self.exponents):
            raise ConfigurationError("exponents must be positive")
        if any(t < 0 for t in self.windows):
            raise ConfigurationError("windows must be non-negative")

    def __len__(self) -> int:
        return len(self.exponents) * len(self.stay_probs) * len(self.windows)


@dataclass(frozen=True)
class CellResult:
    """Summary of ``replications`` estimates; variances use the 1/R convention."""

    exponent: float
    stay_prob: float
    window: int
    n: int
    replications: int
    mean_estimate: float
    true_value: float
    bias: float
    variance: float
    mse: float

    @classmethod
    def from_estimates(cls, estimates, truth: float, *, exponent, stay_prob, window, n) -> "CellResult":
        est = np.asarray(estimates, dtype=np.float64)
        mean = float(est.mean())
        return cls(
            exponent=float(exponent),
            stay_prob=float(stay_prob),
            window=int(window),
            n=int(n),
            replications=int(est.size),
            mean_estimate=mean,
            true_value=float(truth),
            bias=mean - truth,
            variance=float(np.mean((est - mean) ** 2)),
            mse=float(np.mean((est - truth) ** 2)),
        )

    @property
    def std_error(self) -> float:
        """Monte-Carlo standard error of ``mean_estimate``."""
        return float(np.sqrt(self.variance / self.replications))


def _weight_stack(scenario: Scenario, exponents, windows) -> np.ndarray:
    props = propensity_matrix(scenario.logging)
    stack = np.empty((len(exponents), len(windows), scenario.K, scenario.K))
    for e, exponent in enumerate(exponents):
        curve = power_curve(scenario.user.true_curve, exponent)
        for w, window in enumerate(windows):
            config = EstimatorConfig(Family.INTERPOL, window, curve)
            stack[e, w] = weight_matrix(scenario.target, config, props)
    return stack


def _replicate_chunk(scenario: Scenario, weights: np.ndarray, n: int, seeds: Sequence[int]) -> np.ndarray:
    out = np.empty((len(seeds),) + weights.shape[:2])
    for r, seed in enumerate(seeds):
        counts = simulate_batch(scenario, n, seed).click_counts()
        for e in range(weights.shape[0]):
            for w in range(weights.shape[1]):
                out[r, e, w] = float((weights[e, w] * counts).sum()) / n
    return out


def replicate_estimates(
    scenario: Scenario,
    exponents: Sequence[float],
    windows: Sequence[int],
    n: int,
    replications: int,
    base_seed: int,
    workers: int = 1,
) -> np.ndarray:
    """INTERPOL estimates, shape ``(replications, len(exponents), len(windows))``.

    The stay probability is the one on ``scenario.logging``.
    """
    weights = _weight_stack(scenario, exponents, windows)
    seeds = [base_seed + r for r in range(replications)]
    if workers <= 1:
        return _replicate_chunk(scenario, weights, n, seeds)
    chunks = [seeds[i::workers] for i in range(workers)]
    out = np.empty((replications,) + weights.shape[:2])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_replicate_chunk, scenario, weights, n, chunk) for chunk in chunks]
        for i, future in enumerate(futures):
            out[i::workers] = future.result()
    return out


def run_grid(scenario: Scenario, grid: ExperimentGrid, workers: int = 1) -> List[CellResult]:
    """One CellResult per (exponent, stay_prob, window), sorted in that order."""
    truth = true_value(scenario.target, scenario.user)
    cells = []
    for stay_prob in grid.stay_probs:
        logger.info("stay_prob=%s: %d replications of n=%d", stay_prob, grid.replications, grid.n)
        est = replicate_estimates(
            scenario.with_stay_prob(stay_prob),
            grid.exponents,
            grid.windows,
            grid.n,
            grid.replications,
            grid.base_seed,
            workers,
        )
        for e, exponent in enumerate(grid.exponents):
            for w, window in enumerate(grid.windows):
                cells.append(
                    CellResult.from_estimates(
                        est[:, e, w], truth, exponent=exponent, stay_prob=stay_prob, window=window, n=grid.n
                    )
                )
    cells.sort(key=lambda c: (c.exponent, c.stay_prob, c.window))
    return cells


def run_cell(
    scenario: Scenario,
    exponent: float,
    stay_prob: float,
    window: int,
    n: int = TOY_N,
    replications: int = DEFAULT_REPLICATIONS,
    base_seed: int = 0,
    workers: int = 1,
) -> CellResult:
    grid = ExperimentGrid((exponent,), (stay_prob,), (window,), n, replications, base_seed)
    return run_grid(scenario, grid, workers)[0]


def exhaustive_oracle(scenario: Scenario, window: int, curve: Optional[PositionBiasCurve] = None) -> float:
    """Exact expectation of the INTERPOL estimate for one query.

    Enumerates every outcome of the logging policy and replaces each click by
    its expectation ``rel(y) * p_true[logged rank]``. ``curve`` is the curve
    handed to the estimator and defaults to the true one.
    """
    policy = scenario.logging
    if outcome_count(policy) > MAX_ORACLE_OUTCOMES:
        raise ConfigurationError(
            f"{outcome_count(policy)} logging outcomes for K={policy.K} with {policy.sampler.value}; "
            f"enumeration is capped at {MAX_ORACLE_OUTCOMES}"
        )
    curve = scenario.user.true_curve if curve is None else curve
    if len(curve) != scenario.K:
        raise ConfigurationError("estimator curve length does not match K")
    if window < 0:
        raise ConfigurationError("window must be non-negative")
    props = propensity_matrix(policy)
    relevance = scenario.user.relevance
    p_true = scenario.user.true_curve.probs
    expected = 0.0
    for prob, ranking in enumerate_outcomes(policy):
        if prob == 0.0:
            continue
        value = 0.0
        for logged_rank, item in enumerate(ranking.tolist()):
            if relevance[item] == 0.0:
                continue
            w = interpol_weight(item, scenario.target.rank_of(item), logged_rank, window, curve, props)
            value += w * relevance[item] * p_true[logged_rank]
        expected += prob * value
    return expected
