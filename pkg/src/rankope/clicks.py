"""Position-based click simulation and the synthetic toy scenario."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import List

import numpy as np

from .core import ClickRecord, PositionBiasCurve, Ranking, RankPropensities
from .errors import ConfigurationError, DataError
from .logging_policy import Sampler, SwapPolicy, propensity_matrix, sample_rankings

TOY_K = 10
TOY_CURVE = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)
TOY_RELEVANT = (1, 2, 4, 7)
# top block [6, 0, 3, 1, 4], bottom block [7, 5, 2]; the free items 8, 9 go in between
TOY_LOGGING = (6, 0, 3, 1, 4, 8, 9, 7, 5, 2)
# top block [7, 0, 3, 1], bottom block [2, 4]; the free items 5, 6, 8, 9 go in between
TOY_TARGET = (7, 0, 3, 1, 5, 6, 8, 9, 2, 4)
TOY_STAY_PROBS = (0.5, 0.55, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
TOY_EXPONENTS = (0.2, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
TOY_N = 5000


def linear_curve(K: int) -> PositionBiasCurve:
    """``p_k = (K - k) / K``; for K=10 this is 1.0, 0.9, ..., 0.1."""
    return PositionBiasCurve(tuple((K - k) / K for k in range(K)))


def binary_relevance(K: int, relevant) -> tuple:
    relevant = set(int(i) for i in relevant)
    if any(not 0 <= i < K for i in relevant):
        raise ConfigurationError(f"relevant items {sorted(relevant)} must lie in 0..{K - 1}")
    return tuple(1.0 if i in relevant else 0.0 for i in range(K))


@dataclass(frozen=True)
class UserModel:
    """Clicks factor into item relevance times the examination probability of the rank."""

    relevance: tuple
    true_curve: PositionBiasCurve

    def __post_init__(self) -> None:
        relevance = tuple(float(r) for r in self.relevance)
        if any(not 0.0 <= r <= 1.0 for r in relevance):
            raise ConfigurationError("relevance values must lie in [0, 1]")
        if len(relevance) != len(self.true_curve):
            raise ConfigurationError(
                f"{len(relevance)} relevance values for a curve of length {len(self.true_curve)}"
            )
        object.__setattr__(self, "relevance", relevance)


@dataclass(frozen=True)
class Scenario:
    """A single-context simulation: user model, logging policy and target ranking."""

    user: UserModel
    logging: SwapPolicy
    target: Ranking

    def __post_init__(self) -> None:
        K = len(self.user.relevance)
        if self.logging.K != K or len(self.target) != K:
            raise ConfigurationError("user model, logging policy and target must share K")

    @property
    def K(self) -> int:
        return len(self.target)

    @property
    def stay_prob(self) -> float:
        return self.logging.stay_prob

    def with_stay_prob(self, stay_prob: float) -> "Scenario":
        return dataclasses.replace(self, logging=dataclasses.replace(self.logging, stay_prob=stay_prob))


def toy_scenario(stay_prob: float = 0.95, sampler: Sampler = Sampler.IDENTITY_OR_UNIFORM) -> Scenario:
    curve = PositionBiasCurve(TOY_CURVE)
    return Scenario(
        user=UserModel(binary_relevance(TOY_K, TOY_RELEVANT), curve),
        logging=SwapPolicy(Ranking(TOY_LOGGING), stay_prob, sampler),
        target=Ranking(TOY_TARGET),
    )


def power_curve(curve: PositionBiasCurve, exponent: float) -> PositionBiasCurve:
    """Raise every examination probability to ``exponent``; used to misspecify a curve."""
    if not exponent > 0:
        raise ConfigurationError(f"exponent must be positive, got {exponent}")
    return PositionBiasCurve(tuple(p**exponent for p in curve.probs))


def true_value(target: Ranking, user: UserModel) -> float:
    """Expected clicks per query when ``target`` is displayed."""
    if len(target) != len(user.relevance):
        raise DataError("target length does not match the user model")
    total = 0.0
    for item, rel in enumerate(user.relevance):
        total += rel * user.true_curve.probs[target.rank_of(item)]
    return total


def _click_probs(rankings: np.ndarray, user: UserModel) -> np.ndarray:
    relevance = np.asarray(user.relevance)
    return relevance[rankings] * user.true_curve.as_array()[None, :]


def simulate_clicks(ranking: Ranking, user: UserModel, rng: np.random.Generator) -> tuple:
    if len(ranking) != len(user.true_curve):
        raise DataError("ranking length does not match the user's curve")
    probs = _click_probs(ranking.as_array()[None, :], user)[0]
    return tuple((rng.random(len(ranking)) < probs).astype(int).tolist())


@dataclass(frozen=True)
class ClickBatch:
    """Column-oriented log of ``n`` queries sharing one propensity matrix."""

    rankings: np.ndarray
    clicks: np.ndarray
    propensities: RankPropensities

    @property
    def n(self) -> int:
        return self.rankings.shape[0]

    def click_counts(self) -> np.ndarray:
        """Clicks summed over queries, indexed ``[item, logged rank]``."""
        K = self.rankings.shape[1]
        ranks = np.broadcast_to(np.arange(K), self.rankings.shape)
        flat = self.rankings[self.clicks] * K + ranks[self.clicks]
        return np.bincount(flat, minlength=K * K).reshape(K, K)

    def per_query_sums(self, weights: np.ndarray) -> np.ndarray:
        K = self.rankings.shape[1]
        return (weights[self.rankings, np.arange(K)[None, :]] * self.clicks).sum(axis=1)

    def to_records(self) -> List[ClickRecord]:
        return [
            ClickRecord(str(i), Ranking(tuple(row)), tuple(clk), self.propensities)
            for i, (row, clk) in enumerate(zip(self.rankings.tolist(), self.clicks.astype(int).tolist()))
        ]


def simulate_batch(scenario: Scenario, n: int, seed: int) -> ClickBatch:
    """Sample ``n`` logged queries; the result depends only on ``(scenario, n, seed)``."""
    if n < 1:
        raise ConfigurationError(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    rankings = sample_rankings(scenario.logging, n, rng)
    clicks = rng.random(rankings.shape) < _click_probs(rankings, scenario.user)
    return ClickBatch(rankings, clicks, propensity_matrix(scenario.logging))


def generate_dataset(scenario: Scenario, n: int, base_seed: int) -> List[ClickRecord]:
    return simulate_batch(scenario, n, base_seed).to_records()
