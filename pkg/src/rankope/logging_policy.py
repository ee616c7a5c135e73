"""Randomized logging policy with exact rank propensities.

Each item stays at its base rank with probability ``stay_prob`` and lands
on each other rank with probability ``(1 - stay_prob) / (K - 1)``. Those
marginals do not pin down a joint distribution over permutations, so two
joints with identical marginals are offered:

``identity-or-uniform``
    Show the base ranking with probability
    ``(stay_prob * K - 1) / (K - 1)``, otherwise a uniformly random
    permutation. Needs ``stay_prob >= 1 / K``.
``cyclic-shift``
    Rotate the whole list down by ``k`` positions, where ``k = 0`` with
    probability ``stay_prob`` and every other shift is equally likely.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np

from .core import Ranking, RankPropensities
from .errors import ConfigurationError


class Sampler(str, Enum):
    IDENTITY_OR_UNIFORM = "identity-or-uniform"
    CYCLIC_SHIFT = "cyclic-shift"


@dataclass(frozen=True)
class SwapPolicy:
    base_ranking: Ranking
    stay_prob: float
    sampler: Sampler = Sampler.IDENTITY_OR_UNIFORM

    def __post_init__(self) -> None:
        try:
            sampler = Sampler(self.sampler)
        except ValueError as exc:
            raise ConfigurationError(f"unknown sampler {self.sampler!r}") from exc
        object.__setattr__(self, "sampler", sampler)
        q = float(self.stay_prob)
        object.__setattr__(self, "stay_prob", q)
        if self.K < 2:
            raise ConfigurationError("a randomized logging policy needs at least two items")
        if not 0.0 <= q <= 1.0:
            raise ConfigurationError(f"stay_prob must lie in [0, 1], got {q}")
        if sampler is Sampler.IDENTITY_OR_UNIFORM and q * self.K < 1.0:
            raise ConfigurationError(
                f"stay_prob {q} < 1/K = {1.0 / self.K:.6g} is not reachable with the "
                "identity-or-uniform sampler; use cyclic-shift"
            )

    @property
    def K(self) -> int:
        return len(self.base_ranking)

    @property
    def off_prob(self) -> float:
        """Marginal probability of each rank other than the item's base rank."""
        return (1.0 - self.stay_prob) / (self.K - 1)

    @property
    def keep_prob(self) -> float:
        """Mixture weight of the unchanged base ranking (identity-or-uniform)."""
        return max(0.0, (self.stay_prob * self.K - 1.0) / (self.K - 1))

    def shift_probs(self) -> np.ndarray:
        probs = np.full(self.K, self.off_prob)
        probs[0] = self.stay_prob
        return probs


def propensity_matrix(policy: SwapPolicy) -> RankPropensities:
    K = policy.K
    matrix = np.full((K, K), policy.off_prob)
    matrix[np.arange(K), policy.base_ranking.ranks] = policy.stay_prob
    return RankPropensities(matrix)


def sample_rankings(policy: SwapPolicy, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` displayed rankings as an ``(n, K)`` array of item ids."""
    K = policy.K
    base = policy.base_ranking.as_array()
    if policy.sampler is Sampler.IDENTITY_OR_UNIFORM:
        keep = rng.random(n) < policy.keep_prob
        shuffled = base[np.argsort(rng.random((n, K)), axis=1)]
        return np.where(keep[:, None], base[None, :], shuffled)
    shifts = rng.choice(K, size=n, p=policy.shift_probs())
    # rank r shows the item whose base rank is r - shift
    positions = (np.arange(K)[None, :] - shifts[:, None]) % K
    return base[positions]


def sample(policy: SwapPolicy, rng: np.random.Generator) -> Ranking:
    return Ranking(tuple(sample_rankings(policy, 1, rng)[0].tolist()))


def outcome_count(policy: SwapPolicy) -> int:
    if policy.sampler is Sampler.CYCLIC_SHIFT:
        return policy.K
    return math.factorial(policy.K) + 1


def enumerate_outcomes(policy: SwapPolicy) -> Iterator[tuple]:
    """Yield ``(probability, ranking array)`` for every mixture component.

    A permutation may be yielded more than once (the base ranking appears both
    as the kept list and inside the uniform component); probabilities add up.
    """
    K = policy.K
    base = policy.base_ranking.as_array()
    if policy.sampler is Sampler.CYCLIC_SHIFT:
        for shift, prob in enumerate(policy.shift_probs()):
            yield float(prob), base[(np.arange(K) - shift) % K]
        return
    keep = policy.keep_prob
    yield keep, base
    uniform = (1.0 - keep) / math.factorial(K)
    for perm in itertools.permutations(range(K)):
        yield uniform, np.asarray(perm, dtype=np.int64)
