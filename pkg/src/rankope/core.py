"""Domain types, IPS weights and the generic point estimator for rankings.

Three weight families are provided for a deterministic target ranking
evaluated on clicks logged under a stochastic logging ranking:

* ``PBM``: ratio of examination probabilities at target and logged rank.
* ``IPM``: indicator of an exact rank match over the rank propensity.
* ``INTERPOL``: accepts logged ranks within ``window`` positions of the target
  rank, divides by the probability of that window event and corrects the
  residual displacement with the PBM ratio. ``window=0`` is the IPM and a
  window spanning the whole list is the PBM.

Ranks are 0-based (rank 0 is the top of the list). Items are the integers
``0..K-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from statistics import NormalDist
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    ConfigurationError,
    DataError,
    InputDomainError,
    InvalidCurveError,
    SupportViolationError,
)

# tolerance on row and column sums of a propensity matrix
STOCHASTIC_ATOL = 1e-12


class Family(str, Enum):
    PBM = "PBM"
    IPM = "IPM"
    INTERPOL = "INTERPOL"


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Ranking:
    """An ordered permutation of the items ``0..K-1``; ``items[k]`` is shown at rank ``k``."""

    items: tuple
    _ranks: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        try:
            items = tuple(int(i) for i in self.items)
        except (TypeError, ValueError) as exc:
            raise DataError(f"ranking items must be integers: {self.items!r}") from exc
        if len(items) == 0 or sorted(items) != list(range(len(items))):
            raise DataError(f"ranking must be a permutation of 0..K-1, got {list(items)}")
        ranks = [0] * len(items)
        for rank, item in enumerate(items):
            ranks[item] = rank
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "_ranks", tuple(ranks))

    def __len__(self) -> int:
        return len(self.items)

    def rank_of(self, item: int) -> int:
        if not 0 <= item < len(self.items):
            raise InputDomainError(f"item {item} is not in a ranking of length {len(self)}")
        return self._ranks[item]

    @property
    def ranks(self) -> np.ndarray:
        """Rank of every item, indexed by item id."""
        return np.asarray(self._ranks, dtype=np.int64)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.items, dtype=np.int64)


@dataclass(frozen=True)
class PositionBiasCurve:
    """Examination probability per rank."""

    probs: tuple

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        if len(probs) == 0:
            raise InvalidCurveError("position bias curve is empty")
        for k, p in enumerate(probs):
            if not (0.0 < p <= 1.0) or math.isnan(p):
                raise InvalidCurveError(f"curve entry {k} = {p} is outside (0, 1]")
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, rank: int) -> float:
        return self.probs[rank]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


class RankPropensities:
    """Probability that each item is shown at each rank under the logging policy.

    ``matrix[item, rank]`` is ``P(rank(item | Y0) = rank)``. Rows and columns
    must both sum to one, since every item lands on exactly one rank and
    every rank holds exactly one item.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix) -> None:
        arr = np.array(matrix, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DataError(f"propensities must be a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0 + STOCHASTIC_ATOL):
            raise DataError("propensities must lie in [0, 1]")
        rows = np.abs(arr.sum(axis=1) - 1.0)
        cols = np.abs(arr.sum(axis=0) - 1.0)
        if rows.max() > STOCHASTIC_ATOL:
            raise DataError(f"propensity row {int(rows.argmax())} does not sum to 1")
        if cols.max() > STOCHASTIC_ATOL:
            raise DataError(f"propensity column {int(cols.argmax())} does not sum to 1")
        object.__setattr__(self, "matrix", _readonly(arr))

    def __setattr__(self, name, value):
        raise AttributeError("RankPropensities is immutable")

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RankPropensities):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())

    def __repr__(self) -> str:
        return f"RankPropensities(K={len(self)})"

    def __reduce__(self):
        return (RankPropensities, (self.matrix.copy(),))

    def of(self, item: int, rank: int) -> float:
        _check_rank(rank, len(self))
        _check_rank(item, len(self), what="item")
        return float(self.matrix[item, rank])


@dataclass(frozen=True)
class ClickRecord:
    """One logged query: the displayed ranking and a click indicator per position."""

    query_id: str
    logged_ranking: Ranking
    clicks: tuple
    propensities: Optional[RankPropensities] = None

    def __post_init__(self) -> None:
        clicks = tuple(int(c) for c in self.clicks)
        if len(clicks) != len(self.logged_ranking):
            raise DataError(
                f"query {self.query_id}: {len(clicks)} clicks for a ranking of length "
                f"{len(self.logged_ranking)}"
            )
        if any(c not in (0, 1) for c in clicks):
            raise DataError(f"query {self.query_id}: click indicators must be 0 or 1")
        if self.propensities is not None and len(self.propensities) != len(self.logged_ranking):
            raise DataError(f"query {self.query_id}: propensity matrix does not match ranking length")
        object.__setattr__(self, "query_id", str(self.query_id))
        object.__setattr__(self, "clicks", clicks)


@dataclass(frozen=True)
class EstimatorConfig:
    family: Family = Family.INTERPOL
    window: int = 0
    curve: Optional[PositionBiasCurve] = None

    def __post_init__(self) -> None:
        try:
            family = Family(self.family)
        except ValueError as exc:
            raise ConfigurationError(f"unknown estimator family {self.family!r}") from exc
        object.__setattr__(self, "family", family)
        if isinstance(self.window, bool) or int(self.window) != self.window or self.window < 0:
            raise ConfigurationError(f"window must be a non-negative integer, got {self.window!r}")
        object.__setattr__(self, "window", int(self.window))
        if family in (Family.PBM, Family.INTERPOL) and self.curve is None:
            raise ConfigurationError(f"{family.value} needs a position bias curve")

    @property
    def needs_propensities(self) -> bool:
        return self.family in (Family.IPM, Family.INTERPOL)


@dataclass(frozen=True)
class EstimateReport:
    point_estimate: float
    std_error: float
    n: int
    per_query_sums: Optional[tuple] = None

    def confidence_interval(self, level: float = 0.95) -> tuple:
        """Normal-approximation interval over query-level sums."""
        z = NormalDist().inv_cdf(0.5 + level / 2.0)
        return (self.point_estimate - z * self.std_error, self.point_estimate + z * self.std_error)


def _check_rank(rank: int, size: int, what: str = "rank") -> None:
    if not 0 <= rank < size:
        raise InputDomainError(f"{what} {rank} outside [0, {size - 1}]")


def pbm_weight(target_rank: int, logged_rank: int, curve: PositionBiasCurve) -> float:
    """Visibility ratio ``p[target_rank] / p[logged_rank]``."""
    _check_rank(target_rank, len(curve))
    _check_rank(logged_rank, len(curve))
    return curve.probs[target_rank] / curve.probs[logged_rank]


def ip_weight(item: int, target_rank: int, logged_rank: int, propensities: RankPropensities) -> float:
    """Item-position weight; zero unless the logged rank equals the target rank."""
    _check_rank(target_rank, len(propensities))
    _check_rank(logged_rank, len(propensities))
    if logged_rank != target_rank:
        return 0.0
    prop = propensities.of(item, target_rank)
    if prop <= 0.0:
        raise SupportViolationError(
            f"item {item} has zero propensity at rank {target_rank}: IPM weight undefined"
        )
    return 1.0 / prop


def window_bounds(target_rank: int, window: int, size: int) -> tuple:
    """Inclusive rank range ``[lo, hi]`` within ``window`` of ``target_rank``, clipped to the list."""
    return max(0, target_rank - window), min(size - 1, target_rank + window)


def window_probability(
    item: int, target_rank: int, window: int, propensities: RankPropensities
) -> float:
    """Probability that the logged rank of ``item`` lies within ``window`` of ``target_rank``."""
    size = len(propensities)
    _check_rank(target_rank, size)
    _check_rank(item, size, what="item")
    if window < 0:
        raise ConfigurationError(f"window must be non-negative, got {window}")
    lo, hi = window_bounds(target_rank, window, size)
    if lo == 0 and hi == size - 1:
        # every rank is inside the window; avoid row-sum rounding
        return 1.0
    row = propensities.matrix[item]
    prob = 0.0
    for rank in range(lo, hi + 1):
        prob += float(row[rank])
    if prob <= 0.0:
        raise SupportViolationError(
            f"item {item} never lands within {window} of rank {target_rank}"
        )
    return prob


def interpol_weight(
    item: int,
    target_rank: int,
    logged_rank: int,
    window: int,
    curve: PositionBiasCurve,
    propensities: RankPropensities,
) -> float:
    _check_rank(logged_rank, len(propensities))
    if abs(logged_rank - target_rank) > window:
        _check_rank(target_rank, len(propensities))
        return 0.0
    return (1.0 / window_probability(item, target_rank, window, propensities)) * pbm_weight(
        target_rank, logged_rank, curve
    )


def item_weight(
    config: EstimatorConfig,
    item: int,
    target_rank: int,
    logged_rank: int,
    propensities: Optional[RankPropensities],
) -> float:
    if config.family is Family.PBM:
        return pbm_weight(target_rank, logged_rank, config.curve)
    if config.family is Family.IPM:
        return ip_weight(item, target_rank, logged_rank, propensities)
    return interpol_weight(item, target_rank, logged_rank, config.window, config.curve, propensities)


def weight_matrix(
    target: Ranking, config: EstimatorConfig, propensities: Optional[RankPropensities]
) -> np.ndarray:
    """Weights for every (item, logged rank) pair, shape ``(K, K)``.

    Lets a batch of logs be scored as a dot product with its click-count
    matrix. Entries that would need a zero denominator are left at zero
    when the pair is impossible under ``propensities``; a possible pair
    with a zero denominator cannot occur for a consistent matrix.
    """
    size = len(target)
    _check_sizes(size, config, propensities)
    out = np.zeros((size, size), dtype=np.float64)
    for item in range(size):
        target_rank = target.rank_of(item)
        for logged_rank in range(size):
            if propensities is not None and propensities.matrix[item, logged_rank] == 0.0:
                continue
            out[item, logged_rank] = item_weight(config, item, target_rank, logged_rank, propensities)
    return _readonly(out)


def _check_sizes(size: int, config: EstimatorConfig, propensities: Optional[RankPropensities]) -> None:
    if config.curve is not None and len(config.curve) != size:
        raise ConfigurationError(f"curve has {len(config.curve)} entries for lists of length {size}")
    if config.family is Family.INTERPOL and config.window > size:
        raise ConfigurationError(f"window {config.window} exceeds the list length {size}")
    if propensities is not None and len(propensities) != size:
        raise DataError(f"propensity matrix is {len(propensities)}x{len(propensities)} for K={size}")


TargetPolicy = Union[Ranking, Mapping[str, Ranking]]


def _target_for(policy: TargetPolicy, query_id: str) -> Ranking:
    if isinstance(policy, Ranking):
        return policy
    try:
        target = policy[query_id]
    except KeyError as exc:
        raise DataError(f"no target ranking for query {query_id}") from exc
    if not isinstance(target, Ranking):
        raise ConfigurationError(
            f"target policy for query {query_id} must be a deterministic Ranking, got {type(target).__name__}"
        )
    return target


def estimate(
    records: Sequence[ClickRecord],
    target_policy: TargetPolicy,
    config: EstimatorConfig,
    keep_per_query: bool = False,
) -> EstimateReport:
    """Average over queries of the weighted click sum.

    Parameters
    ----------
    records : sequence of ClickRecord
        Logged queries. ``IPM`` and ``INTERPOL`` need propensities on every record.
    target_policy : Ranking or mapping of query id to Ranking
        Deterministic target ranking, shared by all queries when a single
        ``Ranking`` is given.
    config : EstimatorConfig
    keep_per_query : bool
        Retain the per-query sums on the report.

    Returns
    -------
    EstimateReport
        ``std_error`` is the sample standard deviation of per-query sums over
        ``sqrt(n)``; it is NaN for a single query.
    """
    if len(records) == 0:
        raise DataError("no records to evaluate")
    sums = np.zeros(len(records), dtype=np.float64)
    for i, record in enumerate(records):
        if config.needs_propensities and record.propensities is None:
            raise ConfigurationError(
                f"{config.family.value} needs logging propensities; query {record.query_id} has none"
            )
        target = _target_for(target_policy, record.query_id)
        logged = record.logged_ranking
        if len(target) != len(logged):
            raise DataError(
                f"query {record.query_id}: target ranks {len(target)} items, log shows {len(logged)}"
            )
        _check_sizes(len(logged), config, record.propensities)
        total = 0.0
        for logged_rank, clicked in enumerate(record.clicks):
            if not clicked:
                continue
            item = logged.items[logged_rank]
            total += item_weight(config, item, target.rank_of(item), logged_rank, record.propensities)
        sums[i] = total
    n = len(records)
    std_error = float(sums.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return EstimateReport(
        point_estimate=float(sums.mean()),
        std_error=std_error,
        n=n,
        per_query_sums=tuple(sums.tolist()) if keep_per_query else None,
    )
