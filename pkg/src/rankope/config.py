"""Run configuration for the command line tool.

A config is a YAML (or JSON) mapping whose keys are the fields of
:class:`RunConfig`. Missing keys take the toy-experiment defaults.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import yaml

from .clicks import (
    TOY_EXPONENTS,
    TOY_K,
    TOY_LOGGING,
    TOY_N,
    TOY_RELEVANT,
    TOY_STAY_PROBS,
    TOY_TARGET,
    Scenario,
    UserModel,
    binary_relevance,
    linear_curve,
    power_curve,
)
from .core import EstimatorConfig, Family, PositionBiasCurve, Ranking
from .errors import ConfigurationError, RankOPEError
from .experiments import DEFAULT_REPLICATIONS, ExperimentGrid
from .logging_policy import Sampler, SwapPolicy

MODES = ("simulate", "evaluate", "grid", "oracle", "plot")
AXES = ("window", "stay_prob", "exponent")
METRICS = ("mse", "bias", "variance")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "grid"
    # scenario
    K: int = TOY_K
    stay_prob: float = 0.95
    n: int = TOY_N
    seed: Optional[int] = None
    sampler: str = Sampler.IDENTITY_OR_UNIFORM.value
    true_curve: Optional[tuple] = None
    relevance: Optional[tuple] = None
    relevant: Optional[tuple] = None
    base_ranking: Optional[tuple] = None
    target_ranking: Optional[tuple] = None
    # estimator
    family: str = Family.INTERPOL.value
    window: int = 2
    curve: Optional[tuple] = None
    exponent: float = 1.0
    # grid
    exponents: tuple = TOY_EXPONENTS
    stay_probs: tuple = TOY_STAY_PROBS
    windows: Optional[tuple] = None
    replications: int = DEFAULT_REPLICATIONS
    workers: int = 1
    # io
    input: Optional[str] = None
    output: Optional[str] = None
    policy: Optional[str] = None
    # plot
    x_axis: str = "window"
    y_axis: tuple = ("mse",)
    select: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, Mapping):
                value = {k: list(v) for k, v in value.items()}
            out[f.name] = value
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    # -- builders -----------------------------------------------------------

    def _require(self, key: str):
        value = getattr(self, key)
        if value is None:
            raise ConfigurationError(f"{key} is required when K != {TOY_K}")
        return value

    def true_position_curve(self) -> PositionBiasCurve:
        if self.true_curve is None:
            return linear_curve(self.K)
        return PositionBiasCurve(self.true_curve)

    def estimator_curve(self, K: Optional[int] = None) -> PositionBiasCurve:
        if self.curve is not None:
            return PositionBiasCurve(self.curve)
        base = self.true_position_curve() if K is None or K == self.K else linear_curve(K)
        return power_curve(base, self.exponent)

    def estimator(self, K: Optional[int] = None) -> EstimatorConfig:
        curve = None if self.family == Family.IPM.value else self.estimator_curve(K)
        return EstimatorConfig(Family(self.family), self.window, curve)

    def scenario(self) -> Scenario:
        if self.relevance is not None:
            relevance = self.relevance
        else:
            relevance = binary_relevance(self.K, self._require("relevant"))
        return Scenario(
            user=UserModel(relevance, self.true_position_curve()),
            logging=SwapPolicy(Ranking(self._require("base_ranking")), self.stay_prob, Sampler(self.sampler)),
            target=Ranking(self._require("target_ranking")),
        )

    def grid(self) -> ExperimentGrid:
        return ExperimentGrid(
            self.exponents, self.stay_probs, self.windows, self.n, self.replications, self.seed or 0
        )


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _as_int(key: str, value: Any, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigurationError(f"{key} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"{key} must be >= {minimum}, got {value}")
    return value


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key} must be a number, got {value!r}")
    return float(value)


def _as_list(key: str, value: Any) -> list:
    if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
        raise ConfigurationError(f"{key} must be a list, got {value!r}")
    return list(value)


def _check_stay_prob(key: str, q: float, K: int, sampler: str) -> None:
    if not 0.0 <= q <= 1.0:
        raise ConfigurationError(f"{key}: stay probability {q} is outside [0, 1]")
    if sampler == Sampler.IDENTITY_OR_UNIFORM.value and q * K < 1.0:
        raise ConfigurationError(
            f"{key}: stay probability {q} violates q >= 1/K = {1.0 / K:.6g} required by the "
            "identity-or-uniform sampler"
        )


def _choice(key: str, value: Any, options) -> str:
    value = getattr(value, "value", value)
    if value not in options:
        raise ConfigurationError(f"{key} must be one of {', '.join(options)}, got {value!r}")
    return value


def config_from_mapping(data: Optional[Mapping]) -> RunConfig:
    """Validate ``data`` and fill in defaults."""
    data = dict(data or {})
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
    values: dict = {}
    defaults = RunConfig()

    def get(key):
        return data.get(key, getattr(defaults, key))

    values["mode"] = _choice("mode", get("mode"), MODES)
    K = values["K"] = _as_int("K", get("K"), minimum=2)
    values["sampler"] = sampler = _choice("sampler", get("sampler"), [s.value for s in Sampler])
    values["family"] = _choice("family", get("family"), [f.value for f in Family])
    values["n"] = _as_int("n", get("n"), minimum=1)
    values["replications"] = _as_int("replications", get("replications"), minimum=2)
    values["workers"] = _as_int("workers", get("workers"), minimum=1)
    seed = get("seed")
    values["seed"] = None if seed is None else _as_int("seed", seed)

    q = values["stay_prob"] = _as_float("stay_prob", get("stay_prob"))
    _check_stay_prob("stay_prob", q, K, sampler)
    stay_probs = tuple(_as_float("stay_probs", v) for v in _as_list("stay_probs", get("stay_probs")))
    for v in stay_probs:
        _check_stay_prob("stay_probs", v, K, sampler)
    values["stay_probs"] = stay_probs

    values["exponent"] = x = _as_float("exponent", get("exponent"))
    if x <= 0:
        raise ConfigurationError(f"exponent must be positive, got {x}")
    exponents = tuple(_as_float("exponents", v) for v in _as_list("exponents", get("exponents")))
    if any(v <= 0 for v in exponents):
        raise ConfigurationError(f"exponents must all be positive, got {list(exponents)}")
    values["exponents"] = exponents

    values["window"] = _as_int("window", get("window"), minimum=0)
    windows = data.get("windows")
    if windows is None:
        windows = range(K + 1)
    values["windows"] = tuple(_as_int("windows", v, minimum=0) for v in _as_list("windows", windows))

    for key in ("true_curve", "curve", "relevance"):
        value = get(key)
        if value is not None:
            value = tuple(_as_float(key, v) for v in _as_list(key, value))
            if len(value) != K:
                raise ConfigurationError(f"{key} has {len(value)} entries, expected K={K}")
            if key != "relevance":
                try:
                    PositionBiasCurve(value)
                except RankOPEError as exc:
                    raise ConfigurationError(f"{key}: {exc}") from exc
            elif any(not 0.0 <= v <= 1.0 for v in value):
                raise ConfigurationError("relevance values must lie in [0, 1]")
        values[key] = value

    toy = K == TOY_K
    for key, toy_default in (
        ("relevant", TOY_RELEVANT),
        ("base_ranking", TOY_LOGGING),
        ("target_ranking", TOY_TARGET),
    ):
        value = data.get(key)
        if value is None:
            value = toy_default if toy else None
        if value is not None:
            value = tuple(_as_int(key, v, minimum=0) for v in _as_list(key, value))
            if key != "relevant" and sorted(value) != list(range(K)):
                raise ConfigurationError(f"{key} must be a permutation of 0..{K - 1}")
            if key == "relevant" and any(v >= K for v in value):
                raise ConfigurationError(f"relevant items must lie in 0..{K - 1}")
        values[key] = value

    for key in ("input", "output", "policy"):
        value = get(key)
        values[key] = None if value is None else str(value)

    values["x_axis"] = _choice("x_axis", get("x_axis"), AXES)
    y_axis = get("y_axis")
    if isinstance(y_axis, str):
        y_axis = [y_axis]
    values["y_axis"] = tuple(_choice("y_axis", v, METRICS) for v in _as_list("y_axis", y_axis))
    if not values["y_axis"]:
        raise ConfigurationError("y_axis must name at least one metric")

    select = get("select") or {}
    if not isinstance(select, Mapping):
        raise ConfigurationError("select must be a mapping of axis name to values")
    cleaned = {}
    for key, vals in select.items():
        _choice("select", key, AXES)
        if not isinstance(vals, (list, tuple)):
            vals = [vals]
        cleaned[key] = tuple(_as_float(f"select.{key}", v) for v in vals)
    values["select"] = cleaned
    return RunConfig(**values)


def parse_config(text: str) -> RunConfig:
    """Parse a YAML/JSON document into a validated :class:`RunConfig`."""
    try:
        data = yaml.safe_load(text) if text and text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(data, Mapping):
        raise ConfigurationError("config document must be a mapping")
    return config_from_mapping(data)
