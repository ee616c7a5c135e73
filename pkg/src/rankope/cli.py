"""Command line entry point: ``rankope {simulate,evaluate,grid,oracle,plot}``.

Every subcommand accepts ``--config FILE`` plus flags mirroring the config
keys; flags override the file. Exit codes: 0 success, 2 configuration
error, 3 data error, 4 support violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

import yaml

from . import io
from .clicks import generate_dataset, true_value
from .config import AXES, METRICS, RunConfig, config_from_mapping
from .core import Family, Ranking, estimate
from .errors import ConfigurationError, DataError, RankOPEError
from .experiments import exhaustive_oracle, run_grid

_INT = ("K", "n", "seed", "window", "replications", "workers")
_FLOAT = ("stay_prob", "exponent")
_STR = ("sampler", "family", "input", "output", "policy", "x_axis")
_FLOAT_LIST = ("true_curve", "relevance", "curve", "exponents", "stay_probs")
_INT_LIST = ("relevant", "base_ranking", "target_ranking", "windows")


def _parse_select(text: str):
    key, sep, values = text.partition("=")
    if not sep or key not in AXES:
        raise argparse.ArgumentTypeError(f"expected AXIS=V1,V2 with AXIS in {AXES}, got {text!r}")
    try:
        return key, [float(v) for v in values.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="YAML/JSON config file")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    for name in _INT:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    for name in _FLOAT:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    for name in _STR:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name)
    for name in _FLOAT_LIST:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, nargs="+")
    for name in _INT_LIST:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, nargs="+")
    p.add_argument("--y-axis", dest="y_axis", nargs="+", choices=METRICS)
    p.add_argument(
        "--select", dest="select", type=_parse_select, action="append",
        help="plot only cells with AXIS in the listed values, e.g. --select exponent=1.8",
    )
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="rankope", description="Off-policy evaluation of rankings.")
    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate a click log (JSONL)")
    sub.add_parser("evaluate", parents=[common], help="estimate a target policy's value from a log")
    sub.add_parser("grid", parents=[common], help="run the replicated experiment grid (CSV)")
    sub.add_parser("oracle", parents=[common], help="exact expected estimate by enumeration")
    sub.add_parser("plot", parents=[common], help="chart a results CSV (SVG)")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    values = vars(args).copy()
    mode = values.pop("mode")
    values.pop("verbose", None)
    data = {}
    path = values.pop("config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config {path} is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"config {path} must be a mapping")
    if "select" in values:
        values["select"] = dict(values["select"])
    data.update(values)
    data["mode"] = mode
    return config_from_mapping(data)


def _emit_text(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _require_seed(cfg: RunConfig) -> None:
    if cfg.seed is None:
        raise ConfigurationError(f"seed is required for {cfg.mode}")


def cmd_simulate(cfg: RunConfig) -> None:
    _require_seed(cfg)
    records = generate_dataset(cfg.scenario(), cfg.n, cfg.seed)
    io.write_log(records, cfg.output if cfg.output is not None else sys.stdout)


def cmd_evaluate(cfg: RunConfig) -> None:
    if cfg.input is None:
        raise ConfigurationError("input (a JSONL click log) is required for evaluate")
    records = io.read_log(cfg.input)
    if not records:
        raise DataError("click log is empty")
    K = len(records[0].logged_ranking)
    if cfg.policy is not None:
        target = io.read_policy(cfg.policy)
    else:
        if cfg.target_ranking is None:
            raise ConfigurationError("target_ranking or policy is required")
        target = Ranking(cfg.target_ranking)
    report = estimate(records, target, cfg.estimator(K))
    info = {"family": cfg.family}
    if cfg.family == Family.INTERPOL.value:
        info["window"] = cfg.window
    _emit_text(json.dumps(io.report_to_dict(report, **info), indent=2) + "\n", cfg.output)


def cmd_grid(cfg: RunConfig) -> None:
    _require_seed(cfg)
    cells = run_grid(cfg.scenario(), cfg.grid(), workers=cfg.workers)
    io.write_results(cells, cfg.output if cfg.output is not None else sys.stdout)


def cmd_oracle(cfg: RunConfig) -> None:
    scenario = cfg.scenario()
    curve = cfg.estimator_curve()
    value = exhaustive_oracle(scenario, cfg.window, curve)
    truth = true_value(scenario.target, scenario.user)
    out = {
        "window": cfg.window,
        "stay_prob": cfg.stay_prob,
        "sampler": cfg.sampler,
        "estimator_curve": list(curve.probs),
        "expected_estimate": value,
        "true_value": truth,
        "bias": value - truth,
    }
    _emit_text(json.dumps(out, indent=2) + "\n", cfg.output)


def cmd_plot(cfg: RunConfig) -> None:
    if cfg.input is None or cfg.output is None:
        raise ConfigurationError("plot needs input (results CSV) and output (SVG path)")
    cells = io.read_results(cfg.input)
    for axis, allowed in cfg.select.items():
        cells = [c for c in cells if any(abs(getattr(c, axis) - v) < 1e-12 for v in allowed)]
    io.emit_plot(cells, cfg.x_axis, cfg.y_axis, cfg.output)


COMMANDS = {
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
    "oracle": cmd_oracle,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args)
        COMMANDS[cfg.mode](cfg)
    except RankOPEError as exc:
        print(f"rankope: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"rankope: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
