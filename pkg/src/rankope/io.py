"""Click-log, policy, result-table and plot serialization."""
from __future__ import annotations

import csv
import json
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from .core import ClickRecord, EstimateReport, Ranking, RankPropensities
from .errors import ConfigurationError, DataError
from .experiments import CellResult

RESULT_COLUMNS = (
    "exponent",
    "stay_prob",
    "window",
    "n",
    "replications",
    "mean_estimate",
    "true_value",
    "bias",
    "variance",
    "mse",
)
_INT_COLUMNS = {"window", "n", "replications"}

PathLike = Union[str, Path]


@contextmanager
def _opened(target, mode: str = "w"):
    """Open a path, or pass an already open text stream through."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, mode, encoding="utf-8", newline="") as fh:
            yield fh


def record_to_dict(record: ClickRecord) -> dict:
    out = {
        "query_id": record.query_id,
        "ranking": list(record.logged_ranking.items),
        "clicks": list(record.clicks),
    }
    if record.propensities is not None:
        out["propensities"] = record.propensities.matrix.tolist()
    return out


def record_from_dict(obj: dict, cache: Optional[dict] = None) -> ClickRecord:
    if not isinstance(obj, dict):
        raise DataError("record must be a JSON object")
    missing = [k for k in ("query_id", "ranking", "clicks") if k not in obj]
    if missing:
        raise DataError(f"record is missing {', '.join(missing)}")
    raw = obj.get("propensities")
    props = None
    if raw is not None:
        key = json.dumps(raw)
        props = cache.get(key) if cache is not None else None
        if props is None:
            props = RankPropensities(raw)
            if cache is not None:
                cache[key] = props
    return ClickRecord(
        query_id=str(obj["query_id"]),
        logged_ranking=Ranking(tuple(obj["ranking"])),
        clicks=tuple(obj["clicks"]),
        propensities=props,
    )


def write_log(records: Iterable[ClickRecord], path: PathLike) -> None:
    with _opened(path) as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), separators=(",", ":")))
            fh.write("\n")


def read_log(path: PathLike) -> List[ClickRecord]:
    records = []
    # identical matrices are validated once and shared
    cache: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line), cache))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            except (DataError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return records


class PolicyTable(dict):
    """Query id to target ranking, falling back to the ``"*"`` entry."""

    def __missing__(self, key):
        if "*" in self:
            return self["*"]
        raise KeyError(key)


def read_policy(path: PathLike) -> PolicyTable:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed policy file ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise DataError(f"{path}: policy file must map query ids to rankings")
    return PolicyTable({str(k): Ranking(tuple(v)) for k, v in data.items()})


def report_to_dict(report: EstimateReport, **extra) -> dict:
    lo, hi = report.confidence_interval()
    finite = report.std_error == report.std_error
    out = dict(extra)
    out.update(
        point_estimate=report.point_estimate,
        std_error=report.std_error if finite else None,
        ci95_low=lo if finite else None,
        ci95_high=hi if finite else None,
        n=report.n,
    )
    return out


def _fmt(value: float) -> str:
    return format(value, ".15g")


def write_results(cells: Sequence[CellResult], path: PathLike) -> None:
    rows = sorted(cells, key=lambda c: (c.exponent, c.stay_prob, c.window))
    with _opened(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for cell in rows:
            writer.writerow(
                [str(getattr(cell, c)) if c in _INT_COLUMNS else _fmt(getattr(cell, c)) for c in RESULT_COLUMNS]
            )


def read_results(path: PathLike) -> List[CellResult]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise DataError(f"{path}: unexpected header {reader.fieldnames}")
        cells = []
        for lineno, row in enumerate(reader, start=2):
            try:
                cells.append(
                    CellResult(**{c: int(row[c]) if c in _INT_COLUMNS else float(row[c]) for c in RESULT_COLUMNS})
                )
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return cells


def emit_plot(
    cells: Sequence[CellResult],
    x_axis: str,
    y_axis: Union[str, Sequence[str]],
    path: PathLike,
) -> None:
    """Write an SVG line chart with one series per combination of the other grid axes.

    Several ``y_axis`` metrics are overlaid on the same axes. ``bias`` is
    drawn as squared bias so it shares units with ``mse`` and ``variance``.
    """
    from matplotlib import rcParams
    from matplotlib.figure import Figure

    if not cells:
        raise DataError("no cells to plot")
    axes_names = ("exponent", "stay_prob", "window")
    if x_axis not in axes_names:
        raise ConfigurationError(f"x_axis must be one of {axes_names}")
    metrics = [y_axis] if isinstance(y_axis, str) else list(y_axis)
    for m in metrics:
        if m not in ("mse", "bias", "variance"):
            raise ConfigurationError(f"unknown y_axis {m!r}")
    others = [a for a in axes_names if a != x_axis]

    series = {}
    for cell in cells:
        key = tuple(getattr(cell, a) for a in others)
        series.setdefault(key, []).append(cell)

    rcParams["svg.hashsalt"] = "rankope"
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot()
    for key in sorted(series):
        group = sorted(series[key], key=lambda c: getattr(c, x_axis))
        xs = [getattr(c, x_axis) for c in group]
        label = ", ".join(f"{a}={v:g}" for a, v in zip(others, key))
        for m in metrics:
            ys = [c.bias**2 if m == "bias" else getattr(c, m) for c in group]
            name = "bias^2" if m == "bias" else m
            ax.plot(xs, ys, marker="o", label=f"{name} ({label})" if len(metrics) > 1 else label)
    ax.set_xlabel(x_axis)
    ax.set_ylabel(" / ".join("bias^2" if m == "bias" else m for m in metrics))
    if len(series) * len(metrics) <= 12:
        ax.legend(fontsize="small")
    fig.savefig(path, format="svg", metadata={"Date": None})
