"""Metric records and the `metrics.csv` / `metrics.json` writers."""

import csv
import io
import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from jsonschema import Draft7Validator
from seedcase_soil import fmap

from multisource_extractors.constants import (
    FLOAT_SLACK,
    METRIC_COLUMNS,
    METRICS_SCHEMA_PATH,
)
from multisource_extractors.errors import ConfigError


@dataclass(order=True, frozen=True)
class Metric:
    """One measured quantity compared with its threshold.

    Attributes:
        metric: What was measured, e.g. `strong-distance`.
        fixture: The input it was measured on.
        measured: The measured value.
        threshold: The largest passing value.
        passed: Whether `measured <= threshold`, unless given explicitly.
        biased_up: Whether the value is a Monte Carlo estimate biased upwards.
        detail: Per-subset or per-fixing detail for the JSON mirror. Not
            considered when comparing `Metric` objects.

    Examples:
        ```{python}
        import multisource_extractors as msx

        msx.Metric.of("strong-distance", "uniform-4", 0.125, 0.25)
        ```
    """

    metric: str
    fixture: str
    measured: float
    threshold: float
    passed: bool
    biased_up: bool = False
    detail: dict[str, Any] = field(
        default_factory=dict, compare=False, hash=False, repr=False
    )

    @classmethod
    def of(
        cls,
        metric: str,
        fixture: str,
        measured: float,
        threshold: float,
        **detail: Any,
    ) -> "Metric":
        """A metric that passes when `measured <= threshold`."""
        return cls(
            metric=metric,
            fixture=fixture,
            measured=measured,
            threshold=threshold,
            passed=measured <= threshold + FLOAT_SLACK,
            detail=detail,
        )


def _number(value: float) -> str:
    return format(value, ".12g")


def metrics_csv(metrics: list[Metric]) -> str:
    """The CSV text with one row per metric."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for metric in metrics:
        writer.writerow(
            [
                metric.metric,
                metric.fixture,
                _number(metric.measured),
                _number(metric.threshold),
                str(metric.passed).lower(),
            ]
        )
    return buffer.getvalue()


def metrics_document(
    metrics: list[Metric], seed: int, config_sha256: str
) -> dict[str, Any]:
    """The JSON mirror of the metrics, with full detail.

    Raises:
        ConfigError: If the document does not match the bundled schema.
    """
    document = {
        "seed": seed,
        "config_sha256": config_sha256,
        "metrics": fmap(metrics, _metric_json),
    }
    schema = json.loads(METRICS_SCHEMA_PATH.read_text())
    errors = sorted(Draft7Validator(schema).iter_errors(document), key=str)
    if errors:
        raise ConfigError(
            "The metrics document does not match its schema: "
            + "; ".join(fmap(errors, lambda error: error.message))
        )
    return document


def _metric_json(metric: Metric) -> dict[str, Any]:
    entry: dict[str, Any] = {
        "metric": metric.metric,
        "fixture": metric.fixture,
        "measured": metric.measured,
        "threshold": metric.threshold,
        "pass": metric.passed,
    }
    if metric.biased_up:
        entry["biased_up"] = True
    if metric.detail:
        entry["detail"] = metric.detail
    return entry


def write_metrics(
    out_dir: Path,
    metrics: list[Metric],
    seed: int,
    config_sha256: str,
    formats: Sequence[str] = ("csv", "json"),
) -> list[Path]:
    """Write `metrics.csv` and `metrics.json` into `out_dir`.

    The JSON document is validated even when only the CSV file is written.

    Returns:
        The written paths.
    """
    document = metrics_document(metrics, seed, config_sha256)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    if "csv" in formats:
        paths.append(out_dir / "metrics.csv")
        paths[-1].write_text(metrics_csv(metrics))
    if "json" in formats:
        paths.append(out_dir / "metrics.json")
        paths[-1].write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    return paths
