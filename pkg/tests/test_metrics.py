import json

from pytest import raises

from multisource_extractors.errors import ConfigError
from multisource_extractors.formats import config_digest
from multisource_extractors.metrics import (
    Metric,
    metrics_csv,
    metrics_document,
    write_metrics,
)

DIGEST = config_digest("seed = 1\n")


def sample_metrics() -> list[Metric]:
    return [
        Metric.of("strong-distance", "uniform-4", 0.125, 0.25, fixings=4),
        Metric.of("output-distance", "toy", 0.5, 0.25),
        Metric(
            metric="output-distance-mc",
            fixture="toy",
            measured=0.1,
            threshold=0.2,
            passed=True,
            biased_up=True,
        ),
    ]


def test_metric_passes_at_or_below_its_threshold():
    assert Metric.of("m", "f", 0.25, 0.25).passed
    assert not Metric.of("m", "f", 0.3, 0.25).passed


def test_detail_is_not_compared():
    assert Metric.of("m", "f", 0.1, 0.2, a=1) == Metric.of("m", "f", 0.1, 0.2, a=2)


def test_csv_has_one_row_per_metric():
    lines = metrics_csv(sample_metrics()).splitlines()

    assert lines[0] == "metric,fixture,measured,threshold,pass"
    assert lines[1] == "strong-distance,uniform-4,0.125,0.25,true"
    assert lines[2] == "output-distance,toy,0.5,0.25,false"
    assert len(lines) == 4


def test_json_mirror_keeps_detail_and_bias():
    document = metrics_document(sample_metrics(), 7, DIGEST)

    assert document["seed"] == 7
    assert document["metrics"][0]["detail"] == {"fixings": 4}
    assert "detail" not in document["metrics"][1]
    assert document["metrics"][2]["biased_up"] is True


def test_json_mirror_is_validated():
    with raises(ConfigError):
        metrics_document(sample_metrics(), 7, "not-a-digest")
    with raises(ConfigError):
        metrics_document([Metric.of("", "f", 0.1, 0.2)], 7, DIGEST)


def test_write_both_formats(tmp_path):
    paths = write_metrics(tmp_path / "out", sample_metrics(), 7, DIGEST)

    assert [path.name for path in paths] == ["metrics.csv", "metrics.json"]
    document = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert document["config_sha256"] == DIGEST
    assert [entry["pass"] for entry in document["metrics"]] == [True, False, True]


def test_write_only_the_requested_format(tmp_path):
    paths = write_metrics(tmp_path, sample_metrics(), 7, DIGEST, formats=["csv"])

    assert paths == [tmp_path / "metrics.csv"]
    assert not (tmp_path / "metrics.json").exists()


def test_written_metrics_are_identical_for_identical_input(tmp_path):
    write_metrics(tmp_path / "a", sample_metrics(), 7, DIGEST)
    write_metrics(tmp_path / "b", sample_metrics(), 7, DIGEST)

    for name in ("metrics.csv", "metrics.json"):
        first = (tmp_path / "a" / name).read_text()
        assert first == (tmp_path / "b" / name).read_text()
