from pytest import approx, fixture, raises

from multisource_extractors.bits import BitString
from multisource_extractors.config import ExperimentConfig, ExtractorSpec, SourceSpec
from multisource_extractors.errors import ConfigError
from multisource_extractors.examples import example_config_toml, toy_params
from multisource_extractors.experiment import (
    build_extractor,
    build_source,
    final_rows,
    run_experiment,
    search_tables,
)
from multisource_extractors.formats import read_lookup_table
from multisource_extractors.internals import make_rng
from multisource_extractors.params import ConstraintError
from multisource_extractors.sources import min_entropy


@fixture
def iext_config() -> ExperimentConfig:
    return ExperimentConfig.from_toml(example_config_toml("iext"))


# Runs ====


def test_toy_iext_run(iext_config):
    """The toy output is `y1[:2] ^ y1[2:] ^ 10`, so it is uniform given `x` only."""
    result = run_experiment(iext_config)
    output, in_y, in_x = result.metrics

    assert result.trace.names() == ["sr", "lightest-bin", "z1", "z2", "z3", "output"]
    assert [metric.metric for metric in result.metrics] == [
        "output-distance",
        "strong-in-y",
        "strong-in-x",
    ]
    assert [metric.threshold for metric in result.metrics] == [0.2, 0.25, 0.25]
    assert output.measured == approx(0.0)
    assert output.passed
    assert in_y.measured == approx(0.75)
    assert in_y.detail == {"passing_mass": 0.0, "fixings": 256}
    assert not in_y.passed
    assert in_x.measured == approx(0.0)
    assert in_x.detail == {"passing_mass": 1.0, "fixings": 4}
    assert in_x.passed


def test_runs_replay_exactly(iext_config):
    first = run_experiment(iext_config)
    second = run_experiment(iext_config)

    assert first.trace == second.trace
    assert first.metrics == second.metrics


def test_toy_bext_run():
    """Fixed blocks shrink the matrix in two rounds and swap the sources."""
    config = ExperimentConfig.from_toml(example_config_toml("bext"))

    result = run_experiment(config)

    assert result.trace.names() == ["sr", "round-1", "round-2", "terminal", "output"]
    assert result.trace.stage("output").rows == (BitString.from_str("01"),)
    assert dict(result.trace.stage("terminal").details)["swapped"] == "True"
    assert result.metrics[0].measured == 0.75


def test_monte_carlo_metric_is_flagged(iext_config):
    config = iext_config.model_copy(
        update={"eval": iext_config.eval.model_copy(update={"mc_samples": 200})}
    )

    metric = run_experiment(config).metrics[-1]

    assert metric.metric == "output-distance-mc"
    assert metric.biased_up


def test_strict_mode_stops_the_run(iext_config):
    with raises(ConstraintError):
        run_experiment(iext_config.with_overrides(mode="strict"))


def test_missing_sources_are_config_errors():
    text = example_config_toml("iext").replace("[sources.y2]", "[sources.z]")

    with raises(ConfigError, match="y2"):
        run_experiment(ExperimentConfig.from_toml(text))


def test_unknown_roles_are_config_errors():
    text = example_config_toml("iext") + '\n[extractors.ext9]\nkind = "preset"\n'

    with raises(ConfigError, match="ext9"):
        run_experiment(ExperimentConfig.from_toml(text))


# Building blocks ====


def test_build_sources():
    rng = make_rng(0)

    point = build_source(SourceSpec(kind="point", value="0x6/4"), rng)
    flat = build_source(SourceSpec(kind="flat-random", n=6, k=3), rng)
    prefix = build_source(SourceSpec(kind="prefix", n=4, k=2, prefix=3), rng)

    assert point.support == (BitString.from_str("0110"),)
    assert min_entropy(flat) == 3
    assert prefix.support[0] == BitString.from_str("1100")


def test_source_files(tmp_path):
    spec = SourceSpec(kind="file", path=str(tmp_path / "missing.toml"))

    with raises(ConfigError):
        build_source(spec, make_rng(0))


def test_toeplitz_seed_length_must_match(iext_config):
    spec = ExtractorSpec(kind="toeplitz", n=4, m=2, d=4)

    with raises(ConfigError, match="5 seed bits"):
        build_extractor(spec, "ext1", iext_config, make_rng(0))
    ext = build_extractor(
        ExtractorSpec(kind="toeplitz", n=4, m=2), "ext1", iext_config, make_rng(0)
    )
    assert ext.d == 5


def test_final_rows():
    params = toy_params()

    assert final_rows(params, "iext") == 2
    assert final_rows(params, "bext") == 1


# Searching ====


def test_search_tables_writes_each_table(tmp_path):
    text = (
        "seed = 3\n\n[params]\nn = 16\nk = 4\n\n"
        '[extractors.ext1]\nkind = "search"\nn = 3\nd = 2\nm = 1\nk = 2\n'
        "target_eps = 1.0\ntrials = 2\n"
    )
    config = ExperimentConfig.from_toml(text)

    paths = search_tables(config, tmp_path)

    assert paths == [tmp_path / "tables" / "ext1.toml"]
    table = read_lookup_table(paths[0])
    assert (table.n, table.d, table.m) == (3, 2, 1)
    assert table.measured_eps is not None


def test_search_tables_needs_something_to_search(tmp_path, iext_config):
    with raises(ConfigError, match="Nothing to search"):
        search_tables(iext_config, tmp_path)
