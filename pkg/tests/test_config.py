from pytest import mark, raises

from multisource_extractors.config import (
    SUITE_NAMES,
    BasicExtSpec,
    ExperimentConfig,
    ExtractorSpec,
    SourceSpec,
    locate_line,
    read_config,
)
from multisource_extractors.errors import ConfigError
from multisource_extractors.examples import example_config_toml, toy_roles

MINIMAL = """\
seed = 5

[params]
n = 16
k = 4
"""


@mark.parametrize("pipeline", ["iext", "bext"])
def test_example_configs_parse(pipeline):
    config = ExperimentConfig.from_toml(example_config_toml(pipeline))

    assert config.params.pipeline == pipeline
    assert sorted(config.extractors) == sorted(toy_roles(pipeline))
    assert config.params.mode == "relaxed"


def test_defaults():
    config = ExperimentConfig.from_toml(MINIMAL)

    assert config.workers == 1
    assert config.params.alpha == 1 / 6
    assert config.params.mode == "strict"
    assert config.basicext.kind == "preset"
    assert config.eval.suites == list(SUITE_NAMES)
    assert config.output.formats == ["csv", "json"]


@mark.parametrize("pipeline", ["iext", "bext"])
def test_serialising_keeps_the_configuration(pipeline):
    config = ExperimentConfig.from_toml(example_config_toml(pipeline, seed=9))

    assert ExperimentConfig.from_toml(config.to_toml()) == config


def test_point_sources_keep_their_literal():
    config = ExperimentConfig.from_toml(
        MINIMAL + '\n[sources.x]\nkind = "point"\nvalue = "0x6/4"\n'
    )

    assert config.sources["x"].value == "0x6/4"
    assert ExperimentConfig.from_toml(config.to_toml()) == config


def test_param_constants_exclude_the_derivation_inputs():
    config = ExperimentConfig.from_toml(example_config_toml())

    constants = config.params.constants()

    assert (constants.h, constants.ell, constants.d, constants.slack) == (2, 2, 2, 0)
    assert not hasattr(constants, "pipeline")


# Errors ====


def test_errors_name_the_line_of_the_key():
    text = "seed = 1\n\n[params]\nn = 16\nk = 0\n"

    with raises(ConfigError) as error:
        ExperimentConfig.from_toml(text, origin="exp.toml")

    assert "exp.toml:5: params.k" in str(error.value)


def test_errors_fall_back_to_the_table_header():
    text = MINIMAL + '\n[extractors.ext1]\nkind = "search"\nn = 4\n'

    with raises(ConfigError) as error:
        ExperimentConfig.from_toml(text, origin="exp.toml")

    assert "exp.toml:7: extractors.ext1" in str(error.value)
    assert "needs d, m, k" in str(error.value)


def test_missing_keys_have_no_line():
    with raises(ConfigError) as error:
        ExperimentConfig.from_toml("[params]\nn = 16\nk = 4\n", origin="exp.toml")

    assert "exp.toml: seed" in str(error.value)


def test_unknown_keys_are_rejected():
    with raises(ConfigError) as error:
        ExperimentConfig.from_toml("colour = 1\n" + MINIMAL, origin="exp.toml")

    assert "exp.toml:1: colour" in str(error.value)


def test_unknown_suites_are_rejected():
    with raises(ConfigError):
        ExperimentConfig.from_toml(MINIMAL + '\n[eval]\nsuites = ["speed"]\n')


def test_syntax_errors_are_config_errors():
    with raises(ConfigError, match="exp.toml"):
        ExperimentConfig.from_toml("seed = \n", origin="exp.toml")


def test_missing_config_file(tmp_path):
    with raises(ConfigError, match="Cannot read"):
        read_config(tmp_path / "experiment.toml")


def test_read_config_returns_the_text(tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text(MINIMAL)

    config, text = read_config(path)

    assert text == MINIMAL
    assert config.seed == 5


@mark.parametrize(
    "spec, kwargs",
    [
        (ExtractorSpec, {"kind": "toeplitz", "n": 4}),
        (ExtractorSpec, {"kind": "lookup-file"}),
        (BasicExtSpec, {"kind": "fold"}),
        (BasicExtSpec, {"kind": "ideal"}),
        (SourceSpec, {"kind": "point"}),
        (SourceSpec, {"kind": "flat-random", "n": 4}),
        (SourceSpec, {"kind": "uniform"}),
        (SourceSpec, {"kind": "point", "value": "6/4"}),
    ],
)
def test_specs_need_the_fields_of_their_kind(spec, kwargs):
    with raises(ValueError):
        spec(**kwargs)


# Overrides ====


def test_overrides():
    config = ExperimentConfig.from_toml(MINIMAL)

    changed = config.with_overrides(seed=8, workers=3, out="elsewhere", mode="relaxed")

    assert changed.seed == 8
    assert changed.workers == 3
    assert changed.output.directory == "elsewhere"
    assert changed.params.mode == "relaxed"
    assert config.with_overrides() == config


def test_overrides_are_validated():
    with raises(ConfigError):
        ExperimentConfig.from_toml(MINIMAL).with_overrides(seed=-1)


# Line lookup ====


def test_locate_line():
    text = 'seed = 1\n[params]\nk = 0\n\n[extractors."ext1"]\nn = 2\n'

    assert locate_line(text, ["seed"]) == 1
    assert locate_line(text, ["params", "k"]) == 3
    assert locate_line(text, ["extractors", "ext1", "n"]) == 6
    assert locate_line(text, ["extractors", "ext1", "m"]) == 5
    assert locate_line(text, ["output", "directory"]) is None
