from pytest import mark, raises

from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError
from multisource_extractors.examples import (
    example_config_toml,
    toy_basicext,
    toy_extractor,
    toy_roles,
    toy_suite,
)
from multisource_extractors.srgen import SRMatrix


def bits(text: str) -> BitString:
    return BitString.from_str(text)


def test_toy_roles_fill_each_pipeline():
    assert toy_roles("iext")[-2:] == ["ext_y2", "ext_x"]
    assert toy_roles("bext")[-2:] == ["ext_loop", "ext_final"]


def test_toy_extractors_compute_their_functions():
    assert toy_extractor("ext1").evaluate(bits("0110"), bits("11")) == bits("10")
    assert toy_extractor("ext_loop", "bext").evaluate(
        bits("0110"), bits("01")
    ) == bits("11")


def test_unknown_toy_roles_are_rejected():
    with raises(DomainError):
        toy_extractor("ext_loop", "iext")


@mark.parametrize("pipeline", ["iext", "bext"])
def test_toy_suite_fills_every_role(pipeline):
    suite = toy_suite(pipeline)

    for role in toy_roles(pipeline):
        assert getattr(suite, role) is not None


def test_toy_final_extractor_folds_the_rows():
    """`y[2:4]` XOR every row."""
    basicext = toy_basicext("iext")
    matrix = SRMatrix.of([bits("01"), bits("11")])

    assert basicext.rows == 2
    assert toy_basicext("bext").rows == 1
    assert basicext.evaluate(bits("0110"), matrix) == bits("10")


def test_example_config_names_the_pipeline():
    assert 'pipeline = "bext"' in example_config_toml("bext")
    assert example_config_toml("iext", seed=9).startswith("seed = 9\n")
