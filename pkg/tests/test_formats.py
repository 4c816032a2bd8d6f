from pytest import fixture, raises

from multisource_extractors.bits import BitString
from multisource_extractors.errors import ConfigError
from multisource_extractors.examples import (
    TOY_CONSTANTS,
    toy_basicext,
    toy_params,
    toy_suite,
)
from multisource_extractors.extractors import LookupExtractor
from multisource_extractors.formats import (
    config_digest,
    dump_sr_matrix,
    dump_trace,
    lookup_to_toml,
    manifest_text,
    parse_sr_matrix,
    read_lookup_table,
    read_source,
    write_lookup_table,
    write_manifest,
    write_source,
)
from multisource_extractors.params import derive_params
from multisource_extractors.pipeline import iext
from multisource_extractors.sources import DiscreteSource, FlatSource
from multisource_extractors.srgen import SRMatrix


def bits(text: str) -> BitString:
    return BitString.from_str(text)


@fixture
def xor_table() -> LookupExtractor:
    return LookupExtractor(
        2,
        1,
        2,
        LookupExtractor.from_function(2, 1, 2, lambda x, s: x ^ (s + s)).values,
        claimed_k=1,
        measured_eps=0.25,
    )


# Sources ====


def test_flat_source_file(tmp_path):
    source = FlatSource.of(4, [bits("0001"), bits("1000")])

    path = write_source(tmp_path / "x.toml", source)

    assert "probabilities" not in path.read_text()
    assert '"0x1/4"' in path.read_text()
    assert read_source(path) == source


def test_weighted_source_file(tmp_path):
    source = DiscreteSource.from_table(2, {bits("00"): 0.75, bits("11"): 0.25})

    loaded = read_source(write_source(tmp_path / "x.toml", source))

    assert loaded.support == source.support
    assert loaded.probabilities == source.probabilities


def test_missing_source_file(tmp_path):
    with raises(ConfigError, match="Cannot read"):
        read_source(tmp_path / "missing.toml")


def test_malformed_source_files(tmp_path):
    path = tmp_path / "x.toml"

    path.write_text('values = ["0x1/4"]\n')
    with raises(ConfigError, match="`n`"):
        read_source(path)
    path.write_text('n = 4\nvalues = ["1/4"]\n')
    with raises(ConfigError):
        read_source(path)
    path.write_text("n = \n")
    with raises(ConfigError, match="not valid TOML"):
        read_source(path)


# Lookup tables ====


def test_lookup_table_header(xor_table):
    text = lookup_to_toml(xor_table)

    assert "measured_eps = 0.25" in text
    assert "k = 1" in text
    assert '"0x3/4"' in text


def test_lookup_table_file(tmp_path, xor_table):
    path = write_lookup_table(tmp_path / "tables" / "ext1.toml", xor_table)

    loaded = read_lookup_table(path)

    assert loaded == xor_table
    assert loaded.measured_eps == 0.25
    assert loaded.claimed_k == 1


def test_lookup_table_rows_must_fit(tmp_path):
    path = tmp_path / "table.toml"
    path.write_text('n = 1\nd = 1\nm = 1\nrows = ["0x1/2"]\n')

    with raises(ConfigError, match="needs 2 rows"):
        read_lookup_table(path)


# SR matrices ====


def test_sr_matrix_dump():
    matrix = SRMatrix.of([bits("00"), bits("11"), bits("01")])

    text = dump_sr_matrix(matrix)

    assert text == "N = 3\nrow_len = 2\n0\n3\n1\n"
    assert parse_sr_matrix(text) == matrix


def test_wide_rows_are_zero_padded():
    matrix = SRMatrix.of([BitString(9, 5)])

    assert dump_sr_matrix(matrix).splitlines()[2] == "005"


def test_malformed_sr_matrix_dumps():
    with raises(ConfigError):
        parse_sr_matrix("N = 2\nrow_len = 2\n0\n")
    with raises(ConfigError):
        parse_sr_matrix("N = x\n")


# Traces and manifests ====


def toy_trace():
    return iext(
        toy_params(),
        toy_suite("iext"),
        toy_basicext("iext"),
        bits("10"),
        bits("0110"),
        bits("1011"),
    ).trace


def test_trace_lists_every_stage():
    text = dump_trace(toy_trace())

    assert "[stage sr]\nrows = 4\nrow_len = 2\n" in text
    assert "survivors = 1,3" in text
    assert "[stage output]\nrows = 1\nrow_len = 2\n0x1/2" in text


def test_trace_with_parameters_and_constraints():
    params, report = derive_params(
        4, 2, gamma=0.5, mode="relaxed", constants=TOY_CONSTANTS
    )

    text = dump_trace(toy_trace(), params, report)

    assert text.startswith("[params]\nn = 4\nk = 2\n")
    assert "[constraints]\n" in text
    assert "FAIL ssr-entropy" in text
    assert "[red]" not in text


def test_config_digest():
    assert config_digest("") == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )


def test_manifest(tmp_path):
    text = "seed = 3\n"

    path = write_manifest(tmp_path / "out", text, 3)

    lines = path.read_text().splitlines()
    assert lines[0] == f"config_sha256 = {config_digest(text)}"
    assert lines[1] == "seed = 3"
    assert path.read_text() == manifest_text(text, 3)
