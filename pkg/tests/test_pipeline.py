from dataclasses import replace

from pytest import raises

from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError, InsufficientBlocksError
from multisource_extractors.examples import toy_basicext, toy_params, toy_suite
from multisource_extractors.pipeline import bext, iext, three_source_iext
from multisource_extractors.srgen import SRMatrix, SRResult


def bits(text: str) -> BitString:
    return BitString.from_str(text)


def rows(*texts: str) -> tuple[BitString, ...]:
    return tuple(bits(text) for text in texts)


# Three-source extractor ====


def run_toy_iext():
    return iext(
        toy_params(),
        toy_suite("iext"),
        toy_basicext("iext"),
        bits("10"),
        bits("0110"),
        bits("1011"),
    )


def test_iext_golden_output():
    result = run_toy_iext()

    assert result.v == bits("01")
    assert result.bins.bin_counts == (2, 2)
    assert result.bins.chosen_bin == 1
    assert result.bins.survivors == (1, 3)


def test_iext_records_every_stage():
    trace = run_toy_iext().trace

    assert trace.names() == ["sr", "lightest-bin", "z1", "z2", "z3", "output"]
    assert trace.stage("sr").rows == rows("00", "11", "01", "11")
    assert trace.stage("z1").rows == rows("00", "01")
    assert trace.stage("z2").rows == rows("10", "11")
    assert trace.stage("z3").rows == rows("00", "01")
    assert dict(trace.stage("lightest-bin").details)["survivors"] == "1,3"
    assert dict(trace.stage("z1").details) == {"padding": "0", "dropped": "0"}


def test_iext_records_survivors_beyond_the_bin_budget(mocker):
    """With every row in the first bin, four survivors meet two slots."""
    z = SRMatrix(2, rows("00", "01", "00", "01"))
    mocker.patch(
        "multisource_extractors.pipeline.sr",
        return_value=SRResult(w=z, ybar=z, z=z),
    )

    result = run_toy_iext()
    z1 = result.trace.stage("z1")

    assert result.bins.survivors == (1, 2, 3, 4)
    assert z1.rows == rows("00", "01")
    assert dict(z1.details) == {"padding": "0", "dropped": "2"}


def test_three_sources_are_two_blocks():
    result = three_source_iext(
        toy_params(),
        toy_suite("iext"),
        toy_basicext("iext"),
        bits("10"),
        bits("0110"),
        bits("1011"),
    )

    assert result.v == run_toy_iext().v


def test_iext_needs_its_extra_roles():
    suite = replace(toy_suite("iext"), ext_y2=None)

    with raises(DomainError):
        iext(
            toy_params(),
            suite,
            toy_basicext("iext"),
            bits("10"),
            bits("0110"),
            bits("1011"),
        )


def test_strict_mode_refuses_the_fold_substitute():
    params = toy_params().model_copy(update={"mode": "strict"})

    with raises(DomainError):
        iext(
            params,
            toy_suite("iext"),
            toy_basicext("iext"),
            bits("10"),
            bits("0110"),
            bits("1011"),
        )


def test_final_extractor_must_fit_the_rows():
    with raises(DomainError):
        iext(
            toy_params(),
            toy_suite("iext"),
            toy_basicext("bext"),
            bits("10"),
            bits("0110"),
            bits("1011"),
        )


def test_missing_stage_is_an_error():
    with raises(DomainError):
        run_toy_iext().trace.stage("round-1")


# Block-source extractor ====


def run_toy_bext(y_blocks=("0110", "1100")):
    return bext(
        toy_params(),
        toy_suite("bext"),
        toy_basicext("bext"),
        rows("1000", "0110"),
        rows(*y_blocks),
    )


def test_bext_golden_output():
    result = run_toy_bext()

    assert result.w == bits("10")
    assert result.swapped
    assert [r.party for r in result.rounds] == ["Y", "X"]
    assert [r.bins.survivors for r in result.rounds] == [(1, 3), (2,)]
    assert [(r.rows_before, r.rows_after) for r in result.rounds] == [(4, 2), (2, 1)]


def test_bext_records_every_round():
    trace = run_toy_bext().trace

    assert trace.names() == ["sr", "round-1", "round-2", "terminal", "output"]
    assert trace.stage("sr").rows == rows("00", "11", "01", "11")
    assert trace.stage("round-1").rows == rows("11", "01")
    assert trace.stage("round-2").rows == rows("11")
    assert trace.stage("terminal").rows == rows("00")


def test_bext_runs_out_of_blocks():
    with raises(InsufficientBlocksError) as error:
        run_toy_bext(y_blocks=("0110",))

    assert error.value.round_index == 1
    assert error.value.source == "Y"
    assert error.value.available == 1


def test_bext_needs_a_first_block():
    with raises(InsufficientBlocksError):
        bext(toy_params(), toy_suite("bext"), toy_basicext("bext"), (), rows("0110"))
