"""The three-source extractor and the block-source extractor.

Both start from an SR matrix built by `sr`, shrink it with the lightest-bin
protocol, and finish with an extractor for one weak source and an SR matrix
with few rows (`basicext`). Every stage is recorded in a `PipelineTrace`.
"""

import os
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

from rich import print as rprint
from seedcase_soil import fmap

from multisource_extractors.alternating import AltExtConfig
from multisource_extractors.bits import BitString
from multisource_extractors.constants import DEBUG_ENV
from multisource_extractors.errors import DomainError, InsufficientBlocksError
from multisource_extractors.extractors import SRExtractor, StrongSeededExtractor
from multisource_extractors.lightest_bin import (
    BinOutcome,
    bin_count_from_params,
    lightest_bin,
)
from multisource_extractors.params import ParamSet
from multisource_extractors.srgen import SRMatrix, SSRConfig, sr

type Party = Literal["X", "Y"]


@dataclass(frozen=True)
class ExtractorSuite:
    """The seeded extractors filling every role of the pipeline.

    Attributes:
        ext_q: The Q side of alternating extraction (`ell`-bit seeds).
        ext_w: The X side of alternating extraction (`ell`-bit seeds).
        ext_bridge: Computes later slices of an SR row.
        ext1: Extracts seeds from the second source, `d`-bit seeds.
        ext2: Extracts the rows of `W` from the first source.
        ext3: Extracts the input rows of the independence step.
        ext_y2: Extracts `m2`-bit rows from the second block (three-source).
        ext_x: Extracts `m3`-bit rows from the first source (three-source).
        ext_loop: Extracts `ell`-bit rows from a fresh block (block-source).
        ext_final: Extracts `m3`-bit rows from the last block (block-source).
    """

    ext_q: StrongSeededExtractor
    ext_w: StrongSeededExtractor
    ext_bridge: StrongSeededExtractor
    ext1: StrongSeededExtractor
    ext2: StrongSeededExtractor
    ext3: StrongSeededExtractor
    ext_y2: StrongSeededExtractor | None = None
    ext_x: StrongSeededExtractor | None = None
    ext_loop: StrongSeededExtractor | None = None
    ext_final: StrongSeededExtractor | None = None

    def ssr_config(self, params: ParamSet) -> SSRConfig:
        """The independence-step configuration for `params`."""
        return SSRConfig(
            h=params.h,
            ell=params.ell,
            d=params.d,
            ext_laext=AltExtConfig(self.ext_q, self.ext_w, ell=params.ell, t=params.h),
            ext_bridge=self.ext_bridge,
            first_slice_len=params.first_slice_len,
            bridge_len=params.bridge_len,
        )

    def role(self, name: str) -> StrongSeededExtractor:
        """The extractor of a role that must be filled.

        Raises:
            DomainError: If the role is empty.
        """
        ext = getattr(self, name)
        if ext is None:
            raise DomainError(f"The extractor role '{name}' is not filled.")
        return ext


@dataclass(frozen=True)
class Stage:
    """One recorded stage of a pipeline run.

    Attributes:
        name: The stage name.
        rows: The rows the stage produced.
        row_len: Their length.
        details: Extra named values, such as bin counts.
    """

    name: str
    rows: tuple[BitString, ...]
    row_len: int
    details: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, name: str, matrix: SRMatrix, **details: object) -> "Stage":
        """Record a matrix with named details."""
        return cls(
            name=name,
            rows=matrix.values,
            row_len=matrix.row_len,
            details=tuple((key, str(value)) for key, value in details.items()),
        )


@dataclass(frozen=True)
class PipelineTrace:
    """Every stage of one run, in order."""

    stages: tuple[Stage, ...]

    def names(self) -> list[str]:
        """The stage names in order."""
        return fmap(self.stages, lambda stage: stage.name)

    def stage(self, name: str) -> Stage:
        """The stage called `name`."""
        for stage in self.stages:
            if stage.name == name:
                return stage
        raise DomainError(f"The trace has no stage '{name}'.")


@dataclass(frozen=True)
class IExtResult:
    """The output of the three-source extractor and its trace."""

    v: BitString
    bins: BinOutcome
    trace: PipelineTrace


def _check_shape(
    role: str, ext: StrongSeededExtractor, d: int, m: int
) -> StrongSeededExtractor:
    if (ext.d, ext.m) != (d, m):
        raise DomainError(
            f"The {role} extractor must take {d}-bit seeds and produce {m} bits,"
            f" not {ext.d} and {ext.m}."
        )
    return ext


def _check_basicext(
    params: ParamSet, basicext: SRExtractor, rows: int, row_len: int
) -> None:
    if params.mode == "strict" and not basicext.sound:
        raise DomainError(
            "Strict mode needs a sound final extractor; the fold substitute has"
            " no error guarantee."
        )
    if (basicext.rows, basicext.row_len, basicext.m) != (rows, row_len, params.m_out):
        raise DomainError(
            f"The final extractor must take a {rows}x{row_len} matrix and produce"
            f" {params.m_out} bits."
        )


def iext(
    params: ParamSet,
    suite: ExtractorSuite,
    basicext: SRExtractor,
    x: BitString,
    y1: BitString,
    y2: BitString,
) -> IExtResult:
    """Extract from `x` and the two blocks `y1`, `y2`.

    The steps are: `Z = SR(x, y1)`; the lightest of `r` bins keeps some rows
    of `Z`, truncated or padded with zero rows to `N // r` rows (`Z1`,
    whose trace stage records the `padding` and `dropped` row counts);
    `Z2 = Ext(y2, Z1)`; `Z3 = Ext(x, Z2)`; and `V = BasicExt(y2, Z3)`.

    Args:
        params: The derived parameters.
        suite: The extractors; `ext_y2` and `ext_x` must be filled.
        basicext: The final extractor for `y2` and `Z3`.
        x: The first source.
        y1: The first block of the second source.
        y2: The second block, or an independent third source.

    Returns:
        `V` with the trace of the stages `sr`, `lightest-bin`, `z1`, `z2`,
        `z3` and `output`.

    Raises:
        DomainError: If a shape does not match `params`, or strict mode is
            given an unsound final extractor.
    """
    rows = params.N // params.r
    ext_y2 = _check_shape("ext_y2", suite.role("ext_y2"), params.ell, params.m2)
    ext_x = _check_shape("ext_x", suite.role("ext_x"), params.m2, params.m3)
    _check_basicext(params, basicext, rows, params.m3)
    result = sr(suite.ssr_config(params), suite.ext1, suite.ext2, suite.ext3, x, y1)
    bins = lightest_bin(result.z.values, params.r)
    z1 = result.z.select(bins.survivors[:rows]).pad_rows(rows)
    z2 = SRMatrix(params.m2, tuple(ext_y2.evaluate(y2, row) for row in z1.values))
    z3 = SRMatrix(params.m3, tuple(ext_x.evaluate(x, row) for row in z2.values))
    v = basicext.evaluate(y2, z3)
    trace = PipelineTrace(
        stages=(
            Stage.of(
                "sr", result.z, w=_rows_text(result.w), ybar=_rows_text(result.ybar)
            ),
            Stage(
                "lightest-bin",
                rows=tuple(result.z.row(i) for i in bins.survivors),
                row_len=params.ell,
                details=(
                    ("r", str(params.r)),
                    ("bin_counts", ",".join(fmap(bins.bin_counts, str))),
                    ("chosen_bin", str(bins.chosen_bin)),
                    ("survivors", ",".join(fmap(bins.survivors, str))),
                ),
            ),
            Stage.of(
                "z1",
                z1,
                padding=max(0, rows - len(bins.survivors)),
                dropped=max(0, len(bins.survivors) - rows),
            ),
            Stage.of("z2", z2),
            Stage.of("z3", z3),
            Stage("output", rows=(v,), row_len=len(v)),
        )
    )
    _debug(trace)
    return IExtResult(v=v, bins=bins, trace=trace)


def three_source_iext(
    params: ParamSet,
    suite: ExtractorSuite,
    basicext: SRExtractor,
    x: BitString,
    y: BitString,
    z: BitString,
) -> IExtResult:
    """Extract from three independent sources.

    Two independent sources form a block source, so this is `iext` with
    `y` and `z` as the two blocks.
    """
    return iext(params, suite, basicext, x, y, z)


@dataclass(frozen=True)
class BExtRound:
    """One lightest-bin round of the block-source extractor.

    Attributes:
        index: The 1-based round number.
        rows_before: `N_t`.
        r: The number of bins.
        bins: The lightest-bin outcome.
        party: The source the fresh block came from.
        block: The 0-based index of that block within its source.
        rows_after: `N_{t+1}`.
    """

    index: int
    rows_before: int
    r: int
    bins: BinOutcome
    party: Party
    block: int
    rows_after: int


@dataclass(frozen=True)
class BExtResult:
    """The output of the block-source extractor and its trace.

    Attributes:
        w: The output.
        rounds: The lightest-bin rounds.
        swapped: Whether the roles of the sources were swapped at the end.
        trace: The recorded stages.
    """

    w: BitString
    rounds: tuple[BExtRound, ...]
    swapped: bool
    trace: PipelineTrace


def _next_block(
    blocks: Sequence[BitString], used: int, round_index: int, party: Party
) -> BitString:
    if used >= len(blocks):
        raise InsufficientBlocksError(round_index, party, len(blocks))
    return blocks[used]


def bext(
    params: ParamSet,
    suite: ExtractorSuite,
    basicext: SRExtractor,
    x_blocks: Sequence[BitString],
    y_blocks: Sequence[BitString],
) -> BExtResult:
    """Extract from two independent block sources.

    After `Z = SR(x_1, y_1)`, each round runs the lightest-bin protocol on
    `Z` and extracts new `ell`-bit rows from a fresh block, alternating
    between a `Y` block and an `X` block, until at most `stop_rows` rows are
    left. The remaining rows are padded with zero rows to `floor(stop_rows)`
    rows, extracted into `m3`-bit rows from the last block of one source and
    handed to `basicext` together with the last block of the other.

    Args:
        params: The derived parameters.
        suite: The extractors; `ext_loop` and `ext_final` must be filled.
        basicext: The final extractor.
        x_blocks: The blocks of the first source.
        y_blocks: The blocks of the second source.

    Returns:
        `W` with its rounds and trace.

    Raises:
        InsufficientBlocksError: If a round needs a block that was not given.
        DomainError: If a shape does not match `params`.
    """
    ext_loop = _check_shape("ext_loop", suite.role("ext_loop"), params.ell, params.ell)
    ext_final = _check_shape(
        "ext_final", suite.role("ext_final"), params.ell, params.m3
    )
    final_rows = max(1, int(params.stop_rows))
    _check_basicext(params, basicext, final_rows, params.m3)
    x_last = _next_block(x_blocks, 0, 0, "X")
    y_last = _next_block(y_blocks, 0, 0, "Y")
    result = sr(
        suite.ssr_config(params), suite.ext1, suite.ext2, suite.ext3, x_last, y_last
    )
    z = result.z
    stages = [Stage.of("sr", z)]
    rounds: list[BExtRound] = []
    used = {"X": 1, "Y": 1}
    v_y = True
    while z.rows > params.stop_rows:
        index = len(rounds) + 1
        r = bin_count_from_params(
            z.rows, params.h, params.gamma, params.constants.bin_constant
        )
        bins = lightest_bin(z.values, r)
        party: Party = "Y" if v_y else "X"
        block = _next_block(y_blocks if v_y else x_blocks, used[party], index, party)
        if v_y:
            y_last = block
        else:
            x_last = block
        rounds.append(
            BExtRound(
                index=index,
                rows_before=z.rows,
                r=r,
                bins=bins,
                party=party,
                block=used[party],
                rows_after=len(bins.survivors),
            )
        )
        used[party] += 1
        z = SRMatrix(
            params.ell,
            tuple(ext_loop.evaluate(block, z.row(i)) for i in bins.survivors),
        )
        stages.append(
            Stage.of(
                f"round-{index}",
                z,
                party=party,
                r=r,
                bin_counts=",".join(fmap(bins.bin_counts, str)),
                survivors=",".join(fmap(bins.survivors, str)),
            )
        )
        v_y = not v_y
    # The source whose block would be consumed next supplies the final rows.
    swapped = v_y
    seeded_by, final_source = (y_last, x_last) if swapped else (x_last, y_last)
    padded = z.pad_rows(final_rows)
    z_final = SRMatrix(
        params.m3, tuple(ext_final.evaluate(seeded_by, row) for row in padded.values)
    )
    w = basicext.evaluate(final_source, z_final)
    stages.append(Stage.of("terminal", z_final, swapped=swapped))
    stages.append(Stage("output", rows=(w,), row_len=len(w)))
    trace = PipelineTrace(stages=tuple(stages))
    _debug(trace)
    return BExtResult(w=w, rounds=tuple(rounds), swapped=swapped, trace=trace)


def _rows_text(matrix: SRMatrix) -> str:
    return ",".join(fmap(matrix.values, str))


def _debug(trace: PipelineTrace) -> None:
    # Use by doing `MSX_DEBUG=true uv run ...`
    if os.getenv(DEBUG_ENV):
        for stage in trace.stages:
            rprint(stage)
