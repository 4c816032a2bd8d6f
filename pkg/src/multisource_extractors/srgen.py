"""Somewhere-random sources with the h-wise independence property.

`ssr` turns a weak source `x` and a matrix whose rows are mostly uniform into
a matrix whose good rows are roughly `h`-wise independent. `sr` first builds
that matrix from a second independent weak source.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from seedcase_soil import fmap

from multisource_extractors.alternating import AltExtConfig, la_ext
from multisource_extractors.bits import BitString, concat, decompose_index
from multisource_extractors.constants import ENUMERATION_BUDGET, FLOAT_SLACK
from multisource_extractors.errors import DomainError
from multisource_extractors.evaluation import (
    ConditionalReport,
    JointTable,
    conditional_analysis,
    distance_from_uniform,
    hwise_report,
    push_forward,
)
from multisource_extractors.extractors import StrongSeededExtractor
from multisource_extractors.internals import ceil_log2, check_budget, is_power_of_two
from multisource_extractors.sources import DiscreteSource, point_mass

type ExtractorTriple = tuple[
    StrongSeededExtractor, StrongSeededExtractor, StrongSeededExtractor
]


@dataclass(frozen=True)
class SRMatrix:
    """A realised matrix of `rows` bit strings of `row_len` bits each.

    Attributes:
        row_len: The length of every row.
        values: The rows, top to bottom.
    """

    row_len: int
    values: tuple[BitString, ...]

    def __post_init__(self) -> None:
        """Check that every row has `row_len` bits."""
        wrong = [i + 1 for i, row in enumerate(self.values) if len(row) != self.row_len]
        if wrong:
            raise DomainError(
                f"Rows {wrong} do not have the matrix row length {self.row_len}."
            )

    @property
    def rows(self) -> int:
        """The number of rows."""
        return len(self.values)

    @classmethod
    def of(cls, values: Sequence[BitString]) -> "SRMatrix":
        """A matrix whose row length is that of its first row."""
        if not values:
            raise DomainError("Cannot infer the row length of an empty matrix.")
        return cls(len(values[0]), tuple(values))

    def row(self, i: int) -> BitString:
        """Row `i`, counted from 1."""
        if not 1 <= i <= self.rows:
            raise DomainError(f"The row {i} is not in [1, {self.rows}].")
        return self.values[i - 1]

    def select(self, indices: Sequence[int]) -> "SRMatrix":
        """The submatrix of the 1-based rows in `indices`, in that order."""
        return SRMatrix(self.row_len, tuple(self.row(i) for i in indices))

    def pad_rows(self, rows: int) -> "SRMatrix":
        """Append all-zero rows up to `rows` rows."""
        if rows < self.rows:
            raise DomainError(f"Cannot pad {self.rows} rows down to {rows}.")
        padding = (BitString.zeros(self.row_len),) * (rows - self.rows)
        return SRMatrix(self.row_len, self.values + padding)

    def concat(self) -> BitString:
        """All rows concatenated from top to bottom."""
        return concat(self.values)


@dataclass(frozen=True)
class SSRConfig:
    """The shape and extractors of the h-wise independence step.

    Attributes:
        h: The independence parameter, a power of two at least 2.
        ell: The width of every exchanged string and output row.
        d: The number of index bits, so there are `2**d` rows.
        ext_laext: The alternating extraction, run for `h` rounds.
        ext_bridge: Computes the next slice from a row and a selected
            look-ahead output; its seed has `ell` bits.
        first_slice_len: The number of leading row bits used in round 1.
        bridge_len: The output length of `ext_bridge`.
        l: `log2(h)`, the width of an index block.
        b: The number of index blocks and rounds.
        N: The number of rows.
    """

    h: int
    ell: int
    d: int
    ext_laext: AltExtConfig
    ext_bridge: StrongSeededExtractor
    first_slice_len: int
    bridge_len: int
    l: int = field(init=False)  # noqa: E741
    b: int = field(init=False)
    N: int = field(init=False)

    def __post_init__(self) -> None:
        """Derive `l`, `b` and `N` and check the extractor shapes."""
        if self.h < 2 or not is_power_of_two(self.h):
            raise DomainError(f"h must be a power of two at least 2, not {self.h}.")
        if self.d < 1:
            raise DomainError(f"Need d >= 1, not {self.d}.")
        if (self.ext_laext.t, self.ext_laext.ell) != (self.h, self.ell):
            raise DomainError(
                f"The look-ahead extractor must run h={self.h} rounds of"
                f" {self.ell}-bit strings."
            )
        if (self.ext_bridge.d, self.ext_bridge.m) != (self.ell, self.bridge_len):
            raise DomainError(
                f"The bridge extractor must take an {self.ell}-bit seed and"
                f" produce {self.bridge_len} bits."
            )
        if min(self.first_slice_len, self.bridge_len) < self.ell:
            raise DomainError(f"Both slices need at least {self.ell} bits.")
        longest = max(self.first_slice_len, self.bridge_len)
        if self.ext_laext.ext_q.n < longest:
            raise DomainError(
                f"The Q-side extractor takes {self.ext_laext.ext_q.n} bits but"
                f" slices have up to {longest} bits."
            )
        l = ceil_log2(self.h)  # noqa: E741
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "b", math.ceil(self.d / l))
        object.__setattr__(self, "N", 2**self.d)


@dataclass(frozen=True)
class SSRRowTrace:
    """The rounds that produced one output row.

    Attributes:
        i: The 1-based row index.
        inds: The 1-based index blocks, one per round.
        slices: The slice fed to the look-ahead extractor in each round.
        outputs: The look-ahead outputs of each round.
        selected: The output chosen by the index block in each round.
    """

    i: int
    inds: tuple[int, ...]
    slices: tuple[BitString, ...]
    outputs: tuple[tuple[BitString, ...], ...]
    selected: tuple[BitString, ...]

    @property
    def z(self) -> BitString:
        """The output row: the selection of the last round."""
        return self.selected[-1]


def _check_rows(cfg: SSRConfig, y_rows: SRMatrix) -> None:
    if y_rows.rows != cfg.N:
        raise DomainError(f"Expected {cfg.N} rows, got {y_rows.rows}.")
    if y_rows.row_len < cfg.first_slice_len:
        raise DomainError(
            f"Rows of {y_rows.row_len} bits are shorter than the first slice"
            f" of {cfg.first_slice_len} bits."
        )
    if cfg.b > 1 and cfg.ext_bridge.n != y_rows.row_len:
        raise DomainError(
            f"The bridge extractor takes {cfg.ext_bridge.n}-bit rows, not"
            f" {y_rows.row_len}-bit ones."
        )


def ssr_row(cfg: SSRConfig, x: BitString, row: BitString, i: int) -> SSRRowTrace:
    """Compute output row `i` from `x` and input row `i`.

    Raises:
        DomainError: If `i` or a length does not fit the configuration.
    """
    block = decompose_index(i, cfg.d, cfg.l)
    current = row.prefix(cfg.first_slice_len)
    slices: list[BitString] = []
    outputs: list[tuple[BitString, ...]] = []
    selected: list[BitString] = []
    for j, ind in enumerate(block.inds):
        slices.append(current)
        outputs.append(la_ext(cfg.ext_laext, x, current))
        selected.append(outputs[-1][ind - 1])
        if j + 1 < block.b:
            current = cfg.ext_bridge.evaluate(row, selected[-1])
    return SSRRowTrace(
        i=i,
        inds=block.inds,
        slices=tuple(slices),
        outputs=tuple(outputs),
        selected=tuple(selected),
    )


def ssr_trace(cfg: SSRConfig, x: BitString, y_rows: SRMatrix) -> list[SSRRowTrace]:
    """The per-row rounds of `ssr`."""
    _check_rows(cfg, y_rows)
    return [ssr_row(cfg, x, y_rows.row(i), i) for i in range(1, cfg.N + 1)]


def ssr(cfg: SSRConfig, x: BitString, y_rows: SRMatrix) -> SRMatrix:
    """Compute the `N x ell` matrix with the h-wise independence property.

    For row `i`, the binary expression of `i - 1` is cut into `b` blocks of
    `log2(h)` bits. Round `j` runs the look-ahead extractor on the current
    slice and keeps the output the `j`-th block points at; the next slice is
    the bridge extractor applied to the row with that output as the seed.

    Args:
        cfg: The configuration.
        x: The weak source value.
        y_rows: The `N` input rows.

    Returns:
        The output matrix `Z`.

    Raises:
        DomainError: If a shape does not match the configuration.
    """
    return SRMatrix(cfg.ell, tuple(trace.z for trace in ssr_trace(cfg, x, y_rows)))


@dataclass(frozen=True)
class SRResult:
    """The matrices computed by `sr`.

    Attributes:
        w: `W_i = Ext2(x, Ext1(y, r_i))`.
        ybar: `Ext3(y, W_i)`, the input rows of `ssr`.
        z: The output of `ssr`.
    """

    w: SRMatrix
    ybar: SRMatrix
    z: SRMatrix


def sr(
    cfg: SSRConfig,
    ext1: StrongSeededExtractor,
    ext2: StrongSeededExtractor,
    ext3: StrongSeededExtractor,
    x: BitString,
    y: BitString,
) -> SRResult:
    """Build an SR matrix from two independent sources and refine it with `ssr`.

    Args:
        cfg: The `ssr` configuration; `ext1` has `cfg.d` seed bits.
        ext1: Extracts a seed for `ext2` from `y` for each `r_i`.
        ext2: Extracts the `ell`-bit row `W_i` from `x`.
        ext3: Extracts the input row of `ssr` from `y` seeded by `W_i`.
        x: The first source value.
        y: The second source value.

    Returns:
        `W`, the rows fed to `ssr` and the output `Z`.

    Raises:
        DomainError: If the extractor shapes do not chain.
    """
    if ext1.d != cfg.d:
        raise DomainError(f"ext1 needs {cfg.d} seed bits, not {ext1.d}.")
    if ext2.d != ext1.m:
        raise DomainError(f"ext2 needs {ext1.m} seed bits, not {ext2.d}.")
    if ext2.m != cfg.ell or ext3.d != cfg.ell:
        raise DomainError(
            f"ext2 must produce and ext3 must take {cfg.ell}-bit strings."
        )
    w = tuple(
        ext2.evaluate(x, ext1.evaluate(y, BitString(cfg.d, index)))
        for index in range(cfg.N)
    )
    ybar = SRMatrix(ext3.m, tuple(ext3.evaluate(y, row) for row in w))
    return SRResult(w=SRMatrix(cfg.ell, w), ybar=ybar, z=ssr(cfg, x, ybar))


# Quality tests ====


@dataclass(frozen=True)
class SRQualityEntry:
    """The quality of `sr` for one fixing of `y`.

    Attributes:
        y: The fixed value.
        probability: Its probability.
        good_rows: The 1-based rows whose `W_i` is within `tau_row` of uniform.
        worst_joint: The worst distance of `h` good output rows from uniform.
        passed: Whether at least two thirds of the rows are good and every
            tested subset is within `tau_joint`.
    """

    y: BitString
    probability: float
    good_rows: tuple[int, ...]
    worst_joint: float
    passed: bool


@dataclass(frozen=True)
class SRQualityReport:
    """The quality of `sr` over every fixing of `y`."""

    entries: tuple[SRQualityEntry, ...]
    tau_row: float
    tau_joint: float
    good_mass: float


def sr_quality_test(
    cfg: SSRConfig,
    extractors: ExtractorTriple,
    source_x: DiscreteSource,
    source_y: DiscreteSource,
    tau_row: float,
    tau_joint: float,
    subsets: int,
    rng: np.random.Generator,
    budget: int = ENUMERATION_BUDGET,
) -> SRQualityReport:
    """Measure the good rows and their joint uniformity for every `y`.

    Subsets of good rows are tested exhaustively when there are at most six
    good rows and sampled `subsets` times otherwise.

    Args:
        cfg: The `ssr` configuration.
        extractors: `ext1`, `ext2` and `ext3` of `sr`.
        source_x: The exact distribution of `x`.
        source_y: The exact distribution of `y`.
        tau_row: The largest distance of a good `W_i` from uniform.
        tau_joint: The largest passing distance of `h` good output rows.
        subsets: The number of sampled subsets when there are many good rows.
        rng: The generator used to sample subsets.
        budget: The enumeration budget.

    Returns:
        Per-`y` results and the probability of the passing `y` values.

    Raises:
        GuardError: If the enumeration exceeds `budget`.
    """
    check_budget(
        "SR quality enumeration",
        len(source_x.support) * len(source_y.support) * cfg.N,
        budget,
    )
    ext1, ext2, ext3 = extractors
    entries = []
    for y, probability in source_y.items():
        joint = push_forward(
            lambda x, y=y: _w_and_z(cfg, ext1, ext2, ext3, x, y), [source_x], budget
        )
        good = tuple(
            i + 1
            for i in range(cfg.N)
            if distance_from_uniform(joint.marginal([i])) <= tau_row + FLOAT_SLACK
        )
        z_table = joint.marginal(range(cfg.N, 2 * cfg.N))
        chosen: Literal["all"] | int = "all" if len(good) <= 6 else subsets
        report = hwise_report(
            z_table, cfg.h, chosen, rng, candidates=[i - 1 for i in good]
        )
        entries.append(
            SRQualityEntry(
                y=y,
                probability=probability,
                good_rows=good,
                worst_joint=report.worst,
                passed=3 * len(good) >= 2 * cfg.N
                and report.worst <= tau_joint + FLOAT_SLACK,
            )
        )
    good_mass = math.fsum(entry.probability for entry in entries if entry.passed)
    return SRQualityReport(
        entries=tuple(entries),
        tau_row=tau_row,
        tau_joint=tau_joint,
        good_mass=good_mass,
    )


def _w_and_z(
    cfg: SSRConfig,
    ext1: StrongSeededExtractor,
    ext2: StrongSeededExtractor,
    ext3: StrongSeededExtractor,
    x: BitString,
    y: BitString,
) -> tuple[BitString, ...]:
    result = sr(cfg, ext1, ext2, ext3, x, y)
    return result.w.values + result.z.values


def row_goodness_test(
    ext1: StrongSeededExtractor,
    ext2: StrongSeededExtractor,
    source_x: DiscreteSource,
    source_y: DiscreteSource,
    eps1: float,
    eps2: float,
    budget: int = ENUMERATION_BUDGET,
) -> ConditionalReport:
    """Count the rows `Ext2(X, Ext1(y, r_i))` that are far from uniform.

    For each fixing of `y`, the measured value is the fraction of seeds
    `r_i` whose row is more than `sqrt(eps2)` from uniform, and the fixing
    passes when that fraction is at most `sqrt(eps2) + eps1`. When `ext1`
    has worst flat error `eps1` at `k1` and `eps2` is the strong distance of
    `ext2` on `source_x`, the passing mass is at least
    `1 - 2**(k1 - H(Y))`.

    Args:
        ext1: The seed extractor applied to `y`.
        ext2: The strong extractor applied to `x`.
        source_x: The exact distribution of `x`.
        source_y: The exact distribution of `y`.
        eps1: The error of `ext1`.
        eps2: The error of `ext2`.
        budget: The enumeration budget.

    Returns:
        The per-`y` report.
    """
    if ext2.d != ext1.m:
        raise DomainError(f"ext2 needs {ext1.m} seed bits, not {ext2.d}.")
    seeds = fmap(range(2**ext1.d), lambda index: BitString(ext1.d, index))
    row_threshold = math.sqrt(eps2)

    def rows(x: BitString, y: BitString) -> tuple[BitString, ...]:
        return tuple(ext2.evaluate(x, ext1.evaluate(y, r)) for r in seeds)

    def bad_fraction(table: JointTable) -> float:
        bad = sum(
            distance_from_uniform(table.marginal([i])) > row_threshold + FLOAT_SLACK
            for i in range(len(seeds))
        )
        return bad / len(seeds)

    return conditional_analysis(
        rows,
        [source_x, source_y],
        condition_on=1,
        inner_metric=bad_fraction,
        threshold=row_threshold + eps1,
        budget=budget,
    )


@dataclass(frozen=True)
class HWiseCheck:
    """The joint distance of a set of output rows against its bound."""

    subset: tuple[int, ...]
    distance: float
    bound: float
    passed: bool


def ssr_independence_test(
    cfg: SSRConfig,
    source_x: DiscreteSource,
    row_sources: Sequence[DiscreteSource],
    subset: Sequence[int],
    extractor_error: float,
    constant: float = 4.0,
    budget: int = ENUMERATION_BUDGET,
) -> HWiseCheck:
    """Measure the joint distance of `ssr` output rows from uniform.

    Input rows are independent, row `i` drawn from `row_sources[i - 1]`, and
    the output rows in `subset` are compared with uniform against the bound
    `constant * b * h**2 * extractor_error`.

    Args:
        cfg: The `ssr` configuration.
        source_x: The exact distribution of `x`.
        row_sources: One exact distribution per input row.
        subset: The 1-based output rows to test.
        extractor_error: The error of the component extractors.
        constant: The constant of the bound.
        budget: The enumeration budget.

    Returns:
        The measured distance and its bound.
    """
    if len(row_sources) != cfg.N:
        raise DomainError(f"Expected {cfg.N} row sources, got {len(row_sources)}.")
    if not subset or any(not 1 <= i <= cfg.N for i in subset):
        raise DomainError(f"The rows {list(subset)} are not a subset of [1, {cfg.N}].")
    # Rows outside the subset never influence it, so they are pinned.
    pinned = [
        source if i + 1 in subset else point_mass(source.support[0])
        for i, source in enumerate(row_sources)
    ]

    def selected(x: BitString, *rows: BitString) -> tuple[BitString, ...]:
        z = ssr(cfg, x, SRMatrix.of(rows))
        return tuple(z.row(i) for i in subset)

    table = push_forward(selected, [source_x, *pinned], budget)
    distance = distance_from_uniform(table)
    bound = constant * cfg.b * cfg.h**2 * extractor_error
    return HWiseCheck(
        subset=tuple(subset),
        distance=distance,
        bound=bound,
        passed=distance <= bound + FLOAT_SLACK,
    )
