"""Weak random sources: explicit distributions, flat sources and block sources."""

import itertools
import math
from collections import defaultdict
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from seedcase_soil import fmap

from multisource_extractors.bits import BitString, gf2_rank
from multisource_extractors.constants import (
    ENUMERATION_BUDGET,
    MAX_ARRAY_BITS,
    NORMALIZATION_TOLERANCE,
)
from multisource_extractors.errors import DomainError, UnsupportedModeError
from multisource_extractors.internals import check_budget

type Sampler = Callable[[np.random.Generator], BitString]


@dataclass(frozen=True)
class DiscreteSource:
    """A distribution over `n`-bit strings.

    In exact mode the source is a table: `support` in canonical
    (lexicographic) order with matching `probabilities`. In sampling mode
    only `sampler` is set and exact operations refuse the source.

    Attributes:
        n: The bit length of every value.
        support: The values with positive probability, sorted.
        probabilities: The probability of each support value.
        sampler: A function drawing one value from a generator.
    """

    n: int
    support: tuple[BitString, ...] = ()
    probabilities: tuple[float, ...] = ()
    sampler: Sampler | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        """Check lengths, ordering and normalisation of an exact table."""
        if self.n < 0:
            raise DomainError(f"A source cannot have length {self.n}.")
        if self.sampler is not None:
            return
        if not self.support or len(self.support) != len(self.probabilities):
            raise DomainError(
                "An exact source needs one probability per support value."
            )
        if any(len(value) != self.n for value in self.support):
            raise DomainError(f"Every support value must have {self.n} bits.")
        if any(p < 0 for p in self.probabilities):
            raise DomainError("Probabilities cannot be negative.")
        if list(self.support) != sorted(set(self.support)):
            raise DomainError("The support must be sorted and free of duplicates.")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise DomainError(f"The probabilities sum to {total!r}, not 1.")

    @property
    def mode(self) -> Literal["exact", "sampler"]:
        """Whether the source is an explicit table or a sampler."""
        return "sampler" if self.sampler is not None else "exact"

    @classmethod
    def from_table(cls, n: int, table: Mapping[BitString, float]) -> "DiscreteSource":
        """Build an exact source from a value-to-probability map.

        Zero-probability entries are dropped from the support.
        """
        items = sorted((value, p) for value, p in table.items() if p > 0)
        return cls(
            n=n,
            support=tuple(value for value, _ in items),
            probabilities=tuple(p for _, p in items),
        )

    @classmethod
    def from_sampler(cls, n: int, sampler: Sampler) -> "DiscreteSource":
        """Build a sampling-mode source."""
        return cls(n=n, sampler=sampler)

    def items(self) -> Iterator[tuple[BitString, float]]:
        """Iterate over `(value, probability)` pairs of an exact source."""
        self._require_exact("enumerate")
        return zip(self.support, self.probabilities)

    def values_array(self) -> np.ndarray:
        """The support values as an integer array.

        Raises:
            DomainError: If the values are longer than an int64 holds.
        """
        self._require_exact("enumerate")
        _check_array_width(self.n)
        return np.array(fmap(self.support, lambda value: value.value), dtype=np.int64)

    def weights_array(self) -> np.ndarray:
        """The probabilities as a float array."""
        self._require_exact("enumerate")
        return np.array(self.probabilities, dtype=np.float64)

    def probability(self, value: BitString) -> float:
        """The probability of one value (0 outside the support)."""
        return dict(self.items()).get(value, 0.0)

    def _require_exact(self, action: str) -> None:
        if self.sampler is not None:
            raise UnsupportedModeError(
                f"Cannot {action} a sampling-mode source; an exact table is needed."
            )


@dataclass(frozen=True)
class FlatSource(DiscreteSource):
    """A source uniform over its support."""

    @classmethod
    def of(cls, n: int, support: Sequence[BitString]) -> "FlatSource":
        """The flat source over the given values."""
        values = tuple(sorted(set(support)))
        if not values:
            raise DomainError("A flat source needs a nonempty support.")
        return cls(
            n=n,
            support=values,
            probabilities=(1.0 / len(values),) * len(values),
        )

    @classmethod
    def from_ints(cls, n: int, values: Sequence[int]) -> "FlatSource":
        """The flat source over integer-encoded values."""
        return cls.of(n, fmap(values, lambda value: BitString(n, int(value))))


def uniform_source(n: int) -> FlatSource:
    """The uniform distribution on `n` bits."""
    check_budget("support enumeration", 2**n, ENUMERATION_BUDGET)
    return FlatSource.from_ints(n, range(2**n))


def point_mass(value: BitString) -> FlatSource:
    """The source that always outputs `value`."""
    return FlatSource.of(len(value), [value])


@dataclass(frozen=True)
class BlockSource:
    """A sequence of blocks described by one joint distribution.

    Attributes:
        blocks: The bit length of each block.
        joint: The distribution of the concatenated blocks.
        claimed_k: The claimed conditional min-entropy of each block.
    """

    blocks: tuple[int, ...]
    joint: DiscreteSource
    claimed_k: tuple[float, ...]

    def __post_init__(self) -> None:
        """Check that the blocks tile the joint distribution."""
        if sum(self.blocks) != self.joint.n:
            raise DomainError(
                f"The blocks cover {sum(self.blocks)} bits but the joint source"
                f" has {self.joint.n}."
            )
        if len(self.claimed_k) != len(self.blocks):
            raise DomainError("Every block needs one claimed min-entropy.")

    def offset(self, block: int) -> int:
        """The position of the first bit of `block`."""
        return sum(self.blocks[:block])

    def block_distribution(self, block: int, prefix: BitString) -> DiscreteSource:
        """The distribution of `block` conditioned on the previous blocks.

        Raises:
            DomainError: If the block index is invalid or the prefix has
                probability zero.
        """
        if not 0 <= block < len(self.blocks):
            raise DomainError(f"There is no block {block}.")
        start = self.offset(block)
        if len(prefix) != start:
            raise DomainError(
                f"Block {block} is conditioned on a {start}-bit prefix,"
                f" not a {len(prefix)}-bit one."
            )
        stop = start + self.blocks[block]
        conditional: dict[BitString, float] = defaultdict(float)
        for value, p in self.joint.items():
            if value[:start] == prefix:
                conditional[value[start:stop]] += p
        total = math.fsum(conditional.values())
        if total <= 0:
            raise DomainError(f"The prefix {prefix} has probability zero.")
        return DiscreteSource.from_table(
            self.blocks[block],
            {value: p / total for value, p in conditional.items()},
        )

    def prefixes(self, block: int) -> list[BitString]:
        """Every prefix of `block` that has positive probability."""
        start = self.offset(block)
        return sorted({value[:start] for value, _ in self.joint.items()})


@dataclass(frozen=True)
class BlockViolation:
    """A prefix under which a block has less min-entropy than claimed."""

    block: int
    prefix: BitString
    measured: float
    claimed: float


def min_entropy(s: DiscreteSource) -> float:
    """The min-entropy `min log2(1/p)` of an exact source, in bits.

    Flat sources return `log2` of their support size exactly.

    Raises:
        UnsupportedModeError: If the source is in sampling mode.
    """
    s._require_exact("take the min-entropy of")
    if isinstance(s, FlatSource):
        return math.log2(len(s.support))
    return -math.log2(max(s.probabilities))


def conditional_min_entropy(s: BlockSource, block: int, prefix: BitString) -> float:
    """The min-entropy of `block` given that the previous blocks equal `prefix`."""
    return min_entropy(s.block_distribution(block, prefix))


def block_violations(s: BlockSource) -> list[BlockViolation]:
    """Every positive-probability prefix under which a block falls short."""
    violations: list[BlockViolation] = []
    for block, claimed in enumerate(s.claimed_k):
        for prefix in s.prefixes(block):
            measured = conditional_min_entropy(s, block, prefix)
            if measured < claimed - 1e-9:
                violations.append(BlockViolation(block, prefix, measured, claimed))
    return violations


def independent_blocks(sources: Sequence[DiscreteSource]) -> BlockSource:
    """The block source whose blocks are independent draws of `sources`."""
    check_budget(
        "block-source enumeration",
        math.prod(fmap(sources, lambda source: len(source.support))),
        ENUMERATION_BUDGET,
    )
    table: dict[BitString, float] = {}
    for combination in itertools.product(*fmap(sources, lambda s: list(s.items()))):
        value = BitString.zeros(0)
        p = 1.0
        for part, weight in combination:
            value = value + part
            p *= weight
        table[value] = table.get(value, 0.0) + p
    return BlockSource(
        blocks=tuple(fmap(sources, lambda s: s.n)),
        joint=DiscreteSource.from_table(sum(s.n for s in sources), table),
        claimed_k=tuple(fmap(sources, min_entropy)),
    )


# Sampling ====


def sample(s: DiscreteSource, rng: np.random.Generator) -> BitString:
    """Draw one value.

    Exact sources use the inverse CDF over the canonical support order, so
    the draw depends only on the generator state.
    """
    if s.sampler is not None:
        return s.sampler(rng)
    return s.support[_inverse_cdf(s, np.array([rng.random()]))[0]]


def sample_many(s: DiscreteSource, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw `count` values, returned as an integer array."""
    _check_array_width(s.n)
    if s.sampler is not None:
        return np.array(
            [s.sampler(rng).value for _ in range(count)],
            dtype=np.int64,
        )
    indices = _inverse_cdf(s, rng.random(count))
    return s.values_array()[indices]


def _check_array_width(n: int) -> None:
    if n > MAX_ARRAY_BITS:
        raise DomainError(
            f"{n}-bit values do not fit an int64 array; the limit is"
            f" {MAX_ARRAY_BITS} bits."
        )


def _inverse_cdf(s: DiscreteSource, uniforms: np.ndarray) -> np.ndarray:
    cumulative = np.cumsum(s.weights_array())
    indices = np.searchsorted(cumulative, uniforms, side="right")
    return np.minimum(indices, len(s.support) - 1)


# Adversarial batteries ====


def prefix_fixed_source(n: int, k: int, prefix: int = 0) -> FlatSource:
    """The flat source whose first `n - k` bits equal `prefix`."""
    _check_entropy(n, k)
    return FlatSource.from_ints(n, [(prefix << k) | suffix for suffix in range(2**k)])


def low_weight_source(n: int, k: int, mask: int = 0) -> FlatSource:
    """The `2**k` lowest-Hamming-weight strings, shifted by XOR with `mask`."""
    _check_entropy(n, k)
    check_budget("support enumeration", 2**n, ENUMERATION_BUDGET)
    lightest = sorted(range(2**n), key=lambda value: (value.bit_count(), value))
    return FlatSource.from_ints(n, [value ^ mask for value in lightest[: 2**k]])


def affine_source(n: int, k: int, rng: np.random.Generator) -> FlatSource:
    """A flat source over a random affine subspace of dimension `k`."""
    _check_entropy(n, k)
    basis: list[int] = []
    while len(basis) < k:
        candidate = int(rng.integers(1, 2**n)) if n else 0
        if gf2_rank([*basis, candidate]) == len(basis) + 1:
            basis.append(candidate)
    offset = int(rng.integers(0, 2**n)) if n else 0
    span = [0]
    for vector in basis:
        span += [value ^ vector for value in span]
    return FlatSource.from_ints(n, [value ^ offset for value in span])


def random_flat_source(n: int, k: int, rng: np.random.Generator) -> FlatSource:
    """A flat source over `2**k` distinct values chosen uniformly."""
    _check_entropy(n, k)
    check_budget("support enumeration", 2**n, ENUMERATION_BUDGET)
    values = rng.choice(2**n, size=2**k, replace=False)
    return FlatSource.from_ints(n, fmap(list(values), int))


def adversarial_flat_battery(
    n: int, k: int, count: int, rng: np.random.Generator
) -> list[FlatSource]:
    """Flat sources of min-entropy exactly `k` for worst-case testing.

    The battery cycles through random supports, affine subspaces, prefix-fixed
    supports and low-weight supports. With `k == n` every member is the full
    support.

    Args:
        n: The bit length.
        k: The min-entropy of every member.
        count: The number of sources.
        rng: The generator choosing supports.

    Returns:
        `count` flat sources.
    """
    _check_entropy(n, k)
    if k == n:
        return [uniform_source(n)] * count
    makers: list[Callable[[], FlatSource]] = [
        lambda: random_flat_source(n, k, rng),
        lambda: affine_source(n, k, rng),
        lambda: prefix_fixed_source(n, k, int(rng.integers(0, 2 ** (n - k)))),
        lambda: low_weight_source(n, k, int(rng.integers(0, 2**n))),
    ]
    return [makers[index % len(makers)]() for index in range(count)]


def _check_entropy(n: int, k: int) -> None:
    if not 0 <= k <= n:
        raise DomainError(f"A flat {n}-bit source cannot have min-entropy {k}.")


def all_flat_supports(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """Every support of a flat `(n, k)` source, as sorted integer tuples."""
    _check_entropy(n, k)
    return itertools.combinations(range(2**n), 2**k)

