"""Fixed-length bit strings, GF(2) helpers and the index-to-block decomposition.

Bit strings are read "from left to right": index 0 is the most significant
bit of the written binary expression, so `BitString.from_str("0110")` has
value 6 and `bit(1) == 1`.
"""

import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from typing import overload

from seedcase_soil import fmap

from multisource_extractors.constants import MAX_BITS
from multisource_extractors.errors import DomainError
from multisource_extractors.internals import _split_literal


@dataclass(order=True, frozen=True)
class BitString:
    """A fixed-length bit vector packed into an integer.

    Ordering is by length first and, among equal lengths, lexicographic on
    the bits, which is the canonical support ordering used for sampling.

    Attributes:
        length: The number of bits.
        value: The bits read as an unsigned binary number, index 0 being the
            most significant bit.

    Examples:
        ```{python}
        import multisource_extractors as msx

        bits = msx.BitString.from_str("0110")
        bits.to_literal()
        ```
    """

    length: int
    value: int = 0

    def __post_init__(self) -> None:
        """Check that the value fits in the declared length."""
        if not 0 <= self.length <= MAX_BITS:
            raise DomainError(f"A bit string cannot have length {self.length}.")
        if not 0 <= self.value < (1 << self.length):
            raise DomainError(
                f"The value {self.value} does not fit in {self.length} bits."
            )

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        """The all-zero string of the given length."""
        return cls(length, 0)

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        """Parse a string of `0` and `1` characters."""
        if text.strip("01"):
            raise DomainError(f"'{text}' contains characters other than 0 and 1.")
        return cls(len(text), int(text, 2) if text else 0)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        """Build a bit string from a sequence of 0/1 integers."""
        values = list(bits)
        if any(bit not in (0, 1) for bit in values):
            raise DomainError("Bits must be 0 or 1.")
        return cls.from_str("".join(fmap(values, str)))

    @classmethod
    def from_literal(cls, literal: str) -> "BitString":
        """Parse a `0x<hex>/<length>` literal."""
        value, length = _split_literal(literal)
        return cls(length, value)

    def to_literal(self) -> str:
        """Write the bit string as a `0x<hex>/<length>` literal."""
        width = max(1, math.ceil(self.length / 4))
        return f"0x{self.value:0{width}x}/{self.length}"

    def bit(self, index: int) -> int:
        """The bit at `index`, counted from the left."""
        if not 0 <= index < self.length:
            raise DomainError(
                f"Index {index} is out of range for a {self.length}-bit string."
            )
        return (self.value >> (self.length - 1 - index)) & 1

    def __len__(self) -> int:
        """The number of bits."""
        return self.length

    def __iter__(self) -> Iterator[int]:
        """Iterate over the bits from left to right."""
        return (self.bit(index) for index in range(self.length))

    @overload
    def __getitem__(self, key: int) -> int: ...

    @overload
    def __getitem__(self, key: slice) -> "BitString": ...

    def __getitem__(self, key: int | slice) -> "int | BitString":
        """Get one bit or a contiguous slice of bits."""
        if isinstance(key, int):
            return self.bit(key if key >= 0 else self.length + key)
        start, stop, step = key.indices(self.length)
        if step != 1:
            raise DomainError("Bit-string slices must be contiguous.")
        stop = max(start, stop)
        width = stop - start
        return BitString(width, (self.value >> (self.length - stop)) & _mask(width))

    def __add__(self, other: "BitString") -> "BitString":
        """Concatenate two bit strings."""
        return BitString(
            self.length + other.length, (self.value << other.length) | other.value
        )

    def __xor__(self, other: "BitString") -> "BitString":
        """Bitwise XOR of two equal-length strings."""
        if self.length != other.length:
            raise DomainError(
                f"Cannot XOR a {self.length}-bit string with a"
                f" {other.length}-bit string."
            )
        return BitString(self.length, self.value ^ other.value)

    def __str__(self) -> str:
        """The bits as `0`/`1` characters."""
        return format(self.value, f"0{self.length}b") if self.length else ""

    def prefix(self, length: int) -> "BitString":
        """The first `length` bits."""
        if length > self.length:
            raise DomainError(
                f"Cannot take {length} bits from a {self.length}-bit string."
            )
        return self[:length]

    def pad_right(self, length: int) -> "BitString":
        """Append zeros on the right up to `length` bits."""
        if length < self.length:
            raise DomainError(
                f"Cannot pad a {self.length}-bit string down to {length} bits."
            )
        return BitString(length, self.value << (length - self.length))


def concat(parts: Iterable[BitString]) -> BitString:
    """Concatenate bit strings from left to right."""
    result = BitString.zeros(0)
    for part in parts:
        result = result + part
    return result


def _mask(width: int) -> int:
    return (1 << width) - 1


def parity(value: int) -> int:
    """The GF(2) sum of the bits of a non-negative integer."""
    return value.bit_count() & 1


def gf2_rank(rows: Iterable[int]) -> int:
    """The rank over GF(2) of vectors packed into integers."""
    pivots: dict[int, int] = {}
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top not in pivots:
                pivots[top] = row
                break
            row ^= pivots[top]
    return len(pivots)


# Toeplitz matrices ====


@dataclass(frozen=True)
class ToeplitzSeed:
    """The diagonal description of an m×n Toeplitz matrix over GF(2).

    The matrix entry in row `r` and column `c` is `diag.bit(c - r + m - 1)`,
    i.e. the diagonal is read from left to right starting at the top-right
    corner's far diagonal (bottom-left entry first). Equivalently, row `r`
    read as an integer is `(diag.value >> r) & (2**n - 1)`.

    Attributes:
        n: The input length.
        m: The output length.
        diag: The `n + m - 1` bits defining every diagonal.
    """

    n: int
    m: int
    diag: BitString

    def __post_init__(self) -> None:
        """Check the diagonal length."""
        if self.n < 1 or self.m < 1:
            raise DomainError("A Toeplitz matrix needs n >= 1 and m >= 1.")
        if len(self.diag) != self.n + self.m - 1:
            raise DomainError(
                f"A {self.m}x{self.n} Toeplitz matrix needs {self.n + self.m - 1}"
                f" diagonal bits, not {len(self.diag)}."
            )

    def rows(self) -> list[int]:
        """The matrix rows, top to bottom, each packed as an n-bit integer."""
        return [(self.diag.value >> r) & _mask(self.n) for r in range(self.m)]

    def entry(self, row: int, column: int) -> int:
        """One matrix entry."""
        return self.diag.bit(column - row + self.m - 1)


def toeplitz_apply(seed: ToeplitzSeed, x: BitString) -> BitString:
    """Multiply the Toeplitz matrix of `seed` with `x` over GF(2).

    Args:
        seed: The matrix description.
        x: An `n`-bit input.

    Returns:
        The `m`-bit product, whose bit `r` is the parity of row `r` and `x`.

    Raises:
        DomainError: If `x` does not have `n` bits.
    """
    if len(x) != seed.n:
        raise DomainError(
            f"The Toeplitz matrix takes {seed.n}-bit inputs, not {len(x)}-bit ones."
        )
    value = 0
    for row in seed.rows():
        value = (value << 1) | parity(row & x.value)
    return BitString(seed.m, value)


# Index decomposition ====


@dataclass(frozen=True)
class BlockIndex:
    """The block decomposition of a 1-based row index.

    The `d`-bit binary expression of `i - 1` is cut from left to right into
    `b = ceil(d / l)` blocks of `l` bits, the last one padded with zeros on
    the right. `inds[j]` is one more than the value of block `j`.

    Attributes:
        i: The 1-based row index.
        d: The number of index bits.
        l: The block width.
        inds: The 1-based block values, each in `[1, 2**l]`.
    """

    i: int
    d: int
    l: int  # noqa: E741
    inds: tuple[int, ...]

    @property
    def b(self) -> int:
        """The number of blocks."""
        return len(self.inds)

    def reconstruct(self) -> int:
        """Recover `i` by dropping the padding of the last block."""
        padded = prefix_value(self, self.b)
        return (padded >> (self.b * self.l - self.d)) + 1


def decompose_index(i: int, d: int, l: int) -> BlockIndex:  # noqa: E741
    """Cut the binary expression of `i - 1` into blocks of `l` bits.

    Args:
        i: A 1-based index in `[1, 2**d]`.
        d: The number of bits of the index.
        l: The block width.

    Returns:
        The `BlockIndex` with `ceil(d / l)` blocks.

    Raises:
        DomainError: If `i` is out of range or `l < 1`.

    Examples:
        ```{python}
        import multisource_extractors as msx

        msx.decompose_index(7, 4, 2).inds
        ```
    """
    if l < 1 or d < 1:
        raise DomainError(f"Need d >= 1 and l >= 1, got d={d} and l={l}.")
    if not 1 <= i <= 2**d:
        raise DomainError(f"The index {i} is not in [1, 2^{d}].")
    b = math.ceil(d / l)
    padded = BitString(d, i - 1).pad_right(b * l)
    inds = tuple(padded[j * l : (j + 1) * l].value + 1 for j in range(b))
    return BlockIndex(i=i, d=d, l=l, inds=inds)


def prefix_value(bi: BlockIndex, j: int) -> int:
    """The integer whose binary expression is blocks 1 to `j` concatenated.

    Raises:
        DomainError: If `j` is not in `[1, bi.b]`.
    """
    if not 1 <= j <= bi.b:
        raise DomainError(f"The block count {j} is not in [1, {bi.b}].")
    value = 0
    for ind in bi.inds[:j]:
        value = (value << bi.l) | (ind - 1)
    return value
