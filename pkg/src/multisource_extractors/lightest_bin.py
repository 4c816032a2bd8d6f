"""The lightest-bin protocol that shrinks the row count of an SR matrix."""

import math
from collections.abc import Sequence
from dataclasses import dataclass

from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError
from multisource_extractors.internals import ceil_log2, is_power_of_two


@dataclass(frozen=True)
class BinOutcome:
    """The result of one lightest-bin round.

    Attributes:
        chosen_bin: The 1-based index of the selected bin.
        survivors: The 1-based indices of the players in that bin, ascending.
        bin_counts: The number of players in each bin.
    """

    chosen_bin: int
    survivors: tuple[int, ...]
    bin_counts: tuple[int, ...]


def lightest_bin(rows: Sequence[BitString], r: int) -> BinOutcome:
    """Select the players of the least occupied nonempty bin.

    Player `i` selects the bin whose 0-based index is the value of the first
    `log2(r)` bits of `rows[i - 1]`. Ties between equally light bins go to
    the lowest bin index.

    Args:
        rows: One string per player, `N >= 1` of them.
        r: The number of bins, a power of two.

    Returns:
        The chosen bin, its players and the occupancy of every bin.

    Raises:
        DomainError: If `r` is not a power of two, there are no rows or a
            row is shorter than `log2(r)` bits.

    Examples:
        ```{python}
        import multisource_extractors as msx

        rows = [msx.BitString.from_str(text) for text in ["00", "01", "00", "11"]]
        msx.lightest_bin(rows, 2)
        ```
    """
    if not is_power_of_two(r):
        raise DomainError(f"The bin count must be a power of two, not {r}.")
    if not rows:
        raise DomainError("The lightest-bin protocol needs at least one player.")
    width = ceil_log2(r)
    if any(len(row) < width for row in rows):
        raise DomainError(
            f"Every row needs at least {width} bits to pick one of {r} bins."
        )
    choices = [row.prefix(width).value for row in rows]
    counts = [0] * r
    for choice in choices:
        counts[choice] += 1
    lightest = min(count for count in counts if count > 0)
    chosen = counts.index(lightest)
    survivors = tuple(i + 1 for i, choice in enumerate(choices) if choice == chosen)
    return BinOutcome(
        chosen_bin=chosen + 1, survivors=survivors, bin_counts=tuple(counts)
    )


def bin_count_from_params(
    N: int,
    h: int,
    gamma: float,
    bin_constant: float = 16.0,
) -> int:
    """The number of bins for `N` players.

    The raw count `gamma**2 / (bin_constant * h) * N**(1 - 2 / sqrt(h))` is
    rounded up to a power of two, which stays below twice the raw count, and
    clamped to `[1, N]`.

    Args:
        N: The number of players.
        h: The independence parameter.
        gamma: The error exponent, in `(0, 1)`.
        bin_constant: The constant in the denominator.

    Returns:
        A power of two between 1 and `N`.
    """
    if N < 1 or h < 1:
        raise DomainError(f"Need N >= 1 and h >= 1, got N={N} and h={h}.")
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must be in (0, 1), not {gamma}.")
    raw = gamma**2 / (bin_constant * h) * N ** (1 - 2 / math.sqrt(h))
    if raw <= 1:
        return 1
    largest = 1 << (N.bit_length() - 1)
    return min(1 << ceil_log2(math.ceil(raw)), largest)
