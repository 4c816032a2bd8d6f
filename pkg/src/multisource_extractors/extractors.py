"""Strong seeded extractors, their exhaustive verification and ideal search.

Worst-case errors are always measured against flat sources. A source of
min-entropy `k` is a convex combination of flat sources with `2**k` support
elements, and the strong distance is convex in the source distribution, so
the worst flat distance bounds the distance for every `(n, k)`-source.
"""

import hashlib
import itertools
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import TYPE_CHECKING, Literal

import numpy as np
from seedcase_soil import fmap

from multisource_extractors.bits import BitString, ToeplitzSeed, concat, parity
from multisource_extractors.constants import ENUMERATION_BUDGET, FLOAT_SLACK
from multisource_extractors.errors import DomainError, GuardError, SearchFailure
from multisource_extractors.internals import (
    check_budget,
    debug_print,
    derive_seed,
    make_rng,
)

if TYPE_CHECKING:
    from multisource_extractors.srgen import SRMatrix

type TableFamily = Literal["affine", "uniform"]

# Number of flat supports handled per vectorised step.
_CHUNK = 2048


class StrongSeededExtractor(ABC):
    """A function `Ext(x, seed)` from `n` and `d` bits to `m` bits.

    Subclasses implement `evaluate_int` on integer-encoded arguments; the
    bit-string interface and the vectorised `output_matrix` are derived from
    it.

    Attributes:
        n: The source length.
        d: The seed length.
        m: The output length.
        claimed_k: The min-entropy the error claim assumes, if any.
        claimed_eps: The claimed error, if any.
    """

    n: int
    d: int
    m: int
    claimed_k: float | None = None
    claimed_eps: float | None = None

    @property
    def name(self) -> str:
        """A short description used in reports."""
        return f"{type(self).__name__}(n={self.n}, d={self.d}, m={self.m})"

    @abstractmethod
    def evaluate_int(self, x: int, seed: int) -> int:
        """Evaluate on integer-encoded source and seed values."""

    def evaluate(self, x: BitString, seed: BitString) -> BitString:
        """Evaluate on bit strings.

        Raises:
            DomainError: If `x` or `seed` has the wrong length.
        """
        if len(x) != self.n or len(seed) != self.d:
            raise DomainError(
                f"{self.name} takes a {self.n}-bit source and a {self.d}-bit seed,"
                f" not {len(x)} and {len(seed)} bits."
            )
        return BitString(self.m, self.evaluate_int(x.value, seed.value))

    def evaluate_padded(self, x: BitString, seed: BitString) -> BitString:
        """Evaluate after padding a shorter source with zeros on the right."""
        if len(x) > self.n:
            raise DomainError(
                f"{self.name} accepts sources of at most {self.n} bits,"
                f" not {len(x)} bits."
            )
        return self.evaluate(x.pad_right(self.n), seed)

    def output_matrix(self, xs: np.ndarray, seeds: np.ndarray) -> np.ndarray:
        """The outputs for every pair of `xs` and `seeds`.

        Returns:
            An integer array of shape `(len(xs), len(seeds))`.
        """
        return np.array(
            [[self.evaluate_int(int(x), int(s)) for s in seeds] for x in xs],
            dtype=np.int64,
        ).reshape(len(xs), len(seeds))

    def table(self, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
        """The full function table, shape `(2**n, 2**d)`."""
        check_budget("function table", 2**self.n * 2**self.d, budget)
        return self.output_matrix(
            np.arange(2**self.n, dtype=np.int64), np.arange(2**self.d, dtype=np.int64)
        )


class ToeplitzExtractor(StrongSeededExtractor):
    """The Toeplitz-hashing extractor with seed length `n + m - 1`.

    The seed is the diagonal of the matrix (see `ToeplitzSeed`). The family is
    universal, so the leftover hash lemma bounds its strong error.
    """

    def __init__(self, n: int, m: int) -> None:
        """Create the extractor for `n`-bit sources and `m`-bit outputs."""
        if not 1 <= m <= n:
            raise DomainError(
                f"A Toeplitz extractor needs 1 <= m <= n, got m={m} and n={n}."
            )
        self.n = n
        self.m = m
        self.d = n + m - 1

    def claimed_error(self, k: float) -> float:
        """The documented error claim `2**(-(k - m) / 2)` at min-entropy `k`."""
        return 2.0 ** (-(k - self.m) / 2)

    def seed(self, diag: BitString) -> ToeplitzSeed:
        """The matrix description of a seed value."""
        return ToeplitzSeed(self.n, self.m, diag)

    def evaluate_int(self, x: int, seed: int) -> int:
        """Multiply the seed's matrix with `x`."""
        value = 0
        for row in self.seed(BitString(self.d, seed)).rows():
            value = (value << 1) | parity(row & x)
        return value

    def output_matrix(self, xs: np.ndarray, seeds: np.ndarray) -> np.ndarray:
        """Vectorised products for every pair of inputs and seeds."""
        mask = (1 << self.n) - 1
        out = np.zeros((len(xs), len(seeds)), dtype=np.int64)
        for r in range(self.m):
            rows = (seeds.astype(np.int64) >> r) & mask
            bits = np.bitwise_count(xs.astype(np.int64)[:, None] & rows[None, :]) & 1
            out |= bits.astype(np.int64) << (self.m - 1 - r)
        return out


def toeplitz_extractor(n: int, m: int) -> ToeplitzExtractor:
    """The Toeplitz extractor from `n` to `m` bits.

    Raises:
        DomainError: If `m > n`.

    Examples:
        ```{python}
        import multisource_extractors as msx

        ext = msx.toeplitz_extractor(4, 1)
        ext.evaluate(msx.BitString.from_str("0110"), msx.BitString.from_str("1001"))
        ```
    """
    return ToeplitzExtractor(n, m)


class LookupExtractor(StrongSeededExtractor):
    """An extractor given by its full function table.

    Attributes:
        values: Integer outputs, shape `(2**n, 2**d)`.
        measured_eps: The exhaustively verified worst-case error, if known.
    """

    def __init__(
        self,
        n: int,
        d: int,
        m: int,
        values: np.ndarray,
        claimed_k: float | None = None,
        measured_eps: float | None = None,
    ) -> None:
        """Create the extractor, checking the table shape and range."""
        values = np.array(values, dtype=np.int64)
        if values.shape != (2**n, 2**d):
            raise DomainError(
                f"A lookup table for n={n}, d={d} has shape {(2**n, 2**d)},"
                f" not {values.shape}."
            )
        if values.size and (values.min() < 0 or values.max() >= 2**m):
            raise DomainError(f"Every table entry must be an {m}-bit value.")
        self.n = n
        self.d = d
        self.m = m
        self.values = values
        self.values.setflags(write=False)
        self.claimed_k = claimed_k
        self.measured_eps = measured_eps
        self.claimed_eps = measured_eps

    @classmethod
    def from_function(
        cls,
        n: int,
        d: int,
        m: int,
        function: Callable[[BitString, BitString], BitString],
    ) -> "LookupExtractor":
        """Tabulate a bit-string function."""
        values = np.array(
            [
                [function(BitString(n, x), BitString(d, s)).value for s in range(2**d)]
                for x in range(2**n)
            ],
            dtype=np.int64,
        ).reshape(2**n, 2**d)
        return cls(n, d, m, values)

    def evaluate_int(self, x: int, seed: int) -> int:
        """Look the output up."""
        return int(self.values[x, seed])

    def output_matrix(self, xs: np.ndarray, seeds: np.ndarray) -> np.ndarray:
        """Slice the table."""
        return self.values[np.ix_(xs.astype(np.int64), seeds.astype(np.int64))]

    def __eq__(self, other: object) -> bool:
        """Tables are equal when their shapes and entries are equal."""
        if not isinstance(other, LookupExtractor):
            return NotImplemented
        return (self.n, self.d, self.m) == (other.n, other.d, other.m) and bool(
            np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


class HashedExtractor(StrongSeededExtractor):
    """A keyed random function used as an extractor of any shape.

    Outputs are the leading `m` bits of a BLAKE2b digest of the key, the
    seed and the source value. It stands in for an optimal extractor where
    tables are too large to search; its error is measured, never proven.
    """

    def __init__(self, n: int, d: int, m: int, key: int = 0) -> None:
        """Create the function for one key."""
        if min(n, d) < 0 or not 1 <= m <= 512:
            raise DomainError(f"Cannot hash to shape n={n}, d={d}, m={m}.")
        self.n = n
        self.d = d
        self.m = m
        self.key = key
        self._prefix = f"msx-hashed:{n}:{d}:{m}:{key}:".encode()

    def evaluate_int(self, x: int, seed: int) -> int:
        """Hash the key, seed and source value."""
        message = self._prefix + f"{seed:x}:{x:x}".encode()
        digest = hashlib.blake2b(message, digest_size=64).digest()
        return int.from_bytes(digest, "big") >> (512 - self.m)


# Exhaustive flat-source verification ====


def flat_distances(table: np.ndarray, m: int, supports: np.ndarray) -> np.ndarray:
    """Per-seed distances from uniform for a batch of flat sources.

    Args:
        table: Integer outputs, shape `(2**n, seeds)`.
        m: The output length.
        supports: Support indices, shape `(sources, 2**k)`.

    Returns:
        Array of shape `(sources, seeds)` with the distance of `Ext(X, s)`
        from uniform for each source and seed.
    """
    size = supports.shape[1]
    outputs = table[supports]
    distances = np.zeros((supports.shape[0], table.shape[1]))
    for output in range(2**m):
        counts = (outputs == output).sum(axis=1)
        distances += np.abs(counts / size - 2.0**-m)
    return distances / 2


def _chunked_supports(n: int, k: int) -> Iterator[np.ndarray]:
    combinations = itertools.combinations(range(2**n), 2**k)
    while chunk := list(itertools.islice(combinations, _CHUNK)):
        yield np.array(chunk, dtype=np.int64)


def _chunk_worst(
    table: np.ndarray, m: int, supports: np.ndarray
) -> tuple[float, tuple[int, ...]]:
    strong = flat_distances(table, m, supports).mean(axis=1)
    best = int(np.argmax(strong))
    return float(strong[best]), tuple(int(v) for v in supports[best])


def _chunk_worst_sr(
    table: np.ndarray, m: int, rows: int, row_len: int, supports: np.ndarray
) -> tuple[float, tuple[int, ...]]:
    per_seed = flat_distances(table, m, supports)
    worst = np.zeros(supports.shape[0])
    for good in range(rows):
        # Seeds grouped by the value of the good row; the other rows are
        # chosen by the adversary independently for each good-row value.
        shape = (
            supports.shape[0],
            2 ** (row_len * good),
            2**row_len,
            2 ** (row_len * (rows - 1 - good)),
        )
        grouped = per_seed.reshape(shape).max(axis=(1, 3)).mean(axis=1)
        worst = np.maximum(worst, grouped)
    best = int(np.argmax(worst))
    return float(worst[best]), tuple(int(v) for v in supports[best])


def _worst_over_supports(
    chunk_worst: Callable[[np.ndarray], tuple[float, tuple[int, ...]]],
    n: int,
    k: int,
    workers: int,
) -> tuple[float, tuple[int, ...]]:
    chunks = _chunked_supports(n, k)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(chunk_worst, chunks))
    else:
        results = fmap(chunks, chunk_worst)
    # `max` keeps the first maximum, so the reported support is deterministic.
    return max(results, key=lambda result: result[0])


@dataclass(frozen=True)
class FlatErrorReport:
    """The worst strong distance over every flat `(n, k)` source.

    Attributes:
        k: The min-entropy of the flat sources.
        worst: The largest strong distance.
        worst_support: The support of a source reaching it.
        sources: How many flat sources were checked.
    """

    k: int
    worst: float
    worst_support: tuple[int, ...]
    sources: int


def _flat_work(n: int, seeds: int, k: int) -> int:
    return math.comb(2**n, 2**k) * 2**k * seeds


def measure_worst_flat_error(
    ext: StrongSeededExtractor,
    k: int,
    budget: int = ENUMERATION_BUDGET,
    workers: int = 1,
) -> FlatErrorReport:
    """Exhaustively measure the worst strong distance over flat `(n, k)` sources.

    Raises:
        GuardError: If the enumeration exceeds `budget`.
    """
    if not 0 <= k <= ext.n:
        raise DomainError(f"Cannot measure a {ext.n}-bit extractor at k={k}.")
    check_budget(
        "flat-source enumeration",
        _flat_work(ext.n, 2**ext.d, k),
        budget,
        "Use an adversarial battery instead of exhaustive enumeration.",
    )
    table = ext.table(budget)
    worst, support = _worst_over_supports(
        partial(_chunk_worst, table, ext.m), ext.n, k, workers
    )
    return FlatErrorReport(
        k=k, worst=worst, worst_support=support, sources=math.comb(2**ext.n, 2**k)
    )


# Ideal-extractor search ====


def random_table(n: int, d: int, m: int, family: TableFamily, seed: int) -> np.ndarray:
    """A random function table, shape `(2**n, 2**d)`.

    The `affine` family draws, for every seed, an independent random affine
    map from `n` to `m` bits; `uniform` draws every entry independently.
    """
    rng = make_rng(seed)
    if family == "uniform":
        return rng.integers(0, 2**m, size=(2**n, 2**d), dtype=np.int64)
    xs = np.arange(2**n, dtype=np.int64)
    linear = rng.integers(0, 2**n, size=(2**d, m), dtype=np.int64)
    offsets = rng.integers(0, 2**m, size=2**d, dtype=np.int64)
    bits = (np.bitwise_count(xs[:, None, None] & linear[None, :, :]) & 1).astype(
        np.int64
    )
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    return (bits @ weights) ^ offsets[None, :]


def _trial_error(
    n: int,
    d: int,
    m: int,
    family: TableFamily,
    verify: Callable[[np.ndarray], float],
    seed: int,
) -> float:
    return verify(random_table(n, d, m, family, seed))


def _table_flat_error(m: int, n: int, k: int, table: np.ndarray) -> float:
    return _worst_over_supports(partial(_chunk_worst, table, m), n, k, 1)[0]


def _table_sr_error(
    m: int, n: int, k: int, rows: int, row_len: int, table: np.ndarray
) -> float:
    return _worst_over_supports(
        partial(_chunk_worst_sr, table, m, rows, row_len), n, k, 1
    )[0]


def _search(
    n: int,
    d: int,
    m: int,
    target_eps: float,
    trials: int,
    rng: np.random.Generator,
    family: TableFamily,
    verify: Callable[[np.ndarray], float],
    workers: int,
) -> tuple[np.ndarray, float]:
    """Try random tables in order and keep the first one meeting the target."""
    seeds = [derive_seed(rng) for _ in range(trials)]
    evaluate = partial(_trial_error, n, d, m, family, verify)
    batch = max(1, workers) * 4
    best_eps = math.inf
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for start in range(0, trials, batch):
            chunk = seeds[start : start + batch]
            if executor:
                errors = list(executor.map(evaluate, chunk))
            else:
                errors = fmap(chunk, evaluate)
            for offset, eps in enumerate(errors):
                best_eps = min(best_eps, eps)
                if eps <= target_eps + FLOAT_SLACK:
                    debug_print(f"Trial {start + offset} reached error {eps:.6g}.")
                    return random_table(n, d, m, family, seeds[start + offset]), eps
    finally:
        if executor:
            executor.shutdown()
    raise SearchFailure(target_eps, best_eps, trials)


def search_ideal_extractor(
    n: int,
    d: int,
    m: int,
    k: int,
    target_eps: float,
    trials: int,
    rng: np.random.Generator,
    family: TableFamily = "affine",
    workers: int = 1,
    budget: int = ENUMERATION_BUDGET,
) -> LookupExtractor:
    """Search random tables for a strong extractor meeting `target_eps`.

    Every candidate is verified exhaustively against all flat `(n, k)`
    sources. Trial seeds are drawn from `rng` up front and the lowest trial
    index meeting the target wins, so the result does not depend on
    `workers`.

    Args:
        n: The source length.
        d: The seed length.
        m: The output length.
        k: The min-entropy to verify against.
        target_eps: The largest acceptable worst-case strong distance.
        trials: The number of candidate tables.
        rng: The generator deciding the candidates.
        family: The distribution of candidate tables.
        workers: Processes verifying candidates in parallel.
        budget: The enumeration budget per candidate.

    Returns:
        The first table meeting the target, with its measured error.

    Raises:
        GuardError: If verifying one table exceeds the budget, or `n > 6`
            or `k > 3`.
        SearchFailure: If no candidate meets the target.
    """
    if not 0 <= k <= n:
        raise DomainError(f"Cannot search an {n}-bit extractor at k={k}.")
    if n > 6 or k > 3:
        raise GuardError(
            "ideal-search size",
            max(n, k),
            6 if n > 6 else 3,
            "Exhaustive search is limited to n <= 6 and k <= 3.",
        )
    check_budget("ideal-search verification", _flat_work(n, 2**d, k), budget)
    table, eps = _search(
        n,
        d,
        m,
        target_eps,
        trials,
        rng,
        family,
        partial(_table_flat_error, m, n, k),
        workers,
    )
    return LookupExtractor(n, d, m, table, claimed_k=k, measured_eps=eps)


# Bad-set verification ====


@dataclass(frozen=True)
class BadSetReport:
    """How many inputs push too much mass into some output set.

    Attributes:
        k: The entropy parameter; the bound is `2**k`.
        eps: The error used in the threshold `|T|/2**m + eps`.
        max_count: The largest number of bad inputs over all sets `T`.
        worst_set: The outputs of a set `T` reaching `max_count`.
        counts: The bad-input count of every set, indexed by its bit mask.
        passed: Whether `max_count <= 2**k`.
    """

    k: int
    eps: float
    max_count: int
    worst_set: tuple[int, ...]
    counts: tuple[int, ...] = field(repr=False)
    passed: bool


def verify_bad_set_bound(
    ext: StrongSeededExtractor,
    k: int,
    eps: float,
    budget: int = ENUMERATION_BUDGET,
) -> BadSetReport:
    """Count, for every output set `T`, the inputs that over-hit it.

    An input `x` is bad for `T` when `Pr_r[Ext(x, r) in T] > |T|/2**m + eps`.
    If the extractor has error at most `eps` for min-entropy `k`, no set has
    more than `2**k` bad inputs.

    Raises:
        GuardError: If `m > 3`, `n > 10` or the enumeration exceeds `budget`.
    """
    if ext.m > 3 or ext.n > 10:
        raise GuardError(
            "bad-set size",
            max(ext.n, ext.m),
            10 if ext.n > 10 else 3,
            "Bad-set verification supports m <= 3 and n <= 10.",
        )
    check_budget(
        "bad-set enumeration", 2**ext.n * 2**ext.d * 2 ** (2**ext.m), budget
    )
    table = ext.table(budget)
    outputs = 2**ext.m
    histogram = np.stack(
        [(table == output).mean(axis=1) for output in range(outputs)], axis=1
    )
    masks = np.arange(2**outputs)
    membership = (masks[:, None] >> np.arange(outputs)[None, :]) & 1
    hit = histogram @ membership.T
    density = membership.sum(axis=1) / outputs
    bad = hit > density[None, :] + eps + FLOAT_SLACK
    counts = bad.sum(axis=0)
    worst = int(np.argmax(counts))
    return BadSetReport(
        k=k,
        eps=eps,
        max_count=int(counts[worst]),
        worst_set=tuple(o for o in range(outputs) if worst >> o & 1),
        counts=tuple(int(c) for c in counts),
        passed=int(counts[worst]) <= 2**k,
    )


# Extractors for somewhere-random sources ====


class SRExtractor(ABC):
    """An extractor for one weak source and one somewhere-random matrix.

    Attributes:
        n: The weak source length.
        rows: The number of matrix rows.
        row_len: The length of every row.
        m: The output length.
        claimed_eps: The error claim, if any.
        sound: Whether the extractor has any error guarantee at all.
    """

    n: int
    rows: int
    row_len: int
    m: int
    claimed_eps: float | None = None
    sound: bool = True

    @abstractmethod
    def evaluate_rows(self, x: BitString, rows: Sequence[BitString]) -> BitString:
        """Evaluate on a realised matrix given as its rows."""

    def evaluate(self, x: BitString, matrix: "SRMatrix") -> BitString:
        """Evaluate on a realised matrix.

        Raises:
            DomainError: If the source or matrix shape differs from the
                declared one.
        """
        if len(x) != self.n:
            raise DomainError(f"Expected a {self.n}-bit source, got {len(x)} bits.")
        if (matrix.rows, matrix.row_len) != (self.rows, self.row_len):
            raise DomainError(
                f"Expected a {self.rows}x{self.row_len} matrix, got"
                f" {matrix.rows}x{matrix.row_len}."
            )
        return self.evaluate_rows(x, matrix.values)


class LookupSRExtractor(SRExtractor):
    """A searched table over the source and the concatenated matrix."""

    def __init__(self, table: LookupExtractor, rows: int, row_len: int) -> None:
        """Wrap a table whose seed is the concatenation of the rows."""
        if table.d != rows * row_len:
            raise DomainError(
                f"A {rows}x{row_len} matrix needs a {rows * row_len}-bit seed,"
                f" not {table.d} bits."
            )
        self.table = table
        self.n = table.n
        self.rows = rows
        self.row_len = row_len
        self.m = table.m
        self.claimed_eps = table.measured_eps

    def evaluate_rows(self, x: BitString, rows: Sequence[BitString]) -> BitString:
        """Look up the concatenated matrix."""
        return self.table.evaluate(x, concat(rows))


class FoldSRExtractor(SRExtractor):
    """XOR of a seeded extractor applied with every row as the seed.

    This has no error guarantee and exists for smoke runs at shapes where no
    table can be searched.
    """

    sound = False

    def __init__(self, inner: StrongSeededExtractor, rows: int) -> None:
        """Fold `inner` over `rows` rows of `inner.d` bits."""
        self.inner = inner
        self.n = inner.n
        self.rows = rows
        self.row_len = inner.d
        self.m = inner.m

    def evaluate_rows(self, x: BitString, rows: Sequence[BitString]) -> BitString:
        """XOR the inner outputs of every row."""
        value = BitString.zeros(self.m)
        for row in rows:
            value = value ^ self.inner.evaluate(x, row)
        return value


def basicext_substitute(
    kind: Literal["ideal", "fold"],
    *,
    n: int,
    rows: int,
    row_len: int,
    m: int,
    k: int | None = None,
    inner: StrongSeededExtractor | None = None,
    target_eps: float = 0.3,
    trials: int = 500,
    rng: np.random.Generator | None = None,
    family: TableFamily = "affine",
    workers: int = 1,
    budget: int = ENUMERATION_BUDGET,
) -> SRExtractor:
    """Build a desk-scale extractor for a weak source and an SR matrix.

    `ideal` searches a table and verifies it against every flat `(n, k)`
    source paired with every matrix whose good row is uniform and whose other
    rows are arbitrary functions of it. The verified quantity is the distance
    of `(V, Z)` from `(U, Z)`. `fold` XORs `inner` over the rows and is not
    sound.

    Raises:
        GuardError: If the ideal verification exceeds `budget`.
        SearchFailure: If no table meets `target_eps`.
        DomainError: If a required argument for the kind is missing.
    """
    if kind == "fold":
        if inner is None:
            raise DomainError("The fold substitute needs an inner extractor.")
        if (inner.n, inner.d, inner.m) != (n, row_len, m):
            raise DomainError(
                f"The inner extractor must have shape n={n}, d={row_len}, m={m}."
            )
        return FoldSRExtractor(inner, rows)
    if k is None or rng is None:
        raise DomainError("The ideal substitute needs `k` and `rng`.")
    if not 0 <= k <= n:
        raise DomainError(f"Cannot search an {n}-bit extractor at k={k}.")
    d = rows * row_len
    check_budget("basicext verification", _flat_work(n, 2**d, k), budget)
    check_budget("basicext table", 2**n * 2**d, budget)
    table, eps = _search(
        n,
        d,
        m,
        target_eps,
        trials,
        rng,
        family,
        partial(_table_sr_error, m, n, k, rows, row_len),
        workers,
    )
    return LookupSRExtractor(
        LookupExtractor(n, d, m, table, claimed_k=k, measured_eps=eps), rows, row_len
    )
