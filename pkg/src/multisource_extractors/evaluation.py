"""Exact output distributions, statistical distances and Monte Carlo estimates.

Every distribution is a `JointTable`: a map from tuples of integer-encoded
bit strings to probabilities. Exact results come from enumerating the
product of the supports of independent sources.
"""

import itertools
import math
from collections import defaultdict
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from seedcase_soil import fmap, keep

from multisource_extractors.bits import BitString
from multisource_extractors.constants import (
    BOOTSTRAP_RESAMPLES,
    ENUMERATION_BUDGET,
    FLOAT_SLACK,
    MC_MAX_OUTPUT_BITS,
    NORMALIZATION_TOLERANCE,
)
from multisource_extractors.errors import DomainError, GuardError
from multisource_extractors.extractors import StrongSeededExtractor
from multisource_extractors.internals import check_budget
from multisource_extractors.sources import (
    DiscreteSource,
    min_entropy,
    point_mass,
    sample_many,
)

type Outcome = tuple[int, ...]
type Output = BitString | tuple[BitString, ...]


@dataclass(frozen=True, eq=False)
class JointTable:
    """An exact distribution over tuples of bit strings.

    Attributes:
        var_lens: The bit length of each coordinate.
        table: Probability of each outcome, coordinates integer-encoded.
    """

    var_lens: tuple[int, ...]
    table: Mapping[Outcome, float]

    def __post_init__(self) -> None:
        """Check the total probability."""
        total = math.fsum(self.table.values())
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise DomainError(f"The table sums to {total!r}, not 1.")

    @property
    def total_bits(self) -> int:
        """The number of bits of a whole outcome."""
        return sum(self.var_lens)

    @classmethod
    def from_source(cls, source: DiscreteSource) -> "JointTable":
        """The table of one exact source."""
        return cls((source.n,), {(value.value,): p for value, p in source.items()})

    def marginal(self, indices: Sequence[int]) -> "JointTable":
        """The distribution of the coordinates in `indices`, in that order."""
        marginal: dict[Outcome, float] = defaultdict(float)
        for outcome, p in self.table.items():
            marginal[tuple(outcome[i] for i in indices)] += p
        return JointTable(tuple(self.var_lens[i] for i in indices), dict(marginal))

    def probability(self, outcome: Outcome) -> float:
        """The probability of one outcome."""
        return self.table.get(outcome, 0.0)


def _as_tuple(output: Output) -> tuple[BitString, ...]:
    return (output,) if isinstance(output, BitString) else tuple(output)


def push_forward(
    f: Callable[..., Output],
    sources: Sequence[DiscreteSource],
    budget: int = ENUMERATION_BUDGET,
) -> JointTable:
    """The exact distribution of `f` applied to independent sources.

    Args:
        f: A deterministic map taking one value per source and returning a
            bit string or a tuple of bit strings.
        sources: Independent exact sources.
        budget: The largest number of weighted evaluations allowed.

    Returns:
        The output distribution.

    Raises:
        GuardError: If the product of the support sizes exceeds `budget`.
        DomainError: If `f` returns outputs of varying shape.
    """
    check_budget(
        "push-forward enumeration",
        math.prod(fmap(sources, lambda source: len(source.support))),
        budget,
        "Use Monte Carlo mode (`mc_distance_upper`) for larger inputs.",
    )
    table: dict[Outcome, float] = defaultdict(float)
    var_lens: tuple[int, ...] | None = None
    for combination in itertools.product(*fmap(sources, lambda s: list(s.items()))):
        output = _as_tuple(f(*(value for value, _ in combination)))
        lens = tuple(len(part) for part in output)
        if var_lens is None:
            var_lens = lens
        elif lens != var_lens:
            raise DomainError(f"f returned shapes {var_lens} and {lens}.")
        table[tuple(part.value for part in output)] += math.prod(
            p for _, p in combination
        )
    return JointTable(var_lens or (), dict(table))


def statistical_distance(p: JointTable, q: JointTable) -> float:
    """Half the L1 distance between two distributions of the same shape.

    Raises:
        DomainError: If the shapes differ.
    """
    if p.var_lens != q.var_lens:
        raise DomainError(f"Cannot compare shapes {p.var_lens} and {q.var_lens}.")
    outcomes = set(p.table) | set(q.table)
    return math.fsum(abs(p.probability(o) - q.probability(o)) for o in outcomes) / 2


def distance_from_uniform(p: JointTable) -> float:
    """The distance of `p` from the uniform distribution of its shape."""
    uniform = 2.0**-p.total_bits
    inside = math.fsum(abs(prob - uniform) for prob in p.table.values())
    # Unseen outcomes hold the rest of the uniform mass.
    outside = 1.0 - len(p.table) * uniform
    return (inside + outside) / 2


def strong_distance(
    ext: StrongSeededExtractor,
    source: DiscreteSource,
    budget: int = ENUMERATION_BUDGET,
) -> float:
    """The distance of `(Ext(X, S), S)` from `(U_m, S)` for a uniform seed.

    Raises:
        GuardError: If the enumeration exceeds `budget`.
    """
    seeds = 2**ext.d
    check_budget("strong-distance enumeration", len(source.support) * seeds, budget)
    check_budget("strong-distance histogram", seeds * 2**ext.m, budget)
    outputs = ext.output_matrix(source.values_array(), np.arange(seeds, dtype=np.int64))
    weights = np.broadcast_to(source.weights_array()[:, None], outputs.shape)
    cells = np.arange(seeds, dtype=np.int64)[None, :] * 2**ext.m + outputs
    histogram = np.bincount(
        cells.ravel(), weights=weights.ravel(), minlength=seeds * 2**ext.m
    )
    return float(np.abs(histogram - 2.0**-ext.m).sum() / (2 * seeds))


@dataclass(frozen=True)
class HWiseReport:
    """Joint distances from uniform of size-`h` sets of coordinates.

    Attributes:
        h: The subset size.
        worst: The largest distance over the tested subsets.
        per_subset: Every tested subset with its distance.
    """

    h: int
    worst: float
    per_subset: tuple[tuple[tuple[int, ...], float], ...]


def choose_subsets(
    candidates: Sequence[int],
    h: int,
    subsets: Literal["all"] | int,
    rng: np.random.Generator | None,
) -> list[tuple[int, ...]]:
    """All size-`h` subsets of `candidates`, or a seeded sample of them."""
    total = math.comb(len(candidates), h)
    if subsets == "all" or subsets >= total:
        return list(itertools.combinations(candidates, h))
    if rng is None:
        raise DomainError("Sampling subsets needs a generator.")
    chosen: set[tuple[int, ...]] = set()
    while len(chosen) < subsets:
        picked = rng.choice(len(candidates), size=h, replace=False)
        chosen.add(tuple(sorted(candidates[i] for i in picked)))
    return sorted(chosen)


def hwise_report(
    joint: JointTable,
    h: int,
    subsets: Literal["all"] | int = "all",
    rng: np.random.Generator | None = None,
    candidates: Sequence[int] | None = None,
) -> HWiseReport:
    """Marginal distances from uniform of size-`h` subsets of coordinates.

    Args:
        joint: A distribution over `N` coordinates (matrix rows).
        h: The subset size.
        subsets: `"all"` or the number of subsets to sample.
        rng: The generator used when sampling.
        candidates: The coordinates subsets are drawn from, all by default.

    Returns:
        The worst distance and the per-subset list.
    """
    pool = list(range(len(joint.var_lens))) if candidates is None else list(candidates)
    per_subset = tuple(
        (subset, distance_from_uniform(joint.marginal(subset)))
        for subset in choose_subsets(pool, h, subsets, rng)
    )
    worst = max((distance for _, distance in per_subset), default=0.0)
    return HWiseReport(h=h, worst=worst, per_subset=per_subset)


@dataclass(frozen=True)
class ConditionalEntry:
    """One fixing of the conditioned source."""

    value: BitString
    probability: float
    measured: float
    passed: bool


@dataclass(frozen=True)
class ConditionalReport:
    """A metric evaluated under every fixing of one source.

    Attributes:
        entries: One entry per support value of the conditioned source.
        threshold: A fixing passes when its metric is at most this.
        passing_mass: The total probability of passing fixings.
    """

    entries: tuple[ConditionalEntry, ...]
    threshold: float
    passing_mass: float = field(init=False)

    def __post_init__(self) -> None:
        """Sum the probability of the passing fixings."""
        mass = math.fsum(entry.probability for entry in self.entries if entry.passed)
        object.__setattr__(self, "passing_mass", mass)

    @property
    def expected(self) -> float:
        """The probability-weighted mean of the metric.

        For a distance from uniform this is the distance of `(f, Y)` from
        `(U, Y)` with `Y` the conditioned source.
        """
        return math.fsum(entry.probability * entry.measured for entry in self.entries)


def conditional_analysis(
    f: Callable[..., Output],
    sources: Sequence[DiscreteSource],
    condition_on: int,
    inner_metric: Callable[[JointTable], float],
    threshold: float,
    budget: int = ENUMERATION_BUDGET,
) -> ConditionalReport:
    """Evaluate `inner_metric` on the output distribution under each fixing.

    Args:
        f: The deterministic map of the sources.
        sources: Independent exact sources.
        condition_on: The index of the source being fixed.
        inner_metric: A function of the conditional output distribution.
        threshold: The largest passing metric value.
        budget: The enumeration budget for the whole analysis.

    Returns:
        Per-fixing metric values and the passing probability mass.

    Raises:
        GuardError: If the enumeration exceeds `budget`.
    """
    check_budget(
        "conditional enumeration",
        math.prod(fmap(sources, lambda source: len(source.support))),
        budget,
    )
    entries = []
    for value, probability in sources[condition_on].items():
        fixed = list(sources)
        fixed[condition_on] = point_mass(value)
        measured = inner_metric(push_forward(f, fixed, budget))
        entries.append(
            ConditionalEntry(
                value=value,
                probability=probability,
                measured=measured,
                passed=measured <= threshold + FLOAT_SLACK,
            )
        )
    return ConditionalReport(entries=tuple(entries), threshold=threshold)


# Monte Carlo ====


@dataclass(frozen=True)
class MCEstimate:
    """A plug-in estimate of the distance from uniform.

    The plug-in estimate is biased upwards. The interval half-width is the
    half-range of the central 99 % of bootstrap replicates plus the
    plug-in error allowance `sum(sqrt(p(1 - p) / samples)) / 2`.

    Attributes:
        estimate: The distance of the empirical distribution from uniform.
        low: The lower end of the interval, at least 0.
        high: The upper end of the interval, at most 1.
        half_width: Half the width of the unclipped interval.
        samples: The number of samples.
        biased_up: Always true; reports flag the estimate as biased upwards.
    """

    estimate: float
    low: float
    high: float
    half_width: float
    samples: int
    biased_up: bool = True


def _plug_in(counts: np.ndarray, samples: int) -> np.ndarray:
    uniform = 1.0 / counts.shape[-1]
    return np.abs(counts / samples - uniform).sum(axis=-1) / 2


def mc_distance_upper(
    f: Callable[..., Output],
    sources: Sequence[DiscreteSource],
    samples: int,
    rng: np.random.Generator,
    resamples: int = BOOTSTRAP_RESAMPLES,
) -> MCEstimate:
    """Estimate the distance of `f`'s output from uniform by sampling.

    Args:
        f: The deterministic map of the sources.
        sources: Independent sources, exact or sampling mode.
        samples: The number of joint draws.
        rng: The generator for the draws and the bootstrap.
        resamples: The number of bootstrap replicates.

    Returns:
        The estimate with its 99 % interval.

    Raises:
        GuardError: If the output has more than 20 bits.
    """
    if samples < 1:
        raise DomainError("Monte Carlo estimation needs at least one sample.")
    draws = fmap(sources, lambda source: sample_many(source, rng, samples))
    values = np.zeros(samples, dtype=np.int64)
    bits: int | None = None
    for index in range(samples):
        inputs = [
            BitString(source.n, int(draw[index]))
            for source, draw in zip(sources, draws)
        ]
        output = _as_tuple(f(*inputs))
        if bits is None:
            bits = sum(len(part) for part in output)
            if bits > MC_MAX_OUTPUT_BITS:
                raise GuardError(
                    "Monte Carlo output length",
                    bits,
                    MC_MAX_OUTPUT_BITS,
                    "The plug-in estimator is unreliable here; use a"
                    " collision-based test instead.",
                )
        packed = 0
        for part in output:
            packed = (packed << len(part)) | part.value
        values[index] = packed
    counts = np.bincount(values, minlength=2 ** (bits or 0))
    estimate = float(_plug_in(counts, samples))
    frequencies = counts / samples
    replicates = _plug_in(
        rng.multinomial(samples, frequencies, size=resamples), samples
    )
    low_q, high_q = np.percentile(replicates, [0.5, 99.5])
    allowance = float(np.sqrt(frequencies * (1 - frequencies) / samples).sum() / 2)
    half_width = float(high_q - low_q) / 2 + allowance
    return MCEstimate(
        estimate=estimate,
        low=max(0.0, estimate - half_width),
        high=min(1.0, estimate + half_width),
        half_width=half_width,
        samples=samples,
    )


# Entropy loss under fixings ====


@dataclass(frozen=True)
class FixingEntry:
    """The min-entropy left after one fixing."""

    value: BitString
    probability: float
    entropy: float
    loss: float
    passed: bool


@dataclass(frozen=True)
class LossReport:
    """Min-entropy left in a source after fixing a function of it.

    Attributes:
        entries: One entry per value of the fixed function.
        bound: `H(X) - fixing_len - log2(1 / eps)`.
        eps: The allowed failing probability mass.
        passing_mass: The probability of fixings meeting the bound.
        passed: Whether `passing_mass >= 1 - eps`.
    """

    entries: tuple[FixingEntry, ...]
    bound: float
    eps: float
    passing_mass: float
    passed: bool


def min_entropy_loss_check(
    source: DiscreteSource,
    fixing: Callable[[BitString], BitString],
    fixing_len: int,
    eps: float,
    budget: int = ENUMERATION_BUDGET,
) -> LossReport:
    """Check how much min-entropy fixing a short function of a source costs.

    Args:
        source: An exact source.
        fixing: A function of the source with `fixing_len`-bit outputs.
        fixing_len: The output length of `fixing`.
        eps: The probability mass allowed to fall below the bound.
        budget: The enumeration budget.

    Returns:
        The conditional min-entropy after every fixing.
    """
    if not 0 < eps <= 1:
        raise DomainError(f"eps must be in (0, 1], not {eps}.")
    check_budget("fixing enumeration", len(source.support), budget)
    groups: dict[BitString, dict[BitString, float]] = defaultdict(dict)
    for value, p in source.items():
        fixed = fixing(value)
        if len(fixed) != fixing_len:
            raise DomainError(
                f"The fixing returned {len(fixed)} bits, not {fixing_len}."
            )
        groups[fixed][value] = p
    entropy = min_entropy(source)
    bound = entropy - fixing_len - math.log2(1 / eps)
    entries = []
    for fixed in sorted(groups):
        mass = math.fsum(groups[fixed].values())
        conditional = -math.log2(max(groups[fixed].values()) / mass)
        entries.append(
            FixingEntry(
                value=fixed,
                probability=mass,
                entropy=conditional,
                loss=entropy - conditional,
                passed=conditional >= bound - 1e-9,
            )
        )
    passing_mass = math.fsum(entry.probability for entry in keep(entries, _passed))
    return LossReport(
        entries=tuple(entries),
        bound=bound,
        eps=eps,
        passing_mass=passing_mass,
        passed=passing_mass >= 1 - eps - FLOAT_SLACK,
    )


def _passed(entry: FixingEntry) -> bool:
    return entry.passed
