"""Alternating extraction and the look-ahead extractor built on it.

Two parties alternate: the X side computes `R_i = Ext_w(x, S_i)` and the Q
side answers with `S_{i+1} = Ext_q(q, R_i)`. The look-ahead extractor reads
`S_1` off the front of its second input and returns `R_1, ..., R_t`.
"""

import itertools
import math
from collections import defaultdict
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from multisource_extractors.bits import BitString
from multisource_extractors.constants import ENUMERATION_BUDGET, FLOAT_SLACK
from multisource_extractors.errors import DomainError
from multisource_extractors.extractors import StrongSeededExtractor
from multisource_extractors.internals import check_budget
from multisource_extractors.sources import DiscreteSource


@dataclass(frozen=True)
class AltExtConfig:
    """The two extractors and the shape of an alternating extraction.

    Attributes:
        ext_q: Extracts from the Q side, seeded by the X side's output.
        ext_w: Extracts from the X side, seeded by the Q side's output.
        ell: The width of every exchanged string.
        t: The number of rounds.
    """

    ext_q: StrongSeededExtractor
    ext_w: StrongSeededExtractor
    ell: int
    t: int

    def __post_init__(self) -> None:
        """Check that both extractors exchange `ell`-bit strings."""
        if self.t < 1 or self.ell < 1:
            raise DomainError(
                f"Need t >= 1 and ell >= 1, got t={self.t} and ell={self.ell}."
            )
        shapes = {
            "ext_q": (self.ext_q.d, self.ext_q.m),
            "ext_w": (self.ext_w.d, self.ext_w.m),
        }
        for role, shape in shapes.items():
            if shape != (self.ell, self.ell):
                raise DomainError(
                    f"{role} must take and produce {self.ell}-bit strings,"
                    f" not seed {shape[0]} and output {shape[1]} bits."
                )


@dataclass(frozen=True)
class Transcript:
    """The strings exchanged in an alternating extraction.

    Attributes:
        s: `S_1, ..., S_t` sent by the Q side.
        r: `R_1, ..., R_t` sent by the X side.
    """

    s: tuple[BitString, ...]
    r: tuple[BitString, ...]


def alternating_extraction(
    cfg: AltExtConfig, x: BitString, q: BitString, s1: BitString
) -> Transcript:
    """Run `cfg.t` rounds of alternating extraction.

    Args:
        cfg: The extractors and round count.
        x: The X-side value, `cfg.ext_w.n` bits.
        q: The Q-side value, `cfg.ext_q.n` bits.
        s1: The first Q-side message, `cfg.ell` bits.

    Returns:
        The transcript with `R_i = Ext_w(x, S_i)` and
        `S_{i+1} = Ext_q(q, R_i)`.

    Raises:
        DomainError: If a length does not match the configuration.
    """
    if len(s1) != cfg.ell:
        raise DomainError(f"S_1 must have {cfg.ell} bits, not {len(s1)}.")
    if len(x) != cfg.ext_w.n or len(q) != cfg.ext_q.n:
        raise DomainError(
            f"Expected x of {cfg.ext_w.n} bits and q of {cfg.ext_q.n} bits,"
            f" got {len(x)} and {len(q)} bits."
        )
    s = [s1]
    r: list[BitString] = []
    for round_index in range(cfg.t):
        r.append(cfg.ext_w.evaluate(x, s[round_index]))
        if round_index + 1 < cfg.t:
            s.append(cfg.ext_q.evaluate(q, r[round_index]))
    return Transcript(s=tuple(s), r=tuple(r))


def la_ext(cfg: AltExtConfig, x: BitString, y: BitString) -> tuple[BitString, ...]:
    """The look-ahead extractor `laExt(x, (Q, S_1))`.

    `S_1` is the first `cfg.ell` bits of `y` and `Q` is `y` itself, padded
    with zeros on the right to `cfg.ext_q.n` bits when shorter.

    Raises:
        DomainError: If `y` is shorter than `cfg.ell` or longer than the
            Q-side extractor accepts.
    """
    if len(y) < cfg.ell:
        raise DomainError(f"y needs at least {cfg.ell} bits, not {len(y)}.")
    if len(y) > cfg.ext_q.n:
        raise DomainError(
            f"The Q side accepts at most {cfg.ext_q.n} bits, not {len(y)}."
        )
    return alternating_extraction(cfg, x, y.pad_right(cfg.ext_q.n), y[: cfg.ell]).r


@dataclass(frozen=True)
class LookaheadReport:
    """How close round `j + 1` of the look-ahead extractor is to uniform.

    The distance compares `(Y, Y_2..Y_h, {R_i1..R_ij}, R_{j+1})` with the
    same tuple where `R_{j+1}` is replaced by uniform bits.

    Attributes:
        j: The number of revealed rounds of the correlated parties.
        distance: The exact statistical distance.
        bound: `constant * t * extractor_error`.
        passed: Whether `distance <= bound`.
    """

    j: int
    distance: float
    bound: float
    passed: bool


def laext_lookahead_test(
    cfg: AltExtConfig,
    source_x: DiscreteSource,
    seed_source: DiscreteSource,
    correlated_q_family: Sequence[Callable[[BitString], BitString]],
    j: int,
    extractor_error: float,
    constant: float = 4.0,
    budget: int = ENUMERATION_BUDGET,
) -> LookaheadReport:
    """Measure the look-ahead property of `la_ext` exactly.

    A shared seed `sigma` is drawn from `seed_source`; party `i` holds
    `Y_i = correlated_q_family[i](sigma)`, and party 0 is `Y`. Every party
    runs `la_ext` with the same independent `x`.

    Args:
        cfg: The alternating-extraction configuration.
        source_x: The distribution of `x`.
        seed_source: The distribution of the shared seed.
        correlated_q_family: One map per party from the seed to its `y`.
        j: How many rounds of the other parties are revealed, `0 <= j < t`.
        extractor_error: The measured error of the component extractors.
        constant: The constant in the bound `constant * t * error`.
        budget: The enumeration budget.

    Returns:
        The measured distance and its comparison with the bound.

    Raises:
        DomainError: If `j` is out of range or the family is empty.
        GuardError: If the enumeration exceeds `budget`.
    """
    if not 0 <= j < cfg.t:
        raise DomainError(f"The round {j} is not in [0, {cfg.t - 1}].")
    if not correlated_q_family:
        raise DomainError("The correlated family needs at least one map.")
    check_budget(
        "look-ahead enumeration",
        len(source_x.support) * len(seed_source.support) * len(correlated_q_family),
        budget,
    )
    joint: dict[tuple[object, ...], float] = defaultdict(float)
    for (sigma, p_sigma), (x, p_x) in itertools.product(
        seed_source.items(), source_x.items()
    ):
        ys = tuple(party(sigma) for party in correlated_q_family)
        outputs = [la_ext(cfg, x, y) for y in ys]
        revealed = tuple(output[:j] for output in outputs[1:])
        joint[(ys, revealed, outputs[0][j])] += p_sigma * p_x
    distance = _distance_to_uniform_last(joint, 2**cfg.ell)
    bound = constant * cfg.t * extractor_error
    return LookaheadReport(
        j=j, distance=distance, bound=bound, passed=distance <= bound + FLOAT_SLACK
    )


def _distance_to_uniform_last(
    joint: dict[tuple[object, ...], float], outcomes: int
) -> float:
    """Distance of a joint table from the same table with its last entry uniform."""
    conditioning: dict[tuple[object, ...], float] = defaultdict(float)
    seen: dict[tuple[object, ...], int] = defaultdict(int)
    for key, p in joint.items():
        conditioning[key[:-1]] += p
        seen[key[:-1]] += 1
    differences = [
        abs(p - conditioning[key[:-1]] / outcomes) for key, p in joint.items()
    ]
    # Outcomes that never occur contribute their full uniform share.
    missing = [
        (outcomes - seen[prefix]) * mass / outcomes
        for prefix, mass in conditioning.items()
    ]
    return math.fsum(differences + missing) / 2
