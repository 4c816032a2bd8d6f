import math
from collections import Counter

from pytest import mark, raises

from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError, UnsupportedModeError
from multisource_extractors.internals import make_rng
from multisource_extractors.sources import (
    BlockSource,
    DiscreteSource,
    FlatSource,
    adversarial_flat_battery,
    affine_source,
    all_flat_supports,
    block_violations,
    conditional_min_entropy,
    independent_blocks,
    low_weight_source,
    min_entropy,
    point_mass,
    prefix_fixed_source,
    random_flat_source,
    sample,
    sample_many,
    uniform_source,
)


def bits(text: str) -> BitString:
    return BitString.from_str(text)


# Exact sources ====


def test_min_entropy_of_uniform():
    assert min_entropy(uniform_source(3)) == 3.0


def test_min_entropy_of_flat_source():
    source = FlatSource.from_ints(8, [1, 7, 100, 255])

    assert min_entropy(source) == 2.0


def test_min_entropy_of_table():
    source = DiscreteSource.from_table(
        2, {bits("00"): 0.5, bits("01"): 0.25, bits("10"): 0.25}
    )

    assert min_entropy(source) == 1.0


def test_flat_min_entropy_is_log_of_support():
    rng = make_rng(3)
    for n in range(1, 7):
        for k in range(n + 1):
            assert min_entropy(random_flat_source(n, k, rng)) == k


def test_from_table_drops_zero_entries_and_sorts():
    source = DiscreteSource.from_table(
        2, {bits("11"): 0.5, bits("00"): 0.5, bits("01"): 0}
    )

    assert source.support == (bits("00"), bits("11"))
    assert source.probability(bits("01")) == 0.0


def test_rejects_unnormalised_tables():
    with raises(DomainError):
        DiscreteSource.from_table(1, {bits("0"): 0.5, bits("1"): 0.4})


def test_rejects_values_of_the_wrong_length():
    with raises(DomainError):
        DiscreteSource.from_table(2, {bits("0"): 1.0})


def test_sampler_sources_refuse_exact_operations():
    source = DiscreteSource.from_sampler(2, lambda rng: bits("01"))

    assert source.mode == "sampler"
    with raises(UnsupportedModeError):
        min_entropy(source)
    assert sample(source, make_rng(0)) == bits("01")


# Block sources ====


def test_independent_uniform_blocks_keep_full_entropy():
    source = independent_blocks([uniform_source(2), uniform_source(2)])

    for prefix in source.prefixes(1):
        assert conditional_min_entropy(source, 1, prefix) == 2.0
    assert block_violations(source) == []


def test_copied_block_has_no_conditional_entropy():
    copies = {bits(f"{y}{y}"): 0.25 for y in ("00", "01", "10", "11")}
    joint = DiscreteSource.from_table(4, copies)
    source = BlockSource(blocks=(2, 2), joint=joint, claimed_k=(2.0, 1.0))

    assert conditional_min_entropy(source, 1, bits("01")) == 0.0
    violations = block_violations(source)
    assert len(violations) == 4
    assert {violation.block for violation in violations} == {1}


def test_conditional_min_entropy_of_a_table():
    """The second bit is uniform after 0 and fixed after 1."""
    joint = DiscreteSource.from_table(
        2, {bits("00"): 0.25, bits("01"): 0.25, bits("10"): 0.5}
    )
    source = BlockSource(blocks=(1, 1), joint=joint, claimed_k=(1.0, 0.0))

    assert conditional_min_entropy(source, 1, bits("0")) == 1.0
    assert conditional_min_entropy(source, 1, bits("1")) == 0.0


def test_zero_probability_prefix_is_rejected():
    source = BlockSource(
        blocks=(1, 1), joint=point_mass(bits("00")), claimed_k=(0.0, 0.0)
    )

    with raises(DomainError):
        conditional_min_entropy(source, 1, bits("1"))


def test_blocks_must_tile_the_joint_source():
    with raises(DomainError):
        BlockSource(blocks=(1, 2), joint=uniform_source(2), claimed_k=(1.0, 1.0))


# Sampling ====


def test_point_mass_always_samples_its_value():
    rng = make_rng(11)
    source = point_mass(bits("1010"))

    assert all(sample(source, rng) == bits("1010") for _ in range(20))


def test_sampling_is_reproducible():
    source = FlatSource.of(2, [bits("01"), bits("10")])

    first = [sample(source, make_rng(42)) for _ in range(5)]
    second = [sample(source, make_rng(42)) for _ in range(5)]

    assert first == second


def test_sample_many_matches_uniform_frequencies():
    counts = Counter(sample_many(uniform_source(2), make_rng(5), 100_000).tolist())

    for value in range(4):
        assert abs(counts[value] / 100_000 - 0.25) <= 0.01


def test_values_wider_than_int64_are_refused():
    source = point_mass(BitString(64, 2**63))

    assert sample(source, make_rng(1)) == BitString(64, 2**63)
    with raises(DomainError, match="int64"):
        source.values_array()
    with raises(DomainError, match="int64"):
        sample_many(source, make_rng(1), 3)


# Batteries ====


def test_full_entropy_battery_is_the_full_support():
    battery = adversarial_flat_battery(4, 4, 1, make_rng(0))

    assert battery == [uniform_source(4)]


def test_battery_members_have_exact_entropy():
    battery = adversarial_flat_battery(8, 3, 10, make_rng(1))

    assert len(battery) == 10
    assert all(len(source.support) == 8 for source in battery)


def test_prefix_fixed_member():
    source = prefix_fixed_source(8, 4)

    assert source.support == tuple(BitString(8, value) for value in range(16))


def test_low_weight_source_takes_the_lightest_strings():
    source = low_weight_source(3, 2)

    assert [str(value) for value in source.support] == ["000", "001", "010", "100"]


def test_affine_source_is_closed_under_differences():
    source = affine_source(6, 3, make_rng(9))
    values = {value.value for value in source.support}
    offset = source.support[0].value

    shifted = {value ^ offset for value in values}
    assert all(a ^ b in shifted for a in shifted for b in shifted)
    assert len(values) == 8


@mark.parametrize("n, k", [(3, 4), (2, -1)])
def test_batteries_reject_impossible_entropy(n, k):
    with raises(DomainError):
        adversarial_flat_battery(n, k, 1, make_rng(0))


def test_all_flat_supports_counts():
    assert sum(1 for _ in all_flat_supports(4, 2)) == math.comb(16, 4)
