from pytest import approx, raises

from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError, GuardError
from multisource_extractors.evaluation import (
    JointTable,
    conditional_analysis,
    distance_from_uniform,
    hwise_report,
    mc_distance_upper,
    min_entropy_loss_check,
    push_forward,
    statistical_distance,
    strong_distance,
)
from multisource_extractors.extractors import LookupExtractor, toeplitz_extractor
from multisource_extractors.internals import make_rng
from multisource_extractors.sources import point_mass, uniform_source


def bits(text: str) -> BitString:
    return BitString.from_str(text)


def xor(x: BitString, y: BitString) -> BitString:
    return x ^ y


# Exact distributions ====


def test_xor_of_uniform_bits_is_uniform():
    table = push_forward(xor, [uniform_source(1), point_mass(bits("1"))])

    assert table.var_lens == (1,)
    assert distance_from_uniform(table) == 0.0


def test_copies_are_half_a_unit_from_uniform():
    table = push_forward(lambda x: (x, x), [uniform_source(1)])

    assert table.var_lens == (1, 1)
    assert table.probability((1, 1)) == 0.5
    assert distance_from_uniform(table) == 0.5


def test_point_mass_distance():
    table = JointTable.from_source(point_mass(bits("01")))

    assert distance_from_uniform(table) == 0.75


def test_distance_of_a_very_wide_outcome():
    """Far more unseen outcomes than a float counts still sum to their mass."""
    table = JointTable((1100,), {(0,): 1.0})

    assert distance_from_uniform(table) == 1.0


def test_marginals_sum_out_coordinates():
    table = push_forward(
        lambda x, y: (x, y), [uniform_source(1), point_mass(bits("0"))]
    )

    assert table.marginal([1]).table == {(0,): 1.0}
    assert distance_from_uniform(table.marginal([0])) == 0.0


def test_outputs_must_keep_their_shape():
    with raises(DomainError):
        push_forward(lambda x: x if x.value else x + x, [uniform_source(1)])


def test_push_forward_is_guarded():
    with raises(GuardError):
        push_forward(xor, [uniform_source(4), uniform_source(4)], budget=100)


def test_tables_must_be_normalised():
    with raises(DomainError):
        JointTable((1,), {(0,): 0.5})


def test_statistical_distance():
    p = JointTable.from_source(point_mass(bits("0")))
    q = JointTable.from_source(uniform_source(1))

    assert statistical_distance(p, q) == 0.5
    assert statistical_distance(p, p) == 0.0
    with raises(DomainError):
        statistical_distance(p, JointTable.from_source(uniform_source(2)))


# Strong distances ====


def test_strong_distance_of_toeplitz_on_uniform():
    """Only the zero matrix is biased, on one seed in eight."""
    assert strong_distance(toeplitz_extractor(3, 1), uniform_source(3)) == 0.0625


def test_strong_distance_of_a_fixed_bit():
    ext = LookupExtractor.from_function(2, 1, 1, lambda x, s: x[0:1])

    assert strong_distance(ext, point_mass(bits("00"))) == 0.5


# Joint independence ====


def test_hwise_report_finds_the_copied_pair():
    table = push_forward(
        lambda x, y: (x, x, y), [uniform_source(1), uniform_source(1)]
    )

    report = hwise_report(table, 2)

    assert report.worst == 0.5
    assert report.per_subset == (((0, 1), 0.5), ((0, 2), 0.0), ((1, 2), 0.0))


def test_hwise_report_samples_subsets():
    table = push_forward(
        lambda x, y: (x, x, y), [uniform_source(1), uniform_source(1)]
    )

    report = hwise_report(table, 2, subsets=2, rng=make_rng(1))

    assert len(report.per_subset) == 2
    with raises(DomainError):
        hwise_report(table, 2, subsets=1)


def test_hwise_report_with_candidates():
    table = push_forward(
        lambda x, y: (x, x, y), [uniform_source(1), uniform_source(1)]
    )

    assert hwise_report(table, 2, candidates=[1, 2]).worst == 0.0
    assert hwise_report(table, 2, candidates=[2]).worst == 0.0


# Conditioning ====


def test_conditioning_on_the_output_source():
    """An output equal to `y` is fixed under every fixing of `y`."""
    report = conditional_analysis(
        lambda x, y: y,
        [uniform_source(1), uniform_source(2)],
        condition_on=1,
        inner_metric=distance_from_uniform,
        threshold=0.5,
    )

    assert len(report.entries) == 4
    assert all(entry.measured == 0.75 for entry in report.entries)
    assert report.passing_mass == 0.0
    assert report.expected == 0.75


def test_conditioning_keeps_uniform_outputs():
    report = conditional_analysis(
        xor,
        [uniform_source(2), uniform_source(2)],
        condition_on=1,
        inner_metric=distance_from_uniform,
        threshold=0.0,
    )

    assert report.passing_mass == 1.0
    assert report.expected == 0.0


# Monte Carlo ====


def test_mc_on_a_point_mass_is_exact():
    estimate = mc_distance_upper(
        lambda x: x, [point_mass(bits("10"))], 500, make_rng(3)
    )

    assert estimate.estimate == 0.75
    assert estimate.half_width == 0.0
    assert estimate.low == estimate.high == 0.75
    assert estimate.biased_up


def test_mc_interval_covers_the_exact_value():
    sources = [uniform_source(3), uniform_source(1)]
    exact = distance_from_uniform(push_forward(lambda x, y: x[0:2] + y, sources))

    estimate = mc_distance_upper(lambda x, y: x[0:2] + y, sources, 5000, make_rng(7))

    assert estimate.low <= estimate.estimate <= estimate.high
    assert estimate.estimate >= exact
    assert estimate.estimate == approx(exact, abs=0.05)


def test_mc_refuses_long_outputs():
    with raises(GuardError):
        mc_distance_upper(
            lambda x: BitString.zeros(21), [point_mass(bits("1"))], 10, make_rng(0)
        )


def test_mc_needs_samples():
    with raises(DomainError):
        mc_distance_upper(lambda x: x, [uniform_source(1)], 0, make_rng(0))


# Entropy loss ====


def test_fixing_one_bit_costs_one_bit():
    report = min_entropy_loss_check(uniform_source(3), lambda x: x[0:1], 1, 0.5)

    assert report.bound == 1.0
    assert [entry.entropy for entry in report.entries] == [2.0, 2.0]
    assert [entry.loss for entry in report.entries] == [1.0, 1.0]
    assert report.passed


def test_fixing_checks_its_length_and_eps():
    with raises(DomainError):
        min_entropy_loss_check(uniform_source(3), lambda x: x[0:2], 1, 0.5)
    with raises(DomainError):
        min_entropy_loss_check(uniform_source(3), lambda x: x[0:1], 1, 0.0)
