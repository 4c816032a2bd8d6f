import numpy as np
from pytest import mark, raises

from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError
from multisource_extractors.internals import is_power_of_two, make_rng
from multisource_extractors.lightest_bin import bin_count_from_params, lightest_bin


def rows(*texts: str) -> list[BitString]:
    return [BitString.from_str(text) for text in texts]


def test_lightest_bin_keeps_the_lone_player():
    outcome = lightest_bin(rows("00", "01", "00", "11"), 2)

    assert outcome.bin_counts == (3, 1)
    assert outcome.chosen_bin == 2
    assert outcome.survivors == (4,)


def test_empty_bins_are_never_chosen():
    outcome = lightest_bin(rows("00", "01", "10", "10"), 4)

    assert outcome.bin_counts == (1, 1, 2, 0)
    assert outcome.chosen_bin == 1
    assert outcome.survivors == (1,)


def test_ties_go_to_the_lowest_bin():
    outcome = lightest_bin(rows("1", "0", "1", "0"), 2)

    assert outcome.chosen_bin == 1
    assert outcome.survivors == (2, 4)


def test_one_bin_keeps_everyone():
    outcome = lightest_bin(rows("0", "1", "1"), 1)

    assert outcome.survivors == (1, 2, 3)
    assert outcome.bin_counts == (3,)


def test_survivor_count_is_the_lightest_count():
    players = [BitString(3, value % 5) for value in range(12)]

    outcome = lightest_bin(players, 8)

    assert len(outcome.survivors) == min(c for c in outcome.bin_counts if c > 0)
    assert sum(outcome.bin_counts) == len(players)


@mark.parametrize("r", [0, 3, 6])
def test_bin_count_must_be_a_power_of_two(r):
    with raises(DomainError):
        lightest_bin(rows("00", "01"), r)


def test_rows_must_be_long_enough():
    with raises(DomainError):
        lightest_bin(rows("0", "1"), 4)
    with raises(DomainError):
        lightest_bin([], 2)


# Bin counts ====


def test_raw_bin_count_is_rounded_up():
    """With h = 4 the count does not depend on N; 0.64 / 0.2 rounds to 4."""
    assert bin_count_from_params(16, 4, 0.8, bin_constant=0.05) == 4


def test_small_raw_count_gives_one_bin():
    assert bin_count_from_params(256, 16, 0.25) == 1


def test_bin_count_is_clamped_to_the_players():
    assert bin_count_from_params(6, 4, 0.8, bin_constant=0.001) == 4


def test_bin_counts_are_powers_of_two():
    for n in range(1, 200, 7):
        r = bin_count_from_params(n, 4, 0.5, bin_constant=0.01)
        assert is_power_of_two(r)
        assert 1 <= r <= n


@mark.parametrize("gamma", [0.0, 1.0])
def test_bin_count_rejects_gamma_out_of_range(gamma):
    with raises(DomainError):
        bin_count_from_params(16, 4, gamma)


# Agreement with a counting reference ====


def reference_lightest_bin(values: np.ndarray, row_len: int, r: int):
    """Bin by the leading bits with `numpy.bincount`."""
    width = r.bit_length() - 1
    choices = values >> (row_len - width)
    counts = np.bincount(choices, minlength=r)
    chosen = int(np.flatnonzero(counts == counts[counts > 0].min())[0])
    survivors = tuple(int(i) + 1 for i in np.flatnonzero(choices == chosen))
    return chosen + 1, survivors, tuple(int(count) for count in counts)


@mark.parametrize("r", [2, 4, 8, 16])
def test_lightest_bin_matches_the_reference(r):
    rng = make_rng(r)
    for _ in range(250):
        players = int(rng.integers(1, 65))
        row_len = int(rng.integers(4, 9))
        # Few distinct leading bits make empty bins and ties common.
        values = rng.integers(0, 2 ** int(rng.integers(1, row_len + 1)), players)
        values = values << (row_len - int(values.max()).bit_length())

        outcome = lightest_bin([BitString(row_len, int(v)) for v in values], r)

        assert (
            outcome.chosen_bin,
            outcome.survivors,
            outcome.bin_counts,
        ) == reference_lightest_bin(values, row_len, r)


@mark.parametrize("seed", range(20))
def test_full_bins_keep_at_most_their_share(seed):
    """When no bin is empty, the lightest one holds at most `N // r` players."""
    rng = make_rng(seed)
    r = 8
    players = [BitString(6, int(v)) for v in rng.integers(0, 64, 40)]
    players += [BitString(3, b) + BitString(3, 0) for b in range(r)]

    outcome = lightest_bin(players, r)

    assert all(count > 0 for count in outcome.bin_counts)
    assert len(outcome.survivors) <= len(players) // r
